use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data;
use crate::rng::Rng64;
use crate::Error;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub difficulty: u8,
    pub prompt: String,
    pub choices: Vec<String>,
    pub answer_index: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QuestionBank {
    pub questions: Vec<Question>,
}

impl QuestionBank {
    pub fn parse(text: &str) -> Result<Self, Error> {
        let bank: QuestionBank = serde_json::from_str(text)?;
        for q in &bank.questions {
            if q.answer_index >= q.choices.len() {
                return Err(Error::Usage(format!("question {}: answer index out of range", q.id)));
            }
            if q.difficulty > super::TOP {
                return Err(Error::Usage(format!("question {}: difficulty above {}", q.id, super::TOP)));
            }
        }
        Ok(bank)
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn sample() -> Result<Self, Error> {
        Self::parse(&data::read_named("questions.json")?.0)
    }

    pub fn get(&self, id: &str) -> Option<&Question> {
        self.questions.iter().find(|q| q.id == id)
    }

    /// A uniformly chosen question at the given level, or the nearest level present.
    pub fn pick(&self, difficulty: u8, rng: &mut Rng64) -> Option<&Question> {
        let gap = |q: &Question| (q.difficulty as i32 - difficulty as i32).abs();
        let best = self.questions.iter().map(gap).min()?;
        let pool: Vec<&Question> = self.questions.iter().filter(|q| gap(q) == best).collect();
        Some(pool[rng.random_range(0..pool.len())])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_bank_covers_levels() {
        let b = QuestionBank::sample().unwrap();
        let mut rng = crate::rng::derive(0, 0, 0);
        for d in 0..3 {
            assert_eq!(b.pick(d, &mut rng).unwrap().difficulty, d);
        }
        assert!(QuestionBank::parse(r#"[{"id":"x","difficulty":0,"prompt":"?","choices":["a"],"answer_index":1}]"#).is_err());
    }
}
