use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data;
use crate::sentiment::Triple;
use crate::Error;

/// Who speaks, and whether the last answer was right.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Context {
    AgentCorrect,
    AgentIncorrect,
    ClientCorrect,
    ClientIncorrect,
}

impl Context {
    pub fn agent(correct: bool) -> Self {
        if correct {
            Context::AgentCorrect
        } else {
            Context::AgentIncorrect
        }
    }

    pub fn client(correct: bool) -> Self {
        if correct {
            Context::ClientCorrect
        } else {
            Context::ClientIncorrect
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Context::AgentCorrect => "agent_correct",
            Context::AgentIncorrect => "agent_incorrect",
            Context::ClientCorrect => "client_correct",
            Context::ClientIncorrect => "client_incorrect",
        }
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Context {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "agent_correct" => Ok(Context::AgentCorrect),
            "agent_incorrect" => Ok(Context::AgentIncorrect),
            "client_correct" => Ok(Context::ClientCorrect),
            "client_incorrect" => Ok(Context::ClientIncorrect),
            _ => Err(Error::Usage(format!("unknown statement context `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Statement {
    /// Row index in the table.
    pub id: usize,
    pub context: Context,
    pub text: String,
    pub label: String,
    pub epa: Triple,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StatementTable {
    pub entries: Vec<Statement>,
}

#[derive(Deserialize)]
struct Row {
    context: String,
    text: String,
    label: String,
    #[serde(rename = "E")]
    e: f64,
    #[serde(rename = "P")]
    p: f64,
    #[serde(rename = "A")]
    a: f64,
}

impl StatementTable {
    /// CSV `context,text,label,E,P,A` with a header row.
    pub fn parse(text: &str, source_name: &str) -> Result<Self, Error> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let mut entries = Vec::new();
        for (i, row) in rdr.deserialize::<Row>().enumerate() {
            let err = |msg: String| Error::Parse { source_name: source_name.into(), line: i + 2, msg };
            let row = row.map_err(|e| err(e.to_string()))?;
            let context = row.context.parse().map_err(|e: Error| err(e.to_string()))?;
            entries.push(Statement {
                id: i,
                context,
                text: row.text,
                label: row.label,
                epa: Triple::new(row.e, row.p, row.a),
            });
        }
        Ok(StatementTable { entries })
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        Self::parse(&std::fs::read_to_string(path)?, &path.display().to_string())
    }

    pub fn sample() -> Result<Self, Error> {
        let (text, src) = data::read_named("tutor_statements.csv")?;
        Self::parse(&text, &src)
    }

    pub fn get(&self, id: usize) -> Option<&Statement> {
        self.entries.get(id)
    }

    pub fn in_context(&self, context: Context) -> impl Iterator<Item = &Statement> {
        self.entries.iter().filter(move |s| s.context == context)
    }

    pub fn find_text(&self, text: &str) -> Option<&Statement> {
        self.entries.iter().find(|s| s.text == text)
    }

    /// Closest statement in Euclidean EPA distance; ties go to the earlier row.
    pub fn nearest(&self, epa: &Triple, context: Context) -> Option<&Statement> {
        let mut best: Option<(&Statement, f64)> = None;
        for s in self.in_context(context) {
            let d = (s.epa - epa).norm_squared();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((s, d));
            }
        }
        best.map(|(s, _)| s)
    }
}
