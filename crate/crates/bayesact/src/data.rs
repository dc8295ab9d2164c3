//! Sentiment dictionaries and bundled data files.
//!
//! Files are read from `$BAYESACT_DATA/<name>` when the variable is set,
//! otherwise the copies compiled into the crate are used.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::sentiment::Triple;
use crate::Error;

pub const DATA_ENV: &str = "BAYESACT_DATA";

const DICTIONARY: &str = include_str!("../data/dictionary.csv");
const TUTOR_STATEMENTS: &str = include_str!("../data/tutor_statements.csv");
const QUESTIONS: &str = include_str!("../data/questions.json");
const HANDWASH_PLAN: &str = include_str!("../data/handwash_plan.json");

fn embedded(name: &str) -> Option<&'static str> {
    match name {
        "dictionary.csv" => Some(DICTIONARY),
        "tutor_statements.csv" => Some(TUTOR_STATEMENTS),
        "questions.json" => Some(QUESTIONS),
        "handwash_plan.json" => Some(HANDWASH_PLAN),
        _ => None,
    }
}

pub fn data_dir() -> Option<PathBuf> {
    std::env::var_os(DATA_ENV).map(PathBuf::from)
}

/// Text of a named data file, preferring the override directory.
pub fn read_named(name: &str) -> Result<(String, String), Error> {
    if let Some(dir) = data_dir() {
        let p = dir.join(name);
        if p.exists() {
            return Ok((std::fs::read_to_string(&p)?, p.display().to_string()));
        }
    }
    embedded(name)
        .map(|s| (s.to_string(), format!("<bundled {name}>")))
        .ok_or_else(|| Error::Usage(format!("no data file `{name}`")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub label: String,
    pub epa: Triple,
    pub kind: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Dictionary {
    pub entries: Vec<Entry>,
}

#[derive(Deserialize)]
struct Row {
    label: String,
    #[serde(rename = "E")]
    e: f64,
    #[serde(rename = "P")]
    p: f64,
    #[serde(rename = "A")]
    a: f64,
    #[serde(rename = "type", default)]
    kind: Option<String>,
}

impl Dictionary {
    /// CSV `label,E,P,A[,type]` with a header row.
    pub fn parse(text: &str, source_name: &str) -> Result<Self, Error> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut entries = Vec::new();
        for (i, row) in rdr.deserialize::<Row>().enumerate() {
            let row = row.map_err(|e| Error::Parse { source_name: source_name.into(), line: i + 2, msg: e.to_string() })?;
            let epa = Triple::new(row.e, row.p, row.a);
            if !epa.iter().all(|v| v.is_finite()) {
                return Err(Error::Parse { source_name: source_name.into(), line: i + 2, msg: "non-finite EPA".into() });
            }
            entries.push(Entry { label: row.label, epa, kind: row.kind.filter(|k| !k.is_empty()) });
        }
        Ok(Dictionary { entries })
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        Self::parse(&std::fs::read_to_string(path)?, &path.display().to_string())
    }

    /// The bundled sample (or its override).
    pub fn sample() -> Result<Self, Error> {
        let (text, src) = read_named("dictionary.csv")?;
        Self::parse(&text, &src)
    }

    pub fn get(&self, label: &str) -> Option<Triple> {
        self.entries.iter().find(|e| e.label.eq_ignore_ascii_case(label)).map(|e| e.epa)
    }

    /// Entries of a given kind; entries without a kind count as identities.
    pub fn of_kind(&self, kind: &str) -> Vec<&Entry> {
        self.entries
            .iter()
            .filter(|e| e.kind.as_deref().unwrap_or("identity") == kind)
            .collect()
    }

    pub fn identities(&self) -> Vec<&Entry> {
        self.of_kind("identity")
    }

    /// Per-dimension mean and standard deviation of the identities.
    pub fn identity_gaussian(&self) -> Result<(Triple, Triple), Error> {
        let ids = self.identities();
        if ids.len() < 2 {
            return Err(Error::Usage("need at least two identities to fit a distribution".into()));
        }
        let n = ids.len() as f64;
        let mean = ids.iter().fold(Triple::zeros(), |acc, e| acc + e.epa) / n;
        let var = ids
            .iter()
            .fold(Triple::zeros(), |acc, e| acc + (e.epa - mean).component_mul(&(e.epa - mean)))
            / n;
        Ok((mean, var.map(f64::sqrt)))
    }

    /// Closest entry of `kind` in Euclidean EPA distance.
    pub fn nearest(&self, kind: &str, epa: &Triple) -> Option<&Entry> {
        self.of_kind(kind).into_iter().min_by(|x, y| (x.epa - epa).norm_squared().total_cmp(&(y.epa - epa).norm_squared()))
    }

    /// Look up a label, or parse `e,p,a`.
    pub fn resolve(&self, spec: &str) -> Result<Triple, Error> {
        self.get(spec)
            .map(Ok)
            .unwrap_or_else(|| crate::sentiment::parse_triple(spec))
            .map_err(|_| Error::Usage(format!("`{spec}` is neither a dictionary label nor e,p,a")))
    }
}
