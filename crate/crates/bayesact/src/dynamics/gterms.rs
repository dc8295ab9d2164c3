use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::app::Turn;
use crate::sentiment::{self, unflatten, Object, Sentiment};
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    /// Previous transient impression.
    Transient,
    /// Post-event fundamental; only its behaviour block may appear.
    Fundamental,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    pub source: Source,
    pub index: usize,
}

/// A product of factors. The empty product is the constant term.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub factors: Vec<Factor>,
}

impl Term {
    pub fn constant() -> Self {
        Term { factors: vec![] }
    }

    /// Parse an equation-file code like `1`, `Tae` or `TaeTcpFbp`.
    pub fn parse(code: &str) -> Result<Self, Error> {
        if code == "1" {
            return Ok(Term::constant());
        }
        let chars: Vec<char> = code.chars().collect();
        if chars.is_empty() || !chars.len().is_multiple_of(3) {
            return Err(Error::Usage(format!("malformed term descriptor `{code}`")));
        }
        let mut factors = Vec::new();
        for c in chars.chunks(3) {
            let source = match c[0] {
                'T' | 't' | 'Z' => Source::Transient,
                'F' | 'f' => Source::Fundamental,
                other => return Err(Error::Usage(format!("unknown factor source `{other}` in `{code}`"))),
            };
            let index = sentiment::parse_index(&c[1..].iter().collect::<String>())?;
            factors.push(Factor { source, index });
        }
        Ok(Term { factors })
    }

    pub fn code(&self) -> String {
        if self.factors.is_empty() {
            return "1".into();
        }
        self.factors
            .iter()
            .map(|f| {
                let (o, d) = unflatten(f.index).expect("validated index");
                let s = match f.source {
                    Source::Transient => 'T',
                    Source::Fundamental => 'F',
                };
                format!("{s}{}{}", o.symbol(), d.symbol())
            })
            .collect()
    }

    /// The single f'_b factor's EPA dimension, if the term has one.
    pub fn behaviour_dim(&self) -> Option<usize> {
        self.factors
            .iter()
            .find(|f| f.source == Source::Fundamental)
            .map(|f| f.index - 3)
    }

    /// Product of the transient factors only.
    pub fn transient_product(&self, tau: &Sentiment) -> f64 {
        self.factors
            .iter()
            .filter(|f| f.source == Source::Transient)
            .map(|f| tau[f.index])
            .product()
    }

    pub fn eval(&self, f_prime: &Sentiment, tau: &Sentiment) -> f64 {
        self.factors
            .iter()
            .map(|f| match f.source {
                Source::Transient => tau[f.index],
                Source::Fundamental => f_prime[f.index],
            })
            .product()
    }
}

/// Ordered feature list G, written for the agent's turn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GTermSpec {
    terms: Vec<Term>,
}

const STANDARD: [&str; 29] = [
    "1", "Tae", "Tap", "Taa", "Fbe", "Fbp", "Fba", "Tce", "Tcp", "Tca", "TaeFbe", "TaeFbp", "TaeTce",
    "TaeTcp", "TapFbe", "TapFbp", "TapTcp", "TapTca", "TaaFba", "TceFbe", "TcpFbe", "TceFbp",
    "TcpFbp", "TcaFbp", "TcpFba", "TaeTceFbe", "TaeTcpFbp", "TapTcpFbp", "TapTcaFbp",
];

impl GTermSpec {
    /// Validates that every f' factor refers to the behaviour block and that no
    /// term is more than linear in f'_b.
    pub fn new(terms: Vec<Term>) -> Result<Self, Error> {
        if terms.is_empty() {
            return Err(Error::Usage("empty term list".into()));
        }
        for t in &terms {
            let fundamentals: Vec<_> = t.factors.iter().filter(|f| f.source == Source::Fundamental).collect();
            if fundamentals.iter().any(|f| !(3..6).contains(&f.index)) {
                return Err(Error::Usage(format!(
                    "term `{}` uses a fundamental outside the behaviour block",
                    t.code()
                )));
            }
            if fundamentals.len() > 1 {
                return Err(Error::Usage(format!("term `{}` is not linear in f'_b", t.code())));
            }
            if t.factors.iter().any(|f| f.index >= 9) {
                return Err(Error::Usage("factor index out of range".into()));
            }
        }
        Ok(GTermSpec { terms })
    }

    /// The 29-term impression-formation feature vector.
    pub fn standard() -> Self {
        Self::from_codes(&STANDARD).expect("standard terms are valid")
    }

    pub fn from_codes(codes: &[&str]) -> Result<Self, Error> {
        Self::new(codes.iter().map(|c| Term::parse(c)).collect::<Result<_, _>>()?)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Evaluate G. On the client's turn the actor and object transients trade places.
    pub fn eval(&self, f_prime: &Sentiment, tau: &Sentiment, turn: Turn) -> DVector<f64> {
        let tau = match turn {
            Turn::Agent => *tau,
            Turn::Client => sentiment::swap_ac(tau),
        };
        DVector::from_iterator(self.terms.len(), self.terms.iter().map(|t| t.eval(f_prime, &tau)))
    }

    /// Whether any term reads the given transient block.
    pub fn reads_transient(&self, object: Object) -> bool {
        let r = object.offset()..object.offset() + 3;
        self.terms
            .iter()
            .flat_map(|t| &t.factors)
            .any(|f| f.source == Source::Transient && r.contains(&f.index))
    }
}
