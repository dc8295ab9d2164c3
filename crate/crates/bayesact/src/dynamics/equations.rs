use std::path::Path;

use nalgebra::{DMatrix, Matrix3, SMatrix, Vector3};
use serde::{Deserialize, Serialize};

use super::gterms::{GTermSpec, Term};
use crate::app::Turn;
use crate::sentiment::{self, Object, Sentiment, Triple};
use crate::Error;

pub type Mat93 = SMatrix<f64, 9, 3>;

/// Linear-in-behaviour refactoring of the transient prediction:
/// `M G(f', tau) = H f'_b + C`.
#[derive(Clone, Debug, PartialEq)]
pub struct HcFactors {
    pub h: Mat93,
    pub c: Sentiment,
}

impl HcFactors {
    pub fn h_block(&self, object: Object) -> Matrix3<f64> {
        self.h.fixed_rows::<3>(object.offset()).into_owned()
    }

    pub fn c_block(&self, object: Object) -> Vector3<f64> {
        self.c.fixed_rows::<3>(object.offset()).into_owned()
    }

    pub fn predict(&self, fb: &Triple) -> Sentiment {
        self.h * fb + self.c
    }
}

/// Impression-formation coefficients for the agent's turn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquationSet {
    /// 9 x terms.
    pub m: DMatrix<f64>,
    pub spec: GTermSpec,
    pub label: String,
}

const SAMPLE: &str = include_str!("../../data/sample_equations.txt");

impl EquationSet {
    pub fn new(m: DMatrix<f64>, spec: GTermSpec, label: impl Into<String>) -> Result<Self, Error> {
        if m.nrows() != 9 || m.ncols() != spec.len() {
            return Err(Error::Usage(format!(
                "coefficient matrix is {}x{}, expected 9x{}",
                m.nrows(),
                m.ncols(),
                spec.len()
            )));
        }
        if !sentiment::all_finite(m.as_slice()) {
            return Err(Error::Usage("non-finite coefficient".into()));
        }
        Ok(EquationSet { m, spec, label: label.into() })
    }

    /// The synthetic coefficient set shipped for tests and demos.
    pub fn sample() -> Self {
        Self::parse(SAMPLE, "sample").expect("bundled equations parse")
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    /// One row per term: nine coefficients (ae ap aa be bp ba ce cp ca) then a descriptor.
    pub fn parse(text: &str, source_name: &str) -> Result<Self, Error> {
        let mut cols: Vec<[f64; 9]> = Vec::new();
        let mut terms = Vec::new();
        let mut label = source_name.to_string();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if let Some(rest) = line.strip_prefix("# label:") {
                label = rest.trim().to_string();
                continue;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Parse { source_name: source_name.into(), line: lineno + 1, msg };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 10 {
                return Err(err(format!("expected 9 coefficients and a descriptor, got {} fields", fields.len())));
            }
            let mut col = [0.0; 9];
            for (k, v) in fields[..9].iter().enumerate() {
                col[k] = v.parse().map_err(|e| err(format!("bad coefficient `{v}`: {e}")))?;
            }
            terms.push(Term::parse(fields[9]).map_err(|e| err(e.to_string()))?);
            cols.push(col);
        }
        let spec = GTermSpec::new(terms).map_err(|e| Error::Parse {
            source_name: source_name.into(),
            line: 0,
            msg: e.to_string(),
        })?;
        let m = DMatrix::from_fn(9, cols.len(), |r, c| cols[c][r]);
        EquationSet::new(m, spec, label)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# label: {}\n", self.label);
        for (j, t) in self.spec.terms().iter().enumerate() {
            let coefs: Vec<String> = (0..9).map(|r| format!("{:8.4}", self.m[(r, j)])).collect();
            out.push_str(&format!("{}  {}\n", coefs.join(" "), t.code()));
        }
        out
    }

    /// M with actor and object row blocks swapped for the client's turn.
    pub fn m_for(&self, turn: Turn) -> DMatrix<f64> {
        match turn {
            Turn::Agent => self.m.clone(),
            Turn::Client => {
                let mut m = self.m.clone();
                for r in 0..3 {
                    m.swap_rows(r, r + 6);
                }
                m
            }
        }
    }

    /// Direct evaluation of M(x) G(f', tau, x).
    pub fn predict_direct(&self, f_prime: &Sentiment, tau: &Sentiment, turn: Turn) -> Sentiment {
        let g = self.spec.eval(f_prime, tau, turn);
        let out = self.m_for(turn) * g;
        Sentiment::from_column_slice(out.as_slice())
    }

    pub fn hc(&self, tau: &Sentiment, turn: Turn) -> HcFactors {
        let view = match turn {
            Turn::Agent => *tau,
            Turn::Client => sentiment::swap_ac(tau),
        };
        let mut h = Mat93::zeros();
        let mut c = Sentiment::zeros();
        for (j, term) in self.spec.terms().iter().enumerate() {
            let scale = term.transient_product(&view);
            let col = self.m.column(j);
            match term.behaviour_dim() {
                Some(k) => {
                    for r in 0..9 {
                        h[(r, k)] += col[r] * scale;
                    }
                }
                None => {
                    for r in 0..9 {
                        c[r] += col[r] * scale;
                    }
                }
            }
        }
        if turn == Turn::Client {
            for r in 0..3 {
                h.swap_rows(r, r + 6);
                c.swap_rows(r, r + 6);
            }
        }
        HcFactors { h, c }
    }

    /// Deterministic transient update tau' = H f'_b + C.
    pub fn transient_update(&self, tau: &Sentiment, f_prime: &Sentiment, turn: Turn) -> Sentiment {
        self.hc(tau, turn).predict(&sentiment::block(f_prime, Object::Behaviour))
    }
}
