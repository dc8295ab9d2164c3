//! EPA sentiment primitives.
//!
//! A 9-D sentiment vector stacks actor, behaviour and object triples. Element
//! `3 * object + dimension` holds e.g. the behaviour potency at index 4.

use nalgebra::{SMatrix, SVector, Vector3};
use std::fmt;
use std::str::FromStr;

use crate::Error;

/// An evaluation/potency/activity point.
pub type Triple = Vector3<f64>;
/// Fundamentals or transients for actor, behaviour and object.
pub type Sentiment = SVector<f64, 9>;
pub type Mat9 = SMatrix<f64, 9, 9>;

/// Conventional EPA range. Dynamics may leave it; we only warn.
pub const EPA_LIMIT: f64 = 4.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Object {
    Actor,
    Behaviour,
    Client,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dim {
    E,
    P,
    A,
}

impl Object {
    pub const ALL: [Object; 3] = [Object::Actor, Object::Behaviour, Object::Client];

    pub fn offset(self) -> usize {
        match self {
            Object::Actor => 0,
            Object::Behaviour => 3,
            Object::Client => 6,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Object::Actor => 'a',
            Object::Behaviour => 'b',
            Object::Client => 'c',
        }
    }
}

impl Dim {
    pub const ALL: [Dim; 3] = [Dim::E, Dim::P, Dim::A];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn symbol(self) -> char {
        match self {
            Dim::E => 'e',
            Dim::P => 'p',
            Dim::A => 'a',
        }
    }
}

impl FromStr for Object {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "a" => Ok(Object::Actor),
            "b" => Ok(Object::Behaviour),
            "c" | "o" => Ok(Object::Client),
            _ => Err(Error::Usage(format!("unknown interaction object `{s}`"))),
        }
    }
}

impl FromStr for Dim {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "e" => Ok(Dim::E),
            "p" => Ok(Dim::P),
            "a" => Ok(Dim::A),
            _ => Err(Error::Usage(format!("unknown EPA dimension `{s}`"))),
        }
    }
}

pub fn flat_index(object: Object, dim: Dim) -> usize {
    object.offset() + dim.index()
}

pub fn unflatten(k: usize) -> Option<(Object, Dim)> {
    if k >= 9 {
        return None;
    }
    Some((Object::ALL[k / 3], Dim::ALL[k % 3]))
}

/// Parse a two-letter code such as `bp` into a flat index.
pub fn parse_index(code: &str) -> Result<usize, Error> {
    let mut it = code.chars();
    let (Some(o), Some(d), None) = (it.next(), it.next(), it.next()) else {
        return Err(Error::Usage(format!("expected two symbols, got `{code}`")));
    };
    Ok(flat_index(o.to_string().parse()?, d.to_string().parse()?))
}

pub fn block(v: &Sentiment, object: Object) -> Triple {
    v.fixed_rows::<3>(object.offset()).into_owned()
}

pub fn set_block(v: &mut Sentiment, object: Object, t: &Triple) {
    v.fixed_rows_mut::<3>(object.offset()).copy_from(t);
}

pub fn stack(a: &Triple, b: &Triple, c: &Triple) -> Sentiment {
    Sentiment::from_iterator(a.iter().chain(b.iter()).chain(c.iter()).copied())
}

/// Swap actor and object blocks; used to view a client turn from the agent's side.
pub fn swap_ac(v: &Sentiment) -> Sentiment {
    stack(&block(v, Object::Client), &block(v, Object::Behaviour), &block(v, Object::Actor))
}

/// `<w, z>`: identities from `w`, behaviour from `z`.
pub fn combine(w: &Sentiment, z: &Sentiment) -> Sentiment {
    let mut out = *w;
    out.fixed_rows_mut::<3>(3).copy_from(&z.fixed_rows::<3>(3));
    out
}

pub fn with_behaviour(w: &Sentiment, b: &Triple) -> Sentiment {
    let mut out = *w;
    set_block(&mut out, Object::Behaviour, b);
    out
}

/// Weights of the deflection sum, or equivalently the inverse diagonal of the
/// potential's covariance.
#[derive(Clone, Debug, PartialEq)]
pub enum DeflectionWeights {
    Diagonal([f64; 9]),
    /// Full covariance Sigma; deflection is (f-t)^T Sigma^-1 (f-t).
    Covariance(Box<Mat9>),
}

impl Default for DeflectionWeights {
    fn default() -> Self {
        DeflectionWeights::Diagonal([1.0; 9])
    }
}

impl DeflectionWeights {
    pub fn uniform(w: f64) -> Self {
        DeflectionWeights::Diagonal([w; 9])
    }

    /// The precision matrix Sigma^-1 this weighting corresponds to.
    pub fn precision(&self) -> Result<Mat9, Error> {
        match self {
            DeflectionWeights::Diagonal(w) => Ok(Mat9::from_diagonal(&Sentiment::from_row_slice(w))),
            DeflectionWeights::Covariance(s) => s
                .cholesky()
                .map(|c| c.inverse())
                .ok_or_else(|| Error::Numerical("deflection covariance is not positive definite".into())),
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        match self {
            DeflectionWeights::Diagonal(w) if w.iter().all(|x| x.is_finite() && *x >= 0.0) => Ok(()),
            DeflectionWeights::Diagonal(_) => Err(Error::Usage("deflection weights must be finite and >= 0".into())),
            DeflectionWeights::Covariance(s) => {
                if (**s - s.transpose()).amax() > 1e-12 {
                    return Err(Error::Usage("deflection covariance must be symmetric".into()));
                }
                self.precision().map(|_| ())
            }
        }
    }
}

/// Weighted squared distance between fundamentals and transients.
pub fn deflection(f: &Sentiment, tau: &Sentiment, w: &DeflectionWeights) -> f64 {
    let d = f - tau;
    match w {
        DeflectionWeights::Diagonal(w) => d.iter().zip(w).map(|(x, wi)| wi * x * x).sum(),
        DeflectionWeights::Covariance(s) => match s.cholesky() {
            Some(c) => d.dot(&c.solve(&d)),
            None => f64::NAN,
        },
    }
}

/// Plain unit-weight deflection.
pub fn sq_dist(f: &Sentiment, tau: &Sentiment) -> f64 {
    (f - tau).norm_squared()
}

/// Components outside the conventional EPA range, for validation warnings.
pub fn out_of_range(v: &[f64]) -> Vec<usize> {
    v.iter()
        .enumerate()
        .filter(|(_, x)| x.abs() > EPA_LIMIT)
        .map(|(i, _)| i)
        .collect()
}

pub fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Formats a triple as `[e, p, a]` with two decimals.
pub struct Epa<'a>(pub &'a Triple);

impl fmt::Display for Epa<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.2}, {:.2}, {:.2}]", self.0[0], self.0[1], self.0[2])
    }
}

/// Parses `e,p,a`.
pub fn parse_triple(s: &str) -> Result<Triple, Error> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Error::Usage(format!("bad EPA triple `{s}`: {e}")))?;
    if parts.len() != 3 {
        return Err(Error::Usage(format!("EPA triple needs three values, got `{s}`")));
    }
    Ok(Triple::new(parts[0], parts[1], parts[2]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combine_takes_behaviour_from_second() {
        let w = Sentiment::from_row_slice(&[1., 2., 3., 4., 5., 6., 7., 8., 9.]);
        let z = Sentiment::from_row_slice(&[0., 0., 0., -1., -2., -3., 0., 0., 0.]);
        let got = combine(&w, &z);
        assert_eq!(got.as_slice(), &[1., 2., 3., -1., -2., -3., 7., 8., 9.]);
        assert_eq!(combine(&w, &w), w);
        assert_eq!(combine(&Sentiment::zeros(), &Sentiment::zeros()), Sentiment::zeros());
    }

    #[test]
    fn deflection_examples() {
        let f = Sentiment::from_element(1.0);
        let w = DeflectionWeights::default();
        assert_eq!(deflection(&f, &f, &w), 0.0);
        assert_eq!(deflection(&f, &Sentiment::zeros(), &w), 9.0);
        let mut d = Sentiment::zeros();
        d[0] = 1.0;
        let mut wd = [1.0; 9];
        wd[0] = 2.0;
        assert_eq!(deflection(&d, &Sentiment::zeros(), &DeflectionWeights::Diagonal(wd)), 2.0);
    }

    #[test]
    fn flat_index_examples() {
        assert_eq!(flat_index(Object::Behaviour, Dim::P), 4);
        assert_eq!(flat_index(Object::Actor, Dim::E), 0);
        assert_eq!(flat_index(Object::Client, Dim::A), 8);
        assert_eq!(parse_index("bp").unwrap(), 4);
        assert!(parse_index("xp").is_err());
        assert!(parse_index("bq").is_err());
    }

    #[test]
    fn flat_index_round_trips() {
        for k in 0..9 {
            let (o, d) = unflatten(k).unwrap();
            assert_eq!(flat_index(o, d), k);
        }
        assert!(unflatten(9).is_none());
    }

    #[test]
    fn swap_is_involution() {
        let v = Sentiment::from_fn(|i, _| i as f64);
        assert_eq!(swap_ac(&swap_ac(&v)), v);
        assert_eq!(block(&swap_ac(&v), Object::Actor), block(&v, Object::Client));
    }
}
