//! Impression formation: the G feature vector, the coefficient matrix M, the
//! H/C refactoring, and the deterministic Interact-style oracle.

mod equations;
mod gterms;

pub use equations::{EquationSet, HcFactors, Mat93};
pub use gterms::{Factor, GTermSpec, Source, Term};

use nalgebra::{Matrix3, SMatrix};
use serde::Serialize;

use crate::app::Turn;
use crate::linalg::guarded_solve;
use crate::sentiment::{self, DeflectionWeights, Mat9, Object, Sentiment, Triple};
use crate::Error;

/// `K = [[I, -H_a, 0], [0, I - H_b, 0], [0, -H_c, I]]`, so that
/// `f' - tau' = K f' - C`.
pub fn build_k(h: &Mat93) -> Mat9 {
    let mut k = Mat9::identity();
    for r in 0..9 {
        for c in 0..3 {
            k[(r, 3 + c)] -= h[(r, c)];
        }
    }
    k
}

/// Deflection potential psi = 1/2 (f' - tau')^T W (f' - tau'), evaluated by
/// running the transient equations directly.
pub fn psi(f_prime: &Sentiment, tau: &Sentiment, turn: Turn, eq: &EquationSet, w: &DeflectionWeights) -> f64 {
    let next = eq.predict_direct(f_prime, tau, turn);
    0.5 * sentiment::deflection(f_prime, &next, w)
}

/// Minimise (K f' - C)^T W (K f' - C) over one 3-block of f' with the rest fixed.
fn block_least_squares(
    f: &Sentiment,
    hc: &HcFactors,
    w: &DeflectionWeights,
    object: Object,
) -> Result<Triple, Error> {
    let k = build_k(&hc.h);
    let p = w.precision()?;
    let kx: SMatrix<f64, 9, 3> = k.fixed_columns::<3>(object.offset()).into_owned();
    let mut fixed = *f;
    sentiment::set_block(&mut fixed, object, &Triple::zeros());
    let rest = k * fixed - hc.c;
    let normal: Matrix3<f64> = kx.transpose() * p * kx;
    let rhs = -(kx.transpose() * p * rest);
    guarded_solve(&normal, &rhs)
}

/// Deflection-minimising behaviour with identities held at `f`.
///
/// With unit weights the normal matrix is
/// `H_a^T H_a + (I - H_b)^T (I - H_b) + H_c^T H_c`.
pub fn optimal_behaviour(
    f: &Sentiment,
    tau: &Sentiment,
    turn: Turn,
    eq: &EquationSet,
    w: &DeflectionWeights,
) -> Result<Triple, Error> {
    block_least_squares(f, &eq.hc(tau, turn), w, Object::Behaviour)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Role {
    Actor,
    Object,
}

impl Role {
    pub fn block(self) -> Object {
        match self {
            Role::Actor => Object::Actor,
            Role::Object => Object::Client,
        }
    }
}

/// Deflection-minimising identity for one role, with the behaviour in `f` fixed.
pub fn optimal_identity(
    role: Role,
    f: &Sentiment,
    tau: &Sentiment,
    turn: Turn,
    eq: &EquationSet,
    w: &DeflectionWeights,
) -> Result<Triple, Error> {
    block_least_squares(f, &eq.hc(tau, turn), w, role.block())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InteractStep {
    pub behaviour: Triple,
    pub tau: Sentiment,
    pub deflection: f64,
}

/// One classic affect-control step: act optimally, update transients, report deflection.
pub fn interact_step(
    f: &Sentiment,
    tau: &Sentiment,
    turn: Turn,
    eq: &EquationSet,
    w: &DeflectionWeights,
) -> Result<InteractStep, Error> {
    let behaviour = optimal_behaviour(f, tau, turn, eq, w)?;
    let f_prime = sentiment::with_behaviour(f, &behaviour);
    let next = eq.transient_update(tau, &f_prime, turn);
    Ok(InteractStep {
        behaviour,
        tau: next,
        deflection: sentiment::deflection(&f_prime, &next, w),
    })
}

/// Alternating oracle trajectory starting from `tau = f`, agent first.
pub fn interact_trace(
    f: &Sentiment,
    steps: usize,
    eq: &EquationSet,
    w: &DeflectionWeights,
) -> Result<Vec<InteractStep>, Error> {
    let mut tau = sentiment::with_behaviour(f, &Triple::zeros());
    let mut out = Vec::with_capacity(steps);
    for t in 0..steps {
        let turn = if t % 2 == 0 { Turn::Agent } else { Turn::Client };
        let s = interact_step(f, &tau, turn, eq, w).map_err(|e| Error::AtStep { step: t, source: Box::new(e) })?;
        tau = s.tau;
        out.push(s);
    }
    Ok(out)
}
