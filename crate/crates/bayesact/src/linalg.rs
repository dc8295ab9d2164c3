//! Small dense solves with a conditioning guard.

use nalgebra::{DMatrix, DVector, SMatrix, SVector};

use crate::Error;

pub const MAX_CONDITION: f64 = 1e12;

/// 2-norm condition number from singular values.
pub fn condition<const N: usize>(m: &SMatrix<f64, N, N>) -> f64 {
    let sv = DMatrix::from_column_slice(N, N, m.as_slice()).singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solve `m x = rhs`, refusing systems whose condition number exceeds 1e12.
pub fn guarded_solve<const N: usize>(
    m: &SMatrix<f64, N, N>,
    rhs: &SVector<f64, N>,
) -> Result<SVector<f64, N>, Error> {
    let cond = condition(m);
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(Error::Singular { cond });
    }
    DMatrix::from_column_slice(N, N, m.as_slice())
        .lu()
        .solve(&DVector::from_column_slice(rhs.as_slice()))
        .map(|x| SVector::from_column_slice(x.as_slice()))
        .ok_or(Error::Singular { cond: f64::INFINITY })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix3, Vector3};

    #[test]
    fn rejects_singular() {
        let m = Matrix3::new(1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 0.0, 1.0);
        assert!(matches!(guarded_solve(&m, &Vector3::zeros()), Err(Error::Singular { .. })));
        let x = guarded_solve(&Matrix3::identity(), &Vector3::new(1.0, 2.0, 3.0)).unwrap();
        assert_eq!(x, Vector3::new(1.0, 2.0, 3.0));
    }
}
