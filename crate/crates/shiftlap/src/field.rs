//! Nodal coefficient vectors and the handful of dense vector kernels the
//! solvers need.
//!
//! Reductions are chunked with a fixed block size and combined in block
//! order, so dot products and norms are bitwise reproducible regardless of
//! the rayon thread count.

use crate::error::{Error, Result};
use crate::grid::GridLevel;
use crate::scalar::{abs_sq, Cx, Real};
use num_traits::Zero;
use rayon::prelude::*;

/// Complex nodal vector attached to a grid level.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldVector<T: Real> {
    pub level_index: u32,
    values: Vec<Cx<T>>,
}

impl<T: Real> FieldVector<T> {
    pub fn zeros(level: &GridLevel<T>) -> Self {
        FieldVector {
            level_index: level.level_index,
            values: vec![Cx::zero(); level.dof_count()],
        }
    }

    /// Wrap raw values, checking the length against the level's dof count.
    pub fn from_values(level: &GridLevel<T>, values: Vec<Cx<T>>) -> Result<Self> {
        if values.len() != level.dof_count() {
            return Err(Error::DimensionMismatch {
                expected: level.dof_count(),
                got: values.len(),
            });
        }
        Ok(FieldVector {
            level_index: level.level_index,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[Cx<T>] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [Cx<T>] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Cx<T>> {
        self.values
    }

    pub fn norm(&self) -> T {
        norm(&self.values)
    }
}

const CHUNK: usize = 4096;

fn dot_seq<T: Real>(a: &[Cx<T>], b: &[Cx<T>]) -> Cx<T> {
    let mut s = Cx::zero();
    for (x, y) in a.iter().zip(b) {
        s += x.conj() * *y;
    }
    s
}

fn norm_sq_seq<T: Real>(a: &[Cx<T>]) -> T {
    let mut s = T::zero();
    for x in a {
        s += abs_sq(*x);
    }
    s
}

/// Inner product, conjugate-linear in the first argument.
pub fn dot<T: Real>(a: &[Cx<T>], b: &[Cx<T>]) -> Cx<T> {
    assert_eq!(a.len(), b.len());
    let partials: Vec<Cx<T>> = if a.len() > 4 * CHUNK && rayon::current_num_threads() > 1 {
        a.par_chunks(CHUNK)
            .zip(b.par_chunks(CHUNK))
            .map(|(ca, cb)| dot_seq(ca, cb))
            .collect()
    } else {
        a.chunks(CHUNK)
            .zip(b.chunks(CHUNK))
            .map(|(ca, cb)| dot_seq(ca, cb))
            .collect()
    };
    let mut s = Cx::zero();
    for p in partials {
        s += p;
    }
    s
}

/// Euclidean norm.
pub fn norm<T: Real>(a: &[Cx<T>]) -> T {
    let partials: Vec<T> = if a.len() > 4 * CHUNK && rayon::current_num_threads() > 1 {
        a.par_chunks(CHUNK).map(norm_sq_seq).collect()
    } else {
        a.chunks(CHUNK).map(norm_sq_seq).collect()
    };
    let mut s = T::zero();
    for p in partials {
        s += p;
    }
    s.sqrt()
}

/// y += alpha * x
pub fn axpy<T: Real>(alpha: Cx<T>, x: &[Cx<T>], y: &mut [Cx<T>]) {
    assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;

    #[test]
    fn dot_is_conjugate_linear_in_first_argument() {
        let a = vec![cx(1.0f64, 2.0), cx(0.0, -1.0)];
        let b = vec![cx(3.0f64, 0.0), cx(1.0, 1.0)];
        let d = dot(&a, &b);
        // conj(1+2i)*3 + conj(-i)*(1+i) = (3-6i) + i(1+i) = (3-6i) + (i-1) = 2 - 5i
        assert!((d.re - 2.0).abs() < 1e-15);
        assert!((d.im + 5.0).abs() < 1e-15);
    }

    #[test]
    fn chunked_reduction_matches_sequential() {
        let n = 20_000;
        let a: Vec<Cx<f64>> = (0..n)
            .map(|i| cx((i % 7) as f64 * 0.25, (i % 3) as f64 - 1.0))
            .collect();
        let d1 = dot(&a, &a);
        let d2 = dot_seq(&a, &a);
        assert!((d1.re - d2.re).abs() / d2.re < 1e-12);
        assert!((norm(&a) - norm_sq_seq(&a).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn dot_is_deterministic_across_repeated_calls() {
        let n = 50_000;
        let a: Vec<Cx<f64>> = (0..n)
            .map(|i| cx((i as f64).sin(), (i as f64 * 0.7).cos()))
            .collect();
        let d1 = dot(&a, &a);
        let d2 = dot(&a, &a);
        assert_eq!(d1, d2);
    }
}
