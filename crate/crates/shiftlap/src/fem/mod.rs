//! Q_p finite elements on uniform square grids: reference bases, the
//! semi matrix-free Helmholtz operator, and boundary/right-hand-side assembly.
//!
//! The discrete system is A(k, ε) = K − M(k, ε) − iB(k), where K is the
//! stiffness matrix, M carries the weight k(x)² + iε(x) at quadrature points,
//! and B is the impedance boundary mass matrix with weight k. K and M are
//! never stored: their action is recomputed element-wise from cached
//! quadrature data. Only B (O(h⁻¹) nonzeros) is assembled.

pub mod assemble;
pub mod basis;
pub mod operator;

pub use assemble::{assemble_boundary, assemble_rhs};
pub use basis::{gauss_legendre, BasisTables, Quadrature};
pub use operator::SystemOperator;

use crate::error::{Error, Result};
use crate::scalar::{cx, Cx, Real};

/// How the imaginary shift ε in λ = k² + iε is chosen, pointwise in k(x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShiftSpec<T: Real> {
    /// ε = 0: the unshifted Helmholtz operator.
    None,
    /// ε(x) = k(x)^σ with a fixed exponent σ ∈ [1, 2].
    KPow { sigma: T },
    /// Constant ε ≥ 0 independent of k.
    Fixed { epsilon: T },
    /// ε(x) = k(x)^{σ(k(x))} with σ(k) = clamp(2 − exp(−α(k − k_c)), 1, 2):
    /// the fitted shift map applied pointwise.
    SigmaOfK { k_crit: T, alpha: T },
}

impl<T: Real> ShiftSpec<T> {
    pub fn k_pow(sigma: T) -> Result<Self> {
        if !(sigma >= T::one() && sigma <= T::of(2.0)) {
            return Err(Error::config(format!(
                "shift exponent must lie in [1, 2], got {sigma}"
            )));
        }
        Ok(ShiftSpec::KPow { sigma })
    }

    pub fn fixed(epsilon: T) -> Result<Self> {
        if !(epsilon >= T::zero() && epsilon.is_finite()) {
            return Err(Error::config(format!(
                "fixed shift must be a finite nonnegative real, got {epsilon}"
            )));
        }
        Ok(ShiftSpec::Fixed { epsilon })
    }

    /// The shift ε at local wavenumber k.
    pub fn epsilon(&self, k: T) -> T {
        match *self {
            ShiftSpec::None => T::zero(),
            ShiftSpec::KPow { sigma } => k.powf(sigma),
            ShiftSpec::Fixed { epsilon } => epsilon,
            ShiftSpec::SigmaOfK { k_crit, alpha } => {
                let two = T::of(2.0);
                let sigma = (two - (-alpha * (k - k_crit)).exp()).max(T::one()).min(two);
                k.powf(sigma)
            }
        }
    }

    /// λ = k² + iε(k), the mass weight of the (possibly shifted) operator.
    pub fn lambda(&self, k: T) -> Cx<T> {
        cx(k * k, self.epsilon(k))
    }
}
