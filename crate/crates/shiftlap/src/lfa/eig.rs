//! Eigenvalues of small complex matrices: Faddeev-LeVerrier characteristic
//! polynomial plus Durand-Kerner root finding. Sized for the 4×4 twogrid
//! symbol; no external linear algebra involved.

use crate::scalar::{cx, magnitude, Cx, Real};
use num_traits::Zero;

type M4<T> = [[Cx<T>; 4]; 4];

fn mat_mul<T: Real>(a: &M4<T>, b: &M4<T>) -> M4<T> {
    let mut out = [[Cx::zero(); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut s = Cx::zero();
            for l in 0..4 {
                s += a[i][l] * b[l][j];
            }
            out[i][j] = s;
        }
    }
    out
}

fn trace<T: Real>(a: &M4<T>) -> Cx<T> {
    a[0][0] + a[1][1] + a[2][2] + a[3][3]
}

/// Monic characteristic polynomial λ⁴ + c[3]λ³ + c[2]λ² + c[1]λ + c[0]
/// via the Faddeev-LeVerrier recurrence.
pub fn characteristic_polynomial<T: Real>(a: &M4<T>) -> [Cx<T>; 4] {
    let mut c = [Cx::<T>::zero(); 4];
    let mut m = *a;
    let mut coeff = -trace(&m);
    c[3] = coeff;
    for step in 2..=4usize {
        for (i, row) in m.iter_mut().enumerate() {
            row[i] += coeff;
        }
        m = mat_mul(a, &m);
        coeff = -trace(&m) / T::of(step as f64);
        c[4 - step] = coeff;
    }
    c
}

/// All roots of the monic quartic λ⁴ + c[3]λ³ + … + c[0] by Durand-Kerner
/// iteration. Simple roots resolve to near machine precision; a root of
/// multiplicity m only to about eps^(1/m), which is ample for a spectral
/// radius.
pub fn quartic_roots<T: Real>(c: &[Cx<T>; 4]) -> [Cx<T>; 4] {
    let scale = c
        .iter()
        .map(|v| magnitude(*v))
        .fold(T::one(), T::max);
    // Standard non-real, non-unit-modulus starting points spread by powers.
    let seed = cx(T::of(0.4), T::of(0.9));
    let mut z = [Cx::<T>::zero(); 4];
    let mut acc = cx(T::one(), T::zero());
    for slot in z.iter_mut() {
        acc *= seed;
        *slot = acc * scale;
    }

    let eval = |x: Cx<T>| -> Cx<T> {
        (((x + c[3]) * x + c[2]) * x + c[1]) * x + c[0]
    };
    let tiny = T::of(1e-300);
    for _ in 0..200 {
        let mut max_step = T::zero();
        for j in 0..4 {
            let mut denom = cx(T::one(), T::zero());
            for m in 0..4 {
                if m != j {
                    denom *= z[j] - z[m];
                }
            }
            if magnitude(denom) < tiny {
                // Collided iterates: nudge apart instead of dividing by ~0.
                z[j] += cx(T::of(1e-8) * (T::one() + scale), T::of(1e-8));
                continue;
            }
            let step = eval(z[j]) / denom;
            z[j] -= step;
            max_step = max_step.max(magnitude(step));
        }
        if max_step <= T::of(1e-14) * (T::one() + scale) {
            break;
        }
    }
    z
}

/// Spectral radius of a 4×4 complex matrix.
pub fn spectral_radius4<T: Real>(a: &M4<T>) -> T {
    let c = characteristic_polynomial(a);
    let roots = quartic_roots(&c);
    roots
        .iter()
        .map(|r| magnitude(*r))
        .fold(T::zero(), T::max)
}
