//! Reference-element machinery: Gauss-Legendre rules on [0, 1] and
//! equispaced Lagrange bases of order 1..=3, tabulated at quadrature points.

use crate::scalar::Real;

/// Quadrature rule on the unit interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature<T: Real> {
    pub points: Vec<T>,
    pub weights: Vec<T>,
}

/// Gauss-Legendre nodes/weights on [0, 1] for n in 2..=4.
pub fn gauss_legendre<T: Real>(n: usize) -> Quadrature<T> {
    // (point, weight) on [-1, 1]
    let raw: &[(f64, f64)] = match n {
        2 => &[
            (-0.577_350_269_189_625_8, 1.0),
            (0.577_350_269_189_625_8, 1.0),
        ],
        3 => &[
            (-0.774_596_669_241_483_4, 0.555_555_555_555_555_6),
            (0.0, 0.888_888_888_888_888_9),
            (0.774_596_669_241_483_4, 0.555_555_555_555_555_6),
        ],
        4 => &[
            (-0.861_136_311_594_052_6, 0.347_854_845_137_453_86),
            (-0.339_981_043_584_856_26, 0.652_145_154_862_546_1),
            (0.339_981_043_584_856_26, 0.652_145_154_862_546_1),
            (0.861_136_311_594_052_6, 0.347_854_845_137_453_86),
        ],
        _ => panic!("gauss_legendre: only 2..=4 points supported, asked for {n}"),
    };
    let half = T::of(0.5);
    Quadrature {
        points: raw.iter().map(|&(x, _)| half * (T::of(x) + T::one())).collect(),
        weights: raw.iter().map(|&(_, w)| half * T::of(w)).collect(),
    }
}

/// Equispaced Lagrange node j/p on [0, 1].
#[inline]
pub fn lagrange_node<T: Real>(p: usize, j: usize) -> T {
    T::of(j as f64) / T::of(p as f64)
}

/// Value of the order-p Lagrange basis function j at x.
pub fn lagrange_value<T: Real>(p: usize, j: usize, x: T) -> T {
    let xj = lagrange_node::<T>(p, j);
    let mut v = T::one();
    for m in 0..=p {
        if m != j {
            let xm = lagrange_node::<T>(p, m);
            v = v * (x - xm) / (xj - xm);
        }
    }
    v
}

/// Derivative of the order-p Lagrange basis function j at x.
pub fn lagrange_deriv<T: Real>(p: usize, j: usize, x: T) -> T {
    let xj = lagrange_node::<T>(p, j);
    let mut sum = T::zero();
    for m in 0..=p {
        if m == j {
            continue;
        }
        let xm = lagrange_node::<T>(p, m);
        let mut term = T::one() / (xj - xm);
        for l in 0..=p {
            if l != j && l != m {
                let xl = lagrange_node::<T>(p, l);
                term = term * (x - xl) / (xj - xl);
            }
        }
        sum += term;
    }
    sum
}

/// 1D basis values and derivatives tabulated at the quadrature points of an
/// n-point Gauss rule: `val[q * (p+1) + j]`.
#[derive(Debug, Clone)]
pub struct BasisTables<T: Real> {
    pub order: usize,
    pub nq: usize,
    pub quad: Quadrature<T>,
    pub val: Vec<T>,
    pub der: Vec<T>,
}

impl<T: Real> BasisTables<T> {
    pub fn new(order: usize, nq: usize) -> Self {
        let quad = gauss_legendre::<T>(nq);
        let nb = order + 1;
        let mut val = vec![T::zero(); nq * nb];
        let mut der = vec![T::zero(); nq * nb];
        for (q, &x) in quad.points.iter().enumerate() {
            for j in 0..nb {
                val[q * nb + j] = lagrange_value(order, j, x);
                der[q * nb + j] = lagrange_deriv(order, j, x);
            }
        }
        BasisTables {
            order,
            nq,
            quad,
            val,
            der,
        }
    }

    #[inline]
    pub fn v(&self, q: usize, j: usize) -> T {
        self.val[q * (self.order + 1) + j]
    }

    #[inline]
    pub fn d(&self, q: usize, j: usize) -> T {
        self.der[q * (self.order + 1) + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_weights_sum_to_one() {
        for n in 2..=4 {
            let q: Quadrature<f64> = gauss_legendre(n);
            let s: f64 = q.weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-15, "n={n} sum={s}");
        }
    }

    #[test]
    fn quadrature_integrates_polynomials_exactly() {
        // n-point Gauss is exact through degree 2n-1 on [0,1]
        for n in 2..=4usize {
            let q: Quadrature<f64> = gauss_legendre(n);
            for d in 0..=(2 * n - 1) {
                let approx: f64 = q
                    .points
                    .iter()
                    .zip(&q.weights)
                    .map(|(&x, &w)| w * x.powi(d as i32))
                    .sum();
                let exact = 1.0 / (d as f64 + 1.0);
                assert!(
                    (approx - exact).abs() < 1e-14,
                    "n={n} d={d}: {approx} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn lagrange_basis_is_nodal_and_sums_to_one() {
        for p in 1..=3usize {
            for j in 0..=p {
                for m in 0..=p {
                    let v: f64 = lagrange_value(p, j, lagrange_node(p, m));
                    let expect = if j == m { 1.0 } else { 0.0 };
                    assert!((v - expect).abs() < 1e-13);
                }
            }
            for i in 0..=10 {
                let x = i as f64 / 10.0;
                let s: f64 = (0..=p).map(|j| lagrange_value(p, j, x)).sum();
                let ds: f64 = (0..=p).map(|j| lagrange_deriv(p, j, x)).sum();
                assert!((s - 1.0).abs() < 1e-13);
                assert!(ds.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let eps = 1e-6;
        for p in 1..=3usize {
            for j in 0..=p {
                for i in 1..10 {
                    let x = i as f64 / 10.0;
                    let fd = (lagrange_value(p, j, x + eps) - lagrange_value(p, j, x - eps))
                        / (2.0 * eps);
                    let an: f64 = lagrange_deriv(p, j, x);
                    assert!((fd - an).abs() < 1e-6, "p={p} j={j} x={x}");
                }
            }
        }
    }
}
