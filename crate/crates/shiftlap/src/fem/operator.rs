//! Semi matrix-free application of A(k, ε) = K − M(k, ε) − iB(k).
//!
//! Per element we keep only λ = k² + iε at the quadrature points; the action
//! of K and M is recomputed on the fly with sum-factorized kernels. Element
//! sweeps run in two row-parity phases so that concurrently processed cell
//! rows write to disjoint slices of the output — the accumulation order is
//! fixed by (phase, column) and results are bitwise identical for any thread
//! count.

use rayon::prelude::*;

use super::assemble::assemble_boundary;
use super::basis::BasisTables;
use super::ShiftSpec;
use crate::error::{Error, Result};
use crate::field::FieldVector;
use crate::grid::GridLevel;
use crate::scalar::{cx, Cx, Real};
use crate::sparse::CsrMatrix;
use crate::wavenumber::WavenumberField;

/// The Helmholtz system operator on one grid level, with quadrature-point
/// data cached and only the boundary matrix assembled.
#[derive(Debug, Clone)]
pub struct SystemOperator<T: Real> {
    level: GridLevel<T>,
    tables: BasisTables<T>,
    /// λ at each quadrature point: `lam[cell * nq² + qy * nq + qx]`,
    /// cell = cy * cells_per_side + cx.
    lam: Vec<Cx<T>>,
    boundary: CsrMatrix<T>,
    diag: Vec<Cx<T>>,
}

impl<T: Real> SystemOperator<T> {
    pub fn new(level: &GridLevel<T>, k: &WavenumberField<T>, shift: &ShiftSpec<T>) -> Self {
        let p = level.order;
        let tables = BasisTables::new(p, p + 1);
        let c = level.cells_per_side;
        let nq = tables.nq;
        let h = level.mesh_size;
        let s = level.domain_size;

        let mut lam = Vec::with_capacity(c * c * nq * nq);
        for cy in 0..c {
            for cx_ in 0..c {
                for qy in 0..nq {
                    for qx in 0..nq {
                        let x = (T::of(cx_ as f64) + tables.quad.points[qx]) * h;
                        let y = (T::of(cy as f64) + tables.quad.points[qy]) * h;
                        let kv = k.eval(x, y, s);
                        lam.push(shift.lambda(kv));
                    }
                }
            }
        }

        let boundary = assemble_boundary(level, k);
        let mut op = SystemOperator {
            level: level.clone(),
            tables,
            lam,
            boundary,
            diag: Vec::new(),
        };
        op.diag = op.compute_diagonal();
        op
    }

    pub fn level(&self) -> &GridLevel<T> {
        &self.level
    }

    pub fn boundary(&self) -> &CsrMatrix<T> {
        &self.boundary
    }

    /// Diagonal of the full A(k, ε), boundary term included.
    pub fn diagonal(&self) -> &[Cx<T>] {
        &self.diag
    }

    pub fn dof_count(&self) -> usize {
        self.level.dof_count()
    }

    /// y = A x = K x − M x − iB x.
    pub fn apply(&self, x: &[Cx<T>], y: &mut [Cx<T>]) -> Result<()> {
        self.check_dims(x, y)?;
        y.fill(Cx::default());
        self.sweep(x, y, true, -T::one());
        self.boundary.matvec_add_scaled(x, y, cx(T::zero(), -T::one()));
        Ok(())
    }

    /// y = K x.
    pub fn apply_stiffness(&self, x: &[Cx<T>], y: &mut [Cx<T>]) -> Result<()> {
        self.check_dims(x, y)?;
        y.fill(Cx::default());
        self.sweep(x, y, true, T::zero());
        Ok(())
    }

    /// y = M(k, ε) x, weight k² + iε at quadrature points.
    pub fn apply_mass(&self, x: &[Cx<T>], y: &mut [Cx<T>]) -> Result<()> {
        self.check_dims(x, y)?;
        y.fill(Cx::default());
        self.sweep(x, y, false, T::one());
        Ok(())
    }

    /// Level-checked apply on field vectors.
    pub fn apply_field(&self, x: &FieldVector<T>, y: &mut FieldVector<T>) -> Result<()> {
        if x.level_index != self.level.level_index || y.level_index != self.level.level_index {
            return Err(Error::config(format!(
                "field level {} / {} does not match operator level {}",
                x.level_index, y.level_index, self.level.level_index
            )));
        }
        self.apply(x.as_slice(), y.as_mut_slice())
    }

    fn check_dims(&self, x: &[Cx<T>], y: &mut [Cx<T>]) -> Result<()> {
        let n = self.level.dof_count();
        if x.len() != n || y.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: if x.len() != n { x.len() } else { y.len() },
            });
        }
        Ok(())
    }

    /// Element sweep adding the selected terms of the bilinear form into y.
    /// `mass_coeff` multiplies the λ-weighted mass term (−1 for the system
    /// operator, +1 for the plain shifted mass, 0 to skip it).
    fn sweep(&self, x: &[Cx<T>], y: &mut [Cx<T>], stiffness: bool, mass_coeff: T) {
        let p = self.level.order;
        let c = self.level.cells_per_side;
        let nps = self.level.nodes_per_side();
        let nq = self.tables.nq;
        let nq2 = nq * nq;
        let h2 = self.level.mesh_size * self.level.mesh_size;

        for phase in 0..2usize {
            let rows: Vec<usize> = (phase..c).step_by(2).collect();
            let bands = split_bands(y, nps, p, &rows);
            bands.into_par_iter().zip(rows.into_par_iter()).for_each(|(band, cy)| {
                let mut u = [[Cx::<T>::default(); 4]; 4];
                let mut out = [[Cx::<T>::default(); 4]; 4];
                for cx_ in 0..c {
                    let col0 = cx_ * p;
                    for jy in 0..=p {
                        let base = (cy * p + jy) * nps + col0;
                        for jx in 0..=p {
                            u[jy][jx] = x[base + jx];
                        }
                    }
                    let lam_cell = &self.lam[(cy * c + cx_) * nq2..(cy * c + cx_ + 1) * nq2];
                    cell_kernel(
                        &self.tables,
                        h2,
                        lam_cell,
                        stiffness,
                        mass_coeff,
                        &u,
                        &mut out,
                    );
                    for jy in 0..=p {
                        let base = jy * nps + col0;
                        for jx in 0..=p {
                            band[base + jx] += out[jy][jx];
                        }
                    }
                }
            });
        }
    }

    fn compute_diagonal(&self) -> Vec<Cx<T>> {
        let p = self.level.order;
        let nb = p + 1;
        let c = self.level.cells_per_side;
        let nps = self.level.nodes_per_side();
        let nq = self.tables.nq;
        let nq2 = nq * nq;
        let h2 = self.level.mesh_size * self.level.mesh_size;
        let tb = &self.tables;

        let mut diag = vec![Cx::<T>::default(); self.level.dof_count()];
        for cy in 0..c {
            for cx_ in 0..c {
                let lam_cell = &self.lam[(cy * c + cx_) * nq2..(cy * c + cx_ + 1) * nq2];
                for jy in 0..nb {
                    for jx in 0..nb {
                        let mut d = Cx::<T>::default();
                        for qy in 0..nq {
                            let wy = tb.quad.weights[qy];
                            for qx in 0..nq {
                                let w2 = wy * tb.quad.weights[qx];
                                let gx = tb.v(qy, jy) * tb.d(qx, jx);
                                let gy = tb.d(qy, jy) * tb.v(qx, jx);
                                let v = tb.v(qy, jy) * tb.v(qx, jx);
                                let stiff = w2 * (gx * gx + gy * gy);
                                d += lam_cell[qy * nq + qx] * (-(w2 * h2) * v * v)
                                    + Cx::new(stiff, T::zero());
                            }
                        }
                        diag[(cy * p + jy) * nps + cx_ * p + jx] += d;
                    }
                }
            }
        }
        let minus_i = cx(T::zero(), -T::one());
        for (i, b) in self.boundary.diagonal().into_iter().enumerate() {
            diag[i] += b * minus_i;
        }
        diag
    }

    /// Explicit sparse assembly of A(k, ε) — used for the coarse matrix.
    pub fn assemble(&self) -> CsrMatrix<T> {
        let p = self.level.order;
        let nb = p + 1;
        let c = self.level.cells_per_side;
        let nps = self.level.nodes_per_side();
        let n = self.level.dof_count();
        let nq = self.tables.nq;
        let nq2 = nq * nq;
        let h2 = self.level.mesh_size * self.level.mesh_size;
        let tb = &self.tables;
        let nb2 = nb * nb;

        // Reference stiffness (cell-independent on a uniform grid) and the
        // per-quadrature-point basis products feeding the mass term.
        let mut k_ref = vec![T::zero(); nb2 * nb2];
        let mut v2 = vec![T::zero(); nq2 * nb2];
        let mut wq = vec![T::zero(); nq2];
        for qy in 0..nq {
            let wy = tb.quad.weights[qy];
            for qx in 0..nq {
                let q = qy * nq + qx;
                let w2 = wy * tb.quad.weights[qx];
                wq[q] = w2;
                for jy in 0..nb {
                    for jx in 0..nb {
                        let j = jy * nb + jx;
                        v2[q * nb2 + j] = tb.v(qy, jy) * tb.v(qx, jx);
                        let gxj = tb.v(qy, jy) * tb.d(qx, jx);
                        let gyj = tb.d(qy, jy) * tb.v(qx, jx);
                        for my in 0..nb {
                            for mx in 0..nb {
                                let m = my * nb + mx;
                                let gxm = tb.v(qy, my) * tb.d(qx, mx);
                                let gym = tb.d(qy, my) * tb.v(qx, mx);
                                k_ref[j * nb2 + m] += w2 * (gxj * gxm + gyj * gym);
                            }
                        }
                    }
                }
            }
        }

        let mut trips: Vec<(usize, usize, Cx<T>)> =
            Vec::with_capacity(c * c * nb2 * nb2 + self.boundary.nnz());
        for cy in 0..c {
            for cx_ in 0..c {
                let lam_cell = &self.lam[(cy * c + cx_) * nq2..(cy * c + cx_ + 1) * nq2];
                for j in 0..nb2 {
                    let gj = (cy * p + j / nb) * nps + cx_ * p + j % nb;
                    for m in 0..nb2 {
                        let gm = (cy * p + m / nb) * nps + cx_ * p + m % nb;
                        let mut mass = Cx::<T>::default();
                        for q in 0..nq2 {
                            mass += lam_cell[q] * (wq[q] * v2[q * nb2 + j] * v2[q * nb2 + m]);
                        }
                        let val = Cx::new(k_ref[j * nb2 + m], T::zero()) - mass * h2;
                        trips.push((gj, gm, val));
                    }
                }
            }
        }
        let minus_i = cx(T::zero(), -T::one());
        for row in 0..n {
            for (col, v) in self.boundary.row(row) {
                trips.push((row, col, v * minus_i));
            }
        }
        CsrMatrix::from_triplets(n, n, trips)
    }
}

/// Sum-factorized element kernel: out = (optional K_e + mass_coeff·h²·M_e(λ)) u
/// on one cell, with all tensors held in fixed 4×4 stack arrays (p ≤ 3).
fn cell_kernel<T: Real>(
    tb: &BasisTables<T>,
    h2: T,
    lam_cell: &[Cx<T>],
    stiffness: bool,
    mass_coeff: T,
    u: &[[Cx<T>; 4]; 4],
    out: &mut [[Cx<T>; 4]; 4],
) {
    let nb = tb.order + 1;
    let nq = tb.nq;
    let with_mass = !mass_coeff.is_zero();

    // Interpolate along y at the quadrature ordinates.
    let mut tv = [[Cx::<T>::default(); 4]; 4];
    let mut td = [[Cx::<T>::default(); 4]; 4];
    for qy in 0..nq {
        for jx in 0..nb {
            let mut sv = Cx::<T>::default();
            let mut sd = Cx::<T>::default();
            for jy in 0..nb {
                let c = u[jy][jx];
                sv += c * tb.v(qy, jy);
                sd += c * tb.d(qy, jy);
            }
            tv[qy][jx] = sv;
            td[qy][jx] = sd;
        }
    }

    // Evaluate value/gradient at each point and fold in quadrature weights.
    let mut av = [[Cx::<T>::default(); 4]; 4];
    let mut bx = [[Cx::<T>::default(); 4]; 4];
    let mut by = [[Cx::<T>::default(); 4]; 4];
    for qy in 0..nq {
        let wy = tb.quad.weights[qy];
        for qx in 0..nq {
            let w2 = wy * tb.quad.weights[qx];
            let mut uval = Cx::<T>::default();
            let mut ux = Cx::<T>::default();
            let mut uy = Cx::<T>::default();
            for jx in 0..nb {
                uval += tv[qy][jx] * tb.v(qx, jx);
                ux += tv[qy][jx] * tb.d(qx, jx);
                uy += td[qy][jx] * tb.v(qx, jx);
            }
            if with_mass {
                av[qy][qx] = uval * lam_cell[qy * nq + qx] * (w2 * mass_coeff * h2);
            }
            if stiffness {
                bx[qy][qx] = ux * w2;
                by[qy][qx] = uy * w2;
            }
        }
    }

    // Scatter: transpose of the interpolation, x direction first.
    let mut r1 = [[Cx::<T>::default(); 4]; 4];
    let mut r2 = [[Cx::<T>::default(); 4]; 4];
    for qy in 0..nq {
        for ix in 0..nb {
            let mut s1 = Cx::<T>::default();
            let mut s2 = Cx::<T>::default();
            for qx in 0..nq {
                s1 += av[qy][qx] * tb.v(qx, ix) + bx[qy][qx] * tb.d(qx, ix);
                s2 += by[qy][qx] * tb.v(qx, ix);
            }
            r1[qy][ix] = s1;
            r2[qy][ix] = s2;
        }
    }
    for iy in 0..nb {
        for ix in 0..nb {
            let mut s = Cx::<T>::default();
            for qy in 0..nq {
                s += r1[qy][ix] * tb.v(qy, iy) + r2[qy][ix] * tb.d(qy, iy);
            }
            out[iy][ix] = s;
        }
    }
}

/// Split y into the disjoint per-cell-row bands touched by the given
/// same-parity cell rows. Band for cell row cy covers node rows
/// cy·p ..= cy·p + p, a contiguous run in the y-major layout.
fn split_bands<'a, T: Real>(
    y: &'a mut [Cx<T>],
    nps: usize,
    p: usize,
    rows: &[usize],
) -> Vec<&'a mut [Cx<T>]> {
    let mut bands = Vec::with_capacity(rows.len());
    let mut rest = y;
    let mut pos = 0usize;
    for &cy in rows {
        let start = cy * p * nps;
        let len = (p + 1) * nps;
        let (_, tail) = rest.split_at_mut(start - pos);
        let (band, tail) = tail.split_at_mut(len);
        bands.push(band);
        rest = tail;
        pos = start + len;
    }
    bands
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn op(p: usize, ell: u32, k: f64, spec: ShiftSpec<f64>) -> SystemOperator<f64> {
        let level = GridLevel::new(ell, p, 1.0).unwrap();
        SystemOperator::new(&level, &WavenumberField::constant(k).unwrap(), &spec)
    }

    #[test]
    fn stiffness_annihilates_constants_in_interior() {
        for p in 1..=3 {
            let a = op(p, 3, 1.0, ShiftSpec::None);
            let n = a.dof_count();
            let x = vec![Cx::new(2.5, -1.0); n];
            let mut y = vec![Cx::default(); n];
            a.apply_stiffness(&x, &mut y).unwrap();
            let nps = a.level().nodes_per_side();
            for iy in 1..nps - 1 {
                for ix in 1..nps - 1 {
                    let v = y[iy * nps + ix];
                    assert!(v.norm() < 1e-12, "p={p} ({iy},{ix}): {v}");
                }
            }
        }
    }

    #[test]
    fn q1_stiffness_stencil() {
        let a = op(1, 3, 1.0, ShiftSpec::None);
        let nps = a.level().nodes_per_side();
        let n = a.dof_count();
        let center = 4 * nps + 4;
        let mut x = vec![Cx::default(); n];
        x[center] = Cx::new(1.0, 0.0);
        let mut y = vec![Cx::default(); n];
        a.apply_stiffness(&x, &mut y).unwrap();
        assert!((y[center].re - 8.0 / 3.0).abs() < 1e-13);
        for (dy, dx) in [(-1i64, -1i64), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]
        {
            let idx = ((4 + dy) as usize) * nps + (4 + dx) as usize;
            assert!((y[idx].re + 1.0 / 3.0).abs() < 1e-13, "offset ({dy},{dx})");
            assert!(y[idx].im.abs() < 1e-15);
        }
    }

    #[test]
    fn q1_mass_of_constant_is_lambda_h2() {
        let k = 3.0;
        let a = op(1, 3, k, ShiftSpec::fixed(2.0).unwrap());
        let h = a.level().mesh_size;
        let n = a.dof_count();
        let x = vec![Cx::new(1.0, 0.0); n];
        let mut y = vec![Cx::default(); n];
        a.apply_mass(&x, &mut y).unwrap();
        let nps = a.level().nodes_per_side();
        let expect = Cx::new(k * k, 2.0) * (h * h);
        for iy in 1..nps - 1 {
            for ix in 1..nps - 1 {
                assert!((y[iy * nps + ix] - expect).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn apply_matches_own_assembly() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for p in 1..=3 {
            let a = op(p, 3, 9.0, ShiftSpec::k_pow(1.5).unwrap());
            let m = a.assemble();
            let n = a.dof_count();
            for _ in 0..5 {
                let x: Vec<Cx<f64>> = (0..n)
                    .map(|_| Cx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                let mut y1 = vec![Cx::default(); n];
                a.apply(&x, &mut y1).unwrap();
                let mut y2 = vec![Cx::default(); n];
                m.matvec(&x, &mut y2);
                let diff: f64 = y1
                    .iter()
                    .zip(&y2)
                    .map(|(u, v)| (u - v).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                let scale: f64 = y2.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                assert!(diff <= 1e-12 * scale, "p={p}: {diff} vs {scale}");
            }
        }
    }

    #[test]
    fn assembled_matrix_is_complex_symmetric() {
        let a = op(2, 2, 5.0, ShiftSpec::k_pow(1.0).unwrap()).assemble();
        let n = a.rows;
        for i in 0..n {
            for (j, v) in a.row(i) {
                let vt = a.get(j, i);
                assert!((v - vt).norm() < 1e-13, "({i},{j})");
            }
        }
    }

    #[test]
    fn diagonal_matches_assembly() {
        for p in 1..=3 {
            let a = op(p, 2, 4.0, ShiftSpec::k_pow(2.0).unwrap());
            let m = a.assemble();
            for (i, &d) in a.diagonal().iter().enumerate() {
                assert!((d - m.get(i, i)).norm() < 1e-12, "p={p} i={i}");
            }
        }
    }

    #[test]
    fn apply_is_deterministic_across_thread_counts() {
        let a = op(2, 4, 20.0, ShiftSpec::k_pow(1.5).unwrap());
        let n = a.dof_count();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let x: Vec<Cx<f64>> = (0..n)
            .map(|_| Cx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mut y_multi = vec![Cx::default(); n];
        a.apply(&x, &mut y_multi).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let mut y_single = vec![Cx::default(); n];
        pool.install(|| a.apply(&x, &mut y_single).unwrap());
        assert_eq!(y_multi, y_single);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = op(1, 2, 1.0, ShiftSpec::None);
        let x = vec![Cx::default(); 3];
        let mut y = vec![Cx::default(); a.dof_count()];
        assert!(matches!(
            a.apply(&x, &mut y),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
