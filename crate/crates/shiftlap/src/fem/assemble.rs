//! Assembled pieces of the discretization: the impedance boundary matrix
//! B(k) and quadrature-evaluated load vectors.

use super::basis::BasisTables;
use crate::field::FieldVector;
use crate::grid::GridLevel;
use crate::scalar::{Cx, Real};
use crate::sparse::CsrMatrix;
use crate::wavenumber::WavenumberField;

/// Assemble the boundary mass matrix B(k)_ij = ∫_∂Ω k φ_i φ_j ds.
///
/// Nonzeros only couple DoFs on ∂Ω, so the entry count is O(h⁻¹). The
/// impedance term enters the system as −iB(k).
pub fn assemble_boundary<T: Real>(level: &GridLevel<T>, k: &WavenumberField<T>) -> CsrMatrix<T> {
    let p = level.order;
    let tb = BasisTables::<T>::new(p, p + 1);
    let c = level.cells_per_side;
    let nps = level.nodes_per_side();
    let n = level.dof_count();
    let h = level.mesh_size;
    let s = level.domain_size;

    // Each side contributes c edge segments of length h; a segment carries a
    // 1D Lagrange element with p+1 nodes. `node(e, j, ..)` maps the j-th node
    // of segment e to its global index; `point(along, s)` maps the coordinate
    // along the side to physical (x, y).
    type NodeFn = fn(usize, usize, usize, usize) -> usize;
    let sides: [(NodeFn, fn(T, T) -> (T, T)); 4] = [
        // bottom: y = 0
        (|e, j, p, _nps| e * p + j, |t, _s| (t, T::zero())),
        // top: y = s
        (|e, j, p, nps| (nps - 1) * nps + e * p + j, |t, s| (t, s)),
        // left: x = 0
        (|e, j, p, nps| (e * p + j) * nps, |t, _s| (T::zero(), t)),
        // right: x = s
        (|e, j, p, nps| (e * p + j) * nps + nps - 1, |t, s| (s, t)),
    ];

    let mut trips: Vec<(usize, usize, Cx<T>)> = Vec::with_capacity(4 * c * (p + 1) * (p + 1));
    for (node, point) in sides {
        for e in 0..c {
            // k at the segment's quadrature points
            let mut kq = [T::zero(); 4];
            for (q, &t) in tb.quad.points.iter().enumerate() {
                let along = (T::of(e as f64) + t) * h;
                let (x, y) = point(along, s);
                kq[q] = k.eval(x, y, s);
            }
            for j in 0..=p {
                let gj = node(e, j, p, nps);
                for m in 0..=p {
                    let gm = node(e, m, p, nps);
                    let mut v = T::zero();
                    for q in 0..tb.nq {
                        v += tb.quad.weights[q] * kq[q] * tb.v(q, j) * tb.v(q, m);
                    }
                    trips.push((gj, gm, Cx::new(v * h, T::zero())));
                }
            }
        }
    }
    CsrMatrix::from_triplets(n, n, trips)
}

/// Right-hand side F_i = ∫_Ω f φ_i dx. The impedance datum g is fixed to
/// zero and contributes nothing.
///
/// Uses max(p+1, 4) Gauss points per direction: sharply peaked sources are
/// the main use case and the operator's p+1 rule under-resolves them.
pub fn assemble_rhs<T: Real>(
    level: &GridLevel<T>,
    f: impl Fn(T, T) -> Cx<T>,
) -> FieldVector<T> {
    let p = level.order;
    let tb = BasisTables::<T>::new(p, (p + 1).max(4));
    let c = level.cells_per_side;
    let nps = level.nodes_per_side();
    let h = level.mesh_size;
    let h2 = h * h;

    let mut rhs = FieldVector::zeros(level);
    let out = rhs.as_mut_slice();
    for cy in 0..c {
        for cx_ in 0..c {
            for qy in 0..tb.nq {
                let y = (T::of(cy as f64) + tb.quad.points[qy]) * h;
                let wy = tb.quad.weights[qy];
                for qx in 0..tb.nq {
                    let x = (T::of(cx_ as f64) + tb.quad.points[qx]) * h;
                    let fv = f(x, y) * (wy * tb.quad.weights[qx] * h2);
                    for jy in 0..=p {
                        let row = (cy * p + jy) * nps + cx_ * p;
                        let vy = tb.v(qy, jy);
                        for jx in 0..=p {
                            out[row + jx] += fv * (vy * tb.v(qx, jx));
                        }
                    }
                }
            }
        }
    }
    rhs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;

    #[test]
    fn q1_boundary_edge_element() {
        // k ≡ 1: each boundary segment contributes the 1D linear mass matrix
        // [[h/3, h/6], [h/6, h/3]], accumulated over adjacent segments/sides.
        let level = GridLevel::<f64>::new(2, 1, 1.0).unwrap();
        let b = assemble_boundary(&level, &WavenumberField::constant(1.0).unwrap());
        let h = level.mesh_size;
        // Off-diagonal along the bottom: a single segment's h/6.
        assert!((b.get(0, 1).re - h / 6.0).abs() < 1e-14);
        assert!((b.get(1, 0).re - h / 6.0).abs() < 1e-14);
        // Node 1 is interior to the bottom side: h/3 from each neighbor segment.
        assert!((b.get(1, 1).re - 2.0 * h / 3.0).abs() < 1e-14);
        // Corner node 0 collects h/3 from the bottom AND the left side.
        assert!((b.get(0, 0).re - 2.0 * h / 3.0).abs() < 1e-14);
        // First off-diagonal up the left side.
        assert!((b.get(0, level.nodes_per_side()).re - h / 6.0).abs() < 1e-14);
        assert!(b.values.iter().all(|v| v.im == 0.0));
    }

    #[test]
    fn boundary_rows_only_touch_boundary_nodes() {
        let level = GridLevel::new(3, 2, 1.0).unwrap();
        let b = assemble_boundary(&level, &WavenumberField::constant(2.0).unwrap());
        let nps = level.nodes_per_side();
        for r in 0..b.rows {
            let (iy, ix) = (r / nps, r % nps);
            let on_boundary = iy == 0 || ix == 0 || iy == nps - 1 || ix == nps - 1;
            if !on_boundary {
                assert_eq!(b.row(r).count(), 0, "interior row {r} has entries");
            }
            for (col, _) in b.row(r) {
                let (cy, cx_) = (col / nps, col % nps);
                assert!(cy == 0 || cx_ == 0 || cy == nps - 1 || cx_ == nps - 1);
            }
        }
        // nnz is O(nodes on boundary), far below n².
        assert!(b.nnz() <= 4 * nps * (2 * level.order + 1) * 2);
    }

    #[test]
    fn boundary_is_symmetric() {
        let level = GridLevel::new(3, 3, 2.0).unwrap();
        let field =
            WavenumberField::new(crate::wavenumber::wedge_profile(), 5.0).unwrap();
        let b = assemble_boundary(&level, &field);
        for r in 0..b.rows {
            for (c, v) in b.row(r) {
                assert!((v - b.get(c, r)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_wavenumber_gives_zero_boundary() {
        let level = GridLevel::new(2, 1, 1.0).unwrap();
        let b = assemble_boundary(&level, &WavenumberField::constant(0.0).unwrap());
        assert!(b.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn rhs_of_unit_source_is_h2_at_interior_q1_nodes() {
        let level = GridLevel::<f64>::new(3, 1, 1.0).unwrap();
        let rhs = assemble_rhs(&level, |_, _| cx(1.0, 0.0));
        let h2 = level.mesh_size * level.mesh_size;
        let nps = level.nodes_per_side();
        for iy in 1..nps - 1 {
            for ix in 1..nps - 1 {
                let v = rhs.as_slice()[iy * nps + ix];
                assert!((v.re - h2).abs() < 1e-14 && v.im.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rhs_of_zero_source_is_zero() {
        let level = GridLevel::new(2, 3, 1.0).unwrap();
        let rhs = assemble_rhs(&level, |_, _| Cx::default());
        assert!(rhs.as_slice().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn rhs_total_matches_source_integral() {
        // Σ_i F_i = ∫ f (partition of unity); f is a broad bump integrated
        // here against Q2 elements on a fine enough grid.
        let level = GridLevel::new(5, 2, 1.0).unwrap();
        let f = |x: f64, y: f64| cx((-(x - 0.5f64).powi(2) - (y - 0.4).powi(2)).exp(), 0.0);
        let rhs = assemble_rhs(&level, f);
        let total: Cx<f64> = rhs.as_slice().iter().sum();
        // Composite Simpson on a 401² grid as reference.
        let m = 400usize;
        let hh = 1.0 / m as f64;
        let w1 = |i: usize| -> f64 {
            if i == 0 || i == m {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            }
        };
        let mut simpson = 0.0;
        for iy in 0..=m {
            for ix in 0..=m {
                simpson += w1(ix) * w1(iy) * f(ix as f64 * hh, iy as f64 * hh).re;
            }
        }
        simpson *= hh * hh / 9.0;
        assert!(
            (total.re - simpson).abs() < 1e-8,
            "fem {} vs simpson {}",
            total.re,
            simpson
        );
    }
}
