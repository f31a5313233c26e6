//! Minimal complex sparse matrix support: CSR storage plus the two direct
//! solvers used for coarse-grid systems (dense LU for small problems, banded
//! LU with partial pivoting otherwise).

use crate::error::{Error, Result};
use crate::scalar::{magnitude, Cx, Real};
use num_traits::Zero;

/// Compressed sparse row matrix with complex entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T: Real> {
    pub rows: usize,
    pub cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<Cx<T>>,
}

impl<T: Real> CsrMatrix<T> {
    /// Build from (row, col, value) triplets; duplicate entries are summed.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        mut triplets: Vec<(usize, usize, Cx<T>)>,
    ) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<Cx<T>> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            debug_assert!(r < rows && c < cols);
            if last == Some((r, c)) {
                let k = values.len() - 1;
                values[k] += v;
                continue;
            }
            col_idx.push(c);
            values.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// y = A x
    pub fn matvec(&self, x: &[Cx<T>], y: &mut [Cx<T>]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        for r in 0..self.rows {
            let mut s = Cx::zero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = s;
        }
    }

    /// y += factor * A x
    pub fn matvec_add_scaled(&self, x: &[Cx<T>], y: &mut [Cx<T>], factor: Cx<T>) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        for r in 0..self.rows {
            let mut s = Cx::zero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            y[r] += factor * s;
        }
    }

    pub fn get(&self, r: usize, c: usize) -> Cx<T> {
        for k in self.row_ptr[r]..self.row_ptr[r + 1] {
            if self.col_idx[k] == c {
                return self.values[k];
            }
        }
        Cx::zero()
    }

    pub fn diagonal(&self) -> Vec<Cx<T>> {
        (0..self.rows.min(self.cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    /// Iterate the stored (column, value) pairs of one row.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Cx<T>)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(|k| (self.col_idx[k], self.values[k]))
    }
}

/// Dense LU with partial pivoting, row-major storage.
#[derive(Debug, Clone)]
pub struct DenseLu<T: Real> {
    n: usize,
    a: Vec<Cx<T>>,
    piv: Vec<usize>,
}

impl<T: Real> DenseLu<T> {
    pub fn factor(csr: &CsrMatrix<T>) -> Result<Self> {
        assert_eq!(csr.rows, csr.cols);
        let n = csr.rows;
        let mut a = vec![Cx::zero(); n * n];
        for r in 0..n {
            for k in csr.row_ptr[r]..csr.row_ptr[r + 1] {
                a[r * n + csr.col_idx[k]] = csr.values[k];
            }
        }
        Self::factor_dense(n, a)
    }

    pub fn factor_dense(n: usize, mut a: Vec<Cx<T>>) -> Result<Self> {
        let mut piv = vec![0usize; n];
        for j in 0..n {
            let mut pr = j;
            let mut pm = magnitude(a[j * n + j]);
            for i in (j + 1)..n {
                let m = magnitude(a[i * n + j]);
                if m > pm {
                    pm = m;
                    pr = i;
                }
            }
            if pm == T::zero() {
                return Err(Error::SingularMatrix { column: j });
            }
            piv[j] = pr;
            if pr != j {
                for c in 0..n {
                    a.swap(j * n + c, pr * n + c);
                }
            }
            let d = a[j * n + j];
            for i in (j + 1)..n {
                let m = a[i * n + j] / d;
                a[i * n + j] = m;
                if m != Cx::zero() {
                    for c in (j + 1)..n {
                        let ajc = a[j * n + c];
                        a[i * n + c] -= m * ajc;
                    }
                }
            }
        }
        Ok(DenseLu { n, a, piv })
    }

    pub fn solve(&self, b: &mut [Cx<T>]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        for j in 0..n {
            if self.piv[j] != j {
                b.swap(j, self.piv[j]);
            }
            let bj = b[j];
            for i in (j + 1)..n {
                b[i] -= self.a[i * n + j] * bj;
            }
        }
        for j in (0..n).rev() {
            b[j] = b[j] / self.a[j * n + j];
            let bj = b[j];
            for i in 0..j {
                b[i] -= self.a[i * n + j] * bj;
            }
        }
    }
}

/// Banded LU with partial pivoting. Storage follows the usual band layout:
/// column j lives in `data[j*ld..(j+1)*ld]` with entry (i, j) at offset
/// `kl + ku + i - j`; the extra `kl` upper diagonals absorb pivoting fill.
#[derive(Debug, Clone)]
pub struct BandedLu<T: Real> {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    data: Vec<Cx<T>>,
    piv: Vec<usize>,
}

impl<T: Real> BandedLu<T> {
    pub fn factor(csr: &CsrMatrix<T>, kl: usize, ku: usize) -> Result<Self> {
        assert_eq!(csr.rows, csr.cols);
        let n = csr.rows;
        let ld = 2 * kl + ku + 1;
        let mut data = vec![Cx::zero(); ld * n];
        for r in 0..n {
            for k in csr.row_ptr[r]..csr.row_ptr[r + 1] {
                let c = csr.col_idx[k];
                assert!(
                    c + ku >= r && r + kl >= c,
                    "entry ({r},{c}) outside declared band"
                );
                data[c * ld + (kl + ku + r - c)] = csr.values[k];
            }
        }
        let mut lu = BandedLu {
            n,
            kl,
            ku,
            ld,
            data,
            piv: vec![0usize; n],
        };
        lu.factor_in_place()?;
        Ok(lu)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.ld + (self.kl + self.ku + i - j)
    }

    fn factor_in_place(&mut self) -> Result<()> {
        let n = self.n;
        let kl = self.kl;
        let kum = self.ku + self.kl; // effective upper bandwidth after fill
        for j in 0..n {
            let imax = (j + kl).min(n - 1);
            let mut pr = j;
            let mut pm = magnitude(self.data[self.idx(j, j)]);
            for i in (j + 1)..=imax {
                let m = magnitude(self.data[self.idx(i, j)]);
                if m > pm {
                    pm = m;
                    pr = i;
                }
            }
            if pm == T::zero() {
                return Err(Error::SingularMatrix { column: j });
            }
            self.piv[j] = pr;
            let cmax = (j + kum).min(n - 1);
            if pr != j {
                for c in j..=cmax {
                    let a = self.idx(j, c);
                    let b = self.idx(pr, c);
                    self.data.swap(a, b);
                }
            }
            let d = self.data[self.idx(j, j)];
            for i in (j + 1)..=imax {
                let e = self.idx(i, j);
                let m = self.data[e] / d;
                self.data[e] = m;
                if m != Cx::zero() {
                    for c in (j + 1)..=cmax {
                        let ajc = self.data[self.idx(j, c)];
                        let t = self.idx(i, c);
                        self.data[t] -= m * ajc;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn solve(&self, b: &mut [Cx<T>]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        for j in 0..n {
            if self.piv[j] != j {
                b.swap(j, self.piv[j]);
            }
            let bj = b[j];
            if bj != Cx::zero() {
                let imax = (j + self.kl).min(n - 1);
                for i in (j + 1)..=imax {
                    b[i] -= self.data[self.idx(i, j)] * bj;
                }
            }
        }
        let kum = self.ku + self.kl;
        for j in (0..n).rev() {
            b[j] = b[j] / self.data[self.idx(j, j)];
            let bj = b[j];
            if bj != Cx::zero() {
                let imin = j.saturating_sub(kum);
                for i in imin..j {
                    b[i] -= self.data[self.idx(i, j)] * bj;
                }
            }
        }
    }
}

/// Direct factorization of a coarse system, picking dense or banded storage
/// by problem size.
#[derive(Debug, Clone)]
pub enum Factorized<T: Real> {
    Dense(DenseLu<T>),
    Banded(BandedLu<T>),
}

/// Problems smaller than this are factored densely.
pub const DENSE_FALLBACK_LIMIT: usize = 2000;

impl<T: Real> Factorized<T> {
    /// Factor a square CSR matrix with bandwidth `band` (kl = ku = band).
    pub fn factor(csr: &CsrMatrix<T>, band: usize) -> Result<Self> {
        if csr.rows < DENSE_FALLBACK_LIMIT {
            Ok(Factorized::Dense(DenseLu::factor(csr)?))
        } else {
            Ok(Factorized::Banded(BandedLu::factor(csr, band, band)?))
        }
    }

    pub fn solve(&self, b: &mut [Cx<T>]) {
        match self {
            Factorized::Dense(lu) => lu.solve(b),
            Factorized::Banded(lu) => lu.solve(b),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn random_banded(n: usize, band: usize, seed: u64, boost: f64) -> CsrMatrix<f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut trips = Vec::new();
        for r in 0..n {
            for c in r.saturating_sub(band)..(r + band + 1).min(n) {
                let v = cx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let v = if r == c { v + cx(boost, 0.0) } else { v };
                trips.push((r, c, v));
            }
        }
        CsrMatrix::from_triplets(n, n, trips)
    }

    #[test]
    fn csr_sums_duplicate_triplets() {
        let m = CsrMatrix::from_triplets(
            2,
            2,
            vec![
                (0, 0, cx(1.0, 0.0)),
                (0, 0, cx(2.0, 1.0)),
                (1, 1, cx(1.0, 0.0)),
            ],
        );
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 0), cx(3.0, 1.0));
    }

    #[test]
    fn dense_lu_solves_random_system() {
        // The diagonal boost keeps the shift outside the matrix's spectrum so
        // the system stays well conditioned at full density.
        let n = 60;
        let a = random_banded(n, n, 7, 12.0);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let x: Vec<Cx<f64>> = (0..n)
            .map(|_| cx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mut b = vec![Cx::zero(); n];
        a.matvec(&x, &mut b);
        let lu = DenseLu::factor(&a).unwrap();
        lu.solve(&mut b);
        let err: f64 = b
            .iter()
            .zip(&x)
            .map(|(u, v)| magnitude(*u - *v))
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "err = {err:e}");
    }

    #[test]
    fn banded_lu_matches_dense_lu() {
        let n = 300;
        let band = 11;
        let a = random_banded(n, band, 42, 4.0);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let x: Vec<Cx<f64>> = (0..n)
            .map(|_| cx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mut b1 = vec![Cx::zero(); n];
        a.matvec(&x, &mut b1);
        let mut b2 = b1.clone();

        let dense = DenseLu::factor(&a).unwrap();
        dense.solve(&mut b1);
        let banded = BandedLu::factor(&a, band, band).unwrap();
        banded.solve(&mut b2);

        let err: f64 = b1
            .iter()
            .zip(&b2)
            .map(|(u, v)| magnitude(*u - *v))
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "banded vs dense err = {err:e}");
        let err_x: f64 = b2
            .iter()
            .zip(&x)
            .map(|(u, v)| magnitude(*u - *v))
            .fold(0.0, f64::max);
        assert!(err_x < 1e-9, "banded vs truth err = {err_x:e}");
    }

    #[test]
    fn zero_diagonal_forces_row_pivoting() {
        // Scaled cyclic permutation: every elimination step must swap rows.
        let n = 8;
        let mut trips = Vec::new();
        for i in 0..n {
            trips.push((i, (i + 1) % n, cx(1.0 + i as f64, -0.5)));
        }
        let a = CsrMatrix::from_triplets(n, n, trips);
        let x: Vec<Cx<f64>> = (0..n).map(|i| cx(i as f64, 1.0)).collect();
        let mut b = vec![Cx::zero(); n];
        a.matvec(&x, &mut b);
        let lu = DenseLu::factor(&a).unwrap();
        lu.solve(&mut b);
        let err: f64 = b
            .iter()
            .zip(&x)
            .map(|(u, v)| magnitude(*u - *v))
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "err = {err:e}");
    }

    #[test]
    fn exactly_singular_matrix_is_reported() {
        let m = CsrMatrix::from_triplets(
            2,
            2,
            vec![(0, 0, cx(1.0, 0.0)), (0, 1, cx(1.0, 0.0))],
        );
        match DenseLu::factor(&m) {
            Err(Error::SingularMatrix { column }) => assert_eq!(column, 1),
            other => panic!("expected singular-matrix error, got {other:?}"),
        }
    }
}
