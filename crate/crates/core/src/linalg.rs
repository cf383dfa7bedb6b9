//! Exact elimination over any [`Field`] plus a few float helpers.

use nalgebra::DMatrix;

use crate::scalar::{Field, Ring};

/// Row-reduce in place to reduced row echelon form, dropping zero rows.
/// Returns the pivot column of each remaining row.
pub fn rref<F: Field>(rows: &mut Vec<Vec<F>>) -> Vec<usize> {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].inv().expect("nonzero pivot");
        for x in rows[r].iter_mut() {
            if !x.is_zero() {
                *x = x.mul(&inv);
            }
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *x = x.sub(&f.mul(p));
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    pivots
}

pub fn rank<F: Field>(rows: &[Vec<F>]) -> usize {
    let mut m = rows.to_vec();
    rref(&mut m).len()
}

/// Basis of `{x : M x = 0}` for an `nrows × ncols` matrix given by rows.
pub fn null_space<F: Field>(rows: &[Vec<F>], ncols: usize, zero: &F) -> Vec<Vec<F>> {
    let mut m = rows.to_vec();
    let pivots = rref(&mut m);
    let one = zero.one_like();
    let mut is_pivot = vec![false; ncols];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let mut basis = Vec::new();
    for free in (0..ncols).filter(|&c| !is_pivot[c]) {
        let mut v = vec![zero.clone(); ncols];
        v[free] = one.clone();
        for (row, &p) in m.iter().zip(&pivots) {
            if !row[free].is_zero() {
                v[p] = row[free].neg();
            }
        }
        basis.push(v);
    }
    basis
}

/// Matrix-vector product with rows.
pub fn mat_vec<R: Ring>(rows: &[Vec<R>], v: &[R], zero: &R) -> Vec<R> {
    rows.iter()
        .map(|row| {
            row.iter().zip(v).fold(zero.clone(), |acc, (a, b)| {
                if a.is_zero() || b.is_zero() {
                    acc
                } else {
                    acc.add(&a.mul(b))
                }
            })
        })
        .collect()
}

/// Incrementally maintained reduced echelon basis of a subspace.
#[derive(Clone, Debug)]
pub struct EchelonSpan<F: Field> {
    ncols: usize,
    rows: Vec<Vec<F>>,
    pivots: Vec<usize>,
}

impl<F: Field> EchelonSpan<F> {
    pub fn new(ncols: usize) -> Self {
        EchelonSpan { ncols, rows: Vec::new(), pivots: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn basis(&self) -> &[Vec<F>] {
        &self.rows
    }

    /// Residual of `v` after eliminating against the current basis.
    pub fn reduce(&self, v: &[F]) -> Vec<F> {
        let mut w = v.to_vec();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if w[p].is_zero() {
                continue;
            }
            let f = w[p].clone();
            for (x, r) in w.iter_mut().zip(row) {
                if !r.is_zero() {
                    *x = x.sub(&f.mul(r));
                }
            }
        }
        w
    }

    pub fn contains(&self, v: &[F]) -> bool {
        self.reduce(v).iter().all(|x| x.is_zero())
    }

    /// Add `v`; returns true if the span grew.
    pub fn insert(&mut self, v: &[F]) -> bool {
        assert_eq!(v.len(), self.ncols);
        let mut w = self.reduce(v);
        let Some(p) = w.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = w[p].inv().expect("nonzero pivot");
        for x in w.iter_mut() {
            if !x.is_zero() {
                *x = x.mul(&inv);
            }
        }
        // Keep the basis fully reduced.
        for row in self.rows.iter_mut() {
            if row[p].is_zero() {
                continue;
            }
            let f = row[p].clone();
            for (x, r) in row.iter_mut().zip(&w) {
                if !r.is_zero() {
                    *x = x.sub(&f.mul(r));
                }
            }
        }
        let pos = self.pivots.partition_point(|&q| q < p);
        self.pivots.insert(pos, p);
        self.rows.insert(pos, w);
        true
    }
}

/// Eigenvalues of a symmetric float matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Orthonormal null-space basis via SVD, keeping singular values below
/// `rel_tol · σ_max`. Returns column vectors.
pub fn svd_null_space(m: &DMatrix<f64>, rel_tol: f64) -> Vec<Vec<f64>> {
    let (nrows, ncols) = m.shape();
    if ncols == 0 {
        return Vec::new();
    }
    if nrows == 0 {
        return (0..ncols)
            .map(|i| {
                let mut v = vec![0.0; ncols];
                v[i] = 1.0;
                v
            })
            .collect();
    }
    // Tall matrices are reduced to their square R factor first.
    let a = if nrows > ncols { m.clone().qr().r() } else { m.clone() };
    // Pad to at least ncols rows so that V has full size.
    let a = if a.nrows() < ncols {
        let mut p = DMatrix::<f64>::zeros(ncols, ncols);
        p.view_mut((0, 0), (a.nrows(), ncols)).copy_from(&a);
        p
    } else {
        a
    };
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let sv = &svd.singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let thr = rel_tol * smax;
    let mut out = Vec::new();
    for i in 0..ncols {
        let s = if i < sv.len() { sv[i] } else { 0.0 };
        if s <= thr || smax == 0.0 {
            out.push(v_t.row(i).iter().copied().collect());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::RatFunc;

    fn q(n: i128) -> RatFunc {
        RatFunc::from_int(n)
    }

    #[test]
    fn test_null_space_exact() {
        let m = vec![vec![q(1), q(2), q(3)], vec![q(2), q(4), q(6)]];
        let ns = null_space(&m, 3, &q(0));
        assert_eq!(ns.len(), 2);
        for v in &ns {
            assert!(mat_vec(&m, v, &q(0)).iter().all(|x| x.is_zero()));
        }
        assert_eq!(rank(&m), 1);
    }

    #[test]
    fn test_echelon_span() {
        let mut s = EchelonSpan::new(3);
        assert!(s.insert(&[q(1), q(1), q(0)]));
        assert!(s.insert(&[q(0), q(1), q(1)]));
        assert!(!s.insert(&[q(1), q(2), q(1)]));
        assert!(s.contains(&[q(2), q(0), q(-2)]));
        assert_eq!(s.dim(), 2);
    }

    #[test]
    fn test_svd_null_space() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let ns = svd_null_space(&m, 1e-8);
        assert_eq!(ns.len(), 1);
        assert!((ns[0][0] + ns[0][1]).abs() < 1e-12);
        let wide = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
        assert_eq!(svd_null_space(&wide, 1e-8).len(), 2);
    }
}
