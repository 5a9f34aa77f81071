//! Compressed-row matrices and an envelope (skyline) LDL^T factorization.
//!
//! Ring-ordered meshes give a bandwidth proportional to the number of nodes
//! on the outer ring, so the natural ordering already has a tight envelope.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Condition-number threshold above which a system counts as singular.
pub const COND_LIMIT: f64 = 1e12;

#[derive(Clone, Debug)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl Csr {
    /// Sums duplicate entries.
    pub fn from_triplets(nrows: usize, ncols: usize, mut trip: Vec<(usize, usize, f64)>) -> Csr {
        trip.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(trip.len());
        let mut data: Vec<f64> = Vec::with_capacity(trip.len());
        let mut last = None;
        for (i, j, v) in trip {
            if last == Some((i, j)) {
                *data.last_mut().expect("entry present") += v;
            } else {
                indices.push(j);
                data.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Csr { nrows, ncols, indptr, indices, data }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.data[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// Largest |A_ij - A_ji| relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    /// Principal submatrix on `keep` (given as a position map, `usize::MAX`
    /// for dropped indices).
    pub fn submatrix(&self, pos: &[usize], n: usize) -> Csr {
        let mut trip = Vec::new();
        for i in 0..self.nrows {
            if pos[i] == usize::MAX {
                continue;
            }
            for (j, v) in self.row(i) {
                if pos[j] != usize::MAX {
                    trip.push((pos[i], pos[j], v));
                }
            }
        }
        Csr::from_triplets(n, n, trip)
    }

    pub fn scaled_add(&self, other: &Csr, s: f64) -> Csr {
        let mut trip: Vec<(usize, usize, f64)> = Vec::with_capacity(self.data.len() + other.data.len());
        for i in 0..self.nrows {
            trip.extend(self.row(i).map(|(j, v)| (i, j, v)));
            trip.extend(other.row(i).map(|(j, v)| (i, j, s * v)));
        }
        Csr::from_triplets(self.nrows, self.ncols, trip)
    }
}

/// Envelope LDL^T factorization of a symmetric matrix (no pivoting).
#[derive(Clone, Debug)]
pub struct SkylineLdl {
    n: usize,
    first: Vec<usize>,
    start: Vec<usize>,
    /// strictly lower envelope of L, row by row
    lower: Vec<f64>,
    diag: Vec<f64>,
    pub condition_estimate: f64,
}

impl SkylineLdl {
    /// Factors a symmetric matrix; only the lower triangle is read.
    /// Fails with `EigenvalueCollision` when the estimated condition number
    /// exceeds [`COND_LIMIT`] or a pivot vanishes.
    pub fn factor(a: &Csr) -> Result<SkylineLdl> {
        let n = a.nrows;
        let mut first: Vec<usize> = (0..n).collect();
        for i in 0..n {
            for (j, _) in a.row(i) {
                if j < i {
                    first[i] = first[i].min(j);
                }
            }
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i]);
        }
        let mut lower = vec![0.0; start[n]];
        let mut diag = vec![0.0; n];
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j < i {
                    lower[start[i] + j - first[i]] += v;
                } else if j == i {
                    diag[i] += v;
                }
            }
        }
        let norm = (0..n).map(|i| a.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max);

        let mut ldl = SkylineLdl { n, first, start, lower, diag, condition_estimate: 0.0 };
        for i in 0..n {
            let fi = ldl.first[i];
            let (head, row_i) = ldl.lower.split_at_mut(ldl.start[i]);
            let row_i = &mut row_i[..i - fi];
            // row_i[j - fi] holds a_ij, overwritten by w_j = L_ij D_j
            for j in fi..i {
                let fj = ldl.first[j];
                let k0 = fi.max(fj);
                let row_j = &head[ldl.start[j]..ldl.start[j] + (j - fj)];
                let mut s = 0.0;
                for k in k0..j {
                    s += row_i[k - fi] * row_j[k - fj];
                }
                row_i[j - fi] -= s;
            }
            let mut dsum = 0.0;
            for j in fi..i {
                let w = row_i[j - fi];
                let l = w / ldl.diag[j];
                dsum += w * l;
                row_i[j - fi] = l;
            }
            ldl.diag[i] -= dsum;
            let d = ldl.diag[i];
            if !d.is_finite() || d.abs() <= f64::EPSILON * norm {
                return Err(Error::EigenvalueCollision { cond: f64::INFINITY });
            }
        }
        ldl.condition_estimate = norm * ldl.inverse_norm_estimate();
        if !ldl.condition_estimate.is_finite() || ldl.condition_estimate > COND_LIMIT {
            return Err(Error::EigenvalueCollision { cond: ldl.condition_estimate });
        }
        Ok(ldl)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Lower bound on `||A^-1||_2` from a few inverse power steps.
    fn inverse_norm_estimate(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut x: Vec<f64> = (0..self.n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut est = 0.0;
        for _ in 0..5 {
            let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v /= nx);
            self.solve_in_place(&mut x);
            est = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        }
        est
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.lower[self.start[i]..self.start[i + 1]];
            let s: f64 = row.iter().zip(&b[fi..i]).map(|(l, x)| l * x).sum();
            b[i] -= s;
        }
        for i in 0..n {
            b[i] /= self.diag[i];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let xi = b[i];
            let row = &self.lower[self.start[i]..self.start[i + 1]];
            for (l, x) in row.iter().zip(b[fi..i].iter_mut()) {
                *x -= l * xi;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal() {
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.5));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        let a = Csr::from_triplets(n, n, t);
        let f = SkylineLdl::factor(&a).unwrap();
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b = a.matvec(&x);
        let y = f.solve(&b);
        for i in 0..n {
            assert!((x[i] - y[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_is_rejected() {
        let a = Csr::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        assert!(matches!(SkylineLdl::factor(&a), Err(Error::EigenvalueCollision { .. })));
    }
}
