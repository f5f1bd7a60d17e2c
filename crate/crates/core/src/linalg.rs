//! Thin wrappers over faer's sparse and dense LU factorizations.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Par};

use crate::error::{Error, Result};

/// Forces single-threaded kernels inside faer, so that floating-point
/// reductions happen in a fixed order.
pub fn use_sequential_kernels() {
    faer::set_global_parallelism(Par::Seq);
}

/// Coordinate-format accumulator; duplicate entries are summed.
#[derive(Debug, Clone, Default)]
pub struct TripletList {
    pub n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletList {
    pub fn new(n: usize) -> Self {
        TripletList { n, entries: Vec::new() }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        if v != 0.0 {
            self.entries.push((i, j, v));
        }
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for &(i, j, v) in &self.entries {
            y[i] += v * x[j];
        }
        y
    }

    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for &(i, j, v) in &self.entries {
            y[j] += v * x[i];
        }
        y
    }
}

/// Factorized sparse square matrix.
pub struct SparseLu {
    pub matrix: TripletList,
    lu: Lu<usize, f64>,
}

impl std::fmt::Debug for SparseLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SparseLu(n = {})", self.matrix.n)
    }
}

fn column(b: &[f64]) -> Mat<f64> {
    Mat::from_fn(b.len(), 1, |i, _| b[i])
}

fn to_vec(m: &Mat<f64>) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, 0)]).collect()
}

impl SparseLu {
    pub fn factor(matrix: TripletList) -> Result<Self> {
        use_sequential_kernels();
        let trips: Vec<Triplet<usize, usize, f64>> = matrix
            .entries
            .iter()
            .map(|&(i, j, v)| Triplet::new(i, j, v))
            .collect();
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(matrix.n, matrix.n, &trips)
            .map_err(|e| Error::SingularSystem(format!("assembly: {e:?}")))?;
        let lu = a
            .sp_lu()
            .map_err(|e| Error::SingularSystem(format!("factorization: {e:?}")))?;
        Ok(SparseLu { matrix, lu })
    }

    pub fn n(&self) -> usize {
        self.matrix.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = column(b);
        self.lu.solve_in_place(x.as_mut());
        to_vec(&x)
    }

    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let mut x = column(b);
        self.lu.solve_transpose_in_place(x.as_mut());
        to_vec(&x)
    }

    /// Solve with `steps` rounds of iterative refinement.
    pub fn solve_refined(&self, b: &[f64], steps: usize) -> Vec<f64> {
        let mut x = self.solve(b);
        for _ in 0..steps {
            let ax = self.matrix.matvec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
            let dx = self.solve(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
        }
        x
    }

    pub fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let ax = self.matrix.matvec(x);
        let num = ax.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        let den = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        num / den
    }
}

/// Dense solve `A x = b` with partial pivoting; `a` is row-major `n x n`.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let m = Mat::from_fn(n, n, |i, j| a[i][j]);
    if !m.norm_max().is_finite() {
        return Err(Error::NonFinite("dense system".into()));
    }
    let lu = m.partial_piv_lu();
    let x = lu.solve(column(b));
    let x = to_vec(&x);
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::SingularSystem("dense system singular".into()))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_solve_and_transpose() {
        let n = 50;
        let mut t = TripletList::new(n);
        for i in 0..n {
            t.add(i, i, 4.0);
            if i > 0 {
                t.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                t.add(i, i + 1, -2.0);
            }
        }
        let lu = SparseLu::factor(t).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = lu.solve(&b);
        assert!(lu.relative_residual(&x, &b) < 1e-13);
        let y = lu.solve_transpose(&b);
        let aty = lu.matrix.matvec_transpose(&y);
        assert!(aty.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-12));
    }

    #[test]
    fn dense_small() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = dense_solve(&a, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
    }
}
