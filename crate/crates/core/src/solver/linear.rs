//! Discrete inverses of `L1 = Lap + f'(U)` on the x-grid and of
//! `L2 = Lap + K e^W` on the y-grid.
//!
//! `L2` is solved as a bordered system. Its unknowns are the nodal values,
//! the mean of the outer ghost ring (the free constant of the logarithmic far
//! field) and, for integer `lambda`, two multipliers along
//! `sigma^{-2-2d} Z_{alpha,j}`. The extra rows are the `E_alpha`
//! orthogonality conditions. Nonzero angular modes leave the disk as
//! decaying harmonics. The dense borders never enter the sparse factor: a
//! rank-two term supported on one ring removes the near kernel, and the
//! border is eliminated through a small Schur complement.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{sigma, DiskGrid, WeightParams};
use crate::linalg::{dense_solve, dot, norm2, SparseLu, TripletList};
use crate::liouville::LiouvilleProfile;
use crate::topological::factor_operator;

/// Factorized `Lap + diag(potential)` with `u = 0` on the outer ghost ring.
pub struct L1Solver {
    pub grid: Arc<DiskGrid>,
    lu: SparseLu,
}

impl std::fmt::Debug for L1Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "L1Solver(n = {})", self.grid.len())
    }
}

impl L1Solver {
    pub fn new(grid: Arc<DiskGrid>, potential: &[f64]) -> Result<Self> {
        let lu = factor_operator(&grid, potential)?;
        Ok(L1Solver { grid, lu })
    }

    /// Solves `L1 u = rhs`; fails when the relative residual exceeds `1e-8`,
    /// far above the round-off floor of fine stretched grids.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let u = self.lu.solve_refined(rhs, 1);
        let res = self.lu.relative_residual(&u, rhs);
        if !(res <= 1e-8) {
            return Err(Error::SingularSystem(format!("L1 relative residual {res:.3e}")));
        }
        Ok(u)
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.lu.matrix.matvec(u)
    }
}

/// Output of one bordered `L2` solve.
#[derive(Debug, Clone)]
pub struct L2Solution {
    pub eta: Vec<f64>,
    /// Mean of the ghost ring beyond the last node.
    pub ghost_mean: f64,
    /// Multipliers along `sigma^{-2-2d} Z_{alpha,j}`; empty unless `lambda` is an integer.
    pub multipliers: Vec<f64>,
    /// `|| A eta + border - rhs || / || rhs ||` in the Euclidean norm.
    pub residual: f64,
}

/// Circulant map from last-ring values to ghost values for the decaying
/// harmonic extension of every nonzero angular mode.
fn dtn_block(grid: &DiskGrid) -> Vec<Vec<f64>> {
    let nt = grid.n_theta;
    if nt == 1 {
        return vec![vec![0.0]];
    }
    let rho = grid.r_max() / grid.radial.r_boundary;
    let half = (nt / 2) as i64;
    let mut g = vec![vec![0.0; nt]; nt];
    for (j, row) in g.iter_mut().enumerate() {
        for (jp, v) in row.iter_mut().enumerate() {
            let d = (j as f64 - jp as f64) * 2.0 * PI / nt as f64;
            let mut s = 0.0;
            for m in (-half + 1)..=half {
                if m != 0 {
                    s += rho.powi(m.abs() as i32) * (m as f64 * d).cos();
                }
            }
            *v = s / nt as f64;
        }
    }
    g
}

/// Bordered solver for `L_{2,alpha}` on `E_alpha`.
pub struct L2Solver {
    pub grid: Arc<DiskGrid>,
    /// `K e^{W_alpha}` at the nodes.
    pub potential: Vec<f64>,
    a: TripletList,
    lu: SparseLu,
    borders: Vec<Vec<f64>>,
    /// Quadrature-weighted constraint rows `w e^W Z_i`.
    constraints: Vec<Vec<f64>>,
    reg: Vec<Vec<(usize, f64)>>,
    reg_scale: f64,
    yb: Vec<Vec<f64>>,
    yr: Vec<Vec<f64>>,
    small: Vec<Vec<f64>>,
}

impl std::fmt::Debug for L2Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "L2Solver(n = {}, borders = {})", self.grid.len(), self.borders.len())
    }
}

fn sparse_dot(col: &[(usize, f64)], v: &[f64]) -> f64 {
    col.iter().map(|&(k, c)| c * v[k]).sum()
}

impl L2Solver {
    pub fn new(grid: Arc<DiskGrid>, profile: &LiouvilleProfile, weight: WeightParams) -> Result<Self> {
        let n = grid.len();
        let nt = grid.n_theta;
        let pts = grid.points();
        let k = profile.coupling();
        let potential: Vec<f64> = pts.iter().map(|&x| k * profile.exp_w(x)).collect();
        let kern: Vec<[f64; 3]> = pts.iter().map(|&x| profile.kernels(x)).collect();
        // the m = lambda modes do not exist on an axisymmetric grid
        let integer = profile.integer_lambda() && !grid.is_axisymmetric();

        let mut a = TripletList::new(n);
        for (i, j, v) in grid.laplacian_entries() {
            a.add(i, j, v);
        }
        for (i, &p) in potential.iter().enumerate() {
            a.add(i, i, p);
        }
        let last = grid.n_r() - 1;
        let cp = grid.outer_coefficient();
        let g = dtn_block(&grid);
        for j in 0..nt {
            for jp in 0..nt {
                a.add(grid.idx(last, j), grid.idx(last, jp), cp * g[j][jp]);
            }
        }

        let mut ghost_col = vec![0.0; n];
        for j in 0..nt {
            ghost_col[grid.idx(last, j)] = cp;
        }
        let mut borders = vec![ghost_col];
        let w = grid.weights();
        let mut constraints = vec![(0..n).map(|i| w[i] * potential[i] / k * kern[i][0]).collect::<Vec<_>>()];
        let mut reg: Vec<Vec<(usize, f64)>> = vec![];
        let mut reg_scale = 0.0;
        if integer {
            for jz in 1..=2 {
                borders.push(
                    (0..n)
                        .map(|i| sigma(pts[i]).powf(-2.0 - 2.0 * weight.d) * kern[i][jz])
                        .collect(),
                );
                constraints.push((0..n).map(|i| w[i] * potential[i] / k * kern[i][jz]).collect());
            }
            // ring closest to |y| = 1, where the kernel functions peak
            let ring = (0..grid.n_r())
                .min_by(|&p, &q| {
                    (grid.r(p).ln().abs())
                        .partial_cmp(&grid.r(q).ln().abs())
                        .unwrap()
                })
                .unwrap();
            let (cm, cpr, ct) = grid.radial.stencil(ring);
            reg_scale = cm + cpr + 2.0 * ct / grid.dtheta().powi(2);
            for jz in 1..=2 {
                let col: Vec<(usize, f64)> = (0..nt).map(|j| (grid.idx(ring, j), kern[grid.idx(ring, j)][jz])).collect();
                let nrm = col.iter().map(|c| c.1 * c.1).sum::<f64>().sqrt();
                if nrm == 0.0 {
                    return Err(Error::SingularSystem("kernel vanishes on the deflation ring".into()));
                }
                reg.push(col.into_iter().map(|(i, c)| (i, c / nrm)).collect());
            }
        }

        let mut areg = a.clone();
        for col in &reg {
            for &(i, ci) in col {
                for &(j, cj) in col {
                    areg.add(i, j, reg_scale * ci * cj);
                }
            }
        }
        let lu = SparseLu::factor(areg)?;
        let yb: Vec<Vec<f64>> = borders.iter().map(|b| lu.solve_refined(b, 1)).collect();
        let yr: Vec<Vec<f64>> = reg
            .iter()
            .map(|col| {
                let mut e = vec![0.0; n];
                for &(i, c) in col {
                    e[i] = c;
                }
                lu.solve_refined(&e, 1)
            })
            .collect();

        let nb = borders.len();
        let nr = reg.len();
        let mut small = vec![vec![0.0; nb + nr]; nb + nr];
        for (i, c) in constraints.iter().enumerate() {
            for j in 0..nb {
                small[i][j] = -dot(c, &yb[j]);
            }
            for l in 0..nr {
                small[i][nb + l] = reg_scale * dot(c, &yr[l]);
            }
        }
        for (l, col) in reg.iter().enumerate() {
            for j in 0..nb {
                small[nb + l][j] = -sparse_dot(col, &yb[j]);
            }
            for m in 0..nr {
                small[nb + l][nb + m] = reg_scale * sparse_dot(col, &yr[m]) - if l == m { 1.0 } else { 0.0 };
            }
        }
        Ok(L2Solver { grid, potential, a, lu, borders, constraints, reg, reg_scale, yb, yr, small })
    }

    /// Number of `E_alpha` conditions (3 for integer `lambda`, else 1).
    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Applies the sparse part `A` (Laplacian with harmonic exterior for the
    /// nonzero modes, zero ghost mean) plus `K e^W`.
    pub fn apply(&self, eta: &[f64]) -> Vec<f64> {
        self.a.matvec(eta)
    }

    /// Applies the full operator including a ghost-ring mean.
    pub fn apply_with_ghost(&self, eta: &[f64], ghost_mean: f64) -> Vec<f64> {
        let mut out = self.a.matvec(eta);
        for (o, b) in out.iter_mut().zip(&self.borders[0]) {
            *o += ghost_mean * b;
        }
        out
    }

    /// Constraint values `int eta e^W Z_i`, `i = 0, (1, 2)`.
    pub fn constraint_values(&self, eta: &[f64]) -> Vec<f64> {
        self.constraints.iter().map(|c| dot(c, eta)).collect()
    }

    fn raw_solve(&self, h: &[f64], gc: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let yh = self.lu.solve(h);
        let nb = self.borders.len();
        let mut rhs = Vec::with_capacity(nb + self.reg.len());
        for (i, c) in self.constraints.iter().enumerate() {
            rhs.push(gc[i] - dot(c, &yh));
        }
        for col in &self.reg {
            rhs.push(-sparse_dot(col, &yh));
        }
        let z = dense_solve(&self.small, &rhs)?;
        let mut eta = yh;
        for j in 0..nb {
            for (e, y) in eta.iter_mut().zip(&self.yb[j]) {
                *e -= z[j] * y;
            }
        }
        for (l, yr) in self.yr.iter().enumerate() {
            let c = self.reg_scale * z[nb + l];
            for (e, y) in eta.iter_mut().zip(yr) {
                *e += c * y;
            }
        }
        Ok((eta, z[..nb].to_vec()))
    }

    fn full_residual(&self, h: &[f64], eta: &[f64], nu: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut r = self.a.matvec(eta);
        for (j, b) in self.borders.iter().enumerate() {
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri += nu[j] * bi;
            }
        }
        let r: Vec<f64> = h.iter().zip(&r).map(|(a, b)| a - b).collect();
        let rc: Vec<f64> = self.constraints.iter().map(|c| -dot(c, eta)).collect();
        (r, rc)
    }

    /// Solves `L2 eta + sum tau_j sigma^{-2-2d} Z_j = rhs` with `eta in E_alpha`.
    pub fn solve(&self, rhs: &[f64]) -> Result<L2Solution> {
        let zeros = vec![0.0; self.constraints.len()];
        let (mut eta, mut nu) = self.raw_solve(rhs, &zeros)?;
        for _ in 0..2 {
            let (r, rc) = self.full_residual(rhs, &eta, &nu);
            let (de, dn) = self.raw_solve(&r, &rc)?;
            eta.iter_mut().zip(&de).for_each(|(a, b)| *a += b);
            nu.iter_mut().zip(&dn).for_each(|(a, b)| *a += b);
        }
        let (r, _) = self.full_residual(rhs, &eta, &nu);
        let den = norm2(rhs).max(f64::MIN_POSITIVE);
        let residual = norm2(&r) / den;
        if !eta.iter().all(|v| v.is_finite()) {
            return Err(Error::SingularSystem("bordered L2 system".into()));
        }
        Ok(L2Solution { eta, ghost_mean: nu[0], multipliers: nu[1..].to_vec(), residual })
    }

    /// Like [`L2Solver::solve`], but reports an inconsistent right-hand side
    /// when the multiplier part carries more than `rel_tol` of `rhs` in the
    /// quadrature-weighted norm.
    pub fn solve_checked(&self, rhs: &[f64], rel_tol: f64) -> Result<L2Solution> {
        let sol = self.solve(rhs)?;
        if !sol.multipliers.is_empty() {
            let n = rhs.len();
            let part: Vec<f64> = (0..n)
                .map(|i| {
                    sol.multipliers
                        .iter()
                        .enumerate()
                        .map(|(j, t)| t * self.borders[j + 1][i])
                        .sum()
                })
                .collect();
            let size = self.grid.dot(&part, &part).sqrt();
            let scale = self.grid.dot(rhs, rhs).sqrt().max(f64::MIN_POSITIVE);
            if size > rel_tol * scale {
                return Err(Error::Inconsistent(size / scale));
            }
        }
        Ok(sol)
    }

    /// Far-field logarithmic data `(c, d)` with `eta ~ c ln r + d` from the last
    /// ring mean and the ghost mean.
    pub fn far_field(&self, sol: &L2Solution) -> (f64, f64) {
        far_field(&self.grid, &sol.eta, sol.ghost_mean)
    }
}

/// `(c, d)` with `eta ~ c ln r + d`, from the last ring mean and the ghost mean.
pub fn far_field(grid: &DiskGrid, eta: &[f64], ghost_mean: f64) -> (f64, f64) {
    let last = grid.n_r() - 1;
    let nt = grid.n_theta;
    let mean = (0..nt).map(|j| eta[grid.idx(last, j)]).sum::<f64>() / nt as f64;
    let (rm, rb) = (grid.r_max(), grid.radial.r_boundary);
    let c = (ghost_mean - mean) / (rb / rm).ln();
    (c, mean - c * rm.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;
    use crate::model::Rational;
    use num_complex::Complex64;

    fn ygrid(nt: usize) -> Arc<DiskGrid> {
        let radial = RadialGrid::covering(40.0, 0.05, 1.0).unwrap();
        Arc::new(if nt == 1 { DiskGrid::axisymmetric(radial) } else { DiskGrid::new(radial, nt).unwrap() })
    }

    fn solver(l: Rational, alpha: Complex64, nt: usize) -> L2Solver {
        let p = LiouvilleProfile::new(0.0, alpha, l, 1, 2).unwrap();
        L2Solver::new(ygrid(nt), &p, WeightParams::default()).unwrap()
    }

    #[test]
    fn l1_inverts_its_operator() {
        let grid = ygrid(16);
        let pot = vec![-1.0; grid.len()];
        let s = L1Solver::new(grid.clone(), &pot).unwrap();
        let rhs = grid.sample(|x| (-(x[0] * x[0] + x[1] * x[1])).exp() * (1.0 + x[0]));
        let u = s.solve(&rhs).unwrap();
        let back = s.apply(&u);
        let err = back.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let s = solver(Rational::integer(2), Complex64::new(0.3, -0.2), 32);
        let sol = s.solve(&vec![0.0; s.grid.len()]).unwrap();
        assert!(sol.eta.iter().all(|v| v.abs() < 1e-14));
        assert!(sol.ghost_mean.abs() < 1e-14);
    }

    #[test]
    fn bordered_solution_satisfies_every_row() {
        for (l, nt) in [(Rational::integer(2), 32), (Rational::new(3, 2), 1), (Rational::integer(1), 1)] {
            let alpha = if nt == 1 { Complex64::new(0.0, 0.0) } else { Complex64::new(0.2, 0.1) };
            let s = solver(l, alpha, nt);
            let rhs = s.grid.sample(|x| {
                let r2 = x[0] * x[0] + x[1] * x[1];
                (1.0 + 0.3 * x[0] - 0.2 * x[1] * x[0]) / (1.0 + r2).powi(3)
            });
            let sol = s.solve(&rhs).unwrap();
            assert!(sol.residual < 1e-10, "{}", sol.residual);
            for c in s.constraint_values(&sol.eta) {
                assert!(c.abs() < 1e-10, "{c}");
            }
            assert_eq!(sol.multipliers.len(), if nt > 1 { 2 } else { 0 });
        }
    }

    #[test]
    fn kernel_direction_is_flagged_inconsistent() {
        let alpha = Complex64::new(0.2, 0.1);
        let p = LiouvilleProfile::new(0.0, alpha, Rational::integer(2), 1, 2).unwrap();
        let s = solver(Rational::integer(2), alpha, 32);
        let d = WeightParams::default().d;
        let rhs = s.grid.sample(|x| sigma(x).powf(-2.0 - 2.0 * d) * p.kernels(x)[1]);
        assert!(matches!(s.solve_checked(&rhs, 1e-2), Err(Error::Inconsistent(_))));
        let sol = s.solve(&rhs).unwrap();
        assert!((sol.multipliers[0] - 1.0).abs() < 1e-2, "{:?}", sol.multipliers);
        let ok = s.grid.sample(|x| (-(x[0] * x[0] + x[1] * x[1])).exp());
        // keep only the part the multipliers do not absorb
        let sol = s.solve(&ok).unwrap();
        let ok = s.apply_with_ghost(&sol.eta, sol.ghost_mean);
        assert!(s.solve_checked(&ok, 1e-2).is_ok());
    }

    #[test]
    fn round_trip_recovers_a_constrained_function() {
        let alpha = Complex64::new(0.25, -0.1);
        let s = solver(Rational::integer(2), alpha, 32);
        let raw = s.grid.sample(|x| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            (x[0] - 0.5 * x[1] + 0.2) / (1.0 + r2).powi(2)
        });
        // project onto E_alpha by solving once, then rebuild the right-hand side
        let w = s.solve(&raw).unwrap();
        let rhs = s.apply_with_ghost(&w.eta, w.ghost_mean);
        let back = s.solve(&rhs).unwrap();
        let err = back.eta.iter().zip(&w.eta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
        assert!(back.multipliers.iter().all(|t| t.abs() < 1e-8));
        let (c, _) = far_field(&s.grid, &w.eta, w.ghost_mean);
        assert!(c.is_finite());
    }
}
