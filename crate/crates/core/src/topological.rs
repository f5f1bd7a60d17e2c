//! Topological solution `U` of the U(1) Chern-Simons-Higgs equation
//! `Lap U + e^U (1 - e^U) = 4 pi sum delta_{p_j}`, `U -> 0` at infinity.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{DiskGrid, RadialGrid};
use crate::linalg::{SparseLu, TripletList};
use crate::model::Point;

/// `e^t (1 - e^t)`.
pub fn f_eval(t: f64) -> f64 {
    let e = t.exp();
    e * (1.0 - e)
}

/// `e^t - 2 e^{2t}`.
pub fn f_prime(t: f64) -> f64 {
    let e = t.exp();
    e - 2.0 * e * e
}

/// Background `u0 = sum ln(|x-p|^2 / (1+|x-p|^2))` and the smooth source
/// `g = sum 4 / (1+|x-p|^2)^2`, with `Lap u0 = sum 4 pi delta_p - g`.
pub fn background(points: &[Point], x: [f64; 2]) -> (f64, f64) {
    let mut u0 = 0.0;
    let mut g = 0.0;
    for p in points {
        let d2 = (x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2);
        u0 += d2.ln() - d2.ln_1p();
        g += 4.0 / (1.0 + d2).powi(2);
    }
    (u0, g)
}

/// Sampled background on a grid.
pub fn build_background(points: &[Point], grid: &DiskGrid) -> (Vec<f64>, Vec<f64>) {
    grid.points().into_iter().map(|x| background(points, x)).unzip()
}

#[derive(Debug, Clone, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct TopoOptions {
    /// Stretched-coordinate step.
    pub h: f64,
    /// Radial stretch scale `c` in `r = c sinh t`.
    pub scale: f64,
    pub n_theta: usize,
    /// Outer radius; `None` means `30 + 2 max|p|`.
    pub r_out: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for TopoOptions {
    fn default() -> Self {
        TopoOptions {
            h: 0.01,
            scale: 4.0,
            n_theta: 64,
            r_out: None,
            tol: 1e-10,
            max_iter: 50,
        }
    }
}

impl TopoOptions {
    pub fn outer_radius(&self, points: &[Point]) -> f64 {
        let m = points.iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max);
        self.r_out.unwrap_or(30.0 + 2.0 * m)
    }

    /// Builds the grid; a single angle when every vortex sits at the origin
    /// and `radial_fast_path` is set.
    pub fn grid(&self, points: &[Point], radial_fast_path: bool) -> Result<Arc<DiskGrid>> {
        let radial = RadialGrid::covering(self.outer_radius(points), self.h, self.scale)?;
        let coincident = points.iter().all(|p| p[0] == 0.0 && p[1] == 0.0);
        Ok(Arc::new(if radial_fast_path && coincident {
            DiskGrid::axisymmetric(radial)
        } else {
            DiskGrid::new(radial, self.n_theta)?
        }))
    }
}

#[derive(Debug, Clone)]
pub struct TopologicalSolution {
    pub grid: Arc<DiskGrid>,
    pub points: Vec<Point>,
    pub u0: Vec<f64>,
    pub g: Vec<f64>,
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub flux: f64,
    pub residual_history: Vec<f64>,
}

fn residual(grid: &DiskGrid, u0: &[f64], g: &[f64], v: &[f64], ghost: &[f64]) -> Vec<f64> {
    let lap = grid.laplacian(v, Some(ghost));
    (0..v.len())
        .map(|k| lap[k] + f_eval(u0[k] + v[k]) - g[k])
        .collect()
}

fn weighted_norm(grid: &DiskGrid, r: &[f64]) -> f64 {
    grid.dot(r, r).sqrt()
}

/// Factorizes `Lap + diag(potential)` with homogeneous Dirichlet data.
pub fn factor_operator(grid: &DiskGrid, potential: &[f64]) -> Result<SparseLu> {
    let mut t = TripletList::new(grid.len());
    for (i, j, v) in grid.laplacian_entries() {
        t.add(i, j, v);
    }
    for (k, &p) in potential.iter().enumerate() {
        t.add(k, k, p);
    }
    SparseLu::factor(t)
}

/// Ghost data `v = -u0` on the Dirichlet ring, so that `U = 0` there.
pub fn boundary_ghost(points: &[Point], grid: &DiskGrid) -> Vec<f64> {
    crate::liouville::ghost_ring(grid, |x| -background(points, x).0)
}

/// Newton iteration with Armijo backtracking on `Lap v + f(u0 + v) = g`
/// with `U = u0 + v = 0` on the outer ring.
pub fn solve_topological(points: &[Point], grid: Arc<DiskGrid>, tol: f64, max_iter: usize) -> Result<TopologicalSolution> {
    if grid.n_r() < 3 {
        return Err(Error::GridTooCoarse("topological solve needs three rings".into()));
    }
    let (u0, g) = build_background(points, &grid);
    let n = grid.len();
    let ghost = boundary_ghost(points, &grid);
    let mut v = vec![0.0; n];
    let mut res = residual(&grid, &u0, &g, &v, &ghost);
    let mut norm = weighted_norm(&grid, &res);
    let mut history = vec![norm];
    let mut it = 0;
    while norm > tol {
        if it >= max_iter {
            return Err(Error::NewtonDivergence { iterations: it, residual: norm });
        }
        it += 1;
        let pot: Vec<f64> = (0..n).map(|k| f_prime(u0[k] + v[k])).collect();
        let lu = factor_operator(&grid, &pot)?;
        let rhs: Vec<f64> = res.iter().map(|r| -r).collect();
        let dv = lu.solve_refined(&rhs, 1);
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..=30 {
            let trial: Vec<f64> = v.iter().zip(&dv).map(|(a, b)| a + step * b).collect();
            let r = residual(&grid, &u0, &g, &trial, &ghost);
            let nn = weighted_norm(&grid, &r);
            if nn.is_finite() && nn <= (1.0 - 1e-4 * step) * norm {
                v = trial;
                res = r;
                norm = nn;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        history.push(norm);
        if !accepted {
            if norm <= 10.0 * tol {
                break;
            }
            return Err(Error::NewtonDivergence { iterations: it, residual: norm });
        }
    }
    let u: Vec<f64> = u0.iter().zip(&v).map(|(a, b)| a + b).collect();
    let fu: Vec<f64> = u.iter().map(|&t| f_eval(t)).collect();
    let flux = grid.integrate(&fu) / (4.0 * PI);
    Ok(TopologicalSolution {
        grid,
        points: points.to_vec(),
        u0,
        g,
        v,
        u,
        flux,
        residual_history: history,
    })
}

/// Convenience wrapper building the grid from options.
pub fn solve_with_options(points: &[Point], opts: &TopoOptions, radial_fast_path: bool) -> Result<TopologicalSolution> {
    let grid = opts.grid(points, radial_fast_path)?;
    solve_topological(points, grid, opts.tol, opts.max_iter)
}

impl TopologicalSolution {
    pub fn n1(&self) -> usize {
        self.points.len()
    }

    /// Smooth correction `v = U - u0`; beyond the grid `U = 0`.
    pub fn v_at(&self, x: [f64; 2]) -> f64 {
        self.grid
            .interpolate(&self.v, x)
            .unwrap_or_else(|| -background(&self.points, x).0)
    }

    pub fn u_at(&self, x: [f64; 2]) -> f64 {
        background(&self.points, x).0 + self.v_at(x)
    }

    pub fn max_u(&self) -> f64 {
        self.u.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().unwrap_or(&f64::NAN)
    }

    /// Least-squares slope of `ln|U|` against `|x|` on the far annulus.
    pub fn decay_fit(&self) -> Result<f64> {
        let rp = self.points.iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max);
        let r_lo = rp + 4.0;
        let r_hi = self.grid.radial.r_boundary - 8.0;
        let mut xs = vec![];
        let mut ys = vec![];
        for k in 0..self.grid.len() {
            let r = self.grid.r(k / self.grid.n_theta);
            let a = self.u[k].abs();
            if r >= r_lo && r <= r_hi && a > 1e-12 {
                xs.push(r);
                ys.push(a.ln());
            }
        }
        if xs.len() < 3 {
            return Err(Error::EmptyAnnulus(format!("[{r_lo:.2}, {r_hi:.2}] with |U| > 1e-12")));
        }
        Ok(linear_fit(&xs, &ys).0)
    }
}

/// Ordinary least squares `y ~ slope x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Smallest singular value of `Lap + diag(potential)` (Dirichlet), measured
/// in the quadrature-weighted `L^2` inner product, by inverse iteration.
pub fn smallest_singular_value(grid: &DiskGrid, potential: &[f64]) -> Result<f64> {
    let lu = factor_operator(grid, potential)?;
    let d: Vec<f64> = grid.weights().to_vec();
    let sq: Vec<f64> = d.iter().map(|w| w.sqrt()).collect();
    let n = grid.len();
    // B = D^{1/2} A D^{-1/2}; iterate x <- B^{-1} B^{-T} x
    let mut x: Vec<f64> = (0..n).map(|k| 1.0 + 0.1 * ((k * 7919 % 101) as f64 / 101.0)).collect();
    let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.iter_mut().for_each(|v| *v /= nx);
    let mut est = 0.0;
    for it in 0..300 {
        let y0: Vec<f64> = (0..n).map(|k| x[k] * sq[k]).collect();
        let y1 = lu.solve_transpose(&y0);
        let y: Vec<f64> = (0..n).map(|k| y1[k] / sq[k]).collect();
        let z0: Vec<f64> = (0..n).map(|k| y[k] / sq[k]).collect();
        let z1 = lu.solve(&z0);
        let z: Vec<f64> = (0..n).map(|k| z1[k] * sq[k]).collect();
        let rq: f64 = x.iter().zip(&z).map(|(a, b)| a * b).sum();
        if !rq.is_finite() || rq <= 0.0 {
            return Err(Error::SingularSystem("inverse iteration broke down".into()));
        }
        let nz = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        x = z.into_iter().map(|v| v / nz).collect();
        let new = 1.0 / rq.sqrt();
        if it > 5 && (new - est).abs() <= 1e-9 * new {
            return Ok(new);
        }
        est = new;
    }
    Ok(est)
}

#[derive(Debug, Clone, Serialize)]
pub struct NondegeneracyReport {
    pub value: f64,
    pub refined_value: f64,
    pub ratio: f64,
    pub resolutions: Vec<(usize, usize)>,
}

impl NondegeneracyReport {
    pub fn stable(&self) -> bool {
        self.value > 0.0 && (0.8..=1.25).contains(&self.ratio)
    }
}

/// Smallest singular value of `Lap + f'(U)` on the solution grid and on a
/// grid refined once (half step, twice the angles), re-solving `U` there.
pub fn nondegeneracy_estimate(sol: &TopologicalSolution) -> Result<NondegeneracyReport> {
    let g = &sol.grid;
    let pot: Vec<f64> = sol.u.iter().map(|&t| f_prime(t)).collect();
    let value = smallest_singular_value(g, &pot)?;
    let h = g.radial.h / 2.0;
    let radial = RadialGrid::covering(g.radial.r_boundary, h, g.radial.scale)?;
    let fine = Arc::new(if g.is_axisymmetric() {
        DiskGrid::axisymmetric(radial)
    } else {
        DiskGrid::new(radial, 2 * g.n_theta)?
    });
    let sol2 = solve_topological(&sol.points, fine.clone(), 1e-10, 50)?;
    let pot2: Vec<f64> = sol2.u.iter().map(|&t| f_prime(t)).collect();
    let refined_value = smallest_singular_value(&fine, &pot2)?;
    Ok(NondegeneracyReport {
        value,
        refined_value,
        ratio: refined_value / value,
        resolutions: vec![(g.n_r(), g.n_theta), (fine.n_r(), fine.n_theta)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_examples() {
        assert_eq!(f_eval(0.0), 0.0);
        assert_eq!(f_prime(0.0), -1.0);
        assert!(f_eval(-40.0) < 1e-17);
        assert!((f_eval((0.5f64).ln()) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn background_single_vortex() {
        let (u0, g) = background(&[[0.0, 0.0]], [1.0, 0.0]);
        assert!((u0 - (0.5f64).ln()).abs() < 1e-15);
        assert!((g - 1.0).abs() < 1e-15);
        let (u0, g) = background(&[], [1.0, 2.0]);
        assert_eq!((u0, g), (0.0, 0.0));
        let (a, _) = background(&[[0.5, 0.0]], [0.5 + 1e-4, 0.0]);
        assert!((a - 2.0 * (1e-4f64).ln()).abs() < 1e-6);
    }

    #[test]
    fn background_source_integral() {
        let g = DiskGrid::new(RadialGrid::covering(200.0, 0.04, 1.0).unwrap(), 8).unwrap();
        let (_, src) = build_background(&[[0.0, 0.0]], &g);
        let total = g.integrate(&src);
        assert!((total - 4.0 * PI).abs() < 1e-3, "{total}");
    }

    #[test]
    fn no_vortices_gives_zero() {
        let opts = TopoOptions { h: 0.05, ..Default::default() };
        let s = solve_with_options(&[], &opts, true).unwrap();
        assert!(s.v.iter().all(|&v| v == 0.0));
        assert_eq!(s.flux, 0.0);
        assert!(matches!(s.decay_fit(), Err(Error::EmptyAnnulus(_))));
    }

    #[test]
    fn single_vortex_radial() {
        let opts = TopoOptions { h: 0.01, ..Default::default() };
        let s = solve_with_options(&[[0.0, 0.0]], &opts, true).unwrap();
        assert!((s.flux - 1.0).abs() < 1e-3, "flux {}", s.flux);
        assert!(s.max_u() <= 1e-8);
        for w in s.u.windows(2) {
            assert!(w[1] >= w[0] - 1e-8);
        }
        let slope = s.decay_fit().unwrap();
        assert!((-1.15..=-0.85).contains(&slope), "{slope}");
    }

    #[test]
    fn manufactured_zero_mode() {
        let mut vals = vec![];
        for &h in &[0.04, 0.02] {
            let g = DiskGrid::axisymmetric(RadialGrid::covering(8.0, h, 1.0).unwrap());
            let pot: Vec<f64> = (0..g.len()).map(|k| 4.0 - 4.0 * g.r(k).powi(2)).collect();
            vals.push(smallest_singular_value(&g, &pot).unwrap());
        }
        assert!(vals[1] < vals[0] && vals[1] < 1e-3, "{vals:?}");
    }
}
