//! Assembled solution `(u1, u2)` and checks made on it.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::DiskGrid;
use crate::topological::{f_eval, linear_fit};

use super::linear::{far_field, L2Solver};
use super::picard::IterationState;
use super::residual::MixedProblem;

/// Largest residuals of the two equations after direct substitution.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CollocationReport {
    /// First equation on the x-nodes.
    pub eq1: f64,
    /// Second equation, in the `y = eps x` scaling, on the y-nodes.
    pub eq2: f64,
}

impl CollocationReport {
    pub fn max(&self) -> f64 {
        self.eq1.max(self.eq2)
    }
}

/// Fixed point together with what is needed to evaluate it.
pub struct MixedSolution {
    pub problem: Arc<MixedProblem>,
    pub l2: Arc<L2Solver>,
    pub state: IterationState,
}

impl std::fmt::Debug for MixedSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MixedSolution(eps = {}, iterations = {})", self.problem.eps, self.state.iterations)
    }
}

impl MixedSolution {
    pub fn eps(&self) -> f64 {
        self.problem.eps
    }

    /// `u1 = V1 + eps^2 xi` at the x-nodes.
    pub fn u1_nodes(&self) -> Vec<f64> {
        let e2 = self.eps() * self.eps();
        (0..self.problem.len()).map(|k| self.problem.v1[k] + e2 * self.state.xi[k]).collect()
    }

    /// `u2 = V2 + 2 ln eps - (b/2) eps^2 xi + eps^2 eta(eps x)` at the x-nodes.
    pub fn u2_nodes(&self) -> Vec<f64> {
        let p = &self.problem;
        let e2 = p.eps * p.eps;
        let b = p.model.bf();
        (0..p.len())
            .map(|k| p.v2[k] + 2.0 * p.eps.ln() - 0.5 * b * e2 * self.state.xi[k] + e2 * self.state.eta[k])
            .collect()
    }

    /// `(c, d)` with `eta ~ c ln|y| + d` beyond the y-grid.
    pub fn eta_far_field(&self) -> (f64, f64) {
        far_field(&self.problem.grids.y, &self.state.eta, self.state.ghost_mean)
    }

    pub fn xi_at(&self, x: [f64; 2]) -> f64 {
        self.problem.grids.x.interpolate(&self.state.xi, x).unwrap_or(0.0)
    }

    pub fn eta_at(&self, y: [f64; 2]) -> f64 {
        self.problem.grids.y.interpolate(&self.state.eta, y).unwrap_or_else(|| {
            let (c, d) = self.eta_far_field();
            c * y[0].hypot(y[1]).ln() + d
        })
    }

    pub fn u1_at(&self, x: [f64; 2]) -> f64 {
        let e2 = self.eps() * self.eps();
        self.problem.approx.v1(x) + e2 * self.xi_at(x)
    }

    pub fn u2_at(&self, x: [f64; 2]) -> f64 {
        let e = self.eps();
        let b = self.problem.model.bf();
        self.problem.approx.v2(x) + 2.0 * e.ln() - 0.5 * b * e * e * self.xi_at(x)
            + e * e * self.eta_at([e * x[0], e * x[1]])
    }

    /// Substitutes `(u1, u2)` into both equations. Analytic pieces use their
    /// exact Laplacians, `U` its discrete equation, `xi` and `eta` the
    /// discrete Laplacian of their own solves.
    pub fn collocation_residual(&self) -> CollocationReport {
        let p = &self.problem;
        let (a, b) = (p.model.af(), p.model.bf());
        let e = p.eps;
        let e2 = e * e;
        let xg = &p.grids.x;
        let lap_xi = xg.laplacian(&self.state.xi, Some(&vec![0.0; xg.n_theta]));
        let l2 = self.l2.apply_with_ghost(&self.state.eta, self.state.ghost_mean);
        let u1 = self.u1_nodes();
        let u2 = self.u2_nodes();
        let mut eq1: f64 = 0.0;
        let mut eq2: f64 = 0.0;
        for k in 0..p.len() {
            let lap_u1 = -f_eval(p.u[k]) + e2 * p.lap_phi[k] + e2 * lap_xi[k];
            let r1 = lap_u1 + 2.0 * u1[k].exp() - a * u2[k].exp() - 4.0 * (2.0 * u1[k]).exp()
                + 2.0 * a * (2.0 * u2[k]).exp()
                - a * (b - 2.0) * (u1[k] + u2[k]).exp();
            eq1 = eq1.max(r1.abs());
            // (b/2) u1 + u2 = W* + b ln P + 2 ln Q - (b/2) ln 2 + eps^2 eta, so its
            // y-Laplacian away from the vortices is -K e^W + eps^2 Lap eta
            let lap_eta = l2[k] - self.l2.potential[k] * self.state.eta[k];
            let lap_comb = -p.approx.profile.coupling() * p.exp_w[k] + e2 * lap_eta;
            let (h1, h2) = (u1[k], u2[k] - 2.0 * e.ln());
            let nl = 0.5 * h2.exp() - e2 * (2.0 * h2).exp() + 0.5 * b * (h1 + h2).exp();
            let r2 = lap_comb + (4.0 - a * b) * nl;
            eq2 = eq2.max(r2.abs());
        }
        CollocationReport { eq1, eq2 }
    }

    /// Flux exponent from the x-nodes whose y-image lies in `[r_lo, r_hi]`.
    pub fn beta_on_grid(&self, r_lo: f64, r_hi: f64) -> Result<f64> {
        let u2 = self.u2_nodes();
        beta_from_rings(&self.problem.grids.x, &u2, r_lo / self.eps(), r_hi / self.eps())
    }

    /// Default annulus: the outer quarter-to-full range of the y-grid.
    pub fn beta(&self) -> Result<f64> {
        let r = self.problem.grids.y.r_max();
        self.beta_on_grid(0.25 * r, r)
    }

    /// `sup |(u2 + (b/2) U)(y/eps) - 2 ln eps - W(y)|` over y-nodes with `r_lo <= |y| <= r_hi`.
    pub fn rescaled_profile_error(&self, r_lo: f64, r_hi: f64) -> f64 {
        let p = &self.problem;
        let b = p.model.bf();
        let u2 = self.u2_nodes();
        let yg = &p.grids.y;
        let mut m: f64 = 0.0;
        for k in 0..p.len() {
            let r = yg.r(k / yg.n_theta);
            if r >= r_lo && r <= r_hi {
                m = m.max((u2[k] + 0.5 * b * p.u[k] - 2.0 * p.eps.ln() - p.w[k]).abs());
            }
        }
        m
    }

    /// `sup |u1 + ln 2 - U|` over the x-nodes.
    pub fn core_deviation(&self) -> f64 {
        let u1 = self.u1_nodes();
        (0..u1.len())
            .map(|k| (u1[k] + std::f64::consts::LN_2 - self.problem.u[k]).abs())
            .fold(0.0, f64::max)
    }

    /// `max |u1 + ln 2|` on the outermost x-ring.
    pub fn far_u1_deviation(&self) -> f64 {
        let xg = &self.problem.grids.x;
        let u1 = self.u1_nodes();
        let last = xg.n_r() - 1;
        (0..xg.n_theta)
            .map(|j| (u1[xg.idx(last, j)] + std::f64::consts::LN_2).abs())
            .fold(0.0, f64::max)
    }
}

/// Least-squares slope of ring means of `u` against `-2 ln r` over the grid
/// rings with `r_lo <= r <= r_hi`.
pub fn beta_from_rings(grid: &DiskGrid, u: &[f64], r_lo: f64, r_hi: f64) -> Result<f64> {
    let means = grid.ring_means(u);
    let mut xs = vec![];
    let mut ys = vec![];
    for (i, m) in means.iter().enumerate() {
        let r = grid.r(i);
        if r >= r_lo && r <= r_hi {
            xs.push(-2.0 * r.ln());
            ys.push(*m);
        }
    }
    if xs.len() < 3 {
        return Err(Error::EmptyAnnulus(format!("[{r_lo:.3e}, {r_hi:.3e}] holds {} rings", xs.len())));
    }
    Ok(linear_fit(&xs, &ys).0)
}

/// Least-squares `beta` in `u ~ -2 beta ln|x| + c` from `n_rings` log-spaced
/// rings of `n_angles` uniform angles in `[r_lo, r_hi]`.
pub fn extract_beta<F: Fn([f64; 2]) -> f64>(u: F, r_lo: f64, r_hi: f64, n_rings: usize, n_angles: usize) -> Result<f64> {
    if !(r_lo > 0.0 && r_hi > r_lo) || n_rings < 3 || n_angles == 0 {
        return Err(Error::EmptyAnnulus(format!("[{r_lo}, {r_hi}] with {n_rings} rings")));
    }
    let mut xs = Vec::with_capacity(n_rings);
    let mut ys = Vec::with_capacity(n_rings);
    for i in 0..n_rings {
        let r = r_lo * (r_hi / r_lo).powf(i as f64 / (n_rings - 1) as f64);
        let mean = (0..n_angles)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / n_angles as f64;
                u([r * t.cos(), r * t.sin()])
            })
            .sum::<f64>()
            / n_angles as f64;
        xs.push(-2.0 * r.ln());
        ys.push(mean);
    }
    Ok(linear_fit(&xs, &ys).0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_logarithm_is_recovered() {
        let f = |x: [f64; 2]| -2.0 * 2.75 * x[0].hypot(x[1]).ln() + 1.3;
        let b = extract_beta(f, 10.0, 40.0, 12, 8).unwrap();
        assert!((b - 2.75).abs() < 1e-10);
        let b2 = extract_beta(f, 15.0, 60.0, 12, 8).unwrap();
        assert!((b - b2).abs() < 1e-10);
    }

    #[test]
    fn angular_modes_average_out() {
        let f = |x: [f64; 2]| -3.0 * x[0].hypot(x[1]).ln() + x[0] / x[0].hypot(x[1]);
        let b = extract_beta(f, 5.0, 50.0, 10, 16).unwrap();
        assert!((b - 1.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_annulus_is_rejected() {
        assert!(extract_beta(|_| 0.0, 2.0, 1.0, 10, 4).is_err());
        assert!(extract_beta(|_| 0.0, 1.0, 2.0, 2, 4).is_err());
    }
}
