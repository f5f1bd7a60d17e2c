//! Radial construction without vortices (`lambda = 1`).
//!
//! Here `u1 = -ln 2 + eps xi` and `u2 = W0(eps r) + 2 ln eps - (b/2) eps xi
//! + eps eta(eps r)`, with `L1 = Lap - 1` and `L2 = Lap + K e^{W0}`.

use std::f64::consts::LN_2;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::WeightParams;
use crate::liouville::LiouvilleProfile;
use crate::model::GaugeModel;

use super::assemble::{beta_from_rings, CollocationReport};
use super::linear::{far_field, L1Solver, L2Solver};
use super::picard::{iterate, IterationState, PicardOptions, StepOutput};
use super::residual::{em, ScaleGrids, EXP_GUARD};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct RadialOptions {
    /// Stretched-coordinate step.
    pub h: f64,
    pub scale: f64,
    /// Radius of the y-grid.
    pub r_y: f64,
}

impl Default for RadialOptions {
    fn default() -> Self {
        RadialOptions { h: 0.002, scale: 1.0, r_y: 1e4 }
    }
}

/// Node data for one `eps`.
#[derive(Debug, Clone)]
pub struct LambdaOneProblem {
    pub model: GaugeModel,
    pub eps: f64,
    pub grids: ScaleGrids,
    pub profile: LiouvilleProfile,
    pub w0: Vec<f64>,
    pub exp_w0: Vec<f64>,
}

fn checked_exp(t: f64, context: &'static str) -> Result<f64> {
    if t > EXP_GUARD {
        return Err(Error::Overflow { value: t, context });
    }
    Ok(t.exp())
}

impl LambdaOneProblem {
    pub fn new(model: &GaugeModel, eps: f64, opts: &RadialOptions) -> Result<Self> {
        if model.n1() != 0 || model.n2() != 0 {
            return Err(Error::InvalidParameter("the radial lambda = 1 path needs N1 = N2 = 0".into()));
        }
        let grids = ScaleGrids::plain(opts.h, opts.scale, 1, eps, opts.r_y)?;
        let profile = LiouvilleProfile::for_model(model, Complex64::new(0.0, 0.0))?;
        let mut w0 = Vec::with_capacity(grids.len());
        for k in 0..grids.len() {
            w0.push(profile.eval_w(grids.y.point(k))?);
        }
        let exp_w0 = w0.iter().map(|w| w.exp()).collect();
        Ok(LambdaOneProblem { model: model.clone(), eps, grids, profile, w0, exp_w0 })
    }

    pub fn len(&self) -> usize {
        self.w0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w0.is_empty()
    }

    /// Right-hand side of `(Lap - 1) xi = h1`.
    pub fn h1(&self, xi: &[f64], eta: &[f64]) -> Result<Vec<f64>> {
        let (a, b, e) = (self.model.af(), self.model.bf(), self.eps);
        (0..self.len())
            .map(|k| {
                let t = e * xi[k];
                let s1 = self.w0[k] - 0.5 * b * t + e * eta[k];
                let s2 = self.w0[k] + 0.5 * (2.0 - b) * t + e * eta[k];
                let e1 = checked_exp(s1, "h1: e^{W0 + R1}")?;
                let e2 = checked_exp(s2, "h1: e^{W0 + R2}")?;
                Ok((em(2.0 * t) - em(t)) / e + a * e * e1 + 0.5 * a * (b - 2.0) * e * e2 - 2.0 * a * e * e * e * e1 * e1)
            })
            .collect()
    }

    /// Right-hand side of `(Lap + K e^{W0}) eta = h2`.
    pub fn h2(&self, xi: &[f64], eta: &[f64]) -> Result<Vec<f64>> {
        let (a, b, e) = (self.model.af(), self.model.bf(), self.eps);
        let gap = 4.0 - a * b;
        (0..self.len())
            .map(|k| {
                let s = e * eta[k];
                let r1 = -0.5 * b * e * xi[k] + s;
                let r2 = 0.5 * (2.0 - b) * e * xi[k] + s;
                let ew = self.exp_w0[k];
                let e1 = checked_exp(self.w0[k] + r1, "h2: e^{W0 + R1}")?;
                checked_exp(self.w0[k] + r2, "h2: e^{W0 + R2}")?;
                let d1 = ew * (r1.exp_m1() - s);
                let d2 = ew * (r2.exp_m1() - s);
                Ok(-gap / e * (0.5 * d1 + 0.25 * b * d2) + gap * e * e1 * e1)
            })
            .collect()
    }
}

/// Converged radial solution.
pub struct LambdaOneSolution {
    pub problem: Arc<LambdaOneProblem>,
    pub l2: Arc<L2Solver>,
    pub state: IterationState,
}

impl std::fmt::Debug for LambdaOneSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "LambdaOneSolution(eps = {}, iterations = {})", self.problem.eps, self.state.iterations)
    }
}

pub fn solve_lambda_one(
    model: &GaugeModel,
    eps: f64,
    opts: &RadialOptions,
    picard: &PicardOptions,
    weight: WeightParams,
) -> Result<LambdaOneSolution> {
    let p = LambdaOneProblem::new(model, eps, opts)?;
    let l1 = L1Solver::new(p.grids.x.clone(), &vec![-1.0; p.len()])?;
    let l2 = L2Solver::new(p.grids.y.clone(), &p.profile, weight)?;
    let (xg, yg) = (p.grids.x.clone(), p.grids.y.clone());
    let state = iterate(
        p.len(),
        p.len(),
        |xi, eta| {
            let xi_new = l1.solve(&p.h1(xi, eta)?)?;
            let sol = l2.solve(&p.h2(xi, eta)?)?;
            Ok(StepOutput { xi: xi_new, eta: sol.eta, ghost_mean: sol.ghost_mean, multipliers: sol.multipliers })
        },
        |xi, eta| {
            (
                crate::grid::norm_h2_values(&xg, xi),
                crate::grid::norm_x_values(&yg, eta, weight),
            )
        },
        picard,
    )?;
    Ok(LambdaOneSolution { problem: Arc::new(p), l2: Arc::new(l2), state })
}

impl LambdaOneSolution {
    pub fn eps(&self) -> f64 {
        self.problem.eps
    }

    pub fn u1_nodes(&self) -> Vec<f64> {
        self.state.xi.iter().map(|x| -LN_2 + self.eps() * x).collect()
    }

    pub fn u2_nodes(&self) -> Vec<f64> {
        let p = &self.problem;
        let (b, e) = (p.model.bf(), p.eps);
        (0..p.len())
            .map(|k| p.w0[k] + 2.0 * e.ln() - 0.5 * b * e * self.state.xi[k] + e * self.state.eta[k])
            .collect()
    }

    /// Radial coordinates of the x-nodes.
    pub fn radii(&self) -> Vec<f64> {
        self.problem.grids.x.radial.r().to_vec()
    }

    pub fn eta_far_field(&self) -> (f64, f64) {
        far_field(&self.problem.grids.y, &self.state.eta, self.state.ghost_mean)
    }

    /// Direct substitution into both equations, as for the general path.
    pub fn collocation_residual(&self) -> CollocationReport {
        let p = &self.problem;
        let (a, b, e) = (p.model.af(), p.model.bf(), p.eps);
        let lap_xi = p.grids.x.laplacian(&self.state.xi, Some(&[0.0]));
        let l2 = self.l2.apply_with_ghost(&self.state.eta, self.state.ghost_mean);
        let u1 = self.u1_nodes();
        let u2 = self.u2_nodes();
        let k_coupling = p.profile.coupling();
        let mut eq1: f64 = 0.0;
        let mut eq2: f64 = 0.0;
        for k in 0..p.len() {
            let r1 = e * lap_xi[k] + 2.0 * u1[k].exp() - a * u2[k].exp() - 4.0 * (2.0 * u1[k]).exp()
                + 2.0 * a * (2.0 * u2[k]).exp()
                - a * (b - 2.0) * (u1[k] + u2[k]).exp();
            eq1 = eq1.max(r1.abs());
            let lap_eta = l2[k] - self.l2.potential[k] * self.state.eta[k];
            let h2 = u2[k] - 2.0 * e.ln();
            let r2 = -k_coupling * p.exp_w0[k]
                + e * lap_eta
                + (4.0 - a * b) * (0.5 * h2.exp() - e * e * (2.0 * h2).exp() + 0.5 * b * (u1[k] + h2).exp());
            eq2 = eq2.max(r2.abs());
        }
        CollocationReport { eq1, eq2 }
    }

    /// Flux exponent fitted over the outer part `[r_max / 4, r_max]` of the y-grid.
    pub fn beta(&self) -> Result<f64> {
        let r = self.problem.grids.y.r_max();
        self.beta_on_grid(0.25 * r, r)
    }

    pub fn beta_on_grid(&self, r_lo: f64, r_hi: f64) -> Result<f64> {
        let e = self.eps();
        beta_from_rings(&self.problem.grids.x, &self.u2_nodes(), r_lo / e, r_hi / e)
    }

    /// `sup |u1 + ln 2| = eps sup |xi|`.
    pub fn u1_deviation(&self) -> f64 {
        self.eps() * self.state.xi.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn su3() -> GaugeModel {
        GaugeModel::new(1, 1, vec![], vec![]).unwrap()
    }

    #[test]
    fn vortex_free_model_is_required() {
        let m = GaugeModel::new(1, 1, vec![[0.0, 0.0]], vec![]).unwrap();
        assert!(LambdaOneProblem::new(&m, 0.05, &RadialOptions::default()).is_err());
    }

    #[test]
    fn remainders_vanish_to_leading_order_at_zero() {
        let p = LambdaOneProblem::new(&su3(), 0.05, &RadialOptions { h: 0.01, ..Default::default() }).unwrap();
        let z = vec![0.0; p.len()];
        let h2 = p.h2(&z, &z).unwrap();
        // only the quadratic term survives: (4 - ab) eps e^{2 W0}
        for k in (0..p.len()).step_by(50) {
            let expect = 3.0 * 0.05 * (2.0 * p.w0[k]).exp();
            assert!((h2[k] - expect).abs() < 1e-14 * expect.max(1.0));
        }
    }

    #[test]
    fn picard_converges_and_beta_approaches_two() {
        let opts = RadialOptions { h: 0.004, ..Default::default() };
        let s = solve_lambda_one(&su3(), 0.05, &opts, &PicardOptions::default(), WeightParams::default()).unwrap();
        assert!(s.state.contraction_factor() < 0.5);
        let res = s.collocation_residual();
        assert!(res.max() < 1e-6, "{res:?}");
        let beta = s.beta().unwrap();
        assert!((beta - 2.0).abs() < 0.05, "{beta}");
        assert!(s.u1_deviation() < 0.1);
    }
}

