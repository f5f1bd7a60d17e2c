//! Picard iteration `(xi, eta) <- (L1^{-1} g1, L2^{-1} T g2)` from `(0, 0)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{norm_h2_values, norm_x_values, WeightParams};

use super::linear::{L1Solver, L2Solver};
use super::residual::MixedProblem;

#[derive(Debug, Clone, Copy, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct PicardOptions {
    /// Tolerance on the successive-difference norm, relative to
    /// `1 + ||xi|| + ||eta||`.
    pub tol: f64,
    pub max_iter: usize,
    /// Radius `M0` of the ball `||xi|| + ||eta|| <= M0`.
    pub ball_radius: f64,
    /// Consecutive growing differences that count as divergence; steps
    /// within ten tolerances of convergence do not count.
    pub divergence_steps: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions { tol: 1e-9, max_iter: 200, ball_radius: 1e3, divergence_steps: 3 }
    }
}

/// One application of the map.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub ghost_mean: f64,
    /// Projection coefficients `c_j` removed from `g2`.
    pub multipliers: Vec<f64>,
}

/// Fixed point together with its iteration record.
#[derive(Debug, Clone, Serialize)]
pub struct IterationState {
    #[serde(skip)]
    pub xi: Vec<f64>,
    #[serde(skip)]
    pub eta: Vec<f64>,
    pub ghost_mean: f64,
    pub multipliers: Vec<f64>,
    pub iterations: usize,
    /// Successive-difference norms, one per step.
    pub differences: Vec<f64>,
    pub norm_xi: f64,
    pub norm_eta: f64,
}

impl IterationState {
    /// Largest ratio of successive differences over the tail of the run,
    /// ignoring steps already at round-off level.
    pub fn contraction_factor(&self) -> f64 {
        let d = &self.differences;
        let floor = 1e3 * f64::EPSILON * (1.0 + self.norm_xi + self.norm_eta);
        d.windows(2)
            .filter(|w| w[1] > floor)
            .map(|w| w[1] / w[0])
            .fold(0.0, f64::max)
    }
}

/// Generic driver. `norms` returns `(||xi||, ||eta||)`.
pub fn iterate<S, N>(n_xi: usize, n_eta: usize, mut step: S, norms: N, opts: &PicardOptions) -> Result<IterationState>
where
    S: FnMut(&[f64], &[f64]) -> Result<StepOutput>,
    N: Fn(&[f64], &[f64]) -> (f64, f64),
{
    let mut xi = vec![0.0; n_xi];
    let mut eta = vec![0.0; n_eta];
    let mut diffs: Vec<f64> = vec![];
    let mut growing = 0;
    for it in 1..=opts.max_iter {
        let out = step(&xi, &eta)?;
        let dx: Vec<f64> = out.xi.iter().zip(&xi).map(|(a, b)| a - b).collect();
        let de: Vec<f64> = out.eta.iter().zip(&eta).map(|(a, b)| a - b).collect();
        let (nx, ne) = norms(&dx, &de);
        let diff = nx + ne;
        if !diff.is_finite() {
            return Err(Error::NonFinite(format!("Picard step {it}")));
        }
        xi = out.xi;
        eta = out.eta;
        let (norm_xi, norm_eta) = norms(&xi, &eta);
        let scale = 1.0 + norm_xi + norm_eta;
        if diffs.last().is_some_and(|&p| diff > p) && diff > 10.0 * opts.tol * scale {
            growing += 1;
        } else {
            growing = 0;
        }
        diffs.push(diff);
        if norm_xi + norm_eta > opts.ball_radius {
            return Err(Error::BallViolation { norm: norm_xi + norm_eta, radius: opts.ball_radius });
        }
        if growing >= opts.divergence_steps {
            return Err(Error::PicardDivergence(it));
        }
        if diff <= opts.tol * scale {
            return Ok(IterationState {
                xi,
                eta,
                ghost_mean: out.ghost_mean,
                multipliers: out.multipliers,
                iterations: it,
                differences: diffs,
                norm_xi,
                norm_eta,
            });
        }
    }
    Err(Error::NoConvergence(opts.max_iter))
}

/// Linear solvers and node data for one `(eps, alpha)`.
pub struct MixedSystem<'a> {
    pub problem: &'a MixedProblem,
    pub l1: &'a L1Solver,
    pub l2: &'a L2Solver,
    pub weight: WeightParams,
}

impl MixedSystem<'_> {
    /// The map `Gamma(xi, eta)`.
    pub fn step(&self, xi: &[f64], eta: &[f64]) -> Result<StepOutput> {
        let g1 = self.problem.g1(xi, eta)?;
        let g2 = self.problem.g2(xi, eta)?;
        let new_xi = self.l1.solve(&g1)?;
        let sol = self.l2.solve(&g2)?;
        Ok(StepOutput { xi: new_xi, eta: sol.eta, ghost_mean: sol.ghost_mean, multipliers: sol.multipliers })
    }

    pub fn norms(&self, xi: &[f64], eta: &[f64]) -> (f64, f64) {
        (
            norm_h2_values(&self.problem.grids.x, xi),
            norm_x_values(&self.problem.grids.y, eta, self.weight),
        )
    }

    pub fn solve(&self, opts: &PicardOptions) -> Result<IterationState> {
        let n = self.problem.len();
        iterate(n, n, |a, b| self.step(a, b), |a, b| self.norms(a, b), opts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norms(a: &[f64], b: &[f64]) -> (f64, f64) {
        (a.iter().map(|v| v * v).sum::<f64>().sqrt(), b.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    #[test]
    fn linear_contraction_converges_to_its_fixed_point() {
        // x <- 0.5 x + 1 has fixed point 2
        let st = iterate(
            2,
            1,
            |x, e| Ok(StepOutput {
                xi: x.iter().map(|v| 0.5 * v + 1.0).collect(),
                eta: e.iter().map(|v| 0.25 * v - 1.0).collect(),
                ghost_mean: 0.0,
                multipliers: vec![],
            }),
            norms,
            &PicardOptions::default(),
        )
        .unwrap();
        // the stop is relative: the error is below tol * (1 + |xi| + |eta|)
        let bound = 1e-9 * (1.0 + st.norm_xi + st.norm_eta);
        assert!((st.xi[0] - 2.0).abs() < bound);
        assert!((st.eta[0] + 4.0 / 3.0).abs() < bound);
        assert!((st.contraction_factor() - 0.5).abs() < 0.05, "{}", st.contraction_factor());
    }

    #[test]
    fn expanding_map_is_reported() {
        let opts = PicardOptions { ball_radius: 1e9, ..Default::default() };
        let r = iterate(
            1,
            1,
            |x, e| Ok(StepOutput { xi: vec![2.0 * x[0] + 1.0], eta: e.to_vec(), ghost_mean: 0.0, multipliers: vec![] }),
            norms,
            &opts,
        );
        assert!(matches!(r, Err(Error::PicardDivergence(_))));
    }

    #[test]
    fn leaving_the_ball_is_reported() {
        let opts = PicardOptions { ball_radius: 1.0, ..Default::default() };
        let r = iterate(
            1,
            1,
            |x, e| Ok(StepOutput { xi: vec![0.5 * x[0] + 3.0], eta: e.to_vec(), ghost_mean: 0.0, multipliers: vec![] }),
            norms,
            &opts,
        );
        assert!(matches!(r, Err(Error::BallViolation { .. })));
    }
}

#[cfg(test)]
mod mixed_tests {
    use std::sync::Arc;

    use num_complex::Complex64;

    use super::*;
    use crate::liouville::LiouvilleProfile;
    use crate::model::GaugeModel;
    use crate::solver::residual::ScaleGrids;
    use crate::topological::{solve_with_options, TopoOptions};

    #[test]
    fn radial_three_halves_contracts() {
        let model = GaugeModel::new(1, 1, vec![[0.0, 0.0]], vec![]).unwrap();
        let topo = Arc::new(solve_with_options(&model.p_points, &TopoOptions::default(), true).unwrap());
        let mut out = vec![];
        for eps in [0.04, 0.02, 0.01] {
            let grids = ScaleGrids::new(&topo.grid, eps, 40.0).unwrap();
            let p = MixedProblem::new(&model, topo.clone(), grids, Complex64::new(0.0, 0.0)).unwrap();
            let l1 = L1Solver::new(p.grids.x.clone(), &p.fprime).unwrap();
            let prof = LiouvilleProfile::for_model(&model, Complex64::new(0.0, 0.0)).unwrap();
            let l2 = L2Solver::new(p.grids.y.clone(), &prof, WeightParams::default()).unwrap();
            let sys = MixedSystem { problem: &p, l1: &l1, l2: &l2, weight: WeightParams::default() };
            let st = sys.solve(&PicardOptions::default()).unwrap();
            assert!(st.contraction_factor() < 0.5, "{}", st.contraction_factor());
            out.push(st);
        }
        for w in out.windows(2) {
            let r = w[0].norm_xi / w[1].norm_xi;
            assert!((1.7..=2.3).contains(&r), "xi ratio {r}");
            let q = w[0].norm_eta / w[1].norm_eta;
            assert!((0.5..=2.0).contains(&q), "eta ratio {q}");
        }
    }
}

