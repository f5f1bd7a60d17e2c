//! Orchestration of one mixed-type solve.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::WeightParams;
use crate::model::GaugeModel;
use crate::topological::{f_prime, smallest_singular_value, solve_with_options, TopoOptions, TopologicalSolution};

use super::assemble::{CollocationReport, MixedSolution};
use super::linear::{L1Solver, L2Solver};
use super::picard::{MixedSystem, PicardOptions};
use super::radial::{solve_lambda_one, LambdaOneSolution, RadialOptions};
use super::reduction::{delta_leading_coefficient, newton_alpha, AlphaOptions, AlphaSolve};
use super::residual::{MixedProblem, ScaleGrids};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub topo: TopoOptions,
    pub radial: RadialOptions,
    pub picard: PicardOptions,
    pub alpha: AlphaOptions,
    /// Radius of the y-grid for the general path.
    pub r_y: f64,
    /// Weight exponent `d` of the spaces `X`, `Y`.
    pub weight_d: f64,
    /// Largest accepted collocation residual.
    pub residual_tol: f64,
    /// Use one angle when every vortex sits at the origin.
    pub radial_fast_path: bool,
    /// Fail on unsupported cases and degenerate backgrounds instead of warning.
    pub strict: bool,
    /// Estimate the smallest singular value of `Lap + f'(U)`.
    pub check_nondegeneracy: bool,
    pub nondegeneracy_threshold: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            topo: TopoOptions::default(),
            radial: RadialOptions::default(),
            picard: PicardOptions::default(),
            alpha: AlphaOptions::default(),
            r_y: 40.0,
            weight_d: 0.1,
            residual_tol: 1e-6,
            radial_fast_path: true,
            strict: false,
            check_nondegeneracy: false,
            nondegeneracy_threshold: 1e-3,
        }
    }
}

impl SolverOptions {
    pub fn weight(&self) -> Result<WeightParams> {
        WeightParams::new(self.weight_d)
    }
}

/// Shared state for one `(model, eps)`: background, grids and `L1`.
pub struct MixedContext {
    pub model: GaugeModel,
    pub eps: f64,
    pub opts: SolverOptions,
    pub topo: Arc<TopologicalSolution>,
    pub grids: ScaleGrids,
    pub l1: L1Solver,
}

impl std::fmt::Debug for MixedContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MixedContext(eps = {}, nodes = {})", self.eps, self.grids.len())
    }
}

impl MixedContext {
    /// Uses one angle when the fast path is on and every vortex is at the origin.
    pub fn new(model: &GaugeModel, eps: f64, opts: &SolverOptions) -> Result<Self> {
        let axisymmetric = opts.radial_fast_path && model.all_at_origin();
        Self::with_layout(model, eps, opts, axisymmetric)
    }

    pub fn with_layout(model: &GaugeModel, eps: f64, opts: &SolverOptions, axisymmetric: bool) -> Result<Self> {
        model.reject_excluded_case()?;
        if axisymmetric && !model.all_at_origin() {
            return Err(Error::InvalidParameter("one-angle grids need every vortex at the origin".into()));
        }
        let topo = Arc::new(solve_with_options(&model.p_points, &opts.topo, axisymmetric)?);
        Self::with_topology(model, eps, opts, topo)
    }

    pub fn with_topology(model: &GaugeModel, eps: f64, opts: &SolverOptions, topo: Arc<TopologicalSolution>) -> Result<Self> {
        let grids = ScaleGrids::new(&topo.grid, eps, opts.r_y)?;
        let n = grids.len();
        let pot: Vec<f64> = (0..n)
            .map(|k| f_prime(if k < topo.u.len() { topo.u[k] } else { 0.0 }))
            .collect();
        let l1 = L1Solver::new(grids.x.clone(), &pot)?;
        Ok(MixedContext { model: model.clone(), eps, opts: opts.clone(), topo, grids, l1 })
    }

    /// Fixed point `(xi, eta)` for a given `alpha`.
    pub fn solve_at(&self, alpha: Complex64) -> Result<MixedSolution> {
        let weight = self.opts.weight()?;
        let problem = Arc::new(MixedProblem::new(&self.model, self.topo.clone(), self.grids.clone(), alpha)?);
        let l2 = Arc::new(L2Solver::new(self.grids.y.clone(), &problem.approx.profile, weight)?);
        let state = MixedSystem { problem: &problem, l1: &self.l1, l2: &l2, weight }.solve(&self.opts.picard)?;
        Ok(MixedSolution { problem, l2, state })
    }

    /// `int g2(xi, eta) Z_alpha` at the fixed point for `alpha`.
    pub fn reduced_map(&self, alpha: Complex64) -> Result<Complex64> {
        Ok(reduced_value(&self.solve_at(alpha)?))
    }
}

/// `int g2 Z_alpha` at a computed fixed point.
pub fn reduced_value(sol: &MixedSolution) -> Complex64 {
    let g2 = sol
        .problem
        .g2(&sol.state.xi, &sol.state.eta)
        .expect("remainder was finite during the iteration");
    sol.problem.project_z(&g2)
}

/// How `alpha` was chosen.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaChoice {
    /// `lambda` is not an integer, so `alpha = 0`.
    NonInteger,
    /// Every vortex is at the origin; `alpha = 0` by symmetry.
    Symmetric,
    /// Chosen by Newton on the reduced map.
    Newton(AlphaSolve),
    /// The vortex-free radial path has no `alpha`.
    Radial,
}

/// Picks `alpha(eps)` according to the case analysis and returns the final fixed point.
pub fn solve_alpha(ctx: &MixedContext, warnings: &mut Vec<String>) -> Result<(AlphaChoice, MixedSolution)> {
    let zero = Complex64::new(0.0, 0.0);
    let lambda = ctx.model.lambda;
    if lambda.as_natural().is_none() {
        return Ok((AlphaChoice::NonInteger, ctx.solve_at(zero)?));
    }
    if ctx.model.all_at_origin() {
        return Ok((AlphaChoice::Symmetric, ctx.solve_at(zero)?));
    }
    if lambda.as_natural() == Some(2) {
        let msg = "lambda = 2 with separated vortices is outside the proven cases";
        if ctx.opts.strict {
            return Err(Error::Unsupported(msg.into()));
        }
        warnings.push(msg.into());
    }
    let s = newton_alpha(|a| ctx.reduced_map(a), zero, &ctx.opts.alpha)?;
    let sol = ctx.solve_at(s.alpha_c())?;
    if let Ok(c) = delta_leading_coefficient(&ctx.model) {
        let ratio = s.jacobian_ratio(c);
        if s.iterations > 0 && !(0.5..=2.0).contains(&ratio) {
            warnings.push(format!("reduced Jacobian differs from the leading coefficient by the factor {ratio:.3}"));
        }
    }
    Ok((AlphaChoice::Newton(s), sol))
}

/// Summary of one solve, serialized as the JSON report.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub eps: f64,
    pub a: u32,
    pub b: u32,
    pub n1: usize,
    pub n2: usize,
    pub lambda: String,
    pub layout: String,
    pub alpha: [f64; 2],
    pub alpha_choice: AlphaChoice,
    pub reduced_map: [f64; 2],
    pub iterations: usize,
    pub differences: Vec<f64>,
    pub contraction_factor: f64,
    pub norm_xi: f64,
    pub norm_eta: f64,
    pub multipliers: Vec<f64>,
    pub eta_log_coefficient: f64,
    pub beta: f64,
    pub beta_target: f64,
    pub collocation: CollocationReport,
    pub core_deviation: f64,
    pub far_u1_deviation: f64,
    pub rescaled_profile_error: Option<f64>,
    pub smallest_singular_value: Option<f64>,
    pub warnings: Vec<String>,
    pub grid_hashes: Vec<String>,
}

/// Either kind of converged solution.
#[derive(Debug)]
pub enum Solved {
    General(MixedSolution),
    LambdaOne(LambdaOneSolution),
}

#[derive(Debug)]
pub struct MixedOutcome {
    pub solution: Solved,
    pub report: SolveReport,
}

fn check_residual(c: &CollocationReport, opts: &SolverOptions) -> Result<()> {
    if c.max() > opts.residual_tol || !c.max().is_finite() {
        return Err(Error::ResidualCheck(c.max()));
    }
    Ok(())
}

/// Full pipeline for one `eps`: case selection, fixed point, `alpha`, checks.
pub fn solve_mixed(model: &GaugeModel, eps: f64, opts: &SolverOptions) -> Result<MixedOutcome> {
    model.reject_excluded_case()?;
    let mut warnings = vec![];
    if model.lambda.as_natural() == Some(1) {
        let sol = solve_lambda_one(model, eps, &opts.radial, &opts.picard, opts.weight()?)?;
        let collocation = sol.collocation_residual();
        check_residual(&collocation, opts)?;
        let report = SolveReport {
            eps,
            a: model.a,
            b: model.b,
            n1: 0,
            n2: 0,
            lambda: model.lambda.to_string(),
            layout: "axisymmetric".into(),
            alpha: [0.0, 0.0],
            alpha_choice: AlphaChoice::Radial,
            reduced_map: [0.0, 0.0],
            iterations: sol.state.iterations,
            differences: sol.state.differences.clone(),
            contraction_factor: sol.state.contraction_factor(),
            norm_xi: sol.state.norm_xi,
            norm_eta: sol.state.norm_eta,
            multipliers: sol.state.multipliers.clone(),
            eta_log_coefficient: sol.eta_far_field().0,
            beta: sol.beta()?,
            beta_target: model.beta_limit(),
            collocation,
            core_deviation: sol.u1_deviation(),
            far_u1_deviation: sol.u1_deviation(),
            rescaled_profile_error: None,
            smallest_singular_value: None,
            warnings,
            grid_hashes: vec![sol.problem.grids.x.hash(), sol.problem.grids.y.hash()],
        };
        return Ok(MixedOutcome { solution: Solved::LambdaOne(sol), report });
    }
    let ctx = MixedContext::new(model, eps, opts)?;
    let sigma_min = if opts.check_nondegeneracy || opts.strict {
        let pot: Vec<f64> = ctx.topo.u.iter().map(|&t| f_prime(t)).collect();
        let s = smallest_singular_value(&ctx.topo.grid, &pot)?;
        if s < opts.nondegeneracy_threshold {
            if opts.strict {
                return Err(Error::Degenerate(s));
            }
            warnings.push(format!("smallest singular value of the linearized background is {s:.3e}"));
        }
        Some(s)
    } else {
        None
    };
    let (choice, sol) = solve_alpha(&ctx, &mut warnings)?;
    let collocation = sol.collocation_residual();
    check_residual(&collocation, opts)?;
    let f = if model.lambda.is_integer() { reduced_value(&sol) } else { Complex64::new(0.0, 0.0) };
    let alpha = sol.problem.alpha();
    let report = SolveReport {
        eps,
        a: model.a,
        b: model.b,
        n1: model.n1(),
        n2: model.n2(),
        lambda: model.lambda.to_string(),
        layout: if ctx.grids.x.is_axisymmetric() { "axisymmetric" } else { "two-dimensional" }.into(),
        alpha: [alpha.re, alpha.im],
        alpha_choice: choice,
        reduced_map: [f.re, f.im],
        iterations: sol.state.iterations,
        differences: sol.state.differences.clone(),
        contraction_factor: sol.state.contraction_factor(),
        norm_xi: sol.state.norm_xi,
        norm_eta: sol.state.norm_eta,
        multipliers: sol.state.multipliers.clone(),
        eta_log_coefficient: sol.eta_far_field().0,
        beta: sol.beta()?,
        beta_target: model.beta_limit(),
        collocation,
        core_deviation: sol.core_deviation(),
        far_u1_deviation: sol.far_u1_deviation(),
        rescaled_profile_error: Some(sol.rescaled_profile_error(0.5, 2.0)),
        smallest_singular_value: sigma_min,
        warnings,
        grid_hashes: vec![ctx.topo.grid.hash(), ctx.grids.x.hash(), ctx.grids.y.hash()],
    };
    Ok(MixedOutcome { solution: Solved::General(sol), report })
}
