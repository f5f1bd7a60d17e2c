//! Property checks shared by the `verify` command and the acceptance tests.
//!
//! Each check returns a [`CheckOutcome`] holding the measured quantities,
//! the pass flag (which includes the runtime budget) and one summary line.

use std::f64::consts::{LN_2, PI};
use std::time::Instant;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::error::Result;
use crate::grid::{norm_y_values, sigma, DiskGrid, RadialGrid, WeightParams};
use crate::liouville::{
    gram_matrix, kernel_annihilation_check, liouville_residual, mass, max_on_annulus, LiouvilleProfile, Projector,
};
use crate::model::{GaugeModel, Point, Rational, ADMISSIBLE_PAIRS};
use crate::solver::{
    cross_check, delta_leading_coefficient, solve_lambda_one, solve_mixed, AlphaChoice, MixedContext, PicardOptions, RadialOptions, ShootOptions, SolutionType, SolverOptions,
};
use crate::topological::{solve_with_options, TopoOptions};

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub seconds: f64,
    pub budget_seconds: f64,
    /// Measured quantities, one per line.
    pub details: Vec<String>,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {} {} {} ({:.1} s of {:.0} s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.seconds,
            self.budget_seconds
        )
    }
}

/// Accumulates conditions and details while a check runs.
struct Recorder {
    id: u8,
    title: &'static str,
    budget: f64,
    start: Instant,
    ok: bool,
    details: Vec<String>,
}

impl Recorder {
    fn new(id: u8, title: &'static str, budget: f64) -> Self {
        Recorder { id, title, budget, start: Instant::now(), ok: true, details: vec![] }
    }

    fn require(&mut self, cond: bool, what: String) {
        self.ok &= cond;
        self.details.push(format!("{} {what}", if cond { "ok  " } else { "FAIL" }));
    }

    fn note(&mut self, what: String) {
        self.details.push(format!("     {what}"));
    }

    fn fail(&mut self, what: String) {
        self.require(false, what);
    }

    fn finish(self) -> CheckOutcome {
        let seconds = self.start.elapsed().as_secs_f64();
        let mut details = self.details;
        let in_time = seconds <= self.budget;
        if !in_time {
            details.push(format!("FAIL runtime {seconds:.1} s exceeds {:.0} s", self.budget));
        }
        CheckOutcome {
            id: self.id,
            title: self.title,
            passed: self.ok && in_time,
            seconds,
            budget_seconds: self.budget,
            details,
        }
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.abs().ln()).collect();
    crate::topological::linear_fit(&lx, &ly).0
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn lambdas() -> [Rational; 4] {
    [Rational::integer(1), Rational::new(3, 2), Rational::integer(2), Rational::integer(3)]
}

/// Total Liouville mass against `8 pi lambda`.
pub fn liouville_mass() -> CheckOutcome {
    let mut rec = Recorder::new(1, "Liouville mass", 10.0);
    let grid = match RadialGrid::covering(100.0, 0.01, 1.0).and_then(|r| DiskGrid::new(r, 64)) {
        Ok(g) => g,
        Err(e) => {
            rec.fail(format!("grid: {e}"));
            return rec.finish();
        }
    };
    let mut worst: f64 = 0.0;
    for (a, b) in ADMISSIBLE_PAIRS {
        for lam in lambdas() {
            for alpha in [c(0.0, 0.0), c(0.2, 0.0), c(0.0, 0.2)] {
                if alpha.norm() > 0.0 && !lam.is_integer() {
                    continue;
                }
                match LiouvilleProfile::new(0.0, alpha, lam, a, b) {
                    Ok(p) => {
                        let rel = mass(&p, &grid) / (8.0 * PI * lam.to_f64()) - 1.0;
                        worst = worst.max(rel.abs());
                        if rel.abs() > 1e-3 {
                            rec.fail(format!("(a,b)=({a},{b}) lambda={lam} alpha={alpha}: relative error {rel:.3e}"));
                        }
                    }
                    Err(e) => rec.fail(format!("profile ({a},{b}) lambda={lam}: {e}")),
                }
            }
        }
    }
    rec.require(worst <= 1e-3, format!("max relative mass error {worst:.3e} <= 1e-3"));
    rec.finish()
}

fn halving_grids(h: f64, n_theta: usize, r_out: f64) -> Result<[DiskGrid; 2]> {
    Ok([
        DiskGrid::new(RadialGrid::covering(r_out, h, 1.0)?, n_theta)?,
        DiskGrid::new(RadialGrid::covering(r_out, 0.5 * h, 1.0)?, 2 * n_theta)?,
    ])
}

/// Observed order of the Liouville residual and of `L2 Z_j` under halving.
pub fn liouville_orders() -> CheckOutcome {
    let mut rec = Recorder::new(2, "Liouville residual and kernel orders", 30.0);
    let grids = match halving_grids(0.04, 32, 30.0) {
        Ok(g) => g,
        Err(e) => {
            rec.fail(format!("grid: {e}"));
            return rec.finish();
        }
    };
    let w = WeightParams::default();
    let (r_lo, r_hi) = (0.5, 3.0);
    for (lam, alpha) in [
        (Rational::integer(1), c(0.0, 0.0)),
        (Rational::new(3, 2), c(0.0, 0.0)),
        (Rational::integer(2), c(0.2, 0.0)),
        (Rational::integer(3), c(0.0, 0.2)),
    ] {
        let run = |rec: &mut Recorder| -> Result<()> {
            let p = LiouvilleProfile::new(0.0, alpha, lam, 1, 2)?;
            let res: Vec<f64> = grids
                .iter()
                .map(|g| Ok(max_on_annulus(g, &liouville_residual(&p, g)?, r_lo, r_hi)))
                .collect::<Result<_>>()?;
            let order = (res[0] / res[1]).log2();
            rec.require(
                (1.6..=2.4).contains(&order),
                format!("lambda={lam} alpha={alpha}: W residual {:.2e} -> {:.2e}, order {order:.3}", res[0], res[1]),
            );
            for j in 0..p.kernel_dim() {
                let k: Vec<f64> = grids
                    .iter()
                    .map(|g| kernel_annihilation_check(&p, j, g, w, r_lo))
                    .collect::<Result<_>>()?;
                let order = (k[0] / k[1]).log2();
                rec.require(
                    (1.6..=2.4).contains(&order),
                    format!("lambda={lam} alpha={alpha}: L2 Z_{j} {:.2e} -> {:.2e}, order {order:.3}", k[0], k[1]),
                );
            }
            Ok(())
        };
        if let Err(e) = run(&mut rec) {
            rec.fail(format!("lambda={lam}: {e}"));
        }
    }
    rec.finish()
}

/// A random field: either node noise or a few Gaussian bumps, scaled to
/// decay like `sigma^{-2}`.
fn random_field(rng: &mut StdRng, grid: &DiskGrid, smooth: bool) -> Vec<f64> {
    if smooth {
        let bumps: Vec<([f64; 2], f64, f64)> = (0..5)
            .map(|_| {
                let centre = [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)];
                (centre, rng.random_range(0.3..3.0), rng.random_range(-1.0..1.0))
            })
            .collect();
        grid.sample(|x| {
            bumps
                .iter()
                .map(|(p, s, a)| a * (-((x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2)) / (s * s)).exp())
                .sum::<f64>()
        })
    } else {
        (0..grid.len()).map(|k| rng.random_range(-1.0..1.0) * sigma(grid.point(k)).powi(-2)).collect()
    }
}

/// Gram symmetry at `alpha = 0`, orthogonality, idempotence and the
/// measured bound of `T_alpha` on `Y`.
pub fn projection_algebra() -> CheckOutcome {
    let mut rec = Recorder::new(3, "projection algebra", 30.0);
    let grid = match RadialGrid::covering(40.0, 0.05, 1.0).and_then(|r| DiskGrid::new(r, 32)) {
        Ok(g) => g,
        Err(e) => {
            rec.fail(format!("grid: {e}"));
            return rec.finish();
        }
    };
    let w = WeightParams::default();
    let mut rng = StdRng::seed_from_u64(0x5eed);
    for lam in [Rational::integer(2), Rational::integer(3)] {
        match gram_matrix(c(0.0, 0.0), lam, w, &grid) {
            Ok(a) => rec.require(
                a[0][1].abs() <= 1e-10 && a[1][0].abs() <= 1e-10,
                format!("lambda={lam}: a12(0) = {:.2e}, a21(0) = {:.2e}", a[0][1], a[1][0]),
            ),
            Err(e) => rec.fail(format!("lambda={lam}: {e}")),
        }
        for alpha in [c(0.0, 0.0), c(0.2, 0.0), c(0.0, -0.2)] {
            let proj = match Projector::new(alpha, lam, w, &grid) {
                Ok(p) => p,
                Err(e) => {
                    rec.fail(format!("lambda={lam} alpha={alpha}: {e}"));
                    continue;
                }
            };
            let (mut orth, mut idem, mut bound): (f64, f64, f64) = (0.0, 0.0, 0.0);
            for k in 0..100 {
                let h = random_field(&mut rng, &grid, k % 2 == 0);
                let nh = norm_y_values(&grid, &h, w);
                let (th, _) = proj.project(&grid, &h);
                let nth = norm_y_values(&grid, &th, w);
                for z in &proj.z {
                    let zn = grid.dot(z, z).sqrt();
                    orth = orth.max(grid.dot(&th, z).abs() / (zn * nth.max(1e-300)));
                }
                let (tth, _) = proj.project(&grid, &th);
                let diff: Vec<f64> = tth.iter().zip(&th).map(|(a, b)| a - b).collect();
                idem = idem.max(norm_y_values(&grid, &diff, w) / nth.max(1e-300));
                bound = bound.max(nth / nh);
            }
            rec.require(orth <= 1e-8, format!("lambda={lam} alpha={alpha}: orthogonality {orth:.2e}"));
            rec.require(idem <= 1e-10, format!("lambda={lam} alpha={alpha}: idempotence {idem:.2e}"));
            rec.require(bound <= 10.0, format!("lambda={lam} alpha={alpha}: ||T|| >= {bound:.3} over 100 fields"));
        }
    }
    rec.finish()
}

fn on_circle(n: usize, radius: f64) -> Vec<Point> {
    (0..n)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            [radius * t.cos(), radius * t.sin()]
        })
        .collect()
}

/// Far out `U` is below the truncation error of `u0 + v`, so the sign test
/// allows this much; the excursions shrink like `h^2`.
pub const SIGN_TOLERANCE: f64 = 1e-8;

/// Sign, flux and decay of `U`; radial and two-dimensional solves agree.
pub fn topological_solver() -> CheckOutcome {
    let mut rec = Recorder::new(4, "topological solver", 120.0);
    let opts = TopoOptions::default();
    for n in 1..=3usize {
        let mut cases: Vec<(&str, Vec<Point>, bool)> =
            vec![("coincident, radial", vec![[0.0, 0.0]; n], true), ("coincident, 2D", vec![[0.0, 0.0]; n], false)];
        if n > 1 {
            cases.push(("separated", on_circle(n, 1.5), false));
        }
        let mut radial_u: Option<Vec<f64>> = None;
        for (label, pts, fast) in cases {
            let sol = match solve_with_options(&pts, &opts, fast) {
                Ok(s) => s,
                Err(e) => {
                    rec.fail(format!("N1={n} {label}: {e}"));
                    continue;
                }
            };
            let decay = sol.decay_fit().unwrap_or(f64::NAN);
            let ok = sol.max_u() <= SIGN_TOLERANCE && (sol.flux - n as f64).abs() <= 1e-3 && (-1.15..=-0.85).contains(&decay);
            rec.require(
                ok,
                format!("N1={n} {label}: max U {:.2e}, flux {:.6}, decay {decay:.4}", sol.max_u(), sol.flux),
            );
            if fast {
                radial_u = Some(sol.u.clone());
            } else if let (Some(ur), true) = (&radial_u, label.starts_with("coincident")) {
                let nt = sol.grid.n_theta;
                let gap = (0..sol.u.len()).map(|k| (sol.u[k] - ur[k / nt]).abs()).fold(0.0, f64::max);
                rec.require(gap <= 1e-4, format!("N1={n}: radial vs 2D sup gap {gap:.2e}"));
            }
        }
    }
    rec.finish()
}

/// Radial `lambda = 1` ladder: convergence, residual, `beta -> 2`, `u1 -> -ln 2`.
pub fn lambda_one_ladder() -> CheckOutcome {
    let mut rec = Recorder::new(5, "mixed solution, lambda = 1", 60.0);
    let model = GaugeModel::new(1, 1, vec![], vec![]).expect("SU(3)");
    let opts = SolverOptions::default();
    let eps = [0.05, 0.025, 0.0125];
    let mut gaps = vec![];
    let mut devs = vec![];
    for e in eps {
        match solve_mixed(&model, e, &opts) {
            Ok(out) => {
                let r = &out.report;
                rec.require(
                    r.collocation.max() <= 1e-6,
                    format!(
                        "eps={e}: {} Picard steps, residual {:.2e}, beta-2 = {:.4e}, sup|u1+ln2| = {:.3e}",
                        r.iterations,
                        r.collocation.max(),
                        r.beta - 2.0,
                        r.core_deviation
                    ),
                );
                gaps.push(r.beta - 2.0);
                devs.push(r.core_deviation);
            }
            Err(e2) => rec.fail(format!("eps={e}: {e2}")),
        }
    }
    if gaps.len() == eps.len() {
        let slope = loglog_slope(&eps, &gaps);
        rec.require((1.6..=2.4).contains(&slope), format!("|beta-2| log-log slope {slope:.3}"));
        rec.require(devs.windows(2).all(|w| w[1] < w[0]), "sup|u1+ln2| decreases along the ladder".into());
    }
    rec.finish()
}

/// Generic `lambda = 3` configuration without symmetry after centering.
pub fn generic_lambda_three_model() -> GaugeModel {
    GaugeModel::new(1, 1, vec![[0.5, 0.3], [-0.4, 0.2]], vec![[0.1, -0.6]]).expect("SU(3) configuration")
}

/// `alpha(eps) = O(eps)`, `beta -> bN1/2 + N2 + 2` at rate two, and the
/// rescaled second component approaching `W_alpha` on `0.5 <= |y| <= 2`.
pub fn generic_ladder() -> CheckOutcome {
    let mut rec = Recorder::new(6, "mixed solution, generic lambda = 3", 600.0);
    let model = generic_lambda_three_model();
    let opts = SolverOptions::default();
    let eps = [0.02, 0.01, 0.005];
    let (mut alphas, mut gaps, mut errs) = (vec![], vec![], vec![]);
    for e in eps {
        match solve_mixed(&model, e, &opts) {
            Ok(out) => {
                let r = &out.report;
                let newton = matches!(r.alpha_choice, AlphaChoice::Newton(_));
                let err = r.rescaled_profile_error.unwrap_or(f64::NAN);
                rec.require(
                    newton && r.collocation.max() <= 1e-6,
                    format!(
                        "eps={e}: alpha = ({:.3e}, {:.3e}), |F| = {:.1e}, beta - {} = {:.4e}, rescaled error {err:.3e}, residual {:.1e}",
                        r.alpha[0],
                        r.alpha[1],
                        r.reduced_map[0].hypot(r.reduced_map[1]),
                        r.beta_target,
                        r.beta - r.beta_target,
                        r.collocation.max()
                    ),
                );
                for w in &r.warnings {
                    rec.note(format!("warning: {w}"));
                }
                alphas.push(r.alpha[0].hypot(r.alpha[1]));
                gaps.push(r.beta - r.beta_target);
                errs.push(err);
            }
            Err(e2) => rec.fail(format!("eps={e}: {e2}")),
        }
    }
    if alphas.len() == eps.len() {
        let sa = loglog_slope(&eps, &alphas);
        rec.require((0.8..=1.2).contains(&sa), format!("|alpha(eps)| log-log slope {sa:.3}"));
        let sb = loglog_slope(&eps, &gaps);
        rec.require((1.6..=2.4).contains(&sb), format!("|beta - target| log-log slope {sb:.3}"));
        rec.require(errs.windows(2).all(|w| w[1] < w[0]), "rescaled profile error decreases".into());
    }
    rec.finish()
}

/// `F(alpha) / alpha` at small `eps` and `|alpha|` against the leading coefficient.
pub fn reduced_map_slope() -> CheckOutcome {
    let mut rec = Recorder::new(7, "reduced-map linearization", 300.0);
    let model = GaugeModel::new(1, 2, vec![[0.0, 0.0]; 2], vec![]).expect("(1,2) model");
    let run = |rec: &mut Recorder| -> Result<()> {
        let coef = delta_leading_coefficient(&model)?;
        rec.note(format!("lambda = {}, leading coefficient {coef:.6}", model.lambda));
        let ctx = MixedContext::with_layout(&model, 1e-3, &SolverOptions::default(), false)?;
        for alpha in [c(1e-3, 0.0), c(0.0, 1e-3)] {
            let ratio = ctx.reduced_map(alpha)? / alpha;
            let rel = (ratio - coef).norm() / coef.abs();
            rec.require(
                rel <= 0.05,
                format!("alpha={alpha}: F/alpha = ({:.4}, {:.4}), relative gap {rel:.2e}", ratio.re, ratio.im),
            );
        }
        Ok(())
    };
    if let Err(e) = run(&mut rec) {
        rec.fail(format!("{e}"));
    }
    rec.finish()
}

/// `||g1(0,0)|| = O(eps)`, `||xi|| = O(eps)`, `||eta||` bounded, for `lambda = 3/2`.
pub fn scaling_ladder() -> CheckOutcome {
    let mut rec = Recorder::new(8, "scaling ladder, lambda = 3/2", 120.0);
    let model = GaugeModel::new(1, 1, vec![[0.0, 0.0]], vec![]).expect("lambda = 3/2 model");
    let opts = SolverOptions::default();
    let eps = [0.04, 0.02, 0.01];
    let mut rows = vec![];
    for e in eps {
        let run = || -> Result<(f64, f64, f64, f64)> {
            let ctx = MixedContext::new(&model, e, &opts)?;
            let sol = ctx.solve_at(c(0.0, 0.0))?;
            let p = &sol.problem;
            let z = vec![0.0; p.len()];
            let g1 = p.g1(&z, &z)?;
            let sq: Vec<f64> = g1.iter().map(|v| v * v).collect();
            Ok((p.grids.x.integrate(&sq).sqrt(), sol.state.norm_xi, sol.state.norm_eta, sol.state.contraction_factor()))
        };
        match run() {
            Ok(r) => {
                rec.note(format!(
                    "eps={e}: ||g1(0,0)|| = {:.4e}, ||xi|| = {:.4e}, ||eta|| = {:.4e}, contraction {:.3}",
                    r.0, r.1, r.2, r.3
                ));
                rows.push(r);
            }
            Err(e2) => rec.fail(format!("eps={e}: {e2}")),
        }
    }
    for w in rows.windows(2) {
        let (rg, rx, re) = (w[0].0 / w[1].0, w[0].1 / w[1].1, w[0].2 / w[1].2);
        rec.require((1.7..=2.3).contains(&rg), format!("||g1(0,0)|| halving ratio {rg:.3}"));
        rec.require((1.7..=2.3).contains(&rx), format!("||xi|| halving ratio {rx:.3}"));
        rec.require((0.5..=2.0).contains(&re), format!("||eta|| halving ratio {re:.3}"));
    }
    rec.finish()
}

/// The assembled radial solution satisfies the shooting system and is of mixed type.
pub fn shooting_cross_check() -> CheckOutcome {
    let mut rec = Recorder::new(9, "shooting cross-oracle", 60.0);
    let model = GaugeModel::new(1, 1, vec![], vec![]).expect("SU(3)");
    let sopts = ShootOptions::default();
    for e in [0.05, 0.025] {
        let run = |rec: &mut Recorder| -> Result<()> {
            let weight = SolverOptions::default().weight()?;
            let sol = solve_lambda_one(&model, e, &RadialOptions::default(), &PicardOptions::default(), weight)?;
            let cc = cross_check(&sol, 5.0, &sopts)?;
            rec.require(
                cc.residual_eq1 <= 1e-6 && cc.residual_eq2 <= 1e-6,
                format!(
                    "eps={e}: ODE residual {:.2e} / {:.2e} (eq2 in y-scaling {:.1e})",
                    cc.residual_eq1, cc.residual_eq2, cc.residual_eq2_scaled
                ),
            );
            let (k1, k2) = cc.far.slopes();
            rec.require(
                cc.classification == SolutionType::MixedI && (cc.far.u1 + LN_2).abs() <= 1e-6,
                format!(
                    "eps={e}: {:?} at r = {:.2e}: u1 + ln 2 = {:.1e}, r u1' = {k1:.1e}, r u2' = {k2:.4}",
                    cc.classification,
                    cc.far.r,
                    cc.far.u1 + LN_2
                ),
            );
            rec.require(
                cc.replay_deviation <= 1e-6,
                format!("eps={e}: integrator replay gap {:.2e} on r <= {}", cc.replay_deviation, cc.replay_radius),
            );
            Ok(())
        };
        if let Err(err) = run(&mut rec) {
            rec.fail(format!("eps={e}: {err}"));
        }
    }
    rec.finish()
}

/// Every check, in order. `quick` skips the two-dimensional ladders (6, 7).
pub fn run_all(quick: bool) -> Vec<CheckOutcome> {
    let mut out = vec![liouville_mass(), liouville_orders(), projection_algebra(), topological_solver()];
    out.push(lambda_one_ladder());
    if !quick {
        out.push(generic_ladder());
        out.push(reduced_map_slope());
    }
    out.push(scaling_ladder());
    out.push(shooting_cross_check());
    out
}
