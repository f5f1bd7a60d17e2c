//! Radial shooting for vortices placed at the origin.
//!
//! With `tau = ln r` and `u_j = 2 N_j tau + w_j`, the radial system reads
//! `w_j'' = -r^2 F_j(u)` where `Lap u_j = -F_j(u)` away from the origin.
//! Integration starts at a small `r0` from the local expansion
//! `u_j = 2 N_j ln r + s_j + o(r)`.

use ode_solvers::{Dopri5, OutputType, System, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::model::GaugeModel;

use super::radial::LambdaOneSolution;

/// Far-field type of a radial solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolutionType {
    Topological,
    NonTopological,
    /// `(u1, u2) -> (-ln 2, -inf)`.
    MixedI,
    /// `(u1, u2) -> (-inf, -ln 2)`.
    MixedII,
    Undetermined,
}

impl SolutionType {
    pub fn is_mixed(self) -> bool {
        matches!(self, SolutionType::MixedI | SolutionType::MixedII)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct ShootOptions {
    /// Starting radius of the series start.
    pub r0: f64,
    pub horizon: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Output spacing in `ln r`.
    pub output_step: f64,
    /// Integration stops once some `u_j` exceeds this value.
    pub blowup: f64,
    /// A component counts as convergent when `|r u_j'| < slope_tol`.
    pub slope_tol: f64,
    /// Distance to a limit value that counts as attained.
    pub value_tol: f64,
    /// The type must agree at `horizon` and `horizon / stability_ratio`.
    pub stability_ratio: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions {
            r0: 1e-6,
            horizon: 1e8,
            rtol: 1e-11,
            atol: 1e-13,
            output_step: 0.02,
            blowup: 20.0,
            slope_tol: 0.05,
            value_tol: 0.05,
            stability_ratio: 10.0,
        }
    }
}

/// One sample `(r, u1, u1', u2, u2')`, derivatives in `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub r: f64,
    pub u1: f64,
    pub du1: f64,
    pub u2: f64,
    pub du2: f64,
}

impl TrajectoryPoint {
    /// `r u_j'`, the logarithmic slope.
    pub fn slopes(&self) -> (f64, f64) {
        (self.r * self.du1, self.r * self.du2)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ShootingState {
    pub s1: f64,
    pub s2: f64,
    /// Last point reached.
    pub last: TrajectoryPoint,
    pub classification: SolutionType,
    /// Radius at which `u_j > blowup` stopped the run.
    pub blowup_radius: Option<f64>,
    pub trajectory: Vec<TrajectoryPoint>,
}

/// Terms `(c, m1, m2)` of `F_j = sum c e^{m1 u1 + m2 u2}`.
fn terms(model: &GaugeModel) -> [[(f64, i32, i32); 5]; 2] {
    let (a, b) = (model.af(), model.bf());
    [
        [(2.0, 1, 0), (-a, 0, 1), (-4.0, 2, 0), (2.0 * a, 0, 2), (-a * (b - 2.0), 1, 1)],
        [(2.0, 0, 1), (-b, 1, 0), (-4.0, 0, 2), (2.0 * b, 2, 0), (-b * (a - 2.0), 1, 1)],
    ]
}

/// `(F1, F2)` with `Lap u_j + F_j(u) = 0` away from the vortices.
pub fn forcing(model: &GaugeModel, u1: f64, u2: f64) -> (f64, f64) {
    let t = terms(model);
    let eval = |row: &[(f64, i32, i32); 5]| {
        row.iter().map(|&(c, m1, m2)| c * (m1 as f64 * u1 + m2 as f64 * u2).exp()).sum::<f64>()
    };
    (eval(&t[0]), eval(&t[1]))
}

struct RadialSystem {
    model: GaugeModel,
    n: [f64; 2],
    blowup: f64,
}

impl RadialSystem {
    fn new(model: &GaugeModel, blowup: f64) -> Self {
        RadialSystem { model: model.clone(), n: [model.n1() as f64, model.n2() as f64], blowup }
    }

    fn u(&self, tau: f64, y: &Vector4<f64>) -> (f64, f64) {
        (2.0 * self.n[0] * tau + y[0], 2.0 * self.n[1] * tau + y[2])
    }

    fn point(&self, tau: f64, y: &Vector4<f64>) -> TrajectoryPoint {
        let r = tau.exp();
        let (u1, u2) = self.u(tau, y);
        TrajectoryPoint { r, u1, du1: (2.0 * self.n[0] + y[1]) / r, u2, du2: (2.0 * self.n[1] + y[3]) / r }
    }

    fn state(&self, p: &TrajectoryPoint) -> Vector4<f64> {
        let tau = p.r.ln();
        Vector4::new(
            p.u1 - 2.0 * self.n[0] * tau,
            p.r * p.du1 - 2.0 * self.n[0],
            p.u2 - 2.0 * self.n[1] * tau,
            p.r * p.du2 - 2.0 * self.n[1],
        )
    }
}

impl System<f64, Vector4<f64>> for RadialSystem {
    fn system(&self, tau: f64, y: &Vector4<f64>, dy: &mut Vector4<f64>) {
        let (u1, u2) = self.u(tau, y);
        // keep the right-hand side finite past the blow-up threshold; the
        // step is discarded by solout anyway
        let (f1, f2) = forcing(&self.model, u1.min(2.0 * self.blowup), u2.min(2.0 * self.blowup));
        let r2 = (2.0 * tau).exp();
        dy[0] = y[1];
        dy[1] = -r2 * f1;
        dy[2] = y[3];
        dy[3] = -r2 * f2;
    }

    fn solout(&mut self, tau: f64, y: &Vector4<f64>, _dy: &Vector4<f64>) -> bool {
        let (u1, u2) = self.u(tau, y);
        !(u1 <= self.blowup && u2 <= self.blowup)
    }
}

/// `(w, r w')` at `r0` from the leading correction of each term:
/// `r^2 c e^{m.u} ~ C r^p` integrates to `-C r^p / p^2` in `tau`.
fn series_start(model: &GaugeModel, s1: f64, s2: f64, r0: f64) -> Vector4<f64> {
    let n = [model.n1() as f64, model.n2() as f64];
    let mut y = Vector4::new(s1, 0.0, s2, 0.0);
    for (j, row) in terms(model).iter().enumerate() {
        for &(c, m1, m2) in row {
            let (m1, m2) = (m1 as f64, m2 as f64);
            let p = 2.0 + 2.0 * (m1 * n[0] + m2 * n[1]);
            let amp = c * (m1 * s1 + m2 * s2).exp() * r0.powf(p);
            y[2 * j] -= amp / (p * p);
            y[2 * j + 1] -= amp / p;
        }
    }
    y
}

fn vortices_at_origin(model: &GaugeModel) -> Result<()> {
    if model.all_at_origin() {
        Ok(())
    } else {
        Err(Error::InvalidParameter("radial shooting needs every vortex at the origin".into()))
    }
}

/// Integrates from `(tau0, y0)` to `tau1`, keeping accepted steps at least
/// `dx` apart in `tau` plus the last one. Returns the samples and the
/// blow-up radius, if any.
fn run(
    model: &GaugeModel,
    tau0: f64,
    y0: Vector4<f64>,
    tau1: f64,
    dx: f64,
    opts: &ShootOptions,
) -> Result<(Vec<TrajectoryPoint>, Option<f64>)> {
    let probe = RadialSystem::new(model, opts.blowup);
    let mut stepper = Dopri5::new(RadialSystem::new(model, opts.blowup), tau0, tau1, dx, y0, opts.rtol, opts.atol);
    // dense output compares |tau| and misbehaves for tau < 0
    stepper.set_output(OutputType::Sparse);
    stepper.integrate().map_err(|e| Error::NonFinite(format!("radial integration: {e}")))?;
    let (taus, ys) = (stepper.x_out(), stepper.y_out());
    let n = taus.len();
    let mut points = Vec::new();
    let mut next = f64::NEG_INFINITY;
    for (k, (&tau, y)) in taus.iter().zip(ys).enumerate() {
        if tau >= next || k + 1 == n {
            points.push(probe.point(tau, y));
            next = tau + dx;
        }
    }
    let last = points.last().ok_or_else(|| Error::NonFinite("empty radial trajectory".into()))?;
    let blown = (!(last.u1 <= opts.blowup && last.u2 <= opts.blowup)).then_some(last.r);
    if !(last.u1.is_finite() && last.u2.is_finite()) && blown.is_none() {
        return Err(Error::NonFinite(format!("radial trajectory at r = {:.3e}", last.r)));
    }
    Ok((points, blown))
}

/// Type read off a single far point.
pub fn classify_point(model: &GaugeModel, p: &TrajectoryPoint, opts: &ShootOptions) -> SolutionType {
    let lim = model.limits();
    let mixed = lim.mixed_limit_u1;
    let (k1, k2) = p.slopes();
    let flat = |k: f64| k.abs() < opts.slope_tol;
    let falling = |k: f64| k <= -opts.slope_tol;
    let near = |u: f64, target: f64| (u - target).abs() < opts.value_tol;
    let near_opt = |u: f64, target: Option<f64>| target.is_some_and(|t| near(u, t));
    if flat(k1) && flat(k2) && near_opt(p.u1, lim.topological_limit_1) && near_opt(p.u2, lim.topological_limit_2) {
        SolutionType::Topological
    } else if flat(k1) && near(p.u1, mixed) && falling(k2) {
        SolutionType::MixedI
    } else if falling(k1) && flat(k2) && near(p.u2, mixed) {
        SolutionType::MixedII
    } else if falling(k1) && falling(k2) {
        SolutionType::NonTopological
    } else {
        SolutionType::Undetermined
    }
}

/// Type of a trajectory, read at its last point and at the sample nearest
/// to `r_last / stability_ratio`; both must agree.
pub fn classify_trajectory(model: &GaugeModel, traj: &[TrajectoryPoint], opts: &ShootOptions) -> SolutionType {
    let Some(last) = traj.last() else { return SolutionType::Undetermined };
    let r_in = last.r / opts.stability_ratio;
    let inner = traj.iter().min_by(|a, b| (a.r / r_in).ln().abs().total_cmp(&(b.r / r_in).ln().abs()));
    let far = classify_point(model, last, opts);
    match inner {
        Some(p) if classify_point(model, p, opts) == far => far,
        _ => SolutionType::Undetermined,
    }
}

/// Shoots from the expansion `u_j = 2 N_j ln r + s_j` out to `opts.horizon`.
pub fn radial_shoot(model: &GaugeModel, s1: f64, s2: f64, opts: &ShootOptions) -> Result<ShootingState> {
    vortices_at_origin(model)?;
    if !(s1.is_finite() && s2.is_finite()) {
        return Err(Error::InvalidParameter("shooting data must be finite".into()));
    }
    if !(opts.r0 > 0.0 && opts.horizon > opts.r0 * opts.stability_ratio && opts.stability_ratio > 1.0) {
        return Err(Error::InvalidParameter("need 0 < r0 < horizon / stability_ratio".into()));
    }
    let y0 = series_start(model, s1, s2, opts.r0);
    let (trajectory, blowup_radius) = run(model, opts.r0.ln(), y0, opts.horizon.ln(), opts.output_step, opts)?;
    let last = *trajectory.last().expect("non-empty");
    let reached = last.r >= opts.horizon * (1.0 - 1e-9);
    let classification = if blowup_radius.is_none() && reached {
        classify_trajectory(model, &trajectory, opts)
    } else {
        SolutionType::Undetermined
    };
    Ok(ShootingState { s1, s2, last, classification, blowup_radius, trajectory })
}

/// Integrates from a given point to `r_end`, sampling at each radius of
/// `samples` (increasing, all beyond `start.r`).
pub fn replay(
    model: &GaugeModel,
    start: TrajectoryPoint,
    samples: &[f64],
    opts: &ShootOptions,
) -> Result<Vec<TrajectoryPoint>> {
    vortices_at_origin(model)?;
    let sys = RadialSystem::new(model, opts.blowup);
    let mut y = sys.state(&start);
    let mut tau = start.r.ln();
    let mut out = Vec::with_capacity(samples.len());
    for &r in samples {
        let t1 = r.ln();
        if !(t1 > tau) {
            return Err(Error::InvalidParameter("replay radii must increase".into()));
        }
        let (pts, blown) = run(model, tau, y, t1, t1 - tau, opts)?;
        if let Some(rb) = blown {
            return Err(Error::Overflow { value: rb, context: "replay blew up" });
        }
        let p = *pts.last().expect("non-empty");
        y = sys.state(&p);
        tau = t1;
        out.push(p);
    }
    Ok(out)
}

/// Pointwise residual of the radial system on a stretched grid.
#[derive(Debug, Clone, Serialize)]
pub struct OdeResidual {
    pub r: Vec<f64>,
    /// `Lap u1 + F1(u)`.
    pub eq1: Vec<f64>,
    /// `Lap u2 + F2(u)`.
    pub eq2: Vec<f64>,
}

impl OdeResidual {
    pub fn max_eq1(&self) -> f64 {
        self.eq1.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_eq2(&self) -> f64 {
        self.eq2.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// First and second `t`-derivatives at interior node `i` by five-point
/// stencils; `u` is extended evenly across `t = 0`.
fn t_derivatives(u: &[f64], i: usize, h: f64) -> (f64, f64) {
    let at = |k: isize| if k < 0 { u[(-k - 1) as usize] } else { u[k as usize] };
    let i = i as isize;
    let (m2, m1, c, p1, p2) = (at(i - 2), at(i - 1), at(i), at(i + 1), at(i + 2));
    let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
    let d2 = (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * h * h);
    (d1, d2)
}

/// `Lap u + F(u)` for radial profiles sampled on `grid`, with fourth-order
/// differences in the stretched coordinate. The two outermost nodes are
/// skipped. Vortex-free profiles only.
pub fn ode_residual(model: &GaugeModel, grid: &RadialGrid, u1: &[f64], u2: &[f64]) -> Result<OdeResidual> {
    if model.n1() + model.n2() != 0 {
        return Err(Error::InvalidParameter("the residual check needs a vortex-free model".into()));
    }
    let m = grid.len();
    if u1.len() != m || u2.len() != m || m < 5 {
        return Err(Error::InvalidParameter("profile length does not match the grid".into()));
    }
    let (h, c) = (grid.h, grid.scale);
    let mut out = OdeResidual { r: vec![], eq1: vec![], eq2: vec![] };
    for i in 0..m - 2 {
        let t = grid.t()[i];
        let r = grid.r()[i];
        // r = c sinh t, so r_t = c cosh t and r_tt = r
        let rt = c * t.cosh();
        let lap = |u: &[f64]| {
            let (ut, utt) = t_derivatives(u, i, h);
            let ur = ut / rt;
            (utt - ut * r / rt) / (rt * rt) + ur / r
        };
        let (f1, f2) = forcing(model, u1[i], u2[i]);
        out.r.push(r);
        out.eq1.push(lap(u1) + f1);
        out.eq2.push(lap(u2) + f2);
    }
    Ok(out)
}

/// Shooting-side checks of an assembled radial solution.
#[derive(Debug, Clone, Serialize)]
pub struct CrossCheck {
    /// `max |Lap u1 + F1|` on the x-nodes.
    pub residual_eq1: f64,
    /// `max |Lap u2 + F2|` on the x-nodes.
    pub residual_eq2: f64,
    /// `max |Lap u2 + F2| / eps^2`, the second equation in `y = eps x`.
    pub residual_eq2_scaled: f64,
    pub far: TrajectoryPoint,
    pub classification: SolutionType,
    /// Largest gap between the integrator, started at the first node, and
    /// the assembled profile over `r <= replay_radius`.
    pub replay_deviation: f64,
    pub replay_radius: f64,
}

fn profile_point(grid: &RadialGrid, u1: &[f64], u2: &[f64], i: usize) -> TrajectoryPoint {
    let rt = grid.scale * grid.t()[i].cosh();
    let (d1, _) = t_derivatives(u1, i, grid.h);
    let (d2, _) = t_derivatives(u2, i, grid.h);
    TrajectoryPoint { r: grid.r()[i], u1: u1[i], du1: d1 / rt, u2: u2[i], du2: d2 / rt }
}

/// Residual, far-field type and short-range replay of a `lambda = 1`
/// solution. The replay stops at `replay_radius` because the mixed
/// trajectory is unstable under forward integration.
pub fn cross_check(sol: &LambdaOneSolution, replay_radius: f64, opts: &ShootOptions) -> Result<CrossCheck> {
    let p = &sol.problem;
    let grid = &p.grids.x.radial;
    let (u1, u2) = (sol.u1_nodes(), sol.u2_nodes());
    let res = ode_residual(&p.model, grid, &u1, &u2)?;
    let e2 = p.eps * p.eps;
    let m = grid.len();
    let traj: Vec<TrajectoryPoint> = (0..m - 2).map(|i| profile_point(grid, &u1, &u2, i)).collect();
    let classification = classify_trajectory(&p.model, &traj, opts);
    let start = traj[0];
    let samples: Vec<f64> = grid.r()[1..m - 2].iter().copied().take_while(|&r| r <= replay_radius).collect();
    let replayed = replay(&p.model, start, &samples, opts)?;
    let replay_deviation = replayed
        .iter()
        .enumerate()
        .map(|(k, q)| (q.u1 - u1[k + 1]).abs().max((q.u2 - u2[k + 1]).abs()))
        .fold(0.0, f64::max);
    Ok(CrossCheck {
        residual_eq1: res.max_eq1(),
        residual_eq2: res.max_eq2(),
        residual_eq2_scaled: res.max_eq2() / e2,
        far: *traj.last().expect("non-empty"),
        classification,
        replay_deviation,
        replay_radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::WeightParams;
    use crate::solver::picard::PicardOptions;
    use crate::solver::radial::{solve_lambda_one, RadialOptions};

    fn su3(n1: usize, n2: usize) -> GaugeModel {
        GaugeModel::new(1, 1, vec![[0.0, 0.0]; n1], vec![[0.0, 0.0]; n2]).unwrap()
    }

    #[test]
    fn forcing_vanishes_at_the_limit_states() {
        for (a, b) in [(1, 1), (1, 2), (1, 3)] {
            let m = GaugeModel::new(a, b, vec![], vec![]).unwrap();
            let lim = m.limits();
            let (f1, f2) = forcing(&m, lim.topological_limit_1.unwrap(), lim.topological_limit_2.unwrap());
            assert!(f1.abs() < 1e-12 && f2.abs() < 1e-12, "({a},{b}): {f1} {f2}");
            let (f1, _) = forcing(&m, lim.mixed_limit_u1, -800.0);
            assert!(f1.abs() < 1e-12);
        }
    }

    #[test]
    fn series_start_does_not_depend_on_r0() {
        let m = su3(1, 2);
        let mut ends = vec![];
        for r0 in [1e-3, 1e-4] {
            let opts = ShootOptions { r0, horizon: 0.5, stability_ratio: 2.0, ..Default::default() };
            let st = radial_shoot(&m, -1.0, -2.0, &opts).unwrap();
            ends.push(st.last);
        }
        assert!((ends[0].u1 - ends[1].u1).abs() < 1e-9, "{:?}", ends);
        assert!((ends[0].u2 - ends[1].u2).abs() < 1e-9);
        assert!((ends[0].du1 - ends[1].du1).abs() < 1e-8);
    }

    #[test]
    fn very_negative_data_is_nontopological() {
        let st = radial_shoot(&su3(0, 0), -20.0, -20.0, &ShootOptions { horizon: 1e10, ..Default::default() }).unwrap();
        assert_eq!(st.classification, SolutionType::NonTopological, "{:?}", st.last);
        // Liouville-like decay with total mass 8 pi for the diagonal Toda
        let (k1, k2) = st.last.slopes();
        assert!((k1 + 4.0).abs() < 0.05 && (k2 + 4.0).abs() < 0.05, "{k1} {k2}");
    }

    #[test]
    fn large_data_blows_up() {
        let st = radial_shoot(&su3(0, 0), 5.0, 5.0, &ShootOptions::default()).unwrap();
        assert_eq!(st.classification, SolutionType::Undetermined);
        assert!(st.blowup_radius.is_some());
    }

    #[test]
    fn off_origin_vortices_are_rejected() {
        let m = GaugeModel::new(1, 1, vec![[0.5, 0.0], [-0.5, 0.0]], vec![]).unwrap();
        assert!(radial_shoot(&m, 0.0, 0.0, &ShootOptions::default()).is_err());
    }

    #[test]
    fn residual_of_exact_profile_is_small() {
        // u1 = -ln 2, u2 = -inf-like: F1 vanishes and the stencil sees a constant
        let m = su3(0, 0);
        let grid = RadialGrid::new(0.01, 600, 1.0).unwrap();
        let u1 = vec![-(2.0f64).ln(); grid.len()];
        let u2: Vec<f64> = grid.r().iter().map(|r| -4.0 * (1.0 + r * r).ln() - 60.0).collect();
        let res = ode_residual(&m, &grid, &u1, &u2).unwrap();
        assert!(res.max_eq1() < 1e-12);
        // Lap of -4 ln(1 + r^2) is -16 / (1 + r^2)^2
        let worst = res
            .r
            .iter()
            .zip(&res.eq2)
            .map(|(r, v)| (v + 16.0 / (1.0 + r * r).powi(2)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn assembled_lambda_one_solution_is_mixed() {
        let m = su3(0, 0);
        let ro = RadialOptions { h: 0.004, ..Default::default() };
        let sol = solve_lambda_one(&m, 0.05, &ro, &PicardOptions::default(), WeightParams::default()).unwrap();
        let cc = cross_check(&sol, 5.0, &ShootOptions::default()).unwrap();
        assert_eq!(cc.classification, SolutionType::MixedI, "{:?}", cc.far);
        assert!(cc.residual_eq1 < 1e-6 && cc.residual_eq2_scaled < 1e-5, "{cc:?}");
        assert!(cc.replay_deviation < 1e-5, "{}", cc.replay_deviation);
    }
}
