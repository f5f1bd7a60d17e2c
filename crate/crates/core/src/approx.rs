//! Approximate solution `(V1, V2)` and its auxiliary functions.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::liouville::LiouvilleProfile;
use crate::model::{GaugeModel, Point};
use crate::topological::{background, TopologicalSolution};

/// Quintic smoothstep cutoff in `|x|`: 0 below 1/2, 1 above 1.
pub fn cutoff(r: f64) -> f64 {
    cutoff_derivatives(r).0
}

/// `(chi, chi', chi'')` as functions of `r = |x|`.
pub fn cutoff_derivatives(r: f64) -> (f64, f64, f64) {
    if r <= 0.5 {
        return (0.0, 0.0, 0.0);
    }
    if r >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let s = 2.0 * (r - 0.5);
    let chi = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    let d1 = 2.0 * 30.0 * s * s * (1.0 - s) * (1.0 - s);
    let d2 = 4.0 * 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
    (chi, d1, d2)
}

pub fn eval_cutoff(x: [f64; 2]) -> f64 {
    cutoff(x[0].hypot(x[1]))
}

fn dist(x: [f64; 2], p: Point, eps: f64) -> f64 {
    (x[0] - eps * p[0]).hypot(x[1] - eps * p[1])
}

/// `(P_eps(x), Q_eps(x))`; empty products are 1.
pub fn eval_pq(model: &GaugeModel, eps: f64, x: [f64; 2]) -> (f64, f64) {
    let p = model.p_points.iter().map(|&p| dist(x, p, eps)).product();
    let q = model.q_points.iter().map(|&q| dist(x, q, eps)).product();
    (p, q)
}

pub fn ln_p(model: &GaugeModel, eps: f64, x: [f64; 2]) -> f64 {
    model.p_points.iter().map(|&p| dist(x, p, eps).ln()).sum()
}

pub fn ln_q(model: &GaugeModel, eps: f64, x: [f64; 2]) -> f64 {
    model.q_points.iter().map(|&q| dist(x, q, eps).ln()).sum()
}

/// `b ln P_eps(y) + kappa u0(y / eps)`, combined so the logarithms cancel
/// exactly when `b + 2 kappa = 0`.
pub fn g_kappa(model: &GaugeModel, eps: f64, kappa: f64, y: [f64; 2]) -> f64 {
    let b = model.bf();
    let c = b + 2.0 * kappa;
    let mut s = 0.0;
    for &p in &model.p_points {
        let d = dist(y, p, eps);
        let rel2 = (d / eps).powi(2);
        if c != 0.0 {
            s += c * d.ln();
        }
        s += -2.0 * kappa * eps.ln() - kappa * rel2.ln_1p();
    }
    s
}

/// `1 + 5 max(|p_j|, |q_k|)`.
pub fn r0(model: &GaugeModel) -> f64 {
    1.0 + 5.0 * model.max_radius()
}

/// `b ln P_eps + 2 ln Q_eps - (b N1 + 2 N2) ln|x|`, defined for `|x| >= R0 eps`.
pub fn eval_h(model: &GaugeModel, eps: f64, x: [f64; 2]) -> Result<f64> {
    let r = x[0].hypot(x[1]);
    if r < r0(model) * eps {
        return Err(Error::InvalidParameter(format!(
            "H_eps evaluated at |x| = {r:.3e} < R0 eps = {:.3e}",
            r0(model) * eps
        )));
    }
    Ok(h_unchecked(model, eps, x))
}

fn h_unchecked(model: &GaugeModel, eps: f64, x: [f64; 2]) -> f64 {
    let r = x[0].hypot(x[1]);
    let n = model.bf() * model.n1() as f64 + 2.0 * model.n2() as f64;
    model.bf() * ln_p(model, eps, x) + 2.0 * ln_q(model, eps, x) - n * r.ln()
}

/// Quadratic far-field coefficient `A(x)`.
pub fn eval_a(model: &GaugeModel, x: [f64; 2]) -> f64 {
    let b = model.bf();
    let r2 = x[0] * x[0] + x[1] * x[1];
    let mut s2 = 0.0;
    let mut s4 = 0.0;
    for p in &model.p_points {
        s2 += 0.5 * b * (p[0] * p[0] + p[1] * p[1]);
        s4 += b * (p[0] * x[0] + p[1] * x[1]).powi(2);
    }
    for q in &model.q_points {
        s2 += q[0] * q[0] + q[1] * q[1];
        s4 += 2.0 * (q[0] * x[0] + q[1] * x[1]).powi(2);
    }
    s2 / r2 - s4 / (r2 * r2)
}

/// `(A1, A2)` with `A(x) |x|^2 = A1 cos 2 theta + A2 sin 2 theta`.
pub fn a_coefficients(model: &GaugeModel) -> (f64, f64) {
    let b = model.bf();
    let mut a1 = 0.0;
    let mut a2 = 0.0;
    for p in &model.p_points {
        a1 -= 0.5 * b * (p[0] * p[0] - p[1] * p[1]);
        a2 -= b * p[0] * p[1];
    }
    for q in &model.q_points {
        a1 -= q[0] * q[0] - q[1] * q[1];
        a2 -= 2.0 * q[0] * q[1];
    }
    (a1, a2)
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct FarFieldData {
    pub r0: f64,
    pub a1: f64,
    pub a2: f64,
}

impl FarFieldData {
    pub fn new(model: &GaugeModel) -> Self {
        let (a1, a2) = a_coefficients(model);
        FarFieldData { r0: r0(model), a1, a2 }
    }
}

/// `(V1, V2)` for fixed `eps` and `alpha`, evaluated in the variable `x`.
#[derive(Debug, Clone)]
pub struct ApproxSolution {
    pub model: GaugeModel,
    pub eps: f64,
    pub profile: LiouvilleProfile,
    pub topo: Arc<TopologicalSolution>,
    pub far: FarFieldData,
}

impl ApproxSolution {
    pub fn alpha(&self) -> Complex64 {
        self.profile.alpha
    }

    fn scaled(&self, x: [f64; 2]) -> [f64; 2] {
        [self.eps * x[0], self.eps * x[1]]
    }

    /// `-(ab/2) e^{W(eps x)} chi(x)`.
    pub fn phi(&self, x: [f64; 2]) -> f64 {
        let chi = eval_cutoff(x);
        if chi == 0.0 {
            return 0.0;
        }
        -0.5 * self.model.af() * self.model.bf() * self.profile.exp_w(self.scaled(x)) * chi
    }

    /// Exact `Lap phi` from the Liouville equation for `W`.
    pub fn lap_phi(&self, x: [f64; 2]) -> f64 {
        let r = x[0].hypot(x[1]);
        let (chi, d1, d2) = cutoff_derivatives(r);
        if chi == 0.0 && d1 == 0.0 && d2 == 0.0 {
            return 0.0;
        }
        let y = self.scaled(x);
        let e = self.profile.exp_w(y);
        let k = self.profile.coupling();
        let eps = self.eps;
        let lap_e = eps * eps * e * (-k * e + self.profile.grad_w_sq(y));
        let grad_term = 2.0 * eps * e * self.profile.dr_w(y) * d1;
        let lap_chi = d2 + d1 / r;
        -0.5 * self.model.af() * self.model.bf() * (chi * lap_e + grad_term + e * lap_chi)
    }

    pub fn u(&self, x: [f64; 2]) -> f64 {
        self.topo.u_at(x)
    }

    pub fn v(&self, x: [f64; 2]) -> f64 {
        self.topo.v_at(x)
    }

    /// `U - ln 2 + eps^2 phi`.
    pub fn v1(&self, x: [f64; 2]) -> f64 {
        self.u(x) - std::f64::consts::LN_2 + self.eps * self.eps * self.phi(x)
    }

    /// `V2` in the bounded form `W* + G_{-b/2} + 2 ln Q - (b/2)(v + eps^2 phi)`.
    pub fn v2(&self, x: [f64; 2]) -> f64 {
        let y = self.scaled(x);
        let b = self.model.bf();
        self.profile.eval_w_star(y) + g_kappa(&self.model, self.eps, -0.5 * b, y) + 2.0 * ln_q(&self.model, self.eps, y)
            - 0.5 * b * (self.v(x) + self.eps * self.eps * self.phi(x))
    }

    /// `V2` straight from its definition (for identity checks away from vortices).
    pub fn v2_direct(&self, x: [f64; 2]) -> f64 {
        let y = self.scaled(x);
        let b = self.model.bf();
        self.profile.eval_w_star(y) + b * ln_p(&self.model, self.eps, y) + 2.0 * ln_q(&self.model, self.eps, y)
            - 0.5 * b * self.u(x)
            - 0.5 * b * self.eps * self.eps * self.phi(x)
    }

    /// `V1 + V2` in bounded form.
    pub fn v1_plus_v2(&self, x: [f64; 2]) -> f64 {
        let y = self.scaled(x);
        let b = self.model.bf();
        let kap = 0.5 * (2.0 - b);
        -std::f64::consts::LN_2
            + self.profile.eval_w_star(y)
            + g_kappa(&self.model, self.eps, kap, y)
            + 2.0 * ln_q(&self.model, self.eps, y)
            + kap * (self.v(x) + self.eps * self.eps * self.phi(x))
    }

    /// `u0(x)` of the topological background.
    pub fn u0(&self, x: [f64; 2]) -> f64 {
        background(&self.topo.points, x).0
    }
}

/// Builds the approximate solution; `U` must come from the same `p_j`.
pub fn assemble_v(
    topo: Arc<TopologicalSolution>,
    model: &GaugeModel,
    eps: f64,
    alpha: Complex64,
) -> Result<ApproxSolution> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} not in (0, 1)")));
    }
    if topo.points.len() != model.n1()
        || topo
            .points
            .iter()
            .zip(&model.p_points)
            .any(|(a, b)| (a[0] - b[0]).abs() > 1e-12 || (a[1] - b[1]).abs() > 1e-12)
    {
        return Err(Error::InvalidParameter("topological solution built for other vortices".into()));
    }
    let profile = LiouvilleProfile::for_model(model, alpha)?;
    Ok(ApproxSolution { model: model.clone(), eps, profile, topo, far: FarFieldData::new(model) })
}

/// Fitted constant `max |H_eps(x)| |x|^2 / eps^2` over sample points with `|x| >= R0 eps`.
pub fn h_bound_constant(model: &GaugeModel, eps: f64, samples: &[[f64; 2]]) -> f64 {
    samples
        .iter()
        .filter(|x| x[0].hypot(x[1]) >= r0(model) * eps)
        .map(|&x| h_unchecked(model, eps, x).abs() * (x[0] * x[0] + x[1] * x[1]) / (eps * eps))
        .fold(0.0, f64::max)
}

/// Fitted constant `max |H_eps - eps^2 A| |x|^3 / eps^3` over samples with `|x| >= R0 eps`.
pub fn h_minus_a_constant(model: &GaugeModel, eps: f64, samples: &[[f64; 2]]) -> f64 {
    samples
        .iter()
        .filter(|x| x[0].hypot(x[1]) >= r0(model) * eps)
        .map(|&x| {
            let r = x[0].hypot(x[1]);
            (h_unchecked(model, eps, x) - eps * eps * eval_a(model, x)).abs() * r.powi(3) / eps.powi(3)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_examples() {
        assert_eq!(eval_cutoff([0.3, 0.0]), 0.0);
        assert_eq!(eval_cutoff([2.0, 0.0]), 1.0);
        let c = eval_cutoff([0.75, 0.0]);
        assert!(c > 0.0 && c < 1.0);
        // C^2 seams
        let (_, d1a, d2a) = cutoff_derivatives(0.5 + 1e-9);
        let (_, d1b, d2b) = cutoff_derivatives(1.0 - 1e-9);
        assert!(d1a.abs() < 1e-12 && d2a.abs() < 1e-6 && d1b.abs() < 1e-12 && d2b.abs() < 1e-6);
    }

    #[test]
    fn pq_examples() {
        let m = GaugeModel::new(1, 1, vec![], vec![]).unwrap();
        assert_eq!(eval_pq(&m, 0.1, [3.0, 1.0]), (1.0, 1.0));
        let m = GaugeModel { a: 1, b: 1, p_points: vec![[1.0, 0.0]], q_points: vec![], lambda: crate::model::lambda_from_counts(1, 1, 0) };
        assert!((eval_pq(&m, 0.1, [1.0, 0.0]).0 - 0.9).abs() < 1e-15);
        let m = GaugeModel::new(1, 1, vec![], vec![[0.0, 0.0], [0.0, 0.0]]).unwrap();
        assert!((eval_pq(&m, 0.5, [0.0, 2.0]).1 - 4.0).abs() < 1e-15);
    }

    #[test]
    fn g_kappa_matches_definition() {
        let m = GaugeModel::new(1, 2, vec![[0.4, 0.1], [-0.4, -0.1]], vec![]).unwrap();
        let eps = 0.05;
        for &kap in &[-1.0, 0.0, 0.5] {
            for &y in &[[0.3, 0.2], [-0.01, 0.04], [2.0, -1.0]] {
                let direct = m.bf() * ln_p(&m, eps, y) + kap * background(&m.p_points, [y[0] / eps, y[1] / eps]).0;
                assert!((g_kappa(&m, eps, kap, y) - direct).abs() < 1e-12);
            }
        }
        // finite at a vortex when the logs cancel
        assert!(g_kappa(&m, eps, -1.0, [0.02, 0.005]).is_finite());
    }

    #[test]
    fn h_and_a_examples() {
        let m = GaugeModel::new(1, 1, vec![], vec![[0.0, 0.0]]).unwrap();
        assert!(eval_h(&m, 0.1, [1.0, 1.0]).unwrap().abs() < 1e-15);
        assert_eq!(eval_a(&m, [1.0, 1.0]), 0.0);
        let m = GaugeModel::new(1, 1, vec![[3.0, -1.0]], vec![]).unwrap();
        assert!(eval_h(&m, 0.1, [0.5, 0.3]).unwrap().abs() < 1e-15);
        let m = GaugeModel::new(1, 2, vec![[1.0, 0.0], [-1.0, 0.0]], vec![]).unwrap();
        assert!((eval_a(&m, [0.0, 1.0]) - 2.0).abs() < 1e-15);
        assert!(eval_h(&m, 0.1, [0.1, 0.0]).is_err());
        let (a1, a2) = a_coefficients(&m);
        for k in 0..12 {
            let th = 0.5 * k as f64;
            let x = [2.0 * th.cos(), 2.0 * th.sin()];
            let fit = (a1 * (2.0 * th).cos() + a2 * (2.0 * th).sin()) / 4.0;
            assert!((eval_a(&m, x) - fit).abs() < 1e-12);
        }
    }

    #[test]
    fn h_minus_a_is_third_order() {
        let m = GaugeModel::new(1, 2, vec![[1.0, 0.0], [-1.0, 0.0]], vec![]).unwrap();
        let x = [[0.0, 1.0], [1.0, 0.0], [0.6, 0.8]];
        let mut consts = vec![];
        for &eps in &[1e-2, 5e-3, 2.5e-3] {
            consts.push(h_minus_a_constant(&m, eps, &x));
            let ratio = (h_unchecked(&m, eps, [0.0, 1.0]) - eps * eps * 2.0).abs() / eps.powi(3);
            assert!(ratio < 10.0);
        }
        assert!(consts.iter().all(|c| c.is_finite() && *c < 10.0));
        assert!(consts[2] <= 1.3 * consts[1]);
    }
}
