//! Node data of the approximate solution and the nonlinear remainders `g1`, `g2`.
//!
//! The y-grid is the exact `eps`-dilate of the x-grid: both use the same
//! stretched nodes, and only the radial scale differs. Node `k` of the
//! x-grid and node `k` of the y-grid are the same physical point, so `xi`
//! and `eta` pass between scales by index with no interpolation.

use std::f64::consts::LN_2;
use std::sync::Arc;

use num_complex::Complex64;

use crate::approx::{assemble_v, eval_h, g_kappa, ln_q, r0, ApproxSolution};
use crate::error::{Error, Result};
use crate::grid::{DiskGrid, RadialGrid};
use crate::model::GaugeModel;
use crate::topological::{background, f_prime, TopologicalSolution};

/// Largest exponent accepted inside any exponential.
pub const EXP_GUARD: f64 = 40.0;

/// Paired grids on the two scales.
#[derive(Debug, Clone)]
pub struct ScaleGrids {
    pub x: Arc<DiskGrid>,
    pub y: Arc<DiskGrid>,
    pub eps: f64,
}

impl ScaleGrids {
    /// Extends the topological grid so that its y-image reaches `r_y`.
    pub fn new(topo_grid: &DiskGrid, eps: f64, r_y: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!("eps = {eps} not in (0, 1)")));
        }
        let rg = &topo_grid.radial;
        let cover = RadialGrid::covering(r_y / eps, rg.h, rg.scale)?;
        let m = cover.len().max(rg.len());
        let xr = RadialGrid::new(rg.h, m, rg.scale)?;
        let yr = RadialGrid::new(rg.h, m, rg.scale * eps)?;
        let (x, y) = if topo_grid.is_axisymmetric() {
            (DiskGrid::axisymmetric(xr), DiskGrid::axisymmetric(yr))
        } else {
            (DiskGrid::new(xr, topo_grid.n_theta)?, DiskGrid::new(yr, topo_grid.n_theta)?)
        };
        Ok(ScaleGrids { x: Arc::new(x), y: Arc::new(y), eps })
    }

    /// Paired grids with no topological background, `n_theta = 1` for axisymmetric.
    pub fn plain(h: f64, scale: f64, n_theta: usize, eps: f64, r_y: f64) -> Result<Self> {
        let radial = RadialGrid::new(h, 4, scale)?;
        let g = if n_theta == 1 { DiskGrid::axisymmetric(radial) } else { DiskGrid::new(radial, n_theta)? };
        Self::new(&g, eps, r_y)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

fn guard(t: f64, context: &'static str) -> Result<f64> {
    if t > EXP_GUARD {
        Err(Error::Overflow { value: t, context })
    } else if t.is_nan() {
        Err(Error::NonFinite(context.into()))
    } else {
        Ok(t.exp())
    }
}

/// `e^t - 1 - t` without cancellation for small `t`.
pub fn em(t: f64) -> f64 {
    if t.abs() < 1e-3 {
        t * t * (0.5 + t * (1.0 / 6.0 + t * (1.0 / 24.0 + t / 120.0)))
    } else {
        t.exp_m1() - t
    }
}

/// Everything the remainders need at the nodes, for one `(eps, alpha)`.
#[derive(Debug, Clone)]
pub struct MixedProblem {
    pub model: GaugeModel,
    pub eps: f64,
    pub approx: ApproxSolution,
    pub grids: ScaleGrids,
    /// `U` at the x-nodes (0 beyond the topological grid).
    pub u: Vec<f64>,
    pub fprime: Vec<f64>,
    pub phi: Vec<f64>,
    pub lap_phi: Vec<f64>,
    pub v1: Vec<f64>,
    /// Bounded form of `V2`.
    pub v2: Vec<f64>,
    /// Bounded form of `V1 + V2`.
    pub v12: Vec<f64>,
    /// `W_alpha` and `e^{W_alpha}` at the y-nodes.
    pub w: Vec<f64>,
    pub exp_w: Vec<f64>,
    /// `V2 - W` and `V1 + V2 + ln 2 - W` at the shared nodes.
    pub base1: Vec<f64>,
    pub base2: Vec<f64>,
    /// `Z_{alpha,0..2}` at the y-nodes.
    pub kernels: Vec<[f64; 3]>,
}

impl MixedProblem {
    pub fn new(
        model: &GaugeModel,
        topo: Arc<TopologicalSolution>,
        grids: ScaleGrids,
        alpha: Complex64,
    ) -> Result<Self> {
        let eps = grids.eps;
        let tg = topo.grid.clone();
        if tg.n_theta != grids.x.n_theta || tg.radial.h != grids.x.radial.h || tg.radial.scale != grids.x.radial.scale {
            return Err(Error::InvalidParameter("x-grid does not extend the topological grid".into()));
        }
        let approx = assemble_v(topo.clone(), model, eps, alpha)?;
        let b = model.bf();
        let kap = 0.5 * (2.0 - b);
        let e2 = eps * eps;
        let n = grids.len();
        let r0e = r0(model) * eps;
        let (mut u, mut fp, mut phi, mut lphi) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let (mut v1, mut v2, mut v12) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let (mut w, mut ew, mut b1, mut b2) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let mut kern = vec![[0.0; 3]; n];
        for k in 0..n {
            let x = grids.x.point(k);
            let y = grids.y.point(k);
            let (uk, vk) = if k < tg.len() {
                (topo.u[k], topo.v[k])
            } else {
                (0.0, -background(&topo.points, x).0)
            };
            u[k] = uk;
            fp[k] = f_prime(uk);
            phi[k] = approx.phi(x);
            lphi[k] = approx.lap_phi(x);
            v1[k] = uk - LN_2 + e2 * phi[k];
            let ws = approx.profile.eval_w_star(y);
            let lq = 2.0 * ln_q(model, eps, y);
            let vs = vk + e2 * phi[k];
            v2[k] = ws + g_kappa(model, eps, -0.5 * b, y) + lq - 0.5 * b * vs;
            v12[k] = -LN_2 + ws + g_kappa(model, eps, kap, y) + lq + kap * vs;
            w[k] = approx.profile.eval_w(y)?;
            ew[k] = approx.profile.exp_w(y);
            let ry = y[0].hypot(y[1]);
            if ry >= r0e {
                let h = eval_h(model, eps, y)?;
                let us = uk + e2 * phi[k];
                b1[k] = h - 0.5 * b * us;
                b2[k] = h + kap * us;
            } else {
                b1[k] = v2[k] - w[k];
                b2[k] = v12[k] + LN_2 - w[k];
            }
            kern[k] = approx.profile.kernels(y);
        }
        Ok(MixedProblem {
            model: model.clone(),
            eps,
            approx,
            grids,
            u,
            fprime: fp,
            phi,
            lap_phi: lphi,
            v1,
            v2,
            v12,
            w,
            exp_w: ew,
            base1: b1,
            base2: b2,
            kernels: kern,
        })
    }

    pub fn alpha(&self) -> Complex64 {
        self.approx.alpha()
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// `g1(xi, eta)` at the x-nodes.
    pub fn g1(&self, xi: &[f64], eta: &[f64]) -> Result<Vec<f64>> {
        let a = self.model.af();
        let b = self.model.bf();
        let e2 = self.eps * self.eps;
        let kap = 0.5 * (2.0 - b);
        (0..self.len())
            .map(|k| {
                let d = e2 * (self.phi[k] + xi[k]);
                let eu = guard(self.u[k], "g1: e^U")?;
                let i1 = -(eu * em(d) - eu * eu * em(2.0 * d)) / e2;
                let s2 = self.v2[k] - 0.5 * b * e2 * xi[k] + e2 * eta[k];
                let s12 = self.v12[k] + kap * e2 * xi[k] + e2 * eta[k];
                let t2 = guard(s2, "g1: e^{V2}")?;
                let t12 = guard(s12, "g1: e^{V1+V2}")?;
                Ok(i1 - self.lap_phi[k] - self.fprime[k] * self.phi[k] + a * t2 + a * (b - 2.0) * t12
                    - 2.0 * a * e2 * t2 * t2)
            })
            .collect()
    }

    /// `g2(xi, eta)` at the y-nodes.
    pub fn g2(&self, xi: &[f64], eta: &[f64]) -> Result<Vec<f64>> {
        let a = self.model.af();
        let b = self.model.bf();
        let e2 = self.eps * self.eps;
        let kap = 0.5 * (2.0 - b);
        let gap = 4.0 - a * b;
        (0..self.len())
            .map(|k| {
                let r1 = self.base1[k] - 0.5 * b * e2 * xi[k] + e2 * eta[k];
                let r2 = self.base2[k] + kap * e2 * xi[k] + e2 * eta[k];
                let ew = self.exp_w[k];
                let e1 = guard(self.w[k] + r1, "g2: e^{W + R1}")?;
                guard(self.w[k] + r2, "g2: e^{W + R2}")?;
                let d1 = shifted_exp(self.w[k], ew, r1, e2 * eta[k]);
                let d2 = shifted_exp(self.w[k], ew, r2, e2 * eta[k]);
                Ok(gap * (-d1 / (2.0 * e2) - b * d2 / (4.0 * e2) + e1 * e1))
            })
            .collect()
    }

    /// `int g Z_alpha dy` by grid quadrature, `Z_alpha = Z_{alpha,1} + i Z_{alpha,2}`.
    pub fn project_z(&self, g: &[f64]) -> Complex64 {
        let w = self.grids.y.weights();
        let mut s = Complex64::new(0.0, 0.0);
        for k in 0..g.len() {
            s += w[k] * g[k] * Complex64::new(self.kernels[k][1], self.kernels[k][2]);
        }
        s
    }
}

/// `e^{W + R} - e^W (1 + s)` with the cancellation handled for small `R`.
fn shifted_exp(w: f64, ew: f64, r: f64, s: f64) -> f64 {
    if r.abs() < 1.0 {
        ew * (r.exp_m1() - s)
    } else {
        (w + r).exp() - ew * (1.0 + s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topological::TopoOptions;

    fn setup(p: Vec<[f64; 2]>, a: u32, b: u32, eps: f64) -> MixedProblem {
        let model = GaugeModel::new(a, b, p, vec![]).unwrap();
        let opts = TopoOptions { n_theta: 32, h: 0.02, ..Default::default() };
        let topo = Arc::new(crate::topological::solve_with_options(&model.p_points, &opts, true).unwrap());
        let grids = ScaleGrids::new(&topo.grid, eps, 40.0).unwrap();
        MixedProblem::new(&model, topo, grids, Complex64::new(0.0, 0.0)).unwrap()
    }

    #[test]
    fn em_matches_direct_formula() {
        for t in [1e-6f64, -3e-4, 2e-3, 0.5, -1.5] {
            let direct = t.exp_m1() - t;
            assert!((em(t) - direct).abs() <= 1e-15 + 1e-10 * direct.abs(), "{t}");
        }
    }

    #[test]
    fn grids_are_dilates() {
        let m = setup(vec![[0.0, 0.0]], 1, 1, 0.01);
        for k in [0, 17, m.len() - 1] {
            let x = m.grids.x.point(k);
            let y = m.grids.y.point(k);
            assert!((y[0] - 0.01 * x[0]).abs() <= 1e-15 * x[0].abs().max(1.0));
        }
        assert!(m.grids.y.radial.r_boundary >= 40.0);
    }

    #[test]
    fn bounded_forms_match_direct_ones() {
        let m = setup(vec![[0.0, 0.0]], 1, 1, 0.02);
        for k in (0..m.len()).step_by(7) {
            let x = m.grids.x.point(k);
            let r = x[0].hypot(x[1]);
            if r < 0.1 || r > 20.0 {
                continue;
            }
            let d = m.approx.v2_direct(x);
            assert!((m.v2[k] - d).abs() < 1e-9 * d.abs().max(1.0), "{} {d}", m.v2[k]);
            assert!((m.base1[k] - (m.v2[k] - m.w[k])).abs() < 1e-9);
        }
    }

    #[test]
    fn taylor_term_vanishes_without_corrections() {
        let m = setup(vec![[0.0, 0.0]], 1, 1, 0.02);
        let zero = vec![0.0; m.len()];
        let mut mm = m.clone();
        mm.phi.iter_mut().for_each(|p| *p = 0.0);
        mm.lap_phi.iter_mut().for_each(|p| *p = 0.0);
        // with phi = 0 only the coupling terms remain
        let g = mm.g1(&zero, &zero).unwrap();
        let a = mm.model.af();
        for k in (0..m.len()).step_by(11) {
            let expect = a * mm.v2[k].exp() - mm.v12[k].exp() - 2.0 * a * 0.0004 * (2.0 * mm.v2[k]).exp();
            assert!((g[k] - expect).abs() < 1e-12 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn g1_is_order_eps() {
        let mut norms = vec![];
        for eps in [0.04, 0.02, 0.01] {
            let m = setup(vec![[0.0, 0.0]], 1, 1, eps);
            let zero = vec![0.0; m.len()];
            let g = m.g1(&zero, &zero).unwrap();
            norms.push(m.grids.x.dot(&g, &g).sqrt());
        }
        let slope = (norms[0] / norms[2]).ln() / 4f64.ln();
        assert!((0.8..1.3).contains(&slope), "{norms:?} {slope}");
    }

    #[test]
    fn g2_stays_bounded() {
        let mut norms = vec![];
        for eps in [0.04, 0.02, 0.01] {
            let m = setup(vec![[0.0, 0.0]], 1, 1, eps);
            let zero = vec![0.0; m.len()];
            let g = m.g2(&zero, &zero).unwrap();
            norms.push(crate::grid::norm_y_values(&m.grids.y, &g, Default::default()));
        }
        assert!(norms.iter().all(|v| v.is_finite() && *v < 1e3), "{norms:?}");
        assert!(norms[2] < 2.0 * norms[0], "{norms:?}");
    }
}
