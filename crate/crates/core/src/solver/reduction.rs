//! The two-dimensional reduced problem in `alpha`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GaugeModel;
use crate::quad::integrate_to_inf;

/// Slope of the reduced map at `alpha = 0`:
/// `64 lambda^4 (ab^3 - 16)(lambda - 1) pi / ((4 - ab)(2 + b)^2 lambda)
/// * int_0^inf t^{2 lambda - 2} / (1 + t^lambda)^5 dt`.
pub fn delta_leading_coefficient(model: &GaugeModel) -> Result<f64> {
    let lam = match model.lambda.as_natural() {
        Some(n) if n > 1 => n as f64,
        Some(_) => {
            return Err(Error::InvalidParameter("lambda = 1: the leading coefficient vanishes".into()))
        }
        None => return Err(Error::NonIntegerLambda(model.lambda.to_string())),
    };
    let (a, b) = (model.af(), model.bf());
    let t_int = integrate_to_inf(|t| t.powf(2.0 * lam - 2.0) / (1.0 + t.powf(lam)).powi(5), 0.0, 1e-14, 1e-12)?;
    Ok(64.0 * lam.powi(4) * (a * b.powi(3) - 16.0) * (lam - 1.0) * PI / ((4.0 - a * b) * (2.0 + b).powi(2) * lam)
        * t_int.value)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct AlphaOptions {
    /// Stop once `|F(alpha)| <= tol`.
    pub tol: f64,
    /// Or once the Newton step is shorter than this.
    pub step_tol: f64,
    pub max_iter: usize,
    /// Forward-difference step of the Jacobian.
    pub fd_step: f64,
    /// Smallest accepted `|det J|`.
    pub min_jacobian: f64,
}

impl Default for AlphaOptions {
    fn default() -> Self {
        AlphaOptions { tol: 1e-8, step_tol: 1e-12, max_iter: 20, fd_step: 1e-4, min_jacobian: 1e-12 }
    }
}

/// Outcome of the Newton loop.
#[derive(Debug, Clone, Serialize)]
pub struct AlphaSolve {
    pub alpha: [f64; 2],
    /// `F(alpha)` at the returned point.
    pub reduced_map: [f64; 2],
    pub iterations: usize,
    /// Last finite-difference Jacobian, rows `(Re F, Im F)`.
    pub jacobian: [[f64; 2]; 2],
}

impl AlphaSolve {
    pub fn alpha_c(&self) -> Complex64 {
        Complex64::new(self.alpha[0], self.alpha[1])
    }

    /// Mean diagonal of the Jacobian divided by `coefficient`.
    pub fn jacobian_ratio(&self, coefficient: f64) -> f64 {
        0.5 * (self.jacobian[0][0] + self.jacobian[1][1]) / coefficient
    }
}

fn jacobian<F: FnMut(Complex64) -> Result<Complex64>>(f: &mut F, alpha: Complex64, f0: Complex64, h: f64) -> Result<[[f64; 2]; 2]> {
    let fr = (f(alpha + Complex64::new(h, 0.0))? - f0) / h;
    let fi = (f(alpha + Complex64::new(0.0, h))? - f0) / h;
    Ok([[fr.re, fi.re], [fr.im, fi.im]])
}

/// Damped Newton on `F(alpha) = 0` from `alpha0` with a forward-difference
/// Jacobian and step halving on `|F|`.
pub fn newton_alpha<F: FnMut(Complex64) -> Result<Complex64>>(mut f: F, alpha0: Complex64, opts: &AlphaOptions) -> Result<AlphaSolve> {
    let mut alpha = alpha0;
    let mut fa = f(alpha)?;
    let mut jac = [[0.0; 2]; 2];
    for it in 0..=opts.max_iter {
        if fa.norm() <= opts.tol {
            return Ok(AlphaSolve { alpha: [alpha.re, alpha.im], reduced_map: [fa.re, fa.im], iterations: it, jacobian: jac });
        }
        if it == opts.max_iter {
            break;
        }
        jac = jacobian(&mut f, alpha, fa, opts.fd_step)?;
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !(det.abs() > opts.min_jacobian) {
            return Err(Error::SingularSystem(format!("reduced Jacobian determinant {det:.3e}")));
        }
        let dx = (-fa.re * jac[1][1] + fa.im * jac[0][1]) / det;
        let dy = (-fa.im * jac[0][0] + fa.re * jac[1][0]) / det;
        let step = Complex64::new(dx, dy);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..6 {
            let trial = alpha + step * t;
            let ft = f(trial)?;
            if ft.norm() < fa.norm() {
                alpha = trial;
                fa = ft;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::NewtonDivergence { iterations: it + 1, residual: fa.norm() });
        }
        if (step * t).norm() <= opts.step_tol * (1.0 + alpha.norm()) {
            return Ok(AlphaSolve { alpha: [alpha.re, alpha.im], reduced_map: [fa.re, fa.im], iterations: it + 1, jacobian: jac });
        }
    }
    Err(Error::NewtonDivergence { iterations: opts.max_iter, residual: fa.norm() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(a: u32, b: u32, n1: usize) -> GaugeModel {
        GaugeModel::new(a, b, vec![[0.0, 0.0]; n1], vec![]).unwrap()
    }

    #[test]
    fn lambda_two_matches_closed_form() {
        // (a, b) = (1, 2), N1 = 1: lambda = 2, t-integral 5 pi / 256
        let c = delta_leading_coefficient(&model(1, 2, 1)).unwrap();
        let expect = 64.0 * 16.0 * (8.0 - 16.0) * PI / (2.0 * 16.0 * 2.0) * 5.0 * PI / 256.0;
        assert!((c - expect).abs() < 1e-10 * expect.abs(), "{c} {expect}");
    }

    #[test]
    fn sign_follows_ab_cubed() {
        assert!(delta_leading_coefficient(&model(1, 2, 2)).unwrap() < 0.0);
        assert!(delta_leading_coefficient(&model(1, 3, 2)).unwrap() > 0.0);
    }

    #[test]
    fn excluded_lambdas_are_rejected() {
        assert!(delta_leading_coefficient(&GaugeModel::new(1, 1, vec![], vec![]).unwrap()).is_err());
        assert!(matches!(delta_leading_coefficient(&model(1, 1, 1)), Err(Error::NonIntegerLambda(_))));
    }

    #[test]
    fn newton_finds_root_of_a_smooth_map() {
        let target = Complex64::new(0.013, -0.007);
        let f = |a: Complex64| Ok(-40.0 * (a - target) + 3.0 * (a - target) * (a - target).norm());
        let s = newton_alpha(f, Complex64::new(0.0, 0.0), &AlphaOptions::default()).unwrap();
        assert!((s.alpha_c() - target).norm() < 1e-9);
        assert!((s.jacobian_ratio(-40.0) - 1.0).abs() < 0.05);
    }
}
