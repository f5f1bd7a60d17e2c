//! Singular Liouville profiles `W_{mu,alpha}`, their kernel functions, the
//! Gram system and the projection `T_alpha`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{norm_y_values, sigma, DiskGrid, WeightParams};
use crate::model::{GaugeModel, Rational};

/// Principal-branch power `z^lambda = r^lambda e^{i lambda theta}`,
/// `theta in (-pi, pi]`.
pub fn zpow(z: Complex64, lambda: Rational) -> Complex64 {
    if let Some(n) = lambda.as_natural() {
        return z.powu(n);
    }
    let r = z.norm();
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let l = lambda.to_f64();
    Complex64::from_polar(r.powf(l), l * z.arg())
}

fn to_c(x: [f64; 2]) -> Complex64 {
    Complex64::new(x[0], x[1])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiouvilleProfile {
    pub mu: f64,
    pub alpha: Complex64,
    pub lambda: Rational,
    pub a: u32,
    pub b: u32,
}

impl LiouvilleProfile {
    pub fn new(mu: f64, alpha: Complex64, lambda: Rational, a: u32, b: u32) -> Result<Self> {
        if lambda.as_natural().is_none() && alpha != Complex64::new(0.0, 0.0) {
            return Err(Error::NonIntegerLambda(format!(
                "{lambda}: alpha must vanish, got {alpha}"
            )));
        }
        if lambda.to_f64() < 1.0 {
            return Err(Error::InvalidParameter(format!("lambda = {lambda} < 1")));
        }
        if (4 - (a * b) as i64) <= 0 {
            return Err(Error::InvalidParameter(format!("4 - ab <= 0 for ({a}, {b})")));
        }
        Ok(LiouvilleProfile { mu, alpha, lambda, a, b })
    }

    /// Profile `W_alpha` (with `mu = 0`) matching a gauge model.
    pub fn for_model(model: &GaugeModel, alpha: Complex64) -> Result<Self> {
        Self::new(0.0, alpha, model.lambda, model.a, model.b)
    }

    pub fn lambda_f64(&self) -> f64 {
        self.lambda.to_f64()
    }

    pub fn integer_lambda(&self) -> bool {
        self.lambda.as_natural().is_some()
    }

    /// `(4 - ab)(2 + b) / 4`.
    pub fn coupling(&self) -> f64 {
        0.25 * (4.0 - (self.a * self.b) as f64) * (2.0 + self.b as f64)
    }

    fn log_prefactor(&self) -> f64 {
        let l = self.lambda_f64();
        (32.0 * l * l / ((4.0 - (self.a * self.b) as f64) * (2.0 + self.b as f64))).ln() + self.mu
    }

    /// `z^lambda + alpha`.
    pub fn w(&self, z: [f64; 2]) -> Complex64 {
        zpow(to_c(z), self.lambda) + self.alpha
    }

    /// Regular part `W* = W - (2 lambda - 2) ln|z|`, finite at the origin.
    pub fn eval_w_star(&self, z: [f64; 2]) -> f64 {
        let w = self.w(z);
        self.log_prefactor() - 2.0 * (self.mu.exp() * w.norm_sqr()).ln_1p()
    }

    pub fn eval_w(&self, z: [f64; 2]) -> Result<f64> {
        let r = z[0].hypot(z[1]);
        let p = 2.0 * self.lambda_f64() - 2.0;
        if p == 0.0 {
            return Ok(self.eval_w_star(z));
        }
        if r == 0.0 {
            return Err(Error::Singular((z[0], z[1])));
        }
        Ok(self.eval_w_star(z) + p * r.ln())
    }

    /// `e^W`, extended by its limit `0` at the origin when `lambda > 1`.
    pub fn exp_w(&self, z: [f64; 2]) -> f64 {
        let r = z[0].hypot(z[1]);
        let p = 2.0 * self.lambda_f64() - 2.0;
        let rp = if p == 0.0 { 1.0 } else { r.powf(p) };
        self.eval_w_star(z).exp() * rp
    }

    /// `d_z W`, so that `W_x - i W_y = 2 d_z W`; zero at the origin.
    pub fn dz_w(&self, z: [f64; 2]) -> Complex64 {
        let zc = to_c(z);
        if zc.norm_sqr() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let l = self.lambda_f64();
        let w = self.w(z);
        let em = self.mu.exp();
        // d_z z^lambda = lambda z^lambda / z
        let dw = (w - self.alpha) * l / zc;
        (l - 1.0) / zc - 2.0 * em * w.conj() * dw / (1.0 + em * w.norm_sqr())
    }

    /// `|grad W|^2 = 4 |d_z W|^2` away from the origin.
    pub fn grad_w_sq(&self, z: [f64; 2]) -> f64 {
        4.0 * self.dz_w(z).norm_sqr()
    }

    /// Radial derivative `x/|x| . grad W`.
    pub fn dr_w(&self, z: [f64; 2]) -> f64 {
        let r = z[0].hypot(z[1]);
        if r == 0.0 {
            return 0.0;
        }
        (2.0 * self.dz_w(z) * Complex64::new(z[0] / r, z[1] / r)).re
    }

    /// Kernel functions at `mu = 0`: `[Z_0, Z_1, Z_2]`.
    pub fn kernels(&self, z: [f64; 2]) -> [f64; 3] {
        kernel_values(self.w(z))
    }

    /// `Z_alpha = Z_1 + i Z_2`.
    pub fn z_alpha(&self, z: [f64; 2]) -> Complex64 {
        let w = self.w(z);
        w / (1.0 + w.norm_sqr())
    }

    /// Number of kernel directions: three for integer `lambda`, else one.
    pub fn kernel_dim(&self) -> usize {
        if self.integer_lambda() {
            3
        } else {
            1
        }
    }
}

fn kernel_values(w: Complex64) -> [f64; 3] {
    let m = w.norm_sqr();
    let d = 1.0 + m;
    [(1.0 - m) / d, w.re / d, w.im / d]
}

/// `Z_{alpha,j}(z)` for `j in {0, 1, 2}`.
pub fn eval_z(alpha: Complex64, lambda: Rational, j: usize, z: [f64; 2]) -> Result<f64> {
    if j > 2 {
        return Err(Error::InvalidParameter(format!("kernel index {j} not in 0..=2")));
    }
    Ok(kernel_values(zpow(to_c(z), lambda) + alpha)[j])
}

/// Exact mass outside radius `r` for `alpha = 0`: `8 pi lambda / (1 + e^mu r^{2 lambda})`.
pub fn mass_tail(profile: &LiouvilleProfile, r: f64) -> f64 {
    let l = profile.lambda_f64();
    8.0 * PI * l / (1.0 + profile.mu.exp() * r.powf(2.0 * l))
}

/// `int K e^W` over the grid disk plus the analytic tail beyond it.
pub fn mass(profile: &LiouvilleProfile, grid: &DiskGrid) -> f64 {
    let k = profile.coupling();
    let vals = grid.sample(|x| k * profile.exp_w(x));
    grid.integrate(&vals) + mass_tail(profile, grid.r_max())
}

/// Discrete `Lap W + K e^W` at every node (exact ghost data outside).
/// Near the origin the values are meaningless when `lambda > 1`; callers
/// restrict to an annulus.
pub fn liouville_residual(profile: &LiouvilleProfile, grid: &DiskGrid) -> Result<Vec<f64>> {
    if grid.r(0) == 0.0 {
        return Err(Error::Singular((0.0, 0.0)));
    }
    let w: Vec<f64> = grid
        .points()
        .into_iter()
        .map(|x| profile.eval_w(x))
        .collect::<Result<_>>()?;
    let ghost = ghost_ring(grid, |x| profile.eval_w(x).unwrap_or(0.0));
    let lap = grid.laplacian(&w, Some(&ghost));
    let k = profile.coupling();
    Ok(lap
        .iter()
        .zip(grid.points())
        .map(|(l, x)| l + k * profile.exp_w(x))
        .collect())
}

/// Values of `f` on the Dirichlet ring just outside the grid.
pub fn ghost_ring<F: Fn([f64; 2]) -> f64>(grid: &DiskGrid, f: F) -> Vec<f64> {
    let rb = grid.radial.r_boundary;
    (0..grid.n_theta)
        .map(|j| {
            let th = grid.theta(j);
            f([rb * th.cos(), rb * th.sin()])
        })
        .collect()
}

/// Max of `|v|` over nodes with `r_min <= r <= r_max`.
pub fn max_on_annulus(grid: &DiskGrid, v: &[f64], r_min: f64, r_max: f64) -> f64 {
    (0..grid.len())
        .filter(|&k| {
            let r = grid.r(k / grid.n_theta);
            r >= r_min && r <= r_max
        })
        .map(|k| v[k].abs())
        .fold(0.0, f64::max)
}

/// `|| L_{2,alpha} Z_{alpha,j} ||_Y` over nodes with `r >= r_min`.
pub fn kernel_annihilation_check(
    profile: &LiouvilleProfile,
    j: usize,
    grid: &DiskGrid,
    w: WeightParams,
    r_min: f64,
) -> Result<f64> {
    if j > 2 {
        return Err(Error::InvalidParameter(format!("kernel index {j} not in 0..=2")));
    }
    if j > 0 && !profile.integer_lambda() {
        return Err(Error::NonIntegerLambda(profile.lambda.to_string()));
    }
    let z = grid.sample(|x| profile.kernels(x)[j]);
    let ghost = ghost_ring(grid, |x| profile.kernels(x)[j]);
    let lap = grid.laplacian(&z, Some(&ghost));
    let k = profile.coupling();
    let res: Vec<f64> = (0..grid.len())
        .map(|n| {
            if grid.r(n / grid.n_theta) < r_min {
                0.0
            } else {
                lap[n] + k * profile.exp_w(grid.point(n)) * z[n]
            }
        })
        .collect();
    Ok(norm_y_values(grid, &res, w))
}

/// Gram matrix, right-hand side and solved coefficients of the projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramSystem {
    pub a: [[f64; 2]; 2],
    pub b: [f64; 2],
    pub c: [f64; 2],
}

impl GramSystem {
    pub fn det(&self) -> f64 {
        self.a[0][0] * self.a[1][1] - self.a[0][1] * self.a[1][0]
    }
}

/// `a_jk(alpha) = int sigma^{-2-2d} Z_j Z_k`, `j, k in {1, 2}`.
pub fn gram_matrix(
    alpha: Complex64,
    lambda: Rational,
    w: WeightParams,
    grid: &DiskGrid,
) -> Result<[[f64; 2]; 2]> {
    if lambda.as_natural().is_none() {
        return Err(Error::NonIntegerLambda(lambda.to_string()));
    }
    let p = Projector::new(alpha, lambda, w, grid)?;
    Ok(p.gram)
}

/// Precomputed data of `T_alpha` on one grid.
#[derive(Debug, Clone)]
pub struct Projector {
    pub active: bool,
    pub weight: WeightParams,
    /// `Z_{alpha,1}`, `Z_{alpha,2}` at the nodes.
    pub z: [Vec<f64>; 2],
    /// `sigma^{-2-2d} Z_{alpha,j}` at the nodes.
    pub sz: [Vec<f64>; 2],
    pub gram: [[f64; 2]; 2],
    inverse: [[f64; 2]; 2],
}

impl Projector {
    /// Fails when the Gram determinant drops below `1e-6 a_11(0)^2`.
    pub fn new(alpha: Complex64, lambda: Rational, w: WeightParams, grid: &DiskGrid) -> Result<Self> {
        if lambda.as_natural().is_none() {
            return Ok(Projector {
                active: false,
                weight: w,
                z: [vec![], vec![]],
                sz: [vec![], vec![]],
                gram: [[0.0; 2]; 2],
                inverse: [[0.0; 2]; 2],
            });
        }
        let pts = grid.points();
        let kern = |al: Complex64| -> [Vec<f64>; 2] {
            let mut z1 = Vec::with_capacity(pts.len());
            let mut z2 = Vec::with_capacity(pts.len());
            for &x in &pts {
                let k = kernel_values(zpow(to_c(x), lambda) + al);
                z1.push(k[1]);
                z2.push(k[2]);
            }
            [z1, z2]
        };
        let wgt: Vec<f64> = pts.iter().map(|&x| sigma(x).powf(-2.0 - 2.0 * w.d)).collect();
        let z = kern(alpha);
        let sz: [Vec<f64>; 2] = [
            z[0].iter().zip(&wgt).map(|(a, b)| a * b).collect(),
            z[1].iter().zip(&wgt).map(|(a, b)| a * b).collect(),
        ];
        let mut gram = [[0.0; 2]; 2];
        for j in 0..2 {
            for k in 0..2 {
                gram[j][k] = grid.dot(&sz[k], &z[j]);
            }
        }
        let z0 = kern(Complex64::new(0.0, 0.0));
        let a11_0 = grid.dot(&z0[0], &z0[0].iter().zip(&wgt).map(|(a, b)| a * b).collect::<Vec<_>>());
        let det = gram[0][0] * gram[1][1] - gram[0][1] * gram[1][0];
        let threshold = 1e-6 * a11_0 * a11_0;
        if !(det >= threshold) {
            return Err(Error::SingularGram { det, threshold });
        }
        let inverse = [
            [gram[1][1] / det, -gram[0][1] / det],
            [-gram[1][0] / det, gram[0][0] / det],
        ];
        Ok(Projector { active: true, weight: w, z, sz, gram, inverse })
    }

    pub fn for_profile(profile: &LiouvilleProfile, w: WeightParams, grid: &DiskGrid) -> Result<Self> {
        Self::new(profile.alpha, profile.lambda, w, grid)
    }

    /// Solves the Gram system for `h`.
    pub fn system(&self, grid: &DiskGrid, h: &[f64]) -> GramSystem {
        if !self.active {
            return GramSystem { a: self.gram, b: [0.0; 2], c: [0.0; 2] };
        }
        let b = [grid.dot(h, &self.z[0]), grid.dot(h, &self.z[1])];
        let c = [
            self.inverse[0][0] * b[0] + self.inverse[0][1] * b[1],
            self.inverse[1][0] * b[0] + self.inverse[1][1] * b[1],
        ];
        GramSystem { a: self.gram, b, c }
    }

    /// `T_alpha h` and the removed coefficients `(c_1, c_2)`.
    pub fn project(&self, grid: &DiskGrid, h: &[f64]) -> (Vec<f64>, [f64; 2]) {
        if !self.active {
            return (h.to_vec(), [0.0; 2]);
        }
        let s = self.system(grid, h);
        let out = (0..h.len())
            .map(|k| h[k] - s.c[0] * self.sz[0][k] - s.c[1] * self.sz[1][k])
            .collect();
        (out, s.c)
    }
}

/// One-shot projection `T_alpha h`.
pub fn project_t(
    alpha: Complex64,
    lambda: Rational,
    w: WeightParams,
    grid: &DiskGrid,
    h: &[f64],
) -> Result<(Vec<f64>, [f64; 2])> {
    let p = Projector::new(alpha, lambda, w, grid)?;
    Ok(p.project(grid, h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn prof(l: Rational, alpha: Complex64, a: u32, b: u32) -> LiouvilleProfile {
        LiouvilleProfile::new(0.0, alpha, l, a, b).unwrap()
    }

    #[test]
    fn w_examples() {
        let p = prof(Rational::integer(1), c(0.0, 0.0), 1, 1);
        assert!((p.eval_w([0.0, 0.0]).unwrap() - (32.0f64 / 9.0).ln()).abs() < 1e-14);
        assert!((p.eval_w([0.6, 0.8]).unwrap() - (8.0f64 / 9.0).ln()).abs() < 1e-14);
        let q = prof(Rational::integer(2), c(0.0, 0.0), 1, 2);
        let z = [0.7, -0.3];
        let zr = [0.3, 0.7];
        assert!((q.eval_w(z).unwrap() - q.eval_w(zr).unwrap()).abs() < 1e-14);
        assert!(q.eval_w([0.0, 0.0]).is_err());
        assert!((q.eval_w_star([0.0, 0.0]) - 16.0f64.ln()).abs() < 1e-14);
        for k in 0..10 {
            let x = [0.3 * k as f64 - 1.0, 0.17 * k as f64 + 0.1];
            let r = x[0].hypot(x[1]);
            assert!((q.eval_w_star(x) + 2.0 * r.ln() - q.eval_w(x).unwrap()).abs() < 1e-13);
        }
    }

    #[test]
    fn kernel_examples() {
        let one = Rational::integer(1);
        let two = Rational::integer(2);
        let z0 = c(0.0, 0.0);
        assert_eq!(eval_z(z0, two, 0, [0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(eval_z(z0, two, 1, [0.0, 0.0]).unwrap(), 0.0);
        assert!((eval_z(z0, one, 0, [1.0, 0.0]).unwrap()).abs() < 1e-15);
        assert!((eval_z(z0, one, 1, [1.0, 0.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!((eval_z(c(0.0, 1.0), two, 2, [0.0, 0.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(eval_z(z0, one, 3, [0.0, 0.0]).is_err());
    }

    #[test]
    fn half_integer_rejects_alpha() {
        assert!(LiouvilleProfile::new(0.0, c(0.1, 0.0), Rational::new(3, 2), 1, 1).is_err());
    }

    #[test]
    fn branch_irrelevant_for_modulus() {
        let l = Rational::new(3, 2);
        for &x in &[[-1.0, 1e-12], [-1.0, -1e-12], [0.3, -2.0]] {
            let a = zpow(c(x[0], x[1]), l).norm();
            let r = x[0].hypot(x[1]);
            assert!((a - r.powf(1.5)).abs() < 1e-13);
        }
    }

    #[test]
    fn gram_offdiagonal_vanishes_at_zero() {
        let g = DiskGrid::new(RadialGrid::covering(60.0, 0.05, 1.0).unwrap(), 32).unwrap();
        let a = gram_matrix(c(0.0, 0.0), Rational::integer(2), WeightParams::default(), &g).unwrap();
        assert!(a[0][1].abs() < 1e-10 && a[1][0].abs() < 1e-10);
        assert!((a[0][0] - a[1][1]).abs() < 1e-10);
        assert!(gram_matrix(c(0.0, 0.0), Rational::new(3, 2), WeightParams::default(), &g).is_err());
    }

    #[test]
    fn projection_is_idempotent_and_orthogonal() {
        let g = DiskGrid::new(RadialGrid::covering(40.0, 0.06, 1.0).unwrap(), 16).unwrap();
        let p = Projector::new(c(0.1, -0.05), Rational::integer(2), WeightParams::default(), &g).unwrap();
        let h = g.sample(|x| (x[0] - 0.3 * x[1]).sin() / (1.0 + x[0] * x[0] + x[1] * x[1]).powi(2));
        let (t1, _) = p.project(&g, &h);
        assert!(g.dot(&t1, &p.z[0]).abs() < 1e-12);
        assert!(g.dot(&t1, &p.z[1]).abs() < 1e-12);
        let (t2, c2) = p.project(&g, &t1);
        assert!(c2[0].abs() < 1e-10 && c2[1].abs() < 1e-10);
        assert!(t1.iter().zip(&t2).all(|(a, b)| (a - b).abs() < 1e-12));
    }
}
