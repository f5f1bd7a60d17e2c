//! Polar finite-difference grids, quadrature and the weighted norms of the
//! spaces `X` and `Y`.
//!
//! Radial nodes sit at `r_i = c sinh(t_i)` with `t_i = (i + 1/2) h`, so the
//! origin is never a node and the reflection `r -> -r` maps the node set onto
//! itself shifted by half the angular period. That reflection supplies the
//! ghost value inside the origin and keeps the stencil second order there.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// `1 + |x|`.
pub fn sigma(x: [f64; 2]) -> f64 {
    1.0 + x[0].hypot(x[1])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightParams {
    pub d: f64,
}

impl Default for WeightParams {
    fn default() -> Self {
        WeightParams { d: 0.1 }
    }
}

impl WeightParams {
    pub fn new(d: f64) -> Result<Self> {
        if d > 0.0 && d < 0.25 {
            Ok(WeightParams { d })
        } else {
            Err(Error::InvalidParameter(format!("weight exponent d = {d} not in (0, 1/4)")))
        }
    }
}

/// Radial nodes uniform in the stretched coordinate `t = asinh(r / c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub h: f64,
    pub scale: f64,
    t: Vec<f64>,
    r: Vec<f64>,
    /// Boundary radius, where Dirichlet ghost data live.
    pub r_boundary: f64,
}

impl RadialGrid {
    /// `m` unknown rings; the Dirichlet ring sits at index `m`.
    pub fn new(h: f64, m: usize, scale: f64) -> Result<Self> {
        if m < 4 {
            return Err(Error::GridTooCoarse(format!("{m} radial nodes")));
        }
        if !(h > 0.0 && scale > 0.0) {
            return Err(Error::InvalidParameter("grid spacing and scale must be positive".into()));
        }
        let t: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) * h).collect();
        let r = t.iter().map(|&t| scale * t.sinh()).collect();
        let r_boundary = scale * ((m as f64 + 0.5) * h).sinh();
        Ok(RadialGrid { h, scale, t, r, r_boundary })
    }

    /// Grid whose Dirichlet ring lies at (or just beyond) `r_out`.
    pub fn covering(r_out: f64, h: f64, scale: f64) -> Result<Self> {
        let t_out = (r_out / scale).asinh();
        let m = ((t_out / h - 0.5).ceil() as usize).max(4);
        Self::new(h, m, scale)
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    /// Radius of the last unknown ring, the edge of the quadrature disk.
    pub fn r_max(&self) -> f64 {
        *self.r.last().expect("non-empty")
    }

    pub fn t_of(&self, r: f64) -> f64 {
        (r / self.scale).asinh()
    }

    /// Coefficients `(c_minus, c_plus, c_theta)` of the Laplacian stencil at
    /// ring `i`; `c_theta` multiplies `u_tt`-free angular second difference
    /// before division by `dtheta^2`.
    pub fn stencil(&self, i: usize) -> (f64, f64, f64) {
        let t = self.t[i];
        let (s, c) = (t.sinh(), t.cosh());
        let c2 = self.scale * self.scale;
        let a = 1.0 / (c2 * c * c);
        let b = 1.0 / (c2 * s * c * c * c);
        let h = self.h;
        (a / (h * h) - b / (2.0 * h), a / (h * h) + b / (2.0 * h), 1.0 / (c2 * s * s))
    }

    /// Radial quadrature weights `omega_i` with `int_0^{r_max} F r dr ~
    /// sum omega_i F(r_i) / 2`: a cubic-interpolatory rule in `s = r^2`.
    fn s_weights(&self) -> Vec<f64> {
        let s: Vec<f64> = self.r.iter().map(|r| r * r).collect();
        let m = s.len();
        let mut w = vec![0.0; m];
        let gl = [
            (-(0.6f64).sqrt(), 5.0 / 9.0),
            (0.0, 8.0 / 9.0),
            ((0.6f64).sqrt(), 5.0 / 9.0),
        ];
        let mut add_interval = |lo: f64, hi: f64, k0: usize| {
            let idx = [k0, k0 + 1, k0 + 2, k0 + 3];
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for &(x, wq) in &gl {
                let p = mid + half * x;
                for (a, &ia) in idx.iter().enumerate() {
                    let mut l = 1.0;
                    for (b, &ib) in idx.iter().enumerate() {
                        if a != b {
                            l *= (p - s[ib]) / (s[ia] - s[ib]);
                        }
                    }
                    w[ia] += wq * half * l;
                }
            }
        };
        add_interval(0.0, s[0], 0);
        for i in 0..m - 1 {
            let k0 = i.saturating_sub(1).min(m - 4);
            add_interval(s[i], s[i + 1], k0);
        }
        w
    }
}

/// Polar tensor grid: radial rings times uniform angles.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskGrid {
    pub radial: RadialGrid,
    pub n_theta: usize,
    weights: Vec<f64>,
    radial_weights: Vec<f64>,
}

impl DiskGrid {
    pub fn new(radial: RadialGrid, n_theta: usize) -> Result<Self> {
        if n_theta < 8 || n_theta % 2 != 0 {
            return Err(Error::GridTooCoarse(format!(
                "angular node count {n_theta} must be even and at least 8"
            )));
        }
        Ok(Self::build(radial, n_theta))
    }

    /// Single-angle grid for radially symmetric problems.
    pub fn axisymmetric(radial: RadialGrid) -> Self {
        Self::build(radial, 1)
    }

    fn build(radial: RadialGrid, n_theta: usize) -> Self {
        let om = radial.s_weights();
        let dth = 2.0 * PI / n_theta as f64;
        let radial_weights: Vec<f64> = om.iter().map(|w| 0.5 * w * dth).collect();
        let mut weights = Vec::with_capacity(om.len() * n_theta);
        for &w in &radial_weights {
            weights.extend(std::iter::repeat(w).take(n_theta));
        }
        DiskGrid { radial, n_theta, weights, radial_weights }
    }

    pub fn is_axisymmetric(&self) -> bool {
        self.n_theta == 1
    }

    pub fn n_r(&self) -> usize {
        self.radial.len()
    }

    pub fn len(&self) -> usize {
        self.n_r() * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_theta + j
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.dtheta()
    }

    pub fn r(&self, i: usize) -> f64 {
        self.radial.r()[i]
    }

    pub fn r_max(&self) -> f64 {
        self.radial.r_max()
    }

    pub fn point(&self, k: usize) -> [f64; 2] {
        let (i, j) = (k / self.n_theta, k % self.n_theta);
        let (r, th) = (self.r(i), self.theta(j));
        [r * th.cos(), r * th.sin()]
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Quadrature weight of one node on ring `i`.
    pub fn ring_weight(&self, i: usize) -> f64 {
        self.radial_weights[i]
    }

    /// Angular index of the node opposite to `j` through the origin.
    pub fn opposite(&self, j: usize) -> usize {
        if self.n_theta == 1 {
            0
        } else {
            (j + self.n_theta / 2) % self.n_theta
        }
    }

    pub fn hash(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "disk:h={:e};m={};scale={:e};ntheta={}",
            self.radial.h,
            self.radial.len(),
            self.radial.scale,
            self.n_theta
        );
        let digest = Sha256::digest(s.as_bytes());
        digest.iter().take(8).fold(String::new(), |mut acc, b| {
            let _ = write!(acc, "{b:02x}");
            acc
        })
    }

    pub fn sample<F: Fn([f64; 2]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len()).map(|k| f(self.point(k))).collect()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        pairwise_sum(values.iter().zip(&self.weights).map(|(v, w)| v * w))
    }

    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        pairwise_sum(a.iter().zip(b).zip(&self.weights).map(|((x, y), w)| x * y * w))
    }

    /// Discrete Laplacian. `outer` supplies ghost values beyond the last ring
    /// (one per angle); `None` extrapolates linearly.
    pub fn laplacian(&self, u: &[f64], outer: Option<&[f64]>) -> Vec<f64> {
        let (nr, nt) = (self.n_r(), self.n_theta);
        let dth2 = self.dtheta().powi(2);
        let mut out = vec![0.0; u.len()];
        for i in 0..nr {
            let (cm, cp, ct) = self.radial.stencil(i);
            for j in 0..nt {
                let k = self.idx(i, j);
                let um = if i == 0 { u[self.idx(0, self.opposite(j))] } else { u[k - nt] };
                let up = if i + 1 < nr {
                    u[k + nt]
                } else {
                    match outer {
                        Some(g) => g[j],
                        None => 2.0 * u[k] - u[k - nt],
                    }
                };
                let mut v = cm * (um - u[k]) + cp * (up - u[k]);
                if nt > 1 {
                    let jl = (j + nt - 1) % nt;
                    let jr = (j + 1) % nt;
                    v += ct * (u[self.idx(i, jl)] + u[self.idx(i, jr)] - 2.0 * u[k]) / dth2;
                }
                out[k] = v;
            }
        }
        out
    }

    /// Sparse entries `(row, col, value)` of the discrete Laplacian with the
    /// outer ghost ring removed (homogeneous Dirichlet data).
    pub fn laplacian_entries(&self) -> Vec<(usize, usize, f64)> {
        let (nr, nt) = (self.n_r(), self.n_theta);
        let dth2 = self.dtheta().powi(2);
        let mut e = Vec::with_capacity(5 * self.len());
        for i in 0..nr {
            let (cm, cp, ct) = self.radial.stencil(i);
            for j in 0..nt {
                let k = self.idx(i, j);
                let mut diag = -cm - cp;
                if i == 0 {
                    e.push((k, self.idx(0, self.opposite(j)), cm));
                } else {
                    e.push((k, k - nt, cm));
                }
                if i + 1 < nr {
                    e.push((k, k + nt, cp));
                }
                if nt > 1 {
                    let c = ct / dth2;
                    e.push((k, self.idx(i, (j + nt - 1) % nt), c));
                    e.push((k, self.idx(i, (j + 1) % nt), c));
                    diag -= 2.0 * c;
                }
                e.push((k, k, diag));
            }
        }
        e
    }

    /// Weight of the outer ghost value in the last-ring stencil.
    pub fn outer_coefficient(&self) -> f64 {
        self.radial.stencil(self.n_r() - 1).1
    }

    /// Bilinear interpolation in `(t, theta)`; `None` beyond the last ring.
    pub fn interpolate(&self, u: &[f64], x: [f64; 2]) -> Option<f64> {
        let r = x[0].hypot(x[1]);
        let rad = &self.radial;
        if r > rad.r_max() {
            return None;
        }
        let nt = self.n_theta;
        let th = x[1].atan2(x[0]).rem_euclid(2.0 * PI);
        let (j0, j1, fj) = if nt == 1 {
            (0, 0, 0.0)
        } else {
            let q = th / self.dtheta();
            let j0 = (q.floor() as usize) % nt;
            (j0, (j0 + 1) % nt, q - q.floor())
        };
        let ring = |i: isize, j: usize| -> f64 {
            if i < 0 {
                u[self.idx(0, self.opposite(j))]
            } else {
                u[self.idx(i as usize, j)]
            }
        };
        let q = rad.t_of(r) / rad.h - 0.5;
        let i0 = (q.floor() as isize).min(self.n_r() as isize - 2);
        let fi = q - i0 as f64;
        let lo = ring(i0, j0) * (1.0 - fj) + ring(i0, j1) * fj;
        let hi = ring(i0 + 1, j0) * (1.0 - fj) + ring(i0 + 1, j1) * fj;
        Some(lo * (1.0 - fi) + hi * fi)
    }

    /// Radial average of each ring.
    pub fn ring_means(&self, u: &[f64]) -> Vec<f64> {
        let nt = self.n_theta;
        u.chunks(nt).map(|c| c.iter().sum::<f64>() / nt as f64).collect()
    }
}

/// Summation by recursive halving, for reproducible rounding.
pub fn pairwise_sum<I: Iterator<Item = f64>>(it: I) -> f64 {
    let v: Vec<f64> = it.collect();
    fn rec(v: &[f64]) -> f64 {
        if v.len() <= 32 {
            v.iter().sum()
        } else {
            let m = v.len() / 2;
            rec(&v[..m]) + rec(&v[m..])
        }
    }
    rec(&v)
}

/// Real function sampled on a disk grid.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: Arc<DiskGrid>,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Arc<DiskGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "field has {} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: Arc<DiskGrid>) -> Self {
        let n = grid.len();
        ScalarField { grid, values: vec![0.0; n] }
    }

    pub fn from_fn<F: Fn([f64; 2]) -> f64>(grid: Arc<DiskGrid>, f: F) -> Self {
        let values = grid.sample(f);
        ScalarField { grid, values }
    }

    pub fn check_finite(&self, name: &str) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(name.to_string()))
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn integrate(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn l2_norm(&self) -> f64 {
        self.grid.dot(&self.values, &self.values).sqrt()
    }

    pub fn interpolate(&self, x: [f64; 2]) -> Option<f64> {
        self.grid.interpolate(&self.values, x)
    }

    /// Writes `r,theta,value` rows under a header naming the field and grid.
    pub fn write_csv(&self, path: &Path, name: &str) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "# field={name} grid={}", self.grid.hash())?;
        writeln!(out, "r,theta,value")?;
        for (k, v) in self.values.iter().enumerate() {
            let (i, j) = (k / self.grid.n_theta, k % self.grid.n_theta);
            writeln!(out, "{},{},{}", self.grid.r(i), self.grid.theta(j), v)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `|| sigma^{1+d} h ||_{L^2}` on the truncated disk.
pub fn norm_y(h: &ScalarField, w: WeightParams) -> Result<f64> {
    h.check_finite("norm_Y argument")?;
    Ok(norm_y_values(&h.grid, &h.values, w))
}

pub fn norm_y_values(grid: &DiskGrid, h: &[f64], w: WeightParams) -> f64 {
    let s: Vec<f64> = (0..grid.len())
        .map(|k| {
            let sg = sigma(grid.point(k)).powf(1.0 + w.d);
            (sg * h[k]).powi(2)
        })
        .collect();
    grid.integrate(&s).sqrt()
}

/// `(|| sigma^{1+d} Lap v ||^2 + || sigma^{-1-d} v ||^2)^{1/2}`; the Laplacian
/// on the last ring uses linear ghost extrapolation.
pub fn norm_x(v: &ScalarField, w: WeightParams) -> Result<f64> {
    if v.grid.n_r() < 3 {
        return Err(Error::GridTooCoarse("norm_X needs three rings".into()));
    }
    v.check_finite("norm_X argument")?;
    Ok(norm_x_values(&v.grid, &v.values, w))
}

pub fn norm_x_values(grid: &DiskGrid, v: &[f64], w: WeightParams) -> f64 {
    let lap = grid.laplacian(v, None);
    let s: Vec<f64> = (0..grid.len())
        .map(|k| {
            let sg = sigma(grid.point(k)).powf(1.0 + w.d);
            (sg * lap[k]).powi(2) + (v[k] / sg).powi(2)
        })
        .collect();
    grid.integrate(&s).sqrt()
}

/// Discrete `H^2` surrogate: `(||v||^2 + ||Lap v||^2)^{1/2}`.
pub fn norm_h2_values(grid: &DiskGrid, v: &[f64]) -> f64 {
    let lap = grid.laplacian(v, None);
    let s: Vec<f64> = v.iter().zip(&lap).map(|(a, b)| a * a + b * b).collect();
    grid.integrate(&s).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk(h: f64, r: f64, nt: usize) -> DiskGrid {
        DiskGrid::new(RadialGrid::covering(r, h, 1.0).unwrap(), nt).unwrap()
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma([0.0, 0.0]), 1.0);
        assert_eq!(sigma([3.0, 4.0]), 6.0);
        assert_eq!(sigma([-1.0, 0.0]), 2.0);
    }

    #[test]
    fn weights_sum_to_area_and_positive() {
        let g = disk(0.05, 12.0, 16);
        let area = PI * g.r_max().powi(2);
        let total: f64 = g.weights().iter().sum();
        assert!((total - area).abs() / area < 1e-10);
        assert!(g.weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn quadratic_exactness() {
        let g = disk(0.1, 5.0, 8);
        let rm = g.r_max();
        let exact_x2 = PI * rm.powi(4) / 4.0;
        let x2 = g.integrate(&g.sample(|p| p[0] * p[0]));
        let xy = g.integrate(&g.sample(|p| p[0] * p[1] + 3.0 * p[0] - p[1]));
        assert!((x2 - exact_x2).abs() / exact_x2 < 1e-10);
        assert!(xy.abs() < 1e-10 * exact_x2);
    }

    #[test]
    fn gaussian_integral() {
        let g = disk(0.01, 12.0, 8);
        let v = g.integrate(&g.sample(|p| (-(p[0] * p[0] + p[1] * p[1])).exp()));
        assert!((v - PI).abs() < 1e-6, "{v}");
    }

    #[test]
    fn laplacian_of_r_squared() {
        let mut errs = vec![];
        for &h in &[0.08, 0.04] {
            let g = disk(h, 3.0, 16);
            let u = g.sample(|p| p[0] * p[0] + p[1] * p[1]);
            let ghost: Vec<f64> = vec![g.radial.r_boundary.powi(2); g.n_theta];
            let lap = g.laplacian(&u, Some(&ghost));
            let e = lap.iter().fold(0.0f64, |m, v| m.max((v - 4.0).abs()));
            errs.push(e);
        }
        assert!(errs[0] < 0.05);
        if errs[1] > 1e-12 {
            let ratio = errs[0] / errs[1];
            assert!((3.2..=4.8).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn laplacian_second_order_on_dipole() {
        let f = |p: [f64; 2]| p[0] * (-(p[0] * p[0] + p[1] * p[1])).exp();
        let lf = |p: [f64; 2]| {
            let r2 = p[0] * p[0] + p[1] * p[1];
            p[0] * (4.0 * r2 - 8.0) * (-r2).exp()
        };
        let mut errs = vec![];
        for &(h, nt) in &[(0.04, 64usize), (0.02, 128)] {
            let g = disk(h, 4.0, nt);
            let u = g.sample(f);
            let lap = g.laplacian(&u, Some(&vec![0.0; nt]));
            let e = (0..g.len())
                .filter(|&k| (0.5..3.0).contains(&g.r(k / nt)))
                .map(|k| (lap[k] - lf(g.point(k))).abs())
                .fold(0.0, f64::max);
            errs.push(e);
        }
        let ratio = errs[0] / errs[1];
        assert!(ratio > 3.0, "ratio {ratio}, errs {errs:?}");
    }

    #[test]
    fn interpolation_reproduces_smooth() {
        let g = disk(0.02, 5.0, 128);
        let f = |p: [f64; 2]| (0.5 * p[0]).sin() + p[1] * p[1] * 0.1;
        let u = g.sample(f);
        for &x in &[[0.3, -0.2], [1.7, 2.1], [-3.0, 0.5], [0.001, 0.002]] {
            let v = g.interpolate(&u, x).unwrap();
            assert!((v - f(x)).abs() < 2e-3, "{x:?}");
        }
        assert!(g.interpolate(&u, [10.0, 0.0]).is_none());
    }

    #[test]
    fn angular_count_rules() {
        let r = RadialGrid::new(0.1, 10, 1.0).unwrap();
        assert!(DiskGrid::new(r.clone(), 6).is_err());
        assert!(DiskGrid::new(r.clone(), 9).is_err());
        assert!(DiskGrid::new(r, 8).is_ok());
    }

    #[test]
    fn norms_homogeneous() {
        let g = Arc::new(disk(0.05, 10.0, 16));
        let w = WeightParams::default();
        let h = ScalarField::from_fn(g.clone(), |p| (-(p[0] * p[0] + p[1] * p[1])).exp() * (1.0 + p[0]));
        let a = norm_y(&h, w).unwrap();
        let b = norm_y(&h.scaled(-3.0), w).unwrap();
        assert!((b - 3.0 * a).abs() <= 1e-12 * b);
        let x1 = norm_x(&h, w).unwrap();
        let x2 = norm_x(&h.scaled(2.0), w).unwrap();
        assert!((x2 - 2.0 * x1).abs() <= 1e-12 * x2);
        assert_eq!(norm_y(&ScalarField::zeros(g.clone()), w).unwrap(), 0.0);
        assert_eq!(norm_x(&ScalarField::zeros(g), w).unwrap(), 0.0);
    }

    #[test]
    fn csv_header_names_field_and_grid() {
        let g = Arc::new(disk(0.2, 3.0, 8));
        let f = ScalarField::zeros(g.clone());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        f.write_csv(&p, "xi").unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), format!("# field=xi grid={}", g.hash()));
        assert_eq!(lines.next().unwrap(), "r,theta,value");
        assert_eq!(lines.count(), g.len());
    }
}
