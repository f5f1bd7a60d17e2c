//! Run configuration read from JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{cartan_pair_from_tags, GaugeModel, Point};
use crate::solver::{ShootOptions, SolverOptions};

/// Smallest angular resolution accepted for two-dimensional grids.
pub const MIN_N_THETA: usize = 16;
/// Largest accepted stretched-coordinate step.
pub const MAX_STEP: f64 = 0.05;

/// Either a named group or an explicit Cartan pair, plus the vortices.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<u32>,
    #[serde(default)]
    pub p: Vec<Point>,
    #[serde(default)]
    pub q: Vec<Point>,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec { group: Some("SU3".into()), orientation: None, a: None, b: None, p: vec![], q: vec![] }
    }
}

impl ModelSpec {
    pub fn pair(&self) -> Result<(u32, u32)> {
        match (&self.group, self.a, self.b) {
            (Some(g), None, None) => cartan_pair_from_tags(g, self.orientation.as_deref().unwrap_or("ab")),
            (None, Some(a), Some(b)) if self.orientation.is_none() => Ok((a, b)),
            _ => Err(Error::Config("model: give either `group` (with optional `orientation`) or both `a` and `b`".into())),
        }
    }

    pub fn build(&self) -> Result<GaugeModel> {
        let (a, b) = self.pair()?;
        GaugeModel::new(a, b, self.p.clone(), self.q.clone())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub shoot: ShootOptions,
    /// Positive and strictly decreasing.
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    #[serde(default = "default_out")]
    pub out: String,
    #[serde(default)]
    pub strict: bool,
}

fn default_eps() -> Vec<f64> {
    vec![0.05, 0.025, 0.0125]
}

fn default_out() -> String {
    "csvortex".into()
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelSpec::default(),
            solver: SolverOptions::default(),
            shoot: ShootOptions::default(),
            eps: default_eps(),
            out: default_out(),
            strict: false,
        }
    }
}

/// Checks an `eps` list: non-empty, each in `(0, 1)`, strictly decreasing.
pub fn validate_eps(eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        return Err(Error::Config("eps: the list is empty".into()));
    }
    if let Some(e) = eps.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
        return Err(Error::Config(format!("eps: {e} is not in (0, 1)")));
    }
    if eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Config("eps: values must be strictly decreasing".into()));
    }
    Ok(())
}

impl RunConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
            Error::Config(format!("{origin}: line {}, column {}: {e}", e.line(), e.column()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        self.model.build().map_err(|e| Error::Config(format!("model: {e}")))?;
        validate_eps(&self.eps)?;
        let s = &self.solver;
        if !(s.weight_d > 0.0 && s.weight_d < 0.25) {
            return Err(Error::Config(format!("solver.weight_d: {} is not in (0, 1/4)", s.weight_d)));
        }
        for (name, h) in [("solver.topo.h", s.topo.h), ("solver.radial.h", s.radial.h)] {
            if !(h > 0.0 && h <= MAX_STEP) {
                return Err(Error::Config(format!("{name}: {h} is not in (0, {MAX_STEP}]")));
            }
        }
        if s.topo.n_theta < MIN_N_THETA {
            return Err(Error::Config(format!("solver.topo.n_theta: {} is below {MIN_N_THETA}", s.topo.n_theta)));
        }
        if !(s.r_y >= 10.0 && s.radial.r_y >= 10.0) {
            return Err(Error::Config("solver.r_y and solver.radial.r_y must be at least 10".into()));
        }
        let positive = [
            ("solver.topo.scale", s.topo.scale),
            ("solver.radial.scale", s.radial.scale),
            ("solver.picard.tol", s.picard.tol),
            ("solver.picard.ball_radius", s.picard.ball_radius),
            ("solver.alpha.tol", s.alpha.tol),
            ("solver.alpha.fd_step", s.alpha.fd_step),
            ("solver.residual_tol", s.residual_tol),
            ("shoot.r0", self.shoot.r0),
            ("shoot.rtol", self.shoot.rtol),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(Error::Config(format!("{name}: {v} must be positive")));
        }
        if self.out.is_empty() {
            return Err(Error::Config("out: empty output prefix".into()));
        }
        Ok(())
    }

    /// Solver options with the top-level strict flag folded in.
    pub fn solver_options(&self) -> SolverOptions {
        let mut s = self.solver.clone();
        s.strict |= self.strict;
        s
    }

    /// SHA-256 of the canonical JSON of the parsed configuration. The output
    /// prefix is left out so that relocating a run keeps its hash.
    pub fn hash(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(m) = v.as_object_mut() {
            m.remove("out");
        }
        let text = crate::report::canonical_json(&v)?;
        let digest = Sha256::digest(text.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_hash_is_stable() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.hash().unwrap(), RunConfig::from_json("{}", "test").unwrap().hash().unwrap());
        assert_eq!(c.hash().unwrap().len(), 64);
        let moved = RunConfig { out: "elsewhere/run".into(), ..RunConfig::default() };
        assert_eq!(moved.hash().unwrap(), c.hash().unwrap());
    }

    #[test]
    fn explicit_pair_and_group_forms() {
        let c = RunConfig::from_json(r#"{"model": {"a": 1, "b": 2, "p": [[0, 0]]}}"#, "t").unwrap();
        assert_eq!(c.model.pair().unwrap(), (1, 2));
        let g = RunConfig::from_json(r#"{"model": {"group": "G2", "orientation": "ba"}}"#, "t").unwrap();
        assert_eq!(g.model.pair().unwrap(), (3, 1));
        assert!(RunConfig::from_json(r#"{"model": {"group": "SU3", "a": 1}}"#, "t").is_err());
    }

    #[test]
    fn malformed_input_reports_position() {
        let e = RunConfig::from_json("{\n  \"eps\": [0.1,\n}", "cfg.json").unwrap_err();
        assert!(matches!(&e, Error::Config(m) if m.contains("line 3")), "{e}");
        let e = RunConfig::from_json(r#"{"epsilon": [0.1]}"#, "cfg.json").unwrap_err();
        assert!(matches!(&e, Error::Config(m) if m.contains("epsilon")), "{e}");
    }

    #[test]
    fn eps_ladder_rules() {
        assert!(validate_eps(&[0.1, 0.05]).is_ok());
        assert!(validate_eps(&[0.05, 0.1]).is_err());
        assert!(validate_eps(&[0.1, 0.1]).is_err());
        assert!(validate_eps(&[0.1, -0.05]).is_err());
        assert!(validate_eps(&[]).is_err());
    }

    #[test]
    fn weight_exponent_must_lie_below_a_quarter() {
        assert!(RunConfig::from_json(r#"{"solver": {"weight_d": 0.3}}"#, "t").is_err());
        assert!(RunConfig::from_json(r#"{"solver": {"topo": {"n_theta": 4}}}"#, "t").is_err());
    }
}
