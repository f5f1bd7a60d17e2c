//! Gauge-group data, vortex configurations and the derived flux parameter.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Rank-two gauge groups admitted by the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Group {
    SU3,
    SO5,
    G2,
}

/// Which off-diagonal Cartan entry carries the larger value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Orientation {
    /// `(a, b) = (1, k)`.
    #[default]
    #[serde(rename = "ab")]
    Ab,
    /// `(a, b) = (k, 1)`.
    #[serde(rename = "ba")]
    Ba,
}

impl Group {
    pub fn parse(tag: &str) -> Result<Self> {
        let norm: String = tag
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_uppercase();
        match norm.as_str() {
            "SU3" => Ok(Group::SU3),
            "SO5" => Ok(Group::SO5),
            "G2" => Ok(Group::G2),
            _ => Err(Error::UnknownGroup(tag.to_string())),
        }
    }

    fn off_diagonal(self) -> u32 {
        match self {
            Group::SU3 => 1,
            Group::SO5 => 2,
            Group::G2 => 3,
        }
    }
}

impl Orientation {
    pub fn parse(tag: &str) -> Result<Self> {
        match tag.trim().to_ascii_lowercase().as_str() {
            "ab" | "(a,b)" => Ok(Orientation::Ab),
            "ba" | "(b,a)" => Ok(Orientation::Ba),
            _ => Err(Error::UnknownOrientation(tag.to_string())),
        }
    }
}

/// Off-diagonal Cartan entries `(a, b)` of `K = [[2, -b], [-a, 2]]`.
pub fn cartan_pair(group: Group, orientation: Orientation) -> (u32, u32) {
    let k = group.off_diagonal();
    match orientation {
        Orientation::Ab => (1, k),
        Orientation::Ba => (k, 1),
    }
}

/// Same as [`cartan_pair`] but from free-form tags, e.g. `("G2", "ba")`.
pub fn cartan_pair_from_tags(group: &str, orientation: &str) -> Result<(u32, u32)> {
    Ok(cartan_pair(Group::parse(group)?, Orientation::parse(orientation)?))
}

pub const ADMISSIBLE_PAIRS: [(u32, u32); 5] = [(1, 1), (1, 2), (2, 1), (1, 3), (3, 1)];

pub fn is_admissible(a: u32, b: u32) -> bool {
    ADMISSIBLE_PAIRS.contains(&(a, b))
}

/// Exact rational with positive denominator, kept in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rational {
    num: i64,
    den: i64,
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        let s = if den < 0 { -1 } else { 1 };
        let g = gcd(num, den).max(1);
        Rational {
            num: s * num / g,
            den: s * den / g,
        }
    }

    pub fn integer(n: i64) -> Self {
        Rational { num: n, den: 1 }
    }

    pub fn numer(&self) -> i64 {
        self.num
    }

    pub fn denom(&self) -> i64 {
        self.den
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    /// `Some(n)` iff the value is a positive integer.
    pub fn as_natural(&self) -> Option<u32> {
        (self.den == 1 && self.num > 0).then_some(self.num as u32)
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// `b N1 / 2 + N2 + 1`.
pub fn lambda_from_counts(b: u32, n1: usize, n2: usize) -> Rational {
    Rational::new(b as i64 * n1 as i64 + 2 * n2 as i64 + 2, 2)
}

/// Translate both point sets by one common shift so that
/// `sum_j b p_j + sum_k 2 q_k = 0`.
pub fn center_vortices(p: &[Point], q: &[Point], b: u32) -> (Vec<Point>, Vec<Point>) {
    let weight = b as f64 * p.len() as f64 + 2.0 * q.len() as f64;
    if weight == 0.0 {
        return (p.to_vec(), q.to_vec());
    }
    let mut s = [0.0; 2];
    for pt in p {
        s[0] += b as f64 * pt[0];
        s[1] += b as f64 * pt[1];
    }
    for pt in q {
        s[0] += 2.0 * pt[0];
        s[1] += 2.0 * pt[1];
    }
    let shift = [s[0] / weight, s[1] / weight];
    let mv = |pts: &[Point]| -> Vec<Point> {
        pts.iter()
            .map(|x| [x[0] - shift[0], x[1] - shift[1]])
            .collect()
    };
    (mv(p), mv(q))
}

/// Gauge model: Cartan pair, centered vortex data and the flux parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeModel {
    pub a: u32,
    pub b: u32,
    pub p_points: Vec<Point>,
    pub q_points: Vec<Point>,
    pub lambda: Rational,
}

/// Far-field limits distinguishing the three solution types.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolutionTypeLimits {
    pub topological_limit_1: Option<f64>,
    pub topological_limit_2: Option<f64>,
    pub mixed_limit_u1: f64,
}

impl GaugeModel {
    /// Builds a model; the vortex sets are centered on construction.
    pub fn new(a: u32, b: u32, p_points: Vec<Point>, q_points: Vec<Point>) -> Result<Self> {
        if !is_admissible(a, b) {
            return Err(Error::InvalidParameter(format!(
                "(a, b) = ({a}, {b}) is not a rank-two Cartan pair"
            )));
        }
        if p_points
            .iter()
            .chain(q_points.iter())
            .any(|x| !x[0].is_finite() || !x[1].is_finite())
        {
            return Err(Error::InvalidParameter("non-finite vortex point".into()));
        }
        let (p_points, q_points) = center_vortices(&p_points, &q_points, b);
        let lambda = lambda_from_counts(b, p_points.len(), q_points.len());
        Ok(GaugeModel {
            a,
            b,
            p_points,
            q_points,
            lambda,
        })
    }

    pub fn from_group(
        group: Group,
        orientation: Orientation,
        p_points: Vec<Point>,
        q_points: Vec<Point>,
    ) -> Result<Self> {
        let (a, b) = cartan_pair(group, orientation);
        Self::new(a, b, p_points, q_points)
    }

    pub fn n1(&self) -> usize {
        self.p_points.len()
    }

    pub fn n2(&self) -> usize {
        self.q_points.len()
    }

    pub fn af(&self) -> f64 {
        self.a as f64
    }

    pub fn bf(&self) -> f64 {
        self.b as f64
    }

    pub fn lambda_f64(&self) -> f64 {
        self.lambda.to_f64()
    }

    /// `4 - ab`, positive for every admissible pair.
    pub fn gap(&self) -> f64 {
        4.0 - (self.a * self.b) as f64
    }

    /// `(4 - ab)(2 + b) / 4`, the Liouville coefficient.
    pub fn liouville_coupling(&self) -> f64 {
        0.25 * self.gap() * (2.0 + self.bf())
    }

    /// `b N1 / 2 + N2 + 2`, the limiting flux exponent.
    pub fn beta_limit(&self) -> f64 {
        self.lambda_f64() + 1.0
    }

    pub fn all_at_origin(&self) -> bool {
        self.p_points
            .iter()
            .chain(self.q_points.iter())
            .all(|x| x[0] == 0.0 && x[1] == 0.0)
    }

    /// Largest vortex distance from the origin.
    pub fn max_radius(&self) -> f64 {
        self.p_points
            .iter()
            .chain(self.q_points.iter())
            .map(|x| x[0].hypot(x[1]))
            .fold(0.0, f64::max)
    }

    pub fn limits(&self) -> SolutionTypeLimits {
        let det = self.gap();
        let (a, b) = (self.af(), self.bf());
        // columns of K^{-1} = [[2, b], [a, 2]] / (4 - ab)
        let col1 = (2.0 + a) / det;
        let col2 = (b + 2.0) / det;
        SolutionTypeLimits {
            topological_limit_1: (col1 > 0.0).then(|| col1.ln()),
            topological_limit_2: (col2 > 0.0).then(|| col2.ln()),
            mixed_limit_u1: -(2.0f64).ln(),
        }
    }

    /// Rejects the configuration `b = 1, N1 = 2, N2 = 0, p2 = -p1 != 0`,
    /// for which the construction is not available.
    pub fn reject_excluded_case(&self) -> Result<()> {
        if self.b == 1 && self.n1() == 2 && self.n2() == 0 {
            let [p1, p2] = [self.p_points[0], self.p_points[1]];
            let scale = 1.0 + p1[0].hypot(p1[1]);
            let antipodal = (p1[0] + p2[0]).hypot(p1[1] + p2[1]) <= 1e-12 * scale;
            let nonzero = p1[0].hypot(p1[1]) > 1e-12;
            if antipodal && nonzero {
                return Err(Error::Unsupported(
                    "b = 1, N1 = 2, N2 = 0 with p2 = -p1 != 0".into(),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_from_tags() {
        assert_eq!(cartan_pair_from_tags("SU(3)", "ab").unwrap(), (1, 1));
        assert_eq!(cartan_pair_from_tags("SO5", "ab").unwrap(), (1, 2));
        assert_eq!(cartan_pair_from_tags("G_2", "ba").unwrap(), (3, 1));
        assert!(cartan_pair_from_tags("SU4", "ab").is_err());
        assert!(cartan_pair_from_tags("SU3", "xy").is_err());
    }

    #[test]
    fn lambda_values() {
        assert_eq!(lambda_from_counts(1, 0, 0), Rational::integer(1));
        assert_eq!(lambda_from_counts(1, 1, 0), Rational::new(3, 2));
        assert_eq!(lambda_from_counts(2, 2, 0), Rational::integer(3));
        assert!(!lambda_from_counts(3, 1, 0).is_integer());
    }

    #[test]
    fn lambda_one_iff_no_vortices() {
        for &(a, b) in &ADMISSIBLE_PAIRS {
            for n1 in 0..4 {
                for n2 in 0..4 {
                    let l = lambda_from_counts(b, n1, n2);
                    assert!(l.to_f64() >= 1.0);
                    assert_eq!(l == Rational::integer(1), n1 == 0 && n2 == 0, "{a} {b}");
                    assert!(l.denom() == 1 || l.denom() == 2);
                }
            }
        }
    }

    #[test]
    fn admissible_pair_constants() {
        for &(a, b) in &ADMISSIBLE_PAIRS {
            let gap = 4 - (a * b) as i64;
            assert!([1, 2, 3].contains(&gap));
            assert!(gap * (2 + b as i64) > 0);
            assert_ne!(a * b * b * b, 16);
            assert!([1, 2, 3, 8, 27].contains(&(a * b * b * b)));
        }
        assert!(GaugeModel::new(2, 2, vec![], vec![]).is_err());
    }

    #[test]
    fn centering_examples() {
        let (p, q) = center_vortices(&[[2.0, 0.0]], &[], 1);
        assert_eq!(p, vec![[0.0, 0.0]]);
        assert!(q.is_empty());

        let pts = [[1.0, 0.0], [-1.0, 0.0]];
        let (p, _) = center_vortices(&pts, &[], 1);
        assert_eq!(p, pts.to_vec());

        let (p, q) = center_vortices(&[[1.0, 0.0]], &[[1.0, 0.0]], 2);
        assert_eq!(p, vec![[0.0, 0.0]]);
        assert_eq!(q, vec![[0.0, 0.0]]);

        let (p, q) = center_vortices(&[], &[], 3);
        assert!(p.is_empty() && q.is_empty());
    }

    #[test]
    fn mixed_limit_is_minus_ln2() {
        for &(a, b) in &ADMISSIBLE_PAIRS {
            let m = GaugeModel::new(a, b, vec![], vec![]).unwrap();
            let lim = m.limits();
            assert_eq!(lim.mixed_limit_u1, -(2.0f64).ln());
            assert!(lim.topological_limit_1.is_some() && lim.topological_limit_2.is_some());
        }
        // SU(3): K^{-1} column sums are both 1
        let m = GaugeModel::new(1, 1, vec![], vec![]).unwrap();
        assert!(m.limits().topological_limit_1.unwrap().abs() < 1e-15);
    }

    #[test]
    fn excluded_case() {
        let m = GaugeModel::new(1, 1, vec![[1.0, 0.0], [-1.0, 0.0]], vec![]).unwrap();
        assert!(matches!(m.reject_excluded_case(), Err(Error::Unsupported(_))));
        // any two b = 1 vortices center to an antipodal pair unless they coincide
        let m = GaugeModel::new(1, 1, vec![[3.0, 1.0], [1.0, 1.0]], vec![]).unwrap();
        assert!(m.reject_excluded_case().is_err());
        let m = GaugeModel::new(1, 1, vec![[0.0, 0.0], [0.0, 0.0]], vec![]).unwrap();
        assert!(m.reject_excluded_case().is_ok());
        let m = GaugeModel::new(1, 2, vec![[1.0, 0.0], [-1.0, 0.0]], vec![]).unwrap();
        assert!(m.reject_excluded_case().is_ok());
        let m = GaugeModel::new(1, 1, vec![[1.0, 0.0], [-1.0, 0.0]], vec![[0.0, 0.0]]).unwrap();
        assert!(m.reject_excluded_case().is_ok());
    }

    proptest::proptest! {
        #[test]
        fn centering_is_idempotent_and_balanced(
            p in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 0..5),
            q in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 0..5),
            b in 1u32..4,
        ) {
            let p: Vec<Point> = p.into_iter().map(|(x, y)| [x, y]).collect();
            let q: Vec<Point> = q.into_iter().map(|(x, y)| [x, y]).collect();
            let (p1, q1) = center_vortices(&p, &q, b);
            let mut s = [0.0f64; 2];
            for x in &p1 { s[0] += b as f64 * x[0]; s[1] += b as f64 * x[1]; }
            for x in &q1 { s[0] += 2.0 * x[0]; s[1] += 2.0 * x[1]; }
            proptest::prop_assert!(s[0].abs() < 1e-12 && s[1].abs() < 1e-12);
            let (p2, q2) = center_vortices(&p1, &q1, b);
            for (u, v) in p1.iter().zip(&p2).chain(q1.iter().zip(&q2)) {
                proptest::prop_assert!((u[0] - v[0]).abs() < 1e-13 && (u[1] - v[1]).abs() < 1e-13);
            }
        }
    }
}
