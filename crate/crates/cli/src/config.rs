//! Run configuration: a single self-describing JSON document that names the
//! operator, the frequency grid, the data profile, and what to measure.

use hypdecay::decay::{DataProfile, VERIFY_POWER_TOL, VERIFY_RATE_REL_TOL};
use hypdecay::symbol::OperatorJson;
use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::path::PathBuf;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub operator: OperatorSource,
    pub grid: GridSpec,
    pub data: DataSpec,
    #[serde(default = "default_pq")]
    pub pq: Vec<PqPair>,
    #[serde(default)]
    pub derivatives: DerivativeSpec,
    #[serde(default)]
    pub time_window: TimeWindow,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Where outputs go unless `--out` or `HYPDECAY_OUT` says otherwise.
    /// Excluded from serialization so the report hash does not depend on
    /// where the artifacts land.
    #[serde(default, skip_serializing)]
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.pq.is_empty() {
            return Err("at least one (p, q) pair is required".into());
        }
        for pair in &self.pq {
            pair.validate()?;
        }
        let d = &self.derivatives;
        if d.time_orders.is_empty() || d.space_orders.is_empty() {
            return Err("derivative order lists must be nonempty".into());
        }
        if d.time_orders.iter().chain(d.space_orders.iter()).any(|&o| o > 8) {
            return Err("derivative orders above 8 are not supported".into());
        }
        let w = &self.time_window;
        if !(w.t_max.is_finite() && w.t_max > 0.0) || w.samples < 4 {
            return Err(format!(
                "time window needs t_max > 0 and at least 4 samples, got ({}, {})",
                w.t_max, w.samples
            ));
        }
        let t = &self.tolerances;
        if !(t.power > 0.0 && t.rate_rel > 0.0) {
            return Err("tolerances must be positive".into());
        }
        self.data.profile.validate().map_err(|e| e.to_string())?;
        Ok(())
    }

    /// Sample times for the decay fits: log-spaced over the late half of
    /// the window, where transients are gone but the envelope still moves.
    pub fn sample_times(&self) -> Vec<f64> {
        hypdecay::decay::log_spaced_times(
            0.5 * self.time_window.t_max,
            self.time_window.t_max,
            self.time_window.samples,
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSource {
    /// Symbol spelled out in the config itself.
    Inline { symbol: OperatorJson },
    /// Symbol JSON in a separate file (as emitted by `grad` / `wave`).
    File { path: PathBuf },
    /// Wave family `tau^2 - i delta tau - (c2 |xi|^2 + mu)`.
    Wave { n: usize, delta: f64, c2: f64, mu: f64 },
    /// Grad moment system dispersion polynomial.
    Grad { n: usize, truncation: u32 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub extent: f64,
    pub points_per_axis: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    pub profile: DataProfile,
    /// Which propagator column the data multiplies (0-based slot in the
    /// Cauchy data vector).
    pub slot: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DerivativeSpec {
    pub time_orders: Vec<u32>,
    pub space_orders: Vec<u32>,
}

impl Default for DerivativeSpec {
    fn default() -> Self {
        DerivativeSpec { time_orders: vec![0], space_orders: vec![0] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeWindow {
    pub t_max: f64,
    pub samples: usize,
}

impl Default for TimeWindow {
    fn default() -> Self {
        TimeWindow { t_max: 200.0, samples: 25 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Allowed gap between fitted and predicted polynomial powers.
    pub power: f64,
    /// Allowed relative gap for exponential rates.
    pub rate_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { power: VERIFY_POWER_TOL, rate_rel: VERIFY_RATE_REL_TOL }
    }
}

/// A dual exponent pair: `1 <= p <= 2 <= q <= inf` with `1/p + 1/q = 1`.
/// JSON spells it `[p, q]` with `q` a number or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PqPair {
    pub p: f64,
    pub q: f64,
}

impl PqPair {
    pub fn validate(&self) -> Result<(), String> {
        if !self.p.is_finite() || !(1.0 <= self.p && self.p <= 2.0) {
            return Err(format!("p must lie in [1, 2], got {}", self.p));
        }
        if !self.q.is_infinite() && !(self.q >= 2.0 && self.q.is_finite()) {
            return Err(format!("q must lie in [2, inf], got {}", self.q));
        }
        let inv_q = if self.q.is_infinite() { 0.0 } else { 1.0 / self.q };
        if (1.0 / self.p + inv_q - 1.0).abs() > 1e-9 {
            return Err(format!(
                "(p, q) = ({}, {}) are not dual exponents (need 1/p + 1/q = 1)",
                self.p,
                self.q_label()
            ));
        }
        Ok(())
    }

    pub fn q_label(&self) -> String {
        if self.q.is_infinite() {
            "inf".to_string()
        } else {
            format!("{}", self.q)
        }
    }

    /// Parse `"1,inf"` / `"2,2"` style command-line values.
    pub fn parse(text: &str) -> Result<PqPair, String> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(format!("expected P,Q (e.g. 1,inf), got {text:?}"));
        }
        let p: f64 = parts[0].parse().map_err(|_| format!("bad p value {:?}", parts[0]))?;
        let q = parse_q_token(parts[1])?;
        let pair = PqPair { p, q };
        pair.validate()?;
        Ok(pair)
    }
}

fn parse_q_token(token: &str) -> Result<f64, String> {
    if token.eq_ignore_ascii_case("inf") || token.eq_ignore_ascii_case("infinity") {
        return Ok(f64::INFINITY);
    }
    token.parse().map_err(|_| format!("bad q value {token:?} (number or \"inf\")"))
}

impl Serialize for PqPair {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = serializer.serialize_seq(Some(2))?;
        seq.serialize_element(&self.p)?;
        if self.q.is_infinite() {
            seq.serialize_element("inf")?;
        } else {
            seq.serialize_element(&self.q)?;
        }
        seq.end()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum QToken {
    Num(f64),
    Text(String),
}

impl<'de> Deserialize<'de> for PqPair {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let (p, q_token): (f64, QToken) = Deserialize::deserialize(deserializer)?;
        let q = match q_token {
            QToken::Num(v) => v,
            QToken::Text(s) => parse_q_token(&s).map_err(D::Error::custom)?,
        };
        Ok(PqPair { p, q })
    }
}

pub fn default_pq() -> Vec<PqPair> {
    vec![PqPair { p: 1.0, q: f64::INFINITY }, PqPair { p: 2.0, q: 2.0 }]
}
