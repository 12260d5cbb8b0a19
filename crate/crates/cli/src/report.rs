//! Structured run reports and plot-ready CSV surfaces.
//!
//! Reports serialize to JSON with a stable field order and round-trip
//! through their own parser. Extended-real values print as numbers when
//! finite and as the literals `"-inf"` / `"inf"` otherwise; a large
//! negative sentinel is never used.

use std::collections::BTreeMap;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use superhedge::diagnostics::Certificate;
use superhedge::market::fmt_float;
use superhedge::{MarketTree, ValueSurface};

pub const SCHEMA_VERSION: u32 = 1;

/// Extended-real report value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtValue(pub f64);

impl Serialize for ExtValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0 == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for ExtValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = serde_json::Value::deserialize(d)?;
        match raw {
            serde_json::Value::Number(n) => n
                .as_f64()
                .map(ExtValue)
                .ok_or_else(|| D::Error::custom("value out of range")),
            serde_json::Value::String(s) => match s.as_str() {
                "-inf" => Ok(ExtValue(f64::NEG_INFINITY)),
                "inf" => Ok(ExtValue(f64::INFINITY)),
                other => Err(D::Error::custom(format!("bad extended value `{other}`"))),
            },
            other => Err(D::Error::custom(format!("bad extended value {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketSummary {
    pub nodes: usize,
    pub horizon: usize,
    pub dim: usize,
}

impl MarketSummary {
    pub fn of(tree: &MarketTree) -> Self {
        MarketSummary {
            nodes: tree.len(),
            horizon: tree.horizon(),
            dim: tree.dim(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AipSection {
    pub holds: bool,
    pub failing_nodes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CertificateRepr {
    HullWeights { weights: Vec<f64> },
    PositiveWeights { weights: Vec<f64> },
    SeparatingSlope { slope: Vec<f64>, margin: f64 },
    None,
}

impl From<&Certificate> for CertificateRepr {
    fn from(c: &Certificate) -> Self {
        match c {
            Certificate::HullWeights(w) => CertificateRepr::HullWeights { weights: w.clone() },
            Certificate::PositiveWeights(w) => {
                CertificateRepr::PositiveWeights { weights: w.clone() }
            }
            Certificate::SeparatingSlope { slope, margin } => CertificateRepr::SeparatingSlope {
                slope: slope.clone(),
                margin: *margin,
            },
            Certificate::None => CertificateRepr::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeVerdictRow {
    pub node: String,
    pub time: usize,
    pub aip: bool,
    pub na: bool,
    pub certificate: CertificateRepr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AwipRow {
    pub t: usize,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leaf_weights: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AwipSection {
    pub holds: bool,
    pub per_time: Vec<AwipRow>,
    /// Present for markets with more than one risky asset, where the
    /// martingale-measure equivalence is only asserted for a single asset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSection {
    pub payoff: String,
    pub value: ExtValue,
    pub attained: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hedge: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ip_strategy: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRow {
    pub node: String,
    pub time: usize,
    pub value: ExtValue,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hedge: Option<Vec<f64>>,
}

/// Per-node values ordered by time, then by node order.
pub fn surface_rows(tree: &MarketTree, surface: &ValueSurface) -> Vec<SurfaceRow> {
    let mut rows: Vec<_> = tree.nodes().collect();
    rows.sort_by_key(|(id, n)| (n.time(), id.0));
    rows.into_iter()
        .map(|(id, node)| {
            let r = surface.get(id);
            SurfaceRow {
                node: node.name().to_owned(),
                time: node.time(),
                value: ExtValue(r.value),
                hedge: r.hedge.clone(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSection {
    pub method: String,
    pub value: ExtValue,
    pub max_deviation: f64,
    pub agreement: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub step: usize,
    pub k_down: f64,
    pub k_up: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub market: Option<MarketSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aip: Option<AipSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_node: Option<Vec<NodeVerdictRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub awip: Option<AwipSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub price: Option<PriceSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub surface: Option<Vec<SurfaceRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration: Option<Vec<CalibrationRow>>,
    pub timing_ms: f64,
}

impl RunReport {
    pub fn new(command: impl Into<String>) -> Self {
        RunReport {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            market: None,
            aip: None,
            per_node: None,
            awip: None,
            price: None,
            surface: None,
            oracle: None,
            calibration: None,
            timing_ms: 0.0,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Value surface as CSV: `time,node,value,theta_1..theta_d`; profit nodes
/// print `-inf` with empty hedge columns.
pub fn surface_to_csv(tree: &MarketTree, surface: &ValueSurface) -> String {
    let d = tree.dim();
    let mut out = String::from("time,node,value");
    for k in 1..=d {
        out.push_str(&format!(",theta_{k}"));
    }
    out.push('\n');
    let mut rows: Vec<_> = tree.nodes().collect();
    rows.sort_by_key(|(id, n)| (n.time(), id.0));
    for (id, node) in rows {
        let r = surface.get(id);
        let value = if r.value.is_finite() {
            fmt_float(r.value)
        } else {
            "-inf".to_owned()
        };
        out.push_str(&format!("{},{},{}", node.time(), node.name(), value));
        for k in 0..d {
            match &r.hedge {
                Some(h) => out.push_str(&format!(",{}", fmt_float(h[k]))),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

/// Binomial lattice as CSV: `t,price,value,theta`.
pub fn lattice_to_csv(lattice: &superhedge::BinomialLattice) -> String {
    let mut out = String::from("t,price,value,theta\n");
    for (t, level) in lattice.levels().iter().enumerate() {
        for p in level {
            let theta = p.hedge.map(fmt_float).unwrap_or_default();
            out.push_str(&format!(
                "{t},{},{},{theta}\n",
                fmt_float(p.price),
                fmt_float(p.value)
            ));
        }
    }
    out
}
