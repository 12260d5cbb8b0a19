//! Claim descriptions and their grammar.
//!
//! Grammar accepted by [`PayoffSpec::parse`] and printed by `Display`:
//! `call:K`, `put:K`, `pwl:x1,v1;x2,v2;...`, `leaf:{leaf_id:value,...}`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::market::{fmt_float, MarketTree, NodeId};

/// A contingent claim on the terminal price (or sampled per leaf).
#[derive(Debug, Clone, PartialEq)]
pub enum PayoffSpec {
    /// `(x - strike)^+`
    Call { strike: f64 },
    /// `(strike - x)^+`
    Put { strike: f64 },
    /// Piecewise-linear interpolation of the knots, extrapolated linearly
    /// beyond the first and last knot.
    Pwl { knots: Vec<(f64, f64)> },
    /// Explicit value per leaf id.
    Leaf { values: BTreeMap<String, f64> },
}

impl PayoffSpec {
    pub fn call(strike: f64) -> Self {
        PayoffSpec::Call { strike }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let (kind, body) = text
            .split_once(':')
            .ok_or_else(|| Error::Payoff(format!("missing `:` in payoff `{text}`")))?;
        match kind {
            "call" | "put" => {
                let strike: f64 = body
                    .trim()
                    .parse()
                    .map_err(|e| Error::Payoff(format!("bad strike `{body}`: {e}")))?;
                if !strike.is_finite() || strike < 0.0 {
                    return Err(Error::Payoff(format!("strike must be >= 0, got {strike}")));
                }
                Ok(if kind == "call" {
                    PayoffSpec::Call { strike }
                } else {
                    PayoffSpec::Put { strike }
                })
            }
            "pwl" => {
                let mut knots = Vec::new();
                for part in body.split(';') {
                    let (x, v) = part
                        .split_once(',')
                        .ok_or_else(|| Error::Payoff(format!("bad pwl knot `{part}`")))?;
                    let x: f64 = x
                        .trim()
                        .parse()
                        .map_err(|e| Error::Payoff(format!("bad pwl abscissa `{x}`: {e}")))?;
                    let v: f64 = v
                        .trim()
                        .parse()
                        .map_err(|e| Error::Payoff(format!("bad pwl value `{v}`: {e}")))?;
                    knots.push((x, v));
                }
                if knots.is_empty() {
                    return Err(Error::Payoff("pwl needs at least one knot".into()));
                }
                if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::Payoff(
                        "pwl knots must have strictly increasing abscissae".into(),
                    ));
                }
                if knots.iter().any(|&(x, v)| !x.is_finite() || !v.is_finite()) {
                    return Err(Error::Payoff("pwl knots must be finite".into()));
                }
                Ok(PayoffSpec::Pwl { knots })
            }
            "leaf" => {
                let body = body.trim();
                let inner = body
                    .strip_prefix('{')
                    .and_then(|s| s.strip_suffix('}'))
                    .ok_or_else(|| Error::Payoff("leaf payoff must be wrapped in {}".into()))?;
                let mut values = BTreeMap::new();
                for part in inner.split(',') {
                    if part.trim().is_empty() {
                        continue;
                    }
                    let (id, v) = part
                        .split_once(':')
                        .ok_or_else(|| Error::Payoff(format!("bad leaf entry `{part}`")))?;
                    let v: f64 = v
                        .trim()
                        .parse()
                        .map_err(|e| Error::Payoff(format!("bad leaf value `{v}`: {e}")))?;
                    if values.insert(id.trim().to_owned(), v).is_some() {
                        return Err(Error::Payoff(format!("duplicate leaf id `{}`", id.trim())));
                    }
                }
                if values.is_empty() {
                    return Err(Error::Payoff("leaf payoff has no entries".into()));
                }
                Ok(PayoffSpec::Leaf { values })
            }
            other => Err(Error::Payoff(format!("unknown payoff kind `{other}`"))),
        }
    }

    /// Evaluates at a one-dimensional terminal price.
    pub fn eval_scalar(&self, s: f64) -> Result<f64> {
        match self {
            PayoffSpec::Call { strike } => Ok((s - strike).max(0.0)),
            PayoffSpec::Put { strike } => Ok((strike - s).max(0.0)),
            PayoffSpec::Pwl { knots } => Ok(eval_pwl(knots, s)),
            PayoffSpec::Leaf { .. } => Err(Error::Payoff(
                "leaf payoff is not a function of the price".into(),
            )),
        }
    }

    /// Evaluates at a price vector; price-based payoffs require d = 1.
    pub fn eval_price(&self, price: &[f64]) -> Result<f64> {
        if matches!(self, PayoffSpec::Leaf { .. }) {
            return Err(Error::Payoff(
                "leaf payoff is not a function of the price".into(),
            ));
        }
        if price.len() != 1 {
            return Err(Error::Dimension {
                expected: 1,
                found: price.len(),
            });
        }
        self.eval_scalar(price[0])
    }

    /// Evaluates at a leaf of the tree.
    pub fn eval_leaf(&self, tree: &MarketTree, leaf: NodeId) -> Result<f64> {
        match self {
            PayoffSpec::Leaf { values } => {
                let name = tree.node(leaf).name();
                values.get(name).copied().ok_or_else(|| {
                    Error::Payoff(format!("leaf payoff has no value for leaf `{name}`"))
                })
            }
            _ => self.eval_price(tree.node(leaf).price()),
        }
    }

    /// Whether the payoff is a convex function of a one-dimensional price.
    pub fn is_convex_1d(&self) -> bool {
        match self {
            PayoffSpec::Call { .. } | PayoffSpec::Put { .. } => true,
            PayoffSpec::Pwl { knots } => {
                let slopes = pwl_slopes(knots);
                slopes.windows(2).all(|w| w[1] >= w[0] - 1e-12)
            }
            PayoffSpec::Leaf { .. } => false,
        }
    }

    /// Asymptotic slope `lim g(x)/x` for price-based payoffs.
    pub fn asymptotic_slope(&self) -> Option<f64> {
        match self {
            PayoffSpec::Call { .. } => Some(1.0),
            PayoffSpec::Put { .. } => Some(0.0),
            PayoffSpec::Pwl { knots } => Some(*pwl_slopes(knots).last().unwrap()),
            PayoffSpec::Leaf { .. } => None,
        }
    }
}

fn pwl_slopes(knots: &[(f64, f64)]) -> Vec<f64> {
    if knots.len() < 2 {
        return vec![0.0];
    }
    knots
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
        .collect()
}

fn eval_pwl(knots: &[(f64, f64)], s: f64) -> f64 {
    if knots.len() == 1 {
        return knots[0].1;
    }
    // segment index: first knot at or right of s, clamped to end segments
    let seg = match knots.iter().position(|&(x, _)| s <= x) {
        Some(0) => 0,
        Some(i) => i - 1,
        None => knots.len() - 2,
    };
    let (x0, v0) = knots[seg];
    let (x1, v1) = knots[seg + 1];
    let slope = (v1 - v0) / (x1 - x0);
    v0 + slope * (s - x0)
}

impl fmt::Display for PayoffSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PayoffSpec::Call { strike } => write!(f, "call:{}", fmt_float(*strike)),
            PayoffSpec::Put { strike } => write!(f, "put:{}", fmt_float(*strike)),
            PayoffSpec::Pwl { knots } => {
                let body = knots
                    .iter()
                    .map(|&(x, v)| format!("{},{}", fmt_float(x), fmt_float(v)))
                    .collect::<Vec<_>>()
                    .join(";");
                write!(f, "pwl:{body}")
            }
            PayoffSpec::Leaf { values } => {
                let body = values
                    .iter()
                    .map(|(id, v)| format!("{id}:{}", fmt_float(*v)))
                    .collect::<Vec<_>>()
                    .join(",");
                write!(f, "leaf:{{{body}}}")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn call_and_put_evaluate() {
        let call = PayoffSpec::parse("call:100").unwrap();
        assert_eq!(call.eval_scalar(120.0).unwrap(), 20.0);
        assert_eq!(call.eval_scalar(80.0).unwrap(), 0.0);
        let put = PayoffSpec::parse("put:100").unwrap();
        assert_eq!(put.eval_scalar(80.0).unwrap(), 20.0);
        assert_eq!(put.eval_scalar(120.0).unwrap(), 0.0);
    }

    #[test]
    fn pwl_interpolates_and_extrapolates() {
        let g = PayoffSpec::parse("pwl:80,0;100,10;120,20").unwrap();
        assert_eq!(g.eval_scalar(90.0).unwrap(), 5.0);
        assert_eq!(g.eval_scalar(120.0).unwrap(), 20.0);
        assert_eq!(g.eval_scalar(140.0).unwrap(), 30.0); // last slope 0.5
        assert_eq!(g.eval_scalar(60.0).unwrap(), -10.0); // first slope 0.5
    }

    #[test]
    fn convexity_detection() {
        assert!(PayoffSpec::parse("call:3").unwrap().is_convex_1d());
        assert!(PayoffSpec::parse("put:3").unwrap().is_convex_1d());
        assert!(PayoffSpec::parse("pwl:0,1;1,0;2,2").unwrap().is_convex_1d());
        assert!(!PayoffSpec::parse("pwl:0,0;1,2;2,2.5")
            .unwrap()
            .is_convex_1d());
    }

    #[test]
    fn asymptotic_slopes() {
        assert_eq!(
            PayoffSpec::parse("call:7").unwrap().asymptotic_slope(),
            Some(1.0)
        );
        assert_eq!(
            PayoffSpec::parse("put:7").unwrap().asymptotic_slope(),
            Some(0.0)
        );
        let g = PayoffSpec::parse("pwl:0,0;1,0;2,3").unwrap();
        assert_eq!(g.asymptotic_slope(), Some(3.0));
    }

    #[test]
    fn leaf_payoff_round_trips_and_rejects_price_eval() {
        let g = PayoffSpec::parse("leaf:{a:1.5,b:-2}").unwrap();
        assert!(g.eval_price(&[1.0]).is_err());
        let printed = g.to_string();
        let back = PayoffSpec::parse(&printed).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn grammar_errors() {
        assert!(PayoffSpec::parse("call").is_err());
        assert!(PayoffSpec::parse("call:-3").is_err());
        assert!(PayoffSpec::parse("swap:1").is_err());
        assert!(PayoffSpec::parse("pwl:1,0;1,2").is_err());
        assert!(PayoffSpec::parse("leaf:{}").is_err());
    }
}
