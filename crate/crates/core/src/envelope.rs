//! Fenchel conjugates and the relative concave envelope of a sampled payoff.
//!
//! For a payoff g sampled on a finite support, the infimum super-hedging
//! cost at a point y is the concave envelope of g relative to the support,
//! evaluated at y, and minus infinity outside the convex hull of the
//! support. The envelope is the optimal value of
//!
//! ```text
//!     minimize  a . y + b   subject to   a . z_i + b >= g(z_i)  for all i
//! ```
//!
//! whose unboundedness is exactly non-membership of y in the hull; the
//! improving ray then certifies an instantaneous profit. On finite supports
//! the envelope of finitely many points is automatically upper
//! semicontinuous, so no closure is taken anywhere.

use crate::error::{Error, Result};
use crate::market::SupportSet;
use crate::simplex::{self, LinearProgram, LpStatus, Relation};

/// A payoff restricted to a finite support: one finite value per point.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    points: Vec<(Vec<f64>, f64)>,
}

impl SampledFunction {
    pub fn new(points: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::validation(
                None,
                "sampled function needs at least one point",
            ));
        }
        let dim = points[0].0.len();
        for (z, v) in &points {
            if z.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    found: z.len(),
                });
            }
            if !v.is_finite() || z.iter().any(|x| !x.is_finite()) {
                return Err(Error::validation(None, "sampled function must be finite"));
            }
        }
        for (i, (z, _)) in points.iter().enumerate() {
            if points[..i]
                .iter()
                .any(|(w, _)| crate::market::bitwise_eq(w, z))
            {
                return Err(Error::validation(
                    None,
                    "sampled function has a duplicate support point",
                ));
            }
        }
        Ok(SampledFunction { points })
    }

    /// Samples a function of the price over a support set.
    pub fn from_support(support: &SupportSet, g: impl Fn(&[f64]) -> f64) -> Result<Self> {
        SampledFunction::new(support.points().iter().map(|z| (z.clone(), g(z))).collect())
    }

    /// One-dimensional samples from `(z, value)` pairs.
    pub fn from_scalar_points(points: &[(f64, f64)]) -> Result<Self> {
        SampledFunction::new(points.iter().map(|&(z, v)| (vec![z], v)).collect())
    }

    pub fn points(&self) -> &[(Vec<f64>, f64)] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.points[0].0.len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// An affine function dominating the sampled payoff on its support.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMajorant {
    pub slope: Vec<f64>,
    pub intercept: f64,
}

impl AffineMajorant {
    pub fn eval(&self, z: &[f64]) -> f64 {
        self.slope.iter().zip(z).map(|(a, x)| a * x).sum::<f64>() + self.intercept
    }
}

/// Envelope evaluation result.
///
/// `value` is finite exactly when `y` belongs to the convex hull of the
/// support (`member_of_hull`); otherwise it is minus infinity and `ray`
/// carries the improving direction of the envelope program, whose slope is
/// an instantaneous-profit strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeValue {
    pub value: f64,
    pub majorant: Option<AffineMajorant>,
    pub member_of_hull: bool,
    pub ray: Option<AffineMajorant>,
}

/// Fenchel-Legendre conjugate of `f = -g + indicator(support)` at `x`:
/// the maximum of `x . z + g(z)` over the support.
pub fn fenchel_conjugate(f: &SampledFunction, x: &[f64]) -> f64 {
    f.points
        .iter()
        .map(|(z, g)| x.iter().zip(z).map(|(a, b)| a * b).sum::<f64>() + g)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Concave envelope of the samples relative to their support, at `y`.
pub fn concave_envelope_at(g: &SampledFunction, y: &[f64]) -> Result<EnvelopeValue> {
    let d = g.dim();
    if y.len() != d {
        return Err(Error::Dimension {
            expected: d,
            found: y.len(),
        });
    }
    // variables (a, b), all free
    let mut objective = y.to_vec();
    objective.push(1.0);
    let mut lp = LinearProgram::minimize(objective);
    for (z, v) in g.points() {
        let mut row = z.clone();
        row.push(1.0);
        lp.constrain(row, Relation::Ge, *v);
    }
    let out = simplex::solve(&lp)?;
    match out.status {
        LpStatus::Optimal => {
            let mut sol = out.solution.expect("optimal LP carries a solution");
            let intercept = sol.pop().expect("intercept variable");
            Ok(EnvelopeValue {
                value: out.objective_value.expect("optimal LP carries a value"),
                majorant: Some(AffineMajorant {
                    slope: sol,
                    intercept,
                }),
                member_of_hull: true,
                ray: None,
            })
        }
        LpStatus::Unbounded => {
            let mut ray = out.ray.expect("unbounded LP carries a ray");
            let intercept = ray.pop().expect("intercept component");
            Ok(EnvelopeValue {
                value: f64::NEG_INFINITY,
                majorant: None,
                member_of_hull: false,
                ray: Some(AffineMajorant {
                    slope: ray,
                    intercept,
                }),
            })
        }
        // b can always be raised until every constraint holds
        LpStatus::Infeasible => Err(Error::Internal(
            "envelope program reported infeasible".into(),
        )),
    }
}

/// One-dimensional fast path: the upper convex hull of `(z_i, g_i)`,
/// interpolated at `y`. Same contract as [`concave_envelope_at`].
pub fn concave_envelope_1d(g: &SampledFunction, y: f64) -> Result<EnvelopeValue> {
    if g.dim() != 1 {
        return Err(Error::Dimension {
            expected: 1,
            found: g.dim(),
        });
    }
    let mut pts: Vec<(f64, f64)> = g.points().iter().map(|(z, v)| (z[0], *v)).collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite support"));
    let (lo, hi) = (pts[0].0, pts[pts.len() - 1].0);
    if y < lo || y > hi {
        // outside the hull: report the one-sided profit direction
        let slope = if y < lo { 1.0 } else { -1.0 };
        let anchor = if y < lo { lo } else { hi };
        return Ok(EnvelopeValue {
            value: f64::NEG_INFINITY,
            majorant: None,
            member_of_hull: false,
            ray: Some(AffineMajorant {
                slope: vec![slope],
                intercept: -slope * anchor,
            }),
        });
    }

    // monotone chain, upper hull only
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }

    // vertex hits are exact: the envelope equals the function there
    if let Some(k) = hull.iter().position(|&(x, _)| x == y) {
        let slope = if hull.len() == 1 {
            0.0
        } else if k + 1 < hull.len() {
            let ((x0, v0), (x1, v1)) = (hull[k], hull[k + 1]);
            (v1 - v0) / (x1 - x0)
        } else {
            let ((x0, v0), (x1, v1)) = (hull[k - 1], hull[k]);
            (v1 - v0) / (x1 - x0)
        };
        return Ok(finite_1d(hull[k].1, slope, y));
    }
    let seg = hull
        .iter()
        .position(|&(x, _)| y < x)
        .map(|i| i - 1)
        .unwrap_or(hull.len() - 2);
    let (x0, v0) = hull[seg];
    let (x1, v1) = hull[seg + 1];
    let slope = (v1 - v0) / (x1 - x0);
    let value = v0 + slope * (y - x0);
    Ok(EnvelopeValue {
        value,
        majorant: Some(AffineMajorant {
            slope: vec![slope],
            intercept: v0 - slope * x0,
        }),
        member_of_hull: true,
        ray: None,
    })
}

fn finite_1d(value: f64, slope: f64, at: f64) -> EnvelopeValue {
    EnvelopeValue {
        value,
        majorant: Some(AffineMajorant {
            slope: vec![slope],
            intercept: value - slope * at,
        }),
        member_of_hull: true,
        ray: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::oracle_one_step_1d;

    fn call_samples() -> SampledFunction {
        SampledFunction::from_scalar_points(&[(80.0, 0.0), (120.0, 20.0)]).unwrap()
    }

    #[test]
    fn conjugate_of_zero_payoff() {
        let g = SampledFunction::from_scalar_points(&[(90.0, 0.0), (120.0, 0.0)]).unwrap();
        assert_eq!(fenchel_conjugate(&g, &[1.0]), 120.0);
        assert_eq!(fenchel_conjugate(&g, &[0.0]), 0.0);
    }

    #[test]
    fn conjugate_of_call_samples() {
        let g = call_samples();
        // max(-80 + 0, -120 + 20)
        assert_eq!(fenchel_conjugate(&g, &[-1.0]), -80.0);
    }

    #[test]
    fn envelope_of_call_data_matches_slope_oracle() {
        let g = call_samples();
        let oracle = oracle_one_step_1d(&[(80.0, 0.0), (120.0, 20.0)], 100.0);
        assert_eq!(oracle.value, 10.0);
        let env = concave_envelope_at(&g, &[100.0]).unwrap();
        assert!((env.value - 10.0).abs() < 1e-9);
        let m = env.majorant.unwrap();
        assert!((m.slope[0] - 0.5).abs() < 1e-9);
        assert!((m.intercept - -40.0).abs() < 1e-9);
    }

    #[test]
    fn zero_payoff_at_hull_boundary() {
        let g = SampledFunction::from_scalar_points(&[(0.0, 0.0), (1.0, 0.0)]).unwrap();
        let env = concave_envelope_at(&g, &[0.0]).unwrap();
        assert_eq!(env.value, 0.0);
        assert!(env.member_of_hull);
    }

    #[test]
    fn point_outside_hull_is_minus_infinity() {
        let g = SampledFunction::from_scalar_points(&[(90.0, 0.0), (120.0, 0.0)]).unwrap();
        let env = concave_envelope_at(&g, &[80.0]).unwrap();
        assert_eq!(env.value, f64::NEG_INFINITY);
        assert!(!env.member_of_hull);
        // the ray slope gains at least the hull distance on every point
        let ray = env.ray.unwrap();
        let margin = [90.0, 120.0]
            .iter()
            .map(|z| ray.slope[0] * (z - 80.0))
            .fold(f64::INFINITY, f64::min);
        assert!(margin > 0.0);
    }

    #[test]
    fn hull_path_collinear_points() {
        let g = SampledFunction::from_scalar_points(&[(80.0, 0.0), (100.0, 10.0), (120.0, 20.0)])
            .unwrap();
        let env = concave_envelope_1d(&g, 90.0).unwrap();
        assert!((env.value - 5.0).abs() < 1e-12);
    }

    #[test]
    fn hull_path_call_data() {
        let g = SampledFunction::from_scalar_points(&[(80.0, 0.0), (100.0, 0.0), (120.0, 20.0)])
            .unwrap();
        let env = concave_envelope_1d(&g, 100.0).unwrap();
        assert!((env.value - 10.0).abs() < 1e-12);
        let lp = concave_envelope_at(&g, &[100.0]).unwrap();
        assert!((env.value - lp.value).abs() < 1e-9);
    }

    #[test]
    fn hull_path_right_endpoint() {
        let g = SampledFunction::from_scalar_points(&[(80.0, 0.0), (100.0, 0.0), (120.0, 20.0)])
            .unwrap();
        let env = concave_envelope_1d(&g, 120.0).unwrap();
        assert_eq!(env.value, 20.0);
    }

    #[test]
    fn hull_path_outside() {
        let g = call_samples();
        let env = concave_envelope_1d(&g, 130.0).unwrap();
        assert_eq!(env.value, f64::NEG_INFINITY);
        assert!(!env.member_of_hull);
    }

    #[test]
    fn majorant_dominates_samples() {
        let g =
            SampledFunction::from_scalar_points(&[(1.0, 3.0), (2.0, -1.0), (4.0, 2.0)]).unwrap();
        let env = concave_envelope_at(&g, &[2.5]).unwrap();
        let m = env.majorant.unwrap();
        for (z, v) in g.points() {
            assert!(m.eval(z) >= v - 1e-9);
        }
    }

    #[test]
    fn singleton_support() {
        let g = SampledFunction::from_scalar_points(&[(5.0, 7.0)]).unwrap();
        let env = concave_envelope_at(&g, &[5.0]).unwrap();
        assert!((env.value - 7.0).abs() < 1e-12);
        let env = concave_envelope_1d(&g, 5.0).unwrap();
        assert_eq!(env.value, 7.0);
    }

    #[test]
    fn two_dimensional_envelope() {
        // square support, zero payoff except one corner
        let g = SampledFunction::new(vec![
            (vec![0.0, 0.0], 0.0),
            (vec![1.0, 0.0], 0.0),
            (vec![0.0, 1.0], 0.0),
            (vec![1.0, 1.0], 4.0),
        ])
        .unwrap();
        let env = concave_envelope_at(&g, &[0.5, 0.5]).unwrap();
        assert!((env.value - 2.0).abs() < 1e-9);
        let outside = concave_envelope_at(&g, &[1.5, 0.5]).unwrap();
        assert_eq!(outside.value, f64::NEG_INFINITY);
    }
}
