//! Local-polytope membership of a measured correlation vector.
//!
//! Two independent routes: a linear program looking for convex weights over
//! the 16 deterministic vertices, and the 8 CHSH facets. They must agree
//! away from the boundary; within `MEMBERSHIP_TOL` of it the result is
//! flagged and both certificates are attached.

use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use super::inequality::chsh_facets;
use super::CorrelationSet;
use crate::error::{Error, Result};
use crate::lhv::deterministic_strategies;

/// Constraint-residual tolerance for the LP, and the width of the boundary
/// band around the facets.
pub const MEMBERSHIP_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacetViolation {
    pub facet: String,
    pub display: String,
    #[serde(with = "crate::sig17")]
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipResult {
    pub is_member: bool,
    /// Within `MEMBERSHIP_TOL` of a facet.
    pub boundary: bool,
    /// Convex weights over the 16 deterministic strategies
    /// (order of [`deterministic_strategies`]).
    #[serde(
        with = "crate::sig17::option_vec",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub weights: Option<Vec<f64>>,
    /// Most violated facet, when any facet has negative slack.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub violated: Option<FacetViolation>,
    #[serde(with = "crate::sig17")]
    pub min_facet_slack: f64,
}

fn vertices() -> Vec<[f64; 4]> {
    deterministic_strategies()
        .iter()
        .map(|c| c.measured_vector().expect("strategies carry all labels"))
        .collect()
}

/// Minimum slack over the 8 facets and the index of the facet attaining it.
pub fn facet_check(point: &[f64; 4]) -> (f64, usize) {
    chsh_facets()
        .iter()
        .enumerate()
        .map(|(i, f)| (f.measured_value(point) - f64::from(f.lower_bound), i))
        .fold((f64::INFINITY, usize::MAX), |best, cur| {
            if cur.0 < best.0 {
                cur
            } else {
                best
            }
        })
}

/// Largest absolute constraint residual of `weights` as a representation
/// of `point` (four coordinates plus normalization).
fn residual(vertices: &[[f64; 4]], weights: &[f64], point: &[f64; 4]) -> f64 {
    let mut worst = (weights.iter().sum::<f64>() - 1.0).abs();
    for (k, target) in point.iter().enumerate() {
        let got: f64 = vertices.iter().zip(weights).map(|(v, w)| v[k] * w).sum();
        worst = worst.max((got - target).abs());
    }
    worst
}

/// Solves `min Σ|r|` over `w ≥ 0, Σw = 1, V w + r = point` and returns the
/// weights if the optimal residual is within `MEMBERSHIP_TOL`.
pub fn lp_certificate(point: &[f64; 4]) -> Option<Vec<f64>> {
    let vs = vertices();
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let w: Vec<_> = vs
        .iter()
        .map(|_| problem.add_var(0.0, (0.0, f64::INFINITY)))
        .collect();
    let mut norm = LinearExpr::empty();
    for v in &w {
        norm.add(*v, 1.0);
    }
    problem.add_constraint(norm, ComparisonOp::Eq, 1.0);
    for (k, target) in point.iter().enumerate() {
        let up = problem.add_var(1.0, (0.0, f64::INFINITY));
        let down = problem.add_var(1.0, (0.0, f64::INFINITY));
        let mut expr = LinearExpr::empty();
        for (var, vertex) in w.iter().zip(&vs) {
            expr.add(*var, vertex[k]);
        }
        expr.add(up, 1.0);
        expr.add(down, -1.0);
        problem.add_constraint(expr, ComparisonOp::Eq, *target);
    }
    let solution = problem.solve().ok()?;
    let weights: Vec<f64> = w.iter().map(|v| solution[*v].max(0.0)).collect();
    (residual(&vs, &weights, point) <= MEMBERSHIP_TOL).then_some(weights)
}

/// Decides whether the four measured correlations of `c` lie in the local
/// polytope. LP and facet verdicts disagreeing outside the boundary band is
/// an error.
pub fn lhv_membership(c: &CorrelationSet) -> Result<MembershipResult> {
    let point = c.measured_vector()?;
    let (min_slack, facet_index) = facet_check(&point);
    let weights = lp_certificate(&point);
    let by_facets = min_slack >= -MEMBERSHIP_TOL;
    let by_lp = weights.is_some();
    let boundary = min_slack.abs() <= MEMBERSHIP_TOL;
    if by_facets != by_lp && !boundary {
        return Err(Error::MembershipDisagreement(format!(
            "point {point:?}: facet slack {min_slack:e}, LP {}",
            if by_lp { "feasible" } else { "infeasible" }
        )));
    }
    let violated = (min_slack < 0.0).then(|| {
        let f = &chsh_facets()[facet_index];
        FacetViolation {
            facet: f.name.clone(),
            display: f.to_string(),
            slack: min_slack,
        }
    });
    Ok(MembershipResult {
        is_member: by_facets,
        boundary,
        weights,
        violated,
        min_facet_slack: min_slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn check_certificate(point: [f64; 4], weights: &[f64]) {
        assert_eq!(weights.len(), 16);
        assert!(weights.iter().all(|w| *w >= 0.0));
        assert!(residual(&vertices(), weights, &point) <= MEMBERSHIP_TOL);
    }

    #[test]
    fn center_is_member() {
        let r = lhv_membership(&CorrelationSet::from_measured([0.0; 4]).unwrap()).unwrap();
        assert!(r.is_member);
        assert!(!r.boundary);
        assert!(r.violated.is_none());
        check_certificate([0.0; 4], r.weights.as_ref().unwrap());
    }

    #[test]
    fn algebraic_extreme_is_not_member() {
        let r =
            lhv_membership(&CorrelationSet::from_measured([1.0, 1.0, 1.0, -1.0]).unwrap()).unwrap();
        assert!(!r.is_member);
        assert!(r.weights.is_none());
        let v = r.violated.unwrap();
        assert_eq!(v.facet, "CHSH(---+)");
        assert_eq!(v.display, "−⟨AB⟩−⟨AB′⟩−⟨A′B⟩+⟨A′B′⟩ ≥ −2");
        // value of ⟨AB⟩+⟨AB′⟩+⟨A′B⟩−⟨A′B′⟩ is 4, two past the bound
        assert_eq!(v.slack, -2.0);
    }

    #[test]
    fn tsirelson_point_is_not_member() {
        let h = FRAC_1_SQRT_2;
        let r = lhv_membership(&CorrelationSet::from_measured([h, -h, h, h]).unwrap()).unwrap();
        assert!(!r.is_member);
        assert!((r.min_facet_slack - (2.0 - 2.0 * 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn vertices_are_boundary_members() {
        for v in vertices() {
            let r = lhv_membership(&CorrelationSet::from_measured(v).unwrap()).unwrap();
            assert!(r.is_member, "{v:?}");
            assert!(r.boundary);
            assert_eq!(r.min_facet_slack, 0.0);
            check_certificate(v, r.weights.as_ref().unwrap());
        }
    }

    #[test]
    fn missing_label_is_error() {
        let mut c = CorrelationSet::new();
        c.insert(crate::labels::Pair::AB, 0.0).unwrap();
        assert!(matches!(lhv_membership(&c), Err(Error::MissingLabel(_))));
    }

    #[test]
    fn just_outside_a_facet() {
        // Midpoint of an edge pushed outward past the facet by 1e-3.
        let p = [0.5 + 1e-3, -0.5 - 1e-3, 0.5 + 1e-3, 0.5 + 1e-3];
        let r = lhv_membership(&CorrelationSet::from_measured(p).unwrap()).unwrap();
        assert!(!r.is_member);
        assert!(!r.boundary);
    }
}
