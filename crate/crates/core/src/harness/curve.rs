use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::run::GridResult;

/// `points[k]` is the largest load `p` up to which recall from `k` flips
/// keeps a mean overlap of at least `epsilon`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveResult {
    pub epsilon: f64,
    pub points: BTreeMap<usize, usize>,
}

/// First-crossing rule: scanning `p` upward, `p_ε(k)` is the last load
/// before the first cell below `epsilon`, or 0 if the first load fails.
pub fn extract_curve(grid: &GridResult, epsilon: f64) -> Result<CurveResult> {
    if grid.p_values.is_empty() || grid.k_values.is_empty() {
        return Err(Error::invalid("cannot extract a curve from an empty grid"));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    let points = grid
        .k_values
        .iter()
        .enumerate()
        .map(|(ki, &k)| {
            let mut last = 0;
            for (pi, &p) in grid.p_values.iter().enumerate() {
                if grid.mean_overlap[pi][ki] < epsilon {
                    break;
                }
                last = p;
            }
            (k, last)
        })
        .collect();
    Ok(CurveResult { epsilon, points })
}

/// Discrete area `Σ_k p_ε(k)`.
pub fn curve_area(curve: &CurveResult) -> f64 {
    curve.points.values().map(|&p| p as f64).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::RuleKind;
    use proptest::prelude::*;

    fn grid(p_values: Vec<usize>, k_values: Vec<usize>, mean_overlap: Vec<Vec<f64>>) -> GridResult {
        GridResult {
            rule: RuleKind::Hebbian,
            n: 8,
            p_values,
            k_values,
            mean_overlap,
            records: vec![],
        }
    }

    #[test]
    fn first_crossing_wins() {
        let g = grid(vec![1, 2, 3, 4], vec![0], vec![vec![0.99], vec![0.96], vec![0.90], vec![0.97]]);
        assert_eq!(extract_curve(&g, 0.95).unwrap().points[&0], 2);
    }

    #[test]
    fn extremes() {
        let good = grid(vec![1, 2], vec![0, 1], vec![vec![1.0; 2]; 2]);
        let c = extract_curve(&good, 0.95).unwrap();
        assert!(c.points.values().all(|&p| p == 2));
        assert_eq!(curve_area(&c), 4.0);
        let bad = grid(vec![1, 2], vec![0, 1], vec![vec![0.2; 2]; 2]);
        let c = extract_curve(&bad, 0.95).unwrap();
        assert!(c.points.values().all(|&p| p == 0));
        assert_eq!(curve_area(&c), 0.0);
    }

    #[test]
    fn threshold_is_inclusive() {
        let g = grid(vec![1, 2], vec![3], vec![vec![0.95], vec![0.94]]);
        assert_eq!(extract_curve(&g, 0.95).unwrap().points[&3], 1);
    }

    #[test]
    fn constant_curve_area() {
        let c = CurveResult {
            epsilon: 0.9,
            points: (0..7).map(|k| (k, 5)).collect(),
        };
        assert_eq!(curve_area(&c), 35.0);
    }

    proptest! {
        #[test]
        fn curve_is_monotone_in_epsilon(
            cells in prop::collection::vec(prop::collection::vec(-1.0f64..=1.0, 3), 1..6),
            e1 in 0.01f64..=1.0,
            e2 in 0.01f64..=1.0,
        ) {
            let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            let g = grid((1..=cells.len()).collect(), vec![0, 1, 2], cells);
            let a = extract_curve(&g, lo).unwrap();
            let b = extract_curve(&g, hi).unwrap();
            for k in 0..3 {
                prop_assert!(a.points[&k] >= b.points[&k]);
                prop_assert!(a.points[&k] <= *g.p_values.last().unwrap());
            }
            prop_assert!(curve_area(&a) >= curve_area(&b));
        }

        #[test]
        fn pointwise_domination_implies_area_domination(
            pairs in prop::collection::vec((0usize..50, 0usize..50), 1..20),
        ) {
            let lower = CurveResult { epsilon: 0.9, points: pairs.iter().enumerate().map(|(k, &(a, b))| (k, a.min(b))).collect() };
            let upper = CurveResult { epsilon: 0.9, points: pairs.iter().enumerate().map(|(k, &(a, b))| (k, a.max(b))).collect() };
            prop_assert!(curve_area(&upper) >= curve_area(&lower));
        }
    }
}
