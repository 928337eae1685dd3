use std::collections::BTreeSet;

use serde::Serialize;

use super::api::expect_leaf;
use super::{AttackError, Oracle};
use crate::model::{ResponseMode, SideInfo};

#[derive(Debug, Clone)]
pub struct PathFindingConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Bisection stops once the bracket is at most this wide.
    pub delta_split: f64,
}

impl PathFindingConfig {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self { lower, upper, delta_split: 1e-6 }
    }
}

/// Axis-aligned box on which the target returns one leaf identifier.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub leaf_id: String,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Cell {
    fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| *l <= *v && *v <= *u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveredPartition {
    pub cells: Vec<Cell>,
    /// Fraction of the search box volume covered by recovered cells.
    pub coverage: f64,
    pub complete: bool,
    pub queries: usize,
}

impl RecoveredPartition {
    /// Leaf identifier of the first cell containing `x`.
    pub fn classify(&self, x: &[f64]) -> Option<&str> {
        self.cells.iter().find(|c| c.contains(x)).map(|c| c.leaf_id.as_str())
    }

    pub fn leaf_ids(&self) -> BTreeSet<&str> {
        self.cells.iter().map(|c| c.leaf_id.as_str()).collect()
    }
}

fn volume(lower: &[f64], upper: &[f64]) -> f64 {
    lower.iter().zip(upper).map(|(l, u)| u - l).product()
}

struct Search<'a> {
    oracle: &'a mut dyn Oracle,
    delta: f64,
}

impl Search<'_> {
    fn leaf(&mut self, x: &[f64]) -> Result<String, AttackError> {
        expect_leaf(self.oracle.query_row(x)?)
    }

    /// Moves from `inside` (known to be in leaf `id`) towards `edge` along one
    /// feature and returns the cell's extent in that direction.
    fn extent(&mut self, x: &[f64], feature: usize, edge: f64, id: &str) -> Result<f64, AttackError> {
        let mut probe = x.to_vec();
        probe[feature] = edge;
        if self.leaf(&probe)? == id {
            return Ok(edge);
        }
        let (mut a, mut b) = (x[feature], edge);
        while (b - a).abs() > self.delta {
            let mid = a + (b - a) / 2.0;
            probe[feature] = mid;
            if self.leaf(&probe)? == id {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(a + (b - a) / 2.0)
    }

    fn cell_at(&mut self, lower: &[f64], upper: &[f64]) -> Result<Cell, AttackError> {
        let center: Vec<f64> = lower.iter().zip(upper).map(|(l, u)| l + (u - l) / 2.0).collect();
        let id = self.leaf(&center)?;
        // leaf identifiers are root paths; a root leaf is the whole input space
        if id == "T" {
            return Ok(Cell { leaf_id: id, lower: lower.to_vec(), upper: upper.to_vec() });
        }
        let mut lo = lower.to_vec();
        let mut hi = upper.to_vec();
        for j in 0..center.len() {
            lo[j] = self.extent(&center, j, lower[j], &id)?;
            hi[j] = self.extent(&center, j, upper[j], &id)?;
        }
        Ok(Cell { leaf_id: id, lower: lo, upper: hi })
    }
}

/// Splits `box \ cell` into at most `2p` disjoint boxes.
fn subtract(lower: &[f64], upper: &[f64], cell: &Cell) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut out = Vec::new();
    let mut lo = lower.to_vec();
    let mut hi = upper.to_vec();
    for j in 0..lower.len() {
        if cell.lower[j] > lo[j] {
            let mut u = hi.clone();
            u[j] = cell.lower[j];
            out.push((lo.clone(), u));
        }
        if cell.upper[j] < hi[j] {
            let mut l = lo.clone();
            l[j] = cell.upper[j];
            out.push((l, hi.clone()));
        }
        lo[j] = cell.lower[j];
        hi[j] = cell.upper[j];
    }
    out
}

/// Path-finding extraction of a tree served in leaf-identifier mode.
///
/// The box is covered cell by cell: the leaf at the centre of an uncovered
/// box is expanded along each feature by bisection on leaf identity, the
/// resulting cell is subtracted, and the remainder is searched in turn.
/// Boxes narrower than `delta_split` in any direction are left uncovered.
/// If the budget runs out, the cells found so far are returned with
/// `complete = false`.
pub fn path_finding_extract(oracle: &mut dyn Oracle, cfg: &PathFindingConfig) -> Result<RecoveredPartition, AttackError> {
    if oracle.mode() != ResponseMode::LeafId {
        return Err(AttackError::WrongMode { expected: "leaf-id", actual: oracle.mode() });
    }
    let p = cfg.lower.len();
    if p == 0 || cfg.upper.len() != p || cfg.lower.iter().zip(&cfg.upper).any(|(l, u)| !(l < u)) || !(cfg.delta_split > 0.0) {
        return Err(AttackError::InvalidParameter("path finding needs a nonempty box and positive delta".into()));
    }
    oracle.add_side_info(SideInfo::FeatureBox { lower: cfg.lower.clone(), upper: cfg.upper.clone() });
    let start = oracle.queries_used();
    let total = volume(&cfg.lower, &cfg.upper);
    let mut search = Search { oracle, delta: cfg.delta_split };
    let mut cells = Vec::new();
    let mut stack = vec![(cfg.lower.clone(), cfg.upper.clone())];
    let mut complete = true;
    while let Some((lo, hi)) = stack.pop() {
        if lo.iter().zip(&hi).any(|(l, u)| u - l <= cfg.delta_split) {
            continue;
        }
        match search.cell_at(&lo, &hi) {
            Ok(cell) => {
                let mut rest = subtract(&lo, &hi, &cell);
                rest.reverse();
                stack.extend(rest);
                cells.push(cell);
            }
            Err(AttackError::BudgetExhausted { .. }) => {
                complete = false;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let covered: f64 = cells.iter().map(|c| volume(&c.lower, &c.upper)).sum();
    let queries = search.oracle.queries_used() - start;
    Ok(RecoveredPartition { cells, coverage: (covered / total).min(1.0), complete, queries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::ApiView;
    use crate::learners::{RegressionTree, TreeNode};
    use crate::model::{FittedModel, PredictionFn, Provenance, QueryBudget};

    fn leaf(id: &str) -> TreeNode {
        TreeNode::Leaf { value: 0.0, members: vec![], id: id.into() }
    }

    fn view(nodes: Vec<TreeNode>, p: usize) -> ApiView {
        let t = RegressionTree::from_nodes(nodes, p).unwrap();
        ApiView::predictor("tree", PredictionFn::new(FittedModel::Tree(t), p, Provenance::default()), ResponseMode::LeafId).unwrap()
    }

    #[test]
    fn single_leaf_needs_one_query() {
        let mut v = view(vec![leaf("T")], 2);
        let r = path_finding_extract(&mut v, &PathFindingConfig::new(vec![-10.0; 2], vec![10.0; 2])).unwrap();
        assert_eq!(r.queries, 1);
        assert_eq!(r.cells.len(), 1);
        assert_eq!(r.coverage, 1.0);
    }

    #[test]
    fn stump_threshold_found_by_bisection() {
        let mut v = view(vec![TreeNode::Split { feature: 0, threshold: 8.0, left: 1, right: 2 }, leaf("TL"), leaf("TR")], 1);
        let r = path_finding_extract(&mut v, &PathFindingConfig::new(vec![-10.0], vec![10.0])).unwrap();
        assert!(r.complete);
        let left = r.cells.iter().find(|c| c.leaf_id == "TL").unwrap();
        assert!((left.upper[0] - 8.0).abs() <= 1e-6);
        assert!(r.queries <= 60, "{} queries", r.queries);
        assert_eq!(r.queries, v.queries_used());
    }

    fn depth_three() -> Vec<TreeNode> {
        vec![
            TreeNode::Split { feature: 0, threshold: 0.3, left: 1, right: 8 },
            TreeNode::Split { feature: 1, threshold: -2.7, left: 2, right: 5 },
            TreeNode::Split { feature: 0, threshold: -4.1, left: 3, right: 4 },
            leaf("TLLL"),
            leaf("TLLR"),
            TreeNode::Split { feature: 1, threshold: 5.3, left: 6, right: 7 },
            leaf("TLRL"),
            leaf("TLRR"),
            TreeNode::Split { feature: 1, threshold: 1.9, left: 9, right: 12 },
            TreeNode::Split { feature: 0, threshold: 6.6, left: 10, right: 11 },
            leaf("TRLL"),
            leaf("TRLR"),
            leaf("TRR"),
        ]
    }

    #[test]
    fn depth_three_tree_agrees_on_grid_probes() {
        let nodes = depth_three();
        let truth = RegressionTree::from_nodes(nodes.clone(), 2).unwrap();
        let mut v = view(nodes, 2);
        let r = path_finding_extract(&mut v, &PathFindingConfig::new(vec![-10.0; 2], vec![10.0; 2])).unwrap();
        assert!(r.complete);
        assert_eq!(r.leaf_ids().len(), 7);
        let mut agree = 0;
        for i in 0..100 {
            for j in 0..100 {
                let x = [-9.99 + 0.2 * i as f64, -9.99 + 0.2 * j as f64];
                if r.classify(&x) == Some(truth.leaf_id(&x)) {
                    agree += 1;
                }
            }
        }
        assert_eq!(agree, 10_000);
    }

    #[test]
    fn budget_exhaustion_returns_partial_partition() {
        let mut v = view(depth_three(), 2).with_budget(QueryBudget { k1: 40, k2: None });
        let r = path_finding_extract(&mut v, &PathFindingConfig::new(vec![-10.0; 2], vec![10.0; 2])).unwrap();
        assert!(!r.complete);
        assert!(r.coverage < 1.0);
        assert_eq!(r.queries, 40);
    }
}
