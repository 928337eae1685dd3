use serde::{Deserialize, Serialize};

use crate::model::{DataMatrix, LabelVector, ModelError};

/// Relative slack used both for split ties and for the "no gain" stop.
const SPLIT_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "kebab-case")]
pub enum TreeNode {
    /// Rows with `x[feature] <= threshold` go to `left`.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    /// `id` is the root path, e.g. `"T"`, `"TL"`, `"TLR"`.
    Leaf { value: f64, members: Vec<usize>, id: String },
}

/// Binary least-squares regression tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<TreeNode>,
    max_depth: usize,
    min_leaf: usize,
    n_features: usize,
}

impl RegressionTree {
    /// Builds a tree from explicit nodes, checking that children indices are
    /// valid, every node is reachable exactly once and leaf ids are unique.
    pub fn from_nodes(nodes: Vec<TreeNode>, n_features: usize) -> Result<Self, ModelError> {
        if nodes.is_empty() {
            return Err(ModelError::Empty("tree nodes"));
        }
        let mut seen = vec![false; nodes.len()];
        let mut ids = std::collections::BTreeSet::new();
        let mut stack = vec![0usize];
        let mut depth = 0;
        let mut depths = vec![0usize; nodes.len()];
        while let Some(i) = stack.pop() {
            if i >= nodes.len() || seen[i] {
                return Err(ModelError::InvalidParameter(format!("tree node {i} missing or shared")));
            }
            seen[i] = true;
            depth = depth.max(depths[i]);
            match &nodes[i] {
                TreeNode::Split { feature, threshold, left, right } => {
                    if *feature >= n_features || !threshold.is_finite() {
                        return Err(ModelError::InvalidParameter(format!("bad split at node {i}")));
                    }
                    for &c in [left, right] {
                        if c < nodes.len() {
                            depths[c] = depths[i] + 1;
                        }
                        stack.push(c);
                    }
                }
                TreeNode::Leaf { value, id, .. } => {
                    if !value.is_finite() || !ids.insert(id.clone()) {
                        return Err(ModelError::InvalidParameter(format!("bad leaf at node {i}")));
                    }
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(ModelError::InvalidParameter("unreachable tree node".into()));
        }
        Ok(Self { nodes, max_depth: depth, min_leaf: 1, n_features })
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn min_leaf(&self) -> usize {
        self.min_leaf
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    fn leaf_index(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Split { feature, threshold, left, right } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
                TreeNode::Leaf { .. } => return i,
            }
        }
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        match &self.nodes[self.leaf_index(x)] {
            TreeNode::Leaf { value, .. } => *value,
            TreeNode::Split { .. } => unreachable!("leaf_index stops at leaves"),
        }
    }

    pub fn leaf_id(&self, x: &[f64]) -> &str {
        match &self.nodes[self.leaf_index(x)] {
            TreeNode::Leaf { id, .. } => id,
            TreeNode::Split { .. } => unreachable!("leaf_index stops at leaves"),
        }
    }

    /// `(id, value, members)` for every leaf, in node order.
    pub fn leaves(&self) -> impl Iterator<Item = (&str, f64, &[usize])> {
        self.nodes.iter().filter_map(|n| match n {
            TreeNode::Leaf { value, members, id } => Some((id.as_str(), *value, members.as_slice())),
            TreeNode::Split { .. } => None,
        })
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves().count()
    }
}

struct Builder<'a> {
    x: &'a DataMatrix,
    y: &'a [f64],
    max_depth: usize,
    min_leaf: usize,
    nodes: Vec<TreeNode>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    sse: f64,
}

fn sse_of(y: &[f64], rows: &[usize]) -> f64 {
    let mean = rows.iter().map(|&r| y[r]).sum::<f64>() / rows.len() as f64;
    rows.iter().map(|&r| (y[r] - mean).powi(2)).sum()
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

impl Builder<'_> {
    fn best_split(&self, rows: &[usize], parent_sse: f64) -> Option<Candidate> {
        let n = rows.len();
        if n < 2 * self.min_leaf {
            return None;
        }
        let mean = rows.iter().map(|&r| self.y[r]).sum::<f64>() / n as f64;
        let slack = SPLIT_RTOL * (1.0 + parent_sse);
        let mut best: Option<Candidate> = None;
        let mut sorted = rows.to_vec();
        for feature in 0..self.x.cols() {
            let m = self.x.matrix();
            sorted.sort_by(|&a, &b| m[(a, feature)].total_cmp(&m[(b, feature)]).then(a.cmp(&b)));
            let centered: Vec<f64> = sorted.iter().map(|&r| self.y[r] - mean).collect();
            let total: f64 = centered.iter().sum();
            let total_sq: f64 = centered.iter().map(|v| v * v).sum();
            let (mut s, mut sq) = (0.0, 0.0);
            for k in 1..n {
                s += centered[k - 1];
                sq += centered[k - 1] * centered[k - 1];
                let (a, b) = (m[(sorted[k - 1], feature)], m[(sorted[k], feature)]);
                if a == b || k < self.min_leaf || n - k < self.min_leaf {
                    continue;
                }
                let nl = k as f64;
                let nr = (n - k) as f64;
                let sse_l = (sq - s * s / nl).max(0.0);
                let sse_r = ((total_sq - sq) - (total - s).powi(2) / nr).max(0.0);
                let sse = sse_l + sse_r;
                if best.as_ref().is_none_or(|c| sse < c.sse - slack) {
                    best = Some(Candidate { feature, threshold: midpoint(a, b), sse });
                }
            }
        }
        best.filter(|c| parent_sse - c.sse > slack)
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize, id: String) -> usize {
        let index = self.nodes.len();
        let parent_sse = sse_of(self.y, &rows);
        let split = if depth < self.max_depth { self.best_split(&rows, parent_sse) } else { None };
        match split {
            None => {
                let value = rows.iter().map(|&r| self.y[r]).sum::<f64>() / rows.len() as f64;
                let mut members = rows;
                members.sort_unstable();
                self.nodes.push(TreeNode::Leaf { value, members, id });
            }
            Some(c) => {
                self.nodes.push(TreeNode::Split { feature: c.feature, threshold: c.threshold, left: 0, right: 0 });
                let m = self.x.matrix();
                let (l, r): (Vec<usize>, Vec<usize>) = rows.into_iter().partition(|&i| m[(i, c.feature)] <= c.threshold);
                let left = self.build(l, depth + 1, format!("{id}L"));
                let right = self.build(r, depth + 1, format!("{id}R"));
                self.nodes[index] = TreeNode::Split { feature: c.feature, threshold: c.threshold, left, right };
            }
        }
        index
    }
}

/// Greedy top-down least-squares tree. Candidate thresholds are midpoints of
/// adjacent distinct sorted values; ties go to the lowest feature index and
/// then the smallest threshold.
pub fn fit_tree(x: &DataMatrix, y: &LabelVector, max_depth: usize, min_leaf: usize) -> Result<RegressionTree, ModelError> {
    if y.len() != x.rows() {
        return Err(ModelError::DimensionMismatch { context: "tree labels", expected: x.rows(), actual: y.len() });
    }
    if min_leaf == 0 {
        return Err(ModelError::InvalidParameter("min_leaf must be at least 1".into()));
    }
    let mut b = Builder { x, y: y.values(), max_depth, min_leaf, nodes: Vec::new() };
    b.build((0..x.rows()).collect(), 0, "T".to_string());
    Ok(RegressionTree { nodes: b.nodes, max_depth, min_leaf, n_features: x.cols() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const XB: [f64; 6] = [7.0, 1.0, 10.0, 5.0, 18.0, 9.0];

    fn stump_values(index: usize) -> Vec<f64> {
        let x = DataMatrix::from_column(&XB).unwrap();
        let y = LabelVector::basis(6, index, 1.0).unwrap();
        let t = fit_tree(&x, &y, 1, 1).unwrap();
        x.row_iter().map(|r| t.predict_row(&r)).collect()
    }

    #[test]
    fn stump_on_third_basis_vector() {
        assert_eq!(stump_values(2), vec![0.0, 0.0, 0.5, 0.0, 0.5, 0.0]);
    }

    #[test]
    fn stump_on_fourth_basis_vector() {
        assert_eq!(stump_values(3), vec![0.0, 0.5, 0.0, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn constant_labels_give_single_leaf() {
        let x = DataMatrix::from_column(&XB).unwrap();
        let y = LabelVector::regression(vec![4.5; 6]).unwrap();
        let t = fit_tree(&x, &y, 5, 1).unwrap();
        assert_eq!(t.n_leaves(), 1);
        assert_eq!(t.predict_row(&[100.0]), 4.5);
        assert_eq!(t.leaf_id(&[0.0]), "T");
    }

    #[test]
    fn hand_built_tree_routes_ties_left() {
        let nodes = vec![
            TreeNode::Split { feature: 0, threshold: 8.0, left: 1, right: 2 },
            TreeNode::Leaf { value: -1.0, members: vec![], id: "TL".into() },
            TreeNode::Leaf { value: 1.0, members: vec![], id: "TR".into() },
        ];
        let t = RegressionTree::from_nodes(nodes, 1).unwrap();
        assert_eq!(t.leaf_id(&[8.0]), "TL");
        assert_eq!(t.leaf_id(&[8.0 + 1e-9]), "TR");
    }

    #[test]
    fn from_nodes_rejects_duplicate_ids() {
        let nodes = vec![
            TreeNode::Split { feature: 0, threshold: 0.0, left: 1, right: 2 },
            TreeNode::Leaf { value: 0.0, members: vec![], id: "X".into() },
            TreeNode::Leaf { value: 0.0, members: vec![], id: "X".into() },
        ];
        assert!(RegressionTree::from_nodes(nodes, 1).is_err());
    }

    #[test]
    fn midpoint_never_reaches_upper_value() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let m = midpoint(a, b);
        assert!(a <= m && m < b);
    }

    fn exhaustive_stump(x: &[Vec<f64>], y: &[f64]) -> Option<(f64, Vec<usize>)> {
        let n = y.len();
        let all: Vec<usize> = (0..n).collect();
        let parent = sse_of(y, &all);
        let slack = SPLIT_RTOL * (1.0 + parent);
        let mut best: Option<(f64, Vec<usize>)> = None;
        for j in 0..x[0].len() {
            let mut vals: Vec<f64> = x.iter().map(|r| r[j]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let thr = midpoint(w[0], w[1]);
                let left: Vec<usize> = (0..n).filter(|&i| x[i][j] <= thr).collect();
                let right: Vec<usize> = (0..n).filter(|&i| x[i][j] > thr).collect();
                let sse = sse_of(y, &left) + sse_of(y, &right);
                if best.as_ref().is_none_or(|b| sse < b.0 - slack) {
                    best = Some((sse, left));
                }
            }
        }
        best.filter(|b| parent - b.0 > slack)
    }

    proptest! {
        #[test]
        fn depth_one_matches_exhaustive_search(
            (p, rows, y) in (1usize..=3, 2usize..=30).prop_flat_map(|(p, n)| (
                Just(p),
                proptest::collection::vec(proptest::collection::vec(-3i32..=3, p), n),
                proptest::collection::vec(-4i32..=4, n),
            ))
        ) {
            let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|&v| f64::from(v)).collect()).collect();
            let yv: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
            let x = DataMatrix::from_rows(&rows).unwrap();
            prop_assert_eq!(x.cols(), p);
            let t = fit_tree(&x, &LabelVector::regression(yv.clone()).unwrap(), 1, 1).unwrap();
            match exhaustive_stump(&rows, &yv) {
                None => prop_assert_eq!(t.n_leaves(), 1),
                Some((sse, left)) => {
                    let leaves: Vec<_> = t.leaves().collect();
                    prop_assert_eq!(leaves.len(), 2);
                    prop_assert_eq!(leaves[0].2, left.as_slice());
                    let fitted: f64 = (0..rows.len()).map(|i| (yv[i] - t.predict_row(&rows[i])).powi(2)).sum();
                    prop_assert!((fitted - sse).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn leaf_values_are_member_means(
            rows in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 2), 1..40),
            seed in proptest::collection::vec(-10.0f64..10.0, 40),
            depth in 0usize..5,
        ) {
            let n = rows.len();
            let y: Vec<f64> = seed[..n].to_vec();
            let x = DataMatrix::from_rows(&rows).unwrap();
            let t = fit_tree(&x, &LabelVector::regression(y.clone()).unwrap(), depth, 1).unwrap();
            let mut covered = vec![0usize; n];
            for (_, value, members) in t.leaves() {
                let mean = members.iter().map(|&i| y[i]).sum::<f64>() / members.len() as f64;
                prop_assert!((value - mean).abs() < 1e-12);
                for &m in members {
                    covered[m] += 1;
                    prop_assert_eq!(t.predict_row(&rows[m]), value);
                }
            }
            prop_assert!(covered.iter().all(|&c| c == 1));
        }
    }
}
