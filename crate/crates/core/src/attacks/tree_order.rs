use serde::Serialize;

use super::AttackError;

/// Cap on backtracking nodes.
const NODE_BUDGET: usize = 2_000_000;
const MAX_REPORTED: usize = 100;

/// Rows `left` and `right` share a leaf for basis query `query`, but `middle`
/// does not and sits between them in the proposed order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ViolatedTriple {
    pub query: usize,
    pub left: usize,
    pub middle: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderRecovery {
    /// Row indices along the recovered feature order.
    pub order: Vec<usize>,
    /// Rows whose basis query hit only themselves: the ends of the order.
    pub extremes: Vec<usize>,
    /// Leaf patterns never distinguish an order from its reversal.
    pub reflection_ambiguous: bool,
    /// No other order (besides the reversal) satisfies the constraints.
    pub unique: bool,
    /// Co-leaf row sets, tagged with the basis query that produced them.
    pub constraints: Vec<(usize, Vec<usize>)>,
}

struct Search<'a> {
    n: usize,
    sets: &'a [(usize, Vec<usize>)],
    member: Vec<Vec<bool>>,
    start: Option<usize>,
    end: Option<usize>,
    order: Vec<usize>,
    used: Vec<bool>,
    placed: Vec<usize>,
    nodes: usize,
    solutions: Vec<Vec<usize>>,
    deepest: Vec<usize>,
}

impl Search<'_> {
    fn admissible(&self, v: usize) -> bool {
        let last = self.order.last().copied();
        if self.order.is_empty() {
            if let Some(s) = self.start {
                return v == s;
            }
        }
        if self.order.len() + 1 == self.n {
            if let Some(e) = self.end {
                if v != e {
                    return false;
                }
            }
        } else if Some(v) == self.end {
            return false;
        }
        let Some(last) = last else { return true };
        for (c, (_, set)) in self.sets.iter().enumerate() {
            let inside = self.member[c][v];
            let last_inside = self.member[c][last];
            let open = self.placed[c] > 0 && self.placed[c] < set.len();
            if inside && self.placed[c] > 0 && !last_inside {
                return false;
            }
            if !inside && open && last_inside {
                return false;
            }
        }
        true
    }

    fn place(&mut self, v: usize, delta: isize) {
        for c in 0..self.sets.len() {
            if self.member[c][v] {
                self.placed[c] = (self.placed[c] as isize + delta) as usize;
            }
        }
    }

    fn run(&mut self) {
        if self.solutions.len() == 2 || self.nodes >= NODE_BUDGET {
            return;
        }
        self.nodes += 1;
        if self.order.len() > self.deepest.len() {
            self.deepest = self.order.clone();
        }
        if self.order.len() == self.n {
            let reversed: Vec<usize> = self.order.iter().rev().copied().collect();
            if !self.solutions.contains(&reversed) {
                self.solutions.push(self.order.clone());
            }
            return;
        }
        for v in 0..self.n {
            if self.used[v] || !self.admissible(v) {
                continue;
            }
            self.used[v] = true;
            self.order.push(v);
            self.place(v, 1);
            self.run();
            self.place(v, -1);
            self.order.pop();
            self.used[v] = false;
            if self.solutions.len() == 2 {
                return;
            }
        }
    }
}

fn violations(order: &[usize], sets: &[(usize, Vec<usize>)]) -> Vec<ViolatedTriple> {
    let mut pos = vec![0; order.len()];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut out = Vec::new();
    for (query, set) in sets {
        let left = *set.iter().min_by_key(|&&v| pos[v]).expect("sets have two or more rows");
        let right = *set.iter().max_by_key(|&&v| pos[v]).expect("sets have two or more rows");
        for &middle in &order[pos[left] + 1..pos[right]] {
            if !set.contains(&middle) {
                out.push(ViolatedTriple { query: *query, left, middle, right });
                if out.len() == MAX_REPORTED {
                    return out;
                }
            }
        }
    }
    out
}

/// Recovers the order of rows along a single feature from the responses of
/// a binary tree service to the basis labels `e_1 .. e_n`.
///
/// `responses[i]` is the fitted-value vector for `e_i`. Rows with nonzero
/// fitted values share `e_i`'s leaf, and leaves of a tree on one feature are
/// intervals, so each such set must be contiguous in the order. A row whose
/// response is zero outside itself is an extreme point. The search anchors
/// at the lower-indexed extreme and ends at the other.
pub fn tree_structure_recover(responses: &[Vec<f64>]) -> Result<OrderRecovery, AttackError> {
    let n = responses.len();
    if n == 0 {
        return Err(AttackError::InvalidParameter("no responses".into()));
    }
    if let Some(bad) = responses.iter().position(|r| r.len() != n) {
        return Err(AttackError::InvalidParameter(format!("response {bad} has length {} != {n}", responses[bad].len())));
    }
    let supports: Vec<Vec<usize>> = responses.iter().map(|r| (0..n).filter(|&j| r[j] != 0.0).collect()).collect();
    let extremes: Vec<usize> = (0..n).filter(|&i| supports[i].iter().all(|&j| j == i)).collect();
    let mut sets: Vec<(usize, Vec<usize>)> = Vec::new();
    for (q, s) in supports.into_iter().enumerate() {
        if s.len() >= 2 && !sets.iter().any(|(_, t)| *t == s) {
            sets.push((q, s));
        }
    }
    let member: Vec<Vec<bool>> = sets
        .iter()
        .map(|(_, s)| {
            let mut m = vec![false; n];
            for &v in s {
                m[v] = true;
            }
            m
        })
        .collect();
    let (start, end) = match extremes.as_slice() {
        [a, b] => (Some(*a), Some(*b)),
        [a] => (Some(*a), None),
        _ => (None, None),
    };
    let mut search = Search {
        n,
        sets: &sets,
        member,
        start,
        end,
        order: Vec::with_capacity(n),
        used: vec![false; n],
        placed: vec![0; sets.len()],
        nodes: 0,
        solutions: Vec::new(),
        deepest: Vec::new(),
    };
    search.run();
    let exhausted = search.nodes >= NODE_BUDGET;
    if search.solutions.is_empty() {
        let mut fallback = search.deepest.clone();
        fallback.extend((0..n).filter(|v| !search.deepest.contains(v)));
        return Err(AttackError::Inconsistent { violated: violations(&fallback, &sets) });
    }
    let unique = search.solutions.len() == 1 && !exhausted;
    let order = search.solutions.swap_remove(0);
    Ok(OrderRecovery { order, extremes, reflection_ambiguous: true, unique, constraints: sets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DataMatrix, LabelVector, Learner};
    use crate::rng;
    use proptest::prelude::*;

    fn worked_rows() -> Vec<Vec<f64>> {
        let t = 1.0 / 3.0;
        let h = 0.5;
        vec![
            vec![t, t, 0.0, t, 0.0, 0.0],
            vec![0.0; 6],
            vec![0.0, 0.0, h, 0.0, h, 0.0],
            vec![0.0, h, 0.0, h, 0.0, 0.0],
            vec![0.0; 6],
            vec![0.0, 0.0, t, 0.0, t, t],
        ]
    }

    #[test]
    fn worked_table_order() {
        let r = tree_structure_recover(&worked_rows()).unwrap();
        assert_eq!(r.order, vec![1, 3, 0, 5, 2, 4]);
        assert_eq!(r.extremes, vec![1, 4]);
        assert!(r.unique);
        assert!(r.reflection_ambiguous);
    }

    #[test]
    fn two_rows_both_extreme() {
        let r = tree_structure_recover(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(r.extremes, vec![0, 1]);
        assert_eq!(r.order, vec![0, 1]);
        assert!(r.reflection_ambiguous);
    }

    #[test]
    fn contradictory_constraints_list_triples() {
        // {0,1}, {1,2}, {0,2} cannot all be contiguous with 3 in the middle of nothing
        let rows = vec![
            vec![1.0, 1.0, 0.0, 0.0],
            vec![0.0, 1.0, 1.0, 0.0],
            vec![1.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0],
        ];
        let r = tree_structure_recover(&rows);
        match r {
            Err(AttackError::Inconsistent { violated }) => assert!(!violated.is_empty()),
            other => panic!("expected inconsistency, got {other:?}"),
        }
    }

    fn stump_responses(x: &[f64]) -> Vec<Vec<f64>> {
        let data = DataMatrix::from_column(x).unwrap();
        (0..x.len())
            .map(|i| {
                let f = Learner::tree(1, 1).fit(&data, &LabelVector::basis(x.len(), i, 1.0).unwrap(), 0).unwrap();
                f.evaluate(&data).unwrap().values().to_vec()
            })
            .collect()
    }

    #[test]
    fn end_to_end_with_stump_learner() {
        for seed in 0..20 {
            let mut r = rng::stream(seed, "tree-order", 0);
            let x: Vec<f64> = (0..8).map(|_| rng::standard_normal(&mut r)).collect();
            let rec = tree_structure_recover(&stump_responses(&x)).unwrap();
            let mut sorted: Vec<usize> = (0..8).collect();
            sorted.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
            let reversed: Vec<usize> = sorted.iter().rev().copied().collect();
            assert!(rec.order == sorted || rec.order == reversed, "seed {seed}");
            assert!(rec.unique);
        }
    }

    proptest! {
        #[test]
        fn relabelling_rows_permutes_the_order(perm in Just((0..6usize).collect::<Vec<_>>()).prop_shuffle()) {
            let rows = worked_rows();
            let mut permuted = vec![vec![0.0; 6]; 6];
            for i in 0..6 {
                for j in 0..6 {
                    permuted[perm[i]][perm[j]] = rows[i][j];
                }
            }
            let base = tree_structure_recover(&rows).unwrap().order;
            let got = tree_structure_recover(&permuted).unwrap().order;
            let mapped: Vec<usize> = base.iter().map(|&i| perm[i]).collect();
            let reversed: Vec<usize> = mapped.iter().rev().copied().collect();
            prop_assert!(got == mapped || got == reversed);
        }
    }
}
