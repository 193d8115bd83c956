use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub max_leaves: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: 4,
            min_samples_leaf: 5,
            max_leaves: 16,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth < 1 || self.min_samples_leaf < 1 || self.max_leaves < 2 {
            return Err(Error::Config(format!("invalid tree config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Parent SSE minus the summed SSE of both children.
        gain: f64,
    },
}

/// Binary regression tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn leaf(value: f64) -> Self {
        Self {
            nodes: vec![Node::Leaf { value }],
        }
    }

    /// Builds a tree from explicit nodes; children must point inside `nodes`.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::EmptyInput);
        }
        for node in &nodes {
            if let Node::Split { left, right, .. } = node {
                if *left >= nodes.len() || *right >= nodes.len() {
                    return Err(Error::InvalidDataset("dangling tree child".into()));
                }
            }
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    pub fn max_feature_index(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .max()
    }

    /// Leaf value for one row. Goes left when `value <= threshold`.
    pub fn predict_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => idx = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub(crate) fn add_gains(&self, importances: &mut [f64]) {
        for node in &self.nodes {
            if let Node::Split { feature, gain, .. } = node {
                importances[*feature] += gain;
            }
        }
    }
}

pub fn fit_tree(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, config: &TreeConfig) -> Result<RegressionTree> {
    config.validate()?;
    if x.nrows() == 0 {
        return Err(Error::EmptyInput);
    }
    if x.nrows() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.nrows(),
            actual: y.len(),
        });
    }
    let cols = SortedColumns::new(x);
    let features: Vec<usize> = (0..x.ncols()).collect();
    let targets = y.to_vec();
    Ok(grow(&cols, &targets, &features, config).tree)
}

pub fn predict_tree(tree: &RegressionTree, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    if let Some(index) = tree.max_feature_index() {
        if index >= x.ncols() {
            return Err(Error::FeatureIndexOutOfRange {
                index,
                n_cols: x.ncols(),
            });
        }
    }
    Ok(x.rows().into_iter().map(|row| tree.predict_row(row)).collect())
}

/// Column-major copy of a feature matrix with each column's row order
/// presorted by value (ties by row index). Built once per fit.
pub(crate) struct SortedColumns {
    values: Vec<Vec<f64>>,
    order: Vec<Vec<u32>>,
    /// `values[f]` permuted into `order[f]`.
    sorted: Vec<Vec<f64>>,
}

impl SortedColumns {
    pub(crate) fn new(x: ArrayView2<'_, f64>) -> Self {
        let mut values = Vec::with_capacity(x.ncols());
        let mut order = Vec::with_capacity(x.ncols());
        let mut sorted = Vec::with_capacity(x.ncols());
        for col in x.columns() {
            let v = col.to_vec();
            let mut idx: Vec<u32> = (0..v.len() as u32).collect();
            idx.sort_by(|&a, &b| v[a as usize].total_cmp(&v[b as usize]).then(a.cmp(&b)));
            sorted.push(idx.iter().map(|&r| v[r as usize]).collect());
            values.push(v);
            order.push(idx);
        }
        Self { values, order, sorted }
    }

    pub(crate) fn n_rows(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }
}

pub(crate) struct Grown {
    pub tree: RegressionTree,
    /// Leaf node index reached by each training row.
    pub leaf_of_row: Vec<usize>,
}

const NO_SLOT: u32 = u32::MAX;

#[derive(Clone, Copy)]
struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

#[derive(Clone, Copy, Default)]
struct Scan {
    n: usize,
    sum: f64,
    last: f64,
}

/// Level-wise exact greedy growth on presorted columns.
pub(crate) fn grow(cols: &SortedColumns, targets: &[f64], features: &[usize], config: &TreeConfig) -> Grown {
    let n = targets.len();
    debug_assert_eq!(cols.n_rows(), n);
    let min_leaf = config.min_samples_leaf;

    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut node_of_row = vec![0usize; n];
    let mut open: Vec<usize> = vec![0];
    let mut n_leaves = 1usize;

    for _depth in 0..config.max_depth {
        if open.is_empty() {
            break;
        }
        // slot of each open node, and per-slot statistics
        let mut slot_of_node = vec![NO_SLOT; nodes.len()];
        for (s, &node) in open.iter().enumerate() {
            slot_of_node[node] = s as u32;
        }
        let k = open.len();
        let mut count = vec![0usize; k];
        let mut sum = vec![0.0f64; k];
        let mut slot_of_row = vec![NO_SLOT; n];
        for r in 0..n {
            let s = slot_of_node[node_of_row[r]];
            slot_of_row[r] = s;
            if s != NO_SLOT {
                count[s as usize] += 1;
                sum[s as usize] += targets[r];
            }
        }
        let mean: Vec<f64> = (0..k).map(|s| sum[s] / count[s].max(1) as f64).collect();
        let mut sse = vec![0.0f64; k];
        let mut lo = vec![f64::INFINITY; k];
        let mut hi = vec![f64::NEG_INFINITY; k];
        for r in 0..n {
            let s = slot_of_row[r];
            if s != NO_SLOT {
                let s = s as usize;
                let d = targets[r] - mean[s];
                sse[s] += d * d;
                lo[s] = lo[s].min(targets[r]);
                hi[s] = hi[s].max(targets[r]);
            }
        }
        let splittable: Vec<bool> = (0..k)
            .map(|s| count[s] >= 2 * min_leaf && lo[s] < hi[s])
            .collect();
        if !splittable.iter().any(|&b| b) {
            break;
        }

        // slot and target per row, packed so the scan makes one random access
        let rows: Vec<(u32, f64)> = (0..n)
            .map(|r| {
                let s = slot_of_row[r];
                let live = s != NO_SLOT && splittable[s as usize];
                (if live { s } else { NO_SLOT }, targets[r])
            })
            .collect();
        let mut best: Vec<Option<BestSplit>> = vec![None; k];
        let mut scan = vec![Scan::default(); k];
        for &f in features {
            scan.iter_mut().for_each(|sc| *sc = Scan::default());
            for (&r, &v) in cols.order[f].iter().zip(&cols.sorted[f]) {
                let (s, target) = rows[r as usize];
                if s == NO_SLOT {
                    continue;
                }
                let s = s as usize;
                let sc = &mut scan[s];
                if v > sc.last && sc.n >= min_leaf && count[s] - sc.n >= min_leaf {
                    let n_left = sc.n as f64;
                    let n_right = (count[s] - sc.n) as f64;
                    // parent SSE - children SSE, from the left sum centred on the node mean
                    let centred = sc.sum - n_left * mean[s];
                    let gain = centred * centred * count[s] as f64 / (n_left * n_right);
                    if gain > 1e-12 * sse[s] && best[s].is_none_or(|b| gain > b.gain) {
                        best[s] = Some(BestSplit {
                            feature: f,
                            threshold: midpoint(sc.last, v),
                            gain,
                        });
                    }
                }
                sc.n += 1;
                sc.sum += target;
                sc.last = v;
            }
        }

        let mut chosen: Vec<(usize, BestSplit)> = best
            .iter()
            .enumerate()
            .filter_map(|(s, b)| b.map(|b| (s, b)))
            .collect();
        chosen.sort_by(|a, b| b.1.gain.total_cmp(&a.1.gain).then(a.0.cmp(&b.0)));
        chosen.truncate(config.max_leaves.saturating_sub(n_leaves));
        if chosen.is_empty() {
            break;
        }
        // split in slot order so node numbering does not depend on gain order
        chosen.sort_by_key(|c| c.0);

        let mut next_open = Vec::with_capacity(2 * chosen.len());
        let mut split_of_slot: Vec<Option<(usize, f64, usize, usize)>> = vec![None; k];
        for (s, b) in chosen {
            let node = open[s];
            let left = nodes.len();
            let right = left + 1;
            nodes.push(Node::Leaf { value: 0.0 });
            nodes.push(Node::Leaf { value: 0.0 });
            nodes[node] = Node::Split {
                feature: b.feature,
                threshold: b.threshold,
                left,
                right,
                gain: b.gain,
            };
            split_of_slot[s] = Some((b.feature, b.threshold, left, right));
            next_open.push(left);
            next_open.push(right);
            n_leaves += 1;
        }
        for r in 0..n {
            let s = slot_of_row[r];
            if s == NO_SLOT {
                continue;
            }
            if let Some((f, thr, left, right)) = split_of_slot[s as usize] {
                node_of_row[r] = if cols.values[f][r] <= thr { left } else { right };
            }
        }
        open = next_open;
    }

    // leaf values: mean of routed targets, exact for constant leaves
    let mut acc: Vec<(usize, f64, f64, f64)> = vec![(0, 0.0, f64::INFINITY, f64::NEG_INFINITY); nodes.len()];
    for r in 0..n {
        let a = &mut acc[node_of_row[r]];
        a.0 += 1;
        a.1 += targets[r];
        a.2 = a.2.min(targets[r]);
        a.3 = a.3.max(targets[r]);
    }
    for (idx, node) in nodes.iter_mut().enumerate() {
        if let Node::Leaf { value } = node {
            let (cnt, s, lo, hi) = acc[idx];
            *value = if cnt == 0 {
                0.0
            } else if lo == hi {
                lo
            } else {
                s / cnt as f64
            };
        }
    }
    Grown {
        tree: RegressionTree { nodes },
        leaf_of_row: node_of_row,
    }
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    // adjacent floats can round the midpoint up onto `hi`
    if mid >= hi {
        lo
    } else {
        mid
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn step_data() -> (Array2<f64>, Array1<f64>) {
        (array![[0.0], [1.0], [2.0], [3.0]], array![0.0, 0.0, 10.0, 10.0])
    }

    fn stump() -> TreeConfig {
        TreeConfig {
            max_depth: 1,
            min_samples_leaf: 1,
            max_leaves: 2,
        }
    }

    #[test]
    fn constant_target_gives_single_leaf() {
        let x = Array2::from_shape_fn((20, 3), |(i, j)| ((i * 7 + j * 3) % 5) as f64);
        let y = Array1::from_elem(20, 0.1);
        let tree = fit_tree(x.view(), y.view(), &TreeConfig::default()).unwrap();
        assert_eq!(tree.nodes(), &[Node::Leaf { value: 0.1 }]);
    }

    #[test]
    fn step_split_matches_threshold_enumeration() {
        let (x, y) = step_data();
        // oracle: SSE of every candidate threshold between distinct values
        let xs = [0.0, 1.0, 2.0, 3.0];
        let sse = |part: &[f64]| {
            let m = part.iter().sum::<f64>() / part.len() as f64;
            part.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
        };
        let mut best = (f64::INFINITY, 0.0);
        for w in xs.windows(2) {
            let thr = (w[0] + w[1]) / 2.0;
            let l: Vec<f64> = (0..4).filter(|&i| xs[i] <= thr).map(|i| y[i]).collect();
            let r: Vec<f64> = (0..4).filter(|&i| xs[i] > thr).map(|i| y[i]).collect();
            let total = sse(&l) + sse(&r);
            if total < best.0 {
                best = (total, thr);
            }
        }
        assert_eq!(best.1, 1.5);

        let tree = fit_tree(x.view(), y.view(), &stump()).unwrap();
        match &tree.nodes()[0] {
            Node::Split { feature, threshold, gain, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, best.1);
                assert_eq!(*gain, 100.0);
            }
            other => panic!("expected split, got {other:?}"),
        }
        let pred = predict_tree(&tree, x.view()).unwrap();
        assert_eq!(pred.to_vec(), vec![0.0, 0.0, 10.0, 10.0]);
    }

    #[test]
    fn empty_input_is_an_error() {
        let x = Array2::<f64>::zeros((0, 2));
        let y = Array1::<f64>::zeros(0);
        assert!(matches!(fit_tree(x.view(), y.view(), &stump()), Err(Error::EmptyInput)));
    }

    #[test]
    fn predict_single_leaf() {
        let tree = RegressionTree::leaf(5.0);
        let x = array![[1.0, 2.0], [-3.0, 4.0]];
        assert_eq!(predict_tree(&tree, x.view()).unwrap().to_vec(), vec![5.0, 5.0]);
    }

    #[test]
    fn predict_routes_by_threshold() {
        let (x, y) = step_data();
        let tree = fit_tree(x.view(), y.view(), &stump()).unwrap();
        let rows = array![[0.0], [3.0], [1.5]];
        assert_eq!(predict_tree(&tree, rows.view()).unwrap().to_vec(), vec![0.0, 10.0, 0.0]);
    }

    #[test]
    fn predict_rejects_narrow_rows() {
        let tree = RegressionTree::from_nodes(vec![
            Node::Split {
                feature: 2,
                threshold: 0.0,
                left: 1,
                right: 2,
                gain: 1.0,
            },
            Node::Leaf { value: 0.0 },
            Node::Leaf { value: 1.0 },
        ])
        .unwrap();
        let x = array![[1.0, 2.0]];
        assert!(matches!(
            predict_tree(&tree, x.view()),
            Err(Error::FeatureIndexOutOfRange { index: 2, n_cols: 2 })
        ));
    }

    #[test]
    fn min_samples_leaf_is_respected() {
        let x = Array2::from_shape_fn((30, 1), |(i, _)| i as f64);
        let y = Array1::from_shape_fn(30, |i| if i < 2 { 100.0 } else { (i % 3) as f64 });
        let cfg = TreeConfig {
            max_depth: 3,
            min_samples_leaf: 5,
            max_leaves: 8,
        };
        let cols = SortedColumns::new(x.view());
        let grown = grow(&cols, y.as_slice().unwrap(), &[0], &cfg);
        let mut sizes = vec![0usize; grown.tree.nodes().len()];
        for &leaf in &grown.leaf_of_row {
            sizes[leaf] += 1;
        }
        for (i, node) in grown.tree.nodes().iter().enumerate() {
            if matches!(node, Node::Leaf { .. }) {
                assert!(sizes[i] >= 5, "leaf {i} has {} rows", sizes[i]);
            }
        }
    }

    #[test]
    fn max_leaves_caps_growth() {
        let x = Array2::from_shape_fn((64, 2), |(i, j)| ((i * (j + 3)) % 17) as f64);
        let y = Array1::from_shape_fn(64, |i| (i as f64).sin());
        let cfg = TreeConfig {
            max_depth: 6,
            min_samples_leaf: 1,
            max_leaves: 5,
        };
        let tree = fit_tree(x.view(), y.view(), &cfg).unwrap();
        assert!(tree.n_leaves() <= 5);
        assert!(tree.n_leaves() >= 2);
    }

    #[test]
    fn midpoint_never_reaches_upper_value() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let m = midpoint(lo, hi);
        assert!(lo <= m && m < hi);
    }
}
