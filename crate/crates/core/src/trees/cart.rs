use rand::seq::index;
use rand::Rng;

use super::{Donors, Features, Target, TreeParams, UnseenLevelPolicy};
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::tabular::{Column, Value, MISSING_LEVEL};

/// Candidate splits must beat the incumbent by this relative margin, so that
/// floating noise never overrides the documented tie-break.
const REL_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum SplitRule {
    /// Rows with `x <= threshold` go left.
    Threshold(f64),
    /// Rows whose level is flagged in `left` go left. `seen` marks the levels
    /// present among the node's training rows.
    Levels { left: Vec<bool>, seen: Vec<bool> },
}

#[derive(Clone, Debug)]
pub enum Node {
    Split {
        feature: usize,
        rule: SplitRule,
        left: usize,
        right: usize,
        n_left: usize,
        n_right: usize,
    },
    Leaf {
        /// Training rows (indices into the fitted features) in this leaf.
        rows: Vec<usize>,
        donors: Donors,
        /// Majority level (lowest index on ties) or mean.
        prediction: Value,
    },
}

#[derive(Clone, Debug)]
pub struct Tree {
    nodes: Vec<Node>,
    n_features: usize,
    unseen_level: UnseenLevelPolicy,
}

/// Fits a classification tree (Gini) for a discrete target or a regression
/// tree (squared error) for a continuous one, on the given training rows.
pub fn fit_cart(features: &Features, target: Target, rows: &[usize], params: &TreeParams) -> Result<Tree> {
    grow(features, target, rows.to_vec(), params, None)
}

#[derive(Clone, Debug)]
struct Stats {
    n: f64,
    sum: f64,
    sumsq: f64,
    counts: Vec<f64>,
}

impl Stats {
    fn new(n_classes: usize) -> Self {
        Stats {
            n: 0.0,
            sum: 0.0,
            sumsq: 0.0,
            counts: vec![0.0; n_classes],
        }
    }

    fn add(&mut self, target: &Target, row: usize, offset: f64) {
        self.n += 1.0;
        match target {
            Target::Continuous(y) => {
                let v = y[row] - offset;
                self.sum += v;
                self.sumsq += v * v;
            }
            Target::Discrete { values, .. } => self.counts[values[row] as usize] += 1.0,
        }
    }

    fn absorb(&mut self, other: &Stats) {
        self.n += other.n;
        self.sum += other.sum;
        self.sumsq += other.sumsq;
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    fn minus(&self, other: &Stats) -> Stats {
        Stats {
            n: self.n - other.n,
            sum: self.sum - other.sum,
            sumsq: self.sumsq - other.sumsq,
            counts: self.counts.iter().zip(&other.counts).map(|(a, b)| a - b).collect(),
        }
    }

    /// Weighted impurity: n·Gini for discrete targets, sum of squared
    /// deviations for continuous ones.
    fn impurity(&self, discrete: bool) -> f64 {
        if self.n == 0.0 {
            return 0.0;
        }
        if discrete {
            self.n - self.counts.iter().map(|c| c * c).sum::<f64>() / self.n
        } else {
            (self.sumsq - self.sum * self.sum / self.n).max(0.0)
        }
    }

    /// Ordering key for mean-ordered level subsets.
    fn mean_key(&self) -> f64 {
        if self.counts.is_empty() {
            self.sum / self.n
        } else {
            self.counts.get(1).copied().unwrap_or(0.0) / self.n
        }
    }
}

struct Best {
    impurity: f64,
    feature: usize,
    rule: SplitRule,
}

fn improves(candidate: f64, best: &Option<Best>) -> bool {
    match best {
        None => true,
        Some(b) => candidate < b.impurity - REL_EPS * b.impurity.abs(),
    }
}

fn check_inputs(features: &Features, target: &Target, rows: &[usize]) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::EmptyInput("tree training rows"));
    }
    if features.n_rows() != target.len() && !features.is_empty() {
        return Err(Error::DimensionMismatch {
            context: "tree features vs target",
            expected: target.len(),
            found: features.n_rows(),
        });
    }
    for &r in rows {
        let missing = match target {
            Target::Continuous(y) => y[r].is_nan(),
            Target::Discrete { values, n_levels } => values[r] as usize >= *n_levels,
        };
        if missing {
            return Err(Error::Dataset(format!("tree target missing or out of range at row {r}")));
        }
        for j in 0..features.len() {
            let bad = match features.column(j) {
                Column::Continuous(x) => x[r].is_nan(),
                Column::Discrete(x) => x[r] == MISSING_LEVEL || x[r] as usize >= features.n_levels(j),
            };
            if bad {
                return Err(Error::Dataset(format!("tree predictor {j} missing at row {r}")));
            }
        }
    }
    Ok(())
}

/// Grows a tree. With `sampler = Some((mtry, rng))` every node considers a
/// fresh random subset of `mtry` predictors.
pub(crate) fn grow(
    features: &Features,
    target: Target,
    rows: Vec<usize>,
    params: &TreeParams,
    mut sampler: Option<(usize, &mut SimRng)>,
) -> Result<Tree> {
    params.validate()?;
    check_inputs(features, &target, &rows)?;
    let discrete = matches!(target, Target::Discrete { .. });
    let n_classes = match target {
        Target::Discrete { n_levels, .. } => n_levels,
        Target::Continuous(_) => 0,
    };
    let offset_of = |rows: &[usize]| match target {
        Target::Continuous(y) => rows.iter().map(|&r| y[r]).sum::<f64>() / rows.len() as f64,
        Target::Discrete { .. } => 0.0,
    };
    let stats_of = |rows: &[usize], offset: f64| {
        let mut s = Stats::new(n_classes);
        for &r in rows {
            s.add(&target, r, offset);
        }
        s
    };
    let root_impurity = stats_of(&rows, offset_of(&rows)).impurity(discrete);
    let min_gain = (params.complexity_threshold * root_impurity).max(REL_EPS * root_impurity);

    let mut nodes = vec![placeholder()];
    let mut stack = vec![(0usize, rows, 0usize)];
    while let Some((id, rows, depth)) = stack.pop() {
        let offset = offset_of(&rows);
        let total = stats_of(&rows, offset);
        let parent = total.impurity(discrete);
        let can_split = parent > 0.0
            && rows.len() >= 2 * params.min_leaf
            && params.max_depth.is_none_or(|d| depth < d)
            && !features.is_empty();
        let best = if can_split {
            let candidates: Vec<usize> = match sampler.as_mut() {
                Some((mtry, rng)) if *mtry < features.len() => {
                    let mut pick = index::sample(&mut **rng, features.len(), *mtry).into_vec();
                    pick.sort_unstable();
                    pick
                }
                _ => (0..features.len()).collect(),
            };
            best_split(features, &target, &rows, &total, offset, params.min_leaf, &candidates)
        } else {
            None
        };
        match best {
            Some(b) if parent - b.impurity > 0.0 && parent - b.impurity >= min_gain => {
                let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
                    rows.iter().partition(|&&r| goes_left(features.column(b.feature), r, &b.rule));
                let left = nodes.len();
                nodes.push(placeholder());
                nodes.push(placeholder());
                nodes[id] = Node::Split {
                    feature: b.feature,
                    rule: b.rule,
                    left,
                    right: left + 1,
                    n_left: left_rows.len(),
                    n_right: right_rows.len(),
                };
                stack.push((left + 1, right_rows, depth + 1));
                stack.push((left, left_rows, depth + 1));
            }
            _ => nodes[id] = make_leaf(&target, rows),
        }
    }
    Ok(Tree {
        nodes,
        n_features: features.len(),
        unseen_level: params.unseen_level,
    })
}

fn placeholder() -> Node {
    Node::Leaf {
        rows: Vec::new(),
        donors: Donors::Discrete(Vec::new()),
        prediction: Value::Level(0),
    }
}

fn make_leaf(target: &Target, rows: Vec<usize>) -> Node {
    let (donors, prediction) = match target {
        Target::Continuous(y) => {
            let d: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
            let mean = d.iter().sum::<f64>() / d.len() as f64;
            (Donors::Continuous(d), Value::Real(mean))
        }
        Target::Discrete { values, n_levels } => {
            let d: Vec<u32> = rows.iter().map(|&r| values[r]).collect();
            let mut counts = vec![0usize; *n_levels];
            for &v in &d {
                counts[v as usize] += 1;
            }
            (Donors::Discrete(d), Value::Level(modal_level(&counts)))
        }
    };
    Node::Leaf { rows, donors, prediction }
}

/// Most frequent level; the lowest index wins ties.
pub(crate) fn modal_level(counts: &[usize]) -> u32 {
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best as u32
}

fn goes_left(column: &Column, row: usize, rule: &SplitRule) -> bool {
    match (column, rule) {
        (Column::Continuous(x), SplitRule::Threshold(t)) => x[row] <= *t,
        (Column::Discrete(x), SplitRule::Levels { left, .. }) => left[x[row] as usize],
        _ => unreachable!("split rule does not match column kind"),
    }
}

fn best_split(
    features: &Features,
    target: &Target,
    rows: &[usize],
    total: &Stats,
    offset: f64,
    min_leaf: usize,
    candidates: &[usize],
) -> Option<Best> {
    let discrete = matches!(target, Target::Discrete { .. });
    let n_classes = total.counts.len();
    let min_leaf = min_leaf as f64;
    let mut best: Option<Best> = None;
    for &j in candidates {
        match features.column(j) {
            Column::Continuous(x) => {
                let mut order: Vec<(f64, usize)> = rows.iter().map(|&r| (x[r], r)).collect();
                order.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut left = Stats::new(n_classes);
                for k in 0..order.len() - 1 {
                    left.add(target, order[k].1, offset);
                    let (a, b) = (order[k].0, order[k + 1].0);
                    if a >= b || left.n < min_leaf || total.n - left.n < min_leaf {
                        continue;
                    }
                    let imp = left.impurity(discrete) + total.minus(&left).impurity(discrete);
                    if improves(imp, &best) {
                        let mid = 0.5 * (a + b);
                        let threshold = if mid >= b { a } else { mid };
                        best = Some(Best {
                            impurity: imp,
                            feature: j,
                            rule: SplitRule::Threshold(threshold),
                        });
                    }
                }
            }
            Column::Discrete(x) => {
                let k = features.n_levels(j);
                let mut per_level = vec![Stats::new(n_classes); k];
                for &r in rows {
                    per_level[x[r] as usize].add(target, r, offset);
                }
                let mut present: Vec<usize> = (0..k).filter(|&l| per_level[l].n > 0.0).collect();
                if present.len() < 2 {
                    continue;
                }
                let seen: Vec<bool> = (0..k).map(|l| per_level[l].n > 0.0).collect();
                let subsets: Vec<Vec<usize>> = if n_classes > 2 {
                    present.iter().map(|&l| vec![l]).collect()
                } else {
                    // stable sort keeps level order among equal means
                    present.sort_by(|&a, &b| per_level[a].mean_key().total_cmp(&per_level[b].mean_key()));
                    (1..present.len()).map(|m| present[..m].to_vec()).collect()
                };
                for subset in subsets {
                    let mut left = Stats::new(n_classes);
                    for &l in &subset {
                        left.absorb(&per_level[l]);
                    }
                    if left.n < min_leaf || total.n - left.n < min_leaf {
                        continue;
                    }
                    let imp = left.impurity(discrete) + total.minus(&left).impurity(discrete);
                    if improves(imp, &best) {
                        let mut mask = vec![false; k];
                        for &l in &subset {
                            mask[l] = true;
                        }
                        best = Some(Best {
                            impurity: imp,
                            feature: j,
                            rule: SplitRule::Levels {
                                left: mask,
                                seen: seen.clone(),
                            },
                        });
                    }
                }
            }
        }
    }
    best
}

impl Tree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Training rows of every leaf, in arena order.
    pub fn leaf_rows(&self) -> Vec<&[usize]> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { rows, .. } => Some(rows.as_slice()),
                Node::Split { .. } => None,
            })
            .collect()
    }

    /// Arena index of the leaf reached by a row whose feature `j` is `get(j)`.
    pub fn route(&self, get: impl Fn(usize) -> Value) -> Result<usize> {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { .. } => return Ok(id),
                Node::Split {
                    feature,
                    rule,
                    left,
                    right,
                    n_left,
                    n_right,
                } => {
                    let go_left = match (rule, get(*feature)) {
                        (SplitRule::Threshold(t), Value::Real(x)) => {
                            if x.is_nan() {
                                return Err(Error::Dataset(format!("predictor {feature} missing at prediction")));
                            }
                            x <= *t
                        }
                        (SplitRule::Levels { left: mask, seen }, Value::Level(l)) => {
                            let l = l as usize;
                            if l < seen.len() && seen[l] {
                                mask[l]
                            } else {
                                match self.unseen_level {
                                    UnseenLevelPolicy::LargerChild => n_left >= n_right,
                                    UnseenLevelPolicy::Error => {
                                        return Err(Error::UnseenLevel {
                                            feature: *feature,
                                            level: l as u32,
                                        })
                                    }
                                }
                            }
                        }
                        _ => {
                            return Err(Error::Dataset(format!(
                                "predictor {feature} kind differs from training"
                            )))
                        }
                    };
                    id = if go_left { *left } else { *right };
                }
            }
        }
    }

    pub fn leaf_for_row(&self, features: &Features, row: usize) -> Result<usize> {
        self.route(|j| features.column(j).value(row))
    }

    fn leaf(&self, id: usize) -> (&Donors, Value) {
        match &self.nodes[id] {
            Node::Leaf { donors, prediction, .. } => (donors, *prediction),
            Node::Split { .. } => unreachable!("route always ends at a leaf"),
        }
    }

    /// Training target values in the leaf reached by `x`.
    pub fn leaf_donors(&self, x: &[Value]) -> Result<&Donors> {
        self.check_width(x)?;
        Ok(self.leaf(self.route(|j| x[j])?).0)
    }

    pub fn leaf_donors_for_row(&self, features: &Features, row: usize) -> Result<&Donors> {
        Ok(self.leaf(self.leaf_for_row(features, row)?).0)
    }

    /// Uniform draw from the leaf donors.
    pub fn sample_donor<R: Rng + ?Sized>(&self, x: &[Value], rng: &mut R) -> Result<Value> {
        let donors = self.leaf_donors(x)?;
        Ok(donors.get(rng.random_range(0..donors.len())))
    }

    pub fn sample_donor_for_row<R: Rng + ?Sized>(&self, features: &Features, row: usize, rng: &mut R) -> Result<Value> {
        let donors = self.leaf_donors_for_row(features, row)?;
        Ok(donors.get(rng.random_range(0..donors.len())))
    }

    /// Leaf majority level or leaf mean.
    pub fn predict(&self, x: &[Value]) -> Result<Value> {
        self.check_width(x)?;
        Ok(self.leaf(self.route(|j| x[j])?).1)
    }

    pub fn predict_row(&self, features: &Features, row: usize) -> Result<Value> {
        Ok(self.leaf(self.leaf_for_row(features, row)?).1)
    }

    fn check_width(&self, x: &[Value]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                context: "tree prediction row",
                expected: self.n_features,
                found: x.len(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;

    fn ab(levels: &[u32]) -> Column {
        Column::Discrete(levels.to_vec())
    }

    fn params(min_leaf: usize) -> TreeParams {
        TreeParams {
            min_leaf,
            ..TreeParams::default()
        }
    }

    #[test]
    fn pure_target_is_single_leaf() {
        let x = Column::Continuous(vec![1.0, 2.0, 3.0, 4.0]);
        let y = ab(&[1, 1, 1, 1]);
        let f = Features::new(vec![&x], vec![0]).unwrap();
        let tree = fit_cart(&f, Target::from_column(&y, 2), &[0, 1, 2, 3], &params(1)).unwrap();
        assert_eq!(tree.n_leaves(), 1);
        assert_eq!(tree.leaf_donors(&[Value::Real(9.0)]).unwrap(), &Donors::Discrete(vec![1; 4]));
    }

    #[test]
    fn midpoint_threshold() {
        let x = Column::Continuous(vec![1.0, 2.0, 3.0, 4.0]);
        let y = ab(&[0, 0, 1, 1]);
        let f = Features::new(vec![&x], vec![0]).unwrap();
        let tree = fit_cart(&f, Target::from_column(&y, 2), &[0, 1, 2, 3], &params(1)).unwrap();
        match tree.root() {
            Node::Split { rule, .. } => assert_eq!(rule, &SplitRule::Threshold(2.5)),
            Node::Leaf { .. } => panic!("expected a split"),
        }
        assert_eq!(tree.n_leaves(), 2);
        assert_eq!(tree.leaf_donors(&[Value::Real(1.0)]).unwrap(), &Donors::Discrete(vec![0, 0]));
    }

    #[test]
    fn min_leaf_blocks_split() {
        let x = Column::Continuous(vec![1.0, 2.0, 3.0, 4.0]);
        let y = ab(&[0, 0, 1, 1]);
        let f = Features::new(vec![&x], vec![0]).unwrap();
        let tree = fit_cart(&f, Target::from_column(&y, 2), &[0, 1, 2, 3], &params(3)).unwrap();
        assert_eq!(tree.n_leaves(), 1);
    }

    #[test]
    fn donor_shares() {
        let x = Column::Continuous(vec![0.0; 3]);
        let y = ab(&[0, 0, 1]);
        let f = Features::new(vec![&x], vec![0]).unwrap();
        let tree = fit_cart(&f, Target::from_column(&y, 2), &[0, 1, 2], &params(1)).unwrap();
        let mut rng = SeedStream::new(12).rng();
        let hits = (0..10_000)
            .filter(|_| tree.sample_donor(&[Value::Real(0.0)], &mut rng).unwrap() == Value::Level(0))
            .count();
        assert!((hits as f64 / 10_000.0 - 2.0 / 3.0).abs() < 0.02, "{hits}");
    }

    #[test]
    fn continuous_donors_come_from_leaf() {
        let x = Column::Continuous(vec![0.0, 0.0]);
        let y = Column::Continuous(vec![1.0, 3.0]);
        let f = Features::new(vec![&x], vec![0]).unwrap();
        let tree = fit_cart(&f, Target::from_column(&y, 0), &[0, 1], &params(1)).unwrap();
        let mut rng = SeedStream::new(3).rng();
        for _ in 0..200 {
            let v = tree.sample_donor(&[Value::Real(0.0)], &mut rng).unwrap();
            assert!(v == Value::Real(1.0) || v == Value::Real(3.0));
        }
        assert_eq!(tree.predict(&[Value::Real(0.0)]).unwrap(), Value::Real(2.0));
    }

    #[test]
    fn categorical_split_and_unseen_level() {
        // level 0 and 2 -> y = 0, level 1 -> y = 1; level 3 never seen
        let x = ab(&[0, 0, 0, 1, 1, 1, 1, 2]);
        let y = ab(&[0, 0, 0, 1, 1, 1, 1, 0]);
        let f = Features::new(vec![&x], vec![4]).unwrap();
        let rows: Vec<usize> = (0..8).collect();
        let tree = fit_cart(&f, Target::from_column(&y, 2), &rows, &params(1)).unwrap();
        assert_eq!(tree.n_leaves(), 2);
        assert_eq!(tree.predict(&[Value::Level(2)]).unwrap(), Value::Level(0));
        assert_eq!(tree.predict(&[Value::Level(1)]).unwrap(), Value::Level(1));
        // both children hold 4 rows: ties go left, which holds levels {0, 2}
        assert_eq!(tree.predict(&[Value::Level(3)]).unwrap(), Value::Level(0));

        let strict = TreeParams {
            unseen_level: UnseenLevelPolicy::Error,
            ..params(1)
        };
        let tree = fit_cart(&f, Target::from_column(&y, 2), &rows, &strict).unwrap();
        assert!(matches!(tree.predict(&[Value::Level(3)]), Err(Error::UnseenLevel { .. })));
    }

    #[test]
    fn leaves_partition_training_rows() {
        let mut rng = SeedStream::new(4).rng();
        let x0 = Column::Continuous((0..200).map(|_| rng.random::<f64>()).collect());
        let x1 = Column::Discrete((0..200).map(|_| rng.random_range(0..4)).collect());
        let y = Column::Continuous((0..200).map(|i| if i % 3 == 0 { 1.0 } else { rng.random::<f64>() }).collect());
        let f = Features::new(vec![&x0, &x1], vec![0, 4]).unwrap();
        let rows: Vec<usize> = (0..200).collect();
        let tree = fit_cart(&f, Target::from_column(&y, 0), &rows, &params(5)).unwrap();
        let mut seen: Vec<usize> = tree.leaf_rows().concat();
        assert!(tree.leaf_rows().iter().all(|r| r.len() >= 5));
        seen.sort_unstable();
        assert_eq!(seen, rows);
        for &r in &rows {
            let leaf = tree.leaf_for_row(&f, r).unwrap();
            match &tree.nodes()[leaf] {
                Node::Leaf { rows, .. } => assert!(rows.contains(&r)),
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn missing_target_is_rejected() {
        let x = Column::Continuous(vec![1.0, 2.0]);
        let y = Column::Continuous(vec![1.0, f64::NAN]);
        let f = Features::new(vec![&x], vec![0]).unwrap();
        assert!(fit_cart(&f, Target::from_column(&y, 0), &[0, 1], &params(1)).is_err());
        assert!(matches!(
            fit_cart(&f, Target::from_column(&y, 0), &[], &params(1)),
            Err(Error::EmptyInput(_))
        ));
    }
}
