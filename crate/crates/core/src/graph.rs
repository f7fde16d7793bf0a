//! Graph representation, dataset ingestion, imbalanced split construction,
//! BFS shortest paths, and k-way partitioning by BFS region growing.
//!
//! File formats (one record per line, `#` starts a comment):
//! - edges:    `u<TAB>v` (any whitespace accepted between the two ids)
//! - features: `id<TAB>f1,f2,...,fF`
//! - labels:   `id<TAB>class` — ids omitted from this file are unlabeled

use crate::error::{Error, Result};
use crate::mat::Mat;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};

/// Immutable node/edge store with dense features, labels, and 0/1 adjacency.
///
/// Adjacency is symmetric with a zero diagonal; `edges` holds each undirected
/// pair once with `u < v`.
#[derive(Clone, Debug)]
pub struct Graph {
    n_nodes: usize,
    features: Mat,
    adjacency: Mat,
    edges: Vec<(usize, usize)>,
    labels: Vec<Option<usize>>,
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from raw parts: drops self-loops, deduplicates edges,
    /// and symmetrizes adjacency.
    pub fn new(
        features: Mat,
        edges: Vec<(usize, usize)>,
        labels: Vec<Option<usize>>,
    ) -> Result<Self> {
        let n = features.rows();
        if labels.len() != n {
            return Err(Error::Dimension(format!(
                "{} labels for {n} nodes",
                labels.len()
            )));
        }
        features.check_finite("features")?;
        let mut set = BTreeSet::new();
        for &(u, v) in &edges {
            for id in [u, v] {
                if id >= n {
                    return Err(Error::Index {
                        id,
                        n_nodes: n,
                        context: "edge endpoint".into(),
                    });
                }
            }
            if u == v {
                continue; // self-loops dropped
            }
            set.insert((u.min(v), u.max(v)));
        }
        let edges: Vec<(usize, usize)> = set.into_iter().collect();
        let mut adjacency = Mat::zeros(n, n);
        let mut neighbors = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adjacency.set(u, v, 1.0);
            adjacency.set(v, u, 1.0);
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for nb in neighbors.iter_mut() {
            nb.sort_unstable();
        }
        Ok(Graph {
            n_nodes: n,
            features,
            adjacency,
            edges,
            labels,
            neighbors,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn features(&self) -> &Mat {
        &self.features
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn adjacency(&self) -> &Mat {
        &self.adjacency
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> Option<usize> {
        self.labels[v]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }

    /// Number of classes, i.e. max known label + 1.
    pub fn n_classes(&self) -> usize {
        self.labels
            .iter()
            .flatten()
            .max()
            .map_or(0, |&m| m + 1)
    }

    /// Labeled-node count per class over the whole graph.
    pub fn class_counts(&self) -> BTreeMap<usize, usize> {
        let mut counts = BTreeMap::new();
        for l in self.labels.iter().flatten() {
            *counts.entry(*l).or_insert(0) += 1;
        }
        counts
    }

    /// A copy with extra nodes appended after the originals (ids `N..`).
    /// `extra_edges` connect new nodes to any node, old or new.
    pub fn with_appended_nodes(
        &self,
        extra_features: &Mat,
        extra_labels: &[usize],
        extra_edges: &[(usize, usize)],
    ) -> Result<Graph> {
        if extra_features.cols() != self.feature_dim() {
            return Err(Error::Dimension(format!(
                "appended features have width {}, graph has {}",
                extra_features.cols(),
                self.feature_dim()
            )));
        }
        let mut feats = Vec::with_capacity(self.n_nodes + extra_features.rows());
        for i in 0..self.n_nodes {
            feats.push(self.features.row(i).to_vec());
        }
        for i in 0..extra_features.rows() {
            feats.push(extra_features.row(i).to_vec());
        }
        let mut labels = self.labels.clone();
        labels.extend(extra_labels.iter().map(|&l| Some(l)));
        let mut edges = self.edges.clone();
        edges.extend_from_slice(extra_edges);
        Graph::new(Mat::from_rows(&feats)?, edges, labels)
    }
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path)?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.to_string()))
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
        .collect())
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        file: PathBuf::from(path),
        line,
        msg: msg.into(),
    }
}

/// Loads a graph from the plain-text dataset format.
///
/// Node count is fixed by the features file: every id in `0..N` must appear
/// exactly once. Self-loops and duplicate edges in the input are dropped.
pub fn load_graph(edges_path: &Path, features_path: &Path, labels_path: &Path) -> Result<Graph> {
    // features establish N and F
    let mut rows: Vec<Option<Vec<f64>>> = Vec::new();
    let lines = read_lines(features_path)?;
    let n = lines.len();
    rows.resize(n, None);
    let mut width: Option<usize> = None;
    for (lineno, line) in &lines {
        let (id_s, rest) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| parse_err(features_path, *lineno, "expected `id<TAB>f1,f2,...`"))?;
        let id: usize = id_s
            .trim()
            .parse()
            .map_err(|_| parse_err(features_path, *lineno, format!("bad node id `{id_s}`")))?;
        if id >= n {
            return Err(Error::Index {
                id,
                n_nodes: n,
                context: format!("features file line {lineno}"),
            });
        }
        let vals: Vec<f64> = rest
            .trim()
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| parse_err(features_path, *lineno, "bad feature value"))?;
        match width {
            None => width = Some(vals.len()),
            Some(w) if w != vals.len() => {
                return Err(Error::Dimension(format!(
                    "{}:{lineno}: feature row has width {}, expected {w}",
                    features_path.display(),
                    vals.len()
                )))
            }
            _ => {}
        }
        if rows[id].replace(vals).is_some() {
            return Err(parse_err(
                features_path,
                *lineno,
                format!("duplicate feature row for node {id}"),
            ));
        }
    }
    let mut feat_rows = Vec::with_capacity(n);
    for (id, r) in rows.into_iter().enumerate() {
        feat_rows.push(r.ok_or_else(|| {
            parse_err(features_path, 0, format!("missing feature row for node {id}"))
        })?);
    }
    let features = Mat::from_rows(&feat_rows)?;

    // labels
    let mut labels: Vec<Option<usize>> = vec![None; n];
    for (lineno, line) in &read_lines(labels_path)? {
        let mut it = line.split_whitespace();
        let (id_s, class_s) = match (it.next(), it.next(), it.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => return Err(parse_err(labels_path, *lineno, "expected `id<TAB>class`")),
        };
        let id: usize = id_s
            .parse()
            .map_err(|_| parse_err(labels_path, *lineno, format!("bad node id `{id_s}`")))?;
        if id >= n {
            return Err(Error::Index {
                id,
                n_nodes: n,
                context: format!("labels file line {lineno}"),
            });
        }
        let class: usize = class_s
            .parse()
            .map_err(|_| parse_err(labels_path, *lineno, format!("bad class `{class_s}`")))?;
        if labels[id].replace(class).is_some() {
            return Err(parse_err(
                labels_path,
                *lineno,
                format!("duplicate label for node {id}"),
            ));
        }
    }

    // edges
    let mut edges = Vec::new();
    for (lineno, line) in &read_lines(edges_path)? {
        let mut it = line.split_whitespace();
        let (u_s, v_s) = match (it.next(), it.next(), it.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => return Err(parse_err(edges_path, *lineno, "expected `u<TAB>v`")),
        };
        let u: usize = u_s
            .parse()
            .map_err(|_| parse_err(edges_path, *lineno, format!("bad node id `{u_s}`")))?;
        let v: usize = v_s
            .parse()
            .map_err(|_| parse_err(edges_path, *lineno, format!("bad node id `{v_s}`")))?;
        for id in [u, v] {
            if id >= n {
                return Err(Error::Index {
                    id,
                    n_nodes: n,
                    context: format!("edges file line {lineno}"),
                });
            }
        }
        edges.push((u, v));
    }

    Graph::new(features, edges, labels)
}

/// `min(count)/max(count)` over classes; in (0, 1].
pub fn imbalance_ratio(per_class_counts: &BTreeMap<usize, usize>) -> Result<f64> {
    if per_class_counts.is_empty() {
        return Err(Error::Domain("imbalance ratio of an empty class map".into()));
    }
    if per_class_counts.values().any(|&c| c == 0) {
        return Err(Error::Domain("imbalance ratio with a zero class count".into()));
    }
    let min = *per_class_counts.values().min().unwrap() as f64;
    let max = *per_class_counts.values().max().unwrap() as f64;
    Ok(min / max)
}

/// Labeled/unlabeled partition with per-class training counts.
#[derive(Clone, Debug)]
pub struct ImbalancedSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub minority_classes: BTreeSet<usize>,
    pub per_class_train_count: BTreeMap<usize, usize>,
    /// Measured: min minority train count / majority train count.
    pub im_ratio: f64,
}

impl ImbalancedSplit {
    /// Train node ids of one class, ascending.
    pub fn train_of_class(&self, graph: &Graph, class: usize) -> Vec<usize> {
        self.train
            .iter()
            .copied()
            .filter(|&v| graph.label(v) == Some(class))
            .collect()
    }
}

/// Round-half-up for nonnegative quantities.
pub fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}

/// Builds a class-imbalanced training split.
///
/// Majority classes contribute `majority_count` train nodes each; every
/// minority class contributes `round(majority_count · im_ratio)`. Remaining
/// labeled nodes are split into val/test by `val_frac`. Deterministic for a
/// fixed seed.
pub fn make_imbalanced_split(
    graph: &Graph,
    minority_classes: &BTreeSet<usize>,
    im_ratio: f64,
    majority_count: usize,
    val_frac: f64,
    seed: u64,
) -> Result<ImbalancedSplit> {
    if !(0.0..1.0).contains(&val_frac) {
        return Err(Error::Domain(format!("val_frac {val_frac} outside [0,1)")));
    }
    if !(im_ratio > 0.0 && im_ratio <= 1.0) {
        return Err(Error::Domain(format!("im_ratio {im_ratio} outside (0,1]")));
    }
    if majority_count == 0 {
        return Err(Error::Domain("majority_count must be positive".into()));
    }
    let counts = graph.class_counts();
    for &c in minority_classes {
        if !counts.contains_key(&c) {
            return Err(Error::Domain(format!("minority class {c} has no labeled nodes")));
        }
    }
    let minority_take = round_half_up(majority_count as f64 * im_ratio);
    if minority_take == 0 {
        return Err(Error::Domain(format!(
            "round({majority_count}·{im_ratio}) is zero minority train nodes"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut per_class_train_count = BTreeMap::new();
    for (&class, &avail) in &counts {
        let take = if minority_classes.contains(&class) {
            minority_take
        } else {
            majority_count
        };
        if avail < take {
            return Err(Error::Capacity {
                class,
                available: avail,
                needed: take,
            });
        }
        let mut ids: Vec<usize> = (0..graph.n_nodes())
            .filter(|&v| graph.label(v) == Some(class))
            .collect();
        ids.shuffle(&mut rng);
        ids.truncate(take);
        train.extend(ids);
        per_class_train_count.insert(class, take);
    }
    train.sort_unstable();

    let train_set: BTreeSet<usize> = train.iter().copied().collect();
    let mut rest: Vec<usize> = (0..graph.n_nodes())
        .filter(|&v| graph.label(v).is_some() && !train_set.contains(&v))
        .collect();
    rest.shuffle(&mut rng);
    let n_val = round_half_up(rest.len() as f64 * val_frac);
    let mut val: Vec<usize> = rest[..n_val.min(rest.len())].to_vec();
    let mut test: Vec<usize> = rest[n_val.min(rest.len())..].to_vec();
    val.sort_unstable();
    test.sort_unstable();

    let measured = if minority_classes.is_empty() {
        1.0
    } else {
        minority_take as f64 / majority_count as f64
    };

    Ok(ImbalancedSplit {
        train,
        val,
        test,
        minority_classes: minority_classes.clone(),
        per_class_train_count,
        im_ratio: measured,
    })
}

/// Unweighted shortest-path distances from `source`; `None` marks
/// unreachable nodes.
pub fn bfs_shortest_paths(graph: &Graph, source: usize) -> Vec<Option<usize>> {
    let n = graph.n_nodes();
    assert!(source < n, "bfs source out of range");
    let mut dist = vec![None; n];
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap();
        for &v in graph.neighbors(u) {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// All-pairs BFS distances; row `u` is `bfs_shortest_paths(graph, u)`.
pub fn all_pairs_shortest_paths(graph: &Graph) -> Vec<Vec<Option<usize>>> {
    (0..graph.n_nodes())
        .map(|u| bfs_shortest_paths(graph, u))
        .collect()
}

/// k-way node partition with per-cluster anchor centers.
#[derive(Clone, Debug)]
pub struct Partition {
    pub assignment: Vec<usize>,
    pub centers: Vec<usize>,
    pub t: usize,
}

impl Partition {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.t];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }
}

/// Seeded BFS region growing into `t` clusters.
///
/// Cluster seeds are chosen highest-degree-first (within equal degree, in a
/// seed-shuffled order), preferring seeds at BFS distance ≥ 2 from each other;
/// regions then grow in round-robin BFS, so cluster sizes differ by at most
/// one. Each cluster's center is its max-degree member, ties to the smallest
/// node id.
pub fn partition_graph(graph: &Graph, t: usize, seed: u64) -> Result<Partition> {
    let n = graph.n_nodes();
    if t == 0 || t > n {
        return Err(Error::Domain(format!(
            "cluster count {t} outside 1..={n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut rank = vec![0usize; n];
    for (pos, &v) in order.iter().enumerate() {
        rank[v] = pos;
    }
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (std::cmp::Reverse(graph.degree(v)), rank[v]));

    // seed selection: prefer pairwise non-adjacent picks
    let mut seeds: Vec<usize> = Vec::with_capacity(t);
    let mut taken = vec![false; n];
    for &cand in &by_degree {
        if seeds.len() == t {
            break;
        }
        let near = seeds
            .iter()
            .any(|&s| s == cand || graph.neighbors(s).binary_search(&cand).is_ok());
        if !near {
            seeds.push(cand);
            taken[cand] = true;
        }
    }
    for &cand in &by_degree {
        if seeds.len() == t {
            break;
        }
        if !taken[cand] {
            seeds.push(cand);
            taken[cand] = true;
        }
    }

    let mut assignment: Vec<Option<usize>> = vec![None; n];
    let mut frontiers: Vec<VecDeque<usize>> = Vec::with_capacity(t);
    for (c, &s) in seeds.iter().enumerate() {
        assignment[s] = Some(c);
        frontiers.push(VecDeque::from([s]));
        // seed's neighbors join its frontier up front
        frontiers[c].extend(graph.neighbors(s).iter().copied());
    }
    let mut remaining = n - t;
    while remaining > 0 {
        for c in 0..t {
            if remaining == 0 {
                break;
            }
            let mut grabbed = None;
            while let Some(v) = frontiers[c].pop_front() {
                if assignment[v].is_none() {
                    grabbed = Some(v);
                    break;
                }
            }
            // disconnected leftovers: jump to the best unassigned node
            let v = grabbed.or_else(|| {
                by_degree.iter().copied().find(|&v| assignment[v].is_none())
            });
            if let Some(v) = v {
                assignment[v] = Some(c);
                remaining -= 1;
                frontiers[c].extend(graph.neighbors(v).iter().copied());
            }
        }
    }
    let assignment: Vec<usize> = assignment.into_iter().map(Option::unwrap).collect();

    let mut centers = vec![usize::MAX; t];
    for c in 0..t {
        centers[c] = (0..n)
            .filter(|&v| assignment[v] == c)
            .max_by_key(|&v| (graph.degree(v), std::cmp::Reverse(v)))
            .expect("clusters are non-empty by construction");
    }

    Ok(Partition {
        assignment,
        centers,
        t,
    })
}
