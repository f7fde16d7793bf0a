//! Edge predictor and its training signals: adjacency reconstruction plus
//! two context pretext tasks (truncated shortest-path classification between
//! node pairs, and regression of distances to cluster-center anchors), and
//! synthesis of edges for generated nodes.

use crate::error::{Error, Result};
use crate::graph::Partition;
use crate::mat::Mat;
use crate::params::ParamGroup;
use crate::tape::{Tape, Var};
use rand::Rng;

/// All-pairs BFS distances, `dists[u][v]`, `None` = unreachable.
pub type DistanceMatrix = Vec<Vec<Option<usize>>>;

/// Shortest-path categories used by the local pretext task.
pub const PATH_CATEGORIES: usize = 4;

#[derive(Clone, Debug)]
pub struct EdgePredictorParams {
    /// F_z×D projection into score space (D = extractor output width).
    pub z_proj: Mat,
    /// 4-way head over |z_v - z_u|.
    pub local_w: Mat,
    pub local_b: Mat,
    /// T-way regression head for anchor distances.
    pub global_w: Mat,
    pub global_b: Mat,
}

impl EdgePredictorParams {
    pub fn init(
        z_dim: usize,
        input_dim: usize,
        clusters: usize,
        rng: &mut impl Rng,
    ) -> Self {
        EdgePredictorParams {
            z_proj: Mat::uniform_init(z_dim, input_dim, input_dim, rng),
            local_w: Mat::uniform_init(PATH_CATEGORIES, z_dim, z_dim, rng),
            local_b: Mat::zeros(1, PATH_CATEGORIES),
            global_w: Mat::uniform_init(clusters, z_dim, z_dim, rng),
            global_b: Mat::zeros(1, clusters),
        }
    }

    pub fn z_dim(&self) -> usize {
        self.z_proj.rows()
    }

    pub fn clusters(&self) -> usize {
        self.global_w.rows()
    }
}

impl ParamGroup for EdgePredictorParams {
    fn named(&self) -> Vec<(String, &Mat)> {
        vec![
            ("z_proj".into(), &self.z_proj),
            ("local_w".into(), &self.local_w),
            ("local_b".into(), &self.local_b),
            ("global_w".into(), &self.global_w),
            ("global_b".into(), &self.global_b),
        ]
    }

    fn named_mut(&mut self) -> Vec<(String, &mut Mat)> {
        vec![
            ("z_proj".into(), &mut self.z_proj),
            ("local_w".into(), &mut self.local_w),
            ("local_b".into(), &mut self.local_b),
            ("global_w".into(), &mut self.global_w),
            ("global_b".into(), &mut self.global_b),
        ]
    }
}

/// Edge-predictor parameters bound as tape leaves.
pub struct EdgeVars {
    pub z_proj: Var,
    pub local_w: Var,
    pub local_b: Var,
    pub global_w: Var,
    pub global_b: Var,
    pub ordered: Vec<Var>,
}

impl EdgeVars {
    pub fn bind(tape: &mut Tape, p: &EdgePredictorParams) -> Self {
        let z_proj = tape.leaf(p.z_proj.clone());
        let local_w = tape.leaf(p.local_w.clone());
        let local_b = tape.leaf(p.local_b.clone());
        let global_w = tape.leaf(p.global_w.clone());
        let global_b = tape.leaf(p.global_b.clone());
        EdgeVars {
            z_proj,
            local_w,
            local_b,
            global_w,
            global_b,
            ordered: vec![z_proj, local_w, local_b, global_w, global_b],
        }
    }
}

/// `Z = H·Wᵀ`, `scores = sigmoid(Z·Zᵀ)`; symmetric with entries in (0,1).
pub fn edge_scores_tape(tape: &mut Tape, embeddings: Var, z_proj: Var) -> (Var, Var) {
    let z = tape.matmul_nt(embeddings, z_proj);
    let gram = tape.matmul_nt(z, z);
    let scores = tape.sigmoid(gram);
    (z, scores)
}

/// Plain (non-tape) edge scores between two embedding sets:
/// `sigmoid((A·Wᵀ)(B·Wᵀ)ᵀ)`, rows index `a`, columns index `b`.
pub fn edge_scores_between(a: &Mat, b: &Mat, params: &EdgePredictorParams) -> Mat {
    let za = a.matmul_nt(&params.z_proj);
    let zb = b.matmul_nt(&params.z_proj);
    crate::nn::sigmoid_mat(&za.matmul_nt(&zb))
}

/// Plain edge scores within one embedding set (the soft adjacency).
pub fn edge_scores(embeddings: &Mat, params: &EdgePredictorParams) -> Mat {
    edge_scores_between(embeddings, embeddings, params)
}

/// Squared Frobenius norm of `scores - adjacency` over the full raw block.
pub fn reconstruction_loss(scores: &Mat, adjacency: &Mat) -> Result<f64> {
    if !scores.same_shape(adjacency) {
        return Err(Error::Dimension(format!(
            "reconstruction over {:?} scores and {:?} adjacency",
            scores.shape(),
            adjacency.shape()
        )));
    }
    Ok(scores.sub(adjacency).frob_norm_sq())
}

/// Tape version of [`reconstruction_loss`].
pub fn reconstruction_loss_tape(tape: &mut Tape, scores: Var, adjacency: &Mat) -> Var {
    let a = tape.leaf(adjacency.clone());
    let d = tape.sub(scores, a);
    let sq = tape.hadamard(d, d);
    tape.sum(sq)
}

/// Truncated shortest-path category: d=1,2,3 map to 0,1,2; d≥4 and
/// unreachable pairs map to 3. Self-pairs (d=0) are a domain error.
pub fn truncate_distance(d: Option<usize>) -> Result<usize> {
    match d {
        Some(0) => Err(Error::Domain("self-pair has no path category".into())),
        Some(1) => Ok(0),
        Some(2) => Ok(1),
        Some(3) => Ok(2),
        _ => Ok(3),
    }
}

/// Node pairs with their path categories for the local task.
#[derive(Clone, Debug)]
pub struct PairSample {
    pub pairs: Vec<(usize, usize)>,
    pub categories: Vec<usize>,
}

impl PairSample {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Draws `count` node pairs, stratified over path categories.
///
/// Uniform pairs on a sparse graph are dominated by the far/unreachable
/// category, so drawing continues until every category holds at least
/// `count/8` pairs or `20·count` draws were made; the sample then takes each
/// category's quota first and fills the rest in draw order.
pub fn sample_pairs(
    dists: &DistanceMatrix,
    count: usize,
    rng: &mut impl Rng,
) -> Result<PairSample> {
    let n = dists.len();
    if n < 2 || count == 0 {
        return Err(Error::Domain(
            "pair sampling needs at least 2 nodes and a positive count".into(),
        ));
    }
    let quota = count / 8;
    let cap = 20 * count;
    let mut buckets: Vec<Vec<(usize, usize)>> = vec![Vec::new(); PATH_CATEGORIES];
    let mut order: Vec<(usize, usize, usize)> = Vec::new(); // (u, v, cat) in draw order
    let mut draws = 0;
    while draws < cap {
        draws += 1;
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u == v {
            continue;
        }
        let cat = truncate_distance(dists[u][v])?;
        buckets[cat].push((u, v));
        order.push((u, v, cat));
        if order.len() >= count && buckets.iter().all(|b| b.len() >= quota) {
            break;
        }
    }

    let mut pairs = Vec::with_capacity(count);
    let mut categories = Vec::with_capacity(count);
    let mut taken = vec![0usize; PATH_CATEGORIES];
    for (cat, bucket) in buckets.iter().enumerate() {
        for &(u, v) in bucket.iter().take(quota.min(bucket.len())) {
            pairs.push((u, v));
            categories.push(cat);
            taken[cat] += 1;
        }
    }
    for &(u, v, cat) in &order {
        if pairs.len() >= count {
            break;
        }
        if taken[cat] > 0 {
            taken[cat] -= 1; // already emitted from the quota pass
            continue;
        }
        pairs.push((u, v));
        categories.push(cat);
    }
    if pairs.is_empty() {
        return Err(Error::Domain("pair sampling produced no pairs".into()));
    }
    Ok(PairSample { pairs, categories })
}

/// Mean cross-entropy of the 4-way head on `|z_v - z_u|` over the sample.
pub fn local_path_loss_tape(
    tape: &mut Tape,
    z: Var,
    sample: &PairSample,
    local_w: Var,
    local_b: Var,
) -> Var {
    assert!(!sample.is_empty(), "local loss over an empty sample");
    let us: Vec<usize> = sample.pairs.iter().map(|&(u, _)| u).collect();
    let vs: Vec<usize> = sample.pairs.iter().map(|&(_, v)| v).collect();
    let zu = tape.gather_rows(z, &us);
    let zv = tape.gather_rows(z, &vs);
    let diff = tape.sub(zv, zu);
    let diff = tape.abs(diff);
    let logits = tape.matmul_nt(diff, local_w);
    let logits = tape.add_bias(logits, local_b);
    tape.softmax_ce(logits, &sample.categories, None)
}

/// Per-node distances to the partition's cluster centers.
///
/// Unreachable center distances are replaced by the node's component
/// diameter + 1, keeping regression targets bounded.
pub fn anchor_targets(dists: &DistanceMatrix, partition: &Partition) -> Mat {
    let n = dists.len();
    // component id per node from reachability, then per-component diameter
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    for u in 0..n {
        if comp[u] == usize::MAX {
            for v in 0..n {
                if dists[u][v].is_some() {
                    comp[v] = next;
                }
            }
            next += 1;
        }
    }
    let mut diameter = vec![0usize; next];
    for u in 0..n {
        for v in 0..n {
            if let Some(d) = dists[u][v] {
                diameter[comp[u]] = diameter[comp[u]].max(d);
            }
        }
    }
    let mut targets = Mat::zeros(n, partition.t);
    for i in 0..n {
        for (t, &center) in partition.centers.iter().enumerate() {
            let d = match dists[i][center] {
                Some(d) => d as f64,
                None => (diameter[comp[i]] + 1) as f64,
            };
            targets.set(i, t, d);
        }
    }
    targets
}

/// Mean squared error of the T-way head against the anchor targets.
pub fn global_path_loss_tape(
    tape: &mut Tape,
    z: Var,
    targets: &Mat,
    global_w: Var,
    global_b: Var,
) -> Var {
    let pred = tape.matmul_nt(z, global_w);
    let pred = tape.add_bias(pred, global_b);
    tape.mse_rows(pred, targets)
}

/// Which pretext tasks contribute to the edge loss.
#[derive(Clone, Copy, Debug)]
pub struct EdgeTaskFlags {
    pub local: bool,
    pub global: bool,
}

impl Default for EdgeTaskFlags {
    fn default() -> Self {
        EdgeTaskFlags {
            local: true,
            global: true,
        }
    }
}

/// Unweighted sum of the enabled edge-loss components.
pub fn edge_total_loss(rec: f64, local: f64, global: f64, flags: EdgeTaskFlags) -> f64 {
    let mut total = rec;
    if flags.local {
        total += local;
    }
    if flags.global {
        total += global;
    }
    total
}

/// Edge synthesis mode: continuous scores or thresholded binary edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeMode {
    Continuous,
    Binary,
}

/// Builds the augmented adjacency for `s` synthetic nodes appended after the
/// `n` real ones.
///
/// `synth_scores` is s×n (synthetic × real). The raw n×n block is copied
/// bit-exactly; synthetic-synthetic entries stay 0; the result is symmetric.
/// Binary mode emits 1 only for scores strictly above `eta`.
pub fn synthesize_edges(
    adjacency: &Mat,
    synth_scores: &Mat,
    mode: EdgeMode,
    eta: f64,
) -> Result<Mat> {
    let n = adjacency.rows();
    if adjacency.cols() != n {
        return Err(Error::Dimension("adjacency must be square".into()));
    }
    if synth_scores.cols() != n {
        return Err(Error::Dimension(format!(
            "synthetic scores are {}x{}, expected columns {n}",
            synth_scores.rows(),
            synth_scores.cols()
        )));
    }
    if mode == EdgeMode::Binary && !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Domain(format!("threshold {eta} outside (0,1)")));
    }
    let s = synth_scores.rows();
    let mut out = Mat::zeros(n + s, n + s);
    for i in 0..n {
        for j in 0..n {
            out.set(i, j, adjacency.get(i, j));
        }
    }
    for k in 0..s {
        for u in 0..n {
            let score = synth_scores.get(k, u);
            let v = match mode {
                EdgeMode::Continuous => score,
                EdgeMode::Binary => {
                    if score > eta {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
            out.set(n + k, u, v);
            out.set(u, n + k, v);
        }
    }
    Ok(out)
}

/// Ranking AUC of scores on held-out edges vs non-edges.
pub fn edge_ranking_auc(scores: &Mat, positives: &[(usize, usize)], negatives: &[(usize, usize)]) -> Option<f64> {
    let mut s = Vec::with_capacity(positives.len() + negatives.len());
    let mut is_pos = Vec::with_capacity(s.capacity());
    for &(u, v) in positives {
        s.push(scores.get(u, v));
        is_pos.push(true);
    }
    for &(u, v) in negatives {
        s.push(scores.get(u, v));
        is_pos.push(false);
    }
    crate::metrics::binary_auc(&s, &is_pos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{all_pairs_shortest_paths, partition_graph, Graph};
    use crate::nn::{grad_check, seeded_rng, sigmoid};
    use crate::params::{load_flat, to_flat};

    fn chain_graph(n: usize) -> Graph {
        let edges = (0..n - 1).map(|i| (i, i + 1)).collect();
        Graph::new(Mat::zeros(n, 1), edges, vec![None; n]).unwrap()
    }

    #[test]
    fn scores_of_orthogonal_embeddings_are_half() {
        let params = EdgePredictorParams {
            z_proj: Mat::eye(2),
            local_w: Mat::zeros(4, 2),
            local_b: Mat::zeros(1, 4),
            global_w: Mat::zeros(2, 2),
            global_b: Mat::zeros(1, 2),
        };
        let h = Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let s = edge_scores(&h, &params);
        assert_eq!(s.get(0, 1), 0.5);
        assert_eq!(s.get(1, 0), 0.5);
    }

    #[test]
    fn scores_saturate_for_aligned_large_embeddings() {
        let params = EdgePredictorParams {
            z_proj: Mat::eye(2),
            local_w: Mat::zeros(4, 2),
            local_b: Mat::zeros(1, 4),
            global_w: Mat::zeros(2, 2),
            global_b: Mat::zeros(1, 2),
        };
        let h = Mat::from_rows(&[vec![5.0, 0.0], vec![5.0, 0.0]]).unwrap();
        let s = edge_scores(&h, &params);
        assert!(s.get(0, 1) > 1.0 - 1e-9 && s.get(0, 1) < 1.0);
    }

    #[test]
    fn scores_match_gram_matrix_oracle() {
        let mut rng = seeded_rng(13);
        let h = Mat::uniform_init(4, 5, 1, &mut rng);
        let params = EdgePredictorParams::init(3, 5, 2, &mut rng);
        let s = edge_scores(&h, &params);
        // independent scalar-loop oracle
        let z = h.matmul_nt(&params.z_proj);
        for u in 0..4 {
            for v in 0..4 {
                let mut dot = 0.0;
                for k in 0..3 {
                    dot += z.get(u, k) * z.get(v, k);
                }
                assert!((s.get(u, v) - sigmoid(dot)).abs() < 1e-12);
                assert!((s.get(u, v) - s.get(v, u)).abs() < 1e-15, "symmetry");
                assert!(s.get(u, v) > 0.0 && s.get(u, v) < 1.0);
            }
        }
    }

    #[test]
    fn reconstruction_loss_examples() {
        let a = Mat::zeros(2, 2);
        let scores = Mat::filled(2, 2, 0.5);
        assert_eq!(reconstruction_loss(&a, &a).unwrap(), 0.0);
        assert_eq!(reconstruction_loss(&scores, &a).unwrap(), 1.0);
        let mut rng = seeded_rng(3);
        let s = Mat::uniform_init(5, 5, 1, &mut rng);
        let adj = Mat::from_fn(5, 5, |i, j| ((i + j) % 2) as f64);
        let mut by_loop = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                by_loop += (s.get(i, j) - adj.get(i, j)).powi(2);
            }
        }
        assert!((reconstruction_loss(&s, &adj).unwrap() - by_loop).abs() < 1e-12);
    }

    #[test]
    fn truncation_rule() {
        assert_eq!(truncate_distance(Some(1)).unwrap(), 0);
        assert_eq!(truncate_distance(Some(2)).unwrap(), 1);
        assert_eq!(truncate_distance(Some(3)).unwrap(), 2);
        assert_eq!(truncate_distance(Some(4)).unwrap(), 3);
        assert_eq!(truncate_distance(Some(7)).unwrap(), 3);
        assert_eq!(truncate_distance(None).unwrap(), 3);
        assert!(truncate_distance(Some(0)).is_err());
    }

    #[test]
    fn pair_sampling_is_stratified_where_possible() {
        let g = chain_graph(30); // all categories exist
        let dists = all_pairs_shortest_paths(&g);
        let mut rng = seeded_rng(17);
        let sample = sample_pairs(&dists, 80, &mut rng).unwrap();
        assert_eq!(sample.len(), 80);
        let mut per_cat = [0usize; 4];
        for &c in &sample.categories {
            per_cat[c] += 1;
        }
        for (c, &count) in per_cat.iter().enumerate() {
            assert!(count >= 10, "category {c} has only {count} of 80");
        }
        // categories agree with the distances
        for (&(u, v), &c) in sample.pairs.iter().zip(&sample.categories) {
            assert_eq!(truncate_distance(dists[u][v]).unwrap(), c);
        }
    }

    #[test]
    fn local_loss_matches_hand_composed_oracle() {
        let g = chain_graph(10);
        let dists = all_pairs_shortest_paths(&g);
        let mut rng = seeded_rng(23);
        let h = Mat::uniform_init(10, 6, 1, &mut rng);
        let params = EdgePredictorParams::init(4, 6, 2, &mut rng);
        let sample = sample_pairs(&dists, 10, &mut rng).unwrap();

        let mut tape = Tape::new();
        let vars = EdgeVars::bind(&mut tape, &params);
        let hv = tape.leaf(h.clone());
        let (z, _) = edge_scores_tape(&mut tape, hv, vars.z_proj);
        let loss = local_path_loss_tape(&mut tape, z, &sample, vars.local_w, vars.local_b);
        let got = tape.scalar(loss);

        // scalar-loop oracle: BFS categories + explicit cross-entropy
        let zm = h.matmul_nt(&params.z_proj);
        let mut total = 0.0;
        for (&(u, v), &cat) in sample.pairs.iter().zip(&sample.categories) {
            let mut logits = vec![0.0; 4];
            for c in 0..4 {
                let mut acc = params.local_b.get(0, c);
                for k in 0..4 {
                    acc += params.local_w.get(c, k) * (zm.get(v, k) - zm.get(u, k)).abs();
                }
                logits[c] = acc;
            }
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse: f64 = logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
            total += -(logits[cat] - max - lse);
        }
        assert!((got - total / sample.len() as f64).abs() < 1e-12);
    }

    #[test]
    fn local_loss_zero_difference_depends_on_bias_only() {
        // identical embeddings: |z_v - z_u| = 0, uniform head -> ln 4
        let h = Mat::filled(4, 3, 0.7);
        let mut rng = seeded_rng(29);
        let mut params = EdgePredictorParams::init(3, 3, 2, &mut rng);
        params.local_b = Mat::zeros(1, 4);
        let sample = PairSample {
            pairs: vec![(0, 1), (2, 3)],
            categories: vec![0, 3],
        };
        let mut tape = Tape::new();
        let vars = EdgeVars::bind(&mut tape, &params);
        let hv = tape.leaf(h);
        let (z, _) = edge_scores_tape(&mut tape, hv, vars.z_proj);
        let loss = local_path_loss_tape(&mut tape, z, &sample, vars.local_w, vars.local_b);
        assert!((tape.scalar(loss) - 4.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn anchor_targets_zero_at_centers_and_bounded() {
        let g = chain_graph(6);
        let dists = all_pairs_shortest_paths(&g);
        let partition = partition_graph(&g, 2, 1).unwrap();
        let targets = anchor_targets(&dists, &partition);
        for (t, &c) in partition.centers.iter().enumerate() {
            assert_eq!(targets.get(c, t), 0.0);
        }
        for i in 0..6 {
            for t in 0..2 {
                assert!(targets.get(i, t) >= 0.0 && targets.get(i, t) <= 5.0);
            }
        }
    }

    #[test]
    fn anchor_targets_unreachable_uses_component_diameter() {
        // two components: 0-1-2 chain and isolated 3
        let g = Graph::new(Mat::zeros(4, 1), vec![(0, 1), (1, 2)], vec![None; 4]).unwrap();
        let dists = all_pairs_shortest_paths(&g);
        let partition = Partition {
            assignment: vec![0, 0, 0, 1],
            centers: vec![1, 3],
            t: 2,
        };
        let targets = anchor_targets(&dists, &partition);
        // node 0: center 3 unreachable; its component diameter is 2 -> 3
        assert_eq!(targets.get(0, 1), 3.0);
        // node 3: center 1 unreachable; its component diameter is 0 -> 1
        assert_eq!(targets.get(3, 0), 1.0);
        assert_eq!(targets.get(3, 1), 0.0);
    }

    #[test]
    fn global_loss_matches_mse_oracle() {
        let g = chain_graph(6);
        let dists = all_pairs_shortest_paths(&g);
        let partition = partition_graph(&g, 2, 1).unwrap();
        let targets = anchor_targets(&dists, &partition);
        let mut rng = seeded_rng(31);
        let h = Mat::uniform_init(6, 5, 1, &mut rng);
        let params = EdgePredictorParams::init(3, 5, 2, &mut rng);

        let mut tape = Tape::new();
        let vars = EdgeVars::bind(&mut tape, &params);
        let hv = tape.leaf(h.clone());
        let (z, _) = edge_scores_tape(&mut tape, hv, vars.z_proj);
        let loss = global_path_loss_tape(&mut tape, z, &targets, vars.global_w, vars.global_b);
        let got = tape.scalar(loss);

        let zm = h.matmul_nt(&params.z_proj);
        let mut total = 0.0;
        for i in 0..6 {
            for t in 0..2 {
                let mut pred = params.global_b.get(0, t);
                for k in 0..3 {
                    pred += params.global_w.get(t, k) * zm.get(i, k);
                }
                total += (pred - targets.get(i, t)).powi(2);
            }
        }
        assert!((got - total / 6.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_regression_is_zero() {
        let targets = Mat::zeros(3, 2);
        let mut tape = Tape::new();
        let z = tape.leaf(Mat::zeros(3, 4));
        let w = tape.leaf(Mat::zeros(2, 4));
        let b = tape.leaf(Mat::zeros(1, 2));
        let loss = global_path_loss_tape(&mut tape, z, &targets, w, b);
        assert_eq!(tape.scalar(loss), 0.0);
    }

    #[test]
    fn total_loss_sums_enabled_tasks() {
        let all = EdgeTaskFlags::default();
        assert_eq!(edge_total_loss(0.0, 0.0, 0.0, all), 0.0);
        assert_eq!(edge_total_loss(1.0, 0.5, 0.25, all), 1.75);
        let no_local = EdgeTaskFlags {
            local: false,
            global: true,
        };
        assert_eq!(edge_total_loss(1.0, 0.5, 0.25, no_local), 1.25);
        let no_global = EdgeTaskFlags {
            local: true,
            global: false,
        };
        assert_eq!(edge_total_loss(1.0, 0.5, 0.25, no_global), 1.5);
    }

    #[test]
    fn synthesis_binary_threshold_is_strict() {
        let a = Mat::zeros(2, 2);
        let scores = Mat::from_rows(&[vec![0.6, 0.5]]).unwrap();
        let an = synthesize_edges(&a, &scores, EdgeMode::Binary, 0.5).unwrap();
        assert_eq!(an.get(2, 0), 1.0); // 0.6 > 0.5
        assert_eq!(an.get(2, 1), 0.0); // 0.5 is not strictly greater
        assert_eq!(an.get(0, 2), 1.0); // symmetric
    }

    #[test]
    fn synthesis_continuous_copies_scores() {
        let a = Mat::from_fn(3, 3, |i, j| if i + j == 2 && i != j { 1.0 } else { 0.0 });
        let scores = Mat::from_rows(&[vec![0.1, 0.7, 0.3], vec![0.9, 0.2, 0.8]]).unwrap();
        let an = synthesize_edges(&a, &scores, EdgeMode::Continuous, 0.5).unwrap();
        for k in 0..2 {
            for u in 0..3 {
                assert_eq!(an.get(3 + k, u), scores.get(k, u));
                assert_eq!(an.get(u, 3 + k), scores.get(k, u));
            }
        }
        // raw block preserved bit-exactly
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(an.get(i, j), a.get(i, j));
            }
        }
        // synthetic-synthetic entries are zero
        assert_eq!(an.get(3, 4), 0.0);
        assert_eq!(an.get(4, 3), 0.0);
    }

    #[test]
    fn synthesis_rejects_bad_threshold() {
        let a = Mat::zeros(2, 2);
        let scores = Mat::zeros(1, 2);
        assert!(synthesize_edges(&a, &scores, EdgeMode::Binary, 0.0).is_err());
        assert!(synthesize_edges(&a, &scores, EdgeMode::Binary, 1.0).is_err());
        // continuous mode ignores eta
        assert!(synthesize_edges(&a, &scores, EdgeMode::Continuous, 0.0).is_ok());
    }

    #[test]
    fn edge_losses_pass_grad_check() {
        let g = chain_graph(8);
        let dists = all_pairs_shortest_paths(&g);
        let partition = partition_graph(&g, 2, 1).unwrap();
        let targets = anchor_targets(&dists, &partition);
        let mut rng = seeded_rng(37);
        let h = Mat::uniform_init(8, 6, 1, &mut rng);
        let sample = sample_pairs(&dists, 16, &mut rng).unwrap();
        let mut params = EdgePredictorParams::init(5, 6, 2, &mut rng);
        let mut flat = to_flat(&params);
        let adjacency = g.adjacency().clone();
        let mut f = |flat_params: &[Mat]| {
            load_flat(&mut params, flat_params);
            let mut tape = Tape::new();
            let vars = EdgeVars::bind(&mut tape, &params);
            let hv = tape.leaf(h.clone());
            let (z, scores) = edge_scores_tape(&mut tape, hv, vars.z_proj);
            let rec = reconstruction_loss_tape(&mut tape, scores, &adjacency);
            let local = local_path_loss_tape(&mut tape, z, &sample, vars.local_w, vars.local_b);
            let global =
                global_path_loss_tape(&mut tape, z, &targets, vars.global_w, vars.global_b);
            let lg = tape.add(local, global);
            let loss = tape.add(rec, lg);
            let val = tape.scalar(loss);
            let grads = tape.backward(loss);
            (
                val,
                vars.ordered.iter().map(|&v| grads.get(v).clone()).collect(),
            )
        };
        let err = grad_check(&mut f, &mut flat, 1e-5);
        assert!(err < 1e-4, "max rel err {err}");
    }
}
