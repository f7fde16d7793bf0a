//! Synthetic minority-node generation by convex interpolation between a
//! source node and its nearest same-class neighbor in embedding space.
//!
//! Candidates are restricted to labeled training nodes, so no label
//! information leaks from val/test. A generation plan (source, neighbor,
//! blend) is separated from its application so the trainer can replay the
//! plan on the differentiation tape.

use crate::error::{Error, Result};
use crate::graph::{round_half_up, Graph, ImbalancedSplit};
use crate::mat::Mat;
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::BTreeMap;

/// Provenance of one synthetic node: `h = (1-blend)·h[source] + blend·h[neighbor]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourcePair {
    pub source: usize,
    pub neighbor: usize,
    pub blend: f64,
}

/// Generation plan: one entry per synthetic node, labels aligned.
#[derive(Clone, Debug, Default)]
pub struct MixupPlan {
    pub pairs: Vec<SourcePair>,
    pub labels: Vec<usize>,
}

impl MixupPlan {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Synthetic nodes with embeddings, labels, and provenance records.
#[derive(Clone, Debug)]
pub struct SyntheticSet {
    pub features: Mat,
    pub labels: Vec<usize>,
    pub source_pairs: Vec<SourcePair>,
}

/// Same-class labeled node closest to `v` in Euclidean distance, ties to the
/// smallest node id. `candidates` are the node ids allowed as neighbors.
pub fn nearest_neighbor(
    v: usize,
    embeddings: &Mat,
    labels: &[Option<usize>],
    candidates: &[usize],
) -> Result<usize> {
    let class = labels[v].ok_or_else(|| Error::Domain(format!("node {v} has no label")))?;
    let hv = embeddings.row(v);
    let mut best: Option<(f64, usize)> = None;
    for &u in candidates {
        if u == v || labels[u] != Some(class) {
            continue;
        }
        let dist: f64 = embeddings
            .row(u)
            .iter()
            .zip(hv)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let better = match best {
            None => true,
            Some((bd, bu)) => dist < bd || (dist == bd && u < bu),
        };
        if better {
            best = Some((dist, u));
        }
    }
    best.map(|(_, u)| u).ok_or_else(|| {
        Error::Domain(format!("node {v} has no same-class candidate (class {class})"))
    })
}

/// Convex combination `(1-blend)·h_v + blend·h_nn`; the result carries the
/// source node's label.
pub fn mixup_node(h_v: &[f64], h_nn: &[f64], blend: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&blend) {
        return Err(Error::Domain(format!("blend {blend} outside [0,1]")));
    }
    if h_v.len() != h_nn.len() {
        return Err(Error::Dimension(format!(
            "mixup over lengths {} and {}",
            h_v.len(),
            h_nn.len()
        )));
    }
    Ok(h_v
        .iter()
        .zip(h_nn)
        .map(|(a, b)| (1.0 - blend) * a + blend * b)
        .collect())
}

/// Builds the per-class generation plan at the given upsampling scales.
///
/// Each minority class `c` emits `round(train_count(c) · scales[c])` nodes,
/// cycling over its training nodes in a seed-shuffled order with a fresh
/// uniform blend per node. A class with a single training node falls back to
/// duplication (`blend = 0`).
pub fn plan_synthetic_set(
    embeddings: &Mat,
    graph: &Graph,
    split: &ImbalancedSplit,
    scales: &BTreeMap<usize, f64>,
    rng: &mut impl Rng,
) -> Result<MixupPlan> {
    let mut plan = MixupPlan::default();
    for &class in &split.minority_classes {
        let alpha = *scales.get(&class).ok_or_else(|| {
            Error::Domain(format!("no upsampling scale for minority class {class}"))
        })?;
        if alpha < 0.0 {
            return Err(Error::Domain(format!(
                "negative upsampling scale {alpha} for class {class}"
            )));
        }
        let mut sources = split.train_of_class(graph, class);
        if sources.is_empty() {
            return Err(Error::Domain(format!(
                "minority class {class} has no training nodes"
            )));
        }
        let count = round_half_up(sources.len() as f64 * alpha);
        sources.shuffle(rng);
        for i in 0..count {
            let v = sources[i % sources.len()];
            let (neighbor, blend) =
                match nearest_neighbor(v, embeddings, graph.labels(), &split.train) {
                    Ok(u) => (u, rng.random::<f64>()),
                    Err(_) => (v, 0.0), // singleton class: duplicate
                };
            plan.pairs.push(SourcePair {
                source: v,
                neighbor,
                blend,
            });
            plan.labels.push(class);
        }
    }
    Ok(plan)
}

/// Applies a plan to an embedding matrix, producing the synthetic rows.
pub fn apply_plan(embeddings: &Mat, plan: &MixupPlan) -> Result<Mat> {
    let mut rows = Vec::with_capacity(plan.len());
    for p in &plan.pairs {
        rows.push(mixup_node(
            embeddings.row(p.source),
            embeddings.row(p.neighbor),
            p.blend,
        )?);
    }
    if rows.is_empty() {
        return Ok(Mat::zeros(0, embeddings.cols()));
    }
    Mat::from_rows(&rows)
}

/// Plan + apply in one call; deterministic for a fixed seed.
pub fn generate_synthetic_set(
    embeddings: &Mat,
    graph: &Graph,
    split: &ImbalancedSplit,
    scales: &BTreeMap<usize, f64>,
    seed: u64,
) -> Result<SyntheticSet> {
    let mut rng = crate::nn::seeded_rng(seed);
    let plan = plan_synthetic_set(embeddings, graph, split, scales, &mut rng)?;
    let features = apply_plan(embeddings, &plan)?;
    Ok(SyntheticSet {
        features,
        labels: plan.labels,
        source_pairs: plan.pairs,
    })
}
