//! Semantic feature extractor: K learned relation graphs over the input
//! edge support, per-relation aggregation layers, graph descriptors, and the
//! pairwise-cosine disentanglement loss.
//!
//! Relation graphs are scored only on existing edges plus self-loops, so
//! their support never exceeds `A + I`. Per-relation channels stay separate
//! through every layer; the final embedding concatenates the K channels.

use crate::graph::Graph;
use crate::mat::Mat;
use crate::params::ParamGroup;
use crate::tape::{Tape, Var};
use rand::Rng;

#[derive(Clone, Copy, Debug)]
pub struct ExtractorConfig {
    /// K: number of semantic relations.
    pub relations: usize,
    /// F_h: per-relation hidden width.
    pub hidden_dim: usize,
    /// L: aggregation layers.
    pub layers: usize,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        ExtractorConfig {
            relations: 4,
            hidden_dim: 32,
            layers: 1,
        }
    }
}

impl ExtractorConfig {
    /// Width of the concatenated output embedding.
    pub fn output_dim(&self) -> usize {
        self.relations * self.hidden_dim
    }
}

/// Trainable state of the extractor.
#[derive(Clone, Debug)]
pub struct ExtractorParams {
    /// F_h×F input projection.
    pub feature_proj: Mat,
    /// Per-relation pair scorer: 1×2F_h weights + 1×1 bias.
    pub scorer_w: Vec<Mat>,
    pub scorer_b: Vec<Mat>,
    /// layer_w[l][k]: F_h×F_h aggregation weights.
    pub layer_w: Vec<Vec<Mat>>,
    /// Two-round descriptor encoder plus the readout head.
    pub desc_enc1: Mat,
    pub desc_enc2: Mat,
    pub desc_out_w: Mat,
    pub desc_out_b: Mat,
}

impl ExtractorParams {
    pub fn init(cfg: &ExtractorConfig, feat_dim: usize, rng: &mut impl Rng) -> Self {
        let fh = cfg.hidden_dim;
        ExtractorParams {
            feature_proj: Mat::uniform_init(fh, feat_dim, feat_dim, rng),
            scorer_w: (0..cfg.relations)
                .map(|_| Mat::uniform_init(1, 2 * fh, 2 * fh, rng))
                .collect(),
            scorer_b: (0..cfg.relations).map(|_| Mat::zeros(1, 1)).collect(),
            layer_w: (0..cfg.layers)
                .map(|_| {
                    (0..cfg.relations)
                        .map(|_| Mat::uniform_init(fh, fh, fh, rng))
                        .collect()
                })
                .collect(),
            desc_enc1: Mat::uniform_init(fh, fh, fh, rng),
            desc_enc2: Mat::uniform_init(fh, fh, fh, rng),
            desc_out_w: Mat::uniform_init(fh, fh, fh, rng),
            desc_out_b: Mat::zeros(1, fh),
        }
    }

    pub fn relations(&self) -> usize {
        self.scorer_w.len()
    }

    pub fn hidden_dim(&self) -> usize {
        self.feature_proj.rows()
    }

    pub fn layers(&self) -> usize {
        self.layer_w.len()
    }

    pub fn output_dim(&self) -> usize {
        self.relations() * self.hidden_dim()
    }
}

impl ParamGroup for ExtractorParams {
    fn named(&self) -> Vec<(String, &Mat)> {
        let mut out: Vec<(String, &Mat)> = vec![("feature_proj".into(), &self.feature_proj)];
        for (k, w) in self.scorer_w.iter().enumerate() {
            out.push((format!("scorer_w[{k}]"), w));
        }
        for (k, b) in self.scorer_b.iter().enumerate() {
            out.push((format!("scorer_b[{k}]"), b));
        }
        for (l, ws) in self.layer_w.iter().enumerate() {
            for (k, w) in ws.iter().enumerate() {
                out.push((format!("layer_w[{l}][{k}]"), w));
            }
        }
        out.push(("desc_enc1".into(), &self.desc_enc1));
        out.push(("desc_enc2".into(), &self.desc_enc2));
        out.push(("desc_out_w".into(), &self.desc_out_w));
        out.push(("desc_out_b".into(), &self.desc_out_b));
        out
    }

    fn named_mut(&mut self) -> Vec<(String, &mut Mat)> {
        let mut out: Vec<(String, &mut Mat)> =
            vec![("feature_proj".into(), &mut self.feature_proj)];
        for (k, w) in self.scorer_w.iter_mut().enumerate() {
            out.push((format!("scorer_w[{k}]"), w));
        }
        for (k, b) in self.scorer_b.iter_mut().enumerate() {
            out.push((format!("scorer_b[{k}]"), b));
        }
        for (l, ws) in self.layer_w.iter_mut().enumerate() {
            for (k, w) in ws.iter_mut().enumerate() {
                out.push((format!("layer_w[{l}][{k}]"), w));
            }
        }
        out.push(("desc_enc1".into(), &mut self.desc_enc1));
        out.push(("desc_enc2".into(), &mut self.desc_enc2));
        out.push(("desc_out_w".into(), &mut self.desc_out_w));
        out.push(("desc_out_b".into(), &mut self.desc_out_b));
        out
    }
}

/// Extractor parameters bound as tape leaves. `ordered` matches
/// [`ParamGroup::named`] order for gradient extraction.
pub struct ExtractorVars {
    pub feature_proj: Var,
    pub scorer_w: Vec<Var>,
    pub scorer_b: Vec<Var>,
    pub layer_w: Vec<Vec<Var>>,
    pub desc_enc1: Var,
    pub desc_enc2: Var,
    pub desc_out_w: Var,
    pub desc_out_b: Var,
    pub ordered: Vec<Var>,
}

impl ExtractorVars {
    pub fn bind(tape: &mut Tape, p: &ExtractorParams) -> Self {
        let feature_proj = tape.leaf(p.feature_proj.clone());
        let scorer_w: Vec<Var> = p.scorer_w.iter().map(|m| tape.leaf(m.clone())).collect();
        let scorer_b: Vec<Var> = p.scorer_b.iter().map(|m| tape.leaf(m.clone())).collect();
        let layer_w: Vec<Vec<Var>> = p
            .layer_w
            .iter()
            .map(|ws| ws.iter().map(|m| tape.leaf(m.clone())).collect())
            .collect();
        let desc_enc1 = tape.leaf(p.desc_enc1.clone());
        let desc_enc2 = tape.leaf(p.desc_enc2.clone());
        let desc_out_w = tape.leaf(p.desc_out_w.clone());
        let desc_out_b = tape.leaf(p.desc_out_b.clone());
        let mut ordered = vec![feature_proj];
        ordered.extend(&scorer_w);
        ordered.extend(&scorer_b);
        for ws in &layer_w {
            ordered.extend(ws);
        }
        ordered.extend([desc_enc1, desc_enc2, desc_out_w, desc_out_b]);
        ExtractorVars {
            feature_proj,
            scorer_w,
            scorer_b,
            layer_w,
            desc_enc1,
            desc_enc2,
            desc_out_w,
            desc_out_b,
            ordered,
        }
    }
}

/// Directed score positions for the relation graphs: every existing edge in
/// both directions plus all self-loops, sorted.
pub fn relation_support(graph: &Graph) -> Vec<(usize, usize)> {
    let mut support: Vec<(usize, usize)> = (0..graph.n_nodes()).map(|i| (i, i)).collect();
    for &(u, v) in graph.edges() {
        support.push((u, v));
        support.push((v, u));
    }
    support.sort_unstable();
    support
}

/// `H' = X·W_projᵀ`.
pub fn project_features(tape: &mut Tape, x: Var, feature_proj: Var) -> Var {
    tape.matmul_nt(x, feature_proj)
}

/// One relation graph: `G[i,j] = tanh(scorer(concat(h'_i, h'_j)))` on the
/// support, 0 elsewhere.
pub fn build_relation_graph(
    tape: &mut Tape,
    h_prime: Var,
    support: &[(usize, usize)],
    scorer_w: Var,
    scorer_b: Var,
    n: usize,
) -> Var {
    let srcs: Vec<usize> = support.iter().map(|&(i, _)| i).collect();
    let dsts: Vec<usize> = support.iter().map(|&(_, j)| j).collect();
    let hi = tape.gather_rows(h_prime, &srcs);
    let hj = tape.gather_rows(h_prime, &dsts);
    let cat = tape.concat_cols(hi, hj);
    let score = tape.matmul_nt(cat, scorer_w);
    let score = tape.add_bias(score, scorer_b);
    let score = tape.tanh(score);
    tape.scatter_square(score, support, n)
}

/// Per-node semantic features and everything produced on the way.
pub struct SemanticForward {
    /// N×F_h projected inputs.
    pub h_prime: Var,
    /// K relation graphs, N×N.
    pub relation_graphs: Vec<Var>,
    /// Final-layer per-relation features, each N×F_h.
    pub per_relation: Vec<Var>,
    /// N×(K·F_h) concatenated embedding.
    pub embeddings: Var,
}

/// Runs the full extractor on the tape.
pub fn semantic_forward(
    tape: &mut Tape,
    x: &Mat,
    support: &[(usize, usize)],
    vars: &ExtractorVars,
) -> SemanticForward {
    let n = x.rows();
    let x = tape.leaf(x.clone());
    let h_prime = project_features(tape, x, vars.feature_proj);
    let relations = vars.scorer_w.len();
    let relation_graphs: Vec<Var> = (0..relations)
        .map(|k| {
            build_relation_graph(
                tape,
                h_prime,
                support,
                vars.scorer_w[k],
                vars.scorer_b[k],
                n,
            )
        })
        .collect();

    // per-relation channels; layer 0 input is the shared projection
    let mut channel: Vec<Var> = vec![h_prime; relations];
    for layer in &vars.layer_w {
        for k in 0..relations {
            let agg = tape.matmul(relation_graphs[k], channel[k]);
            let lin = tape.matmul_nt(agg, layer[k]);
            channel[k] = tape.tanh(lin);
        }
    }

    let mut embeddings = channel[0];
    for &c in &channel[1..] {
        embeddings = tape.concat_cols(embeddings, c);
    }

    SemanticForward {
        h_prime,
        relation_graphs,
        per_relation: channel,
        embeddings,
    }
}

/// Graph descriptor: two rounds of relation-weighted aggregation with tanh,
/// global mean pooling, then an affine head.
pub fn graph_descriptor(
    tape: &mut Tape,
    relation_graph: Var,
    h_prime: Var,
    vars: &ExtractorVars,
) -> Var {
    let a1 = tape.matmul(relation_graph, h_prime);
    let z1 = tape.matmul_nt(a1, vars.desc_enc1);
    let z1 = tape.tanh(z1);
    let a2 = tape.matmul(relation_graph, z1);
    let z2 = tape.matmul_nt(a2, vars.desc_enc2);
    let z2 = tape.tanh(z2);
    let pooled = tape.mean_rows(z2);
    let out = tape.matmul_nt(pooled, vars.desc_out_w);
    tape.add_bias(out, vars.desc_out_b)
}

/// Descriptors for every relation graph of a forward pass.
pub fn graph_descriptors(tape: &mut Tape, fwd: &SemanticForward, vars: &ExtractorVars) -> Vec<Var> {
    fwd.relation_graphs
        .iter()
        .map(|&g| graph_descriptor(tape, g, fwd.h_prime, vars))
        .collect()
}

/// Sum of pairwise cosine similarities between descriptors; zero when fewer
/// than two relations exist.
pub fn disentanglement_loss(tape: &mut Tape, descriptors: &[Var]) -> Var {
    let mut total: Option<Var> = None;
    for i in 0..descriptors.len() {
        for j in (i + 1)..descriptors.len() {
            let c = tape.cosine(descriptors[i], descriptors[j]);
            total = Some(match total {
                Some(t) => tape.add(t, c),
                None => c,
            });
        }
    }
    total.unwrap_or_else(|| tape.leaf(Mat::zeros(1, 1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::nn::{grad_check, seeded_rng};
    use crate::params::{load_flat, to_flat};

    fn toy_graph(n: usize, edges: Vec<(usize, usize)>, feat_dim: usize) -> Graph {
        let mut rng = seeded_rng(100 + n as u64);
        let features = Mat::uniform_init(n, feat_dim, 1, &mut rng);
        Graph::new(features, edges, vec![None; n]).unwrap()
    }

    fn toy_params(cfg: &ExtractorConfig, feat_dim: usize, seed: u64) -> ExtractorParams {
        let mut rng = seeded_rng(seed);
        ExtractorParams::init(cfg, feat_dim, &mut rng)
    }

    #[test]
    fn projection_identity() {
        let mut tape = Tape::new();
        let x = tape.leaf(Mat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap());
        let w = tape.leaf(Mat::eye(2));
        let h = project_features(&mut tape, x, w);
        assert_eq!(tape.value(h), tape.value(x));
    }

    #[test]
    fn projection_direct_arithmetic() {
        let mut tape = Tape::new();
        let x = tape.leaf(Mat::from_rows(&[vec![1.0, 0.0]]).unwrap());
        let w = tape.leaf(Mat::from_rows(&[vec![2.0, 0.0], vec![0.0, 3.0]]).unwrap());
        let h = project_features(&mut tape, x, w);
        assert_eq!(
            tape.value(h),
            &Mat::from_rows(&[vec![2.0, 0.0]]).unwrap()
        );
    }

    #[test]
    fn zero_scorer_gives_zero_relation_graph() {
        let g = toy_graph(4, vec![(0, 1), (1, 2), (2, 3)], 3);
        let cfg = ExtractorConfig {
            relations: 2,
            hidden_dim: 4,
            layers: 1,
        };
        let mut p = toy_params(&cfg, 3, 1);
        for w in p.scorer_w.iter_mut() {
            *w = Mat::zeros(1, 8);
        }
        let mut tape = Tape::new();
        let vars = ExtractorVars::bind(&mut tape, &p);
        let support = relation_support(&g);
        let fwd = semantic_forward(&mut tape, g.features(), &support, &vars);
        for &gk in &fwd.relation_graphs {
            assert_eq!(tape.value(gk).frob_norm_sq(), 0.0);
        }
        // zero relation graphs zero out the aggregation as well
        assert_eq!(tape.value(fwd.embeddings).frob_norm_sq(), 0.0);
    }

    #[test]
    fn relation_entries_stay_in_tanh_range() {
        let g = toy_graph(4, vec![(0, 1), (1, 2), (2, 3)], 3);
        let cfg = ExtractorConfig {
            relations: 1,
            hidden_dim: 4,
            layers: 1,
        };
        let mut p = toy_params(&cfg, 3, 2);
        p.scorer_w[0] = Mat::filled(1, 8, 1e4); // drive scores toward +inf
        let mut tape = Tape::new();
        let vars = ExtractorVars::bind(&mut tape, &p);
        let support = relation_support(&g);
        let fwd = semantic_forward(&mut tape, g.features(), &support, &vars);
        let gk = tape.value(fwd.relation_graphs[0]);
        for &(i, j) in &support {
            let v = gk.get(i, j);
            assert!(v.abs() <= 1.0, "entry {v} escapes tanh range");
        }
    }

    #[test]
    fn relation_graph_is_generally_asymmetric() {
        // 2-node graph; score(h0,h1) vs score(h1,h0) by direct substitution
        let features = Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let g = Graph::new(features, vec![(0, 1)], vec![None, None]).unwrap();
        let cfg = ExtractorConfig {
            relations: 1,
            hidden_dim: 2,
            layers: 1,
        };
        let mut p = toy_params(&cfg, 2, 3);
        p.feature_proj = Mat::eye(2);
        p.scorer_w[0] = Mat::from_rows(&[vec![1.0, 0.0, 0.0, 0.5]]).unwrap();
        p.scorer_b[0] = Mat::zeros(1, 1);
        let mut tape = Tape::new();
        let vars = ExtractorVars::bind(&mut tape, &p);
        let support = relation_support(&g);
        let fwd = semantic_forward(&mut tape, g.features(), &support, &vars);
        let gk = tape.value(fwd.relation_graphs[0]);
        // h'_0 = [1,0], h'_1 = [0,1]; score(0,1) = 1·1 + 0.5·1 = 1.5? no:
        // concat(h0,h1) = [1,0,0,1] -> w·cat = 1·1 + 0.5·1 = 1.5
        // concat(h1,h0) = [0,1,1,0] -> w·cat = 0
        assert!((gk.get(0, 1) - 1.5f64.tanh()).abs() < 1e-12);
        assert!((gk.get(1, 0) - 0.0).abs() < 1e-12);
        assert_ne!(gk.get(0, 1), gk.get(1, 0));
    }

    #[test]
    fn relation_support_never_exceeds_adjacency_plus_identity() {
        let g = toy_graph(6, vec![(0, 1), (2, 4), (3, 5), (1, 2)], 3);
        let cfg = ExtractorConfig {
            relations: 3,
            hidden_dim: 4,
            layers: 2,
        };
        let p = toy_params(&cfg, 3, 4);
        let mut tape = Tape::new();
        let vars = ExtractorVars::bind(&mut tape, &p);
        let support = relation_support(&g);
        let fwd = semantic_forward(&mut tape, g.features(), &support, &vars);
        for &gk in &fwd.relation_graphs {
            let m = tape.value(gk);
            for i in 0..6 {
                for j in 0..6 {
                    if i != j && g.adjacency().get(i, j) == 0.0 {
                        assert_eq!(m.get(i, j), 0.0, "support leak at ({i},{j})");
                    }
                }
            }
        }
    }

    #[test]
    fn descriptor_of_zero_graph_is_head_bias() {
        let g = toy_graph(4, vec![(0, 1)], 3);
        let cfg = ExtractorConfig {
            relations: 1,
            hidden_dim: 4,
            layers: 1,
        };
        let mut p = toy_params(&cfg, 3, 5);
        p.scorer_w[0] = Mat::zeros(1, 8);
        p.desc_out_b = Mat::from_rows(&[vec![0.1, -0.2, 0.3, 0.4]]).unwrap();
        let mut tape = Tape::new();
        let vars = ExtractorVars::bind(&mut tape, &p);
        let support = relation_support(&g);
        let fwd = semantic_forward(&mut tape, g.features(), &support, &vars);
        let d = graph_descriptor(&mut tape, fwd.relation_graphs[0], fwd.h_prime, &vars);
        assert!(tape.value(d).max_abs_diff(&p.desc_out_b) < 1e-15);
    }

    #[test]
    fn identical_relation_graphs_give_identical_descriptors() {
        let g = toy_graph(5, vec![(0, 1), (1, 2), (3, 4)], 3);
        let cfg = ExtractorConfig {
            relations: 2,
            hidden_dim: 4,
            layers: 1,
        };
        let mut p = toy_params(&cfg, 3, 6);
        p.scorer_w[1] = p.scorer_w[0].clone();
        p.scorer_b[1] = p.scorer_b[0].clone();
        let mut tape = Tape::new();
        let vars = ExtractorVars::bind(&mut tape, &p);
        let support = relation_support(&g);
        let fwd = semantic_forward(&mut tape, g.features(), &support, &vars);
        let ds = graph_descriptors(&mut tape, &fwd, &vars);
        assert!(tape.value(ds[0]).max_abs_diff(tape.value(ds[1])) < 1e-15);
    }

    #[test]
    fn disentanglement_loss_known_values() {
        let mut tape = Tape::new();
        let d1 = tape.leaf(Mat::from_rows(&[vec![1.0, 0.0]]).unwrap());
        let d2 = tape.leaf(Mat::from_rows(&[vec![1.0, 0.0]]).unwrap());
        let same = disentanglement_loss(&mut tape, &[d1, d2]);
        assert!((tape.scalar(same) - 1.0).abs() < 1e-12);

        let mut tape = Tape::new();
        let d1 = tape.leaf(Mat::from_rows(&[vec![1.0, 0.0]]).unwrap());
        let d2 = tape.leaf(Mat::from_rows(&[vec![0.0, 1.0]]).unwrap());
        let orth = disentanglement_loss(&mut tape, &[d1, d2]);
        assert!(tape.scalar(orth).abs() < 1e-12);

        // pairwise cosines computed by hand: 0 + 1/√2 + 1/√2 = √2
        let mut tape = Tape::new();
        let s = 0.5f64.sqrt();
        let d1 = tape.leaf(Mat::from_rows(&[vec![1.0, 0.0]]).unwrap());
        let d2 = tape.leaf(Mat::from_rows(&[vec![0.0, 1.0]]).unwrap());
        let d3 = tape.leaf(Mat::from_rows(&[vec![s, s]]).unwrap());
        let three = disentanglement_loss(&mut tape, &[d1, d2, d3]);
        assert!((tape.scalar(three) - 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn isolated_node_keeps_self_loop_signal() {
        // node 2 is isolated: h_2 = tanh(G[2,2] · (W·h'_2)) with W = I
        let features = Mat::from_rows(&[vec![0.3], vec![-0.7], vec![0.9]]).unwrap();
        let g = Graph::new(features, vec![(0, 1)], vec![None; 3]).unwrap();
        let cfg = ExtractorConfig {
            relations: 1,
            hidden_dim: 1,
            layers: 1,
        };
        let mut p = toy_params(&cfg, 1, 7);
        p.feature_proj = Mat::eye(1);
        p.layer_w[0][0] = Mat::eye(1);
        let mut tape = Tape::new();
        let vars = ExtractorVars::bind(&mut tape, &p);
        let support = relation_support(&g);
        let fwd = semantic_forward(&mut tape, g.features(), &support, &vars);
        let gk = tape.value(fwd.relation_graphs[0]).clone();
        let out = tape.value(fwd.embeddings);
        let expected = (gk.get(2, 2) * 0.9f64).tanh();
        assert!((out.get(2, 0) - expected).abs() < 1e-12);
    }

    /// Independent dense evaluation of the aggregation rule for L=1.
    fn dense_oracle(
        g: &Graph,
        p: &ExtractorParams,
        relation_graphs: &[Mat],
        h_prime: &Mat,
    ) -> Mat {
        let n = g.n_nodes();
        let k = p.relations();
        let fh = p.hidden_dim();
        let mut out = Mat::zeros(n, k * fh);
        for rel in 0..k {
            let w = &p.layer_w[0][rel];
            for i in 0..n {
                // sum over the relation graph row (self-loop included)
                let mut agg = vec![0.0; fh];
                for j in 0..n {
                    let gij = relation_graphs[rel].get(i, j);
                    if gij == 0.0 {
                        continue;
                    }
                    for (a, acc) in agg.iter_mut().enumerate() {
                        let mut wh = 0.0;
                        for b in 0..fh {
                            wh += w.get(a, b) * h_prime.get(j, b);
                        }
                        *acc += gij * wh;
                    }
                }
                for (a, &v) in agg.iter().enumerate() {
                    out.set(i, rel * fh + a, v.tanh());
                }
            }
        }
        out
    }

    #[test]
    fn forward_matches_dense_oracle() {
        let g = toy_graph(5, vec![(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)], 3);
        let cfg = ExtractorConfig {
            relations: 2,
            hidden_dim: 4,
            layers: 1,
        };
        let p = toy_params(&cfg, 3, 8);
        let mut tape = Tape::new();
        let vars = ExtractorVars::bind(&mut tape, &p);
        let support = relation_support(&g);
        let fwd = semantic_forward(&mut tape, g.features(), &support, &vars);
        let graphs: Vec<Mat> = fwd
            .relation_graphs
            .iter()
            .map(|&v| tape.value(v).clone())
            .collect();
        let expected = dense_oracle(&g, &p, &graphs, tape.value(fwd.h_prime));
        assert!(tape.value(fwd.embeddings).max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn output_width_is_relations_times_hidden() {
        for layers in [1, 2, 3] {
            let g = toy_graph(6, vec![(0, 1), (2, 3), (4, 5)], 3);
            let cfg = ExtractorConfig {
                relations: 3,
                hidden_dim: 5,
                layers,
            };
            let p = toy_params(&cfg, 3, 9);
            let mut tape = Tape::new();
            let vars = ExtractorVars::bind(&mut tape, &p);
            let support = relation_support(&g);
            let fwd = semantic_forward(&mut tape, g.features(), &support, &vars);
            assert_eq!(tape.value(fwd.embeddings).shape(), (6, 15));
        }
    }

    #[test]
    fn forward_is_permutation_equivariant() {
        let edges = vec![(0, 1), (1, 2), (2, 3), (3, 0), (1, 4)];
        let g = toy_graph(5, edges.clone(), 3);
        let cfg = ExtractorConfig {
            relations: 2,
            hidden_dim: 3,
            layers: 2,
        };
        let p = toy_params(&cfg, 3, 10);

        let run = |graph: &Graph| -> Mat {
            let mut tape = Tape::new();
            let vars = ExtractorVars::bind(&mut tape, &p);
            let support = relation_support(graph);
            let fwd = semantic_forward(&mut tape, graph.features(), &support, &vars);
            tape.value(fwd.embeddings).clone()
        };

        let base = run(&g);

        // permute node ids with sigma
        let sigma = [3usize, 0, 4, 1, 2];
        let mut feats = vec![vec![]; 5];
        for i in 0..5 {
            feats[sigma[i]] = g.features().row(i).to_vec();
        }
        let perm_edges: Vec<(usize, usize)> =
            edges.iter().map(|&(u, v)| (sigma[u], sigma[v])).collect();
        let pg = Graph::new(Mat::from_rows(&feats).unwrap(), perm_edges, vec![None; 5]).unwrap();
        let permuted = run(&pg);

        for i in 0..5 {
            for j in 0..base.cols() {
                assert!(
                    (base.get(i, j) - permuted.get(sigma[i], j)).abs() < 1e-12,
                    "row {i} not permuted correctly"
                );
            }
        }
    }

    #[test]
    fn extractor_losses_pass_grad_check() {
        // width matters here: very narrow hidden dims leave descriptor norms
        // near zero, where the cosine's curvature ruins finite differences
        let g = toy_graph(
            5,
            vec![(0, 1), (1, 2), (2, 3), (3, 4), (0, 2), (1, 3), (2, 4)],
            3,
        );
        let cfg = ExtractorConfig {
            relations: 2,
            hidden_dim: 16,
            layers: 1,
        };
        let mut p = toy_params(&cfg, 3, 11);
        let support = relation_support(&g);
        let mut flat = to_flat(&p);
        let mut f = |flat_params: &[Mat]| {
            load_flat(&mut p, flat_params);
            let mut tape = Tape::new();
            let vars = ExtractorVars::bind(&mut tape, &p);
            let fwd = semantic_forward(&mut tape, g.features(), &support, &vars);
            let ds = graph_descriptors(&mut tape, &fwd, &vars);
            let dis = disentanglement_loss(&mut tape, &ds);
            // add a term through the embeddings so layer weights get gradient
            let s = tape.sum(fwd.embeddings);
            let s = tape.scale(s, 0.1);
            let loss = tape.add(dis, s);
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
