//! Per-loss gradient verification on a bundled 10-node fixture graph.
//!
//! Each named training loss is rebuilt as a closure over a flattened
//! parameter vector and compared against central finite differences. The
//! fixture keeps descriptor norms well away from zero; near the origin the
//! cosine loss's curvature would dominate the finite-difference error.

use crate::config::ExperimentConfig;
use crate::edge::{
    anchor_targets, edge_scores_between, edge_scores_tape, global_path_loss_tape,
    local_path_loss_tape, reconstruction_loss_tape, sample_pairs, synthesize_edges,
    EdgePredictorParams, EdgeVars, PairSample,
};
use crate::error::{Error, Result};
use crate::extractor::{
    disentanglement_loss, graph_descriptors, relation_support, semantic_forward, ExtractorConfig,
    ExtractorParams, ExtractorVars,
};
use crate::graph::{all_pairs_shortest_paths, make_imbalanced_split, partition_graph, Graph};
use crate::mat::Mat;
use crate::mixup::{apply_plan, plan_synthetic_set, MixupPlan};
use crate::params::ParamGroup;
use crate::sbm::{generate_sbm, SbmConfig};
use crate::tape::{Tape, Var};
use crate::trainer::ClassifierParams;
use std::collections::BTreeSet;

/// Maximum relative error accepted for every loss.
pub const GRAD_TOLERANCE: f64 = 1e-4;
/// Central-difference step.
pub const GRAD_EPSILON: f64 = 1e-5;

/// Result of one loss's check.
#[derive(Clone, Debug)]
pub struct LossCheck {
    pub loss: String,
    pub max_rel_error: f64,
    /// Parameter tensor holding the worst coordinate.
    pub worst_tensor: String,
    pub passed: bool,
}

/// Full report over the five training losses.
#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub checks: Vec<LossCheck>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// The bundled fixture: a dense 10-node two-block graph with an imbalanced
/// split. Deterministic.
pub fn fixture_graph() -> Graph {
    generate_sbm(&SbmConfig {
        nodes: 10,
        classes: 2,
        p_intra: 0.7,
        p_inter: 0.25,
        feat_dim: 4,
        noise: 0.8,
        separation: 1.2,
        seed: 900,
    })
    .expect("fixture parameters are valid")
}

/// Hyperparameters used for the fixture models; narrow enough to keep the
/// check fast, wide enough for healthy descriptor norms.
pub fn fixture_config() -> ExperimentConfig {
    ExperimentConfig {
        relations: 2,
        hidden_dim: 16,
        layers: 1,
        clusters: 2,
        pair_samples: 16,
        minority_classes: BTreeSet::from([1]),
        ..ExperimentConfig::default()
    }
}

struct Fixture {
    graph: Graph,
    extractor: ExtractorParams,
    edge: EdgePredictorParams,
    classifier: ClassifierParams,
    support: Vec<(usize, usize)>,
    sample: PairSample,
    targets: Mat,
    plan: MixupPlan,
    adjacency_aug: Mat,
    vn: Vec<usize>,
    vn_labels: Vec<usize>,
}

fn build_fixture(cfg: &ExperimentConfig) -> Result<Fixture> {
    let graph = fixture_graph();
    let mut rng = crate::nn::seeded_rng(77);
    let ex_cfg = ExtractorConfig {
        relations: cfg.relations,
        hidden_dim: cfg.hidden_dim,
        layers: cfg.layers,
    };
    let extractor = ExtractorParams::init(&ex_cfg, graph.feature_dim(), &mut rng);
    let clusters = cfg.clusters_for(graph.n_classes());
    let edge = EdgePredictorParams::init(cfg.hidden_dim, ex_cfg.output_dim(), clusters, &mut rng);
    let classifier =
        ClassifierParams::init(cfg.hidden_dim, ex_cfg.output_dim(), graph.n_classes(), &mut rng);

    let support = relation_support(&graph);
    let dists = all_pairs_shortest_paths(&graph);
    let partition = partition_graph(&graph, clusters, 3)?;
    let targets = anchor_targets(&dists, &partition);
    let sample = sample_pairs(&dists, cfg.pair_samples_for(graph.n_nodes()).min(16), &mut rng)?;

    let split = make_imbalanced_split(&graph, &cfg.minority_classes, 0.5, 3, 0.5, 5)?;

    // freeze the mixup plan and augmented adjacency at the base parameters:
    // the node loss treats both as constants of the epoch
    let embeddings = {
        let mut tape = Tape::new();
        let vars = ExtractorVars::bind(&mut tape, &extractor);
        let fwd = semantic_forward(&mut tape, graph.features(), &support, &vars);
        tape.value(fwd.embeddings).clone()
    };
    let scales = std::collections::BTreeMap::from([(1usize, 1.0f64)]);
    let mut plan_rng = crate::nn::seeded_rng(78);
    let plan = plan_synthetic_set(&embeddings, &graph, &split, &scales, &mut plan_rng)?;
    let synth = apply_plan(&embeddings, &plan)?;
    let scores = edge_scores_between(&synth, &embeddings, &edge);
    let adjacency_aug = synthesize_edges(
        graph.adjacency(),
        &scores,
        crate::edge::EdgeMode::Continuous,
        cfg.eta,
    )?;

    let mut vn = split.train.clone();
    vn.extend(graph.n_nodes()..graph.n_nodes() + plan.len());
    let mut vn_labels: Vec<usize> = split
        .train
        .iter()
        .map(|&v| graph.label(v).expect("labeled"))
        .collect();
    vn_labels.extend(&plan.labels);

    Ok(Fixture {
        graph,
        extractor,
        edge,
        classifier,
        support,
        sample,
        targets,
        plan,
        adjacency_aug,
        vn,
        vn_labels,
    })
}

/// Flattens groups into one parameter vector with names.
fn flatten(groups: &[&dyn ParamGroup]) -> (Vec<String>, Vec<Mat>) {
    let mut names = Vec::new();
    let mut mats = Vec::new();
    for g in groups {
        for (n, m) in g.named() {
            names.push(n);
            mats.push(m.clone());
        }
    }
    (names, mats)
}

/// Finite-difference check returning the max error and the tensor holding
/// the worst coordinate. `corrupt` perturbs that tensor's analytic gradient
/// (negative-control hook).
fn check_loss<F>(
    mut f: F,
    names: &[String],
    params: &mut [Mat],
    corrupt: Option<&str>,
) -> (f64, String)
where
    F: FnMut(&[Mat]) -> (f64, Vec<Mat>),
{
    let (_, mut analytic) = f(params);
    if let Some(target) = corrupt {
        if let Some(idx) = names.iter().position(|n| n == target) {
            let delta = 0.05;
            let g = &mut analytic[idx];
            for v in g.data_mut() {
                *v += delta;
            }
        }
    }
    let mut max_err = 0.0;
    let mut worst = names.first().cloned().unwrap_or_default();
    for t in 0..params.len() {
        for k in 0..params[t].data().len() {
            let orig = params[t].data()[k];
            params[t].data_mut()[k] = orig + GRAD_EPSILON;
            let (f_plus, _) = f(params);
            params[t].data_mut()[k] = orig - GRAD_EPSILON;
            let (f_minus, _) = f(params);
            params[t].data_mut()[k] = orig;
            let fd = (f_plus - f_minus) / (2.0 * GRAD_EPSILON);
            let an = analytic[t].data()[k];
            let err = (fd - an).abs() / (fd.abs() + an.abs() + 1e-3);
            if err > max_err {
                max_err = err;
                worst = names[t].clone();
            }
        }
    }
    (max_err, worst)
}

fn load_groups(flat: &[Mat], extractor: &mut ExtractorParams, edge: Option<&mut EdgePredictorParams>, classifier: Option<&mut ClassifierParams>) {
    let mut idx = 0;
    {
        let mut named = extractor.named_mut();
        for (_, dst) in named.iter_mut() {
            **dst = flat[idx].clone();
            idx += 1;
        }
    }
    if let Some(e) = edge {
        let mut named = e.named_mut();
        for (_, dst) in named.iter_mut() {
            **dst = flat[idx].clone();
            idx += 1;
        }
    }
    if let Some(c) = classifier {
        let mut named = c.named_mut();
        for (_, dst) in named.iter_mut() {
            **dst = flat[idx].clone();
            idx += 1;
        }
    }
    assert_eq!(idx, flat.len(), "parameter count mismatch");
}

/// Runs grad checks for every training loss on the bundled fixture.
/// `corrupt` (loss name, tensor name) injects an error for negative control.
pub fn run_grad_checks(
    cfg: &ExperimentConfig,
    corrupt: Option<(&str, &str)>,
) -> Result<GradCheckReport> {
    let fx = build_fixture(cfg)?;
    let mut checks = Vec::new();

    // L_dis: extractor only
    {
        let mut extractor = fx.extractor.clone();
        let (names, mut flat) = flatten(&[&extractor]);
        let graph = &fx.graph;
        let support = &fx.support;
        let f = |p: &[Mat]| {
            load_groups(p, &mut extractor, None, None);
            let mut tape = Tape::new();
            let vars = ExtractorVars::bind(&mut tape, &extractor);
            let fwd = semantic_forward(&mut tape, graph.features(), support, &vars);
            let ds = graph_descriptors(&mut tape, &fwd, &vars);
            let loss = disentanglement_loss(&mut tape, &ds);
            let val = tape.scalar(loss);
            let grads = tape.backward(loss);
            (
                val,
                vars.ordered.iter().map(|&v| grads.get(v).clone()).collect(),
            )
        };
        let corrupt_tensor = corrupt.filter(|(l, _)| *l == "L_dis").map(|(_, t)| t);
        let (err, worst) = check_loss(f, &names, &mut flat, corrupt_tensor);
        checks.push(LossCheck {
            loss: "L_dis".into(),
            max_rel_error: err,
            worst_tensor: worst,
            passed: err < GRAD_TOLERANCE,
        });
    }

    // the three edge losses: extractor + edge predictor jointly
    for loss_name in ["L_rec", "L_local", "L_global"] {
        let mut extractor = fx.extractor.clone();
        let mut edge = fx.edge.clone();
        let (names, mut flat) = flatten(&[&extractor, &edge]);
        let graph = &fx.graph;
        let support = &fx.support;
        let sample = &fx.sample;
        let targets = &fx.targets;
        let f = |p: &[Mat]| {
            load_groups(p, &mut extractor, Some(&mut edge), None);
            let mut tape = Tape::new();
            let ex_vars = ExtractorVars::bind(&mut tape, &extractor);
            let edge_vars = EdgeVars::bind(&mut tape, &edge);
            let fwd = semantic_forward(&mut tape, graph.features(), support, &ex_vars);
            let (z, scores) = edge_scores_tape(&mut tape, fwd.embeddings, edge_vars.z_proj);
            let loss = match loss_name {
                "L_rec" => reconstruction_loss_tape(&mut tape, scores, graph.adjacency()),
                "L_local" => {
                    local_path_loss_tape(&mut tape, z, sample, edge_vars.local_w, edge_vars.local_b)
                }
                _ => global_path_loss_tape(
                    &mut tape,
                    z,
                    targets,
                    edge_vars.global_w,
                    edge_vars.global_b,
                ),
            };
            let val = tape.scalar(loss);
            let grads = tape.backward(loss);
            let mut gs: Vec<Mat> = ex_vars
                .ordered
                .iter()
                .map(|&v| grads.get(v).clone())
                .collect();
            gs.extend(edge_vars.ordered.iter().map(|&v| grads.get(v).clone()));
            (val, gs)
        };
        let corrupt_tensor = corrupt.filter(|(l, _)| *l == loss_name).map(|(_, t)| t);
        let (err, worst) = check_loss(f, &names, &mut flat, corrupt_tensor);
        checks.push(LossCheck {
            loss: loss_name.into(),
            max_rel_error: err,
            worst_tensor: worst,
            passed: err < GRAD_TOLERANCE,
        });
    }

    // L_node: extractor + classifier with frozen plan and adjacency
    {
        let mut extractor = fx.extractor.clone();
        let mut classifier = fx.classifier.clone();
        let (names, mut flat) = flatten(&[&extractor, &classifier]);
        let graph = &fx.graph;
        let support = &fx.support;
        let plan = &fx.plan;
        let adjacency = &fx.adjacency_aug;
        let vn = &fx.vn;
        let vn_labels = &fx.vn_labels;
        let f = |p: &[Mat]| {
            load_groups(p, &mut extractor, None, Some(&mut classifier));
            let mut tape = Tape::new();
            let ex_vars = ExtractorVars::bind(&mut tape, &extractor);
            let hidden = tape.leaf(classifier.hidden.clone());
            let out = tape.leaf(classifier.out.clone());
            let fwd = semantic_forward(&mut tape, graph.features(), support, &ex_vars);
            let sources: Vec<usize> = plan.pairs.iter().map(|p| p.source).collect();
            let neighbors: Vec<usize> = plan.pairs.iter().map(|p| p.neighbor).collect();
            let keep: Vec<f64> = plan.pairs.iter().map(|p| 1.0 - p.blend).collect();
            let take: Vec<f64> = plan.pairs.iter().map(|p| p.blend).collect();
            let src = tape.gather_rows(fwd.embeddings, &sources);
            let nnr = tape.gather_rows(fwd.embeddings, &neighbors);
            let a = tape.row_scale(src, &keep);
            let b = tape.row_scale(nnr, &take);
            let synth = tape.add(a, b);
            let all = tape.vstack(fwd.embeddings, synth);
            let adj = tape.leaf(adjacency.clone());
            let agg = tape.matmul(adj, all);
            let cat = tape.concat_cols(all, agg);
            let lin = tape.matmul_nt(cat, hidden);
            let h = tape.tanh(lin);
            let logits = tape.matmul_nt(h, out);
            let picked = tape.gather_rows(logits, vn);
            let loss = tape.softmax_ce(picked, vn_labels, None);
            let val = tape.scalar(loss);
            let grads = tape.backward(loss);
            let mut gs: Vec<Mat> = ex_vars
                .ordered
                .iter()
                .map(|&v| grads.get(v).clone())
                .collect();
            gs.push(grads.get(hidden).clone());
            gs.push(grads.get(out).clone());
            (val, gs)
        };
        let corrupt_tensor = corrupt.filter(|(l, _)| *l == "L_node").map(|(_, t)| t);
        let (err, worst) = check_loss(f, &names, &mut flat, corrupt_tensor);
        checks.push(LossCheck {
            loss: "L_node".into(),
            max_rel_error: err,
            worst_tensor: worst,
            passed: err < GRAD_TOLERANCE,
        });
    }

    Ok(GradCheckReport { checks })
}

/// Convenience entry that reports a corrupted run as an error naming the
/// responsible tensor.
pub fn verify_gradients(cfg: &ExperimentConfig) -> Result<GradCheckReport> {
    let report = run_grad_checks(cfg, None)?;
    if report.passed() {
        Ok(report)
    } else {
        let failing: Vec<String> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} (worst tensor {})", c.loss, c.worst_tensor))
            .collect();
        Err(Error::Numeric {
            tensor: failing.join(", "),
        })
    }
}
