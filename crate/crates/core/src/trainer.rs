//! Node classifier, two-stage training (pretrain then finetune), and the
//! oversampling baselines.
//!
//! Pretraining jointly minimizes the disentanglement loss plus `beta` times
//! the edge loss over extractor and edge-predictor parameters. Finetuning
//! trains extractor and classifier on the node loss with the edge predictor
//! frozen; the augmented adjacency is rebuilt each epoch from the current
//! embeddings and treated as a constant (no gradient flows through it).

use crate::config::{ExperimentConfig, Method};
use crate::edge::{
    anchor_targets, edge_scores_between, edge_scores_tape, global_path_loss_tape,
    local_path_loss_tape, reconstruction_loss_tape, sample_pairs, synthesize_edges, EdgeMode,
    EdgePredictorParams, EdgeVars,
};
use crate::error::{Error, Result};
use crate::extractor::{
    disentanglement_loss, graph_descriptors, relation_support, semantic_forward, ExtractorConfig,
    ExtractorParams, ExtractorVars,
};
use crate::graph::{
    all_pairs_shortest_paths, partition_graph, round_half_up, Graph, ImbalancedSplit,
};
use crate::mat::Mat;
use crate::metrics::{evaluate, MetricsReport};
use crate::mixup::{apply_plan, plan_synthetic_set, MixupPlan};
use crate::nn::{affine, softmax_rows, tanh_mat, AdamConfig};
use crate::params::{group_grads, GroupOptimizer, ParamGroup};
use crate::rl::{AgentConfig, RlTraceRow, ScaleAgent};
use crate::tape::{Tape, Var};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Node classifier: affine over the concatenation of a node's own embedding
/// and its adjacency-aggregated neighborhood embedding, then a class head.
#[derive(Clone, Debug)]
pub struct ClassifierParams {
    /// F_h × 2D, D = extractor output width.
    pub hidden: Mat,
    /// m × F_h.
    pub out: Mat,
}

impl ClassifierParams {
    pub fn init(hidden_dim: usize, input_dim: usize, classes: usize, rng: &mut impl Rng) -> Self {
        ClassifierParams {
            hidden: Mat::uniform_init(hidden_dim, 2 * input_dim, 2 * input_dim, rng),
            out: Mat::uniform_init(classes, hidden_dim, hidden_dim, rng),
        }
    }
}

impl ParamGroup for ClassifierParams {
    fn named(&self) -> Vec<(String, &Mat)> {
        vec![
            ("classifier_hidden".into(), &self.hidden),
            ("classifier_out".into(), &self.out),
        ]
    }

    fn named_mut(&mut self) -> Vec<(String, &mut Mat)> {
        vec![
            ("classifier_hidden".into(), &mut self.hidden),
            ("classifier_out".into(), &mut self.out),
        ]
    }
}

/// Plain forward of the classifier: per-node class probabilities.
///
/// `embeddings` stacks real and synthetic rows; `adjacency` is the matching
/// augmented matrix.
pub fn classify_nodes(
    embeddings: &Mat,
    adjacency: &Mat,
    params: &ClassifierParams,
) -> Result<Mat> {
    if adjacency.rows() != embeddings.rows() || adjacency.cols() != embeddings.rows() {
        return Err(Error::Dimension(format!(
            "classify: adjacency {:?} does not match {} embedding rows",
            adjacency.shape(),
            embeddings.rows()
        )));
    }
    let aggregated = adjacency.matmul(embeddings);
    let mut cat = Mat::zeros(embeddings.rows(), 2 * embeddings.cols());
    for i in 0..embeddings.rows() {
        cat.row_mut(i)[..embeddings.cols()].copy_from_slice(embeddings.row(i));
        cat.row_mut(i)[embeddings.cols()..].copy_from_slice(aggregated.row(i));
    }
    let h = tanh_mat(&affine(&cat, &params.hidden, None)?);
    let logits = affine(&h, &params.out, None)?;
    Ok(softmax_rows(&logits))
}

/// Mean cross-entropy of predicted probabilities over the nodes in `vn`.
/// Every listed node must carry a label.
pub fn node_loss(y_hat: &Mat, labels: &[Option<usize>], vn: &[usize]) -> Result<f64> {
    if vn.is_empty() {
        return Err(Error::Domain("node loss over an empty node set".into()));
    }
    let mut total = 0.0;
    for &v in vn {
        let y = labels.get(v).copied().flatten().ok_or_else(|| {
            Error::Domain(format!("node {v} in the loss set has no label"))
        })?;
        total += -(y_hat.get(v, y).max(1e-300)).ln();
    }
    Ok(total / vn.len() as f64)
}

/// Per-class upsampling scales snapped to the kappa grid:
/// `alpha_init(c) = round_to_grid(N / (m·|C_c|))` with `|C_c|` the class's
/// labeled size over the whole graph.
pub fn initial_scales(
    graph: &Graph,
    minority: &std::collections::BTreeSet<usize>,
    grid: f64,
) -> BTreeMap<usize, f64> {
    let counts = graph.class_counts();
    let m = counts.len().max(1) as f64;
    minority
        .iter()
        .map(|&c| {
            let size = counts.get(&c).copied().unwrap_or(1).max(1) as f64;
            let raw = graph.n_nodes() as f64 / (m * size);
            let snapped = if grid > 0.0 {
                (raw / grid).round() * grid
            } else {
                raw
            };
            (c, snapped)
        })
        .collect()
}

/// One finetuning epoch's record.
#[derive(Clone, Debug)]
pub struct EpochRecord {
    pub epoch: usize,
    pub node_loss: f64,
    pub val_macro_f1: f64,
    pub kappa: f64,
    pub mean_scale: f64,
}

/// One pretraining epoch's record.
#[derive(Clone, Debug)]
pub struct PretrainRecord {
    pub epoch: usize,
    pub dis_loss: f64,
    pub edge_loss: f64,
}

/// Final trained parameters of a run.
#[derive(Clone, Debug)]
pub struct Models {
    pub extractor: ExtractorParams,
    pub edge: Option<EdgePredictorParams>,
    pub classifier: ClassifierParams,
}

/// Everything produced by one training run.
#[derive(Clone, Debug)]
pub struct TrainRun {
    pub seed: u64,
    pub method: Method,
    pub pretrain_history: Vec<PretrainRecord>,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    /// Validation/test reports at the best-validation epoch.
    pub val: MetricsReport,
    pub test: MetricsReport,
    pub rl_trace: Vec<RlTraceRow>,
    pub models: Models,
}

/// Deterministic per-purpose sub-seeds derived from the run seed.
fn sub_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E3779B97F4A7C15))
        .wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

const STREAM_INIT: u64 = 0;
const STREAM_PARTITION: u64 = 1;
const STREAM_PAIRS: u64 = 2;
const STREAM_CLASSIFIER: u64 = 3;
const STREAM_MIXUP: u64 = 4;
const STREAM_RL: u64 = 5;

fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    crate::nn::seeded_rng(sub_seed(seed, stream))
}

fn adam_config(cfg: &ExperimentConfig) -> AdamConfig {
    AdamConfig {
        lr: cfg.lr,
        weight_decay: cfg.weight_decay,
        ..AdamConfig::default()
    }
}

fn extractor_config(cfg: &ExperimentConfig) -> ExtractorConfig {
    ExtractorConfig {
        relations: cfg.relations,
        hidden_dim: cfg.hidden_dim,
        layers: cfg.layers,
    }
}

/// Pretrains extractor and edge predictor on `L_dis + beta·L_edge`.
pub fn pretrain(
    graph: &Graph,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<(ExtractorParams, EdgePredictorParams, Vec<PretrainRecord>)> {
    let mut init_rng = seeded(seed, STREAM_INIT);
    let ex_cfg = extractor_config(cfg);
    let mut extractor = ExtractorParams::init(&ex_cfg, graph.feature_dim(), &mut init_rng);
    let clusters = cfg.clusters_for(graph.n_classes());
    let mut edge = EdgePredictorParams::init(
        cfg.hidden_dim,
        ex_cfg.output_dim(),
        clusters,
        &mut init_rng,
    );

    let support = relation_support(graph);
    let dists = all_pairs_shortest_paths(graph);
    let partition = partition_graph(graph, clusters.min(graph.n_nodes()), sub_seed(seed, STREAM_PARTITION))?;
    let targets = anchor_targets(&dists, &partition);
    let n_pairs = cfg.pair_samples_for(graph.n_nodes());
    let mut pair_rng = seeded(seed, STREAM_PAIRS);

    let mut opt_ex = GroupOptimizer::new(&extractor, adam_config(cfg));
    let mut opt_edge = GroupOptimizer::new(&edge, adam_config(cfg));

    let mut history = Vec::with_capacity(cfg.pretrain_epochs);
    for epoch in 0..cfg.pretrain_epochs {
        let sample = sample_pairs(&dists, n_pairs, &mut pair_rng)?;
        let mut tape = Tape::new();
        let ex_vars = ExtractorVars::bind(&mut tape, &extractor);
        let edge_vars = EdgeVars::bind(&mut tape, &edge);

        let fwd = semantic_forward(&mut tape, graph.features(), &support, &ex_vars);
        let descriptors = graph_descriptors(&mut tape, &fwd, &ex_vars);
        let dis = disentanglement_loss(&mut tape, &descriptors);

        let (z, scores) = edge_scores_tape(&mut tape, fwd.embeddings, edge_vars.z_proj);
        let mut edge_loss = reconstruction_loss_tape(&mut tape, scores, graph.adjacency());
        if !cfg.disable_local {
            let local =
                local_path_loss_tape(&mut tape, z, &sample, edge_vars.local_w, edge_vars.local_b);
            edge_loss = tape.add(edge_loss, local);
        }
        if !cfg.disable_global {
            let global = global_path_loss_tape(
                &mut tape,
                z,
                &targets,
                edge_vars.global_w,
                edge_vars.global_b,
            );
            edge_loss = tape.add(edge_loss, global);
        }

        let weighted_edge = tape.scale(edge_loss, cfg.beta);
        let total = tape.add(dis, weighted_edge);

        let dis_value = tape.scalar(dis);
        let edge_value = tape.scalar(edge_loss);
        if !tape.scalar(total).is_finite() {
            return Err(Error::Numeric {
                tensor: format!("pretrain loss at epoch {epoch} (dis {dis_value}, edge {edge_value})"),
            });
        }

        let grads = tape.backward(total);
        opt_ex.step(&mut extractor, &group_grads(&grads, &ex_vars.ordered))?;
        opt_edge.step(&mut edge, &group_grads(&grads, &edge_vars.ordered))?;

        history.push(PretrainRecord {
            epoch,
            dis_loss: dis_value,
            edge_loss: edge_value,
        });
    }
    Ok((extractor, edge, history))
}

/// Where the augmented adjacency for synthetic nodes comes from.
enum EdgeSource<'a> {
    /// Frozen edge predictor scores, continuous or thresholded.
    Predictor {
        params: &'a EdgePredictorParams,
        mode: EdgeMode,
        eta: f64,
    },
    /// Each synthetic node copies its source node's adjacency column.
    CopySourceColumn,
}

/// Builds the augmented adjacency for a plan of synthetic nodes.
fn augmented_adjacency(
    graph: &Graph,
    plan: &MixupPlan,
    embeddings: &Mat,
    source: &EdgeSource,
) -> Result<Mat> {
    let n = graph.n_nodes();
    match source {
        EdgeSource::Predictor { params, mode, eta } => {
            let synth = apply_plan(embeddings, plan)?;
            let scores = edge_scores_between(&synth, embeddings, params);
            synthesize_edges(graph.adjacency(), &scores, *mode, *eta)
        }
        EdgeSource::CopySourceColumn => {
            let s = plan.len();
            let mut out = Mat::zeros(n + s, n + s);
            for i in 0..n {
                for j in 0..n {
                    out.set(i, j, graph.adjacency().get(i, j));
                }
            }
            for (k, pair) in plan.pairs.iter().enumerate() {
                for u in 0..n {
                    let v = graph.adjacency().get(pair.source, u);
                    out.set(n + k, u, v);
                    out.set(u, n + k, v);
                }
            }
            Ok(out)
        }
    }
}

/// Classifier forward on the tape; returns the logits over all rows.
fn classify_tape(
    tape: &mut Tape,
    embeddings_all: Var,
    adjacency: &Mat,
    hidden: Var,
    out: Var,
) -> Var {
    let adj = tape.leaf(adjacency.clone());
    let aggregated = tape.matmul(adj, embeddings_all);
    let cat = tape.concat_cols(embeddings_all, aggregated);
    let lin = tape.matmul_nt(cat, hidden);
    let h = tape.tanh(lin);
    tape.matmul_nt(h, out)
}

struct FinetuneSpec<'a> {
    pretrained: Option<(ExtractorParams, EdgePredictorParams)>,
    edge_from_predictor: bool,
    rl_enabled: bool,
    class_weights: Option<Vec<f64>>,
    /// When false, no synthetic nodes are generated at all.
    mixup: bool,
    pretrain_history: Vec<PretrainRecord>,
    method: Method,
    graph: &'a Graph,
    split: &'a ImbalancedSplit,
}

/// Shared finetuning loop for graphmixup variants, embed-SMOTE, and the
/// plain supervised baselines (with `mixup: false`).
fn finetune(spec: FinetuneSpec, cfg: &ExperimentConfig, seed: u64) -> Result<TrainRun> {
    let graph = spec.graph;
    let split = spec.split;
    let m = graph.n_classes();
    if m < 2 {
        return Err(Error::Domain("training needs at least two classes".into()));
    }

    let ex_cfg = extractor_config(cfg);
    let (mut extractor, edge) = match spec.pretrained {
        Some((ex, ed)) => (ex, Some(ed)),
        None => {
            let mut rng = seeded(seed, STREAM_INIT);
            (
                ExtractorParams::init(&ex_cfg, graph.feature_dim(), &mut rng),
                None,
            )
        }
    };
    let mut classifier = ClassifierParams::init(
        cfg.hidden_dim,
        ex_cfg.output_dim(),
        m,
        &mut seeded(seed, STREAM_CLASSIFIER),
    );

    let support = relation_support(graph);
    let mut opt_ex = GroupOptimizer::new(&extractor, adam_config(cfg));
    let mut opt_cl = GroupOptimizer::new(&classifier, adam_config(cfg));

    let alpha_init = match cfg.fixed_scale {
        Some(s) => split
            .minority_classes
            .iter()
            .map(|&c| (c, s))
            .collect::<BTreeMap<_, _>>(),
        None => initial_scales(graph, &split.minority_classes, cfg.delta_kappa),
    };
    let train_counts: BTreeMap<usize, usize> = split
        .minority_classes
        .iter()
        .map(|&c| (c, split.per_class_train_count.get(&c).copied().unwrap_or(0)))
        .collect();
    let mut agent = if spec.rl_enabled && spec.mixup && !split.minority_classes.is_empty() {
        Some(ScaleAgent::new(
            alpha_init.clone(),
            train_counts,
            AgentConfig {
                delta_kappa: cfg.delta_kappa,
                gamma: cfg.gamma_discount,
                epsilon: cfg.epsilon,
                epsilon_min: cfg.epsilon_min,
                epsilon_decay: cfg.epsilon_decay,
                warmup: cfg.warmup,
                t_kappa: cfg.t_kappa_value(),
            },
        ))
    } else {
        None
    };
    let mut scales = alpha_init;

    let mut mixup_rng = seeded(seed, STREAM_MIXUP);
    let mut rl_rng = seeded(seed, STREAM_RL);

    let train_labels: Vec<usize> = split
        .train
        .iter()
        .map(|&v| graph.label(v).expect("train nodes are labeled"))
        .collect();
    let val_truth: Vec<usize> = split
        .val
        .iter()
        .map(|&v| graph.label(v).expect("val nodes are labeled"))
        .collect();
    let test_truth: Vec<usize> = split
        .test
        .iter()
        .map(|&v| graph.label(v).expect("test nodes are labeled"))
        .collect();

    let mut history: Vec<EpochRecord> = Vec::new();
    let mut best: Option<(f64, usize, MetricsReport, MetricsReport)> = None;
    let mut epochs_since_best = 0usize;

    for epoch in 0..cfg.max_epochs {
        let mut tape = Tape::new();
        let ex_vars = ExtractorVars::bind(&mut tape, &extractor);
        let hidden_var = tape.leaf(classifier.hidden.clone());
        let out_var = tape.leaf(classifier.out.clone());

        let fwd = semantic_forward(&mut tape, graph.features(), &support, &ex_vars);
        let embeddings_value = tape.value(fwd.embeddings).clone();

        let plan = if spec.mixup {
            plan_synthetic_set(&embeddings_value, graph, split, &scales, &mut mixup_rng)?
        } else {
            MixupPlan::default()
        };

        let adjacency = if plan.is_empty() {
            graph.adjacency().clone()
        } else {
            let source = if spec.edge_from_predictor {
                EdgeSource::Predictor {
                    params: edge.as_ref().expect("edge predictor required"),
                    mode: cfg.method.edge_mode(),
                    eta: cfg.eta,
                }
            } else {
                EdgeSource::CopySourceColumn
            };
            augmented_adjacency(graph, &plan, &embeddings_value, &source)?
        };

        let all_rows = if plan.is_empty() {
            fwd.embeddings
        } else {
            let sources: Vec<usize> = plan.pairs.iter().map(|p| p.source).collect();
            let neighbors: Vec<usize> = plan.pairs.iter().map(|p| p.neighbor).collect();
            let keep: Vec<f64> = plan.pairs.iter().map(|p| 1.0 - p.blend).collect();
            let take: Vec<f64> = plan.pairs.iter().map(|p| p.blend).collect();
            let src = tape.gather_rows(fwd.embeddings, &sources);
            let nnr = tape.gather_rows(fwd.embeddings, &neighbors);
            let a = tape.row_scale(src, &keep);
            let b = tape.row_scale(nnr, &take);
            let synth = tape.add(a, b);
            tape.vstack(fwd.embeddings, synth)
        };

        let logits = classify_tape(&mut tape, all_rows, &adjacency, hidden_var, out_var);

        let mut vn: Vec<usize> = split.train.clone();
        vn.extend(graph.n_nodes()..graph.n_nodes() + plan.len());
        let mut vn_labels = train_labels.clone();
        vn_labels.extend(&plan.labels);

        let train_logits = tape.gather_rows(logits, &vn);
        let loss = tape.softmax_ce(train_logits, &vn_labels, spec.class_weights.as_deref());
        let loss_value = tape.scalar(loss);
        if !loss_value.is_finite() {
            return Err(Error::Numeric {
                tensor: format!("node loss at epoch {epoch}"),
            });
        }

        // evaluate from this forward pass before updating parameters
        let probs = softmax_rows(tape.value(logits));
        let val_report = evaluate_rows(&probs, &split.val, &val_truth)?;
        let test_report = evaluate_rows(&probs, &split.test, &test_truth)?;

        let grads = tape.backward(loss);
        opt_ex.step(&mut extractor, &group_grads(&grads, &ex_vars.ordered))?;
        opt_cl.step(
            &mut classifier,
            &group_grads(&grads, &[hidden_var, out_var]),
        )?;

        let kappa = agent.as_ref().map_or(0.0, ScaleAgent::kappa);
        let mean_scale = if scales.is_empty() {
            0.0
        } else {
            scales.values().sum::<f64>() / scales.len() as f64
        };
        history.push(EpochRecord {
            epoch,
            node_loss: loss_value,
            val_macro_f1: val_report.macro_f1,
            kappa,
            mean_scale,
        });

        let improved = best
            .as_ref()
            .map_or(true, |(bf, ..)| val_report.macro_f1 > *bf);
        if improved {
            best = Some((val_report.macro_f1, epoch, val_report, test_report));
            epochs_since_best = 0;
        } else {
            epochs_since_best += 1;
            if epochs_since_best >= cfg.patience {
                break;
            }
        }

        if let Some(ag) = agent.as_mut() {
            scales = ag.rl_step(history.last().unwrap().val_macro_f1, epoch, &mut rl_rng);
        }
    }

    let (_, best_epoch, val, test) =
        best.ok_or_else(|| Error::Domain("no epochs were trained".into()))?;
    Ok(TrainRun {
        seed,
        method: cfg.method,
        pretrain_history: spec.pretrain_history,
        history,
        best_epoch,
        val,
        test,
        rl_trace: agent.map(|a| a.trace().to_vec()).unwrap_or_default(),
        models: Models {
            extractor,
            edge,
            classifier,
        },
    })
}

/// Evaluation over a node-id subset of the probability matrix.
fn evaluate_rows(probs: &Mat, ids: &[usize], truth: &[usize]) -> Result<MetricsReport> {
    let mut rows = Vec::with_capacity(ids.len());
    for &v in ids {
        rows.push(probs.row(v).to_vec());
    }
    evaluate(&Mat::from_rows(&rows)?, truth)
}

/// Full two-stage training of a graphmixup variant.
pub fn train_graphmixup(
    graph: &Graph,
    split: &ImbalancedSplit,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<TrainRun> {
    if !cfg.method.is_graphmixup() {
        return Err(Error::Usage(format!(
            "train_graphmixup called with method {}",
            cfg.method
        )));
    }
    let (extractor, edge, pretrain_history) = pretrain(graph, cfg, seed)?;
    let rl_enabled = !cfg.disable_rl && cfg.method != Method::GraphmixupFix;
    finetune(
        FinetuneSpec {
            pretrained: Some((extractor, edge)),
            edge_from_predictor: true,
            rl_enabled,
            class_weights: None,
            mixup: true,
            pretrain_history,
            method: cfg.method,
            graph,
            split,
        },
        cfg,
        seed,
    )
}

/// Duplicate-or-interpolate plans for the input-space baselines.
fn input_space_plan(
    graph: &Graph,
    split: &ImbalancedSplit,
    scales: &BTreeMap<usize, f64>,
    interpolate: bool,
    rng: &mut impl Rng,
) -> Result<MixupPlan> {
    if interpolate {
        // SMOTE: nearest neighbor and blend in raw feature space
        plan_synthetic_set(graph.features(), graph, split, scales, rng)
    } else {
        // plain oversampling: every synthetic node is an exact copy
        let mut plan = MixupPlan::default();
        for &class in &split.minority_classes {
            let alpha = *scales.get(&class).ok_or_else(|| {
                Error::Domain(format!("no upsampling scale for minority class {class}"))
            })?;
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
                plan.pairs.push(crate::mixup::SourcePair {
                    source: v,
                    neighbor: v,
                    blend: 0.0,
                });
                plan.labels.push(class);
            }
        }
        Ok(plan)
    }
}

/// Builds the augmented input graph for oversample/SMOTE: synthetic features
/// plus edges copied from each synthetic node's source.
fn augment_input_graph(graph: &Graph, plan: &MixupPlan) -> Result<(Graph, Vec<usize>)> {
    let feats = apply_plan(graph.features(), plan)?;
    let mut edges = Vec::new();
    for (k, pair) in plan.pairs.iter().enumerate() {
        let new_id = graph.n_nodes() + k;
        for &u in graph.neighbors(pair.source) {
            edges.push((new_id, u));
        }
    }
    let augmented = graph.with_appended_nodes(&feats, &plan.labels, &edges)?;
    let new_ids: Vec<usize> = (graph.n_nodes()..graph.n_nodes() + plan.len()).collect();
    Ok((augmented, new_ids))
}

/// Runs one of the oversampling/reweighting baselines.
pub fn run_baseline(
    graph: &Graph,
    split: &ImbalancedSplit,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<TrainRun> {
    let base_spec = |graph, split| FinetuneSpec {
        pretrained: None,
        edge_from_predictor: false,
        rl_enabled: false,
        class_weights: None,
        mixup: false,
        pretrain_history: Vec::new(),
        method: cfg.method,
        graph,
        split,
    };
    match cfg.method {
        Method::Origin => finetune(base_spec(graph, split), cfg, seed),
        Method::Reweight => {
            let m = graph.n_classes();
            let mut weights = vec![1.0; m];
            for (&class, &count) in &split.per_class_train_count {
                weights[class] = cfg.majority_count as f64 / count.max(1) as f64;
            }
            let mut spec = base_spec(graph, split);
            spec.class_weights = Some(weights);
            finetune(spec, cfg, seed)
        }
        Method::Oversample | Method::Smote => {
            let scales = match cfg.fixed_scale {
                Some(s) => split.minority_classes.iter().map(|&c| (c, s)).collect(),
                None => initial_scales(graph, &split.minority_classes, cfg.delta_kappa),
            };
            let mut rng = seeded(seed, STREAM_MIXUP);
            let plan = input_space_plan(
                graph,
                split,
                &scales,
                cfg.method == Method::Smote,
                &mut rng,
            )?;
            let (augmented, new_ids) = augment_input_graph(graph, &plan)?;
            let mut aug_split = split.clone();
            aug_split.train.extend(new_ids);
            finetune(base_spec(&augmented, &aug_split), cfg, seed)
                .map(|mut run| {
                    // report against the original graph's node count
                    run.method = cfg.method;
                    run
                })
        }
        Method::EmbedSmote => {
            let spec = FinetuneSpec {
                pretrained: None,
                edge_from_predictor: false,
                rl_enabled: false,
                class_weights: None,
                mixup: true,
                pretrain_history: Vec::new(),
                method: cfg.method,
                graph,
                split,
            };
            finetune(spec, cfg, seed)
        }
        other => Err(Error::Usage(format!(
            "run_baseline called with method {other}"
        ))),
    }
}

/// Dispatches a method to its training routine.
pub fn run_method(
    graph: &Graph,
    split: &ImbalancedSplit,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<TrainRun> {
    if cfg.method.is_graphmixup() {
        train_graphmixup(graph, split, cfg, seed)
    } else {
        run_baseline(graph, split, cfg, seed)
    }
}
