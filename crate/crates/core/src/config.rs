//! Experiment configuration: a flat `key=value` text format with hard errors
//! on unknown keys, plus validation of ranges and method/flag compatibility.

use crate::edge::EdgeMode;
use crate::error::{Error, Result};
use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

/// Training/evaluation strategies selectable from the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    GraphmixupC,
    GraphmixupB,
    GraphmixupFix,
    Origin,
    Oversample,
    Reweight,
    Smote,
    EmbedSmote,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::GraphmixupC,
        Method::GraphmixupB,
        Method::GraphmixupFix,
        Method::Origin,
        Method::Oversample,
        Method::Reweight,
        Method::Smote,
        Method::EmbedSmote,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::GraphmixupC => "graphmixup_c",
            Method::GraphmixupB => "graphmixup_b",
            Method::GraphmixupFix => "graphmixup_fix",
            Method::Origin => "origin",
            Method::Oversample => "oversample",
            Method::Reweight => "reweight",
            Method::Smote => "smote",
            Method::EmbedSmote => "embed_smote",
        }
    }

    pub fn is_graphmixup(self) -> bool {
        matches!(
            self,
            Method::GraphmixupC | Method::GraphmixupB | Method::GraphmixupFix
        )
    }

    pub fn is_baseline(self) -> bool {
        !self.is_graphmixup()
    }

    /// Methods that consume an upsampling scale.
    pub fn uses_scales(self) -> bool {
        !matches!(self, Method::Origin | Method::Reweight)
    }

    /// Edge synthesis mode for graphmixup methods; Fix uses continuous edges.
    pub fn edge_mode(self) -> EdgeMode {
        match self {
            Method::GraphmixupB => EdgeMode::Binary,
            _ => EdgeMode::Continuous,
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config {
                key: "method".into(),
                msg: format!(
                    "unknown method `{s}` (expected one of {})",
                    Method::ALL.map(|m| m.name()).join(", ")
                ),
            })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Full run configuration. Field defaults follow the paper-style setup;
/// `clusters = 0` and `pair_samples = 0` mean "derive from the graph".
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub edges_path: Option<PathBuf>,
    pub features_path: Option<PathBuf>,
    pub labels_path: Option<PathBuf>,
    pub method: Method,
    pub minority_classes: BTreeSet<usize>,
    pub im_ratio: f64,
    pub majority_count: usize,
    pub val_frac: f64,
    pub seeds: Vec<u64>,

    /// K: semantic relations.
    pub relations: usize,
    /// F_h: per-relation hidden width.
    pub hidden_dim: usize,
    /// L: aggregation layers.
    pub layers: usize,
    /// Binary edge threshold.
    pub eta: f64,
    /// Pretraining weight on the edge loss.
    pub beta: f64,
    /// T: clusters for the anchor task (0 = max(2, round(2·sqrt(m)))).
    pub clusters: usize,
    /// |S|: pairs per epoch for the local task (0 = 4·N).
    pub pair_samples: usize,

    pub lr: f64,
    pub weight_decay: f64,
    pub pretrain_epochs: usize,
    pub max_epochs: usize,
    pub patience: usize,

    pub warmup: usize,
    pub delta_kappa: f64,
    pub epsilon: f64,
    pub epsilon_min: f64,
    pub epsilon_decay: f64,
    pub gamma_discount: f64,
    /// Termination range bound (0 = delta_kappa).
    pub t_kappa: f64,

    pub disable_local: bool,
    pub disable_global: bool,
    pub disable_rl: bool,
    pub fixed_scale: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            edges_path: None,
            features_path: None,
            labels_path: None,
            method: Method::GraphmixupC,
            minority_classes: BTreeSet::new(),
            im_ratio: 0.5,
            majority_count: 20,
            val_frac: 0.25,
            seeds: vec![0, 1, 2, 3, 4],
            relations: 4,
            hidden_dim: 32,
            layers: 1,
            eta: 0.5,
            beta: 1.0,
            clusters: 0,
            pair_samples: 0,
            lr: 1e-3,
            weight_decay: 5e-4,
            pretrain_epochs: 1000,
            max_epochs: 4000,
            patience: 200,
            warmup: 50,
            delta_kappa: 0.05,
            epsilon: 0.9,
            epsilon_min: 0.9,
            epsilon_decay: 1.0,
            gamma_discount: 1.0,
            t_kappa: 0.0,
            disable_local: false,
            disable_global: false,
            disable_rl: false,
            fixed_scale: None,
        }
    }
}

fn bad(key: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        key: key.into(),
        msg: msg.into(),
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse::<T>()
        .map_err(|_| bad(key, format!("cannot parse `{v}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(bad(key, format!("cannot parse `{other}` as bool"))),
    }
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| bad(key, format!("bad item `{s}`"))))
        .collect()
}

impl ExperimentConfig {
    /// Parses the flat `key=value` format; `#` starts a comment. Unknown
    /// keys are hard errors. Validates after parsing.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut epsilon_min_set = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                key: format!("line {}", lineno + 1),
                msg: format!("expected `key=value`, got `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "edges_path" => cfg.edges_path = Some(PathBuf::from(value)),
                "features_path" => cfg.features_path = Some(PathBuf::from(value)),
                "labels_path" => cfg.labels_path = Some(PathBuf::from(value)),
                "method" => cfg.method = value.parse()?,
                "minority_classes" => {
                    cfg.minority_classes = parse_list::<usize>(key, value)?.into_iter().collect()
                }
                "im_ratio" => cfg.im_ratio = parse_num(key, value)?,
                "majority_count" => cfg.majority_count = parse_num(key, value)?,
                "val_frac" => cfg.val_frac = parse_num(key, value)?,
                "seeds" => cfg.seeds = parse_list(key, value)?,
                "relations" => cfg.relations = parse_num(key, value)?,
                "hidden_dim" => cfg.hidden_dim = parse_num(key, value)?,
                "layers" => cfg.layers = parse_num(key, value)?,
                "eta" => cfg.eta = parse_num(key, value)?,
                "beta" => cfg.beta = parse_num(key, value)?,
                "clusters" => cfg.clusters = parse_num(key, value)?,
                "pair_samples" => cfg.pair_samples = parse_num(key, value)?,
                "lr" => cfg.lr = parse_num(key, value)?,
                "weight_decay" => cfg.weight_decay = parse_num(key, value)?,
                "pretrain_epochs" => cfg.pretrain_epochs = parse_num(key, value)?,
                "max_epochs" => cfg.max_epochs = parse_num(key, value)?,
                "patience" => cfg.patience = parse_num(key, value)?,
                "warmup" => cfg.warmup = parse_num(key, value)?,
                "delta_kappa" => cfg.delta_kappa = parse_num(key, value)?,
                "epsilon" => cfg.epsilon = parse_num(key, value)?,
                "epsilon_min" => {
                    cfg.epsilon_min = parse_num(key, value)?;
                    epsilon_min_set = true;
                }
                "epsilon_decay" => cfg.epsilon_decay = parse_num(key, value)?,
                "gamma_discount" => cfg.gamma_discount = parse_num(key, value)?,
                "t_kappa" => cfg.t_kappa = parse_num(key, value)?,
                "disable_local" => cfg.disable_local = parse_bool(key, value)?,
                "disable_global" => cfg.disable_global = parse_bool(key, value)?,
                "disable_rl" => cfg.disable_rl = parse_bool(key, value)?,
                "fixed_scale" => cfg.fixed_scale = Some(parse_num(key, value)?),
                unknown => {
                    return Err(bad(unknown, "unknown config key"));
                }
            }
        }
        if !epsilon_min_set {
            cfg.epsilon_min = cfg.epsilon;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.im_ratio > 0.0 && self.im_ratio <= 1.0) {
            return Err(bad("im_ratio", "must be in (0,1]"));
        }
        if self.majority_count == 0 {
            return Err(bad("majority_count", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.val_frac) {
            return Err(bad("val_frac", "must be in [0,1)"));
        }
        if self.seeds.is_empty() {
            return Err(bad("seeds", "at least one seed required"));
        }
        if self.relations < 2 {
            return Err(bad("relations", "at least 2 semantic relations required"));
        }
        if self.hidden_dim == 0 || self.layers == 0 {
            return Err(bad("hidden_dim", "hidden_dim and layers must be positive"));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(bad("eta", "must be in (0,1)"));
        }
        if self.beta < 0.0 {
            return Err(bad("beta", "must be nonnegative"));
        }
        if self.lr < 0.0 || self.weight_decay < 0.0 {
            return Err(bad("lr", "lr and weight_decay must be nonnegative"));
        }
        if self.max_epochs == 0 {
            return Err(bad("max_epochs", "must be positive"));
        }
        if self.delta_kappa <= 0.0 {
            return Err(bad("delta_kappa", "must be positive"));
        }
        for (key, v) in [
            ("epsilon", self.epsilon),
            ("epsilon_min", self.epsilon_min),
            ("gamma_discount", self.gamma_discount),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(bad(key, "must be in [0,1]"));
            }
        }
        if !(0.0 < self.epsilon_decay && self.epsilon_decay <= 1.0) {
            return Err(bad("epsilon_decay", "must be in (0,1]"));
        }
        if let Some(s) = self.fixed_scale {
            if s < 0.0 {
                return Err(bad("fixed_scale", "must be nonnegative"));
            }
        }

        // mixup/ablation flags only make sense for methods that mix
        let m = self.method;
        if !m.is_graphmixup() && (self.disable_local || self.disable_global || self.disable_rl) {
            return Err(bad(
                "disable_local",
                format!("ablation flags are only valid for graphmixup methods, not {m}"),
            ));
        }
        if !m.uses_scales() && self.fixed_scale.is_some() {
            return Err(bad(
                "fixed_scale",
                format!("{m} does not upsample, fixed_scale is not applicable"),
            ));
        }
        Ok(())
    }

    /// T with the auto default applied.
    pub fn clusters_for(&self, n_classes: usize) -> usize {
        if self.clusters > 0 {
            self.clusters
        } else {
            let m = n_classes.max(1) as f64;
            (2.0 * m.sqrt()).round().max(2.0) as usize
        }
    }

    /// |S| with the auto default applied.
    pub fn pair_samples_for(&self, n_nodes: usize) -> usize {
        if self.pair_samples > 0 {
            self.pair_samples
        } else {
            4 * n_nodes.max(1)
        }
    }

    /// Termination bound with the default applied.
    pub fn t_kappa_value(&self) -> f64 {
        if self.t_kappa > 0.0 {
            self.t_kappa
        } else {
            self.delta_kappa
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_applies_defaults() {
        let cfg = ExperimentConfig::parse(
            "# comment\nmethod=graphmixup_b\nseeds=1,2,3\nminority_classes=2\nim_ratio=0.1\n",
        )
        .unwrap();
        assert_eq!(cfg.method, Method::GraphmixupB);
        assert_eq!(cfg.seeds, vec![1, 2, 3]);
        assert_eq!(cfg.minority_classes, BTreeSet::from([2]));
        assert_eq!(cfg.im_ratio, 0.1);
        assert_eq!(cfg.hidden_dim, 32); // default
        assert_eq!(cfg.relations, 4);
        assert_eq!(cfg.epsilon_min, cfg.epsilon);
    }

    #[test]
    fn unknown_key_is_hard_error() {
        let err = ExperimentConfig::parse("lern_rate=0.1\n").unwrap_err();
        assert!(err.to_string().contains("lern_rate"), "{err}");
    }

    #[test]
    fn origin_with_mixup_flags_is_invalid() {
        let err =
            ExperimentConfig::parse("method=origin\ndisable_rl=true\n").unwrap_err();
        assert!(err.to_string().contains("ablation"), "{err}");
        let err = ExperimentConfig::parse("method=origin\nfixed_scale=0.5\n").unwrap_err();
        assert!(err.to_string().contains("fixed_scale"), "{err}");
        // oversample may take a fixed scale
        assert!(ExperimentConfig::parse("method=oversample\nfixed_scale=0.5\n").is_ok());
    }

    #[test]
    fn range_validation() {
        assert!(ExperimentConfig::parse("im_ratio=0\n").is_err());
        assert!(ExperimentConfig::parse("eta=1.0\n").is_err());
        assert!(ExperimentConfig::parse("epsilon=1.5\n").is_err());
        assert!(ExperimentConfig::parse("seeds=\n").is_err());
        assert!(ExperimentConfig::parse("relations=1\n").is_err());
    }

    #[test]
    fn derived_defaults() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.clusters_for(3), 3); // round(2*sqrt(3)) = 3
        assert_eq!(cfg.clusters_for(7), 5); // round(2*sqrt(7)) = 5
        assert_eq!(cfg.pair_samples_for(300), 1200);
        assert_eq!(cfg.t_kappa_value(), cfg.delta_kappa);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("gnn".parse::<Method>().is_err());
    }
}
