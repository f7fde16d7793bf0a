//! Seeded stochastic-block-model graphs for fixtures and experiments.
//!
//! Nodes are split into near-equal class blocks; edges are sampled with
//! `p_intra` inside a block and `p_inter` across blocks. Node features are a
//! per-class mean direction plus Gaussian noise, so feature separability is
//! controlled by `separation / noise`.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::mat::Mat;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug)]
pub struct SbmConfig {
    pub nodes: usize,
    pub classes: usize,
    pub p_intra: f64,
    pub p_inter: f64,
    pub feat_dim: usize,
    /// Std-dev of the Gaussian feature noise.
    pub noise: f64,
    /// Magnitude of each class's mean direction.
    pub separation: f64,
    pub seed: u64,
}

impl Default for SbmConfig {
    fn default() -> Self {
        SbmConfig {
            nodes: 300,
            classes: 3,
            p_intra: 0.05,
            p_inter: 0.005,
            feat_dim: 16,
            noise: 1.0,
            separation: 1.0,
            seed: 0,
        }
    }
}

impl SbmConfig {
    fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.nodes < self.classes {
            return Err(Error::Domain(format!(
                "{} nodes cannot hold {} classes",
                self.nodes, self.classes
            )));
        }
        for (name, p) in [("p_intra", self.p_intra), ("p_inter", self.p_inter)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Domain(format!("{name} {p} outside [0,1]")));
            }
        }
        if self.feat_dim == 0 {
            return Err(Error::Domain("feat_dim must be positive".into()));
        }
        Ok(())
    }
}

/// Class of node `i` when `n` nodes are split into `m` near-equal blocks.
fn block_of(i: usize, n: usize, m: usize) -> usize {
    (i * m / n).min(m - 1)
}

/// Generates the graph in memory. Fully labeled; deterministic per seed.
pub fn generate_sbm(cfg: &SbmConfig) -> Result<Graph> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.nodes;
    let m = cfg.classes;

    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if block_of(u, n, m) == block_of(v, n, m) {
                cfg.p_intra
            } else {
                cfg.p_inter
            };
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }

    let normal = StandardNormal;
    let mut features = Mat::zeros(n, cfg.feat_dim);
    for i in 0..n {
        let c = block_of(i, n, m);
        let row = features.row_mut(i);
        for (j, v) in row.iter_mut().enumerate() {
            let noise: f64 = normal.sample(&mut rng);
            let mean = if j == c % cfg.feat_dim {
                cfg.separation
            } else {
                0.0
            };
            *v = mean + cfg.noise * noise;
        }
    }

    let labels: Vec<Option<usize>> = (0..n).map(|i| Some(block_of(i, n, m))).collect();
    Graph::new(features, edges, labels)
}

/// Writes a graph in the dataset file format; returns the three file paths
/// (edges, features, labels).
pub fn write_dataset(graph: &Graph, dir: &Path) -> Result<[PathBuf; 3]> {
    fs::create_dir_all(dir)?;
    let edges_path = dir.join("edges.tsv");
    let features_path = dir.join("features.tsv");
    let labels_path = dir.join("labels.tsv");

    let mut f = fs::File::create(&edges_path)?;
    for &(u, v) in graph.edges() {
        writeln!(f, "{u}\t{v}")?;
    }

    let mut f = fs::File::create(&features_path)?;
    for i in 0..graph.n_nodes() {
        let row: Vec<String> = graph
            .features()
            .row(i)
            .iter()
            .map(|v| format!("{v}"))
            .collect();
        writeln!(f, "{i}\t{}", row.join(","))?;
    }

    let mut f = fs::File::create(&labels_path)?;
    for i in 0..graph.n_nodes() {
        if let Some(c) = graph.label(i) {
            writeln!(f, "{i}\t{c}")?;
        }
    }

    Ok([edges_path, features_path, labels_path])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::load_graph;

    #[test]
    fn sbm_is_deterministic_and_labeled() {
        let cfg = SbmConfig {
            nodes: 60,
            classes: 3,
            seed: 4,
            ..SbmConfig::default()
        };
        let a = generate_sbm(&cfg).unwrap();
        let b = generate_sbm(&cfg).unwrap();
        assert_eq!(a.edges(), b.edges());
        assert_eq!(a.features(), b.features());
        assert!(a.labels().iter().all(Option::is_some));
        let counts = a.class_counts();
        assert_eq!(counts.len(), 3);
        assert_eq!(counts.values().sum::<usize>(), 60);
    }

    #[test]
    fn sbm_block_density_exceeds_cross_density() {
        let cfg = SbmConfig {
            nodes: 90,
            classes: 3,
            p_intra: 0.3,
            p_inter: 0.02,
            seed: 1,
            ..SbmConfig::default()
        };
        let g = generate_sbm(&cfg).unwrap();
        let (mut intra, mut inter) = (0usize, 0usize);
        for &(u, v) in g.edges() {
            if g.label(u) == g.label(v) {
                intra += 1;
            } else {
                inter += 1;
            }
        }
        assert!(intra > inter, "intra {intra} inter {inter}");
    }

    #[test]
    fn dataset_round_trips_through_files() {
        let cfg = SbmConfig {
            nodes: 40,
            classes: 2,
            seed: 9,
            ..SbmConfig::default()
        };
        let g = generate_sbm(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let [e, f, l] = write_dataset(&g, dir.path()).unwrap();
        let g2 = load_graph(&e, &f, &l).unwrap();
        assert_eq!(g.edges(), g2.edges());
        assert_eq!(g.labels(), g2.labels());
        assert!(g.features().max_abs_diff(g2.features()) < 1e-12);
    }

    #[test]
    fn sbm_rejects_bad_parameters() {
        let cfg = SbmConfig {
            nodes: 2,
            classes: 3,
            ..SbmConfig::default()
        };
        assert!(generate_sbm(&cfg).is_err());
        let cfg = SbmConfig {
            p_intra: 1.5,
            ..SbmConfig::default()
        };
        assert!(generate_sbm(&cfg).is_err());
    }
}
