//! Parameter-group plumbing shared by the extractor, edge predictor, and
//! classifier: named enumeration for the optimizer and gradient checker, and
//! leaf binding onto a [`Tape`].

use crate::error::Result;
use crate::mat::Mat;
use crate::nn::{AdamConfig, AdamState};
use crate::tape::{Grads, Tape, Var};

/// A set of trainable matrices with stable names and order.
pub trait ParamGroup {
    fn named(&self) -> Vec<(String, &Mat)>;
    fn named_mut(&mut self) -> Vec<(String, &mut Mat)>;

    fn param_count(&self) -> usize {
        self.named().iter().map(|(_, m)| m.data().len()).sum()
    }
}

/// Binds every parameter of a group as tape leaves, in `named()` order.
pub fn bind_group(tape: &mut Tape, group: &impl ParamGroup) -> Vec<Var> {
    group
        .named()
        .into_iter()
        .map(|(_, m)| tape.leaf(m.clone()))
        .collect()
}

/// Collects the adjoints of previously bound parameters, in binding order.
pub fn group_grads(grads: &Grads, bound: &[Var]) -> Vec<Mat> {
    bound.iter().map(|&v| grads.get(v).clone()).collect()
}

/// Adam over one parameter group.
pub struct GroupOptimizer {
    state: AdamState,
    names: Vec<String>,
}

impl GroupOptimizer {
    pub fn new(group: &impl ParamGroup, cfg: AdamConfig) -> Self {
        let named = group.named();
        let params: Vec<&Mat> = named.iter().map(|(_, m)| *m).collect();
        GroupOptimizer {
            state: AdamState::new(&params, cfg),
            names: named.into_iter().map(|(n, _)| n).collect(),
        }
    }

    pub fn step(&mut self, group: &mut impl ParamGroup, grads: &[Mat]) -> Result<()> {
        let mut named = group.named_mut();
        let mut params: Vec<&mut Mat> = named.iter_mut().map(|(_, m)| &mut **m).collect();
        self.state.step(&mut params, grads, &self.names)
    }
}

/// Copies a flat `Vec<Mat>` (in `named()` order) back into a group; used by
/// the gradient checker, which perturbs a flattened copy.
pub fn load_flat(group: &mut impl ParamGroup, flat: &[Mat]) {
    let mut named = group.named_mut();
    assert_eq!(named.len(), flat.len(), "flat param count");
    for ((_, dst), src) in named.iter_mut().zip(flat) {
        **dst = src.clone();
    }
}

/// Flattens a group into a `Vec<Mat>` in `named()` order.
pub fn to_flat(group: &impl ParamGroup) -> Vec<Mat> {
    group.named().into_iter().map(|(_, m)| m.clone()).collect()
}
