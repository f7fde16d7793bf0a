//! Tabular Q-learning controller for the per-class upsampling scale.
//!
//! A single offset `kappa` shifts every minority class's scale:
//! `alpha_c = alpha_init_c + kappa`. The action space is one step of
//! `±delta_kappa` per epoch; rewards are the sign of the epoch-over-epoch
//! macro-F1 change; the run terminates once kappa's range over 20
//! consecutive epochs is within `t_kappa`, after which scales are frozen.
//!
//! Q-values use the direct Bellman assignment
//! `Q(s,a) <- r + gamma·max_a' Q(s',a')` (no learning rate). The state is
//! the vector of per-class synthetic-node counts `round(|C_c|·alpha_c)`.
//! Count states alias several kappa grid points into one state; the
//! resulting self-transitions bootstrap on their own value, which keeps the
//! undiscounted updates stable where a kappa-grid state key lets stale
//! neighbor values trap the greedy policy in off-target oscillations.

use rand::Rng;
use std::collections::{BTreeMap, HashMap};

/// Sign of the macro-F1 change; exact float equality maps to 0.
pub fn reward(cla_e: f64, cla_prev: f64) -> i32 {
    if cla_e > cla_prev {
        1
    } else if cla_e == cla_prev {
        0
    } else {
        -1
    }
}

/// The two scale actions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScaleAction {
    Up,
    Down,
}

impl ScaleAction {
    pub fn offset(self, delta: f64) -> f64 {
        match self {
            ScaleAction::Up => delta,
            ScaleAction::Down => -delta,
        }
    }

    fn index(self) -> usize {
        match self {
            ScaleAction::Up => 0,
            ScaleAction::Down => 1,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            ScaleAction::Up => "+",
            ScaleAction::Down => "-",
        }
    }
}

/// Discrete state key: the per-class synthetic-node counts.
pub type StateKey = Vec<i64>;

/// Discrete state → action values, with per-action visit counts used only
/// to break exact value ties.
#[derive(Clone, Debug, Default)]
pub struct QTable {
    values: HashMap<StateKey, [f64; 2]>,
    visits: HashMap<StateKey, [u32; 2]>,
}

impl QTable {
    pub fn new() -> Self {
        QTable::default()
    }

    pub fn get(&self, state: &StateKey, action: ScaleAction) -> f64 {
        self.values
            .get(state)
            .map_or(0.0, |v| v[action.index()])
    }

    fn max_value(&self, state: &StateKey) -> f64 {
        let v = self.values.get(state).copied().unwrap_or([0.0, 0.0]);
        v[0].max(v[1])
    }

    /// Direct Bellman assignment: `Q(s,a) = r + gamma·max_a' Q(s',a')`.
    pub fn update(
        &mut self,
        state: &StateKey,
        action: ScaleAction,
        r: i32,
        next_state: &StateKey,
        gamma: f64,
    ) {
        let target = r as f64 + gamma * self.max_value(next_state);
        self.values.entry(state.clone()).or_insert([0.0, 0.0])[action.index()] = target;
    }

    /// Greedy action. Exact value ties go to the less-visited action, and to
    /// [`ScaleAction::Up`] when the visit counts tie as well.
    pub fn greedy(&self, state: &StateKey) -> ScaleAction {
        let up = self.get(state, ScaleAction::Up);
        let down = self.get(state, ScaleAction::Down);
        if down > up {
            ScaleAction::Down
        } else if up > down {
            ScaleAction::Up
        } else {
            let v = self.visits.get(state).copied().unwrap_or([0, 0]);
            if v[1] < v[0] {
                ScaleAction::Down
            } else {
                ScaleAction::Up
            }
        }
    }

    /// ε-greedy: a uniformly random action with probability `epsilon`,
    /// otherwise greedy. Records the chosen action's visit.
    pub fn select(&mut self, state: &StateKey, epsilon: f64, rng: &mut impl Rng) -> ScaleAction {
        let action = if rng.random::<f64>() < epsilon {
            if rng.random::<f64>() < 0.5 {
                ScaleAction::Up
            } else {
                ScaleAction::Down
            }
        } else {
            self.greedy(state)
        };
        self.visits.entry(state.clone()).or_insert([0, 0])[action.index()] += 1;
        action
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// True iff the range of the last 21 kappa values (20 consecutive steps) is
/// within `t_kappa`. Insufficient history is simply "not yet".
pub fn check_termination(kappa_history: &[f64], t_kappa: f64) -> bool {
    const WINDOW: usize = 21;
    if kappa_history.len() < WINDOW {
        return false;
    }
    let window = &kappa_history[kappa_history.len() - WINDOW..];
    let max = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = window.iter().cloned().fold(f64::INFINITY, f64::min);
    max - min <= t_kappa
}

/// One row of the per-epoch RL trace.
#[derive(Clone, Debug)]
pub struct RlTraceRow {
    pub epoch: usize,
    pub kappa: f64,
    pub action: Option<ScaleAction>,
    pub reward: Option<i32>,
    pub macro_f1: f64,
}

/// Hyperparameters of the scale agent.
#[derive(Clone, Copy, Debug)]
pub struct AgentConfig {
    pub delta_kappa: f64,
    pub gamma: f64,
    pub epsilon: f64,
    /// Floor for annealed exploration; `epsilon_decay = 1` keeps ε constant.
    pub epsilon_min: f64,
    pub epsilon_decay: f64,
    /// Epochs before the agent starts acting.
    pub warmup: usize,
    /// Termination range bound; defaults to `delta_kappa`.
    pub t_kappa: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            delta_kappa: 0.05,
            gamma: 1.0,
            epsilon: 0.9,
            epsilon_min: 0.9,
            epsilon_decay: 1.0,
            warmup: 50,
            t_kappa: 0.05,
        }
    }
}

/// Single-owner mutable state driving the upsampling scales.
#[derive(Clone, Debug)]
pub struct ScaleAgent {
    cfg: AgentConfig,
    q: QTable,
    kappa: f64,
    kappa_min: f64,
    alpha_init: BTreeMap<usize, f64>,
    /// Training-set size per minority class; defines the count state.
    train_counts: BTreeMap<usize, usize>,
    epsilon: f64,
    terminated: bool,
    history: Vec<f64>,
    prev_f1: Option<f64>,
    prev_state: Option<StateKey>,
    prev_action: Option<ScaleAction>,
    trace: Vec<RlTraceRow>,
}

impl ScaleAgent {
    pub fn new(
        alpha_init: BTreeMap<usize, f64>,
        train_counts: BTreeMap<usize, usize>,
        cfg: AgentConfig,
    ) -> Self {
        // kappa may not push any class's scale below zero
        let kappa_min = -alpha_init
            .values()
            .cloned()
            .fold(f64::INFINITY, f64::min)
            .min(0.0);
        ScaleAgent {
            epsilon: cfg.epsilon,
            cfg,
            q: QTable::new(),
            kappa: 0.0,
            kappa_min,
            alpha_init,
            train_counts,
            terminated: false,
            history: Vec::new(),
            prev_f1: None,
            prev_state: None,
            prev_action: None,
            trace: Vec::new(),
        }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn terminated(&self) -> bool {
        self.terminated
    }

    pub fn trace(&self) -> &[RlTraceRow] {
        &self.trace
    }

    pub fn q_table(&self) -> &QTable {
        &self.q
    }

    /// Current per-class scales: `max(0, alpha_init + kappa)`.
    pub fn scales(&self) -> BTreeMap<usize, f64> {
        self.alpha_init
            .iter()
            .map(|(&c, &a)| (c, (a + self.kappa).max(0.0)))
            .collect()
    }

    /// State: per-class synthetic-node counts at the current scales.
    fn state_key(&self) -> StateKey {
        let scales = self.scales();
        self.train_counts
            .iter()
            .map(|(c, &n)| {
                let alpha = scales.get(c).copied().unwrap_or(0.0);
                (n as f64 * alpha + 0.5).floor() as i64
            })
            .collect()
    }

    /// Advances the agent with this epoch's validation macro-F1 and returns
    /// the scales for the next epoch. Before warmup and after termination
    /// the scales are fixed.
    pub fn rl_step(
        &mut self,
        macro_f1: f64,
        epoch: usize,
        rng: &mut impl Rng,
    ) -> BTreeMap<usize, f64> {
        if epoch < self.cfg.warmup || self.terminated {
            self.trace.push(RlTraceRow {
                epoch,
                kappa: self.kappa,
                action: None,
                reward: None,
                macro_f1,
            });
            self.prev_f1 = Some(macro_f1);
            self.prev_state = None;
            self.prev_action = None;
            return self.scales();
        }

        let state = self.state_key();
        let mut observed_reward = None;
        if let (Some(ps), Some(pa), Some(pf)) =
            (self.prev_state.take(), self.prev_action, self.prev_f1)
        {
            let r = reward(macro_f1, pf);
            self.q.update(&ps, pa, r, &state, self.cfg.gamma);
            observed_reward = Some(r);
        }

        let action = self.q.select(&state, self.epsilon, rng);
        self.kappa = (self.kappa + action.offset(self.cfg.delta_kappa)).max(self.kappa_min);
        self.history.push(self.kappa);
        self.epsilon = (self.epsilon * self.cfg.epsilon_decay).max(self.cfg.epsilon_min);

        self.trace.push(RlTraceRow {
            epoch,
            kappa: self.kappa,
            action: Some(action),
            reward: observed_reward,
            macro_f1,
        });

        if check_termination(&self.history, self.cfg.t_kappa) {
            self.terminated = true;
        }
        self.prev_state = Some(state);
        self.prev_action = Some(action);
        self.prev_f1 = Some(macro_f1);
        self.scales()
    }
}
