use graphmixup::rl::*;
use graphmixup::nn::seeded_rng;
use std::collections::BTreeMap;

#[test]
fn real_agent_rate() {
    let mut ok = 0;
    for seed in 0..300u64 {
        let cfg = AgentConfig {
            delta_kappa: 0.05, gamma: 1.0,
            epsilon: 0.9, epsilon_min: 0.1, epsilon_decay: 0.8,
            warmup: 0, t_kappa: 0.05,
        };
        let mut agent = ScaleAgent::new(
            BTreeMap::from([(1usize, 1.0f64)]),
            BTreeMap::from([(1usize, 5usize)]),
            cfg,
        );
        let mut rng = seeded_rng(seed);
        let mut done = false;
        for epoch in 0..500 {
            let f1 = 1.0 / (1.0 + (agent.kappa() - 0.3f64).abs());
            agent.rl_step(f1, epoch, &mut rng);
            if agent.terminated() {
                if (agent.kappa() - 0.3f64).abs() <= 0.05 + 1e-12 { ok += 1; }
                done = true;
                break;
            }
        }
        let _ = done;
    }
    println!("real agent: {ok}/300");
}
