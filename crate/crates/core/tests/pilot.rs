//! Manual pilot runs for sizing experiments; all ignored by default.
//!
//! Run with:
//! `cargo test -p gridfetch-core --test pilot -- --ignored --nocapture <name>`

use gridfetch_core::env::ObservationMode;
use gridfetch_core::eval::{self, EvalProtocol, PolicyMode};
use gridfetch_core::perception::PerceptionConfig;
use gridfetch_core::policy::{ConvSpec, NetworkSpec};
use gridfetch_core::ppo::{train, TrainConfig, TrainSetup};
use gridfetch_core::reward::RewardWeights;
use gridfetch_core::scene::{load_scene, SceneLibrary, NUM_CLASSES};
use std::sync::Arc;

const CORRIDOR: &str = "# id: 9\n# name: Corridor\n# object: t = Mug mid\n\
                        #########\n\
                        #......t#\n\
                        #########\n";

fn lean_network(mode: ObservationMode) -> NetworkSpec {
    NetworkSpec {
        input_channels: mode.channel_count(),
        window: 11,
        conv_layers: vec![
            ConvSpec { out_channels: 12, kernel: 3, stride: 2 },
            ConvSpec { out_channels: 24, kernel: 3, stride: 1 },
        ],
        hidden_units: 96,
        context_units: NUM_CLASSES,
        action_count: 7,
    }
}

#[test]
#[ignore]
fn pilot_corridor_smoke() {
    let mut lib = SceneLibrary::new();
    lib.add(load_scene(CORRIDOR).unwrap());
    let setup = TrainSetup {
        library: Arc::new(lib),
        scene_ids: vec![9],
        max_steps: 60,
        perception: PerceptionConfig::noiseless(),
        reward: RewardWeights::default(),
        network: lean_network(ObservationMode::Enhanced),
        mode: ObservationMode::Enhanced,
    };
    let cfg = TrainConfig {
        total_steps: 20_000,
        rollout_horizon: 512,
        eval_interval: 1_000_000,
        seed: 1,
        ..TrainConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let started = std::time::Instant::now();
    let result = train(&cfg, &setup, dir.path()).unwrap();
    println!("corridor training: {:.1}s", started.elapsed().as_secs_f64());
    for mode in [PolicyMode::Greedy, PolicyMode::Stochastic] {
        let protocol = EvalProtocol {
            scene_ids: vec![9],
            episodes_per_scene: 100,
            max_steps: 60,
            seed: 999,
            policy_mode: mode,
        };
        let records = eval::run_evaluation(
            &result.params,
            &setup.library,
            setup.perception,
            setup.reward,
            setup.mode,
            &protocol,
        )
        .unwrap();
        println!(
            "corridor {:?}: success {:.1}%",
            mode,
            eval::success_rate(&records).unwrap()
        );
    }
}

fn four_scene_setup(mode: ObservationMode) -> TrainSetup {
    TrainSetup {
        library: Arc::new(SceneLibrary::shipped()),
        scene_ids: vec![1, 2, 3, 4],
        max_steps: 200,
        perception: PerceptionConfig::default(),
        reward: RewardWeights::default(),
        network: lean_network(mode),
        mode,
    }
}

fn pilot_one(mode: ObservationMode, seed: u64, total_steps: u64) {
    let setup = four_scene_setup(mode);
    let cfg = TrainConfig {
        total_steps,
        rollout_horizon: 1024,
        seed,
        ..TrainConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let started = std::time::Instant::now();
    let result = train(&cfg, &setup, dir.path()).unwrap();
    let train_secs = started.elapsed().as_secs_f64();
    for policy_mode in [PolicyMode::Stochastic, PolicyMode::Greedy] {
        let protocol = EvalProtocol {
            scene_ids: vec![1, 2, 3, 4],
            episodes_per_scene: 100,
            max_steps: 200,
            seed: 4242,
            policy_mode,
        };
        let records = eval::run_evaluation(
            &result.params,
            &setup.library,
            setup.perception,
            setup.reward,
            setup.mode,
            &protocol,
        )
        .unwrap();
        let summary = eval::summarize(&records).unwrap();
        println!(
            "{} seed {} {:?}: success {:.1}% reward {:.1} nav {:?} inter {:?} (train {:.0}s, {} updates{})",
            mode.name(),
            seed,
            policy_mode,
            summary.success_rate_pct,
            summary.avg_cumulative_reward,
            summary.navigation_efficiency_pct.map(|v| (v * 10.0).round() / 10.0),
            summary.interaction_efficiency.map(|v| (v * 100.0).round() / 100.0),
            train_secs,
            result.updates,
            if result.early_stopped { ", early stop" } else { "" },
        );
    }
}

#[test]
#[ignore]
fn pilot_enhanced_one_seed() {
    pilot_one(ObservationMode::Enhanced, 1, 200_000);
}

#[test]
#[ignore]
fn pilot_baseline_one_seed() {
    pilot_one(ObservationMode::Baseline, 1, 200_000);
}

#[test]
#[ignore]
fn pilot_enhanced_short() {
    pilot_one(ObservationMode::Enhanced, 1, 60_000);
}

#[test]
#[ignore]
fn pilot_baseline_short() {
    pilot_one(ObservationMode::Baseline, 1, 60_000);
}

#[test]
#[ignore]
fn pilot_corridor_diagnostics() {
    let mut lib = SceneLibrary::new();
    lib.add(load_scene(CORRIDOR).unwrap());
    let setup = TrainSetup {
        library: Arc::new(lib),
        scene_ids: vec![9],
        max_steps: 60,
        perception: PerceptionConfig::noiseless(),
        reward: RewardWeights::default(),
        network: lean_network(ObservationMode::Enhanced),
        mode: ObservationMode::Enhanced,
    };
    let cfg = TrainConfig {
        total_steps: 20_000,
        rollout_horizon: 512,
        eval_interval: 1_000_000,
        seed: 1,
        ..TrainConfig::default()
    };
    let dir = std::path::PathBuf::from("/tmp/corridor_diag");
    let _ = std::fs::remove_dir_all(&dir);
    let result = train(&cfg, &setup, &dir).unwrap();
    println!("{}", std::fs::read_to_string(&result.metrics_path).unwrap());
    // Trace one greedy episode.
    use gridfetch_core::env::FetchEnv;
    use gridfetch_core::scene::{Action, AgentPose, Cell, EpisodeSpec, Heading, ObjectClass, Pitch};
    let spec = EpisodeSpec {
        scene_id: 9,
        target_class: ObjectClass::Mug,
        start_pose: AgentPose { cell: Cell::new(1, 1), heading: Heading::East, pitch: Pitch::Level, holding: None },
        max_steps: 20,
        rng_seed: 5,
    };
    let mut env = FetchEnv::new(setup.library.clone(), setup.perception, setup.reward, setup.mode, spec).unwrap();
    loop {
        let obs = env.observation().unwrap();
        let out = gridfetch_core::policy::forward(&result.params, &obs.features, &obs.context).unwrap();
        let a = gridfetch_core::policy::greedy_action(&out);
        let probs: Vec<String> = out.action_probs.iter().map(|p| format!("{p:.2}")).collect();
        let (outcome, rew) = env.step(Action::from_index(a).unwrap()).unwrap();
        println!("pos {:?} act {} probs [{}] v {:.2} r {:+.1}", env.state().agent.cell, Action::from_index(a).unwrap().name(), probs.join(","), out.value, rew.total);
        if outcome.terminal { println!("terminal success={}", outcome.success); break; }
    }
}


fn corridor_experiment_full(
    horizon: usize,
    entropy_coef: f64,
    total: u64,
    seed: u64,
    network: NetworkSpec,
    weights: RewardWeights,
    learning_rate: f64,
) -> (f64, f64) {
    let mut lib = SceneLibrary::new();
    lib.add(load_scene(CORRIDOR).unwrap());
    let setup = TrainSetup {
        library: Arc::new(lib),
        scene_ids: vec![9],
        max_steps: 60,
        perception: PerceptionConfig::noiseless(),
        reward: weights,
        network,
        mode: ObservationMode::Enhanced,
    };
    let cfg = TrainConfig {
        total_steps: total,
        rollout_horizon: horizon,
        entropy_coef,
        learning_rate,
        eval_interval: 1_000_000,
        seed,
        ..TrainConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let result = train(&cfg, &setup, dir.path()).unwrap();
    let mut rates = [0.0; 2];
    for (i, mode) in [PolicyMode::Greedy, PolicyMode::Stochastic].into_iter().enumerate() {
        let protocol = EvalProtocol {
            scene_ids: vec![9],
            episodes_per_scene: 100,
            max_steps: 60,
            seed: 999,
            policy_mode: mode,
        };
        let records = eval::run_evaluation(
            &result.params, &setup.library, setup.perception, setup.reward, setup.mode, &protocol,
        ).unwrap();
        rates[i] = eval::success_rate(&records).unwrap();
    }
    (rates[0], rates[1])
}

fn corridor_experiment_net(
    horizon: usize,
    entropy_coef: f64,
    total: u64,
    seed: u64,
    network: NetworkSpec,
    gamma_pen: f64,
) -> (f64, f64) {
    let mut lib = SceneLibrary::new();
    lib.add(load_scene(CORRIDOR).unwrap());
    let setup = TrainSetup {
        library: Arc::new(lib),
        scene_ids: vec![9],
        max_steps: 60,
        perception: PerceptionConfig::noiseless(),
        reward: RewardWeights { gamma_pen, ..RewardWeights::default() },
        network,
        mode: ObservationMode::Enhanced,
    };
    let cfg = TrainConfig {
        total_steps: total,
        rollout_horizon: horizon,
        entropy_coef,
        eval_interval: 1_000_000,
        seed,
        ..TrainConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let result = train(&cfg, &setup, dir.path()).unwrap();
    let mut rates = [0.0; 2];
    for (i, mode) in [PolicyMode::Greedy, PolicyMode::Stochastic].into_iter().enumerate() {
        let protocol = EvalProtocol {
            scene_ids: vec![9],
            episodes_per_scene: 100,
            max_steps: 60,
            seed: 999,
            policy_mode: mode,
        };
        let records = eval::run_evaluation(
            &result.params, &setup.library, setup.perception, setup.reward, setup.mode, &protocol,
        ).unwrap();
        rates[i] = eval::success_rate(&records).unwrap();
    }
    (rates[0], rates[1])
}

fn corridor_experiment(horizon: usize, entropy_coef: f64, total: u64, seed: u64) -> (f64, f64) {
    let mut lib = SceneLibrary::new();
    lib.add(load_scene(CORRIDOR).unwrap());
    let setup = TrainSetup {
        library: Arc::new(lib),
        scene_ids: vec![9],
        max_steps: 60,
        perception: PerceptionConfig::noiseless(),
        reward: RewardWeights::default(),
        network: lean_network(ObservationMode::Enhanced),
        mode: ObservationMode::Enhanced,
    };
    let cfg = TrainConfig {
        total_steps: total,
        rollout_horizon: horizon,
        entropy_coef,
        eval_interval: 1_000_000,
        seed,
        ..TrainConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let result = train(&cfg, &setup, dir.path()).unwrap();
    let mut rates = [0.0; 2];
    for (i, mode) in [PolicyMode::Greedy, PolicyMode::Stochastic].into_iter().enumerate() {
        let protocol = EvalProtocol {
            scene_ids: vec![9],
            episodes_per_scene: 100,
            max_steps: 60,
            seed: 999,
            policy_mode: mode,
        };
        let records = eval::run_evaluation(
            &result.params, &setup.library, setup.perception, setup.reward, setup.mode, &protocol,
        ).unwrap();
        rates[i] = eval::success_rate(&records).unwrap();
    }
    (rates[0], rates[1])
}

#[test]
#[ignore]
fn pilot_corridor_sweep() {
    for (horizon, ent) in [(1024usize, 0.02f64), (1024, 0.05), (512, 0.05), (2048, 0.02), (1024, 0.01)] {
        for seed in [1u64, 2] {
            let (greedy, stochastic) = corridor_experiment(horizon, ent, 20_000, seed);
            println!("horizon {horizon} entropy {ent} seed {seed}: greedy {greedy:.0}% stochastic {stochastic:.0}%");
        }
    }
}


/// Single-state bandit: positive advantage on one action must raise its
/// probability after an optimizer step.
#[test]
#[ignore]
fn pilot_gradient_direction_sanity() {
    use gridfetch_core::policy::{backward, init_params, LossSpec, OptimizerMoments, Sample};
    use gridfetch_core::ppo::optimizer_step;
    use gridfetch_core::perception::FeatureTensor;
    let spec = lean_network(ObservationMode::Enhanced);
    let mut params = init_params(&spec, 3).unwrap();
    let mut features = FeatureTensor::zeros(14, 11);
    for r in 0..11 { for c in 0..11 { features.set(0, r, c, ((r * c) % 3) as f64 * 0.5); } }
    let context = vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let before = gridfetch_core::policy::forward(&params, &features, &context).unwrap();
    let mut opt = OptimizerMoments::zeros(params.parameter_count());
    for _ in 0..20 {
        let out = gridfetch_core::policy::forward(&params, &features, &context).unwrap();
        let sample = Sample {
            features: &features,
            context: &context,
            action: 0,
            old_log_prob: out.action_probs[0].ln(),
            advantage: 1.0,
            return_target: 0.0,
        };
        let (grad, _) = backward(&params, &[sample], &LossSpec { clip_epsilon: 0.2, value_coef: 0.5, entropy_coef: 0.0 }).unwrap();
        optimizer_step(&mut params.data, &grad, &mut opt, 3e-4).unwrap();
    }
    let after = gridfetch_core::policy::forward(&params, &features, &context).unwrap();
    println!("p(action0) before {:.4} after {:.4}", before.action_probs[0], after.action_probs[0]);
    assert!(after.action_probs[0] > before.action_probs[0]);
}

#[test]
#[ignore]
fn pilot_corridor_long() {
    let (greedy, stochastic) = corridor_experiment(1024, 0.01, 100_000, 1);
    println!("corridor 100k: greedy {greedy:.0}% stochastic {stochastic:.0}%");
}


#[test]
#[ignore]
fn pilot_advantage_probe() {
    use gridfetch_core::env::{EpisodeSampler, FetchEnv};
    use gridfetch_core::policy::{backward, init_params, LossSpec, OptimizerMoments, Sample};
    use gridfetch_core::ppo::{collect_rollout, compute_gae, normalize_advantages, optimizer_step, EnvPool};
    use gridfetch_core::scene::{Action, AgentPose, Cell, EpisodeSpec, Heading, ObjectClass, Pitch};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    let mut lib = SceneLibrary::new();
    lib.add(load_scene(CORRIDOR).unwrap());
    let lib = Arc::new(lib);
    let spec = lean_network(ObservationMode::Enhanced);
    let mut params = init_params(&spec, 0).unwrap();
    let mut opt = OptimizerMoments::zeros(params.parameter_count());
    let sampler = EpisodeSampler::new(lib.clone(), &[9], 60, 1).unwrap();
    let mut pool = EnvPool::new(sampler, PerceptionConfig::noiseless(), RewardWeights::default(), ObservationMode::Enhanced, 1).unwrap();
    let mut action_rng = ChaCha8Rng::seed_from_u64(2);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(3);

    // Probe state: adjacent to the mug, facing it.
    let probe_spec = EpisodeSpec {
        scene_id: 9,
        target_class: ObjectClass::Mug,
        start_pose: AgentPose { cell: Cell::new(6, 1), heading: Heading::East, pitch: Pitch::Level, holding: None },
        max_steps: 10,
        rng_seed: 0,
    };
    let probe_env = FetchEnv::new(lib.clone(), PerceptionConfig::noiseless(), RewardWeights::default(), ObservationMode::Enhanced, probe_spec).unwrap();
    let probe_obs = probe_env.observation().unwrap().clone();

    let loss = LossSpec { clip_epsilon: 0.2, value_coef: 0.5, entropy_coef: 0.01 };
    use rand::seq::SliceRandom;
    for update in 0..20 {
        let trajectories = collect_rollout(&mut pool, &params, 1024, &mut action_rng).unwrap();
        let mut flat = Vec::new();
        let mut advantages = Vec::new();
        let mut returns = Vec::new();
        for (ti, traj) in trajectories.iter().enumerate() {
            let (adv, ret) = compute_gae(&traj.rewards, &traj.values, &traj.dones, traj.bootstrap_value, 0.99, 0.95);
            for t in 0..traj.len() { flat.push((ti, t)); }
            advantages.extend(adv);
            returns.extend(ret);
        }
        // Advantage at success steps before normalization.
        let mut success_advs = Vec::new();
        for (i, &(ti, t)) in flat.iter().enumerate() {
            let o = &trajectories[ti].outcomes[t];
            if o.success { success_advs.push(advantages[i]); }
        }
        normalize_advantages(&mut advantages);
        let mut norm_success = Vec::new();
        for (i, &(ti, t)) in flat.iter().enumerate() {
            let o = &trajectories[ti].outcomes[t];
            if o.success { norm_success.push(advantages[i]); }
        }
        let mut indices: Vec<usize> = (0..flat.len()).collect();
        for _ in 0..4 {
            indices.shuffle(&mut shuffle_rng);
            for chunk in indices.chunks(64) {
                let samples: Vec<Sample> = chunk.iter().map(|&i| {
                    let (ti, t) = flat[i];
                    let traj = &trajectories[ti];
                    Sample {
                        features: &traj.features[t],
                        context: &traj.contexts[t],
                        action: traj.actions[t],
                        old_log_prob: traj.log_probs[t],
                        advantage: advantages[i],
                        return_target: returns[i],
                    }
                }).collect();
                let (grad, _) = backward(&params, &samples, &loss).unwrap();
                optimizer_step(&mut params.data, &grad, &mut opt, 3e-4).unwrap();
            }
        }
        let probe_out = gridfetch_core::policy::forward(&params, &probe_obs.features, &probe_obs.context).unwrap();
        println!(
            "update {update}: successes {} raw_adv {:?} norm_adv {:?} pi_probe(pickup) {:.3} pi_probe(move) {:.3} v_probe {:.2}",
            success_advs.len(),
            success_advs.iter().map(|a| (a * 10.0).round() / 10.0).collect::<Vec<_>>(),
            norm_success.iter().map(|a| (a * 10.0).round() / 10.0).collect::<Vec<_>>(),
            probe_out.action_probs[5],
            probe_out.action_probs[0],
            probe_out.value,
        );
    }
}


#[test]
#[ignore]
fn pilot_corridor_default_net() {
    let spec = NetworkSpec::default_for(ObservationMode::Enhanced.channel_count(), 11, NUM_CLASSES);
    for seed in [1u64, 2] {
        let started = std::time::Instant::now();
        let (greedy, stochastic) = corridor_experiment_net(1024, 0.01, 20_000, seed, spec.clone(), 0.5);
        println!(
            "default net seed {seed}: greedy {greedy:.0}% stochastic {stochastic:.0}% ({:.0}s)",
            started.elapsed().as_secs_f64()
        );
    }
}


#[test]
#[ignore]
fn pilot_corridor_gamma_pen_sweep() {
    for gamma_pen in [0.1f64, 0.05, 0.0] {
        for seed in [1u64, 2] {
            let (greedy, stochastic) =
                corridor_experiment_net(1024, 0.01, 20_000, seed, lean_network(ObservationMode::Enhanced), gamma_pen);
            println!("gamma_pen {gamma_pen} seed {seed}: greedy {greedy:.0}% stochastic {stochastic:.0}%");
        }
    }
}


#[test]
#[ignore]
fn pilot_corridor_lr_sweep() {
    for (lr, beta, gamma_pen, ent) in [
        (1e-3f64, 10.0f64, 0.1f64, 0.01f64),
        (1e-3, 10.0, 0.1, 0.02),
        (1e-3, 20.0, 0.1, 0.01),
        (3e-4, 20.0, 0.1, 0.01),
    ] {
        for seed in [1u64, 2] {
            let weights = RewardWeights { alpha: 1.0, beta, gamma_pen };
            let (greedy, stochastic) = corridor_experiment_full(
                1024, ent, 20_000, seed, lean_network(ObservationMode::Enhanced), weights, lr,
            );
            println!("lr {lr} beta {beta} pen {gamma_pen} ent {ent} seed {seed}: greedy {greedy:.0}% stochastic {stochastic:.0}%");
        }
    }
}
