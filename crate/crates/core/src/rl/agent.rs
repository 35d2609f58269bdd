//! DQN agent: evaluation/target network pair, epsilon-greedy action
//! selection, replay-batch learning, and checkpointing.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::neural::{
    backward_q, load_checkpoint, save_checkpoint, InitScheme, MLPModel, OptimizerKind,
    OptimizerState, OutputMode,
};
use crate::table::ClassLabel;

use super::{RlError, ReplayMemory, Transition};

#[derive(Debug, Clone, PartialEq)]
pub struct AgentHyperparameters {
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Environment steps over which epsilon decays linearly.
    pub epsilon_decay_steps: usize,
    pub gamma: f64,
    pub batch_size: usize,
    /// Episodes between target-network syncs.
    pub target_update_every: usize,
    pub learning_rate: f64,
    pub memory_capacity: usize,
    pub optimizer: OptimizerKind,
    pub seed: u64,
}

impl Default for AgentHyperparameters {
    fn default() -> Self {
        Self {
            epsilon_start: 1.0,
            epsilon_end: 0.01,
            epsilon_decay_steps: 10_000,
            gamma: 0.1,
            batch_size: 64,
            target_update_every: 5,
            learning_rate: 1e-3,
            memory_capacity: 1_000_000,
            optimizer: OptimizerKind::Sgd,
            seed: 0,
        }
    }
}

/// Evaluation network trained every step; target network synced
/// periodically to stabilize the bootstrap targets.
#[derive(Debug, Clone)]
pub struct Agent {
    eval_net: MLPModel,
    target_net: MLPModel,
    pub memory: ReplayMemory,
    hyper: AgentHyperparameters,
    optimizer: OptimizerState,
    env_steps: usize,
    episodes: usize,
}

impl Agent {
    /// Both networks start from the same seed, hence identical.
    pub fn new(
        observation_dim: usize,
        hidden: &[usize],
        hyper: AgentHyperparameters,
    ) -> Result<Self, RlError> {
        let mut sizes = vec![observation_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(ClassLabel::COUNT);
        let eval_net = MLPModel::new(
            sizes,
            OutputMode::Linear,
            InitScheme::HeUniform,
            crate::derive_seed(hyper.seed, 0xA6E47),
        )?;
        let target_net = eval_net.clone();
        let optimizer = OptimizerState::new(hyper.optimizer, &eval_net);
        Ok(Self {
            eval_net,
            target_net,
            memory: ReplayMemory::new(hyper.memory_capacity),
            hyper,
            optimizer,
            env_steps: 0,
            episodes: 0,
        })
    }

    pub fn hyper(&self) -> &AgentHyperparameters {
        &self.hyper
    }

    pub fn eval_net(&self) -> &MLPModel {
        &self.eval_net
    }

    pub fn target_net(&self) -> &MLPModel {
        &self.target_net
    }

    pub fn env_steps(&self) -> usize {
        self.env_steps
    }

    pub fn episodes(&self) -> usize {
        self.episodes
    }

    /// Linear decay from start to end over `epsilon_decay_steps` steps,
    /// then constant.
    pub fn epsilon(&self) -> f64 {
        let h = &self.hyper;
        if h.epsilon_decay_steps == 0 {
            return h.epsilon_end;
        }
        let progress = (self.env_steps as f64 / h.epsilon_decay_steps as f64).min(1.0);
        h.epsilon_start + (h.epsilon_end - h.epsilon_start) * progress
    }

    pub fn note_env_step(&mut self) {
        self.env_steps += 1;
    }

    pub fn note_episode(&mut self) {
        self.episodes += 1;
    }

    /// Epsilon-greedy over the evaluation network's Q-values; greedy ties
    /// resolve toward the lower class code.
    pub fn select_action(
        &self,
        observation: &[f64],
        epsilon: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<ClassLabel, RlError> {
        if rng.gen_range(0.0..1.0) < epsilon {
            let code = rng.gen_range(0..ClassLabel::COUNT as i64);
            return Ok(ClassLabel::from_code(code).expect("code in range"));
        }
        let batch =
            Array2::from_shape_vec((1, observation.len()), observation.to_vec()).expect("shape");
        let q = self.eval_net.forward(&batch)?;
        let best = crate::neural::argmax_rows(&q)[0];
        Ok(ClassLabel::from_code(best as i64).expect("three outputs"))
    }

    pub fn store(&mut self, transition: Transition) {
        self.memory.push(transition);
    }

    /// One gradient step on a batch: y = r for terminal transitions, else
    /// r + gamma * max_a Q_target(s', a); MSE against Q_eval(s, a) touching
    /// only the taken action.
    pub fn learn_step(&mut self, batch: &[&Transition]) -> Result<f64, RlError> {
        let dim = batch.first().map_or(0, |t| t.state.len());
        let mut states = Array2::zeros((batch.len(), dim));
        let mut next_states = Array2::zeros((batch.len(), dim));
        for (i, t) in batch.iter().enumerate() {
            for (j, &v) in t.state.iter().enumerate() {
                states[(i, j)] = v;
            }
            for (j, &v) in t.next_state.iter().enumerate() {
                next_states[(i, j)] = v;
            }
        }
        let q_next = self.target_net.forward(&next_states)?;
        let targets: Vec<f64> = batch
            .iter()
            .enumerate()
            .map(|(i, t)| {
                if t.done {
                    t.reward
                } else {
                    let best =
                        q_next.row(i).iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    t.reward + self.hyper.gamma * best
                }
            })
            .collect();
        let actions: Vec<usize> = batch.iter().map(|t| t.action.index()).collect();
        let (loss, grads) = backward_q(&self.eval_net, &states, &actions, &targets)?;
        self.optimizer.step(&mut self.eval_net, &grads, self.hyper.learning_rate);
        Ok(loss)
    }

    /// Samples a batch and learns once the memory holds `batch_size`
    /// transitions; no-op during warm-up.
    pub fn learn(&mut self, rng: &mut ChaCha8Rng) -> Result<Option<f64>, RlError> {
        if self.memory.len() < self.hyper.batch_size {
            return Ok(None);
        }
        let batch = self.memory.sample(self.hyper.batch_size, rng)?;
        // Detach the borrows: learn_step mutates the networks, not memory.
        let owned: Vec<Transition> = batch.into_iter().cloned().collect();
        let refs: Vec<&Transition> = owned.iter().collect();
        self.learn_step(&refs).map(Some)
    }

    /// Copies evaluation parameters into the target network.
    pub fn sync_target(&mut self) {
        self.target_net = self.eval_net.clone();
    }

    /// Writes both network checkpoints, the agent counters and the replay
    /// memory into a directory.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), RlError> {
        let dir = dir.as_ref();
        let io = |e: std::io::Error| RlError::Io { path: dir.display().to_string(), source: e };
        std::fs::create_dir_all(dir).map_err(io)?;
        save_checkpoint(&self.eval_net, dir.join("eval.mlp"))?;
        save_checkpoint(&self.target_net, dir.join("target.mlp"))?;
        let mut state = String::new();
        writeln!(state, "env_steps={}", self.env_steps).unwrap();
        writeln!(state, "episodes={}", self.episodes).unwrap();
        std::fs::write(dir.join("agent_state.txt"), state).map_err(io)?;
        self.memory.save(dir.join("memory.bin"))
    }

    /// Restores an agent saved by [`Agent::save`].
    pub fn load(dir: impl AsRef<Path>, hyper: AgentHyperparameters) -> Result<Self, RlError> {
        let dir = dir.as_ref();
        let io = |e: std::io::Error| RlError::Io { path: dir.display().to_string(), source: e };
        let eval_net = load_checkpoint(dir.join("eval.mlp"))?;
        let target_net = load_checkpoint(dir.join("target.mlp"))?;
        let text = std::fs::read_to_string(dir.join("agent_state.txt")).map_err(io)?;
        let mut env_steps = 0usize;
        let mut episodes = 0usize;
        for line in text.lines() {
            if let Some(v) = line.strip_prefix("env_steps=") {
                env_steps = v.trim().parse().map_err(|_| RlError::MalformedMemory)?;
            } else if let Some(v) = line.strip_prefix("episodes=") {
                episodes = v.trim().parse().map_err(|_| RlError::MalformedMemory)?;
            }
        }
        let memory = ReplayMemory::load(dir.join("memory.bin"))?;
        let optimizer = OptimizerState::new(hyper.optimizer, &eval_net);
        Ok(Self { eval_net, target_net, memory, hyper, optimizer, env_steps, episodes })
    }
}
