//! The episode loop: reset, epsilon-greedy prediction, reward collection,
//! transition storage, replay learning, periodic target sync.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::derive_seed;
use crate::neural::{softmax_rows, Encoder, MLPModel, NominalEncoding};
use crate::table::DataTable;

use super::{compute_reward_scheme, Agent, AgentHyperparameters, Environment, RlError, Transition};

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeStats {
    pub episode: usize,
    pub total_reward: f64,
    pub length: usize,
    /// Epsilon at episode end.
    pub epsilon: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RlLog {
    pub episodes: Vec<EpisodeStats>,
}

impl RlLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("episode,total_reward,length,epsilon\n");
        for e in &self.episodes {
            out.push_str(&format!(
                "{},{},{},{}\n",
                e.episode, e.total_reward, e.length, e.epsilon
            ));
        }
        out
    }
}

/// Target network plus the encoder feeding it; prediction reads the target
/// network out through a softmax.
#[derive(Debug, Clone)]
pub struct TrainedAgent {
    pub agent: Agent,
    pub encoder: Encoder,
}

impl TrainedAgent {
    pub fn predict(&self, table: &DataTable) -> Result<Vec<usize>, RlError> {
        let x = self.encoder.encode(table)?;
        rl_predict(self.agent.target_net(), &x)
    }
}

/// Softmax over the network's Q-values, then argmax (ties toward the lower
/// code).
pub fn rl_predict(network: &MLPModel, rows: &Array2<f64>) -> Result<Vec<usize>, RlError> {
    let q = network.forward(rows)?;
    let probs = softmax_rows(q);
    Ok(crate::neural::argmax_rows(&probs))
}

/// Runs `episodes` full episodes against the training table and returns the
/// trained agent (prediction uses its target network).
///
/// Rewards come from the table's own class ratios. Learning starts once the
/// memory holds a full batch; the target network syncs every
/// `target_update_every` episodes; epsilon decays linearly per environment
/// step.
pub fn train_rl(
    train: &DataTable,
    hidden: &[usize],
    hyper: &AgentHyperparameters,
    episodes: usize,
) -> Result<(TrainedAgent, RlLog), RlError> {
    let encoder = Encoder::fit(train, NominalEncoding::IntegerCodes)?;
    let features = encoder.encode(train)?;
    let labels = train.target_labels()?;
    let scheme = compute_reward_scheme(&train.class_counts()?)?;
    let mut env = Environment::new(features, labels, scheme)?;

    let mut agent = Agent::new(env.observation_dim(), hidden, hyper.clone())?;
    let mut action_rng = ChaCha8Rng::seed_from_u64(derive_seed(hyper.seed, 1));
    let mut sample_rng = ChaCha8Rng::seed_from_u64(derive_seed(hyper.seed, 2));

    let mut log = RlLog::default();
    let mut observation = env.reset(derive_seed(hyper.seed, 3));
    for episode in 1..=episodes {
        let mut total_reward = 0.0;
        let mut length = 0usize;
        loop {
            let epsilon = agent.epsilon();
            let action = agent.select_action(&observation, epsilon, &mut action_rng)?;
            let (next_observation, reward, done) = env.step(action);
            agent.store(Transition {
                state: std::mem::take(&mut observation),
                action,
                reward,
                next_state: next_observation.clone(),
                done,
            });
            agent.note_env_step();
            agent.learn(&mut sample_rng)?;
            observation = next_observation;
            total_reward += reward;
            length += 1;
            if done {
                break;
            }
        }
        agent.note_episode();
        if episode % agent.hyper().target_update_every.max(1) == 0 {
            agent.sync_target();
        }
        log.episodes.push(EpisodeStats {
            episode,
            total_reward,
            length,
            epsilon: agent.epsilon(),
        });
    }
    Ok((TrainedAgent { agent, encoder }, log))
}
