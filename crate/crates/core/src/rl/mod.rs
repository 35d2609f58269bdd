//! Classification as sequential decision-making: an environment that walks
//! the shuffled training table, a reward scheme scaled by class ratios, a
//! bounded replay memory, and a DQN agent with evaluation and target
//! networks.

use thiserror::Error;

use crate::table::{ClassLabel, TableError};

mod agent;
mod env;
mod memory;
mod train;

pub use agent::{Agent, AgentHyperparameters};
pub use env::Environment;
pub use memory::ReplayMemory;
pub use train::{rl_predict, train_rl, EpisodeStats, RlLog, TrainedAgent};

/// Reward magnitudes per class: a correct prediction earns the class value,
/// an incorrect one loses it. Serious and slight rewards are the
/// serious/slight and fatal/slight count ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardScheme {
    pub r1: f64,
    pub r2: f64,
    pub fatal_reward: f64,
}

impl RewardScheme {
    /// Signed reward for predicting `action` on a sample labelled `label`.
    pub fn reward(&self, label: ClassLabel, action: ClassLabel) -> f64 {
        let magnitude = match label {
            ClassLabel::Fatal => self.fatal_reward,
            ClassLabel::Serious => self.r1,
            ClassLabel::Slight => self.r2,
        };
        if action == label {
            magnitude
        } else {
            -magnitude
        }
    }
}

/// Ratios from class counts: r1 = serious/slight, r2 = fatal/slight.
pub fn compute_reward_scheme(
    counts: &[usize; ClassLabel::COUNT],
) -> Result<RewardScheme, RlError> {
    let slight = counts[ClassLabel::Slight.index()];
    if slight == 0 {
        return Err(RlError::ZeroMajority);
    }
    Ok(RewardScheme {
        r1: counts[ClassLabel::Serious.index()] as f64 / slight as f64,
        r2: counts[ClassLabel::Fatal.index()] as f64 / slight as f64,
        fatal_reward: 1.0,
    })
}

/// One step of experience.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: ClassLabel,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

#[derive(Debug, Error)]
pub enum RlError {
    #[error("slight (majority) class has zero count")]
    ZeroMajority,
    #[error("environment has no data")]
    EmptyData,
    #[error("invalid action code {0}")]
    InvalidAction(i64),
    #[error("memory holds {have} transitions, need {need}")]
    InsufficientMemory { have: usize, need: usize },
    #[error("memory file is malformed")]
    MalformedMemory,
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Neural(#[from] crate::neural::NeuralError),
    #[error(transparent)]
    Table(#[from] TableError),
}
