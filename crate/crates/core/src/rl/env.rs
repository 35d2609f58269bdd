//! The training table as an episodic environment.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::table::ClassLabel;

use super::{RewardScheme, RlError};

/// Walks shuffled samples; an episode ends when a minority (serious or
/// fatal) sample is misclassified or the data is exhausted. On episode end
/// the environment reshuffles internally, so the returned next observation
/// is already the first sample of the following episode.
#[derive(Debug, Clone)]
pub struct Environment {
    features: Array2<f64>,
    labels: Vec<ClassLabel>,
    scheme: RewardScheme,
    order: Vec<usize>,
    step: usize,
    rng: ChaCha8Rng,
}

impl Environment {
    pub fn new(
        features: Array2<f64>,
        labels: Vec<ClassLabel>,
        scheme: RewardScheme,
    ) -> Result<Self, RlError> {
        if features.nrows() == 0 || features.nrows() != labels.len() {
            return Err(RlError::EmptyData);
        }
        let order: Vec<usize> = (0..features.nrows()).collect();
        Ok(Self { features, labels, scheme, order, step: 0, rng: ChaCha8Rng::seed_from_u64(0) })
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn observation_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn scheme(&self) -> &RewardScheme {
        &self.scheme
    }

    /// Steps taken in the current episode.
    pub fn step_count(&self) -> usize {
        self.step
    }

    fn observation(&self, position: usize) -> Vec<f64> {
        self.features.row(self.order[position]).to_vec()
    }

    /// Reseeds the shuffle stream, reshuffles, resets the step counter and
    /// returns the first sample.
    pub fn reset(&mut self, seed: u64) -> Vec<f64> {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.reshuffle();
        self.observation(0)
    }

    fn reshuffle(&mut self) {
        // Start from the identity order so the permutation depends only on
        // the rng stream, never on shuffle history.
        self.order = (0..self.features.nrows()).collect();
        self.order.shuffle(&mut self.rng);
        self.step = 0;
    }

    /// Label of the sample the next `step` call will score.
    pub fn current_label(&self) -> ClassLabel {
        self.labels[self.order[self.step]]
    }

    /// Scores a prediction for the current sample. Returns the next
    /// observation (the first of a fresh shuffle when the episode ended),
    /// the signed reward, and the episode-done flag.
    pub fn step(&mut self, action: ClassLabel) -> (Vec<f64>, f64, bool) {
        let label = self.current_label();
        let reward = self.scheme.reward(label, action);
        let minority_miss = label.is_minority() && action != label;
        let exhausted = self.step + 1 == self.order.len();
        let done = minority_miss || exhausted;
        if done {
            self.reshuffle();
        } else {
            self.step += 1;
        }
        (self.observation(self.step), reward, done)
    }
}
