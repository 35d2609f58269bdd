//! Deterministic shuffled train/validation split.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DataTable, TableError};

pub fn split(
    table: &DataTable,
    train_fraction: f64,
    seed: u64,
) -> Result<(DataTable, DataTable), TableError> {
    if table.n_rows() == 0 {
        return Err(TableError::EmptyTable);
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(TableError::BadFraction(train_fraction));
    }
    let mut order: Vec<usize> = (0..table.n_rows()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_train = (table.n_rows() as f64 * train_fraction).floor() as usize;
    let (train_rows, rest_rows) = order.split_at(n_train);
    Ok((table.gather(train_rows), table.gather(rest_rows)))
}
