//! Versioned binary checkpoint.
//!
//! Byte layout (all integers little-endian, parameters row-major f64):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "MLPN"
//! 4       4     version (u32, currently 1)
//! 8       1     output mode (0 = softmax, 1 = linear)
//! 9       3     reserved (zero)
//! 12      4     layer-size count L (u32)
//! 16      4*L   layer sizes (u32 each)
//! ...           for each layer l in 0..L-1:
//!                 weights (sizes[l+1] * sizes[l] f64, row-major),
//!                 biases  (sizes[l+1] f64)
//! ```

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{MLPModel, NeuralError, OutputMode};

const MAGIC: &[u8; 4] = b"MLPN";
const VERSION: u32 = 1;

fn io_err(path: &Path, source: std::io::Error) -> NeuralError {
    NeuralError::Io { path: path.display().to_string(), source }
}

pub fn save_checkpoint(model: &MLPModel, path: impl AsRef<Path>) -> Result<(), NeuralError> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| io_err(path, e))?;
        }
    }
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.push(match model.output_mode() {
        OutputMode::Softmax => 0,
        OutputMode::Linear => 1,
    });
    buf.extend_from_slice(&[0u8; 3]);
    let sizes = model.layer_sizes();
    buf.extend_from_slice(&(sizes.len() as u32).to_le_bytes());
    for &s in sizes {
        buf.extend_from_slice(&(s as u32).to_le_bytes());
    }
    for (w, b) in model.weights().iter().zip(model.biases()) {
        for v in w.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for v in b.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(&buf).map_err(|e| io_err(path, e))?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<MLPModel, NeuralError> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .map_err(|e| io_err(path, e))?
        .read_to_end(&mut bytes)
        .map_err(|e| io_err(path, e))?;

    let mut at = 0usize;
    let mut take = |n: usize| -> Result<&[u8], NeuralError> {
        let slice = bytes.get(at..at + n).ok_or(NeuralError::MalformedCheckpoint)?;
        at += n;
        Ok(slice)
    };

    if take(4)? != MAGIC {
        return Err(NeuralError::BadMagic);
    }
    let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
    if version != VERSION {
        return Err(NeuralError::UnsupportedVersion(version));
    }
    let output_mode = match take(1)?[0] {
        0 => OutputMode::Softmax,
        1 => OutputMode::Linear,
        _ => return Err(NeuralError::MalformedCheckpoint),
    };
    take(3)?;
    let n_sizes = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    if n_sizes < 2 {
        return Err(NeuralError::MalformedCheckpoint);
    }
    let mut sizes = Vec::with_capacity(n_sizes);
    for _ in 0..n_sizes {
        sizes.push(u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize);
    }
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for l in 0..n_sizes - 1 {
        let (rows, cols) = (sizes[l + 1], sizes[l]);
        let mut w = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            w.push(f64::from_le_bytes(take(8)?.try_into().unwrap()));
        }
        weights.push(
            Array2::from_shape_vec((rows, cols), w).map_err(|_| NeuralError::MalformedCheckpoint)?,
        );
        let mut b = Vec::with_capacity(rows);
        for _ in 0..rows {
            b.push(f64::from_le_bytes(take(8)?.try_into().unwrap()));
        }
        biases.push(Array1::from_vec(b));
    }
    if at != bytes.len() {
        return Err(NeuralError::MalformedCheckpoint);
    }
    MLPModel::from_parameters(weights, biases, output_mode)
}
