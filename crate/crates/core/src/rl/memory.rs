//! Bounded replay memory with uniform batch sampling and binary
//! persistence.

use std::io::{Read, Write};
use std::path::Path;

use rand_chacha::ChaCha8Rng;

use crate::table::ClassLabel;

use super::{RlError, Transition};

const MAGIC: &[u8; 4] = b"RMEM";
const VERSION: u32 = 1;

/// Ring buffer: insertion beyond capacity evicts the oldest transition.
#[derive(Debug, Clone)]
pub struct ReplayMemory {
    capacity: usize,
    buffer: Vec<Transition>,
    head: usize,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        Self { capacity: capacity.max(1), buffer: Vec::new(), head: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn push(&mut self, transition: Transition) {
        if self.buffer.len() < self.capacity {
            self.buffer.push(transition);
        } else {
            self.buffer[self.head] = transition;
            self.head = (self.head + 1) % self.capacity;
        }
    }

    /// Uniform sample of `batch_size` distinct transitions.
    pub fn sample(
        &self,
        batch_size: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<&Transition>, RlError> {
        if self.buffer.len() < batch_size {
            return Err(RlError::InsufficientMemory { have: self.buffer.len(), need: batch_size });
        }
        let picked = rand::seq::index::sample(rng, self.buffer.len(), batch_size);
        Ok(picked.iter().map(|i| &self.buffer[i]).collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.buffer.iter()
    }

    /// Writes the whole memory as a length-prefixed binary record stream.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RlError> {
        let path = path.as_ref();
        let io = |e: std::io::Error| RlError::Io { path: path.display().to_string(), source: e };
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(io)?;
            }
        }
        let mut out: Vec<u8> = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.capacity as u64).to_le_bytes());
        out.extend_from_slice(&(self.buffer.len() as u64).to_le_bytes());
        for t in &self.buffer {
            let mut record: Vec<u8> = Vec::new();
            record.extend_from_slice(&(t.state.len() as u32).to_le_bytes());
            for v in &t.state {
                record.extend_from_slice(&v.to_le_bytes());
            }
            record.push(t.action.code() as u8);
            record.extend_from_slice(&t.reward.to_le_bytes());
            record.extend_from_slice(&(t.next_state.len() as u32).to_le_bytes());
            for v in &t.next_state {
                record.extend_from_slice(&v.to_le_bytes());
            }
            record.push(u8::from(t.done));
            out.extend_from_slice(&(record.len() as u32).to_le_bytes());
            out.extend_from_slice(&record);
        }
        let mut file = std::fs::File::create(path).map_err(io)?;
        file.write_all(&out).map_err(io)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RlError> {
        let path = path.as_ref();
        let io = |e: std::io::Error| RlError::Io { path: path.display().to_string(), source: e };
        let mut bytes = Vec::new();
        std::fs::File::open(path).map_err(io)?.read_to_end(&mut bytes).map_err(io)?;

        let mut at = 0usize;
        let mut take = |n: usize| -> Result<&[u8], RlError> {
            let s = bytes.get(at..at + n).ok_or(RlError::MalformedMemory)?;
            at += n;
            Ok(s)
        };
        if take(4)? != MAGIC {
            return Err(RlError::MalformedMemory);
        }
        if u32::from_le_bytes(take(4)?.try_into().unwrap()) != VERSION {
            return Err(RlError::MalformedMemory);
        }
        let capacity = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
        let count = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
        let mut memory = ReplayMemory::new(capacity);
        for _ in 0..count {
            let len = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
            let record = take(len)?.to_vec();
            memory.push(decode_record(&record)?);
        }
        Ok(memory)
    }
}

fn take_bytes<'a>(record: &'a [u8], at: &mut usize, n: usize) -> Result<&'a [u8], RlError> {
    let s = record.get(*at..*at + n).ok_or(RlError::MalformedMemory)?;
    *at += n;
    Ok(s)
}

fn take_vector(record: &[u8], at: &mut usize) -> Result<Vec<f64>, RlError> {
    let dim = u32::from_le_bytes(take_bytes(record, at, 4)?.try_into().unwrap()) as usize;
    let mut out = Vec::with_capacity(dim);
    for _ in 0..dim {
        out.push(f64::from_le_bytes(take_bytes(record, at, 8)?.try_into().unwrap()));
    }
    Ok(out)
}

fn decode_record(record: &[u8]) -> Result<Transition, RlError> {
    let mut at = 0usize;
    let state = take_vector(record, &mut at)?;
    let action_code = take_bytes(record, &mut at, 1)?[0] as i64;
    let action = ClassLabel::from_code(action_code).ok_or(RlError::InvalidAction(action_code))?;
    let reward = f64::from_le_bytes(take_bytes(record, &mut at, 8)?.try_into().unwrap());
    let next_state = take_vector(record, &mut at)?;
    let done = match take_bytes(record, &mut at, 1)?[0] {
        0 => false,
        1 => true,
        _ => return Err(RlError::MalformedMemory),
    };
    if at != record.len() {
        return Err(RlError::MalformedMemory);
    }
    Ok(Transition { state, action, reward, next_state, done })
}
