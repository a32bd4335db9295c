//! Versioned binary network checkpoints.
//!
//! Layout (all integers little-endian, floats as raw IEEE-754 bits):
//!
//! ```text
//! magic "MLPC" | version u32 | head tag u8 [| action_dim u32]
//! | dim count u32 | dims u32...
//! | per layer: weights f64 x (out*in) row-major, biases f64 x out
//! | adam flag u8 [| step u64 | per layer: m_w, v_w, m_b, v_b]
//! ```
//!
//! Round trips are bit-exact.

use super::adam::{AdamState, MomentPair};
use super::{MlpNetwork, OutputHead};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"MLPC";
const VERSION: u32 = 1;

pub fn save_network(net: &MlpNetwork, adam: Option<&AdamState>) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    match net.head() {
        OutputHead::Linear => buf.push(0),
        OutputHead::Softmax => buf.push(1),
        OutputHead::SquashedGaussian { action_dim } => {
            buf.push(2);
            buf.extend_from_slice(&(action_dim as u32).to_le_bytes());
        }
    }
    buf.extend_from_slice(&(net.dims().len() as u32).to_le_bytes());
    for &d in net.dims() {
        buf.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for layer in 0..net.num_layers() {
        for v in net.weights_row_major(layer) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for &v in net.biases(layer) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    match adam {
        None => buf.push(0),
        Some(state) => {
            buf.push(1);
            buf.extend_from_slice(&state.step.to_le_bytes());
            for pair in state.m.iter().chain(state.v.iter()) {
                for &v in pair.weights.iter().chain(pair.biases.iter()) {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
    }
    buf
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Checkpoint("truncated checkpoint".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64_vec(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n * 8)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn load_network(bytes: &[u8]) -> Result<(MlpNetwork, Option<AdamState>)> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let head = match r.u8()? {
        0 => OutputHead::Linear,
        1 => OutputHead::Softmax,
        2 => OutputHead::SquashedGaussian {
            action_dim: r.u32()? as usize,
        },
        t => return Err(Error::Checkpoint(format!("unknown head tag {t}"))),
    };
    let n_dims = r.u32()? as usize;
    if !(2..=64).contains(&n_dims) {
        return Err(Error::Checkpoint(format!("implausible dim count {n_dims}")));
    }
    let mut dims = Vec::with_capacity(n_dims);
    for _ in 0..n_dims {
        dims.push(r.u32()? as usize);
    }
    let mut rng = crate::rng::rng_from_seed(0);
    let mut net = MlpNetwork::new(&dims, head, &mut rng)?;
    for layer in 0..net.num_layers() {
        let n_w = dims[layer] * dims[layer + 1];
        let w = r.f64_vec(n_w)?;
        net.set_weights_row_major(layer, &w)?;
        let b = r.f64_vec(dims[layer + 1])?;
        net.set_biases(layer, &b)?;
    }
    let adam = match r.u8()? {
        0 => None,
        1 => {
            let step = r.u64()?;
            let mut state = AdamState::new_for(&net);
            state.step = step;
            let read_pairs = |r: &mut Reader| -> Result<Vec<MomentPair>> {
                let mut pairs = Vec::with_capacity(net.num_layers());
                for layer in 0..net.num_layers() {
                    pairs.push(MomentPair {
                        weights: r.f64_vec(dims[layer] * dims[layer + 1])?,
                        biases: r.f64_vec(dims[layer + 1])?,
                    });
                }
                Ok(pairs)
            };
            state.m = read_pairs(&mut r)?;
            state.v = read_pairs(&mut r)?;
            Some(state)
        }
        t => return Err(Error::Checkpoint(format!("unknown adam flag {t}"))),
    };
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint("trailing bytes in checkpoint".into()));
    }
    Ok((net, adam))
}
