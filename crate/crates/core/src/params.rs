//! Named parameter storage and the binary checkpoint format.
//!
//! Checkpoint layout, all integers little-endian:
//!
//! ```text
//! magic    8 bytes  "SLOTFILL"
//! version  u32      currently 1
//! meta     u32 length + UTF-8 bytes (free-form, JSON for model checkpoints)
//! count    u32
//! count x  { u32 name length, name bytes, u32 rank, rank x u64 dims,
//!            product(dims) x f64 }
//! ```
//!
//! Values are always written as 64-bit floats, so an `f64` store round-trips
//! bit for bit.

use std::collections::HashMap;
use std::io::{self, Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::scalar::Scalar;
use crate::tensor::{GradientMap, Tensor, TensorError};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SLOTFILL";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// An ordered collection of named tensors. Insertion order is the id order
/// and the checkpoint order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore<T> {
    names: Vec<String>,
    values: Vec<Tensor<T>>,
    index: HashMap<String, ParamId>,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        Self {
            names: Vec::new(),
            values: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor<T>) -> Result<ParamId, TensorError> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(TensorError::Contract(format!("duplicate parameter name {name}")));
        }
        let id = ParamId(self.values.len());
        self.index.insert(name.clone(), id);
        self.names.push(name);
        self.values.push(value);
        Ok(id)
    }

    pub fn get(&self, id: ParamId) -> &Tensor<T> {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        &mut self.values[id.0]
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Tensor<T>)> {
        self.names
            .iter()
            .zip(&self.values)
            .enumerate()
            .map(|(i, (n, v))| (ParamId(i), n.as_str(), v))
    }

    /// Total number of scalar entries across all parameters.
    pub fn scalar_count(&self) -> usize {
        self.values.iter().map(Tensor::len).sum()
    }

    /// `theta <- theta - lr * grad` for every parameter present in `grads`.
    pub fn sgd_step(&mut self, grads: &GradientMap<T>, lr: T) {
        for (id, g) in grads.params() {
            self.values[id.0].axpy(-lr, g);
        }
    }

    /// Replaces every value, keeping names and ids. Shapes must match.
    pub fn load_values_from(&mut self, other: &ParamStore<T>) -> Result<(), TensorError> {
        for (_, name, value) in other.iter() {
            let own = self
                .id(name)
                .ok_or_else(|| TensorError::Contract(format!("unknown parameter {name}")))?;
            if self.values[own.0].shape() != value.shape() {
                return Err(TensorError::Shape {
                    op: "load",
                    left: self.values[own.0].shape().to_vec(),
                    right: value.shape().to_vec(),
                });
            }
            self.values[own.0] = value.clone();
        }
        Ok(())
    }

    pub fn write_checkpoint<W: Write>(&self, mut w: W, meta: &str) -> Result<(), CheckpointError> {
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        write_len(&mut w, meta.len())?;
        w.write_all(meta.as_bytes())?;
        write_len(&mut w, self.values.len())?;
        for (_, name, value) in self.iter() {
            write_len(&mut w, name.len())?;
            w.write_all(name.as_bytes())?;
            write_len(&mut w, value.rank())?;
            for &d in value.shape() {
                w.write_all(&(d as u64).to_le_bytes())?;
            }
            for v in value.data() {
                w.write_all(&v.as_f64().to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a checkpoint, returning the metadata string and the store.
    pub fn read_checkpoint<R: Read>(mut r: R) -> Result<(String, Self), CheckpointError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = read_u32(&mut r)?;
        if version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version(version));
        }
        let meta = read_string(&mut r)?;
        let count = read_u32(&mut r)? as usize;
        let mut store = Self::new();
        for _ in 0..count {
            let name = read_string(&mut r)?;
            let rank = read_u32(&mut r)? as usize;
            if rank == 0 || rank > 8 {
                return Err(CheckpointError::Malformed(format!("{name}: rank {rank}")));
            }
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                let mut b = [0u8; 8];
                r.read_exact(&mut b)?;
                shape.push(usize::try_from(u64::from_le_bytes(b)).map_err(|_| {
                    CheckpointError::Malformed(format!("{name}: dimension too large"))
                })?);
            }
            let len = shape
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .ok_or_else(|| CheckpointError::Malformed(format!("{name}: size overflow")))?;
            let mut data = Vec::with_capacity(len);
            for _ in 0..len {
                let mut b = [0u8; 8];
                r.read_exact(&mut b)?;
                data.push(T::lit(f64::from_le_bytes(b)));
            }
            store.add(name, Tensor::new(shape, data)?)?;
        }
        Ok((meta, store))
    }
}

/// Seeded i.i.d. `uniform[-range, range]` initializer. Parameters drawn in
/// the same order from the same seed are bitwise identical.
#[derive(Clone, Debug)]
pub struct UniformInit {
    rng: ChaCha8Rng,
    range: f64,
}

impl UniformInit {
    pub fn new(seed: u64, range: f64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            range,
        }
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn tensor<T: Scalar>(&mut self, shape: &[usize]) -> Tensor<T> {
        Tensor::uniform(shape, self.range, &mut self.rng)
    }
}

fn write_len<W: Write>(w: &mut W, n: usize) -> io::Result<()> {
    let n = u32::try_from(n).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "length exceeds u32"))?;
    w.write_all(&n.to_le_bytes())
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_string<R: Read>(r: &mut R) -> Result<String, CheckpointError> {
    let len = read_u32(r)? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| CheckpointError::Malformed(e.to_string()))
}
