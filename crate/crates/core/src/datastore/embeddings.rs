//! Embedding storage and the `SLV1` binary file format.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! 0..4    magic "SLV1"
//! 4..8    dim   (u32)
//! 8..16   count (u64)
//! then `count` records:
//!         id length (u16), id bytes (UTF-8), dim x f32
//! ```

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::dense::DenseVector;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SLV1";

/// Fixed-dimension `f32` vectors keyed by id, stored row-major.
#[derive(Debug, Clone)]
pub struct EmbeddingSet {
    dim: usize,
    ids: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f32>,
    inv_norms: Vec<f64>,
}

impl EmbeddingSet {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("embedding dim must be positive".into()));
        }
        Ok(Self {
            dim,
            ids: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
            inv_norms: Vec::new(),
        })
    }

    pub fn with_capacity(dim: usize, capacity: usize) -> Result<Self> {
        let mut set = Self::new(dim)?;
        set.ids.reserve(capacity);
        set.index.reserve(capacity);
        set.data.reserve(capacity * dim);
        set.inv_norms.reserve(capacity);
        Ok(set)
    }

    pub fn insert(&mut self, id: &str, vector: &[f32]) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if vector.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        if id.is_empty() || id.len() > usize::from(u16::MAX) {
            return Err(Error::InvalidInput(format!(
                "embedding id length must be 1..=65535 bytes, got {}",
                id.len()
            )));
        }
        if self.index.contains_key(id) {
            return Err(Error::InvalidInput(format!("duplicate embedding id `{id}`")));
        }
        let norm = vector
            .iter()
            .map(|&c| f64::from(c) * f64::from(c))
            .sum::<f64>()
            .sqrt();
        self.index.insert(id.to_string(), self.ids.len());
        self.ids.push(id.to_string());
        self.data.extend_from_slice(vector);
        self.inv_norms.push(if norm > 0.0 { 1.0 / norm } else { 0.0 });
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn row_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn id(&self, row: usize) -> &str {
        &self.ids[row]
    }

    pub fn row(&self, row: usize) -> &[f32] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.row_of(id).map(|r| self.row(r))
    }

    pub fn vector(&self, id: &str) -> Result<DenseVector> {
        let row = self
            .get(id)
            .ok_or_else(|| Error::MissingEmbedding(id.to_string()))?;
        DenseVector::from_f32(row)
    }

    /// `1 / ||row||`, or zero for a zero row.
    pub fn inv_norms(&self) -> &[f64] {
        &self.inv_norms
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.ids
            .iter()
            .map(String::as_str)
            .zip(self.data.chunks_exact(self.dim))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("<embedding writer>", e);
        let dim = u32::try_from(self.dim)
            .map_err(|_| Error::InvalidInput("dim exceeds u32".into()))?;
        w.write_all(MAGIC).map_err(io)?;
        w.write_all(&dim.to_le_bytes()).map_err(io)?;
        w.write_all(&(self.len() as u64).to_le_bytes()).map_err(io)?;
        let mut buf = Vec::with_capacity(2 + 64 + 4 * self.dim);
        for (id, row) in self.iter() {
            buf.clear();
            buf.extend_from_slice(&(id.len() as u16).to_le_bytes());
            buf.extend_from_slice(id.as_bytes());
            for c in row {
                buf.extend_from_slice(&c.to_le_bytes());
            }
            w.write_all(&buf).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = OffsetReader { inner: r, offset: 0 };
        let magic: [u8; 4] = r.array("magic")?;
        if &magic != MAGIC {
            return Err(Error::Format {
                offset: 0,
                message: format!("bad magic {:?}, expected \"SLV1\"", String::from_utf8_lossy(&magic)),
            });
        }
        let dim = u32::from_le_bytes(r.array("dim")?) as usize;
        if dim == 0 {
            return Err(Error::Format {
                offset: 4,
                message: "dim must be positive".into(),
            });
        }
        let count = u64::from_le_bytes(r.array("count")?);
        let capacity = usize::try_from(count).unwrap_or(0).min(1 << 20);
        let mut set = Self::with_capacity(dim, capacity).expect("dim checked");
        let mut row = vec![0f32; dim];
        let mut raw = vec![0u8; 4 * dim];
        for _ in 0..count {
            let record_start = r.offset;
            let id_len = u16::from_le_bytes(r.array("record id length")?) as usize;
            let mut id = vec![0u8; id_len];
            r.fill(&mut id, "record id")?;
            let id = String::from_utf8(id).map_err(|_| Error::Format {
                offset: record_start + 2,
                message: "record id is not valid UTF-8".into(),
            })?;
            let vector_start = r.offset;
            r.fill(&mut raw, "record vector")?;
            for (c, b) in row.iter_mut().zip(raw.chunks_exact(4)) {
                *c = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
            }
            set.insert(&id, &row).map_err(|e| Error::Format {
                offset: if matches!(e, Error::NonFinite) {
                    vector_start
                } else {
                    record_start
                },
                message: e.to_string(),
            })?;
        }
        let mut extra = [0u8; 1];
        match r.inner.read(&mut extra) {
            Ok(0) => Ok(set),
            Ok(_) => Err(Error::Format {
                offset: r.offset,
                message: format!(
                    "trailing bytes after {count} records; record sizes do not match dim {dim}"
                ),
            }),
            Err(e) => Err(Error::Format {
                offset: r.offset,
                message: e.to_string(),
            }),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file))
    }

    /// Writes to a temporary sibling and renames it into place.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let tmp = path.with_extension("tmp");
        let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        self.write_to(BufWriter::new(file))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }
}

/// Bit-exact equality of ids, order and components.
impl PartialEq for EmbeddingSet {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.ids == other.ids
            && self.data.len() == other.data.len()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

struct OffsetReader<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> OffsetReader<R> {
    fn fill(&mut self, buf: &mut [u8], what: &str) -> Result<()> {
        let start = self.offset;
        self.inner.read_exact(buf).map_err(|e| Error::Format {
            offset: start,
            message: if e.kind() == std::io::ErrorKind::UnexpectedEof {
                format!("truncated {what}")
            } else {
                e.to_string()
            },
        })?;
        self.offset += buf.len() as u64;
        Ok(())
    }

    fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.fill(&mut buf, what)?;
        Ok(buf)
    }
}
