//! Versioned binary checkpoint.
//!
//! Layout, all integers little-endian `u32`, floats `f64`:
//!
//! ```text
//! "SUMMGCN\0" version hidden classes nodes relations
//! class labels[classes]          (string = len + UTF-8 bytes)
//! node labels[nodes]
//! relations[relations]           (string label, u8 inverse flag)
//! input_self                     (matrix = rows cols values)
//! input_rel[relations]           (row count, node ids, matrix)
//! output_self
//! output_rel[relations]
//! "END\0"
//! ```

use std::io::{self, Write};

use super::matrix::DenseMatrix;
use super::model::{InputBlock, RgcnParams};
use super::structure::{MessagePassingStructure, RelationKey};
use super::RgcnError;

pub const MAGIC: &[u8; 8] = b"SUMMGCN\0";
pub const VERSION: u32 = 1;
const END: &[u8; 4] = b"END\0";

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("not a summgcn checkpoint (bad magic header)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("checkpoint truncated while reading {0}")]
    Truncated(&'static str),
    #[error("invalid checkpoint: {0}")]
    Invalid(String),
    #[error("checkpoint matrix `{0}` contains NaN or infinite values")]
    NonFinite(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Parameters plus the vocabularies needed to line them up with a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct RgcnModel {
    pub classes: Vec<String>,
    pub node_labels: Vec<String>,
    pub relations: Vec<RelationKey>,
    pub params: RgcnParams,
}

impl RgcnModel {
    /// Errors unless the model was built for exactly this structure.
    pub fn check_structure(&self, structure: &MessagePassingStructure) -> Result<(), RgcnError> {
        if self.relations != structure.relation_keys() {
            return Err(RgcnError::Shape(
                "relation vocabulary differs from the graph".into(),
            ));
        }
        self.params.check_structure(structure)
    }

    pub fn encode(&self) -> Result<Vec<u8>, CheckpointError> {
        let p = &self.params;
        let consistent = self.classes.len() == p.classes
            && self.node_labels.len() == p.num_nodes
            && self.relations.len() == p.input_rel.len()
            && self.relations.len() == p.output_rel.len();
        if !consistent {
            return Err(CheckpointError::Invalid(
                "model vocabularies do not match parameter shapes".into(),
            ));
        }
        for (name, m) in self.named_blocks() {
            if !m.is_finite() {
                return Err(CheckpointError::NonFinite(name));
            }
        }
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        for v in [
            VERSION,
            len32(p.hidden)?,
            len32(p.classes)?,
            len32(p.num_nodes)?,
            len32(self.relations.len())?,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for s in self.classes.iter().chain(&self.node_labels) {
            put_str(&mut out, s)?;
        }
        for key in &self.relations {
            put_str(&mut out, &key.label)?;
            out.push(u8::from(key.inverse));
        }
        put_matrix(&mut out, &p.input_self)?;
        for block in &p.input_rel {
            out.extend_from_slice(&len32(block.nodes.len())?.to_le_bytes());
            for &n in &block.nodes {
                out.extend_from_slice(&len32(n)?.to_le_bytes());
            }
            put_matrix(&mut out, &block.weights)?;
        }
        put_matrix(&mut out, &p.output_self)?;
        for m in &p.output_rel {
            put_matrix(&mut out, m)?;
        }
        out.extend_from_slice(END);
        Ok(out)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), CheckpointError> {
        w.write_all(&self.encode()?)?;
        w.flush()?;
        Ok(())
    }

    /// Decodes and validates a checkpoint. Never panics on malformed input.
    pub fn decode(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(MAGIC.len(), "magic")? != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = r.u32("version")?;
        if version != VERSION {
            return Err(CheckpointError::UnsupportedVersion(version));
        }
        let hidden = r.u32("hidden width")? as usize;
        let classes = r.u32("class count")? as usize;
        let num_nodes = r.u32("node count")? as usize;
        let num_rel = r.u32("relation count")? as usize;

        let class_labels = r.strings(classes, "class labels")?;
        let node_labels = r.strings(num_nodes, "node labels")?;
        r.ensure(num_rel.saturating_mul(5), "relations")?;
        let mut relations = Vec::with_capacity(num_rel);
        for _ in 0..num_rel {
            let label = r.string("relation label")?;
            let inverse = match r.take(1, "relation flag")?[0] {
                0 => false,
                1 => true,
                other => return Err(CheckpointError::Invalid(format!("relation flag {other}"))),
            };
            relations.push(RelationKey { label, inverse });
        }

        let input_self = r.matrix("input_self")?;
        expect_shape(&input_self, (num_nodes, hidden), "input_self")?;
        r.ensure(num_rel.saturating_mul(12), "first-layer relation blocks")?;
        let mut input_rel = Vec::with_capacity(num_rel);
        for i in 0..num_rel {
            let count = r.u32("row count")? as usize;
            r.ensure(count.saturating_mul(4), "row node ids")?;
            let mut nodes = Vec::with_capacity(count);
            for _ in 0..count {
                nodes.push(r.u32("row node id")? as usize);
            }
            if nodes.windows(2).any(|w| w[0] >= w[1])
                || nodes.last().is_some_and(|&n| n >= num_nodes)
            {
                return Err(CheckpointError::Invalid(format!(
                    "row ids of relation {i} not sorted or out of range"
                )));
            }
            let weights = r.matrix("input_rel")?;
            expect_shape(&weights, (count, hidden), "input_rel")?;
            input_rel.push(InputBlock { nodes, weights });
        }
        let output_self = r.matrix("output_self")?;
        expect_shape(&output_self, (hidden, classes), "output_self")?;
        r.ensure(num_rel.saturating_mul(8), "second-layer relation blocks")?;
        let mut output_rel = Vec::with_capacity(num_rel);
        for _ in 0..num_rel {
            let m = r.matrix("output_rel")?;
            expect_shape(&m, (hidden, classes), "output_rel")?;
            output_rel.push(m);
        }
        if r.take(END.len(), "end marker")? != END {
            return Err(CheckpointError::Invalid("missing end marker".into()));
        }
        if r.pos != bytes.len() {
            return Err(CheckpointError::Invalid(
                "trailing bytes after end marker".into(),
            ));
        }
        let model = RgcnModel {
            classes: class_labels,
            node_labels,
            relations,
            params: RgcnParams {
                num_nodes,
                hidden,
                classes,
                input_rel,
                input_self,
                output_rel,
                output_self,
            },
        };
        for (name, m) in model.named_blocks() {
            if !m.is_finite() {
                return Err(CheckpointError::NonFinite(name));
            }
        }
        Ok(model)
    }

    fn named_blocks(&self) -> Vec<(String, &DenseMatrix)> {
        let p = &self.params;
        let mut out = vec![("input_self".to_string(), &p.input_self)];
        for (k, b) in self.relations.iter().zip(&p.input_rel) {
            out.push((format!("input_rel[{k}]"), &b.weights));
        }
        out.push(("output_self".to_string(), &p.output_self));
        for (k, m) in self.relations.iter().zip(&p.output_rel) {
            out.push((format!("output_rel[{k}]"), m));
        }
        out
    }
}

fn expect_shape(m: &DenseMatrix, shape: (usize, usize), name: &str) -> Result<(), CheckpointError> {
    if m.shape() == shape {
        Ok(())
    } else {
        Err(CheckpointError::Invalid(format!(
            "{name} is {}×{}, expected {}×{}",
            m.rows(),
            m.cols(),
            shape.0,
            shape.1
        )))
    }
}

fn len32(n: usize) -> Result<u32, CheckpointError> {
    u32::try_from(n)
        .map_err(|_| CheckpointError::Invalid(format!("{n} exceeds the u32 range of the format")))
}

fn put_str(out: &mut Vec<u8>, s: &str) -> Result<(), CheckpointError> {
    out.extend_from_slice(&len32(s.len())?.to_le_bytes());
    out.extend_from_slice(s.as_bytes());
    Ok(())
}

fn put_matrix(out: &mut Vec<u8>, m: &DenseMatrix) -> Result<(), CheckpointError> {
    out.extend_from_slice(&len32(m.rows())?.to_le_bytes());
    out.extend_from_slice(&len32(m.cols())?.to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    /// Fails early when fewer than `n` bytes remain, before any allocation.
    fn ensure(&self, n: usize, what: &'static str) -> Result<(), CheckpointError> {
        if n > self.remaining() {
            Err(CheckpointError::Truncated(what))
        } else {
            Ok(())
        }
    }

    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], CheckpointError> {
        self.ensure(n, what)?;
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, CheckpointError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn string(&mut self, what: &'static str) -> Result<String, CheckpointError> {
        let len = self.u32(what)? as usize;
        let b = self.take(len, what)?;
        String::from_utf8(b.to_vec())
            .map_err(|_| CheckpointError::Invalid(format!("{what} is not UTF-8")))
    }

    fn strings(
        &mut self,
        count: usize,
        what: &'static str,
    ) -> Result<Vec<String>, CheckpointError> {
        self.ensure(count.saturating_mul(4), what)?;
        (0..count).map(|_| self.string(what)).collect()
    }

    fn matrix(&mut self, what: &'static str) -> Result<DenseMatrix, CheckpointError> {
        let rows = self.u32(what)? as usize;
        let cols = self.u32(what)? as usize;
        let len = rows
            .checked_mul(cols)
            .ok_or(CheckpointError::Truncated(what))?;
        self.ensure(len.saturating_mul(8), what)?;
        let data = self
            .take(len * 8, what)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        DenseMatrix::from_vec(rows, cols, data).ok_or(CheckpointError::Truncated(what))
    }
}
