//! Multi-label targets for original and summary nodes, and fold splits.

use std::collections::{BTreeSet, HashMap};
use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{NodeId, TypeAssignment};
use crate::summary::{PartitionId, SummaryMapping};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LabelError {
    #[error("label matrix must be binary")]
    NotBinary,
    #[error("mapping covers {mapping} nodes but the label matrix has {rows} rows")]
    ShapeMismatch { mapping: usize, rows: usize },
    #[error("cannot build {folds} folds from {available} labeled nodes")]
    TooFewNodes { folds: usize, available: usize },
    #[error("at least two folds are required, got {0}")]
    TooFewFolds(usize),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

/// Dense node-by-class target matrix with a supervision mask.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    classes: Vec<String>,
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl LabelMatrix {
    pub fn zeros(rows: usize, classes: Vec<String>) -> Self {
        LabelMatrix {
            values: vec![0.0; rows * classes.len()],
            mask: vec![false; rows],
            classes,
        }
    }

    pub fn num_rows(&self) -> usize {
        self.mask.len()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.classes.len();
        &self.values[r * c..(r + 1) * c]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.classes.len() + c]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_masked(&self, r: usize) -> bool {
        self.mask[r]
    }

    pub fn masked_rows(&self) -> Vec<usize> {
        (0..self.num_rows()).filter(|&r| self.mask[r]).collect()
    }

    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// Same values, supervision restricted to `rows` (intersected with the
    /// current mask); rows leaving the mask are zeroed.
    pub fn restrict(&self, rows: &[usize]) -> LabelMatrix {
        let mut out = LabelMatrix::zeros(self.num_rows(), self.classes.clone());
        let c = self.num_classes();
        for &r in rows {
            if self.mask[r] {
                out.mask[r] = true;
                out.values[r * c..(r + 1) * c].copy_from_slice(self.row(r));
            }
        }
        out
    }

    /// Entries rounded at 0.5 with ties going to 1; the mask is kept.
    pub fn rounded(&self) -> LabelMatrix {
        LabelMatrix {
            classes: self.classes.clone(),
            values: self
                .values
                .iter()
                .map(|&v| if v >= 0.5 { 1.0 } else { 0.0 })
                .collect(),
            mask: self.mask.clone(),
        }
    }

    fn set_row(&mut self, r: usize, row: &[f64]) {
        let c = self.classes.len();
        self.values[r * c..(r + 1) * c].copy_from_slice(row);
        self.mask[r] = row.iter().any(|&v| v != 0.0);
    }
}

/// Row `v` has a 1 at column `t` iff node `v` carries type `t`.
pub fn binary_labels(types: &TypeAssignment, num_nodes: usize) -> LabelMatrix {
    let mut m = LabelMatrix::zeros(num_nodes, types.vocabulary.clone());
    let c = m.num_classes();
    for (&v, ts) in &types.assigned {
        if v >= num_nodes || ts.is_empty() {
            continue;
        }
        for &t in ts {
            m.values[v * c + t] = 1.0;
        }
        m.mask[v] = true;
    }
    m
}

/// Relative type frequencies per partition, counted over supervised
/// members only.
pub fn summary_labels(
    bl: &LabelMatrix,
    mapping: &SummaryMapping,
) -> Result<LabelMatrix, LabelError> {
    let lifted: Vec<Option<PartitionId>> = mapping.assignment().iter().map(|&p| Some(p)).collect();
    summary_labels_for(bl, &lifted, mapping.num_partitions())
}

/// As [`summary_labels`], for a partial node-to-partition map.
pub fn summary_labels_for(
    bl: &LabelMatrix,
    partition_of: &[Option<PartitionId>],
    num_partitions: usize,
) -> Result<LabelMatrix, LabelError> {
    if !bl.is_binary() {
        return Err(LabelError::NotBinary);
    }
    if partition_of.len() != bl.num_rows() {
        return Err(LabelError::ShapeMismatch {
            mapping: partition_of.len(),
            rows: bl.num_rows(),
        });
    }
    let c = bl.num_classes();
    let mut sums = vec![0.0; num_partitions * c];
    let mut counts = vec![0usize; num_partitions];
    for (v, p) in partition_of.iter().enumerate() {
        let Some(p) = *p else { continue };
        if !bl.mask[v] {
            continue;
        }
        counts[p] += 1;
        for (acc, &x) in sums[p * c..(p + 1) * c].iter_mut().zip(bl.row(v)) {
            *acc += x;
        }
    }
    let mut out = LabelMatrix::zeros(num_partitions, bl.classes.clone());
    for p in 0..num_partitions {
        if counts[p] == 0 {
            continue;
        }
        let n = counts[p] as f64;
        let row: Vec<f64> = sums[p * c..(p + 1) * c].iter().map(|s| s / n).collect();
        out.set_row(p, &row);
    }
    Ok(out)
}

/// One cross-validation fold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub fold: usize,
    pub seed: u64,
    pub train: Vec<NodeId>,
    pub test: Vec<NodeId>,
}

/// Shuffles `rows` with `seed` and cuts the permutation into `num_folds`
/// contiguous test blocks; the first `len % num_folds` blocks get one
/// extra row.
pub fn make_folds(rows: &[NodeId], num_folds: usize, seed: u64) -> Result<Vec<Split>, LabelError> {
    if num_folds < 2 {
        return Err(LabelError::TooFewFolds(num_folds));
    }
    if rows.len() < num_folds {
        return Err(LabelError::TooFewNodes {
            folds: num_folds,
            available: rows.len(),
        });
    }
    let mut order = rows.to_vec();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let base = order.len() / num_folds;
    let extra = order.len() % num_folds;
    let mut start = 0;
    let mut folds = Vec::with_capacity(num_folds);
    for fold in 0..num_folds {
        let len = base + usize::from(fold < extra);
        let test = order[start..start + len].to_vec();
        let train = order[..start]
            .iter()
            .chain(&order[start + len..])
            .copied()
            .collect();
        folds.push(Split {
            fold,
            seed,
            train,
            test,
        });
        start += len;
    }
    Ok(folds)
}

/// Writes `node_label<TAB>type<TAB>weight` for every nonzero entry of a
/// supervised row.
pub fn write_labels<W: Write>(
    m: &LabelMatrix,
    node_labels: &[String],
    mut out: W,
) -> io::Result<()> {
    for r in m.masked_rows() {
        for (c, &w) in m.row(r).iter().enumerate() {
            if w != 0.0 {
                writeln!(out, "{}\t{}\t{}", node_labels[r], m.classes[c], w)?;
            }
        }
    }
    out.flush()
}

/// Parses a label TSV against a node vocabulary. Classes are ordered
/// lexicographically so that files written for different graphs agree on
/// column order; pass `classes` to impose an existing vocabulary instead.
pub fn read_labels(
    text: &str,
    node_labels: &[String],
    classes: Option<&[String]>,
) -> Result<LabelMatrix, LabelError> {
    let index: HashMap<&str, usize> = node_labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.is_empty() {
            continue;
        }
        let syntax = |message: String| LabelError::Syntax {
            line: line_no,
            message,
        };
        let mut fields = line.rsplitn(3, '\t');
        let (Some(weight), Some(class), Some(node)) = (fields.next(), fields.next(), fields.next())
        else {
            return Err(syntax("expected node<TAB>type<TAB>weight".into()));
        };
        let weight: f64 = weight
            .trim()
            .parse()
            .map_err(|_| syntax(format!("invalid weight `{weight}`")))?;
        if !(0.0..=1.0).contains(&weight) {
            return Err(syntax(format!("weight {weight} outside [0, 1]")));
        }
        let &row = index
            .get(node)
            .ok_or_else(|| syntax(format!("unknown node `{node}`")))?;
        if class.is_empty() {
            return Err(syntax("empty type".into()));
        }
        entries.push((row, class.to_string(), weight, line_no));
    }
    let classes: Vec<String> = match classes {
        Some(c) => c.to_vec(),
        None => entries
            .iter()
            .map(|(_, c, _, _)| c.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
    };
    let class_index: HashMap<&str, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let mut m = LabelMatrix::zeros(node_labels.len(), classes.clone());
    let c = m.num_classes();
    for (row, class, weight, line) in entries {
        let &col = class_index
            .get(class.as_str())
            .ok_or_else(|| LabelError::Syntax {
                line,
                message: format!("type `{class}` not in the class vocabulary"),
            })?;
        m.values[row * c + col] = weight;
        if weight != 0.0 {
            m.mask[row] = true;
        }
    }
    Ok(m)
}
