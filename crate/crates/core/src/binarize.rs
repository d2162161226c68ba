//! Binarization of eigenvectors and partitions induced by binary vectors.
//!
//! An eigenvector `e` is split into two indicator vectors with a confidence
//! parameter `delta` in (0, 1):
//!
//! ```text
//! e+ : bit_j = 1  iff  e_j > 0 and e_j > delta * max(e)
//! e- : bit_j = 1  iff  e_j < 0 and e_j < delta * min(e)
//! ```
//!
//! Each binary vector induces a two-cell partition (ones vs. zeros). Several
//! partitions are combined by [`overlay`], their coarsest common refinement.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::EigenSystem;

/// Which side of an eigenvector a binary vector was taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

/// Eigenvector index (0-based, ascending eigenvalue order) and side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Origin {
    pub eigen: usize,
    pub side: Side,
}

/// Indicator vector over the data points. May be all zero ("degenerated").
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryVector {
    bits: Vec<bool>,
    origin: Origin,
    support_size: usize,
}

impl BinaryVector {
    pub fn new(bits: Vec<bool>, origin: Origin) -> Self {
        let support_size = bits.iter().filter(|&&b| b).count();
        Self {
            bits,
            origin,
            support_size,
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn support_size(&self) -> usize {
        self.support_size
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn is_degenerate(&self) -> bool {
        self.support_size == 0
    }

    /// Indices of the points where the vector is 1.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("delta", format!("{delta} is not in (0, 1)")))
    }
}

/// Splits `vec` into its plus-side and minus-side binary vectors.
///
/// `eigen` is recorded as the origin of both outputs. Points exactly at a
/// threshold are excluded.
pub fn binarize(vec: &[f64], delta: f64, eigen: usize) -> Result<(BinaryVector, BinaryVector)> {
    check_delta(delta)?;
    let max = vec.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = vec.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = delta * max;
    let lo = delta * min;
    let plus = vec.iter().map(|&e| e > 0.0 && e > hi).collect();
    let minus = vec.iter().map(|&e| e < 0.0 && e < lo).collect();
    Ok((
        BinaryVector::new(
            plus,
            Origin {
                eigen,
                side: Side::Plus,
            },
        ),
        BinaryVector::new(
            minus,
            Origin {
                eigen,
                side: Side::Minus,
            },
        ),
    ))
}

/// Assignment of points to clusters with canonical labels: cluster 0 holds
/// point 0, cluster 1 holds the smallest point not in cluster 0, and so on.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<usize>", into = "Vec<usize>")]
pub struct Partition {
    assignment: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Builds a partition from arbitrary labels, relabeling canonically.
    pub fn from_labels<T: Copy + Eq + std::hash::Hash>(labels: &[T]) -> Self {
        let mut map: HashMap<T, usize> = HashMap::new();
        let assignment = labels
            .iter()
            .map(|&l| {
                let next = map.len();
                *map.entry(l).or_insert(next)
            })
            .collect();
        Self {
            assignment,
            k: map.len(),
        }
    }

    /// All points in one cell.
    pub fn single(n: usize) -> Self {
        Self {
            assignment: vec![0; n],
            k: usize::from(n > 0),
        }
    }

    /// Every point in its own cell.
    pub fn singletons(n: usize) -> Self {
        Self {
            assignment: (0..n).collect(),
            k: n,
        }
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn label(&self, i: usize) -> usize {
        self.assignment[i]
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Members of every cell, in label order; members ascending.
    pub fn cells(&self) -> Vec<Vec<usize>> {
        let mut cells = vec![Vec::new(); self.k];
        for (i, &l) in self.assignment.iter().enumerate() {
            cells[l].push(i);
        }
        cells
    }

    pub fn cell_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.assignment {
            sizes[l] += 1;
        }
        sizes
    }

    /// True if every cell of `self` lies inside a single cell of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        if self.len() != coarser.len() {
            return false;
        }
        let mut parent = vec![usize::MAX; self.k];
        for (i, &l) in self.assignment.iter().enumerate() {
            let c = coarser.assignment[i];
            if parent[l] == usize::MAX {
                parent[l] = c;
            } else if parent[l] != c {
                return false;
            }
        }
        true
    }

    /// True if every point of `support` carries the same label.
    pub fn contains_within_one_cell(&self, support: impl IntoIterator<Item = usize>) -> bool {
        let mut label = None;
        for i in support {
            match label {
                None => label = Some(self.assignment[i]),
                Some(l) if l != self.assignment[i] => return false,
                Some(_) => {}
            }
        }
        true
    }
}

impl From<Vec<usize>> for Partition {
    fn from(labels: Vec<usize>) -> Self {
        Partition::from_labels(&labels)
    }
}

impl From<Partition> for Vec<usize> {
    fn from(p: Partition) -> Self {
        p.assignment
    }
}

/// Two-cell partition (ones vs. zeros), or one cell when `bv` is constant.
pub fn partition_of(bv: &BinaryVector) -> Partition {
    Partition::from_labels(bv.bits())
}

fn overlay_pair(a: &Partition, b: &Partition) -> Partition {
    let mut map: HashMap<(usize, usize), usize> = HashMap::new();
    let assignment = a
        .assignment
        .iter()
        .zip(&b.assignment)
        .map(|(&x, &y)| {
            let next = map.len();
            *map.entry((x, y)).or_insert(next)
        })
        .collect();
    Partition {
        assignment,
        k: map.len(),
    }
}

/// Coarsest common refinement of `parts`.
///
/// Two points share an output cell iff they share a cell in every input. An
/// empty list yields an empty partition.
pub fn overlay(parts: &[Partition]) -> Result<Partition> {
    let Some(first) = parts.first() else {
        return Ok(Partition::single(0));
    };
    let mut acc = first.clone();
    for p in &parts[1..] {
        acc = overlay_with(&acc, p)?;
    }
    Ok(acc)
}

/// Overlay of two partitions over the same points.
pub fn overlay_with(a: &Partition, b: &Partition) -> Result<Partition> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(overlay_pair(a, b))
}

/// Overlays the partition induced by `bv` onto `p`.
pub(crate) fn refine_by(p: &Partition, bv: &BinaryVector) -> Partition {
    overlay_pair(p, &partition_of(bv))
}

/// Binarizes eigenvectors `0..count` of `eigs`, returning `(e+, e-)` pairs.
pub fn binarize_eigensystem(
    eigs: &EigenSystem,
    count: usize,
    delta: f64,
) -> Result<Vec<(BinaryVector, BinaryVector)>> {
    if count > eigs.k() {
        return Err(Error::KTooLarge {
            k: count,
            n: eigs.k(),
        });
    }
    (0..count)
        .map(|j| binarize(eigs.vector(j), delta, j))
        .collect()
}
