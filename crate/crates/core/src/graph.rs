//! Similarity graphs over point clouds and the random-walk Laplacian.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::binarize::Partition;
use crate::error::{Error, Result};

/// Points in R^d with optional ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    points: DMatrix<f64>,
    labels: Option<Vec<usize>>,
}

impl DataSet {
    /// `points` is n×d, one point per row.
    pub fn new(points: DMatrix<f64>, labels: Option<Vec<usize>>) -> Result<Self> {
        let (n, d) = points.shape();
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 points, got {n}"
            )));
        }
        if d < 1 {
            return Err(Error::InvalidInput("points have zero dimensions".into()));
        }
        for i in 0..n {
            for j in 0..d {
                if !points[(i, j)].is_finite() {
                    return Err(Error::NonFiniteInput { row: i, col: j });
                }
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: labels.len(),
                });
            }
            let kt = labels.iter().max().map_or(0, |&m| m + 1);
            let mut seen = vec![false; kt];
            for &l in labels {
                seen[l] = true;
            }
            if let Some(missing) = seen.iter().position(|&s| !s) {
                return Err(Error::InvalidInput(format!(
                    "label ids must be contiguous from 0; {missing} is missing"
                )));
            }
        }
        Ok(Self { points, labels })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Option<Vec<usize>>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::LengthMismatch {
                expected: d,
                got: bad.len(),
            });
        }
        let points = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
        Self::new(points, labels)
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn n(&self) -> usize {
        self.points.nrows()
    }

    pub fn d(&self) -> usize {
        self.points.ncols()
    }

    /// Ground-truth partition, if labels are present.
    pub fn truth(&self) -> Option<Partition> {
        self.labels.as_deref().map(Partition::from_labels)
    }

    /// Number of true clusters.
    pub fn k_true(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().max().map_or(0, |&m| m + 1))
    }

    fn sq_dist(&self, i: usize, j: usize) -> f64 {
        let a = self.points.row(i);
        let b = self.points.row(j);
        a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
    }

    /// Symmetric matrix of squared Euclidean distances.
    pub fn squared_distances(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self.sq_dist(i, j);
                out[(i, j)] = d;
                out[(j, i)] = d;
            }
        }
        out
    }
}

/// Symmetric nonnegative pairwise similarities and their row sums.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    s: DMatrix<f64>,
    degrees: DVector<f64>,
}

impl SimilarityMatrix {
    /// Validates symmetry (exact), nonnegativity and finiteness.
    pub fn new(s: DMatrix<f64>) -> Result<Self> {
        let (n, m) = s.shape();
        if n != m {
            return Err(Error::InvalidInput(format!(
                "similarity matrix must be square, got {n}x{m}"
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let v = s[(i, j)];
                if !v.is_finite() {
                    return Err(Error::NonFiniteInput { row: i, col: j });
                }
                if v < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "negative similarity {v} at ({i}, {j})"
                    )));
                }
                if v != s[(j, i)] {
                    return Err(Error::InvalidInput(format!(
                        "similarity matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self::from_trusted(s))
    }

    fn from_trusted(s: DMatrix<f64>) -> Self {
        let degrees = DVector::from_iterator(s.nrows(), s.row_iter().map(|r| r.sum()));
        Self { s, degrees }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn degrees(&self) -> &DVector<f64> {
        &self.degrees
    }

    pub fn n(&self) -> usize {
        self.s.nrows()
    }
}

/// k-nearest-neighbour similarity: `s_ij = 1` if either point is among the
/// other's `k` nearest neighbours (symmetric OR rule), else 0.
///
/// A point is never its own neighbour; distance ties go to the lower index.
pub fn knn_similarity(data: &DataSet, k: usize) -> Result<SimilarityMatrix> {
    let n = data.n();
    if k == 0 {
        return Err(Error::invalid("k", "must be at least 1"));
    }
    if k >= n {
        return Err(Error::KTooLarge { k, n });
    }
    let dist = data.squared_distances();
    let mut s = DMatrix::zeros(n, n);
    let mut order: Vec<usize> = Vec::with_capacity(n - 1);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        order.sort_by(|&a, &b| dist[(i, a)].total_cmp(&dist[(i, b)]).then(a.cmp(&b)));
        for &j in &order[..k] {
            s[(i, j)] = 1.0;
            s[(j, i)] = 1.0;
        }
    }
    Ok(SimilarityMatrix::from_trusted(s))
}

/// Gaussian similarity `exp(-|x_i - x_j|^2 / sigma^2)`, diagonal included (= 1).
pub fn gaussian_similarity(data: &DataSet, sigma: f64) -> Result<SimilarityMatrix> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("sigma", format!("{sigma} must be positive")));
    }
    let sigma2 = sigma * sigma;
    let mut s = data.squared_distances();
    s.apply(|d| *d = (-*d / sigma2).exp());
    Ok(SimilarityMatrix::from_trusted(s))
}

/// Similarity construction, written `knn:<k>` or `gaussian:<sigma>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimilarityFn {
    Knn(usize),
    Gaussian(f64),
}

impl SimilarityFn {
    pub fn build(&self, data: &DataSet) -> Result<SimilarityMatrix> {
        match *self {
            SimilarityFn::Knn(k) => knn_similarity(data, k),
            SimilarityFn::Gaussian(sigma) => gaussian_similarity(data, sigma),
        }
    }
}

impl std::fmt::Display for SimilarityFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SimilarityFn::Knn(k) => write!(f, "knn:{k}"),
            SimilarityFn::Gaussian(s) => write!(f, "gaussian:{s}"),
        }
    }
}

impl std::str::FromStr for SimilarityFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::invalid(
                "similarity-fn",
                format!("{s:?} is not knn:<k> or gaussian:<sigma>"),
            )
        };
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "knn" => Ok(SimilarityFn::Knn(arg.parse().map_err(|_| bad())?)),
            "gaussian" => {
                let sigma: f64 = arg.parse().map_err(|_| bad())?;
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(bad());
                }
                Ok(SimilarityFn::Gaussian(sigma))
            }
            _ => Err(bad()),
        }
    }
}

impl serde::Serialize for SimilarityFn {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for SimilarityFn {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `L_rw = I - D^-1 S` together with the similarity it was built from.
#[derive(Debug, Clone)]
pub struct Laplacian {
    l: DMatrix<f64>,
    source: Arc<SimilarityMatrix>,
}

impl Laplacian {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn source(&self) -> &SimilarityMatrix {
        &self.source
    }

    pub fn n(&self) -> usize {
        self.l.nrows()
    }
}

/// Fails with [`Error::IsolatedVertex`] on the first zero-degree point.
pub fn laplacian_rw(sim: &SimilarityMatrix) -> Result<Laplacian> {
    laplacian_rw_shared(Arc::new(sim.clone()))
}

pub fn laplacian_rw_shared(sim: Arc<SimilarityMatrix>) -> Result<Laplacian> {
    let n = sim.n();
    if let Some(i) = sim.degrees.iter().position(|&d| d <= 0.0) {
        return Err(Error::IsolatedVertex(i));
    }
    let mut l = DMatrix::zeros(n, n);
    for i in 0..n {
        let d = sim.degrees[i];
        for j in 0..n {
            let off = sim.s[(i, j)] / d;
            l[(i, j)] = if i == j { 1.0 - off } else { -off };
        }
    }
    Ok(Laplacian { l, source: sim })
}

/// Connected components of the graph with an edge wherever `s_ij > 0`,
/// labeled by smallest member index.
pub fn connected_components(sim: &SimilarityMatrix) -> Partition {
    let n = sim.n();
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = next;
        stack.push(start);
        while let Some(u) = stack.pop() {
            for (v, l) in label.iter_mut().enumerate() {
                if *l == usize::MAX && sim.s[(u, v)] > 0.0 {
                    *l = next;
                    stack.push(v);
                }
            }
        }
        next += 1;
    }
    Partition::from_labels(&label)
}
