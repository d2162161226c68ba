//! Leading eigenpairs of the random-walk Laplacian.
//!
//! `L_rw` is not symmetric, so the solve goes through the generalized problem
//! `(D - S) u = lambda D u`. With `u = D^-1/2 v` this becomes the ordinary
//! symmetric problem on `I - D^-1/2 S D^-1/2`, whose eigenvectors are mapped
//! back and are then D-orthonormal.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::binarize::Partition;
use crate::error::{Error, Result};
use crate::graph::Laplacian;

/// Entries below this fraction of a column's largest magnitude are rounding
/// noise from the dense solver and are set to exactly zero.
pub const FLUSH_RELATIVE: f64 = 1e-10;

const SOLVER_EPS: f64 = 1e-14;
const SOLVER_SWEEPS_PER_ROW: usize = 1000;

/// The `K` smallest eigenpairs of `L_rw`, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl EigenSystem {
    /// Assembles an eigensystem from precomputed parts. Eigenvalues must be
    /// ascending and match the column count of `vectors`.
    pub fn from_parts(values: DVector<f64>, vectors: DMatrix<f64>) -> Result<Self> {
        if values.len() != vectors.ncols() {
            return Err(Error::LengthMismatch {
                expected: vectors.ncols(),
                got: values.len(),
            });
        }
        if values.as_slice().windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidInput("eigenvalues must be ascending".into()));
        }
        Ok(Self { values, vectors })
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// Number of eigenpairs held.
    pub fn k(&self) -> usize {
        self.values.len()
    }

    /// Number of data points.
    pub fn n(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn value(&self, j: usize) -> f64 {
        self.values[j]
    }

    pub fn vector(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.vectors.as_slice()[j * n..(j + 1) * n]
    }

    /// Copy with eigenvector `j` negated. Handy for sign-invariance checks.
    pub fn with_flipped(&self, j: usize) -> Self {
        let mut out = self.clone();
        out.vectors.column_mut(j).neg_mut();
        out
    }

    /// Copy restricted to the first `k` pairs.
    pub fn truncated(&self, k: usize) -> Self {
        let k = k.min(self.k());
        Self {
            values: self.values.rows(0, k).into_owned(),
            vectors: self.vectors.columns(0, k).into_owned(),
        }
    }
}

/// Computes the `k` smallest-eigenvalue eigenpairs of `lap`.
///
/// Each returned column is D-normalized, has rounding noise flushed to zero,
/// and is signed so that its largest-magnitude entry (lowest index on ties)
/// is positive.
pub fn leading_eigenpairs(lap: &Laplacian, k: usize) -> Result<EigenSystem> {
    let n = lap.n();
    if k > n {
        return Err(Error::KTooLarge { k, n });
    }
    if k < 1 {
        return Err(Error::invalid("K", "must be at least 1"));
    }
    let sim = lap.source();
    let s = sim.matrix();
    let sqrt_d: Vec<f64> = sim.degrees().iter().map(|d| d.sqrt()).collect();
    // Built directly from S so that the matrix is exactly symmetric.
    let sym = DMatrix::from_fn(n, n, |i, j| {
        let off = s[(i, j)] / (sqrt_d[i] * sqrt_d[j]);
        if i == j {
            1.0 - off
        } else {
            -off
        }
    });
    let eig = SymmetricEigen::try_new(sym, SOLVER_EPS, SOLVER_SWEEPS_PER_ROW * n.max(1))
        .ok_or(Error::SolverFailure)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .total_cmp(&eig.eigenvalues[b])
            .then(a.cmp(&b))
    });
    order.truncate(k);

    let values = DVector::from_iterator(k, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, k);
    for (col, &src) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(src);
        let mut u: Vec<f64> = (0..n).map(|i| v[i] / sqrt_d[i]).collect();
        normalize_column(&mut u);
        vectors.column_mut(col).copy_from_slice(&u);
    }
    Ok(EigenSystem { values, vectors })
}

fn normalize_column(u: &mut [f64]) {
    let (arg, peak) = u
        .iter()
        .enumerate()
        .fold((0, 0.0_f64), |(ai, am), (i, &x)| {
            if x.abs() > am {
                (i, x.abs())
            } else {
                (ai, am)
            }
        });
    if peak == 0.0 {
        return;
    }
    let floor = FLUSH_RELATIVE * peak;
    let flip = u[arg] < 0.0;
    for x in u.iter_mut() {
        if x.abs() <= floor {
            *x = 0.0;
        } else if flip {
            *x = -*x;
        }
    }
}

/// True iff the spread (max - min) of `vec` within every cell of
/// `partition` is at most `tol`.
pub fn is_piecewise_constant(vec: &[f64], partition: &Partition, tol: f64) -> bool {
    let mut lo = vec![f64::INFINITY; partition.k()];
    let mut hi = vec![f64::NEG_INFINITY; partition.k()];
    for (i, &x) in vec.iter().enumerate() {
        let c = partition.label(i);
        lo[c] = lo[c].min(x);
        hi[c] = hi[c].max(x);
    }
    lo.iter().zip(&hi).all(|(l, h)| h - l <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{laplacian_rw, SimilarityMatrix};

    fn sim(n: usize, edges: &[(usize, usize, f64)]) -> SimilarityMatrix {
        let mut s = DMatrix::zeros(n, n);
        for &(i, j, w) in edges {
            s[(i, j)] = w;
            s[(j, i)] = w;
        }
        SimilarityMatrix::new(s).unwrap()
    }

    #[test]
    fn two_node_closed_form() {
        // L_rw = [[1,-1],[-1,1]]: eigenvalues 0 and 2, eigenvectors (1,1) and (1,-1).
        let lap = laplacian_rw(&sim(2, &[(0, 1, 1.0)])).unwrap();
        let eig = leading_eigenpairs(&lap, 2).unwrap();
        assert!(eig.value(0).abs() < 1e-12);
        assert!((eig.value(1) - 2.0).abs() < 1e-12);
        let e0 = eig.vector(0);
        assert!((e0[0] - e0[1]).abs() < 1e-12);
        // D = I, so the D-normalized constant vector is 1/sqrt(2).
        assert!((e0[0] - 0.5_f64.sqrt()).abs() < 1e-12);
        let e1 = eig.vector(1);
        assert!((e1[0] + e1[1]).abs() < 1e-12);
        assert!(e1[0] > 0.0);
    }

    #[test]
    fn residuals_and_d_orthogonality() {
        let s = sim(
            6,
            &[
                (0, 1, 1.0),
                (1, 2, 0.5),
                (2, 3, 2.0),
                (3, 4, 1.0),
                (4, 5, 0.3),
                (5, 0, 1.2),
                (1, 4, 0.7),
            ],
        );
        let lap = laplacian_rw(&s).unwrap();
        let eig = leading_eigenpairs(&lap, 6).unwrap();
        let d = s.degrees();
        for j in 0..6 {
            let e = DVector::from_column_slice(eig.vector(j));
            let r = lap.matrix() * &e - &e * eig.value(j);
            assert!(r.amax() <= 1e-6 * eig.value(j).max(1.0));
            for l in 0..6 {
                let f = DVector::from_column_slice(eig.vector(l));
                let ip: f64 = (0..6).map(|i| e[i] * d[i] * f[i]).sum();
                let want = if j == l { 1.0 } else { 0.0 };
                assert!((ip - want).abs() < 1e-6);
            }
        }
        assert!(eig.values().as_slice().windows(2).all(|w| w[0] <= w[1]));
        assert!(eig.value(0).abs() < 1e-10);
        let e0 = eig.vector(0);
        let spread = e0.iter().cloned().fold(f64::MIN, f64::max)
            - e0.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread <= 1e-6 * e0[0].abs());
    }

    #[test]
    fn zero_multiplicity_counts_components() {
        let s = sim(
            7,
            &[
                (0, 1, 1.0),
                (1, 2, 1.0),
                (3, 4, 1.0),
                (4, 5, 1.0),
                (5, 6, 1.0),
                (3, 6, 1.0),
            ],
        );
        let eig = leading_eigenpairs(&laplacian_rw(&s).unwrap(), 4).unwrap();
        let zeros = eig.values().iter().filter(|&&v| v < 1e-8).count();
        assert_eq!(zeros, 2);
        assert!(eig.value(2) > 1e-6);
    }

    #[test]
    fn sign_convention_largest_entry_positive() {
        let s = sim(4, &[(0, 1, 1.0), (1, 2, 3.0), (2, 3, 0.5)]);
        let eig = leading_eigenpairs(&laplacian_rw(&s).unwrap(), 4).unwrap();
        for j in 0..4 {
            let v = eig.vector(j);
            let peak = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
            let first = v.iter().position(|x| x.abs() == peak).unwrap();
            assert!(v[first] > 0.0);
        }
    }

    #[test]
    fn repeated_solves_are_bit_identical() {
        let s = sim(
            5,
            &[
                (0, 1, 1.0),
                (1, 2, 0.2),
                (2, 3, 0.9),
                (3, 4, 0.4),
                (0, 4, 0.1),
            ],
        );
        let lap = laplacian_rw(&s).unwrap();
        assert_eq!(
            leading_eigenpairs(&lap, 5).unwrap(),
            leading_eigenpairs(&lap, 5).unwrap()
        );
    }

    #[test]
    fn k_larger_than_n() {
        let lap = laplacian_rw(&sim(2, &[(0, 1, 1.0)])).unwrap();
        assert!(matches!(
            leading_eigenpairs(&lap, 3),
            Err(Error::KTooLarge { k: 3, n: 2 })
        ));
    }

    #[test]
    fn piecewise_constant_checks() {
        let two = Partition::from_labels(&[0, 0, 1, 1]);
        assert!(is_piecewise_constant(&[3.0; 4], &two, 1e-12));
        let idx = [0.0, 1.0, 2.0, 3.0];
        assert!(is_piecewise_constant(
            &idx,
            &Partition::singletons(4),
            1e-12
        ));
        assert!(!is_piecewise_constant(&idx, &two, 0.5));
        assert!(is_piecewise_constant(&idx, &two, 1.0));
    }
}
