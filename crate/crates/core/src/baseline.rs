//! K-means rounding on the rows of the leading-eigenvector matrix.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::binarize::Partition;
use crate::error::{Error, Result};
use crate::lcm::derive_seed;
use crate::spectra::EigenSystem;

const MAX_LLOYD_ITER: usize = 300;

/// n×k matrix whose rows are the spectral coordinates of the points.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    u: DMatrix<f64>,
}

impl Embedding {
    pub fn new(eigs: &EigenSystem, k: usize) -> Result<Self> {
        if k < 1 || k > eigs.k() {
            return Err(Error::KOutOfRange {
                k,
                min: 1,
                max: eigs.k(),
            });
        }
        Ok(Self {
            u: eigs.vectors().columns(0, k).into_owned(),
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    pub fn dim(&self) -> usize {
        self.u.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub partition: Partition,
    pub wcss: f64,
    /// WCSS after each Lloyd iteration of the winning restart.
    pub trace: Vec<f64>,
}

fn dist2(x: &DMatrix<f64>, i: usize, c: &[f64]) -> f64 {
    c.iter()
        .enumerate()
        .map(|(j, &cj)| {
            let d = x[(i, j)] - cj;
            d * d
        })
        .sum()
}

fn row(x: &DMatrix<f64>, i: usize) -> Vec<f64> {
    (0..x.ncols()).map(|j| x[(i, j)]).collect()
}

fn plus_plus(x: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = x.nrows();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centers = vec![row(x, first)];
    let mut d2: Vec<f64> = (0..n).map(|i| dist2(x, i, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut t = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(i);
                    if t < w {
                        break;
                    }
                    t -= w;
                }
            }
            pick.expect("positive total has a positive weight")
        } else {
            // All remaining points coincide with a center.
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[pick] = true;
        let c = row(x, pick);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(dist2(x, i, &c));
        }
        centers.push(c);
    }
    centers
}

fn lloyd(x: &DMatrix<f64>, mut centers: Vec<Vec<f64>>) -> (Vec<usize>, f64, Vec<f64>) {
    let n = x.nrows();
    let k = centers.len();
    let mut assign = vec![usize::MAX; n];
    let mut trace = Vec::new();
    for _ in 0..MAX_LLOYD_ITER {
        let mut changed = false;
        let mut wcss = 0.0;
        for (i, slot) in assign.iter_mut().enumerate() {
            let mut best = 0;
            let mut bd = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = dist2(x, i, center);
                if d < bd {
                    bd = d;
                    best = c;
                }
            }
            wcss += bd;
            if *slot != best {
                *slot = best;
                changed = true;
            }
        }
        trace.push(wcss);
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; x.ncols()]; k];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[assign[i]] += 1;
            for (j, s) in sums[assign[i]].iter_mut().enumerate() {
                *s += x[(i, j)];
            }
        }
        for c in 0..k {
            // An emptied cluster keeps its previous center.
            if counts[c] > 0 {
                for (j, s) in sums[c].iter().enumerate() {
                    centers[c][j] = s / counts[c] as f64;
                }
            }
        }
    }
    let wcss = *trace.last().expect("at least one iteration");
    (assign, wcss, trace)
}

/// Lloyd's algorithm from k-means++ seeding; best of `restarts` by WCSS,
/// lowest restart index on ties.
pub fn kmeans(x: &DMatrix<f64>, k: usize, restarts: usize, seed: u64) -> Result<KMeansFit> {
    let n = x.nrows();
    if k < 1 || k > n {
        return Err(Error::KOutOfRange { k, min: 1, max: n });
    }
    if restarts == 0 {
        return Err(Error::invalid("restarts", "must be at least 1"));
    }
    let mut best: Option<KMeansFit> = None;
    for r in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r as u64));
        let (assign, wcss, trace) = lloyd(x, plus_plus(x, k, &mut rng));
        if best.as_ref().is_none_or(|b| wcss < b.wcss) {
            best = Some(KMeansFit {
                partition: Partition::from_labels(&assign),
                wcss,
                trace,
            });
        }
    }
    Ok(best.expect("restarts >= 1"))
}

/// K-means on the first `k` eigenvectors, asking for `k` clusters.
pub fn kmeans_rounding(
    eigs: &EigenSystem,
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<Partition> {
    if k < 2 || k > eigs.k() {
        return Err(Error::KOutOfRange {
            k,
            min: 2,
            max: eigs.k(),
        });
    }
    let emb = Embedding::new(eigs, k)?;
    Ok(kmeans(emb.matrix(), k, restarts, seed)?.partition)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(rows: &[[f64; 2]]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), 2, |i, j| rows[i][j])
    }

    #[test]
    fn separated_groups() {
        let x = pts(&[
            [0.0, 0.0],
            [0.1, 0.0],
            [0.0, 0.1],
            [5.0, 5.0],
            [5.1, 5.0],
            [5.0, 5.1],
        ]);
        let fit = kmeans(&x, 2, 3, 7).unwrap();
        assert_eq!(fit.partition.assignment(), &[0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn k_equals_n_is_zero_cost() {
        let x = pts(&[[0.0, 0.0], [1.0, 0.0], [0.0, 3.0], [2.0, 2.0]]);
        let fit = kmeans(&x, 4, 1, 0).unwrap();
        assert_eq!(fit.wcss, 0.0);
        assert_eq!(fit.partition.k(), 4);
    }

    #[test]
    fn duplicate_points_still_seed() {
        let x = pts(&[[1.0, 1.0]; 3]);
        let fit = kmeans(&x, 3, 1, 0).unwrap();
        assert_eq!(fit.wcss, 0.0);
    }

    #[test]
    fn wcss_trace_non_increasing() {
        let x = DMatrix::from_fn(40, 2, |i, j| {
            ((i * 7 + j * 13) % 11) as f64 + 0.1 * i as f64
        });
        let fit = kmeans(&x, 4, 2, 3).unwrap();
        assert!(fit.trace.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let x = DMatrix::from_fn(30, 3, |i, j| ((i * 31 + j * 17) % 23) as f64);
        assert_eq!(kmeans(&x, 3, 4, 11).unwrap(), kmeans(&x, 3, 4, 11).unwrap());
    }

    #[test]
    fn bad_k() {
        let x = pts(&[[0.0, 0.0], [1.0, 1.0]]);
        assert!(matches!(
            kmeans(&x, 3, 1, 0),
            Err(Error::KOutOfRange { .. })
        ));
    }
}
