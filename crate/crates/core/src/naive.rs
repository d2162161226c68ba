//! Overlay-based rounding and the containment test.
//!
//! These methods only work in (or very near) the ideal case and serve as the
//! reference behaviour that the model-based rounding is checked against.

use serde::Serialize;

use crate::binarize::{binarize_eigensystem, refine_by, BinaryVector, Partition};
use crate::error::{Error, Result};
use crate::spectra::EigenSystem;

type Pairs = Vec<(BinaryVector, BinaryVector)>;

/// Outcome of [`naive_rounding2`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NaiveResult {
    pub partition: Partition,
    pub q_used: usize,
    /// `(cTest(P_q, q), cTest(P_{q+1}, q+1))` for every q visited.
    pub ctest_trace: Vec<(bool, bool)>,
    /// Set when no pass/fail transition was found and the last partition
    /// was returned.
    pub fallback: bool,
}

fn overlay_prefix(pairs: &[(BinaryVector, BinaryVector)], n: usize) -> Partition {
    pairs.iter().fold(Partition::single(n), |p, (plus, minus)| {
        refine_by(&refine_by(&p, plus), minus)
    })
}

/// Overlay of the partitions induced by the binarized eigenvectors `0..q`.
pub fn naive_rounding1(eigs: &EigenSystem, q: usize, delta: f64) -> Result<Partition> {
    if q < 2 || q > eigs.k() {
        return Err(Error::QOutOfRange {
            q,
            min: 2,
            max: eigs.k(),
        });
    }
    let pairs = binarize_eigensystem(eigs, q, delta)?;
    Ok(overlay_prefix(&pairs, eigs.n()))
}

fn containment(p: &Partition, secondary: &[(BinaryVector, BinaryVector)]) -> bool {
    secondary.iter().all(|(plus, minus)| {
        p.contains_within_one_cell(plus.support()) && p.contains_within_one_cell(minus.support())
    })
}

/// Containment test: every binary vector from eigenvectors `q..k_max`
/// (0-based) has its support inside one cell of `p`.
pub fn ctest(
    p: &Partition,
    q: usize,
    k_max: usize,
    eigs: &EigenSystem,
    delta: f64,
) -> Result<bool> {
    if k_max > eigs.k() || q >= k_max {
        return Err(Error::QOutOfRange {
            q,
            min: 0,
            max: k_max.min(eigs.k()).saturating_sub(1),
        });
    }
    if p.len() != eigs.n() {
        return Err(Error::LengthMismatch {
            expected: eigs.n(),
            got: p.len(),
        });
    }
    let pairs = binarize_eigensystem(eigs, k_max, delta)?;
    Ok(containment(p, &pairs[q..]))
}

/// Increases q from 2 to `k_max / 2` and returns the first partition that
/// passes the containment test while its successor fails.
pub fn naive_rounding2(eigs: &EigenSystem, k_max: usize, delta: f64) -> Result<NaiveResult> {
    if k_max > eigs.k() {
        return Err(Error::KTooLarge {
            k: k_max,
            n: eigs.k(),
        });
    }
    let q_max = k_max / 2;
    if q_max < 2 {
        return Err(Error::invalid(
            "K",
            format!("{k_max} leaves no q in [2, K/2]"),
        ));
    }
    let pairs: Pairs = binarize_eigensystem(eigs, k_max, delta)?;
    let n = eigs.n();

    let mut current = overlay_prefix(&pairs[..2], n);
    let mut trace = Vec::with_capacity(q_max - 1);
    for q in 2..=q_max {
        let (plus, minus) = &pairs[q];
        let next = refine_by(&refine_by(&current, plus), minus);
        let pass_q = containment(&current, &pairs[q..]);
        let pass_next = containment(&next, &pairs[q + 1..]);
        trace.push((pass_q, pass_next));
        if pass_q && !pass_next {
            return Ok(NaiveResult {
                partition: current,
                q_used: q,
                ctest_trace: trace,
                fallback: false,
            });
        }
        if q < q_max {
            current = next;
        }
    }
    log::warn!(
        "naive rounding found no pass/fail transition for q in [2, {q_max}]; K may be too small"
    );
    Ok(NaiveResult {
        partition: current,
        q_used: q_max,
        ctest_trace: trace,
        fallback: true,
    })
}
