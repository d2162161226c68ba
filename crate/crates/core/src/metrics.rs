//! Partition comparison metrics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::binarize::Partition;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub rand_index: f64,
    /// Variation of information in nats.
    pub vi: f64,
    pub k_found: usize,
    pub k_true: usize,
}

fn check(p: &Partition, t: &Partition) -> Result<()> {
    if p.len() != t.len() {
        return Err(Error::LengthMismatch {
            expected: t.len(),
            got: p.len(),
        });
    }
    Ok(())
}

/// Nonzero cells of the contingency table in a fixed order.
fn contingency(p: &Partition, t: &Partition) -> BTreeMap<(usize, usize), usize> {
    let mut joint = BTreeMap::new();
    for i in 0..p.len() {
        *joint.entry((p.label(i), t.label(i))).or_insert(0) += 1;
    }
    joint
}

fn pairs(m: usize) -> f64 {
    let m = m as f64;
    m * (m - 1.0) / 2.0
}

/// Fraction of point pairs on which `p` and `t` agree.
pub fn rand_index(p: &Partition, t: &Partition) -> Result<f64> {
    check(p, t)?;
    let n = p.len();
    if n < 2 {
        return Err(Error::invalid(
            "partition",
            "rand index needs at least 2 points",
        ));
    }
    let both: f64 = contingency(p, t).values().map(|&c| pairs(c)).sum();
    let in_p: f64 = p.cell_sizes().iter().map(|&c| pairs(c)).sum();
    let in_t: f64 = t.cell_sizes().iter().map(|&c| pairs(c)).sum();
    let total = pairs(n);
    // Agreeing pairs: together in both, plus apart in both.
    let apart = total - in_p - in_t + both;
    Ok((both + apart) / total)
}

/// `H(p) + H(t) - 2 I(p, t)` in nats.
pub fn variation_of_information(p: &Partition, t: &Partition) -> Result<f64> {
    check(p, t)?;
    let n = p.len();
    if n == 0 {
        return Ok(0.0);
    }
    let (a, b) = (p.cell_sizes(), t.cell_sizes());
    let nf = n as f64;
    // H(p | t) + H(t | p), one term per nonzero cell; identical partitions
    // give exactly ln 1 = 0 everywhere.
    let vi: f64 = contingency(p, t)
        .iter()
        .map(|(&(i, j), &c)| {
            let c = c as f64;
            -c / nf * ((c / a[i] as f64).ln() + (c / b[j] as f64).ln())
        })
        .sum();
    Ok(vi.max(0.0))
}

pub fn evaluate(p: &Partition, t: &Partition) -> Result<MetricReport> {
    Ok(MetricReport {
        rand_index: rand_index(p, t)?,
        vi: variation_of_information(p, t)?,
        k_found: p.k(),
        k_true: t.k(),
    })
}
