//! Latent class models over binary features.
//!
//! A latent class model has one hidden class variable `Y` with `k` states and
//! treats the features as conditionally independent Bernoulli variables given
//! `Y`. Parameters are estimated with EM from random initial
//! responsibilities; the number of classes is chosen by BIC.
//!
//! Every probability is kept inside `[eps, 1 - eps]` (`eps` = [`SMOOTHING`] by
//! default). The M-step is the exact maximizer under those box constraints,
//! so EM stays monotone.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::binarize::{BinaryVector, Origin, Partition};
use crate::error::{Error, Result};

/// Default probability floor.
pub const SMOOTHING: f64 = 1e-4;

/// Upper bound on the number of classes tried by [`select_k`].
pub const MAX_CLUSTERS: usize = 20;

/// n×F binary matrix, one row per data point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureData {
    n: usize,
    f: usize,
    bits: Vec<bool>,
    origins: Vec<Option<Origin>>,
}

impl FeatureData {
    /// Builds from explicit rows. All rows must have the same length.
    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let f = rows.first().map_or(0, Vec::len);
        let mut bits = Vec::with_capacity(rows.len() * f);
        for r in rows {
            if r.len() != f {
                return Err(Error::LengthMismatch {
                    expected: f,
                    got: r.len(),
                });
            }
            bits.extend_from_slice(r);
        }
        Ok(Self {
            n: rows.len(),
            f,
            bits,
            origins: vec![None; f],
        })
    }

    /// One column per binary vector, in the given order.
    pub fn from_columns(columns: &[&BinaryVector]) -> Result<Self> {
        let n = columns.first().map_or(0, |c| c.len());
        if let Some(bad) = columns.iter().find(|c| c.len() != n) {
            return Err(Error::LengthMismatch {
                expected: n,
                got: bad.len(),
            });
        }
        let f = columns.len();
        let mut bits = vec![false; n * f];
        for (j, c) in columns.iter().enumerate() {
            for (i, &b) in c.bits().iter().enumerate() {
                bits[i * f + j] = b;
            }
        }
        Ok(Self {
            n,
            f,
            bits,
            origins: columns.iter().map(|c| Some(c.origin())).collect(),
        })
    }

    /// Columns ordered `e1+, e1-, e2+, e2-, ...`.
    pub fn from_pairs(pairs: &[(BinaryVector, BinaryVector)]) -> Result<Self> {
        let cols: Vec<&BinaryVector> = pairs.iter().flat_map(|(p, m)| [p, m]).collect();
        Self::from_columns(&cols)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_features(&self) -> usize {
        self.f
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.bits[i * self.f..(i + 1) * self.f]
    }

    pub fn origins(&self) -> &[Option<Origin>] {
        &self.origins
    }

    /// Column-wise concatenation of two feature sets over the same points.
    pub fn concat(&self, other: &FeatureData) -> Result<FeatureData> {
        if self.n != other.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let f = self.f + other.f;
        let mut bits = Vec::with_capacity(self.n * f);
        for i in 0..self.n {
            bits.extend_from_slice(self.row(i));
            bits.extend_from_slice(other.row(i));
        }
        let mut origins = self.origins.clone();
        origins.extend_from_slice(&other.origins);
        Ok(FeatureData {
            n: self.n,
            f,
            bits,
            origins,
        })
    }

    /// The first `f` columns.
    pub fn prefix(&self, f: usize) -> FeatureData {
        let f = f.min(self.f);
        let mut bits = Vec::with_capacity(self.n * f);
        for i in 0..self.n {
            bits.extend_from_slice(&self.row(i)[..f]);
        }
        FeatureData {
            n: self.n,
            f,
            bits,
            origins: self.origins[..f].to_vec(),
        }
    }
}

/// Distinct rows of a [`FeatureData`] with multiplicities, in order of first
/// occurrence. EM works on these instead of the raw rows.
#[derive(Debug, Clone)]
pub(crate) struct Patterns {
    pub ones: Vec<Vec<u32>>,
    pub counts: Vec<f64>,
    pub of_row: Vec<usize>,
    pub f: usize,
}

impl Patterns {
    pub fn new(data: &FeatureData) -> Self {
        let mut index: HashMap<&[bool], usize> = HashMap::new();
        let mut ones = Vec::new();
        let mut counts = Vec::new();
        let mut of_row = Vec::with_capacity(data.n);
        for i in 0..data.n {
            let row = data.row(i);
            let next = ones.len();
            let p = *index.entry(row).or_insert(next);
            if p == next {
                ones.push(
                    row.iter()
                        .enumerate()
                        .filter_map(|(j, &b)| b.then_some(j as u32))
                        .collect(),
                );
                counts.push(0.0);
            }
            counts[p] += 1.0;
            of_row.push(p);
        }
        Self {
            ones,
            counts,
            of_row,
            f: data.f,
        }
    }

    pub fn len(&self) -> usize {
        self.ones.len()
    }
}

/// Fitted latent class model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LCModel {
    prior: Vec<f64>,
    /// F×k, `cond[(f, y)] = P(feature f = 1 | Y = y)`.
    cond: DMatrix<f64>,
    feature_origin: Vec<Option<Origin>>,
}

impl LCModel {
    /// Builds a model from explicit parameters.
    pub fn new(prior: Vec<f64>, cond: DMatrix<f64>) -> Result<Self> {
        if prior.is_empty() {
            return Err(Error::invalid("prior", "needs at least one state"));
        }
        if cond.ncols() != prior.len() {
            return Err(Error::LengthMismatch {
                expected: prior.len(),
                got: cond.ncols(),
            });
        }
        let in_unit = |p: &f64| (0.0..=1.0).contains(p);
        if !prior.iter().all(in_unit) || !cond.iter().all(in_unit) {
            return Err(Error::invalid("probabilities", "must lie in [0, 1]"));
        }
        let total: f64 = prior.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("prior", format!("sums to {total}, not 1")));
        }
        let f = cond.nrows();
        Ok(Self {
            prior,
            cond,
            feature_origin: vec![None; f],
        })
    }

    /// Parameters read directly off a partition: prior = cell proportions,
    /// conditionals = within-cell feature frequencies, both floored at `eps`.
    pub fn from_partition(partition: &Partition, data: &FeatureData, eps: f64) -> Result<Self> {
        if partition.len() != data.n {
            return Err(Error::LengthMismatch {
                expected: data.n,
                got: partition.len(),
            });
        }
        let k = partition.k();
        let sizes = partition.cell_sizes();
        let mut ones = DMatrix::<f64>::zeros(data.f, k);
        for i in 0..data.n {
            let c = partition.label(i);
            for (j, &b) in data.row(i).iter().enumerate() {
                if b {
                    ones[(j, c)] += 1.0;
                }
            }
        }
        let counts: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
        let cond = DMatrix::from_fn(data.f, k, |j, c| {
            (ones[(j, c)] / counts[c]).clamp(eps, 1.0 - eps)
        });
        Ok(Self {
            prior: floored_proportions(&counts, eps),
            cond,
            feature_origin: data.origins.clone(),
        })
    }

    pub fn k(&self) -> usize {
        self.prior.len()
    }

    pub fn num_features(&self) -> usize {
        self.cond.nrows()
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn cond(&self) -> &DMatrix<f64> {
        &self.cond
    }

    pub fn feature_origin(&self) -> &[Option<Origin>] {
        &self.feature_origin
    }

    /// Free parameters: `(k - 1) + F * k`.
    pub fn dof(&self) -> usize {
        (self.k() - 1) + self.num_features() * self.k()
    }

    /// Same model with latent states reordered: new state `y` is old
    /// state `perm[y]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let k = self.k();
        assert_eq!(perm.len(), k);
        Self {
            prior: perm.iter().map(|&p| self.prior[p]).collect(),
            cond: DMatrix::from_fn(self.num_features(), k, |f, y| self.cond[(f, perm[y])]),
            feature_origin: self.feature_origin.clone(),
        }
    }

    fn check_width(&self, f: usize) -> Result<()> {
        if f != self.num_features() {
            return Err(Error::LengthMismatch {
                expected: self.num_features(),
                got: f,
            });
        }
        Ok(())
    }

    /// `log P(y) + sum_f log P(row_f | y)` for every state.
    pub fn log_joint(&self, row: &[bool]) -> Vec<f64> {
        (0..self.k())
            .map(|y| {
                let mut s = self.prior[y].ln();
                for (f, &b) in row.iter().enumerate() {
                    let p = self.cond[(f, y)];
                    s += if b { p.ln() } else { (1.0 - p).ln() };
                }
                s
            })
            .collect()
    }

    /// Total log-likelihood of `data` under the model.
    pub fn loglik(&self, data: &FeatureData) -> Result<f64> {
        self.check_width(data.f)?;
        let pat = Patterns::new(data);
        let table = LogTable::new(&self.prior, &self.cond);
        let mut buf = vec![0.0; self.k()];
        let mut total = 0.0;
        for (p, ones) in pat.ones.iter().enumerate() {
            table.fill(ones, &mut buf);
            total += pat.counts[p] * log_sum_exp(&buf);
        }
        Ok(total)
    }
}

/// Posterior `P(Y | row)`.
pub fn posterior(m: &LCModel, row: &[bool]) -> Result<Vec<f64>> {
    m.check_width(row.len())?;
    let mut lj = m.log_joint(row);
    normalize_log(&mut lj);
    Ok(lj)
}

/// Hard partition together with the latent state behind each cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardAssignment {
    pub partition: Partition,
    /// `cell_state[c]` is the model state whose points form cell `c`.
    pub cell_state: Vec<usize>,
}

impl HardAssignment {
    /// For partitions whose labels already coincide with model states.
    pub fn identity(partition: Partition) -> Self {
        let cell_state = (0..partition.k()).collect();
        Self {
            partition,
            cell_state,
        }
    }

    /// Cell of each model state, `None` for states that received no point.
    pub fn state_cell(&self, k: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; k];
        for (c, &s) in self.cell_state.iter().enumerate() {
            if s < k {
                out[s] = Some(c);
            }
        }
        out
    }
}

/// Maximum-posterior assignment (ties to the lowest state), canonically
/// relabeled; states without points disappear.
pub fn hard_assign(m: &LCModel, data: &FeatureData) -> Result<HardAssignment> {
    m.check_width(data.f)?;
    let pat = Patterns::new(data);
    let table = LogTable::new(&m.prior, &m.cond);
    let mut buf = vec![0.0; m.k()];
    let best: Vec<usize> = pat
        .ones
        .iter()
        .map(|ones| {
            table.fill(ones, &mut buf);
            argmax(&buf)
        })
        .collect();
    let states: Vec<usize> = pat.of_row.iter().map(|&p| best[p]).collect();
    let partition = Partition::from_labels(&states);
    let mut cell_state = vec![0; partition.k()];
    for (i, &s) in states.iter().enumerate() {
        cell_state[partition.label(i)] = s;
    }
    Ok(HardAssignment {
        partition,
        cell_state,
    })
}

pub fn hard_partition(m: &LCModel, data: &FeatureData) -> Result<Partition> {
    Ok(hard_assign(m, data)?.partition)
}

/// `loglik - (d / 2) ln n` with `d = (k - 1) + F * k`.
pub fn bic(m: &LCModel, data: &FeatureData) -> Result<f64> {
    let ll = m.loglik(data)?;
    Ok(bic_score(ll, m.dof(), data.n))
}

pub(crate) fn bic_score(loglik: f64, dof: usize, n: usize) -> f64 {
    loglik - 0.5 * dof as f64 * (n as f64).ln()
}

/// EM settings. Defaults: 5 restarts, tolerance 1e-6 on relative
/// log-likelihood improvement, at most 500 iterations, floor 1e-4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub restarts: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    pub smoothing: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            restarts: 5,
            seed: 0,
            tol: 1e-6,
            max_iter: 500,
            smoothing: SMOOTHING,
        }
    }
}

impl EmConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::invalid("restarts", "must be at least 1"));
        }
        if !(self.smoothing > 0.0 && self.smoothing < 0.5) {
            return Err(Error::invalid("smoothing", "must be in (0, 0.5)"));
        }
        Ok(())
    }
}

/// Result of one EM fit: the best run over all restarts.
#[derive(Debug, Clone)]
pub struct EmFit {
    pub model: LCModel,
    pub loglik: f64,
    /// Log-likelihood after every iteration of the winning run.
    pub trace: Vec<f64>,
    /// Restart index of the winning run.
    pub restart: usize,
}

/// Best-of-`restarts` EM fit with `k` latent states.
pub fn em_fit(data: &FeatureData, k: usize, restarts: usize, seed: u64) -> Result<(LCModel, f64)> {
    let cfg = EmConfig::default().with_restarts(restarts).with_seed(seed);
    let fit = em_fit_with(data, k, &cfg)?;
    Ok((fit.model, fit.loglik))
}

pub fn em_fit_with(data: &FeatureData, k: usize, cfg: &EmConfig) -> Result<EmFit> {
    if data.n == 0 || data.f == 0 {
        return Err(Error::EmptyData);
    }
    if k == 0 {
        return Err(Error::invalid("k", "must be at least 1"));
    }
    cfg.validate()?;
    let pat = Patterns::new(data);
    let mut fit = fit_patterns(&pat, k, cfg);
    fit.model.feature_origin = data.origins.clone();
    Ok(fit)
}

pub(crate) fn fit_patterns(pat: &Patterns, k: usize, cfg: &EmConfig) -> EmFit {
    if k == 1 {
        let resp = vec![1.0; pat.len()];
        let (prior, cond) = m_step(pat, &resp, 1, cfg.smoothing);
        let model = LCModel {
            prior,
            cond,
            feature_origin: vec![None; pat.f],
        };
        let (ll, _) = e_step(pat, &model, 1);
        return EmFit {
            model,
            loglik: ll,
            trace: vec![ll],
            restart: 0,
        };
    }
    let mut best: Option<EmFit> = None;
    for r in 0..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, r as u64));
        let run = em_run(pat, k, cfg, &mut rng, r);
        // Strict comparison keeps the lowest restart index on ties.
        if best.as_ref().is_none_or(|b| run.loglik > b.loglik) {
            best = Some(run);
        }
    }
    best.expect("restarts >= 1")
}

fn em_run(pat: &Patterns, k: usize, cfg: &EmConfig, rng: &mut ChaCha8Rng, restart: usize) -> EmFit {
    let mut resp = vec![0.0; pat.len() * k];
    for row in resp.chunks_mut(k) {
        let mut total = 0.0;
        for x in row.iter_mut() {
            let e: f64 = Exp1.sample(rng);
            *x = e;
            total += e;
        }
        row.iter_mut().for_each(|x| *x /= total);
    }
    let mut trace = Vec::new();
    let mut model = LCModel {
        prior: vec![],
        cond: DMatrix::zeros(0, 0),
        feature_origin: vec![None; pat.f],
    };
    let mut prev = f64::NEG_INFINITY;
    for _ in 0..cfg.max_iter.max(1) {
        let (prior, cond) = m_step(pat, &resp, k, cfg.smoothing);
        model.prior = prior;
        model.cond = cond;
        let (ll, r) = e_step(pat, &model, k);
        resp = r;
        trace.push(ll);
        let converged =
            prev.is_finite() && (ll - prev) < cfg.tol * prev.abs().max(f64::MIN_POSITIVE);
        prev = ll;
        if converged {
            break;
        }
    }
    EmFit {
        model,
        loglik: prev,
        trace,
        restart,
    }
}

/// Log-probability tables for fast evaluation over sparse rows:
/// `log P(row, y) = base[y] + sum_{f in ones} weight[f][y]`.
pub(crate) struct LogTable {
    base: Vec<f64>,
    weight: Vec<f64>,
    k: usize,
}

impl LogTable {
    pub fn new(prior: &[f64], cond: &DMatrix<f64>) -> Self {
        let k = prior.len();
        let f = cond.nrows();
        let mut base: Vec<f64> = prior.iter().map(|p| p.ln()).collect();
        let mut weight = vec![0.0; f * k];
        for j in 0..f {
            for y in 0..k {
                let p = cond[(j, y)];
                let l0 = (1.0 - p).ln();
                base[y] += l0;
                weight[j * k + y] = p.ln() - l0;
            }
        }
        Self { base, weight, k }
    }

    pub fn fill(&self, ones: &[u32], out: &mut [f64]) {
        out.copy_from_slice(&self.base);
        for &j in ones {
            let w = &self.weight[j as usize * self.k..(j as usize + 1) * self.k];
            for (o, &x) in out.iter_mut().zip(w) {
                *o += x;
            }
        }
    }
}

fn e_step(pat: &Patterns, m: &LCModel, k: usize) -> (f64, Vec<f64>) {
    let table = LogTable::new(&m.prior, &m.cond);
    let mut resp = vec![0.0; pat.len() * k];
    let mut ll = 0.0;
    for (p, row) in resp.chunks_mut(k).enumerate() {
        table.fill(&pat.ones[p], row);
        ll += pat.counts[p] * normalize_log(row);
    }
    (ll, resp)
}

fn m_step(pat: &Patterns, resp: &[f64], k: usize, eps: f64) -> (Vec<f64>, DMatrix<f64>) {
    let mut mass = vec![0.0; k];
    let mut ones = DMatrix::<f64>::zeros(pat.f, k);
    for (p, r) in resp.chunks(k).enumerate() {
        let c = pat.counts[p];
        for y in 0..k {
            mass[y] += c * r[y];
        }
        for &j in &pat.ones[p] {
            for y in 0..k {
                ones[(j as usize, y)] += c * r[y];
            }
        }
    }
    let cond = DMatrix::from_fn(pat.f, k, |j, y| {
        if mass[y] > 0.0 {
            (ones[(j, y)] / mass[y]).clamp(eps, 1.0 - eps)
        } else {
            0.5
        }
    });
    (floored_proportions(&mass, eps), cond)
}

/// Maximizer of `sum_y w_y ln p_y` over the simplex with `p_y >= eps`.
pub(crate) fn floored_proportions(weights: &[f64], eps: f64) -> Vec<f64> {
    let k = weights.len();
    let mut clamped = vec![false; k];
    loop {
        let n_clamped = clamped.iter().filter(|&&c| c).count();
        let free_mass = 1.0 - eps * n_clamped as f64;
        let free_total: f64 = weights
            .iter()
            .zip(&clamped)
            .filter(|(_, &c)| !c)
            .map(|(w, _)| w)
            .sum();
        let n_free = k - n_clamped;
        let share = |w: f64| {
            if free_total > 0.0 {
                free_mass * w / free_total
            } else {
                free_mass / n_free as f64
            }
        };
        let mut changed = false;
        for y in 0..k {
            if !clamped[y] && share(weights[y]) < eps {
                clamped[y] = true;
                changed = true;
            }
        }
        if !changed || n_free == 0 {
            return (0..k)
                .map(|y| if clamped[y] { eps } else { share(weights[y]) })
                .collect();
        }
    }
}

/// Normalizes log-weights in place into probabilities; returns the log of
/// the normalizer.
pub(crate) fn normalize_log(v: &mut [f64]) -> f64 {
    let lse = log_sum_exp(v);
    if lse.is_finite() {
        v.iter_mut().for_each(|x| *x = (*x - lse).exp());
    } else {
        let u = 1.0 / v.len() as f64;
        v.iter_mut().for_each(|x| *x = u);
    }
    lse
}

pub(crate) fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// SplitMix64 mixing of a base seed with a stream tag.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One row of the BIC search in [`select_k`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KScore {
    pub k: usize,
    pub loglik: f64,
    pub bic: f64,
}

/// Tries k = 2, 3, ... and stops as soon as BIC drops below the previous
/// value (or at [`MAX_CLUSTERS`]). Returns the best-scoring model.
pub fn select_k(data: &FeatureData, restarts: usize, seed: u64) -> Result<(LCModel, Vec<KScore>)> {
    let cfg = EmConfig::default().with_restarts(restarts).with_seed(seed);
    select_k_with(data, &cfg)
}

pub fn select_k_with(data: &FeatureData, cfg: &EmConfig) -> Result<(LCModel, Vec<KScore>)> {
    if data.n == 0 || data.f == 0 {
        return Err(Error::EmptyData);
    }
    cfg.validate()?;
    let pat = Patterns::new(data);
    let (mut model, trace) = select_k_patterns(&pat, cfg);
    model.feature_origin = data.origins.clone();
    Ok((model, trace))
}

pub(crate) fn select_k_patterns(pat: &Patterns, cfg: &EmConfig) -> (LCModel, Vec<KScore>) {
    let n = pat.of_row.len();
    let k_max = MAX_CLUSTERS.min(n).max(2);
    let mut trace: Vec<KScore> = Vec::new();
    let mut best: Option<(LCModel, f64)> = None;
    for k in 2..=k_max {
        let kcfg = EmConfig {
            seed: derive_seed(cfg.seed, k as u64),
            ..*cfg
        };
        let fit = fit_patterns(pat, k, &kcfg);
        let score = bic_score(fit.loglik, fit.model.dof(), n);
        let dropped = trace.last().is_some_and(|prev| score < prev.bic);
        trace.push(KScore {
            k,
            loglik: fit.loglik,
            bic: score,
        });
        if best.as_ref().is_none_or(|(_, b)| score > *b) {
            best = Some((fit.model, score));
        }
        if dropped {
            break;
        }
    }
    (best.expect("at least one k").0, trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(patterns: &[(&[u8], usize)]) -> FeatureData {
        let mut out = Vec::new();
        for (p, times) in patterns {
            for _ in 0..*times {
                out.push(p.iter().map(|&b| b == 1).collect());
            }
        }
        FeatureData::from_rows(&out).unwrap()
    }

    /// Log-likelihood of data under explicit parameters, summing directly
    /// over rows and states.
    fn brute_loglik(prior: &[f64], cond: &[Vec<f64>], data: &FeatureData) -> f64 {
        (0..data.n())
            .map(|i| {
                let row = data.row(i);
                prior
                    .iter()
                    .enumerate()
                    .map(|(y, &py)| {
                        py * row
                            .iter()
                            .enumerate()
                            .map(|(f, &b)| if b { cond[f][y] } else { 1.0 - cond[f][y] })
                            .product::<f64>()
                    })
                    .sum::<f64>()
                    .ln()
            })
            .sum()
    }

    #[test]
    fn k1_is_independent_bernoulli() {
        let data = rows(&[(&[1, 0, 1], 3), (&[0, 0, 1], 1), (&[1, 1, 1], 2)]);
        let (m, ll) = em_fit(&data, 1, 3, 7).unwrap();
        let means = [5.0 / 6.0, 2.0 / 6.0, 1.0 - SMOOTHING];
        for (f, &mu) in means.iter().enumerate() {
            assert!((m.cond()[(f, 0)] - mu).abs() < 1e-12);
        }
        let oracle = brute_loglik(
            &[1.0],
            &means.iter().map(|&p| vec![p]).collect::<Vec<_>>(),
            &data,
        );
        assert!((ll - oracle).abs() < 1e-9);
    }

    #[test]
    fn two_patterns_recover_analytic_optimum() {
        let a: &[u8] = &[1, 1, 0, 0, 1, 0];
        let b: &[u8] = &[0, 0, 1, 1, 0, 1];
        let data = rows(&[(a, 50), (b, 50)]);
        let (m, ll) = em_fit(&data, 2, 5, 1).unwrap();
        // Optimum: equal priors, conditionals at the floor/ceiling matching
        // each pattern.
        let eps = SMOOTHING;
        let cond: Vec<Vec<f64>> = (0..6)
            .map(|f| {
                let pa = if a[f] == 1 { 1.0 - eps } else { eps };
                let pb = if b[f] == 1 { 1.0 - eps } else { eps };
                vec![pa, pb]
            })
            .collect();
        let oracle = brute_loglik(&[0.5, 0.5], &cond, &data);
        assert!((ll - oracle).abs() < 1e-6, "{ll} vs {oracle}");
        let p = hard_partition(&m, &data).unwrap();
        let expect: Vec<usize> = (0..100).map(|i| usize::from(i >= 50)).collect();
        assert_eq!(p.assignment(), &expect[..]);
    }

    #[test]
    fn em_trace_is_monotone() {
        let data = rows(&[
            (&[1, 0, 1, 0], 7),
            (&[1, 1, 0, 0], 5),
            (&[0, 1, 1, 1], 9),
            (&[0, 0, 0, 1], 4),
            (&[1, 1, 1, 1], 2),
        ]);
        for k in 2..5 {
            let fit = em_fit_with(&data, k, &EmConfig::default().with_seed(k as u64)).unwrap();
            for w in fit.trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-9, "{:?}", fit.trace);
            }
            let direct = fit.model.loglik(&data).unwrap();
            assert!((direct - fit.loglik).abs() < 1e-9);
        }
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let data = rows(&[(&[1, 0, 1], 4), (&[0, 1, 1], 6), (&[0, 0, 0], 3)]);
        let a = em_fit(&data, 3, 4, 99).unwrap();
        let b = em_fit(&data, 3, 4, 99).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1.to_bits(), b.1.to_bits());
    }

    #[test]
    fn empty_data_rejected() {
        let none = FeatureData::from_rows(&[]).unwrap();
        assert!(matches!(em_fit(&none, 2, 1, 0), Err(Error::EmptyData)));
        let no_cols = FeatureData::from_rows(&[vec![], vec![]]).unwrap();
        assert!(matches!(em_fit(&no_cols, 2, 1, 0), Err(Error::EmptyData)));
    }

    #[test]
    fn posterior_examples() {
        let m1 = LCModel::new(vec![1.0], DMatrix::from_element(2, 1, 0.3)).unwrap();
        assert_eq!(posterior(&m1, &[true, false]).unwrap(), vec![1.0]);

        let flat = LCModel::new(vec![1.0 / 3.0; 3], DMatrix::from_element(2, 3, 0.7)).unwrap();
        for p in posterior(&flat, &[true, false]).unwrap() {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }

        // Bayes rule: 0.5*0.9 / (0.5*0.9 + 0.5*0.1).
        let m = LCModel::new(vec![0.5, 0.5], DMatrix::from_row_slice(1, 2, &[0.9, 0.1])).unwrap();
        let post = posterior(&m, &[true]).unwrap();
        assert!((post[0] - 0.9).abs() < 1e-12);
        assert!((post[1] - 0.1).abs() < 1e-12);
        assert!(posterior(&m, &[true, true]).is_err());
    }

    #[test]
    fn hard_partition_k1_is_single_cell() {
        let data = rows(&[(&[1, 0], 2), (&[0, 1], 2)]);
        let (m, _) = em_fit(&data, 1, 1, 0).unwrap();
        assert_eq!(hard_partition(&m, &data).unwrap(), Partition::single(4));
    }

    #[test]
    fn hard_assignment_tracks_states() {
        // State 1 wins for the first row, state 0 for the second.
        let m = LCModel::new(vec![0.5, 0.5], DMatrix::from_row_slice(1, 2, &[0.2, 0.8])).unwrap();
        let data = rows(&[(&[1], 1), (&[0], 1)]);
        let h = hard_assign(&m, &data).unwrap();
        assert_eq!(h.partition.assignment(), &[0, 1]);
        assert_eq!(h.cell_state, vec![1, 0]);
        assert_eq!(h.state_cell(2), vec![Some(1), Some(0)]);
    }

    #[test]
    fn bic_closed_form_all_zero() {
        let data = rows(&[(&[0, 0], 4)]);
        let (m, ll) = em_fit(&data, 1, 1, 0).unwrap();
        let expect_ll = 2.0 * 4.0 * (1.0 - SMOOTHING).ln();
        assert!((ll - expect_ll).abs() < 1e-12);
        assert_eq!(m.dof(), 2);
        let b = bic(&m, &data).unwrap();
        assert!((b - (expect_ll - 4f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn bic_doubling_rows() {
        let once = rows(&[(&[1, 0], 3), (&[0, 1], 2)]);
        let twice = rows(&[(&[1, 0], 6), (&[0, 1], 4)]);
        let m = LCModel::new(
            vec![0.6, 0.4],
            DMatrix::from_row_slice(2, 2, &[0.9, 0.2, 0.1, 0.7]),
        )
        .unwrap();
        let b1 = bic(&m, &once).unwrap();
        let b2 = bic(&m, &twice).unwrap();
        let ll1 = m.loglik(&once).unwrap();
        let d = m.dof() as f64;
        assert!((b2 - (2.0 * ll1 - 0.5 * d * 10f64.ln())).abs() < 1e-9);
        assert!(((2.0 * b1 - b2) - (-d * 5f64.ln() + 0.5 * d * 10f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn select_k_two_patterns() {
        let data = rows(&[(&[1, 1, 0, 0, 1], 40), (&[0, 0, 1, 1, 0], 40)]);
        let (m, trace) = select_k(&data, 5, 3).unwrap();
        assert_eq!(m.k(), 2);
        assert_eq!(trace[0].k, 2);
        assert!(trace[1].bic < trace[0].bic);
        assert_eq!(trace.len(), 2);
    }

    #[test]
    fn select_k_constant_features() {
        let data = rows(&[(&[0, 0, 0, 0], 30)]);
        let (m, trace) = select_k(&data, 3, 0).unwrap();
        assert_eq!(m.k(), 2);
        assert_eq!(trace.len(), 2);
    }

    #[test]
    fn select_k_five_patterns() {
        let pats: Vec<Vec<u8>> = (0..5)
            .map(|c| (0..10).map(|f| u8::from(f / 2 == c)).collect())
            .collect();
        let layout: Vec<(&[u8], usize)> = pats.iter().map(|p| (p.as_slice(), 30)).collect();
        let data = rows(&layout);
        let (m, _) = select_k(&data, 5, 11).unwrap();
        assert_eq!(m.k(), 5);
        let p = hard_partition(&m, &data).unwrap();
        let truth: Vec<usize> = (0..150).map(|i| i / 30).collect();
        assert_eq!(p, Partition::from_labels(&truth));
    }

    #[test]
    fn label_permutation_leaves_scores_unchanged() {
        let data = rows(&[(&[1, 0, 1], 4), (&[0, 1, 1], 6), (&[0, 0, 0], 3)]);
        let (m, _) = em_fit(&data, 3, 3, 5).unwrap();
        let pm = m.permuted(&[2, 0, 1]);
        assert!((m.loglik(&data).unwrap() - pm.loglik(&data).unwrap()).abs() < 1e-9);
        assert!((bic(&m, &data).unwrap() - bic(&pm, &data).unwrap()).abs() < 1e-9);
        assert_eq!(
            hard_partition(&m, &data).unwrap(),
            hard_partition(&pm, &data).unwrap()
        );
    }

    #[test]
    fn floored_proportions_water_fill() {
        let p = floored_proportions(&[0.0, 1.0, 99.0], 0.01);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // 1/100 of the remaining 0.99 falls below the floor, so it is clamped too.
        assert_eq!(p[0], 0.01);
        assert_eq!(p[1], 0.01);
        assert!((p[2] - 0.98).abs() < 1e-12);
        let even = floored_proportions(&[0.0, 0.0], 0.01);
        assert_eq!(even, vec![0.5, 0.5]);
    }
}
