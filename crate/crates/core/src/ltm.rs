//! Latent tree extension of a fitted latent class model, and the rounding
//! driver that uses it to choose how many eigenvectors to use.
//!
//! For a hard partition `C_1..C_k` of a class model, each cell gets a binary
//! latent `Y_r` that is 1 exactly when `Y = r`. Every binary vector from the
//! eigenvectors after the first `q` hangs off the `Y_r` whose cell covers its
//! support `D_s` best, with
//!
//! ```text
//! P(e_s = 1 | Y_r = 1) = |D_s ∩ C_r| / |C_r|
//! P(e_s = 1 | Y_r = 0) = |D_s - C_r| / (n - |C_r|)
//! ```
//!
//! Because `Y_r` is a deterministic function of `Y`, the tree collapses to a
//! class model whose extra feature columns use one of those two values per
//! state. The secondary part has no fitted parameters; it only scores how
//! well a partition explains the later eigenvectors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binarize::{binarize_eigensystem, check_delta, BinaryVector, Origin, Partition};
use crate::error::{Error, Result};
use crate::lcm::{
    bic_score, hard_assign, log_sum_exp, select_k_patterns, EmConfig, FeatureData, HardAssignment,
    LCModel, LogTable, Patterns, SMOOTHING,
};
use crate::spectra::EigenSystem;

/// How the secondary part contributes to the BIC parameter count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DofMode {
    /// Two parameters per secondary vector; the deterministic `Y_r` tables
    /// are structural and count zero.
    #[default]
    Structural,
    /// Additionally counts `k` parameters per `Y_r` table.
    CountLinks,
}

impl std::str::FromStr for DofMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "structural" => Ok(DofMode::Structural),
            "count-links" => Ok(DofMode::CountLinks),
            other => Err(Error::invalid(
                "ltm-dof-mode",
                format!("{other:?} is not one of structural, count-links"),
            )),
        }
    }
}

/// Where one secondary binary vector is attached and its two conditionals,
/// stored exactly as the count ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Attachment {
    pub origin: Option<Origin>,
    /// Cell index `r` (into the hard partition).
    pub cell: usize,
    /// `|D_s ∩ C_r|`.
    pub overlap: usize,
    /// `|D_s|`.
    pub support: usize,
    /// `P(e = 1 | Y_r = 1)`.
    pub p_in: f64,
    /// `P(e = 1 | Y_r = 0)`.
    pub p_out: f64,
}

/// Attaches one binary vector to the cell of `partition` that covers its
/// support best (lowest cell index on ties).
pub fn attach(partition: &Partition, bv: &BinaryVector) -> Result<Attachment> {
    if bv.len() != partition.len() {
        return Err(Error::LengthMismatch {
            expected: partition.len(),
            got: bv.len(),
        });
    }
    let n = partition.len();
    let sizes = partition.cell_sizes();
    let mut overlap = vec![0usize; partition.k()];
    for i in bv.support() {
        overlap[partition.label(i)] += 1;
    }
    let support = bv.support_size();
    if support == 0 {
        return Ok(Attachment {
            origin: Some(bv.origin()),
            cell: 0,
            overlap: 0,
            support: 0,
            p_in: 0.0,
            p_out: 0.0,
        });
    }
    let mut cell = 0;
    for (r, &o) in overlap.iter().enumerate() {
        if o > overlap[cell] {
            cell = r;
        }
    }
    let outside = n - sizes[cell];
    if outside == 0 {
        return Err(Error::SingleCluster);
    }
    Ok(Attachment {
        origin: Some(bv.origin()),
        cell,
        overlap: overlap[cell],
        support,
        p_in: overlap[cell] as f64 / sizes[cell] as f64,
        p_out: (support - overlap[cell]) as f64 / outside as f64,
    })
}

/// Latent class model plus its secondary part.
#[derive(Debug, Clone, PartialEq)]
pub struct LTModel {
    primary: LCModel,
    clusters: Vec<Vec<usize>>,
    /// Model state of each cell.
    cell_state: Vec<usize>,
    attachments: Vec<Attachment>,
    smoothing: f64,
    dof_mode: DofMode,
}

/// Extends `m` with the given secondary binary vectors.
///
/// `hard` must be the hard assignment of `m` over the same points.
pub fn extend_to_ltm(
    m: &LCModel,
    hard: &HardAssignment,
    secondary: &[BinaryVector],
) -> Result<LTModel> {
    if hard.cell_state.iter().any(|&s| s >= m.k()) {
        return Err(Error::InvalidInput(
            "hard assignment refers to states the model does not have".into(),
        ));
    }
    let attachments = secondary
        .iter()
        .map(|bv| attach(&hard.partition, bv))
        .collect::<Result<Vec<_>>>()?;
    Ok(LTModel {
        primary: m.clone(),
        clusters: hard.partition.cells(),
        cell_state: hard.cell_state.clone(),
        attachments,
        smoothing: SMOOTHING,
        dof_mode: DofMode::default(),
    })
}

impl LTModel {
    pub fn primary(&self) -> &LCModel {
        &self.primary
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn attachments(&self) -> &[Attachment] {
        &self.attachments
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    /// Floor applied to secondary conditionals when evaluating likelihoods.
    /// Zero disables it.
    pub fn with_smoothing(mut self, eps: f64) -> Self {
        self.smoothing = eps;
        self
    }

    pub fn with_dof_mode(mut self, mode: DofMode) -> Self {
        self.dof_mode = mode;
        self
    }

    pub fn dof(&self) -> usize {
        let k = self.primary.k();
        let links = match self.dof_mode {
            DofMode::Structural => 0,
            DofMode::CountLinks => self.clusters.len() * k,
        };
        self.primary.dof() + 2 * self.attachments.len() + links
    }

    /// Per-state conditionals of every primary and secondary feature, with
    /// the `Y_r` links resolved and the floor applied to secondary entries.
    fn extended_cond(&self) -> nalgebra::DMatrix<f64> {
        let k = self.primary.k();
        let fp = self.primary.num_features();
        let mut state_cell = vec![None; k];
        for (c, &s) in self.cell_state.iter().enumerate() {
            state_cell[s] = Some(c);
        }
        let eps = self.smoothing;
        nalgebra::DMatrix::from_fn(fp + self.attachments.len(), k, |f, y| {
            if f < fp {
                return self.primary.cond()[(f, y)];
            }
            let a = &self.attachments[f - fp];
            let p = if state_cell[y] == Some(a.cell) {
                a.p_in
            } else {
                a.p_out
            };
            p.clamp(eps, 1.0 - eps)
        })
    }

    pub(crate) fn loglik_patterns(&self, pat: &Patterns) -> Result<f64> {
        let table = LogTable::new(self.primary.prior(), &self.extended_cond());
        let mut buf = vec![0.0; self.primary.k()];
        let mut total = 0.0;
        for (p, ones) in pat.ones.iter().enumerate() {
            table.fill(ones, &mut buf);
            let l = log_sum_exp(&buf);
            if !l.is_finite() {
                let row = pat.of_row.iter().position(|&q| q == p).unwrap_or(0);
                return Err(Error::NonFiniteLikelihood(row));
            }
            total += pat.counts[p] * l;
        }
        Ok(total)
    }
}

fn combined(m: &LTModel, primary: &FeatureData, secondary: &FeatureData) -> Result<FeatureData> {
    if primary.num_features() != m.primary.num_features() {
        return Err(Error::LengthMismatch {
            expected: m.primary.num_features(),
            got: primary.num_features(),
        });
    }
    if secondary.num_features() != m.attachments.len() {
        return Err(Error::LengthMismatch {
            expected: m.attachments.len(),
            got: secondary.num_features(),
        });
    }
    primary.concat(secondary)
}

/// Log-likelihood of primary and secondary features under the tree.
pub fn ltm_loglik(m: &LTModel, primary: &FeatureData, secondary: &FeatureData) -> Result<f64> {
    let data = combined(m, primary, secondary)?;
    m.loglik_patterns(&Patterns::new(&data))
}

/// `ltm_loglik - (d / 2) ln n`.
pub fn ltm_bic(m: &LTModel, primary: &FeatureData, secondary: &FeatureData) -> Result<f64> {
    let ll = ltm_loglik(m, primary, secondary)?;
    Ok(bic_score(ll, m.dof(), primary.n()))
}

/// Parameters of [`ltm_rounding`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundingParams {
    #[serde(rename = "K")]
    pub k_max: usize,
    pub delta: f64,
    pub seed: u64,
    pub restarts: usize,
    pub dof_mode: DofMode,
}

impl Default for RoundingParams {
    fn default() -> Self {
        Self {
            k_max: 40,
            delta: 0.1,
            seed: 0,
            restarts: 5,
            dof_mode: DofMode::Structural,
        }
    }
}

/// Scores for one value of q.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QRecord {
    pub q: usize,
    /// Cardinality of the class model chosen by BIC.
    pub k: usize,
    /// Number of nonempty clusters in its hard partition.
    pub clusters: usize,
    pub lcm_bic: f64,
    pub ltm_loglik: f64,
    pub ltm_bic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundingResult {
    pub partition: Partition,
    pub q_selected: usize,
    pub k_selected: usize,
    pub trace: Vec<QRecord>,
    pub params: RoundingParams,
    /// The best q was the largest one tried; K is probably too small.
    pub boundary: bool,
}

/// Model-based rounding: for each q in `[2, K/2]` fits a class model on the
/// first q binarized eigenvectors, extends it with the rest, and keeps the
/// partition whose tree has the highest BIC (smallest q on ties).
pub fn ltm_rounding(
    eigs: &EigenSystem,
    k_max: usize,
    delta: f64,
    restarts: usize,
    seed: u64,
) -> Result<RoundingResult> {
    ltm_rounding_with(
        eigs,
        &RoundingParams {
            k_max,
            delta,
            seed,
            restarts,
            ..RoundingParams::default()
        },
    )
}

pub fn ltm_rounding_with(eigs: &EigenSystem, params: &RoundingParams) -> Result<RoundingResult> {
    check_delta(params.delta)?;
    if params.restarts == 0 {
        return Err(Error::invalid("restarts", "must be at least 1"));
    }
    let k_max = params.k_max;
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
    let pairs = binarize_eigensystem(eigs, k_max, params.delta)?;
    let full = FeatureData::from_pairs(&pairs)?;
    let full_pat = Patterns::new(&full);

    let scored = (2..=q_max)
        .into_par_iter()
        .map(|q| score_q(q, &pairs, &full, &full_pat, params))
        .collect::<Result<Vec<_>>>()?;

    let mut best = 0;
    for (i, (rec, _)) in scored.iter().enumerate() {
        if rec.ltm_bic > scored[best].0.ltm_bic {
            best = i;
        }
    }
    let (rec, partition) = &scored[best];
    let boundary = rec.q == q_max;
    if boundary {
        log::warn!("best q equals K/2 = {q_max}; K is likely too small");
    }
    Ok(RoundingResult {
        partition: partition.clone(),
        q_selected: rec.q,
        k_selected: partition.k(),
        trace: scored.iter().map(|(r, _)| *r).collect(),
        params: *params,
        boundary,
    })
}

fn score_q(
    q: usize,
    pairs: &[(BinaryVector, BinaryVector)],
    full: &FeatureData,
    full_pat: &Patterns,
    params: &RoundingParams,
) -> Result<(QRecord, Partition)> {
    let primary = full.prefix(2 * q);
    let pat = Patterns::new(&primary);
    let cfg = EmConfig {
        restarts: params.restarts,
        seed: params.seed ^ q as u64,
        ..EmConfig::default()
    };
    let (model, ktrace) = select_k_patterns(&pat, &cfg);
    let lcm_bic = ktrace
        .iter()
        .find(|s| s.k == model.k())
        .map_or(f64::NEG_INFINITY, |s| s.bic);
    let hard = hard_assign(&model, &primary)?;
    let secondary: Vec<BinaryVector> = pairs[q..]
        .iter()
        .flat_map(|(p, m)| [p.clone(), m.clone()])
        .collect();
    let (ltm_loglik, ltm_bic) = match extend_to_ltm(&model, &hard, &secondary) {
        Ok(ltm) => {
            let ltm = ltm.with_dof_mode(params.dof_mode);
            let ll = ltm.loglik_patterns(full_pat)?;
            (ll, bic_score(ll, ltm.dof(), full.n()))
        }
        // Every point landed in one cell: the tree cannot be built, so this
        // q cannot win.
        Err(Error::SingleCluster) => (f64::NEG_INFINITY, f64::NEG_INFINITY),
        Err(e) => return Err(e),
    };
    Ok((
        QRecord {
            q,
            k: model.k(),
            clusters: hard.partition.k(),
            lcm_bic,
            ltm_loglik,
            ltm_bic,
        },
        hard.partition,
    ))
}
