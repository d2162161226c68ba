//! End-to-end clustering from a similarity matrix.

use serde::{Deserialize, Serialize};

use crate::baseline::kmeans_rounding;
use crate::binarize::Partition;
use crate::error::{Error, Result};
use crate::graph::{laplacian_rw, SimilarityMatrix};
use crate::ltm::{ltm_rounding_with, DofMode, QRecord, RoundingParams};
use crate::metrics::{evaluate, MetricReport};
use crate::naive::naive_rounding2;
use crate::spectra::{leading_eigenpairs, EigenSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ltm,
    Naive,
    Kmeans,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Ltm => "ltm",
            Method::Naive => "naive",
            Method::Kmeans => "kmeans",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub method: Method,
    #[serde(rename = "K")]
    pub k_max: usize,
    pub delta: f64,
    pub seed: u64,
    pub restarts: usize,
    /// Cluster count for k-means.
    pub k: Option<usize>,
    pub dof_mode: DofMode,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            method: Method::Ltm,
            k_max: 40,
            delta: 0.1,
            seed: 0,
            restarts: 5,
            k: None,
            dof_mode: DofMode::Structural,
        }
    }
}

impl ClusterParams {
    /// Number of eigenpairs the method needs.
    pub fn eigen_count(&self) -> Result<usize> {
        match self.method {
            Method::Ltm | Method::Naive => Ok(self.k_max),
            Method::Kmeans => self
                .k
                .ok_or_else(|| Error::invalid("k", "k-means needs the number of clusters")),
        }
    }
}

/// One row of the per-q trace; non-finite scores become `null`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub q: usize,
    pub k: usize,
    pub lcm_bic: Option<f64>,
    pub ltm_bic: Option<f64>,
}

impl From<&QRecord> for TraceRow {
    fn from(r: &QRecord) -> Self {
        let f = |v: f64| v.is_finite().then_some(v);
        TraceRow {
            q: r.q,
            k: r.k,
            lcm_bic: f(r.lcm_bic),
            ltm_bic: f(r.ltm_bic),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub method: Method,
    pub params: ClusterParams,
    /// Number of leading eigenvectors the partition was built from.
    pub q: Option<usize>,
    pub k: usize,
    pub assignment: Vec<usize>,
    pub bic_trace: Vec<TraceRow>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub metrics: Option<MetricReport>,
}

impl ClusterResult {
    pub fn partition(&self) -> Partition {
        Partition::from_labels(&self.assignment)
    }

    /// Single-line JSON followed by a newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("result serializes");
        s.push('\n');
        s
    }
}

/// Result plus the pieces callers may want to plot.
pub struct Run {
    pub result: ClusterResult,
    pub eigs: EigenSystem,
    pub trace: Vec<QRecord>,
}

pub fn cluster_similarity(
    sim: &SimilarityMatrix,
    params: &ClusterParams,
    truth: Option<&Partition>,
) -> Result<Run> {
    let lap = laplacian_rw(sim)?;
    let eigs = leading_eigenpairs(&lap, params.eigen_count()?)?;
    let mut run = cluster_eigensystem(eigs, params)?;
    if let Some(t) = truth {
        run.result.metrics = Some(evaluate(&run.result.partition(), t)?);
    }
    Ok(run)
}

pub fn cluster_eigensystem(eigs: EigenSystem, params: &ClusterParams) -> Result<Run> {
    let (partition, q, trace) = match params.method {
        Method::Ltm => {
            let r = ltm_rounding_with(
                &eigs,
                &RoundingParams {
                    k_max: params.k_max,
                    delta: params.delta,
                    seed: params.seed,
                    restarts: params.restarts,
                    dof_mode: params.dof_mode,
                },
            )?;
            (r.partition, Some(r.q_selected), r.trace)
        }
        Method::Naive => {
            let r = naive_rounding2(&eigs, params.k_max, params.delta)?;
            (r.partition, Some(r.q_used), Vec::new())
        }
        Method::Kmeans => {
            let k = params.eigen_count()?;
            let p = kmeans_rounding(&eigs, k, params.restarts, params.seed)?;
            (p, None, Vec::new())
        }
    };
    Ok(Run {
        result: ClusterResult {
            method: params.method,
            params: params.clone(),
            q,
            k: partition.k(),
            assignment: partition.assignment().to_vec(),
            bic_trace: trace.iter().map(TraceRow::from).collect(),
            metrics: None,
        },
        eigs,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::knn_similarity;
    use crate::DataSet;

    fn two_groups() -> SimilarityMatrix {
        let mut rows = Vec::new();
        for i in 0..12 {
            rows.push(vec![i as f64 * 0.1, 0.0]);
        }
        for i in 0..12 {
            rows.push(vec![50.0 + i as f64 * 0.1, 0.0]);
        }
        knn_similarity(&DataSet::from_rows(&rows, None).unwrap(), 3).unwrap()
    }

    #[test]
    fn every_method_splits_two_groups() {
        let sim = two_groups();
        let truth = Partition::from_labels(&[[0usize; 12], [1; 12]].concat());
        for method in [Method::Ltm, Method::Naive, Method::Kmeans] {
            let params = ClusterParams {
                method,
                k_max: 8,
                k: Some(2),
                ..ClusterParams::default()
            };
            let run = cluster_similarity(&sim, &params, Some(&truth)).unwrap();
            assert_eq!(run.result.metrics.unwrap().rand_index, 1.0, "{method}");
        }
    }

    #[test]
    fn kmeans_requires_k() {
        let params = ClusterParams {
            method: Method::Kmeans,
            ..ClusterParams::default()
        };
        assert!(matches!(
            cluster_similarity(&two_groups(), &params, None),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn json_field_order() {
        let params = ClusterParams {
            k_max: 8,
            ..ClusterParams::default()
        };
        let json = cluster_similarity(&two_groups(), &params, None)
            .unwrap()
            .result
            .to_json();
        assert!(json.starts_with(r#"{"method":"ltm","params":{"#), "{json}");
        let tail = &json[json.find(r#"},"q":"#).unwrap()..];
        let pos: Vec<usize> = [r#""q":"#, r#""k":"#, r#""assignment":"#, r#""bic_trace":"#]
            .iter()
            .map(|k| tail.find(k).unwrap())
            .collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]), "{json}");
        assert!(!json.contains("metrics"));
    }
}
