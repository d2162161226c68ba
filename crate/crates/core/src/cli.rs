//! Command-line front end.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binarize::Partition;
use crate::datagen::{noise_ladder, preset};
use crate::error::{Error, Result};
use crate::graph::{DataSet, SimilarityFn, SimilarityMatrix};
use crate::io;
use crate::ltm::DofMode;
use crate::metrics::{evaluate, MetricReport};
use crate::pipeline::{cluster_similarity, ClusterParams, ClusterResult, Method, Run};
use crate::plot;
use crate::spectra::leading_eigenpairs;

#[derive(Debug, Parser)]
#[command(
    name = "specround",
    version,
    about = "Spectral clustering with model-based rounding"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset from a named preset.
    Gen(GenArgs),
    /// Compute leading eigenpairs of the random-walk Laplacian.
    Eigen(EigenArgs),
    /// Cluster a dataset.
    Cluster(ClusterArgs),
    /// Run clustering over a grid of one parameter.
    Sweep(SweepArgs),
    /// Compare a predicted partition with the truth.
    Eval(EvalArgs),
    /// Re-run a saved run record and check that the partition is unchanged.
    Replay(ReplayArgs),
}

/// Where the data comes from. Exactly one of the three sources is required.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[group(id = "input", required = true, multiple = false)]
pub struct InputArgs {
    /// Points CSV (one point per row).
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// Precomputed n×n similarity matrix CSV.
    #[arg(long)]
    pub similarity: Option<PathBuf>,
    /// Built-in dataset preset, generated with --data-seed.
    #[arg(long)]
    pub preset: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SourceArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Similarity construction, `knn:<k>` or `gaussian:<sigma>`. Defaults to
    /// the preset's own, else knn:10.
    #[arg(long)]
    pub similarity_fn: Option<SimilarityFn>,
    /// Treat the last column of a header-less points file as labels.
    #[arg(long)]
    #[serde(default)]
    pub labels: bool,
    /// Ground-truth labels file, overriding labels embedded in the points.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub data_seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct AlgoArgs {
    #[arg(long, value_enum, default_value_t = Method::Ltm)]
    pub method: Method,
    /// Number of leading eigenvectors considered.
    #[arg(long = "K", default_value_t = 40)]
    pub k_max: usize,
    /// Binarization confidence, in (0, 1).
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Cluster count for k-means.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long = "ltm-dof-mode", value_enum, default_value_t = DofModeArg::Structural)]
    pub dof_mode: DofModeArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DofModeArg {
    Structural,
    CountLinks,
}

impl From<DofModeArg> for DofMode {
    fn from(a: DofModeArg) -> Self {
        match a {
            DofModeArg::Structural => DofMode::Structural,
            DofModeArg::CountLinks => DofMode::CountLinks,
        }
    }
}

impl AlgoArgs {
    pub fn params(&self) -> ClusterParams {
        ClusterParams {
            method: self.method,
            k_max: self.k_max,
            delta: self.delta,
            seed: self.seed,
            restarts: self.restarts,
            k: self.k,
            dof_mode: self.dof_mode.into(),
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// ideal-a, ideal-b, ideal-c or noisy:<1..8>.
    #[arg(long)]
    pub preset: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the preset's shape parameters as JSON instead of points.
    #[arg(long)]
    pub describe: bool,
}

#[derive(Debug, Args)]
pub struct EigenArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long = "K", default_value_t = 40)]
    pub k_max: usize,
    /// Output CSV: eigenvalues on the first data row, then one row per point.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for an eigenvector plot.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub algo: AlgoArgs,
    /// Result JSON; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run record JSON (inputs with hashes, parameters, output, duration).
    #[arg(long)]
    pub record: Option<PathBuf>,
    /// Directory for scatter, eigenvector and BIC plots.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Delta,
    #[value(name = "K")]
    #[serde(rename = "K")]
    K,
    Noise,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub algo: AlgoArgs,
    #[arg(long, value_enum)]
    pub axis: SweepAxis,
    /// Comma-separated grid values; may be empty.
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    pub grid: String,
    /// Output CSV; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON array of run records, one per grid point.
    #[arg(long)]
    pub records: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub record: PathBuf,
}

/// Failure of a command, split by exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Run(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Run(e) => write!(f, "[{}] {e}", e.module()),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } => CliError::Usage(e.to_string()),
            e => CliError::Run(e),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputFile {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordParams {
    pub source: SourceArgs,
    /// Similarity actually used; `null` for a precomputed matrix.
    pub similarity_fn: Option<SimilarityFn>,
    pub cluster: ClusterParams,
}

/// Everything needed to reproduce and audit one clustering run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub inputs: Vec<InputFile>,
    pub params: RecordParams,
    pub output: ClusterResult,
    pub metrics: Option<MetricReport>,
    pub duration_secs: f64,
}

/// Loaded input: similarity, optional coordinates and truth.
pub struct Loaded {
    pub sim: SimilarityMatrix,
    pub data: Option<DataSet>,
    pub truth: Option<Partition>,
    pub similarity_fn: Option<SimilarityFn>,
    pub inputs: Vec<InputFile>,
}

fn input_file(role: &str, path: &Path) -> Result<InputFile> {
    let abs = std::fs::canonicalize(path).map_err(|e| Error::io(path, e))?;
    Ok(InputFile {
        role: role.into(),
        sha256: io::sha256_file(&abs)?,
        path: abs,
    })
}

fn load_points(src: &SourceArgs) -> Result<Option<(DataSet, Option<SimilarityFn>)>> {
    if let Some(p) = &src.input.points {
        return Ok(Some((io::read_points(p, src.labels)?, None)));
    }
    if let Some(name) = &src.input.preset {
        let pre = preset(name)?;
        return Ok(Some((pre.generate(src.data_seed)?, Some(pre.similarity))));
    }
    Ok(None)
}

pub fn load(src: &SourceArgs) -> CliResult<Loaded> {
    let mut inputs = Vec::new();
    let (sim, data, similarity_fn) = match load_points(src)? {
        Some((data, preset_fn)) => {
            if let Some(p) = &src.input.points {
                inputs.push(input_file("points", p)?);
            }
            let f = src
                .similarity_fn
                .or(preset_fn)
                .unwrap_or(SimilarityFn::Knn(10));
            (f.build(&data)?, Some(data), Some(f))
        }
        None => {
            let path = src.input.similarity.as_ref().ok_or_else(|| {
                CliError::Usage("one of --points, --similarity, --preset is required".into())
            })?;
            if src.similarity_fn.is_some() {
                log::warn!("--similarity-fn is ignored with a precomputed similarity matrix");
            }
            inputs.push(input_file("similarity", path)?);
            (io::read_similarity(path)?, None, None)
        }
    };
    let truth = match &src.truth {
        Some(t) => {
            inputs.push(input_file("truth", t)?);
            Some(io::read_labels(t)?)
        }
        None => data.as_ref().and_then(DataSet::truth),
    };
    if let Some(t) = &truth {
        if t.len() != sim.n() {
            return Err(Error::LengthMismatch {
                expected: sim.n(),
                got: t.len(),
            }
            .into());
        }
    }
    Ok(Loaded {
        sim,
        data,
        truth,
        similarity_fn,
        inputs,
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => io::write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn svg_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn cmd_gen(args: &GenArgs) -> CliResult<()> {
    let pre = preset(&args.preset)?;
    if args.describe {
        let mut s = serde_json::to_string_pretty(&pre).map_err(Error::from)?;
        s.push('\n');
        return Ok(emit(args.out.as_deref(), &s)?);
    }
    let ds = pre.generate(args.seed)?;
    match &args.out {
        Some(p) => io::write_points(p, &ds)?,
        None => io::write_points_to(std::io::stdout().lock(), &ds, Path::new("<stdout>"))?,
    }
    Ok(())
}

pub fn cmd_eigen(args: &EigenArgs) -> CliResult<()> {
    let loaded = load(&args.source)?;
    let lap = crate::graph::laplacian_rw(&loaded.sim)?;
    let eigs = leading_eigenpairs(&lap, args.k_max)?;
    match &args.out {
        Some(p) => io::write_eigensystem(p, &eigs)?,
        None => io::write_eigensystem_to(std::io::stdout().lock(), &eigs, Path::new("<stdout>"))?,
    }
    if let Some(dir) = &args.svg {
        svg_dir(dir)?;
        let colors = loaded
            .truth
            .clone()
            .unwrap_or_else(|| Partition::single(eigs.n()));
        io::write_text(
            &dir.join("eigenvectors.svg"),
            &plot::eigenvectors_svg(&eigs, &colors, 8),
        )?;
    }
    Ok(())
}

fn run_once(loaded: &Loaded, params: &ClusterParams) -> CliResult<(Run, f64)> {
    let start = Instant::now();
    let run = cluster_similarity(&loaded.sim, params, loaded.truth.as_ref())?;
    Ok((run, start.elapsed().as_secs_f64()))
}

fn record(src: &SourceArgs, loaded: &Loaded, run: &Run, secs: f64) -> RunRecord {
    RunRecord {
        inputs: loaded.inputs.clone(),
        params: RecordParams {
            source: src.clone(),
            similarity_fn: loaded.similarity_fn,
            cluster: run.result.params.clone(),
        },
        output: run.result.clone(),
        metrics: run.result.metrics,
        duration_secs: secs,
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string(v)?;
    s.push('\n');
    Ok(s)
}

pub fn cmd_cluster(args: &ClusterArgs) -> CliResult<RunRecord> {
    let params = args.algo.params();
    params.eigen_count()?;
    let loaded = load(&args.source)?;
    let (run, secs) = run_once(&loaded, &params)?;
    emit(args.out.as_deref(), &run.result.to_json())?;
    let rec = record(&args.source, &loaded, &run, secs);
    if let Some(p) = &args.record {
        io::write_text(p, &to_json(&rec)?)?;
    }
    if let Some(dir) = &args.svg {
        svg_dir(dir)?;
        let part = run.result.partition();
        match &loaded.data {
            Some(d) => io::write_text(
                &dir.join("scatter.svg"),
                &plot::scatter_svg(
                    d,
                    &part,
                    &format!("{} clusters ({})", part.k(), params.method),
                ),
            )?,
            None => {
                log::warn!("no point coordinates with a similarity matrix; scatter plot skipped")
            }
        }
        io::write_text(
            &dir.join("eigenvectors.svg"),
            &plot::eigenvectors_svg(&run.eigs, &part, 8),
        )?;
        if !run.trace.is_empty() {
            io::write_text(&dir.join("bic.svg"), &plot::bic_svg(&run.trace))?;
        }
    }
    Ok(rec)
}

fn parse_grid(grid: &str) -> CliResult<Vec<f64>> {
    grid.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("grid value {s:?} is not a number")))
        })
        .collect()
}

/// One line of the sweep table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub rand_index: Option<f64>,
    pub vi: Option<f64>,
    pub q: Option<usize>,
    pub k: usize,
}

pub fn cmd_sweep(args: &SweepArgs) -> CliResult<Vec<RunRecord>> {
    let grid = parse_grid(&args.grid)?;
    let base = args.algo.params();
    let points: Vec<(f64, ClusterParams, SourceArgs)> = grid
        .iter()
        .map(|&v| {
            let mut p = base.clone();
            let src = args.source.clone();
            match args.axis {
                SweepAxis::Delta => p.delta = v,
                SweepAxis::K => {
                    if v.fract() != 0.0 || v < 0.0 {
                        return Err(CliError::Usage(format!(
                            "K grid value {v} is not an integer"
                        )));
                    }
                    p.k_max = v as usize;
                }
                SweepAxis::Noise => {
                    if src.input.preset.is_none() {
                        return Err(CliError::Usage("a noise sweep needs --preset".into()));
                    }
                }
            }
            Ok((v, p, src))
        })
        .collect::<CliResult<_>>()?;

    let shared = if args.axis == SweepAxis::Noise || grid.is_empty() {
        None
    } else {
        Some(load(&args.source)?)
    };
    let runs: Vec<(SweepRow, RunRecord)> = points
        .par_iter()
        .map(|(v, params, src)| {
            let owned;
            let loaded = match &shared {
                Some(l) => l,
                None => {
                    owned = load_noisy(src, *v)?;
                    &owned
                }
            };
            let (run, secs) = run_once(loaded, params)?;
            let m = run.result.metrics;
            let row = SweepRow {
                axis: args.axis,
                value: *v,
                rand_index: m.map(|m| m.rand_index),
                vi: m.map(|m| m.vi),
                q: run.result.q,
                k: run.result.k,
            };
            Ok((row, record(src, loaded, &run, secs)))
        })
        .collect::<CliResult<_>>()?;

    let mut table = String::from("axis,value,rand_index,vi,q,k\n");
    let opt = |v: Option<String>| v.unwrap_or_default();
    for (r, _) in &runs {
        let axis = match r.axis {
            SweepAxis::Delta => "delta",
            SweepAxis::K => "K",
            SweepAxis::Noise => "noise",
        };
        table.push_str(&format!(
            "{axis},{},{},{},{},{}\n",
            r.value,
            opt(r.rand_index.map(|x| x.to_string())),
            opt(r.vi.map(|x| x.to_string())),
            opt(r.q.map(|x| x.to_string())),
            r.k
        ));
    }
    emit(args.out.as_deref(), &table)?;
    let records: Vec<RunRecord> = runs.into_iter().map(|(_, r)| r).collect();
    if let Some(p) = &args.records {
        io::write_text(p, &to_json(&records)?)?;
    }
    Ok(records)
}

/// Preset data with `level` of extra noise on top of the preset's own.
fn load_noisy(src: &SourceArgs, level: f64) -> CliResult<Loaded> {
    let name = src.input.preset.as_ref().expect("checked by caller");
    let pre = preset(name)?;
    let data = noise_ladder(&pre.shapes, &[pre.extra_noise + level], src.data_seed)?.remove(0);
    let f = src.similarity_fn.unwrap_or(pre.similarity);
    Ok(Loaded {
        sim: f.build(&data)?,
        truth: data.truth(),
        data: Some(data),
        similarity_fn: Some(f),
        inputs: Vec::new(),
    })
}

pub fn cmd_eval(args: &EvalArgs) -> CliResult<MetricReport> {
    let pred = io::read_labels(&args.pred)?;
    let truth = io::read_labels(&args.truth)?;
    let report = evaluate(&pred, &truth)?;
    print!("{}", to_json(&report)?);
    Ok(report)
}

/// Re-runs a record. Fails if an input file's hash changed or the partition
/// differs.
pub fn cmd_replay(args: &ReplayArgs) -> CliResult<RunRecord> {
    let text = std::fs::read_to_string(&args.record).map_err(|e| Error::io(&args.record, e))?;
    let rec: RunRecord = serde_json::from_str(&text).map_err(Error::from)?;
    for f in &rec.inputs {
        let now = io::sha256_file(&f.path)?;
        if now != f.sha256 {
            return Err(Error::InvalidInput(format!(
                "{} input {} changed since the run (sha256 {now}, recorded {})",
                f.role,
                f.path.display(),
                f.sha256
            ))
            .into());
        }
    }
    let mut src = rec.params.source.clone();
    // Recorded paths are absolute; prefer them over possibly relative ones.
    for f in &rec.inputs {
        match f.role.as_str() {
            "points" => src.input.points = Some(f.path.clone()),
            "similarity" => src.input.similarity = Some(f.path.clone()),
            "truth" => src.truth = Some(f.path.clone()),
            _ => {}
        }
    }
    if src.similarity_fn.is_none() {
        src.similarity_fn = rec.params.similarity_fn;
    }
    let loaded = load(&src)?;
    let (run, secs) = run_once(&loaded, &rec.params.cluster)?;
    if run.result.partition() != rec.output.partition() {
        return Err(
            Error::InvalidInput("replayed partition differs from the recorded one".into()).into(),
        );
    }
    println!(
        "replay ok: {} points, {} clusters, {:.3}s (recorded {:.3}s)",
        run.result.assignment.len(),
        run.result.k,
        secs,
        rec.duration_secs
    );
    Ok(record(&src, &loaded, &run, secs))
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Eigen(a) => cmd_eigen(a),
        Command::Cluster(a) => cmd_cluster(a).map(|_| ()),
        Command::Sweep(a) => cmd_sweep(a).map(|_| ()),
        Command::Eval(a) => cmd_eval(a).map(|_| ()),
        Command::Replay(a) => cmd_replay(a).map(|_| ()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("").unwrap(), Vec::<f64>::new());
        assert_eq!(parse_grid("0.1, 0.2").unwrap(), vec![0.1, 0.2]);
        assert!(matches!(parse_grid("0.1,x"), Err(CliError::Usage(_))));
    }

    #[test]
    fn parameter_errors_are_usage_errors() {
        let e: CliError = Error::invalid("delta", "out of range").into();
        assert_eq!(e.exit_code(), 2);
        let e: CliError = Error::SolverFailure.into();
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn inputs_are_mutually_exclusive() {
        let r = Cli::try_parse_from(["specround", "cluster", "--points", "a", "--similarity", "b"]);
        assert!(r.is_err());
        let r = Cli::try_parse_from(["specround", "cluster"]);
        assert!(r.is_err());
        let r = Cli::try_parse_from(["specround", "cluster", "--preset", "ideal-a", "--K", "20"]);
        assert!(r.is_ok());
    }
}
