//! Seeded 2-D point clouds made of blobs, rings and crescents, plus the
//! named presets used for the ideal-case and noisy experiments.
//!
//! Every shape has a noise-free skeleton (a blob's is its centre, a ring's
//! or crescent's is an arc of radius `scale`) onto which isotropic Gaussian
//! jitter of standard deviation `noise_sd` is added. Arc angles are
//! stratified so that neighbouring points stay evenly spaced.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DataSet, SimilarityFn};
use crate::lcm::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ShapeKind {
    GaussianBlob,
    Ring,
    /// Arc from `start` radians spanning `arc` radians.
    Crescent {
        start: f64,
        arc: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    #[serde(flatten)]
    pub kind: ShapeKind,
    pub center: [f64; 2],
    pub scale: f64,
    pub count: usize,
    pub noise_sd: f64,
}

impl ShapeSpec {
    pub fn blob(center: [f64; 2], sd: f64, count: usize) -> Self {
        Self {
            kind: ShapeKind::GaussianBlob,
            center,
            scale: 0.0,
            count,
            noise_sd: sd,
        }
    }

    pub fn ring(center: [f64; 2], radius: f64, count: usize, noise_sd: f64) -> Self {
        Self {
            kind: ShapeKind::Ring,
            center,
            scale: radius,
            count,
            noise_sd,
        }
    }

    pub fn crescent(
        center: [f64; 2],
        radius: f64,
        start: f64,
        arc: f64,
        count: usize,
        noise_sd: f64,
    ) -> Self {
        Self {
            kind: ShapeKind::Crescent { start, arc },
            center,
            scale: radius,
            count,
            noise_sd,
        }
    }

    fn validate(&self, index: usize) -> Result<()> {
        let mut finite = vec![self.center[0], self.center[1], self.scale, self.noise_sd];
        if let ShapeKind::Crescent { start, arc } = self.kind {
            finite.extend([start, arc]);
        }
        let bad = |reason: &str| Err(Error::invalid("shape", format!("shape {index}: {reason}")));
        if finite.iter().any(|x| !x.is_finite()) {
            return bad("parameters must be finite");
        }
        if self.count == 0 {
            return bad("count must be at least 1");
        }
        if self.noise_sd < 0.0 || self.scale < 0.0 {
            return bad("scale and noise_sd must be non-negative");
        }
        Ok(())
    }

    fn skeleton(&self, i: usize, rng: &mut ChaCha8Rng) -> [f64; 2] {
        let (start, arc) = match self.kind {
            ShapeKind::GaussianBlob => return self.center,
            ShapeKind::Ring => (0.0, 2.0 * PI),
            ShapeKind::Crescent { start, arc } => (start, arc),
        };
        let u: f64 = rng.random();
        let theta = start + arc * (i as f64 + u) / self.count as f64;
        [
            self.center[0] + self.scale * theta.cos(),
            self.center[1] + self.scale * theta.sin(),
        ]
    }
}

fn total_points(specs: &[ShapeSpec]) -> Result<usize> {
    for (i, s) in specs.iter().enumerate() {
        s.validate(i)?;
    }
    let n: usize = specs.iter().map(|s| s.count).sum();
    if n < 2 {
        return Err(Error::invalid("shapes", "need at least 2 points in total"));
    }
    Ok(n)
}

/// Draws the unit-noise layout: skeleton points plus standard normal
/// offsets, so that any noise level can be applied afterwards.
fn draw(specs: &[ShapeSpec], seed: u64) -> (Vec<[f64; 2]>, Vec<[f64; 2]>, Vec<usize>) {
    let mut skel = Vec::new();
    let mut unit = Vec::new();
    let mut labels = Vec::new();
    for (l, spec) in specs.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, l as u64));
        for i in 0..spec.count {
            skel.push(spec.skeleton(i, &mut rng));
            unit.push([rng.sample(StandardNormal), rng.sample(StandardNormal)]);
            labels.push(l);
        }
    }
    (skel, unit, labels)
}

fn assemble(
    specs: &[ShapeSpec],
    skel: &[[f64; 2]],
    unit: &[[f64; 2]],
    labels: Vec<usize>,
    extra_sd: f64,
) -> Result<DataSet> {
    let n = skel.len();
    let sd: Vec<f64> = labels
        .iter()
        .map(|&l| specs[l].noise_sd + extra_sd)
        .collect();
    let points = DMatrix::from_fn(n, 2, |i, j| skel[i][j] + sd[i] * unit[i][j]);
    DataSet::new(points, Some(labels))
}

/// Samples every shape in order; point labels are shape indices.
pub fn generate(specs: &[ShapeSpec], seed: u64) -> Result<DataSet> {
    total_points(specs)?;
    let (skel, unit, labels) = draw(specs, seed);
    assemble(specs, &skel, &unit, labels, 0.0)
}

/// One dataset per level, each with `level` added to every shape's
/// `noise_sd`. All levels reuse the same random draws, so level 0 equals
/// [`generate`] and points move away from their skeleton continuously as
/// the level grows.
pub fn noise_ladder(base: &[ShapeSpec], levels: &[f64], seed: u64) -> Result<Vec<DataSet>> {
    total_points(base)?;
    if levels.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(Error::invalid("levels", "must be finite and non-negative"));
    }
    if levels.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("levels", "must be ascending"));
    }
    let (skel, unit, labels) = draw(base, seed);
    levels
        .iter()
        .map(|&l| assemble(base, &skel, &unit, labels.clone(), l))
        .collect()
}

/// Extra noise for `noisy:1` .. `noisy:8`.
pub const NOISE_LADDER: [f64; 8] = [0.01, 0.02, 0.04, 0.06, 0.08, 0.11, 0.15, 0.20];

/// A named dataset recipe together with the similarity it is meant for.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Preset {
    pub name: String,
    pub shapes: Vec<ShapeSpec>,
    pub similarity: SimilarityFn,
    /// Extra noise added on top of the shapes' own `noise_sd`.
    pub extra_noise: f64,
}

impl Preset {
    pub fn k_true(&self) -> usize {
        self.shapes.len()
    }

    pub fn generate(&self, seed: u64) -> Result<DataSet> {
        let mut ds = noise_ladder(&self.shapes, &[self.extra_noise], seed)?;
        Ok(ds.remove(0))
    }
}

/// Four Gaussian blobs on a square.
pub fn ideal_a() -> Vec<ShapeSpec> {
    vec![
        ShapeSpec::blob([0.0, 0.0], 0.3, 80),
        ShapeSpec::blob([3.0, 0.0], 0.3, 100),
        ShapeSpec::blob([0.0, 3.0], 0.3, 120),
        ShapeSpec::blob([3.0, 3.0], 0.3, 90),
    ]
}

/// Two facing crescents around two blobs and a small central ring.
pub fn ideal_b() -> Vec<ShapeSpec> {
    vec![
        ShapeSpec::crescent([0.0, 0.5], 2.0, 0.0, PI, 120, 0.03),
        ShapeSpec::crescent([0.0, -0.5], 2.0, PI, PI, 120, 0.03),
        ShapeSpec::blob([-1.2, 0.0], 0.1, 80),
        ShapeSpec::blob([1.2, 0.0], 0.1, 80),
        ShapeSpec::ring([0.0, 0.0], 0.35, 100, 0.01),
    ]
}

/// Two concentric rings inside a wide crescent.
pub fn ideal_c() -> Vec<ShapeSpec> {
    vec![
        ShapeSpec::ring([0.0, 0.0], 1.0, 100, 0.005),
        ShapeSpec::ring([0.0, 0.0], 2.5, 200, 0.005),
        ShapeSpec::crescent([0.0, 0.0], 4.0, 0.25 * PI, 0.5 * PI, 120, 0.005),
    ]
}

/// Looks up `ideal-a`, `ideal-b`, `ideal-c` or `noisy:<1..8>`.
pub fn preset(name: &str) -> Result<Preset> {
    let make = |shapes, similarity, extra_noise| Preset {
        name: name.to_string(),
        shapes,
        similarity,
        extra_noise,
    };
    match name {
        "ideal-a" => Ok(make(ideal_a(), SimilarityFn::Knn(10), 0.0)),
        "ideal-b" => Ok(make(ideal_b(), SimilarityFn::Knn(10), 0.0)),
        "ideal-c" => Ok(make(ideal_c(), SimilarityFn::Knn(3), 0.0)),
        _ => {
            let level = name
                .strip_prefix("noisy:")
                .and_then(|l| l.parse::<usize>().ok())
                .filter(|l| (1..=NOISE_LADDER.len()).contains(l))
                .ok_or_else(|| {
                    Error::invalid("preset", format!("unknown preset {name:?}; expected ideal-a, ideal-b, ideal-c or noisy:1..8"))
                })?;
            Ok(make(
                ideal_b(),
                SimilarityFn::Gaussian(0.2),
                NOISE_LADDER[level - 1],
            ))
        }
    }
}

pub const PRESET_NAMES: [&str; 3] = ["ideal-a", "ideal-b", "ideal-c"];
