//! Mesh-to-mesh and field-to-field quality measures.

use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bvh::MeshBvh;
use crate::error::{Error, Result};
use crate::fieldgen::sampling::sample_surface;
use crate::fieldgen::{CurveIndex, FeatureCurveSet};
use crate::geom::{angle_between, quantile, Vec3};
use crate::mesh::TriMesh;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsConfig {
    /// Samples drawn on each mesh.
    pub samples: usize,
    /// Point distance threshold in units of lambda.
    pub point_threshold: f64,
    pub normal_threshold_deg: f64,
    /// Feature band radius in units of lambda.
    pub delta: f64,
    /// Distance threshold for field recall, in units of lambda.
    pub distance_t: f64,
    pub angle_t_deg: f64,
    pub seed: u64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            samples: 100_000,
            point_threshold: 1.0,
            normal_threshold_deg: 10.0,
            delta: 2.0,
            distance_t: 1.0,
            angle_t_deg: 10.0,
            seed: 0,
        }
    }
}

impl MetricsConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("point_threshold", self.point_threshold),
            ("normal_threshold_deg", self.normal_threshold_deg),
            ("delta", self.delta),
            ("distance_t", self.distance_t),
            ("angle_t_deg", self.angle_t_deg),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.samples == 0 {
            return Err(Error::InvalidParameter("samples must be positive".into()));
        }
        Ok(())
    }
}

/// A surface sample on one mesh paired with its closest point on another.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedSample {
    pub point: Vec3,
    pub normal: Vec3,
    pub target_point: Vec3,
    pub target_normal: Vec3,
    pub distance: f64,
}

impl MatchedSample {
    pub fn normal_angle(&self) -> f64 {
        angle_between(&self.normal, &self.target_normal)
    }
}

/// `n` area-uniform samples on `a`, each matched to its closest point on `b`.
pub fn sample_and_match(
    a: &TriMesh,
    b: &TriMesh,
    n: usize,
    seed: u64,
) -> Result<Vec<MatchedSample>> {
    if a.faces.is_empty() || b.faces.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot sample or match against an empty mesh".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = sample_surface(a, n, &mut rng);
    let an = a.face_normals();
    let bn = b.face_normals();
    let bvh = MeshBvh::from_mesh(b);
    Ok(samples
        .par_iter()
        .map(|s| {
            let hit = bvh.nearest(&s.point).expect("non-empty mesh");
            MatchedSample {
                point: s.point,
                normal: an[s.face],
                target_point: hit.point,
                target_normal: bn[hit.index],
                distance: hit.distance_squared.sqrt(),
            }
        })
        .collect())
}

/// Samples matched in both directions between a reconstruction and ground
/// truth.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchSet {
    pub recon_to_gt: Vec<MatchedSample>,
    pub gt_to_recon: Vec<MatchedSample>,
}

pub fn match_meshes(recon: &TriMesh, gt: &TriMesh, n: usize, seed: u64) -> Result<MatchSet> {
    Ok(MatchSet {
        recon_to_gt: sample_and_match(recon, gt, n, seed)?,
        gt_to_recon: sample_and_match(gt, recon, n, seed.wrapping_add(1))?,
    })
}

/// Keeps samples whose ground-truth-side point lies within `delta` of a
/// feature curve: the matched point for reconstruction samples, the sample
/// itself for ground-truth samples.
pub fn restrict_near_features(set: &MatchSet, curves: &CurveIndex, delta: f64) -> MatchSet {
    if delta.is_infinite() {
        return set.clone();
    }
    let near = |p: &Vec3| curves.distance(p) <= delta;
    MatchSet {
        recon_to_gt: set
            .recon_to_gt
            .iter()
            .filter(|s| near(&s.target_point))
            .copied()
            .collect(),
        gt_to_recon: set
            .gt_to_recon
            .iter()
            .filter(|s| near(&s.point))
            .copied()
            .collect(),
    }
}

/// A ratio with its counts. An empty denominator reports `value` 1 and sets
/// `undefined`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub value: f64,
    pub hits: usize,
    pub total: usize,
    pub undefined: bool,
}

impl Rate {
    pub fn new(hits: usize, total: usize) -> Self {
        if total == 0 {
            Rate {
                value: 1.0,
                hits,
                total,
                undefined: true,
            }
        } else {
            Rate {
                value: hits as f64 / total as f64,
                hits,
                total,
                undefined: false,
            }
        }
    }
}

pub fn f_score(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: Rate,
    pub recall: Rate,
    pub f: f64,
    pub normal_precision: Rate,
    pub normal_recall: Rate,
    pub normal_f: f64,
}

/// Precision from reconstruction samples, recall from ground-truth samples;
/// a sample counts when its distance is below `tau` (point scores) or its
/// normal angle is below `angle` radians (normal scores).
pub fn scores(set: &MatchSet, tau: f64, angle: f64) -> Scores {
    let count = |v: &[MatchedSample], ok: &dyn Fn(&MatchedSample) -> bool| {
        Rate::new(v.iter().filter(|s| ok(s)).count(), v.len())
    };
    let near = |s: &MatchedSample| s.distance < tau;
    let aligned = |s: &MatchedSample| s.normal_angle() < angle;
    let precision = count(&set.recon_to_gt, &near);
    let recall = count(&set.gt_to_recon, &near);
    let normal_precision = count(&set.recon_to_gt, &aligned);
    let normal_recall = count(&set.gt_to_recon, &aligned);
    Scores {
        precision,
        recall,
        f: f_score(precision.value, recall.value),
        normal_precision,
        normal_recall,
        normal_f: f_score(normal_precision.value, normal_recall.value),
    }
}

/// Scores over the whole surface and within the feature band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandScores {
    pub all: Scores,
    pub band: Scores,
}

pub fn precision_recall(
    recon: &TriMesh,
    gt: &TriMesh,
    curves: &FeatureCurveSet,
    cfg: &MetricsConfig,
    lambda: f64,
) -> Result<BandScores> {
    cfg.validate()?;
    let set = match_meshes(recon, gt, cfg.samples, cfg.seed)?;
    let tau = cfg.point_threshold * lambda;
    let angle = cfg.normal_threshold_deg.to_radians();
    let band = restrict_near_features(&set, &CurveIndex::new(curves), cfg.delta * lambda);
    Ok(BandScores {
        all: scores(&set, tau, angle),
        band: scores(&band, tau, angle),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub recall: f64,
    pub fpr: f64,
    pub confusion: Confusion,
    /// No vertex is truly within the threshold; recall reported as 1.
    pub no_positives: bool,
    /// Every vertex is truly within the threshold; FPR reported as 0.
    pub no_negatives: bool,
}

/// Recall and false-positive rate of `pred < t` against `truth < t`.
pub fn field_recall_fpr(pred: &[f64], truth: &[f64], t: f64) -> Result<ClassScores> {
    if pred.len() != truth.len() {
        return Err(Error::InvalidParameter(format!(
            "field lengths differ: {} predicted, {} true",
            pred.len(),
            truth.len()
        )));
    }
    let mut c = Confusion {
        tp: 0,
        fp: 0,
        tn: 0,
        fn_: 0,
    };
    for (p, y) in pred.iter().zip(truth) {
        match (*y < t, *p < t) {
            (true, true) => c.tp += 1,
            (true, false) => c.fn_ += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
        }
    }
    let pos = c.tp + c.fn_;
    let neg = c.fp + c.tn;
    Ok(ClassScores {
        recall: if pos == 0 {
            1.0
        } else {
            c.tp as f64 / pos as f64
        },
        fpr: if neg == 0 {
            0.0
        } else {
            c.fp as f64 / neg as f64
        },
        confusion: c,
        no_positives: pos == 0,
        no_negatives: neg == 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionScores {
    pub recall: f64,
    pub fpr: f64,
    pub hits: usize,
    /// Vertices where both directions are nonzero.
    pub evaluated: usize,
    pub empty: bool,
}

/// Fraction of vertices, among those with both directions nonzero, whose
/// angle is below `t` radians; FPR is its complement.
pub fn direction_recall_fpr(pred: &[Vec3], truth: &[Vec3], t: f64) -> Result<DirectionScores> {
    if pred.len() != truth.len() {
        return Err(Error::InvalidParameter(format!(
            "field lengths differ: {} predicted, {} true",
            pred.len(),
            truth.len()
        )));
    }
    let mut hits = 0;
    let mut evaluated = 0;
    for (p, y) in pred.iter().zip(truth) {
        if *p == Vec3::zeros() || *y == Vec3::zeros() {
            continue;
        }
        evaluated += 1;
        if angle_between(p, y) < t {
            hits += 1;
        }
    }
    let recall = if evaluated == 0 {
        1.0
    } else {
        hits as f64 / evaluated as f64
    };
    Ok(DirectionScores {
        recall,
        fpr: 1.0 - recall,
        hits,
        evaluated,
        empty: evaluated == 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseSummary {
    pub per_instance: Vec<f64>,
    /// Mean over instances.
    pub rmse: f64,
    /// `q`-quantile over instances.
    pub qrmse: f64,
}

pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "cannot compare fields of {} and {} values",
            pred.len(),
            truth.len()
        )));
    }
    let s: f64 = pred.iter().zip(truth).map(|(p, y)| (p - y) * (p - y)).sum();
    Ok((s / pred.len() as f64).sqrt())
}

pub fn rmse_qrmse(instances: &[(&[f64], &[f64])], q: f64) -> Result<RmseSummary> {
    if instances.is_empty() {
        return Err(Error::InvalidParameter("no instances to summarize".into()));
    }
    let per_instance = instances
        .iter()
        .map(|(p, y)| rmse(p, y))
        .collect::<Result<Vec<_>>>()?;
    let rmse = per_instance.iter().sum::<f64>() / per_instance.len() as f64;
    let qrmse = quantile(&per_instance, q)
        .ok_or_else(|| Error::InvalidParameter(format!("bad quantile {q}")))?;
    Ok(RmseSummary {
        per_instance,
        rmse,
        qrmse,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub pair: String,
    pub metric: String,
    /// `inf` for the whole surface, `delta` for the feature band.
    pub band: String,
    pub value: f64,
    #[serde(default)]
    pub undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub lambda: f64,
    pub config: MetricsConfig,
    pub rows: Vec<MetricRow>,
}

impl MetricReport {
    pub fn new(lambda: f64, config: MetricsConfig) -> Self {
        Self {
            lambda,
            config,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, pair: &str, metric: &str, band: &str, value: f64, undefined: bool) {
        self.rows.push(MetricRow {
            pair: pair.into(),
            metric: metric.into(),
            band: band.into(),
            value,
            undefined,
        });
    }

    pub fn add_scores(&mut self, pair: &str, s: &BandScores) {
        for (band, sc) in [("inf", &s.all), ("delta", &s.band)] {
            self.push(pair, "P", band, sc.precision.value, sc.precision.undefined);
            self.push(pair, "R", band, sc.recall.value, sc.recall.undefined);
            self.push(
                pair,
                "F",
                band,
                sc.f,
                sc.precision.undefined || sc.recall.undefined,
            );
            self.push(
                pair,
                "P_N",
                band,
                sc.normal_precision.value,
                sc.normal_precision.undefined,
            );
            self.push(
                pair,
                "R_N",
                band,
                sc.normal_recall.value,
                sc.normal_recall.undefined,
            );
            self.push(
                pair,
                "F_N",
                band,
                sc.normal_f,
                sc.normal_precision.undefined || sc.normal_recall.undefined,
            );
        }
    }

    pub fn get(&self, pair: &str, metric: &str, band: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.pair == pair && r.metric == metric && r.band == band)
            .map(|r| r.value)
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "# lambda={} tau={} normal_deg={} delta={}\npair,metric,band,value,undefined\n",
            self.lambda,
            self.config.point_threshold,
            self.config.normal_threshold_deg,
            self.config.delta
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.pair, r.metric, r.band, r.value, r.undefined
            );
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Vec<MetricRow>> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.starts_with('#') || line.starts_with("pair,") || line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(Error::parse("<csv>", i + 1, "expected 5 fields"));
            }
            rows.push(MetricRow {
                pair: f[0].into(),
                metric: f[1].into(),
                band: f[2].into(),
                value: f[3]
                    .parse()
                    .map_err(|_| Error::parse("<csv>", i + 1, "bad value"))?,
                undefined: f[4]
                    .parse()
                    .map_err(|_| Error::parse("<csv>", i + 1, "bad flag"))?,
            });
        }
        Ok(rows)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    /// Writes JSON for a `.json` path and CSV otherwise.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = if path.extension().is_some_and(|e| e == "json") {
            self.to_json()? + "\n"
        } else {
            self.to_csv()
        };
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}
