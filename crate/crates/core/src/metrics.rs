//! Camera-trajectory error metrics.
//!
//! All three metrics sum per-frame errors over the whole trajectory:
//!
//! * rotation error: geodesic angle `acos((tr(R̂ Rᵀ) - 1) / 2)` in radians;
//! * translation error: `|t̂/ŝ - t/s|`, each translation normalized by its
//!   own trajectory's scene scale;
//! * camera-matrix error: Frobenius norm of the difference of the `[R | t/s]`
//!   3x4 matrices.
//!
//! The scene scale is the distance from the first camera center to the
//! farthest one.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geometry::{CameraPose, Trajectory};
use crate::{Error, Result};

/// Lower clamp of [`scene_scale`]; keeps static trajectories finite.
pub const SCALE_EPS: f64 = 1e-8;

/// Which pose matrices the metrics compare.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoseConvention {
    /// World-to-camera `[R | t]`, as stored.
    #[default]
    W2c,
    /// Camera-to-world, i.e. both trajectories inverted first.
    C2w,
}

/// Predicted and ground-truth trajectories of equal length.
#[derive(Debug, Clone)]
pub struct TrajectoryPair {
    pub predicted: Trajectory,
    pub ground_truth: Trajectory,
}

impl TrajectoryPair {
    pub fn new(predicted: Trajectory, ground_truth: Trajectory) -> Result<Self> {
        if predicted.len() != ground_truth.len() {
            return Err(Error::Shape(format!(
                "predicted trajectory has {} frames, ground truth {}",
                predicted.len(),
                ground_truth.len()
            )));
        }
        if predicted.len() < 2 {
            return Err(Error::InvalidParameter("metrics need at least two frames".into()));
        }
        for p in predicted.poses.iter().chain(&ground_truth.poses) {
            CameraPose::new(p.rotation, p.translation)?;
        }
        Ok(Self {
            predicted,
            ground_truth,
        })
    }

    fn with_convention(&self, convention: PoseConvention) -> (Vec<CameraPose>, Vec<CameraPose>) {
        match convention {
            PoseConvention::W2c => (self.predicted.poses.clone(), self.ground_truth.poses.clone()),
            PoseConvention::C2w => (
                self.predicted.poses.iter().map(CameraPose::inverse).collect(),
                self.ground_truth.poses.iter().map(CameraPose::inverse).collect(),
            ),
        }
    }
}

/// Distance from the first camera center to the farthest one, at least
/// [`SCALE_EPS`].
pub fn scene_scale(traj: &Trajectory) -> f64 {
    let c0 = traj.poses[0].center();
    traj.poses
        .iter()
        .map(|p| (p.center() - c0).norm())
        .fold(0.0, f64::max)
        .max(SCALE_EPS)
}

/// Angle of `pred * gt^T`, i.e. `acos((tr - 1) / 2)`, evaluated in
/// half-angle form: `sin(θ/2) = |pred - gt|_F / (2√2)` and
/// `cos(θ/2) = sqrt((tr + 1) / 4)`. Identical rotations give exactly 0,
/// where the plain arccosine loses about 1e-8 to rounding.
fn geodesic(pred: &CameraPose, gt: &CameraPose) -> f64 {
    let half_sin = (pred.rotation - gt.rotation).norm() / (2.0 * std::f64::consts::SQRT_2);
    let trace = pred.rotation.component_mul(&gt.rotation).sum();
    let half_cos = ((trace + 1.0) / 4.0).max(0.0).sqrt();
    2.0 * half_sin.atan2(half_cos)
}

fn normalized(t: &Vector3<f64>, scale: f64) -> Vector3<f64> {
    t / scale
}

/// Sum of per-frame geodesic rotation angles, radians.
pub fn rot_err(pair: &TrajectoryPair, convention: PoseConvention) -> f64 {
    let (pred, gt) = pair.with_convention(convention);
    pred.iter().zip(&gt).map(|(a, b)| geodesic(a, b)).sum()
}

/// Sum of distances between scale-normalized translations.
pub fn trans_err(pair: &TrajectoryPair, convention: PoseConvention) -> f64 {
    let (sp, sg) = (scene_scale(&pair.predicted), scene_scale(&pair.ground_truth));
    let (pred, gt) = pair.with_convention(convention);
    pred.iter()
        .zip(&gt)
        .map(|(a, b)| (normalized(&a.translation, sp) - normalized(&b.translation, sg)).norm())
        .sum()
}

/// Sum of Frobenius distances between `[R | t/s]` matrices.
pub fn cammc(pair: &TrajectoryPair, convention: PoseConvention) -> f64 {
    let (sp, sg) = (scene_scale(&pair.predicted), scene_scale(&pair.ground_truth));
    let (pred, gt) = pair.with_convention(convention);
    pred.iter()
        .zip(&gt)
        .map(|(a, b)| {
            let dr = (a.rotation - b.rotation).norm_squared();
            let dt = (normalized(&a.translation, sp) - normalized(&b.translation, sg)).norm_squared();
            (dr + dt).sqrt()
        })
        .sum()
}

/// The three metrics for one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricTriple {
    pub rot_err: f64,
    pub trans_err: f64,
    pub cammc: f64,
}

impl MetricTriple {
    fn map2(a: &Self, b: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            rot_err: f(a.rot_err, b.rot_err),
            trans_err: f(a.trans_err, b.trans_err),
            cammc: f(a.cammc, b.cammc),
        }
    }

    fn scale(&self, s: f64) -> Self {
        Self {
            rot_err: self.rot_err * s,
            trans_err: self.trans_err * s,
            cammc: self.cammc * s,
        }
    }

    const ZERO: Self = Self {
        rot_err: 0.0,
        trans_err: 0.0,
        cammc: 0.0,
    };
}

/// Metrics for one instance, optionally aggregated over several seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub rot_err: f64,
    pub trans_err: f64,
    pub cammc: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_seed: Option<Vec<MetricTriple>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<MetricTriple>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std: Option<MetricTriple>,
}

impl MetricReport {
    pub fn triple(&self) -> MetricTriple {
        MetricTriple {
            rot_err: self.rot_err,
            trans_err: self.trans_err,
            cammc: self.cammc,
        }
    }

    fn from_triple(t: MetricTriple) -> Self {
        Self {
            rot_err: t.rot_err,
            trans_err: t.trans_err,
            cammc: t.cammc,
            per_seed: None,
            mean: None,
            std: None,
        }
    }
}

/// Computes all three metrics for one pair.
pub fn evaluate(pair: &TrajectoryPair, convention: PoseConvention) -> MetricReport {
    MetricReport::from_triple(MetricTriple {
        rot_err: rot_err(pair, convention),
        trans_err: trans_err(pair, convention),
        cammc: cammc(pair, convention),
    })
}

/// Standard deviation flavor.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StdKind {
    /// Divide by `n`.
    #[default]
    Population,
    /// Divide by `n - 1` (0 for a single sample).
    Sample,
}

/// Mean and standard deviation of each metric across per-seed reports.
pub fn seed_statistics(reports: &[MetricReport], kind: StdKind) -> Result<MetricReport> {
    if reports.is_empty() {
        return Err(Error::InvalidParameter("no reports to aggregate".into()));
    }
    let triples: Vec<MetricTriple> = reports.iter().map(MetricReport::triple).collect();
    let n = triples.len() as f64;
    let mean = triples
        .iter()
        .fold(MetricTriple::ZERO, |acc, t| MetricTriple::map2(&acc, t, |a, b| a + b))
        .scale(1.0 / n);
    let ss = triples.iter().fold(MetricTriple::ZERO, |acc, t| {
        let d = MetricTriple::map2(t, &mean, |a, b| a - b);
        MetricTriple::map2(&acc, &d, |a, b| a + b * b)
    });
    let denom = match kind {
        StdKind::Population => n,
        StdKind::Sample => n - 1.0,
    };
    let std = if denom > 0.0 {
        MetricTriple::map2(&ss, &ss, |a, _| (a / denom).sqrt())
    } else {
        MetricTriple::ZERO
    };
    let mut out = MetricReport::from_triple(mean);
    out.per_seed = Some(triples);
    out.mean = Some(mean);
    out.std = Some(std);
    Ok(out)
}
