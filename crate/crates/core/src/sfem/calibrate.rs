//! Exhaustive-search calibration of the stiffness field against observed tip samples.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::galerkin::{sample_chaos, solve_galerkin, PcSolution};
use super::pce::PceBasis;
use crate::beam::{BeamGeometry, LoadCase};
use crate::dataset::{fit_scaling, SampleSet, ScalingSpec, UNIT_INTERVAL};
use crate::distributions::{kl_divergence_floored, CodeKl, CodeSamples, Kde, KlDirection, MetricConfig};
use crate::error::{Error, Result};
use crate::field::{decompose, FieldSpec};
use crate::rng::{derive_seed, load_key, Rng};
use rand::Rng as _;
use rand_distr::StandardNormal;

/// Minimum observations per training load.
pub const MIN_CALIBRATION_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub mean: f64,
    pub std_dev: f64,
    pub correlation_length: f64,
}

/// Candidate values; the standard deviation is given as a fraction of each candidate mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationGrid {
    pub means: Vec<f64>,
    pub std_fractions: Vec<f64>,
    pub correlation_lengths: Vec<f64>,
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

impl CalibrationGrid {
    /// μ ∈ [1.6e9, 2.4e9] × 9, σ/μ ∈ [0.1, 0.3] × 5, l ∈ [1, 5] × 5.
    pub fn reference() -> Self {
        CalibrationGrid {
            means: linspace(1.6e9, 2.4e9, 9),
            std_fractions: linspace(0.1, 0.3, 5),
            correlation_lengths: linspace(1.0, 5.0, 5),
        }
    }

    pub fn single(point: GridPoint) -> Self {
        CalibrationGrid {
            means: vec![point.mean],
            std_fractions: vec![point.std_dev / point.mean],
            correlation_lengths: vec![point.correlation_length],
        }
    }

    /// Grid order: mean outermost, correlation length innermost.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::with_capacity(self.len());
        for &mean in &self.means {
            for &frac in &self.std_fractions {
                for &l in &self.correlation_lengths {
                    out.push(GridPoint {
                        mean,
                        std_dev: frac * mean,
                        correlation_length: l,
                    });
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.means.len() * self.std_fractions.len() * self.correlation_lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SfemConfig {
    pub geometry: BeamGeometry,
    pub truncation_order: usize,
    pub max_degree: usize,
    /// Generated samples per load when scoring a candidate.
    pub n_model_samples: usize,
    pub sample_seed: u64,
    pub metric: MetricConfig,
}

impl Default for SfemConfig {
    fn default() -> Self {
        SfemConfig {
            geometry: BeamGeometry::REFERENCE,
            truncation_order: 2,
            max_degree: 5,
            n_model_samples: 4000,
            sample_seed: 0x5fe3,
            metric: MetricConfig::default(),
        }
    }
}

/// A solved stochastic FE model, sampleable at any load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SfemModel {
    pub point: GridPoint,
    /// Solution under unit distributed load.
    pub unit_solution: PcSolution,
}

impl SfemModel {
    pub fn build(point: GridPoint, config: &SfemConfig) -> Result<SfemModel> {
        let spec = FieldSpec::new(
            point.mean,
            point.std_dev,
            point.correlation_length,
            config.geometry.length,
            config.truncation_order,
        )?;
        let field = decompose(&spec, config.geometry.n_elements)?;
        let basis = PceBasis::new(config.truncation_order, config.max_degree)?;
        let unit_solution = solve_galerkin(&config.geometry, &field, &basis, &LoadCase::linear(1.0)?)?;
        Ok(SfemModel { point, unit_solution })
    }

    pub fn solution_at(&self, load: f64) -> Result<PcSolution> {
        self.unit_solution.rescaled(load)
    }

    pub fn mean_tip(&self, load: f64) -> f64 {
        load * self.unit_solution.mean_tip()
    }

    /// Tip samples at `load`; the germ stream depends on `(seed, load)` only.
    pub fn sample(&self, load: f64, n: usize, seed: u64) -> Vec<f64> {
        let coeffs: Vec<f64> = self.unit_solution.tip_coefficients().iter().map(|c| c * load).collect();
        sample_chaos(
            &self.unit_solution.basis,
            &coeffs,
            n,
            derive_seed(seed, &[load_key(load)]),
        )
    }

    /// One tip draw per entry of `loads`, all from `rng`.
    pub fn draw_batch(&self, loads: &[f64], rng: &mut Rng) -> Vec<f64> {
        let basis = &self.unit_solution.basis;
        let coeffs = self.unit_solution.tip_coefficients();
        let mut xi = vec![0.0; basis.germ_dim];
        let mut psi = vec![0.0; basis.size()];
        loads
            .iter()
            .map(|load| {
                xi.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
                basis.evaluate_into(&xi, &mut psi);
                load * psi.iter().zip(&coeffs).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    pub fn sample_groups(&self, loads: &[f64], n: usize, seed: u64) -> Vec<CodeSamples> {
        loads
            .iter()
            .map(|&l| CodeSamples::new(l, self.sample(l, n, seed)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridScore {
    pub point: GridPoint,
    pub kl_per_load: Vec<CodeKl>,
    /// `None` when the candidate failed to solve.
    pub average_kl: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SfemCalibration {
    pub grid: CalibrationGrid,
    pub best: GridPoint,
    pub best_score: f64,
    pub score_table: Vec<GridScore>,
    /// Scaling fitted on the training data; the KL scores are in these units.
    pub scaling: ScalingSpec,
    pub config: SfemConfig,
}

impl SfemCalibration {
    pub fn model(&self) -> Result<SfemModel> {
        SfemModel::build(self.best, &self.config)
    }
}

struct TrainingCode {
    load: f64,
    kde: Kde,
}

fn score_point(
    point: GridPoint,
    codes: &[TrainingCode],
    scaling: &ScalingSpec,
    config: &SfemConfig,
) -> Result<Vec<CodeKl>> {
    let model = SfemModel::build(point, config)?;
    codes
        .iter()
        .map(|code| {
            let samples: Vec<f64> = model
                .sample(code.load, config.n_model_samples, config.sample_seed)
                .into_iter()
                .map(|v| scaling.displacement.apply(v))
                .collect();
            let model_kde = Kde::fit_with(&samples, &config.metric)?;
            let kl = match config.metric.direction {
                KlDirection::DataModel => kl_divergence_floored(&code.kde, &model_kde, config.metric.q_floor)?,
                KlDirection::ModelData => kl_divergence_floored(&model_kde, &code.kde, config.metric.q_floor)?,
            };
            Ok(CodeKl { load: code.load, kl })
        })
        .collect()
}

/// Scores every grid point by its average KL over the training loads and returns the argmin
/// (first in grid order on ties).
pub fn calibrate(training: &SampleSet, grid: &CalibrationGrid, config: &SfemConfig) -> Result<SfemCalibration> {
    if grid.is_empty() {
        return Err(Error::invalid("calibration", "empty grid"));
    }
    let groups = training.groups();
    if groups.is_empty() {
        return Err(Error::invalid("calibration", "no training loads"));
    }
    if let Some(g) = groups.iter().find(|g| g.values.len() < MIN_CALIBRATION_SAMPLES) {
        return Err(Error::invalid(
            "calibration",
            format!("load {} has {} samples (need {MIN_CALIBRATION_SAMPLES})", g.load, g.values.len()),
        ));
    }
    let scaling = fit_scaling(training, UNIT_INTERVAL)?;
    let codes = groups
        .iter()
        .map(|g| {
            let scaled: Vec<f64> = g.values.iter().map(|v| scaling.displacement.apply(*v)).collect();
            Ok(TrainingCode {
                load: g.load,
                kde: Kde::fit_with(&scaled, &config.metric)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let score_table: Vec<GridScore> = grid
        .points()
        .into_par_iter()
        .map(|point| match score_point(point, &codes, &scaling, config) {
            Ok(kl_per_load) => {
                let avg = kl_per_load.iter().map(|c| c.kl).sum::<f64>() / kl_per_load.len() as f64;
                GridScore {
                    point,
                    kl_per_load,
                    average_kl: Some(avg),
                    error: None,
                }
            }
            Err(e) => GridScore {
                point,
                kl_per_load: Vec::new(),
                average_kl: None,
                error: Some(e.to_string()),
            },
        })
        .collect();

    let (best, best_score) = score_table
        .iter()
        .filter_map(|s| s.average_kl.map(|a| (s.point, a)))
        .fold(None, |acc: Option<(GridPoint, f64)>, (p, a)| match acc {
            Some((_, b)) if b <= a => acc,
            _ => Some((p, a)),
        })
        .ok_or(Error::CalibrationInfeasible)?;
    Ok(SfemCalibration {
        grid: grid.clone(),
        best,
        best_score,
        score_table,
        scaling,
        config: *config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Provenance, Record};

    fn synthetic_training(point: GridPoint, config: &SfemConfig) -> SampleSet {
        let model = SfemModel::build(point, config).unwrap();
        let records = [10.0, 100.0, 200.0]
            .iter()
            .flat_map(|&l| {
                model.sample(l, 400, 99).into_iter().map(move |t| Record {
                    load: l,
                    tip_displacement: t,
                    seed: 0,
                })
            })
            .collect();
        SampleSet::new(records, Provenance::Sfem)
    }

    #[test]
    fn reference_grid_shape() {
        let g = CalibrationGrid::reference();
        assert_eq!(g.len(), 225);
        assert_eq!(g.points()[0].mean, 1.6e9);
        assert_eq!(g.points()[1].correlation_length, 2.0);
        assert!(g.points().iter().any(|p| p.mean == 2e9 && (p.std_dev - 0.4e9).abs() < 1.0 && p.correlation_length == 3.0));
    }

    #[test]
    fn single_point_grid() {
        let config = SfemConfig::default();
        let point = GridPoint {
            mean: 2e9,
            std_dev: 0.4e9,
            correlation_length: 3.0,
        };
        let data = synthetic_training(point, &config);
        let cal = calibrate(&data, &CalibrationGrid::single(point), &config).unwrap();
        assert_eq!(cal.score_table.len(), 1);
        assert_eq!(cal.best, point);
        assert_eq!(Some(cal.best_score), cal.score_table[0].average_kl);
    }

    #[test]
    fn recovers_the_generating_mean() {
        let config = SfemConfig::default();
        let truth = GridPoint {
            mean: 2e9,
            std_dev: 0.4e9,
            correlation_length: 3.0,
        };
        let data = synthetic_training(truth, &config);
        let grid = CalibrationGrid {
            means: vec![1.6e9, 2e9, 2.4e9],
            std_fractions: vec![0.1, 0.2, 0.3],
            correlation_lengths: vec![3.0],
        };
        let cal = calibrate(&data, &grid, &config).unwrap();
        assert_eq!(cal.best.mean, 2e9);
        assert!((cal.best.std_dev - 0.4e9).abs() < 1.0);
        let min = cal.score_table.iter().filter_map(|s| s.average_kl).fold(f64::INFINITY, f64::min);
        assert_eq!(cal.best_score, min);
    }

    #[test]
    fn infeasible_grid_is_reported() {
        let config = SfemConfig::default();
        let truth = GridPoint {
            mean: 2e9,
            std_dev: 0.4e9,
            correlation_length: 3.0,
        };
        let data = synthetic_training(truth, &config);
        // A huge spread makes the Galerkin operator indefinite.
        let grid = CalibrationGrid {
            means: vec![2e9],
            std_fractions: vec![50.0],
            correlation_lengths: vec![3.0],
        };
        match calibrate(&data, &grid, &config) {
            Err(Error::CalibrationInfeasible) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn too_few_samples_are_rejected() {
        let records = (0..50)
            .map(|i| Record {
                load: 10.0,
                tip_displacement: 1e-4 + i as f64 * 1e-7,
                seed: 0,
            })
            .collect();
        let set = SampleSet::new(records, Provenance::LinearMc);
        assert!(calibrate(&set, &CalibrationGrid::reference(), &SfemConfig::default()).is_err());
    }
}
