use std::path::{Path, PathBuf};

use mirrorforge::beam::BeamGeometry;
use mirrorforge::cgan::{ExtrapolationConfig, TrainConfig};
use mirrorforge::dataset::{load_range, NonlinearSpec, SplitSpec, EXTRAPOLATION_INTERVAL};
use mirrorforge::distributions::MetricConfig;
use mirrorforge::field::FieldSpec;
use mirrorforge::rng::derive_seed;
use mirrorforge::sfem::{CalibrationGrid, GridPoint, SfemConfig};
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Case {
    Linear,
    Nonlinear,
}

impl Case {
    pub fn name(self) -> &'static str {
        match self {
            Case::Linear => "linear",
            Case::Nonlinear => "nonlinear",
        }
    }
}

/// Sub-seeds of the master seed, one per pipeline stage.
#[derive(Debug, Clone, Copy)]
pub enum Stage {
    Generate = 1,
    Calibrate = 2,
    Train = 3,
    Evaluate = 4,
    Extrapolate = 5,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub data_dir: PathBuf,
    pub model_dir: PathBuf,
    pub report_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            data_dir: "data".into(),
            model_dir: "models".into(),
            report_dir: "reports".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadGrid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl LoadGrid {
    pub fn values(&self) -> Vec<f64> {
        load_range(self.start, self.end, self.step)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearCase {
    pub truth: GridPoint,
    pub truncation_order: usize,
    pub loads: LoadGrid,
    pub n_per_load: usize,
}

impl Default for LinearCase {
    fn default() -> Self {
        LinearCase {
            truth: GridPoint {
                mean: 2e9,
                std_dev: 0.4e9,
                correlation_length: 3.0,
            },
            truncation_order: 2,
            loads: LoadGrid {
                start: 10.0,
                end: 200.0,
                step: 10.0,
            },
            n_per_load: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerateSection {
    pub linear: LinearCase,
    pub nonlinear: NonlinearSpec,
}

impl Default for GenerateSection {
    fn default() -> Self {
        GenerateSection {
            linear: LinearCase::default(),
            nonlinear: NonlinearSpec::reference(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Splits {
    pub linear: SplitSpec,
    pub nonlinear: SplitSpec,
}

impl Default for Splits {
    fn default() -> Self {
        Splits {
            linear: SplitSpec::linear_reference(),
            nonlinear: SplitSpec::nonlinear_reference(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrateSection {
    pub grid: CalibrationGrid,
    pub truncation_order: usize,
    pub max_degree: usize,
    pub n_model_samples: usize,
    /// Samples per load in the emitted reports.
    pub n_report: usize,
    pub tolerance: f64,
}

impl Default for CalibrateSection {
    fn default() -> Self {
        let sfem = SfemConfig::default();
        CalibrateSection {
            grid: CalibrationGrid::reference(),
            truncation_order: sfem.truncation_order,
            max_degree: sfem.max_degree,
            n_model_samples: sfem.n_model_samples,
            n_report: 10_000,
            tolerance: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSection {
    /// `seed` is replaced by one derived from the master seed.
    #[serde(flatten)]
    pub settings: TrainConfig,
    pub n_report: usize,
    pub tolerance: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            settings: TrainConfig::default(),
            n_report: 10_000,
            tolerance: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtrapolateSection {
    pub boundary: f64,
    pub scaling_target: (f64, f64),
    pub n_report: usize,
    pub tolerance: f64,
}

impl Default for ExtrapolateSection {
    fn default() -> Self {
        ExtrapolateSection {
            boundary: 310.0,
            scaling_target: EXTRAPOLATION_INTERVAL,
            n_report: 10_000,
            tolerance: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluateSection {
    pub n_samples: usize,
    pub tolerance: f64,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        EvaluateSection {
            n_samples: 10_000,
            tolerance: 0.3,
        }
    }
}

/// One experiment as a single JSON document. Every field has a default, so `{}` is valid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub experiment_id: String,
    pub seed: u64,
    pub paths: Paths,
    pub geometry: BeamGeometry,
    pub metric: MetricConfig,
    pub splits: Splits,
    pub generate: GenerateSection,
    pub calibrate: CalibrateSection,
    pub train: TrainSection,
    pub evaluate: EvaluateSection,
    pub extrapolate: ExtrapolateSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment_id: "cantilever".into(),
            seed: 20_231,
            paths: Paths::default(),
            geometry: BeamGeometry::REFERENCE,
            metric: MetricConfig::default(),
            splits: Splits::default(),
            generate: GenerateSection::default(),
            calibrate: CalibrateSection::default(),
            train: TrainSection::default(),
            evaluate: EvaluateSection::default(),
            extrapolate: ExtrapolateSection::default(),
        }
    }
}

impl ExperimentConfig {
    /// Reads the document and resolves relative paths against its directory.
    pub fn load(path: Option<&Path>) -> Result<ExperimentConfig, Failure> {
        let Some(path) = path else {
            return Ok(ExperimentConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Failure::Usage(format!("invalid config {}: {e}", path.display())))?;
        for spec in [&mut config.splits.linear, &mut config.splits.nonlinear] {
            *spec = SplitSpec::new(spec.train().to_vec(), spec.val().to_vec(), spec.test().to_vec())
                .map_err(|e| Failure::Usage(format!("invalid config {}: {e}", path.display())))?;
        }
        let base = path.parent().unwrap_or(Path::new(""));
        for dir in [
            &mut config.paths.data_dir,
            &mut config.paths.model_dir,
            &mut config.paths.report_dir,
        ] {
            if dir.is_relative() {
                *dir = base.join(&*dir);
            }
        }
        Ok(config)
    }

    pub fn stage_seed(&self, stage: Stage, parts: &[u64]) -> u64 {
        let mut all = vec![stage as u64];
        all.extend_from_slice(parts);
        derive_seed(self.seed, &all)
    }

    /// Shared by every emitted report so that `evaluate` reproduces stored ones.
    pub fn report_seed(&self) -> u64 {
        self.stage_seed(Stage::Evaluate, &[])
    }

    pub fn split_for(&self, case: Case) -> &SplitSpec {
        match case {
            Case::Linear => &self.splits.linear,
            Case::Nonlinear => &self.splits.nonlinear,
        }
    }

    pub fn truth(&self) -> mirrorforge::Result<FieldSpec> {
        let l = &self.generate.linear;
        FieldSpec::new(
            l.truth.mean,
            l.truth.std_dev,
            l.truth.correlation_length,
            self.geometry.length,
            l.truncation_order,
        )
    }

    pub fn sfem(&self) -> SfemConfig {
        SfemConfig {
            geometry: self.geometry,
            truncation_order: self.calibrate.truncation_order,
            max_degree: self.calibrate.max_degree,
            n_model_samples: self.calibrate.n_model_samples,
            sample_seed: self.stage_seed(Stage::Calibrate, &[]),
            metric: self.metric,
        }
    }

    pub fn train_config(&self, parts: &[u64]) -> TrainConfig {
        TrainConfig {
            seed: self.stage_seed(Stage::Train, parts),
            metric: self.metric,
            ..self.train.settings.clone()
        }
    }

    pub fn extrapolation(&self) -> ExtrapolationConfig {
        let e = &self.extrapolate;
        ExtrapolationConfig {
            boundary: e.boundary,
            split: SplitSpec::interleaved(e.boundary),
            train: TrainConfig {
                seed: self.stage_seed(Stage::Extrapolate, &[]),
                scaling_target: e.scaling_target,
                metric: self.metric,
                ..self.train.settings.clone()
            },
            sfem: self.sfem(),
            grid: self.calibrate.grid.clone(),
            n_report: e.n_report,
            report_seed: self.stage_seed(Stage::Extrapolate, &[1]),
            tolerance: e.tolerance,
        }
    }

    pub fn data_path(&self, case: Case) -> PathBuf {
        self.paths.data_dir.join(format!("{}.csv", case.name()))
    }

    pub fn calibration_path(&self, case: Case) -> PathBuf {
        self.paths.model_dir.join(format!("sfem-{}.json", case.name()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default() {
        let parsed: ExperimentConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(parsed, ExperimentConfig::default());
    }

    #[test]
    fn round_trip_and_partial_sections() {
        let text = serde_json::to_string(&ExperimentConfig::default()).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, ExperimentConfig::default());
        let partial: ExperimentConfig =
            serde_json::from_str(r#"{"seed": 5, "train": {"epochs": 300, "n_report": 50}}"#).unwrap();
        assert_eq!(partial.seed, 5);
        assert_eq!(partial.train.settings.epochs, 300);
        assert_eq!(partial.train.settings.batch_size, 128);
        assert_eq!(partial.train.n_report, 50);
    }

    #[test]
    fn stage_seeds_differ() {
        let c = ExperimentConfig::default();
        assert_ne!(c.stage_seed(Stage::Generate, &[0]), c.stage_seed(Stage::Generate, &[1]));
        assert_ne!(c.stage_seed(Stage::Train, &[]), c.stage_seed(Stage::Evaluate, &[]));
        assert_eq!(c.train_config(&[1, 2]).seed, c.train_config(&[1, 2]).seed);
    }
}
