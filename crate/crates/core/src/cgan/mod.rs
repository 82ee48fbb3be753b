//! Conditional GAN for tip displacement given load, and the hybrid variant whose
//! latent input is a stochastic FE tip sample at the same load.

mod mlp;
mod optim;

use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use mlp::{logistic, softplus, tanh, Activation, Forward, Gradients, Mlp};
pub use optim::{Optimizer, OptimizerState};

use crate::dataset::{fit_scaling, split, SampleSet, ScalingSpec, SplitSpec, EXTRAPOLATION_INTERVAL, UNIT_INTERVAL};
use crate::distributions::{
    kl_divergence_floored, read_json, write_json, CodeSamples, Kde, KlDirection, MetricConfig, MirrorReport,
    MIN_KDE_SAMPLES,
};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, load_key, rng_from, Rng};
use crate::sfem::{calibrate, CalibrationGrid, GridPoint, SfemConfig, SfemModel};

pub const BLACK_BOX_NOISE_DIM: usize = 10;
pub const CODE_DIM: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CganMode {
    BlackBox,
    /// Latent draws come from this stochastic FE model.
    Hybrid { sfem: Box<SfemModel> },
}

impl CganMode {
    pub fn noise_dim(&self) -> usize {
        match self {
            CganMode::BlackBox => BLACK_BOX_NOISE_DIM,
            CganMode::Hybrid { .. } => 1,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            CganMode::BlackBox => "cgan",
            CganMode::Hybrid { .. } => "hybrid",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CganModel {
    pub generator: Mlp,
    pub discriminator: Mlp,
    pub noise_dim: usize,
    pub code_dim: usize,
    pub scaling: ScalingSpec,
    pub mode: CganMode,
}

impl CganModel {
    pub fn new(hidden: usize, scaling: ScalingSpec, mode: CganMode, rng: &mut Rng) -> Result<CganModel> {
        if hidden == 0 {
            return Err(Error::invalid("network", "hidden width must be positive"));
        }
        let noise_dim = mode.noise_dim();
        let generator = Mlp::init(noise_dim + CODE_DIM, hidden, 1, Activation::Tanh, rng);
        let discriminator = Mlp::init(1 + CODE_DIM, hidden, 1, Activation::Logistic, rng);
        Ok(CganModel {
            generator,
            discriminator,
            noise_dim,
            code_dim: CODE_DIM,
            scaling,
            mode,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.generator;
        let d = &self.discriminator;
        let ok = self.code_dim == CODE_DIM
            && self.noise_dim == self.mode.noise_dim()
            && g.input_width() == self.noise_dim + self.code_dim
            && g.output_width() == 1
            && g.output_activation == Activation::Tanh
            && d.input_width() == 1 + self.code_dim
            && d.output_width() == 1
            && d.output_activation == Activation::Logistic;
        if !ok {
            return Err(Error::invalid("cGAN model", "layer widths inconsistent with the mode"));
        }
        if !g.is_finite() || !d.is_finite() {
            return Err(Error::invalid("cGAN model", "non-finite weights"));
        }
        Ok(())
    }

    pub fn hidden_size(&self) -> usize {
        self.generator.hidden_width()
    }

    /// Latent matrix for a batch of scaled codes.
    pub fn latent(&self, codes: &[f64], rng: &mut Rng) -> DMatrix<f64> {
        match &self.mode {
            CganMode::BlackBox => DMatrix::from_fn(codes.len(), self.noise_dim, |_, _| rng.sample(StandardNormal)),
            CganMode::Hybrid { sfem } => {
                let loads: Vec<f64> = codes.iter().map(|c| self.scaling.load.invert(*c)).collect();
                let tips = sfem.draw_batch(&loads, rng);
                DMatrix::from_iterator(codes.len(), 1, tips.into_iter().map(|t| self.scaling.displacement.apply(t)))
            }
        }
    }

    /// `[z | c]` rows.
    pub fn generator_input(&self, latent: &DMatrix<f64>, codes: &[f64]) -> DMatrix<f64> {
        let k = latent.ncols();
        DMatrix::from_fn(codes.len(), k + 1, |i, j| if j < k { latent[(i, j)] } else { codes[i] })
    }

    /// Generated samples at `load`, in scaled units.
    pub fn sample_scaled(&self, load: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
        let mut rng = rng_from(derive_seed(seed, &[load_key(load)]));
        let codes = vec![self.scaling.load.apply(load); n];
        let z = self.latent(&codes, &mut rng);
        let out = self.generator.predict(&self.generator_input(&z, &codes))?;
        Ok(out.as_slice().to_vec())
    }

    /// Generated tip displacements at `load`, in physical units.
    pub fn generate(&self, load: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
        let d = self.scaling.displacement;
        Ok(self.sample_scaled(load, n, seed)?.into_iter().map(|y| d.invert(y)).collect())
    }

    pub fn generate_groups(&self, loads: &[f64], n: usize, seed: u64) -> Result<Vec<CodeSamples>> {
        loads
            .iter()
            .map(|&l| Ok(CodeSamples::new(l, self.generate(l, n, seed)?)))
            .collect()
    }

    /// Mirror report against `data`, in this model's output units.
    pub fn report(
        &self,
        data: &SampleSet,
        n: usize,
        seed: u64,
        tolerance: f64,
        metric: &MetricConfig,
    ) -> Result<MirrorReport> {
        let groups = data.groups();
        let codes: Vec<f64> = groups.iter().map(|g| g.load).collect();
        let generated = self.generate_groups(&codes, n, seed)?;
        MirrorReport::evaluate(
            self.mode.label(),
            &generated,
            &groups,
            &self.scaling.displacement,
            tolerance,
            metric,
        )
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn read_json(path: &Path) -> Result<CganModel> {
        let model: CganModel = read_json(path)?;
        model.validate()?;
        Ok(model)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorLoss {
    /// Minimize `log(1 − D(G(z)))`.
    #[default]
    Saturating,
    /// Minimize `−log D(G(z))`.
    NonSaturating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// One epoch is one discriminator step followed by one generator step on a fresh batch.
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: Optimizer,
    pub generator_loss: GeneratorLoss,
    pub selection_interval: usize,
    pub hidden_sizes: Vec<usize>,
    /// Generated samples per validation code at each checkpoint.
    pub n_eval: usize,
    pub seed: u64,
    pub scaling_target: (f64, f64),
    pub metric: MetricConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20_000,
            batch_size: 128,
            optimizer: Optimizer::default(),
            generator_loss: GeneratorLoss::default(),
            selection_interval: 100,
            hidden_sizes: vec![50, 110, 200, 500, 1000],
            n_eval: 2000,
            seed: 0,
            scaling_target: UNIT_INTERVAL,
            metric: MetricConfig::default(),
        }
    }
}

/// `10, 20, …, 3000`.
pub fn full_hidden_sweep() -> Vec<usize> {
    (1..=300).map(|i| 10 * i).collect()
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |r: &str| Err(Error::invalid("training config", r.to_string()));
        if self.hidden_sizes.is_empty() || self.hidden_sizes.contains(&0) {
            return fail("hidden size list must be non-empty and positive");
        }
        if self.selection_interval == 0 || self.epochs < self.selection_interval {
            return fail("selection interval must be positive and at most the epoch count");
        }
        if self.batch_size == 0 {
            return fail("batch size must be positive");
        }
        if self.n_eval < MIN_KDE_SAMPLES {
            return fail("too few evaluation samples");
        }
        Ok(())
    }
}

/// Scaled `(sample, code)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingBatch {
    pub samples: Vec<f64>,
    pub codes: Vec<f64>,
}

impl TrainingBatch {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn draw(pool: &TrainingBatch, n: usize, rng: &mut Rng) -> TrainingBatch {
        let (samples, codes) = (0..n)
            .map(|_| {
                let i = rng.random_range(0..pool.len());
                (pool.samples[i], pool.codes[i])
            })
            .unzip();
        TrainingBatch { samples, codes }
    }
}

fn discriminator_input(samples: &[f64], codes: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(samples.len(), 2, |i, j| if j == 0 { samples[i] } else { codes[i] })
}

/// `−mean log D(x, c) − mean log(1 − D(G(z, c), c))` and its discriminator gradient.
pub fn discriminator_objective(
    model: &CganModel,
    real: &TrainingBatch,
    latent: &DMatrix<f64>,
) -> Result<(f64, Gradients)> {
    let n = real.len();
    let fake = model.generator.predict(&model.generator_input(latent, &real.codes))?;
    let mut samples = real.samples.clone();
    samples.extend_from_slice(fake.as_slice());
    let mut codes = real.codes.clone();
    codes.extend_from_slice(&real.codes);
    let x = discriminator_input(&samples, &codes);
    let fwd = model.discriminator.forward(&x)?;
    let inv = 1.0 / n as f64;
    let mut loss = 0.0;
    let mut grad = DMatrix::zeros(2 * n, 1);
    for (i, s) in fwd.logits.iter().enumerate() {
        if i < n {
            loss += inv * softplus(-s);
            grad[i] = inv * (logistic(*s) - 1.0);
        } else {
            loss += inv * softplus(*s);
            grad[i] = inv * logistic(*s);
        }
    }
    Ok((loss, model.discriminator.backward_logits(&x, &fwd, &grad)))
}

/// Generator loss through the frozen discriminator, and its generator gradient.
pub fn generator_objective(
    model: &CganModel,
    codes: &[f64],
    latent: &DMatrix<f64>,
    kind: GeneratorLoss,
) -> Result<(f64, Gradients)> {
    let n = codes.len();
    let input = model.generator_input(latent, codes);
    let gf = model.generator.forward(&input)?;
    let x = discriminator_input(gf.output.as_slice(), codes);
    let df = model.discriminator.forward(&x)?;
    let inv = 1.0 / n as f64;
    let mut loss = 0.0;
    let mut grad = DMatrix::zeros(n, 1);
    for (i, s) in df.logits.iter().enumerate() {
        match kind {
            GeneratorLoss::Saturating => {
                loss -= inv * softplus(*s);
                grad[i] = -inv * logistic(*s);
            }
            GeneratorLoss::NonSaturating => {
                loss += inv * softplus(-s);
                grad[i] = inv * (logistic(*s) - 1.0);
            }
        }
    }
    let dx = model.discriminator.input_gradient_logits(&df, &grad);
    let grad_out = dx.columns(0, 1).into_owned();
    Ok((loss, model.generator.backward(&input, &gf, &grad_out)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepLosses {
    pub d_loss: f64,
    pub g_loss: f64,
}

/// A model together with its optimizer state and random stream.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub model: CganModel,
    optimizer: Optimizer,
    generator_loss: GeneratorLoss,
    d_state: OptimizerState,
    g_state: OptimizerState,
    rng: Rng,
    epoch: usize,
}

impl Trainer {
    pub fn new(model: CganModel, optimizer: Optimizer, generator_loss: GeneratorLoss, seed: u64) -> Trainer {
        Trainer {
            d_state: OptimizerState::new(&model.discriminator),
            g_state: OptimizerState::new(&model.generator),
            model,
            optimizer,
            generator_loss,
            rng: rng_from(seed),
            epoch: 0,
        }
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn discriminator_step(&mut self, real: &TrainingBatch) -> Result<f64> {
        let z = self.model.latent(&real.codes, &mut self.rng);
        let (loss, grads) = discriminator_objective(&self.model, real, &z)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch: self.epoch });
        }
        self.d_state.step(&self.optimizer, &mut self.model.discriminator, &grads);
        Ok(loss)
    }

    pub fn generator_step(&mut self, codes: &[f64]) -> Result<f64> {
        let z = self.model.latent(codes, &mut self.rng);
        let (loss, grads) = generator_objective(&self.model, codes, &z, self.generator_loss)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch: self.epoch });
        }
        self.g_state.step(&self.optimizer, &mut self.model.generator, &grads);
        Ok(loss)
    }

    /// Discriminator step on `real` plus fakes, then generator step against the updated discriminator.
    pub fn train_step(&mut self, real: &TrainingBatch) -> Result<StepLosses> {
        self.epoch += 1;
        let d_loss = self.discriminator_step(real)?;
        let g_loss = self.generator_step(&real.codes)?;
        Ok(StepLosses { d_loss, g_loss })
    }

    /// Draws a batch from `pool` with this trainer's stream and takes one step.
    pub fn train_on(&mut self, pool: &TrainingBatch, batch_size: usize) -> Result<StepLosses> {
        let batch = TrainingBatch::draw(pool, batch_size, &mut self.rng);
        self.train_step(&batch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub epoch: usize,
    pub hidden_size: usize,
    pub val_kl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeFailure {
    pub hidden_size: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub model: CganModel,
    pub hidden_size: usize,
    pub epoch: usize,
    pub val_kl: f64,
    pub trace: Vec<TracePoint>,
    pub failures: Vec<SizeFailure>,
}

impl TrainOutcome {
    pub fn write_trace_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("epoch,size,val_kl\n");
        for t in &self.trace {
            out.push_str(&format!("{},{},{}\n", t.epoch, t.hidden_size, t.val_kl));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

struct ValidationCode {
    load: f64,
    kde: Kde,
}

fn validation_kl(model: &CganModel, codes: &[ValidationCode], n: usize, seed: u64, metric: &MetricConfig) -> Result<f64> {
    let mut total = 0.0;
    for code in codes {
        let samples = model.sample_scaled(code.load, n, seed)?;
        let q = Kde::fit_with(&samples, metric)?;
        total += match metric.direction {
            KlDirection::DataModel => kl_divergence_floored(&code.kde, &q, metric.q_floor)?,
            KlDirection::ModelData => kl_divergence_floored(&q, &code.kde, metric.q_floor)?,
        };
    }
    Ok(total / codes.len() as f64)
}

struct SizeResult {
    best: Option<(CganModel, usize, f64)>,
    trace: Vec<TracePoint>,
}

fn train_size(
    hidden: usize,
    pool: &TrainingBatch,
    val: &[ValidationCode],
    scaling: ScalingSpec,
    mode: &CganMode,
    config: &TrainConfig,
) -> Result<SizeResult> {
    let seed = derive_seed(config.seed, &[hidden as u64]);
    let mut init_rng = rng_from(derive_seed(seed, &[0]));
    let model = CganModel::new(hidden, scaling, mode.clone(), &mut init_rng)?;
    let mut trainer = Trainer::new(model, config.optimizer, config.generator_loss, derive_seed(seed, &[1]));
    let eval_seed = derive_seed(seed, &[2]);
    let mut result = SizeResult {
        best: None,
        trace: Vec::new(),
    };
    for epoch in 1..=config.epochs {
        trainer.train_on(pool, config.batch_size)?;
        if epoch % config.selection_interval != 0 {
            continue;
        }
        let kl = validation_kl(&trainer.model, val, config.n_eval, eval_seed, &config.metric)
            .map_err(|e| e.context(format!("validation at epoch {epoch}")))?;
        result.trace.push(TracePoint {
            epoch,
            hidden_size: hidden,
            val_kl: kl,
        });
        if result.best.as_ref().is_none_or(|(_, _, b)| kl < *b) {
            result.best = Some((trainer.model.clone(), epoch, kl));
        }
        log::debug!("hidden {hidden} epoch {epoch} val KL {kl:.4}");
    }
    Ok(result)
}

/// Hidden-size search with KL-based checkpoint selection on the validation codes.
pub fn train(train: &SampleSet, val: &SampleSet, config: &TrainConfig, mode: CganMode) -> Result<TrainOutcome> {
    config.validate()?;
    let scaling = fit_scaling(train, config.scaling_target)?;
    let scaled = train.scaled(&scaling)?;
    let pool = TrainingBatch {
        samples: scaled.records.iter().map(|r| r.tip_displacement).collect(),
        codes: scaled.records.iter().map(|r| r.load).collect(),
    };
    let val_codes = val
        .groups()
        .into_iter()
        .map(|g| {
            let values: Vec<f64> = g.values.iter().map(|v| scaling.displacement.apply(*v)).collect();
            Ok(ValidationCode {
                load: g.load,
                kde: Kde::fit_with(&values, &config.metric)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if val_codes.is_empty() {
        return Err(Error::invalid("training", "empty validation set"));
    }
    let results: Vec<(usize, Result<SizeResult>)> = config
        .hidden_sizes
        .par_iter()
        .map(|&h| (h, train_size(h, &pool, &val_codes, scaling, &mode, config)))
        .collect();
    let mut trace = Vec::new();
    let mut failures = Vec::new();
    let mut best: Option<(CganModel, usize, f64)> = None;
    for (hidden, r) in results {
        match r {
            Ok(r) => {
                trace.extend(r.trace);
                if let Some(b) = r.best {
                    if best.as_ref().is_none_or(|cur| b.2 < cur.2) {
                        best = Some(b);
                    }
                }
            }
            Err(e) => {
                log::warn!("hidden size {hidden} failed: {e}");
                failures.push(SizeFailure {
                    hidden_size: hidden,
                    error: e.to_string(),
                });
            }
        }
    }
    let (model, epoch, val_kl) = best.ok_or_else(|| {
        let reasons: Vec<String> = failures.iter().map(|f| format!("size {}: {}", f.hidden_size, f.error)).collect();
        Error::NoViableModel(reasons.join("; "))
    })?;
    Ok(TrainOutcome {
        hidden_size: model.hidden_size(),
        model,
        epoch,
        val_kl,
        trace,
        failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationConfig {
    /// Largest load of the fit domain.
    pub boundary: f64,
    pub split: SplitSpec,
    pub train: TrainConfig,
    pub sfem: SfemConfig,
    pub grid: CalibrationGrid,
    pub n_report: usize,
    pub report_seed: u64,
    /// ε tolerance recorded in the reports.
    pub tolerance: f64,
}

impl Default for ExtrapolationConfig {
    fn default() -> Self {
        ExtrapolationConfig {
            boundary: 310.0,
            split: SplitSpec::interleaved(310.0),
            train: TrainConfig {
                scaling_target: EXTRAPOLATION_INTERVAL,
                ..TrainConfig::default()
            },
            sfem: SfemConfig::default(),
            grid: CalibrationGrid::reference(),
            n_report: 2000,
            report_seed: 0xe7a,
            tolerance: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeResult {
    pub hidden_size: usize,
    pub val_kl: f64,
    pub test: MirrorReport,
    pub held_out: MirrorReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationOutcome {
    pub sfem_point: GridPoint,
    pub black_box: ModeResult,
    pub hybrid: ModeResult,
}

/// Trains both modes on the fit domain and scores them on its test codes and on `held_out`.
pub fn extrapolation_protocol(
    fit_domain: &SampleSet,
    held_out: &SampleSet,
    config: &ExtrapolationConfig,
) -> Result<ExtrapolationOutcome> {
    if held_out.records.iter().any(|r| r.load <= config.boundary) {
        return Err(Error::invalid("extrapolation", "held-out loads must lie above the boundary"));
    }
    if fit_domain.records.iter().any(|r| r.load > config.boundary + 1e-9) {
        return Err(Error::invalid("extrapolation", "fit-domain loads must not exceed the boundary"));
    }
    let parts = split(fit_domain, &config.split)?;
    let calibration = calibrate(&parts.train, &config.grid, &config.sfem).map_err(|e| e.context("hybrid SFE calibration"))?;
    let sfem = calibration.model()?;
    let run = |mode: CganMode| -> Result<ModeResult> {
        let label = mode.label();
        let outcome = train(&parts.train, &parts.val, &config.train, mode).map_err(|e| e.context(label))?;
        let metric = &config.train.metric;
        Ok(ModeResult {
            hidden_size: outcome.hidden_size,
            val_kl: outcome.val_kl,
            test: outcome.model.report(&parts.test, config.n_report, config.report_seed, config.tolerance, metric)?,
            held_out: outcome
                .model
                .report(held_out, config.n_report, config.report_seed, config.tolerance, metric)?,
        })
    };
    Ok(ExtrapolationOutcome {
        sfem_point: calibration.best,
        black_box: run(CganMode::BlackBox)?,
        hybrid: run(CganMode::Hybrid { sfem: Box::new(sfem) })?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ColumnScaling, Provenance, Record};

    fn unit_scaling() -> ScalingSpec {
        ScalingSpec {
            load: ColumnScaling::identity(),
            displacement: ColumnScaling::identity(),
        }
    }

    fn small_model(seed: u64) -> CganModel {
        CganModel::new(6, unit_scaling(), CganMode::BlackBox, &mut rng_from(seed)).unwrap()
    }

    #[test]
    fn widths_follow_the_mode() {
        let m = small_model(1);
        assert_eq!(m.generator.input_width(), 11);
        assert_eq!(m.discriminator.input_width(), 2);
        m.validate().unwrap();
        let mut broken = m.clone();
        broken.noise_dim = 1;
        assert!(broken.validate().is_err());
    }

    #[test]
    fn generation_is_seeded_and_bounded() {
        let m = small_model(2);
        let a = m.generate(0.5, 200, 9).unwrap();
        assert_eq!(a, m.generate(0.5, 200, 9).unwrap());
        assert_ne!(a, m.generate(0.5, 200, 10).unwrap());
        assert!(a.iter().all(|y| y.abs() < 1.0));
    }

    #[test]
    fn generator_step_freezes_discriminator() {
        let mut t = Trainer::new(small_model(3), Optimizer::default(), GeneratorLoss::Saturating, 4);
        let d_before = t.model.discriminator.clone();
        let g_before = t.model.generator.clone();
        t.generator_step(&[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(t.model.discriminator, d_before);
        assert_ne!(t.model.generator, g_before);
        let g_before = t.model.generator.clone();
        let batch = TrainingBatch {
            samples: vec![0.0, 0.5, -0.5],
            codes: vec![0.1, 0.2, 0.3],
        };
        t.discriminator_step(&batch).unwrap();
        assert_eq!(t.model.generator, g_before);
        assert_ne!(t.model.discriminator, d_before);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = TrainConfig {
            hidden_sizes: vec![],
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            selection_interval: 0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = small_model(5);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        m.write_json(&path).unwrap();
        assert_eq!(CganModel::read_json(&path).unwrap(), m);
    }

    #[test]
    fn all_sizes_failing_is_reported() {
        let records = (0..40)
            .map(|i| Record {
                load: if i < 20 { 10.0 } else { 20.0 },
                tip_displacement: i as f64,
                seed: 0,
            })
            .collect();
        let set = SampleSet::new(records, Provenance::LinearMc);
        let cfg = TrainConfig {
            epochs: 10,
            selection_interval: 10,
            hidden_sizes: vec![3],
            n_eval: 50,
            optimizer: Optimizer::Sgd { learning_rate: f64::NAN },
            ..TrainConfig::default()
        };
        let err = train(&set, &set, &cfg, CganMode::BlackBox).unwrap_err();
        assert!(matches!(err, Error::NoViableModel(_)), "{err}");
    }
}
