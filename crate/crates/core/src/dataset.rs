//! Monte Carlo ground truth, load-code splits, affine scaling and persistence.

use std::path::{Path, PathBuf};

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beam::{solve_linear, solve_nonlinear, BeamGeometry, BeamModel, LoadCase, NewtonSettings, SofteningLaw};
use crate::distributions::{read_json, write_json, CodeSamples};
use crate::error::{Error, Result};
use crate::field::{decompose, FieldSpec, GermSample, CLAMP_FRACTION};
use crate::rng::{derive_seed, load_key, rng_from};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    LinearMc,
    NonlinearMc,
    Sfem,
    Cgan,
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub load: f64,
    pub tip_displacement: f64,
    pub seed: u64,
}

/// Affine map of one column from `[min, max]` onto `[target_lo, target_hi]`, without clipping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnScaling {
    pub min: f64,
    pub max: f64,
    pub target_lo: f64,
    pub target_hi: f64,
}

impl ColumnScaling {
    pub fn new(min: f64, max: f64, target: (f64, f64), column: &'static str) -> Result<Self> {
        if !(min < max) || !min.is_finite() || !max.is_finite() {
            return Err(Error::DegenerateColumn(column));
        }
        if !(target.0 < target.1) {
            return Err(Error::invalid("scaling", "target interval must be increasing"));
        }
        Ok(ColumnScaling {
            min,
            max,
            target_lo: target.0,
            target_hi: target.1,
        })
    }

    pub fn identity() -> Self {
        ColumnScaling {
            min: 0.0,
            max: 1.0,
            target_lo: 0.0,
            target_hi: 1.0,
        }
    }

    pub fn apply(&self, x: f64) -> f64 {
        self.target_lo + (x - self.min) * (self.target_hi - self.target_lo) / (self.max - self.min)
    }

    pub fn invert(&self, y: f64) -> f64 {
        self.min + (y - self.target_lo) * (self.max - self.min) / (self.target_hi - self.target_lo)
    }
}

pub const UNIT_INTERVAL: (f64, f64) = (-1.0, 1.0);
pub const EXTRAPOLATION_INTERVAL: (f64, f64) = (-0.8, 0.8);

/// Per-column scaling fitted on training data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingSpec {
    pub load: ColumnScaling,
    pub displacement: ColumnScaling,
}

/// Fits the load and displacement columns of `train` onto `target`.
pub fn fit_scaling(train: &SampleSet, target: (f64, f64)) -> Result<ScalingSpec> {
    if train.scaling.is_some() {
        return Err(Error::invalid("scaling", "training set is already scaled"));
    }
    let (lmin, lmax) = min_max(train.records.iter().map(|r| r.load));
    let (dmin, dmax) = min_max(train.records.iter().map(|r| r.tip_displacement));
    Ok(ScalingSpec {
        load: ColumnScaling::new(lmin, lmax, target, "load")?,
        displacement: ColumnScaling::new(dmin, dmax, target, "tip_displacement")?,
    })
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub records: Vec<Record>,
    pub provenance: Provenance,
    /// When present, `records` are in scaled units.
    pub scaling: Option<ScalingSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadSummary {
    pub load: f64,
    pub count: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
}

fn same_load(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

impl SampleSet {
    pub fn new(records: Vec<Record>, provenance: Provenance) -> Self {
        SampleSet {
            records,
            provenance,
            scaling: None,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Distinct load codes, ascending.
    pub fn codes(&self) -> Vec<f64> {
        let mut codes: Vec<f64> = self.records.iter().map(|r| r.load).collect();
        codes.sort_by(f64::total_cmp);
        codes.dedup_by(|a, b| same_load(*a, *b));
        codes
    }

    pub fn samples_at(&self, load: f64) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| same_load(r.load, load))
            .map(|r| r.tip_displacement)
            .collect()
    }

    /// Displacements grouped by load code, ascending.
    pub fn groups(&self) -> Vec<CodeSamples> {
        self.codes()
            .into_iter()
            .map(|c| CodeSamples::new(c, self.samples_at(c)))
            .collect()
    }

    pub fn summary(&self) -> Vec<LoadSummary> {
        self.groups()
            .into_iter()
            .map(|g| {
                let n = g.values.len() as f64;
                let mean = g.values.iter().sum::<f64>() / n;
                let var = if g.values.len() > 1 {
                    g.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
                } else {
                    0.0
                };
                let (min, max) = min_max(g.values.iter().copied());
                LoadSummary {
                    load: g.load,
                    count: g.values.len(),
                    mean,
                    std_dev: var.sqrt(),
                    min,
                    max,
                }
            })
            .collect()
    }

    /// Records whose load is one of `codes`, in their original order.
    pub fn select(&self, codes: &[f64]) -> SampleSet {
        SampleSet {
            records: self
                .records
                .iter()
                .filter(|r| codes.iter().any(|c| same_load(*c, r.load)))
                .copied()
                .collect(),
            provenance: self.provenance,
            scaling: self.scaling,
        }
    }

    pub fn scaled(&self, spec: &ScalingSpec) -> Result<SampleSet> {
        if self.scaling.is_some() {
            return Err(Error::invalid("scaling", "set is already scaled"));
        }
        Ok(SampleSet {
            records: self
                .records
                .iter()
                .map(|r| Record {
                    load: spec.load.apply(r.load),
                    tip_displacement: spec.displacement.apply(r.tip_displacement),
                    seed: r.seed,
                })
                .collect(),
            provenance: self.provenance,
            scaling: Some(*spec),
        })
    }

    pub fn unscaled(&self) -> SampleSet {
        match &self.scaling {
            None => self.clone(),
            Some(spec) => SampleSet {
                records: self
                    .records
                    .iter()
                    .map(|r| Record {
                        load: spec.load.invert(r.load),
                        tip_displacement: spec.displacement.invert(r.tip_displacement),
                        seed: r.seed,
                    })
                    .collect(),
                provenance: self.provenance,
                scaling: None,
            },
        }
    }

    fn sort(&mut self) {
        // Stable: equal loads keep generation-index order.
        self.records.sort_by(|a, b| a.load.total_cmp(&b.load));
    }
}

/// `start, start + step, …` up to and including `end`.
pub fn load_range(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + step * i as f64).collect()
}

/// Disjoint train/validation/test load codes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    train: Vec<f64>,
    val: Vec<f64>,
    test: Vec<f64>,
}

impl SplitSpec {
    pub fn new(train: Vec<f64>, val: Vec<f64>, test: Vec<f64>) -> Result<Self> {
        let lists = [&train, &val, &test];
        for (i, a) in lists.iter().enumerate() {
            for b in &lists[i + 1..] {
                if let Some(c) = a.iter().find(|x| b.iter().any(|y| same_load(**x, *y))) {
                    return Err(Error::invalid("split", format!("load {c} appears in two subsets")));
                }
            }
        }
        Ok(SplitSpec { train, val, test })
    }

    /// Every third load starting at 10, 20 and 30 respectively, over `10..=max_load`.
    pub fn interleaved(max_load: f64) -> Self {
        let train = load_range(10.0, max_load, 30.0);
        let val = load_range(20.0, max_load, 30.0);
        let test = load_range(30.0, max_load, 30.0);
        SplitSpec { train, val, test }
    }

    /// Linear case: train {10, 40, …, 160, 200}, val {20, 50, …, 170, 190}, test {30, 60, …, 180}.
    pub fn linear_reference() -> Self {
        let mut spec = Self::interleaved(200.0);
        spec.train.retain(|l| *l != 190.0);
        spec.train.push(200.0);
        spec.val.retain(|l| *l != 200.0);
        spec.val.push(190.0);
        spec
    }

    /// Nonlinear case: train {10, 40, …, 400}, val {20, 50, …, 380}, test {30, 60, …, 390}.
    pub fn nonlinear_reference() -> Self {
        Self::interleaved(400.0)
    }

    pub fn train(&self) -> &[f64] {
        &self.train
    }

    pub fn val(&self) -> &[f64] {
        &self.val
    }

    pub fn test(&self) -> &[f64] {
        &self.test
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: SampleSet,
    pub val: SampleSet,
    pub test: SampleSet,
}

pub fn split(set: &SampleSet, spec: &SplitSpec) -> Result<Split> {
    let codes = set.codes();
    for c in spec.train.iter().chain(&spec.val).chain(&spec.test) {
        if !codes.iter().any(|x| same_load(*x, *c)) {
            return Err(Error::invalid("split", format!("load {c} is not present in the set")));
        }
    }
    Ok(Split {
        train: set.select(&spec.train),
        val: set.select(&spec.val),
        test: set.select(&spec.test),
    })
}

/// `(records with load ≤ boundary, records above it)`.
pub fn partition_at(set: &SampleSet, boundary: f64) -> (SampleSet, SampleSet) {
    let (inside, outside): (Vec<Record>, Vec<Record>) =
        set.records.iter().partition(|r| r.load <= boundary + 1e-9);
    (
        SampleSet {
            records: inside,
            ..set.clone()
        },
        SampleSet {
            records: outside,
            ..set.clone()
        },
    )
}

/// Random-field Monte Carlo on the linear cantilever.
pub fn generate_linear(
    truth: &FieldSpec,
    geometry: &BeamGeometry,
    loads: &[f64],
    n_per_load: usize,
    seed: u64,
) -> Result<SampleSet> {
    geometry.validate()?;
    if loads.is_empty() || n_per_load == 0 {
        return Err(Error::invalid("generation", "need at least one load and one draw"));
    }
    let field = decompose(truth, geometry.n_elements)?;
    let jobs: Vec<(f64, usize)> = loads
        .iter()
        .flat_map(|&l| (0..n_per_load).map(move |i| (l, i)))
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(load, index)| {
            let record_seed = derive_seed(seed, &[load_key(load), index as u64]);
            let germ = GermSample::draw(field.truncation_order(), record_seed);
            let solve = || -> Result<f64> {
                let model = BeamModel::new(*geometry, field.realize(&germ)?)?;
                Ok(solve_linear(&model, &LoadCase::linear(load)?)?.tip())
            };
            solve()
                .map(|tip| Record {
                    load,
                    tip_displacement: tip,
                    seed: record_seed,
                })
                .map_err(|e| e.context(format!("load {load}, draw {index}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut set = SampleSet::new(records, Provenance::LinearMc);
    set.sort();
    Ok(set)
}

/// Softening-cantilever Monte Carlo with one scalar modulus per realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearSpec {
    pub e_mean: f64,
    pub e_std: f64,
    pub alpha: f64,
    pub floor: f64,
    pub total_load: f64,
    pub n_steps: usize,
    pub n_realizations: usize,
}

impl NonlinearSpec {
    pub fn reference() -> Self {
        NonlinearSpec {
            e_mean: 2e9,
            e_std: 0.1 * 2e9,
            alpha: crate::beam::DEFAULT_SOFTENING_ALPHA,
            floor: crate::beam::DEFAULT_SOFTENING_FLOOR,
            total_load: 400.0,
            n_steps: 40,
            n_realizations: 500,
        }
    }
}

/// Fraction of discarded (non-converged) realizations that aborts generation.
pub const MAX_DISCARD_RATE: f64 = 0.01;

/// Every realization contributes one sample to each of the `n_steps` cumulative loads.
pub fn generate_nonlinear(spec: &NonlinearSpec, geometry: &BeamGeometry, seed: u64) -> Result<SampleSet> {
    generate_nonlinear_with(spec, geometry, seed, &NewtonSettings::default())
}

pub fn generate_nonlinear_with(
    spec: &NonlinearSpec,
    geometry: &BeamGeometry,
    seed: u64,
    settings: &NewtonSettings,
) -> Result<SampleSet> {
    if spec.n_realizations == 0 {
        return Err(Error::invalid("generation", "need at least one realization"));
    }
    let template = SofteningLaw::new(spec.e_mean, spec.alpha, spec.floor)?;
    let load = LoadCase::new(spec.total_load, spec.n_steps)?;
    let shape = BeamModel::uniform(*geometry, spec.e_mean)?;
    let max_discards = (MAX_DISCARD_RATE * spec.n_realizations as f64).floor() as usize;

    let outcomes = (0..spec.n_realizations)
        .into_par_iter()
        .map(|r| {
            let mut discarded = 0;
            loop {
                let record_seed = derive_seed(seed, &[r as u64, discarded as u64]);
                let mut rng = rng_from(record_seed);
                let z: f64 = rng.sample(StandardNormal);
                let e = (spec.e_mean + spec.e_std * z).max(CLAMP_FRACTION * spec.e_mean);
                let law = template.with_e0(e)?;
                match solve_nonlinear(&shape, &law, &load, settings) {
                    Ok(path) => return Ok((path, record_seed, discarded)),
                    Err(Error::NewtonDiverged { .. }) if discarded < max_discards => discarded += 1,
                    Err(e) => return Err(e.context(format!("realization {r}"))),
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let discards: usize = outcomes.iter().map(|o| o.2).sum();
    if discards > max_discards {
        return Err(Error::invalid(
            "generation",
            format!("{discards} of {} realizations failed to converge", spec.n_realizations),
        ));
    }
    if discards > 0 {
        log::warn!("discarded {discards} non-converged realizations");
    }
    let records = outcomes
        .into_iter()
        .flat_map(|(path, s, _)| {
            path.loads
                .into_iter()
                .zip(path.tips)
                .map(move |(load, tip)| Record {
                    load: round_load(load),
                    tip_displacement: tip,
                    seed: s,
                })
        })
        .collect();
    let mut set = SampleSet::new(records, Provenance::NonlinearMc);
    set.sort();
    Ok(set)
}

/// Cumulative step loads like 0.1·k·400 pick up rounding noise; snap to 1e-9.
fn round_load(load: f64) -> f64 {
    (load * 1e9).round() / 1e9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Sidecar {
    provenance: Provenance,
    scaling: Option<ScalingSpec>,
    n_records: usize,
    loads: Vec<f64>,
    summary: Vec<LoadSummary>,
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

impl SampleSet {
    /// Writes `load,tip_displacement,seed` CSV plus a JSON sidecar next to it.
    pub fn write(&self, csv_path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(csv_path)?;
        for r in &self.records {
            writer.serialize(r)?;
        }
        writer.flush().map_err(|e| Error::io(csv_path, e))?;
        let sidecar = Sidecar {
            provenance: self.provenance,
            scaling: self.scaling,
            n_records: self.records.len(),
            loads: self.codes(),
            summary: self.summary(),
        };
        write_json(&sidecar_path(csv_path), &sidecar)
    }

    pub fn read(csv_path: &Path) -> Result<SampleSet> {
        let sidecar: Sidecar = read_json(&sidecar_path(csv_path))?;
        let mut reader = csv::Reader::from_path(csv_path)?;
        let records = reader.deserialize().collect::<std::result::Result<Vec<Record>, _>>()?;
        if records.len() != sidecar.n_records {
            return Err(Error::invalid(
                "dataset file",
                format!("{} records but sidecar declares {}", records.len(), sidecar.n_records),
            ));
        }
        Ok(SampleSet {
            records,
            provenance: sidecar.provenance,
            scaling: sidecar.scaling,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_set() -> SampleSet {
        let records = load_range(10.0, 200.0, 10.0)
            .into_iter()
            .flat_map(|l| {
                (0..5).map(move |i| Record {
                    load: l,
                    tip_displacement: l * 1e-4 + i as f64 * 1e-6,
                    seed: i,
                })
            })
            .collect();
        SampleSet::new(records, Provenance::LinearMc)
    }

    #[test]
    fn reference_splits() {
        let lin = SplitSpec::linear_reference();
        assert_eq!(lin.train(), &[10.0, 40.0, 70.0, 100.0, 130.0, 160.0, 200.0][..]);
        assert_eq!(lin.val(), &[20.0, 50.0, 80.0, 110.0, 140.0, 170.0, 190.0][..]);
        assert_eq!(lin.test(), &[30.0, 60.0, 90.0, 120.0, 150.0, 180.0][..]);
        let non = SplitSpec::nonlinear_reference();
        assert_eq!(non.train().first(), Some(&10.0));
        assert_eq!(non.train().last(), Some(&400.0));
        assert_eq!(non.val().last(), Some(&380.0));
        assert_eq!(non.test().last(), Some(&390.0));
        assert_eq!(non.train().len() + non.val().len() + non.test().len(), 40);
    }

    #[test]
    fn overlapping_split_is_rejected() {
        assert!(SplitSpec::new(vec![10.0, 20.0], vec![20.0], vec![30.0]).is_err());
    }

    #[test]
    fn split_partitions_records() {
        let set = toy_set();
        let s = split(&set, &SplitSpec::linear_reference()).unwrap();
        assert_eq!(s.train.len() + s.val.len() + s.test.len(), set.len());
        assert_eq!(s.test.codes(), SplitSpec::linear_reference().test().to_vec());
        let bad = SplitSpec::new(vec![15.0], vec![], vec![]).unwrap();
        assert!(split(&set, &bad).is_err());
    }

    #[test]
    fn extrapolation_partition() {
        let records = load_range(10.0, 400.0, 10.0)
            .into_iter()
            .map(|l| Record {
                load: l,
                tip_displacement: l,
                seed: 0,
            })
            .collect();
        let set = SampleSet::new(records, Provenance::NonlinearMc);
        let (fit, held) = partition_at(&set, 310.0);
        assert_eq!(fit.codes(), load_range(10.0, 310.0, 10.0));
        assert_eq!(held.codes(), load_range(320.0, 400.0, 10.0));
    }

    #[test]
    fn scaling_maps_endpoints_and_extends_linearly() {
        let c = ColumnScaling::new(0.0, 10.0, UNIT_INTERVAL, "x").unwrap();
        assert_eq!(c.apply(5.0), 0.0);
        let c = ColumnScaling::new(10.0, 310.0, EXTRAPOLATION_INTERVAL, "load").unwrap();
        assert_eq!(c.apply(310.0), 0.8);
        assert_eq!(c.apply(10.0), -0.8);
        assert!(c.apply(400.0) > 0.8);
        assert!(matches!(
            ColumnScaling::new(1.0, 1.0, UNIT_INTERVAL, "x"),
            Err(Error::DegenerateColumn("x"))
        ));
    }

    #[test]
    fn fit_uses_training_columns() {
        let set = toy_set();
        let spec = fit_scaling(&set, UNIT_INTERVAL).unwrap();
        assert_eq!(spec.load.min, 10.0);
        assert_eq!(spec.load.max, 200.0);
        let scaled = set.scaled(&spec).unwrap();
        assert!(scaled.records.iter().all(|r| r.load >= -1.0 && r.load <= 1.0));
        let back = scaled.unscaled();
        for (a, b) in back.records.iter().zip(&set.records) {
            assert!((a.tip_displacement - b.tip_displacement).abs() < 1e-15);
        }
        assert!(fit_scaling(&scaled, UNIT_INTERVAL).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("set.csv");
        let set = toy_set();
        set.write(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("load,tip_displacement,seed\n"));
        assert_eq!(SampleSet::read(&path).unwrap(), set);
    }
}
