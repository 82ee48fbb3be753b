//! Gaussian kernel density estimates, grid KL divergence and the ε/α mirror criteria.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::ColumnScaling;
use crate::error::{Error, Result};

pub const DEFAULT_BANDWIDTH: f64 = 0.1;
pub const DEFAULT_GRID_POINTS: usize = 512;
/// Grid padding in bandwidths; wide enough that the kernel mass cut off at the grid ends
/// (below 3e-12) cannot push a divergence estimate negative.
pub const DEFAULT_PADDING: f64 = 7.0;
pub const MIN_KDE_SAMPLES: usize = 10;
/// Kernel contributions beyond this many bandwidths are below 1e-15 of the peak and skipped.
const KERNEL_CUTOFF: f64 = 8.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KlDirection {
    /// `D(data ‖ model)`.
    DataModel,
    /// `D(model ‖ data)`.
    ModelData,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaPooling {
    /// Fraction of all observations, pooled over codes.
    Pooled,
    /// Mean of the per-code fractions.
    PerCodeMean,
}

/// Settings shared by every comparison in one report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub bandwidth: f64,
    pub grid_points: usize,
    pub padding_bandwidths: f64,
    pub q_floor: f64,
    pub direction: KlDirection,
    pub pooling: AlphaPooling,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            bandwidth: DEFAULT_BANDWIDTH,
            grid_points: DEFAULT_GRID_POINTS,
            padding_bandwidths: DEFAULT_PADDING,
            q_floor: 1e-12,
            direction: KlDirection::DataModel,
            pooling: AlphaPooling::Pooled,
        }
    }
}

/// Gaussian KDE tabulated on its own uniform grid, normalized so that the
/// trapezoidal integral over that grid is exactly one.
#[derive(Debug, Clone, PartialEq)]
pub struct Kde {
    samples: Vec<f64>,
    bandwidth: f64,
    grid: Vec<f64>,
    density: Vec<f64>,
    normalizer: f64,
}

fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let dx = (grid[n - 1] - grid[0]) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == 0 || i == n - 1 { dx / 2.0 } else { dx })
        .collect()
}

pub fn kde_fit(samples: &[f64], bandwidth: f64) -> Result<Kde> {
    Kde::fit(samples, bandwidth, DEFAULT_GRID_POINTS, DEFAULT_PADDING)
}

impl Kde {
    pub fn fit(samples: &[f64], bandwidth: f64, grid_points: usize, padding: f64) -> Result<Kde> {
        if samples.len() < MIN_KDE_SAMPLES {
            return Err(Error::InsufficientSamples {
                got: samples.len(),
                need: MIN_KDE_SAMPLES,
            });
        }
        if !(bandwidth > 0.0) || grid_points < 2 {
            return Err(Error::invalid(
                "KDE",
                format!("bandwidth must be positive and grid at least 2 points (got {bandwidth}, {grid_points})"),
            ));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("KDE", "samples must be finite"));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let lo = sorted[0] - padding * bandwidth;
        let hi = sorted[sorted.len() - 1] + padding * bandwidth;
        let step = (hi - lo) / (grid_points - 1) as f64;
        let grid: Vec<f64> = (0..grid_points).map(|i| lo + step * i as f64).collect();
        let mut kde = Kde {
            samples: sorted,
            bandwidth,
            grid,
            density: Vec::new(),
            normalizer: 1.0,
        };
        let raw = kde.raw_on_uniform(lo, step, grid_points);
        let mass: f64 = trapezoid_weights(&kde.grid).iter().zip(&raw).map(|(w, r)| w * r).sum();
        kde.normalizer = mass;
        kde.density = raw.into_iter().map(|r| r / mass).collect();
        Ok(kde)
    }

    pub fn fit_with(samples: &[f64], cfg: &MetricConfig) -> Result<Kde> {
        Kde::fit(samples, cfg.bandwidth, cfg.grid_points, cfg.padding_bandwidths)
    }

    fn raw_density(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let lo = self.samples.partition_point(|s| *s < x - KERNEL_CUTOFF * h);
        let hi = self.samples.partition_point(|s| *s <= x + KERNEL_CUTOFF * h);
        let sum: f64 = self.samples[lo..hi]
            .iter()
            .map(|s| {
                let u = (x - s) / h;
                (-0.5 * u * u).exp()
            })
            .sum();
        sum / (self.samples.len() as f64 * h * (2.0 * PI).sqrt())
    }

    pub fn density_at(&self, x: f64) -> f64 {
        self.raw_density(x) / self.normalizer
    }

    /// Density at every point of a uniform grid such as another estimate's.
    pub fn density_on(&self, grid: &[f64]) -> Vec<f64> {
        let n = grid.len();
        if n < 2 {
            return grid.iter().map(|x| self.density_at(*x)).collect();
        }
        let step = (grid[n - 1] - grid[0]) / (n - 1) as f64;
        let mut out = self.raw_on_uniform(grid[0], step, n);
        out.iter_mut().for_each(|d| *d /= self.normalizer);
        out
    }

    /// Unnormalized density on `lo + k·step`, `k < n`.
    ///
    /// Each kernel is accumulated outward from its nearest grid point with the
    /// ratio recurrence `g[k+1] = g[k]·r`, `r ← r·exp(−step²/h²)`, so only two
    /// exponentials are evaluated per sample.
    fn raw_on_uniform(&self, lo: f64, step: f64, n: usize) -> Vec<f64> {
        let h = self.bandwidth;
        let mut out = vec![0.0; n];
        let inv = 1.0 / (2.0 * h * h);
        let decay = (-step * step / (h * h)).exp();
        let reach = KERNEL_CUTOFF * h;
        let last = (n - 1) as f64;
        for &s in &self.samples {
            let k_lo = ((s - reach - lo) / step).ceil().max(0.0);
            let k_hi = ((s + reach - lo) / step).floor().min(last);
            if k_lo > k_hi {
                continue;
            }
            let (k_lo, k_hi) = (k_lo as usize, k_hi as usize);
            let k0 = (((s - lo) / step).round().max(0.0) as usize).clamp(k_lo, k_hi);
            let d0 = lo + step * k0 as f64 - s;
            let g0 = (-d0 * d0 * inv).exp();
            out[k0] += g0;
            let mut g = g0;
            let mut r = (-(2.0 * d0 * step + step * step) * inv).exp();
            for o in &mut out[k0 + 1..=k_hi] {
                g *= r;
                r *= decay;
                *o += g;
            }
            let mut g = g0;
            let mut r = (-(-2.0 * d0 * step + step * step) * inv).exp();
            for o in out[k_lo..k0].iter_mut().rev() {
                g *= r;
                r *= decay;
                *o += g;
            }
        }
        let scale = 1.0 / (self.samples.len() as f64 * h * (2.0 * PI).sqrt());
        out.iter_mut().for_each(|d| *d *= scale);
        out
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn integral(&self) -> f64 {
        trapezoid_weights(&self.grid).iter().zip(&self.density).map(|(w, d)| w * d).sum()
    }

    /// Mean and variance of the tabulated density.
    pub fn moments(&self) -> (f64, f64) {
        let w = trapezoid_weights(&self.grid);
        let mean: f64 = self.grid.iter().zip(&self.density).zip(&w).map(|((x, p), w)| x * p * w).sum();
        let var: f64 = self
            .grid
            .iter()
            .zip(&self.density)
            .zip(&w)
            .map(|((x, p), w)| (x - mean).powi(2) * p * w)
            .sum();
        (mean, var)
    }
}

/// `Σ p(x) ln(p(x)/q(x)) Δx` over the grid of `p`, with `q` re-evaluated there and floored.
pub fn kl_divergence(p: &Kde, q: &Kde) -> Result<f64> {
    kl_divergence_floored(p, q, MetricConfig::default().q_floor)
}

pub fn kl_divergence_floored(p: &Kde, q: &Kde, q_floor: f64) -> Result<f64> {
    let weights = trapezoid_weights(&p.grid);
    let q_values = q.density_on(&p.grid);
    let mut d = 0.0;
    for ((pi, qi), w) in p.density.iter().zip(&q_values).zip(&weights) {
        if *pi <= 0.0 {
            continue;
        }
        let qi = qi.max(q_floor);
        d += w * pi * (pi / qi).ln();
    }
    if !d.is_finite() || d < -1e-9 {
        return Err(Error::Internal(format!("KL divergence evaluated to {d}")));
    }
    Ok(d.max(0.0))
}

/// Samples observed or generated at one load code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeSamples {
    pub load: f64,
    pub values: Vec<f64>,
}

impl CodeSamples {
    pub fn new(load: f64, values: Vec<f64>) -> Self {
        CodeSamples { load, values }
    }

    pub fn mapped(&self, f: impl Fn(f64) -> f64) -> CodeSamples {
        CodeSamples {
            load: self.load,
            values: self.values.iter().map(|v| f(*v)).collect(),
        }
    }
}

fn same_code(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn aligned<'a>(
    model: &'a [CodeSamples],
    data: &'a [CodeSamples],
) -> Result<Vec<(&'a CodeSamples, &'a CodeSamples)>> {
    if data.is_empty() {
        return Err(Error::invalid("mirror evaluation", "empty code set"));
    }
    data.iter()
        .map(|d| {
            model
                .iter()
                .find(|m| same_code(m.load, d.load))
                .map(|m| (m, d))
                .ok_or_else(|| {
                    Error::invalid("mirror evaluation", format!("no model samples for load {}", d.load))
                })
        })
        .collect()
}

/// KL between one code's data and model samples under `cfg`.
pub fn code_divergence(model: &[f64], data: &[f64], cfg: &MetricConfig) -> Result<f64> {
    let m = Kde::fit_with(model, cfg)?;
    let d = Kde::fit_with(data, cfg)?;
    match cfg.direction {
        KlDirection::DataModel => kl_divergence_floored(&d, &m, cfg.q_floor),
        KlDirection::ModelData => kl_divergence_floored(&m, &d, cfg.q_floor),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeKl {
    pub load: f64,
    pub kl: f64,
}

/// Per-code divergences, in the order of `data`. Inputs must already be in scaled units.
pub fn per_code_kl(model: &[CodeSamples], data: &[CodeSamples], cfg: &MetricConfig) -> Result<Vec<CodeKl>> {
    aligned(model, data)?
        .into_iter()
        .map(|(m, d)| {
            code_divergence(&m.values, &d.values, cfg)
                .map(|kl| CodeKl { load: d.load, kl })
                .map_err(|e| e.context(format!("load {}", d.load)))
        })
        .collect()
}

/// `(ε, ε ≤ tolerance)` with ε the largest per-code divergence.
pub fn epsilon_mirror(
    model: &[CodeSamples],
    data: &[CodeSamples],
    tolerance: f64,
    cfg: &MetricConfig,
) -> Result<(f64, bool)> {
    let kls = per_code_kl(model, data, cfg)?;
    let eps = kls.iter().map(|c| c.kl).fold(0.0, f64::max);
    Ok((eps, eps <= tolerance))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaPoint {
    pub alpha: f64,
    pub probability: f64,
}

/// α from 0 to 5 in steps of 0.1.
pub fn default_alphas() -> Vec<f64> {
    (0..=50).map(|i| i as f64 / 10.0).collect()
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Probability that an observation falls within `mean ± α·std` of the model samples at its code.
pub fn alpha_curve(
    model: &[CodeSamples],
    data: &[CodeSamples],
    alphas: &[f64],
    pooling: AlphaPooling,
) -> Result<Vec<AlphaPoint>> {
    let pairs = aligned(model, data)?;
    let mut per_code = Vec::with_capacity(pairs.len());
    for (m, d) in &pairs {
        if m.values.is_empty() {
            return Err(Error::invalid("alpha curve", format!("no model samples at load {}", m.load)));
        }
        let (mean, std) = mean_std(&m.values);
        // Sorted standardized distances make every α a binary search.
        let mut dist: Vec<f64> = d.values.iter().map(|r| (r - mean).abs()).collect();
        dist.sort_by(f64::total_cmp);
        per_code.push((std, dist));
    }
    let total: usize = per_code.iter().map(|(_, d)| d.len()).sum();
    if total == 0 {
        return Err(Error::invalid("alpha curve", "no observations"));
    }
    Ok(alphas
        .iter()
        .map(|&alpha| {
            let counts = per_code.iter().map(|(std, dist)| {
                let half_width = alpha * std;
                (dist.partition_point(|x| *x <= half_width), dist.len())
            });
            let probability = match pooling {
                AlphaPooling::Pooled => counts.map(|(c, _)| c).sum::<usize>() as f64 / total as f64,
                AlphaPooling::PerCodeMean => {
                    let fr: Vec<f64> = counts
                        .filter(|(_, n)| *n > 0)
                        .map(|(c, n)| c as f64 / n as f64)
                        .collect();
                    fr.iter().sum::<f64>() / fr.len() as f64
                }
            };
            AlphaPoint { alpha, probability }
        })
        .collect())
}

/// ε- and α-mirror assessment of one model in one context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MirrorReport {
    pub model_id: String,
    pub codes: Vec<f64>,
    pub direction: KlDirection,
    pub kl_per_code: Vec<CodeKl>,
    pub average_kl: f64,
    pub epsilon: f64,
    pub tolerance: f64,
    pub pass_epsilon: bool,
    pub alpha_curve: Vec<AlphaPoint>,
    pub metric: MetricConfig,
}

impl MirrorReport {
    /// Scores model samples against data, both in physical units; `scaling` maps them
    /// to the units in which the KDE bandwidth is defined.
    pub fn evaluate(
        model_id: impl Into<String>,
        model: &[CodeSamples],
        data: &[CodeSamples],
        scaling: &ColumnScaling,
        tolerance: f64,
        cfg: &MetricConfig,
    ) -> Result<MirrorReport> {
        let scaled_model: Vec<CodeSamples> = model.iter().map(|c| c.mapped(|v| scaling.apply(v))).collect();
        let scaled_data: Vec<CodeSamples> = data.iter().map(|c| c.mapped(|v| scaling.apply(v))).collect();
        let kl_per_code = per_code_kl(&scaled_model, &scaled_data, cfg)?;
        let epsilon = kl_per_code.iter().map(|c| c.kl).fold(0.0, f64::max);
        let average_kl = kl_per_code.iter().map(|c| c.kl).sum::<f64>() / kl_per_code.len() as f64;
        let alpha_curve = alpha_curve(model, data, &default_alphas(), cfg.pooling)?;
        Ok(MirrorReport {
            model_id: model_id.into(),
            codes: data.iter().map(|c| c.load).collect(),
            direction: cfg.direction,
            kl_per_code,
            average_kl,
            epsilon,
            tolerance,
            pass_epsilon: epsilon <= tolerance,
            alpha_curve,
            metric: *cfg,
        })
    }

    pub fn probability_at(&self, alpha: f64) -> Option<f64> {
        self.alpha_curve
            .iter()
            .find(|p| (p.alpha - alpha).abs() < 1e-9)
            .map(|p| p.probability)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn read_json(path: &Path) -> Result<MirrorReport> {
        read_json(path)
    }
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// `(x, p_data, p_model)` on the data KDE grid, in scaled units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub load: f64,
    pub x: Vec<f64>,
    pub p_data: Vec<f64>,
    pub p_model: Vec<f64>,
}

pub fn density_curves(
    model: &[CodeSamples],
    data: &[CodeSamples],
    scaling: &ColumnScaling,
    cfg: &MetricConfig,
) -> Result<Vec<DensityCurve>> {
    aligned(model, data)?
        .into_iter()
        .map(|(m, d)| {
            let dm = Kde::fit_with(&m.mapped(|v| scaling.apply(v)).values, cfg)?;
            let dd = Kde::fit_with(&d.mapped(|v| scaling.apply(v)).values, cfg)?;
            Ok(DensityCurve {
                load: d.load,
                x: dd.grid().to_vec(),
                p_data: dd.density().to_vec(),
                p_model: dd.grid().iter().map(|x| dm.density_at(*x)).collect(),
            })
        })
        .collect()
}

pub fn write_density_csv(path: &Path, curves: &[DensityCurve]) -> Result<()> {
    let mut out = String::from("load,x,p_data,p_model\n");
    for c in curves {
        for ((x, p), q) in c.x.iter().zip(&c.p_data).zip(&c.p_model) {
            out.push_str(&format!("{},{},{},{}\n", c.load, x, p, q));
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_alpha_csv(path: &Path, curve: &[AlphaPoint]) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = String::from("alpha,probability\n");
    for p in curve {
        out.push_str(&format!("{},{}\n", p.alpha, p.probability));
    }
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// A mirror paired with the model of its uncontrolled inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Virtualisation {
    pub mirror_model: String,
    /// For the adversarial models the input field is implicit in the latent noise.
    pub field_model: String,
    pub context: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;
    use rand_distr::StandardNormal;

    fn normals(n: usize, mean: f64, std: f64, seed: u64) -> Vec<f64> {
        let mut rng = crate::rng::rng_from(seed);
        (0..n)
            .map(|_| mean + std * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    #[test]
    fn grid_recurrence_matches_direct_evaluation() {
        let q = kde_fit(&normals(3000, 0.2, 0.4, 11), 0.1).unwrap();
        let p = kde_fit(&normals(500, -0.3, 0.2, 12), 0.1).unwrap();
        for (x, fast) in p.grid().iter().zip(q.density_on(p.grid())) {
            let direct = q.density_at(*x);
            assert!((fast - direct).abs() <= 1e-12 * direct.max(1e-300) + 1e-300, "{x}: {fast} vs {direct}");
        }
        for (x, d) in q.grid().iter().zip(q.density()) {
            assert!((d - q.density_at(*x)).abs() <= 1e-12 * d);
        }
    }

    #[test]
    fn point_mass_is_smoothed_around_its_location() {
        let kde = kde_fit(&[0.3; 50], 0.1).unwrap();
        let peak = kde
            .grid()
            .iter()
            .zip(kde.density())
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        let spacing = kde.grid()[1] - kde.grid()[0];
        assert!((peak - 0.3).abs() <= spacing);
        let (mean, _) = kde.moments();
        assert!((mean - 0.3).abs() <= spacing);
        assert!((kde.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn variance_is_inflated_by_the_bandwidth() {
        let kde = kde_fit(&normals(100_000, 0.0, 1.0, 1), 0.1).unwrap();
        let (_, var) = kde.moments();
        assert!((var - 1.01).abs() / 1.01 < 0.02, "{var}");
        assert!(kde.density().iter().all(|d| *d >= 0.0));
        assert_eq!(kde.density().len(), 512);
    }

    #[test]
    fn too_few_samples_are_rejected() {
        assert!(matches!(
            kde_fit(&[1.0; 9], 0.1),
            Err(Error::InsufficientSamples { got: 9, need: 10 })
        ));
    }

    #[test]
    fn identical_inputs_have_zero_divergence() {
        let s = normals(500, 0.0, 0.2, 2);
        let p = kde_fit(&s, 0.1).unwrap();
        let q = kde_fit(&s, 0.1).unwrap();
        assert!(kl_divergence(&p, &q).unwrap().abs() < 1e-9);
    }

    #[test]
    fn shifted_gaussians_match_the_closed_form() {
        let p = kde_fit(&normals(20_000, 0.0, 0.1, 3), 0.1).unwrap();
        let q = kde_fit(&normals(20_000, 0.2, 0.1, 4), 0.1).unwrap();
        let expected = 0.2f64.powi(2) / (2.0 * (0.01 + 0.01));
        let d = kl_divergence(&p, &q).unwrap();
        assert!((d - expected).abs() / expected < 0.1, "{d} vs {expected}");
    }

    #[test]
    fn divergence_is_asymmetric() {
        let p = kde_fit(&normals(5000, 0.0, 0.1, 5), 0.1).unwrap();
        let q = kde_fit(&normals(5000, 0.2, 0.3, 6), 0.1).unwrap();
        let a = kl_divergence(&p, &q).unwrap();
        let b = kl_divergence(&q, &p).unwrap();
        assert!((a - b).abs() > 0.05, "{a} {b}");
    }

    #[test]
    fn disjoint_supports_stay_finite() {
        let p = kde_fit(&normals(200, -0.9, 0.01, 7), 0.1).unwrap();
        let q = kde_fit(&normals(200, 0.9, 0.01, 8), 0.1).unwrap();
        let d = kl_divergence(&p, &q).unwrap();
        assert!(d.is_finite() && d > 10.0);
    }

    #[test]
    fn self_comparison_is_an_epsilon_mirror() {
        let data = vec![
            CodeSamples::new(10.0, normals(300, 0.1, 0.05, 9)),
            CodeSamples::new(20.0, normals(300, 0.3, 0.1, 10)),
        ];
        let (eps, pass) = epsilon_mirror(&data, &data, 1e-6, &MetricConfig::default()).unwrap();
        assert!(eps < 1e-9 && pass);
        assert!(epsilon_mirror(&data, &[], 0.1, &MetricConfig::default()).is_err());
    }

    #[test]
    fn gaussian_coverage() {
        let model = vec![
            CodeSamples::new(1.0, normals(20_000, 1.0, 0.2, 11)),
            CodeSamples::new(2.0, normals(20_000, 2.0, 0.4, 12)),
        ];
        let data = vec![
            CodeSamples::new(1.0, normals(20_000, 1.0, 0.2, 13)),
            CodeSamples::new(2.0, normals(20_000, 2.0, 0.4, 14)),
        ];
        let curve = alpha_curve(&model, &data, &[0.0, 1.0, 2.0, 50.0], AlphaPooling::Pooled).unwrap();
        assert!(curve[0].probability < 1e-3);
        assert!((curve[1].probability - 0.6827).abs() < 0.03);
        assert!((curve[2].probability - 0.9545).abs() < 0.03);
        assert_eq!(curve[3].probability, 1.0);
        let per_code = alpha_curve(&model, &data, &[1.0], AlphaPooling::PerCodeMean).unwrap();
        assert!((per_code[0].probability - 0.6827).abs() < 0.03);
    }

    #[test]
    fn degenerate_model_spread_counts_point_matches() {
        let model = vec![CodeSamples::new(1.0, vec![0.5; 20])];
        let data = vec![CodeSamples::new(1.0, vec![0.5, 0.5, 0.6, 0.7])];
        let curve = alpha_curve(&model, &data, &[0.0, 3.0], AlphaPooling::Pooled).unwrap();
        assert_eq!(curve[0].probability, 0.5);
        assert_eq!(curve[1].probability, 0.5);
    }
}
