//! Stationary Gaussian stiffness field and its truncated Karhunen-Loève expansion.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from;

/// Realizations are clamped below at this fraction of the mean.
pub const CLAMP_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub mean: f64,
    pub std_dev: f64,
    pub correlation_length: f64,
    pub domain_length: f64,
    pub truncation_order: usize,
}

impl FieldSpec {
    pub fn new(
        mean: f64,
        std_dev: f64,
        correlation_length: f64,
        domain_length: f64,
        truncation_order: usize,
    ) -> Result<Self> {
        let spec = FieldSpec {
            mean,
            std_dev,
            correlation_length,
            domain_length,
            truncation_order,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mean.is_finite() || !(self.std_dev >= 0.0 && self.std_dev.is_finite()) {
            return Err(Error::invalid(
                "field spec",
                format!("mean must be finite and std_dev non-negative (got {}, {})", self.mean, self.std_dev),
            ));
        }
        if !(self.correlation_length > 0.0) || !(self.domain_length > 0.0) {
            return Err(Error::invalid(
                "field spec",
                "correlation and domain lengths must be positive",
            ));
        }
        if self.truncation_order == 0 {
            return Err(Error::invalid("field spec", "truncation order must be at least 1"));
        }
        Ok(())
    }
}

/// Squared-exponential covariance `σ² exp(−((x − x′)/l)²)`.
pub fn covariance(spec: &FieldSpec, x: f64, x_prime: f64) -> f64 {
    let r = (x - x_prime) / spec.correlation_length;
    spec.std_dev * spec.std_dev * (-r * r).exp()
}

/// Truncated KL representation tabulated at the midpoints of a uniform mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlField {
    pub spec: FieldSpec,
    pub points: Vec<f64>,
    pub spacing: f64,
    /// Top `m` eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// `eigenfunctions[i][k]` is φ_i at `points[k]`.
    pub eigenfunctions: Vec<Vec<f64>>,
    /// Every eigenvalue of the discretized operator, descending.
    pub spectrum: Vec<f64>,
}

/// Nyström (midpoint rule) discretization of the covariance eigenproblem.
pub fn decompose(spec: &FieldSpec, n_points: usize) -> Result<KlField> {
    spec.validate()?;
    let m = spec.truncation_order;
    if n_points < m {
        return Err(Error::invalid(
            "KL decomposition",
            format!("{n_points} points cannot support truncation order {m}"),
        ));
    }
    let dx = spec.domain_length / n_points as f64;
    let points: Vec<f64> = (0..n_points).map(|k| (k as f64 + 0.5) * dx).collect();
    let a = DMatrix::from_fn(n_points, n_points, |i, j| {
        covariance(spec, points[i], points[j]) * dx
    });
    let eig = SymmetricEigen::try_new(a, f64::EPSILON, 0)
        .ok_or_else(|| Error::Internal("symmetric eigensolver failed".into()))?;

    let mut order: Vec<usize> = (0..n_points).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));

    // Round-off can leave tiny negative eigenvalues of a PSD kernel matrix.
    let spectrum: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let scale = 1.0 / dx.sqrt();
    let eigenfunctions = order[..m]
        .iter()
        .map(|&i| {
            let mut phi: Vec<f64> = eig.eigenvectors.column(i).iter().map(|v| v * scale).collect();
            if orientation(&phi) < 0.0 {
                phi.iter_mut().for_each(|v| *v = -*v);
            }
            phi
        })
        .collect();
    Ok(KlField {
        spec: *spec,
        points,
        spacing: dx,
        eigenvalues: spectrum[..m].to_vec(),
        eigenfunctions,
        spectrum,
    })
}

/// Sign convention: positive mean, or positive first significant entry for odd modes.
fn orientation(phi: &[f64]) -> f64 {
    let sum: f64 = phi.iter().sum();
    let peak = phi.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if sum.abs() > 1e-8 * peak * phi.len() as f64 {
        return sum;
    }
    phi.iter()
        .copied()
        .find(|v| v.abs() > 1e-6 * peak)
        .unwrap_or(1.0)
}

/// Independent standard-normal germ ξ(θ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GermSample {
    pub xi: Vec<f64>,
    pub seed: u64,
}

impl GermSample {
    pub fn draw(dim: usize, seed: u64) -> Self {
        let mut rng = rng_from(seed);
        let xi = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        GermSample { xi, seed }
    }

    pub fn zeros(dim: usize) -> Self {
        GermSample {
            xi: vec![0.0; dim],
            seed: 0,
        }
    }
}

impl KlField {
    pub fn truncation_order(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    /// Truncated field values without the positivity clamp.
    pub fn realize_unclamped(&self, xi: &[f64]) -> Vec<f64> {
        assert_eq!(xi.len(), self.truncation_order(), "germ dimension");
        let mut e = vec![self.spec.mean; self.n_points()];
        for ((lambda, phi), x) in self.eigenvalues.iter().zip(&self.eigenfunctions).zip(xi) {
            let amp = lambda.sqrt() * x;
            for (ek, pk) in e.iter_mut().zip(phi) {
                *ek += amp * pk;
            }
        }
        e
    }

    /// Per-element modulus, clamped below at `CLAMP_FRACTION · mean`.
    pub fn realize(&self, germ: &GermSample) -> Result<Vec<f64>> {
        if germ.xi.len() != self.truncation_order() {
            return Err(Error::invalid(
                "germ",
                format!(
                    "length {} does not match truncation order {}",
                    germ.xi.len(),
                    self.truncation_order()
                ),
            ));
        }
        let floor = CLAMP_FRACTION * self.spec.mean;
        Ok(self
            .realize_unclamped(&germ.xi)
            .into_iter()
            .map(|e| e.max(floor))
            .collect())
    }

    /// Variance of the truncated field at point `k`: Σ λ_i φ_i(x_k)².
    pub fn truncated_variance(&self, k: usize) -> f64 {
        self.eigenvalues
            .iter()
            .zip(&self.eigenfunctions)
            .map(|(l, phi)| l * phi[k] * phi[k])
            .sum()
    }
}
