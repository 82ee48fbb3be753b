//! Softening-material cantilever solved by load-stepped Newton-Raphson.
//!
//! The section law is stated in terms of the extreme-fibre strain `ε = (h/2)·κ`:
//! the tangent modulus is `E_t(ε) = e0 · max(floor, 1 − alpha·|ε|)` and the
//! bending moment is `M(κ) = I ∫₀^κ E_t((h/2)·k) dk`. Element internal forces and
//! tangents are integrated with two Gauss points, which is exact for the linear
//! (`alpha = 0`) case.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{cholesky_solve, global_dof, load_vector, BeamGeometry, BeamModel, LoadCase};
use crate::error::{Error, Result};

/// Softening coefficient giving a tip deflection about twice the linear value at
/// q = 400 on the reference cantilever with e0 = 2e9.
pub const DEFAULT_SOFTENING_ALPHA: f64 = 640.0;
pub const DEFAULT_SOFTENING_FLOOR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SofteningLaw {
    pub e0: f64,
    pub alpha: f64,
    pub floor: f64,
}

impl SofteningLaw {
    pub fn new(e0: f64, alpha: f64, floor: f64) -> Result<Self> {
        if !(e0 > 0.0 && e0.is_finite()) {
            return Err(Error::invalid("softening law", format!("e0 must be positive, got {e0}")));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(
                "softening law",
                format!("alpha must be non-negative, got {alpha}"),
            ));
        }
        if !(floor > 0.0 && floor <= 1.0) {
            return Err(Error::invalid(
                "softening law",
                format!("floor must lie in (0, 1], got {floor}"),
            ));
        }
        Ok(SofteningLaw { e0, alpha, floor })
    }

    pub fn default_for(e0: f64) -> Result<Self> {
        Self::new(e0, DEFAULT_SOFTENING_ALPHA, DEFAULT_SOFTENING_FLOOR)
    }

    pub fn with_e0(self, e0: f64) -> Result<Self> {
        Self::new(e0, self.alpha, self.floor)
    }

    pub fn tangent_modulus(&self, strain: f64) -> f64 {
        self.e0 * (1.0 - self.alpha * strain.abs()).max(self.floor)
    }

    /// `∫₀^ε E_t(s) ds`, the uniaxial stress reached at strain `ε`.
    pub fn stress(&self, strain: f64) -> f64 {
        let a = strain.abs();
        let sigma = if self.alpha == 0.0 {
            self.e0 * a
        } else {
            let knee = (1.0 - self.floor) / self.alpha;
            if a <= knee {
                self.e0 * (a - 0.5 * self.alpha * a * a)
            } else {
                self.e0 * (knee - 0.5 * self.alpha * knee * knee + self.floor * (a - knee))
            }
        };
        sigma.copysign(strain)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonSettings {
    pub rtol: f64,
    pub max_iters: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings {
            rtol: 1e-8,
            max_iters: 50,
        }
    }
}

/// Converged state after every load increment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearPath {
    /// Cumulative distributed load at each step.
    pub loads: Vec<f64>,
    pub tips: Vec<f64>,
    /// `‖R‖ / ‖F_step‖` at acceptance.
    pub residual_ratios: Vec<f64>,
    pub iterations: Vec<usize>,
}

const GAUSS: [(f64, f64); 2] = [
    (-0.577_350_269_189_625_8, 1.0),
    (0.577_350_269_189_625_8, 1.0),
];

/// Curvature interpolation row `κ = B·u_e` at local coordinate `s ∈ [0, 1]`.
fn curvature_row(s: f64, le: f64) -> [f64; 4] {
    let l2 = le * le;
    [
        (-6.0 + 12.0 * s) / l2,
        (-4.0 + 6.0 * s) / le,
        (6.0 - 12.0 * s) / l2,
        (-2.0 + 6.0 * s) / le,
    ]
}

fn element_dofs(u: &DVector<f64>, k: usize) -> [f64; 4] {
    let mut ue = [0.0; 4];
    for (a, v) in ue.iter_mut().enumerate() {
        if let Some(g) = global_dof(k, a) {
            *v = u[g];
        }
    }
    ue
}

/// Internal force vector and consistent tangent at displacement `u`.
fn internal_state(
    geometry: &BeamGeometry,
    law: &SofteningLaw,
    u: &DVector<f64>,
) -> (DVector<f64>, DMatrix<f64>) {
    let n = geometry.n_free_dofs();
    let le = geometry.element_length();
    let inertia = geometry.second_moment();
    let fibre = geometry.height / 2.0;
    let mut f_int = DVector::zeros(n);
    let mut k_t = DMatrix::zeros(n, n);
    for k in 0..geometry.n_elements {
        let ue = element_dofs(u, k);
        let mut fe = [0.0; 4];
        let mut ke = [[0.0; 4]; 4];
        for (xi, w) in GAUSS {
            let s = 0.5 * (1.0 + xi);
            let b = curvature_row(s, le);
            let kappa: f64 = b.iter().zip(&ue).map(|(bi, ui)| bi * ui).sum();
            let strain = fibre * kappa;
            // M = I·σ(ε)/c, dM/dκ = I·E_t(ε)
            let moment = inertia * law.stress(strain) / fibre;
            let stiffness = inertia * law.tangent_modulus(strain);
            let jw = w * le / 2.0;
            for a in 0..4 {
                fe[a] += jw * b[a] * moment;
                for c in 0..4 {
                    ke[a][c] += jw * stiffness * b[a] * b[c];
                }
            }
        }
        for a in 0..4 {
            let Some(ga) = global_dof(k, a) else { continue };
            f_int[ga] += fe[a];
            for c in 0..4 {
                if let Some(gc) = global_dof(k, c) {
                    k_t[(ga, gc)] += ke[a][c];
                }
            }
        }
    }
    (f_int, k_t)
}

/// Applies `load.distributed_load` in `load.n_load_steps` equal increments.
///
/// The material is taken entirely from `law`; only the geometry and mesh of `model` are used.
pub fn solve_nonlinear(
    model: &BeamModel,
    law: &SofteningLaw,
    load: &LoadCase,
    settings: &NewtonSettings,
) -> Result<NonlinearPath> {
    let geometry = model.geometry();
    let steps = load.n_load_steps;
    let unit = load_vector(geometry, 1.0);
    let mut u = DVector::zeros(geometry.n_free_dofs());
    let mut path = NonlinearPath {
        loads: Vec::with_capacity(steps),
        tips: Vec::with_capacity(steps),
        residual_ratios: Vec::with_capacity(steps),
        iterations: Vec::with_capacity(steps),
    };
    for step in 1..=steps {
        let q = load.distributed_load * step as f64 / steps as f64;
        let f_ext = &unit * q;
        let f_norm = f_ext.norm();
        let mut iterations = 0;
        let ratio = loop {
            let (f_int, k_t) = internal_state(geometry, law, &u);
            let residual = &f_ext - f_int;
            let r_norm = residual.norm();
            if r_norm <= settings.rtol * f_norm {
                break if f_norm > 0.0 { r_norm / f_norm } else { 0.0 };
            }
            if iterations == settings.max_iters || !r_norm.is_finite() {
                return Err(Error::NewtonDiverged {
                    step,
                    iterations,
                    residual: r_norm / f_norm,
                });
            }
            let du = cholesky_solve(k_t, &residual).map_err(|e| e.context(format!("load step {step}")))?;
            u += du;
            iterations += 1;
        };
        path.loads.push(q);
        path.tips.push(u[geometry.tip_dof()]);
        path.residual_ratios.push(ratio);
        path.iterations.push(iterations);
    }
    Ok(path)
}
