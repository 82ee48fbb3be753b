//! Euler-Bernoulli cantilever finite elements.
//!
//! Two-node Hermite cubic elements with a transverse translation and a rotation
//! per node. Node 0 is clamped; its two DOFs are eliminated, so the reduced
//! system has `2 * n_elements` unknowns ordered `(w_1, θ_1, w_2, θ_2, ...)`.

mod nonlinear;

pub use nonlinear::{
    solve_nonlinear, NewtonSettings, NonlinearPath, SofteningLaw, DEFAULT_SOFTENING_ALPHA,
    DEFAULT_SOFTENING_FLOOR,
};

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default mesh resolution.
pub const DEFAULT_ELEMENTS: usize = 20;

/// Cantilever geometry and mesh, without material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamGeometry {
    pub length: f64,
    pub width: f64,
    pub height: f64,
    pub n_elements: usize,
}

impl BeamGeometry {
    /// The reference cantilever: L = 5, b = 0.1, h = 0.4, 20 elements.
    pub const REFERENCE: BeamGeometry = BeamGeometry {
        length: 5.0,
        width: 0.1,
        height: 0.4,
        n_elements: DEFAULT_ELEMENTS,
    };

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.width > 0.0 && self.height > 0.0) {
            return Err(Error::invalid(
                "beam geometry",
                format!(
                    "length, width and height must be positive (got {}, {}, {})",
                    self.length, self.width, self.height
                ),
            ));
        }
        if self.n_elements == 0 {
            return Err(Error::invalid("beam geometry", "n_elements must be at least 1"));
        }
        Ok(())
    }

    pub fn second_moment(&self) -> f64 {
        self.width * self.height.powi(3) / 12.0
    }

    pub fn element_length(&self) -> f64 {
        self.length / self.n_elements as f64
    }

    /// Element midpoints on [0, L].
    pub fn midpoints(&self) -> Vec<f64> {
        let le = self.element_length();
        (0..self.n_elements).map(|k| (k as f64 + 0.5) * le).collect()
    }

    pub fn n_free_dofs(&self) -> usize {
        2 * self.n_elements
    }

    /// Index of the tip translation in the reduced DOF vector.
    pub fn tip_dof(&self) -> usize {
        2 * (self.n_elements - 1)
    }

    pub fn with_elements(self, n_elements: usize) -> Self {
        BeamGeometry { n_elements, ..self }
    }
}

/// A cantilever with piecewise-constant Young's modulus, one value per element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamModel {
    geometry: BeamGeometry,
    youngs_modulus: Vec<f64>,
}

impl BeamModel {
    pub fn new(geometry: BeamGeometry, youngs_modulus: Vec<f64>) -> Result<Self> {
        geometry.validate()?;
        if youngs_modulus.len() != geometry.n_elements {
            return Err(Error::invalid(
                "beam model",
                format!(
                    "{} moduli for {} elements",
                    youngs_modulus.len(),
                    geometry.n_elements
                ),
            ));
        }
        if let Some(bad) = youngs_modulus.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(Error::invalid(
                "beam model",
                format!("Young's modulus must be positive and finite, got {bad}"),
            ));
        }
        Ok(BeamModel {
            geometry,
            youngs_modulus,
        })
    }

    pub fn uniform(geometry: BeamGeometry, modulus: f64) -> Result<Self> {
        Self::new(geometry, vec![modulus; geometry.n_elements])
    }

    pub fn geometry(&self) -> &BeamGeometry {
        &self.geometry
    }

    pub fn youngs_modulus(&self) -> &[f64] {
        &self.youngs_modulus
    }

    pub fn n_elements(&self) -> usize {
        self.geometry.n_elements
    }

    pub fn second_moment(&self) -> f64 {
        self.geometry.second_moment()
    }
}

/// Uniform distributed load and the number of increments used by nonlinear solves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadCase {
    pub distributed_load: f64,
    pub n_load_steps: usize,
}

impl LoadCase {
    pub fn new(distributed_load: f64, n_load_steps: usize) -> Result<Self> {
        if !(distributed_load >= 0.0 && distributed_load.is_finite()) {
            return Err(Error::invalid(
                "load case",
                format!("distributed load must be finite and non-negative, got {distributed_load}"),
            ));
        }
        if n_load_steps == 0 {
            return Err(Error::invalid("load case", "n_load_steps must be at least 1"));
        }
        Ok(LoadCase {
            distributed_load,
            n_load_steps,
        })
    }

    pub fn linear(distributed_load: f64) -> Result<Self> {
        Self::new(distributed_load, 1)
    }
}

/// Bending stiffness matrix of one element with flexural rigidity `ei` and length `le`,
/// DOF order `(w_a, θ_a, w_b, θ_b)`.
pub fn element_stiffness(ei: f64, le: f64) -> [[f64; 4]; 4] {
    let c = ei / le.powi(3);
    let l = le;
    let l2 = le * le;
    [
        [12.0 * c, 6.0 * l * c, -12.0 * c, 6.0 * l * c],
        [6.0 * l * c, 4.0 * l2 * c, -6.0 * l * c, 2.0 * l2 * c],
        [-12.0 * c, -6.0 * l * c, 12.0 * c, -6.0 * l * c],
        [6.0 * l * c, 2.0 * l2 * c, -6.0 * l * c, 4.0 * l2 * c],
    ]
}

/// Reduced global DOF for local DOF `a` of element `k`; `None` for the clamped node.
#[inline]
pub(crate) fn global_dof(k: usize, a: usize) -> Option<usize> {
    // node k has reduced dofs 2(k-1), 2(k-1)+1
    let node = k + a / 2;
    (node > 0).then(|| 2 * (node - 1) + a % 2)
}

/// Assembles the reduced stiffness matrix for arbitrary per-element moduli.
///
/// The moduli need not be positive; this is how the stochastic expansion builds its
/// fluctuation matrices.
pub fn assemble_with_moduli(geometry: &BeamGeometry, moduli: &[f64]) -> DMatrix<f64> {
    assert_eq!(moduli.len(), geometry.n_elements, "one modulus per element");
    let n = geometry.n_free_dofs();
    let le = geometry.element_length();
    let inertia = geometry.second_moment();
    let mut k_global = DMatrix::zeros(n, n);
    for (k, &e) in moduli.iter().enumerate() {
        let ke = element_stiffness(e * inertia, le);
        for a in 0..4 {
            let Some(ga) = global_dof(k, a) else { continue };
            for b in 0..4 {
                if let Some(gb) = global_dof(k, b) {
                    k_global[(ga, gb)] += ke[a][b];
                }
            }
        }
    }
    k_global
}

pub fn assemble_stiffness(model: &BeamModel) -> DMatrix<f64> {
    assemble_with_moduli(&model.geometry, &model.youngs_modulus)
}

/// Consistent nodal load vector for a uniform distributed load `q`.
pub fn load_vector(geometry: &BeamGeometry, q: f64) -> DVector<f64> {
    let le = geometry.element_length();
    let fe = [q * le / 2.0, q * le * le / 12.0, q * le / 2.0, -q * le * le / 12.0];
    let mut f = DVector::zeros(geometry.n_free_dofs());
    for k in 0..geometry.n_elements {
        for (a, v) in fe.iter().enumerate() {
            if let Some(g) = global_dof(k, a) {
                f[g] += v;
            }
        }
    }
    f
}

/// Nodal displacements over the free DOFs.
#[derive(Debug, Clone, PartialEq)]
pub struct Displacements {
    values: DVector<f64>,
    tip_dof: usize,
}

impl Displacements {
    pub(crate) fn new(values: DVector<f64>, geometry: &BeamGeometry) -> Self {
        Displacements {
            values,
            tip_dof: geometry.tip_dof(),
        }
    }

    pub fn tip(&self) -> f64 {
        self.values[self.tip_dof]
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.values
    }
}

pub(crate) fn cholesky_solve(k: DMatrix<f64>, f: &DVector<f64>) -> Result<DVector<f64>> {
    let chol = Cholesky::new(k).ok_or(Error::NotPositiveDefinite)?;
    let u = chol.solve(f);
    if u.iter().all(|v| v.is_finite()) {
        Ok(u)
    } else {
        Err(Error::NotPositiveDefinite)
    }
}

/// Linear static solve `K U = F`; `load.n_load_steps` is ignored.
pub fn solve_linear(model: &BeamModel, load: &LoadCase) -> Result<Displacements> {
    let k = assemble_stiffness(model);
    let f = load_vector(&model.geometry, load.distributed_load);
    let u = cholesky_solve(k, &f)?;
    Ok(Displacements::new(u, &model.geometry))
}

/// Closed-form Euler-Bernoulli cantilever tip deflection under uniform load.
pub fn closed_form_tip(geometry: &BeamGeometry, modulus: f64, q: f64) -> f64 {
    q * geometry.length.powi(4) / (8.0 * modulus * geometry.second_moment())
}
