//! Spectral stochastic Galerkin solve of the cantilever with a KL stiffness field.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::pce::{triple_products, PceBasis, TripleProducts};
use crate::beam::{assemble_with_moduli, load_vector, BeamGeometry, LoadCase};
use crate::error::{Error, Result};
use crate::field::KlField;
use crate::rng::rng_from;

/// Above this many unknowns the block system is solved matrix-free.
pub const DENSE_LIMIT: usize = 4000;

/// `K(θ) = K_0 + Σ ξ_i K_i`.
#[derive(Debug, Clone)]
pub struct StiffnessExpansion {
    pub matrices: Vec<DMatrix<f64>>,
}

pub fn expand_stiffness(geometry: &BeamGeometry, field: &KlField) -> Result<StiffnessExpansion> {
    if field.n_points() != geometry.n_elements {
        return Err(Error::invalid(
            "stiffness expansion",
            format!(
                "field tabulated at {} points but the mesh has {} elements",
                field.n_points(),
                geometry.n_elements
            ),
        ));
    }
    let mean = vec![field.spec.mean; geometry.n_elements];
    let mut matrices = vec![assemble_with_moduli(geometry, &mean)];
    for (lambda, phi) in field.eigenvalues.iter().zip(&field.eigenfunctions) {
        let amp = lambda.sqrt();
        let moduli: Vec<f64> = phi.iter().map(|p| amp * p).collect();
        matrices.push(assemble_with_moduli(geometry, &moduli));
    }
    Ok(StiffnessExpansion { matrices })
}

impl StiffnessExpansion {
    pub fn realize(&self, xi: &[f64]) -> DMatrix<f64> {
        let mut k = self.matrices[0].clone();
        for (ki, x) in self.matrices[1..].iter().zip(xi) {
            k += ki * *x;
        }
        k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum GalerkinSolver {
    /// Dense factorization up to [`DENSE_LIMIT`] unknowns, block PCG beyond.
    #[default]
    Auto,
    Dense,
    BlockPcg,
}

/// Chaos coefficients of the displacement field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcSolution {
    pub geometry: BeamGeometry,
    pub basis: PceBasis,
    /// `coefficients[j]` is `U_j` over the free DOFs.
    pub coefficients: Vec<Vec<f64>>,
    pub load: LoadCase,
    pub field: KlField,
}

fn block_matvec(
    expansion: &StiffnessExpansion,
    triples: &TripleProducts,
    x: &[DVector<f64>],
) -> Vec<DVector<f64>> {
    let p = triples.size;
    let n = x[0].len();
    let mut y = vec![DVector::zeros(n); p];
    // K_i x_k is shared by every row block j.
    for i in 0..expansion.matrices.len() {
        let kx: Vec<DVector<f64>> = x.iter().map(|xk| &expansion.matrices[i] * xk).collect();
        for (j, yj) in y.iter_mut().enumerate() {
            for (k, kxk) in kx.iter().enumerate() {
                let c = triples.get(i, j, k);
                if c != 0.0 {
                    yj.axpy(c, kxk, 1.0);
                }
            }
        }
    }
    y
}

fn dense_system(expansion: &StiffnessExpansion, triples: &TripleProducts) -> DMatrix<f64> {
    let p = triples.size;
    let n = expansion.matrices[0].nrows();
    let mut a = DMatrix::zeros(n * p, n * p);
    for j in 0..p {
        for k in 0..p {
            let mut block = a.view_mut((j * n, k * n), (n, n));
            for (i, c) in triples.block_terms(j, k) {
                block += &expansion.matrices[i] * c;
            }
        }
    }
    a
}

fn solve_dense(expansion: &StiffnessExpansion, triples: &TripleProducts, rhs: DVector<f64>) -> Result<DVector<f64>> {
    let a = dense_system(expansion, triples);
    // A valid stiffness expansion yields a symmetric positive-definite operator.
    let x = Cholesky::new(a).ok_or(Error::GalerkinSingular)?.solve(&rhs);
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::GalerkinSingular)
    }
}

/// Conjugate gradients preconditioned by the mean-stiffness block diagonal.
fn solve_block_pcg(
    expansion: &StiffnessExpansion,
    triples: &TripleProducts,
    rhs: &[DVector<f64>],
) -> Result<Vec<DVector<f64>>> {
    let p = triples.size;
    let k0 = Cholesky::new(expansion.matrices[0].clone()).ok_or(Error::GalerkinSingular)?;
    let precondition = |r: &[DVector<f64>]| -> Vec<DVector<f64>> {
        r.iter()
            .enumerate()
            .map(|(j, rj)| k0.solve(rj) / triples.get(0, j, j))
            .collect()
    };
    let dot = |a: &[DVector<f64>], b: &[DVector<f64>]| -> f64 {
        a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
    };
    let rhs_norm = dot(rhs, rhs).sqrt();
    let mut x: Vec<DVector<f64>> = rhs.iter().map(|r| DVector::zeros(r.len())).collect();
    if rhs_norm == 0.0 {
        return Ok(x);
    }
    let mut r: Vec<DVector<f64>> = rhs.to_vec();
    let mut z = precondition(&r);
    let mut d = z.clone();
    let mut rz = dot(&r, &z);
    let max_iter = 50 * p + 500;
    for _ in 0..max_iter {
        let ad = block_matvec(expansion, triples, &d);
        let dad = dot(&d, &ad);
        if !(dad > 0.0) {
            return Err(Error::GalerkinSingular);
        }
        let step = rz / dad;
        for j in 0..p {
            x[j].axpy(step, &d[j], 1.0);
            r[j].axpy(-step, &ad[j], 1.0);
        }
        if dot(&r, &r).sqrt() <= 1e-14 * rhs_norm {
            return Ok(x);
        }
        z = precondition(&r);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for j in 0..p {
            d[j] = &z[j] + &d[j] * beta;
        }
    }
    Err(Error::GalerkinSingular)
}

pub fn solve_galerkin(
    geometry: &BeamGeometry,
    field: &KlField,
    basis: &PceBasis,
    load: &LoadCase,
) -> Result<PcSolution> {
    solve_galerkin_with(geometry, field, basis, load, GalerkinSolver::Auto)
}

pub fn solve_galerkin_with(
    geometry: &BeamGeometry,
    field: &KlField,
    basis: &PceBasis,
    load: &LoadCase,
    solver: GalerkinSolver,
) -> Result<PcSolution> {
    if basis.germ_dim != field.truncation_order() {
        return Err(Error::invalid(
            "Galerkin solve",
            format!(
                "basis over {} germ variables but field truncated at {}",
                basis.germ_dim,
                field.truncation_order()
            ),
        ));
    }
    let expansion = expand_stiffness(geometry, field)?;
    let triples = triple_products(basis);
    let n = geometry.n_free_dofs();
    let p = basis.size();
    let f = load_vector(geometry, load.distributed_load);

    let use_dense = match solver {
        GalerkinSolver::Auto => n * p <= DENSE_LIMIT,
        GalerkinSolver::Dense => true,
        GalerkinSolver::BlockPcg => false,
    };
    // Deterministic load: only the Ψ_0 block carries F.
    let coefficients: Vec<Vec<f64>> = if use_dense {
        let mut rhs = DVector::zeros(n * p);
        rhs.rows_mut(0, n).copy_from(&f);
        let x = solve_dense(&expansion, &triples, rhs)?;
        (0..p).map(|j| x.rows(j * n, n).iter().copied().collect()).collect()
    } else {
        let mut rhs = vec![DVector::zeros(n); p];
        rhs[0] = f;
        solve_block_pcg(&expansion, &triples, &rhs)?
            .into_iter()
            .map(|v| v.iter().copied().collect())
            .collect()
    };
    Ok(PcSolution {
        geometry: *geometry,
        basis: basis.clone(),
        coefficients,
        load: *load,
        field: field.clone(),
    })
}

impl PcSolution {
    pub fn tip_coefficients(&self) -> Vec<f64> {
        let tip = self.geometry.tip_dof();
        self.coefficients.iter().map(|u| u[tip]).collect()
    }

    pub fn mean_tip(&self) -> f64 {
        self.coefficients[0][self.geometry.tip_dof()]
    }

    /// Tip variance from chaos orthogonality: Σ_{j>0} U_j² E[Ψ_j²].
    pub fn tip_variance(&self) -> f64 {
        self.tip_coefficients()
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, u)| u * u * self.basis.norm_squared(j))
            .sum()
    }

    /// The same solution under a different load intensity (the system is linear in the load).
    pub fn rescaled(&self, distributed_load: f64) -> Result<PcSolution> {
        let load = LoadCase::new(distributed_load, self.load.n_load_steps)?;
        if self.load.distributed_load == 0.0 {
            return Err(Error::invalid("rescale", "cannot rescale a zero-load solution"));
        }
        let factor = distributed_load / self.load.distributed_load;
        Ok(PcSolution {
            coefficients: self
                .coefficients
                .iter()
                .map(|u| u.iter().map(|v| v * factor).collect())
                .collect(),
            load,
            ..self.clone()
        })
    }
}

/// Evaluates `Σ_j t_j Ψ_j(ξ)` for `n_samples` germ draws from a stream seeded with `seed`.
pub fn sample_chaos(basis: &PceBasis, tip_coefficients: &[f64], n_samples: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from(seed);
    let mut xi = vec![0.0; basis.germ_dim];
    let mut psi = vec![0.0; basis.size()];
    (0..n_samples)
        .map(|_| {
            xi.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
            basis.evaluate_into(&xi, &mut psi);
            psi.iter().zip(tip_coefficients).map(|(a, b)| a * b).sum()
        })
        .collect()
}

pub fn sample_tip(solution: &PcSolution, n_samples: usize, seed: u64) -> Vec<f64> {
    sample_chaos(&solution.basis, &solution.tip_coefficients(), n_samples, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::{assemble_stiffness, solve_linear, BeamModel};
    use crate::field::{decompose, FieldSpec, GermSample};

    fn setup(sigma: f64, m: usize) -> (BeamGeometry, KlField) {
        let g = BeamGeometry::REFERENCE;
        let spec = FieldSpec::new(2e9, sigma, 3.0, g.length, m).unwrap();
        (g, decompose(&spec, g.n_elements).unwrap())
    }

    #[test]
    fn expansion_matches_direct_assembly() {
        let (g, field) = setup(0.4e9, 3);
        let exp = expand_stiffness(&g, &field).unwrap();
        assert!(exp.matrices.iter().all(|k| *k == k.transpose()));
        for s in 0..100u64 {
            let germ = GermSample::draw(3, s);
            let direct = assemble_with_moduli(&g, &field.realize_unclamped(&germ.xi));
            let err = (exp.realize(&germ.xi) - &direct).amax();
            assert!(err <= 1e-12 * direct.amax(), "germ {s}: {err}");
        }
    }

    #[test]
    fn constant_mode_gives_proportional_matrix() {
        let g = BeamGeometry::REFERENCE;
        let spec = FieldSpec::new(2e9, 0.4e9, 1e5, g.length, 2).unwrap();
        let field = decompose(&spec, g.n_elements).unwrap();
        let exp = expand_stiffness(&g, &field).unwrap();
        let ratio = field.eigenvalues[0].sqrt() * field.eigenfunctions[0][0] / 2e9;
        let err = (&exp.matrices[1] - &exp.matrices[0] * ratio).amax();
        assert!(err < 1e-6 * exp.matrices[1].amax());
    }

    #[test]
    fn expansion_rejects_mismatched_mesh() {
        let (_, field) = setup(0.4e9, 2);
        assert!(expand_stiffness(&BeamGeometry::REFERENCE.with_elements(10), &field).is_err());
    }

    #[test]
    fn zero_variance_reduces_to_deterministic_solve() {
        let (g, field) = setup(0.0, 2);
        let basis = PceBasis::new(2, 2).unwrap();
        let load = LoadCase::linear(100.0).unwrap();
        let sol = solve_galerkin(&g, &field, &basis, &load).unwrap();
        let det = solve_linear(&BeamModel::uniform(g, 2e9).unwrap(), &load).unwrap();
        for (a, b) in sol.coefficients[0].iter().zip(det.values().iter()) {
            assert!((a - b).abs() <= 1e-12 * det.values().amax());
        }
        assert!(sol.coefficients[1..].iter().flatten().all(|v| *v == 0.0));
        let samples = sample_tip(&sol, 50, 3);
        assert!(samples.iter().all(|s| *s == sol.mean_tip()));
    }

    #[test]
    fn doubling_the_load_doubles_every_coefficient() {
        let (g, field) = setup(0.4e9, 2);
        let basis = PceBasis::new(2, 2).unwrap();
        let a = solve_galerkin(&g, &field, &basis, &LoadCase::linear(50.0).unwrap()).unwrap();
        let b = solve_galerkin(&g, &field, &basis, &LoadCase::linear(100.0).unwrap()).unwrap();
        for (ua, ub) in a.coefficients.iter().zip(&b.coefficients) {
            for (x, y) in ua.iter().zip(ub) {
                assert!((2.0 * x - y).abs() <= 1e-12 * y.abs().max(1e-30));
            }
        }
    }

    #[test]
    fn block_pcg_agrees_with_dense() {
        let (g, field) = setup(0.4e9, 3);
        let basis = PceBasis::new(3, 3).unwrap();
        let load = LoadCase::linear(100.0).unwrap();
        let dense = solve_galerkin_with(&g, &field, &basis, &load, GalerkinSolver::Dense).unwrap();
        let pcg = solve_galerkin_with(&g, &field, &basis, &load, GalerkinSolver::BlockPcg).unwrap();
        let scale = dense.coefficients[0].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (a, b) in dense.coefficients.iter().zip(&pcg.coefficients) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() <= 1e-10 * scale, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn mean_coefficient_is_close_to_the_mean_response() {
        let (g, field) = setup(0.4e9, 2);
        let basis = PceBasis::new(2, 2).unwrap();
        let sol = solve_galerkin(&g, &field, &basis, &LoadCase::linear(10.0).unwrap()).unwrap();
        let det = solve_linear(&BeamModel::uniform(g, 2e9).unwrap(), &LoadCase::linear(10.0).unwrap()).unwrap();
        // E[1/E] > 1/E[E]: the mean response is a few percent softer than the mean-modulus response.
        let ratio = sol.mean_tip() / det.tip();
        assert!(ratio > 1.0 && ratio < 1.1, "{ratio}");
        let k = assemble_stiffness(&BeamModel::uniform(g, 2e9).unwrap());
        assert_eq!(k, expand_stiffness(&g, &field).unwrap().matrices[0]);
    }

    #[test]
    fn sampling_is_seeded() {
        let (g, field) = setup(0.4e9, 2);
        let basis = PceBasis::new(2, 2).unwrap();
        let sol = solve_galerkin(&g, &field, &basis, &LoadCase::linear(10.0).unwrap()).unwrap();
        assert_eq!(sample_tip(&sol, 100, 9), sample_tip(&sol, 100, 9));
        assert_ne!(sample_tip(&sol, 100, 9), sample_tip(&sol, 100, 10));
    }

    #[test]
    fn basis_dimension_must_match_the_field() {
        let (g, field) = setup(0.4e9, 2);
        let basis = PceBasis::new(3, 2).unwrap();
        assert!(solve_galerkin(&g, &field, &basis, &LoadCase::linear(1.0).unwrap()).is_err());
    }
}
