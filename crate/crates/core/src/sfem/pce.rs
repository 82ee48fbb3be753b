//! Hermite polynomial chaos over a standard-normal germ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Total-degree Hermite chaos basis.
///
/// Terms are ordered by total degree, then by descending exponent of the first
/// germ variable, so `Ψ_0 = 1` and `Ψ_i = ξ_i` for `i = 1..=m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PceBasis {
    pub germ_dim: usize,
    pub max_degree: usize,
    pub terms: Vec<Vec<usize>>,
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Multi-indices of `dim` variables summing exactly to `degree`, first variable descending.
fn compositions(dim: usize, degree: usize) -> Vec<Vec<usize>> {
    if dim == 1 {
        return vec![vec![degree]];
    }
    let mut out = Vec::new();
    for first in (0..=degree).rev() {
        for mut rest in compositions(dim - 1, degree - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

impl PceBasis {
    pub fn new(germ_dim: usize, max_degree: usize) -> Result<Self> {
        if germ_dim == 0 {
            return Err(Error::invalid("chaos basis", "germ dimension must be at least 1"));
        }
        let terms = (0..=max_degree)
            .flat_map(|d| compositions(germ_dim, d))
            .collect::<Vec<_>>();
        debug_assert_eq!(terms.len(), binomial(germ_dim + max_degree, max_degree));
        Ok(PceBasis {
            germ_dim,
            max_degree,
            terms,
        })
    }

    pub fn size(&self) -> usize {
        self.terms.len()
    }

    /// `(m + p)! / (m! p!)`.
    pub fn expected_size(germ_dim: usize, max_degree: usize) -> usize {
        binomial(germ_dim + max_degree, max_degree)
    }

    /// `E[Ψ_j²] = Π α_d!`.
    pub fn norm_squared(&self, j: usize) -> f64 {
        self.terms[j].iter().map(|&a| factorial(a)).product()
    }

    /// Evaluates every `Ψ_j(ξ)` into `out`.
    pub fn evaluate_into(&self, xi: &[f64], out: &mut [f64]) {
        debug_assert_eq!(xi.len(), self.germ_dim);
        let p = self.max_degree;
        // He_n(x) for every germ component and degree up to p.
        let mut table = vec![0.0; self.germ_dim * (p + 1)];
        for (d, &x) in xi.iter().enumerate() {
            let row = &mut table[d * (p + 1)..(d + 1) * (p + 1)];
            row[0] = 1.0;
            if p >= 1 {
                row[1] = x;
            }
            for n in 2..=p {
                row[n] = x * row[n - 1] - (n - 1) as f64 * row[n - 2];
            }
        }
        for (o, term) in out.iter_mut().zip(&self.terms) {
            *o = term
                .iter()
                .enumerate()
                .map(|(d, &a)| table[d * (p + 1) + a])
                .product();
        }
    }

    pub fn evaluate(&self, xi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.size()];
        self.evaluate_into(xi, &mut out);
        out
    }
}

/// `E[He_a He_b He_c]` for a standard normal variable.
pub fn hermite_triple(a: usize, b: usize, c: usize) -> f64 {
    let total = a + b + c;
    if total % 2 == 1 {
        return 0.0;
    }
    let s = total / 2;
    if s < a || s < b || s < c {
        return 0.0;
    }
    factorial(a) * factorial(b) * factorial(c)
        / (factorial(s - a) * factorial(s - b) * factorial(s - c))
}

/// `c_ijk = E[ξ_i Ψ_j Ψ_k]` with `ξ_0 ≡ 1`, stored densely as `(m + 1) × P × P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleProducts {
    pub germ_dim: usize,
    pub size: usize,
    values: Vec<f64>,
}

impl TripleProducts {
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[(i * self.size + j) * self.size + k]
    }

    /// Non-zero `(i, c_ijk)` pairs for a fixed block `(j, k)`.
    pub fn block_terms(&self, j: usize, k: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..=self.germ_dim)
            .map(move |i| (i, self.get(i, j, k)))
            .filter(|(_, c)| *c != 0.0)
    }
}

pub fn triple_products(basis: &PceBasis) -> TripleProducts {
    let m = basis.germ_dim;
    let p = basis.size();
    let mut values = vec![0.0; (m + 1) * p * p];
    for i in 0..=m {
        for j in 0..p {
            for k in 0..p {
                let c: f64 = (0..m)
                    .map(|d| {
                        let xi_deg = usize::from(i >= 1 && d == i - 1);
                        hermite_triple(xi_deg, basis.terms[j][d], basis.terms[k][d])
                    })
                    .product();
                values[(i * p + j) * p + k] = c;
            }
        }
    }
    TripleProducts {
        germ_dim: m,
        size: p,
        values,
    }
}
