use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{classical_bcl, decoherence};
use crate::densemat::{
    haar_unitary, kron, partial_trace, random_density, random_hermitian, random_pure, Keep, Operator, Rng,
};
use crate::error::{Error, Result};
use crate::supermap::SuperMap;

/// Max-entry violations of the four defining properties.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxiomReport {
    pub broadcasting_residual: f64,
    pub covariance_residual: f64,
    pub permutation_residual: f64,
    pub classical_residual: f64,
    pub samples_used: usize,
    pub seed: u64,
    pub version: String,
}

impl AxiomReport {
    pub fn max_residual(&self) -> f64 {
        self.broadcasting_residual
            .max(self.covariance_residual)
            .max(self.permutation_residual)
            .max(self.classical_residual)
    }

    /// `(name, residual)` pairs in a fixed order.
    pub fn residuals(&self) -> [(&'static str, f64); 4] {
        [
            ("broadcasting", self.broadcasting_residual),
            ("covariance", self.covariance_residual),
            ("permutation", self.permutation_residual),
            ("classical", self.classical_residual),
        ]
    }
}

pub(crate) fn broadcaster_dim(m: &SuperMap) -> Result<usize> {
    let d = m.d_in();
    if m.d_out() != d * d {
        return Err(Error::DimensionMismatch(format!("a broadcaster maps d -> d^2, got {} -> {}", d, m.d_out())));
    }
    Ok(d)
}

fn broadcasting_residual_at(m: &SuperMap, rho: &Operator) -> f64 {
    let d = m.d_in();
    let out = m.apply(rho).expect("dims checked");
    [Keep::First, Keep::Second]
        .into_iter()
        .map(|k| partial_trace(&out, (d, d), k).expect("dims checked").max_abs_diff(rho))
        .fold(0.0, f64::max)
}

/// `max |SWAP·L(x)·SWAP − L(x)|` read off the Choi matrix.
pub fn permutation_residual(m: &SuperMap) -> Result<f64> {
    let d = broadcaster_dim(m)?;
    let w = kron(&Operator::swap(d), &Operator::identity(d));
    Ok(w.conjugate(m.choi()).max_abs_diff(m.choi()))
}

/// Choi max-entry distance between `(D⊗D)∘L∘D` and `B_cl` for the
/// basis given by the columns of `basis`.
pub fn classical_residual(m: &SuperMap, basis: &Operator) -> Result<f64> {
    let d = broadcaster_dim(m)?;
    let dec = decoherence(d, basis)?;
    let dd = SuperMap::tensor(&dec, &dec);
    let sandwiched = SuperMap::compose(&dd, &SuperMap::compose(m, &dec)?)?;
    Ok(sandwiched.max_abs_diff(&classical_bcl(d, basis)?))
}

fn covariance_residual_for(m: &SuperMap, images: &[Operator], u: &Operator) -> f64 {
    let d = m.d_in();
    let w = kron(u, u);
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let rotated_in = u.conjugate(&Operator::unit(d, i, j));
            let lhs = m.apply(&rotated_in).expect("dims checked");
            let rhs = w.conjugate(&images[i * d + j]);
            worst = worst.max(lhs.max_abs_diff(&rhs));
        }
    }
    worst
}

/// Samples `n_states` inputs (alternating Haar pure and Ginibre mixed) for
/// the broadcasting condition and `n_unitaries` Haar unitaries for
/// covariance on every matrix unit. Permutation invariance and classical
/// consistency in the computational basis are evaluated exactly.
pub fn check_axioms(m: &SuperMap, n_states: usize, n_unitaries: usize, rng: &mut Rng) -> Result<AxiomReport> {
    let d = broadcaster_dim(m)?;
    let states: Vec<Operator> =
        (0..n_states).map(|k| if k % 2 == 0 { random_pure(d, rng) } else { random_density(d, rng) }).collect();
    let unitaries: Vec<Operator> = (0..n_unitaries).map(|_| haar_unitary(d, rng)).collect();

    let broadcasting_residual = states.par_iter().map(|rho| broadcasting_residual_at(m, rho)).reduce(|| 0.0, f64::max);
    let images: Vec<Operator> = (0..d * d).map(|k| m.image_of_unit(k / d, k % d)).collect();
    let covariance_residual =
        unitaries.par_iter().map(|u| covariance_residual_for(m, &images, u)).reduce(|| 0.0, f64::max);

    Ok(AxiomReport {
        broadcasting_residual,
        covariance_residual,
        permutation_residual: permutation_residual(m)?,
        classical_residual: classical_residual(m, &Operator::identity(d))?,
        samples_used: n_states + n_unitaries,
        seed: rng.seed(),
        version: crate::VERSION.to_string(),
    })
}

/// `max |Tr[L(ρ)(O₁⊗O₂)] − Re Tr[ρO₁O₂]|` over random Hermitian triples,
/// each rescaled so that its largest entry has modulus 1.
pub fn correlator_residual(m: &SuperMap, n_cases: usize, rng: &mut Rng) -> Result<f64> {
    let d = broadcaster_dim(m)?;
    let mut worst: f64 = 0.0;
    for _ in 0..n_cases {
        let [rho, o1, o2] = [(); 3].map(|_| {
            let h = random_hermitian(d, rng);
            h.scale_re(1.0 / h.max_abs())
        });
        let lhs = m.apply(&rho)?.trace_product(&kron(&o1, &o2)).re;
        let rhs = rho.matmul(&o1).trace_product(&o2).re;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}
