//! Named broadcasting maps `Lin(C^d) → Lin(C^d ⊗ C^d)` and their checks.

mod axioms;
mod uniqueness;

pub use axioms::{check_axioms, classical_residual, correlator_residual, permutation_residual, AxiomReport};
pub use uniqueness::{verify_uniqueness, verify_uniqueness_with, UniquenessCertificate, UniquenessOptions};

use crate::densemat::{kron, Operator, C64};
use crate::error::{Error, Result};
use crate::supermap::{AffineDecomposition, SuperMap};

pub(crate) fn require_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidDimension { dim: d, reason: "broadcasting needs d >= 2" });
    }
    Ok(())
}

/// `Π± = (I ± SWAP)/2` on `C^d ⊗ C^d`.
pub fn symmetric_projector(d: usize) -> Operator {
    (&Operator::identity(d * d) + &Operator::swap(d)).scale_re(0.5)
}

pub fn antisymmetric_projector(d: usize) -> Operator {
    (&Operator::identity(d * d) - &Operator::swap(d)).scale_re(0.5)
}

/// `B(ρ) = ½{ρ⊗I, SWAP}`.
pub fn canonical_b(d: usize) -> Result<SuperMap> {
    require_dim(d)?;
    let swap = Operator::swap(d);
    let id = Operator::identity(d);
    SuperMap::from_action(d, d * d, |x| kron(x, &id).anticommutator(&swap).scale_re(0.5))
}

/// `B_λ(ρ) = ½{ρ⊗I, SWAP} + iλ[ρ⊗I, SWAP]`.
pub fn family_b_lambda(d: usize, lambda: f64) -> Result<SuperMap> {
    require_dim(d)?;
    let swap = Operator::swap(d);
    let id = Operator::identity(d);
    SuperMap::from_action(d, d * d, |x| {
        let a = kron(x, &id);
        &a.anticommutator(&swap).scale_re(0.5) + &a.commutator(&swap).scale(C64::new(0.0, lambda))
    })
}

fn projected_copy(d: usize, proj: Operator, weight: f64) -> Result<SuperMap> {
    let id = Operator::identity(d);
    SuperMap::from_action(d, d * d, |x| proj.conjugate(&kron(&id, x)).scale_re(weight))
}

/// Universal cloner `B⁺(ρ) = 2/(d+1)·Π⁺(I⊗ρ)Π⁺`.
pub fn cloner(d: usize) -> Result<SuperMap> {
    require_dim(d)?;
    projected_copy(d, symmetric_projector(d), 2.0 / (d as f64 + 1.0))
}

/// Universal anti-symmetrizer `B⁻(ρ) = 2/(d−1)·Π⁻(I⊗ρ)Π⁻`.
pub fn antisym(d: usize) -> Result<SuperMap> {
    require_dim(d)?;
    projected_copy(d, antisymmetric_projector(d), 2.0 / (d as f64 - 1.0))
}

/// `B̂± = (Π±⊗I)(I⊗Ω)(Π±⊗I)` on `S₁⊗S₂⊗S_in`.
pub fn choi_projector_hat(d: usize, symmetric: bool) -> Operator {
    let p = if symmetric { symmetric_projector(d) } else { antisymmetric_projector(d) };
    let p3 = kron(&p, &Operator::identity(d));
    p3.conjugate(&kron(&Operator::identity(d), &Operator::omega(d)))
}

/// `B = (d+1)/2·B⁺ − (d−1)/2·B⁻`.
pub fn spectral_decomposition(d: usize) -> Result<AffineDecomposition> {
    let df = d as f64;
    AffineDecomposition::new((df + 1.0) / 2.0, cloner(d)?, (df - 1.0) / 2.0, antisym(d)?)
}

fn check_basis(d: usize, basis: &Operator) -> Result<()> {
    if basis.rows() != d || basis.cols() != d {
        return Err(Error::DimensionMismatch(format!("basis must be {d}x{d}, got {}x{}", basis.rows(), basis.cols())));
    }
    let defect = basis.unitarity_defect();
    if defect > 1e-9 {
        return Err(Error::NotUnitary(defect));
    }
    Ok(())
}

fn basis_projectors(basis: &Operator) -> Vec<Operator> {
    (0..basis.cols()).map(|i| Operator::projector(&basis.column(i))).collect()
}

/// Pinching `D(ρ) = Σᵢ ⟨uᵢ|ρ|uᵢ⟩ |uᵢ⟩⟨uᵢ|` onto the columns of `basis`.
pub fn decoherence(d: usize, basis: &Operator) -> Result<SuperMap> {
    check_basis(d, basis)?;
    let projs = basis_projectors(basis);
    SuperMap::from_action(d, d, |x| {
        projs.iter().fold(Operator::zeros(d, d), |acc, p| &acc + &p.scale(x.trace_product(p)))
    })
}

/// Classical copy map `B_cl(|uᵢ⟩⟨uⱼ|) = δᵢⱼ |uᵢuᵢ⟩⟨uᵢuᵢ|`.
pub fn classical_bcl(d: usize, basis: &Operator) -> Result<SuperMap> {
    check_basis(d, basis)?;
    let projs = basis_projectors(basis);
    let doubled: Vec<Operator> = projs.iter().map(|p| kron(p, p)).collect();
    SuperMap::from_action(d, d * d, |x| {
        projs
            .iter()
            .zip(&doubled)
            .fold(Operator::zeros(d * d, d * d), |acc, (p, pp)| &acc + &pp.scale(x.trace_product(p)))
    })
}
