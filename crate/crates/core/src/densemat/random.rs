//! Seeded random operators: Haar unitaries and pure states, Ginibre density
//! matrices, random Hermitian effects and Stinespring channels.

use super::operator::{partial_trace, Keep, Operator, C64};
use super::rng::Rng;
use crate::supermap::SuperMap;

/// Matrix of i.i.d. standard complex Gaussians.
pub fn ginibre(rows: usize, cols: usize, rng: &mut Rng) -> Operator {
    Operator::from_fn(rows, cols, |_, _| rng.complex_normal())
}

/// First `cols` columns of a Haar unitary on `C^rows`.
///
/// Gram–Schmidt on a Ginibre matrix is the QR factorization with positive
/// diagonal in `R`, which is exactly the phase fix that makes `Q` Haar.
pub fn haar_isometry(rows: usize, cols: usize, rng: &mut Rng) -> Operator {
    assert!(cols <= rows, "isometry needs cols <= rows");
    let g = ginibre(rows, cols, rng);
    let mut q: Vec<Vec<C64>> = Vec::with_capacity(cols);
    for j in 0..cols {
        let mut v = g.column(j);
        // two passes of modified Gram–Schmidt keep orthogonality at 1e-15
        for _ in 0..2 {
            for u in &q {
                let proj: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= proj * ui;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for vi in &mut v {
            *vi /= norm;
        }
        q.push(v);
    }
    Operator::from_fn(rows, cols, |i, j| q[j][i])
}

pub fn haar_unitary(d: usize, rng: &mut Rng) -> Operator {
    haar_isometry(d, d, rng)
}

/// Haar-random unit vector (normalized complex Gaussian).
pub fn random_pure_vector(d: usize, rng: &mut Rng) -> Vec<C64> {
    let mut v: Vec<C64> = (0..d).map(|_| rng.complex_normal()).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut v {
        *z /= norm;
    }
    v
}

/// Haar-random rank-one projector `ψ = |ψ⟩⟨ψ|`.
pub fn random_pure(d: usize, rng: &mut Rng) -> Operator {
    Operator::projector(&random_pure_vector(d, rng))
}

/// `GG†/Tr[GG†]` with `G` Ginibre.
pub fn random_density(d: usize, rng: &mut Rng) -> Operator {
    let g = ginibre(d, d, rng);
    let w = g.matmul(&g.adjoint());
    let t = w.trace().re;
    w.scale_re(1.0 / t)
}

/// `(G + G†)/2`, a generic Hermitian operator.
pub fn random_hermitian(d: usize, rng: &mut Rng) -> Operator {
    ginibre(d, d, rng).hermitian_part()
}

/// Random effect `0 ⪯ P ⪯ I`: Haar eigenbasis, uniform eigenvalues.
pub fn random_effect(d: usize, rng: &mut Rng) -> Operator {
    let u = haar_unitary(d, rng);
    let diag: Vec<f64> = (0..d).map(|_| rng.uniform()).collect();
    u.conjugate(&Operator::from_real_diag(&diag))
}

/// Random CPTP map from a Haar isometry `C^{d_in} → C^{d_out} ⊗ C^{env}`
/// with `env = d_in·d_out`, tracing out the environment.
pub fn random_channel(d_in: usize, d_out: usize, rng: &mut Rng) -> SuperMap {
    let env = d_in * d_out;
    let v = haar_isometry(d_out * env, d_in, rng);
    let vd = v.adjoint();
    SuperMap::from_action(d_in, d_out, |x| {
        let full = v.matmul(x).matmul(&vd);
        partial_trace(&full, (d_out, env), Keep::First).expect("stinespring dims")
    })
    .expect("stinespring channel has consistent dims")
}
