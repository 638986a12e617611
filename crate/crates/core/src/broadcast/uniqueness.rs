//! Numerical uniqueness of the canonical broadcaster.
//!
//! The Choi matrix `C` of an unknown map `C^d → C^d⊗C^d` is expanded in a
//! real basis and every defining property becomes a block of real linear
//! equations. The blocks are folded into a streaming QR, and the singular
//! values of the triangle decide the dimension of the solution set.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{canonical_b, require_dim};
use crate::densemat::{haar_unitary, kron, partial_trace, JacobiSvd, Keep, Operator, Rng, StreamingQr, C64};
use crate::error::{Error, Result};
use crate::supermap::SuperMap;

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniquenessOptions {
    pub n_unitaries: usize,
    pub include_permutation: bool,
    pub include_classical: bool,
    /// Parametrize general complex Choi matrices instead of Hermitian ones.
    pub complex_unknowns: bool,
}

impl UniquenessOptions {
    pub fn new(n_unitaries: usize) -> Self {
        Self { n_unitaries, include_permutation: true, include_classical: true, complex_unknowns: false }
    }
}

impl Default for UniquenessOptions {
    fn default() -> Self {
        Self::new(20)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniquenessCertificate {
    pub dim: usize,
    pub constraint_rows: usize,
    pub unknowns: usize,
    pub nullity: usize,
    /// Max-entry violation of the full affine system at `C(B)`.
    pub candidate_residual: f64,
    /// Smallest retained singular value divided by `threshold`.
    pub singular_value_gap: f64,
    pub threshold: f64,
    pub sigma_max: f64,
    pub sigma_min: f64,
    /// Max-entry distance from the least-squares solution to `C(B)`.
    pub solution_distance: f64,
    pub options: UniquenessOptions,
    pub seed: u64,
    pub version: String,
    /// Least-squares (minimum-norm) solution of the sampled system.
    #[serde(skip)]
    pub solution: Option<SuperMap>,
    /// Choi matrices spanning the numerical null space.
    #[serde(skip)]
    pub null_space: Vec<Operator>,
}

impl UniquenessCertificate {
    pub fn is_unique(&self) -> bool {
        self.nullity == 0
    }
}

/// Constraint value: either an operator that is Hermitian whenever `C` is,
/// or a list of scalars that are real whenever `C` is Hermitian.
enum Value {
    Hermitian(Operator),
    Scalars(Vec<C64>),
}

struct Constraint {
    eval: Box<dyn Fn(&Operator) -> Value + Sync>,
    target: Value,
}

struct Parametrization {
    n: usize,
    complex: bool,
}

impl Parametrization {
    fn len(&self) -> usize {
        self.n * self.n * if self.complex { 2 } else { 1 }
    }

    /// Hermitian mode uses the orthonormal basis `E_kk`, `(E_kl + E_lk)/√2`,
    /// `i(E_kl − E_lk)/√2`; complex mode uses `E_kl` and `iE_kl`.
    fn basis(&self, p: usize) -> Operator {
        let n = self.n;
        let mut e = Operator::zeros(n, n);
        if self.complex {
            let (k, imag) = (p / 2, p % 2 == 1);
            e[(k / n, k % n)] = if imag { C64::new(0.0, 1.0) } else { C64::new(1.0, 0.0) };
            return e;
        }
        let (k, l, kind) = hermitian_slot(n, p);
        match kind {
            0 => e[(k, k)] = C64::new(1.0, 0.0),
            1 => {
                e[(k, l)] = C64::new(1.0 / SQRT2, 0.0);
                e[(l, k)] = C64::new(1.0 / SQRT2, 0.0);
            }
            _ => {
                e[(k, l)] = C64::new(0.0, 1.0 / SQRT2);
                e[(l, k)] = C64::new(0.0, -1.0 / SQRT2);
            }
        }
        e
    }

    fn assemble(&self, x: &[f64]) -> Operator {
        let mut out = Operator::zeros(self.n, self.n);
        for (p, &v) in x.iter().enumerate() {
            if v != 0.0 {
                out += &self.basis(p).scale_re(v);
            }
        }
        out
    }

    fn pack(&self, v: &Value, out: &mut Vec<f64>) {
        match v {
            Value::Hermitian(h) if !self.complex => {
                let m = h.rows();
                for k in 0..m {
                    out.push(h[(k, k)].re);
                    for l in k + 1..m {
                        out.push(SQRT2 * h[(k, l)].re);
                        out.push(SQRT2 * h[(k, l)].im);
                    }
                }
            }
            Value::Hermitian(h) => {
                for z in h.as_slice() {
                    out.push(z.re);
                    out.push(z.im);
                }
            }
            Value::Scalars(s) => {
                for z in s {
                    out.push(z.re);
                    if self.complex {
                        out.push(z.im);
                    }
                }
            }
        }
    }
}

/// Maps a Hermitian-mode parameter index to `(k, l, kind)` with
/// kind 0 diagonal, 1 real part, 2 imaginary part. The order matches `pack`.
fn hermitian_slot(n: usize, p: usize) -> (usize, usize, u8) {
    let mut offset = 0;
    for k in 0..n {
        let width = 1 + 2 * (n - k - 1);
        if p < offset + width {
            let r = p - offset;
            if r == 0 {
                return (k, k, 0);
            }
            let l = k + 1 + (r - 1) / 2;
            return (k, l, if (r - 1).is_multiple_of(2) { 1 } else { 2 });
        }
        offset += width;
    }
    unreachable!("parameter index out of range")
}

fn value_diff_max(a: &Value, b: &Value) -> f64 {
    match (a, b) {
        (Value::Hermitian(x), Value::Hermitian(y)) => x.max_abs_diff(y),
        (Value::Scalars(x), Value::Scalars(y)) => x.iter().zip(y).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max),
        _ => unreachable!("constraint kinds never mix"),
    }
}

fn constraints(d: usize, opts: &UniquenessOptions, rng: &mut Rng) -> Vec<Constraint> {
    let mut out = Vec::new();
    let swap12 = kron(&Operator::swap(d), &Operator::identity(d));

    // both marginals of C equal the Choi matrix of the identity
    out.push(Constraint {
        eval: Box::new(move |c| Value::Hermitian(partial_trace(c, (d, d * d), Keep::Second).expect("dims"))),
        target: Value::Hermitian(Operator::omega(d)),
    });
    let s = swap12.clone();
    out.push(Constraint {
        eval: Box::new(move |c| {
            Value::Hermitian(partial_trace(&s.conjugate(c), (d, d * d), Keep::Second).expect("dims"))
        }),
        target: Value::Hermitian(Operator::omega(d)),
    });

    if opts.include_permutation {
        let s = swap12.clone();
        out.push(Constraint {
            eval: Box::new(move |c| Value::Hermitian(&s.conjugate(c) - c)),
            target: Value::Hermitian(Operator::zeros(d * d * d, d * d * d)),
        });
    }

    if opts.include_classical {
        // (D⊗D)∘L∘D keeps only ⟨ab,i|C|ab,i⟩, which must equal δ_{a=b=i}
        let diag_index = move |a: usize, b: usize, i: usize| (a * d + b) * d + i;
        let mut target = Vec::with_capacity(d * d * d);
        for a in 0..d {
            for b in 0..d {
                for i in 0..d {
                    let hit = a == b && b == i;
                    target.push(C64::new(if hit { 1.0 } else { 0.0 }, 0.0));
                }
            }
        }
        out.push(Constraint {
            eval: Box::new(move |c| {
                let mut v = Vec::with_capacity(d * d * d);
                for a in 0..d {
                    for b in 0..d {
                        for i in 0..d {
                            let k = diag_index(a, b, i);
                            v.push(c[(k, k)]);
                        }
                    }
                }
                Value::Scalars(v)
            }),
            target: Value::Scalars(target),
        });
    }

    // covariance ⇔ C is invariant under U⊗U⊗Ū
    for _ in 0..opts.n_unitaries {
        let u = haar_unitary(d, rng);
        let w = kron(&kron(&u, &u), &u.conj());
        out.push(Constraint {
            eval: Box::new(move |c| Value::Hermitian(&w.conjugate(c) - c)),
            target: Value::Hermitian(Operator::zeros(d * d * d, d * d * d)),
        });
    }
    out
}

/// Certificate with every constraint family and Hermitian unknowns.
pub fn verify_uniqueness(d: usize, n_unitaries: usize, rng: &mut Rng) -> Result<UniquenessCertificate> {
    verify_uniqueness_with(d, &UniquenessOptions::new(n_unitaries), rng)
}

pub fn verify_uniqueness_with(d: usize, opts: &UniquenessOptions, rng: &mut Rng) -> Result<UniquenessCertificate> {
    require_dim(d)?;
    if opts.n_unitaries < 2 {
        return Err(Error::InvalidArgument("uniqueness needs at least 2 sampled unitaries".into()));
    }
    let seed = rng.seed();
    let n = d * d * d;
    let par = Parametrization { n, complex: opts.complex_unknowns };
    let unknowns = par.len();
    let basis: Vec<Operator> = (0..unknowns).map(|p| par.basis(p)).collect();
    let system = constraints(d, opts, rng);

    let mut qr = StreamingQr::new(unknowns);
    for con in &system {
        let columns: Vec<Vec<f64>> = basis
            .par_iter()
            .map(|e| {
                let mut col = Vec::new();
                par.pack(&(con.eval)(e), &mut col);
                col
            })
            .collect();
        let mut rhs = Vec::new();
        par.pack(&con.target, &mut rhs);
        let rows = rhs.len();
        let mut block = Vec::with_capacity(rows * (unknowns + 1));
        for col in &columns {
            block.extend_from_slice(col);
        }
        block.extend_from_slice(&rhs);
        qr.push_block(rows, block);
    }

    let svd = JacobiSvd::new(&qr.r_matrix(), unknowns);
    let sigma_max = svd.values.first().copied().unwrap_or(0.0);
    let threshold = 1e-8 * sigma_max;
    let nullity = svd.values.iter().filter(|&&s| s < threshold).count();
    let retained_min = svd.values.iter().copied().filter(|&s| s >= threshold).fold(f64::INFINITY, f64::min);
    let sigma_min = svd.values.last().copied().unwrap_or(0.0);

    let x = svd.solve(&qr.qtb(), threshold);
    let solved = par.assemble(&x);
    let b = canonical_b(d)?;
    let solution_distance = solved.max_abs_diff(b.choi());
    let candidate_residual =
        system.iter().map(|con| value_diff_max(&(con.eval)(b.choi()), &con.target)).fold(0.0, f64::max);
    let null_space = (unknowns - nullity..unknowns).map(|k| par.assemble(svd.right_vector(k))).collect();

    Ok(UniquenessCertificate {
        dim: d,
        constraint_rows: qr.rows_seen(),
        unknowns,
        nullity,
        candidate_residual,
        singular_value_gap: retained_min / threshold,
        threshold,
        sigma_max,
        sigma_min,
        solution_distance,
        options: opts.clone(),
        seed,
        version: crate::VERSION.to_string(),
        solution: Some(SuperMap::from_choi(d, d * d, solved)?),
        null_space,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitian_slots_cover_every_parameter_once() {
        let n = 4;
        let mut seen = std::collections::HashSet::new();
        for p in 0..n * n {
            assert!(seen.insert(hermitian_slot(n, p)));
        }
    }

    #[test]
    fn hermitian_basis_is_orthonormal() {
        let par = Parametrization { n: 3, complex: false };
        let basis: Vec<Operator> = (0..9).map(|p| par.basis(p)).collect();
        for (i, a) in basis.iter().enumerate() {
            assert!(a.is_hermitian(0.0));
            for (j, b) in basis.iter().enumerate() {
                let ip = a.hs_inner(b);
                assert!((ip.re - (i == j) as u8 as f64).abs() < 1e-15 && ip.im.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn pack_is_coordinates_in_basis() {
        let par = Parametrization { n: 3, complex: false };
        let mut rng = Rng::new(40, 0);
        let h = crate::densemat::random_hermitian(3, &mut rng);
        let mut packed = Vec::new();
        par.pack(&Value::Hermitian(h.clone()), &mut packed);
        assert!(par.assemble(&packed).max_abs_diff(&h) < 1e-14);
    }

    #[test]
    fn too_few_unitaries() {
        let mut rng = Rng::new(41, 0);
        assert!(verify_uniqueness(2, 1, &mut rng).is_err());
    }
}
