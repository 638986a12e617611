//! Diamond norm as the semidefinite program
//!
//! ```text
//! maximize   Re Tr[J† X]
//! subject to [[I⊗ρ₀, X], [X†, I⊗ρ₁]] ⪰ 0,   ρ₀, ρ₁ density matrices,
//! ```
//!
//! with `J` the Choi matrix (output ⊗ input), solved by over-relaxed ADMM
//! on the split `Z ∈ affine set`, `W ⪰ 0`, `Z = W`. Every bound reported
//! is certified: the primal iterate is repaired into a feasible point and
//! the scaled multiplier into a feasible dual point.

use super::{require_hp, witness_value, DiamondResult, SdpConfig};
use crate::densemat::{eigh, partial_trace, psd_part, Keep, Operator, C64};
use crate::error::{Error, Result};
use crate::supermap::SuperMap;

const CHECK_EVERY: usize = 25;

struct Blocks {
    d_in: usize,
    d_out: usize,
}

impl Blocks {
    fn n(&self) -> usize {
        self.d_in * self.d_out
    }

    fn assemble(&self, p: &Operator, x: &Operator, q: &Operator) -> Operator {
        let n = self.n();
        Operator::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
            (true, true) => p[(i, j)],
            (true, false) => x[(i, j - n)],
            (false, true) => x[(j, i - n)].conj(),
            (false, false) => q[(i - n, j - n)],
        })
    }

    fn block(&self, z: &Operator, r: usize, c: usize) -> Operator {
        let n = self.n();
        Operator::from_fn(n, n, |i, j| z[(r * n + i, c * n + j)])
    }

    fn marginal(&self, m: &Operator) -> Operator {
        partial_trace(m, (self.d_out, self.d_in), Keep::Second).expect("block dims")
    }

    /// Frobenius projection of a diagonal block onto `{I⊗ρ : Tr ρ = 1}`;
    /// returns `ρ`.
    fn project_rho(&self, m: &Operator) -> Operator {
        let r = self.marginal(m).scale_re(1.0 / self.d_out as f64);
        let shift = (1.0 - r.trace().re) / self.d_in as f64;
        &r + &Operator::identity(self.d_in).scale_re(shift)
    }

    fn lift(&self, rho: &Operator) -> Operator {
        crate::densemat::kron(&Operator::identity(self.d_out), rho)
    }

    /// Projection onto the Hermitian matrices with diagonal blocks `I⊗ρ`.
    fn project_affine(&self, y: &Operator) -> (Operator, Operator, Operator) {
        let y = y.hermitian_part();
        let rho0 = self.project_rho(&self.block(&y, 0, 0));
        let rho1 = self.project_rho(&self.block(&y, 1, 1));
        let z = self.assemble(&self.lift(&rho0), &self.block(&y, 0, 1), &self.lift(&rho1));
        (z, rho0, rho1)
    }
}

fn min_eig(h: &Operator) -> Result<f64> {
    Ok(*eigh(h)?.values.last().expect("non-empty"))
}

fn max_eig(h: &Operator) -> Result<f64> {
    Ok(eigh(h)?.values[0])
}

/// `Z` affine-feasible → `(Z + tI)/(1 + t·d_in)` is feasible, with the
/// objective scaled accordingly.
fn certified_lower(blocks: &Blocks, j: &Operator, z: &Operator) -> Result<f64> {
    let t = (-min_eig(z)?).max(0.0);
    let x = blocks.block(z, 0, 1);
    Ok(j.hs_inner(&x).re / (1.0 + t * blocks.d_in as f64))
}

/// Dual: minimize ½(‖Tr_out Y₀‖∞ + ‖Tr_out Y₁‖∞) over
/// `[[Y₀, −J], [−J†, Y₁]] ⪰ 0`. `Y₀, Y₁` come from the scaled multiplier
/// and are shifted by `t·I` until the block matrix is PSD.
fn certified_upper(blocks: &Blocks, j: &Operator, u: &Operator, sigma: f64) -> Result<f64> {
    let y = u.scale_re(-2.0 * sigma).hermitian_part();
    let y0 = blocks.block(&y, 0, 0);
    let y1 = blocks.block(&y, 1, 1);
    let minus_j = j.scale_re(-1.0);
    let full = blocks.assemble(&y0, &minus_j, &y1);
    let t = (-min_eig(&full)?).max(0.0);
    let a = max_eig(&blocks.marginal(&y0))?;
    let b = max_eig(&blocks.marginal(&y1))?;
    Ok(0.5 * (a + b) + t * blocks.d_out as f64)
}

/// Purification `Σᵢ |i⟩ ⊗ √σ|i⟩` of the input state `σ = ρᵀ`, where
/// `ρ = (ρ₀ + ρ₁)/2` is made PSD and unit-trace first.
fn witness(rho0: &Operator, rho1: &Operator) -> Result<Operator> {
    let d = rho0.rows();
    let avg = (rho0 + rho1).scale_re(0.5).hermitian_part();
    let mut pos = psd_part(&avg)?;
    let tr = pos.trace().re;
    if tr <= 0.0 {
        pos = Operator::identity(d);
    }
    let sigma = pos.scale_re(1.0 / pos.trace().re).transpose();
    let root = eigh(&sigma.hermitian_part())?.reconstruct_with(|x| x.max(0.0).sqrt());
    let mut v = vec![C64::new(0.0, 0.0); d * d];
    for i in 0..d {
        for k in 0..d {
            v[i * d + k] = root[(k, i)];
        }
    }
    Ok(Operator::projector(&v))
}

pub fn diamond_sdp(m: &SuperMap, cfg: &SdpConfig) -> Result<DiamondResult> {
    cfg.validate()?;
    require_hp(m)?;
    let blocks = Blocks { d_in: m.d_in(), d_out: m.d_out() };
    let n = blocks.n();
    if n > 64 {
        return Err(Error::InvalidArgument(format!("d_in·d_out = {n} exceeds the SDP limit of 64")));
    }
    let j = m.choi().hermitian_part();
    let zero = Operator::zeros(n, n);
    let c = blocks.assemble(&zero, &j.scale_re(0.5), &zero);

    let start = blocks.lift(&Operator::identity(blocks.d_in).scale_re(1.0 / blocks.d_in as f64));
    let mut w = blocks.assemble(&start, &zero, &start);
    let mut u = Operator::zeros(2 * n, 2 * n);
    let mut sigma = cfg.penalty;
    let alpha = cfg.over_relaxation;

    let mut best_lower = f64::NEG_INFINITY;
    let mut best_upper = f64::INFINITY;
    let mut last = (Operator::identity(blocks.d_in), Operator::identity(blocks.d_in));
    let mut converged = false;
    let mut iterations = 0;

    for k in 1..=cfg.max_iterations {
        iterations = k;
        let target = &(&w - &u) + &c.scale_re(1.0 / sigma);
        let (z, rho0, rho1) = blocks.project_affine(&target);
        let relaxed = &z.scale_re(alpha) + &w.scale_re(1.0 - alpha);
        let w_next = psd_part(&(&relaxed + &u))?;
        u += &(&relaxed - &w_next);
        let primal_res = (&z - &w_next).frobenius_norm();
        let dual_res = sigma * (&w_next - &w).frobenius_norm();
        w = w_next;

        if k % CHECK_EVERY == 0 || k == cfg.max_iterations {
            best_lower = best_lower.max(certified_lower(&blocks, &j, &z)?);
            best_upper = best_upper.min(certified_upper(&blocks, &j, &u, sigma)?);
            last = (rho0, rho1);
            if best_upper - best_lower <= cfg.tolerance {
                converged = true;
                break;
            }
            if primal_res > 10.0 * dual_res {
                sigma *= 2.0;
                u = u.scale_re(0.5);
            } else if dual_res > 10.0 * primal_res {
                sigma *= 0.5;
                u = u.scale_re(2.0);
            }
        }
    }

    let witness_state = witness(&last.0, &last.1)?;
    let wv = witness_value(m, &witness_state)?;
    let lower_bound = best_lower.max(wv);
    Ok(DiamondResult {
        method: "sdp".into(),
        value: 0.5 * (lower_bound + best_upper),
        lower_bound,
        upper_bound: Some(best_upper),
        witness_state,
        witness_value: wv,
        iterations,
        converged,
    })
}
