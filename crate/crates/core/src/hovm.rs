//! Hermitian operator-valued measures and the virtual measure-and-prepare
//! realization of the canonical broadcaster.
//!
//! The continuous protocol measures `M_ψ = d·ρ_ψ` against Haar-random
//! rank-one `ψ` and prepares `ρ_ψ ⊗ ρ_ψ` with `ρ_ψ = ½[(d+2)ψ − I]`. Its
//! Jamiołkowski operator reduces to the first three Haar moments, which are
//! available in closed form, so the map is built exactly.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::broadcast::{canonical_b, require_dim};
use crate::densemat::{kron, kron_all, random_pure, Operator, Rng, C64};
use crate::error::{Error, Result};
use crate::stats::{RunningStats, SamplingEstimate};
use crate::supermap::SuperMap;

const FINITE_TOL: f64 = 1e-10;
const MC_BLOCKS: usize = 16;

/// Finite table of Hermitian effects and the virtual states prepared on
/// each outcome.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteHOVM {
    effects: Vec<Operator>,
    preparations: Vec<Operator>,
}

impl FiniteHOVM {
    pub fn new(effects: Vec<Operator>, preparations: Vec<Operator>) -> Result<Self> {
        let first = effects.first().ok_or_else(|| Error::InvalidArgument("HOVM needs at least one outcome".into()))?;
        if effects.len() != preparations.len() {
            return Err(Error::InvalidArgument(format!(
                "{} effects but {} preparations",
                effects.len(),
                preparations.len()
            )));
        }
        let d = first.rows();
        let d_out = preparations[0].rows();
        let mut total = Operator::zeros(d, d);
        for e in &effects {
            if e.rows() != d || e.cols() != d {
                return Err(Error::DimensionMismatch("effects differ in dimension".into()));
            }
            let defect = e.hermiticity_defect();
            if defect > FINITE_TOL {
                return Err(Error::NotHermitian(defect));
            }
            total += e;
        }
        let norm_defect = total.max_abs_diff(&Operator::identity(d));
        if norm_defect > FINITE_TOL {
            return Err(Error::InvalidArgument(format!("effects sum to I only within {norm_defect:.3e}")));
        }
        for p in &preparations {
            if p.rows() != d_out || p.cols() != d_out {
                return Err(Error::DimensionMismatch("preparations differ in dimension".into()));
            }
            let defect = p.hermiticity_defect();
            if defect > FINITE_TOL {
                return Err(Error::NotHermitian(defect));
            }
            let tr = p.trace();
            if (tr - C64::new(1.0, 0.0)).norm() > FINITE_TOL {
                return Err(Error::InvalidArgument(format!("preparation has trace {tr}")));
            }
        }
        Ok(Self { effects, preparations })
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn effects(&self) -> &[Operator] {
        &self.effects
    }

    pub fn preparations(&self) -> &[Operator] {
        &self.preparations
    }

    /// Signed outcome measure `μ_ρ(j) = Tr[M_j ρ]`.
    pub fn outcome_measure(&self, rho: &Operator) -> Vec<f64> {
        self.effects.iter().map(|e| e.trace_product(rho).re).collect()
    }

    /// `ρ ↦ Σⱼ Tr[Mⱼρ]·ρⱼ`.
    pub fn to_supermap(&self) -> Result<SuperMap> {
        let d = self.effects[0].rows();
        let d_out = self.preparations[0].rows();
        SuperMap::from_action(d, d_out, |x| {
            self.effects
                .iter()
                .zip(&self.preparations)
                .fold(Operator::zeros(d_out, d_out), |acc, (e, p)| &acc + &p.scale(e.trace_product(x)))
        })
    }
}

fn check_rank_one(psi: &Operator, d: usize) -> Result<()> {
    if psi.rows() != d || psi.cols() != d {
        return Err(Error::DimensionMismatch(format!("ψ must be {d}x{d}")));
    }
    let defect =
        psi.matmul(psi).max_abs_diff(psi).max(psi.hermiticity_defect()).max((psi.trace() - C64::new(1.0, 0.0)).norm());
    if defect > 1e-9 {
        return Err(Error::NotProjector(defect));
    }
    Ok(())
}

/// `ρ_ψ = ½[(d+2)ψ − I]`.
pub fn rho_psi(psi: &Operator, d: usize) -> Result<Operator> {
    check_rank_one(psi, d)?;
    Ok(rho_psi_unchecked(psi, d))
}

fn rho_psi_unchecked(psi: &Operator, d: usize) -> Operator {
    (&psi.scale_re(d as f64 + 2.0) - &Operator::identity(d)).scale_re(0.5)
}

/// `M_ψ = d·ρ_ψ`.
pub fn m_psi(psi: &Operator, d: usize) -> Result<Operator> {
    Ok(rho_psi(psi, d)?.scale_re(d as f64))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentOperator {
    pub order: usize,
    pub operator: Operator,
}

/// `γ₁₂⊗I₃`, `I₁⊗γ₂₃` and `γ₁₃⊗I₂ = (γ₁₂⊗I₃)(I₁⊗γ₂₃)(γ₁₂⊗I₃)`.
fn transpositions(d: usize) -> [Operator; 3] {
    let g12 = kron(&Operator::swap(d), &Operator::identity(d));
    let g23 = kron(&Operator::identity(d), &Operator::swap(d));
    let g13 = g12.matmul(&g23).matmul(&g12);
    [g12, g23, g13]
}

/// `∫ ψ^{⊗k} dψ` over Haar-random pure states, `k ∈ {1, 2, 3}`.
pub fn moment_operator(d: usize, order: usize) -> Result<MomentOperator> {
    require_dim(d)?;
    let df = d as f64;
    let operator = match order {
        1 => Operator::identity(d).scale_re(1.0 / df),
        2 => (&Operator::identity(d * d) + &Operator::swap(d)).scale_re(1.0 / (df * (df + 1.0))),
        3 => {
            let [g12, g23, g13] = transpositions(d);
            let odd = &(&g12 + &g23) + &g13;
            let even = g12.matmul(&odd);
            (&odd + &even).scale_re(1.0 / (df * (df + 1.0) * (df + 2.0)))
        }
        _ => return Err(Error::InvalidArgument(format!("moment order {order} not in 1..=3"))),
    };
    Ok(MomentOperator { order, operator })
}

/// `p = 4(d+1)/(d+2)²`.
pub fn mixing_weight(d: usize) -> f64 {
    let df = d as f64;
    4.0 * (df + 1.0) / ((df + 2.0) * (df + 2.0))
}

/// Jamiołkowski operator `(d/8)(a³J₃ − a²J₂ + aJ₁ − J₀)`, `a = d+2`.
pub fn mp_jamiolkowski(d: usize) -> Result<Operator> {
    require_dim(d)?;
    let a = d as f64 + 2.0;
    let id = Operator::identity(d);
    let j3 = moment_operator(d, 3)?.operator;
    let m2 = moment_operator(d, 2)?.operator;
    let m1 = moment_operator(d, 1)?.operator;
    let g12 = kron(&Operator::swap(d), &id);
    // ψ⊗I⊗ψ is the (1,2)-conjugate of I⊗ψ⊗ψ
    let left = kron(&id, &m2);
    let j2 = &(&left + &g12.conjugate(&left)) + &kron(&m2, &id);
    let j1 = &(&kron_all(&[&m1, &id, &id]) + &kron_all(&[&id, &m1, &id])) + &kron_all(&[&id, &id, &m1]);
    let j0 = Operator::identity(d * d * d);
    let mut j = j3.scale_re(a * a * a);
    j -= &j2.scale_re(a * a);
    j += &j1.scale_re(a);
    j -= &j0;
    Ok(j.scale_re(d as f64 / 8.0))
}

/// The virtual measure-and-prepare map `ρ ↦ ∫ Tr[M_ψρ] ρ_ψ⊗ρ_ψ dψ`.
pub fn exact_mp_map(d: usize) -> Result<SuperMap> {
    SuperMap::from_jamiolkowski(d, d * d, &mp_jamiolkowski(d)?)
}

/// `ρ ↦ Tr[ρ]·(I/d ⊗ I/d)`.
pub fn depolarizing_mp(d: usize) -> Result<SuperMap> {
    require_dim(d)?;
    let out = Operator::identity(d * d).scale_re(1.0 / (d * d) as f64);
    SuperMap::from_action(d, d * d, |x| out.scale(x.trace()))
}

/// Max Choi entry of `C(B) − p·C(M) − (1−p)·C(M′)`.
pub fn verify_theorem3(d: usize) -> Result<f64> {
    let p = mixing_weight(d);
    let mix = SuperMap::linear_combination(&[(p, &exact_mp_map(d)?), (1.0 - p, &depolarizing_mp(d)?)])?;
    Ok(canonical_b(d)?.max_abs_diff(&mix))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryEstimate {
    pub row: usize,
    pub col: usize,
    pub re: SamplingEstimate,
    pub im: SamplingEstimate,
}

/// Running entrywise estimates after each sampling block.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpSampling {
    pub dim: usize,
    pub n_samples: u64,
    /// `blocks[b]` holds the merged estimate over blocks `0..=b`.
    pub blocks: Vec<Vec<EntryEstimate>>,
}

impl MpSampling {
    pub fn final_estimates(&self) -> &[EntryEstimate] {
        self.blocks.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn mean(&self) -> Operator {
        let n = self.dim * self.dim;
        let mut out = Operator::zeros(n, n);
        for e in self.final_estimates() {
            out[(e.row, e.col)] = C64::new(e.re.mean, e.im.mean);
        }
        out
    }

    /// Largest entrywise `|mean − exact|/stderr`; entries with zero
    /// standard error must match exactly.
    pub fn max_z_score(&self, exact: &Operator) -> f64 {
        let mut worst = 0.0f64;
        for e in self.final_estimates() {
            let want = exact[(e.row, e.col)];
            for (est, w) in [(&e.re, want.re), (&e.im, want.im)] {
                let z = SamplingEstimate { exact: Some(w), ..*est }.z_score().unwrap_or(0.0);
                worst = worst.max(if est.stderr == 0.0 && (est.mean - w).abs() < 1e-12 { 0.0 } else { z.abs() });
            }
        }
        worst
    }

    pub fn median_stderr(&self) -> f64 {
        let mut s: Vec<f64> =
            self.final_estimates().iter().flat_map(|e| [e.re.stderr, e.im.stderr]).filter(|&x| x > 0.0).collect();
        if s.is_empty() {
            return 0.0;
        }
        s.sort_by(f64::total_cmp);
        s[s.len() / 2]
    }

    /// Columns `sample_block, entry_row, entry_col, re_mean, im_mean,
    /// re_stderr, im_stderr`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["sample_block", "entry_row", "entry_col", "re_mean", "im_mean", "re_stderr", "im_stderr"])?;
        for (b, block) in self.blocks.iter().enumerate() {
            for e in block {
                w.write_record(&[
                    b.to_string(),
                    e.row.to_string(),
                    e.col.to_string(),
                    e.re.mean.to_string(),
                    e.im.mean.to_string(),
                    e.re.stderr.to_string(),
                    e.im.stderr.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Monte-Carlo estimate of `M(ρ)` from the integral over Haar `ψ`.
pub fn mc_mp_apply(rho: &Operator, d: usize, n_samples: usize, rng: &mut Rng) -> Result<MpSampling> {
    require_dim(d)?;
    if n_samples < 2 {
        return Err(Error::InvalidArgument("need at least 2 samples".into()));
    }
    if rho.rows() != d || rho.cols() != d {
        return Err(Error::DimensionMismatch(format!("ρ must be {d}x{d}")));
    }
    let defect = rho.hermiticity_defect();
    if defect > 1e-9 {
        return Err(Error::NotHermitian(defect));
    }
    let n_out = d * d;
    let entries = n_out * n_out;
    let streams = rng.split(MC_BLOCKS);
    let per_block: Vec<usize> =
        (0..MC_BLOCKS).map(|b| n_samples / MC_BLOCKS + usize::from(b < n_samples % MC_BLOCKS)).collect();

    let partials: Vec<Vec<(RunningStats, RunningStats)>> = streams
        .into_par_iter()
        .zip(per_block)
        .map(|(mut r, count)| {
            let mut acc = vec![(RunningStats::new(), RunningStats::new()); entries];
            for _ in 0..count {
                let psi = random_pure(d, &mut r);
                let rp = rho_psi_unchecked(&psi, d);
                let weight = rp.trace_product(rho).re * d as f64;
                let sample = kron(&rp, &rp);
                for (slot, z) in acc.iter_mut().zip(sample.as_slice()) {
                    slot.0.push(weight * z.re);
                    slot.1.push(weight * z.im);
                }
            }
            acc
        })
        .collect();

    let mut merged = vec![(RunningStats::new(), RunningStats::new()); entries];
    let mut blocks = Vec::with_capacity(MC_BLOCKS);
    for part in &partials {
        for (m, p) in merged.iter_mut().zip(part) {
            m.0.merge(&p.0);
            m.1.merge(&p.1);
        }
        blocks.push(
            merged
                .iter()
                .enumerate()
                .map(|(k, (re, im))| EntryEstimate {
                    row: k / n_out,
                    col: k % n_out,
                    re: re.estimate(None),
                    im: im.estimate(None),
                })
                .collect(),
        );
    }
    Ok(MpSampling { dim: d, n_samples: n_samples as u64, blocks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densemat::{random_density, Keep};

    #[test]
    fn rho_psi_qubit() {
        let r = rho_psi(&Operator::unit(2, 0, 0), 2).unwrap();
        assert!(r.max_abs_diff(&Operator::from_real_diag(&[1.5, -0.5])) < 1e-15);
        assert!(rho_psi(&Operator::identity(2), 2).is_err());
        let m = m_psi(&Operator::unit(3, 1, 1), 3).unwrap();
        assert!((m.trace().re - 3.0).abs() < 1e-14);
    }

    #[test]
    fn moments_match_permutation_sums() {
        for d in 2..=3 {
            let df = d as f64;
            let perms = [[0, 1, 2], [1, 0, 2], [0, 2, 1], [2, 1, 0], [1, 2, 0], [2, 0, 1]];
            let sum =
                perms.iter().fold(Operator::zeros(d * d * d, d * d * d), |acc, p| &acc + &Operator::permutation(d, p));
            let want = sum.scale_re(1.0 / (df * (df + 1.0) * (df + 2.0)));
            assert!(moment_operator(d, 3).unwrap().operator.max_abs_diff(&want) < 1e-14);
        }
        let m2 = moment_operator(2, 2).unwrap().operator;
        assert!(m2.max_abs_diff(&(&Operator::identity(4) + &Operator::swap(2)).scale_re(1.0 / 6.0)) < 1e-15);
        assert!(moment_operator(2, 4).is_err());
    }

    #[test]
    fn moments_contract_to_lower_order() {
        for d in 2..=4 {
            for k in 2..=3 {
                let hi = moment_operator(d, k).unwrap().operator;
                let lo = moment_operator(d, k - 1).unwrap().operator;
                let lo_dim = lo.rows();
                let reduced = crate::densemat::partial_trace(&hi, (lo_dim, d), Keep::First).unwrap();
                assert!(reduced.max_abs_diff(&lo) < 1e-14);
            }
        }
    }

    #[test]
    fn theorem3_identity() {
        for d in 2..=5 {
            assert!(verify_theorem3(d).unwrap() < 1e-10);
        }
        assert_eq!(mixing_weight(2), 0.75);
        assert!((mixing_weight(3) - 0.64).abs() < 1e-15);
        assert!((mixing_weight(5) - 24.0 / 49.0).abs() < 1e-15);
    }

    #[test]
    fn mp_map_is_hptp_not_cp() {
        let m = exact_mp_map(2).unwrap();
        assert!(m.is_hp(1e-12) && m.is_tp(1e-12));
        assert!(m.min_choi_eigenvalue().unwrap() < -1e-3);
    }

    #[test]
    fn mp_marginals_agree() {
        let mut rng = Rng::new(80, 0);
        let m = exact_mp_map(3).unwrap();
        for _ in 0..5 {
            let out = m.apply(&random_density(3, &mut rng)).unwrap();
            let a = crate::densemat::partial_trace(&out, (3, 3), Keep::First).unwrap();
            let b = crate::densemat::partial_trace(&out, (3, 3), Keep::Second).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-12);
        }
    }

    #[test]
    fn depolarizing_jamiolkowski() {
        for d in 2..=3 {
            let m = depolarizing_mp(d).unwrap();
            let want = Operator::identity(d * d * d).scale_re(1.0 / (d * d) as f64);
            assert!(m.jamiolkowski().max_abs_diff(&want) < 1e-15);
            assert!(m.is_cptp(1e-12));
        }
    }

    #[test]
    fn finite_hovm_validation() {
        let z0 = Operator::unit(2, 0, 0);
        let z1 = Operator::unit(2, 1, 1);
        // negative effects are allowed as long as they sum to I
        let e0 = Operator::from_real_diag(&[2.0, -1.0]);
        let e1 = Operator::from_real_diag(&[-1.0, 2.0]);
        let h = FiniteHOVM::new(vec![e0.clone(), e1], vec![z0.clone(), z1.clone()]).unwrap();
        let mu = h.outcome_measure(&Operator::identity(2).scale_re(0.5));
        assert!((mu.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(h.to_supermap().unwrap().is_tp(1e-12));
        assert!(FiniteHOVM::new(vec![e0.clone(), z1.clone()], vec![z0.clone(), z1.clone()]).is_err());
        assert!(FiniteHOVM::new(vec![z0.clone(), z1.clone()], vec![z0.clone(), z1.scale_re(2.0)]).is_err());
        assert!(FiniteHOVM::new(vec![], vec![]).is_err());
    }

    #[test]
    fn mc_estimate_small_run() {
        let mut rng = Rng::new(81, 0);
        let rho = Operator::unit(2, 0, 0);
        let est = mc_mp_apply(&rho, 2, 4000, &mut rng).unwrap();
        assert_eq!(est.blocks.len(), MC_BLOCKS);
        let exact = exact_mp_map(2).unwrap().apply(&rho).unwrap();
        assert!(est.max_z_score(&exact) < 6.0);
        let mut buf = Vec::new();
        est.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("sample_block,entry_row,entry_col,re_mean,im_mean,re_stderr,im_stderr"));
        assert_eq!(text.lines().count(), 1 + MC_BLOCKS * 16);
        assert!(mc_mp_apply(&rho, 2, 1, &mut rng).is_err());
    }
}
