//! Quasi-probability estimation of `Tr[L(ρ)·O]` for an HPTP map
//! `L = Σᵢ wᵢ Eᵢ` with CPTP `Eᵢ`: draw `i` with probability `|wᵢ|/‖w‖₁`
//! and record `‖w‖₁·sign(wᵢ)·Tr[Eᵢ(ρ)O]`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::densemat::{eigh, kron, Operator, Rng};
use crate::error::{Error, Result};
use crate::stats::{RunningStats, SamplingEstimate};
use crate::supermap::{AffineDecomposition, SuperMap};

const BLOCKS: usize = 64;
const CPTP_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct QuasiSampler {
    components: Vec<(f64, SuperMap)>,
    l1_weight: f64,
}

impl QuasiSampler {
    /// Zero-weight components are dropped.
    pub fn new(components: Vec<(f64, SuperMap)>) -> Result<Self> {
        let components: Vec<(f64, SuperMap)> = components.into_iter().filter(|(w, _)| *w != 0.0).collect();
        let Some((_, first)) = components.first() else {
            return Err(Error::InvalidArgument("sampler needs a nonzero weight".into()));
        };
        let shape = (first.d_in(), first.d_out());
        for (i, (w, ch)) in components.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::InvalidArgument(format!("weight {i} is not finite")));
            }
            if (ch.d_in(), ch.d_out()) != shape {
                return Err(Error::DimensionMismatch("components differ in shape".into()));
            }
            if !ch.is_cptp(CPTP_TOL) {
                return Err(Error::NotCptp(format!("component {i}")));
            }
        }
        let l1_weight = components.iter().map(|(w, _)| w.abs()).sum();
        Ok(Self { components, l1_weight })
    }

    /// Like [`QuasiSampler::new`] but also requires `Σ wᵢ C(Eᵢ) = C(target)`.
    pub fn for_target(target: &SuperMap, components: Vec<(f64, SuperMap)>) -> Result<Self> {
        let s = Self::new(components)?;
        let err = s.reconstruct()?.max_abs_diff(target);
        if err > 1e-10 {
            return Err(Error::InvalidArgument(format!("components reconstruct the target only within {err:.3e}")));
        }
        Ok(s)
    }

    pub fn components(&self) -> &[(f64, SuperMap)] {
        &self.components
    }

    pub fn l1_weight(&self) -> f64 {
        self.l1_weight
    }

    pub fn reconstruct(&self) -> Result<SuperMap> {
        let terms: Vec<(f64, &SuperMap)> = self.components.iter().map(|(w, m)| (*w, m)).collect();
        SuperMap::linear_combination(&terms)
    }

    /// `Σᵢ wᵢ Tr[Eᵢ(ρ)O]`, i.e. the estimator mean summed over outcomes.
    pub fn exact_expectation(&self, rho: &Operator, obs: &Operator) -> Result<f64> {
        let mut acc = 0.0;
        for (w, ch) in &self.components {
            acc += w * ch.apply(rho)?.trace_product(obs).re;
        }
        Ok(acc)
    }
}

pub fn sampler_from_decomposition(dec: &AffineDecomposition) -> Result<QuasiSampler> {
    QuasiSampler::new(vec![(dec.plus_weight, dec.plus.clone()), (-dec.minus_weight, dec.minus.clone())])
}

pub fn overhead(s: &QuasiSampler) -> f64 {
    s.l1_weight()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleMode {
    /// Each draw contributes `Tr[Eᵢ(ρ)O]` exactly.
    Exact,
    /// Each draw also measures `O` once in its eigenbasis.
    ShotNoise,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TracePoint {
    pub n: u64,
    pub running_mean: f64,
    pub running_stderr: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingRun {
    pub estimate: SamplingEstimate,
    pub l1_weight: f64,
    pub mode: SampleMode,
    pub seed: u64,
    pub trace: Vec<TracePoint>,
}

impl SamplingRun {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "running_mean", "running_stderr"])?;
        for p in &self.trace {
            w.write_record(&[p.n.to_string(), p.running_mean.to_string(), p.running_stderr.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-component outcome table: exact value, and the spectral distribution
/// of `O` in the state `Eᵢ(ρ)` for shot-noise draws.
struct Component {
    scaled_sign: f64,
    value: f64,
    outcomes: Vec<f64>,
    cumulative: Vec<f64>,
}

fn pick(cumulative: &[f64], u: f64) -> usize {
    cumulative.iter().position(|&c| u < c).unwrap_or(cumulative.len() - 1)
}

pub fn estimate_expectation(
    s: &QuasiSampler,
    rho: &Operator,
    o1: &Operator,
    o2: &Operator,
    n: usize,
    rng: &mut Rng,
) -> Result<SamplingEstimate> {
    Ok(estimate_observable(s, rho, &kron(o1, o2), n, SampleMode::Exact, rng)?.estimate)
}

pub fn estimate_observable(
    s: &QuasiSampler,
    rho: &Operator,
    obs: &Operator,
    n: usize,
    mode: SampleMode,
    rng: &mut Rng,
) -> Result<SamplingRun> {
    if n < 2 {
        return Err(Error::InvalidArgument("need at least 2 samples".into()));
    }
    let defect = obs.hermiticity_defect();
    if defect > 1e-9 {
        return Err(Error::NotHermitian(defect));
    }
    let (_, first) = &s.components[0];
    if obs.rows() != first.d_out() || obs.cols() != first.d_out() {
        return Err(Error::DimensionMismatch(format!("observable must be {0}x{0}", first.d_out())));
    }
    let spectral = eigh(obs)?;
    let mut table = Vec::with_capacity(s.components.len());
    let mut weights = Vec::with_capacity(s.components.len());
    for (w, ch) in &s.components {
        let out = ch.apply(rho)?;
        let value = out.trace_product(obs).re;
        let mut cumulative = Vec::with_capacity(spectral.values.len());
        let mut acc = 0.0;
        for k in 0..spectral.values.len() {
            let v = spectral.vectors.column(k);
            let p: f64 = (0..v.len())
                .map(|i| (v[i].conj() * (0..v.len()).map(|j| out[(i, j)] * v[j]).sum::<crate::densemat::C64>()).re)
                .sum();
            acc += p.max(0.0);
            cumulative.push(acc);
        }
        cumulative.iter_mut().for_each(|c| *c /= acc.max(f64::MIN_POSITIVE));
        table.push(Component {
            scaled_sign: s.l1_weight * w.signum(),
            value,
            outcomes: spectral.values.clone(),
            cumulative,
        });
        weights.push(w.abs() / s.l1_weight);
    }
    let mut choose = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in &weights {
        acc += w;
        choose.push(acc);
    }

    let seed = rng.seed();
    let streams = rng.split(BLOCKS);
    let counts: Vec<usize> = (0..BLOCKS).map(|b| n / BLOCKS + usize::from(b < n % BLOCKS)).collect();
    let partials: Vec<RunningStats> = streams
        .into_par_iter()
        .zip(counts)
        .map(|(mut r, count)| {
            let mut st = RunningStats::new();
            for _ in 0..count {
                let c = &table[pick(&choose, r.uniform())];
                let x = match mode {
                    SampleMode::Exact => c.value,
                    SampleMode::ShotNoise => c.outcomes[pick(&c.cumulative, r.uniform())],
                };
                st.push(c.scaled_sign * x);
            }
            st
        })
        .collect();

    let mut total = RunningStats::new();
    let mut trace = Vec::with_capacity(BLOCKS);
    for p in &partials {
        total.merge(p);
        trace.push(TracePoint { n: total.count(), running_mean: total.mean(), running_stderr: total.stderr() });
    }
    let exact = s.exact_expectation(rho, obs)?;
    Ok(SamplingRun { estimate: total.estimate(Some(exact)), l1_weight: s.l1_weight, mode, seed, trace })
}
