//! Diamond norm `‖L‖◇ = max_ω ‖(id ⊗ L)(ω)‖₁` of Hermitian-preserving maps.

mod ascent;
mod sdp;

pub use ascent::diamond_lower_search;
pub use sdp::diamond_sdp;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::densemat::{Operator, Rng};
use crate::error::{Error, Result};
use crate::supermap::{AffineDecomposition, SuperMap};

/// Default number of Haar-random restarts for the ascent.
pub const DEFAULT_RESTARTS: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdpConfig {
    /// Target gap between the certified primal and dual bounds.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Initial ADMM penalty; adapted by residual balancing.
    pub penalty: f64,
    pub over_relaxation: f64,
}

impl Default for SdpConfig {
    fn default() -> Self {
        Self { tolerance: 1e-5, max_iterations: 50_000, penalty: 1.0, over_relaxation: 1.6 }
    }
}

impl SdpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidArgument("SDP tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("SDP needs at least one iteration".into()));
        }
        if self.penalty.is_nan() || self.penalty <= 0.0 {
            return Err(Error::InvalidArgument("SDP penalty must be positive".into()));
        }
        if !(1.0..2.0).contains(&self.over_relaxation) {
            return Err(Error::InvalidArgument("over-relaxation must lie in [1, 2)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiamondResult {
    pub method: String,
    pub value: f64,
    pub lower_bound: f64,
    /// Absent for methods that only bound from below.
    pub upper_bound: Option<f64>,
    /// Bipartite state on reference ⊗ input.
    pub witness_state: Operator,
    /// `‖(id ⊗ L)(witness)‖₁`.
    pub witness_value: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) fn require_hp(m: &SuperMap) -> Result<()> {
    let defect = m.choi().hermiticity_defect();
    if defect > 1e-9 * m.choi().max_abs().max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    Ok(())
}

/// `‖(id ⊗ L)(|v⟩⟨v|)‖₁` for `v` on reference ⊗ input.
pub fn witness_value(m: &SuperMap, state: &Operator) -> Result<f64> {
    let out = m.apply_local(state, m.d_in())?;
    crate::densemat::trace_norm(&out.hermitian_part())
}

/// `λ₊ + λ₋`, an upper bound on the diamond norm of the represented map.
pub fn hptp_upper(dec: &AffineDecomposition) -> Result<f64> {
    for (label, m) in [("plus", &dec.plus), ("minus", &dec.minus)] {
        if !m.is_cptp(1e-8) {
            return Err(Error::NotCptp(format!("{label} component of the decomposition")));
        }
    }
    Ok(dec.l1_weight())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanEntry {
    pub index: usize,
    pub gap: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub converged: bool,
}

/// `‖m − E‖◇` for every candidate channel, ascending, ties by index.
pub fn closest_channel_scan(m: &SuperMap, candidates: &[SuperMap], cfg: &SdpConfig) -> Result<Vec<ScanEntry>> {
    for (i, c) in candidates.iter().enumerate() {
        if !c.is_cptp(1e-8) {
            return Err(Error::NotCptp(format!("candidate {i}")));
        }
    }
    let mut out = candidates
        .par_iter()
        .enumerate()
        .map(|(index, e)| {
            let r = diamond_sdp(&m.sub(e)?, cfg)?;
            Ok(ScanEntry {
                index,
                gap: r.value,
                lower_bound: r.lower_bound,
                upper_bound: r.upper_bound.unwrap_or(f64::INFINITY),
                converged: r.converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.gap.total_cmp(&b.gap).then(a.index.cmp(&b.index)));
    Ok(out)
}

/// A diamond-norm method selectable by name.
pub trait DiamondEstimator: Send + Sync {
    fn name(&self) -> &'static str;
    fn estimate(&self, m: &SuperMap, rng: &mut Rng) -> Result<DiamondResult>;
}

pub struct SdpEstimator {
    pub config: SdpConfig,
}

impl DiamondEstimator for SdpEstimator {
    fn name(&self) -> &'static str {
        "sdp"
    }

    fn estimate(&self, m: &SuperMap, _rng: &mut Rng) -> Result<DiamondResult> {
        diamond_sdp(m, &self.config)
    }
}

pub struct AscentEstimator {
    pub restarts: usize,
}

impl DiamondEstimator for AscentEstimator {
    fn name(&self) -> &'static str {
        "ascent"
    }

    fn estimate(&self, m: &SuperMap, rng: &mut Rng) -> Result<DiamondResult> {
        diamond_lower_search(m, self.restarts, rng)
    }
}

pub fn estimators(config: &SdpConfig) -> Vec<Box<dyn DiamondEstimator>> {
    vec![Box::new(SdpEstimator { config: config.clone() }), Box::new(AscentEstimator { restarts: DEFAULT_RESTARTS })]
}

pub fn estimator(name: &str, config: &SdpConfig) -> Option<Box<dyn DiamondEstimator>> {
    estimators(config).into_iter().find(|e| e.name() == name)
}

pub fn estimator_names() -> Vec<&'static str> {
    estimators(&SdpConfig::default()).iter().map(|e| e.name()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::broadcast::{antisym, canonical_b, cloner, spectral_decomposition};
    use crate::densemat::random_channel;

    #[test]
    fn config_validation() {
        assert!(SdpConfig::default().validate().is_ok());
        let bad = SdpConfig { over_relaxation: 2.0, ..SdpConfig::default() };
        assert!(bad.validate().is_err());
        let bad = SdpConfig { tolerance: 0.0, ..SdpConfig::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn hptp_upper_values() {
        for d in 2..=4 {
            let dec = spectral_decomposition(d).unwrap();
            assert_eq!(hptp_upper(&dec).unwrap(), d as f64);
            let diff = AffineDecomposition::new(
                (d as f64 - 1.0) / 2.0,
                cloner(d).unwrap(),
                (d as f64 - 1.0) / 2.0,
                antisym(d).unwrap(),
            )
            .unwrap();
            assert_eq!(hptp_upper(&diff).unwrap(), d as f64 - 1.0);
            let b_minus_bp = canonical_b(d).unwrap().sub(&cloner(d).unwrap()).unwrap();
            assert!(diff.reconstruct().max_abs_diff(&b_minus_bp) < 1e-12);
        }
        let mut rng = Rng::new(50, 0);
        let ch = random_channel(2, 2, &mut rng);
        assert_eq!(hptp_upper(&AffineDecomposition::trivial(ch)).unwrap(), 1.0);
        let bad = AffineDecomposition::trivial(canonical_b(2).unwrap());
        assert!(hptp_upper(&bad).is_err());
    }

    #[test]
    fn registry_lookup() {
        assert_eq!(estimator_names(), vec!["sdp", "ascent"]);
        assert!(estimator("sdp", &SdpConfig::default()).is_some());
        assert!(estimator("nope", &SdpConfig::default()).is_none());
    }
}
