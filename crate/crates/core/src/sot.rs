//! Quantum states over time `E⋆ρ` built from a broadcasting map.

use serde::{Deserialize, Serialize};

use crate::broadcast::{classical_bcl, decoherence, verify_uniqueness};
use crate::densemat::{
    haar_unitary, kron, partial_trace, random_channel, random_density, random_effect, Keep, Operator, Rng,
};
use crate::error::{Error, Result};
use crate::supermap::SuperMap;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SotSource {
    pub channel: SuperMap,
    pub input: Operator,
    pub broadcaster: SuperMap,
}

/// Operator on `S₁ ⊗ S₂` with its provenance.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateOverTime {
    pub operator: Operator,
    pub d1: usize,
    pub d2: usize,
    pub source: SotSource,
}

impl StateOverTime {
    pub fn first_marginal(&self) -> Operator {
        partial_trace(&self.operator, (self.d1, self.d2), Keep::First).expect("dims")
    }

    pub fn second_marginal(&self) -> Operator {
        partial_trace(&self.operator, (self.d1, self.d2), Keep::Second).expect("dims")
    }

    /// Max-entry violation of `Tr₂ = ρ` and `Tr₁ = E(ρ)`.
    pub fn marginal_residual(&self) -> Result<f64> {
        let rho = &self.source.input;
        let evolved = self.source.channel.apply(rho)?;
        let a = self.first_marginal();
        let b = self.second_marginal();
        if a.rows() != rho.rows() || b.rows() != evolved.rows() {
            return Ok(f64::INFINITY);
        }
        Ok(a.max_abs_diff(rho).max(b.max_abs_diff(&evolved)))
    }
}

/// A rule `(E, ρ) ↦ E⋆ρ`, selectable by name.
pub trait StarFunction: Send + Sync {
    fn name(&self) -> &'static str;
    fn broadcaster(&self) -> &SuperMap;
    fn star(&self, e: &SuperMap, rho: &Operator) -> Result<StateOverTime>;
}

fn check_inputs(b: &SuperMap, e: &SuperMap, rho: &Operator) -> Result<usize> {
    let d = b.d_in();
    if b.d_out() != d * d {
        return Err(Error::DimensionMismatch("broadcaster must map d -> d^2".into()));
    }
    if e.d_in() != d {
        return Err(Error::DimensionMismatch(format!("channel input is {}, broadcaster acts on {d}", e.d_in())));
    }
    if rho.rows() != d || rho.cols() != d {
        return Err(Error::DimensionMismatch(format!("state must be {d}x{d}")));
    }
    Ok(d)
}

/// `E⋆ρ = (id ⊗ E)(B(ρ))`.
#[derive(Clone, Debug)]
pub struct BroadcastStar {
    pub broadcaster: SuperMap,
}

impl StarFunction for BroadcastStar {
    fn name(&self) -> &'static str {
        "broadcast"
    }

    fn broadcaster(&self) -> &SuperMap {
        &self.broadcaster
    }

    fn star(&self, e: &SuperMap, rho: &Operator) -> Result<StateOverTime> {
        let d = check_inputs(&self.broadcaster, e, rho)?;
        let operator = e.apply_local(&self.broadcaster.apply(rho)?, d)?;
        Ok(StateOverTime {
            operator,
            d1: d,
            d2: e.d_out(),
            source: SotSource { channel: e.clone(), input: rho.clone(), broadcaster: self.broadcaster.clone() },
        })
    }
}

/// `(E ⊗ id)(B(ρ))`: the channel acts on the wrong copy. Kept as a
/// negative fixture; it is not a state over time function.
#[derive(Clone, Debug)]
pub struct WrongSideStar {
    pub broadcaster: SuperMap,
}

impl StarFunction for WrongSideStar {
    fn name(&self) -> &'static str {
        "wrong-side"
    }

    fn broadcaster(&self) -> &SuperMap {
        &self.broadcaster
    }

    fn star(&self, e: &SuperMap, rho: &Operator) -> Result<StateOverTime> {
        let d = check_inputs(&self.broadcaster, e, rho)?;
        let first = SuperMap::tensor(e, &SuperMap::identity(d));
        let operator = first.apply(&self.broadcaster.apply(rho)?)?;
        Ok(StateOverTime {
            operator,
            d1: e.d_out(),
            d2: d,
            source: SotSource { channel: e.clone(), input: rho.clone(), broadcaster: self.broadcaster.clone() },
        })
    }
}

pub fn star_functions(b: &SuperMap) -> Vec<Box<dyn StarFunction>> {
    vec![Box::new(BroadcastStar { broadcaster: b.clone() }), Box::new(WrongSideStar { broadcaster: b.clone() })]
}

pub fn star_function(name: &str, b: &SuperMap) -> Option<Box<dyn StarFunction>> {
    star_functions(b).into_iter().find(|s| s.name() == name)
}

/// `(id ⊗ E)(B(ρ))` with the canonical construction.
pub fn star(e: &SuperMap, rho: &Operator, b: &SuperMap) -> Result<StateOverTime> {
    BroadcastStar { broadcaster: b.clone() }.star(e, rho)
}

/// The broadcaster `ρ ↦ id⋆ρ` induced by a star function.
pub fn induced_broadcaster(s: &dyn StarFunction) -> Result<SuperMap> {
    let d = s.broadcaster().d_in();
    let id = SuperMap::identity(d);
    let mut failure = None;
    let m = SuperMap::from_action(d, d * d, |x| match s.star(&id, x) {
        Ok(t) => t.operator,
        Err(e) => {
            failure.get_or_insert(e);
            Operator::zeros(d * d, d * d)
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(m),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SotAxiomReport {
    pub marginal_residual: f64,
    pub covariance_residual: f64,
    pub permutation_residual: f64,
    pub classical_residual: f64,
    pub cases: usize,
    pub seed: u64,
    pub version: String,
}

impl SotAxiomReport {
    pub fn max_residual(&self) -> f64 {
        self.marginal_residual.max(self.covariance_residual).max(self.permutation_residual).max(self.classical_residual)
    }

    pub fn residuals(&self) -> [(&'static str, f64); 4] {
        [
            ("marginal", self.marginal_residual),
            ("covariance", self.covariance_residual),
            ("permutation", self.permutation_residual),
            ("classical", self.classical_residual),
        ]
    }
}

/// `E = D∘F∘D` with `F` a random channel: a classical stochastic map in the
/// computational basis, which commutes with decoherence.
fn classical_channel(d: usize, rng: &mut Rng) -> Result<SuperMap> {
    let dec = decoherence(d, &Operator::identity(d))?;
    let f = random_channel(d, d, rng);
    SuperMap::compose(&dec, &SuperMap::compose(&f, &dec)?)
}

pub fn check_sot_axioms(b: &SuperMap, n_cases: usize, rng: &mut Rng) -> Result<SotAxiomReport> {
    check_star_axioms(&BroadcastStar { broadcaster: b.clone() }, n_cases, rng)
}

/// Per case: one random channel and state for the marginals; Haar `U, V`
/// with `E′ = V∘E∘U⁻¹` for covariance; `E = I` for permutation
/// invariance; and a classical channel for classical consistency.
pub fn check_star_axioms(s: &dyn StarFunction, n_cases: usize, rng: &mut Rng) -> Result<SotAxiomReport> {
    let d = s.broadcaster().d_in();
    let seed = rng.seed();
    let id = SuperMap::identity(d);
    let swap = Operator::swap(d);
    let dec = decoherence(d, &Operator::identity(d))?;
    let bcl = classical_bcl(d, &Operator::identity(d))?;
    let dd = SuperMap::tensor(&dec, &dec);
    let mut report = SotAxiomReport {
        marginal_residual: 0.0,
        covariance_residual: 0.0,
        permutation_residual: 0.0,
        classical_residual: 0.0,
        cases: n_cases,
        seed,
        version: crate::VERSION.to_string(),
    };
    for _ in 0..n_cases {
        let rho = random_density(d, rng);
        let e = random_channel(d, d, rng);
        let sot = s.star(&e, &rho)?;
        report.marginal_residual = report.marginal_residual.max(sot.marginal_residual()?);

        let u = haar_unitary(d, rng);
        let v = haar_unitary(d, rng);
        let e_prime = SuperMap::compose(
            &SuperMap::unitary_conjugation(&v),
            &SuperMap::compose(&e, &SuperMap::unitary_conjugation(&u.adjoint()))?,
        )?;
        let lhs = kron(&u, &v).conjugate(&sot.operator);
        let rhs = s.star(&e_prime, &u.conjugate(&rho))?.operator;
        report.covariance_residual = report.covariance_residual.max(lhs.max_abs_diff(&rhs));

        let plain = s.star(&id, &rho)?.operator;
        report.permutation_residual = report.permutation_residual.max(swap.conjugate(&plain).max_abs_diff(&plain));

        let ec = classical_channel(d, rng)?;
        let lhs = dd.apply(&s.star(&ec, &dec.apply(&rho)?)?.operator)?;
        let rhs = ec.apply_local(&bcl.apply(&rho)?, d)?;
        report.classical_residual = report.classical_residual.max(lhs.max_abs_diff(&rhs));
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostprocessingReport {
    /// `max |(F∘E)⋆ρ − (id⊗F)(E⋆ρ)|`.
    pub postprocessing_residual: f64,
    /// `max |Tr₂[(I⊗F*(P))(E⋆ρ)] − Tr₂[(I⊗P)((F∘E)⋆ρ)]|` over `P` and `I − P`.
    pub heisenberg_residual: f64,
    /// `max |E⋆(pρ₁ + (1−p)ρ₂) − pE⋆ρ₁ − (1−p)E⋆ρ₂|`.
    pub convex_linearity_residual: f64,
    pub cases: usize,
    pub seed: u64,
}

impl PostprocessingReport {
    /// Post-processing and Heisenberg consistency hold or fail together.
    pub fn consistent(&self, tol: f64) -> bool {
        (self.postprocessing_residual <= tol) == (self.heisenberg_residual <= tol)
    }
}

pub fn check_postprocessing_equivalence(b: &SuperMap, n_cases: usize, rng: &mut Rng) -> Result<PostprocessingReport> {
    check_star_postprocessing(&BroadcastStar { broadcaster: b.clone() }, n_cases, rng)
}

fn trace_second_against(sot: &Operator, d1: usize, d2: usize, effect: &Operator) -> Operator {
    let weighted = kron(&Operator::identity(d1), effect).matmul(sot);
    partial_trace(&weighted, (d1, d2), Keep::First).expect("dims")
}

pub fn check_star_postprocessing(s: &dyn StarFunction, n_cases: usize, rng: &mut Rng) -> Result<PostprocessingReport> {
    let d = s.broadcaster().d_in();
    let mut report = PostprocessingReport {
        postprocessing_residual: 0.0,
        heisenberg_residual: 0.0,
        convex_linearity_residual: 0.0,
        cases: n_cases,
        seed: rng.seed(),
    };
    for _ in 0..n_cases {
        let rho = random_density(d, rng);
        let e = random_channel(d, d, rng);
        let f = random_channel(d, d, rng);
        let fe = SuperMap::compose(&f, &e)?;
        let sot = s.star(&e, &rho)?;
        let composed = s.star(&fe, &rho)?;
        let post = SuperMap::tensor(&SuperMap::identity(sot.d1), &f).apply(&sot.operator)?;
        report.postprocessing_residual = report.postprocessing_residual.max(post.max_abs_diff(&composed.operator));

        let p = random_effect(d, rng);
        let f_adj = f.hs_adjoint();
        for effect in [p.clone(), &Operator::identity(d) - &p] {
            let lhs = trace_second_against(&sot.operator, sot.d1, sot.d2, &f_adj.apply(&effect)?);
            let rhs = trace_second_against(&composed.operator, composed.d1, composed.d2, &effect);
            report.heisenberg_residual = report.heisenberg_residual.max(lhs.max_abs_diff(&rhs));
        }

        let rho2 = random_density(d, rng);
        let w = rng.uniform();
        let mixed = &rho.scale_re(w) + &rho2.scale_re(1.0 - w);
        let lhs = s.star(&e, &mixed)?.operator;
        let rhs = &sot.operator.scale_re(w) + &s.star(&e, &rho2)?.operator.scale_re(1.0 - w);
        report.convex_linearity_residual = report.convex_linearity_residual.max(lhs.max_abs_diff(&rhs));
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Theorem4Report {
    pub axioms: SotAxiomReport,
    pub passes_axioms: bool,
    /// Max Choi entry between `ρ ↦ id⋆ρ` and the solution of the
    /// uniqueness system; absent when the axioms fail.
    pub distance_to_solution: Option<f64>,
    pub agrees: bool,
}

/// If `s` passes the axioms to 1e-8, its induced broadcaster must coincide
/// with the unique solution of the broadcaster constraints.
pub fn theorem4_pipeline(
    s: &dyn StarFunction,
    n_cases: usize,
    n_unitaries: usize,
    rng: &mut Rng,
) -> Result<Theorem4Report> {
    let axioms = check_star_axioms(s, n_cases, rng)?;
    let passes_axioms = axioms.max_residual() < 1e-8;
    if !passes_axioms {
        return Ok(Theorem4Report { axioms, passes_axioms, distance_to_solution: None, agrees: false });
    }
    let d = s.broadcaster().d_in();
    let cert = verify_uniqueness(d, n_unitaries, rng)?;
    let solution = cert.solution.as_ref().expect("solver always returns a solution");
    let distance = induced_broadcaster(s)?.max_abs_diff(solution);
    Ok(Theorem4Report {
        axioms,
        passes_axioms,
        distance_to_solution: Some(distance),
        agrees: cert.is_unique() && distance < 1e-6,
    })
}
