use super::{require_hp, DiamondResult};
use crate::densemat::{eigh, random_pure_vector, trace_norm, Operator, Rng, C64};
use crate::error::Result;
use crate::supermap::SuperMap;

const MAX_STEPS: usize = 1000;

/// Alternating maximization of `Tr[Z·(id⊗L)(|v⟩⟨v|)]` over sign operators `Z`
/// and unit vectors `v`. Each half-step can only increase the objective.
fn ascend(m: &SuperMap, adj: &SuperMap, mut v: Vec<C64>) -> Result<(f64, Vec<C64>)> {
    let d = m.d_in();
    let mut value = f64::NEG_INFINITY;
    for _ in 0..MAX_STEPS {
        let image = m.apply_local(&Operator::projector(&v), d)?.hermitian_part();
        let e = eigh(&image)?;
        let current: f64 = e.values.iter().map(|x| x.abs()).sum();
        if current <= value + 1e-14 * value.abs().max(1.0) {
            value = value.max(current);
            break;
        }
        value = current;
        let sign = e.reconstruct_with(|x| if x >= 0.0 { 1.0 } else { -1.0 });
        let pulled = adj.apply_local(&sign, d)?.hermitian_part();
        v = eigh(&pulled)?.vectors.column(0);
    }
    Ok((value, v))
}

/// Best local optimum over `restarts` Haar-random pure starts plus the
/// maximally entangled start `Ω/d`.
pub fn diamond_lower_search(m: &SuperMap, restarts: usize, rng: &mut Rng) -> Result<DiamondResult> {
    require_hp(m)?;
    let d = m.d_in();
    let adj = m.hs_adjoint();
    let mut starts = Vec::with_capacity(restarts + 1);
    let mut omega = vec![C64::new(0.0, 0.0); d * d];
    for i in 0..d {
        omega[i * d + i] = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    }
    starts.push(omega);
    for _ in 0..restarts {
        starts.push(random_pure_vector(d * d, rng));
    }

    let mut best = (f64::NEG_INFINITY, Vec::new());
    for s in starts {
        let (val, v) = ascend(m, &adj, s)?;
        if val > best.0 {
            best = (val, v);
        }
    }
    let witness_state = Operator::projector(&best.1);
    let value = trace_norm(&m.apply_local(&witness_state, d)?.hermitian_part())?;
    Ok(DiamondResult {
        method: "ascent".into(),
        value,
        lower_bound: value,
        upper_bound: None,
        witness_state,
        witness_value: value,
        iterations: restarts + 1,
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::broadcast::canonical_b;

    #[test]
    fn identity_channel() {
        let mut rng = Rng::new(70, 0);
        let r = diamond_lower_search(&SuperMap::identity(3), 4, &mut rng).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn canonical_b_reaches_d() {
        let mut rng = Rng::new(71, 0);
        for d in 2..=3 {
            let r = diamond_lower_search(&canonical_b(d).unwrap(), 32, &mut rng).unwrap();
            assert!((r.value - d as f64).abs() < 1e-6, "{}", r.value);
        }
    }

    #[test]
    fn maximally_entangled_witness_for_b() {
        let d = 3;
        let b = canonical_b(d).unwrap();
        let omega = Operator::omega(d).scale_re(1.0 / d as f64);
        let v = trace_norm(&b.apply_local(&omega, d).unwrap()).unwrap();
        assert!((v - d as f64).abs() < 1e-10);
    }

    #[test]
    fn ascent_is_monotone() {
        let mut rng = Rng::new(72, 0);
        let m = canonical_b(2).unwrap().sub(&crate::broadcast::cloner(2).unwrap()).unwrap();
        let adj = m.hs_adjoint();
        let mut v = random_pure_vector(4, &mut rng);
        let mut prev = f64::NEG_INFINITY;
        for _ in 0..20 {
            let (val, next) = ascend_one(&m, &adj, v);
            assert!(val >= prev - 1e-12);
            prev = val;
            v = next;
        }
    }

    fn ascend_one(m: &SuperMap, adj: &SuperMap, v: Vec<C64>) -> (f64, Vec<C64>) {
        let image = m.apply_local(&Operator::projector(&v), 2).unwrap().hermitian_part();
        let e = eigh(&image).unwrap();
        let val = e.values.iter().map(|x| x.abs()).sum();
        let sign = e.reconstruct_with(|x| if x >= 0.0 { 1.0 } else { -1.0 });
        let pulled = adj.apply_local(&sign, 2).unwrap().hermitian_part();
        (val, eigh(&pulled).unwrap().vectors.column(0))
    }
}
