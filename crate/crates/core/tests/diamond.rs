use vbcast::broadcast::{
    antisym, antisymmetric_projector, canonical_b, cloner, spectral_decomposition, symmetric_projector,
};
use vbcast::densemat::{haar_unitary, random_channel, Rng};
use vbcast::diamond::{
    closest_channel_scan, diamond_lower_search, diamond_sdp, hptp_upper, SdpConfig, DEFAULT_RESTARTS,
};
use vbcast::hovm::depolarizing_mp;
use vbcast::qsample::{overhead, sampler_from_decomposition};
use vbcast::{AffineDecomposition, SuperMap};

fn sdp(m: &SuperMap) -> f64 {
    let r = diamond_sdp(m, &SdpConfig::default()).unwrap();
    assert!(r.converged);
    r.value
}

#[test]
fn bounds_are_ordered() {
    let cfg = SdpConfig::default();
    let mut rng = Rng::new(20, 0);
    let b = canonical_b(2).unwrap();
    let cases: Vec<(SuperMap, Option<AffineDecomposition>)> = vec![
        (b.clone(), Some(spectral_decomposition(2).unwrap())),
        (
            b.sub(&cloner(2).unwrap()).unwrap(),
            Some(AffineDecomposition::new(0.5, cloner(2).unwrap(), 0.5, antisym(2).unwrap()).unwrap()),
        ),
        (random_channel(2, 3, &mut rng), None),
    ];
    for (m, dec) in cases {
        let lower = diamond_lower_search(&m, 8, &mut rng).unwrap().lower_bound;
        let r = diamond_sdp(&m, &cfg).unwrap();
        assert!(r.lower_bound <= r.value + cfg.tolerance);
        assert!(r.value <= r.upper_bound.unwrap() + cfg.tolerance);
        assert!(lower <= r.value + cfg.tolerance, "ascent {lower} above sdp {}", r.value);
        if let Some(dec) = dec {
            assert!(r.value <= hptp_upper(&dec).unwrap() + cfg.tolerance);
        }
    }
}

#[test]
fn unitary_invariance() {
    let mut rng = Rng::new(21, 0);
    let b = canonical_b(2).unwrap();
    let u = SuperMap::unitary_conjugation(&haar_unitary(2, &mut rng));
    let v = SuperMap::unitary_conjugation(&haar_unitary(4, &mut rng));
    let rotated = SuperMap::compose(&v, &SuperMap::compose(&b, &u).unwrap()).unwrap();
    assert!((sdp(&rotated) - sdp(&b)).abs() < 1e-4);
}

#[test]
fn channel_differences_are_at_most_two() {
    let mut rng = Rng::new(22, 0);
    for _ in 0..4 {
        let e = random_channel(2, 2, &mut rng);
        let f = random_channel(2, 2, &mut rng);
        let v = sdp(&e.sub(&f).unwrap());
        assert!((-1e-4..=2.0 + 1e-4).contains(&v), "{v}");
    }
}

#[test]
fn channels_have_unit_norm() {
    let mut rng = Rng::new(23, 0);
    for (di, dout) in [(2, 2), (2, 4), (3, 2)] {
        assert!((sdp(&random_channel(di, dout, &mut rng)) - 1.0).abs() < 1e-4);
    }
    let dec = AffineDecomposition::trivial(random_channel(2, 2, &mut rng));
    assert_eq!(hptp_upper(&dec).unwrap(), 1.0);
}

#[test]
fn pinching_contracts() {
    let d = 2;
    let plus = SuperMap::unitary_conjugation(&symmetric_projector(d));
    let minus = SuperMap::unitary_conjugation(&antisymmetric_projector(d));
    let pinch = SuperMap::linear_combination(&[(1.0, &plus), (1.0, &minus)]).unwrap();
    let b = canonical_b(d).unwrap();
    assert!(SuperMap::compose(&pinch, &b).unwrap().max_abs_diff(&b) < 1e-12);
    let mut rng = Rng::new(24, 0);
    for _ in 0..10 {
        let e = random_channel(d, d * d, &mut rng);
        let pinched = SuperMap::compose(&pinch, &e).unwrap();
        assert!(sdp(&b.sub(&e).unwrap()) >= sdp(&b.sub(&pinched).unwrap()) - 1e-4);
    }
}

#[test]
fn cloner_is_the_closest_channel_for_qubits() {
    let d = 2;
    let b = canonical_b(d).unwrap();
    let mut rng = Rng::new(25, 0);
    let mut candidates = vec![cloner(d).unwrap(), antisym(d).unwrap(), depolarizing_mp(d).unwrap()];
    candidates.extend((0..20).map(|_| random_channel(d, d * d, &mut rng)));
    let scan = closest_channel_scan(&b, &candidates, &SdpConfig::default()).unwrap();
    assert_eq!(scan[0].index, 0);
    assert!((scan[0].gap - 1.0).abs() < 1e-4);
    assert!(scan[1..].iter().all(|e| e.gap > 1.0 + 1e-3));

    let c = cloner(d).unwrap();
    let scan = closest_channel_scan(&c, &candidates[..3], &SdpConfig::default()).unwrap();
    assert_eq!(scan[0].index, 0);
    assert!(scan[0].gap.abs() < 1e-4);
}

#[test]
fn overhead_matches_norm() {
    for d in 2..=3 {
        let s = sampler_from_decomposition(&spectral_decomposition(d).unwrap()).unwrap();
        let lower = diamond_lower_search(&canonical_b(d).unwrap(), DEFAULT_RESTARTS, &mut Rng::new(26, 0)).unwrap();
        assert!(overhead(&s) >= lower.lower_bound - 1e-9);
        assert_eq!(overhead(&s), d as f64);
    }
}
