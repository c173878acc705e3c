use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sandpile_core::structure::{
    concentration_bound, max_rho_nonconstant, min_nonconstant_support, rho_l, rho_l_bruteforce,
    subspace_hit_prob_bruteforce, zero_sum_deviation, zero_sum_prob, LaplacianRowLaw,
};
use sandpile_core::{GfMatrix, GfVector};

fn law_and_vector() -> impl Strategy<Value = (LaplacianRowLaw, GfVector)> {
    (prop_oneof![Just(2u32), Just(3), Just(5)], 1usize..=14, 1usize..=4, 0.05f64..0.95).prop_flat_map(
        |(p, n, m, q)| {
            (0..m, prop::collection::vec(0..p, n + m)).prop_map(move |(j, e)| {
                (
                    LaplacianRowLaw::bipartite_v2_row(n, m, j, q, p).unwrap(),
                    GfVector::new(p, e).unwrap(),
                )
            })
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rho_recursion_matches_enumeration((law, w) in law_and_vector()) {
        let fast = rho_l(&w, &law).unwrap();
        let slow = rho_l_bruteforce(&w, &law).unwrap();
        prop_assert!((fast - slow).abs() < 1e-12, "{} vs {}", fast, slow);
    }

    #[test]
    fn rho_is_shift_invariant((law, w) in law_and_vector(), a in 0u32..5) {
        let shifted = w.shifted(a % law.p);
        prop_assert!((rho_l(&w, &law).unwrap() - rho_l(&shifted, &law).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn concentration_holds_above_threshold(
        p in prop_oneof![Just(2u32), Just(3)],
        q in prop_oneof![Just(0.1), Just(0.3), Just(0.5)],
        n in 10usize..=80,
        support in 1usize..=80,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = rng.random_range(0..p);
        let mut e: Vec<u32> = (0..2 * n).map(|_| rng.random_range(0..p)).collect();
        e[..n].iter_mut().for_each(|x| *x = a);
        for _ in 0..support.min(n) {
            let i = rng.random_range(0..n);
            e[i] = (a + rng.random_range(1..p)) % p;
        }
        let w = GfVector::new(p, e).unwrap();
        let law = LaplacianRowLaw::bipartite_v2_row(n, n, rng.random_range(0..n), q, p).unwrap();
        let m = min_nonconstant_support(&w, n);
        prop_assume!((p as f64) < (m as f64).sqrt());
        prop_assert!(rho_l(&w, &law).unwrap() <= concentration_bound(m, p));
    }
}

#[test]
fn zero_sum_deviation_is_within_bound() {
    for n in 16..=512 {
        for p in [2u32, 3, 5] {
            if (p as f64) >= (n as f64).sqrt() {
                continue;
            }
            for q in [0.1, 0.3, 0.5] {
                assert!(zero_sum_deviation(n, q, p).abs() <= concentration_bound(n, p), "n={n} p={p} q={q}");
            }
        }
    }
    // where double precision can resolve it, the deviation agrees with the
    // direct recursion
    assert!((zero_sum_prob(20, 0.3, 3) - 1.0 / 3.0 - zero_sum_deviation(20, 0.3, 3)).abs() < 1e-15);
}

/// `H = {x : x_0 = x_1 = 0} ∩ 1^perp` against the row law with `q = 0.1`:
/// `P(X in H) = 0.81` while the largest nonconstant `rho_L` on `H^perp` is
/// `0.4`, so the error `|0.81 - 1/4| = 0.56` exceeds `delta`. The Fourier
/// expansion gives the sharper accounting
/// `err = p^-(d-1) * p * sum over normal lines of (P(X.w = 0) - 1/p)`,
/// bounded by `p/(p-1) * delta`.
#[test]
fn subspace_hit_error_can_exceed_delta() {
    let (p, n, m) = (2u32, 4usize, 1usize);
    let law = LaplacianRowLaw::bipartite_v2_row(n, m, 0, 0.1, p).unwrap();
    let normals = vec![
        GfVector::ones(p, 5).unwrap(),
        GfVector::unit(p, 5, 0).unwrap(),
        GfVector::unit(p, 5, 1).unwrap(),
    ];
    let h = GfMatrix::from_rows(p, 5, &normals).unwrap().nullspace_basis();
    let hit = subspace_hit_prob_bruteforce(&h, &law).unwrap();
    let delta = max_rho_nonconstant(&normals, &law).unwrap();
    assert!((hit - 0.81).abs() < 1e-12);
    assert!((delta - 0.4).abs() < 1e-12);
    let err = (hit - 0.25).abs();
    assert!(err > delta);
    assert!(err <= 2.0 * delta);
}

#[test]
fn subspace_hit_error_within_corrected_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(341);
    let mut checked = 0;
    while checked < 150 {
        let p = [2u32, 3][rng.random_range(0..2)];
        let q = [0.1, 0.3, 0.5, 0.7][rng.random_range(0..4)];
        let d = rng.random_range(2..=4usize);
        let n = rng.random_range(3..=10usize);
        let m = rng.random_range(1..=3usize);
        let dim = n + m;
        let law = LaplacianRowLaw::bipartite_v2_row(n, m, rng.random_range(0..m), q, p).unwrap();
        let mut normals = vec![GfVector::ones(p, dim).unwrap()];
        for _ in 1..d {
            let density = rng.random::<f64>();
            let e = (0..dim)
                .map(|_| if rng.random::<f64>() < density { rng.random_range(1..p) } else { 0 })
                .collect();
            normals.push(GfVector::new(p, e).unwrap());
        }
        let nm = GfMatrix::from_rows(p, dim, &normals).unwrap();
        if nm.rank() != d {
            continue;
        }
        let hit = subspace_hit_prob_bruteforce(&nm.nullspace_basis(), &law).unwrap();
        let delta = max_rho_nonconstant(&normals, &law).unwrap();
        let err = (hit - (p as f64).powi(1 - d as i32)).abs();
        assert!(err <= delta * p as f64 / (p as f64 - 1.0) + 1e-12);
        checked += 1;
    }
}

#[test]
fn full_space_and_line_examples() {
    let law = LaplacianRowLaw::new(2, 4, 3, 0.5, 2).unwrap();
    let full: Vec<GfVector> = (0..4).map(|i| GfVector::unit(2, 4, i).unwrap()).collect();
    assert!((subspace_hit_prob_bruteforce(&full, &law).unwrap() - 1.0).abs() < 1e-15);
    let ones = [GfVector::ones(2, 4).unwrap()];
    assert!((subspace_hit_prob_bruteforce(&ones, &law).unwrap() - 0.25).abs() < 1e-15);
}
