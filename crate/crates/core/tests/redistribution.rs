use proptest::prelude::*;
use rdk_core::affinity::{load_dense, save_dense};
use rdk_core::prob::random_simplex_on;
use rdk_core::{
    acceptance_rate, apply_exact, build_affinity, build_structured_affinity, estimate_covariance,
    l1_distance, masked_only, rdk_redistribute, rdk_taylor_redistribute, tli_redistribute, Error,
    ProbVec, ProbVector, RandomSource, SupportSet,
};

fn simplex(weights: Vec<f64>) -> ProbVec {
    ProbVector::from_weights(weights).unwrap()
}

/// Weights in (0, 1] with some exact zeros, so supports vary.
fn sparse_weights(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 1e-6..1.0f64], m)
        .prop_filter("needs mass", |w| w.iter().any(|&x| x > 0.0))
}

proptest! {
    #[test]
    fn acceptance_identity(p in sparse_weights(12), q in sparse_weights(12)) {
        let (p, q) = (simplex(p), simplex(q));
        let alpha = acceptance_rate(&p, &q).unwrap();
        let l1 = l1_distance(&p, &q).unwrap();
        prop_assert!((alpha - (1.0 - l1 / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn tli_output_lives_on_target(q in sparse_weights(10), mask in prop::collection::vec(any::<bool>(), 10)) {
        let q = simplex(q);
        let t = SupportSet::from_unsorted((0..10).filter(|&i| mask[i]), 10).unwrap();
        match tli_redistribute(&q, &t) {
            Ok(r) => {
                prop_assert!(r.support().is_subset_of(&t));
                prop_assert!((r.mass() - 1.0).abs() < 1e-12);
                // proportional to the surviving drafter mass
                let kept = masked_only(&q, &t).unwrap();
                for i in t.iter() {
                    prop_assert!((r.get(i) * kept.mass() - kept.get(i)).abs() < 1e-12);
                }
            }
            Err(e) => prop_assert!(matches!(e, Error::EmptyIntersection | Error::EmptySupport)),
        }
    }
}

#[test]
fn redistribution_never_hurts_a_supported_target() {
    // if p is a point mass inside T, TLI can only gain acceptance over masking
    let mut rng = RandomSource::new(3);
    for _ in 0..200 {
        let m = 20;
        let size = 1 + rng.index(m);
        let t = SupportSet::new(rng.subset(m, size), m).unwrap();
        let q: ProbVec = random_simplex_on(&SupportSet::full(m), &mut rng).unwrap();
        let p = ProbVec::one_hot(m, t.indices()[0]).unwrap();
        let masked = masked_only(&q, &t).unwrap();
        let tli = tli_redistribute(&q, &t).unwrap();
        let a_masked = acceptance_rate(&p, &masked).unwrap();
        let a_tli = acceptance_rate(&p, &tli).unwrap();
        assert!(a_tli + 1e-15 >= a_masked);
    }
}

#[test]
fn exact_affinity_from_covariance_round_trips_through_a_file() {
    let mut rng = RandomSource::new(9);
    let vocab = 30;
    let t = SupportSet::new((0..vocab).step_by(2).collect(), vocab).unwrap();
    let samples: Vec<ProbVec> = (0..40).map(|_| random_simplex_on(&t, &mut rng).unwrap()).collect();
    let omega = estimate_covariance(&samples, &t).unwrap();
    let active = SupportSet::new(t.indices()[..5].to_vec(), vocab).unwrap();
    let m = build_affinity(&omega, 0.05, &t, &active).unwrap();
    m.check_row_stochastic().unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.rdkm");
    save_dense(&m, &path).unwrap();
    let back = load_dense::<f64>(&path).unwrap();
    assert_eq!(back.dim(), vocab);
    assert_eq!(back.tau(), 0.05);
    for i in 0..vocab {
        for j in 0..vocab {
            let want = match (t.position(i), t.position(j)) {
                (Some(a), Some(b)) => m.entry(a, b),
                (None, None) if i == j => 1.0,
                _ => 0.0,
            };
            assert_eq!(back.entry(i, j).to_bits(), want.to_bits(), "({i}, {j})");
        }
    }

    // applying the loaded matrix gives the same result as the original
    let q = random_simplex_on(&active, &mut rng).unwrap();
    let direct = rdk_redistribute(&q, &t, &m).unwrap();
    let via_file = apply_exact(&back, &q).unwrap();
    assert!(l1_distance(&direct, &via_file).unwrap() < 1e-12);
}

#[test]
fn corrupt_affinity_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let t = SupportSet::full(4);
    let m = rdk_core::AffinityMatrix::<f64>::identity(&t);
    let path = dir.path().join("m.rdkm");
    save_dense(&m, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();

    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(matches!(load_dense::<f64>(&path), Err(Error::Format(_))));
    let mut bad = bytes.clone();
    bad[0] = b'X';
    std::fs::write(&path, &bad).unwrap();
    assert!(matches!(load_dense::<f64>(&path), Err(Error::Format(_))));
    // a row that no longer sums to one
    let mut bad = bytes.clone();
    let last = bad.len() - 8;
    bad[last..].copy_from_slice(&0.5f64.to_le_bytes());
    std::fs::write(&path, &bad).unwrap();
    assert!(load_dense::<f64>(&path).is_err());
    assert!(matches!(load_dense::<f64>(&dir.path().join("missing")), Err(Error::Io(_))));
}

#[test]
fn taylor_tracks_exact_structured_matrix_for_large_n() {
    let mut rng = RandomSource::new(21);
    for n in [100usize, 1000] {
        let full = SupportSet::full(n);
        let p: ProbVec = random_simplex_on(&full, &mut rng).unwrap();
        let q: ProbVec = random_simplex_on(&full, &mut rng).unwrap();
        let m = build_structured_affinity(&p, 0.1, &full).unwrap();
        let exact = rdk_redistribute(&q, &full, &m).unwrap();
        let taylor = rdk_taylor_redistribute(&q, &full, &p).unwrap();
        assert!((exact.mass() - 1.0).abs() < 1e-12 && (taylor.mass() - 1.0).abs() < 1e-12);
        // both stay near q' when theta / N is small
        assert!(l1_distance(&taylor, &q).unwrap() < 1e-3);
    }
}

#[test]
fn f32_and_f64_agree() {
    let mut rng = RandomSource::new(5);
    let vocab = 64;
    let t = SupportSet::new(rng.subset(vocab, 40), vocab).unwrap();
    let q: ProbVec = random_simplex_on(&SupportSet::full(vocab), &mut rng).unwrap();
    let p: ProbVec = random_simplex_on(&SupportSet::full(vocab), &mut rng).unwrap();
    let q32 = q.cast::<f32>().unwrap();
    let p32 = p.cast::<f32>().unwrap();

    let a64 = tli_redistribute(&q, &t).unwrap();
    let a32 = tli_redistribute(&q32, &t).unwrap();
    let b64 = rdk_taylor_redistribute(&q, &t, &p).unwrap();
    let b32 = rdk_taylor_redistribute(&q32, &t, &p32).unwrap();
    for i in 0..vocab {
        assert!((a64.get(i) - a32.get(i) as f64).abs() < 1e-6);
        assert!((b64.get(i) - b32.get(i) as f64).abs() < 1e-6);
    }
    let alpha64 = acceptance_rate(&p, &a64).unwrap();
    let alpha32 = acceptance_rate(&p32, &a32).unwrap();
    assert!((alpha64 - alpha32 as f64).abs() < 1e-5);
}
