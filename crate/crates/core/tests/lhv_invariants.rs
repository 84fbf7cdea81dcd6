use hnl::bell::{projectors_from_bloch, BlochVector};
use hnl::lhv::{
    alice_response, run_lhv_experiment, BaseModel, DichotomicRule, LhvModel, SettingPair,
};
use hnl::random::random_unit_vector;
use hnl::rng::stream;

#[test]
fn accepted_hidden_variables_follow_abs_cosine_density() {
    let mut rng = stream(404, 0);
    let x = BlochVector::normalized([0.3, -0.5, 0.8]).unwrap();
    let rule = DichotomicRule::qubit(x);
    let base = BaseModel::new_protocol1(0.5).unwrap();
    let bins = 20;
    let mut counts = vec![0u64; bins];
    let mut accepted = 0u64;
    let n = 1_000_000;
    for _ in 0..n {
        let shared = base.sample_shared(&mut rng);
        let (_, acc) = alice_response(&rule, &shared, &mut rng);
        if acc {
            let u = x.dot(BlochVector::normalized(shared.hidden.lambda).unwrap());
            let k = (((u + 1.0) / 2.0 * bins as f64) as usize).min(bins - 1);
            counts[k] += 1;
            accepted += 1;
        }
    }
    // u = x·λ is uniform on [-1, 1]; acceptance weights it by |u|
    let cdf = |u: f64| 0.5 + 0.5 * u * u.abs();
    let chi2: f64 = (0..bins)
        .map(|k| {
            let a = -1.0 + 2.0 * k as f64 / bins as f64;
            let b = a + 2.0 / bins as f64;
            let expect = accepted as f64 * (cdf(b) - cdf(a));
            (counts[k] as f64 - expect).powi(2) / expect
        })
        .sum();
    let dof = (bins - 1) as f64;
    let z = (chi2 - dof) / (2.0 * dof).sqrt();
    assert!(z <= 5.0, "chi2 {chi2} (z {z})");
    let rate = accepted as f64 / n as f64;
    assert!(
        (rate - 0.5).abs() <= 5.0 * (0.25 / n as f64).sqrt(),
        "acceptance rate {rate}"
    );
}

#[test]
fn alice_marginal_ignores_bobs_setting() {
    let mut rng = stream(405, 0);
    let alice = projectors_from_bloch(random_unit_vector(&mut rng)).unwrap();
    let settings: Vec<SettingPair> = (0..6)
        .map(|_| SettingPair {
            alice: alice.clone(),
            bob: projectors_from_bloch(random_unit_vector(&mut rng)).unwrap(),
        })
        .collect();
    for model in [
        LhvModel::Protocol1 { q: 0.5 },
        LhvModel::Protocol1 { q: 0.2 },
    ] {
        let rounds = 200_000;
        let r = run_lhv_experiment(model, &settings, rounds, 9).unwrap();
        let marginals: Vec<f64> = r.empirical.iter().map(|p| p[0] + p[1]).collect();
        let first = marginals[0];
        for m in &marginals[1..] {
            let sigma = (2.0 * first * (1.0 - first) / rounds as f64).sqrt();
            assert!((m - first).abs() <= 5.0 * sigma, "{marginals:?}");
        }
    }
}

#[test]
fn acceptance_rate_is_half_for_every_setting() {
    let mut rng = stream(406, 0);
    for _ in 0..5 {
        let x = BlochVector::normalized(random_unit_vector(&mut rng)).unwrap();
        let settings = vec![SettingPair {
            alice: projectors_from_bloch(x.components()).unwrap(),
            bob: projectors_from_bloch((-x).components()).unwrap(),
        }];
        let r = run_lhv_experiment(LhvModel::Protocol1 { q: 0.5 }, &settings, 200_000, 1).unwrap();
        assert!(r.rates["acceptance"].z <= 5.0);
        assert!(r.passed());
    }
}
