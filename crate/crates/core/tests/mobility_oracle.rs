//! Simulated OU paths against closed-form moments and the Rician law.

mod common;

use linkstab::distance::{rician_cdf, RicianLaw};
use linkstab::jointdist::LagCovariance;
use linkstab::mobility::{sample_stationary, simulate_pair, step, Axis, OUParams, PairConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[test]
fn long_path_has_stationary_variance_and_autocovariance() {
    let p = OUParams::centered(2.0, 30.0).unwrap();
    let dt = 0.5;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut s = sample_stationary(&p, &mut rng, Axis::Y);
    let path: Vec<f64> = (0..400_000)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            s = step(s, &p, dt, z, Axis::Y).unwrap();
            s
        })
        .collect();
    let var = 30.0 * 30.0 * 2.0 / 2.0;
    let phi = (-dt / 2.0f64).exp();
    let (m, v) = common::mean_var(&path);
    let lag: f64 = path
        .windows(2)
        .map(|w| (w[0] - m) * (w[1] - m))
        .sum::<f64>()
        / (path.len() - 1) as f64;
    // Effective sample size of an AR(1) path with coefficient phi.
    let n_eff = path.len() as f64 * (1.0 - phi * phi) / (1.0 + phi * phi);
    assert!((m / (var / n_eff).sqrt()).abs() < 4.0, "mean {m}");
    assert!(
        ((v - var) / (var * (2.0 / n_eff).sqrt())).abs() < 4.0,
        "variance {v} vs {var}"
    );
    assert!(
        ((lag - var * phi) / (var * (2.0 / n_eff).sqrt())).abs() < 4.0,
        "lag-1 {lag} vs {}",
        var * phi
    );
}

#[test]
fn stationary_distance_passes_ks_against_rician_cdf() {
    let p = OUParams::centered(1.0, 100.0).unwrap();
    let cfg = PairConfig::from_params(&p, 10.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 20_000;
    // Independent draws: one far-apart instant per chain start.
    let mut sample: Vec<f64> = (0..n)
        .map(|_| {
            simulate_pair(&cfg, 1.0, 1, &mut rng, true)
                .unwrap()
                .distances()[0]
        })
        .collect();
    let law = RicianLaw::stationary(10.0, &p).unwrap();
    let d = common::ks_statistic(&mut sample, |r| rician_cdf(r, &law).unwrap());
    assert!(d < 1.95 / (n as f64).sqrt(), "KS statistic {d}");
}

#[test]
fn distance_histogram_matches_rician_density() {
    let p = OUParams::centered(1.0, 50.0).unwrap();
    let cfg = PairConfig::from_params(&p, 80.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 100_000;
    let edges = [0.0, 25.0, 50.0, 75.0, 100.0, 125.0, 150.0, 200.0, 1e9];
    let mut hist = [0u64; 8];
    for _ in 0..n {
        let r = simulate_pair(&cfg, 1.0, 1, &mut rng, true)
            .unwrap()
            .distances()[0];
        hist[edges
            .windows(2)
            .position(|e| r >= e[0] && r < e[1])
            .unwrap()] += 1;
    }
    let g = 2500.0;
    let mut below = 0.0;
    for (i, &count) in hist.iter().enumerate() {
        let upper = if i == 7 {
            1.0
        } else {
            below
                + common::simpson(
                    |r| common::rician_pdf(r, 80.0, g),
                    edges[i],
                    edges[i + 1],
                    2000,
                )
        };
        let prob = upper - below;
        below = upper;
        let freq = count as f64 / n as f64;
        let se = (prob * (1.0 - prob) / n as f64).sqrt();
        assert!(
            ((freq - prob) / se).abs() < 4.0,
            "bin {i}: {freq} vs {prob}"
        );
    }
}

#[test]
fn simulated_triples_match_lag_covariance() {
    let p = OUParams::centered(1.0, 100.0).unwrap();
    let dt = 0.7;
    let cfg = PairConfig::from_params(&p, 10.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let n = 100_000;
    let mut xs = vec![[0.0f64; 3]; n];
    for x in xs.iter_mut() {
        let t = simulate_pair(&cfg, dt, 3, &mut rng, true).unwrap();
        for k in 0..3 {
            x[k] = t.second.states[k].x - t.first.states[k].x;
        }
    }
    let cov = LagCovariance::build(dt, &p).unwrap();
    let mean: Vec<f64> = (0..3)
        .map(|k| xs.iter().map(|x| x[k]).sum::<f64>() / n as f64)
        .collect();
    for i in 0..3 {
        for j in 0..3 {
            let s = xs
                .iter()
                .map(|x| (x[i] - mean[i]) * (x[j] - mean[j]))
                .sum::<f64>()
                / (n - 1) as f64;
            let sig = cov.sigma[i][j];
            let se = ((cov.sigma[i][i] * cov.sigma[j][j] + sig * sig) / n as f64).sqrt();
            assert!(((s - sig) / se).abs() < 4.0, "cov[{i}][{j}] {s} vs {sig}");
        }
    }
    assert!((mean[0] - 10.0).abs() < 4.0 * (cov.sigma[0][0] / n as f64).sqrt());
}
