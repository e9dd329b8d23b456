mod common;

use cellfree_isac::rng::{stream_rng, Stream};
use cellfree_isac::sensing::{
    effective_snr_monte_carlo, glrt_threshold, simulate_detection, synthesize_observation,
    target_channel_stack, GlrtWorkspace, TransmitSignals,
};
use cellfree_isac::Network;
use common::{random_allocation, relative_error, two_tx_config};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::Rng;

fn net() -> Network {
    Network::build(&two_tx_config(), 21).unwrap()
}

#[test]
fn zero_allocation_gives_zero_effective_snr() {
    let net = net();
    let a = net.empty_allocation();
    assert!(net.sensing_snr(&a).iter().all(|&g| g == 0.0));
    assert!(net.sensing_rates(&a).iter().all(|&r| r == 0.0));
}

#[test]
fn single_beam_hand_scalar() {
    // Only ν_{0,t} active: γ̄ = ν² Σ_r β_{0,r,t} R[t,t] |a_t^H a_t/√N|² / σ²
    //                      = ν² N Σ_r β R[t,t] / σ²   (beam points at p_0).
    let net = net();
    let sc = &net.scenario;
    let t = sc.targets.beams.iter().position(|b| b.contains(&0)).unwrap();
    let mut a = net.empty_allocation();
    let nu: f64 = 0.9;
    a.set_nu(0, t, nu);
    let r = net.geometry.rcs_covariance(0, 0)[(t, t)];
    let beta: f64 = sc.targets.rx[0].iter().map(|&rx| net.geometry.beta(0, rx, t)).sum();
    let expect = nu * nu * sc.antennas() as f64 * beta * r / net.noise_power;
    let got = net.sensing_snr(&a)[0];
    assert!(relative_error(got, expect) < 1e-12, "{got} vs {expect}");
}

#[test]
fn quadratic_matches_energy_oracle() {
    let net = net();
    let mut rng = stream_rng(21, 0, Stream::Oracle);
    for _ in 0..2 {
        let alloc = random_allocation(&net, &mut rng);
        let closed = net.sensing_snr(&alloc)[0];
        let mc = effective_snr_monte_carlo(
            &net.scenario,
            &net.geometry,
            &net.estimation,
            &net.sampler,
            &alloc,
            0,
            100_000,
            &mut rng,
        )
        .unwrap();
        assert!(relative_error(mc, closed) < 0.02, "closed {closed} vs oracle {mc}");
    }
}

#[test]
fn quadratic_scaling_and_gradient() {
    let net = net();
    let mut rng = stream_rng(22, 0, Stream::Oracle);
    let alloc = random_allocation(&net, &mut rng);
    let g = net.sensing_snr(&alloc)[0];
    let g2 = net.sensing_snr(&alloc.scaled(2.0))[0];
    assert!(relative_error(g2, 4.0 * g) < 1e-12);
    let b = alloc.stacked();
    let grad = net.sensing.gradient(0, &b);
    for j in 0..b.len() {
        let h = 1e-6 * b.amax().max(1e-3);
        let mut bp = b.clone();
        bp[j] += h;
        let mut bm = b.clone();
        bm[j] -= h;
        let fd = (net.sensing.energy_stacked(0, &bp) - net.sensing.energy_stacked(0, &bm)) / (2.0 * h);
        assert!((fd - grad[j]).abs() <= 1e-6 * grad.amax().max(f64::MIN_POSITIVE));
    }
}

#[test]
fn noiseless_observation_lies_in_span() {
    let net = net();
    let sc = &net.scenario;
    let mut rng = stream_rng(23, 0, Stream::Oracle);
    let alloc = random_allocation(&net, &mut rng);
    let real = net.sampler.sample(&[true], &mut rng);
    let signals =
        TransmitSignals::generate(sc, &alloc, &real, &net.estimation, 8, &mut rng).unwrap();
    let stacks = target_channel_stack(sc, &net.geometry, &signals, 0);
    let ws = GlrtWorkspace::new(&stacks, net.noise_power).unwrap();
    let r = sc.targets.rx[0][0];
    let y = synthesize_observation(&stacks[0], &real.alpha[r], true, 1e-300, &mut rng);
    let u = &ws.bases[0];
    let resid = &y - u * (u.adjoint() * &y);
    assert!(resid.norm() <= 1e-9 * y.norm());
    let y0 = synthesize_observation(&stacks[0], &real.alpha[r], false, net.noise_power, &mut rng);
    assert!(y0.len() == stacks[0].nrows());
}

#[test]
fn null_statistic_moments() {
    let net = net();
    let sc = &net.scenario;
    let mut rng = stream_rng(24, 0, Stream::Oracle);
    let alloc = random_allocation(&net, &mut rng);
    let real = net.sampler.sample(&[true], &mut rng);
    let signals =
        TransmitSignals::generate(sc, &alloc, &real, &net.estimation, 6, &mut rng).unwrap();
    let stacks = target_channel_stack(sc, &net.geometry, &signals, 0);
    let ws = GlrtWorkspace::new(&stacks, net.noise_power).unwrap();
    let r = ws.total_rank() as f64;
    assert!(r >= 1.0);
    let n = 10_000;
    let zero = DVector::zeros(sc.num_tx());
    let samples: Vec<f64> = (0..n)
        .map(|_| {
            let y: Vec<_> = stacks
                .iter()
                .map(|d| synthesize_observation(d, &zero, false, net.noise_power, &mut rng))
                .collect();
            ws.statistic(&y).unwrap()
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    // Gamma(r,1): mean r, variance r; fourth central moment 3r² + 6r.
    let se_mean = (r / n as f64).sqrt();
    let se_var = ((3.0 * r * r + 6.0 * r - r * r) / n as f64).sqrt();
    assert!((mean - r).abs() < 3.0 * se_mean, "mean {mean} vs {r}");
    assert!((var - r).abs() < 3.0 * se_var, "var {var} vs {r}");
}

#[test]
fn receive_snr_matches_projected_energy() {
    let net = net();
    let sc = &net.scenario;
    let mut rng = stream_rng(25, 0, Stream::Oracle);
    let alloc = random_allocation(&net, &mut rng);
    let real = net.sampler.sample(&[true], &mut rng);
    let signals =
        TransmitSignals::generate(sc, &alloc, &real, &net.estimation, 4, &mut rng).unwrap();
    let stacks = target_channel_stack(sc, &net.geometry, &signals, 0);
    let ws = GlrtWorkspace::new(&stacks, net.noise_power).unwrap();
    let rcs = net.geometry.rcs_covariance(0, 0);
    let snr = ws.receive_snr(rcs).unwrap();
    let n = 10_000;
    let mut acc = 0.0;
    for _ in 0..n {
        let alpha = net.sampler.sample_rcs(&mut rng);
        for (xi, &rx) in ws.xi.iter().zip(&sc.targets.rx[0]) {
            acc += (xi * &alpha[rx]).norm_squared();
        }
    }
    let mc = acc / n as f64 / ws.total_rank() as f64;
    assert!(relative_error(mc, snr) < 0.02, "{mc} vs {snr}");
    let zero_r = nalgebra::DMatrix::zeros(sc.num_tx(), sc.num_tx());
    assert_eq!(ws.receive_snr(&zero_r).unwrap(), 0.0);
}

#[test]
fn false_alarm_calibration() {
    for r in [1usize, 3, 8] {
        let delta = glrt_threshold(r, 0.05).unwrap();
        let mut rng = stream_rng(r as u64, 0, Stream::Noise);
        let n = 20_000;
        let hits = (0..n)
            .filter(|_| {
                let t: f64 = (0..r)
                    .map(|_| -(1.0 - rng.random::<f64>()).ln())
                    .sum();
                t > delta
            })
            .count();
        let p = hits as f64 / n as f64;
        let half = 1.96 * (0.05 * 0.95 / n as f64).sqrt();
        assert!((p - 0.05).abs() < half * 1.5, "r={r}: {p}");
    }
}

#[test]
fn detection_non_decreasing_in_sensing_power() {
    let mut cfg = two_tx_config();
    cfg.num_aps = 2;
    cfg.l_serve = 1;
    cfg.l_tx_sense = 1;
    cfg.tau_s = 50;
    cfg.rcs_variance_dbsm = 40.0;
    let net = Network::build(&cfg, 2).unwrap();
    let mut prev = 0.0;
    for (step, nu) in [0.0, 0.1, 0.3, 0.6, 1.0, 1.4].iter().enumerate() {
        let mut a = net.empty_allocation();
        a.set_nu(0, 0, *nu);
        let mut rng = stream_rng(2, step as u64, Stream::Oracle);
        let rates = simulate_detection(
            &net.scenario,
            &net.geometry,
            &net.estimation,
            &net.sampler,
            &a,
            0,
            0.01,
            4_000,
            &mut rng,
        )
        .unwrap();
        let tol = 3.0 * (0.25 / 4_000f64).sqrt();
        assert!(rates.detection + tol >= prev, "nu={nu}: {} < {prev}", rates.detection);
        prev = rates.detection;
    }
    assert!(prev > 0.5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn linearization_is_global_underestimator(seed in 0u64..10_000) {
        let net = Network::build(&two_tx_config(), seed % 5).unwrap();
        let mut rng = stream_rng(seed, 3, Stream::Oracle);
        let b = random_allocation(&net, &mut rng).stacked();
        let b0 = random_allocation(&net, &mut rng).stacked();
        let lin = net.sensing.linearization(0, &b, &b0);
        let exact = net.sensing.energy_stacked(0, &b);
        prop_assert!(lin <= exact * (1.0 + 1e-12) + 1e-300);
    }
}
