mod common;

use cellfree_isac::power::{
    build_soc_c3, jopc, optimize, sca_linearize, sopc, upc, OptimizationResult, OptimizationStatus,
    QosProblemSpec, Settings, VariableLayout, VERIFY_TOL,
};
use cellfree_isac::rng::{stream_rng, Stream};
use cellfree_isac::{Network, PowerAllocation};
use common::{desk_config, random_allocation, relative_error, small_config};
use rand::Rng;

fn small(seed: u64) -> Network {
    Network::build(&small_config(), seed).unwrap()
}

fn min(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn assert_budgets(net: &Network, a: &PowerAllocation) {
    a.check(&net.scenario, 1e-9).unwrap();
}

#[test]
fn upc_hand_example() {
    let mut net = small(1);
    let sc = &mut net.scenario;
    sc.config.ap_power = 2.0;
    sc.users.served_by[0] = vec![0, 1];
    sc.targets.beams[0] = vec![0];
    let a = upc(sc);
    assert!((a.eta(0, 0) - 0.5).abs() < 1e-15);
    assert!((a.eta(1, 0) - 0.5).abs() < 1e-15);
    assert!((a.mu(0, 0) - 1.0).abs() < 1e-15);
    assert_eq!(a.eta(2, 0), 0.0);

    sc.targets.beams[0].clear();
    let a = upc(sc);
    assert!((a.eta(0, 0) - 1.0).abs() < 1e-15);
    assert!((a.eta(1, 0) - 1.0).abs() < 1e-15);

    sc.users.served_by[0].clear();
    let a = upc(sc);
    assert_eq!(a.ap_power(0), 0.0);
}

#[test]
fn upc_meets_budgets_with_equality() {
    for seed in 0..20 {
        let net = Network::build(&desk_config(), seed).unwrap();
        let a = upc(&net.scenario);
        assert_budgets(&net, &a);
        for t in 0..net.scenario.num_tx() {
            let p = net.scenario.power_budget(t);
            assert!((a.ap_power(t) - p).abs() <= 1e-12 * p.max(1.0), "seed {seed} ap {t}");
        }
    }
}

#[test]
fn soc_form_is_equivalent_to_sinr_floor() {
    let mut rng = stream_rng(5, 0, Stream::Oracle);
    let mut checked = 0;
    for seed in 0..4 {
        let net = small(seed);
        let layout = VariableLayout::new(&net.scenario, true, true);
        for _ in 0..25 {
            let alloc = random_allocation(&net, &mut rng);
            let x = layout.point(&alloc);
            let sinr = net.sinr(&alloc);
            let k = rng.random_range(0..net.scenario.num_ues());
            let gamma0 = sinr[k].max(1e-6) * (rng.random_range(-1.5f64..1.5)).exp();
            let cone = build_soc_c3(&net.sinr, &layout, k, gamma0, 0).unwrap();

            // ‖ϱ_k‖² σ² equals the SINR denominator plus numerator
            let terms = net.sinr.terms(&alloc, k);
            let lhs = (&cone.a * &x + &cone.b).norm_squared() * net.sinr.noise();
            assert!(relative_error(lhs, terms.numerator + terms.denominator()) < 1e-10);

            if (sinr[k] / gamma0 - 1.0).abs() > 1e-9 {
                assert_eq!(cone.margin(&x) >= 0.0, sinr[k] >= gamma0, "γ {} vs γ0 {gamma0}", sinr[k]);
            }
            checked += 1;
        }
    }
    assert_eq!(checked, 100);
}

#[test]
fn soc_edge_cases() {
    let net = small(2);
    let layout = VariableLayout::new(&net.scenario, true, true);
    let zero = layout.point(&net.empty_allocation());
    for k in 0..net.scenario.num_ues() {
        let cone = build_soc_c3(&net.sinr, &layout, k, 1.0, 0).unwrap();
        assert!(cone.margin(&zero) < 0.0);
        let tiny = build_soc_c3(&net.sinr, &layout, k, 1e-12, 0).unwrap();
        assert!(tiny.margin(&layout.point(&upc(&net.scenario))) >= 0.0);
    }
    assert!(build_soc_c3(&net.sinr, &layout, 0, 0.0, 0).is_err());
    assert!(build_soc_c3(&net.sinr, &layout, 0, -1.0, 0).is_err());
}

#[test]
fn linearization_tangent_and_underestimator() {
    let net = small(3);
    let layout = VariableLayout::new(&net.scenario, true, true);
    let mut rng = stream_rng(6, 0, Stream::Oracle);
    let mut pairs = 0;
    while pairs < 10_000 {
        let b0 = random_allocation(&net, &mut rng);
        let lin = sca_linearize(&net.sensing, &layout, 0, &b0);
        let q0 = net.sensing.energy(0, &b0);
        assert!(relative_error(lin.eval(&layout.point(&b0)), q0) < 1e-12);
        for _ in 0..100 {
            let b = random_allocation(&net, &mut rng);
            let exact = net.sensing.energy(0, &b);
            assert!(lin.eval(&layout.point(&b)) <= exact * (1.0 + 1e-12));
            pairs += 1;
        }
    }
}

#[test]
fn linearization_gradient_matches_finite_differences() {
    let net = small(4);
    let layout = VariableLayout::new(&net.scenario, true, true);
    let mut rng = stream_rng(7, 0, Stream::Oracle);
    let b0 = random_allocation(&net, &mut rng);
    let lin = sca_linearize(&net.sensing, &layout, 0, &b0);
    let x0 = layout.point(&b0);
    let energy = |x: &nalgebra::DVector<f64>| net.sensing.energy(0, &layout.allocation(x));
    for v in 0..layout.len() {
        let h = 1e-4 * x0[v].max(1e-2);
        let mut xp = x0.clone();
        xp[v] += h;
        let mut xm = x0.clone();
        xm[v] -= h;
        if xm[v] < 0.0 {
            // one-sided at the boundary; the energy is quadratic in each entry
            continue;
        }
        let fd = (energy(&xp) - energy(&xm)) / (2.0 * h);
        assert!((fd - lin.g[v]).abs() <= 1e-6 * lin.g.amax(), "var {v}: {fd} vs {}", lin.g[v]);
    }
}

fn assert_safe(net: &Network, r: &OptimizationResult, sinr_floor: f64, snr_floor: f64) {
    assert_eq!(r.status, OptimizationStatus::Optimal);
    assert_budgets(net, &r.allocation);
    assert!(min(&net.sinr(&r.allocation)) >= sinr_floor * (1.0 - VERIFY_TOL));
    assert!(min(&net.sensing_snr(&r.allocation)) >= snr_floor * (1.0 - VERIFY_TOL));
}

fn assert_monotone(trace: &[f64]) {
    for w in trace.windows(2) {
        assert!(w[1] >= w[0] * (1.0 - 1e-9), "trace decreased: {trace:?}");
    }
}

#[test]
fn sensing_prioritized_without_floor_dominates_upc() {
    for seed in 0..3 {
        let net = small(seed);
        let r = jopc(&net, &QosProblemSpec::sensing_prioritized(0.0)).unwrap();
        assert_safe(&net, &r, 0.0, 0.0);
        let base = min(&net.sensing_snr(&upc(&net.scenario)));
        assert!(r.objective >= base, "seed {seed}: {} < {base}", r.objective);
        assert!(relative_error(r.objective, min(&net.sensing_snr(&r.allocation))) < 1e-12);
        assert!(r.unreachable_level <= r.objective * (1.0 + 2.0 * 1e-3));
        assert_monotone(&r.trace);
    }
}

#[test]
fn comm_prioritized_without_floor_dominates_upc() {
    for seed in 0..3 {
        let net = small(seed);
        let r = jopc(&net, &QosProblemSpec::comm_prioritized(0.0)).unwrap();
        assert_safe(&net, &r, 0.0, 0.0);
        let base = min(&net.sinr(&upc(&net.scenario)));
        assert!(r.objective >= base, "seed {seed}: {} < {base}", r.objective);
        assert!(r.unreachable_level <= r.objective * (1.0 + 2.0 * 1e-3));
        assert_monotone(&r.trace);
    }
}

#[test]
fn sensing_prioritized_respects_sinr_floor() {
    let net = small(5);
    let free = jopc(&net, &QosProblemSpec::comm_prioritized(0.0)).unwrap();
    let gamma0 = 0.5 * free.objective;
    let r = jopc(&net, &QosProblemSpec::sensing_prioritized(gamma0)).unwrap();
    assert_safe(&net, &r, gamma0, 0.0);
    assert_monotone(&r.trace);
    let unconstrained = jopc(&net, &QosProblemSpec::sensing_prioritized(0.0)).unwrap();
    assert!(r.objective <= unconstrained.objective * (1.0 + 2e-3));
}

#[test]
fn comm_prioritized_respects_sensing_floor() {
    let net = small(6);
    let free = jopc(&net, &QosProblemSpec::sensing_prioritized(0.0)).unwrap();
    let floor = 0.5 * free.objective;
    let r = jopc(&net, &QosProblemSpec::comm_prioritized(floor)).unwrap();
    assert_safe(&net, &r, 0.0, floor);
    let unconstrained = jopc(&net, &QosProblemSpec::comm_prioritized(0.0)).unwrap();
    assert!(r.objective <= unconstrained.objective * (1.0 + 2e-3));
}

#[test]
fn unreachable_floors_are_reported() {
    let net = small(7);
    let free = jopc(&net, &QosProblemSpec::comm_prioritized(0.0)).unwrap();
    let r = jopc(&net, &QosProblemSpec::sensing_prioritized(10.0 * free.unreachable_level)).unwrap();
    assert_eq!(r.status, OptimizationStatus::InfeasibleAtThreshold);

    let free = jopc(&net, &QosProblemSpec::sensing_prioritized(0.0)).unwrap();
    let r = jopc(&net, &QosProblemSpec::comm_prioritized(10.0 * free.unreachable_level)).unwrap();
    assert_eq!(r.status, OptimizationStatus::InfeasibleAtThreshold);
}

#[test]
fn orthogonal_design_edges() {
    let net = small(8);
    let settings = Settings::default();
    let r0 = sopc(&net, 0.0, &settings).unwrap();
    assert!(r0.sensing.allocation.stacked().iter().all(|&v| v == 0.0));
    assert!(r0.sensing_rates(&net).iter().all(|&v| v == 0.0));
    let joint = jopc(&net, &QosProblemSpec::comm_prioritized(0.0)).unwrap();
    assert!(
        relative_error(r0.comm.objective, joint.objective) <= 2.0 * settings.bisection_tol,
        "{} vs {}",
        r0.comm.objective,
        joint.objective
    );

    let r1 = sopc(&net, 1.0, &settings).unwrap();
    assert!(r1.rates(&net).unwrap().iter().all(|&v| v == 0.0));
    assert!(r1.sensing.objective > 0.0);

    let rh = sopc(&net, 0.4, &settings).unwrap();
    assert_budgets(&net, &rh.comm.allocation);
    assert_budgets(&net, &rh.sensing.allocation);
    assert!(rh.comm.allocation.stacked().iter().zip(rh.sensing.allocation.stacked().iter()).all(|(c, s)| *c == 0.0 || *s == 0.0));

    assert!(sopc(&net, 1.5, &settings).is_err());
    assert!(sopc(&net, -0.1, &settings).is_err());
}

#[test]
fn spec_validation() {
    let net = small(0);
    let mut bad = QosProblemSpec::comm_prioritized(1.0);
    bad.gamma0 = Some(1.0);
    assert!(optimize(&net, &bad).is_err());
    let mut bad = QosProblemSpec::sensing_prioritized(1.0);
    bad.settings.bisection_tol = 0.0;
    assert!(optimize(&net, &bad).is_err());
    assert!(optimize(&net, &QosProblemSpec::sensing_prioritized(-1.0)).is_err());
    assert!(optimize(&net, &QosProblemSpec::comm_only(2.0)).is_err());
    assert!(jopc(&net, &QosProblemSpec::comm_only(0.5)).is_err());
}
