mod common;

use cellfree_isac::harness::{
    aggregate_level, cs_region, empirical_cdf, quantile, run_cdf, run_experiment, run_region, simulate_drops,
    DropRecord, ExperimentConfig, LevelOutcome, ModeName,
};
use cellfree_isac::Error;
use common::desk_config;
use proptest::prelude::*;

fn desk(n_drops: usize, dir: &std::path::Path) -> ExperimentConfig {
    let mut c = ExperimentConfig {
        scenario: desk_config(),
        ..Default::default()
    };
    c.experiment.n_drops = n_drops;
    c.experiment.master_seed = 11;
    c.experiment.output_dir = dir.to_path_buf();
    c
}

#[test]
fn quantile_is_the_ceil_order_statistic() {
    assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.10).unwrap(), 1.0);
    assert_eq!(quantile(&[4.0, 3.0, 2.0, 1.0], 0.75).unwrap(), 3.0);
    assert!(matches!(quantile(&[], 0.1), Err(Error::Domain(_))));
    assert!(matches!(empirical_cdf(&[]), Err(Error::Domain(_))));
}

#[test]
fn equal_values_give_a_single_step() {
    assert_eq!(empirical_cdf(&[0.7; 9]).unwrap(), vec![(0.7, 1.0)]);
    assert_eq!(quantile(&[0.7; 9], 0.3).unwrap(), 0.7);
}

proptest! {
    #[test]
    fn cdf_and_quantile_agree_at_sample_points(values in prop::collection::vec(-1e3f64..1e3, 1..200)) {
        let cdf = empirical_cdf(&values).unwrap();
        let n = values.len() as f64;
        for w in cdf.windows(2) {
            prop_assert!(w[0].0 < w[1].0 && w[0].1 < w[1].1);
        }
        prop_assert_eq!(cdf.last().unwrap().1, 1.0);
        for &(x, p) in &cdf {
            // F(x) counts the sample; the quantile at F(x) returns x back
            let count = values.iter().filter(|&&v| v <= x).count() as f64;
            prop_assert!((p - count / n).abs() < 1e-12);
            prop_assert_eq!(quantile(&values, p).unwrap(), x);
        }
    }
}

#[test]
fn config_files_parse_and_validate() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/desk.toml");
    let c = ExperimentConfig::from_file(std::path::Path::new(path)).unwrap();
    assert_eq!(c.scenario.num_aps, 8);
    assert_eq!(c.experiment.snr_grid_db[0], f64::NEG_INFINITY);

    let round = ExperimentConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
    assert_eq!(round, c);

    for bad in [
        "[experiment]\nquantile = 1.5\n",
        "[experiment]\nn_drops = 0\n",
        "[experiment]\nmodes = [\"upc\", \"magic\"]\n",
        "[experiment]\nsnr_grid_db = []\n",
        "[experiment]\ntime_share_grid = [0.5, 1.2]\n",
        "[experiment]\nsinr_grid_db = [nan]\n",
        "[scenario]\nnum_apps = 3\n",
        "[scenario]\ntau_p = 60\n",
    ] {
        assert!(matches!(ExperimentConfig::from_toml_str(bad), Err(Error::Config(_))), "{bad}");
    }
    let only_upc = "[experiment]\nmodes = [\"upc\"]\nsnr_grid_db = []\nsinr_grid_db = []\ntime_share_grid = []\n";
    assert!(ExperimentConfig::from_toml_str(only_upc).is_ok());
}

#[test]
fn paper_scale_defaults_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = ExperimentConfig::default();
    assert_eq!((c.scenario.num_aps, c.scenario.num_ues, c.scenario.antennas, c.scenario.num_regions), (16, 16, 4, 4));
    assert_eq!(c.scenario.ap_power, 2.0);
    c.experiment.n_drops = 1;
    c.experiment.output_dir = dir.path().to_path_buf();
    let out = run_experiment(&c).unwrap();
    let rec = &out.records[0];
    assert!(rec.error.is_none());
    assert_eq!(rec.modes.len(), 4);
    for m in &rec.modes {
        assert!(m.error.is_none(), "{:?}", m.error);
        assert_eq!(m.rates.len(), 16);
        assert_eq!(m.receive_snr.len(), 4);
    }
}

#[test]
fn identical_seeds_give_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = run_experiment(&desk(2, a.path())).unwrap();
    let rb = run_experiment(&desk(2, b.path())).unwrap();
    let bytes_a = std::fs::read(&ra.csv).unwrap();
    assert_eq!(bytes_a, std::fs::read(&rb.csv).unwrap());
    let manifest = |p: &std::path::Path| {
        let text = std::fs::read_to_string(p).unwrap();
        text.lines().filter(|l| !l.starts_with("output_dir")).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(manifest(&ra.manifest), manifest(&rb.manifest));

    let text = String::from_utf8(bytes_a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("drop_id,mode,entity_id,metric,value"));
    assert_eq!(text.lines().filter(|l| l.ends_with(",status,optimal")).count(), 8);

    let mut other = desk(2, a.path());
    other.experiment.master_seed = 12;
    let rc = run_experiment(&other).unwrap();
    assert_ne!(text.as_bytes(), std::fs::read(&rc.csv).unwrap().as_slice());
}

#[test]
fn records_match_between_memory_and_disk_runs() {
    let dir = tempfile::tempdir().unwrap();
    let c = desk(3, dir.path());
    let mem = simulate_drops(&c).unwrap();
    let disk = run_experiment(&c).unwrap().records;
    let strip = |r: &[DropRecord]| r.iter().map(|d| d.rows()).collect::<Vec<_>>();
    assert_eq!(strip(&mem), strip(&disk));
    assert_eq!(mem.iter().map(|d| d.drop_id).collect::<Vec<_>>(), vec![0, 1, 2]);
}

#[test]
fn upc_only_runs_no_optimizer() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = desk(2, dir.path());
    c.experiment.modes = vec![ModeName::Upc];
    let out = run_experiment(&c).unwrap();
    for r in &out.records {
        assert_eq!(r.modes.len(), 1);
        assert!(r.modes[0].objective.is_none());
    }
    let text = std::fs::read_to_string(&out.csv).unwrap();
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(1) == Some("upc")));
}

#[test]
fn unwritable_output_fails_before_compute() {
    let file = tempfile::NamedTempFile::new().unwrap();
    let mut c = desk(1000, &file.path().join("sub"));
    c.experiment.n_drops = 1000;
    let start = std::time::Instant::now();
    assert!(matches!(run_experiment(&c), Err(Error::Io { .. })));
    assert!(matches!(run_region(&c), Err(Error::Io { .. })));
    assert!(matches!(run_cdf(&c), Err(Error::Io { .. })));
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn failed_drops_are_recorded() {
    let rec = DropRecord {
        drop_id: 4,
        seed: 0,
        error: Some("degenerate".into()),
        modes: Vec::new(),
        elapsed: Default::default(),
    };
    let rows = rec.rows();
    assert!(rows.iter().any(|r| r.metric == "status" && r.value == "error"));
    assert!(rows.iter().all(|r| r.drop_id == Some(4)));
}

fn outcome(status: &str, rate: f64, sensing: f64) -> LevelOutcome {
    LevelOutcome {
        status: status.into(),
        min_rate: rate,
        min_sensing_rate: sensing,
    }
}

#[test]
fn half_feasible_rule() {
    let ok = |r| outcome("optimal", r, 10.0 * r);
    let bad = outcome("infeasible_at_threshold", 100.0, 100.0);
    let four = [ok(3.0), ok(1.0), bad.clone(), bad.clone()];
    let refs: Vec<&LevelOutcome> = four.iter().collect();
    let p = aggregate_level(ModeName::JopcSp, -3.0, &refs, 4, 0.1).unwrap().unwrap();
    assert_eq!((p.rate, p.sensing_rate, p.feasible_drops), (1.0, 10.0, 2));

    let three = [ok(3.0), bad.clone(), bad.clone(), outcome("error: x", 5.0, 5.0)];
    let refs: Vec<&LevelOutcome> = three.iter().collect();
    assert!(aggregate_level(ModeName::JopcSp, -3.0, &refs, 4, 0.1).unwrap().is_none());
}

#[test]
fn region_sweep_properties() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = desk(4, dir.path());
    c.experiment.snr_grid_db = vec![f64::NEG_INFINITY, -36.0, -30.0];
    c.experiment.sinr_grid_db = vec![f64::NEG_INFINITY, -9.0];
    let out = run_region(&c).unwrap();
    let r = &out.region;

    let t0 = r.separate.iter().find(|p| p.level == 0.0).unwrap();
    assert_eq!(t0.sensing_rate, 0.0);
    let t1 = r.separate.iter().find(|p| p.level == 1.0).unwrap();
    assert_eq!(t1.rate, 0.0);

    let front = r.joint_front();
    assert!(!front.is_empty());
    for w in front.windows(2) {
        assert!(w[0].rate <= w[1].rate && w[0].sensing_rate >= w[1].sensing_rate);
    }

    // per drop, raising the sensing floor never helps the rate
    let tol = 2.0 * c.experiment.bisection_tol;
    for d in &r.drops {
        let feasible: Vec<&LevelOutcome> = d.comm_prioritized.iter().filter(|o| o.feasible()).collect();
        for w in feasible.windows(2) {
            assert!(w[1].min_rate <= w[0].min_rate * (1.0 + tol), "drop {}", d.drop_id);
        }
        let feasible: Vec<&LevelOutcome> = d.sensing_prioritized.iter().filter(|o| o.feasible()).collect();
        for w in feasible.windows(2) {
            assert!(w[1].min_sensing_rate <= w[0].min_sensing_rate * (1.0 + tol), "drop {}", d.drop_id);
        }
    }

    let again = cs_region(&c).unwrap();
    assert_eq!(&again, r);
    let text = std::fs::read_to_string(&out.csv).unwrap();
    assert!(text.lines().any(|l| l.starts_with(",sopc,level0,sensing_rate_quantile,0.0")));
}

#[test]
fn cdf_output_covers_every_sample() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = desk(2, dir.path());
    c.experiment.modes = vec![ModeName::Upc, ModeName::Sopc];
    let out = run_cdf(&c).unwrap();
    for s in &out.samples {
        assert_eq!(s.drops_used, 2);
        assert_eq!(s.rates.len(), 16);
    }
    let text = std::fs::read_to_string(&out.csv).unwrap();
    let last_prob = text
        .lines()
        .filter(|l| l.starts_with(",upc,") && l.contains(",rate_cdf,"))
        .last()
        .unwrap();
    assert!(last_prob.ends_with(",1.0"));
}
