use gasched_core::estimator::RunHistory;
use gasched_core::ga::{evolve, FitnessWeights, GaConfig};
use gasched_core::io::*;
use gasched_core::model::{validate_build, Instance};
use proptest::prelude::*;

fn synthetic(seed: u64, n_jobs: usize) -> BuildSpecDocument {
    generate_synthetic_build(&SyntheticParams {
        n_jobs,
        seed,
        ..Default::default()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn build_spec_round_trips(seed in any::<u64>(), n in 1usize..60) {
        let doc = synthetic(seed, n);
        let build = load_build_spec(&doc.to_json()).unwrap();
        let again = load_build_spec(&save_build_spec(&build)).unwrap();
        prop_assert_eq!(&again, &build);
        prop_assert_eq!(save_build_spec(&again), doc.to_json());
    }

    #[test]
    fn synthetic_builds_validate(seed in any::<u64>(), n in 1usize..120, p in 0.0f64..=1.0) {
        let doc = generate_synthetic_build(&SyntheticParams { n_jobs: n, edge_prob: p, seed, ..Default::default() }).unwrap();
        prop_assert!(validate_build(&doc.to_build()).is_ok());
        prop_assert_eq!(doc.jobs.len(), n);
    }

    #[test]
    fn history_round_trips(entries in prop::collection::btree_map("[a-z]{1,8}", prop::collection::vec(0.001f64..1e5, 1..6), 0..10)) {
        let h = RunHistory::from_map(entries).unwrap();
        prop_assert_eq!(load_history(&save_history(&h)).unwrap(), h);
    }
}

#[test]
fn same_seed_same_document() {
    assert_eq!(synthetic(5, 40), synthetic(5, 40));
    assert_ne!(synthetic(5, 40), synthetic(6, 40));
}

#[test]
fn reports_round_trip_and_rewrite_identically() {
    let build = synthetic(11, 25).to_build();
    let inst = Instance::validated(build.clone()).unwrap();
    let rt: Vec<u64> = build
        .jobs
        .iter()
        .map(|j| (j.declared_run_time.unwrap() * 1000.0) as u64)
        .collect();
    let weights = FitnessWeights::default();
    let config = GaConfig {
        max_generations: 20,
        rng_seed: 3,
        ..Default::default()
    };
    let out = evolve(&inst, &rt, &weights, &config).unwrap();
    let report = ScheduleReport::new(&inst, &out.schedule, Some(out.fitness), Some(ConfigEcho::new(3, &weights)));
    report.check(&inst, &rt).unwrap();
    let parsed = ScheduleReport::parse(&report.to_json()).unwrap();
    assert_eq!(parsed, report);
    assert_eq!(parsed.to_schedule(&inst).unwrap(), out.schedule);

    let rows = vec![BenchmarkRow::new("b0", 100.0, 80.0, 6, 4, 1.25, 3)];
    assert_eq!(rows[0].improvement_pct, 20.0);
    let dir = tempfile::tempdir().unwrap();
    let a = write_reports(dir.path(), Some(&report), Some(&out.trace), Some(&rows)).unwrap();
    let first: Vec<Vec<u8>> = a.iter().map(|p| std::fs::read(p).unwrap()).collect();
    write_reports(dir.path(), Some(&report), Some(&out.trace), Some(&rows)).unwrap();
    let second: Vec<Vec<u8>> = a.iter().map(|p| std::fs::read(p).unwrap()).collect();
    assert_eq!(first, second);
    assert_eq!(parse_benchmark_csv(&first[2]).unwrap(), rows);
    let trace_text = String::from_utf8(first[1].clone()).unwrap();
    assert_eq!(trace_text.lines().count(), out.trace.entries.len() + 1);
}

#[test]
fn tampered_report_fails_check() {
    let build = synthetic(2, 10).to_build();
    let inst = Instance::validated(build.clone()).unwrap();
    let rt: Vec<u64> = build
        .jobs
        .iter()
        .map(|j| (j.declared_run_time.unwrap() * 1000.0) as u64)
        .collect();
    let out = evolve(&inst, &rt, &FitnessWeights::default(), &GaConfig { max_generations: 5, ..Default::default() }).unwrap();
    let mut report = ScheduleReport::new(&inst, &out.schedule, None, None);
    report.assignments[0].end_s += 1.0;
    assert!(report.check(&inst, &rt).is_err());
    let mut report = ScheduleReport::new(&inst, &out.schedule, None, None);
    report.assignments.pop();
    assert!(report.check(&inst, &rt).is_err());
}

#[test]
fn bad_inputs_are_rejected() {
    assert!(load_build_spec("not json").is_err());
    let unknown_dep = r#"{"jobs":[{"name":"a","deps":["zzz"],"machine_type":"l"}],"machine_types":[{"name":"l","max_count":1}]}"#;
    assert!(load_build_spec(unknown_dep).unwrap_err().is_input_error());
    assert!(load_history(r#"{"a": [0.0]}"#).is_err());
    assert_eq!(load_history("  ").unwrap(), RunHistory::new());
    assert_eq!(
        load_priority_list("# order\nb\n\n a \n"),
        vec!["b".to_string(), "a".to_string()]
    );
    let mut header_only = benchmark_csv(&[]).unwrap();
    assert_eq!(parse_benchmark_csv(&header_only).unwrap(), vec![]);
    header_only[0] = b'x';
    assert!(parse_benchmark_csv(&header_only).is_err());
}
