mod args;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use gasched_core::bench::{
    baseline_evaluate, combined_csv, run_test_case_one, run_test_case_three, run_test_case_two, synthetic_suite,
    BenchSettings, SuiteParams,
};
use gasched_core::estimator::{estimate_all, RunHistory};
use gasched_core::ga::evolve_build;
use gasched_core::io::{
    generate_synthetic_build, load_build_spec_file, load_history, load_priority_list, read, write,
    write_reports, BenchmarkRow, ConfigEcho, ScheduleReport, SyntheticParams,
};
use gasched_core::model::{validate_build, Build, Instance, MachineAllocation};
use gasched_core::simulator::{simulate, SimVerdict};
use gasched_core::time::ms_to_secs;
use gasched_core::{Error, Result};

use args::{BenchCase, Cli, Command, EstimateArgs, ShapeArgs};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Validate { build } => validate(&build),
        Command::Estimate { build, est, out_dir } => estimate(&build, &est, out_dir.as_deref()),
        Command::Schedule {
            build,
            est,
            ga,
            out_dir,
        } => {
            let build = load_build_spec_file(&build)?;
            let history = history(&est)?;
            let weights = ga.weights()?;
            let config = ga.config();
            let (inst, run_times, out) =
                evolve_build(&build, &history, &est.config(ga.seed), &weights, &config)?;
            let baseline = baseline_evaluate(&inst, &run_times, &MachineAllocation::max_of(inst.machine_types()))?;
            let report = ScheduleReport::new(
                &inst,
                &out.schedule,
                Some(out.fitness),
                Some(ConfigEcho::new(ga.seed, &weights)),
            );
            println!("jobs:            {}", inst.n_jobs());
            println!("seed:            {}", ga.seed);
            println!(
                "baseline:        {:.3} s on {} machines",
                ms_to_secs(baseline.makespan),
                baseline.allocation.total()
            );
            println!("makespan:        {:.3} s", report.makespan_s);
            println!("allocation:      {}", format_alloc(&report.allocation));
            println!(
                "fitness:         {:.6} (alpha {:.6}, beta {:.6})",
                out.fitness.total, out.fitness.alpha, out.fitness.beta
            );
            println!("generations run: {}", out.generations_run);
            if let Some(dir) = out_dir {
                for p in write_reports(&dir, Some(&report), Some(&out.trace), None)? {
                    println!("wrote {}", p.display());
                }
            }
            Ok(())
        }
        Command::Simulate {
            build,
            priority,
            alloc,
            est,
            out_dir,
        } => {
            let build = load_build_spec_file(&build)?;
            let inst = Instance::validated(build.clone())?;
            let order = priority_of(&inst, priority.as_deref())?;
            let alloc = parse_alloc(&inst, alloc.as_deref())?;
            let run_times = estimate_ms(&build, &est)?;
            match simulate(&inst, &order, &alloc, &run_times)? {
                SimVerdict::Scheduled(sched) => {
                    let report = ScheduleReport::new(&inst, &sched, None, None);
                    println!("makespan:   {:.3} s", report.makespan_s);
                    println!("allocation: {}", format_alloc(&report.allocation));
                    if let Some(dir) = out_dir {
                        for p in write_reports(&dir, Some(&report), None, None)? {
                            println!("wrote {}", p.display());
                        }
                    }
                    Ok(())
                }
                SimVerdict::Deadlock { unscheduled } => Err(Error::Contract(format!(
                    "priority list deadlocks; never started: {}",
                    unscheduled.join(", ")
                ))),
            }
        }
        Command::Repair { build, priority } => {
            let inst = Instance::validated(load_build_spec_file(&build)?)?;
            let order = priority_of(&inst, priority.as_deref())?;
            let fixed = gasched_core::ga::repair_priority_list(&inst, &order)?;
            for name in inst.names_of(&fixed) {
                println!("{name}");
            }
            Ok(())
        }
        Command::Gen {
            shape,
            jobs,
            seed,
            out,
        } => {
            let doc = generate_synthetic_build(&synthetic(&shape, jobs, seed))?;
            match out {
                Some(path) => {
                    write(&path, doc.to_json().as_bytes())?;
                    println!("wrote {} ({jobs} jobs, seed {seed})", path.display());
                }
                None => print!("{}", doc.to_json()),
            }
            Ok(())
        }
        Command::Bench {
            case,
            shape,
            builds,
            min_jobs,
            max_jobs,
            suite_seed,
            seeds,
            pin,
            ga,
            out_dir,
        } => {
            let params = SuiteParams {
                builds,
                jobs: (min_jobs, max_jobs),
                template: synthetic(&shape, min_jobs, 0),
                seed: suite_seed,
            };
            let suite = synthetic_suite(&params)?;
            let settings = BenchSettings {
                ga: ga.config(),
                weights: ga.weights()?,
                pin_baseline: pin,
            };
            let mut extra: Option<Vec<u8>> = None;
            let rows = match case {
                BenchCase::One => run_test_case_one(&suite, &settings)?,
                BenchCase::Two => {
                    let first = suite.first().ok_or(Error::Empty("benchmark suite"))?;
                    let list: Vec<u64> = (ga.seed..ga.seed + seeds).collect();
                    let two = run_test_case_two(first, &list, &settings)?;
                    println!(
                        "makespan range {:.3}..{:.3} s (spread {:.2}%)",
                        two.dispersion.min_makespan_s,
                        two.dispersion.max_makespan_s,
                        100.0 * two.dispersion.relative_spread
                    );
                    two.rows
                }
                BenchCase::Three => {
                    let three = run_test_case_three(&suite, &settings)?;
                    println!("note: {}", three.units_note);
                    let wins = three
                        .combined
                        .iter()
                        .filter(|c| c.combined_s <= c.baseline_makespan_s)
                        .count();
                    println!(
                        "GA makespan + search time beats the baseline on {wins}/{} builds",
                        three.combined.len()
                    );
                    extra = Some(combined_csv(&three.combined)?);
                    three.rows
                }
            };
            summarize(&rows);
            if let Some(dir) = out_dir {
                for p in write_reports(&dir, None, None, Some(&rows))? {
                    println!("wrote {}", p.display());
                }
                if let Some(data) = extra {
                    println!("wrote {}", write(&dir.join("combined.csv"), &data)?.display());
                }
            }
            Ok(())
        }
    }
}

fn validate(path: &Path) -> Result<()> {
    let text = read(path)?;
    let build = gasched_core::io::BuildSpecDocument::parse(&text)?.to_build();
    let report = validate_build(&build);
    if report.is_ok() {
        println!(
            "ok: {} jobs, {} machine types",
            build.jobs.len(),
            build.machine_types.len()
        );
    } else {
        for issue in &report.issues {
            println!("{issue}");
        }
    }
    report.into_result()
}

fn estimate(path: &Path, est: &EstimateArgs, out_dir: Option<&Path>) -> Result<()> {
    let build = load_build_spec_file(path)?;
    let history = history(est)?;
    let estimates = estimate_all(&build, &history, &est.config(0))?;
    let width = build.jobs.iter().map(|j| j.name.len()).max().unwrap_or(0);
    for job in &build.jobs {
        let source = if job.declared_run_time.is_some() {
            "declared"
        } else if history.get(&job.name).is_some() {
            "history"
        } else {
            "unseen"
        };
        println!("{:width$}  {:>10.3} s  {source}", job.name, estimates[&job.name]);
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
        let json = serde_json::to_string_pretty(&estimates).expect("estimates serialize") + "\n";
        println!("wrote {}", write(&dir.join("estimates.json"), json.as_bytes())?.display());
    }
    Ok(())
}

fn history(est: &EstimateArgs) -> Result<RunHistory> {
    match &est.history {
        Some(p) => load_history(&read(p)?),
        None => Ok(RunHistory::new()),
    }
}

fn estimate_ms(build: &Build, est: &EstimateArgs) -> Result<Vec<u64>> {
    gasched_core::estimator::estimate_ms(build, &history(est)?, &est.config(0))
}

fn priority_of(inst: &Instance, path: Option<&Path>) -> Result<Vec<usize>> {
    match path {
        Some(p) => inst.resolve_priority(&load_priority_list(&read(p)?)),
        None => Ok(inst.original_order()),
    }
}

fn parse_alloc(inst: &Instance, spec: Option<&str>) -> Result<MachineAllocation> {
    let types = inst.machine_types();
    let mut named: BTreeMap<String, u32> = MachineAllocation::max_of(types).named(types);
    for part in spec.unwrap_or("").split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let bad = || Error::Parse {
            context: "--alloc".into(),
            message: format!("expected `type=count`, got `{part}`"),
        };
        let (name, count) = part.split_once('=').ok_or_else(bad)?;
        let count: u32 = count.trim().parse().map_err(|_| bad())?;
        let slot = named.get_mut(name.trim()).ok_or_else(|| Error::Parse {
            context: "--alloc".into(),
            message: format!("unknown machine type `{}`", name.trim()),
        })?;
        *slot = count;
    }
    MachineAllocation::from_named(&named, types)
}

fn synthetic(shape: &ShapeArgs, n_jobs: usize, seed: u64) -> SyntheticParams {
    SyntheticParams {
        n_jobs,
        edge_prob: shape.edge_prob,
        n_types: shape.types,
        max_counts: shape.max_counts.clone(),
        runtime_range: (shape.min_runtime, shape.max_runtime),
        seed,
    }
}

fn format_alloc(alloc: &BTreeMap<String, u32>) -> String {
    alloc
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn summarize(rows: &[BenchmarkRow]) {
    if rows.is_empty() {
        return;
    }
    let mut imp: Vec<f64> = rows.iter().map(|r| r.improvement_pct).collect();
    imp.sort_by(f64::total_cmp);
    let n = imp.len();
    let median = if n % 2 == 1 { imp[n / 2] } else { (imp[n / 2 - 1] + imp[n / 2]) / 2.0 };
    let not_worse = rows
        .iter()
        .filter(|r| r.ga_makespan_s <= r.baseline_makespan_s)
        .count();
    println!("builds:             {}", rows.len());
    println!("median improvement: {median:.2}%");
    println!("range:              {:.2}% .. {:.2}%", imp[0], imp[imp.len() - 1]);
    println!("not worse:          {not_worse}/{}", rows.len());
}
