use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use hapgrip_core::harness::record::{record_trial, replay, RunManifest, RESULT};
use hapgrip_core::harness::setup::prepare_trial;
use hapgrip_core::harness::{
    render_report, run_experiment, series_csv, Condition, ExperimentSpec, ExperimentSummary,
    ReportFormat, TrialConfig, TrialResult, TrialRow,
};
use serde::Serialize;

use crate::config::Resolved;
use crate::{Cli, Command, Failure};

/// Reproducibility record for commands that are not a single trial.
#[derive(Serialize)]
struct CommandManifest<'a, T: Serialize> {
    version: &'static str,
    command: &'static str,
    seed: u64,
    spec: &'a T,
}

fn runtime<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Runtime(e.into())
}

fn config_err(msg: String) -> Failure {
    Failure::Config(anyhow!(msg))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))
            .map_err(Failure::Runtime)?;
    }
    fs::write(path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(Failure::Runtime)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    write_file(
        path,
        &(serde_json::to_string_pretty(value).map_err(runtime)? + "\n"),
    )
}

pub fn parse_condition(s: &str) -> Result<Condition, Failure> {
    s.parse::<Condition>().map_err(Failure::from)
}

pub fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let cfg = Resolved::from_cli(cli)?;
    match &cli.command {
        Command::Calibrate { trial } => {
            calibrate(&cfg, &trial.object, trial.seed, trial.out.as_ref())
        }
        Command::Run {
            trial,
            condition,
            no_frames,
        } => run(
            &cfg,
            &trial.object,
            condition,
            trial.seed,
            trial.out.as_ref(),
            !no_frames,
        ),
        Command::Experiment {
            n,
            objects,
            conditions,
            base_seed,
            out,
        } => experiment(&cfg, *n, objects, conditions, *base_seed, out.as_ref()),
        Command::Replay { dir } => replay_cmd(dir),
        Command::Report {
            input,
            format,
            output,
        } => report(input, format, output.as_ref()),
        Command::Serve {
            port,
            object,
            condition,
            seed,
            out,
            max_sessions,
            fast,
        } => {
            cfg.object(object)?;
            let opts = crate::serve::ServeOptions {
                port: *port,
                trial: TrialConfig {
                    object: object.clone(),
                    condition: parse_condition(condition)?,
                    seed: cfg.seed(*seed),
                    sim: cfg.file.sim.clone(),
                },
                out: out.clone().or_else(|| cfg.file.out.clone()),
                max_sessions: *max_sessions,
                fast: *fast,
            };
            crate::serve::serve(&opts, &cfg.library)
        }
    }
}

fn calibrate(
    cfg: &Resolved,
    object: &str,
    seed: Option<u64>,
    out: Option<&PathBuf>,
) -> Result<(), Failure> {
    let spec = cfg.object(object)?;
    let seed = cfg.seed(seed);
    let out = cfg.out(out, || {
        PathBuf::from(format!("runs/calibration-{object}-{seed}"))
    });
    let setup = prepare_trial(spec, &cfg.file.sim, seed)?;
    fs::create_dir_all(&out).map_err(runtime)?;
    setup
        .vest_calibration
        .save(&out.join("calibration.json"))
        .map_err(runtime)?;
    write_json(&out.join("emg_calibration.json"), &setup.emg_calibration)?;
    write_json(
        &out.join("manifest.json"),
        &CommandManifest {
            version: env!("CARGO_PKG_VERSION"),
            command: "calibrate",
            seed,
            spec: &serde_json::json!({ "object": spec, "sim": cfg.file.sim }),
        },
    )?;
    println!(
        "{object}: reference pose {} (zero-based), target front intensity {:.1}",
        setup.reference_pose.external(),
        setup.target_intensity
    );
    for c in setup.vest_calibration.iter() {
        println!(
            "  {:<6} cci_max {:.6}  eda_max {:.0}",
            c.finger.to_string(),
            c.cci_max,
            c.eda_max
        );
    }
    println!("  emg e_max {:?}", setup.emg_calibration.e_max());
    println!("wrote {}", out.display());
    Ok(())
}

fn run(
    cfg: &Resolved,
    object: &str,
    condition: &str,
    seed: Option<u64>,
    out: Option<&PathBuf>,
    frames: bool,
) -> Result<(), Failure> {
    cfg.object(object)?;
    let condition = parse_condition(condition)?;
    if condition == Condition::Manual {
        return Err(config_err("manual trials run through `serve`".into()));
    }
    let seed = cfg.seed(seed);
    let out = cfg.out(out, || {
        PathBuf::from(format!("runs/{object}-{condition}-{seed}"))
    });
    let trial = TrialConfig {
        object: object.to_string(),
        condition,
        seed,
        sim: cfg.file.sim.clone(),
    };
    let result = record_trial(&trial, &cfg.library, &out, frames)?;
    println!(
        "{object} {condition} seed {seed}: {} in {:.2} s, {} slips, {} deformations -> {}",
        if result.success { "success" } else { "failure" },
        result.completion_time,
        result.slip_count,
        result.deformation_count,
        out.display()
    );
    Ok(())
}

fn experiment(
    cfg: &Resolved,
    n: usize,
    objects: &[String],
    conditions: &[String],
    base_seed: Option<u64>,
    out: Option<&PathBuf>,
) -> Result<(), Failure> {
    if n == 0 {
        return Err(config_err("--n must be at least 1".into()));
    }
    let objects: Vec<String> = if objects.is_empty() {
        cfg.library.iter().map(|o| o.name.clone()).collect()
    } else {
        objects.to_vec()
    };
    for o in &objects {
        cfg.object(o)?;
    }
    let conditions = conditions
        .iter()
        .map(|c| parse_condition(c))
        .collect::<Result<Vec<_>, _>>()?;
    let base_seed = cfg.seed(base_seed);
    let spec = ExperimentSpec {
        objects,
        conditions,
        n_per_cell: n,
        base_seed,
        sim: cfg.file.sim.clone(),
    };
    let out = cfg.out(out, || {
        PathBuf::from(format!("runs/experiment-{base_seed}"))
    });
    let (summary, _) = run_experiment(&spec, &cfg.library)?;
    let table = render_report(&summary, ReportFormat::Table)?;
    write_file(
        &out.join("summary.json"),
        &render_report(&summary, ReportFormat::Json)?,
    )?;
    write_file(&out.join("report.txt"), &table)?;
    write_json(
        &out.join("manifest.json"),
        &CommandManifest {
            version: env!("CARGO_PKG_VERSION"),
            command: "experiment",
            seed: base_seed,
            spec: &serde_json::json!({ "experiment": spec, "library": cfg.library }),
        },
    )?;
    print!("{table}");
    println!("wrote {}", out.display());
    Ok(())
}

fn replay_cmd(dir: &Path) -> Result<(), Failure> {
    if !dir.join("manifest.json").is_file() {
        return Err(config_err(format!(
            "{} is not a run directory",
            dir.display()
        )));
    }
    let report = replay(dir)?;
    if report.is_match() {
        println!(
            "replay ok: {} frames, all metrics match",
            report.frames_checked
        );
        Ok(())
    } else {
        for m in &report.mismatches {
            eprintln!("mismatch: {m}");
        }
        Err(Failure::Runtime(anyhow!(
            "{} mismatches across {} frames",
            report.mismatches.len(),
            report.frames_checked
        )))
    }
}

fn report(input: &Path, format: &str, output: Option<&PathBuf>) -> Result<(), Failure> {
    let format: ReportFormat = format.parse()?;
    let text = if input.is_dir() {
        let path = input.join(RESULT);
        let raw = fs::read_to_string(&path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(Failure::Config)?;
        let result: TrialResult = serde_json::from_str(&raw)
            .with_context(|| format!("parsing {}", path.display()))
            .map_err(Failure::Config)?;
        let manifest = RunManifest::load(input).ok();
        match format {
            ReportFormat::Csv => series_csv(&result.series)?,
            ReportFormat::Json => {
                serde_json::to_string_pretty(&TrialRow::from_result(&result)).map_err(runtime)?
                    + "\n"
            }
            ReportFormat::Table => {
                let objects = vec![manifest.map_or(result.object.clone(), |m| m.object.name)];
                let summary = ExperimentSummary::from_rows(
                    &objects,
                    &[result.condition],
                    vec![TrialRow::from_result(&result)],
                );
                render_report(&summary, ReportFormat::Table)?
            }
        }
    } else {
        let raw = fs::read_to_string(input)
            .with_context(|| format!("reading {}", input.display()))
            .map_err(Failure::Config)?;
        let summary: ExperimentSummary = serde_json::from_str(&raw)
            .with_context(|| format!("parsing {}", input.display()))
            .map_err(Failure::Config)?;
        render_report(&summary, format)?
    };
    match output {
        Some(p) => write_file(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
