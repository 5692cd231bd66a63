//! Acceptance checks, one PASS/FAIL line each. Exits non-zero if any fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{fusion_oracle, quantize_oracle, rel_close, FrameCase};
use hapgrip_core::emg::{fuse_poses, quantize_pose, ButterworthLowPass, PoseIndex};
use hapgrip_core::haptic::{map_cci_to_intensity, FingerCalibration};
use hapgrip_core::harness::record::{record_trial, replay, TRACE};
use hapgrip_core::harness::{run_experiment, Condition, ExperimentSpec, SimConfig, TrialConfig};
use hapgrip_core::sim::default_objects;
use hapgrip_core::tactile::{capture_baseline, extract_metrics, MetricsConfig, TactileFrame};
use hapgrip_core::FingerId;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mut contacts = 0;
    let finger = FingerId::Index;
    for i in 0..100 {
        let case = FrameCase::random(&mut rng);
        let baseline =
            capture_baseline(&case.baseline_frames(finger)).map_err(|e| e.to_string())?;
        let got = extract_metrics(&case.frame(finger), &baseline, &MetricsConfig::default())
            .map_err(|e| e.to_string())?;
        match case.oracle() {
            None => ensure(!got.contact, || {
                format!("frame {i}: contact reported, oracle saw none")
            })?,
            Some(want) => {
                contacts += 1;
                ensure(got.contact, || format!("frame {i}: contact missed"))?;
                ensure(got.eda == want.eda, || {
                    format!("frame {i}: EDA {} vs {}", got.eda, want.eda)
                })?;
                for (name, a, b) in [
                    ("mu_x", got.centroid_x, want.mu_x),
                    ("mu_y", got.centroid_y, want.mu_y),
                    ("sigma", got.sigma, want.sigma),
                    ("T", got.threshold, want.threshold),
                    ("CCI", got.cci, want.cci),
                ] {
                    ensure(rel_close(a, b, 1e-9), || {
                        format!("frame {i}: {name} {a} vs {b}")
                    })?;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "100 frames ({contacts} with contact) in {elapsed:?}"
    ))
}

fn grey_frames(w: usize, h: usize, level: u8) -> Vec<TactileFrame> {
    (0..10)
        .map(|_| TactileFrame::filled(FingerId::Thumb, 0.0, w, h, [level; 3]))
        .collect()
}

fn worked_examples() -> Outcome {
    let cfg = MetricsConfig::default();
    let close = |name: &str, a: f64, b: f64| {
        ensure((a - b).abs() <= 1e-4, || format!("{name}: {a} vs {b}"))
    };

    let baseline = capture_baseline(&grey_frames(3, 3, 10)).map_err(|e| e.to_string())?;
    let mut frame = TactileFrame::filled(FingerId::Thumb, 0.0, 3, 3, [10; 3]);
    frame.set_pixel(1, 1, [100; 3]);
    frame.set_pixel(2, 1, [40; 3]);
    let m = extract_metrics(&frame, &baseline, &cfg).map_err(|e| e.to_string())?;
    close("3x3 mu_x", m.centroid_x, 1.25)?;
    close("3x3 mu_y", m.centroid_y, 1.0)?;
    close("3x3 sigma", m.sigma, 0.43301)?;
    close("3x3 T", m.threshold, 89.4457)?;
    ensure(m.eda == 1, || format!("3x3 EDA {}", m.eda))?;
    close("3x3 CCI", m.cci, 90.0)?;

    let baseline = capture_baseline(&grey_frames(2, 2, 5)).map_err(|e| e.to_string())?;
    let frame = TactileFrame::filled(FingerId::Thumb, 0.0, 2, 2, [15; 3]);
    let m = extract_metrics(&frame, &baseline, &cfg).map_err(|e| e.to_string())?;
    close("2x2 sigma", m.sigma, std::f64::consts::FRAC_1_SQRT_2)?;
    close("2x2 T", m.threshold, 9.0949)?;
    ensure(m.eda == 4, || format!("2x2 EDA {}", m.eda))?;
    close("2x2 CCI", m.cci, 2.5)?;
    Ok("3x3 and uniform 2x2 cases".into())
}

fn sigmoid_contract() -> Outcome {
    for max in [0.05, 1.0, 3.7, 250.0, 4096.0] {
        let calib =
            FingerCalibration::new(FingerId::Middle, max, max).map_err(|e| e.to_string())?;
        let at = |x: f64| map_cci_to_intensity(x, &calib, 0.01).map_err(|e| e.to_string());
        ensure(at(0.0)? == 1, || format!("max {max}: intensity(0)"))?;
        ensure(at(max / 2.0)? == 50, || {
            format!("max {max}: intensity(max/2)")
        })?;
        ensure(at(max)? == 99, || format!("max {max}: intensity(max)"))?;
        let mut prev = 0u8;
        for i in 0..10_000 {
            let x = 10.0 * max * i as f64 / 9_999.0;
            let v = at(x)?;
            ensure(v >= prev && v <= 100, || {
                format!("max {max}: {v} after {prev} at x={x}")
            })?;
            prev = v;
        }
    }
    Ok("anchors 1/50/99, monotone over 10^4 points to 10x max".into())
}

fn filter_contract() -> Outcome {
    let mut f = ButterworthLowPass::design(4, 50.0, 1000.0).map_err(|e| e.to_string())?;
    let dc = f.magnitude(0.0);
    let step = (0..4000).map(|_| f.process(1.0)).last().unwrap_or(0.0);
    let (h50, h200) = (f.magnitude(50.0), f.magnitude(200.0));
    ensure((dc - 1.0).abs() < 1e-6 && (step - 1.0).abs() < 1e-6, || {
        format!("DC gain {dc}, step {step}")
    })?;
    ensure(
        (h50 - std::f64::consts::FRAC_1_SQRT_2).abs() <= 0.05,
        || format!("|H(50)| = {h50}"),
    )?;
    ensure(h200 < 0.01, || format!("|H(200)| = {h200}"))?;
    Ok(format!("DC {dc:.9}, |H(50)| {h50:.5}, |H(200)| {h200:.2e}"))
}

fn truth_tables() -> Outcome {
    let e_max = 2.5;
    let poses: Vec<u8> = [0.0, 0.3, 1.0, 1.5]
        .iter()
        .map(|k| {
            quantize_pose(k * e_max, e_max)
                .map(|p| p.value())
                .map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;
    ensure(poses == [1, 2, 5, 5], || {
        format!("boundary set gave {poses:?}")
    })?;
    for k in 0..=300 {
        let e = k as f64 * 0.005 * e_max;
        let got = quantize_pose(e, e_max).map_err(|e| e.to_string())?.value();
        ensure(got == quantize_oracle(e, e_max), || {
            format!("quantizer at {e}")
        })?;
    }
    let pose = |v: u8| PoseIndex::new(v).map_err(|e| e.to_string());
    for a in 1..=5 {
        for b in 1..=5 {
            for c in 1..=5 {
                let got = fuse_poses(pose(a)?, pose(b)?, pose(c)?).value();
                let want = fusion_oracle([a, b, c]);
                ensure(got == want, || {
                    format!("fusion({a},{b},{c}) = {got}, expected {want}")
                })?;
            }
        }
    }
    Ok("boundaries {1,2,5,5}, 125 fusion triples".into())
}

fn directional_and_correlation() -> (Outcome, Outcome) {
    let objects = default_objects();
    let spec = ExperimentSpec {
        objects: objects.iter().map(|o| o.name.clone()).collect(),
        conditions: vec![Condition::Haptic, Condition::NonHaptic],
        n_per_cell: 20,
        base_seed: 1000,
        sim: SimConfig::default(),
    };
    let start = Instant::now();
    let summary = match run_experiment(&spec, &objects) {
        Ok((summary, _)) => summary,
        Err(e) => return (Err(e.to_string()), Err("experiment failed".into())),
    };
    let elapsed = start.elapsed();
    let mean = |object: &str,
                c: Condition,
                pick: fn(&hapgrip_core::harness::CellSummary) -> Option<f64>| {
        summary.cell(object, c).and_then(pick).unwrap_or(f64::NAN)
    };

    let directional = (|| {
        let mut parts = Vec::new();
        for object in ["object1", "object2"] {
            let h = mean(object, Condition::Haptic, |c| c.mean_slip);
            let n = mean(object, Condition::NonHaptic, |c| c.mean_slip);
            ensure(h <= 0.7 * n, || format!("{object} slips {h} vs {n}"))?;
            parts.push(format!("{object} slips {h:.2} vs {n:.2}"));
        }
        let h = mean("object3", Condition::Haptic, |c| c.mean_deformation);
        let n = mean("object3", Condition::NonHaptic, |c| c.mean_deformation);
        ensure(h < n, || format!("object3 deformations {h} vs {n}"))?;
        parts.push(format!("object3 deformations {h:.2} vs {n:.2}"));
        ensure(elapsed < Duration::from_secs(60), || {
            format!("took {elapsed:?}")
        })?;
        parts.push(format!("{elapsed:.1?}"));
        Ok(parts.join(", "))
    })();

    let correlation = (|| {
        let mut worst = f64::INFINITY;
        let mut count = 0;
        for row in summary
            .trials
            .iter()
            .filter(|r| r.condition == Condition::Haptic && r.success)
        {
            let r = row.r_pose_cci.unwrap_or(f64::NAN);
            ensure(r > 0.3, || {
                format!("{} seed {}: r = {r}", row.object, row.seed)
            })?;
            worst = worst.min(r);
            count += 1;
        }
        ensure(count > 0, || "no successful haptic trials".into())?;
        Ok(format!(
            "{count} successful haptic trials, min r {worst:.3}"
        ))
    })();
    (directional, correlation)
}

fn determinism() -> Outcome {
    let objects = default_objects();
    let mut config = TrialConfig::new("object3", Condition::Haptic, 314);
    config.sim.time_limit = 2.0;
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (root.path().join("a"), root.path().join("b"));
    record_trial(&config, &objects, &a, true).map_err(|e| e.to_string())?;
    record_trial(&config, &objects, &b, false).map_err(|e| e.to_string())?;
    let ta = std::fs::read(a.join(TRACE)).map_err(|e| e.to_string())?;
    let tb = std::fs::read(b.join(TRACE)).map_err(|e| e.to_string())?;
    ensure(!ta.is_empty() && ta == tb, || "trace logs differ".into())?;
    let report = replay(&a).map_err(|e| e.to_string())?;
    ensure(report.is_match(), || {
        format!("replay: {:?}", report.mismatches.first())
    })?;
    Ok(format!(
        "identical traces, {} frames replayed",
        report.frames_checked
    ))
}

fn main() -> ExitCode {
    let (six, seven) = directional_and_correlation();
    let results = [
        ("metric pipeline matches oracle", oracle_equivalence()),
        ("worked examples", worked_examples()),
        ("sigmoid contract", sigmoid_contract()),
        ("filter contract", filter_contract()),
        ("quantizer and fusion truth tables", truth_tables()),
        ("haptic feedback reduces slips and deformation", six),
        (
            "pose correlates with CCI in successful haptic trials",
            seven,
        ),
        ("determinism and replay", determinism()),
    ];
    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
