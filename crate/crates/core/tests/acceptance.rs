//! Acceptance criteria 1–10, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so every verdict line is printed. The
//! process exits non-zero when a criterion outside `KNOWN_RED` fails; the
//! known-red criteria are measured and reported the same way, and their
//! analysis lives in the README.

use std::f64::consts::{PI, TAU};
use std::process::ExitCode;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};

use gaitsync::harness::config::DEFAULT_F_SWEEP;
use gaitsync::harness::{run, write_outputs, AudioSource, Mode, RunReport, ScenarioConfig};
use gaitsync::music::{analyze_clip, interpolate_phase, synth_click_track, AnalysisConfig, ClickSpec};
use gaitsync::oscillator::{normalize_grf, select_params, OscillatorBank, OscillatorParams};
use gaitsync::phase::{ring, wrap_2pi, wrap_pi, FOOTFALL_PHASE};
use gaitsync::plant::{grf_from_phases, PlantConfig};
use gaitsync::rewards::{reward_phase, reward_r1, reward_r2, reward_rhythm};

/// Criteria measured faithfully but not met by this implementation.
const KNOWN_RED: [usize; 2] = [4, 5];

const TABLE_TEMPI: [(f64, f64); 3] = [(89.6, 0.06), (120.0, 0.03), (181.8, 0.03)];
const PROPTEST_CASES: u32 = 100_000;

struct Verdict {
    criterion: usize,
    pass: bool,
}

fn verdict(criterion: usize, pass: bool, title: &str, detail: String) -> Verdict {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("{tag} criterion {criterion:>2}: {title}: {detail}");
    Verdict { criterion, pass }
}

fn rhythm_config(bpm: f64, gain: f64) -> ScenarioConfig {
    let mut c = ScenarioConfig::new(Mode::RhythmSync);
    c.audio = AudioSource::Synth(ClickSpec { bpm, ..ClickSpec::default() });
    c.modulator.gain = gain;
    c.resolve().expect("rhythm config resolves")
}

fn rhythm(bpm: f64, gain: f64) -> RunReport {
    run(&rhythm_config(bpm, gain)).expect("rhythm run").report
}

fn criterion_1() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for f in DEFAULT_F_SWEEP {
        let c = ScenarioConfig { f_cmd: f, ..ScenarioConfig::new(Mode::FreqTrack) }.resolve().unwrap();
        let start = Instant::now();
        let r = run(&c).expect("tracking run").report;
        let secs = start.elapsed().as_secs_f64();
        let ok = r.sync.freq_dev_mean < 0.05 && r.sync.freq_dev_var < 0.01 && secs < 1.0;
        pass &= ok;
        parts.push(format!("{f:.1} Hz dev {:.4} var {:.1e} ({secs:.2} s)", r.sync.freq_dev_mean, r.sync.freq_dev_var));
    }
    verdict(1, pass, "frequency tracking, mean dev < 0.05 Hz, var < 0.01 Hz²", parts.join("; "))
}

fn criterion_2_3(reports: &[RunReport]) -> [Verdict; 2] {
    let mut pass2 = true;
    let mut parts = Vec::new();
    for ((bpm, bound), r) in TABLE_TEMPI.iter().zip(reports) {
        let ok = r.sync.delta_t_max <= *bound;
        pass2 &= ok;
        parts.push(format!("{bpm} BPM Δt_max {:.4} s (≤ {bound})", r.sync.delta_t_max));
    }
    let v2 = verdict(2, pass2, "beat alignment after 5 s warm-up", parts.join("; "));

    let worst = reports.iter().map(|r| r.sync.omega_std).fold(0.0, f64::max);
    let parts: Vec<String> = TABLE_TEMPI
        .iter()
        .zip(reports)
        .map(|((bpm, _), r)| format!("{bpm} BPM {:.4}", r.sync.omega_std))
        .collect();
    let v3 = verdict(3, worst <= 0.10, "σ(ω̃) ≤ 0.10 rad/s post-warm-up", parts.join("; "));
    [v2, v3]
}

fn criterion_4() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for k in [1.0, 2.0, 4.0] {
        for (bpm, _) in TABLE_TEMPI {
            let e = rhythm(bpm, k).phase_error_max.expect("music-driven run");
            worst = worst.max(e);
            parts.push(format!("k={k} {bpm} BPM {e:.3}"));
        }
    }
    verdict(4, worst < 0.05, "|φ_j − θ_m| < 0.05 rad for t > 5 s, k ∈ {1,2,4}", format!("max {worst:.3} rad; {}", parts.join("; ")))
}

fn criterion_5(reports: &[RunReport]) -> Verdict {
    let mut full: f64 = 0.0;
    for r in reports {
        full = full.max(r.rpd.diagonal_max_dev).max(r.rpd.lateral_max_dev);
    }
    for f in DEFAULT_F_SWEEP {
        let c = ScenarioConfig { f_cmd: f, ..ScenarioConfig::new(Mode::FreqTrack) }.resolve().unwrap();
        let r = run(&c).unwrap().report;
        full = full.max(r.rpd.diagonal_max_dev).max(r.rpd.lateral_max_dev);
    }
    let mut settled: f64 = 0.0;
    for seed in 0..8 {
        let c = ScenarioConfig {
            seed,
            perturbation_rad: 0.5,
            duration_s: Some(10.0),
            ..ScenarioConfig::new(Mode::FreqTrack)
        }
        .resolve()
        .unwrap();
        let r = run(&c).unwrap().report;
        settled = settled.max(r.rpd.diagonal_max_dev_settled).max(r.rpd.lateral_max_dev_settled);
    }
    let pass = full <= 0.2 && settled <= 0.2;
    verdict(
        5,
        pass,
        "RPD within ±0.2 rad of trot, perturbed starts recover within 5 s",
        format!("unperturbed max dev {full:.3} rad; ±0.5 rad perturbed, max dev after 5 s {settled:.3} rad (8 seeds)"),
    )
}

fn moving_bank(f: f64) -> OscillatorBank {
    let params = select_params(0.8, f, &[1.0; 4]).unwrap();
    OscillatorBank::new(params).unwrap()
}

/// Closed loop with the plant evaluated at every step, to isolate integrator error.
fn closed_loop(dt: f64, steps: usize, sample_every: usize) -> Vec<[f64; 4]> {
    let plant = PlantConfig::default();
    let mut bank = moving_bank(2.0);
    let mut out = Vec::new();
    for i in 0..=steps {
        if i % sample_every == 0 {
            out.push(bank.phases);
        }
        if i == steps {
            break;
        }
        let g = normalize_grf(&grf_from_phases(&bank.phases, &plant), plant.mass, plant.g).unwrap();
        bank.advance(&g, dt).unwrap();
    }
    out
}

fn criterion_6() -> Verdict {
    // zero-feedback ramp
    let params = [OscillatorParams::moving(TAU, 0.0); 4];
    let mut bank = OscillatorBank::new(params).unwrap();
    let mut ramp_err: f64 = 0.0;
    for n in 1..=10_000 {
        bank.advance(&[0.0; 4], 1e-3).unwrap();
        let exact = wrap_2pi(TAU * n as f64 * 1e-3);
        ramp_err = ramp_err.max(wrap_pi(bank.phases[0] - exact).abs());
    }
    let first = OscillatorBank::new(params).unwrap().step(&[0.0; 4], 1e-3).unwrap().phases[0];
    let first_ok = (first - 0.006_283_185_3).abs() < 1e-10;

    // dt refinement over 5 s, compared every 1 ms
    let coarse = closed_loop(1e-3, 5_000, 1);
    let fine = closed_loop(1e-4, 50_000, 10);
    let refine_err = coarse
        .iter()
        .zip(&fine)
        .flat_map(|(a, b)| (0..4).map(move |i| wrap_pi(a[i] - b[i]).abs()))
        .fold(0.0, f64::max);

    // clamp, wrap and integration invariants under random inputs
    let cfg = PropConfig { cases: PROPTEST_CASES, failure_persistence: None, ..PropConfig::default() };
    let clamp = TestRunner::new(cfg.clone()).run(
        &(prop::array::uniform4(0.0f64..5_000.0), 0.1f64..100.0, 1.0f64..20.0),
        |(forces, mass, g)| {
            let out = normalize_grf(&forces, mass, g).unwrap();
            for (n, v) in forces.iter().zip(out) {
                prop_assert!((0.0..=1.0).contains(&v));
                prop_assert_eq!(v, (n / (mass * g)).min(1.0));
            }
            Ok(())
        },
    );
    let wrap = TestRunner::new(cfg.clone()).run(&(-1e6f64..1e6), |x| {
        let w = wrap_2pi(x);
        prop_assert!((0.0..TAU).contains(&w));
        let p = wrap_pi(x);
        prop_assert!(p > -PI && p <= PI);
        prop_assert!(wrap_pi(w - x).abs() < 1e-9);
        prop_assert!(wrap_pi(p - x).abs() < 1e-9);
        prop_assert_eq!(wrap_2pi(w), w);
        Ok(())
    });
    let step = TestRunner::new(cfg).run(
        &(
            prop::array::uniform4(0.0f64..TAU),
            prop::array::uniform4(0.0f64..=1.0),
            1.0001f64..=4.0,
            1e-5f64..=1e-2,
            prop::array::uniform4(-10.0f64..10.0),
        ),
        |(phases, g, f, dt, bad)| {
            let mut bank = moving_bank(f);
            bank.phases = phases;
            bank.advance(&g, dt).unwrap();
            prop_assert!(bank.phases.iter().all(|p| (0.0..TAU).contains(p)));
            let out_of_range = bad.iter().any(|x| !(0.0..=1.0).contains(x));
            prop_assert_eq!(bank.step(&bad, dt).is_err(), out_of_range);
            Ok(())
        },
    );
    let props = [
        ("clamp", clamp.map_err(|e| e.to_string())),
        ("wrap", wrap.map_err(|e| e.to_string())),
        ("step", step.map_err(|e| e.to_string())),
    ];
    let props_ok = props.iter().all(|(_, r)| r.is_ok());
    let failures: Vec<String> = props
        .iter()
        .filter_map(|(n, r)| r.as_ref().err().map(|e| format!("{n}: {e}")))
        .collect();

    let pass = ramp_err <= 1e-6 && first_ok && refine_err <= 5e-3 && props_ok;
    verdict(
        6,
        pass,
        "oscillator correctness",
        format!(
            "ramp err {ramp_err:.1e} rad over 10 s; dt refinement {refine_err:.1e} rad over 5 s; {} property cases x3 {}",
            PROPTEST_CASES,
            if props_ok { "held".to_string() } else { failures.join("; ") }
        ),
    )
}

fn criterion_7() -> Verdict {
    let mut tempo_err: f64 = 0.0;
    let mut beat_err: f64 = 0.0;
    let mut exact = true;
    for i in 0..21 {
        let bpm = 60.0 + 7.0 * i as f64;
        let spec = ClickSpec { bpm, duration_s: 30.0, ..ClickSpec::default() };
        let music = analyze_clip(&synth_click_track(&spec).unwrap(), &AnalysisConfig::default()).unwrap();
        tempo_err = tempo_err.max((music.grid.tempo_bpm - bpm).abs());
        let clicks = spec.click_times();
        for &b in &music.grid.beat_times {
            let nearest = clicks.iter().map(|c| (b - c).abs()).fold(f64::INFINITY, f64::min);
            let inside = b <= clicks[clicks.len() - 1] + 0.5 * spec.period();
            if inside {
                beat_err = beat_err.max(nearest);
            }
            exact &= interpolate_phase(&music.grid, b).unwrap() == FOOTFALL_PHASE;
        }
    }
    let pass = tempo_err <= 1.0 && beat_err <= 0.010 && exact;
    verdict(
        7,
        pass,
        "music pipeline on 21 click trains, 60–200 BPM",
        format!("max tempo err {tempo_err:.3} BPM; max beat err {:.2} ms; θ = 3π/2 at beats {}", beat_err * 1e3, if exact { "exactly" } else { "NOT exact" }),
    )
}

fn criterion_8() -> Verdict {
    let c = ScenarioConfig::new(Mode::EstimatorCurriculum).resolve().unwrap();
    let (mse, dev, var, ok_cur) = match run(&c) {
        Ok(out) => {
            let cur = out.report.curriculum.expect("curriculum report");
            let mse = cur.iterations.last().unwrap().mse;
            let ok = cur.iterations.len() == 11 && mse <= 1e-8 && cur.final_freq_dev_mean < 0.05 && cur.final_freq_dev_var < 0.01;
            (mse, cur.final_freq_dev_mean, cur.final_freq_dev_var, ok)
        }
        Err(e) => {
            println!("  curriculum error: {e}");
            (f64::NAN, f64::NAN, f64::NAN, false)
        }
    };
    let fallback = ScenarioConfig { feedback: "constant".into(), duration_s: Some(30.0), ..ScenarioConfig::new(Mode::FreqTrack) }
        .resolve()
        .unwrap();
    let fb = run(&fallback);
    let fb_ok = fb.as_ref().is_ok_and(|o| o.report.ticks.oscillator == 30_000);
    verdict(
        8,
        ok_cur && fb_ok,
        "estimator curriculum and constant fallback",
        format!(
            "N=10 final MSE {mse:.1e}; ρ=1 closed loop dev {dev:.4} Hz var {var:.1e}; constant 0.25 fallback 30 s {}",
            if fb_ok { "completed" } else { "FAILED" }
        ),
    )
}

fn criterion_9() -> Verdict {
    let th = 0.7;
    let checks: [(&str, f64, f64); 12] = [
        ("rhythm aligned", reward_rhythm(ring(th), ring(th), 1.0).unwrap(), 1.0),
        ("rhythm antipodal", reward_rhythm(ring(th + PI), ring(th), 1.0).unwrap(), (-4.0f64).exp()),
        ("rhythm σ_r=0", reward_rhythm(ring(th + 2.0), ring(th), 0.0).unwrap(), 1.0),
        ("r1 on footfall", reward_r1(1.0, 1.5 * PI), 1.0),
        ("r1 B=0", reward_r1(0.0, 0.3), 0.0),
        ("r1 +1 rad", reward_r1(1.0, 1.5 * PI + 1.0), (-1.0f64).exp()),
        ("r2 missed beat", reward_r2(true, false), -1.0),
        ("r2 hit beat", reward_r2(true, true), 1.0),
        ("r2 no beat", reward_r2(false, false), 1.0),
        ("phase stance", reward_phase(&[1.0, 0.0, 0.0, 0.0], &[1.5 * PI, 0.0, 0.0, 0.0]), 1.0),
        ("phase swing", reward_phase(&[0.5, 0.0, 0.0, 0.0], &[0.5 * PI, 0.0, 0.0, 0.0]), -0.5),
        ("phase no load", reward_phase(&[0.0; 4], &[1.0, 2.0, 3.0, 4.0]), 0.0),
    ];
    let worst = checks.iter().map(|(_, got, want)| (got - want).abs()).fold(0.0, f64::max);
    let bad: Vec<&str> = checks.iter().filter(|(_, g, w)| (g - w).abs() > 1e-12).map(|(n, _, _)| *n).collect();
    verdict(9, bad.is_empty(), "reward worked examples to 1e-12", format!("{} examples, max err {worst:.1e} {bad:?}", checks.len()))
}

fn criterion_10() -> Verdict {
    let scenarios = [
        ScenarioConfig { seed: 11, perturbation_rad: 0.5, ..ScenarioConfig::new(Mode::FreqTrack) },
        ScenarioConfig { seed: 11, duration_s: Some(12.0), ..rhythm_config(120.0, 2.0) },
        ScenarioConfig { seed: 11, ..ScenarioConfig::new(Mode::EstimatorCurriculum) },
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for c in scenarios {
        let c = c.resolve().unwrap();
        let bytes: Vec<Vec<u8>> = (0..2)
            .map(|_| {
                let dir = tempfile::tempdir().unwrap();
                write_outputs(dir.path(), &c, &run(&c).unwrap()).unwrap();
                std::fs::read(dir.path().join("report.json")).unwrap()
            })
            .collect();
        let same = bytes[0] == bytes[1];
        pass &= same;
        parts.push(format!("{:?} {} ({} bytes)", c.mode, if same { "identical" } else { "DIFFERENT" }, bytes[0].len()));
    }
    verdict(10, pass, "same seed gives byte-identical report.json", parts.join("; "))
}

fn main() -> ExitCode {
    let v1 = criterion_1();
    let rhythm_reports: Vec<RunReport> = TABLE_TEMPI.iter().map(|(bpm, _)| rhythm(*bpm, 2.0)).collect();
    let [v2, v3] = criterion_2_3(&rhythm_reports);
    let verdicts = vec![
        v1,
        v2,
        v3,
        criterion_4(),
        criterion_5(&rhythm_reports),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(),
    ];
    let passed = verdicts.iter().filter(|v| v.pass).count();
    let unexpected: Vec<usize> = verdicts
        .iter()
        .filter(|v| !v.pass && !KNOWN_RED.contains(&v.criterion))
        .map(|v| v.criterion)
        .collect();
    println!("{passed}/{} criteria pass; known red: {KNOWN_RED:?}", verdicts.len());
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
