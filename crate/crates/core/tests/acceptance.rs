//! Acceptance battery: one PASS/FAIL line per criterion with its runtime.
//!
//! Each criterion runs the relevant experiments with their default configs
//! and then re-checks the headline numbers against fixed thresholds here, so
//! loosening an experiment's tolerance cannot make a criterion pass.

use std::process::ExitCode;
use std::time::Instant;

use serde_json::json;
use translab::experiments::{default_suite, run_suite, ExperimentConfig, ExperimentReport};
use translab::specfun;

type Check = Result<Vec<String>, String>;

struct Criterion {
    id: u32,
    title: &'static str,
    limit_s: Option<f64>,
    run: fn() -> Check,
}

fn run(name: &str) -> Result<ExperimentReport, String> {
    run_with(name, json!({}))
}

fn run_with(name: &str, cfg: serde_json::Value) -> Result<ExperimentReport, String> {
    let c = ExperimentConfig::from_parts(name, cfg).map_err(|e| e.to_string())?;
    c.run().map_err(|e| format!("{name}: {e}"))
}

fn metric(r: &ExperimentReport, key: &str) -> Result<f64, String> {
    r.metrics.get(key).copied().ok_or_else(|| format!("{}: missing metric {key}", r.name))
}

fn verdict(r: &ExperimentReport, key: &str) -> Result<bool, String> {
    r.verdicts.get(key).map(|v| v.passed).ok_or_else(|| format!("{}: missing verdict {key}", r.name))
}

fn require(cond: bool, what: String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what)
    }
}

fn all_verdicts(r: &ExperimentReport) -> Result<(), String> {
    let failed: Vec<&str> = r.verdicts.iter().filter(|(_, v)| !v.passed).map(|(k, _)| k.as_str()).collect();
    require(failed.is_empty(), format!("{}: failed verdicts {failed:?}", r.name))
}

// Series oracles at x = 1, independent of the library's quadrature oracles.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn fact(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

fn series_i0() -> f64 {
    (0..30).map(|k| 0.25f64.powi(k as i32) / fact(k).powi(2)).sum()
}

fn series_i1() -> f64 {
    (0..30).map(|k| 0.5 * 0.25f64.powi(k as i32) / (fact(k) * fact(k + 1))).sum()
}

fn series_k0() -> f64 {
    let mut h = 0.0;
    let mut s = 0.0;
    for k in 1..30u32 {
        h += 1.0 / f64::from(k);
        s += 0.25f64.powi(k as i32) / fact(k).powi(2) * h;
    }
    -((0.5f64).ln() + EULER_GAMMA) * series_i0() + s
}

fn series_k1() -> f64 {
    // Wronskian I0 K1 + I1 K0 = 1/x
    (1.0 - series_i1() * series_k0()) / series_i0()
}

fn series_ei_minus_one() -> f64 {
    EULER_GAMMA + (1..40u32).map(|k| (-1f64).powi(k as i32) / (f64::from(k) * fact(k))).sum::<f64>()
}

fn c1_special_functions() -> Check {
    let checks = [
        ("K0(1)", specfun::bessel_k0(1.0), series_k0()),
        ("K1(1)", specfun::bessel_k1(1.0), series_k1()),
        ("I0(1)", specfun::bessel_i0(1.0), series_i0()),
        ("Ei(-1)", specfun::expint_ei(-1.0), series_ei_minus_one()),
    ];
    let mut notes = Vec::new();
    for (name, v, oracle) in checks {
        let v = v.map_err(|e| e.to_string())?;
        let err = (v - oracle).abs();
        require(err <= 1e-9, format!("{name}: {v} vs series {oracle}"))?;
        notes.push(format!("{name} err {err:.1e}"));
    }
    let r = run("special-functions")?;
    for k in ["k0", "k1", "i0", "ei"] {
        require(metric(&r, &format!("{k}_abs_error"))? <= 1e-9, format!("{k} misses quadrature oracle"))?;
    }
    require(metric(&r, "k1_bound_violations")? == 0.0, "K1 bound violated".into())?;
    all_verdicts(&r)?;
    Ok(notes)
}

fn c2_model_residuals() -> Check {
    let r = run("model-residuals")?;
    require(metric(&r, "plane_residual")? == 0.0, "plane residual not zero".into())?;
    require(metric(&r, "constant_residual")? == 0.0, "constant residual not zero".into())?;
    let mut notes = Vec::new();
    for k in ["reaper_order_0", "reaper_order_1"] {
        let p = metric(&r, k)?;
        require((1.8..=2.2).contains(&p), format!("{k} = {p}"))?;
        notes.push(format!("{k} {p:.3}"));
    }
    for k in ["superbarrier", "u_k", "u_i", "green_l"] {
        let v = metric(&r, &format!("{k}_max_abs_l"))?;
        require(v < 1e-5, format!("|L {k}| = {v}"))?;
    }
    let d = metric(&r, "ei_barrier_max_defect")?;
    require(d < 1e-6, format!("Ei barrier defect {d}"))?;
    all_verdicts(&r)?;
    Ok(notes)
}

fn c3_doubling() -> Check {
    let r = run("doubling-obstruction")?;
    let e = metric(&r, "max_rel_error")?;
    let m = metric(&r, "max_value")?;
    require(e <= 1e-10, format!("closed form error {e}"))?;
    require(m < 0.0, format!("max value {m} not negative"))?;
    all_verdicts(&r)?;
    Ok(vec![format!("err {e:.1e}, max {m:.3e}")])
}

fn c4_duffin_mass() -> Check {
    let r = run("duffin-mass")?;
    let m = metric(&r, "max_mass_error")?;
    let s = metric(&r, "step_centerline")?;
    require(m <= 1e-8, format!("mass error {m}"))?;
    require((s - 0.5).abs() <= 5e-2, format!("step centerline {s}"))?;
    all_verdicts(&r)?;
    Ok(vec![format!("mass err {m:.1e}, centerline {s:.6}")])
}

fn c5_relaxation() -> Check {
    let r = run("relaxation")?;
    let probes = metric(&r, "probes")?;
    let v = metric(&r, "violations")?;
    require(probes >= 500.0, format!("only {probes} probes"))?;
    require(v == 0.0, format!("{v} violations"))?;
    all_verdicts(&r)?;
    Ok(vec![format!("{probes} probes, 0 violations")])
}

fn c6_decay() -> Check {
    let up = run("decay-upward")?;
    let gen = run("decay-general")?;
    let mut notes = Vec::new();
    for (r, maxes) in [(&up, [-0.85, -1.7, -3.4]), (&gen, [-0.4, -0.85, -1.7])] {
        for (k, max) in ["grad", "hess", "p"].iter().zip(maxes) {
            let e = metric(r, &format!("{k}_exponent"))?;
            require(e <= max, format!("{} {k} exponent {e} > {max}", r.name))?;
        }
        require(metric(r, "t2_nodes")? >= 257.0 * 257.0, format!("{}: top rung below 257²", r.name))?;
        all_verdicts(r)?;
    }
    let uk = metric(&gen, "uk_exponent")?;
    require((uk + 0.5).abs() <= 0.05, format!("u_K exponent {uk}"))?;
    notes.push(format!(
        "up {:.2}/{:.2}/{:.2}",
        metric(&up, "grad_exponent")?,
        metric(&up, "hess_exponent")?,
        metric(&up, "p_exponent")?
    ));
    notes.push(format!(
        "general {:.3}/{:.3}/{:.3}",
        metric(&gen, "grad_exponent")?,
        metric(&gen, "hess_exponent")?,
        metric(&gen, "p_exponent")?
    ));
    notes.push(format!("u_K {uk:.4}"));
    Ok(notes)
}

fn c7_wedge() -> Check {
    let r = run("exponential-wedge")?;
    let r2 = metric(&r, "r2")?;
    let rate = metric(&r, "rate")?;
    let spread = metric(&r, "line_spread")?;
    require(r2 >= 0.98, format!("R² {r2}"))?;
    require(rate > 0.0, format!("rate {rate}"))?;
    require(spread < 1e-3, format!("line spread {spread}"))?;
    all_verdicts(&r)?;
    Ok(vec![format!("R² {r2:.4}, rate {rate:.3}, spread {spread:.1e}")])
}

fn c8_downward() -> Check {
    let mut notes = Vec::new();
    for (cm, cp) in [(0.0, 1.0), (-2.0, 3.0), (1.0, 1.0)] {
        let r = run_with("downward-limit", json!({ "c_minus": cm, "c_plus": cp }))?;
        let avg = (cm + cp) / 2.0;
        let lim = metric(&r, "limit")?;
        let duf = metric(&r, "duffin_limit")?;
        require((lim - avg).abs() <= 1e-2, format!("({cm},{cp}): limit {lim}"))?;
        require((lim - duf).abs() <= 1e-2, format!("({cm},{cp}): solver {lim} vs Duffin {duf}"))?;
        all_verdicts(&r)?;
        notes.push(format!("({cm},{cp}) {lim:.4}"));
    }
    Ok(notes)
}

fn c9_oscillation() -> Check {
    let r = run("oscillation-persistence")?;
    let d = metric(&r, "worst_relative_deficit")?;
    let e = metric(&r, "window_exponent")?;
    require(d <= 0.05, format!("oscillation deficit {d}"))?;
    require(e <= -0.4, format!("window exponent {e}"))?;
    all_verdicts(&r)?;
    Ok(vec![format!("deficit {d:.1e}, window exponent {e:.3}")])
}

fn c10_counterexample() -> Check {
    let r = run("counterexample")?;
    let gap = metric(&r, "heat_gap")?;
    let ctrl = metric(&r, "control_gap")?;
    require(gap >= 0.8, format!("heat gap {gap}"))?;
    require(verdict(&r, "heat_ladder")?, "heat ladder fails".into())?;
    require(verdict(&r, "duffin_ladder")?, "Duffin ladder fails".into())?;
    require(ctrl < 1e-8, format!("control gap {ctrl}"))?;
    all_verdicts(&r)?;
    Ok(vec![format!("heat gap {gap:.3}, control {ctrl:.1e}")])
}

fn c11_bookkeeping() -> Check {
    let r = run("limit-configuration")?;
    let m = metric(&r, "random_matches")?;
    let t = metric(&r, "random_total")?;
    require(t >= 20.0 && m == t, format!("{m}/{t} random configurations"))?;
    for k in ["grim_reaper_fixture", "pitchfork_fixture"] {
        require(verdict(&r, k)?, format!("{k} fails"))?;
    }
    all_verdicts(&r)?;
    Ok(vec![format!("{m}/{t} random, fixtures ok")])
}

fn c12_determinism() -> Check {
    let mut outputs = Vec::new();
    for workers in [1, 4, 4] {
        let s = run_suite(default_suite(), workers).map_err(|e| e.to_string())?;
        require(s.passed(), format!("suite at {workers} workers has failures"))?;
        outputs.push((workers, s.to_json()));
    }
    for (w, o) in &outputs[1..] {
        require(*o == outputs[0].1, format!("suite at {w} workers differs from 1 worker"))?;
    }
    Ok(vec![format!("3 runs (workers 1, 4, 4), {} bytes identical", outputs[0].1.len())])
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, title: "special-function fidelity", limit_s: Some(5.0), run: c1_special_functions },
        Criterion { id: 2, title: "model residuals", limit_s: Some(30.0), run: c2_model_residuals },
        Criterion { id: 3, title: "doubling obstruction", limit_s: Some(1.0), run: c3_doubling },
        Criterion { id: 4, title: "Duffin kernel mass", limit_s: Some(20.0), run: c4_duffin_mass },
        Criterion { id: 5, title: "relaxation bound", limit_s: Some(60.0), run: c5_relaxation },
        Criterion { id: 6, title: "decay exponents", limit_s: Some(120.0), run: c6_decay },
        Criterion { id: 7, title: "exponential wedge", limit_s: Some(60.0), run: c7_wedge },
        Criterion { id: 8, title: "downward limit law", limit_s: Some(120.0), run: c8_downward },
        Criterion { id: 9, title: "oscillation persistence", limit_s: Some(60.0), run: c9_oscillation },
        Criterion { id: 10, title: "counterexample pipeline", limit_s: Some(120.0), run: c10_counterexample },
        Criterion { id: 11, title: "limit configuration bookkeeping", limit_s: Some(1.0), run: c11_bookkeeping },
        Criterion { id: 12, title: "suite determinism", limit_s: None, run: c12_determinism },
    ];
    let mut failures = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let secs = start.elapsed().as_secs_f64();
        let slow = c.limit_s.is_some_and(|l| secs >= l);
        let limit = c.limit_s.map_or("none".to_string(), |l| format!("{l}s"));
        let (status, detail) = match &outcome {
            Ok(_) if slow => ("FAIL", format!("over time limit {limit}")),
            Ok(notes) => ("PASS", notes.join("; ")),
            Err(e) => ("FAIL", e.clone()),
        };
        if status == "FAIL" {
            failures += 1;
        }
        println!("criterion {:>2} {status} {secs:>8.3}s (limit {limit}) {}: {detail}", c.id, c.title);
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
