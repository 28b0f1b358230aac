use anyhow::Result;
use lwf_core::config::Config;
use lwf_core::dual_process::{detect_renewal_general, simulate_coupled_pair, simulate_y, simulate_y_capped, RenewalHorizon, RenewalWindow};
use lwf_core::estimators::{
    check_duality, decay_rate_experiment, estimate_fixation_direct, estimate_fixation_renewal, estimate_stationary_y,
    fraction_above, merge_decay, BandShape, DecayMode, StationaryMethod,
};
use lwf_core::flow::DriftFlow;
use lwf_core::forward_process::simulate_x;
use lwf_core::levy_bounds::{
    laplace_derivatives, laplace_exponent, levy_drift, mean_increment, observe_levy, passage_tail, sandwich_check, tail_fits,
    Bound, LevySpec,
};
use lwf_core::measure_spec::{integrability_report_with, ModelParams};
use lwf_core::random_background::{build_background, Jump, RandomBackground};
use lwf_core::stats::{ks_uniform, replicate, z_score, EstimateWithCI};
use lwf_core::trajectory::{SimOptions, Trajectory};
use lwf_core::Error;
use serde_json::{json, Value};

use crate::args::*;
use crate::manifest::MANIFEST_NAME;

// background namespaces of the CLI's own replica loops
const SIM_X: u64 = 0x100 << 32;
const SIM_Y: u64 = 0x101 << 32;
const PAIR: u64 = 0x102 << 32;
const RENEWAL: u64 = 0x103 << 32;
const SANDWICH: u64 = 0x104 << 32;
const LEVY: u64 = 0x105 << 32;

const SANDWICH_TOL: f64 = 1e-9;
const ORDER_TOL: f64 = 1e-12;

pub struct Ctx {
    pub config: Config,
}

impl Ctx {
    fn seed(&self) -> u64 {
        self.config.run.seed
    }

    fn reps(&self, default: u64) -> u64 {
        self.config.run.reps.unwrap_or(default)
    }

    fn horizon(&self, default: f64) -> f64 {
        self.config.run.horizon.unwrap_or(default)
    }

    fn params(&self) -> lwf_core::Result<ModelParams> {
        self.config.params()
    }

    fn background(&self, params: &ModelParams) -> lwf_core::Result<RandomBackground> {
        build_background(params, self.config.background(self.seed(), None))
    }

    fn options(&self) -> SimOptions {
        SimOptions { drift_step: self.config.numerics.drift_step, record_events: false }
    }
}

/// Files to write, a line for the terminal, and whether the command's own checks passed.
pub struct Outcome {
    pub files: Vec<(String, Vec<u8>)>,
    pub report: String,
    pub passed: bool,
}

fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

struct Csv(csv::Writer<Vec<u8>>);

impl Csv {
    fn new(header: &[&str]) -> Result<Csv> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        Ok(Csv(w))
    }

    fn row(&mut self, fields: &[String]) -> Result<()> {
        self.0.write_record(fields)?;
        Ok(())
    }

    fn bytes(self) -> Result<Vec<u8>> {
        Ok(self.0.into_inner().map_err(|e| anyhow::anyhow!("flushing csv: {e}"))?)
    }
}

fn json_file(name: &str, mut body: Value) -> Result<(String, Vec<u8>)> {
    body["manifest"] = json!(MANIFEST_NAME);
    let mut bytes = serde_json::to_vec_pretty(&body)?;
    bytes.push(b'\n');
    Ok((name.to_string(), bytes))
}

fn est(e: &EstimateWithCI) -> Value {
    json!({ "point": e.point, "std_error": e.std_error, "reps": e.reps })
}

pub fn run(ctx: &Ctx, command: &Command) -> Result<Outcome> {
    match command {
        Command::Classify(a) => classify(ctx, a),
        Command::SimulateX(a) => simulate(ctx, a, None, false),
        Command::SimulateY(a) => simulate(ctx, &a.sim, a.cap, true),
        Command::CoupledPair(a) => coupled_pair(ctx, a),
        Command::RenewalScan(a) => renewal_scan(ctx, a),
        Command::CheckDuality(a) => duality(ctx, a),
        Command::Fixation(a) => fixation(ctx, a),
        Command::Stationary(a) => stationary(ctx, a),
        Command::Decay(a) => decay(ctx, a),
        Command::SandwichTest(a) => sandwich(ctx, a),
        Command::LevyExponent(a) => levy_exponent(ctx, a),
        Command::PassageTail(a) => passage(ctx, a),
        Command::Replay(_) => unreachable!("replay is dispatched by main"),
    }
}

fn classify(ctx: &Ctx, a: &ClassifyArgs) -> Result<Outcome> {
    let params = ctx.params()?;
    let gamma = a.gamma.unwrap_or(ctx.config.numerics.gamma);
    let report = integrability_report_with(&params, gamma, ctx.config.numerics.critical_tol)?;
    let body: Value = serde_json::from_str(&report.to_json())?;
    Ok(Outcome { files: vec![json_file("classify.json", body)?], report: report.to_table(), passed: true })
}

fn observation_times(a: &SimulateArgs, horizon: f64) -> Result<Vec<f64>> {
    if !a.times.is_empty() {
        return Ok(a.times.clone());
    }
    if !(a.dt > 0.0 && horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("need dt > 0 and a finite horizon > 0, got dt = {}, horizon = {horizon}", a.dt)).into());
    }
    let n = (horizon / a.dt + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| k as f64 * a.dt).collect())
}

fn simulate(ctx: &Ctx, a: &SimulateArgs, cap: Option<f64>, dual: bool) -> Result<Outcome> {
    let params = ctx.params()?;
    let bg = ctx.background(&params)?;
    let times = observation_times(a, ctx.horizon(10.0))?;
    let reps = ctx.reps(1);
    let domain = if dual { SIM_Y } else { SIM_X };
    let opts = ctx.options();
    let paths: Vec<Trajectory> = replicate(reps, |k| {
        let b = bg.replica(domain, k);
        match (dual, cap) {
            (false, _) => simulate_x(&params, &b, a.x0, &times, &opts),
            (true, None) => simulate_y(&params, &b, a.x0, &times, &opts),
            (true, Some(c)) => simulate_y_capped(&params, &b, a.x0, c, &times, &opts),
        }
    })?;
    let name = if dual { "simulate_y" } else { "simulate_x" };
    let mut out = Csv::new(&["rep", "time", "state"])?;
    for (k, p) in paths.iter().enumerate() {
        for s in p.observations() {
            out.row(&[k.to_string(), num(s.time), num(s.state)])?;
        }
    }
    let mut files = vec![(format!("{name}.csv"), out.bytes()?)];
    if a.record_events {
        let end = times.last().copied().unwrap_or(0.0);
        let mut ev = Csv::new(&["rep", "time", "kind", "r", "u"])?;
        for k in 0..reps {
            let mut b = bg.replica(domain, k);
            if let (true, Some(c)) = (dual, cap) {
                b = b.filtered(c, lwf_core::random_background::FilterSide::AtMost);
            }
            for e in b.events().take_while(|e| e.time <= end) {
                let (kind, r, u) = match e.jump {
                    Jump::Neutral { r, u } => ("neutral", r, Some(u)),
                    Jump::Environmental { r } => ("environmental", r, None),
                };
                ev.row(&[k.to_string(), num(e.time), kind.to_string(), num(r), opt(u)])?;
            }
        }
        files.push((format!("{name}_events.csv"), ev.bytes()?));
    }
    let finals: Vec<f64> = paths.iter().map(|p| p.final_state).collect();
    let mean = EstimateWithCI::from_samples(&finals, "final state");
    files.push(json_file(
        &format!("{name}.json"),
        json!({ "x0": a.x0, "reps": reps, "times": times, "cap": cap, "mean_final_state": est(&mean) }),
    )?);
    Ok(Outcome { files, report: format!("{reps} paths, mean final state {:.6}", mean.point), passed: true })
}

fn coupled_pair(ctx: &Ctx, a: &CoupledPairArgs) -> Result<Outcome> {
    let params = ctx.params()?;
    let bg = ctx.background(&params)?;
    let flow = DriftFlow::dual(params.sigma(), ctx.config.numerics.drift_step)?;
    let horizon = ctx.horizon(40.0);
    let reps = ctx.reps(1000);
    let res = replicate(reps, |k| simulate_coupled_pair(&flow, &bg.replica(PAIR, k), a.y_hat, a.y_check, horizon))?;
    let mut out = Csv::new(&["rep", "merge_time", "final_hat", "final_check", "max_order_violation"])?;
    for (k, r) in res.iter().enumerate() {
        out.row(&[k.to_string(), opt(r.merge_time), num(r.final_states.0), num(r.final_states.1), num(r.max_order_violation)])?;
    }
    let merged = res.iter().filter(|r| r.merge_time.is_some()).count() as u64;
    let violations = res.iter().filter(|r| r.max_order_violation > ORDER_TOL).count();
    let frac = EstimateWithCI::from_bernoulli(merged, reps, "merged by horizon");
    let files = vec![
        ("coupled_pair.csv".to_string(), out.bytes()?),
        json_file(
            "coupled_pair.json",
            json!({ "y_hat": a.y_hat, "y_check": a.y_check, "horizon": horizon, "merged": est(&frac), "order_violations": violations }),
        )?,
    ];
    Ok(Outcome {
        files,
        report: format!("merged by t = {horizon}: {:.4}; order violations: {violations}", frac.point),
        passed: violations == 0,
    })
}

fn renewal_scan(ctx: &Ctx, a: &RenewalScanArgs) -> Result<Outcome> {
    let params = ctx.params()?;
    let bg = ctx.background(&params)?;
    let kappa = a.kappa.unwrap_or(ctx.config.renewal.kappa);
    let eta = a.eta.unwrap_or(ctx.config.renewal.eta);
    let window = RenewalWindow::centered(&params, a.center, kappa, eta)?;
    let reps = ctx.reps(1000);
    let res =
        replicate(reps, |k| detect_renewal_general(&params, &bg.replica(RENEWAL, k), a.y0, a.center, kappa, eta, ctx.config.run.horizon))?;
    let mut out = Csv::new(&["rep", "time", "state", "pre_state"])?;
    for (k, r) in res.iter().enumerate() {
        out.row(&[k.to_string(), num(r.time), num(r.state), num(r.pre_state)])?;
    }
    let (lo, hi) = window.uniform_window();
    let states: Vec<f64> = res.iter().map(|r| r.state).collect();
    let times: Vec<f64> = res.iter().map(|r| r.time).collect();
    let ks = ks_uniform(&states, lo, hi);
    let mean_time = EstimateWithCI::from_samples(&times, "renewal time");
    let passed = ks.p_value >= 0.01;
    let files = vec![
        ("renewal.csv".to_string(), out.bytes()?),
        json_file(
            "renewal.json",
            json!({
                "window": window,
                "qualifying_rate": window.qualifying_rate(&bg),
                "mean_renewal_time": est(&mean_time),
                "ks_uniform": ks,
                "rule": "KS p-value of renewal states against the uniform window >= 0.01",
                "pass": passed,
            }),
        )?,
    ];
    Ok(Outcome { files, report: format!("mean renewal time {:.4}, KS p = {:.4}", mean_time.point, ks.p_value), passed })
}

fn duality(ctx: &Ctx, a: &DualityArgs) -> Result<Outcome> {
    let params = ctx.params()?;
    let bg = ctx.background(&params)?;
    let rep = check_duality(&params, &bg, &a.xs, &a.ys, &a.ts, ctx.reps(10_000), ctx.config.numerics.drift_step)?;
    let mut out = Csv::new(&["x", "y", "t", "p_forward", "se_forward", "p_dual", "se_dual", "z"])?;
    for c in &rep.cells {
        out.row(&[
            num(c.x),
            num(c.y),
            num(c.t),
            num(c.p_forward.point),
            num(c.p_forward.std_error),
            num(c.p_dual.point),
            num(c.p_dual.std_error),
            num(c.z),
        ])?;
    }
    let passed = rep.over_3 <= 1 && rep.over_5 == 0;
    let files = vec![
        ("duality.csv".to_string(), out.bytes()?),
        json_file(
            "duality.json",
            json!({
                "cells": rep.cells.len(),
                "max_abs_z": rep.max_abs_z,
                "over_3": rep.over_3,
                "over_4": rep.cells.iter().filter(|c| c.z.abs() > 4.0).count(),
                "over_5": rep.over_5,
                "rule": "at most one cell with |z| > 3 and none with |z| > 5",
                "pass": passed,
            }),
        )?,
    ];
    Ok(Outcome {
        files,
        report: format!("{} cells, max |z| = {:.3}, |z| > 3: {}, |z| > 5: {}", rep.cells.len(), rep.max_abs_z, rep.over_3, rep.over_5),
        passed,
    })
}

fn fixation(ctx: &Ctx, a: &FixationArgs) -> Result<Outcome> {
    let params = ctx.params()?;
    let bg = ctx.background(&params)?;
    let kappa = a.kappa.unwrap_or(ctx.config.renewal.kappa);
    let eta = a.eta.unwrap_or(ctx.config.renewal.eta);
    let reps = ctx.reps(20_000);
    let renewal = match a.method {
        FixationMethod::Direct => None,
        _ => Some(estimate_fixation_renewal(&params, &bg, &a.xs, kappa, eta, reps, ctx.config.run.horizon.map(RenewalHorizon::fixed))?),
    };
    let direct = match a.method {
        FixationMethod::Renewal => None,
        _ => Some(a.xs.iter().map(|&x| estimate_fixation_direct(&params, &bg, x, a.t_final, a.eps_fix, reps)).collect::<lwf_core::Result<Vec<_>>>()?),
    };
    // the renewal curve is reported on the sorted grid
    let mut xs = a.xs.clone();
    xs.sort_by(f64::total_cmp);
    let direct_at = |x: f64| direct.as_ref().and_then(|d| d.iter().find(|r| r.x == x));
    let mut rows = Vec::new();
    let mut passed = true;
    let mut out = match a.method {
        FixationMethod::Both => Csv::new(&["x", "h_renewal", "se", "h_direct", "se", "|z|"])?,
        FixationMethod::Renewal => Csv::new(&["x", "h_renewal", "se"])?,
        FixationMethod::Direct => Csv::new(&["x", "h_direct", "se", "fixed_zero", "undecided"])?,
    };
    for (k, &x) in xs.iter().enumerate() {
        let r = renewal.as_ref().map(|c| &c.h[k]);
        let d = direct_at(x);
        match (r, d) {
            (Some(r), Some(d)) => {
                let z = z_score(r, &d.fixed_one).abs();
                passed &= z <= 3.0 && d.undecided.point < 0.02;
                out.row(&[num(x), num(r.point), num(r.std_error), num(d.fixed_one.point), num(d.fixed_one.std_error), num(z)])?;
                rows.push(json!({ "x": x, "h_renewal": est(r), "h_direct": est(&d.fixed_one), "undecided": d.undecided.point, "abs_z": z }));
            }
            (Some(r), None) => {
                out.row(&[num(x), num(r.point), num(r.std_error)])?;
                rows.push(json!({ "x": x, "h_renewal": est(r) }));
            }
            (None, Some(d)) => {
                out.row(&[num(x), num(d.fixed_one.point), num(d.fixed_one.std_error), num(d.fixed_zero.point), num(d.undecided.point)])?;
                rows.push(json!({ "x": x, "h_direct": est(&d.fixed_one), "fixed_zero": d.fixed_zero.point, "undecided": d.undecided.point }));
            }
            (None, None) => unreachable!("at least one method runs"),
        }
    }
    let mut body = json!({ "method": a.method, "rows": rows, "pass": passed });
    if let Some(c) = &renewal {
        body["window"] = json!(c.window);
        body["mean_cycle_length"] = est(&c.mean_cycle_length);
    }
    if a.method == FixationMethod::Both {
        body["rule"] = json!("|h_renewal - h_direct| <= 3 combined SE and undecided fraction < 0.02 at every x");
    }
    let files = vec![("fixation.csv".to_string(), out.bytes()?), json_file("fixation.json", body)?];
    Ok(Outcome { files, report: format!("fixation curve on {} points", xs.len()), passed })
}

fn stationary(ctx: &Ctx, a: &StationaryArgs) -> Result<Outcome> {
    let params = ctx.params()?;
    let bg = ctx.background(&params)?;
    let method = match a.method {
        StationaryKind::Renewal => StationaryMethod::Renewal {
            kappa: a.kappa.unwrap_or(ctx.config.renewal.kappa),
            eta: a.eta.unwrap_or(ctx.config.renewal.eta),
            cycles: ctx.reps(10_000),
        },
        StationaryKind::Ergodic => StationaryMethod::Ergodic { y0: a.y0, burn_in: a.burn_in, window: a.window, reps: ctx.reps(200) },
    };
    let cdf = estimate_stationary_y(&params, &bg, &a.xs, method)?;
    let mut xs = a.xs.clone();
    xs.sort_by(f64::total_cmp);
    let mut out = Csv::new(&["x", "p", "se"])?;
    for (x, e) in xs.iter().zip(&cdf) {
        out.row(&[num(*x), num(e.point), num(e.std_error)])?;
    }
    let files = vec![
        ("stationary.csv".to_string(), out.bytes()?),
        json_file("stationary.json", json!({ "method": method_json(&method), "x": xs, "cdf": cdf.iter().map(est).collect::<Vec<_>>() }))?,
    ];
    Ok(Outcome { files, report: format!("stationary CDF of Y on {} points", xs.len()), passed: true })
}

fn method_json(m: &StationaryMethod) -> Value {
    serde_json::to_value(m).unwrap_or(Value::Null)
}

fn decay(ctx: &Ctx, a: &DecayArgs) -> Result<Outcome> {
    let params = ctx.params()?;
    let bg = ctx.background(&params)?;
    let reps = ctx.reps(20_000);
    let shape = match a.shape {
        Shape::Exponential => BandShape::Exponential,
        Shape::Polynomial => BandShape::Polynomial,
    };
    let (quantity, p, exp_fit, poly_fit) = match a.mode {
        DecayKind::Merge => {
            let f = merge_decay(&params, &bg, a.y_hat, a.y_check, &a.ts, reps)?;
            (f.quantity, f.p, f.exponential_fit, f.polynomial_fit)
        }
        DecayKind::Fraction => {
            let p = fraction_above(&params, &bg, a.x0, a.level, &a.ts, reps)?;
            let (e, q) = tail_fits(&a.ts, &p);
            (format!("P(X_t > {})", a.level), p, e, q)
        }
        mode => {
            let m = match mode {
                DecayKind::Theta2 => DecayMode::Theta2,
                DecayKind::Theta3 => DecayMode::Theta3,
                _ => DecayMode::Theta01 { shape },
            };
            let f = decay_rate_experiment(&params, &bg, a.x0, a.rho, &a.ts, reps, m)?;
            (f.quantity, f.p, f.exponential_fit, f.polynomial_fit)
        }
    };
    let mut out = Csv::new(&["t", "p", "se"])?;
    for (t, e) in a.ts.iter().zip(&p) {
        out.row(&[num(*t), num(e.point), num(e.std_error)])?;
    }
    let fit_line = exp_fit.map_or("no exponential fit (fewer than 3 positive points)".to_string(), |f| {
        format!("log p ~ t: slope {:.5}, R^2 {:.4}", f.slope, f.r_squared)
    });
    let files = vec![
        ("decay.csv".to_string(), out.bytes()?),
        json_file(
            "decay.json",
            json!({ "mode": a.mode, "quantity": quantity, "t": a.ts, "p": p.iter().map(est).collect::<Vec<_>>(),
                    "exponential_fit": exp_fit, "polynomial_fit": poly_fit }),
        )?,
    ];
    Ok(Outcome { files, report: format!("{quantity}: {fit_line}"), passed: true })
}

fn sandwich(ctx: &Ctx, a: &SandwichArgs) -> Result<Outcome> {
    let params = ctx.params()?;
    let bg = ctx.background(&params)?;
    let b = a.b.unwrap_or(ctx.config.levy.b);
    let delta = a.delta.unwrap_or(ctx.config.levy.delta);
    let horizon = ctx.horizon(500.0);
    let reps = ctx.reps(1000);
    let res = replicate(reps, |k| sandwich_check(&params, &bg.replica(SANDWICH, k), b, delta, a.y0, horizon, a.mirrored))?;
    let mut out = Csv::new(&["rep", "lower_violation", "upper_violation", "checks", "exit_time", "small_jump_term"])?;
    for (k, r) in res.iter().enumerate() {
        out.row(&[
            k.to_string(),
            num(r.lower_violation),
            num(r.upper_violation),
            r.checks.to_string(),
            opt(r.exit_time),
            num(r.small_jump_term),
        ])?;
    }
    let violations = res.iter().filter(|r| r.lower_violation > SANDWICH_TOL || r.upper_violation > SANDWICH_TOL).count();
    let exited = res.iter().filter(|r| r.exit_time.is_some()).count();
    let files = vec![
        ("sandwich.csv".to_string(), out.bytes()?),
        json_file(
            "sandwich.json",
            json!({ "b": b, "delta": delta, "y0": a.y0, "mirrored": a.mirrored, "paths": reps, "exited": exited,
                    "violations": violations, "tolerance": SANDWICH_TOL, "pass": violations == 0 }),
        )?,
    ];
    Ok(Outcome { files, report: format!("{violations} violating paths of {reps}; {exited} exited before t = {horizon}"), passed: violations == 0 })
}

fn levy_spec(bound: BoundKind, b: Option<f64>, delta: Option<f64>, mirrored: bool, cfg: &Config) -> lwf_core::Result<LevySpec> {
    let which = match bound {
        BoundKind::Lower => Bound::Lower,
        BoundKind::Upper => Bound::Upper,
    };
    LevySpec::new(b.unwrap_or(cfg.levy.b), delta.unwrap_or(cfg.levy.delta), which, mirrored)
}

fn levy_exponent(ctx: &Ctx, a: &LevyExponentArgs) -> Result<Outcome> {
    let params = ctx.params()?;
    let spec = levy_spec(a.bound, a.b, a.delta, a.mirrored, &ctx.config)?;
    let samples = if a.mc {
        let bg = ctx.background(&params)?;
        Some(replicate(ctx.reps(10_000), |k| Ok(observe_levy(&spec, &params, &bg.replica(LEVY, k), &[1.0])?[0]))?)
    } else {
        None
    };
    let mut header = vec!["lambda", "psi", "dpsi", "d2psi", "note"];
    if samples.is_some() {
        header.extend(["mc_mean", "mc_se", "z"]);
    }
    let mut out = Csv::new(&header)?;
    for &l in &a.lambda_grid {
        let mut row = match (laplace_exponent(&spec, &params, l), laplace_derivatives(&spec, &params, l)) {
            (Ok(psi), Ok((d1, d2))) => vec![num(l), num(psi), num(d1), num(d2), String::new()],
            (Ok(psi), Err(e)) => vec![num(l), num(psi), String::new(), String::new(), e.to_string()],
            (Err(e), _) => vec![num(l), String::new(), String::new(), String::new(), e.to_string()],
        };
        if let Some(s) = &samples {
            let vals: Vec<f64> = s.iter().map(|v| (l * v).exp()).collect();
            let e = EstimateWithCI::from_samples(&vals, "mc");
            let z = laplace_exponent(&spec, &params, l).map(|psi| (e.point - psi.exp()) / e.std_error).ok();
            row.extend([num(e.point), num(e.std_error), opt(z)]);
        }
        out.row(&row)?;
    }
    let mean = mean_increment(&spec, &params)?;
    let files = vec![
        ("levy_exponent.csv".to_string(), out.bytes()?),
        json_file("levy_exponent.json", json!({ "spec": spec, "drift": levy_drift(&spec, &params), "mean_increment": mean }))?,
    ];
    Ok(Outcome { files, report: format!("E[L_1] = {mean:.10}"), passed: true })
}

fn passage(ctx: &Ctx, a: &PassageTailArgs) -> Result<Outcome> {
    let params = ctx.params()?;
    let bg = ctx.background(&params)?;
    let spec = levy_spec(a.bound, a.b, a.delta, a.mirrored, &ctx.config)?;
    let gamma = a.gamma.unwrap_or(ctx.config.numerics.gamma);
    let rep = passage_tail(&spec, &params, &bg, a.m, a.x, &a.ts, ctx.horizon(100.0), ctx.reps(10_000), gamma)?;
    let mut out = Csv::new(&["t", "tail", "se", "last_min_tail", "se_last_min"])?;
    for (k, t) in rep.t_grid.iter().enumerate() {
        let (p, q) = (&rep.tail[k], &rep.last_minimum_tail[k]);
        out.row(&[num(*t), num(p.point), num(p.std_error), num(q.point), num(q.std_error)])?;
    }
    let files = vec![
        ("passage_tail.csv".to_string(), out.bytes()?),
        json_file(
            "passage_tail.json",
            json!({ "spec": spec, "m": a.m, "x": a.x, "hit_fraction": est(&rep.hit_fraction), "censored_fraction": rep.censored_fraction,
                    "mean_last_minimum": est(&rep.mean_last_minimum), "exponential_fit": rep.exponential_fit,
                    "polynomial_fit": rep.polynomial_fit, "preferred": rep.preferred }),
        )?,
    ];
    Ok(Outcome { files, report: format!("hit before horizon {:.4}; preferred tail shape {}", rep.hit_fraction.point, rep.preferred), passed: true })
}
