use crate::args::{AnalyzeCommand, BandArgs, IndexArg, LoopArgs, ReduceArgs, SimulateArgs, TemplateArg, TuneFreqArgs, TuneTimeArgs};
use crate::config::RunConfig;
use crate::io::{fmt_opt, read_controller, read_model, read_plant, OutDir, Table};
use crate::Outcome;
use anyhow::{bail, ensure, Context, Result};
use fopid_core::analysis::{
    bode_curve, iso_damping_sweep, sensitivity_curves, step_metrics, write_bode_csv, write_step_csv, write_sweep_csv,
    StepMetrics,
};
use fopid_core::fractional::FracTransferFunction;
use fopid_core::freq::{
    fopid_to_fotf, tune_frequency_domain, CapCheck, CapMode, FopidParams, FreqSpec, FreqTuneOptions,
};
use fopid_core::numerics::BoxBounds;
use fopid_core::reduction::{fit_template, rank_templates, FitOptions, FitResult, TemplateKind};
use fopid_core::time::{
    closed_loop_realize, default_bounds, simulate_step, tune_all_indices, tune_time_domain, Disturbance, IndexKind,
    SimResult, TimeTuneOptions, TimeTuneResult,
};
use serde::Serialize;

fn file_stem(label: &str) -> String {
    label.to_ascii_lowercase().replace('-', "")
}

fn join_params(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" ")
}

pub fn fit_options(cfg: &RunConfig, starts: Option<usize>) -> Result<FitOptions> {
    let opts = FitOptions {
        starts: starts.unwrap_or(FitOptions::default().starts),
        seed: cfg.seed,
        oustaloup: cfg.oustaloup(),
        ..FitOptions::default()
    };
    ensure!(opts.starts > 0, "--starts must be at least 1");
    Ok(opts)
}

pub fn reduce(cfg: &RunConfig, a: &ReduceArgs) -> Result<Outcome> {
    let (name, plant) = read_plant(&a.plant)?;
    let opts = fit_options(cfg, a.starts)?;
    let fits: Vec<(TemplateKind, FitResult)> = match a.template {
        TemplateArg::Rank => {
            let mut ok = Vec::new();
            for (k, r) in rank_templates(&plant, &opts) {
                match r {
                    Ok(f) => ok.push((k, f)),
                    Err(e) => eprintln!("warning: {k} fit failed: {e}"),
                }
            }
            ensure!(!ok.is_empty(), "every template fit failed");
            ok
        }
        t => {
            let kind = match t {
                TemplateArg::Foptd => TemplateKind::Foptd,
                TemplateArg::Soptd => TemplateKind::Soptd,
                TemplateArg::Nioptd1 => TemplateKind::Nioptd1,
                _ => TemplateKind::Nioptd2,
            };
            vec![(kind, fit_template(&plant, kind, None, &opts)?)]
        }
    };

    let mut table = Table::new(&["template", "j_f", "truncation", "converged", "params"]);
    for (k, f) in &fits {
        table.push(vec![
            k.label().into(),
            format!("{}", f.j_f),
            format!("{}", f.truncation),
            f.converged.to_string(),
            join_params(&f.model.params()),
        ]);
    }
    let mut out = OutDir::new(cfg.out_dir.clone());
    out.write_toml("model.toml", &fits[0].1.model)?;
    if fits.len() > 1 {
        for (k, f) in &fits {
            out.write_toml(&format!("model_{}.toml", file_stem(k.label())), &f.model)?;
        }
    }
    out.write_text("reduction.csv", &table.to_csv())?;
    println!("plant {name}");
    println!("{}", table.to_text());
    println!("preferred template: {}", fits[0].0);
    println!("{}", out.summary());
    Ok(if fits.iter().all(|(_, f)| f.converged) {
        Outcome::Success
    } else {
        eprintln!("warning: at least one fit stopped before meeting its tolerance; best-so-far models written");
        Outcome::NotConverged
    })
}

#[derive(Serialize)]
struct FreqReport {
    converged: bool,
    cap_mode: CapMode,
    spec: FreqSpec,
    residuals: [f64; 5],
    caps: CapCheck,
    iterations: usize,
    evaluations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    advisory: Option<String>,
}

pub fn tune_freq(cfg: &RunConfig, a: &TuneFreqArgs) -> Result<Outcome> {
    let model = read_model(&a.model)?;
    let plant = model.to_fotf()?;
    let spec = FreqSpec {
        phi_m_deg: a.phase_margin_deg,
        omega_gc: a.gain_crossover,
        a_db: a.t_cap_db,
        omega_t: a.t_cap_freq,
        b_db: a.s_cap_db,
        omega_s: a.s_cap_freq,
    };
    spec.validate().context("invalid frequency specification")?;
    let x0 = a.x0.as_deref().map(read_controller).transpose()?;
    let opts = FreqTuneOptions {
        restarts: a.restarts.unwrap_or(FreqTuneOptions::default().restarts),
        seed: cfg.seed,
        cap_mode: a.cap_mode.into(),
        ..FreqTuneOptions::default()
    };
    let res = tune_frequency_domain(&plant, &spec, x0.as_ref(), &opts)?;
    let report = FreqReport {
        converged: res.converged,
        cap_mode: opts.cap_mode,
        spec,
        residuals: res.residuals,
        caps: res.caps,
        iterations: res.solver_report.iterations,
        evaluations: res.solver_report.evaluations,
        advisory: res.advisory.clone(),
    };
    let mut out = OutDir::new(cfg.out_dir.clone());
    out.write_toml("controller.toml", &res.params)?;
    out.write_toml("freq_report.toml", &report)?;
    print_controller(&res.params);
    let names = ["r1 phase (rad)", "r2 gain", "r3 flatness (rad s)", "r4 |T| (dB)", "r5 |S| (dB)"];
    for (n, r) in names.iter().zip(res.residuals) {
        println!("{n:<20} {r:+.3e}");
    }
    println!(
        "peak |T| above {} rad/s: {:.2} dB, peak |S| below {} rad/s: {:.2} dB",
        spec.omega_t, res.caps.t_peak_db, spec.omega_s, res.caps.s_peak_db
    );
    println!("converged: {}", res.converged);
    if let Some(adv) = &res.advisory {
        eprintln!("advisory: {adv}");
    }
    println!("{}", out.summary());
    Ok(if res.converged { Outcome::Success } else { Outcome::NotConverged })
}

fn print_controller(c: &FopidParams) {
    println!(
        "Kp = {:.6}  Ki = {:.6}  Kd = {:.6}  lambda = {:.6}  mu = {:.6}",
        c.kp, c.ki, c.kd, c.lambda, c.mu
    );
}

pub fn time_options(cfg: &RunConfig, a: Option<&TuneTimeArgs>) -> Result<TimeTuneOptions> {
    let d = TimeTuneOptions::default();
    let bounds = match a.and_then(|a| a.bounds.as_ref()) {
        Some(v) => {
            ensure!(v.len() == 10, "--bounds needs 10 numbers, got {}", v.len());
            let lower = v.iter().step_by(2).copied().collect();
            let upper = v.iter().skip(1).step_by(2).copied().collect();
            let b = BoxBounds::new(lower, upper).context("invalid --bounds")?;
            ensure!(b.lower()[..3].iter().all(|l| *l > 0.0), "gain lower bounds must be positive");
            ensure!(
                b.lower()[3..].iter().all(|l| *l >= 0.0) && b.upper()[3..].iter().all(|u| *u <= 2.0),
                "order bounds must lie in [0, 2]"
            );
            b
        }
        None => default_bounds(),
    };
    let opts = TimeTuneOptions {
        starts: a.and_then(|a| a.starts).unwrap_or(d.starts),
        screen: a.and_then(|a| a.screen).unwrap_or(d.screen),
        max_evals: a.and_then(|a| a.max_evals).unwrap_or(d.max_evals),
        seed: cfg.seed,
        bounds,
        ..d
    };
    ensure!(opts.starts > 0, "--starts must be at least 1");
    ensure!(opts.max_evals > 0, "--max-evals must be at least 1");
    Ok(opts)
}

pub fn tune_time(cfg: &RunConfig, a: &TuneTimeArgs) -> Result<Outcome> {
    let (name, plant) = read_plant(&a.plant)?;
    let opts = time_options(cfg, Some(a))?;
    let results: Vec<(IndexKind, fopid_core::Result<TimeTuneResult>)> = match a.index {
        IndexArg::All => tune_all_indices(&plant, &cfg.sim, &opts),
        k => {
            let kind = match k {
                IndexArg::Iae => IndexKind::Iae,
                IndexArg::Itae => IndexKind::Itae,
                IndexArg::Ise => IndexKind::Ise,
                IndexArg::Itse => IndexKind::Itse,
                IndexArg::Istes => IndexKind::Istes,
                IndexArg::Istse => IndexKind::Istse,
                _ => IndexKind::SumAll,
            };
            vec![(kind, tune_time_domain(&plant, kind, &cfg.sim, &opts))]
        }
    };

    let mut table = Table::new(&["index", "j_min", "kp", "ki", "kd", "lambda", "mu", "mp_pct", "t_r", "stable"]);
    let mut trajectories = Vec::new();
    let mut all_ok = true;
    for (k, r) in &results {
        match r {
            Ok(res) => {
                let c = res.params;
                table.push(vec![
                    k.label().into(),
                    format!("{}", res.j_min),
                    format!("{}", c.kp),
                    format!("{}", c.ki),
                    format!("{}", c.kd),
                    format!("{}", c.lambda),
                    format!("{}", c.mu),
                    format!("{}", res.mp_pct),
                    fmt_opt(res.t_r),
                    res.stable.to_string(),
                ]);
                let cl = closed_loop_realize(&plant, &c, &cfg.sim)?;
                trajectories.push((*k, c, simulate_step(&cl, &cfg.sim, None)?));
            }
            Err(e) => {
                all_ok = false;
                eprintln!("warning: {k}: {e}");
                let mut row = vec![k.label().to_string(), "failed".into()];
                row.resize(10, String::new());
                table.push(row);
            }
        }
    }

    let mut out = OutDir::new(cfg.out_dir.clone());
    for (k, c, sim) in &trajectories {
        let stem = file_stem(k.label());
        out.write_toml(&format!("controller_{stem}.toml"), c)?;
        write_step_csv(sim, &out.file(&format!("step_{stem}.csv"))?)?;
    }
    if let [(_, c, _)] = trajectories.as_slice() {
        out.write_toml("controller.toml", c)?;
    }
    out.write_text("time_table.csv", &table.to_csv())?;
    println!("plant {name}");
    println!("{}", table.to_text());
    println!("{}", out.summary());
    Ok(if all_ok { Outcome::Success } else { Outcome::NotConverged })
}

fn loop_inputs(lp: &LoopArgs) -> Result<(FracTransferFunction, FopidParams)> {
    let (_, plant) = read_plant(&lp.plant)?;
    let c = read_controller(&lp.controller)?;
    Ok((plant, c))
}

#[derive(Serialize)]
struct StepReport {
    stable: bool,
    overflow: bool,
    metrics: StepMetrics,
}

fn step_run(cfg: &RunConfig, plant: &FracTransferFunction, c: &FopidParams, d: Option<Disturbance>) -> Result<(SimResult, StepReport)> {
    let cl = closed_loop_realize(plant, c, &cfg.sim)?;
    let stable = cl.is_stable()?;
    if !stable {
        eprintln!("warning: the closed loop is unstable");
    }
    let r = simulate_step(&cl, &cfg.sim, d)?;
    if r.overflow {
        eprintln!("warning: output exceeded the overflow limit; trajectory truncated");
    }
    let metrics = step_metrics(&r);
    let report = StepReport { stable, overflow: r.overflow, metrics };
    Ok((r, report))
}

fn print_metrics(m: &StepMetrics) {
    println!(
        "overshoot {:.3}%  rise time {}  settling time {}  final value {:.6}  settled {}",
        m.mp_pct,
        m.t_r.map_or("-".into(), |v| format!("{v:.4} s")),
        m.t_s.map_or("-".into(), |v| format!("{v:.4} s")),
        m.y_ss,
        m.settled
    );
}

pub fn simulate(cfg: &RunConfig, a: &SimulateArgs) -> Result<Outcome> {
    let (plant, c) = loop_inputs(&a.lp)?;
    let dist = match a.disturbance_time {
        Some(t) => {
            ensure!(t.is_finite() && t >= 0.0, "disturbance time must be finite and >= 0");
            ensure!(a.disturbance_magnitude.is_finite(), "disturbance magnitude must be finite");
            Some(Disturbance { time: t, magnitude: a.disturbance_magnitude })
        }
        None => None,
    };
    let (r, report) = step_run(cfg, &plant, &c, dist)?;
    let mut out = OutDir::new(cfg.out_dir.clone());
    write_step_csv(&r, &out.file("step.csv")?)?;
    out.write_toml("step_metrics.toml", &report)?;
    print_metrics(&report.metrics);
    println!("{}", out.summary());
    Ok(Outcome::Success)
}

fn check_band(b: &BandArgs) -> Result<()> {
    ensure!(
        b.omega_min > 0.0 && b.omega_max > b.omega_min && b.omega_max.is_finite(),
        "frequency band must satisfy 0 < omega-min < omega-max"
    );
    ensure!(b.points >= 2, "--points must be at least 2");
    Ok(())
}

pub fn analyze(cfg: &RunConfig, what: &AnalyzeCommand) -> Result<Outcome> {
    let mut out = OutDir::new(cfg.out_dir.clone());
    match what {
        AnalyzeCommand::Bode { lp, band } => {
            check_band(band)?;
            let (plant, c) = loop_inputs(lp)?;
            let g = fopid_to_fotf(&c)?.series(&plant)?;
            let curve = bode_curve(&g, band.omega_min, band.omega_max, band.points)?;
            write_bode_csv(&curve, &out.file("bode.csv")?)?;
            if !curve.gaps.is_empty() {
                eprintln!("warning: {} singular frequencies skipped", curve.gaps.len());
            }
        }
        AnalyzeCommand::Sens { lp, band } => {
            check_band(band)?;
            let (plant, c) = loop_inputs(lp)?;
            let g = fopid_to_fotf(&c)?.series(&plant)?;
            let (s, t) = sensitivity_curves(&g, band.omega_min, band.omega_max, band.points)?;
            let peak = |c: &fopid_core::analysis::FrequencyCurve| {
                c.magnitude_db.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            };
            println!("peak |S| = {:.3} dB, peak |T| = {:.3} dB", peak(&s), peak(&t));
            write_bode_csv(&s, &out.file("sensitivity.csv")?)?;
            write_bode_csv(&t, &out.file("complementary_sensitivity.csv")?)?;
        }
        AnalyzeCommand::Step { lp } => {
            let (plant, c) = loop_inputs(lp)?;
            let (r, report) = step_run(cfg, &plant, &c, None)?;
            print_metrics(&report.metrics);
            write_step_csv(&r, &out.file("step.csv")?)?;
            out.write_toml("step_metrics.toml", &report)?;
        }
        AnalyzeCommand::Sweep { lp, gains } => {
            if gains.iter().any(|g| !(g.is_finite() && *g > 0.0)) || gains.is_empty() {
                bail!("--gains must be positive finite multipliers");
            }
            let (plant, c) = loop_inputs(lp)?;
            let rep = iso_damping_sweep(&plant, &c, gains, &cfg.sim)?;
            for e in &rep.entries {
                match e.metrics {
                    Some(m) => println!(
                        "gain {:<5} overshoot {:.3}%  rise time {}",
                        e.gain,
                        m.mp_pct,
                        m.t_r.map_or("-".into(), |v| format!("{v:.4} s"))
                    ),
                    None => println!("gain {:<5} unstable", e.gain),
                }
            }
            match rep.overshoot_spread() {
                Some(s) => println!("overshoot spread {s:.3} percentage points"),
                None => println!("overshoot spread undefined (unstable or undefined entry)"),
            }
            write_sweep_csv(&rep, &out.file("sweep.csv")?)?;
        }
    }
    println!("{}", out.summary());
    Ok(Outcome::Success)
}
