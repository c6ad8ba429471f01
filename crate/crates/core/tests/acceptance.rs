//! Acceptance checks against the bundled reference values.
//!
//! Runs without the libtest harness so every line reaches stdout. Each check
//! prints its measurements followed by one `PASS` or `FAIL` line; the process
//! exits non-zero if any check fails.

use fopid_core::analysis::{iso_damping_sweep, step_metrics, GainSweepReport, DEFAULT_SWEEP_GAINS};
use fopid_core::fractional::{bundled_plant, oustaloup, pade_delay, rationalize, FracTransferFunction, OustaloupConfig};
use fopid_core::freq::{
    fopid_to_fotf, spec_residuals, tune_frequency_domain, FopidParams, FreqTuneOptions, RESIDUAL_TOL,
};
use fopid_core::reduction::{fit_template, h2_norm, rank_templates, FitOptions, FitResult, TemplateKind};
use fopid_core::reference::ReferenceData;
use fopid_core::time::{
    all_indices, candidate_objective, closed_loop_realize, recheck_stability, simulate_step, tune_all_indices,
    tune_time_domain, IndexKind, IndexWeights, SimConfig, SimResult, TimeTuneOptions, TimeTuneResult,
};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::time::{Duration, Instant};

const FIT_RATIO: f64 = 1.10;
const FIT_RUNTIME: Duration = Duration::from_secs(300);
const PUBLISHED_RESIDUAL_TOL: f64 = 0.05;
const PARAM_MATCH: f64 = 0.15;
const PARAM_MATCH_PLANTS: usize = 3;
const INDEX_RATIO: f64 = 1.10;
const P2_IAE_OVERSHOOT: f64 = 3.0;
const TIME_RUNTIME: Duration = Duration::from_secs(1200);
const ISO_SPREAD: f64 = 3.0;
const CAP_SLACK_DB: f64 = 0.5;
const NESTING_SLACK: f64 = 1e-3;
const HORIZON_CHANGE: f64 = 0.01;
const FIDELITY_DB: f64 = 0.5;
const FIDELITY_DEG: f64 = 2.0;

struct Report {
    failed: Vec<&'static str>,
}

impl Report {
    fn verdict(&mut self, name: &'static str, ok: bool) {
        println!("{} {name}", if ok { "PASS" } else { "FAIL" });
        println!();
        if !ok {
            self.failed.push(name);
        }
    }
}

fn db(z: Complex64) -> f64 {
    20.0 * z.norm().log10()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn plants(r: &ReferenceData) -> Vec<(String, FracTransferFunction)> {
    r.plants()
        .into_iter()
        .map(|n| {
            let p = bundled_plant(&n).expect("bundled plant");
            (n, p)
        })
        .collect()
}

fn nioptd2(r: &ReferenceData, plant: &str) -> FracTransferFunction {
    r.models_for(plant).unwrap().model(TemplateKind::Nioptd2).to_fotf().unwrap()
}

type Fits = BTreeMap<String, Vec<(TemplateKind, FitResult)>>;

fn check_reduction(rep: &mut Report, r: &ReferenceData) -> Fits {
    println!("== reduced-model fit quality");
    let t0 = Instant::now();
    let mut fits = Fits::new();
    let mut ok = true;
    for (name, p) in plants(r) {
        let expected = r.reduction_for(&name).unwrap();
        let ranked: Vec<(TemplateKind, FitResult)> = rank_templates(&p, &FitOptions::default())
            .into_iter()
            .filter_map(|(k, res)| match res {
                Ok(f) => Some((k, f)),
                Err(e) => {
                    println!("  {name} {k}: fit failed: {e}");
                    None
                }
            })
            .collect();
        ok &= ranked.len() == 4;
        for (k, f) in &ranked {
            let limit = FIT_RATIO * expected.j_f(*k);
            let pass = f.j_f <= limit;
            ok &= pass;
            println!("  {name} {:<9} j_f = {:.5}  limit {:.5}  {}", k.label(), f.j_f, limit, if pass { "ok" } else { "over" });
        }
        let first = ranked.first().map(|(k, _)| *k);
        println!("  {name} best template: {}", first.map_or("-", |k| k.label()));
        ok &= first == Some(TemplateKind::Nioptd2);
        fits.insert(name, ranked);
    }
    let elapsed = t0.elapsed();
    println!("  runtime {:.1} s (limit {} s)", elapsed.as_secs_f64(), FIT_RUNTIME.as_secs());
    rep.verdict("reduced-model fit quality and ranking", ok && elapsed <= FIT_RUNTIME);
    fits
}

fn check_frequency_designs(rep: &mut Report, r: &ReferenceData) {
    println!("== frequency-domain designs: published controllers");
    let mut ok_a = true;
    for name in r.plants() {
        let d = r.freq_design_for(&name).unwrap();
        let res = spec_residuals(&d.controller, &nioptd2(r, &name), &d.spec).unwrap();
        let pass = res[..3].iter().all(|v| v.abs() <= PUBLISHED_RESIDUAL_TOL);
        ok_a &= pass;
        println!(
            "  {name} r1 = {:+.4}  r2 = {:+.4}  r3 = {:+.4}  (limit {PUBLISHED_RESIDUAL_TOL})",
            res[0], res[1], res[2]
        );
    }
    rep.verdict("published frequency-domain controllers satisfy the phase, gain and flatness equations", ok_a);

    println!("== frequency-domain designs: solver output");
    let mut ok_b = true;
    let mut matched = 0;
    for name in r.plants() {
        let d = r.freq_design_for(&name).unwrap();
        let m = nioptd2(r, &name);
        let out = tune_frequency_domain(&m, &d.spec, None, &FreqTuneOptions::default()).unwrap();
        let res = spec_residuals(&out.params, &m, &d.spec).unwrap();
        let within = res.iter().zip(RESIDUAL_TOL).all(|(v, t)| v.abs() <= t);
        ok_b &= within && out.converged;
        let (got, want) = (out.params.to_vec(), d.controller.to_vec());
        let close = got.iter().zip(&want).all(|(g, w)| rel_err(*g, *w) <= PARAM_MATCH);
        matched += usize::from(close);
        println!(
            "  {name} converged = {}  residuals = [{}]",
            out.converged,
            res.iter().map(|v| format!("{v:+.2e}")).collect::<Vec<_>>().join(", ")
        );
        println!(
            "  {name} params = [{}]  published = [{}]  within {:.0}%: {close}",
            got.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", "),
            want.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", "),
            100.0 * PARAM_MATCH
        );
    }
    println!("  parameter matches: {matched} of 4 (need {PARAM_MATCH_PLANTS})");
    rep.verdict(
        "frequency-domain solver meets all five equations and matches published parameters",
        ok_b && matched >= PARAM_MATCH_PLANTS,
    );
}

type TimeTables = BTreeMap<String, Vec<(IndexKind, TimeTuneResult)>>;

fn check_time_designs(rep: &mut Report, r: &ReferenceData) -> TimeTables {
    println!("== time-domain optimal tuning");
    let cfg = SimConfig::default();
    let half = SimConfig { dt: cfg.dt / 2.0, ..cfg };
    let weights = IndexWeights::default();
    let t0 = Instant::now();
    let mut ok = true;
    let mut tables = TimeTables::new();
    for (name, p) in plants(r) {
        let expected = r.time_design_for(&name).unwrap();
        let mut rows = Vec::new();
        for (k, res) in tune_all_indices(&p, &cfg, &TimeTuneOptions::default()) {
            let res = match res {
                Ok(v) => v,
                Err(e) => {
                    println!("  {name} {k}: no stable optimum: {e}");
                    ok = false;
                    continue;
                }
            };
            let limit = INDEX_RATIO * expected.row(k).unwrap().j_min;
            let stable = recheck_stability(&p, &res.params, &cfg).unwrap_or(false);
            let j_half = candidate_objective(&p, &res.params, k, &weights, &half);
            let pass = res.j_min <= limit && stable;
            ok &= pass;
            println!(
                "  {name} {:<7} j = {:.4e}  limit {:.4e}  recheck stable = {stable}  Mp = {:.2}%  j(dt/2) = {:.4e}",
                k.label(),
                res.j_min,
                limit,
                res.mp_pct,
                j_half
            );
            rows.push((k, res));
        }
        tables.insert(name, rows);
    }
    let p2_iae = tables
        .get("p2")
        .and_then(|rows| rows.iter().find(|(k, _)| *k == IndexKind::Iae))
        .map(|(_, res)| res.mp_pct);
    let elapsed = t0.elapsed();
    println!(
        "  p2 IAE overshoot {} (limit {P2_IAE_OVERSHOOT}%)",
        p2_iae.map_or("-".into(), |v| format!("{v:.2}%"))
    );
    println!("  runtime {:.1} s (limit {} s)", elapsed.as_secs_f64(), TIME_RUNTIME.as_secs());
    let overshoot_ok = p2_iae.is_some_and(|v| v <= P2_IAE_OVERSHOOT);
    rep.verdict(
        "time-domain index minima, stability recheck and overshoot",
        ok && overshoot_ok && elapsed <= TIME_RUNTIME,
    );
    tables
}

fn sweep(p: &FracTransferFunction, c: &FopidParams) -> GainSweepReport {
    iso_damping_sweep(p, c, &DEFAULT_SWEEP_GAINS, &SimConfig::default()).unwrap()
}

fn describe(s: &GainSweepReport) -> String {
    s.entries
        .iter()
        .map(|e| e.metrics.map_or("unstable".to_string(), |m| format!("{:.2}", m.mp_pct)))
        .collect::<Vec<_>>()
        .join(" / ")
}

/// Published time-domain controller with the lowest nominal overshoot, ties to the faster rise.
fn best_time_design(r: &ReferenceData, name: &str) -> (IndexKind, FopidParams) {
    let rows = &r.time_design_for(name).unwrap().rows;
    let best = rows
        .iter()
        .min_by(|a, b| a.mp_pct.total_cmp(&b.mp_pct).then(a.t_r.total_cmp(&b.t_r)))
        .unwrap();
    (best.index, best.controller)
}

fn check_iso_damping(rep: &mut Report, r: &ReferenceData) {
    println!("== iso-damping under loop-gain changes {DEFAULT_SWEEP_GAINS:?}");
    let mut ok = true;
    for (name, p) in plants(r) {
        let fd = sweep(&p, &r.freq_design_for(&name).unwrap().controller);
        let (kind, tc) = best_time_design(r, &name);
        let td = sweep(&p, &tc);
        let (sf, st) = (fd.overshoot_spread(), td.overshoot_spread());
        let flat = sf.is_some_and(|v| v <= ISO_SPREAD);
        // An unstable gain in the time-domain sweep counts as an unbounded spread.
        let ordered = match (sf, st) {
            (Some(f), Some(t)) => t > f,
            (Some(_), None) => true,
            _ => false,
        };
        ok &= flat && ordered;
        let fmt = |v: Option<f64>| v.map_or("inf".into(), |v| format!("{v:.2}"));
        println!("  {name} frequency design Mp% {}  spread {}", describe(&fd), fmt(sf));
        println!("  {name} time design ({kind}) Mp% {}  spread {}", describe(&td), fmt(st));
    }
    rep.verdict("frequency-domain designs are iso-damped and flatter than time-domain designs", ok);
}

fn check_caps(rep: &mut Report, r: &ReferenceData) {
    println!("== sensitivity caps of the frequency-domain designs");
    let mut ok = true;
    for name in r.plants() {
        let d = r.freq_design_for(&name).unwrap();
        let m = nioptd2(r, &name);
        let g = |w: f64| d.controller.eval(w) * m.freq_response(w).unwrap();
        let gt = g(d.spec.omega_t);
        let gs = g(d.spec.omega_s);
        let t_db = db(gt / (1.0 + gt));
        let s_db = db(1.0 / (1.0 + gs));
        let pass = t_db <= d.spec.a_db + CAP_SLACK_DB && s_db <= d.spec.b_db + CAP_SLACK_DB;
        ok &= pass;
        println!(
            "  {name} |T(j{})| = {t_db:.2} dB  |S(j{})| = {s_db:.2} dB  (caps {} / {} dB)",
            d.spec.omega_t, d.spec.omega_s, d.spec.a_db, d.spec.b_db
        );
    }
    rep.verdict("published frequency-domain designs respect both sensitivity caps", ok);
}

fn exp_decay(dt: f64, t_end: f64) -> SimResult {
    let n = (t_end / dt).round() as usize + 1;
    let t: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
    let e: Vec<f64> = t.iter().map(|t| (-t).exp()).collect();
    SimResult {
        y: e.iter().map(|v| 1.0 - v).collect(),
        u: vec![0.0; n],
        t,
        e,
        overflow: false,
    }
}

fn check_kernel(rep: &mut Report) {
    println!("== numerical kernel oracles");
    let cfg = OustaloupConfig::default();
    let lag = FracTransferFunction::from_coeffs(&[1.0], &[1.0, 1.0], 0.0).unwrap();
    let h2 = h2_norm(&lag, &cfg).unwrap();
    let h2_ok = (h2 - 0.5f64.sqrt()).abs() <= 1e-3;
    println!("  H2 of 1/(s+1) = {h2:.5} (expect 0.70711 +- 1e-3)");

    let idx = all_indices(&exp_decay(1e-3, 50.0));
    let expect = [1.0, 1.0, 0.5, 0.25, 0.75, 0.25];
    let idx_ok = idx.iter().zip(expect).all(|(a, b)| (a - b).abs() <= 1e-3);
    println!("  indices of exp(-t) [IAE, ITAE, ISE, ITSE, ISTES, ISTSE] = {idx:.5?}");

    let phase = oustaloup(0.5, &cfg).unwrap().eval(1.0).arg().to_degrees();
    let phase_ok = (phase - 45.0).abs() <= 1.0;
    println!("  Oustaloup s^0.5 phase at 1 rad/s = {phase:.3} deg (expect 45 +- 1)");

    let pade = pade_delay(1.0, 3).unwrap();
    let allpass = (0..=400)
        .map(|i| 10f64.powf(-3.0 + 7.0 * i as f64 / 400.0))
        .fold(0.0f64, |m, w| m.max((pade.eval(w).norm() - 1.0).abs()));
    let pade_ok = allpass <= 1e-12;
    println!("  third-order Pade |H(jw)| - 1 max = {allpass:.2e} (limit 1e-12)");

    // Unity feedback around 1/(s(s+1)) gives 1/(s^2 + s + 1), zeta = 0.5.
    let p = FracTransferFunction::from_coeffs(&[1.0], &[1.0, 1.0, 0.0], 0.0).unwrap();
    let c = FopidParams::new(1.0, 0.0, 0.0, 0.0, 0.0).unwrap();
    let sim_cfg = SimConfig::default();
    let cl = closed_loop_realize(&p, &c, &sim_cfg).unwrap();
    let mp = step_metrics(&simulate_step(&cl, &sim_cfg, None).unwrap()).mp_pct;
    let mp_ok = (mp - 16.30).abs() <= 0.1;
    println!("  zeta = 0.5 step overshoot = {mp:.3}% (expect 16.30 +- 0.1)");

    rep.verdict("numerical kernel oracles", h2_ok && idx_ok && phase_ok && pade_ok && mp_ok);
}

fn check_properties(rep: &mut Report, r: &ReferenceData, fits: &Fits, tables: &TimeTables) {
    println!("== property suites");
    let grid: Vec<f64> = (0..=200).map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / 200.0)).collect();

    let mut st_err = 0.0f64;
    for name in r.plants() {
        let d = r.freq_design_for(&name).unwrap();
        let g_loop = fopid_to_fotf(&d.controller).unwrap().series(&nioptd2(r, &name)).unwrap();
        for &w in &grid {
            let g = g_loop.freq_response(w).unwrap();
            let (t, s) = (g / (1.0 + g), 1.0 / (1.0 + g));
            st_err = st_err.max((t + s - 1.0).norm());
        }
    }
    let st_ok = st_err <= 1e-12;
    println!("  max |S + T - 1| = {st_err:.2e} (limit 1e-12)");

    let mut nest_ok = true;
    for (name, ranked) in fits {
        let j = |k: TemplateKind| ranked.iter().find(|(kk, _)| *kk == k).map(|(_, f)| f.j_f);
        let pairs = [(TemplateKind::Nioptd2, TemplateKind::Soptd), (TemplateKind::Nioptd1, TemplateKind::Foptd)];
        for (fine, coarse) in pairs {
            match (j(fine), j(coarse)) {
                (Some(a), Some(b)) => {
                    let pass = a <= b + NESTING_SLACK;
                    nest_ok &= pass;
                    println!("  {name} {} {a:.5} vs {} {b:.5}: {}", fine.label(), coarse.label(), if pass { "ok" } else { "violated" });
                }
                _ => nest_ok = false,
            }
        }
    }

    let mut horizon_ok = true;
    let mut worst_horizon = 0.0f64;
    let long = SimConfig { t_end: 100.0, ..SimConfig::default() };
    for (name, rows) in tables {
        let p = bundled_plant(name).unwrap();
        for (k, res) in rows {
            let j100 = candidate_objective(&p, &res.params, *k, &IndexWeights::default(), &long);
            let change = rel_err(j100, res.j_min);
            worst_horizon = worst_horizon.max(change);
            if change >= HORIZON_CHANGE {
                horizon_ok = false;
                println!("  {name} {k}: j(50) = {:.4e}  j(100) = {j100:.4e}", res.j_min);
            }
        }
    }
    horizon_ok &= !tables.is_empty();
    println!("  horizon doubling worst relative change {:.3}% (limit 1%)", 100.0 * worst_horizon);

    let mut fid_ok = true;
    let cfg = OustaloupConfig::default();
    for name in r.plants() {
        let m = nioptd2(r, &name);
        let (dmag, dphase) = fidelity(&m, &cfg, &grid);
        fid_ok &= dmag <= FIDELITY_DB && dphase <= FIDELITY_DEG;
        println!("  {name} rationalized model error max {dmag:.3} dB / {dphase:.2} deg over [1e-2, 1e2] rad/s");
        let (dmag0, dphase0) = fidelity(&m.with_delay(0.0).unwrap(), &cfg, &grid);
        println!("  {name} same without the dead time: {dmag0:.3} dB / {dphase0:.2} deg");
    }

    let det_ok = determinism(r);
    println!("  identical seeds give identical outputs: {det_ok}");

    println!(
        "  summary: S+T {st_ok}, nesting {nest_ok}, horizon {horizon_ok}, rationalization {fid_ok}, determinism {det_ok}"
    );
    rep.verdict("property suites", st_ok && nest_ok && horizon_ok && fid_ok && det_ok);
}

/// Worst magnitude (dB) and phase (deg) error of the rationalized model on `grid`.
fn fidelity(m: &FracTransferFunction, cfg: &OustaloupConfig, grid: &[f64]) -> (f64, f64) {
    let rat = rationalize(m, cfg, 3).unwrap();
    grid.iter().fold((0.0f64, 0.0f64), |(dm, dp), &w| {
        let exact = m.freq_response(w).unwrap();
        let approx = rat.eval(w);
        (
            dm.max((db(approx) - db(exact)).abs()),
            dp.max((approx / exact).arg().to_degrees().abs()),
        )
    })
}

fn determinism(r: &ReferenceData) -> bool {
    let p = bundled_plant("p1").unwrap();
    let fit = || fit_template(&p, TemplateKind::Nioptd1, None, &FitOptions::default()).unwrap();
    let (a, b) = (fit(), fit());
    let d = r.freq_design_for("p1").unwrap();
    let m = nioptd2(r, "p1");
    let tune = || tune_frequency_domain(&m, &d.spec, None, &FreqTuneOptions::default()).unwrap();
    let (fa, fb) = (tune(), tune());
    let q = FracTransferFunction::from_coeffs(&[1.0], &[1.0, 2.0, 1.0], 0.0).unwrap();
    let cfg = SimConfig { t_end: 20.0, ..SimConfig::default() };
    let opts = TimeTuneOptions { screen: 8, starts: 2, max_evals: 150, ..TimeTuneOptions::default() };
    let time = || tune_time_domain(&q, IndexKind::Ise, &cfg, &opts).unwrap();
    let (ta, tb) = (time(), time());
    a.model == b.model
        && a.j_f.to_bits() == b.j_f.to_bits()
        && fa.params == fb.params
        && fa.residuals == fb.residuals
        && ta.params == tb.params
        && ta.j_min.to_bits() == tb.j_min.to_bits()
}

fn main() {
    let r = ReferenceData::bundled().expect("bundled reference data");
    let mut rep = Report { failed: Vec::new() };
    let t0 = Instant::now();
    check_kernel(&mut rep);
    let fits = check_reduction(&mut rep, &r);
    check_frequency_designs(&mut rep, &r);
    check_caps(&mut rep, &r);
    check_iso_damping(&mut rep, &r);
    let tables = check_time_designs(&mut rep, &r);
    check_properties(&mut rep, &r, &fits, &tables);
    println!("acceptance finished in {:.1} s", t0.elapsed().as_secs_f64());
    if rep.failed.is_empty() {
        println!("all acceptance checks passed");
    } else {
        println!("{} acceptance check(s) failed:", rep.failed.len());
        for f in &rep.failed {
            println!("  {f}");
        }
        std::process::exit(1);
    }
}
