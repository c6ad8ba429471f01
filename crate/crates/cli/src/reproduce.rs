use crate::args::ReproduceArgs;
use crate::commands::{fit_options, time_options};
use crate::config::RunConfig;
use crate::io::{OutDir, Table};
use crate::Outcome;
use anyhow::{bail, Result};
use fopid_core::fractional::{bundled_plant, FracTransferFunction};
use fopid_core::freq::{spec_residuals, tune_frequency_domain, FreqTuneOptions, RESIDUAL_TOL};
use fopid_core::reduction::{rank_templates, FitResult, TemplateKind};
use fopid_core::reference::ReferenceData;
use fopid_core::time::{recheck_stability, tune_all_indices, IndexKind};
use num_complex::Complex64;
use std::collections::{BTreeMap, BTreeSet};

const FIT_RATIO: f64 = 1.10;
const PUBLISHED_RESIDUAL_TOL: f64 = 0.05;
const PARAM_MATCH: f64 = 0.15;
const PARAM_MATCH_PLANTS: usize = 3;
const CAP_SLACK_DB: f64 = 0.5;
const INDEX_RATIO: f64 = 1.10;
const P2_IAE_OVERSHOOT: f64 = 3.0;

fn parse_tables(raw: &[String]) -> Result<BTreeSet<u8>> {
    let mut set = BTreeSet::new();
    for t in raw {
        let t = t.trim();
        if t.eq_ignore_ascii_case("all") {
            set.extend(1..=7);
            continue;
        }
        match t.parse::<u8>() {
            Ok(n @ 1..=7) => {
                set.insert(n);
            }
            _ => bail!("unknown table '{t}'; expected 1..7 or all"),
        }
    }
    if set.is_empty() {
        bail!("no tables selected");
    }
    Ok(set)
}

struct Rows {
    table: Table,
    failures: usize,
}

impl Rows {
    fn push(&mut self, table: u8, plant: &str, item: String, computed: String, expected: String, limit: String, ok: Option<bool>) {
        let status = match ok {
            Some(true) => "PASS",
            Some(false) => {
                self.failures += 1;
                "FAIL"
            }
            None => "info",
        };
        self.table.push(vec![table.to_string(), plant.into(), item, computed, expected, limit, status.into()]);
    }
}

fn nioptd2(r: &ReferenceData, plant: &str) -> Result<FracTransferFunction> {
    Ok(r.models_for(plant)?.model(TemplateKind::Nioptd2).to_fotf()?)
}

fn db(z: Complex64) -> f64 {
    20.0 * z.norm().log10()
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ")
}

pub fn reproduce(cfg: &RunConfig, a: &ReproduceArgs) -> Result<Outcome> {
    let tables = parse_tables(&a.tables)?;
    let r = ReferenceData::bundled()?;
    let fit_opts = fit_options(cfg, None)?;
    let time_opts = time_options(cfg, None)?;
    let mut rows = Rows {
        table: Table::new(&["table", "plant", "item", "computed", "expected", "limit", "status"]),
        failures: 0,
    };

    let mut fits: BTreeMap<String, Vec<(TemplateKind, FitResult)>> = BTreeMap::new();
    if tables.contains(&1) || tables.contains(&2) {
        for name in r.plants() {
            let p = bundled_plant(&name)?;
            let ranked = rank_templates(&p, &fit_opts)
                .into_iter()
                .filter_map(|(k, res)| match res {
                    Ok(f) => Some((k, f)),
                    Err(e) => {
                        eprintln!("warning: {name} {k}: {e}");
                        None
                    }
                })
                .collect();
            fits.insert(name, ranked);
        }
    }

    if tables.contains(&1) {
        for (name, ranked) in &fits {
            let expected = r.reduction_for(name)?;
            for k in TemplateKind::ALL {
                let limit = FIT_RATIO * expected.j_f(k);
                let got = ranked.iter().find(|(kk, _)| *kk == k).map(|(_, f)| f.j_f);
                rows.push(
                    1,
                    name,
                    format!("j_f {}", k.label()),
                    got.map_or("failed".into(), |v| format!("{v:.5}")),
                    format!("{}", expected.j_f(k)),
                    format!("{limit:.5}"),
                    Some(got.is_some_and(|v| v <= limit)),
                );
            }
            let best = ranked.first().map(|(k, _)| *k);
            rows.push(
                1,
                name,
                "preferred template".into(),
                best.map_or("-".into(), |k| k.label().into()),
                TemplateKind::Nioptd2.label().into(),
                String::new(),
                Some(best == Some(TemplateKind::Nioptd2)),
            );
        }
    }

    if tables.contains(&2) {
        for (name, ranked) in &fits {
            let published = r.models_for(name)?;
            for (k, f) in ranked {
                rows.push(
                    2,
                    name,
                    format!("{} params", k.label()),
                    fmt_vec(&f.model.params()),
                    fmt_vec(&published.model(*k).params()),
                    String::new(),
                    None,
                );
            }
        }
    }

    if tables.contains(&3) {
        let mut matched = 0;
        for name in r.plants() {
            let d = r.freq_design_for(&name)?;
            let m = nioptd2(&r, &name)?;
            let res = spec_residuals(&d.controller, &m, &d.spec)?;
            for (i, v) in res[..3].iter().enumerate() {
                rows.push(
                    3,
                    &name,
                    format!("published controller r{}", i + 1),
                    format!("{v:+.4}"),
                    "0".into(),
                    format!("{PUBLISHED_RESIDUAL_TOL}"),
                    Some(v.abs() <= PUBLISHED_RESIDUAL_TOL),
                );
            }
            let g = |w: f64| m.freq_response(w).map(|z| d.controller.eval(w) * z);
            let gt = g(d.spec.omega_t)?;
            let gs = g(d.spec.omega_s)?;
            let caps = [("|T(j omega_t)| dB", db(gt / (1.0 + gt)), d.spec.a_db), ("|S(j omega_s)| dB", db(1.0 / (1.0 + gs)), d.spec.b_db)];
            for (item, v, cap) in caps {
                rows.push(
                    3,
                    &name,
                    format!("published controller {item}"),
                    format!("{v:.2}"),
                    format!("{cap}"),
                    format!("{}", cap + CAP_SLACK_DB),
                    Some(v <= cap + CAP_SLACK_DB),
                );
            }

            let opts = FreqTuneOptions { seed: cfg.seed, ..FreqTuneOptions::default() };
            let out = tune_frequency_domain(&m, &d.spec, None, &opts)?;
            let own = spec_residuals(&out.params, &m, &d.spec)?;
            let within = out.converged && own.iter().zip(RESIDUAL_TOL).all(|(v, t)| v.abs() <= t);
            let worst = own.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            rows.push(3, &name, "solver residual max".into(), format!("{worst:.3e}"), "0".into(), "1e-6 / 1e-4".into(), Some(within));
            let (got, want) = (out.params.to_vec(), d.controller.to_vec());
            let close = got.iter().zip(&want).all(|(g, w)| (g - w).abs() <= PARAM_MATCH * w.abs());
            matched += usize::from(close);
            rows.push(3, &name, "solver params".into(), fmt_vec(&got), fmt_vec(&want), format!("{:.0}%", 100.0 * PARAM_MATCH), None);
        }
        rows.push(
            3,
            "all",
            "plants with solver params within tolerance".into(),
            matched.to_string(),
            "4".into(),
            PARAM_MATCH_PLANTS.to_string(),
            Some(matched >= PARAM_MATCH_PLANTS),
        );
    }

    for (table, plant) in [(4u8, "p1"), (5, "p2"), (6, "p3"), (7, "p4")] {
        if !tables.contains(&table) {
            continue;
        }
        let p = bundled_plant(plant)?;
        let expected = r.time_design_for(plant)?;
        for (k, res) in tune_all_indices(&p, &cfg.sim, &time_opts) {
            let row = expected.row(k).expect("reference rows cover every index");
            let limit = INDEX_RATIO * row.j_min;
            match res {
                Ok(res) => {
                    let stable = recheck_stability(&p, &res.params, &cfg.sim).unwrap_or(false);
                    rows.push(
                        table,
                        plant,
                        format!("{} minimum", k.label()),
                        format!("{:.5}", res.j_min),
                        format!("{}", row.j_min),
                        format!("{limit:.5}"),
                        Some(res.j_min <= limit && stable),
                    );
                    rows.push(table, plant, format!("{} overshoot %", k.label()), format!("{:.2}", res.mp_pct), format!("{}", row.mp_pct), String::new(), None);
                    if plant == "p2" && k == IndexKind::Iae {
                        rows.push(
                            table,
                            plant,
                            "IAE overshoot limit %".into(),
                            format!("{:.2}", res.mp_pct),
                            format!("{}", row.mp_pct),
                            format!("{P2_IAE_OVERSHOOT}"),
                            Some(res.mp_pct <= P2_IAE_OVERSHOOT),
                        );
                    }
                }
                Err(e) => rows.push(table, plant, format!("{} minimum", k.label()), format!("failed: {e}"), format!("{}", row.j_min), format!("{limit:.5}"), Some(false)),
            }
        }
    }

    let mut out = OutDir::new(cfg.out_dir.clone());
    out.write_text("reproduce.csv", &rows.table.to_csv())?;
    println!("{}", rows.table.to_text());
    println!("{} failing row(s)", rows.failures);
    println!("{}", out.summary());
    Ok(if rows.failures == 0 { Outcome::Success } else { Outcome::AcceptanceFailed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_selection() {
        let s = |v: &[&str]| parse_tables(&v.iter().map(|x| x.to_string()).collect::<Vec<_>>());
        assert_eq!(s(&["all"]).unwrap().len(), 7);
        assert_eq!(s(&["3", "1", "3"]).unwrap().into_iter().collect::<Vec<_>>(), [1, 3]);
        assert!(s(&["8"]).is_err());
        assert!(s(&["x"]).is_err());
        assert!(s(&[]).is_err());
    }
}
