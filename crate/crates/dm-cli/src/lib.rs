//! Command-line front door: experiment configuration, execution and
//! machine-readable reporting for the verification suites and the moment
//! experiments.
//!
//! Subcommands: polys, sym-verify, euler-check, h-check, adc, moment,
//! weights-probe, all-checks. Each run writes `report.json` (and CSV tables
//! where the output is a grid) under the output directory. Exit codes:
//! 0 all enabled assertions passed, 1 assertion or numerical failure,
//! 2 configuration error.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use serde_json::{json, Map, Value};

use dm_core::arith::ShiftSet;
use dm_core::divisorsums::{adc_sweep, AdcHypothesis};
use dm_core::eulerprod::{h_direct, h_eval, z_eval, z_series};
use dm_core::momentpoly::{a_kl, g_k, poly_identity_checks, w_kl};
use dm_core::moments::{moment_report, MomentConfig};
use dm_core::quad::QuadratureSpec;
use dm_core::rng::SplitMix64;
use dm_core::specfun::zeta_default;
use dm_core::sympoly::verify_comb_identity;
use dm_core::weights::{w0_partition, OmegaHatTable, OmegaWeight, PhiCutoff};
use dm_core::{Complex64, TruncationPolicy};

mod opts;
use opts::Opts;

pub const COMMANDS: &[&str] = &[
    "polys",
    "sym-verify",
    "euler-check",
    "h-check",
    "adc",
    "moment",
    "weights-probe",
    "all-checks",
];

/// Entry point; returns the process exit code.
pub fn run(argv: &[String]) -> i32 {
    let (command, opts) = match Opts::parse(argv) {
        Ok(x) => x,
        Err(msg) => {
            eprintln!("config error: {msg}");
            eprintln!("usage: dm <{}> [--flag value ...]", COMMANDS.join("|"));
            return 2;
        }
    };
    let outcome = match command.as_str() {
        "polys" => cmd_polys(&opts),
        "sym-verify" => cmd_sym_verify(&opts),
        "euler-check" => cmd_euler_check(&opts),
        "h-check" => cmd_h_check(&opts),
        "adc" => cmd_adc(&opts),
        "moment" => cmd_moment(&opts),
        "weights-probe" => cmd_weights_probe(&opts),
        "all-checks" => cmd_all_checks(&opts),
        other => Err(format!("unknown command {other}")),
    };
    match outcome {
        Ok(report) => {
            let failures = count_failures(&report.json);
            if let Err(e) = write_outputs(&opts, &report) {
                eprintln!("io error: {e}");
                return 1;
            }
            println!("{}", report.summary);
            if failures == 0 {
                0
            } else {
                println!("{failures} assertion(s) failed");
                1
            }
        }
        Err(msg) => match msg.strip_prefix("config:") {
            Some(rest) => {
                eprintln!("config error: {rest}");
                2
            }
            None => {
                eprintln!("error: {msg}");
                1
            }
        },
    }
}

pub struct Report {
    pub json: Value,
    pub tables: Vec<(String, String)>,
    pub summary: String,
}

fn count_failures(v: &Value) -> usize {
    match v {
        Value::Object(map) => map
            .iter()
            .map(|(k, v)| {
                if k.ends_with("_ok") && v == &Value::Bool(false) {
                    1
                } else {
                    count_failures(v)
                }
            })
            .sum(),
        Value::Array(xs) => xs.iter().map(count_failures).sum(),
        _ => 0,
    }
}

fn write_outputs(opts: &Opts, report: &Report) -> std::io::Result<()> {
    let dir = PathBuf::from(&opts.out_dir);
    std::fs::create_dir_all(&dir)?;
    let mut f = std::fs::File::create(dir.join("report.json"))?;
    f.write_all(serde_json::to_string_pretty(&report.json).unwrap().as_bytes())?;
    f.write_all(b"\n")?;
    if !report.tables.is_empty() {
        let tdir = dir.join("tables");
        std::fs::create_dir_all(&tdir)?;
        for (name, content) in &report.tables {
            std::fs::write(tdir.join(name), content)?;
        }
    }
    Ok(())
}

fn complex_json(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn shift_sets(opts: &Opts) -> Result<(ShiftSet, ShiftSet), String> {
    if let (Some(i), Some(j)) = (&opts.shifts_i, &opts.shifts_j) {
        let mk = |pairs: &[(f64, f64)], label: &str| {
            ShiftSet::from_shifts(
                pairs.iter().map(|&(re, im)| Complex64::new(re, im)).collect(),
                label,
            )
            .map_err(|e| format!("config:{e}"))
        };
        return Ok((mk(i, "I")?, mk(j, "J")?));
    }
    let k = opts.k.unwrap_or(2) as usize;
    let l = opts.l.unwrap_or(2) as usize;
    let d = opts.shift_spacing.unwrap_or(0.01);
    let i: Vec<f64> = (0..k).map(|n| (n as f64 + 1.0) * d).collect();
    let j: Vec<f64> = (0..l).map(|n| (n as f64 + 1.5) * d).collect();
    Ok((
        ShiftSet::from_real(&i, "I").map_err(|e| format!("config:{e}"))?,
        ShiftSet::from_real(&j, "J").map_err(|e| format!("config:{e}"))?,
    ))
}

fn policy(opts: &Opts) -> TruncationPolicy {
    let mut p = TruncationPolicy::default().with_jobs(opts.jobs);
    if let Some(cut) = opts.prime_cutoff {
        p = p.with_prime_cutoff(cut);
    }
    p
}

fn cmd_polys(opts: &Opts) -> Result<Report, String> {
    let k = opts.k.unwrap_or(3);
    let l = opts.l.unwrap_or(3);
    let w = w_kl(k, l).map_err(|e| e.to_string())?;
    let identities = poly_identity_checks().map_err(|e| e.to_string())?;
    let pol = policy(opts);
    let a = a_kl(k, l, &pol).map_err(|e| e.to_string())?;
    let mut j = Map::new();
    j.insert("command".into(), json!("polys"));
    j.insert("config".into(), json!({ "k": k, "l": l, "prime_cutoff": pol.prime_cutoff }));
    j.insert(
        "w_coefficients_ascending".into(),
        Value::Array(w.w_coeffs.iter().map(|c| json!(c.to_string())).collect()),
    );
    j.insert(
        "gamma_values".into(),
        Value::Array(w.gamma_values.iter().map(|c| json!(c.to_string())).collect()),
    );
    if k == l {
        j.insert("g_k".into(), json!(g_k(k).map_err(|e| e.to_string())?.to_string()));
    }
    j.insert(
        "a_kl".into(),
        json!({ "value": complex_json(a.value), "tail": a.tail_estimate,
                "prime_cutoff": a.prime_cutoff }),
    );
    j.insert(
        "identities".into(),
        json!({
            "w33_sum_identity_ok": identities.w33_sum_is_constant_42,
            "w22_homogeneous_ok": identities.w22_homogeneous_ok,
            "g3_ok": identities.g3_ok,
            "g4_ok": identities.g4_ok,
            "w44_doubled_is_g4_ok": identities.w44_doubled_is_g4,
            "w44_at_two": identities.w44_at_two.to_string(),
            "w44_at_two_matches_quoted_24024": identities.w44_at_two_is_24024,
            "note": "exact arithmetic gives w44(2) = 12012 with 2 w44(2) = g4; \
                     the quoted 24024 equals the doubled value",
        }),
    );
    let verdict = identities.consistent_ok();
    j.insert("identities_ok".into(), json!(verdict));
    Ok(Report {
        json: Value::Object(j),
        tables: vec![],
        summary: format!(
            "polys k={k} l={l}: identities {} (w44(2) = {}, doubled = g4: {})",
            if verdict { "ok" } else { "FAILED" },
            identities.w44_at_two,
            identities.w44_doubled_is_g4
        ),
    })
}

fn cmd_sym_verify(opts: &Opts) -> Result<Report, String> {
    let a_max = opts.a_max.unwrap_or(4);
    let m_max = opts.m_max.unwrap_or(5);
    let trials = opts.trials.unwrap_or(100);
    let mut rows = String::from("a,m,trials,max_rel_discrepancy\n");
    let mut worst = 0.0f64;
    let mut grid = Vec::new();
    for a in 1..=a_max {
        for m in 1..=m_max {
            let rep = verify_comb_identity(a, m, trials, opts.seed ^ ((a * 31 + m) as u64))
                .map_err(|e| e.to_string())?;
            worst = worst.max(rep.max_rel_discrepancy);
            rows.push_str(&format!("{a},{m},{trials},{:e}\n", rep.max_rel_discrepancy));
            grid.push(json!({
                "a": a, "m": m, "max_rel_discrepancy": rep.max_rel_discrepancy,
                "tolerance": 1e-9,
            }));
        }
    }
    let ok = worst <= 1e-9;
    let j = json!({
        "command": "sym-verify",
        "config": { "a_max": a_max, "m_max": m_max, "trials": trials, "seed": opts.seed },
        "grid": grid,
        "max_rel_discrepancy": worst,
        "tolerance": 1e-9,
        "identity_ok": ok,
    });
    Ok(Report {
        json: j,
        tables: vec![("sym_verify.csv".into(), rows)],
        summary: format!("sym-verify: max relative discrepancy {worst:.3e} (<= 1e-9: {ok})"),
    })
}

fn cmd_euler_check(opts: &Opts) -> Result<Report, String> {
    let (i_set, j_set) = shift_sets(opts)?;
    let pol = policy(opts);
    let n_series = opts.series_n.unwrap_or(1_000_000);
    let mut rows = String::from("s,series_re,series_im,factored_re,factored_im,gap,tail_budget\n");
    let mut points = Vec::new();
    let mut all_ok = true;
    for s in [1.5f64, 0.8, 0.3] {
        let (series, tail_s) = z_series(&i_set, &j_set, Complex64::new(s, 0.0), n_series, &pol)
            .map_err(|e| e.to_string())?;
        let fact = z_eval(&i_set, &j_set, Complex64::new(s, 0.0), &pol)
            .map_err(|e| e.to_string())?;
        let gap = (series - fact.value).norm();
        let budget = tail_s + fact.tail_estimate;
        let ok = gap <= budget;
        all_ok &= ok;
        rows.push_str(&format!(
            "{s},{:e},{:e},{:e},{:e},{:e},{:e}\n",
            series.re, series.im, fact.value.re, fact.value.im, gap, budget
        ));
        points.push(json!({
            "s": s,
            "series": { "value": complex_json(series), "tail": tail_s },
            "factored": { "value": complex_json(fact.value), "tail": fact.tail_estimate },
            "gap": gap, "within_tails_ok": ok,
        }));
    }
    // closed form at k = l = 2
    let mut closed = Value::Null;
    if i_set.len() == 2 && j_set.len() == 2 {
        let s = Complex64::new(0.4, 0.0);
        let wide = TruncationPolicy::default()
            .with_prime_cutoff(pol.prime_cutoff.max(2_000_000))
            .with_jobs(opts.jobs);
        let z = z_eval(&i_set, &j_set, s, &wide).map_err(|e| e.to_string())?;
        let (a1, a2) = (i_set.shifts()[0], i_set.shifts()[1]);
        let (b1, b2) = (j_set.shifts()[0], j_set.shifts()[1]);
        let one = Complex64::new(1.0, 0.0);
        let m = |z: dm_core::Result<Complex64>| z.map_err(|e| e.to_string());
        let num = m(zeta_default(one + s + a1 + b1))?
            * m(zeta_default(one + s + a1 + b2))?
            * m(zeta_default(one + s + a2 + b1))?
            * m(zeta_default(one + s + a2 + b2))?;
        let den = m(zeta_default(Complex64::new(2.0, 0.0) + 2.0 * s + a1 + a2 + b1 + b2))?;
        let want = num / den;
        let rel = (z.value - want).norm() / want.norm();
        let ok = rel <= 1e-6;
        all_ok &= ok;
        closed = json!({
            "value": complex_json(z.value), "reference": complex_json(want),
            "relative_gap": rel, "tolerance": 1e-6, "closed_form_ok": ok,
        });
    }
    let j = json!({
        "command": "euler-check",
        "config": {
            "shifts_i": i_set.shifts().iter().map(|z| vec![z.re, z.im]).collect::<Vec<_>>(),
            "shifts_j": j_set.shifts().iter().map(|z| vec![z.re, z.im]).collect::<Vec<_>>(),
            "series_n": n_series, "prime_cutoff": pol.prime_cutoff,
        },
        "points": points,
        "ramanujan_closed_form": closed,
        "all_ok": all_ok,
    });
    Ok(Report {
        json: j,
        tables: vec![("euler_check.csv".into(), rows)],
        summary: format!("euler-check: series vs factorization within tails: {all_ok}"),
    })
}

fn cmd_h_check(opts: &Opts) -> Result<Report, String> {
    let (i_set, j_set) = shift_sets(opts)?;
    let pol = policy(opts);
    let s = Complex64::new(opts.s_re.unwrap_or(1.5), 0.0);
    let rq = opts.rq.unwrap_or(10_000);
    let (direct, tail_d) =
        h_direct(&i_set, &j_set, 0, 0, s, rq, rq).map_err(|e| e.to_string())?;
    let fact = h_eval(&i_set, &j_set, 0, 0, s, &pol).map_err(|e| e.to_string())?;
    let gap = (direct - fact.value).norm();
    let within = gap <= tail_d + fact.tail_estimate;
    let pole = Complex64::new(1.0, 0.0) - i_set.shifts()[0] - j_set.shifts()[0];
    let probe = |d: f64| -> Result<Complex64, String> {
        Ok(h_eval(&i_set, &j_set, 0, 0, pole + Complex64::new(d, 0.0), &pol)
            .map_err(|e| e.to_string())?
            .value
            * Complex64::new(d, 0.0))
    };
    let r1 = probe(1e-2)?;
    let r2 = probe(5e-3)?;
    let residue_dev = (r1.norm() / r2.norm() - 1.0).abs();
    let residue_ok = residue_dev <= 0.05;
    let ok = within && residue_ok;
    let j = json!({
        "command": "h-check",
        "config": {
            "s": [s.re, s.im], "r_max": rq, "q_max": rq,
            "prime_cutoff": pol.prime_cutoff,
        },
        "direct": { "value": complex_json(direct), "tail": tail_d },
        "factored": { "value": complex_json(fact.value), "tail": fact.tail_estimate },
        "gap": gap,
        "within_tails_ok": within,
        "residue_probe": {
            "at_1e-2": complex_json(r1), "at_5e-3": complex_json(r2),
            "deviation": residue_dev, "tolerance": 0.05, "stable_ok": residue_ok,
        },
        "all_ok": ok,
    });
    Ok(Report {
        json: j,
        tables: vec![],
        summary: format!(
            "h-check: gap {gap:.3e} within tails: {within}; residue stable: {residue_ok}"
        ),
    })
}

fn cmd_adc(opts: &Opts) -> Result<Report, String> {
    let (i_set, j_set) = shift_sets(opts)?;
    let pol = policy(opts).with_prime_cutoff(opts.prime_cutoff.unwrap_or(300_000));
    let x = opts.x_box.unwrap_or(1.0e4);
    let rs: Vec<i64> = opts.r_list.clone().unwrap_or_else(|| (1..=10).collect());
    let hyp = AdcHypothesis::hughes_young();
    let omega = OmegaWeight::standard(opts.t.unwrap_or(1000.0), opts.b_exponent.unwrap_or(0.8))
        .map_err(|e| format!("config:{e}"))?;
    let phi = PhiCutoff::new(opts.rho.unwrap_or(0.1)).map_err(|e| format!("config:{e}"))?;
    let rep = adc_sweep(&i_set, &j_set, x, &rs, &hyp, &omega, &phi, 8.0, &pol)
        .map_err(|e| e.to_string())?;
    let mut rows =
        String::from("r,brute_re,brute_im,main_re,main_im,delta_abs,rel_delta,runtime_ms\n");
    let mut comps = Vec::new();
    for c in &rep.comparisons {
        let rel = c.delta.norm() / c.main.norm().max(1e-300);
        rows.push_str(&format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{}\n",
            c.r, c.brute.re, c.brute.im, c.main.re, c.main.im, c.delta.norm(), rel, c.runtime_ms
        ));
        comps.push(json!({
            "r": c.r,
            "brute": complex_json(c.brute),
            "main": complex_json(c.main),
            "delta_abs": c.delta.norm(),
            "relative_delta": rel,
        }));
    }
    let ratio = rep.agg_delta / rep.agg_main.max(1e-300);
    let j = json!({
        "command": "adc",
        "config": {
            "x_box": x, "r_list": rs,
            "theta": hyp.theta, "growth_c": hyp.growth_c, "beta": hyp.beta,
            "t": opts.t.unwrap_or(1000.0), "prime_cutoff": pol.prime_cutoff,
        },
        "comparisons": comps,
        "aggregate": {
            "sum_abs_delta": rep.agg_delta,
            "sum_abs_main": rep.agg_main,
            "relative": ratio,
            "ratio_to_hypothesis_scale": rep.ratio_to_hypothesis,
        },
    });
    Ok(Report {
        json: j,
        tables: vec![("adc.csv".into(), rows)],
        summary: format!(
            "adc X={x:.0}: sum|Delta|/sum|main| = {ratio:.4e} over {} shifts r",
            rep.comparisons.len()
        ),
    })
}

fn cmd_moment(opts: &Opts) -> Result<Report, String> {
    let t = opts.t.unwrap_or(1000.0);
    let eta = opts.eta.unwrap_or(0.2);
    let k = opts.k.unwrap_or(2) as usize;
    let l = opts.l.unwrap_or(2) as usize;
    let pol = policy(opts).with_prime_cutoff(opts.prime_cutoff.unwrap_or(20_000));
    let cfg = MomentConfig::standard_experiment(k, l, t, eta, opts.b_exponent.unwrap_or(0.8), pol)
        .map_err(|e| format!("config:{e}"))?;
    let rep = moment_report(&cfg).map_err(|e| e.to_string())?;
    let per_swap: Vec<Value> = rep
        .m1
        .per_pair
        .iter()
        .map(|&((i1, i2), v)| json!({ "i1": i1, "i2": i2, "value": complex_json(v) }))
        .collect();
    let j = json!({
        "command": "moment",
        "config": {
            "t": t, "eta": eta, "k": k, "l": l,
            "k_len": cfg.k_len(),
            "b_exponent": cfg.omega.b_exponent,
            "shifts_i": cfg.i_set.shifts().iter().map(|z| vec![z.re, z.im]).collect::<Vec<_>>(),
            "shifts_j": cfg.j_set.shifts().iter().map(|z| vec![z.re, z.im]).collect::<Vec<_>>(),
            "prime_cutoff": cfg.policy.prime_cutoff,
        },
        "direct": {
            "value": complex_json(rep.direct.value),
            "diagonal": complex_json(rep.direct.diagonal),
            "off_diagonal": complex_json(rep.direct.off_diagonal),
            "neglected_mass": rep.direct.neglected_mass,
            "cut_used": rep.direct.cut_used,
            "pair_count": rep.direct.pair_count,
        },
        "m0": { "value": complex_json(rep.m0.value), "tail": rep.m0.tail },
        "m1": { "value": complex_json(rep.m1.value), "tail": rep.m1.tail,
                "per_swap_terms": per_swap },
        "residual": {
            "value": complex_json(rep.residual),
            "relative": rep.relative_residual(),
            "error_budget": rep.error_budget(),
        },
        "lints": rep.lints,
    });
    Ok(Report {
        json: j,
        tables: vec![],
        summary: format!(
            "moment T={t} eta={eta}: relative residual {:.4e} (error budget {:.2e})",
            rep.relative_residual(),
            rep.error_budget()
        ),
    })
}

fn cmd_weights_probe(opts: &Opts) -> Result<Report, String> {
    let t = opts.t.unwrap_or(10_000.0);
    let b = opts.b_exponent.unwrap_or(0.9);
    let quad = QuadratureSpec { tol: 1e-12, ..Default::default() };
    // partition of unity
    let mut rng = SplitMix64::new(opts.seed);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let x = rng.uniform(0.0, 8.0 * std::f64::consts::LN_10).exp().max(1.0);
        let sum: f64 = w0_partition(x).iter().map(|&(_, w)| w).sum();
        worst = worst.max((sum - 1.0).abs());
    }
    let partition_ok = worst <= 1e-12;
    // residue probe
    let phi = PhiCutoff::new(opts.rho.unwrap_or(0.1)).map_err(|e| format!("config:{e}"))?;
    let f = |s: f64| {
        (phi.mellin(Complex64::new(s, 0.0), &quad).unwrap() * Complex64::new(s, 0.0)).re
    };
    let (pa, pb) = (1e-2, 1e-3);
    let residue = f(pb) - pb * (f(pa) - f(pb)) / (pa - pb);
    let residue_ok = (residue - 1.0).abs() <= 1e-6;
    // decay ratios
    let omega = OmegaWeight::standard(t, b).map_err(|e| format!("config:{e}"))?;
    let u0 = omega.t0.powf(-0.9);
    let table = OmegaHatTable::build(&omega, 40.0 * u0, &quad);
    let env = |u: f64| -> f64 {
        let mut best: f64 = 0.0;
        let mut x = u;
        while x <= 1.45 * u {
            best = best.max(table.eval(x).norm());
            x *= 1.005;
        }
        best
    };
    let mut ratios = Vec::new();
    let mut u = u0;
    for _ in 0..4 {
        ratios.push(env(2.0 * u) / env(u));
        u *= 2.0;
    }
    let decay_ok = ratios.iter().all(|&r| r <= 0.125);
    let j = json!({
        "command": "weights-probe",
        "config": { "t": t, "b_exponent": b, "rho": phi.rho, "seed": opts.seed },
        "partition": { "max_deviation": worst, "tolerance": 1e-12, "partition_ok": partition_ok },
        "mellin_residue": {
            "extrapolated": residue, "deviation": (residue - 1.0).abs(),
            "tolerance": 1e-6, "residue_ok": residue_ok,
        },
        "fourier_decay": {
            "start_u": u0, "per_doubling_ratios": ratios,
            "threshold": 0.125, "decay_ok": decay_ok,
        },
    });
    Ok(Report {
        json: j,
        tables: vec![],
        summary: format!(
            "weights-probe: partition {partition_ok}, residue {residue_ok}, decay {decay_ok}"
        ),
    })
}

fn cmd_all_checks(opts: &Opts) -> Result<Report, String> {
    // fast desk versions of every suite
    let mut sub = BTreeMap::new();
    let mut fast = opts.clone();
    fast.series_n = Some(fast.series_n.unwrap_or(200_000));
    fast.prime_cutoff = Some(fast.prime_cutoff.unwrap_or(50_000));
    fast.rq = Some(fast.rq.unwrap_or(3_000));
    fast.x_box = Some(fast.x_box.unwrap_or(2.0e3));
    fast.t = Some(fast.t.unwrap_or(500.0));
    sub.insert("polys", cmd_polys(&fast)?.json);
    sub.insert("sym_verify", cmd_sym_verify(&fast)?.json);
    sub.insert("euler_check", cmd_euler_check(&fast)?.json);
    sub.insert("h_check", cmd_h_check(&fast)?.json);
    sub.insert("adc", cmd_adc(&fast)?.json);
    sub.insert("moment", cmd_moment(&fast)?.json);
    // the decay probe needs its own window profile (T0 = T^0.9 ramps)
    let mut probe = fast.clone();
    probe.t = Some(10_000.0);
    probe.b_exponent = Some(0.9);
    sub.insert("weights_probe", cmd_weights_probe(&probe)?.json);
    let mut j = Map::new();
    j.insert("command".into(), json!("all-checks"));
    let mut failures = 0;
    for (name, v) in &sub {
        failures += count_failures(v);
        j.insert((*name).into(), v.clone());
    }
    j.insert("failed_assertions".into(), json!(failures));
    Ok(Report {
        json: Value::Object(j),
        tables: vec![],
        summary: format!("all-checks: {failures} failed assertion(s)"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        s.split_whitespace().map(|x| x.to_string()).collect()
    }

    #[test]
    fn unknown_command_is_config_error() {
        assert_eq!(run(&args("frobnicate")), 2);
        assert_eq!(run(&args("")), 2);
    }

    #[test]
    fn unknown_flag_is_config_error() {
        assert_eq!(run(&args("polys --bogus 3")), 2);
    }

    #[test]
    fn polys_writes_report_and_reflects_identities() {
        let dir = std::env::temp_dir().join(format!("dmtest-{}", std::process::id()));
        let code = run(&args(&format!(
            "polys --k 3 --l 3 --out {}",
            dir.display()
        )));
        assert_eq!(code, 0);
        let content = std::fs::read_to_string(dir.join("report.json")).unwrap();
        let v: Value = serde_json::from_str(&content).unwrap();
        assert_eq!(v["identities"]["w33_sum_identity_ok"], Value::Bool(true));
        assert_eq!(v["identities"]["w44_at_two"], json!("12012"));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn json_output_is_byte_identical_for_identical_config() {
        let dir1 = std::env::temp_dir().join(format!("dmtest-a-{}", std::process::id()));
        let dir2 = std::env::temp_dir().join(format!("dmtest-b-{}", std::process::id()));
        for d in [&dir1, &dir2] {
            let code = run(&args(&format!(
                "sym-verify --a-max 2 --m-max 2 --trials 20 --seed 7 --out {}",
                d.display()
            )));
            assert_eq!(code, 0);
        }
        let a = std::fs::read(dir1.join("report.json")).unwrap();
        let b = std::fs::read(dir2.join("report.json")).unwrap();
        assert_eq!(a, b);
        std::fs::remove_dir_all(&dir1).ok();
        std::fs::remove_dir_all(&dir2).ok();
    }

    #[test]
    fn adc_csv_has_grid_then_values_then_errors() {
        let dir = std::env::temp_dir().join(format!("dmtest-csv-{}", std::process::id()));
        let code = run(&args(&format!(
            "adc --x 500 --r 1..2 --prime-cutoff 20000 --out {}",
            dir.display()
        )));
        assert_eq!(code, 0);
        let csv = std::fs::read_to_string(dir.join("tables").join("adc.csv")).unwrap();
        let header = csv.lines().next().unwrap();
        assert_eq!(
            header,
            "r,brute_re,brute_im,main_re,main_im,delta_abs,rel_delta,runtime_ms"
        );
        assert_eq!(csv.lines().count(), 3);
        assert!(!csv.contains('\r'));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn config_file_with_flag_override() {
        let dir = std::env::temp_dir().join(format!("dmtest-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let cfg_path = dir.join("run.json");
        std::fs::write(&cfg_path, r#"{ "a_max": 2, "m_max": 3, "trials": 10, "seed": 9 }"#)
            .unwrap();
        // the flag wins over the file
        let code = run(&args(&format!(
            "sym-verify --config {} --trials 5 --out {}",
            cfg_path.display(),
            dir.display()
        )));
        assert_eq!(code, 0);
        let v: Value =
            serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap())
                .unwrap();
        assert_eq!(v["config"]["trials"], json!(5));
        assert_eq!(v["config"]["a_max"], json!(2));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn json_identical_across_worker_counts() {
        let dir1 = std::env::temp_dir().join(format!("dmtest-j1-{}", std::process::id()));
        let dir2 = std::env::temp_dir().join(format!("dmtest-j3-{}", std::process::id()));
        for (d, jobs) in [(&dir1, 1), (&dir2, 3)] {
            let code = run(&args(&format!(
                "moment --t 150 --eta 0.1 --prime-cutoff 1000 --jobs {jobs} --out {}",
                d.display()
            )));
            assert_eq!(code, 0);
        }
        let a = std::fs::read(dir1.join("report.json")).unwrap();
        let b = std::fs::read(dir2.join("report.json")).unwrap();
        assert_eq!(a, b);
        std::fs::remove_dir_all(&dir1).ok();
        std::fs::remove_dir_all(&dir2).ok();
    }

    #[test]
    fn shift_sets_from_config_file() {
        let dir = std::env::temp_dir().join(format!("dmtest-sh-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let cfg_path = dir.join("run.json");
        std::fs::write(
            &cfg_path,
            r#"{ "shifts_i": [[0.6, 0.0], [0.8, 0.0]],
                 "shifts_j": [[0.55, 0.0], [0.75, 0.0]],
                 "series_n": 50000, "prime_cutoff": 5000 }"#,
        )
        .unwrap();
        let code = run(&args(&format!(
            "euler-check --config {} --out {}",
            cfg_path.display(),
            dir.display()
        )));
        assert_eq!(code, 0);
        let v: Value =
            serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap())
                .unwrap();
        assert_eq!(v["config"]["shifts_i"][0][0], json!(0.6));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn config_file_rejects_unknown_keys() {
        let dir = std::env::temp_dir().join(format!("dmtest-bad-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let cfg_path = dir.join("run.json");
        std::fs::write(&cfg_path, r#"{ "nonsense": 1 }"#).unwrap();
        let code = run(&args(&format!("sym-verify --config {}", cfg_path.display())));
        assert_eq!(code, 2);
        std::fs::remove_dir_all(&dir).ok();
    }
}

pub use opts::parse_r_range;

/// Worker-count default: the DM_JOBS environment variable, else 1.
pub fn dm_jobs_default() -> usize {
    dm_core::par::jobs_from_env()
}
