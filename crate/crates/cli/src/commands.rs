//! One function per subcommand, each producing a [`Report`].

use serde_json::json;

use spdc_cascade::{
    cascade_source_distribution, monte_carlo_rate, n_tot, oracle_breakdown, p_failure_terms,
    p_success, p_success_scenarios, rate_report, reference_comparison, verify_cascade,
    CascadeSpec, Scheme, SourceModel,
};

use crate::report::{sci, Check, Report, Table};
use crate::RatesParams;

fn core_err(err: spdc_cascade::Error) -> String {
    err.to_string()
}

pub fn verify(scheme_text: &str, m: u32) -> Result<Report, String> {
    let scheme: Scheme = scheme_text.parse().map_err(core_err)?;
    let spec = CascadeSpec::new(scheme, m).map_err(core_err)?;
    let v = verify_cascade(&spec).map_err(core_err)?;

    let mut report = Report::new(
        "verify",
        json!({ "scheme": scheme.to_string(), "m": m }),
    );
    let state_lines: Vec<String> = v.observed.render().lines().map(String::from).collect();
    let stage_one_lines: Vec<String> = v.stage_one.render().lines().map(String::from).collect();
    report.results = json!({
        "match": v.matches,
        "state": state_lines,
        "stageOne": stage_one_lines,
        "terms": v.observed.num_terms(),
        "crystals": v.crystal_count,
        "photonsPerTerm": m,
        "discardedMass": v.discarded_mass.value::<f64>(),
        "notes": [
            "kets are listed in canonical mode order (sorted by mode label), not in emission order",
        ],
    });
    report.checks = vec![
        Check::new(
            "state-match",
            v.matches,
            "simulated state equals the closed-form target up to global phase",
        ),
        Check::new(
            "photon-count",
            v.photon_count_ok,
            format!("every kept term carries exactly {m} photons"),
        ),
        Check::new(
            "energy-conservation",
            v.energy_ok,
            "frequency tags of every term form one binary tree rooted at the pump",
        ),
        Check::new(
            "norm-preservation",
            v.norm_ok,
            "every element preserved the exact norm and no filter deleted a term",
        ),
    ];
    Ok(report)
}

pub fn rates(params: &RatesParams) -> Result<Report, String> {
    let source = SourceModel::new(params.mu, params.rep_hz, params.ps).map_err(core_err)?;
    let figures = rate_report(params.m, &source, params.r_max).map_err(core_err)?;
    let rate = figures.n_tot;
    let ratio = figures.ratio_two_one;
    let dist = &figures.pr_pairs;

    let mut report = Report::new(
        "rates",
        json!({
            "m": params.m,
            "mu": params.mu,
            "ps": params.ps,
            "repHz": params.rep_hz,
            "rMax": params.r_max,
        }),
    );

    let mut notes: Vec<String> = Vec::new();
    let mut reference_json = json!(null);
    if let Some(cmp) = reference_comparison(params.m, &source) {
        if let Some(note) = &cmp.note {
            notes.push(note.clone());
        }
        let within = cmp.relative_diff <= 0.02;
        report.checks.push(Check::new(
            "reference-agreement",
            within,
            format!(
                "computed {} vs quoted {} (relative difference {:.3}%)",
                sci(cmp.computed),
                sci(cmp.quoted),
                cmp.relative_diff * 100.0
            ),
        ));
        reference_json = json!({
            "quoted": cmp.quoted,
            "computed": cmp.computed,
            "relativeDiff": cmp.relative_diff,
        });
    }

    report.results = json!({
        "nTot": rate,
        "nTotSci": sci(rate),
        "pulseSuccessProb": figures.success_prob,
        "prRatio21": ratio,
        "pairDistribution": dist.entries.iter()
            .map(|(r, p)| json!({ "r": r, "probability": p }))
            .collect::<Vec<_>>(),
        "tail": dist.tail,
        "reference": reference_json,
        "notes": notes,
    });

    let mut table = Table::new(&["m", "mu", "ps", "rep_hz", "n_tot", "pr_ratio_2_1"]);
    table.push(vec![
        params.m.to_string(),
        params.mu.to_string(),
        params.ps.to_string(),
        params.rep_hz.to_string(),
        sci(rate),
        sci(ratio),
    ]);
    report.table = table;
    Ok(report)
}

pub fn pairs(params: &RatesParams) -> Result<Report, String> {
    let source = SourceModel::new(params.mu, params.rep_hz, params.ps).map_err(core_err)?;
    let dist = cascade_source_distribution(params.m, &source, params.r_max).map_err(core_err)?;

    let mut report = Report::new(
        "pairs",
        json!({
            "m": params.m,
            "mu": params.mu,
            "ps": params.ps,
            "repHz": params.rep_hz,
            "rMax": params.r_max,
        }),
    );

    let total: f64 = dist.entries.iter().map(|(_, p)| p).sum();
    let valid = dist.entries.iter().all(|(_, p)| (0.0..=1.0).contains(p))
        && dist.tail >= 0.0
        && total <= 1.0 + 1e-12;
    report.checks.push(Check::new(
        "distribution-valid",
        valid,
        format!("Σ Pr(m,r) = {} with tail {}", sci(total), sci(dist.tail)),
    ));

    let highlight = match params.r {
        Some(r) => {
            let p = spdc_cascade::pr_pairs(params.m, r, &source).map_err(core_err)?;
            json!({ "r": r, "probability": p })
        }
        None => json!(null),
    };

    report.results = json!({
        "entries": dist.entries.iter()
            .map(|(r, p)| json!({ "r": r, "probability": p }))
            .collect::<Vec<_>>(),
        "tail": dist.tail,
        "highlight": highlight,
    });

    let mut table = Table::new(&["r", "probability"]);
    for (r, p) in &dist.entries {
        table.push(vec![r.to_string(), sci(*p)]);
    }
    table.push(vec!["tail".into(), sci(dist.tail)]);
    report.table = table;
    Ok(report)
}

pub fn sweep(mus: &[f64], m_lo: u32, m_hi: u32, ps: f64, rep_hz: f64) -> Result<Report, String> {
    let mut report = Report::new(
        "sweep",
        json!({
            "muList": mus,
            "mRange": { "start": m_lo, "end": m_hi },
            "ps": ps,
            "repHz": rep_hz,
        }),
    );

    let mut rows = Vec::new();
    let mut table = Table::new(&["mu", "m", "n_tot", "log10_n_tot"]);
    for &mu in mus {
        let source = SourceModel::new(mu, rep_hz, ps).map_err(core_err)?;
        for m in m_lo..=m_hi {
            let rate = n_tot(m, &source).map_err(core_err)?;
            rows.push((mu, m, rate, rate.log10()));
            table.push(vec![
                mu.to_string(),
                m.to_string(),
                sci(rate),
                format!("{:.4}", rate.log10()),
            ]);
        }
    }

    let strictly_less = |a: f64, b: f64| a.partial_cmp(&b) == Some(std::cmp::Ordering::Less);
    let mut decreasing_in_m = true;
    for window in rows.windows(2) {
        if window[0].0 == window[1].0 && !strictly_less(window[1].2, window[0].2) {
            decreasing_in_m = false;
        }
    }
    let mut increasing_in_mu = true;
    for m in m_lo..=m_hi {
        let column: Vec<f64> = rows.iter().filter(|r| r.1 == m).map(|r| r.2).collect();
        if column.windows(2).any(|w| !strictly_less(w[0], w[1])) {
            increasing_in_mu = false;
        }
    }
    report.checks = vec![
        Check::new(
            "decreasing-in-m",
            decreasing_in_m,
            "N_tot strictly decreases with the photon count at fixed μ",
        ),
        Check::new(
            "increasing-in-mu",
            increasing_in_mu,
            "N_tot strictly increases with μ at fixed photon count",
        ),
    ];

    report.results = json!({
        "rows": rows.iter()
            .map(|(mu, m, rate, log)| json!({
                "mu": mu, "m": m, "nTot": rate, "log10NTot": log,
            }))
            .collect::<Vec<_>>(),
    });
    report.table = table;
    Ok(report)
}

pub fn oracle(n: u32, m: u32, ps: f64) -> Result<Report, String> {
    let closed = p_success(n, m, ps).map_err(core_err)?;
    let breakdown = oracle_breakdown(n, m, ps).map_err(core_err)?;
    let scenarios = p_success_scenarios(n, m, ps).map_err(core_err)?;
    let failures = p_failure_terms(n, m, ps).map_err(core_err)?;

    let diff = (closed - breakdown.total_success).abs();
    let mut scenario_diff = 0.0f64;
    for (r, expected) in &scenarios {
        scenario_diff =
            scenario_diff.max((breakdown.success_by_pairs[*r as usize] - expected).abs());
    }
    for (i, expected) in &failures {
        scenario_diff =
            scenario_diff.max((breakdown.failure_by_splits[*i as usize] - expected).abs());
    }

    let mut report = Report::new("oracle", json!({ "n": n, "m": m, "ps": ps }));
    report.checks = vec![
        Check::new(
            "oracle-agreement",
            diff <= 1e-12,
            format!("|closed − enumeration| = {}", sci(diff)),
        ),
        Check::new(
            "scenario-agreement",
            scenario_diff <= 1e-12,
            format!("max per-scenario difference = {}", sci(scenario_diff)),
        ),
    ];

    let mut table = Table::new(&["kind", "index", "closed_form", "enumeration", "abs_diff"]);
    for (r, expected) in &scenarios {
        let got = breakdown.success_by_pairs[*r as usize];
        table.push(vec![
            "success".into(),
            r.to_string(),
            sci(*expected),
            sci(got),
            sci((got - expected).abs()),
        ]);
    }
    for (i, expected) in &failures {
        let got = breakdown.failure_by_splits[*i as usize];
        table.push(vec![
            "failure".into(),
            i.to_string(),
            sci(*expected),
            sci(got),
            sci((got - expected).abs()),
        ]);
    }

    report.results = json!({
        "closedForm": closed,
        "enumeration": breakdown.total_success,
        "absDiff": diff,
        "successScenarios": scenarios.iter()
            .map(|(r, p)| json!({
                "r": r,
                "closedForm": p,
                "enumeration": breakdown.success_by_pairs[*r as usize],
            }))
            .collect::<Vec<_>>(),
        "failureScenarios": failures.iter()
            .map(|(i, p)| json!({
                "i": i,
                "closedForm": p,
                "enumeration": breakdown.failure_by_splits[*i as usize],
            }))
            .collect::<Vec<_>>(),
    });
    report.table = table;
    Ok(report)
}

pub fn montecarlo(
    m: u32,
    mu: f64,
    ps: f64,
    rep_hz: f64,
    trials: u64,
    seed: u64,
) -> Result<Report, String> {
    let source = SourceModel::new(mu, rep_hz, ps).map_err(core_err)?;
    let estimate = monte_carlo_rate(m, &source, trials, seed).map_err(core_err)?;
    let reference = n_tot(m, &source).map_err(core_err)?;
    let z = estimate.z_score(reference);

    let mut report = Report::new(
        "montecarlo",
        json!({
            "m": m,
            "mu": mu,
            "ps": ps,
            "repHz": rep_hz,
            "trials": trials,
            "seed": seed,
        }),
    );
    report.checks = vec![Check::new(
        "z-within-3",
        z.abs() <= 3.0,
        format!(
            "estimate {} ± {} vs closed form {} (z = {z:+.3})",
            sci(estimate.rate),
            sci(estimate.std_err),
            sci(reference)
        ),
    )];
    report.results = json!({
        "estimate": estimate.rate,
        "stdErr": estimate.std_err,
        "closedForm": reference,
        "zScore": z,
        "pulseSuccessFraction": estimate.pulse_success_fraction,
        "pulses": estimate.pulses,
        "successfulPulses": estimate.successful_pulses,
        "pulsesWithPhotons": estimate.pulses_with_photons,
        "photonsTotal": estimate.photons_total,
        "photonsSucceeded": estimate.photons_succeeded,
    });
    Ok(report)
}
