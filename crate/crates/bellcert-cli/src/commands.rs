//! Implementations of the individual subcommands.

use crate::{fmt_f64, parse_digits, parse_scenario, CliError, CliResult, Format, Mode};
use bellcert::inequalities::{parity_family, BellInequality};
use bellcert::npa::{
    build_moment_model, certify_max_randomness_sdp, gamma_reference, max_single_expectation_sdp,
    mermin_functional, probability_functional, propagate_stabilizers, RelaxationReport,
    BASIS_SIZE,
};
use bellcert::polytope::{
    enumerate_vertices, ns_parametrization, ns_randomness_bound, sample_vertices, zero_count,
    VertexSet,
};
use bellcert::randomness::{certify_uniform_output, guessing_probability_ns, min_entropy};
use bellcert::value::format_rat;
use bellcert::{Behavior, Rat, Scalar};
use std::collections::BTreeMap;
use std::path::Path;

/// Schedule for the single-party expectation runs: a geometric (decade)
/// ladder keeps the sqrt(eps) decay exactly geometric, which the Aitken
/// extrapolation resolves exactly, while every solve converges fully.
pub const SINGLES_SCHEDULE: [f64; 3] = [1e-4, 1e-5, 1e-6];

fn print_json(v: &serde_json::Value) {
    // serde_json maps are ordered, so the rendering is byte-stable.
    println!("{}", serde_json::to_string_pretty(v).expect("json render"));
}

pub fn cmd_bound(scenario: &str, format: Format) -> CliResult<()> {
    let s = parse_scenario(scenario)?;
    let bound = ns_randomness_bound(s);
    let bits = min_entropy(bound.to_f64())?;
    match format {
        Format::Json => print_json(&serde_json::json!({
            "scenario": [s.parties, s.inputs_per_party, s.outputs_per_input],
            "bound": format_rat(&bound),
            "min_entropy_bits": fmt_f64(bits),
        })),
        Format::Csv => {
            println!("parties,inputs_per_party,outputs_per_input,bound,min_entropy_bits");
            println!(
                "{},{},{},{},{}",
                s.parties,
                s.inputs_per_party,
                s.outputs_per_input,
                format_rat(&bound),
                fmt_f64(bits)
            );
        }
    }
    Ok(())
}

pub fn cmd_guess(input: &Path, x0: &str, mode: Mode, format: Format) -> CliResult<()> {
    let text = std::fs::read_to_string(input)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", input.display())))?;
    let json: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("{} is not JSON: {e}", input.display())))?;
    let x0 = parse_digits(x0)?;
    let report_json = match mode {
        Mode::Rational => {
            let b = Behavior::<Rat>::from_json(&json)?;
            let rep = guessing_probability_ns(&b, &x0)?;
            rep.to_json()
        }
        Mode::Float => {
            let b = Behavior::<f64>::from_json(&json)?;
            let rep = guessing_probability_ns(&b, &x0)?;
            rep.to_json()
        }
    };
    match format {
        Format::Json => print_json(&report_json),
        Format::Csv => {
            println!("quantity,value");
            println!("x0,{}", x0.iter().map(|d| d.to_string()).collect::<String>());
            for key in ["guessing_probability", "min_entropy_bits", "set"] {
                let v = &report_json[key];
                let rendered = match v {
                    serde_json::Value::String(s) => s.clone(),
                    serde_json::Value::Number(n) => {
                        fmt_f64(n.as_f64().unwrap_or(f64::NAN))
                    }
                    other => other.to_string(),
                };
                println!("{key},{rendered}");
            }
            let comps = report_json["decomposition"]
                .as_array()
                .map(|a| a.len())
                .unwrap_or(0);
            println!("decomposition_components,{comps}");
        }
    }
    Ok(())
}

struct VertexStats {
    zero_counts: Vec<usize>,
    min_zero_count: usize,
    max_entry: Rat,
    min_input_max_entry: Rat,
    theorem1_pass: bool,
}

fn vertex_stats(v: &Behavior<Rat>) -> CliResult<VertexStats> {
    let zc = zero_count(v)?;
    let s = v.scenario();
    let min_input_max_entry = (0..s.num_inputs())
        .map(|x| v.max_entry_at(x))
        .min()
        .expect("scenario has inputs");
    Ok(VertexStats {
        zero_counts: zc.per_input,
        min_zero_count: zc.min_count,
        max_entry: v.max_entry(),
        min_input_max_entry,
        theorem1_pass: zc.passed,
    })
}

pub fn cmd_vertices(
    scenario: &str,
    sample: bool,
    seed: u64,
    budget: Option<usize>,
    format: Format,
) -> CliResult<()> {
    let s = parse_scenario(scenario)?;
    let p = ns_parametrization(s);
    let set: VertexSet = if sample {
        sample_vertices(&p, budget.unwrap_or(500), seed)?
    } else {
        enumerate_vertices(&p, budget.unwrap_or(16)).map_err(|e| {
            let mut c: CliError = e.into();
            if c.code == crate::EXIT_BUDGET {
                c.message
                    .push_str("; rerun with --sample for a seeded vertex search");
            }
            c
        })?
    };
    let stats: Vec<VertexStats> = set
        .vertices()
        .iter()
        .map(vertex_stats)
        .collect::<CliResult<_>>()?;
    let zero_bound = (s.outputs_per_input - 1).pow(s.parties as u32);
    let all_pass = stats.iter().all(|st| st.theorem1_pass);
    let flattest = stats
        .iter()
        .map(|st| st.min_input_max_entry.clone())
        .min()
        .map(|r| format_rat(&r));
    match format {
        Format::Json => {
            let vertices: Vec<serde_json::Value> = set
                .vertices()
                .iter()
                .zip(&stats)
                .enumerate()
                .map(|(i, (v, st))| {
                    serde_json::json!({
                        "index": i,
                        "zero_counts": st.zero_counts,
                        "min_zero_count": st.min_zero_count,
                        "max_entry": format_rat(&st.max_entry),
                        "min_input_max_entry": format_rat(&st.min_input_max_entry),
                        "theorem1_pass": st.theorem1_pass,
                        "table": v.to_json(),
                    })
                })
                .collect();
            print_json(&serde_json::json!({
                "scenario": [s.parties, s.inputs_per_party, s.outputs_per_input],
                "mode": if sample { "sample" } else { "enumerate" },
                "seed": if sample { Some(seed) } else { None },
                "num_vertices": set.len(),
                "zero_bound": zero_bound,
                "all_pass_zero_bound": all_pass,
                "flattest_min_input_max_entry": flattest,
                "vertices": vertices,
            }));
        }
        Format::Csv => {
            print!("{}", set.to_csv());
            println!();
            println!("vertex,min_zero_count,zero_bound,theorem1_pass,max_entry,min_input_max_entry");
            for (i, st) in stats.iter().enumerate() {
                println!(
                    "{i},{},{zero_bound},{},{},{}",
                    st.min_zero_count,
                    st.theorem1_pass,
                    format_rat(&st.max_entry),
                    format_rat(&st.min_input_max_entry)
                );
            }
            println!();
            println!(
                "# vertices={} zero_bound={zero_bound} all_pass={all_pass} flattest={}",
                set.len(),
                flattest.unwrap_or_else(|| "-".into())
            );
        }
    }
    if !all_pass {
        return Err(CliError {
            code: crate::EXIT_ASSERT,
            message: "a vertex violates the zero-count bound".into(),
        });
    }
    Ok(())
}

pub fn cmd_certify_symmetry(
    parties: Option<usize>,
    input: Option<&Path>,
    x0: Option<&str>,
    format: Format,
) -> CliResult<()> {
    let ineq: BellInequality = match (parties, input) {
        (Some(n), None) => parity_family(n)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
            let json: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CliError::input(format!("{} is not JSON: {e}", path.display())))?;
            BellInequality::from_json(&json)?
        }
        _ => {
            return Err(CliError::input(
                "pass exactly one of --parties or --input",
            ))
        }
    };
    let n = ineq.scenario().parties;
    let x_prime = match x0 {
        Some(s) => parse_digits(s)?,
        None => {
            // Default to an input the parity family constrains: weight
            // N-1 for even N, full weight for odd N.
            let mut v = vec![1; n];
            if n % 2 == 0 {
                v[n - 1] = 0;
            }
            v
        }
    };
    let cert = certify_uniform_output(&ineq, &x_prime, true)?;
    match format {
        Format::Json => print_json(&cert.to_json()),
        Format::Csv => {
            println!("quantity,value");
            println!("parties,{n}");
            println!(
                "x_prime,{}",
                x_prime.iter().map(|d| d.to_string()).collect::<String>()
            );
            println!("outcome_probability,{}", format_rat(&cert.outcome_probability));
            println!("family_size,{}", cert.family.len());
            println!("witnesses,{}", cert.witnesses.len());
            println!("uniqueness_assumed,{}", cert.uniqueness_assumed);
        }
    }
    Ok(())
}

fn outcome_label(a: [usize; 3]) -> String {
    format!("{}{}{}", a[0], a[1], a[2])
}

fn report_values_json(rep: &RelaxationReport) -> serde_json::Value {
    serde_json::json!({
        "values": rep
            .values
            .iter()
            .map(|&(e, v)| serde_json::json!({ "eps": format!("{e:e}"), "value": fmt_f64(v) }))
            .collect::<Vec<_>>(),
        "extrapolated": fmt_f64(rep.extrapolated),
        "gamma_distance": format!("{:.3e}", rep.gamma_distance),
    })
}

pub fn cmd_npa_mermin(eps: &[f64], format: Format) -> CliResult<()> {
    let model = build_moment_model();

    // Analytic reference: the propagation-determined moment matrix, its
    // exact PSD status, and its exact functional values.
    let reference = gamma_reference();
    let g = reference.to_f64();
    let b = mermin_functional();
    let mermin_value = 0.5 * (&b * &g).trace();
    let mut st = propagate_stabilizers(&model)?;
    let zeros: BTreeMap<String, f64> = (1..=6).map(|i| (model.basis[i].label(), 0.0)).collect();
    let propagated = st.gamma_with_free(&zeros)?;
    let propagation_matches = propagated == g;
    let p_ref = 0.5 * (probability_functional([0, 0, 0])? * &g).trace();

    let mut outcomes: Vec<(String, Result<RelaxationReport, String>)> = Vec::new();
    let mut solver_failed = false;
    for idx in 0..(1usize << 3) {
        let a = [(idx >> 2) & 1, (idx >> 1) & 1, idx & 1];
        let res = certify_max_randomness_sdp(&model, a, eps).map_err(|e| {
            solver_failed = true;
            e.to_string()
        });
        outcomes.push((outcome_label(a), res));
    }
    let mut singles: Vec<(String, Result<RelaxationReport, String>)> = Vec::new();
    for i in 1..=6usize {
        let res =
            max_single_expectation_sdp(&model, i, &SINGLES_SCHEDULE, true).map_err(|e| {
                solver_failed = true;
                e.to_string()
            });
        singles.push((model.basis[i].label(), res));
    }

    match format {
        Format::Json => {
            let outcome_json: Vec<serde_json::Value> = outcomes
                .iter()
                .map(|(label, res)| match res {
                    Ok(rep) => {
                        let mut v = report_values_json(rep);
                        v["outcome"] = serde_json::json!(label);
                        v
                    }
                    Err(e) => serde_json::json!({ "outcome": label, "error": e }),
                })
                .collect();
            let singles_json: Vec<serde_json::Value> = singles
                .iter()
                .map(|(label, res)| match res {
                    Ok(rep) => {
                        let mut v = report_values_json(rep);
                        v["observable"] = serde_json::json!(label);
                        v
                    }
                    Err(e) => serde_json::json!({ "observable": label, "error": e }),
                })
                .collect();
            print_json(&serde_json::json!({
                "basis_size": BASIS_SIZE,
                "eps_schedule": eps.iter().map(|e| format!("{e:e}")).collect::<Vec<_>>(),
                "singles_schedule": SINGLES_SCHEDULE
                    .iter()
                    .map(|e| format!("{e:e}"))
                    .collect::<Vec<_>>(),
                "outcomes": outcome_json,
                "single_expectations": singles_json,
                "analytic_reference": {
                    "psd": reference.is_psd(),
                    "propagation_matches": propagation_matches,
                    "mermin_value": fmt_f64(mermin_value),
                    "outcome_probability": fmt_f64(p_ref),
                },
            }));
        }
        Format::Csv => {
            println!("kind,label,eps,value");
            for (label, res) in &outcomes {
                match res {
                    Ok(rep) => {
                        for &(e, v) in &rep.values {
                            println!("outcome,{label},{e:e},{}", fmt_f64(v));
                        }
                        println!("outcome,{label},extrapolated,{}", fmt_f64(rep.extrapolated));
                        println!(
                            "outcome,{label},gamma_distance,{:.3e}",
                            rep.gamma_distance
                        );
                    }
                    Err(e) => println!("outcome,{label},error,{e}"),
                }
            }
            for (label, res) in &singles {
                match res {
                    Ok(rep) => {
                        for &(e, v) in &rep.values {
                            println!("single,{label},{e:e},{}", fmt_f64(v));
                        }
                        println!("single,{label},extrapolated,{}", fmt_f64(rep.extrapolated));
                    }
                    Err(e) => println!("single,{label},error,{e}"),
                }
            }
            println!("analytic,psd,,{}", reference.is_psd());
            println!("analytic,propagation_matches,,{propagation_matches}");
            println!("analytic,mermin_value,,{}", fmt_f64(mermin_value));
            println!("analytic,outcome_probability,,{}", fmt_f64(p_ref));
        }
    }
    if solver_failed {
        return Err(CliError {
            code: crate::EXIT_SOLVER,
            message: "one or more relaxation solves failed (see per-row errors)".into(),
        });
    }
    Ok(())
}
