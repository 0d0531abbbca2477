use std::process::ExitCode;

use serde_json::{json, Map, Value};
use wstate::dynamics::{build_hamiltonian, evolve_closed_form_in, interaction_to_lab, Frame, ModelParams, Propagator};
use wstate::entanglement::{
    concurrence, field_w_fidelity, ghz_state, partial_trace, success_probability, w_state, ATOM,
};
use wstate::fock_space::{build_basis, initial_state, AtomLevel, Basis};
use wstate::format::{fmt_sig, round_sig};
use wstate::protocol::run_sweep;
use wstate::validation::{run_validation, Fault, ValidationOptions};
use wstate::SCHEMA_VERSION;

use crate::config::{Command, Format, RunConfig};
use crate::error::{bad, Failure};
use crate::output::{emit, pretty};

pub fn run(cfg: &RunConfig) -> Result<ExitCode, Failure> {
    match cfg.command {
        Command::Simulate => simulate(cfg),
        Command::Sweep => sweep(cfg),
        Command::Entanglement => entanglement(cfg),
        Command::Validate => validate(cfg),
    }
}

fn num(x: f64) -> Value {
    json!(round_sig(x))
}

fn envelope(cfg: &RunConfig) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("schema_version".into(), json!(SCHEMA_VERSION));
    m.insert("config".into(), serde_json::to_value(cfg).expect("config serializes"));
    m
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn simulate(cfg: &RunConfig) -> Result<ExitCode, Failure> {
    let n = cfg.n_modes;
    let t = cfg.physical_time().expect("simulate always resolves a time");
    let omega0 = cfg.physical_omega0();
    let frame: Frame = cfg.frame.into();

    let basis = build_basis(n, cfg.n_max, cfg.excitation_cap)?;
    let resonant = ModelParams::resonant(n, cfg.epsilon)?.with_omega_atom(omega0);
    let h = build_hamiltonian(&resonant.clone().with_frame(frame), &basis)?;
    let psi = Propagator::spectral(&h)?.apply(&initial_state(&basis)?, t)?;

    let mut closed = evolve_closed_form_in(&resonant, &basis, t)?;
    if frame == Frame::Lab {
        closed = interaction_to_lab(&closed, omega0, t);
    }
    let gap = (psi.amplitudes() - closed.amplitudes()).iter().map(|z| z.norm()).fold(0.0, f64::max);

    let fidelity = field_w_fidelity(&psi, n)?;
    let success = success_probability(&psi, n)?;
    let ground = psi.atom_population(AtomLevel::Ground);
    let values = [t, fidelity, success, ground, gap];
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Failure::Numerical("report contains non-finite values".into()));
    }

    let mut report = Map::new();
    for (key, x) in ["t", "fidelity_W", "success_prob", "atom_ground_prob", "closed_vs_numeric_gap"].iter().zip(values) {
        report.insert((*key).into(), num(x));
    }
    if cfg.dump_state {
        report.insert("amplitudes".into(), psi.to_json_value());
    }

    match cfg.format {
        Format::Json => {
            let mut doc = envelope(cfg);
            doc.insert("report".into(), Value::Object(report));
            emit(cfg, &pretty(&Value::Object(doc)), None)?;
        }
        Format::Csv => {
            let body = format!(
                "t,fidelity_W,success_prob,atom_ground_prob,closed_vs_numeric_gap\n{}\n",
                values.map(fmt_sig).join(",")
            );
            let mut meta = envelope(cfg);
            if let Some(state) = report.remove("amplitudes") {
                meta.insert("amplitudes".into(), state);
            }
            emit(cfg, &body, Some(&Value::Object(meta)))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep(cfg: &RunConfig) -> Result<ExitCode, Failure> {
    let spec = cfg.sweep.as_ref().ok_or_else(|| bad("sweep spec missing"))?;
    let mut result = run_sweep(cfg.n_modes, cfg.epsilon, spec)?;
    result.metadata.timestamp = cfg.timestamp.clone();

    let mut doc = envelope(cfg);
    doc.insert("metadata".into(), serde_json::to_value(&result.metadata).expect("metadata serializes"));
    match cfg.format {
        Format::Csv => emit(cfg, &result.to_csv(), Some(&Value::Object(doc)))?,
        Format::Json => {
            doc.insert("rows".into(), serde_json::to_value(result.rounded_rows()).expect("rows serialize"));
            emit(cfg, &pretty(&Value::Object(doc)), None)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn subsystem_name(k: usize) -> String {
    if k == ATOM {
        "atom".into()
    } else {
        format!("m{k}")
    }
}

fn entanglement(cfg: &RunConfig) -> Result<ExitCode, Failure> {
    let n = cfg.n_modes;
    if n < 2 {
        return Err(bad(format!("pairwise concurrence needs at least 2 modes, got {n}")));
    }
    let basis = Basis::qubit_modes(n)?;
    let w = w_state(n, &basis)?;
    let ghz = ghz_state(n, &basis)?;
    // State actually produced by the protocol at the configured time.
    let t = cfg.physical_time().expect("entanglement always resolves a time");
    let generated = evolve_closed_form_in(&ModelParams::resonant(n, cfg.epsilon)?, &basis, t)?;

    let mut rows = Vec::new();
    let mut csv = String::from("mode_i,mode_j,traced_out,w_concurrence,ghz_concurrence,generated_concurrence\n");
    for i in 1..=n {
        for j in (i + 1)..=n {
            let traced: Vec<String> =
                (0..=n).filter(|&k| k != i && k != j).map(subsystem_name).collect();
            let rho_w = partial_trace(&w, &[i, j])?;
            let rho_ghz = partial_trace(&ghz, &[i, j])?;
            let c = [concurrence(&rho_w)?, concurrence(&rho_ghz)?, concurrence(&partial_trace(&generated, &[i, j])?)?];
            csv.push_str(&format!("{i},{j},{},{}\n", traced.join(" "), c.map(fmt_sig).join(",")));
            let mut row = json!({
                "mode_i": i,
                "mode_j": j,
                "traced_out": traced,
                "w_concurrence": num(c[0]),
                "ghz_concurrence": num(c[1]),
                "generated_concurrence": num(c[2]),
            });
            if cfg.dump_state {
                row["w_reduced"] = rho_w.to_json_value();
                row["ghz_reduced"] = rho_ghz.to_json_value();
            }
            rows.push(row);
        }
    }

    match cfg.format {
        Format::Json => {
            let mut doc = envelope(cfg);
            doc.insert(
                "report".into(),
                json!({ "t": num(t), "w_expected": num(2.0 / n as f64), "pairs": rows }),
            );
            emit(cfg, &pretty(&Value::Object(doc)), None)?;
        }
        Format::Csv => {
            let mut meta = envelope(cfg);
            if cfg.dump_state {
                meta.insert("pairs".into(), Value::Array(rows));
            }
            emit(cfg, &csv, Some(&Value::Object(meta)))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn validate(cfg: &RunConfig) -> Result<ExitCode, Failure> {
    let opts = ValidationOptions {
        seed: cfg.seed,
        fault: cfg.inject_fault.then_some(Fault::FlipHamiltonianSign),
        ..ValidationOptions::default()
    };
    let summary = run_validation(&opts);

    let mut text = String::new();
    for c in &summary.checks {
        text.push_str(&format!(
            "{} {:<22} measured {:<20} tolerance {:<8} {}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            fmt_sig(c.measured),
            fmt_sig(c.tolerance),
            c.detail
        ));
    }
    text.push_str(&format!(
        "checks_run {} passed {} failed {}\n",
        summary.checks_run, summary.passed, summary.failed
    ));

    if cfg.output_file().is_some() {
        print!("{text}");
        match cfg.format {
            Format::Json => {
                let mut doc = envelope(cfg);
                let mut s = serde_json::to_value(&summary).expect("summary serializes");
                for c in s["checks"].as_array_mut().into_iter().flatten() {
                    for key in ["measured", "tolerance"] {
                        // NaN marks a check that errored; JSON has no NaN.
                        c[key] = c[key].as_f64().map_or(Value::Null, num);
                    }
                }
                doc.insert("summary".into(), s);
                emit(cfg, &pretty(&Value::Object(doc)), None)?;
            }
            Format::Csv => {
                let mut body = String::from("name,measured,tolerance,passed,detail\n");
                for c in &summary.checks {
                    body.push_str(&format!(
                        "{},{},{},{},{}\n",
                        c.name,
                        fmt_sig(c.measured),
                        fmt_sig(c.tolerance),
                        c.passed,
                        csv_cell(&c.detail)
                    ));
                }
                let mut meta = envelope(cfg);
                meta.insert(
                    "counts".into(),
                    json!({ "checks_run": summary.checks_run, "passed": summary.passed, "failed": summary.failed }),
                );
                emit(cfg, &body, Some(&Value::Object(meta)))?;
            }
        }
    } else {
        emit(cfg, &text, None)?;
    }

    Ok(if summary.all_passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_cells_are_quoted_when_needed() {
        assert_eq!(csv_cell("plain"), "plain");
        assert_eq!(csv_cell("a, b"), "\"a, b\"");
        assert_eq!(csv_cell("say \"hi\""), "\"say \"\"hi\"\"\"");
    }
}
