use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use gdtm::corpus;
use gdtm::external::{self, ExternalError, ExternalParams, TapeLoss};
use gdtm::internal::{self, default_ladder, GraphMode, InternalError, StateGraph, StepRule, WeightAssignment};
use gdtm::network::{train, Construction, Dataset, ExtendedNet, NetworkError, TrainOptions};
use gdtm::tm::{frame_bits, make_initial, run, triple_states, MachineSpec, TuringMachine};
use gdtm::trace_io::{self, TraceRecord};
use gdtm::verify;
use gdtm::{Rational, Scalar};

use crate::config::Options;
use crate::CliError;

fn load_machine(spec: &str) -> Result<TuringMachine, CliError> {
    if let Some(tm) = corpus::machine(spec) {
        return Ok(tm);
    }
    let text = std::fs::read_to_string(spec)
        .map_err(|e| CliError::Config(format!("machine {spec:?} is neither a corpus name nor a readable file: {e}")))?;
    MachineSpec::from_json(&text)
        .and_then(|s| s.build())
        .map_err(|e| CliError::Config(format!("{spec}: {e}")))
}

fn payload(opts: &Options) -> Result<Vec<bool>, CliError> {
    match &opts.input {
        Some(bits) => {
            let raw = bits
                .chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    other => Err(CliError::Config(format!("input bit {other:?} is not 0 or 1"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(frame_bits(&raw))
        }
        None => Ok(corpus::sample_inputs(opts.machine_name()).into_iter().next().unwrap_or_default()),
    }
}

fn write_file(path: &Path, write: impl FnOnce(BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    write(BufWriter::new(file)).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn loss_range(records: &[TraceRecord]) -> (f64, f64) {
    records
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.loss), hi.max(r.loss)))
}

fn internal_error(e: InternalError) -> CliError {
    match e {
        InternalError::NonHalting { steps, .. } => CliError::Mismatch(format!("no halt within {steps}")),
        other => CliError::Config(other.to_string()),
    }
}

fn external_error(e: ExternalError) -> CliError {
    match e {
        ExternalError::NoHalt(n) => CliError::Mismatch(format!("no halt within {n}")),
        ExternalError::Violation { .. } => CliError::Mismatch(e.to_string()),
        other => CliError::Config(other.to_string()),
    }
}

/// Runs a tracer, compares it with the simulator and writes the trace.
pub fn trace(opts: &Options) -> Result<String, CliError> {
    let name = opts.machine_name();
    let base = load_machine(name)?;
    let net = opts.net_config();
    let external = opts.construction.map_or(true, |c| c == crate::config::ConstructionArg::External);
    let tm = if external { triple_states(&base) } else { base };
    let bits = payload(opts)?;
    let tau = net.tau.unwrap_or_else(|| corpus::tau_for(name, bits.len()));
    let max_iters = opts.max_iters();
    let c0 = make_initial(&tm, &bits, tau).map_err(|e| CliError::Config(e.to_string()))?;
    let sim = run(&tm, &c0, max_iters).map_err(|e| CliError::Mismatch(e.to_string()))?;
    if !sim.halted {
        return Err(CliError::Mismatch(format!("no halt within {max_iters}")));
    }

    let mut out = String::new();
    let (records, matches, decreasing) = if external {
        let one = Rational::from_int(1);
        let params = match net.b {
            Some(b) => ExternalParams::with_b(b, tm.tape_count(), one, true),
            None => Ok(ExternalParams::choose(tm.tape_count(), one, true)),
        }
        .map_err(external_error)?;
        let loss = TapeLoss::build(&tm, tau, params).map_err(external_error)?;
        let st = loss.encode(&c0).map_err(external_error)?;
        let tr = external::trace(&loss, st, max_iters).map_err(external_error)?;
        let records = trace_io::external_records(&loss, &tr).map_err(CliError::Mismatch)?;
        let matches = tr.len() == sim.steps() && tr.states.iter().zip(&sim.configs).all(|(s, c)| loss.decode(s).as_ref() == Ok(c));
        let (hit, miss) = tr.case_counts();
        let _ = writeln!(
            out,
            "machine={name} construction=external states={} tau={tau} b={} c={} halting_ceiling={}",
            tm.state_count(),
            params.b,
            params.c,
            params.halting_ceiling()
        );
        let _ = writeln!(out, "reads matched={hit} overruled={miss}");
        (records, matches, None)
    } else {
        let mode = if opts.full_enumeration { GraphMode::Full } else { GraphMode::Reachable };
        let rule: StepRule = opts.mode.map_or(StepRule::Unit, Into::into);
        let g = StateGraph::build(&tm, tau, std::slice::from_ref(&c0), mode, max_iters).map_err(internal_error)?;
        let loss = WeightAssignment::<Rational>::new(&g, default_ladder(g.horizon()))
            .and_then(|w| w.build_loss())
            .map_err(internal_error)?;
        let v0 = g.index_of(&c0).expect("initial configuration is a vertex");
        let tr = internal::trace(&loss, v0, rule, max_iters).map_err(internal_error)?;
        let records = trace_io::internal_records(&tm, &g, &tr);
        let matches = tr.vertices.len() == sim.configs.len()
            && tr.vertices.iter().zip(&sim.configs).all(|(&v, c)| g.vertex(v) == c)
            && tr.fixed_point;
        let _ = writeln!(
            out,
            "machine={name} construction=internal mode={} vertices={} tau={tau}",
            if rule == StepRule::Unit { "unit" } else { "linesearch" },
            g.len()
        );
        (records, matches, Some(tr.strictly_decreasing()))
    };
    let halted = records.last().is_some_and(|r| r.halted);
    let steps = records.len().saturating_sub(1);
    let (lo, hi) = loss_range(&records);
    let _ = writeln!(
        out,
        "steps={steps} halted={halted} oracle={}",
        if matches { "match" } else { "mismatch" }
    );
    let _ = writeln!(out, "loss range: [{lo}, {hi}]");
    if let Some(d) = decreasing {
        let _ = writeln!(out, "loss strictly decreasing: {d}");
    }
    if let Some(path) = &opts.out {
        write_file(path, |w| trace_io::write_jsonl(w, &records))?;
    }
    if matches {
        Ok(out)
    } else {
        Err(CliError::Reported(out, "trace differs from the simulator".into()))
    }
}

fn demo_dataset() -> Dataset {
    Dataset::new(vec![vec![0.5]], vec![vec![0.0, 3.0]], None).expect("demo dataset is valid")
}

fn network_error(e: NetworkError) -> CliError {
    match e {
        NetworkError::NoHalt(n) => CliError::Mismatch(format!("no halt within {n}")),
        NetworkError::NoStop(n) => CliError::Mismatch(format!("training did not stop within {n} steps")),
        NetworkError::StopsAtStart(l) => CliError::Mismatch(format!("loss {l} already below the stopping threshold")),
        other => CliError::Config(other.to_string()),
    }
}

/// Trains the extended network and reports the checks on the run.
pub fn train_cmd(opts: &Options) -> Result<String, CliError> {
    let tm = load_machine(opts.machine_name())?;
    let data = match &opts.dataset {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            Dataset::from_json(&text).map_err(network_error)?
        }
        None => demo_dataset(),
    };
    let cfg = opts.net_config();
    let net = ExtendedNet::<f64>::build(&tm, &data, cfg).map_err(network_error)?;
    let report = train(
        &net,
        TrainOptions {
            max_steps: opts.max_iters(),
            snapshots: false,
        },
    )
    .map_err(network_error)?;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "machine={} construction={} k_t={} steps={}",
        opts.machine_name(),
        match report.construction { Construction::Internal => "internal", Construction::External => "external" },
        report.machine_steps,
        report.steps
    );
    let _ = writeln!(out, "steps = k_t+1: {}", report.steps_match);
    let _ = writeln!(out, "F == f_TM(x,y)(x): {}", report.output_matches_direct);
    let _ = writeln!(out, "F == y: {}", report.output_equals_labels);
    let _ = writeln!(out, "trace matches simulator: {}", report.trace_matches_simulator);
    let _ = writeln!(out, "s_init flips at {:?}; s_net flips at {:?}", report.init_flips, report.net_flips);
    let _ = writeln!(
        out,
        "output {:?}; trainable parameters {}; depth {}",
        report.final_output, report.trainable_dim, report.depth
    );
    if let Some(path) = &opts.out {
        write_file(path, |mut w| {
            serde_json::to_writer_pretty(&mut w, &report)?;
            std::io::Write::write_all(&mut w, b"\n")
        })?;
    }
    if report.steps_match && report.output_matches_direct && report.trace_matches_simulator {
        Ok(out)
    } else {
        Err(CliError::Reported(out, "training did not reproduce the machine".into()))
    }
}

/// Runs every acceptance check, plus a constant check when `[net]` sets `b`.
pub fn verify_cmd(opts: &Options) -> Result<String, CliError> {
    let mut out = String::from("corpus:\n");
    let _ = writeln!(out, "  {:<10} {:>3} {:>2} {:>4} {:>6} {:>5}", "machine", "|Q|", "d", "tau", "cells", "k_t");
    for r in verify::corpus_table() {
        let _ = writeln!(
            out,
            "  {:<10} {:>3} {:>2} {:>4} {:>6} {:>5}",
            r.machine, r.states, r.tapes, r.tau, r.payload_cells, r.steps
        );
    }
    let mut results = verify::run_all();
    let net = opts.net_config();
    if let Some(b) = net.b {
        let outcome = ExternalParams::<f64>::check_b(b, 2, true);
        results.push(verify::CheckResult {
            id: 10,
            name: "configured constants (d = 2)",
            passed: outcome.is_ok(),
            detail: match outcome {
                Ok(()) => format!("b = {b} passes"),
                Err(e) => format!("b = {b}: {e}"),
            },
            assertions: 1,
        });
    }
    out.push_str("checks:\n");
    for r in &results {
        let _ = writeln!(
            out,
            "  [{}] {}. {} ({} assertions): {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.id,
            r.name,
            r.assertions,
            r.detail
        );
    }
    let failed: Vec<_> = results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    let _ = writeln!(out, "{} of {} checks passed", results.len() - failed.len(), results.len());
    if let Some(path) = &opts.out {
        write_file(path, |mut w| {
            serde_json::to_writer_pretty(&mut w, &results)?;
            std::io::Write::write_all(&mut w, b"\n")
        })?;
    }
    if failed.is_empty() {
        Ok(out)
    } else {
        Err(CliError::Reported(out, format!("failed: {}", failed.join(", "))))
    }
}
