mod config;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bsqec::{
    build_lookup_table, estimate_all, evaluate_curve, extract_coefficients,
    ghz_rejection_probability, round_bounds, search_all, CandidateReport, CodeLayout, Gate,
    Protocol, SubsetEstimate,
};
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use config::{Config, Options};

#[derive(Parser)]
#[command(
    name = "bsqec",
    version,
    about = "Bacon-Shor error-correction simulations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Logical error rate bounds over a noise grid (CSV)
    Simulate {
        #[command(flatten)]
        options: Options,
        /// Write the per-subset estimates to this JSON file
        #[arg(long)]
        save_estimates: Option<PathBuf>,
        /// Reuse estimates from a previous run instead of sampling
        #[arg(long)]
        load_estimates: Option<PathBuf>,
    },
    /// Polynomial coefficients of the logical error rate (JSON)
    Coeffs {
        #[command(flatten)]
        options: Options,
    },
    /// CNOT, measurement and round counts of a protocol (JSON)
    Counts {
        #[command(flatten)]
        options: Options,
    },
    /// Fault-tolerance search over GHZ verification pairs (JSON lines)
    Search {
        #[command(flatten)]
        options: Options,
    },
    /// Rejection probability of a verified GHZ preparation (CSV)
    Failprob {
        #[command(flatten)]
        options: Options,
    },
    /// Syndrome lookup table of the decoder (CSV)
    DumpLookup {
        #[command(flatten)]
        options: Options,
    },
}

/// A failure reported as JSON on standard error.
#[derive(Debug, Serialize)]
pub struct Failure {
    kind: &'static str,
    message: String,
}

impl Failure {
    pub fn config(message: String) -> Self {
        Failure {
            kind: "config",
            message,
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Failure {
            kind: "io",
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl From<bsqec::Error> for Failure {
    fn from(e: bsqec::Error) -> Self {
        Failure {
            kind: "simulation",
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure {
            kind: "format",
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({ "error": f }));
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    let (name, options) = match &command {
        Command::Simulate { options, .. } => ("simulate", options),
        Command::Coeffs { options } => ("coeffs", options),
        Command::Counts { options } => ("counts", options),
        Command::Search { options } => ("search", options),
        Command::Failprob { options } => ("failprob", options),
        Command::DumpLookup { options } => ("dump-lookup", options),
    };
    let cfg = Config::resolve(options.clone())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .map_err(|e| Failure::config(e.to_string()))?;
    let manifest = json!({
        "tool": "bsqec",
        "version": env!("CARGO_PKG_VERSION"),
        "command": name,
        "config": cfg,
    });
    let text = pool.install(|| match &command {
        Command::Simulate {
            save_estimates,
            load_estimates,
            ..
        } => simulate(
            &cfg,
            &manifest,
            save_estimates.as_deref(),
            load_estimates.as_deref(),
        ),
        Command::Coeffs { .. } => coeffs(&cfg, &manifest),
        Command::Counts { .. } => counts(&cfg, &manifest),
        Command::Search { .. } => search(&cfg, &manifest),
        Command::Failprob { .. } => failprob(&cfg, &manifest),
        Command::DumpLookup { .. } => dump_lookup(&cfg, &manifest),
    })?;
    match &cfg.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::io(path, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::io(Path::new("<stdout>"), e)),
    }
}

fn csv_header(manifest: &Value) -> String {
    format!("# {}\n", manifest)
}

fn with_manifest<T: Serialize>(manifest: &Value, body: T) -> Result<String, Failure> {
    let mut value = serde_json::to_value(body)?;
    value["manifest"] = manifest.clone();
    Ok(format!("{}\n", serde_json::to_string_pretty(&value)?))
}

fn simulate(
    cfg: &Config,
    manifest: &Value,
    save: Option<&Path>,
    load: Option<&Path>,
) -> Result<String, Failure> {
    let protocol = Protocol::new(cfg.spec())?;
    let estimates: Vec<SubsetEstimate> = match load {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
            serde_json::from_str(&text)?
        }
        None => estimate_all(&protocol, cfg.max_weight, &cfg.sampler(), cfg.seed)?,
    };
    if let Some(path) = save {
        std::fs::write(path, serde_json::to_string(&estimates)?)
            .map_err(|e| Failure::io(path, e))?;
    }
    let curve = evaluate_curve(
        &estimates,
        &protocol.circuit().census(),
        &cfg.noise()?,
        cfg.bound_mode,
    )?;
    let mut out = csv_header(manifest);
    out.push_str("p,q,pl_lower,pl_upper,acceptance\n");
    for c in curve {
        let _ = writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e}",
            c.p, c.q, c.pl_lower, c.pl_upper, c.acceptance
        );
    }
    Ok(out)
}

fn coeffs(cfg: &Config, manifest: &Value) -> Result<String, Failure> {
    let protocol = Protocol::new(cfg.spec())?;
    let estimates = estimate_all(&protocol, cfg.max_order, &cfg.sampler(), cfg.seed)?;
    let coeffs = extract_coefficients(
        &estimates,
        &protocol.circuit().census(),
        cfg.max_order,
        cfg.bound_mode,
    )?;
    with_manifest(
        manifest,
        json!({
            "protocol": cfg.method,
            "d": cfg.distance,
            "v": cfg.verifications,
            "coeffs": coeffs,
        }),
    )
}

#[derive(Serialize)]
struct Counts {
    protocol: bsqec::Method,
    d: usize,
    v: usize,
    rounds_min: usize,
    rounds_max: usize,
    cnot_min: usize,
    cnot_max: usize,
    measurement_min: usize,
    measurement_max: usize,
}

fn counts(cfg: &Config, manifest: &Value) -> Result<String, Failure> {
    let protocol = Protocol::new(cfg.spec())?;
    let gates = protocol.circuit().gates();
    let range = protocol.rounds()[0].clone();
    let cnots = gates[range.clone()]
        .iter()
        .filter(|g| matches!(g, Gate::Cnot(..)))
        .count();
    let meas = gates[range]
        .iter()
        .filter(|g| matches!(g, Gate::MeasZ(_) | Gate::MeasX(_)))
        .count();
    let (lo, hi) = match cfg.spec().flavor() {
        Some(flavor) => round_bounds((cfg.distance - 1) / 2, flavor),
        None => (1, 1),
    };
    with_manifest(
        manifest,
        Counts {
            protocol: cfg.method,
            d: cfg.distance,
            v: cfg.verifications,
            rounds_min: lo,
            rounds_max: hi,
            cnot_min: cnots * lo,
            cnot_max: cnots * hi,
            measurement_min: meas * lo,
            measurement_max: meas * hi,
        },
    )
}

fn search(cfg: &Config, manifest: &Value) -> Result<String, Failure> {
    let results = search_all(cfg.distance, cfg.verifications, cfg.s_max)?;
    let mut out = format!("{}\n", json!({ "manifest": manifest }));
    let mut ft = 0;
    for (candidate, verdict) in &results {
        ft += usize::from(verdict.is_ft());
        out.push_str(&serde_json::to_string(&CandidateReport::new(
            candidate, verdict,
        ))?);
        out.push('\n');
    }
    let summary = json!({ "summary": { "candidates": results.len(), "ft": ft, "not_ft": results.len() - ft } });
    let _ = writeln!(out, "{summary}");
    Ok(out)
}

fn failprob(cfg: &Config, manifest: &Value) -> Result<String, Failure> {
    let points = ghz_rejection_probability(
        cfg.distance,
        cfg.verifications,
        &cfg.noise()?,
        cfg.max_weight,
        &cfg.sampler(),
        cfg.seed,
    )?;
    let mut out = csv_header(manifest);
    out.push_str("p,q,lower,upper,upper95\n");
    for r in points {
        let _ = writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e}",
            r.p, r.q, r.lower, r.upper, r.upper95
        );
    }
    Ok(out)
}

fn dump_lookup(cfg: &Config, manifest: &Value) -> Result<String, Failure> {
    let layout = CodeLayout::new(cfg.distance)?;
    let table = build_lookup_table(&layout, cfg.correction_type())?;
    Ok(csv_header(manifest) + &table.to_csv())
}
