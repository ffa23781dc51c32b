//! `hypoflow` command-line front end. Reports go to stdout as JSON (CSV for trajectories);
//! every failure writes one JSON object to stderr. Exit codes: 0 success, 1 check failure,
//! 2 usage or parse error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use hypoflow::construct::catalog_ids;
use hypoflow::error::DocumentError;
use hypoflow::flow::FlowMethod;
use hypoflow::geometry::{holonomy_estimate, HolonomyOptions};
use hypoflow::io::{
    run_flow, run_metric, write_trajectory_csv, AlgebraDocument, RunConfig, RunSummary, Structure,
    StructureDocument,
};
use hypoflow::reproduce::{criteria, run_scenario, ScenarioReport, SCENARIOS};
use hypoflow::torsion::{check_cocalibrated, check_hypo, classify_torsion, hypo_torsion};

#[derive(Parser)]
#[command(
    name = "hypoflow",
    version,
    about = "Hypo and Hitchin flows on Lie algebras and holonomy of the resulting metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the Jacobi identity and, optionally, a structure document.
    Validate {
        algebra: PathBuf,
        #[arg(long)]
        structure: Option<PathBuf>,
    },
    /// Intrinsic torsion of a hypo SU(3)-structure.
    Torsion {
        algebra: PathBuf,
        structure: PathBuf,
    },
    /// Integrate a flow; writes trajectory.csv and summary.json to the output directory.
    Flow {
        algebra: PathBuf,
        structure: PathBuf,
        #[arg(long, value_parser = parse_method)]
        method: FlowMethod,
        #[arg(long, allow_hyphen_values = true)]
        t1: f64,
        #[arg(long)]
        rtol: Option<f64>,
        #[arg(long)]
        atol: Option<f64>,
        /// Sample count recorded for a later `holonomy` call.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value = "hypoflow-run")]
        out: PathBuf,
    },
    /// Holonomy estimate of a recorded run (its directory or summary.json).
    Holonomy {
        run: PathBuf,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Run a bundled reproduction scenario, or all of them.
    Reproduce {
        #[arg(required_unless_present = "all")]
        id: Option<String>,
        #[arg(long, conflicts_with = "id")]
        all: bool,
        /// Print the full scenario reports as JSON instead of PASS/FAIL lines.
        #[arg(long)]
        json: bool,
    },
    /// List catalog fixtures and reproduction scenarios.
    Catalog,
}

fn parse_method(s: &str) -> Result<FlowMethod, String> {
    s.parse()
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            kind: "usage",
            message: message.into(),
        }
    }

    fn check(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            kind: "check",
            message: message.into(),
        }
    }
}

impl From<DocumentError> for Failure {
    fn from(e: DocumentError) -> Self {
        if e.is_usage() {
            Failure::usage(e.to_string())
        } else {
            Failure::check(e.to_string())
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load_algebra(path: &Path) -> Result<(AlgebraDocument, hypoflow::algebra::LieAlgebra), Failure> {
    let doc = AlgebraDocument::from_json(&read(path)?)?;
    let alg = doc.to_algebra()?;
    Ok((doc, alg))
}

fn load_structure(path: &Path) -> Result<(StructureDocument, Structure), Failure> {
    let doc = StructureDocument::from_json(&read(path)?)?;
    let s = doc.validate()?;
    Ok((doc, s))
}

/// Writes a line to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(line: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn print(v: &Value) {
    emit(&serde_json::to_string_pretty(v).expect("JSON values serialize"));
}

fn validate(algebra: &Path, structure: Option<&Path>) -> Result<(), Failure> {
    let doc = AlgebraDocument::from_json(&read(algebra)?)?;
    let alg = doc.to_algebra()?;
    let mut out =
        json!({ "schema": 1, "dim": alg.dim(), "jacobi_residual": alg.jacobi_residual() });
    if let Some(path) = structure {
        let (sdoc, s) = load_structure(path)?;
        if alg.dim() != 7 {
            return Err(Failure::usage(format!(
                "structures live on 7-dimensional algebras, got {}",
                alg.dim()
            )));
        }
        let mut report = json!({ "kind": sdoc.kind, "valid": true });
        match &s {
            Structure::G2(g) => {
                report["cocalibrated_residual"] = json!(check_cocalibrated(&alg, g))
            }
            Structure::Su3(su3) | Structure::Sp1(_, su3) => {
                let h = check_hypo(&alg, su3);
                report["d_omega"] = json!(h.d_omega);
                report["d_alpha_psi"] = json!(h.d_alpha_psi);
                report["normalization_residual"] = json!(su3.normalization_residual());
            }
        }
        out["structure"] = report;
    }
    print(&out);
    Ok(())
}

fn torsion(algebra: &Path, structure: &Path) -> Result<(), Failure> {
    let (_, alg) = load_algebra(algebra)?;
    let (_, s) = load_structure(structure)?;
    let su3 = s
        .su3()
        .ok_or_else(|| Failure::usage("torsion needs an su3 or sp1 structure"))?;
    if alg.dim() != su3.dim() {
        return Err(Failure::usage(format!(
            "algebra has dimension {}, structure {}",
            alg.dim(),
            su3.dim()
        )));
    }
    let t = hypo_torsion(&alg, su3, 1e-9).map_err(|e| Failure::check(e.to_string()))?;
    let class = classify_torsion(&t, 1e-8);
    print(&json!({
        "schema": 1,
        "lambda1": t.lambda1,
        "lambda2": t.lambda2,
        "beta": t.beta.to_string(),
        "omega_tilde": t.omega_tilde.to_string(),
        "gamma": t.gamma.to_string(),
        "norms": { "beta": t.beta_norm, "omega_tilde": t.omega_tilde_norm, "gamma": t.gamma_norm },
        "residual": t.residual,
        "type_residual": t.type_residual,
        "class": class.components.iter().map(|c| c.label()).collect::<Vec<_>>(),
        "invariant": class.is_invariant(),
    }));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn flow(
    algebra: &Path,
    structure: &Path,
    method: FlowMethod,
    t1: f64,
    rtol: Option<f64>,
    atol: Option<f64>,
    samples: Option<usize>,
    out: &Path,
) -> Result<(), Failure> {
    let (_, alg) = load_algebra(algebra)?;
    let (sdoc, s) = load_structure(structure)?;
    let mut cfg = RunConfig::new(method, t1);
    if let Some(r) = rtol {
        cfg.rtol = r;
    }
    if let Some(a) = atol {
        cfg.atol = a;
    }
    if let Some(n) = samples {
        cfg.holonomy_samples = n;
    }
    cfg.output = Some(out.display().to_string());
    let tr = run_flow(&cfg, &alg, &s)?;
    let summary = RunSummary::new(&cfg, &alg, &sdoc, &tr);
    let io = |e: std::io::Error| Failure::usage(format!("{}: {e}", out.display()));
    fs::create_dir_all(out).map_err(io)?;
    let mut csv = Vec::new();
    write_trajectory_csv(&tr, &mut csv).map_err(io)?;
    fs::write(out.join("trajectory.csv"), csv).map_err(io)?;
    fs::write(out.join("summary.json"), summary.to_json()).map_err(io)?;
    emit(&summary.to_json());
    Ok(())
}

fn holonomy(run: &Path, samples: Option<usize>) -> Result<(), Failure> {
    let path = if run.is_dir() {
        run.join("summary.json")
    } else {
        run.to_path_buf()
    };
    let summary = RunSummary::from_json(&read(&path)?)?;
    let n = samples.unwrap_or(summary.config.holonomy_samples);
    let (alg, s, tr) = summary.replay()?;
    let m = run_metric(&alg, &s, &tr);
    let (t0, t1) = tr.t_range();
    let report = holonomy_estimate(&m, &HolonomyOptions::uniform(t0, t1, n)).map_err(|e| {
        if n < 3 {
            Failure::usage(e.to_string())
        } else {
            Failure::check(e.to_string())
        }
    })?;
    emit(&serde_json::to_string_pretty(&report).expect("reports serialize"));
    Ok(())
}

fn print_scenario(r: &ScenarioReport) {
    for c in &r.checks {
        emit(&format!(
            "{} [{}] {} {}: {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.criterion,
            r.id,
            c.name,
            c.detail
        ));
    }
    for &k in criteria(&r.id) {
        let pass = r.checks.iter().filter(|c| c.criterion == k).all(|c| c.pass);
        emit(&format!(
            "criterion {k}: {}",
            if pass { "PASS" } else { "FAIL" }
        ));
    }
}

fn reproduce(id: Option<&str>, all: bool, as_json: bool) -> Result<(), Failure> {
    let ids: Vec<&str> = if all {
        SCENARIOS.to_vec()
    } else {
        let id = id.expect("clap requires an id without --all");
        if !SCENARIOS.contains(&id) {
            return Err(Failure::usage(format!(
                "unknown scenario {id:?}; known: {}",
                SCENARIOS.join(", ")
            )));
        }
        vec![id]
    };
    // Scenarios are independent, so `--all` runs them on separate threads.
    let reports: Vec<ScenarioReport> = std::thread::scope(|scope| {
        let handles: Vec<_> = ids
            .iter()
            .map(|id| scope.spawn(move || run_scenario(id).expect("known scenario")))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario thread"))
            .collect()
    });
    if as_json {
        print(&serde_json::to_value(&reports).expect("reports serialize"));
    } else {
        reports.iter().for_each(print_scenario);
    }
    let failed: Vec<&str> = reports
        .iter()
        .filter(|r| !r.pass())
        .map(|r| r.id.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::check(format!(
            "failing scenarios: {}",
            failed.join(", ")
        )))
    }
}

fn catalog() {
    for id in catalog_ids() {
        emit(id);
    }
    for id in SCENARIOS {
        emit(&format!("scenario:{id}"));
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let f = Failure::usage(e.render().to_string().trim());
            eprintln!(
                "{}",
                json!({ "error": f.kind, "message": f.message, "exit": f.code })
            );
            return ExitCode::from(f.code);
        }
    };
    let result = match cli.command {
        Command::Validate { algebra, structure } => validate(&algebra, structure.as_deref()),
        Command::Torsion { algebra, structure } => torsion(&algebra, &structure),
        Command::Flow {
            algebra,
            structure,
            method,
            t1,
            rtol,
            atol,
            samples,
            out,
        } => flow(&algebra, &structure, method, t1, rtol, atol, samples, &out),
        Command::Holonomy { run, samples } => holonomy(&run, samples),
        Command::Reproduce { id, all, json } => reproduce(id.as_deref(), all, json),
        Command::Catalog => {
            catalog();
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!(
                "{}",
                json!({ "error": f.kind, "message": f.message, "exit": f.code })
            );
            ExitCode::from(f.code)
        }
    }
}
