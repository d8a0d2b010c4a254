use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use pseudocone::export::{polyline_2d, radial_mesh_3d};
use pseudocone::io::{Instance, PseudoConeJson, SolutionJson, SCHEMA_VERSION};
use pseudocone::pipeline::{
    certify_discrete, certify_semidiscrete, pushforward_tolerance, truncation_experiment, Certificates, Regime,
    SolutionDetail, SourceMeasure, Status,
};
use pseudocone::{Error, Form, Tolerances};
use serde::Serialize;
use sha2::{Digest, Sha256};

mod selftest;

#[derive(Parser)]
#[command(name = "pseudocone", version, about = "Gauss image problem for C-pseudo-cones")]
struct Cli {
    /// Worker threads for the parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and write result.json and run_record.json.
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum)]
        regime: Option<RegimeArg>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Seed for quadrature node jitter (overrides the instance file).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Recompute every certificate of a stored solution.
    Verify {
        solution: PathBuf,
        instance: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write the boundary of K inside a ball as CSV (n = 2) or OBJ (n = 3).
    Export {
        solution: PathBuf,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        #[arg(long, default_value_t = 5.0)]
        ball: f64,
        /// Subdivisions per fan triangle edge of the OBJ mesh.
        #[arg(long, default_value_t = 32)]
        resolution: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Truncation study: solve for shrinking margins and tabulate distances.
    Experiment {
        instance: PathBuf,
        #[arg(long, default_value_t = 3)]
        truncation_steps: usize,
        #[arg(long, value_enum)]
        regime: Option<RegimeArg>,
        #[arg(long)]
        ball: Option<f64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the built-in fixtures.
    Selftest,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    Discrete,
    Semidiscrete,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Discrete => Regime::Discrete,
            RegimeArg::Semidiscrete => Regime::SemiDiscrete,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum FormatArg {
    Csv,
    Obj,
}

/// A failed command and its exit code.
struct Failure {
    code: u8,
    message: String,
}

const EXIT_IO: u8 = 1;
const EXIT_SCHEMA: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_CERTIFICATION: u8 = 4;

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Schema(_) | Error::UnsupportedDimension(_) => EXIT_SCHEMA,
            Error::CertificationFailed(_) => EXIT_CERTIFICATION,
            _ => EXIT_SOLVER,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error, code: u8) -> Failure {
    Failure {
        code,
        message: format!("{}: {e}", path.display()),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| io_failure(path, e, EXIT_SCHEMA))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_failure(dir, e, EXIT_IO))?;
    }
    fs::write(path, text).map_err(|e| io_failure(path, e, EXIT_IO))
}

fn init_logging() {
    let level = match std::env::var("PSEUDOCONE_LOG").as_deref() {
        Ok("info") => log::LevelFilter::Info,
        Ok("trace") => log::LevelFilter::Trace,
        Ok("quiet") | Err(_) => log::LevelFilter::Off,
        Ok(other) => {
            eprintln!("warning: PSEUDOCONE_LOG={other} is not one of quiet, info, trace; using quiet");
            log::LevelFilter::Off
        }
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(EXIT_IO);
        }
    }
    let outcome = match cli.command {
        Command::Solve {
            instance,
            regime,
            out,
            seed,
        } => solve(&instance, regime.map(Regime::from), &out, seed, cli.threads),
        Command::Verify { solution, instance, seed } => verify(&solution, &instance, seed),
        Command::Export {
            solution,
            format,
            ball,
            resolution,
            out,
        } => export(&solution, format, ball, resolution, &out),
        Command::Experiment {
            instance,
            truncation_steps,
            regime,
            ball,
            out,
            seed,
        } => experiment(&instance, truncation_steps, regime.map(Regime::from), ball, &out, seed),
        Command::Selftest => selftest::run(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[derive(Serialize)]
struct RunRecord {
    schema_version: u32,
    input_sha256: String,
    config: Config,
    trace: Trace,
    status: Status,
    certificates: Certificates,
    timing: Timing,
}

#[derive(Serialize)]
struct Config {
    regime: Regime,
    seed: u64,
    threads: Option<usize>,
    options: pseudocone::io::RunOptions,
}

#[derive(Serialize)]
struct Trace {
    iterations: usize,
    /// Duality gap (discrete) after the final pivot.
    #[serde(skip_serializing_if = "Option::is_none")]
    gap: Option<f64>,
    /// Dual objective at each recorded iterate (semi-discrete).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    objective: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    residual: Vec<f64>,
}

#[derive(Serialize)]
struct Timing {
    seconds: f64,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn solve(path: &Path, regime: Option<Regime>, out: &Path, seed: Option<u64>, threads: Option<usize>) -> Result<(), Failure> {
    let text = read(path)?;
    let instance = Instance::from_json(&text)?;
    let regime = instance.regime(regime);
    let source = instance.source(regime, seed)?;
    let opts = instance.options.semidiscrete;
    let start = Instant::now();
    let sol = source.solve(&instance.cone, &instance.nu, &opts)?;
    let seconds = start.elapsed().as_secs_f64();
    // Written even when a certificate fails, so the residuals can be inspected.
    let bundle = SolutionJson::from_solution(&sol);
    write(&out.join("result.json"), &bundle.to_json())?;

    let trace = match &sol.detail {
        SolutionDetail::Discrete(t) => Trace {
            iterations: t.iterations,
            gap: Some(t.gap()),
            objective: Vec::new(),
            residual: Vec::new(),
        },
        SolutionDetail::SemiDiscrete {
            iterations,
            objective_trace,
            residual_trace,
            ..
        } => Trace {
            iterations: *iterations,
            gap: None,
            objective: objective_trace.clone(),
            residual: residual_trace.clone(),
        },
    };
    let record = RunRecord {
        schema_version: SCHEMA_VERSION,
        input_sha256: sha256_hex(text.as_bytes()),
        config: Config {
            regime,
            seed: seed.unwrap_or(instance.options.seed),
            threads,
            options: instance.options,
        },
        trace,
        status: sol.status,
        certificates: sol.certificates.clone(),
        timing: Timing { seconds },
    };
    let record = serde_json::to_string_pretty(&record).expect("run record serializes");
    write(&out.join("run_record.json"), &record)?;

    for w in &sol.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(t) = &bundle.transport {
        println!("S = {:.7}, I = {:.7}", t.primal, t.dual);
    }
    if let Some(s) = &bundle.semidiscrete {
        println!(
            "J = {:.7}, {} iterations, cell residual {:.2e}",
            s.objective, s.iterations, s.cells.balanced_residual
        );
    }
    println!("status: {}", status_name(sol.status));
    match sol.status {
        Status::Verified => Ok(()),
        Status::Failed => Err(Failure {
            code: EXIT_CERTIFICATION,
            message: sol.certificates.failures.join("; "),
        }),
    }
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Verified => "verified",
        Status::Failed => "failed",
    }
}

fn verify(solution: &Path, instance: &Path, seed: Option<u64>) -> Result<(), Failure> {
    let stored = SolutionJson::from_json(&read(solution)?)?;
    let inst = Instance::from_json(&read(instance)?)?;
    let tol: Tolerances = inst.options.semidiscrete.tolerances;
    let fail = |message: String| Failure {
        code: EXIT_CERTIFICATION,
        message,
    };
    // Any body that does not even rebuild is a certification failure: the file
    // parsed, its content does not describe a valid solution.
    let k = stored
        .k
        .build(tol)
        .map_err(|e| fail(format!("stored body does not rebuild: {e}")))?;
    if !k.cone().same_as(&inst.cone, tol.tau_geo) {
        return Err(fail("stored body lives on a different cone than the instance".into()));
    }
    let certificates = match stored.regime {
        Regime::Discrete => {
            let Some(t) = &stored.transport else {
                return Err(Failure {
                    code: EXIT_SCHEMA,
                    message: "discrete solution without a \"transport\" section".into(),
                });
            };
            let SourceMeasure::Discrete(mu) = inst.source(Regime::Discrete, seed)? else {
                unreachable!("discrete regime yields atoms");
            };
            if k.form() != Form::H {
                return Err(fail("discrete solutions are stored in constraint form".into()));
            }
            certify_discrete(&k, &mu, &inst.nu, &t.plan, &t.h, &t.g, &tol).map_err(|e| fail(e.to_string()))?
        }
        Regime::SemiDiscrete => {
            let SourceMeasure::Quadrature(mu) = inst.source(Regime::SemiDiscrete, seed)? else {
                unreachable!("semi-discrete regime yields a quadrature");
            };
            if k.form() != Form::V {
                return Err(fail("semi-discrete solutions are stored in vertex form".into()));
            }
            let push_tol = pushforward_tolerance(&mu, inst.options.semidiscrete.tol_mass);
            certify_semidiscrete(&k, &mu, &inst.nu, push_tol).map_err(|e| fail(e.to_string()))?
        }
    };
    if let Some(g) = certificates.duality_gap {
        println!("duality gap {g:.2e}");
    }
    if let Some(s) = certificates.slackness {
        println!("slackness {s:.2e}");
    }
    if let Some(r) = certificates.pushforward_residual {
        println!("pushforward residual {r:.2e}");
    }
    println!("equality residual {:.2e}", certificates.equality_residual);
    match certificates.status() {
        Status::Verified => {
            println!("status: verified");
            Ok(())
        }
        Status::Failed => Err(fail(certificates.failures.join("; "))),
    }
}

fn export(solution: &Path, format: Option<FormatArg>, ball: f64, resolution: usize, out: &Path) -> Result<(), Failure> {
    let stored = SolutionJson::from_json(&read(solution)?)?;
    let k = stored.k.build(Tolerances::default())?;
    if !(ball > 0.0) {
        return Err(Failure {
            code: EXIT_SCHEMA,
            message: format!("ball radius {ball} must be positive"),
        });
    }
    let format = format.unwrap_or(if k.dim() == 3 { FormatArg::Obj } else { FormatArg::Csv });
    let (result, name) = match format {
        FormatArg::Csv => (polyline_2d(&k, ball)?, "boundary.csv"),
        FormatArg::Obj => (radial_mesh_3d(&k, ball, resolution)?, "boundary.obj"),
    };
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let path = out.join(name);
    write(&path, &result.text)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn experiment(
    path: &Path,
    steps: usize,
    regime: Option<Regime>,
    ball: Option<f64>,
    out: &Path,
    seed: Option<u64>,
) -> Result<(), Failure> {
    let inst = Instance::from_json(&read(path)?)?;
    let source = inst.source(inst.regime(regime), seed)?;
    let ball = ball.unwrap_or(inst.options.ball);
    let study = truncation_experiment(&inst.cone, &source, &inst.nu, steps, ball, &inst.options.semidiscrete)?;

    let mut table = String::from("step,margin,captured_mass,kept_atoms,scale_factor,status\n");
    for j in 0..study.solutions.len() {
        table.push_str(&format!(
            "{},{},{},{},{},{}\n",
            j + 1,
            study.margins[j],
            study.captured_mass[j],
            study.kept_atoms[j],
            study.scale_factors[j],
            status_name(study.statuses[j])
        ));
    }
    write(&out.join("truncation_steps.csv"), &table)?;

    let s = study.distances.len();
    let mut dist = String::from("step");
    for b in 0..s {
        dist.push_str(&format!(",{}", b + 1));
    }
    dist.push('\n');
    for (a, row) in study.distances.iter().enumerate() {
        dist.push_str(&(a + 1).to_string());
        for d in row {
            dist.push_str(&format!(",{d}"));
        }
        dist.push('\n');
    }
    write(&out.join("truncation_distances.csv"), &dist)?;
    for (j, k) in study.solutions.iter().enumerate() {
        let json = serde_json::to_string_pretty(&PseudoConeJson::from_body(k)).expect("body serializes");
        write(&out.join(format!("k_step{}.json", j + 1)), &json)?;
    }
    print!("{dist}");
    Ok(())
}
