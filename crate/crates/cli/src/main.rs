mod config;
mod suites;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use fracgeom::constants::{constants_for_p, constants_for_s, FracParams};
use fracgeom::io::{
    describe_field, field_hash, load_body, load_field, node_table_csv, sha256_hex, write_text, BodyDescriptor,
};
use fracgeom::quadrature::sphere_grid;
use fracgeom::fractional::polar_projection_body;
use fracgeom::radialmean::radial_mean_body;
use fracgeom::verify::Tolerances;
use fracgeom::Error;
use serde_json::{json, Value};

use config::RunConfig;
use suites::{Inputs, Suite};

const EXIT_STATUS_HELP: &str = "\
Exit status:
  0  success
  1  at least one verification check failed
  2  usage error (unknown flag or suite, conflicting flags, value out of range)
  3  malformed body, field or tolerance file
  4  computation error (unsupported input, quadrature failure, degenerate body)
  5  file system error";

const EXIT_VERIFY: u8 = 1;
const EXIT_PARSE: u8 = 3;
const EXIT_COMPUTE: u8 = 4;
const EXIT_IO: u8 = 5;

#[derive(Parser)]
#[command(
    name = "fracgeom",
    version,
    about = "Fractional polar projection bodies, radial mean bodies and inequality checks",
    after_help = EXIT_STATUS_HELP
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Seed for every Monte Carlo stream
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Sphere grid size (default: 256 nodes in the plane, 400 in space)
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(2..))]
    resolution: Option<u64>,
    /// Monte Carlo samples per sphere node
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    samples: Option<u64>,
    /// Number of levels used by layer-cake and Schwarz rearrangement
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    thresholds: Option<u64>,
    /// Output directory
    #[arg(long, global = true, env = "FRACGEOM_OUT", default_value = "fracgeom-out")]
    out: PathBuf,
    /// JSON file overriding per-check tolerances
    #[arg(long, global = true)]
    tolerance_file: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Print closed-form constants as JSON
    Constants {
        /// Dimension
        #[arg(long)]
        n: usize,
        /// Comma-separated fractional orders in (0, 1)
        #[arg(long, value_delimiter = ',', conflicts_with = "p")]
        s: Vec<f64>,
        /// Comma-separated radial mean orders greater than -1
        #[arg(long, value_delimiter = ',')]
        p: Vec<f64>,
    },
    /// Compute a body on the sphere grid and write CSV plus metadata JSON
    Body {
        /// JSON descriptor of a body or field
        descriptor: PathBuf,
        #[arg(long, value_enum)]
        op: BodyOp,
        /// Fractional order for ppbody
        #[arg(long)]
        s: Option<f64>,
        /// Radial mean order for rpbody
        #[arg(long)]
        p: Option<f64>,
    },
    /// Run verification suites; prints one JSON report per line and a summary on stderr
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        /// Convex body descriptor replacing the default bodies
        #[arg(long, conflicts_with = "field")]
        body: Option<PathBuf>,
        /// Field descriptor replacing the default fields
        #[arg(long)]
        field: Option<PathBuf>,
        /// Comma-separated fractional orders
        #[arg(long, value_delimiter = ',')]
        s: Vec<f64>,
        /// Comma-separated radial mean orders
        #[arg(long, value_delimiter = ',')]
        p: Vec<f64>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BodyOp {
    /// Fractional polar projection body of a field
    Ppbody,
    /// Radial mean body of a convex body
    Rpbody,
    /// Support function of the classical projection body
    Projbody,
}

impl BodyOp {
    fn name(self) -> &'static str {
        match self {
            BodyOp::Ppbody => "ppbody",
            BodyOp::Rpbody => "rpbody",
            BodyOp::Projbody => "projbody",
        }
    }
}

/// Error with the exit status it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) => EXIT_PARSE,
            Error::Io(_) => EXIT_IO,
            _ => EXIT_COMPUTE,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(msg: impl fmt::Display) -> ! {
    Cli::command().error(ErrorKind::ValueValidation, msg).exit()
}

fn check_s(s: f64) -> f64 {
    if !(s > 0.0 && s < 1.0) {
        usage(format!("--s must lie in (0, 1), got {s}"));
    }
    s
}

fn check_p(p: f64) -> f64 {
    if !(p > -1.0 && p.is_finite()) {
        usage(format!("--p must be finite and greater than -1, got {p}"));
    }
    p
}

fn load_tolerances(path: Option<&Path>) -> Result<Tolerances, Failure> {
    let Some(path) = path else {
        return Ok(Tolerances::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        Failure {
            code: EXIT_PARSE,
            message: format!("{}: line {}: {e}", path.display(), e.line()),
        }
    })
}

fn label_of(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "input".into())
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json"));
}

fn cmd_constants(cfg: &RunConfig, n: usize, s: &[f64], p: &[f64]) -> Result<u8, Failure> {
    if n == 0 {
        usage("--n must be at least 1");
    }
    if s.is_empty() == p.is_empty() {
        usage("give exactly one of --s or --p");
    }
    let mut rows = Vec::new();
    for &s in s {
        let params = FracParams::new(n, check_s(s))?;
        rows.extend(constants_for_s(params));
    }
    for &p in p {
        rows.extend(constants_for_p(n, check_p(p))?);
    }
    let inputs = if s.is_empty() { json!({ "n": n, "p": p }) } else { json!({ "n": n, "s": s }) };
    print_json(&json!({
        "config_digest": cfg.digest(),
        "run_config": cfg,
        "inputs": inputs,
        "constants": rows,
    }));
    Ok(0)
}

fn cmd_body(cfg: &RunConfig, path: &Path, op: BodyOp, s: Option<f64>, p: Option<f64>) -> Result<u8, Failure> {
    match op {
        BodyOp::Ppbody if s.is_none() || p.is_some() => usage("ppbody takes --s and no --p"),
        BodyOp::Rpbody if p.is_none() || s.is_some() => usage("rpbody takes --p and no --s"),
        BodyOp::Projbody if s.is_some() || p.is_some() => usage("projbody takes neither --s nor --p"),
        _ => {}
    }
    let (csv, mut meta) = match op {
        BodyOp::Ppbody => {
            let f = load_field(path)?;
            let s = check_s(s.unwrap_or_default());
            let n = f.dim();
            let q = sphere_grid(n, cfg.resolution_for(n))?;
            let body = polar_projection_body(&f, FracParams::new(n, s)?, &q)?;
            let gauge: Vec<f64> = body.gauge_powers().iter().map(|g| g.powf(1.0 / s)).collect();
            let csv = node_table_csv(&q, &[("radius", body.table().radii()), ("gauge", &gauge)]);
            let meta = json!({
                "n": n,
                "s": s,
                "source": describe_field(&f),
                "field_hash": field_hash(&f),
                "grid": q.kind(),
                "resolution": q.resolution(),
                "nodes": q.len(),
                "volume": body.volume(),
            });
            (csv, meta)
        }
        BodyOp::Rpbody => {
            let e = load_body(path)?;
            let p = check_p(p.unwrap_or_default());
            let n = e.dim();
            let q = sphere_grid(n, cfg.resolution_for(n))?;
            let body = radial_mean_body(&e, p, &q, cfg.samples, cfg.seed)?;
            let csv = node_table_csv(&q, &[("radius", body.table().radii()), ("std_error", body.std_errors())]);
            let source = json!({ "kind": "indicator", "body": BodyDescriptor::describe(&e) });
            let meta = json!({
                "n": n,
                "p": p,
                "source": source,
                "field_hash": sha256_hex(source.to_string().as_bytes()),
                "grid": q.kind(),
                "resolution": q.resolution(),
                "nodes": q.len(),
                "samples": cfg.samples,
                "seed": cfg.seed,
                "volume": body.volume(),
                "warnings": body.warnings(),
            });
            (csv, meta)
        }
        BodyOp::Projbody => {
            let e = load_body(path)?;
            let n = e.dim();
            let q = sphere_grid(n, cfg.resolution_for(n))?;
            let support: Vec<f64> = q.nodes().iter().map(|u| e.brightness(u.coords())).collect();
            let csv = node_table_csv(&q, &[("support", &support)]);
            let source = json!({ "kind": "indicator", "body": BodyDescriptor::describe(&e) });
            let meta = json!({
                "n": n,
                "source": source,
                "field_hash": sha256_hex(source.to_string().as_bytes()),
                "grid": q.kind(),
                "resolution": q.resolution(),
                "nodes": q.len(),
            });
            (csv, meta)
        }
    };
    let stem = format!("{}.{}", label_of(path), op.name());
    let csv_name = format!("{stem}.csv");
    write_text(&cfg.out_path(&csv_name), &csv)?;
    let extra = json!({
        "op": op.name(),
        "csv": csv_name,
        "csv_sha256": sha256_hex(csv.as_bytes()),
        "config_digest": cfg.digest(),
        "run_config": cfg,
    });
    if let (Value::Object(m), Value::Object(x)) = (&mut meta, extra) {
        m.extend(x);
    }
    let text = serde_json::to_string_pretty(&meta).expect("json") + "\n";
    write_text(&cfg.out_path(&format!("{stem}.json")), &text)?;
    print!("{text}");
    Ok(0)
}

fn cmd_verify(cfg: &RunConfig, suite: Suite, inputs: Inputs) -> Result<u8, Failure> {
    let rows = suites::run(suite, &inputs, cfg)?;
    let digest = cfg.digest();
    let mut stream = serde_json::to_string(&json!({
        "config_digest": digest,
        "run_config": cfg,
        "suite": suite.name(),
    }))
    .expect("json");
    stream.push('\n');
    for row in &rows {
        let line = json!({
            "config_digest": digest,
            "suite": row.suite,
            "input": row.input,
            "report": row.report,
        });
        stream.push_str(&serde_json::to_string(&line).expect("json"));
        stream.push('\n');
    }
    write_text(&cfg.out_path(&format!("verify-{}.jsonl", suite.name())), &stream)?;
    print!("{stream}");
    eprint!("{}", suites::summary_table(&rows));
    let failed = rows.iter().filter(|r| !r.report.passed()).count();
    eprintln!("{} checks, {} failed", rows.len(), failed);
    Ok(if failed > 0 { EXIT_VERIFY } else { 0 })
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let c = &cli.common;
    let tolerances = load_tolerances(c.tolerance_file.as_deref())?;
    let cfg = RunConfig::new(
        c.seed,
        c.resolution.map(|r| r as usize),
        c.samples.map(|r| r as usize),
        c.thresholds.map(|r| r as usize),
        tolerances,
        c.out.clone(),
    );
    match cli.command {
        Command::Constants { n, s, p } => cmd_constants(&cfg, n, &s, &p),
        Command::Body { descriptor, op, s, p } => cmd_body(&cfg, &descriptor, op, s, p),
        Command::Verify { suite, body, field, s, p } => {
            let s: Vec<f64> = s.into_iter().map(check_s).collect();
            let p: Vec<f64> = p.into_iter().map(check_p).collect();
            let inputs = Inputs {
                body: body.map(|b| Ok::<_, Failure>((label_of(&b), load_body(&b)?))).transpose()?,
                field: field.map(|f| Ok::<_, Failure>((label_of(&f), load_field(&f)?))).transpose()?,
                s,
                p,
            };
            cmd_verify(&cfg, suite, inputs)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("fracgeom: {e}");
            ExitCode::from(e.code)
        }
    }
}
