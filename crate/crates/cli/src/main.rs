//! Command line for spin tomograms of qubits and qutrits.
//!
//! Every subcommand writes one output file (JSON or CSV) carrying a full
//! echo of its configuration, and prints a one-line summary to stdout.
//! Outputs are deterministic for a fixed seed. Exit codes: 0 on success,
//! 2 for usage and input errors, 3 when a numerical invariant breaks or a
//! reconstruction is ill-posed.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use spintomo::inequalities::InequalityKind;
use spintomo::sampling::{empirical_tomogram, sample, ShotRecord};
use spintomo::search::{maximize_margin, threshold_phi, SearchConfig};
use spintomo::tomography::{
    fibonacci_sphere, reconstruct, tomograms_from_csv, tomograms_to_csv, Direction,
    ExactProvider, Tomogram, TomogramProvider, WernerProvider,
};
use spintomo::{DensityMatrix, Error};

#[derive(Parser)]
#[command(
    name = "spintomo",
    version,
    about = "Spin tomograms of qubit and qutrit states, Bell-type inequalities, \
             direction optimization and measurement simulation"
)]
struct Cli {
    /// Directory for output files (falls back to $SPINTOMO_OUT_DIR, then .)
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate tomogram tables of a state at measurement directions
    Tomogram(TomogramArgs),
    /// Maximize an inequality's violation margin over directions
    Optimize(OptimizeArgs),
    /// Scan the Werner family and report the best margin per parameter
    Sweep(SweepArgs),
    /// Find the Werner parameter below which an inequality is violated
    Threshold(ThresholdArgs),
    /// Draw finite measurement shots from a state
    Sample(SampleArgs),
    /// Recover a density matrix from tomogram tables or shot records
    Reconstruct(ReconstructArgs),
}

/// State specification: `werner:D:PHI`, `basis:DIM:INDEX`, or the path of a
/// density-matrix JSON file.
const STATE_HELP: &str = "werner:D:PHI | basis:DIM:INDEX | density-matrix JSON path";

#[derive(Args)]
struct DirectionSource {
    /// One direction per party: x|y|z tokens or theta,phi pairs, comma separated
    #[arg(long)]
    directions: Option<String>,

    /// Fibonacci-sphere points per party; tuples are the product across parties
    #[arg(long, conflicts_with = "directions")]
    grid: Option<usize>,

    /// Number of seeded random direction tuples
    #[arg(long, conflicts_with_all = ["directions", "grid"])]
    random: Option<usize>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

impl OutputFormat {
    fn name(&self) -> &'static str {
        match self {
            Self::Json => "json",
            Self::Csv => "csv",
        }
    }
}

#[derive(Args)]
struct TomogramArgs {
    /// State to measure
    #[arg(long, help = STATE_HELP)]
    state: String,

    #[command(flatten)]
    dirs: DirectionSource,

    /// Seed for --random direction tuples
    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,

    /// Output file name (default tomogram.json / tomogram.csv)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizeArgs {
    /// State to measure
    #[arg(long, help = STATE_HELP)]
    state: String,

    /// Inequality: wigner, chsh or uffink
    #[arg(long)]
    inequality: String,

    /// Independent search restarts
    #[arg(long, default_value_t = 32)]
    restarts: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Simplex iteration cap per restart
    #[arg(long, default_value_t = 600)]
    max_iters: usize,

    /// Output file name (default optimize.json)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Local dimension of the Werner family: 2 or 3
    #[arg(long)]
    dim: usize,

    /// Inequality: wigner, chsh or uffink
    #[arg(long)]
    inequality: String,

    #[arg(long, default_value_t = -1.0)]
    phi_start: f64,

    #[arg(long, default_value_t = 1.0)]
    phi_end: f64,

    /// Number of evenly spaced parameter values
    #[arg(long, default_value_t = 21)]
    steps: usize,

    #[arg(long, default_value_t = 32)]
    restarts: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output file name (default sweep.csv)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ThresholdArgs {
    /// Local dimension of the Werner family: 2 or 3
    #[arg(long)]
    dim: usize,

    /// Inequality: wigner, chsh or uffink
    #[arg(long)]
    inequality: String,

    #[arg(long, default_value_t = 32)]
    restarts: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output file name (default threshold.json)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    /// State to measure
    #[arg(long, help = STATE_HELP)]
    state: String,

    #[command(flatten)]
    dirs: DirectionSource,

    /// Shots per direction tuple
    #[arg(long)]
    shots: u64,

    /// Base seed; direction tuple k samples with seed XOR k
    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,

    /// Output file name (default sample.csv / sample.json)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Dimension of the state to recover: 2, 3, 4 or 9
    #[arg(long)]
    dim: usize,

    /// Tomogram tables (.json/.csv) or shot records; repeatable
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,

    /// Output file name (default reconstruct.json)
    #[arg(long)]
    out: Option<PathBuf>,
}

enum StateSource {
    Werner { d: usize, phi: f64 },
    Matrix(Box<DensityMatrix>),
}

impl StateSource {
    fn provider(&self) -> Result<Box<dyn TomogramProvider>, Error> {
        match self {
            Self::Werner { d, phi } => Ok(Box::new(WernerProvider::new(*d, *phi)?)),
            Self::Matrix(rho) => Ok(Box::new(ExactProvider::new((**rho).clone()))),
        }
    }
}

fn parse_state(spec: &str) -> anyhow::Result<StateSource> {
    if let Some(rest) = spec.strip_prefix("werner:") {
        let (d, phi) = rest
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("state {spec:?}: expected werner:D:PHI")))?;
        let d: usize = d
            .parse()
            .map_err(|_| Error::Parse(format!("state {spec:?}: bad dimension {d:?}")))?;
        let phi: f64 = phi
            .parse()
            .map_err(|_| Error::Parse(format!("state {spec:?}: bad parameter {phi:?}")))?;
        DensityMatrix::werner(d, phi)?;
        return Ok(StateSource::Werner { d, phi });
    }
    if let Some(rest) = spec.strip_prefix("basis:") {
        let (dim, index) = rest
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("state {spec:?}: expected basis:DIM:INDEX")))?;
        let dim: usize = dim
            .parse()
            .map_err(|_| Error::Parse(format!("state {spec:?}: bad dimension {dim:?}")))?;
        let index: usize = index
            .parse()
            .map_err(|_| Error::Parse(format!("state {spec:?}: bad index {index:?}")))?;
        return Ok(StateSource::Matrix(Box::new(DensityMatrix::basis_projector(
            dim, index,
        )?)));
    }
    let text = fs::read_to_string(spec)
        .with_context(|| format!("state {spec:?} is not werner:/basis: and not a readable file"))?;
    Ok(StateSource::Matrix(Box::new(DensityMatrix::from_json(&text)?)))
}

/// Parse the direction grammar: comma-separated tokens, each either an axis
/// letter or the first of a theta,phi number pair.
fn parse_direction_list(s: &str) -> Result<Vec<Direction>, Error> {
    let mut out = Vec::new();
    let mut tokens = s.split(',').map(str::trim);
    while let Some(tok) = tokens.next() {
        match tok {
            "x" | "y" | "z" => out.push(Direction::axis(tok.chars().next().unwrap())),
            "" => return Err(Error::Parse(format!("empty direction token in {s:?}"))),
            _ => {
                let theta: f64 = tok
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad direction token {tok:?}")))?;
                let phi_tok = tokens.next().ok_or_else(|| {
                    Error::Parse(format!("dangling polar angle {tok:?}: directions need theta,phi pairs"))
                })?;
                let phi: f64 = phi_tok.parse().map_err(|_| {
                    Error::Parse(format!("bad azimuth {phi_tok:?} after theta {tok:?}"))
                })?;
                out.push(Direction::new(theta, phi)?);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Parse("no directions given".into()));
    }
    Ok(out)
}

fn random_direction(rng: &mut ChaCha8Rng) -> Result<Direction, Error> {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..2.0 * std::f64::consts::PI);
    Direction::new(z.acos(), phi)
}

/// Expand a direction source into measurement tuples, one direction per party.
fn direction_tuples(
    src: &DirectionSource,
    parties: usize,
    seed: u64,
) -> Result<Vec<Vec<Direction>>, Error> {
    if let Some(list) = &src.directions {
        let dirs = parse_direction_list(list)?;
        if dirs.len() != parties {
            return Err(Error::Parse(format!(
                "state has {parties} parties but {} directions were given",
                dirs.len()
            )));
        }
        return Ok(vec![dirs]);
    }
    if let Some(n) = src.grid {
        let points = fibonacci_sphere(n)?;
        let mut tuples: Vec<Vec<Direction>> = vec![vec![]];
        for _ in 0..parties {
            let mut next = Vec::with_capacity(tuples.len() * n);
            for t in &tuples {
                for p in &points {
                    let mut row = t.clone();
                    row.push(*p);
                    next.push(row);
                }
            }
            tuples = next;
        }
        return Ok(tuples);
    }
    if let Some(n) = src.random {
        if n == 0 {
            return Err(Error::Parse("--random needs at least one tuple".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tuples = Vec::with_capacity(n);
        for _ in 0..n {
            let mut row = Vec::with_capacity(parties);
            for _ in 0..parties {
                row.push(random_direction(&mut rng)?);
            }
            tuples.push(row);
        }
        return Ok(tuples);
    }
    Err(Error::Parse(
        "one of --directions, --grid or --random is required".into(),
    ))
}

fn direction_source_json(src: &DirectionSource) -> Value {
    json!({
        "directions": src.directions,
        "grid": src.grid,
        "random": src.random,
    })
}

fn out_path(out_dir: &Option<PathBuf>, out: &Option<PathBuf>, default_name: &str) -> PathBuf {
    let name = out
        .clone()
        .unwrap_or_else(|| PathBuf::from(default_name));
    if name.is_absolute() {
        return name;
    }
    let dir = out_dir
        .clone()
        .or_else(|| std::env::var_os("SPINTOMO_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    dir.join(name)
}

fn write_output(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating output directory {}", parent.display()))?;
        }
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn json_line(value: &Value) -> String {
    let mut s = serde_json::to_string(value).expect("JSON output cannot fail");
    s.push('\n');
    s
}

fn parse_kind(s: &str) -> Result<InequalityKind, Error> {
    s.parse()
}

fn search_config(restarts: usize, seed: u64, max_iters: usize) -> SearchConfig {
    SearchConfig {
        restarts,
        seed,
        max_iters,
        ..SearchConfig::default()
    }
}

fn run_tomogram(out_dir: &Option<PathBuf>, args: &TomogramArgs) -> anyhow::Result<()> {
    let state = parse_state(&args.state)?;
    let provider = state.provider()?;
    let tuples = direction_tuples(&args.dirs, provider.party_dims().len(), args.seed)?;
    let tables: Vec<Tomogram> = tuples
        .iter()
        .map(|t| provider.tomogram(t))
        .collect::<Result<_, _>>()?;

    let config = json!({
        "command": "tomogram",
        "state": args.state,
        "source": direction_source_json(&args.dirs),
        "seed": args.seed,
        "format": args.format.name(),
    });
    let default_name = format!("tomogram.{}", args.format.name());
    let path = out_path(out_dir, &args.out, &default_name);
    let contents = match args.format {
        OutputFormat::Json => {
            let wires: Vec<Value> = tables
                .iter()
                .map(|t| serde_json::from_str(&t.to_json()).expect("tomogram wire is JSON"))
                .collect();
            json_line(&json!({ "config": config, "tomograms": wires }))
        }
        OutputFormat::Csv => {
            format!("# config = {config}\n{}", tomograms_to_csv(&tables)?)
        }
    };
    write_output(&path, &contents)?;
    println!(
        "wrote {} tomogram table(s) for {} to {}",
        tables.len(),
        args.state,
        path.display()
    );
    Ok(())
}

fn run_optimize(out_dir: &Option<PathBuf>, args: &OptimizeArgs) -> anyhow::Result<()> {
    let kind = parse_kind(&args.inequality)?;
    let state = parse_state(&args.state)?;
    let provider = state.provider()?;
    let config = search_config(args.restarts, args.seed, args.max_iters);
    let result = maximize_margin(kind, provider.as_ref(), &config)?;

    let echo = json!({
        "command": "optimize",
        "state": args.state,
        "inequality": kind,
        "restarts": args.restarts,
        "seed": args.seed,
        "max_iters": args.max_iters,
    });
    let result_value: Value =
        serde_json::from_str(&result.to_json()).expect("search result wire is JSON");
    let path = out_path(out_dir, &args.out, "optimize.json");
    write_output(&path, &json_line(&json!({ "config": echo, "result": result_value })))?;
    println!(
        "{kind} on {}: margin {:.6} ({}), {} evaluations; wrote {}",
        args.state,
        result.margin,
        if result.violated { "violated" } else { "not violated" },
        result.evaluations,
        path.display()
    );
    Ok(())
}

fn run_sweep(out_dir: &Option<PathBuf>, args: &SweepArgs) -> anyhow::Result<()> {
    let kind = parse_kind(&args.inequality)?;
    if args.steps < 2 {
        return Err(Error::Parse("--steps must be at least 2".into()).into());
    }
    let config = search_config(args.restarts, args.seed, SearchConfig::default().max_iters);

    let echo = json!({
        "command": "sweep",
        "dim": args.dim,
        "inequality": kind,
        "phi_start": args.phi_start,
        "phi_end": args.phi_end,
        "steps": args.steps,
        "restarts": args.restarts,
        "seed": args.seed,
    });
    let mut csv = format!("# config = {echo}\nphi,best_margin,violated\n");
    let mut violated_count = 0usize;
    for k in 0..args.steps {
        let f = k as f64 / (args.steps - 1) as f64;
        let phi = args.phi_start + f * (args.phi_end - args.phi_start);
        let provider = WernerProvider::new(args.dim, phi)?;
        let result = maximize_margin(kind, &provider, &config)?;
        violated_count += usize::from(result.violated);
        csv.push_str(&format!(
            "{},{},{}\n",
            g17(phi),
            g17(result.margin),
            result.violated
        ));
    }
    let path = out_path(out_dir, &args.out, "sweep.csv");
    write_output(&path, &csv)?;
    println!(
        "swept {} points of the d={} Werner family under {kind}: {} violated; wrote {}",
        args.steps,
        args.dim,
        violated_count,
        path.display()
    );
    Ok(())
}

fn run_threshold(out_dir: &Option<PathBuf>, args: &ThresholdArgs) -> anyhow::Result<()> {
    let kind = parse_kind(&args.inequality)?;
    let config = search_config(args.restarts, args.seed, SearchConfig::default().max_iters);
    let threshold = threshold_phi(args.dim, kind, &config)?;

    let echo = json!({
        "command": "threshold",
        "dim": args.dim,
        "inequality": kind,
        "restarts": args.restarts,
        "seed": args.seed,
    });
    let path = out_path(out_dir, &args.out, "threshold.json");
    write_output(
        &path,
        &json_line(&json!({ "config": echo, "threshold": threshold })),
    )?;
    match threshold {
        Some(phi) => println!(
            "{kind} on the d={} Werner family: violated below phi = {phi:.6}; wrote {}",
            args.dim,
            path.display()
        ),
        None => println!(
            "{kind} on the d={} Werner family: no violation anywhere; wrote {}",
            args.dim,
            path.display()
        ),
    }
    Ok(())
}

fn run_sample(out_dir: &Option<PathBuf>, args: &SampleArgs) -> anyhow::Result<()> {
    let state = parse_state(&args.state)?;
    let provider = state.provider()?;
    let tuples = direction_tuples(&args.dirs, provider.party_dims().len(), args.seed)?;
    if args.format == OutputFormat::Csv && tuples.len() != 1 {
        return Err(Error::Parse(
            "CSV sample output holds one direction tuple; use --format json for several".into(),
        )
        .into());
    }
    let mut records: Vec<ShotRecord> = Vec::with_capacity(tuples.len());
    for (k, tuple) in tuples.iter().enumerate() {
        records.push(sample(
            provider.as_ref(),
            tuple,
            args.shots,
            args.seed ^ k as u64,
        )?);
    }

    let config = json!({
        "command": "sample",
        "state": args.state,
        "source": direction_source_json(&args.dirs),
        "shots": args.shots,
        "seed": args.seed,
        "format": args.format.name(),
    });
    let default_name = format!("sample.{}", args.format.name());
    let path = out_path(out_dir, &args.out, &default_name);
    let contents = match args.format {
        OutputFormat::Csv => format!("# config = {config}\n{}", records[0].to_csv()),
        OutputFormat::Json => {
            let wires: Vec<Value> = records
                .iter()
                .map(|r| serde_json::from_str(&r.to_json()).expect("record wire is JSON"))
                .collect();
            json_line(&json!({ "config": config, "records": wires }))
        }
    };
    write_output(&path, &contents)?;
    println!(
        "drew {} shot(s) at {} direction tuple(s) from {}; wrote {}",
        args.shots,
        records.len(),
        args.state,
        path.display()
    );
    Ok(())
}

/// Read one input file as tomogram tables, accepting tomogram JSON/CSV and
/// shot-record JSON/CSV (records enter as frequency tables).
fn load_tables(path: &Path) -> anyhow::Result<Vec<Tomogram>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let is_json = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("json"))
        .unwrap_or(false);
    if is_json {
        // Accept bare tomograms and shot records as well as the wrapped
        // arrays this tool's own tomogram/sample subcommands write.
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        if let Some(items) = value.get("tomograms").and_then(Value::as_array) {
            return items
                .iter()
                .map(|v| Ok(Tomogram::from_json(&v.to_string())?))
                .collect();
        }
        if let Some(items) = value.get("records").and_then(Value::as_array) {
            return items
                .iter()
                .map(|v| Ok(empirical_tomogram(&ShotRecord::from_json(&v.to_string())?)?))
                .collect();
        }
        if let Ok(t) = Tomogram::from_json(&text) {
            return Ok(vec![t]);
        }
        let record = ShotRecord::from_json(&text)
            .map_err(|e| Error::Parse(format!("{}: not a tomogram or shot record: {e}", path.display())))?;
        return Ok(vec![empirical_tomogram(&record)?]);
    }
    let has_tomogram_header = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.starts_with("theta1"))
        .unwrap_or(false);
    if has_tomogram_header {
        return Ok(tomograms_from_csv(&text)?);
    }
    let record = ShotRecord::from_csv(&text)
        .map_err(|e| Error::Parse(format!("{}: not a tomogram or shot record: {e}", path.display())))?;
    Ok(vec![empirical_tomogram(&record)?])
}

fn run_reconstruct(out_dir: &Option<PathBuf>, args: &ReconstructArgs) -> anyhow::Result<()> {
    let mut tables = Vec::new();
    for path in &args.input {
        tables.extend(load_tables(path)?);
    }
    let recon = reconstruct(&tables, args.dim)?;

    let echo = json!({
        "command": "reconstruct",
        "dim": args.dim,
        "input": args.input.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    let state_value: Value =
        serde_json::from_str(&recon.state.to_json()).expect("density matrix wire is JSON");
    let path = out_path(out_dir, &args.out, "reconstruct.json");
    write_output(
        &path,
        &json_line(&json!({
            "config": echo,
            "state": state_value,
            "clipped": recon.clipped,
            "residual": recon.residual,
        })),
    )?;
    println!(
        "reconstructed d={} state from {} table(s), residual {:.3e}{}; wrote {}",
        args.dim,
        tables.len(),
        recon.residual,
        if recon.clipped { ", clipped onto the state space" } else { "" },
        path.display()
    );
    Ok(())
}

/// 17-significant-digit float formatting, matching the library's CSV codec.
fn g17(x: f64) -> String {
    format!("{x:.16e}")
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Tomogram(args) => run_tomogram(&cli.out_dir, args),
        Command::Optimize(args) => run_optimize(&cli.out_dir, args),
        Command::Sweep(args) => run_sweep(&cli.out_dir, args),
        Command::Threshold(args) => run_threshold(&cli.out_dir, args),
        Command::Sample(args) => run_sample(&cli.out_dir, args),
        Command::Reconstruct(args) => run_reconstruct(&cli.out_dir, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = match err.downcast_ref::<Error>() {
                Some(Error::Invariant(_)) | Some(Error::IllPosed(_)) => 3,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}
