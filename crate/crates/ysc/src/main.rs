//! Command-line front end: code inspection, single-shot decoding, Monte
//! Carlo sweeps, hashing-bound tables and threshold fits.

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ysc::analysis::{
    collapse_curve, fit_decay, fit_threshold, jackknife_pc, FitError, FitOptions, FitPoint,
};
use ysc::code::{CodeVariant, LogicalClass, StabilizerKind, SurfaceCode};
use ysc::exact::{decode_exact, CosetProbabilities, ExactError};
use ysc::mps::{decode_mps, AverageMode, LogValue, MpsError, MpsOptions};
use ysc::noise::{channel_from_bias, hashing_rate_curve, Bias, NoiseError};
use ysc::sim::{merge_records, read_records, run_batch, DecoderChoice, SimError, SweepConfig};
use ysc::pauli::PauliOperator;
use ysc::Syndrome;

const LONG_VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (schema v1)");

#[derive(Parser)]
#[command(
    name = "ysc",
    version = LONG_VERSION,
    about = "Surface code tailored for biased Pauli noise: tensor-network decoding, Monte Carlo sweeps and threshold fits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the stabilizers and logical operators of a code instance.
    Code(CodeArgs),
    /// Decode a single error or syndrome and print coset probabilities.
    DecodeOne(DecodeOneArgs),
    /// Run a Monte Carlo sweep over (d, eta, p, chi).
    Run(RunArgs),
    /// Fit threshold or decay models to sweep output.
    Fit(FitArgs),
    /// Print hashing-bound error rates for given biases and rates.
    Hashing(HashingArgs),
}

#[derive(Args)]
struct CodeArgs {
    /// Code distance.
    #[arg(long)]
    d: usize,
    /// Code variant: tailored (Y plaquettes) or standard (Z plaquettes).
    #[arg(long, default_value = "tailored", value_parser = parse_variant)]
    variant: CodeVariant,
}

#[derive(Args)]
struct DecodeOneArgs {
    #[arg(long)]
    d: usize,
    /// Total single-qubit error probability.
    #[arg(long)]
    p: f64,
    /// Noise bias (a decimal or "inf").
    #[arg(long)]
    eta: Bias,
    /// Bond dimension for the MPS decoder.
    #[arg(long, default_value_t = 16)]
    chi: usize,
    /// Error as a Pauli string over {I,X,Y,Z} (length n).
    #[arg(long, conflicts_with = "syndrome")]
    error: Option<String>,
    /// Syndrome as a 0/1 string (length n-1).
    #[arg(long, required_unless_present = "error")]
    syndrome: Option<String>,
    /// Use the exhaustive exact decoder (d <= 3) instead of the MPS.
    #[arg(long)]
    exact: bool,
    /// How the two directional contractions combine.
    #[arg(long, default_value = "arithmetic", value_parser = parse_average)]
    average: AverageMode,
    #[arg(long, default_value = "tailored", value_parser = parse_variant)]
    variant: CodeVariant,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file with the same keys as the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Code distances, comma separated.
    #[arg(long, value_delimiter = ',')]
    d_list: Option<Vec<usize>>,
    /// Biases, comma separated (decimals or "inf").
    #[arg(long, value_delimiter = ',')]
    eta_list: Option<Vec<Bias>>,
    /// Error rates, comma separated; omitted: a per-bias grid spanning the
    /// hashing bound.
    #[arg(long, value_delimiter = ',')]
    p_list: Option<Vec<f64>>,
    /// Number of points in the automatic p grid.
    #[arg(long)]
    p_points: Option<usize>,
    /// Half-width (relative) of the automatic p grid.
    #[arg(long)]
    p_span: Option<f64>,
    /// Bond dimensions, comma separated.
    #[arg(long, value_delimiter = ',')]
    chi_list: Option<Vec<usize>>,
    /// Trials per grid point.
    #[arg(long)]
    trials: Option<u64>,
    /// Sweep seed; every trial derives its generator from (seed, index).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: YSC_THREADS or all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_parser = parse_decoder)]
    decoder: Option<DecoderChoice>,
    #[arg(long, value_parser = parse_variant)]
    variant: Option<CodeVariant>,
    /// Trials per checkpoint record.
    #[arg(long)]
    checkpoint_every: Option<u64>,
    /// JSON-lines output file for checkpoint records.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Continue an interrupted sweep from its output file.
    #[arg(long)]
    resume: bool,
    /// Suppress progress reporting on stderr.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct FitArgs {
    /// JSON-lines input (as produced by `run`).
    #[arg(long)]
    input: PathBuf,
    /// Model: "quadratic" (threshold fit) or "decay".
    #[arg(long, default_value = "quadratic")]
    model: String,
    /// Fit window half-width around the crossing estimate.
    #[arg(long, default_value_t = 0.05)]
    window: f64,
    /// Keep only records at this bias.
    #[arg(long)]
    eta: Option<Bias>,
    /// Keep only records at this bond dimension.
    #[arg(long)]
    chi: Option<usize>,
    /// Error rate selecting the decay-fit slice.
    #[arg(long)]
    p: Option<f64>,
    /// Write the data collapse as CSV (d, p, x, f, f_fit).
    #[arg(long)]
    collapse_csv: Option<PathBuf>,
    /// Skip jackknife resampling.
    #[arg(long)]
    no_jackknife: bool,
}

#[derive(Args)]
struct HashingArgs {
    /// Biases, comma separated (decimals or "inf").
    #[arg(long, visible_alias = "eta", value_delimiter = ',')]
    eta_list: Vec<Bias>,
    /// Coding rates, comma separated.
    #[arg(long, visible_alias = "rate", value_delimiter = ',', default_value = "0")]
    rate_list: Vec<f64>,
}

fn parse_variant(s: &str) -> Result<CodeVariant, String> {
    match s {
        "tailored" => Ok(CodeVariant::Tailored),
        "standard" => Ok(CodeVariant::Standard),
        _ => Err(format!("unknown variant {s:?} (tailored or standard)")),
    }
}

fn parse_decoder(s: &str) -> Result<DecoderChoice, String> {
    match s {
        "mps" => Ok(DecoderChoice::Mps),
        "exact" => Ok(DecoderChoice::Exact),
        _ => Err(format!("unknown decoder {s:?} (mps or exact)")),
    }
}

fn parse_average(s: &str) -> Result<AverageMode, String> {
    match s {
        "arithmetic" => Ok(AverageMode::Arithmetic),
        "geometric" => Ok(AverageMode::Geometric),
        _ => Err(format!("unknown average mode {s:?}")),
    }
}

/// Exit codes: 2 usage (from clap), 3 invalid config, 4 I/O, 5 compute.
enum CliError {
    Config(String),
    Io(String),
    Compute(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 3,
            CliError::Io(_) => 4,
            CliError::Compute(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Io(m) | CliError::Compute(m) => m,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Io(_) | SimError::Checkpoint { .. } => CliError::Io(e.to_string()),
            SimError::InvalidConfig(_) | SimError::Noise(_) | SimError::Code(_) => {
                CliError::Config(e.to_string())
            }
        }
    }
}

impl From<NoiseError> for CliError {
    fn from(e: NoiseError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        CliError::Compute(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Code(args) => cmd_code(args),
        Command::DecodeOne(args) => cmd_decode_one(args),
        Command::Run(args) => cmd_run(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Hashing(args) => cmd_hashing(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let payload = serde_json::json!({"error": e.message(), "code": e.code()});
            eprintln!("{payload}");
            ExitCode::from(e.code())
        }
    }
}

fn cmd_code(args: CodeArgs) -> Result<(), CliError> {
    let code = SurfaceCode::build(args.d, args.variant)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let variant = match args.variant {
        CodeVariant::Tailored => "tailored",
        CodeVariant::Standard => "standard",
    };
    println!("variant: {variant}");
    println!("distance: {}", code.d());
    println!("qubits: {}", code.n());
    println!("stabilizers: {}", code.num_stabilizers());
    for s in 0..code.num_stabilizers() {
        let kind = match code.stabilizer_kind(s) {
            StabilizerKind::Vertex => "vertex",
            StabilizerKind::Plaquette => "plaquette",
        };
        println!("  {s:3} {kind:9} {}", code.stabilizer(s));
    }
    println!("logical_x: {}", code.logical_x());
    println!("logical_y: {}", code.logical_y());
    Ok(())
}

fn log_value_json(v: LogValue) -> serde_json::Value {
    serde_json::json!({
        "sign": v.sign,
        "log_abs": if v.ln_abs.is_finite() { Some(v.ln_abs) } else { None },
    })
}

fn probs_json(probs: &CosetProbabilities) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for class in LogicalClass::ALL {
        let l = probs.log(class);
        map.insert(
            class.to_string(),
            if l.is_finite() {
                serde_json::json!(l)
            } else {
                serde_json::Value::Null
            },
        );
    }
    serde_json::Value::Object(map)
}

fn cmd_decode_one(args: DecodeOneArgs) -> Result<(), CliError> {
    let code = SurfaceCode::build(args.d, args.variant)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let ch = *channel_from_bias(args.p, args.eta)?.channel();

    let (syndrome, actual) = match (&args.error, &args.syndrome) {
        (Some(text), _) => {
            let error: PauliOperator = text
                .parse()
                .map_err(|e: ysc::pauli::PauliError| CliError::Config(e.to_string()))?;
            let s = code
                .syndrome(&error)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let residual = error.multiply(&code.pure_error(&s).unwrap()).unwrap();
            let actual = code.logical_class(&residual).unwrap();
            (s, Some(actual))
        }
        (None, Some(text)) => {
            let s: Syndrome = text
                .parse()
                .map_err(|e: ysc::code::CodeError| CliError::Config(e.to_string()))?;
            if s.len() != code.num_stabilizers() {
                return Err(CliError::Config(format!(
                    "syndrome has {} bits, code needs {}",
                    s.len(),
                    code.num_stabilizers()
                )));
            }
            (s, None)
        }
        (None, None) => unreachable!("clap enforces one input"),
    };

    let mut out = serde_json::Map::new();
    out.insert("d".into(), args.d.into());
    out.insert("eta".into(), args.eta.to_string().into());
    out.insert("p".into(), args.p.into());
    out.insert("syndrome".into(), syndrome.to_string().into());
    let class = if args.exact {
        let (class, probs) = decode_exact(&code, &ch, &syndrome).map_err(|e| match e {
            ExactError::DecoderFailure => CliError::Compute(e.to_string()),
            _ => CliError::Config(e.to_string()),
        })?;
        out.insert("decoder".into(), "exact".into());
        out.insert("log_probs".into(), probs_json(&probs));
        class
    } else {
        let decoded = decode_mps(
            &code,
            &ch,
            &syndrome,
            MpsOptions {
                chi: args.chi,
                average: args.average,
            },
        )
        .map_err(|e| match e {
            MpsError::DecoderFailure => CliError::Compute(e.to_string()),
            _ => CliError::Config(e.to_string()),
        })?;
        out.insert("decoder".into(), "mps".into());
        out.insert("chi".into(), args.chi.into());
        out.insert("log_probs".into(), probs_json(&decoded.probs));
        let per_class: Vec<serde_json::Value> = LogicalClass::ALL
            .iter()
            .map(|&c| {
                let d = decoded.diagnostics.per_class[c.index()];
                serde_json::json!({
                    "class": c.to_string(),
                    "column": log_value_json(d.column),
                    "row": log_value_json(d.row),
                    "averaged": log_value_json(d.averaged),
                })
            })
            .collect();
        out.insert(
            "diagnostics".into(),
            serde_json::json!({
                "per_direction": per_class,
                "max_bond": decoded.diagnostics.max_bond,
            }),
        );
        decoded.class
    };
    out.insert("class".into(), class.to_string().into());
    if let Some(actual) = actual {
        out.insert("actual_class".into(), actual.to_string().into());
        out.insert("success".into(), (class == actual).into());
    }
    println!("{}", serde_json::Value::Object(out));
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let mut cfg: SweepConfig = match &args.config {
        Some(path) => serde_json::from_reader(File::open(path)?)
            .map_err(|e| CliError::Config(format!("config file: {e}")))?,
        None => SweepConfig {
            d_list: Vec::new(),
            eta_list: Vec::new(),
            p_list: None,
            p_points: 7,
            p_span: 0.15,
            chi_list: Vec::new(),
            trials: 0,
            seed: 0,
            threads: None,
            decoder: DecoderChoice::Mps,
            variant: CodeVariant::Tailored,
            checkpoint_every: 1000,
            out: None,
            resume: false,
            progress: false,
        },
    };
    if let Some(v) = args.d_list {
        cfg.d_list = v;
    }
    if let Some(v) = args.eta_list {
        cfg.eta_list = v;
    }
    if let Some(v) = args.p_list {
        cfg.p_list = Some(v);
    }
    if let Some(v) = args.p_points {
        cfg.p_points = v;
    }
    if let Some(v) = args.p_span {
        cfg.p_span = v;
    }
    if let Some(v) = args.chi_list {
        cfg.chi_list = v;
    }
    if let Some(v) = args.trials {
        cfg.trials = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.threads {
        cfg.threads = Some(v);
    } else if cfg.threads.is_none() {
        if let Ok(env) = std::env::var("YSC_THREADS") {
            let t: usize = env
                .parse()
                .map_err(|_| CliError::Config(format!("YSC_THREADS={env} is not a number")))?;
            cfg.threads = Some(t);
        }
    }
    if let Some(v) = args.decoder {
        cfg.decoder = v;
    }
    if let Some(v) = args.variant {
        cfg.variant = v;
    }
    if let Some(v) = args.checkpoint_every {
        cfg.checkpoint_every = v;
    }
    if let Some(v) = args.out {
        cfg.out = Some(v);
    }
    cfg.resume |= args.resume;
    cfg.progress = !args.quiet;

    let estimates = run_batch(&cfg)?;
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    for e in &estimates {
        serde_json::to_writer(&mut w, e).map_err(|e| CliError::Io(e.to_string()))?;
        writeln!(w)?;
    }
    Ok(())
}

fn cmd_fit(args: FitArgs) -> Result<(), CliError> {
    let records = read_records(&args.input)?;
    let mut merged = merge_records(&records);
    if let Some(eta) = args.eta {
        merged.retain(|r| r.eta == eta);
    }
    if let Some(chi) = args.chi {
        merged.retain(|r| r.chi == chi);
    }
    if merged.is_empty() {
        return Err(CliError::Config("no records match the filters".into()));
    }
    let mut etas: Vec<u64> = merged.iter().map(|r| r.eta.value().to_bits()).collect();
    etas.dedup();
    etas.sort_unstable();
    etas.dedup();
    if etas.len() > 1 {
        return Err(CliError::Config(
            "records mix several biases; select one with --eta".into(),
        ));
    }
    let mut chis: Vec<usize> = merged.iter().map(|r| r.chi).collect();
    chis.sort_unstable();
    chis.dedup();
    if chis.len() > 1 {
        return Err(CliError::Config(
            "records mix several bond dimensions; select one with --chi".into(),
        ));
    }

    match args.model.as_str() {
        "quadratic" => {
            let points: Vec<FitPoint> = merged.iter().map(FitPoint::from_estimate).collect();
            let opts = FitOptions {
                window: Some(args.window),
                ..FitOptions::default()
            };
            let mut fit = fit_threshold(&points, &opts)?;
            if !args.no_jackknife {
                let mut ds: Vec<usize> = points.iter().map(|p| p.d).collect();
                ds.sort_unstable();
                ds.dedup();
                if ds.len() >= 3 {
                    fit.jackknife_stderr = Some(jackknife_pc(&points, &opts)?);
                }
            }
            if let Some(path) = &args.collapse_csv {
                let mut f = File::create(path)?;
                writeln!(f, "d,p,x,f,f_fit")?;
                for c in collapse_curve(&fit, &points) {
                    writeln!(f, "{},{},{},{},{}", c.d, c.p, c.x, c.f, c.f_fit)?;
                }
            }
            println!(
                "{}",
                serde_json::to_string(&fit).map_err(|e| CliError::Io(e.to_string()))?
            );
        }
        "decay" => {
            let p = args.p.ok_or_else(|| {
                CliError::Config("decay model needs --p to select the error rate".into())
            })?;
            let slice: Vec<(usize, f64, f64)> = merged
                .iter()
                .filter(|r| (r.p - p).abs() < 1e-9)
                .map(|r| (r.d, r.f, r.stderr.max(0.5 / r.trials as f64)))
                .collect();
            if slice.is_empty() {
                return Err(CliError::Config(format!("no records at p = {p}")));
            }
            let fit = fit_decay(&slice)?;
            println!(
                "{}",
                serde_json::to_string(&fit).map_err(|e| CliError::Io(e.to_string()))?
            );
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown model {other:?} (quadratic or decay)"
            )));
        }
    }
    Ok(())
}

fn cmd_hashing(args: HashingArgs) -> Result<(), CliError> {
    if args.eta_list.is_empty() {
        return Err(CliError::Config("eta list must be nonempty".into()));
    }
    let mut out = String::from("eta,rate,p\n");
    for &eta in &args.eta_list {
        for &rate in &args.rate_list {
            let p = hashing_rate_curve(eta, rate)?;
            out.push_str(&format!("{eta},{rate},{p}\n"));
        }
    }
    print!("{out}");
    Ok(())
}
