//! Command-line driver for the spectral mixing diagnostics toolkit.
//!
//! Exit codes: 0 success, 2 usage error, 3 input parse error,
//! 4 numerical or constraint failure.

mod config;
mod rate_desc;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mixnorm_core::classification::{
    classify_recurrence, energy_fraction_csv, energy_fraction_series,
};
use mixnorm_core::dynamics::{evolve, SystemSpec};
use mixnorm_core::error::Error as CoreError;
use mixnorm_core::io::{field_to_ndjson, read_series_from_path, write_series_to_path};
use mixnorm_core::rates::{
    cross_q_comparison, fit_decay_rate, mixnorm_series, series_to_csv, RateFunction, TimeSeriesReal,
};
use mixnorm_core::spectral::{FourierField, SpectrumSeries, Symmetry, WavenumberSet, Wavevector};
use mixnorm_core::witness::{
    duality_witness_at, shell_decomposition, sign_state_witness, transient_witness, verify_witness,
    WitnessObservable,
};

use config::{parse_f64_list, parse_i128_list, ExperimentConfig};
use rate_desc::build_rate;

#[derive(Parser)]
#[command(
    name = "mixnorm",
    version,
    about = "Spectral mixing diagnostics: simulate model dynamics, analyze mix-norm decay, construct witness observables"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one of the model systems and write its spectrum series as NDJSON
    Simulate(SimulateArgs),
    /// Analyze an NDJSON spectrum series
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Construct and verify witness observables on an NDJSON series
    #[command(subcommand)]
    Witness(WitnessCommand),
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON config mirroring these flags; explicit flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// baker | altered-baker | pulsed-diffusion | sine-flow
    #[arg(long)]
    system: Option<String>,
    /// Number of map steps
    #[arg(long)]
    steps: Option<u64>,
    /// Number of flow periods (sine flow; synonym for --steps)
    #[arg(long)]
    periods: Option<u64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Diffusivity (sine flow)
    #[arg(long = "D")]
    diffusivity: Option<f64>,
    /// Grid size per axis, a power of two (sine flow)
    #[arg(long = "N")]
    grid_size: Option<usize>,
    /// Strang substeps per half period (sine flow)
    #[arg(long)]
    nsub: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// "cos1" or a mode list "k:re[:im];..." (1-D) / "k1,k2:re[:im];..." (2-D)
    #[arg(long)]
    init: Option<String>,
    /// q values for the final mix-norm summary
    #[arg(long)]
    q: Option<String>,
    /// Output NDJSON path
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Mix-norm series for each q, as CSV columns
    Norms(NormsArgs),
    /// q-recurrence vs q-transience classification, as a JSON report
    Classify(ClassifyArgs),
    /// Decay-rate fits and cross-q norm comparisons, as a JSON report
    Rates(RatesArgs),
}

#[derive(Args)]
struct NormsArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "0.5,1,2")]
    q: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    /// JSON config mirroring these flags; explicit flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    q: f64,
    /// Ball radii to test [default: 1,2,4,8,16,32,64]
    #[arg(long)]
    radii: Option<String>,
    /// [default: 0.25]
    #[arg(long)]
    tail_fraction: Option<f64>,
    /// [default: 1e-3]
    #[arg(long)]
    threshold: Option<f64>,
    /// JSON report path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also dump the per-radius energy-fraction series as CSV
    #[arg(long)]
    ratios_csv: Option<PathBuf>,
}

#[derive(Args)]
struct RatesArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "0.5,1,2")]
    q: String,
    /// Fit window "t_lo:t_hi"; default skips the first quarter of samples
    #[arg(long)]
    window: Option<String>,
    #[arg(long, default_value_t = 0.25)]
    tail_fraction: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum WitnessCommand {
    /// Observables achieving the mix-norm at chosen times (envelope data)
    Duality(DualityArgs),
    /// Sign-state observable on a finite mode set
    Signstate(SignstateArgs),
    /// Shell-supported observable tracking a rate h = o(mix-norm)
    Transient(TransientArgs),
}

#[derive(Args)]
struct DualityArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    q: f64,
    /// Comma-separated anchor times
    #[arg(long, default_value = "0")]
    t0: String,
    #[arg(long)]
    out_prefix: PathBuf,
}

#[derive(Args)]
struct SignstateArgs {
    /// JSON config mirroring these flags; explicit flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    q: f64,
    /// Explicit modes "k[,k2];..." (alternative to --ball)
    #[arg(long)]
    modes: Option<String>,
    /// Ball radius |k| <= R (alternative to --modes)
    #[arg(long)]
    ball: Option<i128>,
    /// Energy lower-bound constant
    #[arg(long, default_value_t = 0.3)]
    c: f64,
    /// Rate descriptor (see witness transient --help) [default: mixnorm]
    #[arg(long)]
    h: Option<String>,
    #[arg(long)]
    out_prefix: PathBuf,
}

#[derive(Args)]
struct TransientArgs {
    /// JSON config mirroring these flags; explicit flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    q: f64,
    /// Rate descriptor: mixnorm | pow:<p> | exp:<r> | table:<path>,
    /// optionally suffixed *geom for the geometric mean with the mix-norm
    #[arg(long)]
    h: Option<String>,
    /// [default: 0.25]
    #[arg(long)]
    delta: Option<f64>,
    /// Constant with h <= c_bound * mixnorm on the horizon
    #[arg(long, default_value_t = 1.0)]
    c_bound: f64,
    #[arg(long)]
    out_prefix: PathBuf,
}

struct Failure {
    code: u8,
    msg: String,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        msg: msg.into(),
    }
}

fn from_core(e: CoreError) -> Failure {
    let code = match &e {
        CoreError::ParseError { .. } | CoreError::Io(_) => 3,
        _ => 4,
    };
    Failure {
        code,
        msg: e.to_string(),
    }
}

fn numeric(msg: impl Into<String>) -> Failure {
    Failure {
        code: 4,
        msg: msg.into(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Analyze(AnalyzeCommand::Norms(args)) => cmd_norms(args),
        Command::Analyze(AnalyzeCommand::Classify(args)) => cmd_classify(args),
        Command::Analyze(AnalyzeCommand::Rates(args)) => cmd_rates(args),
        Command::Witness(WitnessCommand::Duality(args)) => cmd_duality(args),
        Command::Witness(WitnessCommand::Signstate(args)) => cmd_signstate(args),
        Command::Witness(WitnessCommand::Transient(args)) => cmd_transient(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn load_input(path: &Path) -> Result<SpectrumSeries, Failure> {
    read_series_from_path(path).map_err(from_core)
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| numeric(format!("cannot write {}: {e}", path.display())))
}

fn parse_init(desc: &str, spec: &SystemSpec) -> Result<FourierField, Failure> {
    if desc == "cos1" {
        return Ok(spec.cos1_initial_condition());
    }
    let sine = matches!(spec, SystemSpec::SineFlow { .. });
    let (dims, symmetry) = if sine {
        (2, Symmetry::FullLattice)
    } else {
        (1, Symmetry::OneSided)
    };
    let mut entries = Vec::new();
    for item in desc.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let mut parts = item.split(':');
        let k_str = parts.next().ok_or_else(|| usage("empty init entry"))?;
        let re: f64 = parts
            .next()
            .ok_or_else(|| usage(format!("init entry {item:?} needs k:re")))?
            .trim()
            .parse()
            .map_err(|e| usage(format!("bad amplitude in {item:?}: {e}")))?;
        let im: f64 = match parts.next() {
            Some(s) => s
                .trim()
                .parse()
                .map_err(|e| usage(format!("bad amplitude in {item:?}: {e}")))?,
            None => 0.0,
        };
        let comps = parse_i128_list(k_str).map_err(usage)?;
        let k = match (dims, comps.as_slice()) {
            (1, [k1]) => Wavevector::d1(*k1),
            (2, [k1, k2]) => Wavevector::d2(*k1, *k2),
            _ => {
                return Err(usage(format!(
                    "init entry {item:?} has {} components, expected {dims}",
                    comps.len()
                )))
            }
        };
        entries.push((k, num_complex::Complex64::new(re, im)));
    }
    FourierField::new(dims, symmetry, entries).map_err(from_core)
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Failure> {
    let cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path).map_err(usage)?,
        None => ExperimentConfig::default(),
    };
    let system = args
        .system
        .or(cfg.system)
        .ok_or_else(|| usage("--system is required"))?;
    let steps = args
        .steps
        .or(args.periods)
        .or(cfg.steps)
        .or(cfg.periods)
        .ok_or_else(|| usage("--steps (or --periods) is required"))?;
    let out = args
        .out
        .or(cfg.out.map(PathBuf::from))
        .ok_or_else(|| usage("--out is required"))?;
    let q_list = parse_f64_list(&args.q.or(cfg.q).unwrap_or_else(|| "0.5,1,2".to_string()))
        .map_err(usage)?;

    let need = |v: Option<f64>, flag: &str| {
        v.ok_or_else(|| usage(format!("--{flag} is required for system {system}")))
    };
    let spec = match system.as_str() {
        "baker" => SystemSpec::Baker,
        "altered-baker" | "alteredbaker" | "altered_baker" => SystemSpec::AlteredBaker {
            a: need(args.a.or(cfg.a), "a")?,
            b: need(args.b.or(cfg.b), "b")?,
        },
        "pulsed-diffusion" | "pulsed" | "pulsed_diffusion" => SystemSpec::PulsedDiffusion {
            a: need(args.a.or(cfg.a), "a")?,
            b: need(args.b.or(cfg.b), "b")?,
            kappa: need(args.kappa.or(cfg.kappa), "kappa")?,
        },
        "sine-flow" | "sineflow" | "sine_flow" => SystemSpec::SineFlow {
            diffusivity: need(args.diffusivity.or(cfg.diffusivity), "D")?,
            grid_size: args.grid_size.or(cfg.grid_size).unwrap_or(128),
            substeps: args.nsub.or(cfg.nsub).unwrap_or(8),
            seed: args.seed.or(cfg.seed).unwrap_or(0),
        },
        other => return Err(usage(format!("unknown system {other:?}"))),
    };
    let init = args.init.or(cfg.init).unwrap_or_else(|| "cos1".to_string());
    let f0 = parse_init(&init, &spec)?;
    let series = evolve(&spec, &f0, steps).map_err(from_core)?;
    write_series_to_path(&series, &out).map_err(from_core)?;

    let last = series.samples().last().expect("nonempty series");
    let norms: Vec<String> = q_list
        .iter()
        .map(|q| format!("H^-{q}: {:.6e}", last.1.sobolev_norm(-q)))
        .collect();
    println!(
        "wrote {} ({} samples, system {}); final mix-norms: {}",
        out.display(),
        series.len(),
        spec.name(),
        norms.join(", ")
    );
    Ok(())
}

fn cmd_norms(args: NormsArgs) -> Result<(), Failure> {
    let series = load_input(&args.input)?;
    let q_list = parse_f64_list(&args.q).map_err(usage)?;
    let columns: Vec<TimeSeriesReal> = q_list.iter().map(|q| mixnorm_series(&series, *q)).collect();
    for (q, col) in q_list.iter().zip(&columns) {
        if col.min_value() == 0.0 {
            eprintln!("warning: zero H^-{q} mix-norm encountered (degenerate sample)");
        }
    }
    let headers: Vec<String> = q_list.iter().map(|q| format!("q{q}")).collect();
    let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
    let col_refs: Vec<&TimeSeriesReal> = columns.iter().collect();
    let csv = series_to_csv(&header_refs, &col_refs).map_err(from_core)?;
    write_file(&args.out, &csv)?;
    println!(
        "wrote {} ({} samples, {} q columns)",
        args.out.display(),
        series.len(),
        q_list.len()
    );
    Ok(())
}

fn load_config(path: &Option<PathBuf>) -> Result<ExperimentConfig, Failure> {
    match path {
        Some(p) => ExperimentConfig::load(p).map_err(usage),
        None => Ok(ExperimentConfig::default()),
    }
}

fn cmd_classify(args: ClassifyArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.config)?;
    let series = load_input(&args.input)?;
    let radii_desc = args
        .radii
        .or(cfg.radii)
        .unwrap_or_else(|| "1,2,4,8,16,32,64".to_string());
    let radii = parse_i128_list(&radii_desc).map_err(usage)?;
    let tail_fraction = args.tail_fraction.or(cfg.tail_fraction).unwrap_or(0.25);
    let threshold = args.threshold.or(cfg.threshold).unwrap_or(1e-3);
    let report = classify_recurrence(&series, args.q, &radii, tail_fraction, threshold)
        .map_err(from_core)?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| numeric(format!("report serialization: {e}")))?;
    match &args.out {
        Some(path) => write_file(path, &json)?,
        None => println!("{json}"),
    }
    if let Some(csv_path) = &args.ratios_csv {
        let mut csv = String::new();
        for &radius in &radii {
            let ratios = energy_fraction_series(&series, &WavenumberSet::ball(radius), args.q)
                .map_err(from_core)?;
            let block = energy_fraction_csv(&ratios, radius, args.q);
            if csv.is_empty() {
                csv.push_str(&block);
            } else {
                csv.push_str(block.split_once('\n').map(|(_, rest)| rest).unwrap_or(""));
            }
        }
        write_file(csv_path, &csv)?;
    }
    println!("verdict: {:?} (q = {})", report.verdict, args.q);
    Ok(())
}

fn cmd_rates(args: RatesArgs) -> Result<(), Failure> {
    let series = load_input(&args.input)?;
    let q_list = parse_f64_list(&args.q).map_err(usage)?;
    let window = match &args.window {
        Some(w) => {
            let (lo, hi) = w
                .split_once(':')
                .ok_or_else(|| usage("--window expects t_lo:t_hi"))?;
            (
                lo.parse::<f64>()
                    .map_err(|e| usage(format!("bad window: {e}")))?,
                hi.parse::<f64>()
                    .map_err(|e| usage(format!("bad window: {e}")))?,
            )
        }
        None => {
            let times: Vec<f64> = series.times().collect();
            let start = times[times.len() / 4];
            (start, *times.last().expect("nonempty"))
        }
    };
    let mut fits = Vec::new();
    for &q in &q_list {
        let norms = mixnorm_series(&series, q);
        let fit = fit_decay_rate(&norms, window).map_err(from_core)?;
        fits.push(serde_json::json!({
            "q": q,
            "lambda": fit.lambda,
            "r_squared": fit.r_squared,
            "points": fit.points,
        }));
    }
    let mut cross = Vec::new();
    for i in 0..q_list.len() {
        for j in (i + 1)..q_list.len() {
            let (q, q_prime) = (q_list[i].min(q_list[j]), q_list[i].max(q_list[j]));
            let cmp =
                cross_q_comparison(&series, q, q_prime, args.tail_fraction).map_err(from_core)?;
            cross.push(serde_json::json!({
                "q": cmp.q,
                "q_prime": cmp.q_prime,
                "tail_max_ratio": cmp.tail_max_ratio,
                "monotone_ok": cmp.monotone_ok,
            }));
        }
    }
    let report = serde_json::json!({
        "window": { "t_lo": window.0, "t_hi": window.1 },
        "fits": fits,
        "cross_q": cross,
    });
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| numeric(format!("report serialization: {e}")))?;
    match &args.out {
        Some(path) => write_file(path, &json)?,
        None => println!("{json}"),
    }
    Ok(())
}

fn write_witness_files(
    prefix: &Path,
    tag: &str,
    witness: &WitnessObservable,
    series: &SpectrumSeries,
    q: f64,
    h: &RateFunction,
) -> Result<(), Failure> {
    let stem = |ext: &str| -> PathBuf {
        let mut name = prefix.as_os_str().to_owned();
        if !tag.is_empty() {
            name.push("_");
            name.push(tag);
        }
        name.push(ext);
        PathBuf::from(name)
    };
    let ndjson = field_to_ndjson(&witness.g, &format!("witness:{tag}")).map_err(from_core)?;
    write_file(&stem(".witness.ndjson"), &ndjson)?;
    let meta = serde_json::to_string_pretty(&witness.metadata())
        .map_err(|e| numeric(format!("metadata serialization: {e}")))?;
    write_file(&stem(".witness.json"), &meta)?;
    let verification = verify_witness(series, witness, q, h).map_err(from_core)?;
    write_file(&stem(".verify.csv"), &verification.to_csv())?;
    if !verification.all_selected_pass {
        return Err(numeric(format!(
            "witness bound failed verification at a selected time ({})",
            stem(".verify.csv").display()
        )));
    }
    Ok(())
}

fn cmd_duality(args: DualityArgs) -> Result<(), Failure> {
    let series = load_input(&args.input)?;
    let t0_list = parse_f64_list(&args.t0).map_err(usage)?;
    let mix = mixnorm_series(&series, args.q);
    let h = RateFunction::sampled(mix.clone()).map_err(from_core)?;
    let mut corr_columns = Vec::new();
    for &t0 in &t0_list {
        let w = duality_witness_at(&series, t0, args.q).map_err(from_core)?;
        let tag = format!("t0_{t0}");
        write_witness_files(&args.out_prefix, &tag, &w, &series, args.q, &h)?;
        let corr = TimeSeriesReal::new(
            series
                .samples()
                .iter()
                .map(|(t, f)| Ok((*t, f.inner_product(&w.g).map_err(from_core)?.norm())))
                .collect::<Result<Vec<_>, Failure>>()?,
        )
        .map_err(from_core)?;
        corr_columns.push(corr);
    }
    // envelope dataset: every correlation curve under the mix-norm curve
    let mut headers = vec!["mixnorm".to_string()];
    headers.extend(t0_list.iter().map(|t0| format!("corr_t0_{t0}")));
    let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
    let mut cols: Vec<&TimeSeriesReal> = vec![&mix];
    cols.extend(corr_columns.iter());
    let csv = series_to_csv(&header_refs, &cols).map_err(from_core)?;
    let mut envelope = args.out_prefix.as_os_str().to_owned();
    envelope.push(".envelope.csv");
    let envelope = PathBuf::from(envelope);
    write_file(&envelope, &csv)?;
    println!(
        "wrote {} duality witnesses and {}",
        t0_list.len(),
        envelope.display()
    );
    Ok(())
}

fn cmd_signstate(args: SignstateArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.config)?;
    let series = load_input(&args.input)?;
    let h_desc = args
        .h
        .clone()
        .or(cfg.h)
        .unwrap_or_else(|| "mixnorm".to_string());
    let set = match (&args.modes, args.ball) {
        (Some(_), Some(_)) => return Err(usage("pass either --modes or --ball, not both")),
        (Some(modes), None) => {
            let mut parsed = Vec::new();
            for item in modes.split(';').map(str::trim).filter(|s| !s.is_empty()) {
                let comps = parse_i128_list(item).map_err(usage)?;
                let k = match comps.as_slice() {
                    [k1] => Wavevector::d1(*k1),
                    [k1, k2] => Wavevector::d2(*k1, *k2),
                    _ => return Err(usage(format!("bad mode {item:?}"))),
                };
                parsed.push(k);
            }
            WavenumberSet::explicit(parsed)
        }
        (None, Some(radius)) => WavenumberSet::ball(radius),
        (None, None) => return Err(usage("--modes or --ball is required")),
    };
    let h = build_rate(&h_desc, &series, args.q).map_err(usage)?;
    let w = sign_state_witness(&series, &set, args.q, &h, args.c).map_err(from_core)?;
    write_witness_files(&args.out_prefix, "signstate", &w, &series, args.q, &h)?;
    println!(
        "sign-state witness: {} selected times out of {}",
        w.selected_times.len(),
        series.len()
    );
    Ok(())
}

fn cmd_transient(args: TransientArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.config)?;
    let series = load_input(&args.input)?;
    let h_desc = args
        .h
        .clone()
        .or(cfg.h)
        .ok_or_else(|| usage("--h is required"))?;
    let delta = args.delta.or(cfg.delta).unwrap_or(0.25);
    let h = build_rate(&h_desc, &series, args.q).map_err(usage)?;
    let shells =
        shell_decomposition(&series, args.q, &h, delta, args.c_bound).map_err(from_core)?;
    let w = transient_witness(&series, &shells, args.q, &h, delta).map_err(from_core)?;
    write_witness_files(&args.out_prefix, "transient", &w, &series, args.q, &h)?;
    let mut shells_path = args.out_prefix.as_os_str().to_owned();
    shells_path.push("_transient.shells.json");
    let shells_json = serde_json::to_string_pretty(&shells)
        .map_err(|e| numeric(format!("shell serialization: {e}")))?;
    write_file(&PathBuf::from(shells_path), &shells_json)?;
    println!(
        "transient witness: {} shells, {} selected times",
        shells.entries.len(),
        w.selected_times.len()
    );
    Ok(())
}
