//! Command-line front end: every experiment behind a seeded subcommand with
//! CSV/JSON outputs and a config sidecar next to each result file.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage or parse error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use acam::analysis::{
    gamma_scaling_check, op_count, residual_stats, sense_margin, DensityConfig, OpCountMode,
    ResidualConfig,
};
use acam::array::{AcamArray, NoiseSpec};
use acam::device::DeviceConfig;
use acam::fewshot::{
    cosine_baseline_accuracy, load_embeddings, sweep_accuracy, synth_embeddings, FewshotConfig,
    SupportMode,
};
use acam::kernel::{fit, AcamPipelineConfig, AcamRegressor, KernelSpec, CALIBRATED_LAMBDA};
use acam::search::analog_hamming;
use acam::Error as AcamError;

#[derive(Parser)]
#[command(
    name = "acam",
    about = "Behavioral ACAM simulator experiments",
    version
)]
struct Cli {
    /// Seed for every stochastic operation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Device configuration file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for result files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Cap the worker thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a query CSV against a stored array CSV.
    Search(SearchArgs),
    /// Fit kernel ridge regression and run array-based predictions.
    Kernel(KernelArgs),
    /// Episodic few-shot accuracy sweep over window sizes and noise.
    Fewshot(FewshotArgs),
    /// Sense margin per bit density.
    Density(DensityArgs),
    /// Paired-error check of the kernel-width scaling law.
    Scaling,
    /// Residual statistics under window noise.
    Residuals(ResidualArgs),
    /// Operation counts per prediction.
    Opcount(OpcountArgs),
}

#[derive(Args)]
struct SearchArgs {
    /// Array CSV (`m,d,v_min,v_max` header, `lower:upper` cells).
    #[arg(long)]
    array: PathBuf,
    /// Query CSV: one comma-separated voltage vector per line.
    #[arg(long)]
    query: PathBuf,
}

#[derive(Args)]
struct KernelArgs {
    /// Two-column training CSV (x,y).
    #[arg(long)]
    train: PathBuf,
    /// Optional two-column evaluation CSV; defaults to the training set.
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    /// Ridge constant; the default is the cross-validated value.
    #[arg(long, default_value_t = CALIBRATED_LAMBDA)]
    lambda: f64,
    /// Center quantization bits.
    #[arg(long, default_value_t = 4)]
    bits: u8,
    /// Disable center quantization.
    #[arg(long)]
    no_quant: bool,
    /// Window perturbation std in volts.
    #[arg(long, default_value_t = 0.0)]
    noise_std: f64,
}

#[derive(Args)]
struct FewshotArgs {
    /// Embedding CSV (`label,e0,...`); mutually exclusive with --synth.
    #[arg(long, conflicts_with = "synth")]
    embeddings: Option<PathBuf>,
    /// Generate synthetic clustered embeddings instead.
    #[arg(long)]
    synth: bool,
    #[arg(long, default_value_t = 20)]
    classes: usize,
    #[arg(long, default_value_t = 20)]
    per_class: usize,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 0.1)]
    cluster_std: f64,
    #[arg(long, default_value_t = 5)]
    n_way: usize,
    #[arg(long, default_value_t = 5)]
    k_shot: usize,
    #[arg(long, default_value_t = 500)]
    episodes: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.4")]
    window_sizes: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.0")]
    noise_stds: Vec<f64>,
    #[arg(long, default_value_t = 4)]
    bits: u8,
    #[arg(long)]
    no_quant: bool,
    /// Store class centroids instead of per-sample rows.
    #[arg(long)]
    centroid: bool,
    /// Also report the cosine-similarity software baseline.
    #[arg(long)]
    cosine_baseline: bool,
}

#[derive(Args)]
struct DensityArgs {
    #[arg(long, default_value_t = 1)]
    bits_min: u8,
    #[arg(long, default_value_t = 6)]
    bits_max: u8,
}

#[derive(Args)]
struct ResidualArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.02,0.04,0.08")]
    noise_stds: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    repeats: u32,
    #[arg(long)]
    bits: Option<u8>,
}

#[derive(Args)]
struct OpcountArgs {
    #[arg(long, default_value_t = 64)]
    m: usize,
    #[arg(long, default_value_t = 64)]
    d: usize,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<AcamError> for Failure {
    fn from(e: AcamError) -> Self {
        let code = match &e {
            AcamError::Parse { .. }
            | AcamError::DimensionMismatch { .. }
            | AcamError::InvalidArgument(_)
            | AcamError::DegenerateInput(_) => 2,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // a pool may already exist when embedded in tests; that is fine
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let device = match &cli.config {
        Some(path) => Some(DeviceConfig::from_file(path)?),
        None => None,
    };
    match &cli.command {
        Command::Search(args) => cmd_search(args),
        Command::Kernel(args) => cmd_kernel(cli, device.as_ref(), args),
        Command::Fewshot(args) => cmd_fewshot(cli, device.as_ref(), args),
        Command::Density(args) => cmd_density(cli, device.as_ref(), args),
        Command::Scaling => cmd_scaling(cli),
        Command::Residuals(args) => cmd_residuals(cli, args),
        Command::Opcount(args) => cmd_opcount(args),
    }
}

fn ensure_out(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn write_sidecar(csv_path: &Path, config: &serde_json::Value) -> Result<(), Failure> {
    let sidecar = csv_path.with_extension("config.json");
    fs::write(
        &sidecar,
        serde_json::to_string_pretty(config).expect("config serializes"),
    )?;
    Ok(())
}

fn device_json(device: Option<&DeviceConfig>) -> serde_json::Value {
    match device {
        Some(d) => json!({
            "subthreshold_swing_mv": d.cell.subthreshold_swing_mv,
            "i_on": d.cell.i_on,
            "i_floor": d.cell.i_floor,
            "v_min": d.range.min(),
            "v_max": d.range.max(),
            "level_count": d.level_count,
            "sense_offset_v": d.sense_offset_v,
        }),
        None => json!("default"),
    }
}

// ---------------------------------------------------------------------------
// search
// ---------------------------------------------------------------------------

fn cmd_search(args: &SearchArgs) -> Result<(), Failure> {
    let array = AcamArray::read_csv(&args.array)?;
    let text = fs::read_to_string(&args.query)?;
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let query = parse_float_row(line, idx + 1)?;
        let result = analog_hamming(&array, &query)?;
        println!("{}", result.to_json());
    }
    Ok(())
}

fn parse_float_row(line: &str, lineno: usize) -> Result<Vec<f64>, Failure> {
    line.split(',')
        .map(|f| {
            f.trim().parse::<f64>().map_err(|_| {
                Failure::usage(format!(
                    "parse error at line {lineno}: not a number: {}",
                    f.trim()
                ))
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// kernel
// ---------------------------------------------------------------------------

fn read_xy_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>), Failure> {
    let text = fs::read_to_string(path)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let t = line.trim();
        if t.is_empty() || (lineno == 1 && t == "x,y") {
            continue;
        }
        let (x, y) = t.split_once(',').ok_or_else(|| {
            Failure::usage(format!("parse error at line {lineno}: expected `x,y`"))
        })?;
        let parse = |v: &str| {
            v.trim().parse::<f64>().map_err(|_| {
                Failure::usage(format!(
                    "parse error at line {lineno}: not a number: {}",
                    v.trim()
                ))
            })
        };
        xs.push(parse(x)?);
        ys.push(parse(y)?);
    }
    if xs.is_empty() {
        return Err(Failure::usage(format!("{}: no data rows", path.display())));
    }
    Ok((xs, ys))
}

fn cmd_kernel(cli: &Cli, device: Option<&DeviceConfig>, args: &KernelArgs) -> Result<(), Failure> {
    ensure_out(&cli.out)?;
    let (train_x, train_y) = read_xy_csv(&args.train)?;
    let (test_x, test_y) = match &args.test {
        Some(p) => read_xy_csv(p)?,
        None => (train_x.clone(), train_y.clone()),
    };
    let points: Vec<Vec<f64>> = train_x.iter().map(|&x| vec![x]).collect();
    let spec = KernelSpec::acam_surrogate(args.gamma)?;
    let model = fit(&points, &train_y, spec, args.lambda)?;
    let quant_bits = if args.no_quant { None } else { Some(args.bits) };
    let pipeline = AcamPipelineConfig {
        quant_bits,
        noise: NoiseSpec::new(0.0, args.noise_std, cli.seed)?,
        range: None,
    };
    let regressor = AcamRegressor::new(&model, &pipeline)?;

    let mut predictions = String::from("x,y_pred,y_ref\n");
    let mut sse = 0.0;
    for (&x, &y_ref) in test_x.iter().zip(&test_y) {
        let p = regressor.predict(&[x])?;
        sse += (p - y_ref) * (p - y_ref);
        predictions.push_str(&format!("{x},{p},{y_ref}\n"));
    }
    let mse = sse / test_x.len() as f64;

    let pred_path = cli.out.join("kernel_predictions.csv");
    fs::write(&pred_path, predictions)?;
    let summary = json!({
        "gamma": args.gamma,
        "lambda": args.lambda,
        "quant_bits": quant_bits,
        "noise_std": args.noise_std,
        "seed": cli.seed,
        "n_train": train_x.len(),
        "n_test": test_x.len(),
        "mse": mse,
    });
    fs::write(
        cli.out.join("kernel_summary.json"),
        serde_json::to_string_pretty(&summary).expect("summary serializes"),
    )?;
    fs::write(cli.out.join("kernel_model.json"), model.to_json())?;
    write_sidecar(
        &pred_path,
        &json!({
            "command": "kernel",
            "train": args.train.display().to_string(),
            "test": args.test.as_ref().map(|p| p.display().to_string()),
            "device": device_json(device),
            "summary": summary,
        }),
    )?;
    println!("mse {mse}");
    Ok(())
}

// ---------------------------------------------------------------------------
// fewshot
// ---------------------------------------------------------------------------

fn cmd_fewshot(
    cli: &Cli,
    device: Option<&DeviceConfig>,
    args: &FewshotArgs,
) -> Result<(), Failure> {
    ensure_out(&cli.out)?;
    let embed_range = device.map(|d| d.range).unwrap_or_default();
    let table = match (&args.embeddings, args.synth) {
        (Some(path), _) => load_embeddings(path)?,
        (None, true) => synth_embeddings(
            args.classes,
            args.per_class,
            args.dim,
            args.cluster_std,
            cli.seed,
            &embed_range,
        )?,
        (None, false) => return Err(Failure::usage("need either --embeddings <file> or --synth")),
    };
    let base = FewshotConfig {
        quant_bits: if args.no_quant { None } else { Some(args.bits) },
        embed_range,
        mode: if args.centroid {
            SupportMode::Centroid
        } else {
            SupportMode::PerSample
        },
        ..FewshotConfig::default()
    };
    let cells = sweep_accuracy(
        &table,
        args.n_way,
        args.k_shot,
        args.episodes,
        &args.window_sizes,
        &args.noise_stds,
        cli.seed,
        &base,
    )?;

    let mut csv = String::from("window_size,noise_std,accuracy,n_episodes\n");
    for c in &cells {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            c.window_size, c.noise_std, c.accuracy, c.n_episodes
        ));
    }
    let path = cli.out.join("fewshot_accuracy.csv");
    fs::write(&path, csv)?;

    let cosine = if args.cosine_baseline {
        let acc =
            cosine_baseline_accuracy(&table, args.n_way, args.k_shot, args.episodes, cli.seed)?;
        println!("cosine baseline accuracy {acc}");
        Some(acc)
    } else {
        None
    };

    write_sidecar(
        &path,
        &json!({
            "command": "fewshot",
            "seed": cli.seed,
            "source": args.embeddings.as_ref().map(|p| p.display().to_string()),
            "synth": args.synth,
            "classes": args.classes,
            "per_class": args.per_class,
            "dim": args.dim,
            "cluster_std": args.cluster_std,
            "n_way": args.n_way,
            "k_shot": args.k_shot,
            "episodes": args.episodes,
            "window_sizes": args.window_sizes,
            "noise_stds": args.noise_stds,
            "quant_bits": base.quant_bits,
            "centroid": args.centroid,
            "embed_range": [embed_range.min(), embed_range.max()],
            "device": device_json(device),
            "cosine_baseline": cosine,
        }),
    )?;
    for c in &cells {
        println!(
            "window {} noise {} accuracy {}",
            c.window_size, c.noise_std, c.accuracy
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// density / scaling / residuals / opcount
// ---------------------------------------------------------------------------

fn cmd_density(
    cli: &Cli,
    device: Option<&DeviceConfig>,
    args: &DensityArgs,
) -> Result<(), Failure> {
    if args.bits_min == 0 || args.bits_min > args.bits_max {
        return Err(Failure::usage("need 1 <= bits-min <= bits-max"));
    }
    ensure_out(&cli.out)?;
    let cfg = match device {
        Some(d) => DensityConfig::from_device_config(d),
        None => DensityConfig::calibrated(),
    };
    let mut csv = String::from("bits,window_width,sense_margin,log10_margin,degenerate\n");
    for bits in args.bits_min..=args.bits_max {
        let p = sense_margin(bits, &cfg)?;
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            p.bits,
            p.window_width,
            p.sense_margin,
            p.sense_margin.log10(),
            p.degenerate
        ));
    }
    let path = cli.out.join("density.csv");
    fs::write(&path, &csv)?;
    write_sidecar(
        &path,
        &json!({
            "command": "density",
            "bits_min": args.bits_min,
            "bits_max": args.bits_max,
            "range": [cfg.range.min(), cfg.range.max()],
            "subthreshold_swing_mv": cfg.cell.subthreshold_swing_mv,
            "i_on": cfg.cell.i_on,
            "i_floor": cfg.cell.i_floor,
            "sense_offset_v": cfg.sense_offset_v,
            "device": device_json(device),
        }),
    )?;
    print!("{csv}");
    Ok(())
}

fn cmd_scaling(cli: &Cli) -> Result<(), Failure> {
    ensure_out(&cli.out)?;
    let pairs = gamma_scaling_check(cli.seed)?;
    let mut csv = String::from("omega,gamma_opt,scale,mse_unscaled,mse_scaled,abs_diff\n");
    for p in &pairs {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            p.omega,
            p.gamma_opt,
            p.scale,
            p.mse_unscaled,
            p.mse_scaled,
            (p.mse_unscaled - p.mse_scaled).abs()
        ));
    }
    let path = cli.out.join("scaling.csv");
    fs::write(&path, &csv)?;
    write_sidecar(&path, &json!({ "command": "scaling", "seed": cli.seed }))?;
    print!("{csv}");
    Ok(())
}

fn cmd_residuals(cli: &Cli, args: &ResidualArgs) -> Result<(), Failure> {
    ensure_out(&cli.out)?;
    let cfg = ResidualConfig {
        noise_stds: args.noise_stds.clone(),
        quant_bits: args.bits,
        n_seeds: args.repeats,
        seed: cli.seed,
        ..ResidualConfig::default()
    };
    let stats = residual_stats(&cfg)?;
    let mut csv = String::from("noise_std,mean,variance,n_samples\n");
    let mut hist = String::from("noise_std,bin_lo,bin_hi,count\n");
    for s in &stats {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            s.noise_std, s.mean, s.variance, s.n_samples
        ));
        for (i, &count) in s.histogram.iter().enumerate() {
            let lo = s.hist_min + i as f64 * s.bin_width;
            hist.push_str(&format!(
                "{},{},{},{}\n",
                s.noise_std,
                lo,
                lo + s.bin_width,
                count
            ));
        }
    }
    let path = cli.out.join("residuals.csv");
    fs::write(&path, &csv)?;
    fs::write(cli.out.join("residuals_hist.csv"), hist)?;
    write_sidecar(
        &path,
        &json!({
            "command": "residuals",
            "seed": cli.seed,
            "noise_stds": args.noise_stds,
            "repeats": args.repeats,
            "quant_bits": args.bits,
            "gamma": cfg.gamma,
            "lambda": cfg.lambda,
            "dataset": cfg.dataset,
        }),
    )?;
    print!("{csv}");
    Ok(())
}

fn cmd_opcount(args: &OpcountArgs) -> Result<(), Failure> {
    let exact = op_count(args.m, args.d, OpCountMode::ExactSoftware)?;
    let acam = op_count(args.m, args.d, OpCountMode::Acam)?;
    let report = json!({
        "m": args.m,
        "d": args.d,
        "exact_software": exact,
        "acam": acam,
        "formula": "m * (3d + 4) floating-point operations vs 1 analog evaluation",
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("serializes")
    );
    Ok(())
}
