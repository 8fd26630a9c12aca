use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hapsim::config::RunConfig;
use hapsim::harness::{export_trace, run_batch, tracking_metrics, ConditionTrace, TrackingMetrics};
use hapsim::impedance::ConditionName;
use hapsim::sdanalysis::{
    align_factors, analyze, average_repetitions, format_summary_table, load_ratings, synthesize,
    write_model, write_ratings, AnalysisOptions, ExtractionMethod, FactorRule, LoadOptions,
    SynthSpec,
};
use hapsim::Error;

/// Simulate a CMG haptic device and analyze semantic-differential ratings.
#[derive(Parser, Debug)]
#[command(name = "hapsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Swing the simulated device under each impedance condition and record torque traces.
    Measure(MeasureArgs),
    /// Factor-analyze a ratings CSV.
    Analyze(AnalyzeArgs),
    /// Generate factor-structured synthetic ratings.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
struct MeasureArgs {
    /// TOML run config; built-in defaults when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: config `output_dir`, itself "out"]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run only this condition (repeatable) [default: config `conditions.run`]
    #[arg(long = "condition", value_name = "NAME")]
    conditions: Vec<String>,
    /// Seed for sensor noise [default: config `seed`, itself 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Print the effective config as TOML and exit
    #[arg(long)]
    print_config: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RuleArg {
    /// Position of the second-largest drop in the scree
    Elbow,
    /// Eigenvalues greater than 1
    Kaiser,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    /// Principal-axis factoring with iterated communalities
    Paf,
    /// Principal components
    Pca,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Ratings CSV: participant,condition,repetition,<pair>...
    ratings: PathBuf,
    /// Number of factors; overrides --rule
    #[arg(long)]
    factors: Option<usize>,
    /// Rule choosing the number of factors
    #[arg(long, value_enum, default_value_t = RuleArg::Elbow)]
    rule: RuleArg,
    /// Extraction method
    #[arg(long, value_enum, default_value_t = MethodArg::Paf)]
    method: MethodArg,
    /// Output directory
    #[arg(long, default_value = "analysis")]
    out: PathBuf,
    /// Accept empty/NA cells (pairwise-complete correlations)
    #[arg(long)]
    allow_missing: bool,
    /// Generating model JSON (from `synth`); reports per-factor congruence
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Ratings CSV to write; the model goes next to it as <stem>.model.json
    #[arg(long, default_value = "ratings.csv")]
    out: PathBuf,
    /// Model JSON to start from [default: built-in 4-factor, 7-pair model]
    #[arg(long)]
    model: Option<PathBuf>,
    /// Per-repetition noise standard deviation [default: model value, built-in 0.3]
    #[arg(long)]
    noise: Option<f64>,
    /// Number of participants [default: model value, built-in 16]
    #[arg(long, conflicts_with = "observations")]
    participants: Option<usize>,
    /// Total participant×condition rows; must be a multiple of the condition count
    #[arg(long)]
    observations: Option<usize>,
    /// Repetitions per participant and condition [default: model value, built-in 1]
    #[arg(long)]
    repetitions: Option<usize>,
    /// Random seed [default: model value, built-in 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Round ratings to integer scale points
    #[arg(long)]
    round: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Measure(args) => measure(args),
        Command::Analyze(args) => analyze_cmd(args),
        Command::Synth(args) => synth(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn measure(args: MeasureArgs) -> Result<ExitCode, Error> {
    let mut config = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = args.out {
        config.output_dir = out;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if !args.conditions.is_empty() {
        config.conditions.run = args
            .conditions
            .iter()
            .map(|s| s.parse::<ConditionName>())
            .collect::<Result<_, _>>()?;
    }
    config.validate()?;
    if args.print_config {
        print!("{}", config.to_toml());
        return Ok(ExitCode::SUCCESS);
    }

    let rig = config.rig()?;
    let conditions = config.conditions.resolve();
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    let mut rows = Vec::new();
    for result in run_batch(&conditions, &config.swing, &rig) {
        let trace = result?;
        export_trace(&trace, dir.join(format!("{}.csv", trace.condition)))?;
        let metrics = tracking_metrics(&trace)?;
        rows.push((trace, metrics));
    }
    let summary = dir.join("summary.csv");
    fs::write(&summary, summary_csv(&rows)).map_err(io_err(&summary))?;

    let mut stdout = std::io::stdout().lock();
    for (trace, m) in &rows {
        let _ = writeln!(
            stdout,
            "{:<20} nrmse {:.4}  peak {:.3e} N·m{}{}",
            trace.condition,
            m.normalized_rmse,
            m.peak_desired,
            m.dominant_oscillation_hz.map_or(String::new(), |f| format!("  ring {f:.3} Hz")),
            if trace.truncated { "  TRUNCATED" } else { "" },
        );
    }
    let truncated: Vec<&str> = rows
        .iter()
        .filter(|(t, _)| t.truncated)
        .map(|(t, _)| t.condition.as_str())
        .collect();
    if !truncated.is_empty() {
        eprintln!("error: elastic divergence cut short: {}", truncated.join(", "));
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn summary_csv(rows: &[(ConditionTrace, TrackingMetrics)]) -> String {
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    let mut text = String::from(
        "condition,rms_error,peak_desired,normalized_rmse,dominant_oscillation_hz,ring_decay_s,saturated_samples,truncated\n",
    );
    for (trace, m) in rows {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            trace.condition,
            m.rms_error,
            m.peak_desired,
            m.normalized_rmse,
            opt(m.dominant_oscillation_hz),
            opt(m.ring_decay_s),
            m.saturated_samples,
            u8::from(trace.truncated),
        ));
    }
    text
}

fn read_spec(path: &Path) -> Result<SynthSpec, Error> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let spec: SynthSpec = serde_json::from_str(&text)?;
    Ok(spec)
}

fn analyze_cmd(args: AnalyzeArgs) -> Result<ExitCode, Error> {
    let load = LoadOptions {
        allow_missing: args.allow_missing,
        ..LoadOptions::default()
    };
    let ratings = load_ratings(&args.ratings, &load)?;
    let obs = average_repetitions(&ratings);
    let mut options = AnalysisOptions::default();
    options.rule = match (args.factors, args.rule) {
        (Some(k), _) => FactorRule::Fixed(k),
        (None, RuleArg::Elbow) => FactorRule::Elbow,
        (None, RuleArg::Kaiser) => FactorRule::Kaiser,
    };
    options.extraction.method = match args.method {
        MethodArg::Paf => ExtractionMethod::PrincipalAxis,
        MethodArg::Pca => ExtractionMethod::PrincipalComponent,
    };
    let model = analyze(&obs, &options)?;
    write_model(&model, &args.out)?;
    print!("{}", format_summary_table(&model));

    if let Some(path) = &args.model {
        let spec = read_spec(path)?;
        let reference = spec.loading_matrix()?;
        if reference.nrows() != model.loadings.nrows() || reference.ncols() != model.loadings.ncols() {
            return Err(Error::Shape(format!(
                "model is {}×{}, fitted loadings are {}×{}",
                reference.nrows(),
                reference.ncols(),
                model.loadings.nrows(),
                model.loadings.ncols()
            )));
        }
        let alignment = align_factors(&model.loadings, &reference)?;
        let mut text = String::from("reference_factor,fitted_factor,sign,congruence\n");
        for (j, (col, sign, phi)) in alignment.iter().enumerate() {
            text.push_str(&format!("{},{},{},{}\n", j + 1, col + 1, sign, phi));
            println!("factor {} ↔ fitted {}: congruence {phi:.6}", j + 1, col + 1);
        }
        let path = args.out.join("congruence.csv");
        fs::write(&path, text).map_err(io_err(&path))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn synth(args: SynthArgs) -> Result<ExitCode, Error> {
    let mut spec = match &args.model {
        Some(path) => read_spec(path)?,
        None => SynthSpec::default(),
    };
    if let Some(noise) = args.noise {
        spec.noise_std = noise;
    }
    if let Some(p) = args.participants {
        spec.participants = p;
    }
    if let Some(n) = args.observations {
        let nc = spec.conditions.len();
        if nc == 0 || n % nc != 0 {
            return Err(Error::Config(format!(
                "--observations {n} is not a multiple of the {nc} conditions"
            )));
        }
        spec.participants = n / nc;
    }
    if let Some(r) = args.repetitions {
        spec.repetitions = r;
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    spec.round |= args.round;

    let synthetic = synthesize(&spec)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let file = fs::File::create(&args.out).map_err(io_err(&args.out))?;
    write_ratings(&synthetic.ratings, file).map_err(io_err(&args.out))?;

    let model_path = model_path_for(&args.out);
    let json = serde_json::to_string_pretty(&spec)? + "\n";
    fs::write(&model_path, json).map_err(io_err(&model_path))?;
    println!(
        "wrote {} rows to {} (model: {}, {} cells clamped)",
        spec.observations() * spec.repetitions,
        args.out.display(),
        model_path.display(),
        synthetic.clamped
    );
    Ok(ExitCode::SUCCESS)
}

fn model_path_for(out: &Path) -> PathBuf {
    let stem = out.file_stem().map_or("ratings".into(), |s| s.to_string_lossy());
    out.with_file_name(format!("{stem}.model.json"))
}
