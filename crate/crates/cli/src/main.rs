//! Command-line front end: remesh, match, transfer, badtosca, eval.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use meshcorr::pipeline::PipelineConfig;
use meshcorr::spectral::DescriptorKind;
use meshcorr::{Error, ErrorCategory};

#[derive(Parser, Debug)]
#[command(name = "meshcorr", version, about = "Dense shape correspondence via intrinsic Delaunay remeshing")]
struct Cli {
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Random seed for sampling and perturbation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML file with pipeline settings; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the resolved configuration as TOML.
    #[arg(long, global = true)]
    dump_config: bool,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(clap::Args, Debug, Default)]
struct Overrides {
    /// Target low-resolution vertex count.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Refine large triangles before sampling.
    #[arg(long, global = true)]
    resample: bool,
    /// Drop low-resolution components below this area fraction.
    #[arg(long, global = true)]
    component_threshold: Option<f64>,
    #[arg(long, global = true)]
    k0: Option<usize>,
    #[arg(long, global = true)]
    step: Option<usize>,
    #[arg(long, global = true)]
    k_final: Option<usize>,
    #[arg(long, global = true, value_parser = parse_descriptor)]
    descriptor: Option<DescriptorKind>,
    #[arg(long, global = true)]
    descriptor_count: Option<usize>,
}

fn parse_descriptor(s: &str) -> Result<DescriptorKind, String> {
    match s {
        "wks" => Ok(DescriptorKind::Wks),
        "hks" => Ok(DescriptorKind::Hks),
        _ => Err(format!("unknown descriptor {s:?} (expected wks or hks)")),
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Remesh one mesh; writes the low-resolution mesh plus texel, generator
    /// and timing sidecars next to it.
    Remesh { input: PathBuf, output: PathBuf },
    /// Match two meshes; writes the dense point map (source -> target) and
    /// all intermediate artifacts into a directory.
    Match { source: PathBuf, target: PathBuf, out_dir: PathBuf },
    /// Carry functions defined on the target's dense vertices to the source
    /// through the functional map of a `match` directory.
    Transfer { match_dir: PathBuf, function: PathBuf, output: PathBuf },
    /// Perturb every mesh of a directory and write ground truth between all
    /// pairs with shared connectivity.
    Badtosca { in_dir: PathBuf, out_dir: PathBuf },
    /// Evaluate the pairs of a manifest (`source target gt [pred]`).
    Eval { manifest: PathBuf, output: PathBuf },
}

fn resolve_config(cli: &Cli) -> Result<PipelineConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => PipelineConfig::default(),
    };
    let o = &cli.overrides;
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(s) = o.samples {
        cfg.samples = s;
    }
    if o.resample {
        cfg.resample = true;
    }
    if let Some(t) = o.component_threshold {
        cfg.component_area_threshold = t;
    }
    if let Some(k) = o.k0 {
        cfg.k0 = k;
    }
    if let Some(s) = o.step {
        cfg.step = s;
    }
    if let Some(k) = o.k_final {
        cfg.k_final = k;
    }
    if let Some(d) = o.descriptor {
        cfg.descriptor = d;
    }
    if let Some(d) = o.descriptor_count {
        cfg.descriptor_count = d;
    }
    Ok(cfg)
}

fn exit_code(e: &Error) -> u8 {
    match e.category() {
        ErrorCategory::Usage => 2,
        ErrorCategory::Io => 3,
        ErrorCategory::Topology => 4,
        ErrorCategory::NonConvergence => 5,
    }
}

fn category_name(c: ErrorCategory) -> &'static str {
    match c {
        ErrorCategory::Usage => "usage",
        ErrorCategory::Io => "io",
        ErrorCategory::Topology => "topology",
        ErrorCategory::NonConvergence => "nonconvergence",
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let cfg = resolve_config(&cli)?;
    if cli.dump_config {
        print!("{}", toml::to_string(&cfg).map_err(|e| Error::Config(e.to_string()))?);
    }
    let Some(command) = cli.command else {
        if cli.dump_config {
            return Ok(());
        }
        return Err(Error::Config("no subcommand given (see --help)".into()));
    };
    log::info!("resolved configuration: {}", serde_json::to_string(&cfg).expect("config serializes"));
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    match command {
        Command::Remesh { input, output } => commands::remesh(&input, &output, &cfg),
        Command::Match { source, target, out_dir } => commands::match_pair(&source, &target, &out_dir, &cfg),
        Command::Transfer { match_dir, function, output } => commands::transfer(&match_dir, &function, &output),
        Command::Badtosca { in_dir, out_dir } => commands::badtosca(&in_dir, &out_dir, cfg.seed),
        Command::Eval { manifest, output } => commands::eval(&manifest, &output, &cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("error [{}]: {e}", category_name(e.category()));
            ExitCode::from(code)
        }
    }
}
