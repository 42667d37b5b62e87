use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use graphref::convert::{FormatDescriptor, FormatKind};
use graphref::dsl::{self, parse_spec, ConstraintSpec};
use graphref::harness::{emit_report, read_report, run_campaign, CampaignConfig, ReportFormat};
use graphref::mutate::{mutate_n, seeded_rng, NeighborPolicy, OpWeights};
use graphref::refine::{refine, RefineConfig};

#[derive(Parser)]
#[command(name = "graphref", version, about = "Graph-based structured input fuzzer")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a campaign and write report.json and report.csv into its out_dir.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check one input against a constraint spec. Exits 1 on violations.
    Verify {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        format: Option<FormatKind>,
        #[arg(long, default_value_t = dsl::DEFAULT_EPSILON)]
        epsilon: f64,
    },
    /// Write mutants of one seed file into a directory.
    Mutate {
        #[arg(long)]
        seed: PathBuf,
        #[arg(long)]
        budget: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        format: Option<FormatKind>,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
        #[arg(long)]
        no_refine: bool,
        #[arg(long)]
        no_neighbor: bool,
    },
    /// Print a stored campaign report.
    Report {
        #[arg(long = "in")]
        dir: PathBuf,
        #[arg(long, default_value = "json")]
        format: ReportFormat,
    },
}

type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

fn format_of(path: &Path, explicit: Option<FormatKind>) -> AnyResult<FormatKind> {
    explicit
        .or_else(|| FormatKind::from_path(path))
        .ok_or_else(|| format!("cannot infer the format of {}; pass --format", path.display()).into())
}

fn load_spec(path: Option<&Path>, kind: FormatKind) -> AnyResult<ConstraintSpec> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?,
        None if kind == FormatKind::ObjMesh => dsl::TRIANGLE_MESH_GCON.to_string(),
        None => String::new(),
    };
    Ok(parse_spec(&text)?)
}

fn run(cmd: Cmd) -> AnyResult<ExitCode> {
    match cmd {
        Cmd::Run { config } => {
            let cfg = CampaignConfig::load(&config)?;
            let report = run_campaign(&cfg)?;
            std::fs::create_dir_all(&cfg.out_dir)?;
            emit_report(&report, ReportFormat::Json, &cfg.out_dir.join("report.json"))?;
            emit_report(&report, ReportFormat::Csv, &cfg.out_dir.join("report.csv"))?;
            let s = &report.summary;
            println!(
                "generated {} valid {} vir {} sps {}",
                s.generated,
                s.valid,
                s.vir.map_or("n/a".into(), |v| format!("{v:.4}")),
                s.sps.map_or("n/a".into(), |v| format!("{v:.4}")),
            );
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Verify { spec, input, format, epsilon } => {
            let kind = format_of(&input, format)?;
            let spec = load_spec(spec.as_deref(), kind)?;
            let bytes = std::fs::read(&input).map_err(|e| format!("{}: {e}", input.display()))?;
            let g = FormatDescriptor::new(kind).read(&bytes)?;
            let report = dsl::verify(&spec, &g, epsilon)?;
            for v in &report.entries {
                println!("{} {} {}", dsl::violation_kind(&spec, v), v.element, v.measured);
            }
            println!("{} violation(s)", report.len());
            Ok(if report.is_clean() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Cmd::Mutate { seed, budget, out, format, spec, count, rng_seed, no_refine, no_neighbor } => {
            let kind = format_of(&seed, format)?;
            let fmt = FormatDescriptor::new(kind);
            let spec = load_spec(spec.as_deref(), kind)?;
            let bytes = std::fs::read(&seed).map_err(|e| format!("{}: {e}", seed.display()))?;
            let g = fmt.read(&bytes)?;
            let policy = if no_neighbor { NeighborPolicy::disabled() } else { NeighborPolicy::default() };
            let rcfg = RefineConfig::default();
            std::fs::create_dir_all(&out)?;
            let mut rng = seeded_rng(rng_seed, 0);
            for i in 0..count {
                let (mut mutant, records) = mutate_n(&g, budget, &OpWeights::default(), &policy, &mut rng)?;
                let mut status = "skipped";
                if !no_refine {
                    let (fixed, outcome) = refine(&mutant, &spec, &rcfg)?;
                    mutant = fixed;
                    status = outcome.status.as_str();
                }
                let path = out.join(format!("mutant-{i:04}.{}", kind.extension()));
                std::fs::write(&path, fmt.write(&mutant)?)?;
                let ops: Vec<String> = records.iter().map(|r| r.op.to_string()).collect();
                println!("{} {} {}", path.display(), status, ops.join("|"));
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Report { dir, format } => {
            let report = read_report(&dir.join("report.json"))?;
            let text = match format {
                ReportFormat::Json => report.to_json()?,
                ReportFormat::Csv => report.to_csv()?,
            };
            print!("{text}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse().cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("graphref: {e}");
            ExitCode::from(2)
        }
    }
}
