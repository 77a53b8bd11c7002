use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use zklab::config::{
    CounterexampleSection, EstimateSection, ExperimentConfig, FamilySpec, GridSection, IdentitiesSection, MeasureSection,
    ResonanceSection, SimulateSection,
};
use zklab::harness::estimates::EstimateId;
use zklab::measure::Variant;
use zklab::runner::{report, run, RunOutcome};
use zklab::{Result, ZkError};

#[derive(Parser)]
#[command(name = "zklab", version, about = "Experiments on dispersive estimates for the generalized Zakharov-Kuznetsov equation")]
struct Cli {
    /// Experiment config (TOML, or JSON when it starts with `{`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; ZKLAB_OUT takes precedence.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Nx,Ny,Nt,Lx,Tw
    #[arg(long, global = true)]
    grid: Option<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every section of --config.
    Run,
    /// Integrate the equation from a smooth bump.
    Simulate(SimulateArgs),
    /// Quotient sweeps of an estimate (L4-main by default).
    L4(EstimateArgs),
    /// Level-set measure scan.
    Measure(MeasureArgs),
    /// Norms of the two-bump counterexample.
    Counterexample(CounterArgs),
    /// Cubic resonance factorizations on random triples.
    Resonance(ResonanceArgs),
    /// Exact rational checks of the algebraic identities.
    Identities(IdentitiesArgs),
    /// Multilinear quotient sweeps.
    Multilinear(MultilinearArgs),
    /// Refit sweeps from the estimate CSVs in --out.
    Report,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 1)]
    k: u32,
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    sign: i8,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = 0.5)]
    amplitude: f64,
    #[arg(long, default_value_t = 10)]
    stride: usize,
    #[arg(long)]
    dealias_pad: Option<f64>,
    #[arg(long)]
    write_fields: bool,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long, default_value = "L4-main")]
    estimate: EstimateId,
    /// Dyadic shells: `lo..hi` or a comma list.
    #[arg(long = "Ns", default_value = "4..64")]
    ns: String,
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.05", allow_hyphen_values = true)]
    eps: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.55")]
    b: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    s: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    #[arg(long = "T", default_value_t = 1.0)]
    t: f64,
}

#[derive(Args)]
struct MeasureArgs {
    #[arg(long, default_value = "lin")]
    variant: String,
    #[arg(long, value_delimiter = ',', default_value = "0.1")]
    eps: Vec<f64>,
    /// `default` or `random`
    #[arg(long, default_value = "default")]
    family: String,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 200)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    mc_samples: usize,
}

#[derive(Args)]
struct CounterArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-0.5,-0.25,0,0.25")]
    s: Vec<f64>,
    #[arg(long, default_value_t = 0.55)]
    b: f64,
    #[arg(long = "Ns", default_value = "4..256")]
    ns: String,
    #[arg(long)]
    grid_check: bool,
}

#[derive(Args)]
struct ResonanceArgs {
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long = "N", default_value_t = 64)]
    n: u64,
}

#[derive(Args)]
struct IdentitiesArgs {
    #[arg(long, default_value_t = 1000)]
    samples: usize,
}

#[derive(Args)]
struct MultilinearArgs {
    #[arg(long, default_value_t = 2)]
    k: u32,
    #[arg(long, value_delimiter = ',', default_value = "0.4")]
    s: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.05")]
    eps: Vec<f64>,
    #[arg(long = "Ns", default_value = "4..64")]
    ns: String,
    #[arg(long, default_value_t = 20)]
    samples: usize,
    /// Use the three-factor modified-ZK form (k = 2).
    #[arg(long)]
    mzk: bool,
}

/// `4..256` (dyadic, inclusive) or `4,8,16`.
fn parse_ns(s: &str, field: &str) -> Result<Vec<u64>> {
    let bad = || ZkError::config(field, format!("expected lo..hi or a comma list, got `{s}`"));
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
        let v = zklab::projectors::Dyadic::range(lo, hi).map_err(|e| ZkError::config(field, e.to_string()))?;
        Ok(v.into_iter().map(|d| d.get()).collect())
    } else {
        s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
    }
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig> {
    let base = match &cli.config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::default(),
    };
    let mut cfg = match &cli.cmd {
        Cmd::Run => {
            if cli.config.is_none() {
                return Err(ZkError::config("--config", "`run` needs a config file"));
            }
            base.clone()
        }
        // the other subcommands keep only their own section
        _ => ExperimentConfig { seed: base.seed.or(Some(0)), out: base.out.clone(), workers: base.workers, grid: base.grid, ..Default::default() },
    };
    match &cli.cmd {
        Cmd::Run | Cmd::Report => {}
        Cmd::Simulate(a) => {
            cfg.simulate = Some(SimulateSection {
                k: a.k,
                sign: a.sign,
                dt: a.dt,
                t: a.t,
                amplitude: a.amplitude,
                stride: a.stride,
                dealias_pad: a.dealias_pad,
                write_fields: a.write_fields,
            })
        }
        Cmd::L4(a) => {
            let mut e = EstimateSection::new(a.estimate, parse_ns(&a.ns, "--Ns")?, a.samples);
            e.eps = a.eps.clone();
            e.b = a.b.clone();
            e.s = a.s.clone();
            e.p = a.p.clone();
            e.alpha = a.alpha.clone();
            e.t = a.t;
            cfg.estimate = vec![e];
        }
        Cmd::Measure(a) => {
            let variant = match a.variant.as_str() {
                "lin" => Variant::Lin,
                "alpha" => Variant::Alpha,
                v => return Err(ZkError::config("--variant", format!("expected lin or alpha, got `{v}`"))),
            };
            cfg.measure = Some(MeasureSection {
                variant,
                eps: a.eps.clone(),
                family: FamilySpec::Named(a.family.clone()),
                alpha: a.alpha,
                count: a.count,
                mc_samples: a.mc_samples,
            })
        }
        Cmd::Counterexample(a) => {
            cfg.counterexample = Some(CounterexampleSection { s: a.s.clone(), b: a.b, n: parse_ns(&a.ns, "--Ns")?, grid_check: a.grid_check })
        }
        Cmd::Resonance(a) => cfg.resonance = Some(ResonanceSection { samples: a.samples, n: a.n }),
        Cmd::Identities(a) => cfg.identities = Some(IdentitiesSection { samples: a.samples }),
        Cmd::Multilinear(a) => {
            let id = if a.mzk { EstimateId::TriMzk } else { EstimateId::MultiGzk };
            let mut e = EstimateSection::new(id, parse_ns(&a.ns, "--Ns")?, a.samples);
            e.k = Some(vec![a.k]);
            e.s = Some(a.s.clone());
            e.eps = a.eps.clone();
            e.b = vec![0.5 + a.eps[0]];
            cfg.estimate = vec![e];
        }
    }
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    if let Some(w) = cli.workers {
        cfg.workers = Some(w);
    }
    if let Some(g) = &cli.grid {
        cfg.grid = Some(GridSection::parse_flag(g)?);
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: &ExperimentConfig) -> PathBuf {
    if let Some(v) = std::env::var_os("ZKLAB_OUT") {
        return PathBuf::from(v);
    }
    cli.out.clone().or_else(|| cfg.out.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("zklab-out"))
}

fn execute(cli: &Cli) -> Result<RunOutcome> {
    let cfg = build_config(cli)?;
    let out = out_dir(cli, &cfg);
    if let Some(w) = cfg.workers {
        if w == 0 {
            return Err(ZkError::config("workers", "must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(w).build_global().map_err(|e| ZkError::contract(e.to_string()))?;
    }
    match cli.cmd {
        Cmd::Report => report(&out),
        _ => run(&cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(r) => {
            for l in &r.summary {
                println!("{l}");
            }
            for f in &r.manifest.files {
                println!("wrote {} ({})", f.path, &f.sha256[..12]);
            }
            if r.degenerate() {
                for e in &r.manifest.events {
                    eprintln!("{} row {}: {}", e.file, e.row, e.error);
                }
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e @ ZkError::Config { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
