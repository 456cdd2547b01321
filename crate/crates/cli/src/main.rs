use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use subspace_perturb::adversarial::{sharpness_check, worst_case_pair, worst_case_pair_frobenius};
use subspace_perturb::cca::CcaSetting;
use subspace_perturb::clustering::ClusterSetting;
use subspace_perturb::denoising::{spectral_denoise, DenoisingSetting, NoiseKind};
use subspace_perturb::linalg::{format_f64, read_matrix_csv, write_matrix_csv, write_matrix_csv_to};
use subspace_perturb::montecarlo::{trial_rng, Trials};
use subspace_perturb::perturbation::{block_decompose, realized_losses, unilateral_bounds, wedin_bounds};
use subspace_perturb::simulation::{
    cca_row, clustering_rows, denoising_row, reproduce_table, run_experiment, sharpness_row, ExperimentConfig, Study,
    SummaryRow, SummaryTable, TableOptions,
};
use subspace_perturb::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "subspace-perturb", version, about = "Unilateral perturbation bounds for singular subspaces")]
struct Cli {
    /// Output encoding.
    #[arg(long, value_enum, default_value_t = Format::Human, global = true)]
    format: Format,

    /// Worker threads for Monte-Carlo studies (default: all cores).
    #[arg(long, env = "SUBSPACE_PERTURB_THREADS", global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Unilateral bounds for a signal/perturbation pair, with the two-sided comparison.
    Bound(PairArgs),
    /// Two-sided bounds and realised losses for a signal/perturbation pair.
    Wedin(PairArgs),
    /// Build a worst-case pair, write it as CSV and report its sharpness ratio.
    WorstCase(WorstCaseArgs),
    /// Sharpness ratios over random worst-case pairs.
    Sharpness(SharpnessArgs),
    /// Denoising risk study, or a rank-r spectral estimate of a CSV matrix.
    Denoise(DenoiseArgs),
    /// PCA clustering misclassification study.
    Cluster(ClusterArgs),
    /// Sample CCA loss study.
    Cca(CcaArgs),
    /// Re-run one of the three simulation grids.
    ReproduceTable(TableArgs),
    /// Run a study described by a `key = value` config file.
    Run(RunArgs),
}

#[derive(Args, Debug)]
struct PairArgs {
    /// Signal matrix, headerless CSV.
    #[arg(long)]
    x: PathBuf,
    /// Perturbation matrix, headerless CSV.
    #[arg(long)]
    z: PathBuf,
    /// Target rank.
    #[arg(long)]
    r: usize,
}

#[derive(Args, Debug)]
struct McArgs {
    /// Monte-Carlo repetitions.
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct WorstCaseArgs {
    #[arg(long)]
    p1: usize,
    #[arg(long)]
    p2: usize,
    #[arg(long)]
    r: usize,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    z12: f64,
    #[arg(long)]
    z21: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Spread the scalars over all r directions (Frobenius variant).
    #[arg(long)]
    frobenius: bool,
    /// Directory receiving x.csv and z.csv.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct SharpnessArgs {
    #[arg(long)]
    p1: usize,
    #[arg(long)]
    p2: usize,
    #[arg(long)]
    r: usize,
    #[command(flatten)]
    mc: McArgs,
}

#[derive(Args, Debug)]
struct DenoiseArgs {
    /// Observed matrix; when given, prints its rank-r spectral estimate as CSV.
    #[arg(long, conflicts_with_all = ["p1", "p2", "t"])]
    y: Option<PathBuf>,
    #[arg(long, required_unless_present = "y")]
    p1: Option<usize>,
    #[arg(long, required_unless_present = "y")]
    p2: Option<usize>,
    #[arg(long)]
    r: usize,
    /// Signal strength, the r-th singular value of the signal.
    #[arg(long, required_unless_present = "y")]
    t: Option<f64>,
    #[arg(long, default_value = "gaussian", value_parser = ["gaussian", "rademacher"])]
    noise: String,
    #[command(flatten)]
    mc: McArgs,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    #[arg(long)]
    p: usize,
    #[arg(long)]
    t: f64,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    /// Sample sizes, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Draw the mean direction once per setting.
    #[arg(long)]
    fix_mu: bool,
    #[command(flatten)]
    mc: McArgs,
}

#[derive(Args, Debug)]
struct CcaArgs {
    #[arg(long)]
    p1: usize,
    #[arg(long)]
    p2: usize,
    #[arg(long, default_value_t = 2)]
    r: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    t: f64,
    /// Average squared losses.
    #[arg(long)]
    squared: bool,
    #[command(flatten)]
    mc: McArgs,
}

#[derive(Args, Debug)]
struct TableArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    id: u8,
    #[command(flatten)]
    mc: McArgs,
    /// Run the p2 = 200 rows of table 1 with p2 = 100.
    #[arg(long)]
    table1_p2_100: bool,
    /// Rank for table 3.
    #[arg(long, default_value_t = 2)]
    cca_rank: usize,
    /// Squared losses for table 3.
    #[arg(long)]
    squared: bool,
    /// Fixed mean direction for table 2.
    #[arg(long)]
    fix_mu: bool,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
}

/// A flat list of named scalar results.
struct Record(Vec<(&'static str, Value)>);

impl Record {
    fn num(mut self, key: &'static str, v: f64) -> Self {
        self.0.push((key, serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)));
        self
    }

    fn flag(mut self, key: &'static str, v: bool) -> Self {
        self.0.push((key, Value::Bool(v)));
        self
    }

    fn text(v: &Value) -> String {
        match v {
            Value::Number(n) => n.as_f64().map_or_else(|| n.to_string(), format_f64),
            Value::Null => "NaN".into(),
            other => other.to_string(),
        }
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Human => {
                let width = self.0.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                self.0.iter().map(|(k, v)| format!("{k:<width$}  {}\n", Self::text(v))).collect()
            }
            Format::Csv => {
                let keys: Vec<&str> = self.0.iter().map(|(k, _)| *k).collect();
                let vals: Vec<String> = self.0.iter().map(|(_, v)| Self::text(v)).collect();
                format!("{}\n{}\n", keys.join(","), vals.join(","))
            }
            Format::Json => {
                let map: Map<String, Value> = self.0.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
                format!("{}\n", Value::Object(map))
            }
        }
    }
}

fn render_table(table: &SummaryTable, format: Format) -> String {
    match format {
        Format::Human => table.to_human(),
        Format::Csv => table.to_csv_string(),
        Format::Json => format!("{}\n", table.to_json_string()),
    }
}

fn trials(mc: &McArgs, threads: Option<usize>) -> Trials {
    Trials::new(mc.reps, mc.seed).threads(threads)
}

fn dispatch(cli: Cli) -> Result<String> {
    let fmt = cli.format;
    let threads = cli.threads;
    match cli.command {
        Command::Bound(a) => {
            let (x, z) = (read_matrix_csv(&a.x)?, read_matrix_csv(&a.z)?);
            let d = block_decompose(&x, &z, a.r)?;
            let b = unilateral_bounds(&d);
            let w = wedin_bounds(&x, &z, a.r)?;
            Ok(Record(vec![])
                .num("alpha", d.alpha)
                .num("beta", d.beta)
                .num("z12_spectral", d.z12_sp)
                .num("z21_spectral", d.z21_sp)
                .num("gap", b.gap)
                .flag("applicable", b.applicable)
                .num("v_spectral", b.v_spectral)
                .num("v_frobenius", b.v_frobenius)
                .num("u_spectral", b.u_spectral)
                .num("u_frobenius", b.u_frobenius)
                .flag("wedin_applicable", w.applicable)
                .num("wedin_spectral", w.v_spectral)
                .num("wedin_frobenius", w.v_frobenius)
                .render(fmt))
        }
        Command::Wedin(a) => {
            let (x, z) = (read_matrix_csv(&a.x)?, read_matrix_csv(&a.z)?);
            let w = wedin_bounds(&x, &z, a.r)?;
            let real = realized_losses(&x, &z, a.r)?;
            Ok(Record(vec![])
                .num("delta", w.gap)
                .flag("applicable", w.applicable)
                .num("spectral_bound", w.v_spectral)
                .num("frobenius_bound", w.v_frobenius)
                .num("u_spectral_actual", real.u.spectral)
                .num("u_frobenius_actual", real.u.frobenius)
                .num("v_spectral_actual", real.v.spectral)
                .num("v_frobenius_actual", real.v.frobenius)
                .render(fmt))
        }
        Command::WorstCase(a) => {
            let mut rng = trial_rng(a.seed, 0, 0);
            let pair = if a.frobenius {
                worst_case_pair_frobenius(a.p1, a.p2, a.r, a.alpha, a.beta, a.z12, a.z21, &mut rng)?
            } else {
                worst_case_pair(a.p1, a.p2, a.r, a.alpha, a.beta, a.z12, a.z21, &mut rng)?
            };
            write_matrix_csv(&pair.x, a.out_dir.join("x.csv"))?;
            write_matrix_csv(&pair.z, a.out_dir.join("z.csv"))?;
            let s = sharpness_check(&pair)?;
            Ok(Record(vec![])
                .num("actual_v_spectral", s.actual_v)
                .num("bound_v_spectral", s.bound_v)
                .num("ratio", s.ratio)
                .render(fmt))
        }
        Command::Sharpness(a) => {
            let row = sharpness_row(a.p1, a.p2, a.r, &trials(&a.mc, threads))?;
            Ok(render_table(&single(Study::Sharpness, vec![row]), fmt))
        }
        Command::Denoise(a) => {
            if let Some(path) = a.y {
                let est = spectral_denoise(&read_matrix_csv(path)?, a.r)?;
                let mut out = Vec::new();
                write_matrix_csv_to(&est.x_hat, &mut out).map_err(|e| Error::Parse(e.to_string()))?;
                return Ok(String::from_utf8_lossy(&out).into_owned());
            }
            let (p1, p2, t) = (a.p1.unwrap_or_default(), a.p2.unwrap_or_default(), a.t.unwrap_or_default());
            let setting = DenoisingSetting::new(p1, p2, a.r, t).with_noise(NoiseKind::parse(&a.noise)?);
            let row = denoising_row(&setting, &trials(&a.mc, threads))?;
            Ok(render_table(&single(Study::Denoising, vec![row]), fmt))
        }
        Command::Cluster(a) => {
            let mut setting = ClusterSetting::new(a.p, a.t, a.rho);
            setting.fix_mu = a.fix_mu;
            let rows = clustering_rows(&setting, &a.n, &trials(&a.mc, threads))?;
            Ok(render_table(&single(Study::Clustering, rows), fmt))
        }
        Command::Cca(a) => {
            let mut setting = CcaSetting::new(a.p1, a.p2, a.r, a.n, a.t);
            setting.squared = a.squared;
            let row = cca_row(&setting, &trials(&a.mc, threads))?;
            Ok(render_table(&single(Study::Cca, vec![row]), fmt))
        }
        Command::ReproduceTable(a) => {
            let options = TableOptions {
                threads,
                table1_p2_100: a.table1_p2_100,
                cca_rank: a.cca_rank,
                squared: a.squared,
                fix_mu: a.fix_mu,
            };
            Ok(render_table(&reproduce_table(a.id, a.mc.reps, a.mc.seed, &options)?, fmt))
        }
        Command::Run(a) => {
            let mut config = ExperimentConfig::from_file(&a.config)?;
            if threads.is_some() {
                config.threads = threads;
            }
            Ok(render_table(&run_experiment(&config)?, fmt))
        }
    }
}

fn single(study: Study, rows: Vec<SummaryRow>) -> SummaryTable {
    SummaryTable { study, rows }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(out) => {
            let mut stdout = io::stdout().lock();
            if stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
