use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use epiclust::indexes::IndexTable;
use epiclust::{admissible, enumerate_combos};
use epiclust_cli::config::{RunConfig, KEYS};
use epiclust_cli::ingest::write_csv;
use epiclust_cli::runner::{cluster_cmd, run_bench, run_scenario, select_k_cmd, Source};
use epiclust_cli::{plot, report};

/// Clustering of curves through epigraph and hypograph indexes.
#[derive(Parser)]
#[command(name = "epiclust", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one sample of a simulation scenario and write it as CSV.
    Simulate(Flags),
    /// Average external validation over replications for every configuration.
    Run(Flags),
    /// Cluster one dataset with one configuration.
    Cluster(Flags),
    /// Choose the number of clusters by mean silhouette in every replication.
    SelectK(Flags),
    /// Run the functional k-means baselines.
    Bench(Flags),
    /// List the index combinations, with admissibility when data is given.
    Combos(Flags),
}

#[derive(Args, Default)]
struct Flags {
    /// File of `key = value` lines; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario name such as "S 1-4".
    #[arg(long)]
    scenario: Option<String>,
    /// CSV file with one curve per row.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Whether the CSV starts with a grid row: auto, yes or no.
    #[arg(long)]
    header: Option<String>,
    #[arg(long)]
    reps: Option<String>,
    /// Number of clusters, or `auto` for silhouette selection.
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Number of cubic B-spline basis functions.
    #[arg(long)]
    basis_size: Option<String>,
    /// Roughness penalty of the smoother; 0 gives plain least squares.
    #[arg(long)]
    lambda: Option<String>,
    /// Noise of models 13 to 21: observation or curve.
    #[arg(long)]
    noise: Option<String>,
    /// Comma-separated method names.
    #[arg(long)]
    methods: Option<String>,
    /// Comma-separated combination names such as `_d.MEI`, or `all`.
    #[arg(long)]
    combos: Option<String>,
    /// Candidate cluster counts: `2-6` or `2,3,5`.
    #[arg(long)]
    candidates: Option<String>,
    /// Test level of the test-based k-means.
    #[arg(long)]
    gamma: Option<String>,
    /// Window of the test-based k-means.
    #[arg(long)]
    window: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Flags {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let out = self.out.as_ref().map(|p| p.display().to_string());
        let input = self.input.as_ref().map(|p| p.display().to_string());
        let values = [
            &self.scenario,
            &input,
            &self.header,
            &self.reps,
            &self.k,
            &self.seed,
            &self.basis_size,
            &self.lambda,
            &self.noise,
            &self.methods,
            &self.combos,
            &self.candidates,
            &self.gamma,
            &self.window,
            &out,
        ];
        for (key, value) in KEYS.iter().zip(values) {
            if let Some(v) = value {
                cfg.set(key, v).with_context(|| format!("--{key}"))?;
            }
        }
        Ok(cfg)
    }
}

fn out_file(cfg: &RunConfig, name: &str) -> Result<Option<PathBuf>> {
    let Some(dir) = &cfg.out else { return Ok(None) };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(Some(dir.join(name)))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("writing {}", path.display()))?,
    ))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn simulate(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    let source = Source::from_config(cfg)?;
    let sample = source.sample(cfg.seed, 0)?;
    match out_file(cfg, "data.csv")? {
        None => write_csv(&sample, io::stdout().lock())?,
        Some(path) => {
            write_csv(&sample, create(&path)?)?;
            let svg = plot::curves_svg(&sample, sample.labels(), &source.name());
            write_text(&path.with_file_name("curves.svg"), &svg)?;
            eprintln!("wrote {} and curves.svg", path.display());
        }
    }
    Ok(())
}

fn run(cfg: &RunConfig, bench: bool) -> Result<()> {
    let result = if bench { run_bench(cfg)? } else { run_scenario(cfg)? };
    print!("{}", report::format_report(&result));
    let name = if bench { "bench.csv" } else { "report.csv" };
    if let Some(path) = out_file(cfg, name)? {
        report::write_report_csv(&result, create(&path)?)?;
    }
    Ok(())
}

fn select_k(cfg: &RunConfig) -> Result<()> {
    let h = select_k_cmd(cfg)?;
    print!("{}", report::format_histogram(&h));
    if let Some(path) = out_file(cfg, "k_histogram.csv")? {
        report::write_histogram_csv(&h, create(&path)?)?;
    }
    Ok(())
}

fn cluster(cfg: &RunConfig) -> Result<()> {
    let o = cluster_cmd(cfg)?;
    print!("{}", report::format_cluster(&o));
    if let Some(path) = out_file(cfg, "assignments.csv")? {
        report::write_assignments_csv(&o, create(&path)?)?;
        let groups = Some(o.partition.assign());
        let svg = plot::curves_svg(&o.triple.data, groups, &format!("{} (smoothed)", o.name));
        write_text(&path.with_file_name("curves.svg"), &svg)?;
        if o.features.n_cols() >= 2 {
            let col = |c: usize| o.features.values.column(c).iter().copied().collect::<Vec<_>>();
            let name = |c: usize| {
                let (k, s) = o.features.columns[c];
                format!("{k} {}", s.tag())
            };
            let svg = plot::scatter_svg(&col(0), &col(1), groups, (&name(0), &name(1)), &o.name.to_string());
            write_text(&path.with_file_name("features.svg"), &svg)?;
        }
    }
    Ok(())
}

fn combos(cfg: &RunConfig) -> Result<()> {
    let list = cfg.combos.clone().unwrap_or_else(enumerate_combos);
    let table = if cfg.scenario.is_some() || cfg.input.is_some() {
        let source = Source::from_config(cfg)?;
        let smoother = source.smoother(cfg)?;
        Some(IndexTable::new(&smoother.smooth(&source.sample(cfg.seed, 0)?)?))
    } else {
        None
    };
    for c in &list {
        let cols: Vec<String> = c.columns().iter().map(|(k, s)| format!("{k}({})", s.tag())).collect();
        match &table {
            None => println!("{c:<10} {}", cols.join(" ")),
            Some(t) => println!("{c:<10} {:<40} {}", cols.join(" "), admissible(&t.features(c)).reason()),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| {
        let (flags, f): (&Flags, fn(&RunConfig) -> Result<()>) = match &cli.command {
            Command::Simulate(fl) => (fl, simulate),
            Command::Run(fl) => (fl, |c| run(c, false)),
            Command::Cluster(fl) => (fl, cluster),
            Command::SelectK(fl) => (fl, select_k),
            Command::Bench(fl) => (fl, |c| run(c, true)),
            Command::Combos(fl) => (fl, combos),
        };
        f(&flags.resolve()?)
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
