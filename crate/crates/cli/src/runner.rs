//! Monte Carlo drivers behind the subcommands.
//!
//! Replication `r` draws its data from `derive_seed(seed, r)` and every
//! method inside it from a stream keyed by the configuration name, so adding
//! or removing methods leaves the other cells untouched.

use std::collections::BTreeMap;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use epiclust::benchkm::BenchMethod;
use epiclust::curves::default_basis_size;
use epiclust::indexes::IndexTable;
use epiclust::metrics::{select_k, EvalReport, KSelection};
use epiclust::rng::{derive_path, derive_seed, hash_str};
use epiclust::simgen::{gen_scenario, ScenarioSpec};
use epiclust::{
    admissible, enumerate_combos, make_basis, Admissibility, ComboSpec, ConfigName, FeatureMatrix,
    FunctionalSample, Method, Partition, SmoothedTriple, Smoother,
};
use rayon::prelude::*;

use crate::config::{KChoice, RunConfig};
use crate::ingest::{read_csv, Dataset};

/// Where replications get their curves.
#[derive(Debug, Clone)]
pub enum Source {
    /// A fresh draw of the scenario per replication.
    Scenario(ScenarioSpec),
    /// The same dataset in every replication; only method seeds change.
    Data(Dataset),
}

impl Source {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        match (&cfg.scenario, &cfg.input) {
            (Some(_), Some(_)) => bail!("give either a scenario or an input file, not both"),
            (Some(name), None) => {
                let mut spec = ScenarioSpec::by_name(name)?;
                spec.noise = cfg.noise;
                Ok(Source::Scenario(spec))
            }
            (None, Some(path)) => Ok(Source::Data(read_csv(path, cfg.header)?)),
            (None, None) => bail!("no data: pass --scenario or --input"),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Source::Scenario(s) => s.name.clone(),
            Source::Data(_) => "input".into(),
        }
    }

    pub fn sample(&self, seed: u64, rep: usize) -> Result<FunctionalSample> {
        match self {
            Source::Scenario(spec) => Ok(gen_scenario(spec, derive_seed(seed, rep as u64))?),
            Source::Data(d) => Ok(d.sample.clone()),
        }
    }

    /// Number of true groups, when known.
    pub fn groups(&self) -> Option<usize> {
        match self {
            Source::Scenario(s) => Some(s.models.len()),
            Source::Data(d) => d.sample.labels().map(|_| d.label_names.len()),
        }
    }

    fn grid(&self) -> &epiclust::Grid {
        match self {
            Source::Scenario(s) => &s.grid,
            Source::Data(d) => d.sample.grid(),
        }
    }

    pub fn smoother(&self, cfg: &RunConfig) -> Result<Smoother> {
        let grid = self.grid();
        let size = cfg.basis_size.unwrap_or_else(|| default_basis_size(grid.len()));
        let basis = make_basis(grid, size)?;
        Ok(Smoother::penalized(grid, &basis, cfg.lambda)?)
    }
}

/// Index combination used by `select-k` for each catalogue scenario: the
/// combination of the best k-means row in the published result tables.
pub fn selection_combo(scenario: &str) -> Option<ComboSpec> {
    let name = match scenario {
        "S 1-2" => "_d.MEI",
        "S 1-3" | "S 1-4" => "_.EIHI",
        "S 1-5" | "S 1-6" => "d.EIHI",
        "S 1-7" | "S 10-11" | "S 10-12" | "S 19-20-21" => "dd2.MEI",
        "S 1-8" | "S 13-14-15" => "_dd2.MEI",
        "S 1-9" | "S 16-17-18" => "_d2.MEI",
        _ => return None,
    };
    Some(name.parse().expect("valid combination name"))
}

fn fixed_k(cfg: &RunConfig, source: &Source) -> Result<usize> {
    match cfg.k {
        Some(KChoice::Fixed(k)) => Ok(k),
        Some(KChoice::Auto) => bail!("k = auto is only available to `cluster` and `select-k`"),
        None => source
            .groups()
            .context("the data has no labels; pass --k"),
    }
}

fn truth(sample: &FunctionalSample) -> Result<&[usize]> {
    sample
        .labels()
        .context("evaluation needs labelled curves (a `label` column)")
}

fn admissibility_note(a: &Admissibility) -> String {
    match a {
        Admissibility::Admissible { .. } => "admissible".into(),
        Admissibility::IllConditioned { .. } => "inadmissible: |det| <= 1e-5".into(),
        Admissibility::InsufficientRows { .. } => "inadmissible: too few curves".into(),
    }
}

/// One aggregated row of a report. Means cover the successful runs only.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub name: String,
    pub purity: Option<f64>,
    pub fmeasure: Option<f64>,
    pub pairwise_f: Option<f64>,
    pub rand: Option<f64>,
    pub time: Option<f64>,
    pub runs: usize,
    pub reps: usize,
    /// Failure reasons with counts, empty when every replication ran.
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub title: String,
    pub rows: Vec<ReportRow>,
}

impl RunReport {
    pub fn row(&self, name: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

type Cell = std::result::Result<EvalReport, String>;

#[derive(Default)]
struct Acc {
    sums: [f64; 5],
    runs: usize,
    reasons: BTreeMap<String, usize>,
}

fn aggregate(title: String, names: &[String], reps: &[Vec<Cell>]) -> RunReport {
    let mut accs: Vec<Acc> = names.iter().map(|_| Acc::default()).collect();
    for cells in reps {
        for (acc, cell) in accs.iter_mut().zip(cells) {
            match cell {
                Ok(e) => {
                    for (s, v) in acc.sums.iter_mut().zip([e.purity, e.fmeasure, e.pairwise_f, e.rand, e.time_seconds]) {
                        *s += v;
                    }
                    acc.runs += 1;
                }
                Err(reason) => *acc.reasons.entry(reason.clone()).or_default() += 1,
            }
        }
    }
    let total = reps.len();
    let mut rows: Vec<ReportRow> = names
        .iter()
        .zip(accs)
        .map(|(name, acc)| {
            let mean = |i: usize| (acc.runs > 0).then(|| acc.sums[i] / acc.runs as f64);
            let mut reasons: Vec<(String, usize)> = acc.reasons.into_iter().collect();
            reasons.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            let note = reasons
                .iter()
                .map(|(r, c)| format!("{r} ({c}/{total})"))
                .collect::<Vec<_>>()
                .join("; ");
            ReportRow {
                name: name.clone(),
                purity: mean(0),
                fmeasure: mean(1),
                pairwise_f: mean(2),
                rand: mean(3),
                time: mean(4),
                runs: acc.runs,
                reps: total,
                note,
            }
        })
        .collect();
    rows.sort_by(|a, b| match (a.rand, b.rand) {
        (Some(x), Some(y)) => y.total_cmp(&x).then_with(|| a.name.cmp(&b.name)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.name.cmp(&b.name),
    });
    RunReport { title, rows }
}

fn parse_methods(cfg: &RunConfig) -> Result<Vec<Method>> {
    match &cfg.methods {
        None => Ok(Method::default_grid()),
        Some(names) => names
            .iter()
            .map(|n| n.parse().with_context(|| format!("method `{n}`")))
            .collect(),
    }
}

fn parse_bench_methods(cfg: &RunConfig) -> Result<Vec<BenchMethod>> {
    match &cfg.methods {
        None => Ok(BenchMethod::default_set()),
        Some(names) => names
            .iter()
            .map(|n| n.parse().with_context(|| format!("benchmark method `{n}`")))
            .collect(),
    }
}

fn smooth_rep(source: &Source, smoother: &Smoother, cfg: &RunConfig, rep: usize) -> Result<(FunctionalSample, SmoothedTriple)> {
    let sample = source.sample(cfg.seed, rep)?;
    let triple = smoother.smooth(&sample)?;
    Ok((sample, triple))
}

fn timed_eval(truth: &[usize], run: impl FnOnce() -> epiclust::Result<Partition>) -> Cell {
    let start = Instant::now();
    let p = run().map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    EvalReport::evaluate(&p, truth, secs).map_err(|e| e.to_string())
}

/// Runs every method on every admissible index combination for each
/// replication and averages Purity, both F-measures, Rand index and time.
pub fn run_scenario(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let source = Source::from_config(cfg)?;
    let k = fixed_k(cfg, &source)?;
    let methods = parse_methods(cfg)?;
    let combos = cfg.combos.clone().unwrap_or_else(enumerate_combos);
    let smoother = source.smoother(cfg)?;
    let mut names = Vec::new();
    for c in &combos {
        for m in &methods {
            names.push(ConfigName::new(m, c.clone()).to_string());
        }
    }
    let per_rep: Vec<Vec<Cell>> = (0..cfg.reps)
        .into_par_iter()
        .map(|r| {
            let fail_all = |msg: String| vec![Err(msg); names.len()];
            let (sample, triple) = match smooth_rep(&source, &smoother, cfg, r) {
                Ok(v) => v,
                Err(e) => return fail_all(format!("{e:#}")),
            };
            let truth = match truth(&sample) {
                Ok(t) => t.to_vec(),
                Err(e) => return fail_all(format!("{e:#}")),
            };
            let table = IndexTable::new(&triple);
            let mut cells = Vec::with_capacity(names.len());
            let mut idx = 0;
            for c in &combos {
                let features = table.features(c);
                let adm = admissible(&features);
                for m in &methods {
                    let name = &names[idx];
                    idx += 1;
                    if !adm.is_admissible() {
                        cells.push(Err(admissibility_note(&adm)));
                        continue;
                    }
                    let seed = derive_path(cfg.seed, &[r as u64, hash_str(name)]);
                    cells.push(timed_eval(&truth, || m.cluster(&features.values, k, seed)));
                }
            }
            cells
        })
        .collect();
    if let Some(msg) = per_rep.iter().flatten().find_map(|c| c.as_ref().err()) {
        if per_rep.iter().flatten().all(Result::is_err) {
            bail!("every configuration failed; first reason: {msg}");
        }
    }
    Ok(aggregate(format!("{} ({} reps, k = {k})", source.name(), cfg.reps), &names, &per_rep))
}

/// Runs the functional k-means baselines. Distance-based k-means sees the
/// smoothed curves, the test-based procedure the raw observations.
pub fn run_bench(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let source = Source::from_config(cfg)?;
    let k = fixed_k(cfg, &source)?;
    let methods = parse_bench_methods(cfg)?;
    let smoother = source.smoother(cfg)?;
    let names: Vec<String> = methods.iter().map(|m| m.to_string()).collect();
    let per_rep: Vec<Vec<Cell>> = (0..cfg.reps)
        .into_par_iter()
        .map(|r| {
            let (sample, triple) = match smooth_rep(&source, &smoother, cfg, r) {
                Ok(v) => v,
                Err(e) => return vec![Err(format!("{e:#}")); names.len()],
            };
            let truth = match truth(&sample) {
                Ok(t) => t.to_vec(),
                Err(e) => return vec![Err(format!("{e:#}")); names.len()],
            };
            methods
                .iter()
                .zip(&names)
                .map(|(m, name)| {
                    let input = if m.uses_smoothing() { &triple.data } else { &sample };
                    let seed = derive_path(cfg.seed, &[r as u64, hash_str(name)]);
                    timed_eval(&truth, || m.cluster(input, k, &cfg.tb, seed))
                })
                .collect()
        })
        .collect();
    Ok(aggregate(format!("{} benchmark ({} reps, k = {k})", source.name(), cfg.reps), &names, &per_rep))
}

/// Counts, over replications, how often each candidate `k` is chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct KHistogram {
    pub title: String,
    pub candidates: Vec<usize>,
    pub counts: Vec<usize>,
    /// Replications where no candidate could be scored, with reasons.
    pub failed: Vec<(usize, String)>,
    /// How often each combination was used; later preferences stand in when
    /// the first one is inadmissible.
    pub combos_used: BTreeMap<String, usize>,
}

impl KHistogram {
    pub fn count(&self, k: usize) -> usize {
        self.candidates
            .iter()
            .position(|&c| c == k)
            .map_or(0, |i| self.counts[i])
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum::<usize>() + self.failed.len()
    }
}

fn combo_preference(cfg: &RunConfig, source: &Source) -> Vec<ComboSpec> {
    let mut prefs = match (&cfg.combos, source) {
        (Some(list), _) => list.clone(),
        (None, Source::Scenario(s)) => selection_combo(&s.name).into_iter().collect(),
        (None, Source::Data(_)) => Vec::new(),
    };
    if cfg.combos.is_none() {
        for c in enumerate_combos() {
            if !prefs.contains(&c) {
                prefs.push(c);
            }
        }
    }
    prefs
}

fn first_admissible(table: &IndexTable, prefs: &[ComboSpec]) -> Option<FeatureMatrix> {
    prefs
        .iter()
        .map(|c| table.features(c))
        .find(|f| admissible(f).is_admissible())
}

fn single_method(cfg: &RunConfig) -> Result<Method> {
    match cfg.methods.as_deref() {
        None => Ok("kmeans".parse()?),
        Some([one]) => one.parse().with_context(|| format!("method `{one}`")),
        Some(_) => bail!("this command takes exactly one method"),
    }
}

/// Mean-silhouette selection of `k` on every replication.
pub fn select_k_cmd(cfg: &RunConfig) -> Result<KHistogram> {
    cfg.validate()?;
    let source = Source::from_config(cfg)?;
    let method = single_method(cfg)?;
    let prefs = combo_preference(cfg, &source);
    let smoother = source.smoother(cfg)?;
    let mut candidates = cfg.candidates.clone();
    candidates.sort_unstable();
    candidates.dedup();
    let outcomes: Vec<std::result::Result<(usize, String), String>> = (0..cfg.reps)
        .into_par_iter()
        .map(|r| {
            let (_, triple) = smooth_rep(&source, &smoother, cfg, r).map_err(|e| format!("{e:#}"))?;
            let table = IndexTable::new(&triple);
            let features = first_admissible(&table, &prefs).ok_or("no admissible combination")?;
            let seed = derive_path(cfg.seed, &[r as u64, hash_str("select-k")]);
            let sel = select_k(&features.values, &method, &candidates, seed).map_err(|e| e.to_string())?;
            Ok((sel.chosen, features.combo.to_string()))
        })
        .collect();
    let mut counts = vec![0; candidates.len()];
    let mut failed = Vec::new();
    let mut combos_used = BTreeMap::new();
    for (r, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok((k, combo)) => {
                let i = candidates.iter().position(|&c| c == k).expect("chosen among candidates");
                counts[i] += 1;
                *combos_used.entry(combo).or_default() += 1;
            }
            Err(e) => failed.push((r, e)),
        }
    }
    Ok(KHistogram {
        title: format!("{} ({} reps, method {method})", source.name(), cfg.reps),
        candidates,
        counts,
        failed,
        combos_used,
    })
}

/// Result of clustering one dataset with one configuration.
#[derive(Debug, Clone)]
pub struct ClusterOutcome {
    pub name: ConfigName,
    pub sample: FunctionalSample,
    pub triple: SmoothedTriple,
    pub features: FeatureMatrix,
    pub partition: Partition,
    pub selection: Option<KSelection>,
    pub eval: Option<EvalReport>,
}

/// Clusters one dataset: the input file, or replication 0 of the scenario.
pub fn cluster_cmd(cfg: &RunConfig) -> Result<ClusterOutcome> {
    cfg.validate()?;
    let source = Source::from_config(cfg)?;
    let method = single_method(cfg)?;
    let smoother = source.smoother(cfg)?;
    let (sample, triple) = smooth_rep(&source, &smoother, cfg, 0)?;
    let table = IndexTable::new(&triple);
    let features = match &cfg.combos {
        Some(list) => {
            let [c] = list.as_slice() else {
                bail!("cluster takes exactly one index combination");
            };
            let f = table.features(c);
            let adm = admissible(&f);
            if !adm.is_admissible() {
                bail!("combination {c} is {} on this data", admissibility_note(&adm));
            }
            f
        }
        None => first_admissible(&table, &combo_preference(cfg, &source)).context("no admissible combination")?,
    };
    let name = ConfigName::new(&method, features.combo.clone());
    let seed = derive_path(cfg.seed, &[0, hash_str(&name.to_string())]);
    let (k, selection) = match cfg.k {
        Some(KChoice::Fixed(k)) => (k, None),
        Some(KChoice::Auto) => {
            let sel = select_k(&features.values, &method, &cfg.candidates, seed)?;
            (sel.chosen, Some(sel))
        }
        None => (source.groups().context("the data has no labels; pass --k or --k auto")?, None),
    };
    let start = Instant::now();
    let partition = method.cluster(&features.values, k, seed)?;
    let secs = start.elapsed().as_secs_f64();
    let eval = match sample.labels() {
        Some(t) => Some(EvalReport::evaluate(&partition, t, secs)?),
        None => None,
    };
    Ok(ClusterOutcome {
        name,
        sample,
        triple,
        features,
        partition,
        selection,
        eval,
    })
}
