//! Subcommands behind the `hstm` binary. Each writes into one output directory together
//! with a manifest; a failed command removes what it wrote.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::Serialize;

use crate::analytics::{self, AnnualTotals, SeriesMetric, SpiBaseline, YearRange};
use crate::error::{Error, Result};
use crate::eval::report::write_improvement_csv;
use crate::eval::search::{write_trace, HstmSpaceFile, StlmSpaceFile};
use crate::eval::{build_folds, cv_score_model, holdout_evaluate, improvement_table, random_search, HstmSpace, Normalizer, StlmSpace};
use crate::ingest::{self, CsvSchema};
use crate::manifest::{RunManifest, MANIFEST_FILE};
use crate::models::config::{read_json, write_json};
use crate::models::{naive_forecast, ForecastResult, Forecaster, HstmConfig, ModelConfig, StlmConfig};
use crate::panel::{split_panel, RainfallPanel, YearMonth, DEFAULT_TRAIN_END};
use crate::spatial::DistrictGraph;
use crate::synth::{synth_panel, SynthSpec};

#[derive(Debug, Parser)]
#[command(name = "hstm", version, about = "Monthly district rainfall forecasting: seasonal naive, STLM and HSTM")]
pub struct Cli {
    /// Worker threads for parallel work; 0 uses every core. Outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Station CSV to a district monthly panel (and a district graph when coordinates are known).
    Ingest(IngestArgs),
    /// Seeded synthetic panel and graph.
    Synth(SynthArgs),
    /// SPI extreme years, decadal slopes, monsoon shares, correlation against distance.
    Analytics(AnalyticsArgs),
    /// Random search with expanding-window cross-validation on the training months.
    Tune(TuneArgs),
    /// Fit on the training months and forecast past them.
    Forecast(ForecastArgs),
    /// Score a forecast on the holdout and write the report tables.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output directory, created if missing.
    #[arg(long, env = "HSTM_OUT_DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PanelArgs {
    /// Panel CSV: a district column then one `YYYY-MM` column per month.
    #[arg(long)]
    pub panel: PathBuf,
    /// Last training month.
    #[arg(long, default_value_t = DEFAULT_TRAIN_END)]
    pub train_end: YearMonth,
}

impl PanelArgs {
    fn load(&self, m: &mut RunManifest) -> Result<RainfallPanel> {
        m.input(&self.panel);
        split_panel(RainfallPanel::read_csv(&self.panel)?, self.train_end)
    }
}

fn load_graph(path: &Path, panel: &RainfallPanel, m: &mut RunManifest) -> Result<DistrictGraph> {
    m.input(path);
    DistrictGraph::read_json(path)?.aligned_to(&panel.districts)
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Station daily CSV.
    #[arg(long)]
    pub stations: PathBuf,
    /// Optional `station_id,lat,lon` table.
    #[arg(long)]
    pub coords: Option<PathBuf>,
    #[arg(long, default_value = "station_id")]
    pub station_col: String,
    #[arg(long, default_value = "district")]
    pub district_col: String,
    #[arg(long, default_value = "date")]
    pub date_col: String,
    #[arg(long, default_value = "rainfall_mm")]
    pub rainfall_col: String,
    /// Latitude column inside the station CSV, if it has one.
    #[arg(long, requires = "lon_col")]
    pub lat_col: Option<String>,
    #[arg(long, requires = "lat_col")]
    pub lon_col: Option<String>,
    /// Abort when more than this fraction of rows is rejected.
    #[arg(long, default_value_t = ingest::DEFAULT_MAX_REJECT_FRACTION)]
    pub max_reject: f64,
    #[arg(long, default_value_t = DEFAULT_TRAIN_END)]
    pub train_end: YearMonth,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// JSON file with any subset of the generator settings; flags below override it.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub districts: Option<usize>,
    #[arg(long)]
    pub years: Option<usize>,
    #[arg(long)]
    pub start_year: Option<i32>,
    #[arg(long)]
    pub train_end: Option<YearMonth>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct AnalyticsArgs {
    #[command(flatten)]
    pub panel: PanelArgs,
    #[arg(long)]
    pub graph: PathBuf,
    /// SPI baseline years, inclusive.
    #[arg(long, default_value = "1900-1970")]
    pub baseline: YearRange,
    /// Years split into consecutive ten-year blocks; defaults to every whole decade of the panel.
    #[arg(long)]
    pub decades: Option<YearRange>,
    /// Series correlated against distance; repeat or comma-separate. Defaults to all.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub metric: Vec<SeriesMetric>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TunedModel {
    Stlm,
    Hstm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Naive,
    Stlm,
    Hstm,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub panel: PanelArgs,
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, value_enum)]
    pub model: TunedModel,
    /// Search-space JSON.
    #[arg(long)]
    pub space: PathBuf,
    /// Configurations to draw.
    #[arg(long, short = 'r', default_value_t = 50)]
    pub r: usize,
    /// Cross-validation folds.
    #[arg(long, short = 'k', default_value_t = 5)]
    pub k: usize,
    /// Months per validation block.
    #[arg(long, default_value_t = 120)]
    pub h_val: usize,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[command(flatten)]
    pub panel: PanelArgs,
    /// District graph JSON; required for stlm and hstm.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: ModelKind,
    /// Model configuration JSON; required for stlm and hstm.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Months to forecast; defaults to the holdout length.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Replaces the configuration's seed.
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Forecast CSV as written by `forecast`.
    #[arg(long)]
    pub forecast: PathBuf,
    #[command(flatten)]
    pub panel: PanelArgs,
    #[arg(long, value_enum, default_value_t = Normalizer::Train)]
    pub normalizer: Normalizer,
    /// Forecast the improvement table is measured against; defaults to the seasonal naive one.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

/// Runs a parsed command line on a pool of `cli.jobs` threads.
pub fn run(cli: Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| Error::InvalidSpec(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Ingest(a) => in_out_dir(&a.out.out, "ingest", |dir, m| cmd_ingest(&a, dir, m)),
        Command::Synth(a) => in_out_dir(&a.out.out, "synth", |dir, m| cmd_synth(&a, dir, m)),
        Command::Analytics(a) => in_out_dir(&a.out.out, "analytics", |dir, m| cmd_analytics(&a, dir, m)),
        Command::Tune(a) => in_out_dir(&a.out.out, "tune", |dir, m| cmd_tune(&a, dir, m)),
        Command::Forecast(a) => in_out_dir(&a.out.out, "forecast", |dir, m| cmd_forecast(&a, dir, m)),
        Command::Evaluate(a) => in_out_dir(&a.out.out, "evaluate", |dir, m| cmd_evaluate(&a, dir, m)),
    })
}

/// Runs `body`, then writes the manifest. On failure removes every declared output, and
/// the directory itself if this run created it.
fn in_out_dir<F>(dir: &Path, command: &str, body: F) -> Result<()>
where
    F: FnOnce(&Path, &mut RunManifest) -> Result<()>,
{
    let created = !dir.exists();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = RunManifest::start(command);
    let result = body(dir, &mut manifest).and_then(|()| manifest.finish(dir));
    match result {
        Ok(()) => {
            info!("{command}: wrote {} files to {}", manifest.outputs.len() + 1, dir.display());
            Ok(())
        }
        Err(e) => {
            if created {
                let _ = fs::remove_dir_all(dir);
            } else {
                for name in manifest.outputs.iter().map(String::as_str).chain([MANIFEST_FILE]) {
                    let _ = fs::remove_file(dir.join(name));
                }
            }
            Err(e)
        }
    }
}

/// Declares `name` as an output and returns its path.
fn output(dir: &Path, m: &mut RunManifest, name: &str) -> PathBuf {
    m.output(name);
    dir.join(name)
}

pub fn cmd_ingest(a: &IngestArgs, dir: &Path, m: &mut RunManifest) -> Result<()> {
    let schema = CsvSchema {
        station: a.station_col.clone(),
        district: a.district_col.clone(),
        date: a.date_col.clone(),
        rainfall: a.rainfall_col.clone(),
        lat: a.lat_col.clone(),
        lon: a.lon_col.clone(),
    };
    m.input(&a.stations);
    let mut parsed = ingest::parse_station_csv(&a.stations, &schema, a.max_reject)?;
    if !parsed.rejected.is_empty() {
        for r in parsed.rejected.iter().take(20) {
            warn!("row {}: {}", r.row, r.reason);
        }
        let mut w = csv::Writer::from_path(output(dir, m, "rejected.csv"))?;
        w.write_record(["row", "reason"])?;
        for r in &parsed.rejected {
            w.write_record([r.row.to_string(), r.reason.clone()])?;
        }
        w.flush().map_err(|e| Error::io(dir, e))?;
    }
    if let Some(coords) = &a.coords {
        m.input(coords);
        ingest::attach_station_coordinates(coords, &mut parsed.records)?;
    }
    let daily = ingest::district_daily(&parsed.records)?;
    let panel = split_panel(ingest::monthly_aggregate(&daily)?, a.train_end)?;
    panel.write_csv(&output(dir, m, "panel.csv"))?;
    info!(
        "{} rows, {} rejected, {} districts x {} months",
        parsed.total_rows,
        parsed.rejected.len(),
        panel.num_districts(),
        panel.num_months()
    );
    if a.coords.is_some() || a.lat_col.is_some() {
        let centroids = crate::spatial::district_centroids(&parsed.records)?;
        let graph = DistrictGraph::from_centroid_map(&centroids).aligned_to(&panel.districts)?;
        graph.write_json(&output(dir, m, "graph.json"))?;
    } else {
        warn!("no coordinates given; graph.json not written");
    }
    Ok(())
}

pub fn cmd_synth(a: &SynthArgs, dir: &Path, m: &mut RunManifest) -> Result<()> {
    let mut spec: SynthSpec = match &a.spec {
        Some(p) => {
            m.input(p);
            m.config = Some(p.clone());
            read_json(p)?
        }
        None => SynthSpec::default(),
    };
    if let Some(v) = a.seed {
        spec.seed = v;
    }
    if let Some(v) = a.districts {
        spec.districts = v;
    }
    if let Some(v) = a.years {
        spec.years = v;
    }
    if let Some(v) = a.start_year {
        spec.start_year = v;
    }
    if let Some(v) = a.train_end {
        spec.train_end = v;
    }
    m.seed = Some(spec.seed);
    m.config_hash = Some(crate::models::config::config_hash(&spec));
    let s = synth_panel(&spec)?;
    s.panel.write_csv(&output(dir, m, "panel.csv"))?;
    s.graph.write_json(&output(dir, m, "graph.json"))?;
    write_json(&output(dir, m, "spec.json"), &spec)
}

pub fn cmd_analytics(a: &AnalyticsArgs, dir: &Path, m: &mut RunManifest) -> Result<()> {
    let panel = a.panel.load(m)?;
    let graph = load_graph(&a.graph, &panel, m)?;
    let history = panel.history(panel.num_months());
    let annual = AnnualTotals::from_history(&history)?;
    let first = annual.first_year;
    let last = first + annual.num_years() as i32 - 1;
    let span = a.decades.unwrap_or(YearRange::new(first, last));
    let decades: Vec<YearRange> = YearRange::decades(span.start, span.end - 9);
    if decades.is_empty() {
        return Err(Error::InvalidSpec(format!("{span} holds no whole decade")));
    }
    let baseline = SpiBaseline::fit(&annual, a.baseline)?;
    write_json(&output(dir, m, "spi_baseline.json"), &baseline)?;

    let counts = decades
        .iter()
        .map(|d| analytics::count_extreme_years(&annual, &baseline, *d))
        .collect::<Result<Vec<_>>>()?;
    analytics::write_extremes_csv(&output(dir, m, "extremes.csv"), &panel.districts, &decades, &counts)?;
    let slopes = analytics::decadal_slopes(&annual, &decades)?;
    analytics::write_slopes_csv(&output(dir, m, "slopes.csv"), &panel.districts, &decades, &slopes)?;
    let shares = analytics::monsoon_proportions(&annual, &decades)?;
    analytics::write_monsoon_csv(&output(dir, m, "monsoon.csv"), &panel.districts, &decades, &shares)?;

    let metrics = if a.metric.is_empty() { SeriesMetric::ALL.to_vec() } else { a.metric.clone() };
    let mut rows = Vec::new();
    for metric in metrics {
        rows.extend(analytics::correlation_vs_distance(&history, &graph, metric)?);
    }
    analytics::write_correlation_csv(&output(dir, m, "correlation.csv"), &rows)
}

#[derive(Serialize)]
struct TuneSummary {
    model: &'static str,
    best_index: usize,
    best_score: f64,
    best_config_hash: String,
    evaluated: usize,
    exhausted: bool,
    folds: Vec<(usize, usize, usize)>,
}

pub fn cmd_tune(a: &TuneArgs, dir: &Path, m: &mut RunManifest) -> Result<()> {
    let panel = a.panel.load(m)?;
    let graph = load_graph(&a.graph, &panel, m)?;
    m.input(&a.space);
    m.config = Some(a.space.clone());
    m.seed = Some(a.seed);
    let train = panel.training_history();
    let plan = build_folds(train.len(), a.k, a.h_val)?;
    let districts = panel.districts.clone();
    let folds = plan.folds.iter().map(|f| (f.train_len, f.val_start, f.val_end)).collect();

    let (name, best_index, best_score, hash, evaluated, exhausted) = match a.model {
        TunedModel::Stlm => {
            let space = StlmSpace::new(&read_json::<StlmSpaceFile>(&a.space)?, districts, a.seed)?;
            let out = random_search(&space, a.r, a.seed, |c| {
                cv_score_model(&ModelConfig::Stlm(c.clone()), &train, &graph, &plan)
            })?;
            write_json(&output(dir, m, "best_config.json"), &out.best)?;
            write_trace(&output(dir, m, "trace.jsonl"), &out.trace)?;
            let hash = out.trace[out.best_index].config_hash.clone();
            ("stlm", out.best_index, out.best_score, hash, out.trace.len(), out.exhausted)
        }
        TunedModel::Hstm => {
            let space = HstmSpace::new(&read_json::<HstmSpaceFile>(&a.space)?, districts, a.seed)?;
            let out = random_search(&space, a.r, a.seed, |c| {
                cv_score_model(&ModelConfig::Hstm(c.clone()), &train, &graph, &plan)
            })?;
            write_json(&output(dir, m, "best_config.json"), &out.best)?;
            write_trace(&output(dir, m, "trace.jsonl"), &out.trace)?;
            let hash = out.trace[out.best_index].config_hash.clone();
            ("hstm", out.best_index, out.best_score, hash, out.trace.len(), out.exhausted)
        }
    };
    if !best_score.is_finite() {
        warn!("every configuration failed; see trace.jsonl");
    }
    info!("{name}: best draw {best_index} with cv {best_score:.5}");
    m.config_hash = Some(hash.clone());
    let summary = TuneSummary {
        model: name,
        best_index,
        best_score,
        best_config_hash: hash,
        evaluated,
        exhausted,
        folds,
    };
    write_json(&output(dir, m, "summary.json"), &summary)
}

pub fn cmd_forecast(a: &ForecastArgs, dir: &Path, m: &mut RunManifest) -> Result<()> {
    let panel = a.panel.load(m)?;
    m.seed = Some(a.seed);
    let need = |what: &str, v: &Option<PathBuf>| {
        v.clone()
            .ok_or_else(|| Error::InvalidSpec(format!("--{what} is required for this model")))
    };
    let model = match a.model {
        ModelKind::Naive => ModelConfig::Naive,
        ModelKind::Stlm => {
            let path = need("config", &a.config)?;
            let mut c: StlmConfig = read_json(&path)?;
            c.seed = a.seed;
            m.input(&path);
            m.config = Some(path);
            ModelConfig::Stlm(c)
        }
        ModelKind::Hstm => {
            let path = need("config", &a.config)?;
            let mut c: HstmConfig = read_json(&path)?;
            c.seed = a.seed;
            m.input(&path);
            m.config = Some(path);
            ModelConfig::Hstm(c)
        }
    };
    let graph = match (&a.graph, a.model) {
        (Some(p), _) => load_graph(p, &panel, m)?,
        (None, ModelKind::Naive) => DistrictGraph::new(panel.districts.clone(), vec![crate::spatial::LatLon::new(0.0, 0.0); panel.num_districts()]),
        (None, _) => return Err(Error::InvalidSpec("--graph is required for this model".into())),
    };
    let horizon = a.horizon.unwrap_or(panel.holdout_len());
    let forecast = model.fit_forecast(&panel.training_history(), &graph, horizon)?;
    m.config_hash = forecast.config_hash.clone();
    forecast.write_csv(&output(dir, m, "forecast.csv"))?;
    forecast.write_json(&output(dir, m, "forecast.json"))
}

pub fn cmd_evaluate(a: &EvaluateArgs, dir: &Path, m: &mut RunManifest) -> Result<()> {
    let panel = a.panel.load(m)?;
    m.input(&a.forecast);
    let forecast = ForecastResult::read_csv(&a.forecast)?;
    let report = holdout_evaluate(&forecast, &panel, a.normalizer)?;
    let reference = match &a.reference {
        Some(p) => {
            m.input(p);
            ForecastResult::read_csv(p)?
        }
        None => naive_forecast(&panel.training_history(), forecast.horizon())?,
    };
    let baseline = holdout_evaluate(&reference, &panel, a.normalizer)?;
    info!(
        "mean sMAPE {:.2} vs {:.2}, mean NRMSE {:.4} vs {:.4}",
        report.mean_smape, baseline.mean_smape, report.mean_nrmse, baseline.mean_nrmse
    );
    report.write_metrics_csv(&output(dir, m, "metrics.csv"))?;
    report.write_yearly_csv(&output(dir, m, "yearly_smape.csv"))?;
    baseline.write_metrics_csv(&output(dir, m, "reference_metrics.csv"))?;
    write_improvement_csv(&output(dir, m, "improvement.csv"), &improvement_table(&baseline, &report)?)?;
    report.write_json(&output(dir, m, "report.json"))
}
