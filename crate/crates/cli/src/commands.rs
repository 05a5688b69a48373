//! Subcommand implementations.

use std::fmt::Write as _;
use std::path::PathBuf;

use rspim::bench::{calibrate_c, replication_records, run_replications, summarize, ExperimentConfig, Method, Module};
use rspim::dgp::BetaPattern;
use rspim::model::{Dataset, Interval, NoiseKind};
use rspim::multisplit::{
    intersection_interval, run_splits, union_interval_shrunk, MultiSplitResult, PipelineConfig, PivotMethod,
};
use rspim::robust::{Multiplier, DEFAULT_BOOT};
use rspim::selectors::SelectorKind;
use serde::{Deserialize, Serialize};

use crate::args::{
    AnalyzeArgs, AnalyzeMethod, CalibrateArgs, ContourArgs, DataArgs, ExperimentArgs, MultiplierArg, NoiseArg,
    SelectorArg, SelectorArgs, SimulateArgs,
};
use crate::failure::CliError;
use crate::input::load_dataset;
use crate::output::OutputDir;

const DEFAULT_REPS: usize = 200;
const UNION_SPLITS: usize = 10;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn apply_selection(pipe: &mut PipelineConfig, sel: &SelectorArgs, default_k: usize) -> Result<(), CliError> {
    if let Some(kind) = sel.selector {
        pipe.selector = match kind {
            SelectorArg::LassoStability => SelectorKind::stability(),
            SelectorArg::Lasso => SelectorKind::Lasso { lambda: None },
            SelectorArg::Random => SelectorKind::Random { k: sel.k.unwrap_or(default_k) },
        };
    } else if sel.k.is_some() {
        return Err(config_err("--k requires --selector random"));
    }
    if let Some(l) = sel.lambda {
        match &mut pipe.selector {
            SelectorKind::LassoStability { lambda, .. } | SelectorKind::Lasso { lambda } => *lambda = Some(l),
            _ => return Err(config_err("--lambda applies only to lasso-based selectors")),
        }
    }
    if let Some(k) = sel.k_max {
        pipe.k_max = Some(k);
    }
    if let Some(f) = sel.frac_inf {
        pipe.frac_inf = f;
    }
    if let Some(c) = sel.carve {
        pipe.carve = c;
    }
    Ok(())
}

fn multiplier(m: Option<MultiplierArg>) -> Option<Multiplier> {
    m.map(|m| match m {
        MultiplierArg::Rademacher => Multiplier::Rademacher,
        MultiplierArg::Mammen => Multiplier::Mammen,
    })
}

/// Preset or JSON config, then flag overrides.
pub fn build_experiment(a: &ExperimentArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match (&a.config, &a.module) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<ExperimentConfig>(&text)?
        }
        (None, Some(m)) => m.parse::<Module>()?.preset(DEFAULT_REPS, a.seed),
        (None, None) => return Err(config_err("either --module or --config is required")),
    };
    cfg.master_seed = a.seed;
    if let Some(m) = &a.method {
        let method: Method = m.parse()?;
        if method == Method::RspimUnion && cfg.method != Method::RspimUnion && a.splits.is_none() {
            cfg.r_splits = UNION_SPLITS;
        }
        cfg.method = method;
    }
    if let Some(r) = a.reps {
        cfg.replications = r;
    }
    let d = &mut cfg.design;
    let resized = a.p.is_some() || a.s.is_some();
    if let Some(n) = a.n {
        d.n = n;
    }
    if let Some(p) = a.p {
        d.p = p;
    }
    if let Some(s) = a.s {
        d.s = s;
    }
    if let Some(r) = a.rho {
        d.rho = r;
    }
    if let Some(b) = a.beta_norm {
        d.snr_beta_norm = b;
        d.beta_pattern = BetaPattern::EqualMagnitude;
    }
    if resized {
        if let BetaPattern::Custom(values) = &d.beta_pattern {
            // Keep the signal size of a custom pattern on the new support.
            let v = values.iter().copied().find(|v| *v != 0.0).unwrap_or(0.0);
            let mut beta = vec![0.0; d.p];
            beta[..d.s.min(d.p)].iter_mut().for_each(|b| *b = v);
            d.beta_pattern = BetaPattern::Custom(beta);
        }
    }
    if let Some(noise) = a.noise {
        d.noise_kind = match noise {
            NoiseArg::Gaussian => NoiseKind::Gaussian,
            NoiseArg::HeteroskedasticX1 => NoiseKind::HeteroskedasticX1,
            NoiseArg::StudentT => NoiseKind::StudentT { df: a.df },
        };
    }
    if let Some(s) = a.sigma {
        d.sigma = s;
    }
    let s_default = cfg.design.s.max(1);
    if let Some(alpha) = a.alpha {
        cfg.alpha = alpha;
    }
    if let Some(c) = a.c {
        cfg.shrink_c = c;
    }
    if let Some(r) = a.splits {
        cfg.r_splits = r;
    }
    if let Some(f) = a.folds {
        cfg.folds = f;
    }
    if let Some(b) = a.selection.n_boot {
        cfg.n_boot = b;
    }
    if let Some(m) = multiplier(a.selection.multiplier) {
        cfg.multiplier = m;
    }
    apply_selection(&mut cfg.pipeline, &a.selection, s_default)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let cfg = build_experiment(&a.experiment)?;
    let mut out = OutputDir::create(&a.experiment.out)?;
    let outcomes = run_replications(&cfg)?;
    let report = summarize(&cfg, &outcomes)?;
    let records = replication_records(&outcomes, cfg.alpha, cfg.shrink_c)?;
    out.write_json("report.json", &report)?;
    out.write_csv("replications.csv", &records)?;
    out.finish("simulate", &cfg, cfg.master_seed)
}

/// Parses `lo:hi:step` into an increasing grid.
pub fn parse_c_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let [lo, hi, step] = parse_triple(spec, "c grid")?;
    if !(lo > 0.0 && hi >= lo && step > 0.0) {
        return Err(config_err(format!("c grid '{spec}' needs 0 < lo <= hi and step > 0")));
    }
    let k = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=k).map(|i| ((lo + i as f64 * step) * 1e10).round() / 1e10).collect())
}

fn parse_triple(spec: &str, what: &str) -> Result<[f64; 3], CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || config_err(format!("{what} '{spec}' must look like a:b:c"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let mut v = [0.0; 3];
    for (slot, s) in v.iter_mut().zip(&parts) {
        *slot = s.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(bad)?;
    }
    Ok(v)
}

pub fn calibrate(a: &CalibrateArgs) -> Result<(), CliError> {
    let cfg = build_experiment(&a.experiment)?;
    let grid = parse_c_grid(&a.c_grid)?;
    let target = a.target.unwrap_or(1.0 - cfg.alpha);
    if !(target > 0.0 && target < 1.0) {
        return Err(config_err(format!("target coverage must lie in (0, 1), got {target}")));
    }
    let mut out = OutputDir::create(&a.experiment.out)?;
    let result = calibrate_c(&cfg, &grid, target)?;
    out.write_json("calibration.json", &result)?;
    #[derive(Serialize)]
    struct Snapshot<'a> {
        experiment: &'a ExperimentConfig,
        c_grid: &'a [f64],
        target: f64,
    }
    out.finish("calibrate", &Snapshot { experiment: &cfg, c_grid: &grid, target }, cfg.master_seed)
}

/// Everything that determines an analysis besides the input files' content.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub x: PathBuf,
    pub y: PathBuf,
    pub alpha: f64,
    pub method: String,
    pub splits: usize,
    pub shrink_c: f64,
    pub pipeline: PipelineConfig,
    pub master_seed: u64,
}

fn analysis_config(a: &DataArgs) -> Result<AnalysisConfig, CliError> {
    let (name, splits, pivot) = match a.method {
        AnalyzeMethod::Single => {
            if a.splits.is_some_and(|r| r != 1) {
                return Err(config_err("method 'single' uses exactly one split; use 'union' for more"));
            }
            ("single", 1, PivotMethod::ExactT)
        }
        AnalyzeMethod::Union => ("union", a.splits.unwrap_or(UNION_SPLITS), PivotMethod::ExactT),
        AnalyzeMethod::Wildboot => (
            "wildboot",
            a.splits.unwrap_or(1),
            PivotMethod::WildBootstrap {
                n_boot: a.selection.n_boot.unwrap_or(DEFAULT_BOOT),
                multiplier: multiplier(a.selection.multiplier).unwrap_or_default(),
            },
        ),
    };
    if a.method != AnalyzeMethod::Wildboot && (a.selection.n_boot.is_some() || a.selection.multiplier.is_some()) {
        return Err(config_err("--n-boot and --multiplier apply only to --method wildboot"));
    }
    if splits == 0 {
        return Err(config_err("--splits must be positive"));
    }
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(config_err(format!("alpha must lie in (0, 1), got {}", a.alpha)));
    }
    if !(a.c > 0.0 && a.c.is_finite()) {
        return Err(config_err(format!("c must be positive, got {}", a.c)));
    }
    let mut pipeline = PipelineConfig { pivot, ..PipelineConfig::default() };
    apply_selection(&mut pipeline, &a.selection, 1)?;
    if matches!(pipeline.selector, SelectorKind::Random { .. }) && a.selection.k.is_none() {
        return Err(config_err("--selector random requires --k"));
    }
    Ok(AnalysisConfig {
        x: a.x.clone(),
        y: a.y.clone(),
        alpha: a.alpha,
        method: name.into(),
        splits,
        shrink_c: a.c,
        pipeline,
        master_seed: a.seed,
    })
}

fn run_analysis(a: &DataArgs) -> Result<(AnalysisConfig, Dataset, MultiSplitResult), CliError> {
    let cfg = analysis_config(a)?;
    let d = load_dataset(&cfg.x, &cfg.y)?;
    let multi = run_splits(&d, cfg.splits, &cfg.pipeline, cfg.master_seed)?;
    Ok((cfg, d, multi))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoordinateReport {
    pub coord: usize,
    pub name: String,
    pub selection_frequency: f64,
    pub n_selected: usize,
    /// Refit estimate in each split that selected the coordinate.
    pub estimates: Vec<f64>,
    /// Level set of the aggregated contour, as disjoint segments.
    pub intervals: Vec<Interval>,
    /// Intersection of per-split level sets (diagnostic); unshrunk only.
    pub intersection: Option<Interval>,
    pub method: String,
    pub carved: bool,
    pub c: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntervalsReport {
    pub method: String,
    pub alpha: f64,
    pub c: f64,
    pub splits: usize,
    pub empty_splits: usize,
    pub n: usize,
    pub p: usize,
    pub carved: bool,
    pub coordinates: Vec<CoordinateReport>,
}

pub fn analyze(a: &AnalyzeArgs) -> Result<(), CliError> {
    let (cfg, d, multi) = run_analysis(&a.data)?;
    let carved = cfg.pipeline.carve > 0;
    let coordinates = multi
        .ever_selected()
        .into_iter()
        .map(|j| {
            let fits = multi.fits_for(j);
            Ok(CoordinateReport {
                coord: j,
                name: d.label(j),
                selection_frequency: multi.selection_frequency(j),
                n_selected: fits.len(),
                estimates: fits.iter().map(|f| f.estimate).collect(),
                intervals: union_interval_shrunk(&multi, j, cfg.alpha, cfg.shrink_c)?,
                intersection: if cfg.shrink_c == 1.0 { intersection_interval(&multi, j, cfg.alpha)? } else { None },
                method: cfg.method.clone(),
                carved,
                c: cfg.shrink_c,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let report = IntervalsReport {
        method: cfg.method.clone(),
        alpha: cfg.alpha,
        c: cfg.shrink_c,
        splits: cfg.splits,
        empty_splits: multi.empty_splits(),
        n: d.n(),
        p: d.p(),
        carved,
        coordinates,
    };
    let mut out = OutputDir::create(&a.data.out)?;
    out.write_json("intervals.json", &report)?;
    out.finish("analyze", &cfg, cfg.master_seed)
}

/// `lo:hi:npts`, with the refit estimates inside `[lo, hi]` added.
pub fn contour_grid(spec: &str, estimates: &[f64]) -> Result<Vec<f64>, CliError> {
    let [lo, hi, npts] = parse_triple(spec, "grid")?;
    if hi <= lo || npts < 2.0 || npts.fract() != 0.0 {
        return Err(config_err(format!("grid '{spec}' needs lo < hi and an integer npts >= 2")));
    }
    let m = npts as usize;
    let step = (hi - lo) / (m - 1) as f64;
    let mut grid: Vec<f64> = (0..m).map(|i| if i == m - 1 { hi } else { lo + i as f64 * step }).collect();
    grid.extend(estimates.iter().copied().filter(|e| (lo..=hi).contains(e)));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}

pub fn contour(a: &ContourArgs) -> Result<(), CliError> {
    let (cfg, d, multi) = run_analysis(&a.data)?;
    if a.coord >= d.p() {
        return Err(config_err(format!("coordinate {} out of range for {} columns", a.coord, d.p())));
    }
    let fits = multi.fits_for(a.coord);
    if fits.is_empty() {
        return Err(CliError::NotAvailable(format!(
            "coordinate {} was not selected in any of {} splits",
            a.coord, cfg.splits
        )));
    }
    let estimates: Vec<f64> = fits.iter().map(|f| f.estimate).collect();
    let grid = contour_grid(&a.grid, &estimates)?;
    let mut csv = String::from("theta,plausibility,series\n");
    let mut max = vec![0.0f64; grid.len()];
    for fit in &fits {
        let series = format!("split_{}", fit.contour.meta.split.unwrap_or(0));
        for (k, &t) in grid.iter().enumerate() {
            let v = fit.contour.eval_shrunk(t, cfg.shrink_c)?;
            max[k] = max[k].max(v);
            writeln!(csv, "{t},{v},{series}").expect("write to string");
        }
    }
    for (t, v) in grid.iter().zip(&max) {
        writeln!(csv, "{t},{v},max").expect("write to string");
    }
    let mut out = OutputDir::create(&a.data.out)?;
    out.write_bytes("contour.csv", csv.as_bytes())?;
    #[derive(Serialize)]
    struct Snapshot<'a> {
        analysis: &'a AnalysisConfig,
        coord: usize,
        grid: &'a str,
    }
    out.finish("contour", &Snapshot { analysis: &cfg, coord: a.coord, grid: &a.grid }, cfg.master_seed)
}
