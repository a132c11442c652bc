//! Trajectory, surrogate R² and fitness-distribution reports from campaign logs.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use boga_core::engine::{
    read_evaluations, read_generation_lines, EvaluationRecord, GenerationLine, GenerationRecord, InitRecord, LogError,
    CONFIG_FILE, EVALUATIONS_FILE, GENERATIONS_FILE,
};
use boga_core::{CampaignConfig, Direction};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::svg::{self, BoxStats, Frame, Series};

pub const DEFAULT_WINDOW: usize = 40;
pub const DEFAULT_BANDS: [usize; 4] = [0, 10, 50, 100];

pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const TRAJECTORY_SVG: &str = "trajectory.svg";
pub const R2_CSV: &str = "r2.csv";
pub const R2_SVG: &str = "r2.svg";
pub const DISTRIBUTIONS_CSV: &str = "distributions.csv";
pub const DISTRIBUTIONS_SVG: &str = "distributions.svg";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}:{line}: malformed log record: {message}\n  {record}")]
    MalformedLog { path: PathBuf, line: usize, record: String, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("invalid report options: {0}")]
    Options(String),
    #[error("no log directories given")]
    NoRuns,
}

impl From<LogError> for ReportError {
    fn from(e: LogError) -> Self {
        match e {
            LogError::Io { path, source } => ReportError::Io { path, source },
            LogError::Malformed { path, line, record, message } => {
                ReportError::MalformedLog { path, line, record, message }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    /// Trailing window of the running top-quartile mean, in evaluations.
    pub window: usize,
    /// Band edges in generations; `[0, 10, 50, 100]` gives three bands.
    pub bands: Vec<usize>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self { window: DEFAULT_WINDOW, bands: DEFAULT_BANDS.to_vec() }
    }
}

impl ReportOptions {
    pub fn validate(&self) -> Result<(), ReportError> {
        if self.window == 0 {
            return Err(ReportError::Options("window must be >= 1".into()));
        }
        if self.bands.len() < 2 || self.bands.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ReportError::Options(format!(
                "bands must be at least two strictly increasing edges, got {:?}",
                self.bands
            )));
        }
        Ok(())
    }
}

/// Mean of the top quarter (rounded up, at least one) of the trailing
/// `window` values at every index.
///
/// # Panics
/// If `window` is zero.
pub fn running_top_quartile(values: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1, "window must be at least 1");
    let mut buf = Vec::with_capacity(window);
    (0..values.len())
        .map(|i| {
            let start = (i + 1).saturating_sub(window);
            buf.clear();
            buf.extend_from_slice(&values[start..=i]);
            buf.sort_by(|a, b| b.total_cmp(a));
            let top = buf.len().div_ceil(4).max(1);
            buf[..top].iter().sum::<f64>() / top as f64
        })
        .collect()
}

/// One campaign's log directory, parsed and checked.
#[derive(Debug, Clone)]
pub struct RunLog {
    pub dir: PathBuf,
    pub label: String,
    pub config_sha256: String,
    pub master_seed: u64,
    pub direction: Direction,
    /// `k_propose` of each schedule phase.
    pub k_propose: Vec<usize>,
    pub init: InitRecord,
    pub generations: Vec<GenerationRecord>,
    pub evaluations: Vec<EvaluationRecord>,
}

impl RunLog {
    pub fn k_label(&self) -> String {
        let ks: Vec<String> = self.k_propose.iter().map(|k| k.to_string()).collect();
        format!("k_propose={}", ks.join("/"))
    }

    pub fn last_generation(&self) -> usize {
        self.generations.last().map_or(0, |g| g.generation)
    }
}

fn raw_line(path: &Path, line: usize) -> String {
    fs::read_to_string(path)
        .ok()
        .and_then(|t| t.lines().nth(line.saturating_sub(1)).map(str::to_string))
        .unwrap_or_default()
}

fn malformed(path: &Path, line: usize, message: impl Into<String>) -> ReportError {
    ReportError::MalformedLog { path: path.to_path_buf(), line, record: raw_line(path, line), message: message.into() }
}

/// Reads and cross-checks the log in `dir`.
pub fn load_run(dir: &Path) -> Result<RunLog, ReportError> {
    let config_path = dir.join(CONFIG_FILE);
    let config_text =
        fs::read_to_string(&config_path).map_err(|source| ReportError::Io { path: config_path.clone(), source })?;
    let config = CampaignConfig::from_toml_str(&config_text)
        .map_err(|e| ReportError::Config { path: config_path.clone(), message: e.to_string() })?;
    let config_sha256 = hex::encode(Sha256::digest(config_text.as_bytes()));

    let gen_path = dir.join(GENERATIONS_FILE);
    let mut init = None;
    let mut generations: Vec<GenerationRecord> = Vec::new();
    for (i, line) in read_generation_lines(dir)?.into_iter().enumerate() {
        let n = i + 1;
        match line {
            GenerationLine::Init(r) if i == 0 => init = Some(r),
            GenerationLine::Init(_) => return Err(malformed(&gen_path, n, "initialization record out of place")),
            GenerationLine::Generation(r) => {
                if init.is_none() {
                    return Err(malformed(&gen_path, n, "generation record before initialization"));
                }
                let expected = generations.len() + 1;
                if r.generation != expected {
                    return Err(malformed(
                        &gen_path,
                        n,
                        format!("expected generation {expected}, found {}", r.generation),
                    ));
                }
                generations.push(r);
            }
            GenerationLine::Counters(_) => {}
        }
    }
    let init = init.ok_or_else(|| malformed(&gen_path, 1, "log has no initialization record"))?;

    let eval_path = dir.join(EVALUATIONS_FILE);
    let evaluations = read_evaluations(dir)?;
    let last = generations.len();
    let mut prev_ts = None;
    for (i, r) in evaluations.iter().enumerate() {
        if r.generation > last {
            return Err(malformed(
                &eval_path,
                i + 1,
                format!("evaluation from generation {} but the log ends at {last}", r.generation),
            ));
        }
        if prev_ts.is_some_and(|p| r.timestamp <= p) {
            return Err(malformed(&eval_path, i + 1, "timestamps must increase"));
        }
        if i > 0 && r.generation < evaluations[i - 1].generation {
            return Err(malformed(&eval_path, i + 1, "generation went backwards"));
        }
        if r.score.is_some_and(|s| !s.is_finite()) {
            return Err(malformed(&eval_path, i + 1, "non-finite score"));
        }
        prev_ts = Some(r.timestamp);
    }

    Ok(RunLog {
        dir: dir.to_path_buf(),
        label: dir.display().to_string(),
        config_sha256,
        master_seed: config.master_seed,
        direction: config.objective.direction,
        k_propose: config.schedule.iter().map(|p| p.k_propose).collect(),
        init,
        generations,
        evaluations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub generation: usize,
    pub evaluated: usize,
    pub failed: usize,
    /// Best score so far.
    pub best: Option<f64>,
    /// Mean score of this generation's evaluations.
    pub mean: Option<f64>,
    /// Running top-quartile mean at this generation's last evaluation.
    pub running_top_quartile: Option<f64>,
}

pub fn trajectory(run: &RunLog, window: usize) -> Vec<TrajectoryRow> {
    let dir = run.direction;
    let scored: Vec<(usize, f64)> = run.evaluations.iter().filter_map(|r| r.score.map(|s| (r.generation, s))).collect();
    let oriented: Vec<f64> = scored.iter().map(|&(_, s)| dir.orient(s)).collect();
    let rtq = running_top_quartile(&oriented, window);

    let mut rows = Vec::with_capacity(run.last_generation() + 1);
    let mut cursor = 0;
    let mut best: Option<f64> = None;
    for g in 0..=run.last_generation() {
        let start = cursor;
        while cursor < scored.len() && scored[cursor].0 <= g {
            let s = scored[cursor].1;
            if best.is_none_or(|b| dir.beats(s, b)) {
                best = Some(s);
            }
            cursor += 1;
        }
        let these = &scored[start..cursor];
        rows.push(TrajectoryRow {
            generation: g,
            evaluated: these.len(),
            failed: run.evaluations.iter().filter(|r| r.generation == g && r.score.is_none()).count(),
            best,
            mean: (!these.is_empty()).then(|| these.iter().map(|x| x.1).sum::<f64>() / these.len() as f64),
            running_top_quartile: cursor.checked_sub(1).map(|i| dir.orient(rtq[i])),
        });
    }
    rows
}

/// `(generation, validation R²)` for every generation that fitted a surrogate.
pub fn r2_series(run: &RunLog) -> Vec<(usize, Option<f64>)> {
    let init = run.init.refit.then_some((0, run.init.validation_r2));
    init.into_iter()
        .chain(run.generations.iter().filter(|g| g.refit).map(|g| (g.generation, g.validation_r2)))
        .collect()
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandSummary {
    pub label: String,
    pub count: usize,
    pub mean: Option<f64>,
    pub stats: Option<BoxStats>,
}

/// Scores grouped into generation bands `[e_i, e_{i+1})`; the last band
/// includes its upper edge.
pub fn band_summaries(run: &RunLog, bands: &[usize]) -> Vec<BandSummary> {
    let n = bands.len() - 1;
    (0..n)
        .map(|i| {
            let (lo, hi) = (bands[i], bands[i + 1]);
            let last = i + 1 == n;
            let mut xs: Vec<f64> = run
                .evaluations
                .iter()
                .filter(|r| r.generation >= lo && (r.generation < hi || (last && r.generation == hi)))
                .filter_map(|r| r.score)
                .collect();
            xs.sort_by(f64::total_cmp);
            let stats = (!xs.is_empty()).then(|| BoxStats {
                min: xs[0],
                q1: quantile(&xs, 0.25),
                median: quantile(&xs, 0.5),
                q3: quantile(&xs, 0.75),
                max: xs[xs.len() - 1],
            });
            BandSummary {
                label: format!("{lo}-{hi}"),
                count: xs.len(),
                mean: (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64),
                stats,
            }
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> ReportError + '_ {
    move |e| ReportError::Io { path: path.to_path_buf(), source: std::io::Error::other(e) }
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        w.write_record(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn provenance(runs: &[RunLog]) -> Vec<String> {
    runs.iter()
        .map(|r| {
            format!(
                "run {}: config sha256 {}, master_seed {}, {}",
                r.label,
                r.config_sha256,
                r.master_seed,
                r.k_label()
            )
        })
        .collect()
}

/// Colors keyed by k_propose setting, so runs sharing a setting share a color.
fn k_colors(runs: &[RunLog]) -> (Vec<&'static str>, Vec<(String, &'static str)>) {
    let labels: BTreeSet<String> = runs.iter().map(RunLog::k_label).collect();
    let labels: Vec<String> = labels.into_iter().collect();
    let color_of = |l: &str| svg::color(labels.iter().position(|x| x == l).unwrap());
    let per_run = runs.iter().map(|r| color_of(&r.k_label())).collect();
    let legend = labels.iter().map(|l| (l.clone(), color_of(l))).collect();
    (per_run, legend)
}

/// Writes the trajectory, R² and distribution tables and plots for `log_dirs`
/// into `out_dir`; returns the files written.
pub fn emit_report(log_dirs: &[PathBuf], out_dir: &Path, options: &ReportOptions) -> Result<Vec<PathBuf>, ReportError> {
    options.validate()?;
    if log_dirs.is_empty() {
        return Err(ReportError::NoRuns);
    }
    let runs = log_dirs.iter().map(|d| load_run(d)).collect::<Result<Vec<_>, _>>()?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let (colors, k_legend) = k_colors(&runs);
    let prov = provenance(&runs);
    let mut written = Vec::new();

    // Trajectories.
    let trajectories: Vec<Vec<TrajectoryRow>> = runs.iter().map(|r| trajectory(r, options.window)).collect();
    let mut rows = Vec::new();
    for (run, traj) in runs.iter().zip(&trajectories) {
        for t in traj {
            rows.push(vec![
                run.label.clone(),
                run.k_label(),
                run.master_seed.to_string(),
                t.generation.to_string(),
                t.evaluated.to_string(),
                t.failed.to_string(),
                opt(t.best),
                opt(t.mean),
                opt(t.running_top_quartile),
            ]);
        }
    }
    let path = out_dir.join(TRAJECTORY_CSV);
    write_csv(
        &path,
        &["run", "setting", "master_seed", "generation", "evaluated", "failed", "best", "mean", "running_top_quartile"],
        &rows,
    )?;
    written.push(path);

    let mut series = Vec::new();
    for (traj, color) in trajectories.iter().zip(&colors) {
        let pts = |f: fn(&TrajectoryRow) -> Option<f64>| {
            traj.iter().filter_map(|t| f(t).map(|v| (t.generation as f64, v))).collect::<Vec<_>>()
        };
        series.push(Series { color, dashed: false, markers: false, points: pts(|t| t.running_top_quartile) });
        series.push(Series { color, dashed: true, markers: false, points: pts(|t| t.best) });
    }
    let mut legend: Vec<(String, &'static str, bool)> = k_legend.iter().map(|(l, c)| (l.clone(), *c, false)).collect();
    legend.push(("solid: running top quartile".into(), "#444444", false));
    legend.push(("dashed: best so far".into(), "#444444", true));
    let frame = Frame {
        title: "Fitness trajectory".into(),
        x_label: "generation".into(),
        y_label: "fitness".into(),
        provenance: prov.clone(),
        legend,
    };
    let path = out_dir.join(TRAJECTORY_SVG);
    fs::write(&path, svg::line_chart(&frame, &series)).map_err(io_err(&path))?;
    written.push(path);

    // Surrogate R².
    let r2: Vec<Vec<(usize, Option<f64>)>> = runs.iter().map(r2_series).collect();
    let rows: Vec<Vec<String>> = runs
        .iter()
        .zip(&r2)
        .flat_map(|(run, s)| {
            s.iter().map(|(g, v)| {
                vec![run.label.clone(), run.k_label(), run.master_seed.to_string(), g.to_string(), opt(*v)]
            })
        })
        .collect();
    let path = out_dir.join(R2_CSV);
    write_csv(&path, &["run", "setting", "master_seed", "generation", "validation_r2"], &rows)?;
    written.push(path);

    let series: Vec<Series> = r2
        .iter()
        .zip(&colors)
        .map(|(s, color)| Series {
            color,
            dashed: false,
            markers: true,
            points: s.iter().filter_map(|(g, v)| v.map(|v| (*g as f64, v))).collect(),
        })
        .collect();
    let frame = Frame {
        title: "Surrogate validation R²".into(),
        x_label: "generation".into(),
        y_label: "R²".into(),
        provenance: prov.clone(),
        legend: k_legend.iter().map(|(l, c)| (l.clone(), *c, false)).collect(),
    };
    let path = out_dir.join(R2_SVG);
    fs::write(&path, svg::line_chart(&frame, &series)).map_err(io_err(&path))?;
    written.push(path);

    // Distributions by generation band.
    let summaries: Vec<Vec<BandSummary>> = runs.iter().map(|r| band_summaries(r, &options.bands)).collect();
    let mut rows = Vec::new();
    for (run, bands) in runs.iter().zip(&summaries) {
        for b in bands {
            let s = b.stats;
            rows.push(vec![
                run.label.clone(),
                run.k_label(),
                run.master_seed.to_string(),
                b.label.clone(),
                b.count.to_string(),
                opt(b.mean),
                opt(s.map(|s| s.min)),
                opt(s.map(|s| s.q1)),
                opt(s.map(|s| s.median)),
                opt(s.map(|s| s.q3)),
                opt(s.map(|s| s.max)),
            ]);
        }
    }
    let path = out_dir.join(DISTRIBUTIONS_CSV);
    write_csv(
        &path,
        &["run", "setting", "master_seed", "band", "count", "mean", "min", "q1", "median", "q3", "max"],
        &rows,
    )?;
    written.push(path);

    let groups: Vec<String> = summaries[0].iter().map(|b| format!("generations {}", b.label)).collect();
    let boxes: Vec<Vec<Option<BoxStats>>> =
        (0..groups.len()).map(|g| summaries.iter().map(|run| run[g].stats).collect()).collect();
    let frame = Frame {
        title: "Fitness distribution by stage".into(),
        x_label: "generation band".into(),
        y_label: "fitness".into(),
        provenance: prov,
        legend: k_legend.iter().map(|(l, c)| (l.clone(), *c, false)).collect(),
    };
    let path = out_dir.join(DISTRIBUTIONS_SVG);
    fs::write(&path, svg::box_chart(&frame, &groups, &colors, &boxes)).map_err(io_err(&path))?;
    written.push(path);

    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct transcription of the definition, for comparison.
    fn brute_force(values: &[f64], window: usize, i: usize) -> f64 {
        let start = (i + 1).saturating_sub(window);
        let mut w: Vec<f64> = values[start..=i].to_vec();
        w.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let k = ((w.len() as f64) * 0.25).ceil().max(1.0) as usize;
        w[..k].iter().sum::<f64>() / k as f64
    }

    #[test]
    fn top_quartile_examples() {
        assert_eq!(running_top_quartile(&[1.0, 2.0, 3.0, 4.0], 4)[3], 4.0);
        assert!(running_top_quartile(&[2.5; 9], 4).iter().all(|&v| v == 2.5));
        let alt = [0.0, 10.0, 0.0, 10.0, 0.0, 10.0, 0.0, 10.0];
        assert_eq!(running_top_quartile(&alt, 8)[7], 10.0);
        assert_eq!(brute_force(&alt, 8, 7), 10.0);
    }

    #[test]
    fn top_quartile_matches_brute_force() {
        let values: Vec<f64> = (0..200).map(|i| ((i * 37 % 101) as f64).sin() * 10.0).collect();
        for w in [1, 3, 4, 7, 40] {
            let got = running_top_quartile(&values, w);
            for (i, g) in got.iter().enumerate() {
                assert!((g - brute_force(&values, w, i)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quantiles_interpolate() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&xs, 0.5), 3.0);
        assert_eq!(quantile(&xs, 0.25), 2.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.5), 1.5);
        assert_eq!(quantile(&[7.0], 0.75), 7.0);
    }

    #[test]
    fn options_are_checked() {
        assert!(ReportOptions::default().validate().is_ok());
        let bad = ReportOptions { window: 0, ..ReportOptions::default() };
        assert!(bad.validate().is_err());
        let bad = ReportOptions { bands: vec![0, 50, 10], ..ReportOptions::default() };
        assert!(bad.validate().is_err());
    }
}
