//! Command-line front end and the INI-style scenario config.
//!
//! ```text
//! [distribution]
//! kind = normal
//! mean = 0
//! std_dev = 4.53
//!
//! [truncation]
//! a = -20
//! b = 30
//! left = (-6,-4) (-15,-10)
//! right = (2,7) (11,17)
//!
//! [search]
//! v1 = 1
//! v2 = 5
//!
//! [optimizer]
//! penalty = 0.1
//! max_iterations = 100
//! ```
//!
//! Exit codes: 0 on success, 2 for a bad config or arguments, 3 when a
//! numeric routine fails.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::distributions::DistributionSpec;
use crate::error::Error;
use crate::format::sig;
use crate::montecarlo;
use crate::optimizer::{self, NewtonOptions, PenaltyParams, PenaltyTriple};
use crate::search_model::{self, time_indices, GridAxis, SearchSpeeds};
use crate::truncation::{make_truncated, Gap, Side, TruncatedDistribution, TruncationLayout};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

const TIME_DIGITS: usize = 6;
const STAT_DIGITS: usize = 12;

/// A config problem, with the 1-based line it was found on when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub file: Option<PathBuf>,
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            file: None,
            line: Some(line),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.file, self.line) {
            (Some(p), Some(l)) => write!(f, "{}:{l}: {}", p.display(), self.message),
            (Some(p), None) => write!(f, "{}: {}", p.display(), self.message),
            (None, Some(l)) => write!(f, "line {l}: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub distribution: DistributionSpec,
    pub layout: TruncationLayout,
    pub speeds: SearchSpeeds,
    pub penalties: PenaltyParams,
    pub newton: NewtonOptions,
}

#[derive(Debug, Default)]
struct Section {
    header_line: usize,
    entries: BTreeMap<String, (usize, String)>,
}

impl Section {
    fn take(&mut self, keys: &[&str]) -> Option<(usize, String)> {
        keys.iter().find_map(|k| self.entries.remove(*k))
    }

    fn number(&mut self, keys: &[&str]) -> Result<Option<(usize, f64)>, ConfigError> {
        match self.take(keys) {
            None => Ok(None),
            Some((line, raw)) => parse_number(&raw)
                .map(|v| Some((line, v)))
                .ok_or_else(|| ConfigError::at(line, format!("{} = {raw:?} is not a number", keys[0]))),
        }
    }

    fn finish(self, name: &str) -> Result<(), ConfigError> {
        match self.entries.into_iter().min_by_key(|(_, (line, _))| *line) {
            Some((key, (line, _))) => Err(ConfigError::at(line, format!("unknown key {key:?} in [{name}]"))),
            None => Ok(()),
        }
    }
}

fn parse_number(raw: &str) -> Option<f64> {
    match raw.trim() {
        "inf" | "infinity" => Some(f64::INFINITY),
        s => s.parse::<f64>().ok().filter(|v| v.is_finite()),
    }
}

fn parse_sections(text: &str) -> Result<BTreeMap<String, Section>, ConfigError> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split(['#', ';']).next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::at(line, "unterminated section header"))?
                .trim()
                .to_ascii_lowercase();
            if !["distribution", "truncation", "search", "optimizer"].contains(&name.as_str()) {
                return Err(ConfigError::at(line, format!("unknown section [{name}]")));
            }
            if sections.contains_key(&name) {
                return Err(ConfigError::at(line, format!("section [{name}] appears twice")));
            }
            sections.insert(
                name.clone(),
                Section {
                    header_line: line,
                    entries: BTreeMap::new(),
                },
            );
            current = Some(name);
            continue;
        }
        let Some(section) = current.as_ref() else {
            return Err(ConfigError::at(line, "key outside of any section"));
        };
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::at(line, format!("expected `key = value`, got {content:?}")))?;
        let key = key.trim().to_ascii_lowercase();
        let entries = &mut sections.get_mut(section).expect("current section").entries;
        if entries.insert(key.clone(), (line, value.trim().to_string())).is_some() {
            return Err(ConfigError::at(line, format!("duplicate key {key:?}")));
        }
    }
    Ok(sections)
}

fn parse_gaps(line: usize, raw: &str) -> Result<Vec<Gap>, ConfigError> {
    let raw = raw.trim();
    if raw.is_empty() || raw.eq_ignore_ascii_case("none") {
        return Ok(Vec::new());
    }
    let bad = || ConfigError::at(line, format!("cannot read gap list {raw:?}; expected `(lower,upper) ...`"));
    let mut gaps = Vec::new();
    let mut rest = raw;
    while !rest.is_empty() {
        let inner = rest.strip_prefix('(').ok_or_else(bad)?;
        let close = inner.find(')').ok_or_else(bad)?;
        let (lo, hi) = inner[..close].split_once(',').ok_or_else(bad)?;
        let lo = parse_number(lo).ok_or_else(bad)?;
        let hi = parse_number(hi).ok_or_else(bad)?;
        gaps.push(Gap::new(lo, hi));
        rest = inner[close + 1..].trim_start_matches([' ', '\t', ',']);
    }
    Ok(gaps)
}

fn parse_distribution(section: Option<Section>) -> Result<DistributionSpec, ConfigError> {
    let Some(mut s) = section else {
        return Ok(DistributionSpec::normal(0.0, 1.0).expect("valid default"));
    };
    let (kind_line, kind) = s
        .take(&["kind"])
        .ok_or_else(|| ConfigError::at(s.header_line, "[distribution] needs `kind`"))?;
    let mut need = |keys: &[&str]| -> Result<f64, ConfigError> {
        s.number(keys)?
            .map(|(_, v)| v)
            .ok_or_else(|| ConfigError::at(kind_line, format!("{kind} distribution needs `{}`", keys[0])))
    };
    let spec = match kind.to_ascii_lowercase().as_str() {
        "normal" => DistributionSpec::normal(need(&["mean", "mu"])?, need(&["std_dev", "sigma"])?),
        "cauchy" => DistributionSpec::cauchy(need(&["location", "median"])?, need(&["half_width", "c"])?),
        "skew-normal" | "skew_normal" | "skewnormal" => DistributionSpec::skew_normal(
            need(&["location", "eta"])?,
            need(&["scale", "varpi"])?,
            need(&["shape", "varrho"])?,
        ),
        "gamma" => DistributionSpec::gamma(need(&["shape", "kappa"])?, need(&["scale", "theta"])?),
        other => return Err(ConfigError::at(kind_line, format!("unknown distribution kind {other:?}"))),
    }
    .map_err(|e| ConfigError::at(kind_line, e.to_string()))?;
    s.finish("distribution")?;
    Ok(spec)
}

fn parse_layout(section: Option<Section>, dist: &DistributionSpec) -> Result<TruncationLayout, ConfigError> {
    let default_a = if dist.support_min().is_some() { 0.0 } else { -10.0 };
    let Some(mut s) = section else {
        return Ok(TruncationLayout::new(default_a, 10.0, Vec::new(), Vec::new()).expect("valid default"));
    };
    let a = s.number(&["a"])?;
    let b = s.number(&["b"])?;
    let left = s.take(&["left"]);
    let right = s.take(&["right"]);
    let header = s.header_line;
    s.finish("truncation")?;

    let left_gaps = match &left {
        Some((line, raw)) => parse_gaps(*line, raw)?,
        None => Vec::new(),
    };
    let right_gaps = match &right {
        Some((line, raw)) => parse_gaps(*line, raw)?,
        None => Vec::new(),
    };
    let line_of = |found: Option<usize>| found.unwrap_or(header);
    TruncationLayout::new(
        a.map_or(default_a, |(_, v)| v),
        b.map_or(10.0, |(_, v)| v),
        left_gaps,
        right_gaps,
    )
    .map_err(|e| {
        let msg = e.to_string();
        let line = if msg.contains("left gap") {
            line_of(left.as_ref().map(|l| l.0))
        } else if msg.contains("right gap") {
            line_of(right.as_ref().map(|r| r.0))
        } else if msg.contains("b = ") {
            line_of(b.map(|b| b.0))
        } else {
            line_of(a.map(|a| a.0))
        };
        ConfigError::at(line, msg)
    })
}

fn parse_speeds(section: Option<Section>) -> Result<SearchSpeeds, ConfigError> {
    let Some(mut s) = section else {
        return Ok(SearchSpeeds::default());
    };
    let v1 = s.number(&["v1", "sweep_speed"])?;
    let v2 = s.number(&["v2", "gap_speed"])?;
    let header = s.header_line;
    s.finish("search")?;
    let line = v2.or(v1).map_or(header, |(l, _)| l);
    SearchSpeeds::new(v1.map_or(1.0, |(_, v)| v), v2.map_or(5.0, |(_, v)| v))
        .map_err(|e| ConfigError::at(line, e.to_string()))
}

fn parse_weights(line: usize, raw: &str, count: usize) -> Result<Vec<f64>, ConfigError> {
    let values: Vec<f64> = raw
        .split_whitespace()
        .map(|t| parse_number(t).ok_or_else(|| ConfigError::at(line, format!("{t:?} is not a number"))))
        .collect::<Result<_, _>>()?;
    match values.len() {
        1 => Ok(vec![values[0]; count]),
        n if n == count => Ok(values),
        n => Err(ConfigError::at(line, format!("expected 1 or {count} weights, got {n}"))),
    }
}

fn parse_optimizer(
    section: Option<Section>,
    layout: &TruncationLayout,
) -> Result<(PenaltyParams, NewtonOptions), ConfigError> {
    let mut penalties = PenaltyParams::defaults_for(layout);
    let mut newton = NewtonOptions::default();
    let Some(mut s) = section else {
        return Ok((penalties, newton));
    };
    let header = s.header_line;
    let mut last_line = header;
    if let Some((line, v)) = s.number(&["penalty"])? {
        last_line = line;
        let single = PenaltyParams {
            left: vec![PenaltyTriple::uniform(v)],
            right: Vec::new(),
        };
        single.validate().map_err(|_| ConfigError::at(line, format!("penalty = {v} must lie in (0, 1)")))?;
        penalties = PenaltyParams {
            left: vec![PenaltyTriple::uniform(v); layout.left_count()],
            right: vec![PenaltyTriple::uniform(v); layout.right_count()],
        };
    }
    type Field = fn(&mut PenaltyTriple) -> &mut f64;
    let families: [(&str, bool, Field); 6] = [
        ("left_width", true, |t| &mut t.width),
        ("left_upper", true, |t| &mut t.upper),
        ("left_lower", true, |t| &mut t.lower),
        ("right_width", false, |t| &mut t.width),
        ("right_upper", false, |t| &mut t.upper),
        ("right_lower", false, |t| &mut t.lower),
    ];
    for (key, left, field) in families {
        if let Some((line, raw)) = s.take(&[key]) {
            last_line = last_line.max(line);
            let list = if left { &mut penalties.left } else { &mut penalties.right };
            let values = parse_weights(line, &raw, list.len())?;
            for (t, v) in list.iter_mut().zip(values) {
                *field(t) = v;
            }
        }
    }
    penalties
        .validate()
        .map_err(|e| ConfigError::at(last_line, e.to_string()))?;

    if let Some((line, raw)) = s.take(&["max_iterations"]) {
        newton.max_iterations = raw
            .parse()
            .map_err(|_| ConfigError::at(line, format!("max_iterations = {raw:?} is not an integer")))?;
    }
    let mut opt_line = header;
    for (key, slot) in [
        ("grad_tol", &mut newton.grad_tol),
        ("step_tol", &mut newton.step_tol),
        ("fd_step", &mut newton.fd_step),
        ("hessian_step", &mut newton.hessian_step),
        ("initial_damping", &mut newton.initial_damping),
    ] {
        if let Some((line, v)) = s.number(&[key])? {
            opt_line = line;
            *slot = v;
        }
    }
    newton
        .validate()
        .map_err(|e| ConfigError::at(opt_line, e.to_string()))?;
    s.finish("optimizer")?;
    Ok((penalties, newton))
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut sections = parse_sections(text)?;
        let distribution = parse_distribution(sections.remove("distribution"))?;
        let layout = parse_layout(sections.remove("truncation"), &distribution)?;
        if distribution.support_min().is_some() && !layout.is_half_line() {
            return Err(ConfigError {
                file: None,
                line: None,
                message: format!("{} distribution needs a = 0 and no left gaps", distribution.kind()),
            });
        }
        let speeds = parse_speeds(sections.remove("search"))?;
        let (penalties, newton) = parse_optimizer(sections.remove("optimizer"), &layout)?;
        Ok(Self {
            distribution,
            layout,
            speeds,
            penalties,
            newton,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            file: Some(path.to_path_buf()),
            line: None,
            message: format!("cannot read config: {e}"),
        })?;
        Self::parse(&text).map_err(|e| ConfigError {
            file: Some(path.to_path_buf()),
            ..e
        })
    }
}

#[derive(Debug, Parser)]
#[command(name = "gapsearch", version, about = "Two-searcher expected times on a truncated line with gaps")]
pub struct Cli {
    /// Write results here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VarySide {
    Left,
    Right,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the truncation class.
    Classify { config: PathBuf },
    /// Truncated density as CSV (x,value).
    Pdf {
        config: PathBuf,
        #[arg(long, default_value_t = 1001)]
        points: usize,
    },
    /// Truncated CDF as CSV (x,value).
    Cdf {
        config: PathBuf,
        #[arg(long, default_value_t = 1001)]
        points: usize,
    },
    /// Elapsed and expected times per index as CSV (m,tau,expected).
    ExpectedTimes { config: PathBuf },
    /// Expected sweep times of each half without gaps.
    Baseline { config: PathBuf },
    /// Expected time over a grid of positions for the single gap on one side.
    Contour {
        config: PathBuf,
        /// Which side's gap moves.
        #[arg(long, value_enum, default_value_t = VarySide::Right)]
        vary: VarySide,
        /// Time index to evaluate; defaults to the last index on that side.
        #[arg(long)]
        m: Option<usize>,
        /// Range of the gap's lower end, `start:end:steps`.
        #[arg(long)]
        x_range: Option<String>,
        /// Range of the gap's upper end, `start:end:steps`.
        #[arg(long)]
        y_range: Option<String>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Minimize the penalized total expected time over the mesh points.
    Optimize {
        config: PathBuf,
        /// Write the iteration trace CSV here; otherwise it follows the summary.
        #[arg(long, value_name = "PATH")]
        trace: Option<PathBuf>,
    },
    /// Monte Carlo check of the truncated distribution.
    Validate {
        config: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// A failed command: exit code, message, and extra text for stderr.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
    detail: Option<String>,
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: e.to_string(),
            detail: None,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Layout(_) | Error::DegenerateTruncation { .. } | Error::Infeasible(_) => {
                EXIT_CONFIG
            }
            _ => EXIT_NUMERIC,
        };
        let detail = match &e {
            Error::Stall { trace, .. } => {
                let mut buf = Vec::new();
                optimizer::write_trace_csv(trace, &mut buf).ok();
                Some(String::from_utf8_lossy(&buf).into_owned())
            }
            _ => None,
        };
        Self {
            code,
            message: e.to_string(),
            detail,
        }
    }
}

fn config_failure(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: message.into(),
        detail: None,
    }
}

fn io_failure(e: std::io::Error) -> Failure {
    config_failure(format!("i/o error: {e}"))
}

fn truncated(cfg: &ScenarioConfig) -> Result<TruncatedDistribution, Failure> {
    Ok(make_truncated(cfg.distribution, cfg.layout.clone())?)
}

/// Grid of `points` values over `[a, b]` plus every gap endpoint.
fn grid(layout: &TruncationLayout, points: usize) -> Result<Vec<f64>, Failure> {
    if points < 2 {
        return Err(config_failure("--points must be at least 2"));
    }
    let (a, b) = (layout.a(), layout.b());
    let step = (b - a) / (points - 1) as f64;
    let mut xs: Vec<f64> = (0..points)
        .map(|i| if i + 1 == points { b } else { a + step * i as f64 })
        .collect();
    xs.extend(layout.mesh_points());
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    Ok(xs)
}

fn pdf_csv(cfg: &ScenarioConfig, points: usize) -> Result<String, Failure> {
    let t = truncated(cfg)?;
    let gaps: Vec<Gap> = cfg.layout.left_gaps().iter().chain(cfg.layout.right_gaps()).copied().collect();
    let mut out = String::from("x,value\n");
    for x in grid(&cfg.layout, points)? {
        let v = t.pdf(x)?;
        let row = |out: &mut String, v: f64| writeln!(out, "{},{}", sig(x, STAT_DIGITS), sig(v, STAT_DIGITS)).ok();
        // the jump at a gap edge is written as two rows sharing x
        if gaps.iter().any(|g| g.lower == x) {
            row(&mut out, v);
            row(&mut out, 0.0);
        } else if gaps.iter().any(|g| g.upper == x) {
            row(&mut out, 0.0);
            row(&mut out, v);
        } else {
            row(&mut out, v);
        }
    }
    Ok(out)
}

fn cdf_csv(cfg: &ScenarioConfig, points: usize) -> Result<String, Failure> {
    let t = truncated(cfg)?;
    let mut out = String::from("x,value\n");
    for x in grid(&cfg.layout, points)? {
        writeln!(out, "{},{}", sig(x, STAT_DIGITS), sig(t.cdf(x)?, STAT_DIGITS)).ok();
    }
    Ok(out)
}

fn expected_times_csv(cfg: &ScenarioConfig) -> Result<String, Failure> {
    let t = truncated(cfg)?;
    let table = search_model::expected_time_table(&t, &cfg.speeds)?;
    let mut out = String::from("m,tau,expected\n");
    for r in &table.rows {
        writeln!(out, "{},{},{}", r.m, sig(r.tau, TIME_DIGITS), sig(r.expected, TIME_DIGITS)).ok();
    }
    Ok(out)
}

fn baseline_csv(cfg: &ScenarioConfig) -> Result<String, Failure> {
    let (a, b) = (cfg.layout.a(), cfg.layout.b());
    let d = &cfg.distribution;
    if cfg.layout.is_half_line() {
        let fb = d.cdf(b)?;
        if !(fb > 0.0) {
            return Err(Error::DegenerateTruncation { norm: fb }.into());
        }
        let right = b / cfg.speeds.sweep();
        return Ok(format!("right\n{}\n", sig(right, TIME_DIGITS)));
    }
    let left = search_model::baseline_expectation(d, a, b, &cfg.speeds, Side::Left)?;
    let right = search_model::baseline_expectation(d, a, b, &cfg.speeds, Side::Right)?;
    Ok(format!("left,right\n{},{}\n", sig(left, TIME_DIGITS), sig(right, TIME_DIGITS)))
}

fn parse_axis(raw: &str) -> Result<GridAxis, Failure> {
    let parts: Vec<&str> = raw.split(':').collect();
    let bad = || config_failure(format!("range {raw:?} must look like start:end:steps"));
    let [start, end, steps] = parts.as_slice() else {
        return Err(bad());
    };
    let start = parse_number(start).ok_or_else(bad)?;
    let end = parse_number(end).ok_or_else(bad)?;
    let steps: usize = steps.trim().parse().map_err(|_| bad())?;
    Ok(GridAxis::new(start, end, steps)?)
}

fn contour_csv(
    cfg: &ScenarioConfig,
    vary: VarySide,
    m: Option<usize>,
    x_range: Option<&str>,
    y_range: Option<&str>,
) -> Result<String, Failure> {
    let layout = &cfg.layout;
    let (side, default_axis) = match vary {
        VarySide::Left => (Side::Left, GridAxis::new(layout.a(), 0.0, 51)?),
        VarySide::Right => (Side::Right, GridAxis::new(0.0, layout.b(), 51)?),
    };
    let indices = time_indices(layout);
    let m = m.unwrap_or(match side {
        Side::Left => *indices.start(),
        Side::Right => *indices.end(),
    });
    let x_axis = x_range.map(parse_axis).transpose()?.unwrap_or(default_axis);
    let y_axis = y_range.map(parse_axis).transpose()?.unwrap_or(default_axis);
    let grid = search_model::contour_grid(&cfg.distribution, layout, &cfg.speeds, m, side, x_axis, y_axis)?;
    let mut out = String::from("x,y,expected\n");
    for (x, y, v) in grid.nodes() {
        if let Some(v) = v {
            writeln!(out, "{},{},{}", sig(x, STAT_DIGITS), sig(y, STAT_DIGITS), sig(v, TIME_DIGITS)).ok();
        }
    }
    Ok(out)
}

fn optimize_report(cfg: &ScenarioConfig, trace_path: Option<&Path>) -> Result<String, Failure> {
    let opt = optimizer::optimize_layout(
        &cfg.distribution,
        &cfg.layout,
        &cfg.speeds,
        &cfg.penalties,
        &cfg.newton,
    )?;
    let r = &opt.result;
    let mut out = String::new();
    let gap_line = |out: &mut String, name: &str, i: usize, g: &Gap| {
        writeln!(out, "{name}_{} = ({}, {})", i + 1, sig(g.lower, TIME_DIGITS), sig(g.upper, TIME_DIGITS)).ok();
    };
    for (i, g) in opt.layout.left_gaps().iter().enumerate() {
        gap_line(&mut out, "left_gap", i, g);
    }
    for (i, g) in opt.layout.right_gaps().iter().enumerate() {
        gap_line(&mut out, "right_gap", i, g);
    }
    writeln!(out, "penalized_objective = {}", sig(r.objective, TIME_DIGITS)).ok();
    writeln!(out, "unpenalized_objective = {}", sig(opt.unpenalized, TIME_DIGITS)).ok();
    writeln!(out, "unpenalized_objective_start = {}", sig(opt.unpenalized_start, TIME_DIGITS)).ok();
    writeln!(out, "grad_norm = {}", sig(r.grad_norm, TIME_DIGITS)).ok();
    writeln!(out, "iterations = {}", r.iterations).ok();
    writeln!(out, "converged = {}", r.converged).ok();

    let mut trace = Vec::new();
    optimizer::write_trace_csv(&r.trace, &mut trace).map_err(io_failure)?;
    match trace_path {
        Some(path) => std::fs::write(path, trace).map_err(io_failure)?,
        None => {
            out.push('\n');
            out.push_str(&String::from_utf8_lossy(&trace));
        }
    }
    Ok(out)
}

fn validate_report(cfg: &ScenarioConfig, n: usize, seed: u64) -> Result<String, Failure> {
    let t = truncated(cfg)?;
    let rep = montecarlo::validate(&t, &cfg.speeds, seed, n)?;
    let mut out = String::new();
    let stat = |v: f64| sig(v, STAT_DIGITS);
    writeln!(out, "n = {}", rep.n).ok();
    writeln!(out, "seed = {}", rep.seed).ok();
    writeln!(out, "generator = pcg64").ok();
    writeln!(out, "sup_cdf_distance = {}", stat(rep.sup_cdf_distance)).ok();
    for (k, (f, p)) in rep.segment_frequencies.iter().zip(&rep.segment_probabilities).enumerate() {
        writeln!(out, "segment_{k}_frequency = {}", stat(*f)).ok();
        writeln!(out, "segment_{k}_probability = {}", stat(*p)).ok();
    }
    for (name, summary) in [("left", rep.arrival_left), ("right", rep.arrival_right)] {
        match summary {
            Some(s) => {
                writeln!(out, "mean_arrival_time_{name} = {}", stat(s.mean)).ok();
                writeln!(out, "std_error_{name} = {}", stat(s.std_error)).ok();
                writeln!(out, "count_{name} = {}", s.count).ok();
            }
            None => {
                writeln!(out, "mean_arrival_time_{name} = NA").ok();
                writeln!(out, "std_error_{name} = NA").ok();
                writeln!(out, "count_{name} = 0").ok();
            }
        }
    }
    let range = time_indices(t.layout());
    writeln!(out, "expected_time_{} = {}", range.start(), stat(rep.expected_first)).ok();
    writeln!(out, "expected_time_{} = {}", range.end(), stat(rep.expected_last)).ok();
    writeln!(
        out,
        "note = mean arrival times and expected times are different functionals and are not expected to agree"
    )
    .ok();
    Ok(out)
}

fn execute(cli: &Cli) -> Result<String, Failure> {
    let load = |p: &PathBuf| ScenarioConfig::load(p).map_err(Failure::from);
    match &cli.command {
        Command::Classify { config } => Ok(format!("{}\n", load(config)?.layout.classify())),
        Command::Pdf { config, points } => pdf_csv(&load(config)?, *points),
        Command::Cdf { config, points } => cdf_csv(&load(config)?, *points),
        Command::ExpectedTimes { config } => expected_times_csv(&load(config)?),
        Command::Baseline { config } => baseline_csv(&load(config)?),
        Command::Contour {
            config,
            vary,
            m,
            x_range,
            y_range,
            threads,
        } => {
            let cfg = load(config)?;
            let work = || contour_csv(&cfg, *vary, *m, x_range.as_deref(), y_range.as_deref());
            match threads {
                Some(0) => Err(config_failure("--threads must be at least 1")),
                Some(n) => rayon::ThreadPoolBuilder::new()
                    .num_threads(*n)
                    .build()
                    .map_err(|e| config_failure(e.to_string()))?
                    .install(work),
                None => work(),
            }
        }
        Command::Optimize { config, trace } => optimize_report(&load(config)?, trace.as_deref()),
        Command::Validate { config, n, seed } => validate_report(&load(config)?, *n, *seed),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            e.print().ok();
            return code;
        }
    };
    match execute(&cli) {
        Ok(text) => {
            let written = match &cli.output {
                Some(path) => std::fs::write(path, text),
                None => {
                    use std::io::Write;
                    std::io::stdout().lock().write_all(text.as_bytes())
                }
            };
            match written {
                Ok(()) => EXIT_OK,
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_CONFIG
                }
            }
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            if let Some(detail) = f.detail {
                eprint!("{detail}");
            }
            f.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::truncation::TruncationClass;

    const EXAMPLE1: &str = "\
[distribution]
kind = normal
mean = 0
std_dev = 4.53

[truncation]
a = -20
b = 30
left = (-6,-4) (-15,-10)
right = (2,7) (11,17)
";

    #[test]
    fn parses_example() {
        let cfg = ScenarioConfig::parse(EXAMPLE1).unwrap();
        assert_eq!(cfg.layout.classify(), TruncationClass::Commensurate);
        assert_eq!(cfg.speeds, SearchSpeeds::default());
        assert_eq!(cfg.layout.left_gaps()[1], Gap::new(-15.0, -10.0));
        assert_eq!(cfg.penalties.left[0].width, 0.1);
        assert_eq!(cfg.newton, NewtonOptions::default());
    }

    #[test]
    fn defaults_everything() {
        let cfg = ScenarioConfig::parse("# empty\n").unwrap();
        assert_eq!(cfg.distribution, DistributionSpec::normal(0.0, 1.0).unwrap());
        assert_eq!(cfg.layout.a(), -10.0);
    }

    #[test]
    fn ordering_error_names_line_and_inequality() {
        let text = EXAMPLE1.replace("right = (2,7) (11,17)", "right = (2,7) (6,17)");
        let err = ScenarioConfig::parse(&text).unwrap_err();
        assert_eq!(err.line, Some(10));
        assert!(err.message.contains("beta_1"), "{}", err.message);
        assert!(err.message.contains('<'), "{}", err.message);
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let cases = [
            ("[distribution]\nkind = weibull\n", 2),
            ("[distribution]\nkind = normal\nmean = 0\n", 2),
            ("[search]\nv1 = 1\nv2 = 0.5\n", 3),
            ("[search]\nv1 = one\n", 2),
            ("[truncation]\nleft = (-1,-2\n", 2),
            ("[optimizer]\npenalty = 1.5\n", 2),
            ("[extra]\n", 1),
            ("a = 1\n", 1),
            ("[search]\nspeed = 3\n", 2),
            ("[search]\nv1 = 1\nv1 = 2\n", 3),
        ];
        for (text, line) in cases {
            let err = ScenarioConfig::parse(text).unwrap_err();
            assert_eq!(err.line, Some(line), "{text:?}: {err}");
        }
    }

    #[test]
    fn gamma_needs_half_line() {
        let text = "[distribution]\nkind = gamma\nshape = 3.15\nscale = 1.27\n[truncation]\na = -1\nb = 30\n";
        assert!(ScenarioConfig::parse(text).is_err());
        let text = "[distribution]\nkind = gamma\nshape = 3.15\nscale = 1.27\n[truncation]\nb = 30\nright = (2,7)\n";
        assert!(ScenarioConfig::parse(text).unwrap().layout.is_half_line());
    }

    #[test]
    fn per_gap_weights() {
        let text = format!("{EXAMPLE1}[optimizer]\npenalty = 0.2\nright_width = 0.3 0.4\nmax_iterations = 7\n");
        let cfg = ScenarioConfig::parse(&text).unwrap();
        assert_eq!(cfg.penalties.left[1].width, 0.2);
        assert_eq!(cfg.penalties.right[1].width, 0.4);
        assert_eq!(cfg.penalties.right[1].upper, 0.2);
        assert_eq!(cfg.newton.max_iterations, 7);
        let bad = format!("{EXAMPLE1}[optimizer]\nright_width = 0.3 0.4 0.5\n");
        assert_eq!(ScenarioConfig::parse(&bad).unwrap_err().line, Some(12));
    }

    #[test]
    fn gap_lists() {
        assert_eq!(parse_gaps(1, "none").unwrap(), vec![]);
        assert_eq!(
            parse_gaps(1, "(1, 2),(3,4)").unwrap(),
            vec![Gap::new(1.0, 2.0), Gap::new(3.0, 4.0)]
        );
        assert!(parse_gaps(1, "1,2").is_err());
    }

    #[test]
    fn axis_parsing() {
        assert_eq!(parse_axis("0:10:11").unwrap().values().len(), 11);
        assert!(parse_axis("0:10").is_err());
    }
}
