//! Experiment config files.
//!
//! The format is flat `key = value` text grouped in `[section]`s. Blank
//! lines and lines starting with `#` or `;` are ignored. Sections:
//!
//! * `[dataset]` where the data lives and how to read it
//! * `[protocol]` how to split, repeat, seed and noise the runs
//! * `[network]` hidden-layer settings shared by every model
//! * `[model.<name>]` one per enabled model, optionally overriding any
//!   `[network]` key for that model
//!
//! See `docs/config.md` for the full key reference.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bbfnn_core::{BetaRanges, LagSpec, MetricKind, ModelKind, NoiseTarget, NormRange, TaskKind};

use crate::error::{CliError, Diagnostic, Result};

pub const DEFAULT_RUNS: usize = 10;
pub const DEFAULT_FOLDS: usize = 5;

/// One entry of the noise sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseLevel {
    Clean,
    SnrDb(f64),
}

impl NoiseLevel {
    pub fn default_sweep() -> Vec<NoiseLevel> {
        vec![
            NoiseLevel::Clean,
            NoiseLevel::SnrDb(50.0),
            NoiseLevel::SnrDb(10.0),
            NoiseLevel::SnrDb(1.0),
        ]
    }
}

impl fmt::Display for NoiseLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseLevel::Clean => f.write_str("clean"),
            NoiseLevel::SnrDb(db) => write!(f, "{db}"),
        }
    }
}

impl FromStr for NoiseLevel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("clean") {
            return Ok(NoiseLevel::Clean);
        }
        let db = t
            .trim_end_matches("dB")
            .trim_end_matches("db")
            .trim()
            .parse::<f64>()
            .map_err(|_| format!("`{t}` is neither `clean` nor an SNR in dB"))?;
        if !db.is_finite() {
            return Err(format!("SNR `{t}` must be finite"));
        }
        Ok(NoiseLevel::SnrDb(db))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrainSize {
    Rows(usize),
    Fraction(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SplitMode {
    Holdout {
        train: TrainSize,
        shuffle: bool,
        /// Consecutive test windows, each scored separately. Empty means
        /// the whole test partition is one window.
        test_windows: Vec<usize>,
    },
    KFold {
        folds: usize,
    },
}

/// How the table's columns become inputs and targets.
#[derive(Debug, Clone, PartialEq)]
pub enum Columns {
    Direct {
        inputs: Vec<usize>,
        targets: Vec<usize>,
    },
    /// Time-series windows: each input is a past value of some column.
    Lagged { lags: Vec<LagSpec>, target: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSection {
    pub name: String,
    /// As written in the file. Relative paths are resolved against the
    /// config file's directory.
    pub path: PathBuf,
    pub header: bool,
    pub task: TaskKind,
    /// Raw target values in class-code order, when the file does not
    /// already use codes `0..C`.
    pub class_labels: Option<Vec<f64>>,
    pub columns: Columns,
    pub normalize: NormRange,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSection {
    pub split: SplitMode,
    pub runs: usize,
    pub seed: u64,
    pub noise: Vec<NoiseLevel>,
    pub noise_apply: NoiseTarget,
    pub metric: MetricKind,
    pub output: PathBuf,
    /// 0 picks the number of available cores.
    pub workers: usize,
}

/// Hidden-layer settings. Every field is optional so the same type serves
/// both the shared `[network]` section and per-model overrides.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NetworkSettings {
    pub hidden: Option<usize>,
    pub input_weight_scale: Option<f64>,
    pub rec_connectivity: Option<f64>,
    pub rec_spectral_radius: Option<f64>,
    pub p: Option<(f64, f64)>,
    pub q: Option<(f64, f64)>,
    pub u0: Option<(f64, f64)>,
    pub u1: Option<(f64, f64)>,
}

impl NetworkSettings {
    /// `self` with every field set in `over` replaced.
    pub fn overridden_by(&self, over: &NetworkSettings) -> NetworkSettings {
        NetworkSettings {
            hidden: over.hidden.or(self.hidden),
            input_weight_scale: over.input_weight_scale.or(self.input_weight_scale),
            rec_connectivity: over.rec_connectivity.or(self.rec_connectivity),
            rec_spectral_radius: over.rec_spectral_radius.or(self.rec_spectral_radius),
            p: over.p.or(self.p),
            q: over.q.or(self.q),
            u0: over.u0.or(self.u0),
            u1: over.u1.or(self.u1),
        }
    }

    pub fn beta_ranges(&self) -> Option<BetaRanges> {
        Some(BetaRanges {
            p: self.p?,
            q: self.q?,
            u0: self.u0?,
            u1: self.u1?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelEntry {
    pub kind: ModelKind,
    pub overrides: NetworkSettings,
}

/// Fully resolved settings for one model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSettings {
    pub kind: ModelKind,
    pub hidden: usize,
    pub input_weight_scale: f64,
    pub rec_connectivity: f64,
    pub rec_spectral_radius: f64,
    pub beta_ranges: Option<BetaRanges>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSection,
    pub protocol: ProtocolSection,
    pub network: NetworkSettings,
    /// Enabled models in the canonical order of [`ModelKind::ALL`].
    pub models: Vec<ModelEntry>,
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        parse_config(&text, &base).map_err(|diagnostics| CliError::Config {
            origin: path.display().to_string(),
            diagnostics,
        })
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn data_path(&self) -> PathBuf {
        self.resolve(&self.dataset.path)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.protocol.output)
    }

    pub fn model_settings(&self, kind: ModelKind) -> Option<ModelSettings> {
        let entry = self.models.iter().find(|m| m.kind == kind)?;
        resolve_model(&self.network, entry).ok()
    }

    pub fn all_model_settings(&self) -> Vec<ModelSettings> {
        self.models
            .iter()
            .filter_map(|m| resolve_model(&self.network, m).ok())
            .collect()
    }

    /// Re-checks cross-field constraints, e.g. after CLI overrides.
    pub fn revalidate(&self) -> Result<()> {
        let mut diags = Vec::new();
        check_cross_fields(self, &mut diags);
        if diags.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config {
                origin: "command-line overrides".into(),
                diagnostics: diags,
            })
        }
    }
}

fn resolve_model(net: &NetworkSettings, entry: &ModelEntry) -> std::result::Result<ModelSettings, String> {
    let eff = net.overridden_by(&entry.overrides);
    let kind = entry.kind;
    let hidden = eff
        .hidden
        .ok_or_else(|| format!("{kind}: missing required key `hidden`"))?;
    if hidden == 0 {
        return Err(format!("{kind}: hidden must be at least 1"));
    }
    let beta_ranges = match kind.activation() {
        bbfnn_core::Activation::Beta => {
            let missing: Vec<&str> = [("p", eff.p.is_none()), ("q", eff.q.is_none()), ("u0", eff.u0.is_none()), ("u1", eff.u1.is_none())]
                .iter()
                .filter(|(_, m)| *m)
                .map(|(k, _)| *k)
                .collect();
            if !missing.is_empty() {
                return Err(format!(
                    "{kind}: beta models need ranges for {}",
                    missing.join(", ")
                ));
            }
            eff.beta_ranges()
        }
        bbfnn_core::Activation::Tanh => None,
    };
    Ok(ModelSettings {
        kind,
        hidden,
        input_weight_scale: eff.input_weight_scale.unwrap_or(1.0),
        rec_connectivity: eff
            .rec_connectivity
            .unwrap_or(bbfnn_core::ModelConfig::DEFAULT_CONNECTIVITY),
        rec_spectral_radius: eff
            .rec_spectral_radius
            .unwrap_or(bbfnn_core::ModelConfig::DEFAULT_SPECTRAL_RADIUS),
        beta_ranges,
    })
}

// ---------------------------------------------------------------------------
// Lexing

#[derive(Debug)]
struct RawEntry {
    key: String,
    value: String,
    line: usize,
}

#[derive(Debug)]
struct RawSection {
    name: String,
    line: usize,
    entries: Vec<RawEntry>,
}

fn lex(text: &str, diags: &mut Vec<Diagnostic>) -> Vec<RawSection> {
    let mut sections: Vec<RawSection> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with(';') {
            continue;
        }
        if let Some(rest) = t.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                diags.push(Diagnostic::at(line, format!("malformed section header `{t}`")));
                continue;
            };
            let name = name.trim().to_string();
            if let Some(prev) = sections.iter().find(|s| s.name == name) {
                diags.push(Diagnostic::at(
                    line,
                    format!("duplicate section [{name}] (first at line {})", prev.line),
                ));
            }
            sections.push(RawSection {
                name,
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let Some((key, value)) = t.split_once('=') else {
            diags.push(Diagnostic::at(line, format!("expected `key = value`, found `{t}`")));
            continue;
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() {
            diags.push(Diagnostic::at(line, "empty key"));
            continue;
        }
        let Some(section) = sections.last_mut() else {
            diags.push(Diagnostic::at(line, format!("key `{key}` appears before any [section]")));
            continue;
        };
        if let Some(prev) = section.entries.iter().find(|e| e.key == key) {
            diags.push(Diagnostic::at(
                line,
                format!(
                    "duplicate key `{key}` in [{}] (first at line {})",
                    section.name, prev.line
                ),
            ));
            continue;
        }
        section.entries.push(RawEntry { key, value, line });
    }
    sections
}

// ---------------------------------------------------------------------------
// Typed reading

struct Reader<'a> {
    section: &'a RawSection,
    used: Vec<bool>,
}

impl<'a> Reader<'a> {
    fn new(section: &'a RawSection) -> Self {
        Self {
            section,
            used: vec![false; section.entries.len()],
        }
    }

    fn raw(&mut self, key: &str) -> Option<&'a RawEntry> {
        let i = self.section.entries.iter().position(|e| e.key == key)?;
        self.used[i] = true;
        Some(&self.section.entries[i])
    }

    fn get<T>(
        &mut self,
        key: &str,
        diags: &mut Vec<Diagnostic>,
        parse: impl Fn(&str) -> std::result::Result<T, String>,
    ) -> Option<T> {
        let e = self.raw(key)?;
        match parse(&e.value) {
            Ok(v) => Some(v),
            Err(msg) => {
                diags.push(Diagnostic::at(e.line, format!("{key}: {msg}")));
                None
            }
        }
    }

    fn required<T>(
        &mut self,
        key: &str,
        diags: &mut Vec<Diagnostic>,
        parse: impl Fn(&str) -> std::result::Result<T, String>,
    ) -> Option<T> {
        if self.section.entries.iter().all(|e| e.key != key) {
            diags.push(Diagnostic::at(
                self.section.line,
                format!("[{}] is missing required key `{key}`", self.section.name),
            ));
            return None;
        }
        self.get(key, diags, parse)
    }

    fn has(&self, key: &str) -> bool {
        self.section.entries.iter().any(|e| e.key == key)
    }

    fn line_of(&self, key: &str) -> usize {
        self.section
            .entries
            .iter()
            .find(|e| e.key == key)
            .map_or(self.section.line, |e| e.line)
    }

    fn finish(self, diags: &mut Vec<Diagnostic>) {
        for (e, used) in self.section.entries.iter().zip(&self.used) {
            if !used {
                diags.push(Diagnostic::at(
                    e.line,
                    format!("unknown key `{}` in [{}]", e.key, self.section.name),
                ));
            }
        }
    }
}

fn parse_usize(s: &str) -> std::result::Result<usize, String> {
    s.parse::<usize>()
        .map_err(|_| format!("expected a non-negative integer, found `{s}`"))
}

fn parse_positive(s: &str) -> std::result::Result<usize, String> {
    match parse_usize(s)? {
        0 => Err("must be at least 1".into()),
        n => Ok(n),
    }
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("expected a finite number, found `{s}`")),
    }
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true or false, found `{s}`")),
    }
}

fn parse_list<T>(
    s: &str,
    item: impl Fn(&str) -> std::result::Result<T, String>,
) -> std::result::Result<Vec<T>, String> {
    let items: Vec<&str> = s.split(',').map(str::trim).collect();
    if items.iter().any(|i| i.is_empty()) {
        return Err(format!("empty item in list `{s}`"));
    }
    items.into_iter().map(item).collect()
}

/// `lo, hi` with `lo <= hi`.
fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let v = parse_list(s, parse_f64)?;
    match v.as_slice() {
        [lo, hi] if lo <= hi => Ok((*lo, *hi)),
        [lo, hi] => Err(format!("lower bound {lo} exceeds upper bound {hi}")),
        _ => Err(format!("expected `low, high`, found `{s}`")),
    }
}

fn parse_exponent_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let r = parse_range(s)?;
    if r.0 < 0.0 {
        return Err(format!("exponents must be non-negative, got lower bound {}", r.0));
    }
    Ok(r)
}

/// Column lists: `0, 2, 5` or inclusive ranges like `0-7`.
pub fn parse_columns(s: &str) -> std::result::Result<Vec<usize>, String> {
    let mut cols = Vec::new();
    for item in parse_list(s, |i| Ok(i.to_string()))? {
        if let Some((a, b)) = item.split_once('-') {
            let (a, b) = (parse_usize(a.trim())?, parse_usize(b.trim())?);
            if a > b {
                return Err(format!("column range `{item}` runs backwards"));
            }
            cols.extend(a..=b);
        } else {
            cols.push(parse_usize(&item)?);
        }
    }
    let mut sorted = cols.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(format!("column list `{s}` repeats a column"));
    }
    Ok(cols)
}

fn format_columns(cols: &[usize]) -> String {
    cols.iter().map(usize::to_string).collect::<Vec<_>>().join(", ")
}

/// `column:lag` pairs, e.g. `1:1, 0:4`.
fn parse_lags(s: &str) -> std::result::Result<Vec<LagSpec>, String> {
    parse_list(s, |item| {
        let (c, l) = item
            .split_once(':')
            .ok_or_else(|| format!("expected `column:lag`, found `{item}`"))?;
        let column = parse_usize(c.trim())?;
        let lag = parse_usize(l.trim())?;
        if lag == 0 {
            return Err(format!("lag 0 in `{item}` would feed the target into its own input"));
        }
        Ok(LagSpec { column, lag })
    })
}

fn parse_task(s: &str) -> std::result::Result<&'static str, String> {
    match s.to_ascii_lowercase().as_str() {
        "classification" => Ok("classification"),
        "prediction" | "time-series" | "timeseries" => Ok("prediction"),
        "regression" => Ok("regression"),
        _ => Err(format!(
            "unknown task `{s}` (expected classification, prediction or regression)"
        )),
    }
}

fn via_from_str<T: FromStr>(s: &str) -> std::result::Result<T, String>
where
    T::Err: fmt::Display,
{
    s.parse::<T>().map_err(|e| e.to_string())
}

fn unit_open(s: &str) -> std::result::Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("must lie in (0, 1), got {v}"))
    }
}

fn spectral_radius(s: &str) -> std::result::Result<f64, String> {
    let v = parse_f64(s)?;
    if v >= 1.0 {
        return Err(format!(
            "must be < 1 so the recurrent state forgets its initial condition, got {v}"
        ));
    }
    if v <= 0.0 {
        return Err(format!("must be positive, got {v}"));
    }
    Ok(v)
}

fn connectivity(s: &str) -> std::result::Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("must lie in (0, 1], got {v}"))
    }
}

fn positive_f64(s: &str) -> std::result::Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be positive, got {v}"))
    }
}

fn read_network(r: &mut Reader<'_>, diags: &mut Vec<Diagnostic>) -> NetworkSettings {
    NetworkSettings {
        hidden: r.get("hidden", diags, parse_positive),
        input_weight_scale: r.get("input_weight_scale", diags, positive_f64),
        rec_connectivity: r.get("rec_connectivity", diags, connectivity),
        rec_spectral_radius: r.get("rec_spectral_radius", diags, spectral_radius),
        p: r.get("p", diags, parse_exponent_range),
        q: r.get("q", diags, parse_exponent_range),
        u0: r.get("u0", diags, parse_range),
        u1: r.get("u1", diags, parse_range),
    }
}

fn read_dataset(r: &mut Reader<'_>, diags: &mut Vec<Diagnostic>) -> Option<DatasetSection> {
    let path = r.required("path", diags, |s| Ok(PathBuf::from(s)));
    let name = r.get("name", diags, |s| Ok(s.to_string()));
    let header = r.get("header", diags, parse_bool).unwrap_or(false);
    let task_name = r.required("task", diags, parse_task);
    let classes = r.get("classes", diags, parse_usize);
    let class_labels = r.get("class_labels", diags, |s| parse_list(s, parse_f64));
    let inputs = r.get("inputs", diags, parse_columns);
    let targets = r.get("targets", diags, parse_columns);
    let lag = r.get("lag", diags, parse_positive);
    let lagged = r.get("lagged_inputs", diags, parse_lags);
    let normalize = r
        .get("normalize", diags, via_from_str::<NormRange>)
        .unwrap_or(NormRange::Unit);

    let task = match task_name? {
        "classification" => match classes {
            Some(c) if c >= 2 => TaskKind::Classification { num_classes: c },
            Some(c) => {
                diags.push(Diagnostic::at(
                    r.line_of("classes"),
                    format!("classes: need at least 2, got {c}"),
                ));
                return None;
            }
            None => {
                if !r.has("classes") {
                    diags.push(Diagnostic::at(
                        r.line_of("task"),
                        "classification needs `classes`",
                    ));
                }
                return None;
            }
        },
        "prediction" => TaskKind::Prediction,
        _ => TaskKind::Regression,
    };
    if !matches!(task, TaskKind::Classification { .. }) {
        for key in ["classes", "class_labels"] {
            if r.has(key) {
                diags.push(Diagnostic::at(
                    r.line_of(key),
                    format!("{key} only applies to classification"),
                ));
            }
        }
    }
    let class_labels = match (task, class_labels) {
        (TaskKind::Classification { num_classes }, Some(labels)) => {
            if labels.len() != num_classes {
                diags.push(Diagnostic::at(
                    r.line_of("class_labels"),
                    format!(
                        "class_labels lists {} values but classes = {num_classes}",
                        labels.len()
                    ),
                ));
            }
            let mut sorted = labels.clone();
            sorted.sort_by(f64::total_cmp);
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                diags.push(Diagnostic::at(r.line_of("class_labels"), "class_labels repeats a value"));
            }
            Some(labels)
        }
        _ => None,
    };

    let columns = if matches!(task, TaskKind::Prediction) {
        if r.has("inputs") {
            diags.push(Diagnostic::at(
                r.line_of("inputs"),
                "prediction tasks build inputs from `lag` or `lagged_inputs`, not `inputs`",
            ));
        }
        let target = match targets.as_deref() {
            Some([t]) => *t,
            Some(_) => {
                diags.push(Diagnostic::at(
                    r.line_of("targets"),
                    "prediction needs exactly one target column",
                ));
                return None;
            }
            None => {
                if !r.has("targets") {
                    diags.push(Diagnostic::at(r.section.line, "[dataset] is missing required key `targets`"));
                }
                return None;
            }
        };
        let lags = match (lag, lagged) {
            (Some(_), Some(_)) => {
                diags.push(Diagnostic::at(
                    r.line_of("lagged_inputs"),
                    "give either `lag` or `lagged_inputs`, not both",
                ));
                return None;
            }
            (Some(order), None) => LagSpec::autoregressive(target, order),
            (None, Some(l)) => l,
            (None, None) => {
                if !r.has("lag") && !r.has("lagged_inputs") {
                    diags.push(Diagnostic::at(
                        r.line_of("task"),
                        "prediction needs `lag` or `lagged_inputs`",
                    ));
                }
                return None;
            }
        };
        Columns::Lagged { lags, target }
    } else {
        for key in ["lag", "lagged_inputs"] {
            if r.has(key) {
                diags.push(Diagnostic::at(r.line_of(key), format!("{key} only applies to prediction tasks")));
            }
        }
        let inputs = match inputs {
            Some(i) => i,
            None => {
                if !r.has("inputs") {
                    diags.push(Diagnostic::at(r.section.line, "[dataset] is missing required key `inputs`"));
                }
                return None;
            }
        };
        let targets = match targets {
            Some(t) => t,
            None => {
                if !r.has("targets") {
                    diags.push(Diagnostic::at(r.section.line, "[dataset] is missing required key `targets`"));
                }
                return None;
            }
        };
        if let TaskKind::Classification { .. } = task {
            if targets.len() != 1 {
                diags.push(Diagnostic::at(
                    r.line_of("targets"),
                    "classification needs exactly one class-code column",
                ));
            }
        }
        if let Some(c) = inputs.iter().find(|c| targets.contains(c)) {
            diags.push(Diagnostic::at(
                r.line_of("inputs"),
                format!("column {c} is both an input and a target"),
            ));
        }
        Columns::Direct { inputs, targets }
    };

    let path = path?;
    let name = name.unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    });
    Some(DatasetSection {
        name,
        path,
        header,
        task,
        class_labels,
        columns,
        normalize,
    })
}

fn read_protocol(
    r: &mut Reader<'_>,
    task: Option<TaskKind>,
    dataset_name: &str,
    diags: &mut Vec<Diagnostic>,
) -> Option<ProtocolSection> {
    let mode = r.required("mode", diags, |s| match s.to_ascii_lowercase().as_str() {
        "holdout" => Ok("holdout"),
        "kfold" | "k-fold" => Ok("kfold"),
        _ => Err(format!("unknown mode `{s}` (expected holdout or kfold)")),
    });
    let folds = r.get("folds", diags, |s| match parse_usize(s)? {
        k if k >= 2 => Ok(k),
        k => Err(format!("k-fold needs at least 2 folds, got {k}")),
    });
    let train_size = r.get("train_size", diags, parse_positive);
    let train_fraction = r.get("train_fraction", diags, unit_open);
    let shuffle = r.get("shuffle", diags, parse_bool);
    let test_windows = r.get("test_windows", diags, |s| parse_list(s, parse_positive));
    let runs = r.get("runs", diags, parse_positive).unwrap_or(DEFAULT_RUNS);
    let seed = r
        .get("seed", diags, |s| s.parse::<u64>().map_err(|_| format!("expected an unsigned integer, found `{s}`")))
        .unwrap_or(0);
    let noise = r
        .get("snr_db", diags, |s| parse_list(s, via_from_str::<NoiseLevel>))
        .unwrap_or_else(NoiseLevel::default_sweep);
    let noise_apply = r
        .get("noise_apply", diags, via_from_str::<NoiseTarget>)
        .unwrap_or(NoiseTarget::Both);
    let metric = r.get("metric", diags, via_from_str::<MetricKind>);
    let output = r
        .get("output", diags, |s| Ok(PathBuf::from(s)))
        .unwrap_or_else(|| PathBuf::from("results").join(dataset_name));
    let workers = r.get("workers", diags, parse_usize).unwrap_or(0);

    let split = match mode? {
        "kfold" => {
            for key in ["train_size", "train_fraction", "test_windows", "shuffle"] {
                if r.has(key) {
                    diags.push(Diagnostic::at(r.line_of(key), format!("{key} only applies to holdout mode")));
                }
            }
            SplitMode::KFold {
                folds: folds.unwrap_or(DEFAULT_FOLDS),
            }
        }
        _ => {
            if r.has("folds") {
                diags.push(Diagnostic::at(r.line_of("folds"), "folds only applies to kfold mode"));
            }
            let train = match (train_size, train_fraction) {
                (Some(n), None) => TrainSize::Rows(n),
                (None, Some(f)) => TrainSize::Fraction(f),
                (Some(_), Some(_)) => {
                    diags.push(Diagnostic::at(
                        r.line_of("train_fraction"),
                        "give either `train_size` or `train_fraction`, not both",
                    ));
                    return None;
                }
                (None, None) => {
                    if !r.has("train_size") && !r.has("train_fraction") {
                        diags.push(Diagnostic::at(
                            r.line_of("mode"),
                            "holdout needs `train_size` or `train_fraction`",
                        ));
                    }
                    return None;
                }
            };
            let test_windows = test_windows.unwrap_or_default();
            if !test_windows.is_empty() && !matches!(task, Some(TaskKind::Prediction)) {
                diags.push(Diagnostic::at(
                    r.line_of("test_windows"),
                    "test_windows only applies to prediction tasks",
                ));
            }
            SplitMode::Holdout {
                train,
                shuffle: shuffle.unwrap_or(true),
                test_windows,
            }
        }
    };

    let metric = match (metric, task) {
        (Some(m), Some(TaskKind::Classification { .. })) if m != MetricKind::Ca => {
            diags.push(Diagnostic::at(r.line_of("metric"), "classification is scored by CA"));
            m
        }
        (Some(MetricKind::Ca), Some(t)) if !matches!(t, TaskKind::Classification { .. }) => {
            diags.push(Diagnostic::at(r.line_of("metric"), "CA only applies to classification"));
            MetricKind::Ca
        }
        (Some(m), _) => m,
        (None, Some(t)) => default_metric(t),
        (None, None) => MetricKind::Rmse,
    };

    Some(ProtocolSection {
        split,
        runs,
        seed,
        noise,
        noise_apply,
        metric,
        output,
        workers,
    })
}

pub fn default_metric(task: TaskKind) -> MetricKind {
    match task {
        TaskKind::Classification { .. } => MetricKind::Ca,
        TaskKind::Prediction => MetricKind::Rmse,
        TaskKind::Regression => MetricKind::Mse,
    }
}

fn check_cross_fields(cfg: &ExperimentConfig, diags: &mut Vec<Diagnostic>) {
    if cfg.models.is_empty() {
        diags.push(Diagnostic::general("no model enabled: add at least one [model.<name>] section"));
    }
    for m in &cfg.models {
        if let Err(msg) = resolve_model(&cfg.network, m) {
            diags.push(Diagnostic::general(msg));
        }
    }
    if cfg.protocol.noise.is_empty() {
        diags.push(Diagnostic::general("snr_db must list at least one noise level"));
    }
    if cfg.protocol.runs == 0 {
        diags.push(Diagnostic::general("runs must be at least 1"));
    }
    if let SplitMode::KFold { folds } = cfg.protocol.split {
        if folds < 2 {
            diags.push(Diagnostic::general(format!("k-fold needs at least 2 folds, got {folds}")));
        }
    }
}

/// Parses and validates config text. Diagnostics are collected across the
/// whole file rather than stopping at the first problem.
pub fn parse_config(text: &str, base_dir: &Path) -> std::result::Result<ExperimentConfig, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let sections = lex(text, &mut diags);

    let find = |name: &str| sections.iter().find(|s| s.name == name);
    let mut dataset = None;
    let mut protocol_section = None;
    let mut network = NetworkSettings::default();
    let mut models: Vec<ModelEntry> = Vec::new();

    for s in &sections {
        let known = matches!(s.name.as_str(), "dataset" | "protocol" | "network") || s.name.starts_with("model.");
        if !known {
            diags.push(Diagnostic::at(
                s.line,
                format!("unknown section [{}] (expected dataset, protocol, network or model.<name>)", s.name),
            ));
        }
    }

    match find("dataset") {
        Some(s) => {
            let mut r = Reader::new(s);
            dataset = read_dataset(&mut r, &mut diags);
            r.finish(&mut diags);
        }
        None => diags.push(Diagnostic::general("missing [dataset] section")),
    }
    let task = dataset.as_ref().map(|d: &DatasetSection| d.task);
    let name = dataset.as_ref().map_or("dataset".to_string(), |d| d.name.clone());
    match find("protocol") {
        Some(s) => {
            let mut r = Reader::new(s);
            protocol_section = read_protocol(&mut r, task, &name, &mut diags);
            r.finish(&mut diags);
        }
        None => diags.push(Diagnostic::general("missing [protocol] section")),
    }
    if let Some(s) = find("network") {
        let mut r = Reader::new(s);
        network = read_network(&mut r, &mut diags);
        r.finish(&mut diags);
    }
    for s in sections.iter().filter(|s| s.name.starts_with("model.")) {
        let model_name = &s.name["model.".len()..];
        let kind = match model_name.parse::<ModelKind>() {
            Ok(k) => k,
            Err(e) => {
                diags.push(Diagnostic::at(s.line, e.to_string()));
                continue;
            }
        };
        if models.iter().any(|m| m.kind == kind) {
            continue; // already reported as a duplicate section
        }
        let mut r = Reader::new(s);
        let overrides = read_network(&mut r, &mut diags);
        r.finish(&mut diags);
        models.push(ModelEntry { kind, overrides });
    }
    models.sort_by_key(|m| ModelKind::ALL.iter().position(|k| *k == m.kind));

    if !diags.is_empty() {
        return Err(diags);
    }
    let (Some(dataset), Some(protocol)) = (dataset, protocol_section) else {
        return Err(vec![Diagnostic::general("config is incomplete")]);
    };
    let cfg = ExperimentConfig {
        dataset,
        protocol,
        network,
        models,
        base_dir: base_dir.to_path_buf(),
    };
    check_cross_fields(&cfg, &mut diags);
    if diags.is_empty() {
        Ok(cfg)
    } else {
        Err(diags)
    }
}

// ---------------------------------------------------------------------------
// Echo

fn format_range((lo, hi): (f64, f64)) -> String {
    format!("{lo}, {hi}")
}

fn write_network(f: &mut fmt::Formatter<'_>, n: &NetworkSettings) -> fmt::Result {
    if let Some(v) = n.hidden {
        writeln!(f, "hidden = {v}")?;
    }
    if let Some(v) = n.input_weight_scale {
        writeln!(f, "input_weight_scale = {v}")?;
    }
    if let Some(v) = n.rec_connectivity {
        writeln!(f, "rec_connectivity = {v}")?;
    }
    if let Some(v) = n.rec_spectral_radius {
        writeln!(f, "rec_spectral_radius = {v}")?;
    }
    for (key, r) in [("p", n.p), ("q", n.q), ("u0", n.u0), ("u1", n.u1)] {
        if let Some(r) = r {
            writeln!(f, "{key} = {}", format_range(r))?;
        }
    }
    Ok(())
}

/// Canonical config text. Parsing it gives back an equal config.
impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = &self.dataset;
        writeln!(f, "[dataset]")?;
        writeln!(f, "name = {}", d.name)?;
        writeln!(f, "path = {}", d.path.display())?;
        writeln!(f, "header = {}", d.header)?;
        match d.task {
            TaskKind::Classification { num_classes } => {
                writeln!(f, "task = classification")?;
                writeln!(f, "classes = {num_classes}")?;
            }
            TaskKind::Prediction => writeln!(f, "task = prediction")?,
            TaskKind::Regression => writeln!(f, "task = regression")?,
        }
        if let Some(labels) = &d.class_labels {
            let l: Vec<String> = labels.iter().map(f64::to_string).collect();
            writeln!(f, "class_labels = {}", l.join(", "))?;
        }
        match &d.columns {
            Columns::Direct { inputs, targets } => {
                writeln!(f, "inputs = {}", format_columns(inputs))?;
                writeln!(f, "targets = {}", format_columns(targets))?;
            }
            Columns::Lagged { lags, target } => {
                writeln!(f, "targets = {target}")?;
                let l: Vec<String> = lags.iter().map(|l| format!("{}:{}", l.column, l.lag)).collect();
                writeln!(f, "lagged_inputs = {}", l.join(", "))?;
            }
        }
        writeln!(f, "normalize = {}", d.normalize)?;

        let p = &self.protocol;
        writeln!(f, "\n[protocol]")?;
        match &p.split {
            SplitMode::KFold { folds } => {
                writeln!(f, "mode = kfold")?;
                writeln!(f, "folds = {folds}")?;
            }
            SplitMode::Holdout {
                train,
                shuffle,
                test_windows,
            } => {
                writeln!(f, "mode = holdout")?;
                match train {
                    TrainSize::Rows(n) => writeln!(f, "train_size = {n}")?,
                    TrainSize::Fraction(x) => writeln!(f, "train_fraction = {x}")?,
                }
                writeln!(f, "shuffle = {shuffle}")?;
                if !test_windows.is_empty() {
                    writeln!(f, "test_windows = {}", format_columns(test_windows))?;
                }
            }
        }
        writeln!(f, "runs = {}", p.runs)?;
        writeln!(f, "seed = {}", p.seed)?;
        let noise: Vec<String> = p.noise.iter().map(NoiseLevel::to_string).collect();
        writeln!(f, "snr_db = {}", noise.join(", "))?;
        writeln!(f, "noise_apply = {}", p.noise_apply)?;
        writeln!(f, "metric = {}", p.metric)?;
        writeln!(f, "output = {}", p.output.display())?;
        writeln!(f, "workers = {}", p.workers)?;

        writeln!(f, "\n[network]")?;
        write_network(f, &self.network)?;
        for m in &self.models {
            writeln!(f, "\n[model.{}]", m.kind)?;
            write_network(f, &m.overrides)?;
        }
        Ok(())
    }
}
