//! Commands behind the `varbound` binary.
//!
//! Every command reads its settings as `key=value` pairs: an optional config
//! file first, then command-line flags on top. `diagnose` and
//! `compare-samplers` additionally fall back to the dataset and model
//! recorded in the trace header for any key left unset.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use varbound::diagnostics::{self, compare_table, diagnostics_table};
use varbound::io::{self, DataFormat, LoadOptions, Series, TraceFile};
use varbound::optimizer::{self, GradMode, OptConfig};
use varbound::selftest::{self, Check, SelftestConfig};
use varbound::smoothness::SmoothnessSpec;
use varbound::targets::{GlmKind, GlmTarget, LabelKind};
use varbound::{Error, StandardizedBase, Target};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or config values.
    Usage(String),
    Domain(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Domain(e) => write!(f, "error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Domain(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Raw settings; later inserts win.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    pub fn new() -> Self {
        Self::default()
    }

    /// Settings from a `key=value` file. Dashes in keys are read as
    /// underscores, so `grad-samples` and `grad_samples` are the same key.
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let pairs = io::parse_key_values(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        let mut s = Self::new();
        for (k, v) in pairs {
            s.set(&k, v);
        }
        Ok(s)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.0.insert(key.replace('-', "_"), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    /// Fills keys that are not already set.
    pub fn fill_from(&mut self, other: &Settings) {
        for (k, v) in &other.0 {
            self.0.entry(k.clone()).or_insert_with(|| v.clone());
        }
    }

    fn parse<T: FromStr>(&self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("invalid value {v:?} for {key}: {e}")))
            })
            .transpose()
    }

    fn flag(&self, key: &str) -> CliResult<bool> {
        match self.get(key) {
            None | Some("false") | Some("0") => Ok(false),
            Some("true") | Some("1") => Ok(true),
            Some(v) => Err(CliError::Usage(format!("invalid value {v:?} for {key}: expected true or false"))),
        }
    }
}

/// Keys a trace header records about how its target was built.
const TARGET_KEYS: [&str; 9] = [
    "data", "format", "model", "sigma2", "rho2", "intercept", "standardize", "features", "base",
];

pub const DEFAULT_MC_SAMPLES: usize = 10_000;

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub data: PathBuf,
    pub format: DataFormat,
    pub model: GlmKind,
    pub sigma2: f64,
    pub rho2: f64,
    pub intercept: bool,
    pub standardize: bool,
    pub features: Option<usize>,
    pub base: StandardizedBase,
    pub seed: u64,
    pub opt: OptConfig,
    pub samplers: Vec<GradMode>,
    pub mc_samples: usize,
}

fn all_modes() -> Vec<GradMode> {
    std::iter::once(GradMode::Batch)
        .chain(varbound::estimators::SamplerLabel::ALL.map(GradMode::Subsampled))
        .collect()
}

impl ExperimentConfig {
    pub fn from_settings(s: &Settings) -> CliResult<Self> {
        let data = s
            .get("data")
            .ok_or_else(|| CliError::Usage("no dataset given (--data)".into()))?;
        let model = s
            .parse::<GlmKind>("model")?
            .ok_or_else(|| CliError::Usage("no model given (--model linear|logistic)".into()))?;
        let seed = s.parse("seed")?.unwrap_or(0);
        let defaults = OptConfig::default();
        let opt = OptConfig {
            step_size: s.parse("step_size")?,
            iterations: s.parse("iterations")?.unwrap_or(defaults.iterations),
            grad_samples: s.parse("grad_samples")?.unwrap_or(defaults.grad_samples),
            mode: s.parse("sampler")?.unwrap_or(defaults.mode),
            seed,
            snapshot_every: s.parse("snapshot_every")?.unwrap_or(defaults.snapshot_every),
            elbo_samples: s.parse("elbo_samples")?.unwrap_or(defaults.elbo_samples),
        };
        let samplers = match s.get("samplers") {
            None => all_modes(),
            Some(list) => list
                .split(',')
                .map(|m| {
                    m.parse::<GradMode>()
                        .map_err(|e| CliError::Usage(format!("invalid sampler {m:?}: {e}")))
                })
                .collect::<CliResult<Vec<_>>>()?,
        };
        if samplers.is_empty() {
            return Err(CliError::Usage("empty sampler list".into()));
        }
        Ok(Self {
            data: PathBuf::from(data),
            format: s.parse("format")?.unwrap_or(DataFormat::Csv),
            model,
            sigma2: s.parse("sigma2")?.unwrap_or(1.0),
            rho2: s.parse("rho2")?.unwrap_or(4.0),
            intercept: s.flag("intercept")?,
            standardize: s.flag("standardize")?,
            features: s.parse("features")?,
            base: s.parse("base")?.unwrap_or_else(StandardizedBase::gaussian),
            seed,
            opt,
            samplers,
            mc_samples: s.parse("mc_samples")?.unwrap_or(DEFAULT_MC_SAMPLES),
        })
    }

    pub fn load_target(&self) -> CliResult<Target> {
        let labels = match self.model {
            GlmKind::Linear => LabelKind::Real,
            GlmKind::Logistic => LabelKind::Binary,
        };
        let opts = LoadOptions {
            add_intercept: self.intercept,
            standardize: self.standardize,
            features: self.features,
            ..LoadOptions::new(self.format, labels)
        };
        let data = io::load_dataset(&self.data, &opts)?;
        Ok(GlmTarget::new(self.model, data, self.sigma2, self.rho2)?.into())
    }

    fn trace_header(&self, step_size: f64) -> Vec<(String, String)> {
        let mut h = vec![
            ("dataset", self.data.display().to_string()),
            ("format", self.format.as_str().to_string()),
            ("model", self.model.name().to_string()),
            ("seed", self.seed.to_string()),
            ("base", self.base.to_string()),
            ("step_size", io::fmt_f64(step_size)),
            ("grad_samples", self.opt.grad_samples.to_string()),
            ("sampler", self.opt.mode.to_string()),
            ("iterations", self.opt.iterations.to_string()),
            ("snapshot_every", self.opt.snapshot_every.to_string()),
            ("elbo_samples", self.opt.elbo_samples.to_string()),
            ("sigma2", io::fmt_f64(self.sigma2)),
            ("rho2", io::fmt_f64(self.rho2)),
            ("intercept", self.intercept.to_string()),
            ("standardize", self.standardize.to_string()),
        ];
        if let Some(f) = self.features {
            h.push(("features", f.to_string()));
        }
        h.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

/// Runs the optimizer; returns the trace file text.
pub fn cmd_fit(settings: &Settings) -> CliResult<String> {
    let cfg = ExperimentConfig::from_settings(settings)?;
    let target = cfg.load_target()?;
    let spec = SmoothnessSpec::derive(&target)?;
    let step = optimizer::resolve_step_size(&spec, &cfg.opt)?;
    let records = optimizer::run(&target, &cfg.base, &cfg.opt)?;
    Ok(io::write_trace(&TraceFile {
        header: cfg.trace_header(step),
        records,
    }))
}

/// Settings for re-evaluating a trace: explicit settings first, then the
/// trace header. A model given explicitly must agree with the header.
fn trace_settings(settings: &Settings, trace: &TraceFile) -> CliResult<Settings> {
    let mut from_trace = Settings::new();
    for key in TARGET_KEYS {
        let header_key = if key == "data" { "dataset" } else { key };
        if let Some(v) = trace.get(header_key) {
            from_trace.set(key, v);
        }
    }
    if let Some(seed) = trace.get("seed") {
        from_trace.set("seed", seed);
    }
    if let (Some(a), Some(b)) = (settings.get("model"), from_trace.get("model")) {
        if a.trim() != b.trim() {
            return Err(CliError::Domain(Error::Mismatch(format!(
                "trace was fitted with model {b} but the config asks for {a}"
            ))));
        }
    }
    let mut merged = settings.clone();
    merged.fill_from(&from_trace);
    Ok(merged)
}

fn load_trace_and_target(
    trace_path: &Path,
    settings: &Settings,
) -> CliResult<(TraceFile, ExperimentConfig, Target)> {
    let text = std::fs::read_to_string(trace_path).map_err(Error::from)?;
    let trace = io::parse_trace(&text)?;
    if trace.records.is_empty() {
        return Err(CliError::Domain(Error::InvalidParameter("trace has no snapshots".into())));
    }
    let cfg = ExperimentConfig::from_settings(&trace_settings(settings, &trace)?)?;
    let target = cfg.load_target()?;
    let d = trace.records[0].w.dim();
    if d != target.dim() {
        return Err(CliError::Domain(Error::Mismatch(format!(
            "trace has dimension {d} but the dataset gives {}",
            target.dim()
        ))));
    }
    Ok((trace, cfg, target))
}

/// Diagnostics CSV: one row per (snapshot, sampler).
pub fn cmd_diagnose(trace_path: &Path, settings: &Settings) -> CliResult<String> {
    let (trace, cfg, target) = load_trace_and_target(trace_path, settings)?;
    let rows = diagnostics::diagnose(
        &target,
        &cfg.base,
        &trace.records,
        &cfg.samplers,
        cfg.mc_samples,
        cfg.seed,
    )?;
    Ok(diagnostics_table(&rows).to_csv())
}

/// Sampler comparison CSV at the final snapshot.
pub fn cmd_compare_samplers(trace_path: &Path, settings: &Settings) -> CliResult<String> {
    let (trace, cfg, target) = load_trace_and_target(trace_path, settings)?;
    let rows = diagnostics::compare_samplers(
        &target,
        &cfg.base,
        &trace.records,
        &cfg.samplers,
        cfg.mc_samples,
        cfg.seed,
    )?;
    Ok(compare_table(&rows).to_csv())
}

/// Report lines (`PASS name: detail`) and whether everything passed.
pub fn cmd_selftest(settings: &Settings) -> CliResult<(String, bool)> {
    let defaults = SelftestConfig::default();
    let cfg = SelftestConfig {
        seed: settings.parse("seed")?.unwrap_or(defaults.seed),
        samples: settings.parse("samples")?.unwrap_or(defaults.samples),
    };
    if cfg.samples < 1000 {
        return Err(CliError::Usage("selftest needs at least 1000 samples".into()));
    }
    Ok(render_checks(&selftest::run(&cfg)))
}

pub fn render_checks(checks: &[Check]) -> (String, bool) {
    let mut out = String::new();
    let mut passed = 0;
    for c in checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        passed += usize::from(c.passed);
        out.push_str(&format!("{tag} {}: {}\n", c.name, c.detail));
    }
    out.push_str(&format!("summary: {passed}/{} passed\n", checks.len()));
    (out, passed == checks.len())
}

pub const DEFAULT_PLOT_COLUMNS: [&str; 4] =
    ["esn_empirical", "bound_scalar", "bound_matrix", "bound_friendly"];

/// Log-scale SVG of `columns` against `x_column`. Tables with a `sampler`
/// column get one series per (column, sampler) unless `sampler` selects one.
pub fn cmd_plot(
    csv_text: &str,
    columns: &[String],
    x_column: &str,
    sampler: Option<&str>,
) -> CliResult<String> {
    let table = io::parse_table(csv_text)?;
    if table.rows.is_empty() {
        return Err(CliError::Domain(Error::InvalidParameter("table has no rows".into())));
    }
    for c in columns.iter().map(String::as_str).chain([x_column]) {
        if table.column_index(c).is_none() {
            return Err(CliError::Usage(format!("unknown column {c:?}")));
        }
    }
    let xs = table.numeric_column(x_column)?;
    let groups: Vec<Option<String>> = match table.column_index("sampler") {
        None => vec![None],
        Some(j) => {
            let mut seen: Vec<String> = Vec::new();
            for r in &table.rows {
                if !seen.contains(&r[j]) && sampler.is_none_or(|s| s == r[j]) {
                    seen.push(r[j].clone());
                }
            }
            if seen.is_empty() {
                return Err(CliError::Usage(format!("no rows for sampler {:?}", sampler.unwrap_or(""))));
            }
            seen.into_iter().map(Some).collect()
        }
    };
    let sampler_col = table.column_index("sampler");
    let mut series = Vec::new();
    for col in columns {
        let ys = table.numeric_column(col)?;
        for g in &groups {
            let points = (0..table.rows.len())
                .filter(|&i| match (g, sampler_col) {
                    (Some(g), Some(j)) => &table.rows[i][j] == g,
                    _ => true,
                })
                .map(|i| (xs[i], ys[i]))
                .collect();
            let label = match g {
                Some(g) if groups.len() > 1 => format!("{col} ({g})"),
                _ => col.clone(),
            };
            series.push(Series { label, points });
        }
    }
    Ok(io::render_log_plot("gradient estimator ESN", x_column, "ESN", &series))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn later_settings_win_and_dashes_normalize() {
        let mut s = Settings::new();
        s.set("grad-samples", "5");
        s.set("grad_samples", "7");
        let mut fallback = Settings::new();
        fallback.set("grad_samples", "9");
        fallback.set("seed", "3");
        s.fill_from(&fallback);
        assert_eq!(s.get("grad_samples"), Some("7"));
        assert_eq!(s.get("seed"), Some("3"));
    }

    #[test]
    fn config_defaults() {
        let mut s = Settings::new();
        s.set("data", "x.csv");
        s.set("model", "linear");
        let cfg = ExperimentConfig::from_settings(&s).unwrap();
        assert_eq!((cfg.sigma2, cfg.rho2), (1.0, 4.0));
        assert_eq!(cfg.mc_samples, 10_000);
        assert_eq!(cfg.samplers.len(), 5);
        assert_eq!(cfg.base.kurtosis(), 3.0);
        assert_eq!(cfg.opt, OptConfig::default());
    }

    #[test]
    fn bad_values_are_usage_errors() {
        let mut s = Settings::new();
        s.set("data", "x.csv");
        s.set("model", "probit");
        assert_eq!(ExperimentConfig::from_settings(&s).unwrap_err().exit_code(), 2);
        s.set("model", "linear");
        s.set("samplers", "batch,nope");
        assert_eq!(ExperimentConfig::from_settings(&s).unwrap_err().exit_code(), 2);
        s.set("samplers", "batch");
        s.set("intercept", "maybe");
        assert_eq!(ExperimentConfig::from_settings(&s).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn plot_rejects_unknown_column_and_empty_table() {
        let csv = "iteration,a\n0,1\n1,2\n";
        assert!(cmd_plot(csv, &["b".into()], "iteration", None).is_err());
        assert!(cmd_plot("iteration,a\n", &["a".into()], "iteration", None).is_err());
        let svg = cmd_plot(csv, &["a".into()], "iteration", None).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
    }
}
