//! Config-driven orchestration: panel -> association -> graph -> VAR ->
//! SVAR -> IRF, with every artifact written to disk and described by a
//! manifest.
//!
//! Config files are flat `key = value` text; command-line overrides replace
//! file values key by key. Every effective value (including defaults) is
//! echoed into the manifest, so a run is reproducible from its manifest
//! alone. The stage artifacts themselves are deterministic given config +
//! input; wall-clock timings go to a separate `run.log`, never into the
//! manifest.
//!
//! All pipeline artifacts use `f64`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assoc::{influence_matrix, pearson_matrix};
use crate::error::{Error, Result};
use crate::optim::Method;
use crate::panel::{Frequency, LoadOptions, MissingPolicy, TimeSeriesPanel};
use crate::planar::{identification_check, mst, pcpg_with, pmfg_with, GraphKind, WeightOrdering};
use crate::svar::{
    estimate_svar_multistart, restriction_mask, shock_trace, structural_irf, ShockKind,
    SvarOptions, TraceRow,
};
use crate::var::{fit_var, select_lag_bic};

/// Stationarity transform applied after loading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preprocessing {
    None,
    LogReturns,
    /// Log (optional) then HP filter; keeps the cycle.
    HpCycle,
    /// Log returns, then GARCH(1,1) latent volatility per node.
    GarchVolatility,
}

impl std::fmt::Display for Preprocessing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Preprocessing::None => "none",
            Preprocessing::LogReturns => "log_returns",
            Preprocessing::HpCycle => "hp_cycle",
            Preprocessing::GarchVolatility => "garch_volatility",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for Preprocessing {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Preprocessing::None),
            "log_returns" => Ok(Preprocessing::LogReturns),
            "hp_cycle" => Ok(Preprocessing::HpCycle),
            "garch_volatility" => Ok(Preprocessing::GarchVolatility),
            other => Err(Error::Config(format!("unknown preprocessing '{other}'"))),
        }
    }
}

/// Fixed lag order or BIC selection up to a cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LagChoice {
    Fixed(usize),
    Bic { p_max: usize },
}

/// Fully resolved pipeline configuration. The seed is mandatory: runs must
/// be reproducible.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub out_dir: PathBuf,
    pub preprocessing: Preprocessing,
    pub frequency: Frequency,
    pub hp_lambda: Option<f64>,
    pub hp_log: bool,
    pub standardize: bool,
    pub missing: MissingPolicy,
    pub graph: GraphKind,
    pub abs_ordering: bool,
    pub var_lag: LagChoice,
    pub n_starts: usize,
    pub n_restarts: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub horizon: usize,
    pub epicenter: Option<String>,
}

/// Parse flat `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

impl PipelineConfig {
    /// Load a config file and apply `key=value` overrides on top.
    pub fn from_file(path: impl AsRef<Path>, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            Error::Config(format!(
                "cannot read config {}: {e}",
                path.as_ref().display()
            ))
        })?;
        let mut pairs = parse_config_text(&text)?;
        pairs.extend_from_slice(overrides);
        Self::from_pairs(&pairs)
    }

    /// Build from key/value pairs; later occurrences of a key win.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let mut map: BTreeMap<&str, &str> = BTreeMap::new();
        for (k, v) in pairs {
            map.insert(k.as_str(), v.as_str());
        }
        const KNOWN: &[&str] = &[
            "input",
            "output_dir",
            "preprocessing",
            "frequency",
            "hp_lambda",
            "hp_log",
            "standardize",
            "missing_policy",
            "graph",
            "abs_ordering",
            "var_lag",
            "bic_max",
            "n_starts",
            "n_restarts",
            "methods",
            "seed",
            "horizon",
            "epicenter",
        ];
        for k in map.keys() {
            if !KNOWN.contains(k) {
                return Err(Error::Config(format!("unknown config key '{k}'")));
            }
        }

        let get = |k: &str| map.get(k).copied();
        let parse_bool = |k: &str, default: bool| -> Result<bool> {
            match get(k) {
                None => Ok(default),
                Some("true") | Some("1") | Some("yes") => Ok(true),
                Some("false") | Some("0") | Some("no") => Ok(false),
                Some(other) => Err(Error::Config(format!("bad boolean for {k}: '{other}'"))),
            }
        };
        let parse_usize = |k: &str, default: usize| -> Result<usize> {
            match get(k) {
                None => Ok(default),
                Some(v) => v
                    .parse()
                    .map_err(|_| Error::Config(format!("bad integer for {k}: '{v}'"))),
            }
        };

        let input = PathBuf::from(
            get("input").ok_or_else(|| Error::Config("missing required key 'input'".into()))?,
        );
        let seed: u64 = get("seed")
            .ok_or_else(|| {
                Error::Config("missing required key 'seed' (runs must be reproducible)".into())
            })?
            .parse()
            .map_err(|_| Error::Config("seed must be an unsigned integer".into()))?;

        let var_lag = match get("var_lag") {
            None => LagChoice::Bic {
                p_max: parse_usize("bic_max", 4)?,
            },
            Some("bic") => LagChoice::Bic {
                p_max: parse_usize("bic_max", 4)?,
            },
            Some(v) => LagChoice::Fixed(v.parse().map_err(|_| {
                Error::Config(format!("var_lag must be 'bic' or an integer, got '{v}'"))
            })?),
        };

        let methods = match get("methods") {
            None => vec![Method::NelderMead, Method::Bfgs],
            Some(list) => {
                let mut out = Vec::new();
                for tok in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                    out.push(match tok.to_ascii_lowercase().as_str() {
                        "nelder-mead" | "nm" => Method::NelderMead,
                        "bfgs" => Method::Bfgs,
                        other => return Err(Error::Config(format!("unknown method '{other}'"))),
                    });
                }
                if out.is_empty() {
                    return Err(Error::Config("methods list is empty".into()));
                }
                out
            }
        };

        Ok(PipelineConfig {
            input,
            out_dir: PathBuf::from(get("output_dir").unwrap_or("out")),
            preprocessing: get("preprocessing").unwrap_or("none").parse()?,
            frequency: get("frequency").unwrap_or("quarterly").parse()?,
            hp_lambda: match get("hp_lambda") {
                None => None,
                Some(v) => Some(
                    v.parse()
                        .map_err(|_| Error::Config(format!("bad hp_lambda '{v}'")))?,
                ),
            },
            hp_log: parse_bool("hp_log", true)?,
            standardize: parse_bool("standardize", true)?,
            missing: get("missing_policy").unwrap_or("reject").parse()?,
            graph: get("graph").unwrap_or("pcpg").parse()?,
            abs_ordering: parse_bool("abs_ordering", false)?,
            var_lag,
            n_starts: parse_usize("n_starts", 25)?,
            n_restarts: parse_usize("n_restarts", 30)?,
            methods,
            seed,
            horizon: parse_usize("horizon", 10)?,
            epicenter: get("epicenter").map(str::to_string),
        })
    }

    /// Effective HP penalty: explicit value or the frequency default.
    pub fn effective_hp_lambda(&self) -> f64 {
        self.hp_lambda
            .unwrap_or_else(|| self.frequency.default_hp_lambda())
    }

    /// Every effective setting, defaults included, as ordered text pairs.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("input".into(), self.input.display().to_string());
        m.insert("output_dir".into(), self.out_dir.display().to_string());
        m.insert("preprocessing".into(), self.preprocessing.to_string());
        m.insert(
            "frequency".into(),
            format!("{:?}", self.frequency).to_lowercase(),
        );
        m.insert(
            "hp_lambda".into(),
            format!("{}", self.effective_hp_lambda()),
        );
        m.insert("hp_log".into(), self.hp_log.to_string());
        m.insert("standardize".into(), self.standardize.to_string());
        m.insert(
            "missing_policy".into(),
            match self.missing {
                MissingPolicy::Reject => "reject".into(),
                MissingPolicy::ForwardFill => "forward_fill".to_string(),
            },
        );
        m.insert("graph".into(), self.graph.to_string().to_lowercase());
        m.insert("abs_ordering".into(), self.abs_ordering.to_string());
        m.insert(
            "var_lag".into(),
            match self.var_lag {
                LagChoice::Fixed(p) => p.to_string(),
                LagChoice::Bic { .. } => "bic".into(),
            },
        );
        m.insert(
            "bic_max".into(),
            match self.var_lag {
                LagChoice::Bic { p_max } => p_max.to_string(),
                LagChoice::Fixed(_) => "-".into(),
            },
        );
        m.insert("n_starts".into(), self.n_starts.to_string());
        m.insert("n_restarts".into(), self.n_restarts.to_string());
        m.insert(
            "methods".into(),
            self.methods
                .iter()
                .map(|m| m.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        m.insert("seed".into(), self.seed.to_string());
        m.insert("horizon".into(), self.horizon.to_string());
        m.insert(
            "epicenter".into(),
            self.epicenter.clone().unwrap_or_else(|| "first".into()),
        );
        m
    }

    /// FNV-1a hash of the canonical echo, hex-encoded.
    pub fn hash_hex(&self) -> String {
        let mut text = String::new();
        for (k, v) in self.echo() {
            text.push_str(&k);
            text.push('=');
            text.push_str(&v);
            text.push('\n');
        }
        format!("{:016x}", fnv1a64(text.as_bytes()))
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// One artifact produced by a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: usize,
}

/// Self-describing record of a completed run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub files: Vec<FileEntry>,
}

/// Result handed back to the caller: the manifest plus the epicenter trace
/// for display.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub trace: Vec<TraceRow<f64>>,
    pub out_dir: PathBuf,
}

struct StageClock {
    lines: Vec<String>,
}

impl StageClock {
    fn new() -> Self {
        StageClock { lines: Vec::new() }
    }

    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f().map_err(|e| e.in_stage(stage));
        self.lines.push(format!(
            "stage {stage}: {:.1} ms",
            start.elapsed().as_secs_f64() * 1e3
        ));
        out
    }
}

/// Apply the configured preprocessing chain to a freshly loaded panel.
fn preprocess(
    config: &PipelineConfig,
    panel: TimeSeriesPanel<f64>,
) -> Result<TimeSeriesPanel<f64>> {
    let panel = match config.preprocessing {
        Preprocessing::None => panel,
        Preprocessing::LogReturns => panel.log_returns()?,
        Preprocessing::HpCycle => panel.hp_cycle(config.effective_hp_lambda(), config.hp_log)?,
        Preprocessing::GarchVolatility => panel.log_returns()?.garch_volatility()?,
    };
    if config.standardize {
        panel.zscore()
    } else {
        Ok(panel)
    }
}

/// Full pipeline: returns the manifest and the epicenter's shock trace.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunOutcome> {
    let mut clock = StageClock::new();

    let raw = clock.time("load", || {
        TimeSeriesPanel::<f64>::load_csv(
            &config.input,
            LoadOptions {
                missing: config.missing,
                frequency: Some(config.frequency),
            },
        )
    })?;
    let panel = clock.time("preprocess", || preprocess(config, raw))?;

    let ordering = if config.abs_ordering {
        WeightOrdering::Absolute
    } else {
        WeightOrdering::Raw
    };
    let graph = clock.time("graph", || match config.graph {
        GraphKind::Pmfg => pmfg_with(&pearson_matrix(&panel)?, ordering),
        GraphKind::Mst => mst(&pearson_matrix(&panel)?),
        GraphKind::Pcpg => pcpg_with(&influence_matrix(&panel)?, ordering),
    })?;
    let report = identification_check(config.graph, panel.n_nodes());
    let mask = clock.time("identify", || restriction_mask(&graph))?;

    let var_model = clock.time("var", || {
        let p = match config.var_lag {
            LagChoice::Fixed(p) => p,
            LagChoice::Bic { p_max } => select_lag_bic(&panel, p_max)?,
        };
        fit_var(&panel, p)
    })?;

    let svar_model = clock.time("svar", || {
        let mut opts = SvarOptions::new(config.seed);
        opts.n_starts = config.n_starts;
        opts.n_restarts = config.n_restarts;
        opts.methods = config.methods.clone();
        estimate_svar_multistart(&var_model, &mask, &opts)
    })?;

    let (irf, trace) = clock.time("irf", || {
        let irf = structural_irf(
            &var_model,
            &svar_model.b,
            config.horizon,
            ShockKind::StructuralB,
        );
        let epicenter = match &config.epicenter {
            Some(l) => l.clone(),
            None => panel.labels()[0].clone(),
        };
        let horizons: Vec<usize> = (0..=config.horizon).collect();
        let trace = shock_trace(&irf, &epicenter, &horizons)?;
        Ok((irf, trace))
    })?;

    let artifacts = clock.time("render", || {
        Ok(vec![
            ("graph.dot".to_string(), graph.to_dot()),
            ("graph.json".to_string(), graph.to_json()?),
            ("var_model.json".to_string(), var_model.to_json()?),
            ("svar_model.json".to_string(), svar_model.to_json()?),
            ("irf.csv".to_string(), irf.to_csv()),
            (
                "identification.json".to_string(),
                serde_json::to_string_pretty(&report)?,
            ),
        ])
    })?;

    let manifest = write_outputs(config, artifacts, &clock)?;
    Ok(RunOutcome {
        manifest,
        trace,
        out_dir: config.out_dir.clone(),
    })
}

/// Graph-only pipeline: stops after filtration and the identification
/// report; writes three artifacts.
pub fn run_graph_only(config: &PipelineConfig) -> Result<RunOutcome> {
    let mut clock = StageClock::new();
    let raw = clock.time("load", || {
        TimeSeriesPanel::<f64>::load_csv(
            &config.input,
            LoadOptions {
                missing: config.missing,
                frequency: Some(config.frequency),
            },
        )
    })?;
    let panel = clock.time("preprocess", || preprocess(config, raw))?;
    let ordering = if config.abs_ordering {
        WeightOrdering::Absolute
    } else {
        WeightOrdering::Raw
    };
    let graph = clock.time("graph", || match config.graph {
        GraphKind::Pmfg => pmfg_with(&pearson_matrix(&panel)?, ordering),
        GraphKind::Mst => mst(&pearson_matrix(&panel)?),
        GraphKind::Pcpg => pcpg_with(&influence_matrix(&panel)?, ordering),
    })?;
    let report = identification_check(config.graph, panel.n_nodes());

    let artifacts = vec![
        ("graph.dot".to_string(), graph.to_dot()),
        ("graph.json".to_string(), graph.to_json()?),
        (
            "identification.json".to_string(),
            serde_json::to_string_pretty(&report)?,
        ),
    ];
    let manifest = write_outputs(config, artifacts, &clock)?;
    Ok(RunOutcome {
        manifest,
        trace: Vec::new(),
        out_dir: config.out_dir.clone(),
    })
}

/// Write all artifacts and the manifest. Nothing is written until every
/// stage has succeeded; a failure while writing removes the files already
/// written in this run.
fn write_outputs(
    config: &PipelineConfig,
    artifacts: Vec<(String, String)>,
    clock: &StageClock,
) -> Result<RunManifest> {
    std::fs::create_dir_all(&config.out_dir)?;
    let mut written: Vec<PathBuf> = Vec::new();
    let mut files = Vec::with_capacity(artifacts.len());

    let result = (|| -> Result<()> {
        for (name, content) in &artifacts {
            let path = config.out_dir.join(name);
            std::fs::write(&path, content)?;
            written.push(path);
            files.push(FileEntry {
                name: name.clone(),
                bytes: content.len(),
            });
        }
        Ok(())
    })();
    if let Err(e) = result {
        for p in &written {
            let _ = std::fs::remove_file(p);
        }
        return Err(e.in_stage("write"));
    }

    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config.hash_hex(),
        seed: config.seed,
        config: config.echo(),
        files,
    };
    let manifest_text = serde_json::to_string_pretty(&manifest).map_err(Error::from)?;
    std::fs::write(config.out_dir.join("manifest.json"), &manifest_text)?;
    // timings are deliberately kept out of the manifest: artifacts must be
    // byte-identical across reruns, wall clocks are not
    let _ = std::fs::write(
        config.out_dir.join("run.log"),
        clock.lines.join("\n") + "\n",
    );
    Ok(manifest)
}
