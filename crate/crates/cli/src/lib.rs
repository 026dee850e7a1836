//! Configuration and artifact handling for the `ane` command.

use std::fs;
use std::path::{Path, PathBuf};

use ane_core::enhance::{ane_multilayer_with, AneOutcome, LoopSnapshot};
use ane_core::export::{pretty_run_table, render_svg, run_table_csv, PartitionExport};
use ane_core::network::Checkpoint;
use ane_core::{AdamConfig, AneConfig, AneError, AneHistory, Marking, ProblemSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("{path}: malformed partition export: {source}")]
    Export { path: PathBuf, source: AneError },
    #[error(transparent)]
    Core(#[from] AneError),
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Keys accepted in a run configuration file. Unset keys take the defaults of
/// the chosen problem.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub problem: String,
    pub m: Option<usize>,
    pub m_b: Option<usize>,
    pub n1: Option<usize>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub r: Option<f64>,
    pub gamma1: Option<f64>,
    pub marking: Option<String>,
    pub lr: Option<f64>,
    pub max_iters: Option<usize>,
    pub stop_window: Option<usize>,
    pub stop_rel_tol: Option<f64>,
    pub max_loops: Option<usize>,
    pub seed: Option<u64>,
    pub outdir: Option<PathBuf>,
    pub alpha: Option<f64>,
    pub refit_output_after_layer: Option<bool>,
}

/// A fully resolved run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub problem: String,
    pub alpha: f64,
    pub outdir: PathBuf,
    pub ane: AneConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| CliError::Config { path: path.to_path_buf(), message: e.to_string() })?;
        Self::resolve(raw).map_err(|message| CliError::Config { path: path.to_path_buf(), message })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
        Self::from_toml(&text, path)
    }

    pub fn resolve(raw: RawConfig) -> std::result::Result<Self, String> {
        let d = AneConfig::for_problem(&raw.problem).ok_or_else(|| {
            format!("field `problem`: unknown problem `{}` (expected one of {})", raw.problem, ProblemSpec::NAMES.join(", "))
        })?;
        let default_gamma1 = match d.marking {
            Marking::Bulk(g) => g,
            Marking::Average => 0.5,
        };
        let gamma1 = raw.gamma1.unwrap_or(default_gamma1);
        let marking = match raw.marking.as_deref().unwrap_or("bulk") {
            "bulk" => Marking::Bulk(gamma1),
            "average" => Marking::Average,
            other => return Err(format!("field `marking`: expected `bulk` or `average`, got `{other}`")),
        };
        let m = raw.m.unwrap_or(d.m);
        let adam = AdamConfig {
            learning_rate: raw.lr.unwrap_or(d.adam.learning_rate),
            stop_window: raw.stop_window.unwrap_or(d.adam.stop_window),
            stop_rel_tol: raw.stop_rel_tol.unwrap_or(d.adam.stop_rel_tol),
            max_iters: raw.max_iters.unwrap_or(d.adam.max_iters),
            ..d.adam
        };
        let ane = AneConfig {
            epsilon: raw.epsilon.unwrap_or(d.epsilon),
            delta: raw.delta.unwrap_or(d.delta),
            r: raw.r.unwrap_or(d.r),
            marking,
            max_loops: raw.max_loops.unwrap_or(d.max_loops),
            adam,
            seed: raw.seed.unwrap_or(d.seed),
            n1: raw.n1.unwrap_or(d.n1),
            m,
            m_b: raw.m_b.unwrap_or(m),
            refit_output_after_layer: raw.refit_output_after_layer.unwrap_or(d.refit_output_after_layer),
        };
        ane.validate().map_err(|e| e.to_string())?;
        let alpha = raw.alpha.unwrap_or(0.01);
        if !(alpha > 0.0) {
            return Err(format!("field `alpha`: must be positive, got {alpha}"));
        }
        let outdir = raw.outdir.unwrap_or_else(|| PathBuf::from(format!("out/{}", raw.problem)));
        Ok(Self { problem: raw.problem, alpha, outdir, ane })
    }
}

/// Machine-readable run summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub problem: String,
    pub status: String,
    pub structure: String,
    pub params: usize,
    pub error: f64,
    pub xi_rel: f64,
    pub loops: usize,
    pub history: AneHistory,
}

fn write(path: PathBuf, contents: &str) -> Result<()> {
    fs::write(&path, contents).map_err(|source| CliError::Write { path, source })
}

/// Run the configured experiment, writing every artifact into `cfg.outdir`.
pub fn run(cfg: &RunConfig) -> Result<Summary> {
    let problem = ProblemSpec::by_name(&cfg.problem, cfg.alpha)?;
    let out = &cfg.outdir;
    fs::create_dir_all(out).map_err(|source| CliError::Write { path: out.clone(), source })?;
    let mut io_err: Option<CliError> = None;
    let mut observe = |s: &LoopSnapshot<'_>| -> ane_core::Result<()> {
        let k = s.index;
        let part = PartitionExport::from_partition(s.partition).to_json()?;
        let ckpt = Checkpoint::new(s.network, cfg.ane.seed).to_json()?;
        for (name, body) in [(format!("partition_loop{k}.json"), part), (format!("checkpoint_loop{k}.json"), ckpt)] {
            if let Err(e) = write(out.join(name), &body) {
                io_err.get_or_insert(e);
            }
        }
        Ok(())
    };
    let AneOutcome { history, .. } = ane_multilayer_with(&problem, &cfg.ane, &mut observe)?;
    if let Some(e) = io_err {
        return Err(e);
    }
    write(out.join("run_table.csv"), &run_table_csv(&history))?;
    let last = history.records.last().expect("at least one loop runs");
    let summary = Summary {
        problem: cfg.problem.clone(),
        status: if history.converged { "converged" } else { "unconverged" }.into(),
        structure: last.structure.clone(),
        params: last.params,
        error: last.error,
        xi_rel: last.xi_rel,
        loops: history.records.len(),
        history: history.clone(),
    };
    let mut json = serde_json::to_string_pretty(&summary).map_err(AneError::from)?;
    json.push('\n');
    write(out.join("summary.json"), &json)?;
    Ok(summary)
}

/// Render a partition export to SVG.
pub fn render(input: &Path, output: &Path) -> Result<()> {
    let text = fs::read_to_string(input).map_err(|source| CliError::Read { path: input.to_path_buf(), source })?;
    let doc = PartitionExport::from_json(&text).map_err(|source| CliError::Export { path: input.to_path_buf(), source })?;
    write(output.to_path_buf(), &render_svg(&doc))
}

/// Pretty-print the run table in `outdir`.
pub fn report(outdir: &Path) -> Result<String> {
    let path = outdir.join("run_table.csv");
    let csv = fs::read_to_string(&path).map_err(|source| CliError::Read { path, source })?;
    let mut text = pretty_run_table(&csv);
    if let Ok(s) = fs::read_to_string(outdir.join("summary.json")) {
        if let Ok(summary) = serde_json::from_str::<Summary>(&s) {
            text.push_str(&format!("status: {}\n", summary.status));
        }
    }
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn problem_defaults() {
        let c = RunConfig::from_toml("problem = \"nonconstant-jump\"\n", Path::new("x.toml")).unwrap();
        assert_eq!(c.ane.m, 100);
        assert_eq!(c.ane.m_b, 100);
        assert_eq!(c.ane.marking, Marking::Bulk(0.3));
        assert_eq!(c.ane.epsilon, 0.03);
        let c = RunConfig::from_toml("problem = \"transition\"\nm = 50\n", Path::new("x.toml")).unwrap();
        assert_eq!((c.ane.m, c.ane.m_b, c.ane.n1), (50, 50, 12));
        assert_eq!(c.ane.adam.learning_rate, 0.005);
    }

    #[test]
    fn diagnostics_name_the_field() {
        let err = RunConfig::from_toml("problem = \"transition\"\nbogus = 1\n", Path::new("c.toml")).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        let err = RunConfig::from_toml("problem = \"heat\"\n", Path::new("c.toml")).unwrap_err();
        assert!(err.to_string().contains("problem"), "{err}");
        let err = RunConfig::from_toml("problem = \"transition\"\ngamma1 = 1.5\n", Path::new("c.toml")).unwrap_err();
        assert!(err.to_string().contains("gamma1"), "{err}");
        let err = RunConfig::from_toml("problem = \"transition\"\nm = \"x\"\n", Path::new("c.toml")).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }
}
