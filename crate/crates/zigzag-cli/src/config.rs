//! Run configuration: a single JSON document, with command-line flags
//! overriding file fields. No environment variables are consulted.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;
use zigzag_core::potential::PotentialSpec;
use zigzag_core::{Potential64, SolverOpts64, TubeConfig64, Window64};

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// Inline potential spec; exclusive with `potential_file`.
    pub potential: Option<PotentialSpec<f64>>,
    /// Path to a JSON potential file.
    pub potential_file: Option<PathBuf>,
    pub n: Option<usize>,
    /// Field amplitude; exactly one of `b` and `a` may be given.
    pub b: Option<f64>,
    /// Flux per slanted edge, as an alternative to `b`.
    pub a: Option<f64>,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    /// Grid size for the discriminant table.
    pub lambda_points: Option<usize>,
    pub channels: Option<Vec<i64>>,
    pub b_sweep: Option<SweepSpec>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub eigenfunction: Option<EigenfunctionSpec>,
    pub tolerances: Option<ToleranceOverrides>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenfunctionSpec {
    /// "dirichlet" or "flat".
    pub kind: String,
    pub channel: i64,
    /// 1-based index into the eigenvalue list inside the window.
    pub index: usize,
}

#[derive(Debug, Clone, Copy, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub tol_f: Option<f64>,
    pub root_rel: Option<f64>,
}

/// Flag values that override file fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub lambda_max: Option<f64>,
    pub b_sweep: Option<SweepSpec>,
    pub channels: Option<Vec<i64>>,
    pub seed: Option<u64>,
}

/// Fully resolved configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub file: FileConfig,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub opts: SolverOpts64,
}

impl RunConfig {
    pub fn load(config_path: Option<&Path>, overrides: Overrides) -> Result<Self> {
        let mut file = match config_path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                serde_json::from_str::<FileConfig>(&text)
                    .with_context(|| format!("parsing config {}", p.display()))?
            }
            None => FileConfig::default(),
        };
        if let Some(x) = overrides.lambda_max {
            file.lambda_max = Some(x);
        }
        if let Some(s) = overrides.b_sweep {
            file.b_sweep = Some(s);
        }
        if let Some(c) = overrides.channels {
            file.channels = Some(c);
        }
        if let Some(s) = overrides.seed {
            file.seed = Some(s);
        }
        let out_dir = overrides
            .out
            .or_else(|| file.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("."));

        let mut opts = SolverOpts64::default();
        if let Some(t) = file.tolerances {
            if let Some(v) = t.tol_f {
                opts.tol_f = v;
            }
            if let Some(v) = t.root_rel {
                opts.root_rel = v;
            }
        }
        let seed = file.seed.unwrap_or(42);
        Ok(RunConfig {
            file,
            out_dir,
            seed,
            opts,
        })
    }

    pub fn potential(&self) -> Result<Potential64> {
        match (&self.file.potential, &self.file.potential_file) {
            (Some(_), Some(_)) => bail!("give either an inline potential or potential_file, not both"),
            (Some(spec), None) => Ok(Potential64::from_spec(spec.clone())?),
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading potential {}", path.display()))?;
                Ok(Potential64::from_json(&text)?)
            }
            (None, None) => Ok(Potential64::zero()),
        }
    }

    pub fn n(&self) -> Result<usize> {
        let n = self.file.n.ok_or_else(|| anyhow!("config field `n` is required"))?;
        if n < 1 {
            bail!("n must be ≥ 1, got {n}");
        }
        Ok(n)
    }

    /// Exactly one of `b` and `a` must be supplied.
    pub fn tube(&self) -> Result<TubeConfig64> {
        let n = self.n()?;
        match (self.file.b, self.file.a) {
            (Some(_), Some(_)) => bail!("give exactly one of `b` and `a`, got both"),
            (None, None) => bail!("give exactly one of `b` and `a`, got neither"),
            (Some(b), None) => Ok(TubeConfig64::from_field(n, b)?),
            (None, Some(a)) => Ok(TubeConfig64::from_flux(n, a)?),
        }
    }

    pub fn window(&self) -> Result<Window64> {
        let hi = self
            .file
            .lambda_max
            .ok_or_else(|| anyhow!("config field `lambda_max` is required"))?;
        if hi <= 0.0 {
            bail!("lambda_max must be positive, got {hi}");
        }
        let lo = self.file.lambda_min.unwrap_or(-10.0);
        Ok(Window64::new(lo, hi)?)
    }

    pub fn lambda_points(&self) -> usize {
        self.file.lambda_points.unwrap_or(2000).max(2)
    }

    pub fn channels(&self) -> Result<Vec<i64>> {
        match &self.file.channels {
            Some(list) if !list.is_empty() => Ok(list.clone()),
            _ => Ok((1..=self.n()? as i64).collect()),
        }
    }

    pub fn sweep_grid(&self) -> Result<Vec<f64>> {
        let spec = self
            .file
            .b_sweep
            .ok_or_else(|| anyhow!("a sweep needs `b_sweep` in the config or --b MIN:MAX:STEPS"))?;
        if spec.steps < 2 || spec.min >= spec.max {
            bail!("sweep needs min < max and at least 2 steps");
        }
        Ok((0..spec.steps)
            .map(|i| spec.min + (spec.max - spec.min) * i as f64 / (spec.steps - 1) as f64)
            .collect())
    }
}

/// Parse the --b MIN:MAX:STEPS flag.
pub fn parse_sweep_flag(text: &str) -> Result<SweepSpec> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        bail!("--b expects MIN:MAX:STEPS, got `{text}`");
    }
    Ok(SweepSpec {
        min: parts[0].parse().context("sweep MIN")?,
        max: parts[1].parse().context("sweep MAX")?,
        steps: parts[2].parse().context("sweep STEPS")?,
    })
}

/// Parse the --channels comma list.
pub fn parse_channels_flag(text: &str) -> Result<Vec<i64>> {
    text.split(',')
        .map(|s| s.trim().parse::<i64>().map_err(|e| anyhow!("channel `{s}`: {e}")))
        .collect()
}
