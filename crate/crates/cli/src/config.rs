//! Run settings from flags and an optional `key = value` file.
//!
//! Keys in the file are the long flag names without dashes prefix, e.g.
//! `dt = 0.0005` or `cloud-file = nodes.csv`. Flags win over file values.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;

use gfdm::presets::ExperimentPreset;
use gfdm::stability::StabilityOptions;
use gfdm::{
    generate_irregular_cloud, generate_regular_cloud, load_cloud, Domain, ModelParameters,
    MotilityFunction, NeumannRows, PointCloud, SimulationConfig, WeightScheme,
};

const DEFAULT_GRID: (usize, usize) = (21, 21);
const DEFAULT_PERTURBATION: f64 = 0.2;

#[derive(Args, Debug, Default)]
pub struct Setup {
    /// Key-value settings file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// example1 or example2.
    #[arg(long)]
    pub preset: Option<String>,
    /// Grid size as NXxNY.
    #[arg(long)]
    pub grid: Option<String>,
    /// regular, irregular or file.
    #[arg(long)]
    pub cloud: Option<String>,
    /// Cloud CSV used with `--cloud file`.
    #[arg(long)]
    pub cloud_file: Option<PathBuf>,
    #[arg(long)]
    pub perturbation: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_final: Option<f64>,
    /// Star size (neighbors per node).
    #[arg(long)]
    pub s: Option<usize>,
    /// Weight exponent in w = d^-alpha.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Override the preset's motility function: exp or rational.
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Boundary rows of the elliptic solve: stencil or paired.
    #[arg(long)]
    pub neumann: Option<String>,
    /// Stop when dt exceeds the convergence bound.
    #[arg(long)]
    pub enforce_stability: bool,
    /// Re-check the bound every this many steps (0: only at t = 0).
    #[arg(long)]
    pub stability_every: Option<usize>,
    /// Scale the diffusion term of the bound by gamma(V0).
    #[arg(long)]
    pub gamma_scaled_bound: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CloudSource {
    Regular,
    Irregular { perturbation: f64, seed: u64 },
}

#[derive(Debug)]
pub struct Resolved {
    pub preset: ExperimentPreset,
    pub config: SimulationConfig,
    pub grid: (usize, usize),
    pub source: Result<CloudSource, PathBuf>,
    pub out: Option<PathBuf>,
}

impl Resolved {
    pub fn cloud(&self) -> gfdm::Result<PointCloud> {
        let (nx, ny) = self.grid;
        let d = Domain::unit_square();
        match &self.source {
            Ok(CloudSource::Regular) => generate_regular_cloud(nx, ny, d),
            Ok(CloudSource::Irregular { perturbation, seed }) => {
                generate_irregular_cloud(nx, ny, *perturbation, *seed, d)
            }
            Err(path) => load_cloud(path),
        }
    }
}

pub fn parse_grid(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| anyhow!("grid `{s}` is not of the form NXxNY"))?;
    let nx = a.trim().parse().with_context(|| format!("grid `{s}`"))?;
    let ny = b.trim().parse().with_context(|| format!("grid `{s}`"))?;
    Ok((nx, ny))
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str, origin: &Path) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected `key = value`", origin.display(), n + 1))?;
        let key = k.trim().replace('_', "-");
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            bail!("{}:{}: duplicate key `{key}`", origin.display(), n + 1);
        }
    }
    Ok(map)
}

const KNOWN_KEYS: &[&str] = &[
    "preset",
    "grid",
    "cloud",
    "cloud-file",
    "perturbation",
    "seed",
    "dt",
    "t-final",
    "s",
    "alpha",
    "gamma",
    "mu",
    "neumann",
    "enforce-stability",
    "stability-every",
    "gamma-scaled-bound",
    "out",
];

struct FileValues(HashMap<String, String>);

impl FileValues {
    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| anyhow!("config key `{key}` = `{v}`: {e}")),
        }
    }
}

impl Setup {
    pub fn resolve(&self) -> Result<Resolved> {
        let file = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| gfdm::Error::Io {
                    path: path.clone(),
                    source: e,
                })?;
                let map = parse_config_text(&text, path)?;
                if let Some(k) = map.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
                    bail!("{}: unknown key `{k}`", path.display());
                }
                FileValues(map)
            }
            None => FileValues(HashMap::new()),
        };

        let preset_name = self
            .preset
            .clone()
            .or(file.get("preset")?)
            .unwrap_or_else(|| "example1".to_string());
        let mut preset = ExperimentPreset::by_name(&preset_name)?;

        let grid = match self.grid.clone().or(file.get("grid")?) {
            Some(g) => parse_grid(&g)?,
            None => DEFAULT_GRID,
        };
        let perturbation = self
            .perturbation
            .or(file.get("perturbation")?)
            .unwrap_or(DEFAULT_PERTURBATION);
        let seed = self.seed.or(file.get("seed")?).unwrap_or(0);
        let kind = self
            .cloud
            .clone()
            .or(file.get("cloud")?)
            .unwrap_or_else(|| "regular".to_string());
        let source = match kind.as_str() {
            "regular" => Ok(CloudSource::Regular),
            "irregular" => Ok(CloudSource::Irregular { perturbation, seed }),
            "file" => Err(self
                .cloud_file
                .clone()
                .or(file.get("cloud-file")?)
                .ok_or_else(|| anyhow!("--cloud file needs --cloud-file"))?),
            other => bail!("unknown cloud kind `{other}` (expected regular, irregular or file)"),
        };

        if let Some(alpha) = self.alpha.or(file.get("alpha")?) {
            preset.weights = WeightScheme::new(alpha)?;
        }
        if let Some(dt) = self.dt.or(file.get("dt")?) {
            preset.dt = dt;
        }
        let mut config = preset.config();
        // A step longer than the preset horizon stretches the horizon to one step.
        let t_final = self
            .t_final
            .or(file.get("t-final")?)
            .or((config.dt > config.t_final).then_some(config.dt));
        if let Some(t) = t_final {
            config.t_final = t;
            config.snapshot_times.retain(|&s| s <= t);
            preset.report_times.retain(|&s| s <= t);
        }
        if let Some(name) = self.gamma.clone().or(file.get("gamma")?) {
            config.gamma = MotilityFunction::by_name(&name)?;
        }
        if let Some(mu) = self.mu.or(file.get("mu")?) {
            config.params = ModelParameters::new(mu)?;
        }
        if let Some(s) = self.s.or(file.get("s")?) {
            config.star_size = s;
        }
        if let Some(n) = self.neumann.clone().or(file.get("neumann")?) {
            config.neumann = NeumannRows::parse(&n)?;
        }
        config.enforce_stability_bound =
            self.enforce_stability || file.get("enforce-stability")?.unwrap_or(false);
        if let Some(k) = self.stability_every.or(file.get("stability-every")?) {
            config.stability_check_every = k;
        }
        config.stability = StabilityOptions {
            scale_laplacian_by_gamma: self.gamma_scaled_bound
                || file.get("gamma-scaled-bound")?.unwrap_or(false),
        };
        config.validate()?;

        Ok(Resolved {
            preset,
            config,
            grid,
            source,
            out: file.get("out")?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_strings() {
        assert_eq!(parse_grid("21x21").unwrap(), (21, 21));
        assert_eq!(parse_grid("41X11").unwrap(), (41, 11));
        assert!(parse_grid("21").is_err());
        assert!(parse_grid("ax3").is_err());
    }

    #[test]
    fn config_text() {
        let m = parse_config_text(
            "# settings\ndt = 0.002  # half\n\nt_final=1\n",
            Path::new("c"),
        )
        .unwrap();
        assert_eq!(m["dt"], "0.002");
        assert_eq!(m["t-final"], "1");
        assert!(parse_config_text("dt 0.1", Path::new("c")).is_err());
        assert!(parse_config_text("dt = 1\ndt = 2", Path::new("c")).is_err());
    }

    #[test]
    fn defaults_and_overrides() {
        let r = Setup::default().resolve().unwrap();
        assert_eq!(r.grid, (21, 21));
        assert_eq!(r.preset.name, "example1");
        assert_eq!(r.config.t_final, 5.0);
        assert_eq!(r.source, Ok(CloudSource::Regular));

        let s = Setup {
            preset: Some("example2".into()),
            t_final: Some(0.5),
            cloud: Some("irregular".into()),
            seed: Some(7),
            ..Setup::default()
        };
        let r = s.resolve().unwrap();
        assert_eq!(r.config.gamma.name(), "rational");
        assert_eq!(r.preset.report_times, vec![0.05, 0.1, 0.5]);
        assert_eq!(
            r.source,
            Ok(CloudSource::Irregular {
                perturbation: 0.2,
                seed: 7
            })
        );
    }

    #[test]
    fn file_values_lose_to_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(&path, "preset = example2\ndt = 0.002\nmu = 6\n").unwrap();
        let s = Setup {
            config: Some(path.clone()),
            dt: Some(0.0005),
            ..Setup::default()
        };
        let r = s.resolve().unwrap();
        assert_eq!(r.preset.name, "example2");
        assert_eq!(r.config.dt, 0.0005);
        assert_eq!(r.config.params.mu, 6.0);

        fs::write(&path, "speed = 3\n").unwrap();
        let s = Setup {
            config: Some(path),
            ..Setup::default()
        };
        assert!(s.resolve().is_err());
    }
}
