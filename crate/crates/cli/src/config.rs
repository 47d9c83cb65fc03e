//! Run configuration: a TOML file merged with command-line flags.

use std::path::{Path, PathBuf};

use clap::Args;
use mcmullen_core::density::RasterMode;
use mcmullen_core::exact::parse_rational;
use mcmullen_core::hierarchy::{default_branching, ConstructionParams};
use mcmullen_core::{Point, Rational, Rect};
use serde::{Deserialize, Deserializer};

use crate::error::CliError;

/// Options shared by every command. Flags override the `--config` file.
#[derive(Args, Clone, Debug, Default)]
pub struct Options {
    /// TOML file with any of the options below (flags win).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Core ratio δ, as `p/q` or a decimal.
    #[arg(long, global = true, value_name = "P/Q")]
    pub delta: Option<String>,
    /// Core mass deficit γ, as `p/q` or a decimal.
    #[arg(long, global = true, value_name = "P/Q")]
    pub gamma: Option<String>,
    /// Squares per covered edge for levels 2..=J, comma separated.
    #[arg(long, global = true, value_delimiter = ',', value_name = "N2,N3,...")]
    pub branching: Option<Vec<u64>>,
    #[arg(long, global = true, value_name = "J")]
    pub depth: Option<usize>,
    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "S")]
    pub seed: Option<u64>,
    /// Grid resolution for `raster` and `probe`.
    #[arg(long, global = true, value_name = "M")]
    pub resolution: Option<usize>,
    /// Stretch constant for `bounds` and `probe`.
    #[arg(long = "K", global = true, value_name = "K")]
    pub k: Option<f64>,
    /// Edge square counts for the excluded-stretch table.
    #[arg(long = "N-grid", global = true, value_delimiter = ',', value_name = "N,...")]
    pub n_grid: Option<Vec<u64>>,
    /// Net scale `k`: the net has `k²` points.
    #[arg(long, global = true, value_name = "K")]
    pub scale: Option<u64>,
    /// Point `x,y` for `eval`.
    #[arg(long, global = true, value_name = "X,Y")]
    pub point: Option<String>,
    /// Rectangle `x0,y0,x1,y1` for `integrate`.
    #[arg(long, global = true, value_name = "X0,Y0,X1,Y1")]
    pub rect: Option<String>,
    /// Raster mode: `cell-average` or `center-sample`.
    #[arg(long, global = true, value_name = "MODE")]
    pub mode: Option<String>,
    /// Nice-rectangle slack α for the `probe` replay.
    #[arg(long, global = true, value_name = "A")]
    pub alpha: Option<f64>,
}

/// Contents of a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default, deserialize_with = "lossless")]
    pub delta: Option<String>,
    #[serde(default, deserialize_with = "lossless")]
    pub gamma: Option<String>,
    pub branching: Option<Vec<u64>>,
    pub depth: Option<usize>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub resolution: Option<usize>,
    #[serde(rename = "K")]
    pub k: Option<f64>,
    #[serde(rename = "N-grid")]
    pub n_grid: Option<Vec<u64>>,
    pub scale: Option<u64>,
    pub point: Option<String>,
    pub rect: Option<String>,
    pub mode: Option<String>,
    pub alpha: Option<f64>,
}

/// Accepts `"1/3"`, `3` or `0.01`; floats keep their shortest decimal
/// spelling, so `0.01` becomes exactly `1/100`.
fn lossless<'de, D: Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Text(String),
        Int(i64),
        Float(f64),
    }
    Ok(Option::<Raw>::deserialize(d)?.map(|raw| match raw {
        Raw::Text(s) => s,
        Raw::Int(v) => v.to_string(),
        Raw::Float(v) => v.to_string(),
    }))
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {}", path.display(), e.message())))
    }
}

/// Fully resolved configuration with exact construction parameters.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub params: ConstructionParams,
    pub out: PathBuf,
    pub seed: u64,
    pub resolution: Option<usize>,
    pub k: Option<f64>,
    pub n_grid: Option<Vec<u64>>,
    pub scale: Option<u64>,
    pub point: Option<String>,
    pub rect: Option<String>,
    pub mode: Option<String>,
    pub alpha: Option<f64>,
}

impl RunConfig {
    pub fn resolve(flags: Options) -> Result<Self, CliError> {
        let file = match &flags.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let delta = rational("delta", flags.delta.or(file.delta))?;
        let gamma = rational("gamma", flags.gamma.or(file.gamma))?;
        let depth = flags.depth.or(file.depth).unwrap_or(1);
        if depth == 0 {
            return Err(CliError::config("depth must be at least 1"));
        }
        let branching = match flags.branching.or(file.branching) {
            Some(b) => b,
            None => default_branching(&delta, &gamma, depth),
        };
        Ok(Self {
            params: ConstructionParams::new(delta, gamma, branching, depth),
            out: flags.out.or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            resolution: flags.resolution.or(file.resolution),
            k: flags.k.or(file.k),
            n_grid: flags.n_grid.or(file.n_grid),
            scale: flags.scale.or(file.scale),
            point: flags.point.or(file.point),
            rect: flags.rect.or(file.rect),
            mode: flags.mode.or(file.mode),
            alpha: flags.alpha.or(file.alpha),
        })
    }

    pub fn depth(&self) -> usize {
        self.params.depth
    }

    pub fn point(&self) -> Result<Point<Rational>, CliError> {
        let text = self.point.as_deref().ok_or_else(|| CliError::config("eval needs --point x,y"))?;
        match coordinates("point", text)?.as_slice() {
            [x, y] => Ok(Point::new(x.clone(), y.clone())),
            _ => Err(CliError::config(format!("point {text:?} needs two coordinates"))),
        }
    }

    pub fn rect(&self) -> Result<Rect<Rational>, CliError> {
        let text = self.rect.as_deref().ok_or_else(|| CliError::config("integrate needs --rect x0,y0,x1,y1"))?;
        match coordinates("rect", text)?.as_slice() {
            [x0, y0, x1, y1] => Ok(Rect::new(x0.clone(), y0.clone(), x1.clone(), y1.clone())),
            _ => Err(CliError::config(format!("rect {text:?} needs four coordinates"))),
        }
    }

    pub fn raster_mode(&self) -> Result<RasterMode, CliError> {
        match self.mode.as_deref().unwrap_or("cell-average") {
            "cell-average" => Ok(RasterMode::CellAverage),
            "center-sample" => Ok(RasterMode::CenterSample),
            other => Err(CliError::config(format!("unknown raster mode {other:?}"))),
        }
    }

    pub fn positive_k(&self, default: f64) -> Result<f64, CliError> {
        let k = self.k.unwrap_or(default);
        if k.is_finite() && k > 0.0 {
            Ok(k)
        } else {
            Err(CliError::config(format!("K = {k} must be positive")))
        }
    }
}

fn rational(name: &str, value: Option<String>) -> Result<Rational, CliError> {
    let text = value.ok_or_else(|| CliError::config(format!("missing --{name}")))?;
    parse_rational(&text).map_err(|_| CliError::config(format!("{name}: cannot parse {text:?} as a rational")))
}

fn coordinates(name: &str, text: &str) -> Result<Vec<Rational>, CliError> {
    text.split(',')
        .map(|c| parse_rational(c).map_err(|_| CliError::config(format!("{name}: cannot parse {c:?}"))))
        .collect()
}
