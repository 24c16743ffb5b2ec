//! JSON problem configurations for the CLI: inline field arrays or binary
//! sidecar files of little-endian (re, im) f64 pairs, row-major.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::problems::diffusion::DiffusionSpec;
use crate::problems::helmholtz::{BiasMode, HelmholtzSpec};
use crate::problems::pantograph::PantographSpec;
use crate::problems::schrodinger::SchrodingerSpec;
use crate::problems::{
    build_diffusion_split, build_helmholtz_split, build_pantograph_split, build_schrodinger_split,
};
use crate::splitting::SplitSystem;

/// A complex field given inline as `[re, im]` pairs or via a sidecar file.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum FieldData {
    Inline(Vec<[f64; 2]>),
    Sidecar { file: String },
}

impl FieldData {
    pub fn load(&self, base: &Path) -> Result<Vec<Complex64>> {
        match self {
            FieldData::Inline(pairs) => {
                Ok(pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect())
            }
            FieldData::Sidecar { file } => {
                let path = base.join(file);
                let bytes = std::fs::read(&path)?;
                if bytes.len() % 16 != 0 {
                    return Err(Error::Config(format!(
                        "sidecar {} length {} is not a multiple of 16 bytes",
                        path.display(),
                        bytes.len()
                    )));
                }
                Ok(bytes
                    .chunks_exact(16)
                    .map(|c| {
                        Complex64::new(
                            f64::from_le_bytes(c[..8].try_into().unwrap()),
                            f64::from_le_bytes(c[8..].try_into().unwrap()),
                        )
                    })
                    .collect())
            }
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
pub struct HelmholtzConfig {
    pub shape: Vec<usize>,
    pub spacing: Vec<f64>,
    pub k2_field: FieldData,
    pub source: FieldData,
    #[serde(default = "default_absorber_width")]
    pub absorber_width: usize,
    #[serde(default)]
    pub absorber_strength: f64,
    #[serde(default = "default_bias_mode")]
    pub bias_mode: String,
}

fn default_absorber_width() -> usize {
    16
}

fn default_bias_mode() -> String {
    "complex".into()
}

#[derive(Clone, Debug, Deserialize)]
pub struct DiffusionConfig {
    pub shape: Vec<usize>,
    pub spacing: Vec<f64>,
    pub d_field: FieldData,
    pub a_field: FieldData,
    pub source: FieldData,
}

/// Piecewise-constant complex coefficient: either a single `[re, im]` value
/// or pieces `{ "until": t, "value": [re, im] }` in ascending order, the last
/// piece with `until` omitted.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum CoeffSpec {
    Constant([f64; 2]),
    Piecewise(Vec<CoeffPiece>),
}

#[derive(Clone, Debug, Deserialize)]
pub struct CoeffPiece {
    pub until: Option<f64>,
    pub value: [f64; 2],
}

impl CoeffSpec {
    fn to_fn(&self) -> Result<Arc<dyn Fn(f64) -> Complex64 + Send + Sync>> {
        match self {
            CoeffSpec::Constant(v) => {
                let z = Complex64::new(v[0], v[1]);
                Ok(Arc::new(move |_| z))
            }
            CoeffSpec::Piecewise(pieces) => {
                if pieces.is_empty() || pieces.last().unwrap().until.is_some() {
                    return Err(Error::Config(
                        "piecewise coefficient needs a final piece without \"until\"".into(),
                    ));
                }
                let pieces = pieces.clone();
                Ok(Arc::new(move |t| {
                    for p in &pieces {
                        match p.until {
                            Some(u) if t <= u => return Complex64::new(p.value[0], p.value[1]),
                            None => return Complex64::new(p.value[0], p.value[1]),
                            _ => {}
                        }
                    }
                    unreachable!("last piece is open-ended")
                }))
            }
        }
    }
}

/// History function: a constant or a gaussian `amp·e^{−((t−center)/width)²}`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum HistorySpec {
    Constant([f64; 2]),
    Gaussian {
        gaussian: GaussianParams,
    },
}

#[derive(Clone, Copy, Debug, Deserialize)]
pub struct GaussianParams {
    pub center: f64,
    pub width: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

fn default_amplitude() -> f64 {
    1.0
}

impl HistorySpec {
    fn to_fn(&self) -> Arc<dyn Fn(f64) -> Complex64 + Send + Sync> {
        match self {
            HistorySpec::Constant(v) => {
                let z = Complex64::new(v[0], v[1]);
                Arc::new(move |_| z)
            }
            HistorySpec::Gaussian { gaussian } => {
                let g = *gaussian;
                Arc::new(move |t| {
                    let u = (t - g.center) / g.width;
                    Complex64::new(g.amplitude * (-u * u).exp(), 0.0)
                })
            }
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
pub struct PantographConfig {
    pub lambda: f64,
    pub t0: f64,
    pub t_end: f64,
    pub dt: f64,
    pub a: CoeffSpec,
    pub b: CoeffSpec,
    pub x0: HistorySpec,
    #[serde(default = "default_true")]
    pub antisymmetrize: bool,
    #[serde(default)]
    pub spectral_derivative: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, Deserialize)]
pub struct SchrodingerConfig {
    pub shape: Vec<usize>,
    pub spacing: Vec<f64>,
    pub potential: FieldData,
    pub shift: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "problem")]
pub enum ProblemConfig {
    #[serde(rename = "helmholtz1d")]
    Helmholtz1d(HelmholtzConfig),
    #[serde(rename = "helmholtz2d")]
    Helmholtz2d(HelmholtzConfig),
    #[serde(rename = "diffusion")]
    Diffusion(DiffusionConfig),
    #[serde(rename = "pantograph")]
    Pantograph(PantographConfig),
    #[serde(rename = "schrodinger")]
    Schrodinger(SchrodingerConfig),
}

/// A fully-resolved problem specification.
#[derive(Clone)]
pub enum ProblemKind {
    Helmholtz(HelmholtzSpec),
    Diffusion(DiffusionSpec),
    Pantograph {
        spec: PantographSpec,
        antisymmetrize: bool,
    },
    Schrodinger(SchrodingerSpec),
}

impl ProblemKind {
    pub fn build(&self, target_norm: f64) -> Result<SplitSystem> {
        match self {
            ProblemKind::Helmholtz(spec) => build_helmholtz_split(spec, target_norm),
            ProblemKind::Diffusion(spec) => build_diffusion_split(spec, target_norm),
            ProblemKind::Pantograph {
                spec,
                antisymmetrize,
            } => build_pantograph_split(spec, target_norm, *antisymmetrize),
            ProblemKind::Schrodinger(spec) => build_schrodinger_split(spec, target_norm),
        }
    }
}

fn bias_mode(tag: &str) -> Result<BiasMode> {
    match tag {
        "complex" => Ok(BiasMode::Complex),
        "real" => Ok(BiasMode::Real),
        other => Err(Error::Config(format!("unknown bias_mode \"{other}\""))),
    }
}

fn resolve_helmholtz(cfg: &HelmholtzConfig, base: &Path, dims: usize) -> Result<HelmholtzSpec> {
    if cfg.shape.len() != dims {
        return Err(Error::Config(format!(
            "helmholtz{dims}d expects a {dims}-dimensional shape, got {:?}",
            cfg.shape
        )));
    }
    Ok(HelmholtzSpec {
        shape: cfg.shape.clone(),
        spacing: cfg.spacing.clone(),
        k2_field: cfg.k2_field.load(base)?,
        source: cfg.source.load(base)?,
        absorber_width: cfg.absorber_width,
        absorber_strength: cfg.absorber_strength,
        bias_mode: bias_mode(&cfg.bias_mode)?,
    })
}

/// Load and resolve a problem configuration. Sidecar paths are taken
/// relative to the configuration file's directory.
pub fn load_problem(path: &Path) -> Result<ProblemKind> {
    let text = std::fs::read_to_string(path)?;
    let cfg: ProblemConfig =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let base: PathBuf = path.parent().map(Path::to_path_buf).unwrap_or_default();
    match cfg {
        ProblemConfig::Helmholtz1d(h) => Ok(ProblemKind::Helmholtz(resolve_helmholtz(&h, &base, 1)?)),
        ProblemConfig::Helmholtz2d(h) => Ok(ProblemKind::Helmholtz(resolve_helmholtz(&h, &base, 2)?)),
        ProblemConfig::Diffusion(d) => Ok(ProblemKind::Diffusion(DiffusionSpec {
            shape: d.shape.clone(),
            spacing: d.spacing.clone(),
            d_field: d.d_field.load(&base)?,
            a_field: d.a_field.load(&base)?,
            source: d.source.load(&base)?.iter().map(|z| z.re).collect(),
            stationary: true,
        })),
        ProblemConfig::Pantograph(p) => Ok(ProblemKind::Pantograph {
            spec: PantographSpec {
                lambda: p.lambda,
                a_fn: p.a.to_fn()?,
                b_fn: p.b.to_fn()?,
                x0_fn: p.x0.to_fn(),
                t0: p.t0,
                t_end: p.t_end,
                dt: p.dt,
                spectral_derivative: p.spectral_derivative,
            },
            antisymmetrize: p.antisymmetrize,
        }),
        ProblemConfig::Schrodinger(s) => Ok(ProblemKind::Schrodinger(SchrodingerSpec {
            shape: s.shape.clone(),
            spacing: s.spacing.clone(),
            potential: s.potential.load(&base)?.iter().map(|z| z.re).collect(),
            shift: s.shift,
        })),
    }
}
