//! Declarative job configuration: a JSON document selects a metric model,
//! a domain, one task, and its parameters. Loading validates everything
//! up front, including expression parsing, so the runner never fails on
//! malformed inputs halfway through a computation.

use crate::domain::{ideal_triangle, DomainSpec, PolyVertex};
use crate::error::{Error, Result};
use crate::geom::v;
use crate::manifold::{Chart, ManifoldModel};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const VALID_TASKS: [&str; 7] =
    ["weight", "hardy", "classify", "spectrum", "croke", "santalo", "hardy1d"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Weight,
    Hardy,
    Classify,
    Spectrum,
    Croke,
    Santalo,
    Hardy1d,
}

impl TaskKind {
    fn parse(s: &str) -> Result<TaskKind> {
        Ok(match s {
            "weight" => TaskKind::Weight,
            "hardy" => TaskKind::Hardy,
            "classify" => TaskKind::Classify,
            "spectrum" => TaskKind::Spectrum,
            "croke" => TaskKind::Croke,
            "santalo" => TaskKind::Santalo,
            "hardy1d" => TaskKind::Hardy1d,
            other => {
                return Err(Error::Config {
                    field: "task".into(),
                    message: format!(
                        "unknown task `{other}`; valid tasks are {}",
                        VALID_TASKS.join(", ")
                    ),
                })
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            TaskKind::Weight => "weight",
            TaskKind::Hardy => "hardy",
            TaskKind::Classify => "classify",
            TaskKind::Spectrum => "spectrum",
            TaskKind::Croke => "croke",
            TaskKind::Santalo => "santalo",
            TaskKind::Hardy1d => "hardy1d",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartConfig {
    #[default]
    UnitDisk,
    Plane,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Euclidean,
    PoincareDisk {
        #[serde(default = "default_b")]
        b: f64,
    },
    CustomConformal {
        lambda: String,
        #[serde(default)]
        chart: ChartConfig,
    },
}

fn default_b() -> f64 {
    1.0
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::Euclidean
    }
}

impl ModelConfig {
    pub fn build(&self) -> Result<ManifoldModel> {
        match self {
            ModelConfig::Euclidean => Ok(ManifoldModel::euclidean()),
            ModelConfig::PoincareDisk { b } => {
                ManifoldModel::poincare_disk(*b).map_err(|e| Error::Config {
                    field: "model.b".into(),
                    message: e.to_string(),
                })
            }
            ModelConfig::CustomConformal { lambda, chart } => {
                let chart = match chart {
                    ChartConfig::UnitDisk => Chart::UnitDisk,
                    ChartConfig::Plane => Chart::Plane,
                };
                ManifoldModel::custom_conformal(lambda, chart).map_err(|e| Error::Config {
                    field: "model.lambda".into(),
                    message: e.to_string(),
                })
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<[f64; 2]>,
    /// Chart angle of an ideal vertex on the unit circle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ideal_angle: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainConfig {
    UnitDisk,
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    UnitSquare,
    Rectangle {
        lo: [f64; 2],
        hi: [f64; 2],
        /// Per-side mixed-boundary flags: bottom, right, top, left.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<[bool; 4]>,
    },
    HalfPlane,
    Strip {
        width: f64,
    },
    GeodesicBall {
        radius: f64,
    },
    IdealTriangle,
    CuspDomain,
    Polygon {
        vertices: Vec<VertexConfig>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<Vec<bool>>,
    },
}

impl DomainConfig {
    pub fn build(&self, model: &ManifoldModel) -> Result<DomainSpec> {
        let wrap = |e: Error| Error::Config { field: "domain".into(), message: e.to_string() };
        let base = match self {
            DomainConfig::UnitDisk => DomainSpec::unit_disk(),
            DomainConfig::Disk { center, radius } => {
                DomainSpec::disk(v(center[0], center[1]), *radius).map_err(wrap)?
            }
            DomainConfig::UnitSquare => DomainSpec::unit_square(),
            DomainConfig::Rectangle { lo, hi, gamma } => DomainSpec::rectangle(
                v(lo[0], lo[1]),
                v(hi[0], hi[1]),
                gamma.unwrap_or([false; 4]),
            )
            .map_err(wrap)?,
            DomainConfig::HalfPlane => DomainSpec::half_plane(),
            DomainConfig::Strip { width } => DomainSpec::strip(*width).map_err(wrap)?,
            DomainConfig::GeodesicBall { radius } => {
                return DomainSpec::geodesic_ball(model.clone(), *radius).map_err(wrap)
            }
            DomainConfig::IdealTriangle => return ideal_triangle(model.clone()).map_err(wrap),
            DomainConfig::CuspDomain => DomainSpec::cusp_domain(),
            DomainConfig::Polygon { vertices, gamma } => {
                let mut verts = Vec::with_capacity(vertices.len());
                for (i, vc) in vertices.iter().enumerate() {
                    let pv = match (vc.point, vc.ideal_angle) {
                        (Some(p), None) => PolyVertex::Point(v(p[0], p[1])),
                        (None, Some(a)) => PolyVertex::Ideal(a),
                        _ => {
                            return Err(Error::Config {
                                field: format!("domain.vertices[{i}]"),
                                message: "give exactly one of `point` or `ideal_angle`".into(),
                            })
                        }
                    };
                    verts.push(pv);
                }
                return DomainSpec::build_geodesic_polygon(
                    model.clone(),
                    &verts,
                    gamma.as_deref(),
                )
                .map_err(wrap);
            }
        };
        if model.is_euclidean() {
            Ok(base)
        } else {
            base.with_model(model.clone()).map_err(wrap)
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Grid spacing for weight fields and eigenvalue lattices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_dirs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    /// Number of eigenvalues.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Strictly decreasing truncation levels for the cusp study.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cut_levels: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    /// Test function count for the inequality suite.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    /// Restrict hitting rays to the marked boundary part.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_only: Option<bool>,
    /// Eigensolver residual tolerance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Deep-set levels for the classification probe.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    /// Integrand expression in x and y for the flow comparison.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrand: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    model: ModelConfig,
    #[serde(default)]
    domain: Option<DomainConfig>,
    task: String,
    #[serde(default)]
    params: Params,
    #[serde(default)]
    out_dir: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct JobConfig {
    pub model: ModelConfig,
    pub domain: Option<DomainConfig>,
    pub task: TaskKind,
    pub params: Params,
    pub out_dir: Option<PathBuf>,
}

impl JobConfig {
    pub fn build_model(&self) -> Result<ManifoldModel> {
        self.model.build()
    }

    /// The task's domain; errors for task families that need one but
    /// whose config lacks the block.
    pub fn build_domain(&self, model: &ManifoldModel) -> Result<DomainSpec> {
        match &self.domain {
            Some(d) => d.build(model),
            None => Err(Error::Config {
                field: "domain".into(),
                message: format!("required for task `{}`", self.task.name()),
            }),
        }
    }

    pub fn seed(&self) -> u64 {
        self.params.seed.unwrap_or(7)
    }

    pub fn n_dirs(&self) -> usize {
        self.params.n_dirs.unwrap_or(720)
    }
}

fn positive(field: &str, x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Config {
            field: field.into(),
            message: format!("must be positive and finite, got {x}"),
        });
    }
    Ok(())
}

fn validate(raw: RawConfig) -> Result<JobConfig> {
    let task = TaskKind::parse(&raw.task)?;
    let model = raw.model.build()?;
    if let Some(d) = &raw.domain {
        d.build(&model)?;
    }
    if task != TaskKind::Hardy1d && raw.domain.is_none() {
        return Err(Error::Config {
            field: "domain".into(),
            message: format!("required for task `{}`", task.name()),
        });
    }
    let p = &raw.params;
    if let Some(h) = p.h {
        positive("params.h", h)?;
    }
    if let Some(n) = p.n_dirs {
        if n < 16 {
            return Err(Error::Config {
                field: "params.n_dirs".into(),
                message: format!("need at least 16 directions, got {n}"),
            });
        }
    }
    if let Some(t) = p.t_max {
        positive("params.t_max", t)?;
    }
    if let Some(k) = p.k {
        if k == 0 {
            return Err(Error::Config {
                field: "params.k".into(),
                message: "need at least one eigenvalue".into(),
            });
        }
    }
    if let Some(levels) = &p.cut_levels {
        if levels.is_empty() {
            return Err(Error::Config {
                field: "params.cut_levels".into(),
                message: "cut level list is empty".into(),
            });
        }
        for (i, c) in levels.iter().enumerate() {
            positive(&format!("params.cut_levels[{i}]"), *c)?;
        }
        if levels.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config {
                field: "params.cut_levels".into(),
                message: "cut levels must be strictly decreasing".into(),
            });
        }
    }
    if let Some(n) = p.n_samples {
        if n < 100 {
            return Err(Error::Config {
                field: "params.n_samples".into(),
                message: format!("need at least 100 samples, got {n}"),
            });
        }
    }
    if let Some(c) = p.count {
        if c == 0 {
            return Err(Error::Config {
                field: "params.count".into(),
                message: "need at least one test function".into(),
            });
        }
    }
    if let Some(t) = p.tol {
        positive("params.tol", t)?;
    }
    if let Some(eps) = &p.epsilons {
        for (i, e) in eps.iter().enumerate() {
            positive(&format!("params.epsilons[{i}]"), *e)?;
        }
        if eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config {
                field: "params.epsilons".into(),
                message: "epsilons must be strictly decreasing".into(),
            });
        }
    }
    if let Some(src) = &p.integrand {
        crate::expr::Expr::parse(src, &["x", "y"]).map_err(|e| Error::Config {
            field: "params.integrand".into(),
            message: e.to_string(),
        })?;
    }
    Ok(JobConfig {
        model: raw.model,
        domain: raw.domain,
        task,
        params: raw.params,
        out_dir: raw.out_dir,
    })
}

pub fn parse_config(json: &str) -> Result<JobConfig> {
    let raw: RawConfig = serde_json::from_str(json)?;
    validate(raw)
}

pub fn load_config(path: &Path) -> Result<JobConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}
