//! Declarative run configuration: ambient chart, surface list, suite
//! selection, grid orders, tolerances. Parsed from a single TOML file so a
//! run is reproducible from the config plus the seed.

use crate::hypersurface::{HarmonicMode, HypersurfaceEmbedding};
use crate::manifold::ManifoldChart;
use crate::{CgbError, Result};
use serde::Deserialize;

pub const KNOWN_SUITES: &[&str] = &[
    "normalization",
    "cgb_closed",
    "cgb_boundary",
    "lemma31",
    "gauss_equation",
    "theorem",
    "isoperimetric",
    "nullity",
];

/// Hard cap on ambient dimension; everything above is refused at config
/// validation with exit status 2.
pub const MAX_DIMENSION: usize = 7;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    pub ambient: AmbientSpec,
    #[serde(default)]
    pub surfaces: Vec<SurfaceSpec>,
    #[serde(default)]
    pub suites: Vec<String>,
    #[serde(default)]
    pub orders: Orders,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmbientSpec {
    /// euclidean | sphere | hyperbolic | hyperbolic_polar | half_plane | product
    pub model: String,
    #[serde(default)]
    pub dimension: Option<usize>,
    #[serde(default)]
    pub factors: Vec<AmbientSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    /// geodesic_sphere | perturbed_sphere | ellipsoid
    #[serde(default = "default_surface_kind")]
    pub kind: String,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default)]
    pub eps: f64,
    /// harmonic mode for perturbed spheres: "linear" or "quadratic"
    #[serde(default)]
    pub mode: Option<String>,
    #[serde(default)]
    pub axes: Vec<f64>,
    #[serde(default)]
    pub center: Option<Vec<f64>>,
}

fn default_surface_kind() -> String {
    "geodesic_sphere".into()
}
fn default_radius() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Orders {
    /// Points per angle for surface grids; defaults per dimension when absent.
    #[serde(default)]
    pub base: Option<usize>,
    #[serde(default = "default_radial")]
    pub radial: usize,
    /// Grid order for the post-hoc convexity check of perturbed surfaces.
    #[serde(default = "default_convexity")]
    pub convexity_check: usize,
}

fn default_radial() -> usize {
    16
}
fn default_convexity() -> usize {
    6
}

impl Default for Orders {
    fn default() -> Self {
        Orders {
            base: None,
            radial: default_radial(),
            convexity_check: default_convexity(),
        }
    }
}

impl Orders {
    /// Base order for a grid over S^m, chosen so a doubled grid stays within
    /// a single-core time budget at higher dimension.
    pub fn base_for(&self, m: usize) -> usize {
        self.base.unwrap_or(match m {
            1 => 48,
            2 => 12,
            3 => 8,
            4 => 6,
            _ => 4,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative tolerance for integral verdicts (fraction of the target).
    #[serde(default = "default_integral_rel")]
    pub integral_rel: f64,
    /// Absolute slack for pointwise verdicts.
    #[serde(default = "default_pointwise")]
    pub pointwise: f64,
    /// Relative singular-value threshold for the nullity split.
    #[serde(default = "default_nullity_rel")]
    pub nullity_rel: f64,
}

fn default_integral_rel() -> f64 {
    0.01
}
fn default_pointwise() -> f64 {
    crate::tol::POINTWISE_SLACK
}
fn default_nullity_rel() -> f64 {
    crate::tol::NULLITY_REL
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            integral_rel: default_integral_rel(),
            pointwise: default_pointwise(),
            nullity_rel: default_nullity_rel(),
        }
    }
}

impl AmbientSpec {
    pub fn dimension(&self) -> usize {
        if self.model == "product" {
            self.factors.iter().map(|f| f.dimension()).sum()
        } else {
            self.dimension.unwrap_or(0)
        }
    }

    pub fn build(&self) -> Result<ManifoldChart> {
        let n = self.dimension();
        match self.model.as_str() {
            "euclidean" => Ok(ManifoldChart::euclidean(n)),
            "sphere" => Ok(ManifoldChart::sphere_polar(n)),
            "hyperbolic" => Ok(ManifoldChart::hyperbolic_ball(n)),
            "hyperbolic_polar" => Ok(ManifoldChart::hyperbolic_polar(n)),
            "half_plane" => Ok(ManifoldChart::half_plane(n)),
            "product" => {
                let factors: Result<Vec<_>> = self.factors.iter().map(|f| f.build()).collect();
                Ok(ManifoldChart::product(factors?))
            }
            other => Err(CgbError::Config(format!("unknown ambient model {other:?}"))),
        }
    }

    fn validate(&self, top_level: bool) -> Result<()> {
        match self.model.as_str() {
            "product" => {
                if !top_level {
                    return Err(CgbError::Config("nested product factors".into()));
                }
                if self.factors.is_empty() {
                    return Err(CgbError::Config(
                        "product ambient needs at least one factor".into(),
                    ));
                }
                for f in &self.factors {
                    f.validate(false)?;
                }
            }
            "euclidean" | "sphere" | "hyperbolic" | "hyperbolic_polar" | "half_plane" => {
                let d = self.dimension.ok_or_else(|| {
                    CgbError::Config(format!("ambient model {:?} needs `dimension`", self.model))
                })?;
                if d == 0 {
                    return Err(CgbError::Config("dimension must be positive".into()));
                }
            }
            other => {
                return Err(CgbError::Config(format!("unknown ambient model {other:?}")));
            }
        }
        if top_level {
            let n = self.dimension();
            if n > MAX_DIMENSION {
                return Err(CgbError::Config(format!(
                    "dimension {n} exceeds desk-scale guard ({MAX_DIMENSION})"
                )));
            }
        }
        Ok(())
    }
}

impl SurfaceSpec {
    pub fn build(&self, ambient: &ManifoldChart, convexity_order: usize) -> Result<HypersurfaceEmbedding> {
        let n = ambient.dim;
        let center = self.center.clone().unwrap_or_else(|| {
            if matches!(ambient.kind, crate::manifold::MetricKind::HyperbolicPolar) {
                Vec::new()
            } else {
                vec![0.0; n]
            }
        });
        match self.kind.as_str() {
            "geodesic_sphere" => {
                HypersurfaceEmbedding::geodesic_sphere(ambient.clone(), center, self.radius)
            }
            "perturbed_sphere" => {
                let base = HypersurfaceEmbedding::geodesic_sphere(
                    ambient.clone(),
                    center,
                    self.radius,
                )?;
                let mode = match self.mode.as_deref() {
                    None | Some("quadratic") => HarmonicMode::Quadratic,
                    Some("linear") => HarmonicMode::Linear { axis: 0 },
                    Some(other) => {
                        return Err(CgbError::Config(format!(
                            "unknown harmonic mode {other:?}"
                        )))
                    }
                };
                HypersurfaceEmbedding::perturbed_sphere(&base, self.eps, mode, convexity_order)
            }
            "ellipsoid" => {
                HypersurfaceEmbedding::ellipsoid(ambient.clone(), center, self.axes.clone())
            }
            other => Err(CgbError::Config(format!("unknown surface kind {other:?}"))),
        }
    }

    fn validate(&self, ambient: &AmbientSpec) -> Result<()> {
        match self.kind.as_str() {
            "geodesic_sphere" | "perturbed_sphere" => {
                if self.radius <= 0.0 {
                    return Err(CgbError::Config("surface radius must be positive".into()));
                }
            }
            "ellipsoid" => {
                if self.axes.len() != ambient.dimension() {
                    return Err(CgbError::Config(format!(
                        "ellipsoid needs {} axes, got {}",
                        ambient.dimension(),
                        self.axes.len()
                    )));
                }
                if self.axes.iter().any(|&a| a <= 0.0) {
                    return Err(CgbError::Config("ellipsoid axes must be positive".into()));
                }
            }
            other => {
                return Err(CgbError::Config(format!("unknown surface kind {other:?}")));
            }
        }
        if let Some(c) = &self.center {
            let expect = if ambient.model == "hyperbolic_polar" {
                0
            } else {
                ambient.dimension()
            };
            if c.len() != expect {
                return Err(CgbError::Config(format!(
                    "surface center has {} coordinates, ambient needs {expect}",
                    c.len()
                )));
            }
        }
        Ok(())
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| CgbError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.ambient.validate(true)?;
        for s in &self.surfaces {
            s.validate(&self.ambient)?;
        }
        for s in &self.suites {
            if !KNOWN_SUITES.contains(&s.as_str()) {
                return Err(CgbError::Config(format!(
                    "unknown suite {s:?}; known: {}",
                    KNOWN_SUITES.join(", ")
                )));
            }
        }
        if let Some(b) = self.orders.base {
            if b < 4 {
                return Err(CgbError::Config("orders.base must be >= 4".into()));
            }
        }
        if self.orders.radial < 2 || self.orders.convexity_check < 4 {
            return Err(CgbError::Config("grid orders out of range".into()));
        }
        let t = &self.tolerances;
        if t.integral_rel <= 0.0 || t.pointwise <= 0.0 || t.nullity_rel <= 0.0 {
            return Err(CgbError::Config("tolerances must be positive".into()));
        }
        Ok(())
    }

    /// Suites to run: the CLI override list when nonempty, else the config
    /// list, else everything.
    pub fn selected_suites(&self, overrides: &[String]) -> Vec<String> {
        if !overrides.is_empty() {
            overrides.to_vec()
        } else if !self.suites.is_empty() {
            self.suites.clone()
        } else {
            KNOWN_SUITES.iter().map(|s| s.to_string()).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_product_config() {
        let cfg = RunConfig::parse(
            r#"
            seed = 7
            suites = ["theorem"]
            [ambient]
            model = "product"
            factors = [
              { model = "hyperbolic", dimension = 3 },
              { model = "euclidean", dimension = 1 },
            ]
            [[surfaces]]
            kind = "geodesic_sphere"
            radius = 1.0
            "#,
        )
        .unwrap();
        assert_eq!(cfg.ambient.dimension(), 4);
        assert_eq!(cfg.seed, Some(7));
        let chart = cfg.ambient.build().unwrap();
        assert_eq!(chart.dim, 4);
    }

    #[test]
    fn rejects_oversized_dimension() {
        let err = RunConfig::parse(
            r#"
            [ambient]
            model = "euclidean"
            dimension = 9
            "#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("desk-scale guard"), "{err}");
    }

    #[test]
    fn rejects_unknown_suite_and_bad_tolerance() {
        assert!(RunConfig::parse(
            r#"
            suites = ["no_such_suite"]
            [ambient]
            model = "euclidean"
            dimension = 3
            "#,
        )
        .is_err());
        assert!(RunConfig::parse(
            r#"
            [ambient]
            model = "euclidean"
            dimension = 3
            [tolerances]
            integral_rel = -1.0
            "#,
        )
        .is_err());
    }

    #[test]
    fn suite_selection_precedence() {
        let cfg = RunConfig::parse(
            r#"
            suites = ["lemma31"]
            [ambient]
            model = "euclidean"
            dimension = 3
            "#,
        )
        .unwrap();
        assert_eq!(cfg.selected_suites(&[]), vec!["lemma31".to_string()]);
        let ov = vec!["nullity".to_string()];
        assert_eq!(cfg.selected_suites(&ov), ov);
    }
}
