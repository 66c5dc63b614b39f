//! Run configuration: a TOML file with one table per concern, overridable
//! key by key through `QTENSOR_<SECTION>_<KEY>` environment variables.
//!
//! ```toml
//! seed = 7
//!
//! [domain]
//! shape = "disk"        # or "rectangle"
//! radius = 1.0          # disk
//! width = 1.0           # rectangle
//! height = 1.0          # rectangle
//! n = 64                # nodes along the longer side
//!
//! [elastic]
//! mode = "iso3"         # iso3 | chiral5 | thm3
//! l1 = 1.0
//! l2 = 0.0
//! l3 = 0.0
//! l4 = 0.0
//! l5 = 0.0
//!
//! [bulk]
//! kappa = 0.0
//! quad_order = 20
//! adaptive = false
//!
//! [bc]
//! kind = "defect"       # or "constant"
//! s = 0.3
//! winding = 2
//! director = [0.0, 0.0, 1.0]
//!
//! [solver]
//! method = "ncg"        # or "gd"
//! max_iters = 5000
//! grad_tol = 1e-6
//! precondition = true
//!
//! [diagnostics]
//! replacement_disks = 5
//! replacement_radius = 0.2
//! operator = "laplace"  # or "l_operator"
//! morrey_center = [0.0, 0.0]
//! morrey_radii = []     # empty: 8 radii from 8h to 0.9 of the distance to the edge
//! morrey = true
//! holder = true
//! holder_radius = 0.3
//! holder_sigmas = [0.2, 0.4, 0.6, 0.8]
//! physicality = true
//!
//! [output]
//! dir = "out"
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use qtensor::elastic::{validate, ElasticCoefficients, ElasticMode};
use qtensor::minimizer::{Method, SolveConfig};
use qtensor::quadrature::MIN_ORDER;

pub const ENV_PREFIX: &str = "QTENSOR_";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid config: {}", .0.join(", "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DomainShape {
    #[default]
    Disk,
    Rectangle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainConfig {
    pub shape: DomainShape,
    pub radius: f64,
    pub width: f64,
    pub height: f64,
    pub n: usize,
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig { shape: DomainShape::Disk, radius: 1.0, width: 1.0, height: 1.0, n: 64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    #[default]
    Iso3,
    Chiral5,
    Thm3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElasticConfig {
    pub mode: ModeName,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
    pub l5: f64,
}

impl Default for ElasticConfig {
    fn default() -> Self {
        ElasticConfig { mode: ModeName::Iso3, l1: 1.0, l2: 0.0, l3: 0.0, l4: 0.0, l5: 0.0 }
    }
}

impl ElasticConfig {
    pub fn coefficients(&self) -> ElasticCoefficients {
        let mode = match self.mode {
            ModeName::Iso3 => ElasticMode::Iso3,
            ModeName::Chiral5 => ElasticMode::Chiral5,
            ModeName::Thm3 => ElasticMode::Thm3,
        };
        ElasticCoefficients { l1: self.l1, l2: self.l2, l3: self.l3, l4: self.l4, l5: self.l5, mode }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BulkConfig {
    pub kappa: f64,
    pub quad_order: usize,
    pub adaptive: bool,
}

impl Default for BulkConfig {
    fn default() -> Self {
        BulkConfig { kappa: 0.0, quad_order: qtensor::quadrature::DEFAULT_ORDER, adaptive: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BcKind {
    Constant,
    #[default]
    Defect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BcConfig {
    pub kind: BcKind,
    pub s: f64,
    pub winding: i32,
    /// Director of constant boundary data.
    pub director: [f64; 3],
}

impl Default for BcConfig {
    fn default() -> Self {
        BcConfig { kind: BcKind::Defect, s: 0.3, winding: 2, director: [0.0, 0.0, 1.0] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Gd,
    #[default]
    Ncg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub method: MethodName,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub precondition: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolveConfig::default();
        SolverConfig { method: MethodName::Ncg, max_iters: d.max_iters, grad_tol: d.grad_tol, precondition: d.precondition }
    }
}

impl SolverConfig {
    pub fn solve_config(&self) -> SolveConfig {
        SolveConfig {
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            precondition: self.precondition,
            method: match self.method {
                MethodName::Gd => Method::GradientDescent,
                MethodName::Ncg => Method::NonlinearCg,
            },
            ..SolveConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OperatorName {
    #[default]
    Laplace,
    LOperator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    pub replacement_disks: usize,
    pub replacement_radius: f64,
    pub operator: OperatorName,
    pub morrey_center: [f64; 2],
    pub morrey_radii: Vec<f64>,
    pub morrey: bool,
    pub holder: bool,
    pub holder_radius: f64,
    pub holder_sigmas: Vec<f64>,
    pub physicality: bool,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            replacement_disks: 5,
            replacement_radius: 0.2,
            operator: OperatorName::Laplace,
            morrey_center: [0.0, 0.0],
            morrey_radii: Vec::new(),
            morrey: true,
            holder: true,
            holder_radius: 0.3,
            holder_sigmas: vec![0.2, 0.4, 0.6, 0.8],
            physicality: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: "out".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub domain: DomainConfig,
    pub elastic: ElasticConfig,
    pub bulk: BulkConfig,
    pub bc: BcConfig,
    pub solver: SolverConfig,
    pub diagnostics: DiagnosticsConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    /// Parses `text`, applies overrides from `env` and validates.
    pub fn parse_with_env<I>(text: &str, env: I) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        apply_env(&mut table, env)?;
        let cfg: RunConfig = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        RunConfig::parse_with_env(&text, std::env::vars())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// Every failing key, with elastic inequalities named by their formula.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let d = &self.domain;
        if d.n < 16 {
            out.push(format!("domain.n: resolution must be >= 16, got {}", d.n));
        }
        match d.shape {
            DomainShape::Disk if !(d.radius > 0.0 && d.radius.is_finite()) => out.push(format!("domain.radius: must be > 0, got {}", d.radius)),
            DomainShape::Rectangle if !(d.width > 0.0 && d.height > 0.0 && d.width.is_finite() && d.height.is_finite()) => {
                out.push("domain.width/height: must be > 0".into())
            }
            _ => {}
        }
        for name in validate(&self.elastic.coefficients()).failing {
            out.push(format!("elastic: {name}"));
        }
        if !(self.bulk.kappa >= 0.0 && self.bulk.kappa.is_finite()) {
            out.push(format!("bulk.kappa: must be finite and >= 0, got {}", self.bulk.kappa));
        }
        if self.bulk.quad_order < MIN_ORDER {
            out.push(format!("bulk.quad_order: must be >= {MIN_ORDER}, got {}", self.bulk.quad_order));
        }
        if !(self.bc.s > -0.5 && self.bc.s < 1.0) {
            out.push(format!("bc.s: must lie in (-1/2, 1), got {}", self.bc.s));
        }
        if self.bc.kind == BcKind::Defect && d.shape == DomainShape::Rectangle && self.bc.winding != 0 {
            out.push("bc.winding: defect data with nonzero winding needs a disk domain".into());
        }
        if self.bc.director.iter().map(|v| v * v).sum::<f64>() <= 0.0 {
            out.push("bc.director: must be nonzero".into());
        }
        if let Err(e) = self.solver.solve_config().validate() {
            out.push(format!("solver: {e}"));
        }
        let g = &self.diagnostics;
        if !(g.replacement_radius > 0.0) {
            out.push("diagnostics.replacement_radius: must be > 0".into());
        }
        if !g.morrey_radii.windows(2).all(|w| w[0] < w[1]) || g.morrey_radii.iter().any(|r| !(*r > 0.0)) {
            out.push("diagnostics.morrey_radii: must be positive and increasing".into());
        }
        if g.holder_sigmas.iter().any(|s| !(*s > 0.0 && *s < 1.0)) {
            out.push("diagnostics.holder_sigmas: must lie in (0, 1)".into());
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(p))
        }
    }
}

/// `QTENSOR_SOLVER_MAX_ITERS=100` sets `solver.max_iters`; `QTENSOR_SEED`
/// sets the top-level seed. Values are read as TOML literals and fall back
/// to strings.
fn apply_env<I>(table: &mut toml::Table, env: I) -> Result<(), ConfigError>
where
    I: IntoIterator<Item = (String, String)>,
{
    const SECTIONS: [&str; 7] = ["domain", "elastic", "bulk", "bc", "solver", "diagnostics", "output"];
    let mut vars: Vec<(String, String)> = env.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
    vars.sort();
    for (key, raw) in vars {
        let rest = key[ENV_PREFIX.len()..].to_ascii_lowercase();
        let value = parse_literal(&raw);
        if rest == "seed" {
            table.insert(rest, value);
            continue;
        }
        let Some(section) = SECTIONS.iter().find(|s| rest.starts_with(&format!("{s}_"))) else {
            continue;
        };
        let field = rest[section.len() + 1..].to_string();
        let entry = table.entry(section.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        match entry {
            toml::Value::Table(t) => {
                t.insert(field, value);
            }
            _ => return Err(ConfigError::Parse(format!("{section} is not a table"))),
        }
    }
    Ok(())
}

fn parse_literal(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_env() -> Vec<(String, String)> {
        Vec::new()
    }

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::parse_with_env("", no_env()).unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn round_trip_through_toml() {
        let mut c = RunConfig { seed: 11, elastic: ElasticConfig { mode: ModeName::Thm3, l1: 1.0, l2: 0.0, l3: 0.0, l4: 0.5, l5: 2.9 }, ..Default::default() };
        c.diagnostics.operator = OperatorName::LOperator;
        let back = RunConfig::parse_with_env(&c.to_toml(), no_env()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn env_overrides_keys() {
        let env = vec![
            ("QTENSOR_SOLVER_MAX_ITERS".to_string(), "17".to_string()),
            ("QTENSOR_ELASTIC_MODE".to_string(), "thm3".to_string()),
            ("QTENSOR_SEED".to_string(), "5".to_string()),
            ("OTHER_VAR".to_string(), "x".to_string()),
        ];
        let c = RunConfig::parse_with_env("[solver]\nmax_iters = 3\n", env).unwrap();
        assert_eq!(c.solver.max_iters, 17);
        assert_eq!(c.elastic.mode, ModeName::Thm3);
        assert_eq!(c.seed, 5);
    }

    #[test]
    fn invalid_configs_list_failing_keys() {
        let text = "[elastic]\nmode = \"thm3\"\nl1 = 1.0\nl5 = -2.0\n[domain]\nn = 8\n[bc]\ns = 1.2\n";
        match RunConfig::parse_with_env(text, no_env()) {
            Err(ConfigError::Invalid(p)) => {
                assert!(p.iter().any(|m| m.contains("L1+2L5/3>0")), "{p:?}");
                assert!(p.iter().any(|m| m.starts_with("domain.n")));
                assert!(p.iter().any(|m| m.starts_with("bc.s")));
            }
            other => panic!("expected invalid config, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(RunConfig::parse_with_env("[solver]\nmax_iter = 3\n", no_env()), Err(ConfigError::Parse(_))));
    }
}
