//! Scenario configuration: TOML sections, presets and `--set` overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use respo_core::periodic::SolverConfig;
use respo_core::resonance::IndexCheckConfig;
use respo_core::{
    BoundaryCondition, Coefficient, Expression, IntegratorConfig, NonlinearField, OperatorSpec,
    Scheme,
};

pub const PRESETS: [&str; 2] = ["neumann-laplacian", "dirichlet-divergence"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub operator: OperatorSection,
    pub nonlinearity: NonlinearitySection,
    pub resonance: ResonanceSection,
    pub solver: SolverSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OperatorSection {
    /// `dirichlet` or `neumann`.
    pub bc: String,
    pub dimension: usize,
    /// One entry per axis.
    pub lengths: Vec<f64>,
    /// Interior nodes (Dirichlet) or cells (Neumann) per axis.
    pub n: Vec<usize>,
    /// Diffusion coefficient `a(x)` as an expression in `x`, `x1`, `x2`.
    pub coefficient: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonlinearitySection {
    pub expr: String,
    pub m: f64,
    pub lipschitz: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_plus: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_minus: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResonanceSection {
    /// 1-based index among the distinct eigenvalues.
    pub k: usize,
    /// Explicit λ; takes precedence over `k`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub period: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub tol: f64,
    pub n_steps: usize,
    /// `midpoint` or `euler`.
    pub scheme: String,
    pub picard_iterations: usize,
    pub max_newton: usize,
    pub initial_complement: usize,
    pub epsilon_start: f64,
    pub min_step: f64,
    pub escape_radius: f64,
    pub n_t: usize,
    pub n_sphere: usize,
    pub seed: u64,
    pub galerkin_dim: usize,
    pub index_steps: usize,
    pub index_epsilons: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
    /// Half-width of the box sampled for `gmap.csv`.
    pub gmap_radius: f64,
    pub gmap_samples: usize,
}

impl Default for OperatorSection {
    fn default() -> Self {
        Self {
            bc: "neumann".into(),
            dimension: 1,
            lengths: vec![std::f64::consts::PI],
            n: vec![32],
            coefficient: "1".into(),
        }
    }
}

impl Default for NonlinearitySection {
    fn default() -> Self {
        Self {
            expr: "atan(y)".into(),
            m: std::f64::consts::FRAC_PI_2,
            lipschitz: 1.0,
            f_plus: Some("pi/2".into()),
            f_minus: Some("-pi/2".into()),
        }
    }
}

impl Default for ResonanceSection {
    fn default() -> Self {
        Self { k: 1, lambda: None, period: 1.0 }
    }
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverConfig::default();
        let i = IndexCheckConfig::default();
        Self {
            tol: s.tol,
            n_steps: s.integrator.n_steps,
            scheme: "midpoint".into(),
            picard_iterations: s.integrator.picard_iterations,
            max_newton: s.max_newton,
            initial_complement: s.initial_complement,
            epsilon_start: s.epsilon_start,
            min_step: s.min_step,
            escape_radius: s.escape_radius,
            n_t: s.n_t,
            n_sphere: 64,
            seed: s.seed,
            galerkin_dim: i.galerkin_dim,
            index_steps: i.integrator.n_steps,
            index_epsilons: i.epsilons,
        }
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "respo-out".into(), gmap_radius: 8.0, gmap_samples: 65 }
    }
}

/// Configuration problems; the message carries the file path and position when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

pub fn preset(name: &str) -> Result<ScenarioConfig, ConfigError> {
    match name {
        "neumann-laplacian" => Ok(ScenarioConfig::default()),
        "dirichlet-divergence" => {
            let mut cfg = ScenarioConfig::default();
            cfg.operator.bc = "dirichlet".into();
            cfg.operator.n = vec![64];
            cfg.operator.coefficient = "1 + 0.5*sin(x)".into();
            cfg.resonance.k = 2;
            Ok(cfg)
        }
        other => Err(err(format!(
            "unknown preset `{other}` (available: {})",
            PRESETS.join(", ")
        ))),
    }
}

/// Preset (or defaults), then the config file, then `key.path=value` overrides.
pub fn load(
    preset_name: Option<&str>,
    path: Option<&Path>,
    overrides: &[String],
) -> Result<ScenarioConfig, ConfigError> {
    let base = match preset_name {
        Some(name) => preset(name)?,
        None => ScenarioConfig::default(),
    };
    let mut merged = to_table(&base)?;
    if let Some(path) = path {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err(format!("{}: {e}", path.display())))?;
        // Typed parse of the file alone, so schema errors carry its line numbers.
        toml::from_str::<ScenarioConfig>(&text)
            .map_err(|e| err(format!("{}: {e}", path.display())))?;
        let table: Table = text.parse().map_err(|e| err(format!("{}: {e}", path.display())))?;
        merge(&mut merged, table);
    }
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| err(format!("override `{item}` is not key=value")))?;
        let value = parse_value(raw.trim());
        set_path(&mut merged, key.trim(), raw.trim(), value)?;
    }
    let cfg: ScenarioConfig = Value::Table(merged)
        .try_into()
        .map_err(|e: toml::de::Error| err(format!("override: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

fn to_table(cfg: &ScenarioConfig) -> Result<Table, ConfigError> {
    match Value::try_from(cfg).map_err(|e| err(e.to_string()))? {
        Value::Table(t) => Ok(t),
        _ => Err(err("configuration did not serialize to a table")),
    }
}

fn merge(into: &mut Table, from: Table) {
    for (k, v) in from {
        match (into.get_mut(&k), v) {
            (Some(Value::Table(a)), Value::Table(b)) => merge(a, b),
            (_, v) => {
                into.insert(k, v);
            }
        }
    }
}

/// TOML literal if it parses as one, otherwise a bare string.
fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

fn set_path(table: &mut Table, key: &str, raw: &str, value: Value) -> Result<(), ConfigError> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let leaf = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| err(format!("empty key in `{key}`")))?;
    let mut cur = table;
    for p in parts {
        cur = match cur.entry(p).or_insert_with(|| Value::Table(Table::new())) {
            Value::Table(t) => t,
            _ => return Err(err(format!("`{p}` in `{key}` is not a section"))),
        };
    }
    // Scalars given for list-valued fields become one-element lists.
    let value = match (cur.get(leaf), value) {
        (Some(Value::Array(_)), v @ (Value::Integer(_) | Value::Float(_))) => Value::Array(vec![v]),
        (Some(Value::Float(_)), Value::Integer(i)) => Value::Float(i as f64),
        (Some(Value::String(_)), Value::Integer(_) | Value::Float(_) | Value::Boolean(_)) => {
            Value::String(raw.to_string())
        }
        (_, v) => v,
    };
    cur.insert(leaf.to_string(), value);
    Ok(())
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.boundary_condition()?;
        let op = &self.operator;
        if !(1..=2).contains(&op.dimension) {
            return Err(err(format!("operator.dimension must be 1 or 2, got {}", op.dimension)));
        }
        if op.lengths.len() != op.dimension || op.n.len() != op.dimension {
            return Err(err(format!(
                "operator.lengths and operator.n need {} entries",
                op.dimension
            )));
        }
        if op.lengths.iter().any(|l| l.is_nan() || *l <= 0.0) {
            return Err(err("operator.lengths must be positive"));
        }
        Expression::parse(&op.coefficient)
            .map_err(|e| err(format!("operator.coefficient: {e}")))?;
        let nl = &self.nonlinearity;
        for (name, src) in [("expr", Some(&nl.expr)), ("f_plus", nl.f_plus.as_ref()), ("f_minus", nl.f_minus.as_ref())] {
            if let Some(src) = src {
                Expression::parse(src).map_err(|e| err(format!("nonlinearity.{name}: {e}")))?;
            }
        }
        if self.resonance.period.is_nan() || self.resonance.period <= 0.0 {
            return Err(err(format!("resonance.period must be positive, got {}", self.resonance.period)));
        }
        if self.resonance.k == 0 {
            return Err(err("resonance.k is 1-based"));
        }
        self.scheme()?;
        self.field().map_err(|e| err(format!("nonlinearity: {e}")))?;
        self.solver_config().validate().map_err(|e| err(format!("solver: {e}")))?;
        Ok(())
    }

    pub fn boundary_condition(&self) -> Result<BoundaryCondition, ConfigError> {
        match self.operator.bc.as_str() {
            "dirichlet" => Ok(BoundaryCondition::Dirichlet),
            "neumann" => Ok(BoundaryCondition::Neumann),
            other => Err(err(format!("operator.bc must be dirichlet or neumann, got `{other}`"))),
        }
    }

    fn scheme(&self) -> Result<Scheme, ConfigError> {
        self.solver.scheme.parse().map_err(|e| err(format!("solver.scheme: {e}")))
    }

    pub fn operator_spec(&self) -> Result<OperatorSpec, ConfigError> {
        let coef = Expression::parse(&self.operator.coefficient)
            .map_err(|e| err(format!("operator.coefficient: {e}")))?;
        let coefficient = match coef.ast() {
            respo_core::nonlinearity::expr::Expr::Num(v) => Coefficient::Constant(*v),
            _ => Coefficient::Expr(coef),
        };
        Ok(OperatorSpec {
            bc: self.boundary_condition()?,
            lengths: self.operator.lengths.clone(),
            shape: self.operator.n.clone(),
            coefficient,
        })
    }

    pub fn field(&self) -> respo_core::Result<NonlinearField> {
        let nl = &self.nonlinearity;
        NonlinearField::parse(
            &nl.expr,
            nl.m,
            nl.lipschitz,
            nl.f_plus.as_deref(),
            nl.f_minus.as_deref(),
            self.resonance.period,
        )
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            n_steps: self.solver.n_steps,
            scheme: self.scheme().unwrap_or(Scheme::ExponentialMidpoint),
            picard_iterations: self.solver.picard_iterations,
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            integrator: self.integrator(),
            tol: s.tol,
            max_newton: s.max_newton,
            initial_complement: s.initial_complement,
            epsilon_start: s.epsilon_start,
            min_step: s.min_step,
            escape_radius: s.escape_radius,
            n_t: s.n_t,
            seed: s.seed,
        }
    }

    pub fn index_config(&self) -> IndexCheckConfig {
        IndexCheckConfig {
            galerkin_dim: self.solver.galerkin_dim,
            integrator: self.integrator().with_steps(self.solver.index_steps),
            epsilons: self.solver.index_epsilons.clone(),
            n_t: self.solver.n_t,
        }
    }

    /// TOML text that parses back to an equal configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn presets_round_trip() {
        for name in PRESETS {
            let cfg = preset(name).unwrap();
            cfg.validate().unwrap();
            let back: ScenarioConfig = toml::from_str(&cfg.to_toml()).unwrap();
            assert_eq!(back, cfg);
        }
    }

    #[test]
    fn overrides_and_file_merge() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "[resonance]\nperiod = 2.5\n[nonlinearity]\nexpr = \"tanh(y)\"").unwrap();
        let cfg = load(
            Some("dirichlet-divergence"),
            Some(file.path()),
            &["operator.n=48".into(), "nonlinearity.m=1".into(), "solver.scheme=euler".into()],
        )
        .unwrap();
        assert_eq!(cfg.operator.n, vec![48]);
        assert_eq!(cfg.operator.bc, "dirichlet");
        assert_eq!(cfg.resonance.period, 2.5);
        assert_eq!(cfg.nonlinearity.expr, "tanh(y)");
        assert_eq!(cfg.nonlinearity.m, 1.0);
        assert_eq!(cfg.integrator().scheme, Scheme::ExponentialEuler);
    }

    #[test]
    fn errors_name_file_and_line() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "[operator]\nbc = \"neumann\"\nwidth = 3").unwrap();
        let e = load(None, Some(file.path()), &[]).unwrap_err().0;
        assert!(e.contains(&file.path().display().to_string()), "{e}");
        assert!(e.contains("line 3") && e.contains("width"), "{e}");

        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "[nonlinearity]\nexpr = \"atan(y\"").unwrap();
        let e = load(None, Some(file.path()), &[]).unwrap_err().0;
        assert!(e.contains("nonlinearity.expr"), "{e}");

        assert!(load(Some("heat"), None, &[]).is_err());
        assert!(load(None, None, &["resonance.period=-1".into()]).is_err());
    }
}
