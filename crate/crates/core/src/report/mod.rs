//! Scenario files, the analysis pipeline and JSON run reports.

mod heatmap;
mod verify;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::carleson::{
    decide, gather_evidence, BoundaryCheck, ClassifierSettings, DeltaEstimate, DensityQuery, RatioEstimate,
    Thresholds, Verdict, VerdictLabel,
};
use crate::dirichlet::{
    build_quadrature, change_of_variables_residual, peak_ratio_sequence, target_grid, BoundednessEstimate,
    DirichletFunction, FamilyConfig, TargetGridSpec, DEFAULT_ANGULAR_ORDER, DEFAULT_RADIAL_ORDER, DEFAULT_TRUNCATION,
};
use crate::error::{Error, Result};
use crate::symbols::{build_symbol, SymbolMap, SymbolSpec};

pub use heatmap::{emit_heatmap, HeatmapField, HeatmapSummary, MAX_RESOLUTION, SENTINEL};
pub use verify::{verify_suite, CheckResult, SuiteSummary, VERIFY_TAGS};

pub const SCHEMA_VERSION: u32 = 1;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Relative accuracy of target-grid integrals at the default resolution.
pub const GRID_REL_TOL: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub radial_order: usize,
    pub angular_order: usize,
    /// Source-side radial truncation, also the counting radius of the target grid.
    pub truncation: f64,
    pub grid: TargetGridSpec,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            radial_order: DEFAULT_RADIAL_ORDER,
            angular_order: DEFAULT_ANGULAR_ORDER,
            truncation: DEFAULT_TRUNCATION,
            grid: TargetGridSpec::default(),
        }
    }
}

/// Extra tables computed alongside the verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Exponents of the power-mode sweep.
    pub alphas: Vec<f64>,
    /// Angle of the peak point `zeta`.
    pub peak_angle: f64,
    pub peak_ks: Vec<usize>,
    /// Monomial degrees used as change-of-variables probes.
    pub change_of_variables: Vec<usize>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            alphas: vec![0.25, 0.5, 0.75, 1.0],
            peak_angle: 0.0,
            peak_ks: vec![1, 2, 4, 8, 16, 32, 64],
            change_of_variables: vec![1, 2, 3],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub report: bool,
    pub heatmaps: Vec<HeatmapField>,
    pub heatmap_resolution: usize,
    /// Print the per-ring table.
    pub rings: bool,
    /// Record wall-clock timings; off by default so reports are reproducible.
    pub timings: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            report: true,
            heatmaps: Vec::new(),
            heatmap_resolution: 128,
            rings: false,
            timings: false,
        }
    }
}

/// A scenario file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub name: String,
    pub symbol: SymbolSpec,
    #[serde(default)]
    pub query: DensityQuery,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub family: FamilyConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub outputs: Outputs,
}

/// Command-line overrides applied on top of a scenario file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub radial_order: Option<usize>,
    pub angular_order: Option<usize>,
    pub eps_truncation: Option<f64>,
    pub alpha: Option<f64>,
    pub bergman_radius: Option<f64>,
}

fn config_error(path: &str, e: Error) -> Error {
    match e {
        Error::Validation { field, reason } => {
            let path = if field.starts_with(&format!("{path}.")) {
                field
            } else {
                format!("{path}.{field}")
            };
            Error::Config { path, reason }
        }
        Error::Config { .. } => e,
        other => Error::Config {
            path: path.into(),
            reason: other.to_string(),
        },
    }
}

fn invalid(path: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        reason: reason.into(),
    }
}

impl ScenarioConfig {
    pub fn new(name: impl Into<String>, symbol: SymbolSpec) -> Self {
        ScenarioConfig {
            schema_version: SCHEMA_VERSION,
            name: name.into(),
            symbol,
            query: DensityQuery::default(),
            quadrature: QuadratureConfig::default(),
            family: FamilyConfig::default(),
            analysis: AnalysisConfig::default(),
            thresholds: Thresholds::default(),
            outputs: Outputs::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
            let path = e
                .span()
                .map(|s| format!("byte {}..{}", s.start, s.end))
                .unwrap_or_else(|| "scenario".into());
            invalid(&path, e.message().trim())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario configs serialize")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(invalid("name", "must be a non-empty [A-Za-z0-9_-] identifier"));
        }
        build_symbol(&self.symbol).map_err(|e| config_error("symbol", e))?;
        self.query.validate().map_err(|e| config_error("query", e))?;
        let q = &self.quadrature;
        if q.radial_order < 4 || q.radial_order > 4096 {
            return Err(invalid("quadrature.radial_order", "must lie in [4, 4096]"));
        }
        if q.angular_order < 4 || q.angular_order > 1 << 16 {
            return Err(invalid("quadrature.angular_order", "must lie in [4, 65536]"));
        }
        if !(q.truncation > 0.9 && q.truncation < 1.0) {
            return Err(invalid("quadrature.truncation", "must lie in (0.9, 1)"));
        }
        if q.grid.angular < 4 || q.grid.panels < 1 || q.grid.order < 2 {
            return Err(invalid("quadrature.grid", "angular >= 4, panels >= 1, order >= 2 required"));
        }
        let f = &self.family;
        if f.monomials + f.random_polynomials + f.peak_angles * f.peak_powers.len() + f.kernel_levels * f.kernel_angles
            == 0
        {
            return Err(invalid("family", "selection produced no members"));
        }
        if f.random_degree > 1024 || f.peak_powers.iter().any(|&k| k == 0 || k > 1024) || f.monomials > 1024 {
            return Err(invalid("family", "degrees must lie in [1, 1024]"));
        }
        if !f.normalize {
            return Err(invalid("family.normalize", "the boundedness estimate needs a normalized family"));
        }
        let a = &self.analysis;
        if a.alphas.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
            return Err(invalid("analysis.alphas", "must lie in (0, 1]"));
        }
        if a.peak_ks.is_empty() || a.peak_ks[0] == 0 || a.peak_ks.windows(2).any(|p| p[1] <= p[0]) {
            return Err(invalid("analysis.peak_ks", "must be positive and strictly increasing"));
        }
        if a.peak_ks.last().is_some_and(|&k| k > 1024) || a.change_of_variables.iter().any(|&n| n == 0 || n > 1024) {
            return Err(invalid("analysis", "degrees must lie in [1, 1024]"));
        }
        if !a.peak_angle.is_finite() {
            return Err(invalid("analysis.peak_angle", "must be finite"));
        }
        let t = &self.thresholds;
        if !(t.delta0 > 0.0 && t.delta_min > 0.0 && t.tail >= 0.0 && t.gc_radius > 0.0 && t.gc_radius <= 2.0) {
            return Err(invalid("thresholds", "delta0, delta_min, gc_radius must be positive and tail non-negative"));
        }
        if !(t.boundedness_eps > 0.0 && t.boundedness_eps < 1.0) || t.k0 == 0 || t.box_angles == 0 || t.gc_angles == 0 {
            return Err(invalid("thresholds", "boundedness_eps in (0,1), k0, box_angles, gc_angles positive"));
        }
        let r = self.outputs.heatmap_resolution;
        if !(2..=MAX_RESOLUTION).contains(&r) {
            return Err(invalid("outputs.heatmap_resolution", format!("must lie in [2, {MAX_RESOLUTION}]")));
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(s) = o.seed {
            self.query.seed = s;
        }
        if let Some(n) = o.radial_order {
            self.quadrature.radial_order = n;
        }
        if let Some(n) = o.angular_order {
            self.quadrature.angular_order = n;
        }
        if let Some(e) = o.eps_truncation {
            self.query.eps = e;
        }
        if let Some(a) = o.alpha {
            self.query.alpha = a;
        }
        if let Some(r) = o.bergman_radius {
            self.query.bergman_radius = r;
        }
        self.validate()
    }

    pub fn settings(&self) -> ClassifierSettings {
        ClassifierSettings {
            thresholds: self.thresholds.clone(),
            family: self.family.clone(),
            grid: self.quadrature.grid,
        }
    }

    pub fn symbol_map(&self) -> Result<SymbolMap> {
        build_symbol(&self.symbol).map_err(|e| config_error("symbol", e))
    }
}

/// The six reference scenarios.
pub fn scenario_suite() -> Vec<ScenarioConfig> {
    let c = Complex64::new;
    vec![
        ScenarioConfig::new("identity", SymbolSpec::Identity),
        ScenarioConfig::new("power2", SymbolSpec::Power { n: 2 }),
        ScenarioConfig::new("blaschke", SymbolSpec::blaschke(&[c(0.5, 0.0), c(-0.3, 0.0)])),
        ScenarioConfig::new("scaled", SymbolSpec::Scaled { c: 0.5 }),
        ScenarioConfig::new("crescent", SymbolSpec::crescent_default()),
        ScenarioConfig::new("atomic_singular", SymbolSpec::AtomicSingular),
    ]
}

pub fn builtin_scenario(name: &str) -> Option<ScenarioConfig> {
    scenario_suite().into_iter().find(|s| s.name == name)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaSection {
    pub coverage: DeltaEstimate,
    pub power: Vec<DeltaEstimate>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub k: usize,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakEntry {
    pub k: usize,
    pub ratio: f64,
    pub root: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChangeOfVariablesEntry {
    pub probe: String,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountingStats {
    pub max_n: usize,
    pub samples: usize,
    pub histogram: BTreeMap<usize, usize>,
}

/// Everything a run produces. Serialized with sorted keys and without timings
/// unless requested, so equal inputs give byte-identical files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub version: String,
    pub seed: u64,
    pub scenario: ScenarioConfig,
    pub symbol_label: String,
    pub verdict: Verdict,
    pub delta_estimates: Option<DeltaSection>,
    pub tail_estimates: Vec<TailEstimate>,
    pub peak_ratios: Vec<PeakEntry>,
    pub change_of_variables: Vec<ChangeOfVariablesEntry>,
    pub boundedness: Option<BoundednessEstimate>,
    pub boundary: Option<BoundaryCheck>,
    pub gc_density: Option<RatioEstimate>,
    pub counting: Option<CountingStats>,
    pub timings: Option<BTreeMap<String, f64>>,
    pub errors: Vec<String>,
}

impl RunReport {
    /// 2 when the verdict is inconclusive and some estimator failed, else 0.
    pub fn exit_code(&self) -> i32 {
        if self.verdict.label == VerdictLabel::Inconclusive && !self.errors.is_empty() {
            2
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    /// Per-ring minima as an aligned text table.
    pub fn ring_table(&self) -> String {
        let Some(d) = &self.delta_estimates else {
            return "no density estimates\n".into();
        };
        ring_table(d)
    }
}

pub fn ring_table(d: &DeltaSection) -> String {
    let mut out = format!("{:>8} {:>12}", "ring", "coverage");
    for p in &d.power {
        if let crate::carleson::DensityMode::Power { alpha } = p.mode {
            out.push_str(&format!(" {:>12}", format!("alpha={alpha}")));
        }
    }
    out.push('\n');
    for (i, r) in d.coverage.per_ring.iter().enumerate() {
        out.push_str(&format!("{:>8} {:>12.6}", r.radius, r.min_ratio));
        for p in &d.power {
            out.push_str(&format!(" {:>12.6}", p.per_ring[i].min_ratio));
        }
        out.push('\n');
    }
    out
}

/// Runs the whole pipeline. Only configuration problems are errors; estimator
/// failures are recorded in the report.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunReport> {
    config.validate()?;
    let phi = config.symbol_map()?;
    let mut timings = BTreeMap::new();
    let mut clock = Instant::now();
    let mut lap = |name: &str, timings: &mut BTreeMap<String, f64>| {
        timings.insert(name.to_string(), clock.elapsed().as_secs_f64());
        clock = Instant::now();
    };

    let ev = gather_evidence(&phi, &config.query, &config.settings(), &config.analysis.alphas);
    let verdict = decide(&ev, &config.thresholds);
    let mut errors = ev.errors.clone();
    lap("estimators", &mut timings);

    let q = &config.quadrature;
    let zeta = Complex64::from_polar(1.0, config.analysis.peak_angle);
    let peak_ratios = target_grid(&phi, q.truncation, q.grid)
        .and_then(|g| peak_ratio_sequence(&phi, zeta, &config.analysis.peak_ks, &g))
        .map(|v| {
            v.into_iter()
                .map(|p| PeakEntry {
                    k: p.k,
                    ratio: p.ratio,
                    root: p.root,
                    tolerance: GRID_REL_TOL * p.ratio,
                })
                .collect()
        })
        .unwrap_or_else(|e| {
            errors.push(format!("peak ratios: {e}"));
            Vec::new()
        });
    lap("peak_ratios", &mut timings);

    let mut change_of_variables = Vec::new();
    match build_quadrature(q.radial_order, q.angular_order, q.truncation) {
        Ok(quad) => {
            for &n in &config.analysis.change_of_variables {
                let f = DirichletFunction::monomial(n);
                match change_of_variables_residual(&phi, &f, &quad, q.grid) {
                    Ok(c) => change_of_variables.push(ChangeOfVariablesEntry {
                        probe: f.label.clone(),
                        lhs: c.lhs,
                        rhs: c.rhs,
                        residual: c.residual,
                    }),
                    Err(e) => errors.push(format!("change of variables ({}): {e}", f.label)),
                }
            }
        }
        Err(e) => errors.push(format!("quadrature: {e}")),
    }
    lap("change_of_variables", &mut timings);

    let tail_estimates = ev
        .tails
        .iter()
        .flatten()
        .map(|&(k, value)| TailEstimate {
            k,
            value,
            tolerance: GRID_REL_TOL * value,
        })
        .collect();
    let counting = ev.sweep.as_ref().map(|s| CountingStats {
        max_n: s.max_count,
        samples: s.histogram.values().sum(),
        histogram: s.histogram.clone(),
    });
    let delta_estimates = ev.sweep.as_ref().map(|s| DeltaSection {
        coverage: s.coverage.clone(),
        power: s.power.clone(),
    });

    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        version: VERSION.into(),
        seed: config.query.seed,
        scenario: config.clone(),
        symbol_label: phi.label().into(),
        verdict,
        delta_estimates,
        tail_estimates,
        peak_ratios,
        change_of_variables,
        boundedness: ev.boundedness,
        boundary: ev.boundary,
        gc_density: ev.gc,
        counting,
        timings: config.outputs.timings.then_some(timings),
        errors,
    })
}

/// Writes `<name>.json` into `dir` and returns its path.
pub fn write_report(report: &RunReport, dir: &Path) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{}.json", report.scenario.name));
    std::fs::write(&path, report.to_json())?;
    Ok(path)
}
