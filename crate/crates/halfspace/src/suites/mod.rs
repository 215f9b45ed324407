//! Property suites: each one runs a family of checks at desk scale and returns a JSON-ready
//! report carrying the grid descriptor, exponents and seed. `report` folds a directory of
//! suite artifacts into one markdown table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

mod freq;
mod gbeta;
mod green;
mod kernel;
mod linear;
mod solve;
mod tent;

pub use kernel::kernel_check;
pub use tent::tent_suite;
pub use linear::{claim_surrogate, linear_estimate_suite, linear_suite, potential_estimate_suite, ClaimSurrogate, LinearFamilyReport, PotentialExponents};
pub use gbeta::gbeta_suite;
pub use green::green_suite;
pub use freq::freq_suite;
pub use solve::{scaling_suite, solve_suite, solve_suite_fields, solver_grid};

/// Suite names in report order; each writes `<name>.json`.
pub const SUITES: [&str; 8] = [
    "kernel-check",
    "tent-suite",
    "freq-suite",
    "green-suite",
    "linear-suite",
    "gbeta-suite",
    "solve",
    "scaling-check",
];

/// Flat key-value run configuration; every key has a reference default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub bound_sample_size: usize,
    pub bound_fd_step: f64,
    pub tent_horizontal_step: f64,
    pub tent_family_size: usize,
    pub holder_pairs: usize,
    pub poisson_family_size: usize,
    pub green_cross_check: bool,
    pub linear_family_size: usize,
    pub claim_configurations: usize,
    pub gbeta_family_size: usize,
    pub solver_horizontal_step: f64,
    pub solver_horizontal_extent: f64,
    pub solver_vertical_min: f64,
    pub solver_vertical_max: f64,
    pub solver_levels_per_octave: usize,
    pub solver_max_iterations: usize,
    pub solver_tolerance: f64,
    pub solver_smallness_fraction: f64,
    pub solver_large_data_factor: f64,
    pub solver_zero_data: bool,
    pub bootstrap_q: f64,
    pub bootstrap_eta1: f64,
    pub scaling_lambda: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            bound_sample_size: 10_000,
            bound_fd_step: 1e-4,
            tent_horizontal_step: 1.0 / 64.0,
            tent_family_size: 20,
            holder_pairs: 20,
            poisson_family_size: 10,
            green_cross_check: true,
            linear_family_size: 5,
            claim_configurations: 100,
            gbeta_family_size: 12,
            solver_horizontal_step: 1.0 / 16.0,
            solver_horizontal_extent: 4.0,
            solver_vertical_min: 0.5,
            solver_vertical_max: 8.0,
            solver_levels_per_octave: 8,
            solver_max_iterations: 40,
            solver_tolerance: 1e-11,
            solver_smallness_fraction: 1e-2,
            solver_large_data_factor: 1e3,
            solver_zero_data: false,
            bootstrap_q: 4.0,
            bootstrap_eta1: 1.1,
            scaling_lambda: 2.0,
        }
    }
}

impl RunConfig {
    /// Parses `key = value` lines (TOML syntax, flat); absent keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("flat config serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    /// measured ≤ limit
    AtMost,
    /// measured ≥ limit
    AtLeast,
    /// measured is 1 (a boolean property)
    Holds,
}

/// One assertion of a suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    /// Acceptance criterion number (1–15).
    pub criterion: u8,
    /// Report row this check belongs to.
    pub estimate: String,
    pub id: String,
    pub measured: f64,
    pub limit: f64,
    pub relation: Relation,
    pub passed: bool,
}

impl Check {
    pub fn at_most(criterion: u8, estimate: &str, id: &str, measured: f64, limit: f64) -> Self {
        Self {
            criterion,
            estimate: estimate.into(),
            id: id.into(),
            measured,
            limit,
            relation: Relation::AtMost,
            passed: measured <= limit,
        }
    }

    pub fn at_least(criterion: u8, estimate: &str, id: &str, measured: f64, limit: f64) -> Self {
        Self {
            criterion,
            estimate: estimate.into(),
            id: id.into(),
            measured,
            limit,
            relation: Relation::AtLeast,
            passed: measured >= limit,
        }
    }

    pub fn holds(criterion: u8, estimate: &str, id: &str, ok: bool) -> Self {
        Self {
            criterion,
            estimate: estimate.into(),
            id: id.into(),
            measured: if ok { 1.0 } else { 0.0 },
            limit: 1.0,
            relation: Relation::Holds,
            passed: ok,
        }
    }

    /// A step that errored counts as a failed check carrying NaN.
    pub fn failed(criterion: u8, estimate: &str, id: &str) -> Self {
        Self {
            criterion,
            estimate: estimate.into(),
            id: id.into(),
            measured: f64::NAN,
            limit: f64::NAN,
            relation: Relation::Holds,
            passed: false,
        }
    }
}

/// Suite artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    /// Grid descriptors keyed by role.
    pub grids: BTreeMap<String, serde_json::Value>,
    pub exponents: BTreeMap<String, serde_json::Value>,
    pub checks: Vec<Check>,
    /// Family descriptors, ratio tables, profiles.
    pub data: BTreeMap<String, serde_json::Value>,
    /// Non-fatal conditions: skipped checks, trivial runs.
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl SuiteReport {
    pub fn new(suite: &str, seed: u64) -> Self {
        Self {
            suite: suite.into(),
            seed,
            grids: BTreeMap::new(),
            exponents: BTreeMap::new(),
            checks: Vec::new(),
            data: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn grid(&mut self, role: &str, g: &crate::grid::HalfSpaceGrid) {
        self.grids.insert(role.into(), g.descriptor());
    }

    pub fn exponent(&mut self, key: &str, v: serde_json::Value) {
        self.exponents.insert(key.into(), v);
    }

    pub fn datum<T: Serialize>(&mut self, key: &str, v: &T) {
        self.data.insert(key.into(), serde_json::to_value(v).expect("serializable"));
    }

    pub fn warn(&mut self, msg: &str) {
        self.warnings.push(msg.into());
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    /// Pushes the check built from `f`, or a failed check named `id` when `f` errors.
    pub fn try_push<F: FnOnce() -> Result<Vec<Check>>>(&mut self, criterion: u8, estimate: &str, id: &str, f: F) {
        match f() {
            Ok(cs) => self.checks.extend(cs),
            Err(e) => {
                self.data.insert(format!("error:{id}"), serde_json::Value::String(e.to_string()));
                self.checks.push(Check::failed(criterion, estimate, id));
            }
        }
    }

    /// As `try_push`, also storing the datum `f` returns under `key`.
    pub fn try_push_with<T, F>(&mut self, criterion: u8, estimate: &str, id: &str, key: &str, f: F)
    where
        T: Serialize,
        F: FnOnce() -> Result<(Vec<Check>, T)>,
    {
        let mut datum = None;
        self.try_push(criterion, estimate, id, || {
            let (c, d) = f()?;
            datum = Some(d);
            Ok(c)
        });
        if let Some(d) = datum {
            self.datum(key, &d);
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    /// Tidy check table, one row per check.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("suite,seed,criterion,estimate,check,measured,limit,relation,passed\n");
        for c in &self.checks {
            writeln!(
                s,
                "{},{},{},\"{}\",{},{:e},{:e},{:?},{}",
                self.suite, self.seed, c.criterion, c.estimate, c.id, c.measured, c.limit, c.relation, c.passed
            )
            .unwrap();
        }
        s
    }

    /// Writes `<suite>.json` and `<suite>.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{}.json", self.suite)), self.to_json())?;
        std::fs::write(dir.join(format!("{}.csv", self.suite)), self.to_csv())?;
        Ok(())
    }
}

/// max / min of positive values (1 for a singleton, ∞ when a value is not positive).
pub fn spread(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    if values.is_empty() || !(lo > 0.0) || !hi.is_finite() {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Runs a suite by name.
pub fn run_suite(name: &str, cfg: &RunConfig) -> Result<SuiteReport> {
    match name {
        "kernel-check" => kernel_check(cfg),
        "tent-suite" => tent_suite(cfg),
        "freq-suite" => freq_suite(cfg),
        "green-suite" => green_suite(cfg),
        "linear-suite" => linear_suite(cfg),
        "gbeta-suite" => gbeta_suite(cfg),
        "solve" => solve_suite(cfg),
        "scaling-check" => scaling_suite(cfg),
        other => Err(Error::Config(format!("unknown suite {other}"))),
    }
}

fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "n/a".into()
    } else {
        format!("{x:.4e}")
    }
}

fn fmt_check(c: &Check) -> String {
    match c.relation {
        Relation::AtMost => format!("{} <= {}", fmt_num(c.measured), fmt_num(c.limit)),
        Relation::AtLeast => format!("{} >= {}", fmt_num(c.measured), fmt_num(c.limit)),
        Relation::Holds => (if c.passed { "holds" } else { "fails" }).into(),
    }
}

/// Markdown summary of the suite artifacts in `dir`: one row per estimate, then every check.
pub fn report(dir: &Path) -> Result<String> {
    let missing: Vec<String> = SUITES
        .iter()
        .filter(|s| !dir.join(format!("{s}.json")).is_file())
        .map(|s| s.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingArtifacts(missing));
    }
    let mut reports = Vec::new();
    for s in SUITES {
        let text = std::fs::read_to_string(dir.join(format!("{s}.json")))?;
        let r: SuiteReport = serde_json::from_str(&text)?;
        reports.push(r);
    }
    let mut rows: Vec<(String, String, usize, usize)> = Vec::new();
    for r in &reports {
        for c in &r.checks {
            match rows.iter_mut().find(|row| row.0 == c.estimate && row.1 == r.suite) {
                Some(row) => {
                    row.2 += usize::from(c.passed);
                    row.3 += 1;
                }
                None => rows.push((c.estimate.clone(), r.suite.clone(), usize::from(c.passed), 1)),
            }
        }
    }
    let mut out = String::new();
    let seeds: Vec<String> = reports.iter().map(|r| format!("{}={}", r.suite, r.seed)).collect();
    writeln!(out, "# Verification summary\n").unwrap();
    writeln!(out, "Seeds: {}\n", seeds.join(", ")).unwrap();
    writeln!(out, "| Estimate | Suite | Checks passed | Status |").unwrap();
    writeln!(out, "|---|---|---|---|").unwrap();
    for (est, suite, ok, all) in &rows {
        let status = if ok == all { "pass" } else { "FAIL" };
        writeln!(out, "| {est} | {suite} | {ok}/{all} | {status} |").unwrap();
    }
    writeln!(out, "\n## Checks\n").unwrap();
    writeln!(out, "| Criterion | Suite | Check | Measured | Status |").unwrap();
    writeln!(out, "|---|---|---|---|---|").unwrap();
    for r in &reports {
        for c in &r.checks {
            let status = if c.passed { "pass" } else { "FAIL" };
            writeln!(out, "| {} | {} | {} | {} | {status} |", c.criterion, r.suite, c.id, fmt_check(c)).unwrap();
        }
    }
    let warnings: Vec<String> =
        reports.iter().flat_map(|r| r.warnings.iter().map(move |w| format!("- {}: {w}", r.suite))).collect();
    if !warnings.is_empty() {
        writeln!(out, "\n## Warnings\n\n{}", warnings.join("\n")).unwrap();
    }
    let total: usize = rows.iter().map(|r| r.3).sum();
    let good: usize = rows.iter().map(|r| r.2).sum();
    writeln!(out, "\n{good}/{total} checks pass.").unwrap();
    Ok(out)
}
