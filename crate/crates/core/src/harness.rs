//! Config-driven experiments: axiom suites, convergence sweeps, CSV output
//! and a checksummed manifest.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bounds::{
    first_violation, sweep_tables, BoundSettings, ConvergenceTable, GridPlan, SweepSpec,
};
use crate::error::{Error, Result};
use crate::function_space::{CorpusFn, TOL_FLOOR};
use crate::operators::{
    check_claims, lcm, Axiom, CheckConfig, Family, OperatorSpec, PhiSpec, Verdict,
};

/// Overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "KOROVKIN_OUT";

/// Default target grid has at most this many intervals.
const MAX_DEFAULT_TARGET_INTERVALS: usize = 3000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Defaults to `out/<name>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Orders `n` of the swept family.
    pub orders: Vec<usize>,
    /// The swept family; its `n` is taken from `orders`.
    pub operator: OperatorSpec,
    #[serde(default = "default_reference")]
    pub reference: OperatorSpec,
    /// Corpus function names; every corpus function when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus: Option<Vec<String>>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub axioms: AxiomConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
}

fn default_reference() -> OperatorSpec {
    OperatorSpec::new(Family::Composition)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Source grid size `m` on `[0, 1]`. Defaults to `lcm(node denominators) + 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    /// Target grid size. Defaults to a sub-grid of at most 3001 points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_points: Option<usize>,
    /// Pick a separate source grid for each order instead of one shared grid.
    #[serde(default)]
    pub per_order: bool,
    /// Lower bound on the per-order source grid size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxiomConfig {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Source grid for the axiom suite; defaults to each operator's own
    /// smallest node-holding grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
}

fn yes() -> bool {
    true
}

fn default_trials() -> usize {
    500
}

impl Default for AxiomConfig {
    fn default() -> Self {
        AxiomConfig {
            enabled: true,
            trials: default_trials(),
            seed: 0,
            grid_points: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    #[serde(default = "default_tol_axiom")]
    pub tol_axiom: f64,
    /// Constant part of `tol_bound`.
    #[serde(default = "default_tol_floor")]
    pub tol_bound_floor: f64,
    /// Multiplier of `Lip(f)·mesh` in `tol_bound`.
    #[serde(default = "default_slack")]
    pub bound_slack: f64,
}

fn default_tol_axiom() -> f64 {
    CheckConfig::default().tol
}

fn default_tol_floor() -> f64 {
    TOL_FLOOR
}

fn default_slack() -> f64 {
    BoundSettings::default().slack
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            tol_axiom: default_tol_axiom(),
            tol_bound_floor: default_tol_floor(),
            bound_slack: default_slack(),
        }
    }
}

impl ExperimentConfig {
    /// A config with every optional section at its default.
    pub fn new(name: impl Into<String>, operator: OperatorSpec, orders: Vec<usize>) -> Self {
        ExperimentConfig {
            name: name.into(),
            output_dir: None,
            orders,
            operator,
            reference: default_reference(),
            corpus: None,
            grid: GridConfig::default(),
            axioms: AxiomConfig::default(),
            tolerances: ToleranceConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)
            .map_err(|e| Error::config("<document>", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config("<file>", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Corpus functions in config order.
    pub fn functions(&self) -> Result<Vec<CorpusFn>> {
        match &self.corpus {
            None => Ok(CorpusFn::ALL.to_vec()),
            Some(names) => names
                .iter()
                .map(|s| {
                    s.parse().map_err(|_| {
                        Error::config("corpus", format!("unknown corpus function `{s}`"))
                    })
                })
                .collect(),
        }
    }

    fn sorted_orders(&self) -> Vec<usize> {
        let mut o = self.orders.clone();
        o.sort_unstable();
        o.dedup();
        o
    }

    /// `m - 1` must be a multiple of this for a shared source grid.
    pub fn node_lcm(&self) -> usize {
        self.sorted_orders()
            .into_iter()
            .fold(self.reference.node_lcm(None), |l, n| {
                lcm(l, self.operator.node_lcm(Some(n)))
            })
    }

    pub fn source_points(&self) -> usize {
        self.grid.points.unwrap_or_else(|| self.node_lcm() + 1)
    }

    /// Largest even divisor of `m - 1` not above 3000, so the target grid
    /// is a sub-grid of the source grid containing `1/2`.
    pub fn target_points(&self) -> usize {
        if let Some(t) = self.grid.target_points {
            return t;
        }
        let intervals = self.source_points() - 1;
        if intervals <= MAX_DEFAULT_TARGET_INTERVALS {
            return intervals + 1;
        }
        (2..=MAX_DEFAULT_TARGET_INTERVALS)
            .rev()
            .find(|&d| d % 2 == 0 && intervals.is_multiple_of(d))
            .unwrap_or(MAX_DEFAULT_TARGET_INTERVALS)
            + 1
    }

    pub fn grid_plan(&self) -> GridPlan {
        if self.grid.per_order {
            GridPlan::PerOrder {
                min_source_points: self.grid.min_points.unwrap_or(2001),
                target_points: self.grid.target_points.unwrap_or(2001),
            }
        } else {
            GridPlan::Fixed {
                source_points: self.source_points(),
                target_points: self.target_points(),
            }
        }
    }

    pub fn bound_settings(&self) -> BoundSettings {
        BoundSettings {
            tol_floor: self.tolerances.tol_bound_floor,
            slack: self.tolerances.bound_slack,
        }
    }

    pub fn sweep_spec(&self) -> SweepSpec {
        SweepSpec {
            family: self.operator.clone(),
            reference: self.reference.clone(),
            orders: self.sorted_orders(),
            grid: self.grid_plan(),
            settings: self.bound_settings(),
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        if let Some(dir) = std::env::var_os(OUT_DIR_ENV) {
            return PathBuf::from(dir);
        }
        self.output_dir
            .clone()
            .unwrap_or_else(|| Path::new("out").join(&self.name))
    }

    /// Rejects the config with the offending field and a reason.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
        {
            return Err(Error::config(
                "name",
                "must be nonempty and use only [A-Za-z0-9._-]",
            ));
        }
        if self.orders.is_empty() {
            return Err(Error::config("orders", "n range is empty"));
        }
        if let Some(&n) = self.orders.iter().min() {
            if n < 1 {
                return Err(Error::config(
                    "orders",
                    format!("orders must be >= 1, found {n}"),
                ));
            }
        }
        if self.operator.n.is_some() {
            return Err(Error::config(
                "operator.n",
                "the swept order comes from `orders`; remove `n`",
            ));
        }
        if self.reference.family.needs_order() && self.reference.n.is_none() {
            return Err(Error::config(
                "reference.n",
                format!("family `{}` needs an order", self.reference.family),
            ));
        }
        for (field, spec) in [
            ("operator.scale", &self.operator),
            ("reference.scale", &self.reference),
        ] {
            if let Some(c) = spec.scale {
                if !(c.is_finite() && c >= 0.0) {
                    return Err(Error::config(
                        field,
                        format!("must be finite and >= 0, found {c}"),
                    ));
                }
            }
        }
        if let Some(names) = &self.corpus {
            if names.is_empty() {
                return Err(Error::config("corpus", "corpus subset is empty"));
            }
        }
        self.functions()?;
        for (field, v) in [
            ("grid.points", self.grid.points),
            ("grid.target_points", self.grid.target_points),
            ("grid.min_points", self.grid.min_points),
        ] {
            if let Some(m) = v {
                if m < 2 {
                    return Err(Error::config(
                        field,
                        format!("grid needs m >= 2 points, found {m}"),
                    ));
                }
            }
        }
        if self.grid.per_order && self.grid.points.is_some() {
            return Err(Error::config(
                "grid.points",
                "per_order grids are sized by `min_points`",
            ));
        }
        if !self.grid.per_order {
            let m = self.source_points();
            for n in self.sorted_orders() {
                let needed = self.operator.required_denominators(Some(n));
                let needed = needed
                    .into_iter()
                    .chain(self.reference.required_denominators(None));
                for d in needed {
                    if !(m - 1).is_multiple_of(d) {
                        return Err(Error::config(
                            "grid.points",
                            format!(
                                "m - 1 = {} is not divisible by {d} (needed at n = {n}); nodes j/{d} would fall \
                                 off-grid; use m - 1 a multiple of {}",
                                m - 1,
                                self.node_lcm()
                            ),
                        ));
                    }
                }
            }
        }
        if self.axioms.enabled && self.axioms.trials == 0 {
            return Err(Error::config("axioms.trials", "must be >= 1"));
        }
        if let Some(m) = self.axioms.grid_points {
            if m < 2 {
                return Err(Error::config(
                    "axioms.grid_points",
                    format!("grid needs m >= 2 points, found {m}"),
                ));
            }
        }
        let t = &self.tolerances;
        for (field, v) in [
            ("tolerances.tol_axiom", t.tol_axiom),
            ("tolerances.tol_bound_floor", t.tol_bound_floor),
            ("tolerances.bound_slack", t.bound_slack),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(
                    field,
                    format!("must be finite and >= 0, found {v}"),
                ));
            }
        }
        Ok(())
    }
}

/// One emitted file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    /// `pass`, or the failure that stopped the run.
    pub outcome: String,
    pub files: Vec<FileEntry>,
    pub timings: Vec<Timing>,
    pub config: ExperimentConfig,
}

impl RunManifest {
    pub fn passed(&self) -> bool {
        self.outcome == "pass"
    }
}

/// Result of [`run`]: where things went and what was found.
#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub tables: Vec<ConvergenceTable>,
    pub axioms: Vec<AxiomRow>,
    /// First failure, also recorded in the manifest.
    pub error: Option<Error>,
}

impl RunOutcome {
    pub fn into_result(self) -> Result<RunManifest> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.manifest),
        }
    }
}

/// One line of `axioms.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct AxiomRow {
    pub operator: String,
    pub n: Option<usize>,
    pub property: String,
    pub claimed: bool,
    pub verdict: Verdict,
    pub trials: usize,
    pub witness_check: Option<String>,
    pub violation: Option<f64>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_file(dir: &Path, name: &str, bytes: &[u8], files: &mut Vec<FileEntry>) -> Result<()> {
    fs::write(dir.join(name), bytes)?;
    files.push(FileEntry {
        path: name.to_string(),
        bytes: bytes.len() as u64,
        sha256: sha256_hex(bytes),
    });
    Ok(())
}

/// Axiom suite for the swept family at each order, then the reference.
pub fn axiom_suite(cfg: &ExperimentConfig) -> Result<Vec<AxiomRow>> {
    let check = CheckConfig {
        tol: cfg.tolerances.tol_axiom,
        ..CheckConfig::default()
    };
    let mut specs: Vec<OperatorSpec> = cfg
        .sorted_orders()
        .into_iter()
        .map(|n| cfg.operator.clone().with_n(n))
        .collect();
    specs.push(cfg.reference.clone());
    let mut rows = Vec::new();
    for spec in specs {
        let spec = match cfg.axioms.grid_points {
            Some(m) => spec.with_grid(m),
            None => spec,
        };
        let op = spec.build()?;
        for r in check_claims(&op, cfg.axioms.trials, cfg.axioms.seed, &check)? {
            rows.push(AxiomRow {
                operator: spec.label(),
                n: op.order(),
                property: r.property.to_string(),
                claimed: true,
                verdict: r.verdict,
                trials: r.trials,
                witness_check: r.witness.as_ref().map(|w| w.check.name().to_string()),
                violation: r.witness.as_ref().map(|w| w.violation),
            });
        }
    }
    Ok(rows)
}

/// Columns `operator, n, property, claimed, verdict, trials, witness_check, violation`.
pub fn write_axioms_csv<W: io::Write>(rows: &[AxiomRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "operator",
        "n",
        "property",
        "claimed",
        "verdict",
        "trials",
        "witness_check",
        "violation",
    ])?;
    for r in rows {
        w.write_record([
            r.operator.clone(),
            r.n.map(|n| n.to_string()).unwrap_or_default(),
            r.property.clone(),
            r.claimed.to_string(),
            r.verdict.to_string(),
            r.trials.to_string(),
            r.witness_check.clone().unwrap_or_default(),
            r.violation.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Long-format plot data: columns `series, n, value, log10_n, log10_value`
/// for the series `lhs`, `rhs`, `mu`. Nonpositive values get the marker
/// `zero` in place of a logarithm.
pub fn emit_plot_data<W: io::Write>(table: &ConvergenceTable, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["series", "n", "value", "log10_n", "log10_value"])?;
    for name in ["lhs", "rhs", "mu"] {
        for r in &table.rows {
            let v = match name {
                "lhs" => r.lhs,
                "rhs" => r.rhs,
                _ => r.mu,
            };
            let log_v = if v > 0.0 {
                v.log10().to_string()
            } else {
                "zero".to_string()
            };
            w.write_record([
                name.to_string(),
                r.n.to_string(),
                v.to_string(),
                (r.n as f64).log10().to_string(),
                log_v,
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Runs the axiom suite and the convergence sweeps, writing
///
/// - `axioms.csv`
/// - `convergence_<f>.csv` and `plot_<f>.csv` per corpus function
/// - `manifest.toml`, last
///
/// into the output directory. Failures (claimed axiom, bound, hypothesis)
/// are recorded in the manifest and returned in [`RunOutcome::error`].
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir)?;
    let functions = cfg.functions()?;
    let mut files = Vec::new();
    let mut timings = Vec::new();
    let mut error = None;

    let mut axioms = Vec::new();
    if cfg.axioms.enabled {
        let start = Instant::now();
        axioms = axiom_suite(cfg)?;
        let mut buf = Vec::new();
        write_axioms_csv(&axioms, &mut buf)?;
        write_file(&dir, "axioms.csv", &buf, &mut files)?;
        timings.push(Timing {
            stage: "axioms".into(),
            seconds: start.elapsed().as_secs_f64(),
        });
        if let Some(r) = axioms
            .iter()
            .find(|r| r.claimed && r.verdict == Verdict::Fail)
        {
            error = Some(Error::AxiomViolation {
                operator: r.operator.clone(),
                property: r.property.clone(),
                violation: r.violation.unwrap_or(f64::NAN),
            });
        }
    }

    let mut tables = Vec::new();
    if error.is_none() {
        let start = Instant::now();
        match sweep_tables(&cfg.sweep_spec(), &functions) {
            Ok(t) => tables = t,
            Err(e @ Error::Hypothesis { .. }) => error = Some(e),
            Err(e) => return Err(e),
        }
        for t in &tables {
            let mut buf = Vec::new();
            t.write_csv(&mut buf)?;
            write_file(
                &dir,
                &format!("convergence_{}.csv", t.function),
                &buf,
                &mut files,
            )?;
            let mut buf = Vec::new();
            emit_plot_data(t, &mut buf)?;
            write_file(&dir, &format!("plot_{}.csv", t.function), &buf, &mut files)?;
        }
        timings.push(Timing {
            stage: "sweeps".into(),
            seconds: start.elapsed().as_secs_f64(),
        });
        if error.is_none() {
            error = first_violation(&tables);
        }
    }

    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        outcome: error
            .as_ref()
            .map_or_else(|| "pass".to_string(), |e| e.to_string()),
        files,
        timings,
        config: cfg.clone(),
    };
    let text = toml::to_string(&manifest).expect("manifest serializes");
    fs::write(dir.join("manifest.toml"), text)?;
    Ok(RunOutcome {
        dir,
        manifest,
        tables,
        axioms,
        error,
    })
}

/// Recomputes every checksum listed in `dir/manifest.toml`; returns the
/// names of files whose contents no longer match.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(dir.join("manifest.toml"))?;
    let manifest: RunManifest = toml::from_str(&text)
        .map_err(|e| Error::config("manifest.toml", e.message().to_string()))?;
    let mut bad = Vec::new();
    for f in &manifest.files {
        match fs::read(dir.join(&f.path)) {
            Ok(bytes) if sha256_hex(&bytes) == f.sha256 => {}
            _ => bad.push(f.path.clone()),
        }
    }
    Ok(bad)
}

/// Operator families, corpus functions and axiom flags, one line each.
pub fn list_registry() -> String {
    let mut s = String::from("operator families:\n");
    for f in Family::ALL {
        let _ = writeln!(
            s,
            "  {:<24} {}  [{}]",
            f.name(),
            f.description(),
            f.provenance()
        );
    }
    s.push_str("warps (phi):\n");
    for p in [
        PhiSpec::Identity,
        PhiSpec::Quadratic,
        PhiSpec::Table {
            values: vec![0.0, 1.0],
        },
    ] {
        let (name, text) = match p {
            PhiSpec::Identity => ("identity", "phi(x) = x"),
            PhiSpec::Quadratic => ("quadratic", "phi(x) = x^2"),
            PhiSpec::Table { .. } => (
                "table",
                "piecewise linear through equally spaced knot values",
            ),
        };
        let _ = writeln!(s, "  {name:<24} {text}");
    }
    s.push_str("corpus functions:\n");
    for c in CorpusFn::ALL {
        let _ = writeln!(s, "  {:<24} {}", c.name(), c.formula());
    }
    s.push_str("axiom flags:\n");
    for a in Axiom::ALL {
        let _ = writeln!(s, "  {:<24} {}", a.name(), a.describe());
    }
    s
}
