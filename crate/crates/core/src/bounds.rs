//! Quantitative Korovkin estimates.
//!
//! For weakly nonlinear monotone `T_n, A: C(K) -> C(X)` with `A(1) > 0`:
//!
//! ```text
//! ‖T_n f − A f‖ ≤ M { ‖T_n 1 − A 1‖·‖A f‖ + (‖T_n(1)·A(1)‖ + 1)·ω(f, μ_n) }
//! M     = 1 / inf_X A(1)
//! μ_n²  = ‖ T_n(Σ pr²)·A(1) − 2 Σ_k A(−pr_k)·T_n(−pr_k) + A(Σ pr²)·T_n(1) ‖
//! ```
//!
//! Norms are maxima over the target grid `X`; `ω` is evaluated on `K`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::function_space::{
    lipschitz_estimate, modulus_of_continuity, sup_norm, test_functions, uniform_grid, CorpusFn,
    Domain, SampledFunction, TestFunctionSet, TOL_FLOOR,
};
use crate::operators::{lcm, OperatorHandle, OperatorSpec};

/// `T(1) = A(1) = 1` and `T(1) = A(1)` are detected to this accuracy.
const UNIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSettings {
    pub tol_floor: f64,
    /// Multiplier of `Lip(f)·mesh(K)` in `tol_bound`.
    pub slack: f64,
}

impl Default for BoundSettings {
    fn default() -> Self {
        BoundSettings {
            tol_floor: TOL_FLOOR,
            slack: 4.0,
        }
    }
}

impl BoundSettings {
    /// `tol_floor + slack · Lip(f) · mesh(K)`.
    pub fn tol_bound(&self, f: &SampledFunction) -> f64 {
        self.tol_from_lip(lipschitz_estimate(f), f.domain().mesh())
    }

    fn tol_from_lip(&self, lip: f64, mesh: f64) -> f64 {
        self.tol_floor + self.slack * lip * mesh
    }
}

/// `1e-9 + 4 Lip(f) mesh(K)`.
pub fn tol_bound(f: &SampledFunction) -> f64 {
    BoundSettings::default().tol_bound(f)
}

/// Every quantity of the estimate for one `(T_n, A, f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub n: usize,
    /// `1 / min_X A(1)`.
    pub m: f64,
    pub mu: f64,
    pub omega_f_mu: f64,
    /// `‖T_n f − A f‖`
    pub lhs: f64,
    pub rhs: f64,
    /// `‖A(1)A(Σ pr²) − Σ_k A(−pr_k)²‖`
    pub delta: f64,
    /// `T_n(1) = A(1) = 1` on the grid.
    pub unital_fast_path: bool,
    /// `2 ω(f, μ)`, recorded on the unital fast path.
    pub rhs_unital: Option<f64>,
    /// `M (‖A(1)²‖ + 1) ω(f, μ)`, recorded whenever `T_n(1) = A(1)`.
    pub rhs_equal_units: Option<f64>,
    pub margin: f64,
    pub tol_bound: f64,
    pub pass: bool,
}

/// Images of the test set `1, −pr_k, Σ pr²` under `T` and `A`.
#[derive(Debug, Clone)]
pub struct TestImages {
    pub t_one: SampledFunction,
    pub t_neg: Vec<SampledFunction>,
    pub t_sum_sq: SampledFunction,
    pub a_one: SampledFunction,
    pub a_neg: Vec<SampledFunction>,
    pub a_sum_sq: SampledFunction,
}

fn pointwise(len: usize, f: impl Fn(usize) -> f64) -> Vec<f64> {
    (0..len).map(f).collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

impl TestImages {
    pub fn new(t: &OperatorHandle, a: &OperatorHandle, tests: &TestFunctionSet) -> Result<Self> {
        check_pair(t, a)?;
        Ok(TestImages {
            t_one: t.apply(&tests.one_fn)?,
            t_neg: tests
                .neg_projections
                .iter()
                .map(|p| t.apply(p))
                .collect::<Result<_>>()?,
            t_sum_sq: t.apply(&tests.sum_squares)?,
            a_one: a.apply(&tests.one_fn)?,
            a_neg: tests
                .neg_projections
                .iter()
                .map(|p| a.apply(p))
                .collect::<Result<_>>()?,
            a_sum_sq: a.apply(&tests.sum_squares)?,
        })
    }

    fn len(&self) -> usize {
        self.a_one.values().len()
    }

    /// Pointwise `T(S)A(1) − 2 Σ A(−p)T(−p) + A(S)T(1)`.
    pub fn mu_squared_profile(&self) -> Vec<f64> {
        pointwise(self.len(), |i| {
            let cross: f64 = self
                .a_neg
                .iter()
                .zip(&self.t_neg)
                .map(|(a, t)| a.values()[i] * t.values()[i])
                .sum();
            self.t_sum_sq.values()[i] * self.a_one.values()[i] - 2.0 * cross
                + self.a_sum_sq.values()[i] * self.t_one.values()[i]
        })
    }

    pub fn mu(&self) -> f64 {
        max_abs(&self.mu_squared_profile()).sqrt()
    }

    /// Pointwise `A(1)A(S) − Σ_k A(−p_k)²`.
    pub fn delta_profile(&self) -> Vec<f64> {
        pointwise(self.len(), |i| {
            let sq: f64 = self
                .a_neg
                .iter()
                .map(|a| a.values()[i] * a.values()[i])
                .sum();
            self.a_one.values()[i] * self.a_sum_sq.values()[i] - sq
        })
    }

    pub fn delta(&self) -> f64 {
        max_abs(&self.delta_profile())
    }

    /// Sup-norm gap between the μ² expression and its decomposition
    ///
    /// ```text
    /// [T(S) − A(S)]A(1) − 2 Σ A(−p)[T(−p) − A(−p)] + [T(1) − A(1)]A(S) + 2Δ
    /// ```
    ///
    /// with the middle term multiplied by `middle_sign` (`-1` is the identity).
    pub(crate) fn decomposition_gap(&self, middle_sign: f64) -> f64 {
        let lhs = self.mu_squared_profile();
        let delta = self.delta_profile();
        let rhs = pointwise(self.len(), |i| {
            let a1 = self.a_one.values()[i];
            let a_s = self.a_sum_sq.values()[i];
            let middle: f64 = self
                .a_neg
                .iter()
                .zip(&self.t_neg)
                .map(|(a, t)| a.values()[i] * (t.values()[i] - a.values()[i]))
                .sum();
            (self.t_sum_sq.values()[i] - a_s) * a1
                + middle_sign * 2.0 * middle
                + (self.t_one.values()[i] - a1) * a_s
                + 2.0 * delta[i]
        });
        lhs.iter()
            .zip(&rhs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn check_pair(t: &OperatorHandle, a: &OperatorHandle) -> Result<()> {
    if !Domain::same(t.source_domain(), a.source_domain()) {
        return Err(Error::DomainMismatch(format!(
            "`{}` and `{}` have different source grids",
            t.name(),
            a.name()
        )));
    }
    if !Domain::same(t.target_domain(), a.target_domain()) {
        return Err(Error::DomainMismatch(format!(
            "`{}` and `{}` have different target grids",
            t.name(),
            a.name()
        )));
    }
    Ok(())
}

fn m_from_unit_image(a_one: &SampledFunction) -> Result<f64> {
    let (index, min) = a_one.min_value();
    if min <= 0.0 {
        return Err(Error::Hypothesis { min, index });
    }
    Ok(1.0 / min)
}

/// `1 / min_X A(1)`; fails unless `A(1)` is strictly positive.
pub fn compute_m(a: &OperatorHandle) -> Result<f64> {
    m_from_unit_image(&a.apply(&SampledFunction::constant(a.source_domain(), 1.0)?)?)
}

/// `μ_n` from its defining expression.
pub fn compute_mu(t: &OperatorHandle, a: &OperatorHandle) -> Result<f64> {
    check_pair(t, a)?;
    Ok(TestImages::new(t, a, &test_functions(t.source_domain()))?.mu())
}

/// `‖A(1)A(Σ pr²) − Σ_k A(−pr_k)²‖`; zero certifies the structural
/// hypothesis on the limit operator.
pub fn compute_delta(a: &OperatorHandle) -> Result<f64> {
    Ok(TestImages::new(a, a, &test_functions(a.source_domain()))?.delta())
}

/// Sup-norm difference between the two sides of the algebraic decomposition
/// of the `μ²` expression; an identity, so the result is rounding noise.
pub fn remark1_decomposition_check(t: &OperatorHandle, a: &OperatorHandle) -> Result<f64> {
    Ok(TestImages::new(t, a, &test_functions(t.source_domain()))?.decomposition_gap(-1.0))
}

/// Shares the test set on `K` across many reports.
pub struct BoundEvaluator {
    source: Arc<Domain>,
    tests: TestFunctionSet,
    settings: BoundSettings,
}

impl BoundEvaluator {
    pub fn new(source: &Arc<Domain>) -> Self {
        Self::with_settings(source, BoundSettings::default())
    }

    pub fn with_settings(source: &Arc<Domain>, settings: BoundSettings) -> Self {
        BoundEvaluator {
            source: source.clone(),
            tests: test_functions(source),
            settings,
        }
    }

    pub fn settings(&self) -> &BoundSettings {
        &self.settings
    }

    pub fn images(&self, t: &OperatorHandle, a: &OperatorHandle) -> Result<TestImages> {
        if !Domain::same(t.source_domain(), &self.source) {
            return Err(Error::DomainMismatch(
                "operator source differs from the evaluator grid".into(),
            ));
        }
        TestImages::new(t, a, &self.tests)
    }

    pub fn report(
        &self,
        t: &OperatorHandle,
        a: &OperatorHandle,
        f: &SampledFunction,
    ) -> Result<BoundReport> {
        let images = self.images(t, a)?;
        let m = m_from_unit_image(&images.a_one)?;
        self.assemble(t, a, &images, f, images.mu(), m, None)
    }

    /// Fills a report from precomputed pieces. `lip` is `Lip(f)` on `K` when
    /// the caller already has it.
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        &self,
        t: &OperatorHandle,
        a: &OperatorHandle,
        images: &TestImages,
        f: &SampledFunction,
        mu: f64,
        m: f64,
        lip: Option<f64>,
    ) -> Result<BoundReport> {
        let tf = t.apply(f)?;
        let af = a.apply(f)?;
        let lhs = sup_norm(&tf.sub(&af)?);
        let t1 = images.t_one.values();
        let a1 = images.a_one.values();
        let unit_gap = t1
            .iter()
            .zip(a1)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        let unit_product = t1
            .iter()
            .zip(a1)
            .map(|(x, y)| (x * y).abs())
            .fold(0.0, f64::max);
        // ω(f, 0) = 0: the μ = 0 branch leaves only the T(1) − A(1) term
        let omega = if mu == 0.0 {
            0.0
        } else {
            modulus_of_continuity(f, mu)?
        };
        let rhs = m * (unit_gap * sup_norm(&af) + (unit_product + 1.0) * omega);
        let unital_fast_path = t1.iter().chain(a1).all(|v| (v - 1.0).abs() <= UNIT_TOL);
        let rhs_equal_units = (unit_gap <= UNIT_TOL).then(|| {
            let a1_sq = a1.iter().map(|v| v * v).fold(0.0, f64::max);
            m * (a1_sq + 1.0) * omega
        });
        let lip = lip.unwrap_or_else(|| lipschitz_estimate(f));
        let tol = self.settings.tol_from_lip(lip, f.domain().mesh());
        Ok(BoundReport {
            n: t.order().unwrap_or(0),
            m,
            mu,
            omega_f_mu: omega,
            lhs,
            rhs,
            delta: images.delta(),
            unital_fast_path,
            rhs_unital: unital_fast_path.then_some(2.0 * omega),
            rhs_equal_units,
            margin: rhs - lhs,
            tol_bound: tol,
            pass: lhs <= rhs + tol,
        })
    }
}

/// Full estimate for one `(T_n, A, f)`.
pub fn theorem2_report(
    t: &OperatorHandle,
    a: &OperatorHandle,
    f: &SampledFunction,
) -> Result<BoundReport> {
    check_pair(t, a)?;
    BoundEvaluator::new(t.source_domain()).report(t, a, f)
}

/// One-dimensional form built from `e_0 = 1, e_1 = x, e_2 = x²`:
/// `μ_n² = ‖T_n(e_2)A(1) − 2 T_n(−e_1)A(−e_1) + T_n(1)A(e_2)‖`.
pub fn corollary1_report(
    t: &OperatorHandle,
    a: &OperatorHandle,
    f: &SampledFunction,
) -> Result<BoundReport> {
    check_pair(t, a)?;
    let k = t.source_domain();
    let x = k.coords_1d().ok_or_else(|| {
        Error::arg(
            "K",
            "the one-dimensional form needs a one-dimensional source grid",
        )
    })?;
    let e0 = SampledFunction::constant(k, 1.0)?;
    let neg_e1 = SampledFunction::new(k.clone(), x.iter().map(|v| -v).collect())?;
    let e2 = SampledFunction::new(k.clone(), x.iter().map(|v| v * v).collect())?;
    let (t1, te1, te2) = (t.apply(&e0)?, t.apply(&neg_e1)?, t.apply(&e2)?);
    let (a1, ae1, ae2) = (a.apply(&e0)?, a.apply(&neg_e1)?, a.apply(&e2)?);
    let mu_sq = pointwise(t1.values().len(), |i| {
        te2.values()[i] * a1.values()[i] - 2.0 * te1.values()[i] * ae1.values()[i]
            + t1.values()[i] * ae2.values()[i]
    });
    let mu = max_abs(&mu_sq).sqrt();
    let m = m_from_unit_image(&a1)?;
    let images = TestImages {
        t_one: t1,
        t_neg: vec![te1],
        t_sum_sq: te2,
        a_one: a1,
        a_neg: vec![ae1],
        a_sum_sq: ae2,
    };
    let eval = BoundEvaluator {
        source: k.clone(),
        tests: test_functions(k),
        settings: BoundSettings::default(),
    };
    eval.assemble(t, a, &images, f, mu, m, None)
}

/// Least-squares slope of `ln v` against `ln n`, skipping nonpositive values.
pub fn loglog_slope(points: &[(usize, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(n, v)| *n > 0 && *v > 0.0)
        .map(|&(n, v)| ((n as f64).ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let len = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / len;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / len;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Log-log slopes of `lhs` and `rhs` against `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub n_min: usize,
    pub n_max: usize,
    pub lhs_slope: Option<f64>,
    pub rhs_slope: Option<f64>,
}

/// One [`BoundReport`] per order `n`, for a fixed `(family, A, f)`.
#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub operator: String,
    pub reference: String,
    pub function: CorpusFn,
    pub rows: Vec<BoundReport>,
}

impl ConvergenceTable {
    /// Fit over the rows with `n_min <= n <= n_max`.
    pub fn fit_between(&self, n_min: usize, n_max: usize) -> RateFit {
        let sel: Vec<&BoundReport> = self
            .rows
            .iter()
            .filter(|r| r.n >= n_min && r.n <= n_max)
            .collect();
        RateFit {
            n_min,
            n_max,
            lhs_slope: loglog_slope(&sel.iter().map(|r| (r.n, r.lhs)).collect::<Vec<_>>()),
            rhs_slope: loglog_slope(&sel.iter().map(|r| (r.n, r.rhs)).collect::<Vec<_>>()),
        }
    }

    /// Fit over the upper half of the rows.
    pub fn rate_fit(&self) -> Option<RateFit> {
        let upper = &self.rows[self.rows.len() / 2..];
        let (first, last) = (upper.first()?, upper.last()?);
        Some(self.fit_between(first.n, last.n))
    }

    /// Columns `n, M, mu, omega_f_mu, lhs, rhs, delta, margin, pass`, then a
    /// `# rate_fit ...` comment row.
    pub fn write_csv<W: io::Write>(&self, mut writer: W) -> Result<()> {
        {
            let mut w = csv::Writer::from_writer(&mut writer);
            w.write_record([
                "n",
                "M",
                "mu",
                "omega_f_mu",
                "lhs",
                "rhs",
                "delta",
                "margin",
                "pass",
            ])?;
            for r in &self.rows {
                w.write_record([
                    r.n.to_string(),
                    r.m.to_string(),
                    r.mu.to_string(),
                    r.omega_f_mu.to_string(),
                    r.lhs.to_string(),
                    r.rhs.to_string(),
                    r.delta.to_string(),
                    r.margin.to_string(),
                    r.pass.to_string(),
                ])?;
            }
            w.flush()?;
        }
        let slope = |s: Option<f64>| s.map_or_else(|| "na".to_string(), |v| v.to_string());
        let mut line = String::from("# rate_fit");
        match self.rate_fit() {
            Some(fit) => {
                let _ = write!(
                    line,
                    " n_min={} n_max={} lhs_slope={} rhs_slope={}",
                    fit.n_min,
                    fit.n_max,
                    slope(fit.lhs_slope),
                    slope(fit.rhs_slope)
                );
            }
            None => line.push_str(" na"),
        }
        writeln!(writer, "{line}")?;
        Ok(())
    }
}

/// How grids are chosen across a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridPlan {
    /// One uniform `[0, 1]` source grid for every order.
    Fixed {
        source_points: usize,
        target_points: usize,
    },
    /// Per order, the smallest grid with `m − 1` a multiple of every node
    /// denominator (and of 2) holding at least `min_source_points` points.
    PerOrder {
        min_source_points: usize,
        target_points: usize,
    },
}

impl GridPlan {
    pub fn source_points(&self, spec: &SweepSpec, n: usize) -> usize {
        match *self {
            GridPlan::Fixed { source_points, .. } => source_points,
            GridPlan::PerOrder {
                min_source_points, ..
            } => {
                let l = lcm(spec.family.node_lcm(Some(n)), spec.reference.node_lcm(None));
                let need = min_source_points.saturating_sub(1).max(1);
                l * need.div_ceil(l) + 1
            }
        }
    }

    pub fn target_points(&self) -> usize {
        match *self {
            GridPlan::Fixed { target_points, .. } | GridPlan::PerOrder { target_points, .. } => {
                target_points
            }
        }
    }
}

/// Sweep description: `family` is instantiated at each order.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub family: OperatorSpec,
    pub reference: OperatorSpec,
    pub orders: Vec<usize>,
    pub grid: GridPlan,
    pub settings: BoundSettings,
}

impl SweepSpec {
    pub fn new(
        family: OperatorSpec,
        reference: OperatorSpec,
        orders: Vec<usize>,
        grid: GridPlan,
    ) -> Self {
        SweepSpec {
            family,
            reference,
            orders,
            grid,
            settings: BoundSettings::default(),
        }
    }
}

struct GridPair {
    source: Arc<Domain>,
    target: Arc<Domain>,
}

fn grids_for(
    spec: &SweepSpec,
    n: usize,
    cache: &mut HashMap<usize, Arc<GridPair>>,
) -> Result<Arc<GridPair>> {
    let m = spec.grid.source_points(spec, n);
    if let Some(g) = cache.get(&m) {
        return Ok(g.clone());
    }
    let source = uniform_grid(0.0, 1.0, m)?;
    let mx = spec.grid.target_points();
    let target = if spec.family.is_endomorphism() || mx == m {
        source.clone()
    } else {
        uniform_grid(0.0, 1.0, mx)?
    };
    let g = Arc::new(GridPair { source, target });
    cache.insert(m, g.clone());
    Ok(g)
}

/// Runs `spec` for one corpus function.
pub fn convergence_sweep(spec: &SweepSpec, function: CorpusFn) -> Result<ConvergenceTable> {
    Ok(convergence_sweeps(spec, &[function])?.remove(0))
}

/// Runs `spec` for several corpus functions. Fails with
/// [`Error::BoundViolation`] at the smallest offending `n`.
pub fn convergence_sweeps(
    spec: &SweepSpec,
    functions: &[CorpusFn],
) -> Result<Vec<ConvergenceTable>> {
    let tables = sweep_tables(spec, functions)?;
    match first_violation(&tables) {
        Some(e) => Err(e),
        None => Ok(tables),
    }
}

/// The [`Error::BoundViolation`] for the smallest failing `n`, if any.
pub fn first_violation(tables: &[ConvergenceTable]) -> Option<Error> {
    tables
        .iter()
        .flat_map(|t| t.rows.iter())
        .filter(|r| !r.pass)
        .min_by_key(|r| r.n)
        .map(|r| Error::BoundViolation {
            n: r.n,
            lhs: r.lhs,
            rhs: r.rhs,
            tol: r.tol_bound,
        })
}

/// Like [`convergence_sweeps`] but keeps failing rows instead of aborting.
/// Operator builds and test-set images are shared across functions.
pub fn sweep_tables(spec: &SweepSpec, functions: &[CorpusFn]) -> Result<Vec<ConvergenceTable>> {
    if spec.orders.is_empty() {
        return Err(Error::arg("orders", "at least one order n is required"));
    }
    if functions.is_empty() {
        return Err(Error::arg(
            "functions",
            "at least one corpus function is required",
        ));
    }
    let mut orders = spec.orders.clone();
    orders.sort_unstable();
    orders.dedup();

    let mut cache = HashMap::new();
    let mut per_order = Vec::with_capacity(orders.len());
    for &n in &orders {
        per_order.push((n, grids_for(spec, n, &mut cache)?));
    }
    let mut evaluators: HashMap<usize, Arc<BoundEvaluator>> = HashMap::new();
    let mut samples: HashMap<(usize, CorpusFn), Arc<(SampledFunction, f64)>> = HashMap::new();
    let mut jobs = Vec::new();
    for (n, g) in &per_order {
        let m = g.source.len();
        let eval = evaluators
            .entry(m)
            .or_insert_with(|| Arc::new(BoundEvaluator::with_settings(&g.source, spec.settings)))
            .clone();
        let fs = functions
            .iter()
            .map(|&c| -> Result<Arc<(SampledFunction, f64)>> {
                if let Some(s) = samples.get(&(m, c)) {
                    return Ok(s.clone());
                }
                let f = c.sample(&g.source)?;
                let lip = lipschitz_estimate(&f);
                let s = Arc::new((f, lip));
                samples.insert((m, c), s.clone());
                Ok(s)
            })
            .collect::<Result<Vec<_>>>()?;
        jobs.push((*n, g.clone(), eval, fs));
    }

    let rows: Vec<Vec<BoundReport>> = jobs
        .into_par_iter()
        .map(|(n, g, eval, fs)| -> Result<Vec<BoundReport>> {
            let t = spec
                .family
                .clone()
                .with_n(n)
                .build_on(&g.source, &g.target)?;
            let a = spec.reference.build_on(&g.source, t.target_domain())?;
            check_pair(&t, &a)?;
            let images = eval.images(&t, &a)?;
            let m = m_from_unit_image(&images.a_one)?;
            let mu = images.mu();
            fs.iter()
                .map(|s| {
                    let mut r = eval.assemble(&t, &a, &images, &s.0, mu, m, Some(s.1))?;
                    r.n = n;
                    Ok(r)
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let operator = spec.family.label();
    let reference = spec.reference.label();
    Ok(functions
        .iter()
        .enumerate()
        .map(|(j, &c)| ConvergenceTable {
            operator: operator.clone(),
            reference: reference.clone(),
            function: c,
            rows: rows.iter().map(|per_n| per_n[j].clone()).collect(),
        })
        .collect())
}
