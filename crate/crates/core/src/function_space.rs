//! Sampled stand-ins for `C(K)` with `K` a compact subset of the nonnegative
//! orthant: point sets with mesh metadata, functions sampled on them, the
//! sup-norm and the modulus of continuity.
//!
//! Every continuum extremum becomes a maximum over grid points. Pair
//! distances are compared against `delta` with a relative slack of `1e-9`
//! (plus `1e-13` absolute) so that grid pairs whose exact distance equals
//! `delta` are never dropped because of coordinate rounding.

use std::fmt;
use std::io;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Absolute floor of every grid tolerance.
pub const TOL_FLOOR: f64 = 1e-9;

/// Tolerance used when looking up a coordinate on a grid.
pub(crate) const LOCATE_TOL: f64 = 1e-12;

pub(crate) fn reach(delta: f64) -> f64 {
    delta * (1.0 + 1e-9) + 1e-13
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Uniform {
    start: f64,
    end: f64,
    intervals: usize,
}

impl Uniform {
    fn step(&self) -> f64 {
        (self.end - self.start) / self.intervals as f64
    }

    fn coord(&self, i: usize) -> f64 {
        if i == self.intervals {
            self.end
        } else {
            self.start + (self.end - self.start) * (i as f64 / self.intervals as f64)
        }
    }
}

/// A finite point set in the nonnegative orthant.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    coords: Vec<f64>,
    dim: usize,
    mesh: f64,
    uniform: Option<Uniform>,
    sorted_1d: bool,
}

impl Domain {
    /// Builds a domain from explicit points, checking the orthant,
    /// dimension and distinctness invariants.
    pub fn new(points: Vec<Vec<f64>>, mesh: f64) -> Result<Arc<Domain>> {
        let dim = points.first().map(Vec::len).unwrap_or(0);
        if points.is_empty() {
            return Err(Error::InvalidDomain("no points".into()));
        }
        if dim == 0 {
            return Err(Error::InvalidDomain(
                "points must have at least one coordinate".into(),
            ));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidDomain(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(coords, dim, mesh)
    }

    /// Builds a domain from row-major coordinates.
    pub fn from_flat(coords: Vec<f64>, dim: usize, mesh: f64) -> Result<Arc<Domain>> {
        if dim == 0 || coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidDomain(format!(
                "{} coordinates cannot be split into points of dimension {dim}",
                coords.len()
            )));
        }
        if !(mesh.is_finite() && mesh >= 0.0) {
            return Err(Error::InvalidDomain(format!(
                "mesh must be finite and >= 0, got {mesh}"
            )));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidDomain(format!(
                "coordinate {} of point {} is {} (must be finite and >= 0)",
                pos % dim,
                pos / dim,
                coords[pos]
            )));
        }
        let len = coords.len() / dim;
        let mut order: Vec<usize> = (0..len).collect();
        let pt = |i: usize| &coords[i * dim..(i + 1) * dim];
        order.sort_by(|&a, &b| pt(a).partial_cmp(pt(b)).expect("finite coordinates"));
        if let Some(w) = order.windows(2).find(|w| pt(w[0]) == pt(w[1])) {
            return Err(Error::InvalidDomain(format!(
                "points {} and {} coincide",
                w[0].min(w[1]),
                w[0].max(w[1])
            )));
        }
        let sorted_1d = dim == 1 && coords.windows(2).all(|w| w[0] < w[1]);
        Ok(Arc::new(Domain {
            coords,
            dim,
            mesh,
            uniform: None,
            sorted_1d,
        }))
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    /// Coordinates of a 1-D domain.
    pub fn coords_1d(&self) -> Option<&[f64]> {
        (self.dim == 1).then_some(&self.coords[..])
    }

    /// Strictly increasing 1-D coordinates, if the domain has that layout.
    pub fn sorted_coords(&self) -> Option<&[f64]> {
        self.sorted_1d.then_some(&self.coords[..])
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform.is_some()
    }

    /// Distance between two points of the domain.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        euclidean(self.point(i), self.point(j))
    }

    /// Index of the point equal to `x` within `1e-12`.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.dim {
            return None;
        }
        if self.dim == 1 {
            let i = self.nearest_1d(x[0])?;
            return ((self.coords[i] - x[0]).abs() <= LOCATE_TOL).then_some(i);
        }
        self.points().position(|p| euclidean(p, x) <= LOCATE_TOL)
    }

    /// Index of the grid point nearest to `t` on a 1-D domain.
    pub fn nearest_1d(&self, t: f64) -> Option<usize> {
        if self.dim != 1 {
            return None;
        }
        if let Some(u) = self.uniform {
            let r = ((t - u.start) / u.step()).round();
            let i = r.clamp(0.0, u.intervals as f64) as usize;
            // Rounding of the division can land one cell off; check neighbours.
            let best = [i.saturating_sub(1), i, (i + 1).min(u.intervals)]
                .into_iter()
                .min_by(|&a, &b| {
                    (self.coords[a] - t)
                        .abs()
                        .partial_cmp(&(self.coords[b] - t).abs())
                        .unwrap()
                })
                .unwrap();
            return Some(best);
        }
        if self.sorted_1d {
            let c = &self.coords;
            let j = c.partition_point(|&v| v < t);
            let best = match j {
                0 => 0,
                j if j == c.len() => c.len() - 1,
                j if (c[j] - t).abs() < (t - c[j - 1]).abs() => j,
                j => j - 1,
            };
            return Some(best);
        }
        self.coords
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().partial_cmp(&(b.1 - t).abs()).unwrap())
            .map(|(i, _)| i)
    }

    pub(crate) fn same(a: &Arc<Domain>, b: &Arc<Domain>) -> bool {
        Arc::ptr_eq(a, b) || **a == **b
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `m` equally spaced points from `a` to `b` inclusive.
pub fn uniform_grid(a: f64, b: f64, m: usize) -> Result<Arc<Domain>> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::arg("a, b", "endpoints must be finite"));
    }
    if a < 0.0 {
        return Err(Error::arg(
            "a",
            format!("{a} lies outside the nonnegative orthant"),
        ));
    }
    if a >= b {
        return Err(Error::arg("b", format!("need a < b, got a = {a}, b = {b}")));
    }
    if m < 2 {
        return Err(Error::arg("m", format!("need at least 2 points, got {m}")));
    }
    let u = Uniform {
        start: a,
        end: b,
        intervals: m - 1,
    };
    let coords: Vec<f64> = (0..m).map(|i| u.coord(i)).collect();
    Ok(Arc::new(Domain {
        coords,
        dim: 1,
        mesh: (b - a) / (2.0 * (m - 1) as f64),
        uniform: Some(u),
        sorted_1d: true,
    }))
}

/// Cartesian product of 1-D grids in lexicographic order.
pub fn product_grid(factors: &[Arc<Domain>]) -> Result<Arc<Domain>> {
    if factors.is_empty() {
        return Err(Error::arg("grids", "at least one factor is required"));
    }
    if let Some(i) = factors.iter().position(|f| f.dim() != 1) {
        return Err(Error::arg(
            "grids",
            format!("factor {i} is not one-dimensional"),
        ));
    }
    if factors.len() == 1 {
        return Ok(factors[0].clone());
    }
    let dim = factors.len();
    let total: usize = factors.iter().map(|f| f.len()).product();
    let mut coords = Vec::with_capacity(total * dim);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        for (k, f) in factors.iter().enumerate() {
            coords.push(f.coords[idx[k]]);
        }
        for k in (0..dim).rev() {
            idx[k] += 1;
            if idx[k] < factors[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
    let mesh = factors.iter().map(|f| f.mesh * f.mesh).sum::<f64>().sqrt();
    Ok(Arc::new(Domain {
        coords,
        dim,
        mesh,
        uniform: None,
        sorted_1d: false,
    }))
}

/// Real values attached to the points of a [`Domain`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    domain: Arc<Domain>,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(domain: Arc<Domain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::InvalidFunction(format!(
                "{} values for a domain of {} points",
                values.len(),
                domain.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction(format!(
                "value at point {i} is {}",
                values[i]
            )));
        }
        Ok(SampledFunction { domain, values })
    }

    pub fn from_fn(domain: &Arc<Domain>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = domain.points().map(f).collect();
        Self::new(domain.clone(), values)
    }

    pub fn constant(domain: &Arc<Domain>, c: f64) -> Result<Self> {
        Self::new(domain.clone(), vec![c; domain.len()])
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, op: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.domain.clone(),
            self.values.iter().map(|&v| op(v)).collect(),
        )
    }

    pub fn zip_with(&self, other: &SampledFunction, op: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if !Domain::same(&self.domain, &other.domain) {
            return Err(Error::DomainMismatch(
                "pointwise operation on different domains".into(),
            ));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| op(a, b))
            .collect();
        Self::new(self.domain.clone(), values)
    }

    pub fn add(&self, other: &SampledFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SampledFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &SampledFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        self.map(|v| c * v)
    }

    pub fn abs(&self) -> Result<Self> {
        self.map(f64::abs)
    }

    pub fn min_value(&self) -> (usize, f64) {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (i, v)| if v < acc.1 { (i, v) } else { acc },
            )
    }

    /// Writes `x_1, ..., x_N, value` rows with shortest round-trip decimals.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.domain.dim).map(|k| format!("x_{k}")).collect();
        header.push("value".into());
        w.write_record(&header)?;
        for (p, v) in self.domain.points().zip(&self.values) {
            let mut row: Vec<String> = p.iter().map(|c| c.to_string()).collect();
            row.push(v.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the format written by [`SampledFunction::write_csv`].
    pub fn read_csv<R: io::Read>(reader: R, mesh: f64) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        let dim = headers
            .len()
            .checked_sub(1)
            .filter(|&d| d > 0)
            .ok_or_else(|| {
                Error::InvalidFunction(
                    "csv needs at least one coordinate column and `value`".into(),
                )
            })?;
        if headers.get(dim) != Some("value") {
            return Err(Error::InvalidFunction(
                "last csv column must be `value`".into(),
            ));
        }
        let mut coords = Vec::new();
        let mut values = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            for (k, field) in rec.iter().enumerate() {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidFunction(format!("unparsable number `{field}`")))?;
                if k < dim {
                    coords.push(v);
                } else {
                    values.push(v);
                }
            }
        }
        let domain = Domain::from_flat(coords, dim, mesh)?;
        Self::new(domain, values)
    }
}

/// `max_x |f(x)|`.
pub fn sup_norm(f: &SampledFunction) -> f64 {
    f.values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Largest oscillation `|f(x) - f(y)|` over pairs with `|x - y| <= delta`,
/// with `ω(f, 0) = 0`.
pub fn modulus_of_continuity(f: &SampledFunction, delta: f64) -> Result<f64> {
    if delta.is_nan() || delta < 0.0 {
        return Err(Error::arg("delta", format!("must be >= 0, got {delta}")));
    }
    if delta == 0.0 {
        return Ok(0.0);
    }
    let d = &f.domain;
    let v = &f.values;
    if let Some(u) = d.uniform {
        let steps = (reach(delta) / u.step()).floor();
        let steps = if steps >= u.intervals as f64 {
            u.intervals
        } else {
            steps as usize
        };
        return Ok(window_oscillation(v, steps));
    }
    if let Some(x) = d.sorted_coords() {
        return Ok(sorted_oscillation(x, v, reach(delta)));
    }
    Ok(pairwise_oscillation(d, v, reach(delta)))
}

/// Max of `max - min` over every run of `steps + 1` consecutive values.
///
/// Block prefix/suffix extrema (van Herk / Gil-Werman), O(len) time and
/// O(steps) scratch.
fn window_oscillation(v: &[f64], steps: usize) -> f64 {
    let len = v.len();
    if steps == 0 || len < 2 {
        return 0.0;
    }
    if steps >= len - 1 {
        let (lo, hi) = v
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            });
        return hi - lo;
    }
    let width = steps + 1;
    let starts = len - steps;
    let mut suf_max = vec![0.0; width];
    let mut suf_min = vec![0.0; width];
    let mut best = 0.0f64;
    let mut block = 0;
    while block < starts {
        let end = (block + width).min(len);
        // suffix extrema of v[block..end]
        let n = end - block;
        suf_max[n - 1] = v[end - 1];
        suf_min[n - 1] = v[end - 1];
        for k in (0..n - 1).rev() {
            let x = v[block + k];
            suf_max[k] = fmax(x, suf_max[k + 1]);
            suf_min[k] = fmin(x, suf_min[k + 1]);
        }
        // running prefix extrema of the following block
        let mut pre_max = f64::NEG_INFINITY;
        let mut pre_min = f64::INFINITY;
        for k in 0..width {
            let start = block + k;
            if start >= starts {
                break;
            }
            let last = start + steps;
            let (hi, lo) = if last < end {
                (suf_max[k], suf_min[k])
            } else {
                let x = v[last];
                pre_max = fmax(pre_max, x);
                pre_min = fmin(pre_min, x);
                (fmax(suf_max[k], pre_max), fmin(suf_min[k], pre_min))
            };
            best = fmax(best, hi - lo);
        }
        block += width;
    }
    best
}

// Values are finite, so the NaN handling of `f64::max` is not needed.
#[inline(always)]
fn fmax(a: f64, b: f64) -> f64 {
    if a > b {
        a
    } else {
        b
    }
}

#[inline(always)]
fn fmin(a: f64, b: f64) -> f64 {
    if a < b {
        a
    } else {
        b
    }
}

/// Two-pointer sliding window over strictly increasing coordinates.
fn sorted_oscillation(x: &[f64], v: &[f64], reach: f64) -> f64 {
    use std::collections::VecDeque;
    let mut maxq: VecDeque<usize> = VecDeque::new();
    let mut minq: VecDeque<usize> = VecDeque::new();
    let mut best = 0.0f64;
    let mut hi = 0;
    for lo in 0..x.len() {
        while hi < x.len() && x[hi] - x[lo] <= reach {
            while maxq.back().is_some_and(|&b| v[b] <= v[hi]) {
                maxq.pop_back();
            }
            maxq.push_back(hi);
            while minq.back().is_some_and(|&b| v[b] >= v[hi]) {
                minq.pop_back();
            }
            minq.push_back(hi);
            hi += 1;
        }
        while maxq.front().is_some_and(|&f| f < lo) {
            maxq.pop_front();
        }
        while minq.front().is_some_and(|&f| f < lo) {
            minq.pop_front();
        }
        best = best.max(v[maxq[0]] - v[minq[0]]);
    }
    best
}

fn pairwise_oscillation(d: &Domain, v: &[f64], reach: f64) -> f64 {
    (0..d.len())
        .into_par_iter()
        .map(|i| {
            let p = d.point(i);
            (i + 1..d.len())
                .filter(|&j| euclidean(p, d.point(j)) <= reach)
                .fold(0.0f64, |m, j| m.max((v[i] - v[j]).abs()))
        })
        .reduce(|| 0.0, f64::max)
}

/// Largest discrete difference quotient `|f(x) - f(y)| / |x - y|`.
pub fn lipschitz_estimate(f: &SampledFunction) -> f64 {
    let d = &f.domain;
    let v = &f.values;
    if let Some(x) = d.sorted_coords() {
        // on a line the largest quotient is attained by neighbours
        return x
            .windows(2)
            .zip(v.windows(2))
            .map(|(xs, vs)| (vs[1] - vs[0]).abs() / (xs[1] - xs[0]))
            .fold(0.0, f64::max);
    }
    (0..d.len())
        .into_par_iter()
        .map(|i| {
            (i + 1..d.len())
                .map(|j| (v[i] - v[j]).abs() / d.distance(i, j))
                .fold(0.0f64, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// `1e-9 + 2 Lip(f) mesh`: separates float noise from sampling error.
pub fn tol_grid(f: &SampledFunction) -> f64 {
    TOL_FLOOR + 2.0 * lipschitz_estimate(f) * f.domain.mesh()
}

/// The Korovkin test set `1, -pr_1, ..., -pr_N, Σ pr_k²` on a domain.
#[derive(Debug, Clone)]
pub struct TestFunctionSet {
    pub one_fn: SampledFunction,
    pub neg_projections: Vec<SampledFunction>,
    pub sum_squares: SampledFunction,
}

pub fn test_functions(domain: &Arc<Domain>) -> TestFunctionSet {
    let build = |values: Vec<f64>| SampledFunction {
        domain: domain.clone(),
        values,
    };
    let neg_projections = (0..domain.dim())
        .map(|k| build(domain.points().map(|p| -p[k]).collect()))
        .collect();
    TestFunctionSet {
        one_fn: build(vec![1.0; domain.len()]),
        neg_projections,
        sum_squares: build(
            domain
                .points()
                .map(|p| p.iter().map(|c| c * c).sum())
                .collect(),
        ),
    }
}

/// Closed-form functions on `[0, 1]` used as the acceptance corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CorpusFn {
    ConstOne,
    Identity,
    Square,
    AbsCenter,
    SinScaled,
    LipschitzSawtooth,
    StepSmooth,
}

impl CorpusFn {
    pub const ALL: [CorpusFn; 7] = [
        CorpusFn::ConstOne,
        CorpusFn::Identity,
        CorpusFn::Square,
        CorpusFn::AbsCenter,
        CorpusFn::SinScaled,
        CorpusFn::LipschitzSawtooth,
        CorpusFn::StepSmooth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CorpusFn::ConstOne => "const_one",
            CorpusFn::Identity => "identity",
            CorpusFn::Square => "square",
            CorpusFn::AbsCenter => "abs_center",
            CorpusFn::SinScaled => "sin_scaled",
            CorpusFn::LipschitzSawtooth => "lipschitz_sawtooth",
            CorpusFn::StepSmooth => "step_smooth",
        }
    }

    pub fn formula(self) -> &'static str {
        match self {
            CorpusFn::ConstOne => "1",
            CorpusFn::Identity => "x",
            CorpusFn::Square => "x^2",
            CorpusFn::AbsCenter => "|x - 1/2|",
            CorpusFn::SinScaled => "sin(pi x)",
            CorpusFn::LipschitzSawtooth => "distance from x to the nearest multiple of 1/4",
            CorpusFn::StepSmooth => "1 / (1 + exp(-20 (x - 1/2)))",
        }
    }

    pub fn eval(self, x: f64) -> f64 {
        match self {
            CorpusFn::ConstOne => 1.0,
            CorpusFn::Identity => x,
            CorpusFn::Square => x * x,
            CorpusFn::AbsCenter => (x - 0.5).abs(),
            CorpusFn::SinScaled => (std::f64::consts::PI * x).sin(),
            CorpusFn::LipschitzSawtooth => {
                let r = x / 0.25;
                (r - r.round()).abs() * 0.25
            }
            CorpusFn::StepSmooth => 1.0 / (1.0 + (-20.0 * (x - 0.5)).exp()),
        }
    }

    pub fn sample(self, domain: &Arc<Domain>) -> Result<SampledFunction> {
        let x = domain.coords_1d().ok_or_else(|| {
            Error::arg(
                "domain",
                format!("corpus function `{}` needs a 1-D domain", self.name()),
            )
        })?;
        SampledFunction::new(domain.clone(), x.iter().map(|&t| self.eval(t)).collect())
    }
}

impl fmt::Display for CorpusFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CorpusFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CorpusFn::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Unknown {
                kind: "corpus function",
                name: s.to_string(),
            })
    }
}

/// Samples a named corpus function on a 1-D domain.
pub fn corpus_function(name: &str, domain: &Arc<Domain>) -> Result<SampledFunction> {
    name.parse::<CorpusFn>()?.sample(domain)
}
