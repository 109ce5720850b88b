use std::sync::Arc;

use super::bernstein::fill_weights;
use super::{Claims, Kernel, OperatorHandle};
use crate::error::{Error, Result};
use crate::function_space::{Domain, LOCATE_TOL};

/// Largest weight table kept in memory; beyond it weights are recomputed
/// on every application.
const WEIGHT_CACHE_LIMIT: usize = 1 << 22;

/// Samples of a continuous `φ: [0, 1] -> [0, 1]` on a target grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpFunction {
    domain: Arc<Domain>,
    values: Vec<f64>,
}

impl WarpFunction {
    pub fn new(domain: Arc<Domain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::arg(
                "phi",
                format!(
                    "{} samples for a grid of {} points",
                    values.len(),
                    domain.len()
                ),
            ));
        }
        if let Some(i) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::arg(
                "phi",
                format!("sample {i} = {} is outside [0, 1]", values[i]),
            ));
        }
        Ok(WarpFunction { domain, values })
    }

    pub fn from_fn(domain: &Arc<Domain>, phi: impl Fn(f64) -> f64) -> Result<Self> {
        let x = one_dim(domain, "phi")?;
        Self::new(domain.clone(), x.iter().map(|&t| phi(t)).collect())
    }

    pub fn identity(domain: &Arc<Domain>) -> Result<Self> {
        Self::from_fn(domain, |t| t)
    }

    pub fn quadratic(domain: &Arc<Domain>) -> Result<Self> {
        Self::from_fn(domain, |t| t * t)
    }

    /// Piecewise-linear interpolation of `knots`, taken as the values of `φ`
    /// at equally spaced abscissae `0, 1/(len-1), ..., 1`.
    pub fn from_table(domain: &Arc<Domain>, knots: &[f64]) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::arg("phi.values", "a table needs at least two knots"));
        }
        let last = (knots.len() - 1) as f64;
        Self::from_fn(domain, |t| {
            let s = (t.clamp(0.0, 1.0) * last).min(last);
            let i = (s.floor() as usize).min(knots.len() - 2);
            let w = s - i as f64;
            knots[i] * (1.0 - w) + knots[i + 1] * w
        })
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Replaces every sample by its nearest point of `grid`, failing if any
    /// sample is farther than `grid.mesh()` from the grid.
    pub fn snapped_to(&self, grid: &Arc<Domain>) -> Result<WarpFunction> {
        let indices = snap_indices(&self.values, grid)?;
        let values = indices.iter().map(|&j| grid.point(j)[0]).collect();
        Ok(WarpFunction {
            domain: self.domain.clone(),
            values,
        })
    }
}

fn one_dim<'a>(domain: &'a Arc<Domain>, what: &'static str) -> Result<&'a [f64]> {
    domain
        .coords_1d()
        .ok_or_else(|| Error::arg(what, "expected a one-dimensional grid"))
}

fn snap_indices(values: &[f64], grid: &Arc<Domain>) -> Result<Vec<usize>> {
    one_dim(grid, "K")?;
    values
        .iter()
        .map(|&v| {
            let j = grid.nearest_1d(v).expect("1-D grid");
            let distance = (grid.point(j)[0] - v).abs();
            if distance > grid.mesh() + LOCATE_TOL {
                return Err(Error::SnapExceeded {
                    value: v,
                    distance,
                    mesh: grid.mesh(),
                });
            }
            Ok(j)
        })
        .collect()
}

fn check_target(phi: &WarpFunction, target: &Arc<Domain>) -> Result<()> {
    if !Domain::same(phi.domain(), target) {
        return Err(Error::DomainMismatch(
            "phi must be sampled on the target grid X".into(),
        ));
    }
    Ok(())
}

fn node_indices(source: &Arc<Domain>, n: usize, operator: &str) -> Result<Vec<usize>> {
    one_dim(source, "K")?;
    (0..=n)
        .map(|k| {
            let node = k as f64 / n as f64;
            source.locate(&[node]).ok_or_else(|| Error::MissingNode {
                operator: operator.to_string(),
                node,
            })
        })
        .collect()
}

/// Bernstein weights `p_{n,k}(φ(x))` for every target point.
struct WarpedBasis {
    n: usize,
    phi: Vec<f64>,
    table: Option<Vec<f64>>,
}

impl WarpedBasis {
    fn new(n: usize, phi: &WarpFunction) -> Self {
        let phi = phi.values().to_vec();
        let stride = n + 1;
        let table = (phi.len() * stride <= WEIGHT_CACHE_LIMIT).then(|| {
            let mut t = vec![0.0; phi.len() * stride];
            for (row, &p) in t.chunks_exact_mut(stride).zip(&phi) {
                fill_weights(n, p, row);
            }
            t
        });
        WarpedBasis { n, phi, table }
    }

    /// `Σ_k p_{n,k}(φ(x_i)) coeffs[k]` for every target point `i`.
    fn combine(&self, coeffs: &[f64]) -> Vec<f64> {
        let stride = self.n + 1;
        match &self.table {
            Some(t) => t
                .chunks_exact(stride)
                .map(|w| w.iter().zip(coeffs).map(|(a, b)| a * b).sum())
                .collect(),
            None => {
                let mut w = vec![0.0; stride];
                self.phi
                    .iter()
                    .map(|&p| {
                        fill_weights(self.n, p, &mut w);
                        w.iter().zip(coeffs).map(|(a, b)| a * b).sum()
                    })
                    .collect()
            }
        }
    }
}

struct Bernstein {
    basis: WarpedBasis,
    nodes: Vec<usize>,
}

impl Kernel for Bernstein {
    fn apply(&self, values: &[f64]) -> Vec<f64> {
        let coeffs: Vec<f64> = self.nodes.iter().map(|&i| values[i]).collect();
        self.basis.combine(&coeffs)
    }
}

/// `B_n(f)(x) = Σ_k p_{n,k}(φ(x)) f(k/n)`.
///
/// `source` must contain every node `k/n`; values there are read exactly.
pub fn make_bernstein(
    phi: &WarpFunction,
    n: usize,
    source: &Arc<Domain>,
    target: &Arc<Domain>,
) -> Result<OperatorHandle> {
    Ok(OperatorHandle::new(
        format!("bernstein[n={n}]"),
        Some(n),
        source.clone(),
        target.clone(),
        Claims::SL | Claims::TR | Claims::TR_STAR | Claims::M | Claims::LINEAR | Claims::UNITAL,
        Arc::new(bernstein_kernel(phi, n, source, target, "bernstein")?),
    ))
}

fn bernstein_kernel(
    phi: &WarpFunction,
    n: usize,
    source: &Arc<Domain>,
    target: &Arc<Domain>,
    name: &str,
) -> Result<Bernstein> {
    if n < 1 {
        return Err(Error::arg("n", "Bernstein degree must be >= 1"));
    }
    check_target(phi, target)?;
    let nodes = node_indices(source, n, name)?;
    Ok(Bernstein {
        basis: WarpedBasis::new(n, phi),
        nodes,
    })
}

struct MaxBernstein {
    low: Bernstein,
    high: Bernstein,
}

impl Kernel for MaxBernstein {
    fn apply(&self, values: &[f64]) -> Vec<f64> {
        let mut a = self.low.apply(values);
        let b = self.high.apply(values);
        for (x, y) in a.iter_mut().zip(b) {
            *x = x.max(y);
        }
        a
    }
}

/// `T_n(f) = max{B_n(f), B_{n+1}(f)}`: sublinear, monotone and strongly
/// translatable, but not linear.
pub fn make_max_bernstein(
    phi: &WarpFunction,
    n: usize,
    source: &Arc<Domain>,
    target: &Arc<Domain>,
) -> Result<OperatorHandle> {
    let low = bernstein_kernel(phi, n, source, target, "max_bernstein")?;
    let high = bernstein_kernel(phi, n + 1, source, target, "max_bernstein")?;
    Ok(OperatorHandle::new(
        format!("max_bernstein[n={n}]"),
        Some(n),
        source.clone(),
        target.clone(),
        Claims::SL | Claims::TR | Claims::TR_STAR | Claims::M | Claims::UNITAL,
        Arc::new(MaxBernstein { low, high }),
    ))
}

struct SupBernstein {
    basis: WarpedBasis,
    /// Inclusive index ranges of the closed windows `[k/(n+1), (k+1)/(n+1)]`.
    windows: Vec<(usize, usize)>,
}

impl Kernel for SupBernstein {
    fn apply(&self, values: &[f64]) -> Vec<f64> {
        let sups: Vec<f64> = self
            .windows
            .iter()
            .map(|&(lo, hi)| {
                values[lo..=hi]
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        self.basis.combine(&sups)
    }
}

/// `T_n(f)(x) = Σ_k p_{n,k}(φ(x)) max{f(t) : t ∈ K, k/(n+1) <= t <= (k+1)/(n+1)}`.
pub fn make_sup_bernstein(
    phi: &WarpFunction,
    n: usize,
    source: &Arc<Domain>,
    target: &Arc<Domain>,
) -> Result<OperatorHandle> {
    if n < 1 {
        return Err(Error::arg("n", "Bernstein degree must be >= 1"));
    }
    check_target(phi, target)?;
    let x = source
        .sorted_coords()
        .ok_or_else(|| Error::arg("K", "sup-Bernstein needs an increasing 1-D grid"))?;
    let parts = (n + 1) as f64;
    let windows = (0..=n)
        .map(|k| {
            let a = k as f64 / parts - LOCATE_TOL;
            let b = (k + 1) as f64 / parts + LOCATE_TOL;
            let lo = x.partition_point(|&t| t < a);
            let hi = x.partition_point(|&t| t <= b);
            if lo >= hi {
                return Err(Error::InvalidDomain(format!(
                    "window [{k}/{}, {}/{}] contains no grid point",
                    n + 1,
                    k + 1,
                    n + 1
                )));
            }
            Ok((lo, hi - 1))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OperatorHandle::new(
        format!("sup_bernstein[n={n}]"),
        Some(n),
        source.clone(),
        target.clone(),
        Claims::SL | Claims::TR | Claims::TR_STAR | Claims::M | Claims::UNITAL,
        Arc::new(SupBernstein {
            basis: WarpedBasis::new(n, phi),
            windows,
        }),
    ))
}

struct Composition {
    map: Vec<usize>,
}

impl Kernel for Composition {
    fn apply(&self, values: &[f64]) -> Vec<f64> {
        self.map.iter().map(|&j| values[j]).collect()
    }
}

/// `A(f) = f ∘ φ`, with `φ` snapped to the nearest point of `source`.
pub fn make_composition(
    phi: &WarpFunction,
    source: &Arc<Domain>,
    target: &Arc<Domain>,
) -> Result<OperatorHandle> {
    check_target(phi, target)?;
    let map = snap_indices(phi.values(), source)?;
    Ok(composition_handle(
        "composition".into(),
        map,
        source,
        target,
    ))
}

/// `A(f)(x_i) = f(y_{map[i]})` for an explicit point map `X -> K`; works in
/// any dimension.
pub fn make_composition_map(
    map: Vec<usize>,
    source: &Arc<Domain>,
    target: &Arc<Domain>,
) -> Result<OperatorHandle> {
    if map.len() != target.len() {
        return Err(Error::arg(
            "map",
            format!("{} entries for {} target points", map.len(), target.len()),
        ));
    }
    if let Some(&j) = map.iter().find(|&&j| j >= source.len()) {
        return Err(Error::arg(
            "map",
            format!("index {j} is outside the source grid"),
        ));
    }
    Ok(composition_handle(
        "composition".into(),
        map,
        source,
        target,
    ))
}

fn composition_handle(
    name: String,
    map: Vec<usize>,
    source: &Arc<Domain>,
    target: &Arc<Domain>,
) -> OperatorHandle {
    OperatorHandle::new(
        name,
        None,
        source.clone(),
        target.clone(),
        Claims::all(),
        Arc::new(Composition { map }),
    )
}

struct YosidaKakutani {
    base: Arc<dyn Kernel>,
    n: usize,
}

impl Kernel for YosidaKakutani {
    fn apply(&self, values: &[f64]) -> Vec<f64> {
        let mut orbit = values.to_vec();
        let mut sum = values.to_vec();
        let mut best = values.to_vec();
        for j in 2..=self.n {
            orbit = self.base.apply(&orbit);
            let inv = 1.0 / j as f64;
            for ((s, b), o) in sum.iter_mut().zip(best.iter_mut()).zip(&orbit) {
                *s += o;
                *b = b.max(*s * inv);
            }
        }
        best
    }
}

/// `YK_n(f) = max{f, (f + Uf)/2, ..., (1/n) Σ_{k<n} U^k f}` pointwise.
pub fn make_yosida_kakutani(base: &OperatorHandle, n: usize) -> Result<OperatorHandle> {
    if n < 1 {
        return Err(Error::arg("n", "Yosida-Kakutani order must be >= 1"));
    }
    if !Domain::same(base.source_domain(), base.target_domain()) {
        return Err(Error::DomainMismatch(
            "Yosida-Kakutani needs an operator from a space into itself".into(),
        ));
    }
    let needed = Claims::SL | Claims::TR_STAR | Claims::M | Claims::UNITAL;
    if !base.claims().contains(needed) {
        return Err(Error::MissingClaims {
            operator: base.name().to_string(),
            missing: needed.difference(base.claims()).to_string(),
        });
    }
    Ok(OperatorHandle::new(
        format!("yosida_kakutani[n={n}]({})", base.name()),
        Some(n),
        base.source_domain().clone(),
        base.target_domain().clone(),
        needed | Claims::TR,
        Arc::new(YosidaKakutani {
            base: base.kernel().clone(),
            n,
        }),
    ))
}

struct PointwiseSquare;

impl Kernel for PointwiseSquare {
    fn apply(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|v| v * v).collect()
    }
}

/// `f ↦ f²`, which violates subadditivity; used to show the checkers can fail.
pub fn make_square_negative_control(domain: &Arc<Domain>) -> OperatorHandle {
    OperatorHandle::new(
        "square_negative_control",
        None,
        domain.clone(),
        domain.clone(),
        Claims::empty(),
        Arc::new(PointwiseSquare),
    )
}

pub(super) struct Scaled {
    pub(super) inner: Arc<dyn Kernel>,
    pub(super) factor: f64,
}

impl Kernel for Scaled {
    fn apply(&self, values: &[f64]) -> Vec<f64> {
        let mut out = self.inner.apply(values);
        out.iter_mut().for_each(|v| *v *= self.factor);
        out
    }
}
