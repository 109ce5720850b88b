use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::families::{
    make_bernstein, make_composition, make_max_bernstein, make_square_negative_control,
    make_sup_bernstein, make_yosida_kakutani, WarpFunction,
};
use super::OperatorHandle;
use crate::error::{Error, Result};
use crate::function_space::{uniform_grid, Domain};

/// Smallest source grid (intervals) a default-built operator gets.
const MIN_DEFAULT_INTERVALS: usize = 240;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Bernstein,
    MaxBernstein,
    SupBernstein,
    Composition,
    YosidaKakutani,
    SquareNegativeControl,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Bernstein,
        Family::MaxBernstein,
        Family::SupBernstein,
        Family::Composition,
        Family::YosidaKakutani,
        Family::SquareNegativeControl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Bernstein => "bernstein",
            Family::MaxBernstein => "max_bernstein",
            Family::SupBernstein => "sup_bernstein",
            Family::Composition => "composition",
            Family::YosidaKakutani => "yosida_kakutani",
            Family::SquareNegativeControl => "square_negative_control",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Family::Bernstein => "sum_k p_{n,k}(phi(x)) f(k/n)",
            Family::MaxBernstein => "max{B_n(f), B_{n+1}(f)}",
            Family::SupBernstein => "sum_k p_{n,k}(phi(x)) sup f on [k/(n+1), (k+1)/(n+1)]",
            Family::Composition => "f o phi",
            Family::YosidaKakutani => "pointwise max of the first n Cesaro averages of the U-orbit",
            Family::SquareNegativeControl => "f -> f^2, violates subadditivity",
        }
    }

    /// Where the construction comes from.
    pub fn provenance(self) -> &'static str {
        match self {
            Family::Bernstein => "applications: warped Bernstein operators",
            Family::MaxBernstein => "applications: max of two warped Bernstein operators",
            Family::SupBernstein => "applications: Bernstein weights over window suprema",
            Family::Composition => "applications: limit operator f o phi",
            Family::YosidaKakutani => "background: Yosida-Kakutani ergodic operators",
            Family::SquareNegativeControl => "negative control, not a weakly nonlinear operator",
        }
    }

    /// Denominators `d` whose nodes `j/d` must be grid points for order `n`.
    pub fn node_denominators(self, n: usize) -> Vec<usize> {
        match self {
            Family::Bernstein => vec![n],
            Family::MaxBernstein => vec![n, n + 1],
            Family::SupBernstein => vec![n + 1],
            _ => vec![],
        }
    }

    pub fn needs_order(self) -> bool {
        !matches!(self, Family::Composition | Family::SquareNegativeControl)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Unknown {
                kind: "operator family",
                name: s.to_string(),
            })
    }
}

/// How the warp `φ` is specified.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiSpec {
    #[default]
    Identity,
    Quadratic,
    /// Values at equally spaced knots on `[0, 1]`, linearly interpolated.
    Table {
        values: Vec<f64>,
    },
}

impl PhiSpec {
    pub fn sample(&self, target: &Arc<Domain>) -> Result<WarpFunction> {
        match self {
            PhiSpec::Identity => WarpFunction::identity(target),
            PhiSpec::Quadratic => WarpFunction::quadratic(target),
            PhiSpec::Table { values } => WarpFunction::from_table(target, values),
        }
    }

    pub fn label(&self) -> String {
        match self {
            PhiSpec::Identity => "identity".into(),
            PhiSpec::Quadratic => "quadratic".into(),
            PhiSpec::Table { values } => format!("table{values:?}"),
        }
    }
}

/// Declarative description of one operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default)]
    pub phi: PhiSpec,
    /// Source grid size when built standalone.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    /// Target grid size when built standalone; defaults to the source grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_points: Option<usize>,
    /// Nonnegative multiplier applied to the built operator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    /// The operator `U` iterated by `yosida_kakutani`; defaults to
    /// composition with `x²`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Box<OperatorSpec>>,
}

impl OperatorSpec {
    pub fn new(family: Family) -> Self {
        OperatorSpec {
            family,
            n: None,
            phi: PhiSpec::Identity,
            grid_points: None,
            target_points: None,
            scale: None,
            base: None,
        }
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }

    pub fn with_phi(mut self, phi: PhiSpec) -> Self {
        self.phi = phi;
        self
    }

    pub fn with_scale(mut self, c: f64) -> Self {
        self.scale = Some(c);
        self
    }

    pub fn with_base(mut self, base: OperatorSpec) -> Self {
        self.base = Some(Box::new(base));
        self
    }

    pub fn with_grid(mut self, points: usize) -> Self {
        self.grid_points = Some(points);
        self
    }

    /// Whether source and target grid must coincide.
    pub fn is_endomorphism(&self) -> bool {
        matches!(
            self.family,
            Family::YosidaKakutani | Family::SquareNegativeControl
        )
    }

    /// Short human label, e.g. `max_bernstein[phi=identity]`.
    pub fn label(&self) -> String {
        let mut s = format!("{}[phi={}]", self.family, self.phi.label());
        if let Some(c) = self.scale {
            s = format!("{c}*{s}");
        }
        if let Some(b) = &self.base {
            s.push_str(&format!("({})", b.label()));
        }
        s
    }

    fn order(&self) -> Result<usize> {
        match self.n {
            Some(n) if n >= 1 => Ok(n),
            Some(_) => Err(Error::arg("n", "operator order must be >= 1")),
            None => Err(Error::arg(
                "n",
                format!("family `{}` needs an order n", self.family),
            )),
        }
    }

    /// Builds on explicitly supplied grids.
    pub fn build_on(&self, source: &Arc<Domain>, target: &Arc<Domain>) -> Result<OperatorHandle> {
        let target = if self.is_endomorphism() {
            source
        } else {
            target
        };
        let phi = || -> Result<WarpFunction> {
            let raw = self.phi.sample(target)?;
            // grid-valued warps keep B_n and f o phi consistent
            raw.snapped_to(source)
        };
        let op = match self.family {
            Family::Bernstein => make_bernstein(&phi()?, self.order()?, source, target)?,
            Family::MaxBernstein => make_max_bernstein(&phi()?, self.order()?, source, target)?,
            Family::SupBernstein => make_sup_bernstein(&phi()?, self.order()?, source, target)?,
            Family::Composition => make_composition(&phi()?, source, target)?,
            Family::YosidaKakutani => {
                let base = match &self.base {
                    Some(b) => b.build_on(source, source)?,
                    None => OperatorSpec::new(Family::Composition)
                        .with_phi(PhiSpec::Quadratic)
                        .build_on(source, source)?,
                };
                make_yosida_kakutani(&base, self.order()?)?
            }
            Family::SquareNegativeControl => make_square_negative_control(source),
        };
        match self.scale {
            Some(c) => op.scaled(c),
            None => Ok(op),
        }
    }

    /// Denominators `d` of every node `j/d` read when built at order `n`
    /// (the spec's own `n` when `None`), including those of `base`.
    pub fn required_denominators(&self, n: Option<usize>) -> Vec<usize> {
        let mut out: Vec<usize> = n
            .or(self.n)
            .map(|n| self.family.node_denominators(n))
            .unwrap_or_default();
        if let Some(b) = &self.base {
            out.extend(b.required_denominators(None));
        }
        out.retain(|&d| d > 0);
        out
    }

    /// `lcm(2, required denominators)`: `m - 1` must be a multiple of this.
    pub fn node_lcm(&self, n: Option<usize>) -> usize {
        self.required_denominators(n).into_iter().fold(2, lcm)
    }

    /// Smallest uniform `[0, 1]` grid holding every node this spec reads.
    pub fn default_grid_points(&self) -> usize {
        let l = self.node_lcm(None);
        let reps = MIN_DEFAULT_INTERVALS.div_ceil(l);
        l * reps + 1
    }

    /// Builds standalone on `uniform_grid(0, 1, grid_points)`.
    pub fn build(&self) -> Result<OperatorHandle> {
        let m = self
            .grid_points
            .unwrap_or_else(|| self.default_grid_points());
        let source = uniform_grid(0.0, 1.0, m)?;
        let target = match self.target_points {
            Some(t) if t != m => uniform_grid(0.0, 1.0, t)?,
            _ => source.clone(),
        };
        self.build_on(&source, &target)
    }
}

pub fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}
