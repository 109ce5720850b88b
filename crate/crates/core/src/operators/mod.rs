//! Operators `T: C(K) -> C(X)` between sampled function spaces, the concrete
//! Bernstein-type families, and randomized checkers for the structural axioms.

mod axioms;
mod bernstein;
mod families;
mod registry;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use bitflags::bitflags;

use crate::error::{Error, Result};
use crate::function_space::{Domain, SampledFunction};

pub use axioms::{
    check_axiom, check_axiom_with, check_claims, verify_krein_inequality,
    verify_krein_inequality_with, AxiomReport, CheckConfig, CheckKind, Property, Verdict, Witness,
};
pub use bernstein::bernstein_weights;
pub use families::{
    make_bernstein, make_composition, make_composition_map, make_max_bernstein,
    make_square_negative_control, make_sup_bernstein, make_yosida_kakutani, WarpFunction,
};
pub use registry::{gcd, lcm, Family, OperatorSpec, PhiSpec};

bitflags! {
    /// Axioms an operator declares it satisfies.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
    pub struct Claims: u8 {
        /// Subadditive and positively homogeneous.
        const SL = 1;
        /// `T(f + α) = T(f) + α T(1)` for `α >= 0`.
        const TR = 1 << 1;
        /// Translatable for every real `α`.
        const TR_STAR = 1 << 2;
        /// Monotone.
        const M = 1 << 3;
        /// Comonotonic additive.
        const CA = 1 << 4;
        const UNITAL = 1 << 5;
        const LINEAR = 1 << 6;
    }
}

impl fmt::Display for Claims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = Axiom::ALL
            .into_iter()
            .filter(|a| self.contains(a.flag()))
            .map(Axiom::name)
            .collect();
        write!(f, "{{{}}}", names.join(", "))
    }
}

/// A single axiom flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axiom {
    Sl,
    Tr,
    TrStar,
    M,
    Ca,
    Unital,
    Linear,
}

impl Axiom {
    pub const ALL: [Axiom; 7] = [
        Axiom::Sl,
        Axiom::Tr,
        Axiom::TrStar,
        Axiom::M,
        Axiom::Ca,
        Axiom::Unital,
        Axiom::Linear,
    ];

    pub fn flag(self) -> Claims {
        match self {
            Axiom::Sl => Claims::SL,
            Axiom::Tr => Claims::TR,
            Axiom::TrStar => Claims::TR_STAR,
            Axiom::M => Claims::M,
            Axiom::Ca => Claims::CA,
            Axiom::Unital => Claims::UNITAL,
            Axiom::Linear => Claims::LINEAR,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axiom::Sl => "SL",
            Axiom::Tr => "TR",
            Axiom::TrStar => "TR_STAR",
            Axiom::M => "M",
            Axiom::Ca => "CA",
            Axiom::Unital => "UNITAL",
            Axiom::Linear => "LINEAR",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Axiom::Sl => "subadditive and positively homogeneous",
            Axiom::Tr => "T(f + a) = T(f) + a T(1) for a >= 0",
            Axiom::TrStar => "T(f + a) = T(f) + a T(1) for every real a",
            Axiom::M => "f <= g implies T(f) <= T(g)",
            Axiom::Ca => "additive on comonotone pairs",
            Axiom::Unital => "T(1) = 1",
            Axiom::Linear => "additive and homogeneous for every real scalar",
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axiom {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.to_ascii_uppercase().replace(['-', '*'], "_");
        let key = if upper == "TR_" {
            "TR_STAR"
        } else {
            upper.as_str()
        };
        Axiom::ALL
            .into_iter()
            .find(|a| a.name() == key)
            .ok_or_else(|| Error::Unknown {
                kind: "axiom flag",
                name: s.to_string(),
            })
    }
}

/// Raw evaluation of an operator on value vectors.
pub(crate) trait Kernel: Send + Sync {
    fn apply(&self, values: &[f64]) -> Vec<f64>;
}

/// A named operator between two sampled domains.
#[derive(Clone)]
pub struct OperatorHandle {
    name: String,
    order: Option<usize>,
    source: Arc<Domain>,
    target: Arc<Domain>,
    claims: Claims,
    kernel: Arc<dyn Kernel>,
}

impl fmt::Debug for OperatorHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorHandle")
            .field("name", &self.name)
            .field("order", &self.order)
            .field("source_points", &self.source.len())
            .field("target_points", &self.target.len())
            .field("claims", &self.claims)
            .finish()
    }
}

impl OperatorHandle {
    pub(crate) fn new(
        name: impl Into<String>,
        order: Option<usize>,
        source: Arc<Domain>,
        target: Arc<Domain>,
        claims: Claims,
        kernel: Arc<dyn Kernel>,
    ) -> Self {
        OperatorHandle {
            name: name.into(),
            order,
            source,
            target,
            claims,
            kernel,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// The index `n` of a sequence member, when the operator has one.
    pub fn order(&self) -> Option<usize> {
        self.order
    }

    pub fn source_domain(&self) -> &Arc<Domain> {
        &self.source
    }

    pub fn target_domain(&self) -> &Arc<Domain> {
        &self.target
    }

    pub fn claims(&self) -> Claims {
        self.claims
    }

    pub fn apply(&self, f: &SampledFunction) -> Result<SampledFunction> {
        if !Domain::same(f.domain(), &self.source) {
            return Err(Error::DomainMismatch(format!(
                "`{}` expects a function on its source domain ({} points), got {} points",
                self.name,
                self.source.len(),
                f.domain().len()
            )));
        }
        let out = self.kernel.apply(f.values());
        SampledFunction::new(self.target.clone(), out)
    }

    /// `c T` for `c > 0`; keeps every claim except `UNITAL` (unless `c = 1`).
    pub fn scaled(&self, c: f64) -> Result<OperatorHandle> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::arg(
                "scale",
                format!("must be finite and >= 0, got {c}"),
            ));
        }
        let mut claims = self.claims;
        if c != 1.0 {
            claims.remove(Claims::UNITAL);
        }
        Ok(OperatorHandle {
            name: format!("{c}*{}", self.name),
            order: self.order,
            source: self.source.clone(),
            target: self.target.clone(),
            claims,
            kernel: Arc::new(families::Scaled {
                inner: self.kernel.clone(),
                factor: c,
            }),
        })
    }

    pub(crate) fn kernel(&self) -> &Arc<dyn Kernel> {
        &self.kernel
    }
}
