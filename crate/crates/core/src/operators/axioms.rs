//! Randomized search for violations of the operator axioms.
//!
//! Trial `t` draws from its own ChaCha stream `(seed, t)`, so reports are
//! identical regardless of how trials are scheduled across threads. The
//! reported witness is always the one from the lowest failing trial.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Axiom, Claims, OperatorHandle};
use crate::error::{Error, Result};
use crate::function_space::{sup_norm, CorpusFn, Domain, SampledFunction};

/// Settings shared by the axiom and Krein checkers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckConfig {
    /// Absolute violation above which a trial fails.
    pub tol: f64,
    /// Fewer clean trials than this give `Inconclusive` instead of `Pass`.
    pub min_trials: usize,
    /// Random piecewise-linear functions get a free value every
    /// `node_stride` grid points.
    pub node_stride: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            tol: 1e-8,
            min_trials: 100,
            node_stride: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Property {
    Axiom(Axiom),
    /// `|T(f) - T(g)| <= T(|f - g|)` and its norm consequence.
    KreinInequality,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Property::Axiom(a) => write!(f, "{a}"),
            Property::KreinInequality => f.write_str("KREIN"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// One concrete inequality or identity tested in a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    /// `T(f+g) <= T(f) + T(g)`
    Subadditive,
    /// `T(αf) = α T(f)`
    Homogeneous,
    /// `T(f + α) = T(f) + α T(1)`
    Translation,
    /// `T(f) <= T(g)` for `f <= g`
    Monotone,
    /// `T(f+g) = T(f) + T(g)` for comonotone `f, g`
    ComonotoneAdditive,
    /// `T(f+g) = T(f) + T(g)`
    Additive,
    /// `T(1) = 1`
    Unital,
    /// `|T(f) - T(g)| <= T(|f-g|)`
    Krein,
    /// `‖T(f) - T(g)‖ <= ‖T(1)‖ ‖f - g‖`
    KreinNorm,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Subadditive => "subadditive",
            CheckKind::Homogeneous => "homogeneous",
            CheckKind::Translation => "translation",
            CheckKind::Monotone => "monotone",
            CheckKind::ComonotoneAdditive => "comonotone_additive",
            CheckKind::Additive => "additive",
            CheckKind::Unital => "unital",
            CheckKind::Krein => "krein",
            CheckKind::KreinNorm => "krein_norm",
        }
    }
}

/// A concrete counterexample.
#[derive(Debug, Clone)]
pub struct Witness {
    pub check: CheckKind,
    pub f: SampledFunction,
    pub g: Option<SampledFunction>,
    pub alpha: Option<f64>,
    /// Target point of the largest violation; `None` for norm checks.
    pub point: Option<usize>,
    pub lhs: f64,
    pub rhs: f64,
    pub violation: f64,
}

impl Witness {
    /// Re-evaluates the witness against `op` and returns the violation.
    pub fn reproduce(&self, op: &OperatorHandle) -> Result<f64> {
        let one = SampledFunction::constant(op.source_domain(), 1.0)?;
        let case = Case {
            check: self.check,
            f: &self.f,
            g: self.g.as_ref(),
            alpha: self.alpha,
        };
        Ok(case.evaluate(op, &one)?.violation)
    }
}

#[derive(Debug, Clone)]
pub struct AxiomReport {
    pub operator: String,
    pub property: Property,
    pub verdict: Verdict,
    pub trials: usize,
    pub witness: Option<Witness>,
}

struct Outcome {
    point: Option<usize>,
    lhs: f64,
    rhs: f64,
    violation: f64,
}

struct Case<'a> {
    check: CheckKind,
    f: &'a SampledFunction,
    g: Option<&'a SampledFunction>,
    alpha: Option<f64>,
}

impl Case<'_> {
    fn g(&self) -> &SampledFunction {
        self.g.expect("check needs a second function")
    }

    fn alpha(&self) -> f64 {
        self.alpha.expect("check needs a scalar")
    }

    fn evaluate(&self, op: &OperatorHandle, one: &SampledFunction) -> Result<Outcome> {
        let t = |h: &SampledFunction| op.apply(h);
        let (lhs, rhs, le) = match self.check {
            CheckKind::Subadditive => (
                t(&self.f.add(self.g())?)?,
                t(self.f)?.add(&t(self.g())?)?,
                true,
            ),
            CheckKind::Homogeneous => {
                let a = self.alpha();
                (t(&self.f.scale(a)?)?, t(self.f)?.scale(a)?, false)
            }
            CheckKind::Translation => {
                let a = self.alpha();
                let shifted = self.f.map(|v| v + a)?;
                (t(&shifted)?, t(self.f)?.add(&t(one)?.scale(a)?)?, false)
            }
            CheckKind::Monotone => (t(self.f)?, t(self.g())?, true),
            CheckKind::ComonotoneAdditive | CheckKind::Additive => (
                t(&self.f.add(self.g())?)?,
                t(self.f)?.add(&t(self.g())?)?,
                false,
            ),
            CheckKind::Unital => {
                let out = t(one)?;
                let ones = SampledFunction::constant(op.target_domain(), 1.0)?;
                (out, ones, false)
            }
            CheckKind::Krein => {
                let diff = t(self.f)?.sub(&t(self.g())?)?.abs()?;
                (diff, t(&self.f.sub(self.g())?.abs()?)?, true)
            }
            CheckKind::KreinNorm => {
                let lhs = sup_norm(&t(self.f)?.sub(&t(self.g())?)?);
                let rhs = sup_norm(&t(one)?) * sup_norm(&self.f.sub(self.g())?);
                return Ok(Outcome {
                    point: None,
                    lhs,
                    rhs,
                    violation: lhs - rhs,
                });
            }
        };
        let (point, violation) = lhs
            .values()
            .iter()
            .zip(rhs.values())
            .map(|(a, b)| if le { a - b } else { (a - b).abs() })
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
            );
        Ok(Outcome {
            point: Some(point),
            lhs: lhs.values()[point],
            rhs: rhs.values()[point],
            violation,
        })
    }
}

/// Random test functions on a domain.
struct Generator {
    domain: Arc<Domain>,
    /// Point indices ordered by coordinate, for 1-D domains.
    order: Option<Vec<usize>>,
    stride: usize,
}

impl Generator {
    fn new(domain: &Arc<Domain>, stride: usize) -> Self {
        let order = domain.coords_1d().map(|x| {
            let mut o: Vec<usize> = (0..x.len()).collect();
            o.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap());
            o
        });
        Generator {
            domain: domain.clone(),
            order,
            stride: stride.max(1),
        }
    }

    /// Piecewise linear with i.i.d. uniform `[lo, hi]` values at every
    /// `stride`-th point; i.i.d. per point on multi-dimensional domains.
    fn piecewise_linear(&self, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> SampledFunction {
        let len = self.domain.len();
        let mut values = vec![0.0; len];
        match &self.order {
            None => values.iter_mut().for_each(|v| *v = rng.gen_range(lo..=hi)),
            Some(order) => {
                let x = self.domain.coords_1d().unwrap();
                let mut knots: Vec<usize> = (0..len).step_by(self.stride).collect();
                if *knots.last().unwrap() != len - 1 {
                    knots.push(len - 1);
                }
                let kv: Vec<f64> = knots.iter().map(|_| rng.gen_range(lo..=hi)).collect();
                for w in 0..knots.len().saturating_sub(1) {
                    let (a, b) = (knots[w], knots[w + 1]);
                    let (xa, xb) = (x[order[a]], x[order[b]]);
                    for r in a..=b {
                        let s = (x[order[r]] - xa) / (xb - xa);
                        values[order[r]] = kv[w] * (1.0 - s) + kv[w + 1] * s;
                    }
                }
                if knots.len() == 1 {
                    values[order[0]] = kv[0];
                }
            }
        }
        SampledFunction::new(self.domain.clone(), values).expect("finite by construction")
    }

    /// Every fourth trial uses a scaled corpus function instead.
    fn function(&self, rng: &mut ChaCha8Rng, trial: usize) -> SampledFunction {
        if self.order.is_some() && trial % 4 == 3 {
            let c = CorpusFn::ALL[(trial / 4) % CorpusFn::ALL.len()];
            let scale = rng.gen_range(-1.0..=1.0);
            let f = c.sample(&self.domain).expect("1-D domain");
            return f.scale(scale).expect("finite");
        }
        self.piecewise_linear(rng, -1.0, 1.0)
    }

    /// `(u ∘ h, v ∘ h)` with `u, v` nondecreasing.
    fn comonotone_pair(&self, rng: &mut ChaCha8Rng) -> (SampledFunction, SampledFunction) {
        let h = self.piecewise_linear(rng, -1.0, 1.0);
        let mut map = || {
            let (a, b, c, d) = (
                rng.gen_range(0.0..=1.0),
                rng.gen_range(0.0..=2.0),
                rng.gen_range(-1.0..=1.0),
                rng.gen_range(0.0..=1.0),
            );
            move |t: f64| a * t + b * (t - c).max(0.0) + d * t * t * t
        };
        let (u, v) = (map(), map());
        (h.map(u).expect("finite"), h.map(v).expect("finite"))
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn run_trials<F>(
    op: &OperatorHandle,
    property: Property,
    trials: usize,
    seed: u64,
    cfg: &CheckConfig,
    trial: F,
) -> Result<AxiomReport>
where
    F: Fn(
            &Generator,
            &mut ChaCha8Rng,
            usize,
        ) -> Vec<(
            CheckKind,
            SampledFunction,
            Option<SampledFunction>,
            Option<f64>,
        )> + Sync,
{
    if trials < 1 {
        return Err(Error::arg("trials", "at least one trial is required"));
    }
    let generator = Generator::new(op.source_domain(), cfg.node_stride);
    let one = SampledFunction::constant(op.source_domain(), 1.0)?;
    let found = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<Option<Witness>> {
            let mut rng = trial_rng(seed, t);
            for (check, f, g, alpha) in trial(&generator, &mut rng, t) {
                let case = Case {
                    check,
                    f: &f,
                    g: g.as_ref(),
                    alpha,
                };
                let out = case.evaluate(op, &one)?;
                if out.violation > cfg.tol {
                    return Ok(Some(Witness {
                        check,
                        f,
                        g,
                        alpha,
                        point: out.point,
                        lhs: out.lhs,
                        rhs: out.rhs,
                        violation: out.violation,
                    }));
                }
            }
            Ok(None)
        })
        .find_map_first(|r| match r {
            Ok(None) => None,
            other => Some(other),
        })
        .transpose()?
        .flatten();
    let verdict = match (&found, trials >= cfg.min_trials) {
        (Some(_), _) => Verdict::Fail,
        (None, true) => Verdict::Pass,
        (None, false) => Verdict::Inconclusive,
    };
    Ok(AxiomReport {
        operator: op.name().to_string(),
        property,
        verdict,
        trials,
        witness: found,
    })
}

/// Searches for a violation of `axiom` over `trials` random draws.
pub fn check_axiom(
    op: &OperatorHandle,
    axiom: Axiom,
    trials: usize,
    seed: u64,
) -> Result<AxiomReport> {
    check_axiom_with(op, axiom, trials, seed, &CheckConfig::default())
}

pub fn check_axiom_with(
    op: &OperatorHandle,
    axiom: Axiom,
    trials: usize,
    seed: u64,
    cfg: &CheckConfig,
) -> Result<AxiomReport> {
    use CheckKind::*;
    run_trials(
        op,
        Property::Axiom(axiom),
        trials,
        seed,
        cfg,
        |gen, rng, t| match axiom {
            Axiom::Sl => {
                let f = gen.function(rng, t);
                let g = gen.piecewise_linear(rng, -1.0, 1.0);
                let a = rng.gen_range(0.0..=3.0);
                vec![
                    (Subadditive, f.clone(), Some(g), None),
                    (Homogeneous, f, None, Some(a)),
                ]
            }
            Axiom::Tr | Axiom::TrStar => {
                let f = gen.function(rng, t);
                let lo = if axiom == Axiom::Tr { 0.0 } else { -3.0 };
                let a = rng.gen_range(lo..=3.0);
                vec![(Translation, f, None, Some(a))]
            }
            Axiom::M => {
                let f = gen.function(rng, t);
                let bump = gen.piecewise_linear(rng, 0.0, 1.0);
                let g = f.add(&bump).expect("same domain");
                vec![(Monotone, f, Some(g), None)]
            }
            Axiom::Ca => {
                let (f, g) = gen.comonotone_pair(rng);
                vec![(ComonotoneAdditive, f, Some(g), None)]
            }
            Axiom::Unital => {
                let one = SampledFunction::constant(&gen.domain, 1.0).expect("finite");
                vec![(Unital, one, None, None)]
            }
            Axiom::Linear => {
                let f = gen.function(rng, t);
                let g = gen.piecewise_linear(rng, -1.0, 1.0);
                let a = rng.gen_range(-3.0..=3.0);
                vec![
                    (Additive, f.clone(), Some(g), None),
                    (Homogeneous, f, None, Some(a)),
                ]
            }
        },
    )
}

/// `|T(f) - T(g)| <= T(|f - g|)` pointwise, plus
/// `‖T(f) - T(g)‖ <= ‖T(1)‖ ‖f - g‖`, with `‖T(1)‖` standing in for the
/// operator norm of a monotone sublinear `T`.
pub fn verify_krein_inequality(
    op: &OperatorHandle,
    trials: usize,
    seed: u64,
) -> Result<AxiomReport> {
    verify_krein_inequality_with(op, trials, seed, &CheckConfig::default())
}

pub fn verify_krein_inequality_with(
    op: &OperatorHandle,
    trials: usize,
    seed: u64,
    cfg: &CheckConfig,
) -> Result<AxiomReport> {
    let needed = Claims::SL | Claims::M;
    if !op.claims().contains(needed) {
        return Err(Error::MissingClaims {
            operator: op.name().to_string(),
            missing: needed.difference(op.claims()).to_string(),
        });
    }
    run_trials(
        op,
        Property::KreinInequality,
        trials,
        seed,
        cfg,
        |gen, rng, t| {
            let f = gen.function(rng, t);
            // every 16th trial checks the g = f corner
            let g = if t % 16 == 5 {
                f.clone()
            } else {
                gen.piecewise_linear(rng, -1.0, 1.0)
            };
            vec![
                (CheckKind::Krein, f.clone(), Some(g.clone()), None),
                (CheckKind::KreinNorm, f, Some(g), None),
            ]
        },
    )
}

/// Runs every claimed axiom, plus the Krein inequality when `SL` and `M`
/// are claimed. Each property gets its own seed offset.
pub fn check_claims(
    op: &OperatorHandle,
    trials: usize,
    seed: u64,
    cfg: &CheckConfig,
) -> Result<Vec<AxiomReport>> {
    let mut out = Vec::new();
    for (i, axiom) in Axiom::ALL.into_iter().enumerate() {
        if op.claims().contains(axiom.flag()) {
            out.push(check_axiom_with(
                op,
                axiom,
                trials,
                seed.wrapping_add(i as u64),
                cfg,
            )?);
        }
    }
    if op.claims().contains(Claims::SL | Claims::M) {
        out.push(verify_krein_inequality_with(
            op,
            trials,
            seed.wrapping_add(100),
            cfg,
        )?);
    }
    Ok(out)
}
