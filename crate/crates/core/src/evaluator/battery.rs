//! Seeded randomized batteries for the reductions, the structural properties of
//! the representation, and comparative ambiguity aversion.
//!
//! Every case draws from its own ChaCha stream (seed, check name, case index), so
//! reports are reproducible and independent of the parallel schedule.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{ambiguity_neutral_value, rdu, CertaintyEquivalent, Preference};
use crate::ambiguity::{simplex_grid, AmbiguityIndex, AmbiguityKind, Prior};
use crate::distortion::Distortion;
use crate::distribution::TwoStageVariable;
use crate::error::{Error, Result};
use crate::utility::{mix_variables, UtilityFn};

pub const DEFAULT_SEED: u64 = 20_240_601;
const STEP1_TOL: f64 = 1e-8;
const EXACT_TOL: f64 = 1e-9;
const MAX_COUNTEREXAMPLES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatterySpec {
    pub cases: usize,
    pub max_outcomes: usize,
    pub seed: u64,
    /// Payoffs are drawn from `[-span, span]` intersected with the utility domain.
    pub span: f64,
}

impl Default for BatterySpec {
    fn default() -> Self {
        BatterySpec {
            cases: 200,
            max_outcomes: 8,
            seed: DEFAULT_SEED,
            span: 10.0,
        }
    }
}

impl BatterySpec {
    pub fn with_seed(seed: u64) -> Self {
        BatterySpec {
            seed,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub case: usize,
    pub detail: String,
}

/// Outcome of one property over a battery.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub cases: usize,
    /// Cases where the property did not apply (e.g. a ⊕ result left the domain).
    pub skipped: usize,
    pub violations: usize,
    pub max_error: f64,
    /// The first few violations.
    pub counterexamples: Vec<Counterexample>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

enum Outcome {
    Pass(f64),
    Skip,
    Fail(f64, String),
}

fn tol(scale: f64, base: f64) -> f64 {
    base * scale.abs().max(1.0)
}

fn equal(name: &str, lhs: f64, rhs: f64, base: f64) -> Outcome {
    let err = (lhs - rhs).abs();
    if err <= tol(lhs.abs().max(rhs.abs()), base) {
        Outcome::Pass(err)
    } else {
        Outcome::Fail(err, format!("{name}: {lhs} != {rhs}"))
    }
}

fn at_least(name: &str, lhs: f64, rhs: f64, base: f64) -> Outcome {
    let short = rhs - lhs;
    if short <= tol(lhs.abs().max(rhs.abs()), base) {
        Outcome::Pass(short.max(0.0))
    } else {
        Outcome::Fail(short, format!("{name}: {lhs} < {rhs}"))
    }
}

fn worst(outcomes: impl IntoIterator<Item = Outcome>) -> Outcome {
    outcomes
        .into_iter()
        .fold(Outcome::Pass(0.0), |acc, o| match (acc, o) {
            (Outcome::Fail(e, d), _) => Outcome::Fail(e, d),
            (_, Outcome::Fail(e, d)) => Outcome::Fail(e, d),
            (Outcome::Skip, _) | (_, Outcome::Skip) => Outcome::Skip,
            (Outcome::Pass(a), Outcome::Pass(b)) => Outcome::Pass(a.max(b)),
        })
}

/// Domain and image failures of subjective operations make a case inapplicable.
// Sums that leave a bounded utility image are retried on payoffs shrunk toward 0.
const SHRINK_ATTEMPTS: usize = 6;

fn halve(v: &TwoStageVariable) -> Result<TwoStageVariable> {
    v.map(|x| x / 2.0)
}

fn applicable<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(x) => Ok(Some(x)),
        Err(Error::ImageOverflow { .. } | Error::OutOfDomain { .. } | Error::Domain(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn stream_id(name: &str) -> u64 {
    // FNV-1a; only needs to be stable across runs
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

fn run_check<F>(name: &str, spec: &BatterySpec, case: F) -> CheckReport
where
    F: Fn(&mut ChaCha8Rng) -> Result<Outcome> + Sync,
{
    let outcomes: Vec<Outcome> = (0..spec.cases)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ stream_id(name));
            rng.set_stream(k as u64);
            case(&mut rng).unwrap_or_else(|e| Outcome::Fail(f64::INFINITY, format!("error: {e}")))
        })
        .collect();
    let mut report = CheckReport {
        name: name.to_string(),
        cases: spec.cases,
        skipped: 0,
        violations: 0,
        max_error: 0.0,
        counterexamples: Vec::new(),
    };
    for (k, o) in outcomes.into_iter().enumerate() {
        match o {
            Outcome::Pass(e) => report.max_error = report.max_error.max(e),
            Outcome::Skip => report.skipped += 1,
            Outcome::Fail(e, detail) => {
                report.max_error = report.max_error.max(e);
                report.violations += 1;
                if report.counterexamples.len() < MAX_COUNTEREXAMPLES {
                    report
                        .counterexamples
                        .push(Counterexample { case: k, detail });
                }
            }
        }
    }
    report
}

/// Random variables on a fixed state set with payoffs on a coarse grid, so ties occur.
struct Gen<'a> {
    state_ids: &'a [String],
    lo: f64,
    hi: f64,
    max_outcomes: usize,
}

impl<'a> Gen<'a> {
    fn new(state_ids: &'a [String], phi: &UtilityFn, spec: &BatterySpec) -> Result<Self> {
        let d = phi.domain();
        let mut lo = d.lo.max(-spec.span);
        let mut hi = d.hi.min(spec.span);
        if lo >= hi {
            return Err(Error::Configuration(format!(
                "utility domain {d} has no room for test payoffs"
            )));
        }
        let pad = 1e-6 * (hi - lo);
        if !d.contains(lo) {
            lo += pad;
        }
        if !d.contains(hi) {
            hi -= pad;
        }
        Ok(Gen {
            state_ids,
            lo,
            hi,
            max_outcomes: spec.max_outcomes.max(1),
        })
    }

    fn payoff(&self, rng: &mut ChaCha8Rng) -> f64 {
        self.lo + (self.hi - self.lo) * rng.random_range(0..=20) as f64 / 20.0
    }

    fn probs(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let raw: Vec<u32> = (0..n).map(|_| rng.random_range(1..=10)).collect();
        let total: u32 = raw.iter().sum();
        raw.iter().map(|&k| k as f64 / total as f64).collect()
    }

    fn outcomes(&self, rng: &mut ChaCha8Rng) -> usize {
        rng.random_range(1..=self.max_outcomes)
    }

    fn ids(&self) -> Vec<String> {
        self.state_ids.to_vec()
    }

    fn ambiguous(&self, rng: &mut ChaCha8Rng) -> Result<TwoStageVariable> {
        let n = self.outcomes(rng);
        let w = self.state_ids.len();
        let probs = (0..w).map(|_| self.probs(rng, n)).collect();
        let pay = (0..w)
            .map(|_| (0..n).map(|_| self.payoff(rng)).collect())
            .collect();
        TwoStageVariable::new(self.ids(), probs, pay)
    }

    fn unambiguous(&self, rng: &mut ChaCha8Rng) -> Result<TwoStageVariable> {
        let n = self.outcomes(rng);
        let probs = self.probs(rng, n);
        let pay = (0..n).map(|_| self.payoff(rng)).collect();
        TwoStageVariable::unambiguous(self.ids(), probs, pay)
    }

    fn risk_free(&self, rng: &mut ChaCha8Rng) -> Result<TwoStageVariable> {
        let pay = self.state_ids.iter().map(|_| self.payoff(rng)).collect();
        TwoStageVariable::risk_free(self.ids(), pay)
    }

    /// A variable with a shared outcome distribution whose payoffs increase in the
    /// outcome index in every state, and an unambiguous partner with the same ordering.
    fn comonotone_pair(
        &self,
        rng: &mut ChaCha8Rng,
    ) -> Result<(TwoStageVariable, TwoStageVariable)> {
        let n = self.outcomes(rng);
        let probs = self.probs(rng, n);
        let sorted = |rng: &mut ChaCha8Rng| {
            let mut row: Vec<f64> = (0..n).map(|_| self.payoff(rng)).collect();
            row.sort_by(f64::total_cmp);
            row
        };
        let w = self.state_ids.len();
        let rows = (0..w).map(|_| sorted(rng)).collect();
        let v = TwoStageVariable::new(self.ids(), vec![probs.clone(); w], rows)?;
        let r = TwoStageVariable::unambiguous(self.ids(), probs, sorted(rng))?;
        Ok((v, r))
    }

    fn prior(&self, rng: &mut ChaCha8Rng) -> Result<Prior> {
        Prior::new(self.probs(rng, self.state_ids.len()))
    }
}

fn single_state() -> Vec<String> {
    vec!["w".to_string()]
}

fn plain_expectation(v: &TwoStageVariable, phi: &UtilityFn, w: usize) -> Result<f64> {
    v.outcome_probs()[w]
        .iter()
        .zip(&v.payoffs()[w])
        .map(|(p, &x)| Ok(p * phi.eval(x)?))
        .sum()
}

/// Model reductions: single-state RDU, ψ = id variational preferences, explicit
/// maxmin, the affine-φ mean, and affine equivariance of certainty equivalents.
pub fn reduction_suite(pref: &Preference, spec: &BatterySpec) -> Result<Vec<CheckReport>> {
    let one = single_state();
    let gen1 = Gen::new(&one, pref.phi(), spec)?;
    let gen = Gen::new(pref.state_ids(), pref.phi(), spec)?;
    let single = Preference::new(
        pref.phi().clone(),
        pref.psi().clone(),
        AmbiguityIndex::maxmin_simplex(1)?,
        one.clone(),
    )?;
    let vp = pref.with_psi(Distortion::identity());
    let (a, b) = pref.phi().affine_params().unwrap_or((1.0, 0.0));
    let affine = UtilityFn::affine(a, b)?;
    let linear_single = Preference::new(
        affine.clone(),
        Distortion::identity(),
        AmbiguityIndex::maxmin_simplex(1)?,
        one.clone(),
    )?;
    let linear = pref.with_phi(affine.clone());
    let affine_gen = Gen::new(pref.state_ids(), &affine, spec)?;

    let mut reports = vec![
        run_check("single_state_rdu", spec, |rng| {
            let v = gen1.ambiguous(rng)?;
            let quiggin = rdu(&v.marginal_at(0), pref.phi(), pref.psi())?;
            Ok(equal(
                "U vs RDU",
                single.evaluate(&v)?.value_utils,
                quiggin,
                EXACT_TOL,
            ))
        }),
        run_check("identity_distortion_vp", spec, |rng| {
            let v = gen.ambiguous(rng)?;
            let eu = (0..v.num_states())
                .map(|w| plain_expectation(&v, pref.phi(), w))
                .collect::<Result<Vec<_>>>()?;
            let direct = pref.c().robust_min(&eu)?.value;
            Ok(equal(
                "U vs VP",
                vp.evaluate(&v)?.value_utils,
                direct,
                EXACT_TOL,
            ))
        }),
        run_check("maxmin_explicit", spec, |rng| {
            let priors = match pref.c().kind() {
                AmbiguityKind::MaxminSet { priors } => priors.clone(),
                _ => {
                    let k = rng.random_range(1..=3);
                    (0..k).map(|_| gen.prior(rng)).collect::<Result<Vec<_>>>()?
                }
            };
            let maxmin = pref.with_c(AmbiguityIndex::maxmin(priors.clone())?)?;
            let v = gen.ambiguous(rng)?;
            let inner = (0..v.num_states())
                .map(|w| rdu(&v.marginal_at(w), pref.phi(), pref.psi()))
                .collect::<Result<Vec<_>>>()?;
            let explicit = priors
                .iter()
                .map(|q| q.expect(&inner))
                .fold(f64::INFINITY, f64::min);
            Ok(equal(
                "U vs min over priors",
                maxmin.evaluate(&v)?.value_utils,
                explicit,
                EXACT_TOL,
            ))
        }),
        run_check("affine_identity_mean", spec, |rng| {
            let v = gen1.ambiguous(rng)?;
            let mean: f64 = v.outcome_probs()[0]
                .iter()
                .zip(&v.payoffs()[0])
                .map(|(p, x)| p * x)
                .sum();
            let e = linear_single.evaluate(&v)?;
            let ce = e.certainty_equivalent.value().unwrap_or(f64::NAN);
            Ok(worst([
                equal("U vs a*mean+b", e.value_utils, a * mean + b, EXACT_TOL),
                equal("CE vs mean", ce, mean, EXACT_TOL),
            ]))
        }),
    ];
    reports.push(run_check("affine_equivariance", spec, |rng| {
        let scale = rng.random_range(0.1..3.0);
        let shift = rng.random_range(-5.0..5.0);
        let ce = |v: &TwoStageVariable| -> Result<f64> {
            Ok(linear
                .evaluate(v)?
                .certainty_equivalent
                .value()
                .unwrap_or(f64::NAN))
        };
        let u = affine_gen.unambiguous(rng)?;
        let v = affine_gen.ambiguous(rng)?;
        Ok(worst([
            equal(
                "CE(a u + b) vs a CE(u) + b",
                ce(&u.map(|x| scale * x + shift)?)?,
                scale * ce(&u)? + shift,
                EXACT_TOL,
            ),
            equal(
                "CE(v + b) vs CE(v) + b",
                ce(&v.map(|x| x + shift)?)?,
                ce(&v)? + shift,
                EXACT_TOL,
            ),
        ]))
    }));
    Ok(reports)
}

/// Structural properties of the representation: certainty comonotonic additivity,
/// translation invariance, ambiguity concavity, dual ambiguity aversion,
/// monotonicity, neutrality, minimizer optimality, evaluation consistency.
pub fn step1_properties(pref: &Preference, spec: &BatterySpec) -> Result<Vec<CheckReport>> {
    let gen = Gen::new(pref.state_ids(), pref.phi(), spec)?;
    let phi = pref.phi();
    let hat = |x: f64| -> Result<f64> { Ok(phi.eval(x)? - phi.eval(0.0)?) };
    let utils = |v: &TwoStageVariable| -> Result<f64> { Ok(pref.evaluate(v)?.value_utils) };
    let ce = |v: &TwoStageVariable| -> Result<Option<f64>> {
        Ok(pref.evaluate(v)?.certainty_equivalent.value())
    };
    let has_zero = phi.domain().contains(0.0);

    let additivity = run_check("certainty_comonotonic_additivity", spec, |rng| {
        if !has_zero {
            return Ok(Outcome::Skip);
        }
        let (mut v, mut r) = gen.comonotone_pair(rng)?;
        for _ in 0..SHRINK_ATTEMPTS {
            if let Some(sum) = applicable(crate::utility::add_variables(&v, &r, phi))? {
                if let (Some(cs), Some(cv), Some(cr)) = (ce(&sum)?, ce(&v)?, ce(&r)?) {
                    let (lhs, rhs) = (hat(cs)?, hat(cv)? + hat(cr)?);
                    return Ok(equal(
                        "phi^(CE(v+r)) vs phi^(CE(v)) + phi^(CE(r))",
                        lhs,
                        rhs,
                        STEP1_TOL,
                    ));
                }
            }
            (v, r) = (halve(&v)?, halve(&r)?);
        }
        Ok(Outcome::Skip)
    });

    let translation = run_check("translation_invariance", spec, |rng| {
        if !has_zero {
            return Ok(Outcome::Skip);
        }
        let mut v = gen.ambiguous(rng)?;
        let mut m = gen.payoff(rng);
        for _ in 0..SHRINK_ATTEMPTS {
            let constant = TwoStageVariable::new(
                v.state_ids().to_vec(),
                v.outcome_probs().to_vec(),
                vec![vec![m; v.num_outcomes()]; v.num_states()],
            )?;
            if let Some(shifted) = applicable(crate::utility::add_variables(&v, &constant, phi))? {
                return Ok(equal(
                    "U(v+m) vs U(v) + phi^(m)",
                    utils(&shifted)?,
                    utils(&v)? + hat(m)?,
                    STEP1_TOL,
                ));
            }
            (v, m) = (halve(&v)?, m / 2.0);
        }
        Ok(Outcome::Skip)
    });

    let concavity = run_check("ambiguity_concavity", spec, |rng| {
        let (v, u) = (gen.risk_free(rng)?, gen.risk_free(rng)?);
        let alpha = rng.random_range(0.0..=1.0);
        let mix = mix_variables(&v, &u, alpha, phi)?;
        Ok(at_least(
            "U(mix) vs mix of U",
            utils(&mix)?,
            alpha * utils(&v)? + (1.0 - alpha) * utils(&u)?,
            STEP1_TOL,
        ))
    });

    let dual_aversion = run_check("dual_ambiguity_aversion", spec, |rng| {
        let v = gen.risk_free(rng)?;
        let Some(m) = ce(&v)? else {
            return Ok(Outcome::Skip);
        };
        let u = TwoStageVariable::constant(v.state_ids().to_vec(), m)?;
        let alpha = rng.random_range(0.0..=1.0);
        let mix = mix_variables(&v, &u, alpha, phi)?;
        Ok(at_least(
            "U(mix of equally ranked) vs U(v)",
            utils(&mix)?,
            utils(&v)?,
            EXACT_TOL,
        ))
    });

    let monotonicity = run_check("monotonicity", spec, |rng| {
        let v = gen.ambiguous(rng)?;
        let raised = v.with_payoffs(
            v.payoffs()
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&x| x + rng.random_range(0.0..=1.0) * (gen.hi - x))
                        .collect()
                })
                .collect(),
        )?;
        Ok(at_least(
            "U(raised) vs U(v)",
            utils(&raised)?,
            utils(&v)?,
            STEP1_TOL,
        ))
    });

    let neutrality = run_check("neutrality", spec, |rng| {
        let v = gen.ambiguous(rng)?;
        let base = pref.evaluate(&v)?;
        let n = v.num_outcomes();
        let mut probs = v.outcome_probs().to_vec();
        let mut pays = v.payoffs().to_vec();
        for (p, x) in probs.iter_mut().zip(pays.iter_mut()) {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            *p = order.iter().map(|&s| p[s]).collect();
            *x = order.iter().map(|&s| x[s]).collect();
        }
        let permuted =
            pref.evaluate(&TwoStageVariable::new(v.state_ids().to_vec(), probs, pays)?)?;
        let split_at = rng.random_range(0..n);
        let mut probs = v.outcome_probs().to_vec();
        let mut pays = v.payoffs().to_vec();
        for (p, x) in probs.iter_mut().zip(pays.iter_mut()) {
            let half = p[split_at] / 2.0;
            p[split_at] = half;
            p.push(half);
            x.push(x[split_at]);
        }
        let split = pref.evaluate(&TwoStageVariable::new(v.state_ids().to_vec(), probs, pays)?)?;
        let mut checks = vec![
            equal(
                "U(permuted) vs U",
                permuted.value_utils,
                base.value_utils,
                STEP1_TOL,
            ),
            equal(
                "U(split) vs U",
                split.value_utils,
                base.value_utils,
                STEP1_TOL,
            ),
        ];
        for w in 0..v.num_states() {
            checks.push(equal(
                "inner(permuted)",
                permuted.per_state_utils[w],
                base.per_state_utils[w],
                STEP1_TOL,
            ));
            checks.push(equal(
                "inner(split)",
                split.per_state_utils[w],
                base.per_state_utils[w],
                STEP1_TOL,
            ));
        }
        Ok(worst(checks))
    });

    let optimality = run_check("minimizer_optimality", spec, |rng| {
        let v = gen.ambiguous(rng)?;
        let e = pref.evaluate(&v)?;
        let objective =
            |q: &Prior| -> Result<f64> { Ok(q.expect(&e.per_state_utils) + pref.c().penalty(q)?) };
        let directions: Vec<Prior> = match pref.c().kind() {
            AmbiguityKind::Tabulated { grid } => grid.iter().map(|(q, _)| q.clone()).collect(),
            AmbiguityKind::MaxminSet { priors } => (0..100)
                .map(|_| {
                    let lambda = gen_weights(rng, priors.len());
                    let mixed = (0..gen.state_ids.len())
                        .map(|w| {
                            priors
                                .iter()
                                .zip(&lambda)
                                .map(|(q, l)| l * q.weights()[w])
                                .sum()
                        })
                        .collect();
                    renormalized(mixed)
                })
                .collect::<Result<_>>()?,
            _ => (0..100)
                .map(|_| {
                    let target = gen.prior(rng)?;
                    let t: f64 = 10f64.powf(rng.random_range(-4.0..0.0));
                    renormalized(
                        e.minimizer
                            .weights()
                            .iter()
                            .zip(target.weights())
                            .map(|(a, b)| (1.0 - t) * a + t * b)
                            .collect(),
                    )
                })
                .collect::<Result<_>>()?,
        };
        Ok(worst(
            directions
                .iter()
                .map(|q| {
                    Ok(at_least(
                        "objective off the minimizer",
                        objective(q)?,
                        e.value_utils,
                        EXACT_TOL,
                    ))
                })
                .collect::<Result<Vec<_>>>()?,
        ))
    });

    let consistency = run_check("evaluation_consistency", spec, |rng| {
        let v = gen.ambiguous(rng)?;
        let e = pref.evaluate(&v)?;
        let recomputed = e.minimizer.expect(&e.per_state_utils) + e.penalty_at_minimizer;
        let lowest = e
            .per_state_utils
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let neutral = ambiguity_neutral_value(&v, phi, pref.psi(), &pref.c().zero_penalty_prior())?;
        Ok(worst([
            equal(
                "value vs objective at minimizer",
                e.value_utils,
                recomputed,
                EXACT_TOL,
            ),
            at_least("value vs worst state", e.value_utils, lowest, EXACT_TOL),
            at_least(
                "zero-penalty value vs value",
                neutral,
                e.value_utils,
                EXACT_TOL,
            ),
        ]))
    });

    Ok(vec![
        additivity,
        translation,
        concavity,
        dual_aversion,
        monotonicity,
        neutrality,
        optimality,
        consistency,
    ])
}

fn gen_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0) + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

fn renormalized(weights: Vec<f64>) -> Result<Prior> {
    let total: f64 = weights.iter().sum();
    Prior::new(weights.iter().map(|w| (w / total).max(0.0)).collect())
}

/// Every battery member is valued no higher than by an ambiguity-neutral agent
/// whose prior carries zero penalty.
pub fn ambiguity_aversion_check(pref: &Preference, spec: &BatterySpec) -> Result<CheckReport> {
    let gen = Gen::new(pref.state_ids(), pref.phi(), spec)?;
    let p0 = pref.c().zero_penalty_prior();
    Ok(run_check("ambiguity_aversion", spec, |rng| {
        let v = if rng.random_range(0..10) == 0 {
            TwoStageVariable::constant(gen.ids(), gen.payoff(rng))?
        } else {
            gen.ambiguous(rng)?
        };
        let neutral = ambiguity_neutral_value(&v, pref.phi(), pref.psi(), &p0)?;
        Ok(at_least(
            "neutral value vs U",
            neutral,
            pref.evaluate(&v)?.value_utils,
            EXACT_TOL,
        ))
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuralComparison {
    /// `(a, b)` with `φ_B ≈ a φ_A + b`, when the fit is positive.
    pub phi_affine_fit: Option<(f64, f64)>,
    pub phi_residual: f64,
    pub phi_equivalent: bool,
    pub psi_max_gap: f64,
    pub psi_equal: bool,
    /// Priors compared, and those where `c_B / a < c_A`.
    pub penalty_points: usize,
    pub penalty_violations: Vec<Vec<f64>>,
    pub penalty_dominates: bool,
}

impl StructuralComparison {
    pub fn holds(&self) -> bool {
        self.phi_equivalent && self.psi_equal && self.penalty_dominates
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AversionComparison {
    pub structural: StructuralComparison,
    /// `ṽ ⪰_A x ⇒ ṽ ⪰_B x` over the battery, for constants and unambiguous lotteries `x`.
    pub behavioral: CheckReport,
    /// Structural verdict: A is more ambiguity averse than B.
    pub more_averse: bool,
    /// Structural and behavioral verdicts coincide.
    pub agree: bool,
}

const PHI_POINTS: usize = 64;
const PHI_TOL: f64 = 1e-8;
const PSI_POINTS: usize = 101;
const PSI_TOL: f64 = 1e-9;
const PENALTY_POINTS: usize = 2000;

fn fit_phi(a: &UtilityFn, b: &UtilityFn) -> (Option<(f64, f64)>, f64) {
    let (da, db) = (a.domain(), b.domain());
    let lo = da.lo.max(db.lo).max(-10.0);
    let hi = da.hi.min(db.hi).min(10.0);
    if lo >= hi {
        return (None, f64::INFINITY);
    }
    let pad = 1e-6 * (hi - lo);
    let xs: Vec<f64> = (0..PHI_POINTS)
        .map(|k| lo + pad + (hi - lo - 2.0 * pad) * k as f64 / (PHI_POINTS - 1) as f64)
        .collect();
    let pts: Option<Vec<(f64, f64)>> = xs
        .iter()
        .map(|&x| Some((a.eval(x).ok()?, b.eval(x).ok()?)))
        .collect();
    let Some(pts) = pts else {
        return (None, f64::INFINITY);
    };
    let n = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / n,
        pts.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let scale = pts.iter().map(|p| p.1.abs()).fold(1.0, f64::max);
    let residual = pts
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).abs())
        .fold(0.0, f64::max)
        / scale;
    if slope > 0.0 {
        (Some((slope, intercept)), residual)
    } else {
        (None, residual)
    }
}

fn penalty_candidates(a: &AmbiguityIndex, b: &AmbiguityIndex) -> Vec<Prior> {
    let n = a.dim();
    let mut resolution = 1;
    while resolution < 40 && binomial(resolution + 1 + n - 1, n - 1) <= PENALTY_POINTS {
        resolution += 1;
    }
    let mut points: Vec<Prior> = simplex_grid(n, resolution)
        .into_iter()
        .filter_map(|q| Prior::new(q).ok())
        .collect();
    for c in [a, b] {
        points.push(c.zero_penalty_prior());
        match c.kind() {
            AmbiguityKind::MaxminSet { priors } => points.extend(priors.iter().cloned()),
            AmbiguityKind::Tabulated { grid } => points.extend(grid.iter().map(|(q, _)| q.clone())),
            _ => {}
        }
    }
    points
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Whether preference A is more ambiguity averse than B: structurally, φ_B is a
/// positive affine image `a φ_A + b`, ψ coincides and `c_B / a ≥ c_A`; behaviorally,
/// whenever A weakly prefers an ambiguous variable to an unambiguous one, so does B.
pub fn is_more_ambiguity_averse(
    a: &Preference,
    b: &Preference,
    spec: &BatterySpec,
) -> Result<AversionComparison> {
    if a.state_ids() != b.state_ids() {
        return Err(Error::Shape(
            "preferences are defined on different state sets".into(),
        ));
    }
    let (fit, phi_residual) = fit_phi(a.phi(), b.phi());
    let phi_equivalent = fit.is_some() && phi_residual <= PHI_TOL;
    let psi_max_gap = (0..PSI_POINTS)
        .map(|k| {
            let p = k as f64 / (PSI_POINTS - 1) as f64;
            (a.psi().weight(p) - b.psi().weight(p)).abs()
        })
        .fold(0.0, f64::max);
    let scale = fit.map_or(1.0, |f| f.0);
    let candidates = penalty_candidates(a.c(), b.c());
    let mut penalty_points = 0;
    let mut penalty_violations = Vec::new();
    for q in &candidates {
        let (ca, cb) = match (a.c().penalty(q), b.c().penalty(q)) {
            (Ok(x), Ok(y)) => (x, y),
            (Err(Error::UnknownPrior(_)), _) | (_, Err(Error::UnknownPrior(_))) => continue,
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        penalty_points += 1;
        let scaled = cb / scale;
        let violated = if ca.is_infinite() {
            scaled.is_finite()
        } else {
            scaled < ca - tol(ca, PSI_TOL)
        };
        if violated {
            penalty_violations.push(q.weights().to_vec());
        }
    }
    let structural = StructuralComparison {
        phi_affine_fit: fit,
        phi_residual,
        phi_equivalent,
        psi_max_gap,
        psi_equal: psi_max_gap <= PSI_TOL,
        penalty_points,
        penalty_dominates: penalty_violations.is_empty(),
        penalty_violations,
    };

    let gen = Gen::new(a.state_ids(), a.phi(), spec)?;
    let behavioral = run_check("more_ambiguity_averse", spec, |rng| {
        let v = gen.ambiguous(rng)?;
        let lottery = gen.unambiguous(rng)?;
        let (ea, eb) = (a.evaluate(&v)?, b.evaluate(&v)?);
        let mut checks = Vec::new();
        if let CertaintyEquivalent::Value { value: m } = ea.certainty_equivalent {
            if let Some(bm) = applicable(b.phi().eval(m))? {
                checks.push(at_least(
                    "U_B(v) vs phi_B(CE_A(v))",
                    eb.value_utils,
                    bm,
                    EXACT_TOL,
                ));
            }
        }
        if ea.value_utils >= a.evaluate(&lottery)?.value_utils {
            if let Some(eb_l) = applicable(b.evaluate(&lottery))? {
                checks.push(at_least(
                    "U_B(v) vs U_B(lottery)",
                    eb.value_utils,
                    eb_l.value_utils,
                    EXACT_TOL,
                ));
            }
        }
        Ok(if checks.is_empty() {
            Outcome::Skip
        } else {
            worst(checks)
        })
    });
    let more_averse = structural.holds();
    Ok(AversionComparison {
        agree: more_averse == behavioral.passed(),
        more_averse,
        structural,
        behavioral,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (1..=n).map(|k| format!("w{k}")).collect()
    }

    fn small() -> BatterySpec {
        BatterySpec {
            cases: 40,
            ..BatterySpec::default()
        }
    }

    fn entropic(theta: f64, n: usize) -> Preference {
        Preference::new(
            UtilityFn::exponential(0.2).unwrap(),
            Distortion::prelec(0.8, 1.0).unwrap(),
            AmbiguityIndex::entropic(theta, Prior::uniform(n).unwrap()).unwrap(),
            ids(n),
        )
        .unwrap()
    }

    #[test]
    fn reports_are_deterministic() {
        let p = entropic(1.0, 3);
        let a = step1_properties(&p, &small()).unwrap();
        let b = step1_properties(&p, &small()).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.passed()), "{a:#?}");
    }

    #[test]
    fn reductions_pass() {
        for r in reduction_suite(&entropic(0.7, 2), &small()).unwrap() {
            assert!(r.passed(), "{r:#?}");
        }
    }

    #[test]
    fn identical_preferences_compare() {
        let p = entropic(1.0, 3);
        let cmp = is_more_ambiguity_averse(&p, &p, &small()).unwrap();
        assert!(cmp.more_averse && cmp.agree, "{cmp:#?}");
        assert!(cmp.behavioral.counterexamples.is_empty());
    }

    #[test]
    fn entropic_theta_ordering() {
        let (strong, weak) = (entropic(1.0, 2), entropic(2.0, 2));
        let forward = is_more_ambiguity_averse(&strong, &weak, &small()).unwrap();
        assert!(forward.more_averse && forward.agree, "{forward:#?}");
        let backward = is_more_ambiguity_averse(&weak, &strong, &small()).unwrap();
        assert!(!backward.more_averse && backward.agree, "{backward:#?}");
    }

    #[test]
    fn nested_maxmin_sets() {
        let uniform = Prior::uniform(2).unwrap();
        let wide = entropic(1.0, 2)
            .with_c(AmbiguityIndex::maxmin_simplex(2).unwrap())
            .unwrap();
        let narrow = wide
            .with_c(AmbiguityIndex::maxmin(vec![uniform]).unwrap())
            .unwrap();
        let forward = is_more_ambiguity_averse(&wide, &narrow, &small()).unwrap();
        assert!(forward.more_averse && forward.agree, "{forward:#?}");
        let backward = is_more_ambiguity_averse(&narrow, &wide, &small()).unwrap();
        assert!(
            !backward.structural.penalty_dominates && backward.agree,
            "{backward:#?}"
        );
    }

    #[test]
    fn rescaled_phi_is_equivalent() {
        let a = entropic(1.0, 2);
        // 3φ + 1 with c scaled by 3 is the same preference
        let b = Preference::new(
            UtilityFn::affine(3.0, 1.0).unwrap(),
            a.psi().clone(),
            AmbiguityIndex::entropic(3.0, Prior::uniform(2).unwrap()).unwrap(),
            ids(2),
        )
        .unwrap();
        let a = a.with_phi(UtilityFn::identity());
        let cmp = is_more_ambiguity_averse(&a, &b, &small()).unwrap();
        assert!(cmp.more_averse && cmp.agree, "{cmp:#?}");
        let (slope, intercept) = cmp.structural.phi_affine_fit.unwrap();
        assert!((slope - 3.0).abs() < 1e-9 && (intercept - 1.0).abs() < 1e-9);
    }

    #[test]
    fn nonaffine_phi_is_not_comparable() {
        let a = entropic(1.0, 2);
        let b = a.with_phi(UtilityFn::identity());
        let cmp = is_more_ambiguity_averse(&a, &b, &small()).unwrap();
        assert!(!cmp.structural.phi_equivalent);
    }

    #[test]
    fn aversion_check_passes() {
        let report = ambiguity_aversion_check(&entropic(0.5, 4), &small()).unwrap();
        assert!(report.passed(), "{report:#?}");
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(12, 2), 66);
        assert_eq!(binomial(7, 0), 1);
    }
}
