//! Utility functions and the subjective-mixture algebra.
//!
//! Subjective operations combine payoffs through their utilities rather than
//! their amounts: the α-mixture of `x` and `y` is the payoff `r` with
//! `φ(r) = αφ(x) + (1-α)φ(y)`, and the subjective sum `x ⊕ y` doubles the
//! half-mixture, which under `φ̂ = φ - φ(0)` reads `φ̂(x ⊕ y) = φ̂(x) + φ̂(y)`.
//! Every operation here is invariant under positive affine maps of φ.

use std::fmt;

use serde::Serialize;

use crate::distribution::TwoStageVariable;
use crate::error::{Error, Result};

/// A real interval; finite ends are closed, infinite ends open unless flagged otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_closed: lo.is_finite(),
            hi_closed: hi.is_finite(),
        }
    }

    pub fn real_line() -> Self {
        Self::new(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed {
            x >= self.lo
        } else {
            x > self.lo
        };
        let below = if self.hi_closed {
            x <= self.hi
        } else {
            x < self.hi
        };
        !x.is_nan() && above && below
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lo_closed { '[' } else { '(' };
        let r = if self.hi_closed { ']' } else { ')' };
        write!(f, "{l}{}, {}{r}", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UtilityKind {
    /// `a t + b`, `a > 0`.
    Affine { a: f64, b: f64 },
    /// `(1 - e^{-a t}) / a`, `a != 0`; concave for `a > 0`.
    Exponential { a: f64 },
    /// Signed power `sign(t) |t|^r` on the stated domain.
    Power { r: f64 },
    /// Linear interpolation between strictly increasing knots.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
}

/// A strictly increasing continuous utility with its domain and exact image.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilityFn {
    kind: UtilityKind,
    domain: Interval,
    image: Interval,
}

impl UtilityFn {
    pub fn affine(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::Invalid(format!(
                "affine utility needs a > 0 and finite b, got a={a}, b={b}"
            )));
        }
        Ok(UtilityFn {
            kind: UtilityKind::Affine { a, b },
            domain: Interval::real_line(),
            image: Interval::real_line(),
        })
    }

    pub fn identity() -> Self {
        Self::affine(1.0, 0.0).expect("valid parameters")
    }

    pub fn exponential(a: f64) -> Result<Self> {
        if !(a != 0.0 && a.is_finite()) {
            return Err(Error::Invalid(format!(
                "exponential utility needs finite a != 0, got {a}"
            )));
        }
        let bound = 1.0 / a;
        let image = if a > 0.0 {
            Interval {
                lo: f64::NEG_INFINITY,
                hi: bound,
                lo_closed: false,
                hi_closed: false,
            }
        } else {
            Interval {
                lo: bound,
                hi: f64::INFINITY,
                lo_closed: false,
                hi_closed: false,
            }
        };
        Ok(UtilityFn {
            kind: UtilityKind::Exponential { a },
            domain: Interval::real_line(),
            image,
        })
    }

    /// Signed power `sign(t)|t|^r` on `[lo, hi]` (infinite ends open).
    pub fn power(r: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Invalid(format!(
                "power utility needs finite r > 0, got {r}"
            )));
        }
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::Invalid(format!(
                "power utility domain [{lo}, {hi}] is empty"
            )));
        }
        let domain = Interval::new(lo, hi);
        let f = |t: f64| signed_pow(t, r);
        let image = Interval {
            lo: f(lo),
            hi: f(hi),
            lo_closed: domain.lo_closed,
            hi_closed: domain.hi_closed,
        };
        Ok(UtilityFn {
            kind: UtilityKind::Power { r },
            domain,
            image,
        })
    }

    pub fn piecewise_linear(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Invalid(
                "piecewise-linear utility needs at least two knots".into(),
            ));
        }
        if knots.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::Invalid(
                "piecewise-linear utility knots must be finite".into(),
            ));
        }
        if knots
            .windows(2)
            .any(|w| w[1].0 <= w[0].0 || w[1].1 <= w[0].1)
        {
            return Err(Error::Invalid(
                "piecewise-linear utility knots must be strictly increasing in both coordinates"
                    .into(),
            ));
        }
        let (first, last) = (knots[0], knots[knots.len() - 1]);
        Ok(UtilityFn {
            kind: UtilityKind::PiecewiseLinear { knots },
            domain: Interval::new(first.0, last.0),
            image: Interval::new(first.1, last.1),
        })
    }

    pub fn kind(&self) -> &UtilityKind {
        &self.kind
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn image(&self) -> Interval {
        self.image
    }

    /// `(a, b)` when φ is `a t + b` on the real line.
    pub fn affine_params(&self) -> Option<(f64, f64)> {
        match self.kind {
            UtilityKind::Affine { a, b } => Some((a, b)),
            _ => None,
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !self.domain.contains(t) {
            return Err(Error::Domain(format!(
                "{t} is outside the utility domain {}",
                self.domain
            )));
        }
        Ok(self.eval_unchecked(t))
    }

    fn eval_unchecked(&self, t: f64) -> f64 {
        match &self.kind {
            UtilityKind::Affine { a, b } => a * t + b,
            UtilityKind::Exponential { a } => -(-a * t).exp_m1() / a,
            UtilityKind::Power { r } => signed_pow(t, *r),
            UtilityKind::PiecewiseLinear { knots } => interpolate(knots, t, |k| k.0, |k| k.1),
        }
    }

    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !self.image.contains(y) {
            return Err(Error::ImageOverflow {
                utility: y,
                image: self.image.to_string(),
                location: None,
            });
        }
        let t = match &self.kind {
            UtilityKind::Affine { a, b } => (y - b) / a,
            UtilityKind::Exponential { a } => -(-a * y).ln_1p() / a,
            UtilityKind::Power { r } => signed_pow(y, 1.0 / r),
            UtilityKind::PiecewiseLinear { knots } => interpolate(knots, y, |k| k.1, |k| k.0),
        };
        Ok(t.clamp(self.domain.lo, self.domain.hi))
    }

    /// `φ⁻¹(αφ(x) + (1-α)φ(y))`, kept inside `[min(x,y), max(x,y)]`.
    pub fn subjective_mix(&self, x: f64, y: f64, alpha: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!(
                "mixture weight {alpha} outside [0, 1]"
            )));
        }
        let (fx, fy) = (self.eval(x)?, self.eval(y)?);
        let target = (alpha * fx + (1.0 - alpha) * fy).clamp(fx.min(fy), fx.max(fy));
        Ok(self.inverse(target)?.clamp(x.min(y), x.max(y)))
    }

    /// The payoff whose utility is the midpoint of those of `t` and `x`.
    pub fn preference_average(&self, t: f64, x: f64) -> Result<f64> {
        self.subjective_mix(t, x, 0.5)
    }

    /// `z` with `φ(z)/2 + φ(0)/2 = φ(x)`.
    pub fn preference_double(&self, x: f64) -> Result<f64> {
        let zero = self.eval(0.0)?;
        self.inverse(2.0 * self.eval(x)? - zero)
    }

    /// `x ⊕ y`, the doubling of the half-mixture.
    pub fn subjective_add(&self, x: f64, y: f64) -> Result<f64> {
        self.preference_double(self.preference_average(x, y)?)
    }

    /// Canonical grammar string, e.g. `exp:0.5`.
    pub fn spec(&self) -> String {
        match &self.kind {
            UtilityKind::Affine { a, b } => format!("affine:{a},{b}"),
            UtilityKind::Exponential { a } => format!("exp:{a}"),
            UtilityKind::Power { r } => {
                if self.domain.lo == 0.0 && self.domain.hi == f64::INFINITY {
                    format!("power:{r}")
                } else {
                    format!("power:{r}@{},{}", self.domain.lo, self.domain.hi)
                }
            }
            UtilityKind::PiecewiseLinear { knots } => {
                let parts: Vec<String> = knots.iter().map(|(x, y)| format!("{x},{y}")).collect();
                format!("pwl:{}", parts.join(";"))
            }
        }
    }

    /// Parses `affine:a,b | exp:a | power:r[@lo,hi] | pwl:x1,y1;x2,y2;... | identity`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec == "identity" {
            return Ok(Self::identity());
        }
        let (name, args) = spec
            .split_once(':')
            .ok_or_else(|| Error::parse(spec, "expected `name:parameters`"))?;
        let wrap = |e: Error| match e {
            Error::Parse { .. } => e,
            other => Error::parse(spec, other.to_string()),
        };
        match name {
            "affine" => {
                let v = parse_numbers(spec, args, ',')?;
                if v.len() != 2 {
                    return Err(Error::parse(spec, "affine takes `a,b`"));
                }
                Self::affine(v[0], v[1]).map_err(wrap)
            }
            "exp" => Self::exponential(parse_number(spec, args)?).map_err(wrap),
            "power" => {
                let (r, dom) = match args.split_once('@') {
                    Some((r, dom)) => {
                        let d = parse_numbers(spec, dom, ',')?;
                        if d.len() != 2 {
                            return Err(Error::parse(spec, "power domain takes `lo,hi`"));
                        }
                        (r, (d[0], d[1]))
                    }
                    None => (args, (0.0, f64::INFINITY)),
                };
                Self::power(parse_number(spec, r)?, dom.0, dom.1).map_err(wrap)
            }
            "pwl" => Self::piecewise_linear(parse_knots(spec, args)?).map_err(wrap),
            other => Err(Error::parse(spec, format!("unknown utility `{other}`"))),
        }
    }
}

impl fmt::Display for UtilityFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec())
    }
}

fn signed_pow(t: f64, r: f64) -> f64 {
    t.signum() * t.abs().powf(r)
}

fn interpolate(
    knots: &[(f64, f64)],
    t: f64,
    from: impl Fn(&(f64, f64)) -> f64,
    to: impl Fn(&(f64, f64)) -> f64,
) -> f64 {
    let idx = knots
        .partition_point(|k| from(k) <= t)
        .clamp(1, knots.len() - 1);
    let (k0, k1) = (&knots[idx - 1], &knots[idx]);
    let w = (t - from(k0)) / (from(k1) - from(k0));
    to(k0) + w * (to(k1) - to(k0))
}

pub(crate) fn parse_number(spec: &str, s: &str) -> Result<f64> {
    let s = s.trim();
    let v = match s {
        "inf" | "+inf" => f64::INFINITY,
        "-inf" => f64::NEG_INFINITY,
        _ => s
            .parse::<f64>()
            .map_err(|_| Error::parse(spec, format!("`{s}` is not a number")))?,
    };
    if v.is_nan() {
        return Err(Error::parse(spec, "NaN is not allowed"));
    }
    Ok(v)
}

pub(crate) fn parse_numbers(spec: &str, s: &str, sep: char) -> Result<Vec<f64>> {
    s.split(sep).map(|part| parse_number(spec, part)).collect()
}

pub(crate) fn parse_knots(spec: &str, s: &str) -> Result<Vec<(f64, f64)>> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|pair| {
            let v = parse_numbers(spec, pair, ',')?;
            if v.len() != 2 {
                return Err(Error::parse(spec, format!("knot `{pair}` is not `x,y`")));
            }
            Ok((v[0], v[1]))
        })
        .collect()
}

fn lift(
    v: &TwoStageVariable,
    u: &TwoStageVariable,
    phi: &UtilityFn,
    op: impl Fn(f64, f64) -> Result<f64>,
) -> Result<TwoStageVariable> {
    v.check_same_space(u)?;
    let domain = phi.domain();
    let mut payoffs = Vec::with_capacity(v.num_states());
    for (w, (rv, ru)) in v.payoffs().iter().zip(u.payoffs()).enumerate() {
        let state = &v.state_ids()[w];
        let row = rv
            .iter()
            .zip(ru)
            .enumerate()
            .map(|(s, (&x, &y))| {
                if let Some(&value) = [x, y].iter().find(|&&z| !domain.contains(z)) {
                    return Err(Error::OutOfDomain {
                        state: state.clone(),
                        outcome: s,
                        value,
                        domain: domain.to_string(),
                    });
                }
                op(x, y).map_err(|e| e.at(state, s))
            })
            .collect::<Result<Vec<f64>>>()?;
        payoffs.push(row);
    }
    v.with_payoffs(payoffs)
}

/// Point-wise `αṽ ⊕ (1-α)ũ`.
pub fn mix_variables(
    v: &TwoStageVariable,
    u: &TwoStageVariable,
    alpha: f64,
    phi: &UtilityFn,
) -> Result<TwoStageVariable> {
    lift(v, u, phi, |x, y| phi.subjective_mix(x, y, alpha))
}

/// Point-wise `ṽ ⊕ ũ`.
pub fn add_variables(
    v: &TwoStageVariable,
    u: &TwoStageVariable,
    phi: &UtilityFn,
) -> Result<TwoStageVariable> {
    lift(v, u, phi, |x, y| phi.subjective_add(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    // Bisection oracle for φ⁻¹, independent of the closed forms.
    fn bisect_inverse(phi: &UtilityFn, y: f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi.eval(mid).unwrap() < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn eval_inverse_examples() {
        let phi = UtilityFn::affine(2.0, 1.0).unwrap();
        assert_eq!(phi.eval(3.0).unwrap(), 7.0);
        assert_eq!(phi.inverse(7.0).unwrap(), 3.0);
        assert_eq!(UtilityFn::exponential(1.0).unwrap().eval(0.0).unwrap(), 0.0);
        let pwl = UtilityFn::piecewise_linear(vec![(0.0, 0.0), (1.0, 2.0)]).unwrap();
        assert_eq!(pwl.inverse(1.0).unwrap(), 0.5);
    }

    #[test]
    fn range_errors() {
        let pwl = UtilityFn::piecewise_linear(vec![(0.0, 0.0), (1.0, 2.0)]).unwrap();
        assert!(matches!(pwl.eval(1.5), Err(Error::Domain(_))));
        assert!(matches!(pwl.inverse(3.0), Err(Error::ImageOverflow { .. })));
        let exp = UtilityFn::exponential(1.0).unwrap();
        assert!(matches!(exp.inverse(1.0), Err(Error::ImageOverflow { .. })));
        assert!(UtilityFn::affine(0.0, 1.0).is_err());
        assert!(UtilityFn::exponential(0.0).is_err());
        assert!(UtilityFn::piecewise_linear(vec![(0.0, 0.0), (1.0, 0.0)]).is_err());
    }

    #[test]
    fn inverse_matches_bisection() {
        let cases = [
            (UtilityFn::exponential(0.7).unwrap(), -3.0, 3.0),
            (UtilityFn::exponential(-0.4).unwrap(), -3.0, 3.0),
            (
                UtilityFn::power(0.5, 0.0, f64::INFINITY).unwrap(),
                0.0,
                10.0,
            ),
            (
                UtilityFn::power(3.0, f64::NEG_INFINITY, f64::INFINITY).unwrap(),
                -3.0,
                3.0,
            ),
            (
                UtilityFn::piecewise_linear(vec![(-1.0, -3.0), (0.0, 0.0), (2.0, 1.0)]).unwrap(),
                -1.0,
                2.0,
            ),
        ];
        for (phi, lo, hi) in cases {
            for k in 1..10 {
                let t = lo + (hi - lo) * k as f64 / 10.0;
                let y = phi.eval(t).unwrap();
                let oracle = bisect_inverse(&phi, y, lo, hi);
                assert!(
                    close(phi.inverse(y).unwrap(), oracle, 1e-10),
                    "{phi} at {t}"
                );
                assert!(close(phi.inverse(y).unwrap(), t, 1e-10));
            }
        }
    }

    #[test]
    fn subjective_mix_examples() {
        let id = UtilityFn::identity();
        assert_eq!(id.subjective_mix(0.0, 10.0, 0.5).unwrap(), 5.0);
        let sq = UtilityFn::power(2.0, 0.0, f64::INFINITY).unwrap();
        // solve r^2 = (1 + 9) / 2
        assert!(close(
            sq.subjective_mix(1.0, 3.0, 0.5).unwrap(),
            5f64.sqrt(),
            1e-12
        ));
        let exp = UtilityFn::exponential(1.0).unwrap();
        assert_eq!(exp.subjective_mix(2.5, 2.5, 0.3).unwrap(), 2.5);
    }

    #[test]
    fn preference_average_examples() {
        assert_eq!(
            UtilityFn::identity().preference_average(0.0, 10.0).unwrap(),
            5.0
        );
        let exp = UtilityFn::exponential(1.0).unwrap();
        let target = 0.5 * (1.0 - (-1f64).exp());
        let oracle = bisect_inverse(&exp, target, 0.0, 1.0);
        let got = exp.preference_average(0.0, 1.0).unwrap();
        assert!(close(got, oracle, 1e-10));
        assert!((got - 0.37989).abs() < 5e-6);
        assert_eq!(exp.preference_average(-1.25, -1.25).unwrap(), -1.25);
    }

    #[test]
    fn preference_double_examples() {
        assert_eq!(
            UtilityFn::affine(1.0, 0.0)
                .unwrap()
                .preference_double(3.0)
                .unwrap(),
            6.0
        );
        assert_eq!(
            UtilityFn::affine(2.0, 5.0)
                .unwrap()
                .preference_double(3.0)
                .unwrap(),
            6.0
        );
        for phi in [
            UtilityFn::exponential(0.3).unwrap(),
            UtilityFn::power(2.0, 0.0, f64::INFINITY).unwrap(),
        ] {
            assert_eq!(phi.preference_double(0.0).unwrap(), 0.0);
        }
        // bounded image: 2φ(x) leaves (-inf, 1)
        let exp = UtilityFn::exponential(1.0).unwrap();
        assert!(matches!(
            exp.preference_double(2.0),
            Err(Error::ImageOverflow { .. })
        ));
    }

    #[test]
    fn subjective_add_examples() {
        assert_eq!(UtilityFn::identity().subjective_add(2.0, 3.0).unwrap(), 5.0);
        let cube = UtilityFn::power(3.0, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert!(close(
            cube.subjective_add(1.0, 1.0).unwrap(),
            2f64.powf(1.0 / 3.0),
            1e-12
        ));
        for x in [-2.0, 0.3, 4.0] {
            assert!(close(cube.subjective_add(x, 0.0).unwrap(), x, 1e-12));
        }
    }

    #[test]
    fn lifted_operations() {
        let ids: Vec<String> = vec!["a".into(), "b".into()];
        let id = UtilityFn::identity();
        let c1 = TwoStageVariable::constant(ids.clone(), 2.0).unwrap();
        let c2 = TwoStageVariable::constant(ids.clone(), 5.5).unwrap();
        assert_eq!(
            add_variables(&c1, &c2, &id).unwrap(),
            TwoStageVariable::constant(ids.clone(), 7.5).unwrap()
        );
        let v = TwoStageVariable::new(
            ids.clone(),
            vec![vec![0.5, 0.5], vec![0.1, 0.9]],
            vec![vec![1.0, 3.0], vec![-2.0, 4.0]],
        )
        .unwrap();
        let exp = UtilityFn::exponential(0.5).unwrap();
        assert_eq!(mix_variables(&v, &v, 0.3, &exp).unwrap(), v);

        let pwl = UtilityFn::piecewise_linear(vec![(-1.0, -1.0), (2.0, 2.0)]).unwrap();
        let big = v.map(|x| x * 10.0).unwrap();
        match add_variables(&v, &big, &pwl) {
            Err(Error::OutOfDomain {
                state,
                outcome,
                value,
                ..
            }) => {
                assert_eq!((state.as_str(), outcome, value), ("a", 0, 10.0));
            }
            other => panic!("unexpected {other:?}"),
        }
        match add_variables(&v, &v, &UtilityFn::exponential(1.0).unwrap()) {
            Err(Error::ImageOverflow {
                location: Some((state, outcome)),
                ..
            }) => {
                assert_eq!((state.as_str(), outcome), ("a", 0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_grammar() {
        assert_eq!(
            UtilityFn::parse("affine:2,1").unwrap(),
            UtilityFn::affine(2.0, 1.0).unwrap()
        );
        assert_eq!(
            UtilityFn::parse("exp:0.5").unwrap(),
            UtilityFn::exponential(0.5).unwrap()
        );
        assert_eq!(
            UtilityFn::parse("power:3@-inf,inf").unwrap(),
            UtilityFn::power(3.0, f64::NEG_INFINITY, f64::INFINITY).unwrap()
        );
        assert_eq!(
            UtilityFn::parse("power:0.5").unwrap().domain(),
            Interval::new(0.0, f64::INFINITY)
        );
        let pwl = UtilityFn::parse("pwl:0,0;1,2;3,3").unwrap();
        assert_eq!(UtilityFn::parse(&pwl.spec()).unwrap(), pwl);
        for bad in [
            "affine:1", "exp:0", "exp:x", "bogus:1", "pwl:0,0", "nocolon",
        ] {
            assert!(
                matches!(UtilityFn::parse(bad), Err(Error::Parse { .. })),
                "{bad}"
            );
        }
    }

    fn arb_phi() -> impl Strategy<Value = UtilityFn> {
        prop_oneof![
            (0.1f64..3.0, -2.0f64..2.0).prop_map(|(a, b)| UtilityFn::affine(a, b).unwrap()),
            (-0.3f64..0.3)
                .prop_filter("nonzero", |a| a.abs() > 0.01)
                .prop_map(|a| UtilityFn::exponential(a).unwrap()),
            (0.3f64..3.0)
                .prop_map(|r| UtilityFn::power(r, f64::NEG_INFINITY, f64::INFINITY).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn affine_invariance_closed_form(a0 in 0.1f64..3.0, b0 in -2.0f64..2.0, a in 0.1f64..5.0, b in -5.0f64..5.0,
                                         x in -2.0f64..2.0, y in -2.0f64..2.0, alpha in 0.0f64..1.0) {
            let phi = UtilityFn::affine(a0, b0).unwrap();
            let scaled = UtilityFn::affine(a * a0, a * b0 + b).unwrap();
            prop_assert!(close(phi.subjective_mix(x, y, alpha).unwrap(), scaled.subjective_mix(x, y, alpha).unwrap(), 1e-10));
            prop_assert!(close(phi.subjective_add(x, y).unwrap(), scaled.subjective_add(x, y).unwrap(), 1e-10));
            prop_assert!(close(phi.preference_double(x).unwrap(), scaled.preference_double(x).unwrap(), 1e-10));
        }

        #[test]
        fn affine_invariance_interpolated(phi in arb_phi(), a in 0.1f64..5.0, b in -5.0f64..5.0,
                                          x in -2.0f64..2.0, y in -2.0f64..2.0, alpha in 0.0f64..1.0) {
            // interpolants of φ and aφ + b on the same knots: the second is exactly an affine map of the first
            let grid: Vec<f64> = (0..=400).map(|k| -6.0 + 12.0 * k as f64 / 400.0).collect();
            let base = UtilityFn::piecewise_linear(grid.iter().map(|&t| (t, phi.eval(t).unwrap())).collect()).unwrap();
            let scaled = UtilityFn::piecewise_linear(grid.iter().map(|&t| (t, a * phi.eval(t).unwrap() + b)).collect()).unwrap();
            prop_assert!(close(base.subjective_mix(x, y, alpha).unwrap(), scaled.subjective_mix(x, y, alpha).unwrap(), 1e-10));
            match (base.subjective_add(x, y), scaled.subjective_add(x, y)) {
                (Ok(l), Ok(r)) => prop_assert!(close(l, r, 1e-10)),
                (Err(Error::ImageOverflow { .. }), Err(Error::ImageOverflow { .. })) => {}
                other => prop_assert!(false, "overflow disagrees: {other:?}"),
            }
        }

        #[test]
        fn add_commutative_associative_neutral(phi in arb_phi(), x in -2.0f64..2.0, y in -2.0f64..2.0, z in -2.0f64..2.0) {
            let sums = (|| {
                let xy = phi.subjective_add(x, y)?;
                Ok::<_, Error>((xy, phi.subjective_add(xy, z)?, phi.subjective_add(x, phi.subjective_add(y, z)?)?))
            })();
            prop_assume!(!matches!(sums, Err(Error::ImageOverflow { .. })));
            let (xy, left, right) = sums.unwrap();
            prop_assert_eq!(xy, phi.subjective_add(y, x).unwrap());
            prop_assert!(close(left, right, 1e-10));
            prop_assert!(close(phi.subjective_add(x, 0.0).unwrap(), x, 1e-10));
            prop_assert_eq!(xy, phi.preference_double(phi.subjective_mix(x, y, 0.5).unwrap()).unwrap());
        }

        #[test]
        fn mix_monotone_and_bracketed(phi in arb_phi(), x in -2.0f64..2.0, y in -2.0f64..2.0, d in 0.0f64..1.0, alpha in 0.0f64..1.0) {
            let m = phi.subjective_mix(x, y, alpha).unwrap();
            prop_assert!(m >= x.min(y) && m <= x.max(y));
            prop_assert!(phi.subjective_mix(x + d, y, alpha).unwrap() >= m - 1e-12);
            prop_assert!(phi.subjective_mix(x, y + d, alpha).unwrap() >= m - 1e-12);
        }
    }
}
