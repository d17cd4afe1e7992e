//! Probability weighting functions and distortion risk measures.
//!
//! The distorted (Choquet) integral of a payoff `X` under `ψ` is
//!
//! ```text
//! ∫ X dν_ψ = ∫_{-∞}^0 (ψ(P[X > t]) - 1) dt + ∫_0^∞ ψ(P[X > t]) dt
//! ```
//!
//! which for a finite support `x_1 < … < x_n` with survival `S_i = P[X > x_i]`
//! collapses to `x_1 + Σ (x_{i+1} - x_i) ψ(S_i)`. Value-at-Risk, Expected
//! Shortfall and weighted VaR are computed from the quantile function on their
//! own, so they can be checked against the Choquet form.

use std::fmt;

use serde::Serialize;

use crate::distribution::{DiscreteDistribution, PROB_TOL};
use crate::error::{Error, Result};
use crate::utility::{parse_knots, parse_number, parse_numbers};

const GRID_POINTS: usize = 1000;
const GRID_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistortionKind {
    Identity,
    /// `p^a`.
    Power {
        a: f64,
    },
    /// `exp(-β (-ln p)^α)`.
    Prelec {
        alpha: f64,
        beta: f64,
    },
    /// Tversky-Kahneman `p^γ / (p^γ + (1-p)^γ)^{1/γ}`.
    TverskyKahneman {
        gamma: f64,
    },
    /// `max(p - (1 - λ), 0) / λ`; the Choquet integral is minus ES at level λ.
    EsTail {
        lambda: f64,
    },
    /// `1{p >= 1 - λ}`; the Choquet integral is minus VaR at level λ.
    VarStep {
        lambda: f64,
    },
    /// `1 - (1 - p)^k`, the conjugate of `p^k`.
    DualPower {
        k: f64,
    },
    PiecewiseLinear {
        knots: Vec<(f64, f64)>,
    },
}

/// A non-decreasing `ψ: [0,1] → [0,1]` with `ψ(0) = 0` and `ψ(1) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distortion {
    kind: DistortionKind,
    is_continuous: bool,
    is_convex: bool,
}

impl Distortion {
    pub fn new(kind: DistortionKind) -> Result<Self> {
        use DistortionKind::*;
        let bad = |msg: String| Err(Error::Invalid(msg));
        let kind = match kind {
            Power { a } if !(a > 0.0 && a.is_finite()) => {
                return bad(format!("power distortion needs a > 0, got {a}"))
            }
            Prelec { alpha, beta }
                if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) =>
            {
                return bad(format!(
                    "prelec distortion needs alpha, beta > 0, got {alpha}, {beta}"
                ))
            }
            TverskyKahneman { gamma } if !(gamma > 0.28 && gamma <= 1.0) => {
                return bad(format!(
                    "tk distortion needs gamma in (0.28, 1], got {gamma}"
                ))
            }
            EsTail { lambda } if !(lambda > 0.0 && lambda <= 1.0) => {
                return bad(format!(
                    "es distortion needs lambda in (0, 1], got {lambda}"
                ))
            }
            VarStep { lambda } if !(lambda > 0.0 && lambda < 1.0) => {
                return bad(format!(
                    "var distortion needs lambda in (0, 1), got {lambda}"
                ))
            }
            DualPower { k } if !(k >= 1.0 && k.is_finite()) => {
                return bad(format!("dual power distortion needs k >= 1, got {k}"))
            }
            PiecewiseLinear { knots } => PiecewiseLinear {
                knots: normalize_knots(knots)?,
            },
            other => other,
        };

        let is_convex = match &kind {
            Identity | EsTail { .. } => true,
            Power { a } => *a >= 1.0,
            Prelec { alpha, beta } => *alpha == 1.0 && *beta >= 1.0,
            TverskyKahneman { gamma } => *gamma == 1.0,
            DualPower { k } => *k == 1.0,
            VarStep { .. } => false,
            PiecewiseLinear { knots } => knots
                .windows(3)
                .all(|w| slope(w[0], w[1]) <= slope(w[1], w[2]) + GRID_SLACK),
        };
        let psi = Distortion {
            is_continuous: !matches!(kind, VarStep { .. }),
            kind,
            is_convex,
        };
        psi.validate_on_grid()?;
        Ok(psi)
    }

    pub fn identity() -> Self {
        Self::new(DistortionKind::Identity).expect("identity is valid")
    }

    pub fn power(a: f64) -> Result<Self> {
        Self::new(DistortionKind::Power { a })
    }

    pub fn prelec(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(DistortionKind::Prelec { alpha, beta })
    }

    pub fn tversky_kahneman(gamma: f64) -> Result<Self> {
        Self::new(DistortionKind::TverskyKahneman { gamma })
    }

    pub fn es_tail(lambda: f64) -> Result<Self> {
        Self::new(DistortionKind::EsTail { lambda })
    }

    pub fn var_step(lambda: f64) -> Result<Self> {
        Self::new(DistortionKind::VarStep { lambda })
    }

    pub fn dual_power(k: f64) -> Result<Self> {
        Self::new(DistortionKind::DualPower { k })
    }

    pub fn piecewise_linear(knots: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(DistortionKind::PiecewiseLinear { knots })
    }

    pub fn kind(&self) -> &DistortionKind {
        &self.kind
    }

    pub fn is_continuous(&self) -> bool {
        self.is_continuous
    }

    pub fn is_convex(&self) -> bool {
        self.is_convex
    }

    fn validate_on_grid(&self) -> Result<()> {
        let at0 = self.weight(0.0);
        let at1 = self.weight(1.0);
        if at0.abs() > GRID_SLACK || (at1 - 1.0).abs() > GRID_SLACK {
            return Err(Error::Invalid(format!(
                "distortion has psi(0) = {at0}, psi(1) = {at1}"
            )));
        }
        let mut prev = at0;
        for k in 1..=GRID_POINTS {
            let p = k as f64 / GRID_POINTS as f64;
            let cur = self.weight(p);
            if !cur.is_finite() || cur < prev - GRID_SLACK {
                return Err(Error::Invalid(format!("distortion decreases near p = {p}")));
            }
            prev = cur;
        }
        Ok(())
    }

    /// `ψ(p)`.
    pub fn apply(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
        }
        Ok(self.weight(p))
    }

    pub(crate) fn weight(&self, p: f64) -> f64 {
        use DistortionKind::*;
        match &self.kind {
            Identity => p,
            Power { a } => p.powf(*a),
            Prelec { alpha, beta } => {
                if p <= 0.0 {
                    0.0
                } else {
                    (-beta * (-p.ln()).powf(*alpha)).exp()
                }
            }
            TverskyKahneman { gamma } => {
                if p <= 0.0 {
                    0.0
                } else {
                    let pg = p.powf(*gamma);
                    pg / (pg + (1.0 - p).powf(*gamma)).powf(1.0 / gamma)
                }
            }
            EsTail { lambda } => (p - (1.0 - lambda)).max(0.0) / lambda,
            VarStep { lambda } => {
                if p >= 1.0 - lambda - PROB_TOL {
                    1.0
                } else {
                    0.0
                }
            }
            DualPower { k } => 1.0 - (1.0 - p).powf(*k),
            PiecewiseLinear { knots } => {
                let idx = knots
                    .partition_point(|k| k.0 <= p)
                    .clamp(1, knots.len() - 1);
                let (a, b) = (knots[idx - 1], knots[idx]);
                a.1 + (p - a.0) * slope(a, b)
            }
        }
    }

    pub fn spec(&self) -> String {
        use DistortionKind::*;
        match &self.kind {
            Identity => "identity".into(),
            Power { a } => format!("power:{a}"),
            Prelec { alpha, beta } => format!("prelec:{alpha},{beta}"),
            TverskyKahneman { gamma } => format!("tk:{gamma}"),
            EsTail { lambda } => format!("es:{lambda}"),
            VarStep { lambda } => format!("var:{lambda}"),
            DualPower { k } => format!("dualpower:{k}"),
            PiecewiseLinear { knots } => {
                let parts: Vec<String> = knots.iter().map(|(p, y)| format!("{p},{y}")).collect();
                format!("pwl:{}", parts.join(";"))
            }
        }
    }

    /// Parses `identity | power:a | prelec:alpha,beta | tk:gamma | es:lambda | var:lambda | dualpower:k | pwl:p1,y1;...`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec == "identity" {
            return Ok(Self::identity());
        }
        let (name, args) = spec
            .split_once(':')
            .ok_or_else(|| Error::parse(spec, "expected `name:parameters`"))?;
        let one = || parse_number(spec, args);
        let kind = match name {
            "power" => DistortionKind::Power { a: one()? },
            "prelec" => {
                let v = parse_numbers(spec, args, ',')?;
                if v.len() != 2 {
                    return Err(Error::parse(spec, "prelec takes `alpha,beta`"));
                }
                DistortionKind::Prelec {
                    alpha: v[0],
                    beta: v[1],
                }
            }
            "tk" => DistortionKind::TverskyKahneman { gamma: one()? },
            "es" => DistortionKind::EsTail { lambda: one()? },
            "var" => DistortionKind::VarStep { lambda: one()? },
            "dualpower" => DistortionKind::DualPower { k: one()? },
            "pwl" => DistortionKind::PiecewiseLinear {
                knots: parse_knots(spec, args)?,
            },
            other => return Err(Error::parse(spec, format!("unknown distortion `{other}`"))),
        };
        Self::new(kind).map_err(|e| Error::parse(spec, e.to_string()))
    }
}

impl fmt::Display for Distortion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec())
    }
}

fn slope(a: (f64, f64), b: (f64, f64)) -> f64 {
    (b.1 - a.1) / (b.0 - a.0)
}

/// Adds the implicit `(0,0)` / `(1,1)` end knots and checks monotonicity.
fn normalize_knots(mut knots: Vec<(f64, f64)>) -> Result<Vec<(f64, f64)>> {
    if knots
        .iter()
        .any(|(p, y)| !(0.0..=1.0).contains(p) || !(0.0..=1.0).contains(y))
    {
        return Err(Error::Invalid(
            "distortion knots must lie in [0,1] x [0,1]".into(),
        ));
    }
    if knots.first().is_none_or(|k| k.0 != 0.0) {
        knots.insert(0, (0.0, 0.0));
    }
    if knots.last().is_none_or(|k| k.0 != 1.0) {
        knots.push((1.0, 1.0));
    }
    if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::Invalid(
            "distortion knots must have strictly increasing p".into(),
        ));
    }
    if knots.windows(2).any(|w| w[1].1 < w[0].1) {
        return Err(Error::Invalid(
            "distortion knots must be non-decreasing".into(),
        ));
    }
    Ok(knots)
}

/// `∫ X dν_ψ` for a finite-support `X`.
pub fn choquet(d: &DiscreteDistribution, psi: &Distortion) -> f64 {
    if psi.kind == DistortionKind::Identity {
        return d.values().iter().zip(d.probs()).map(|(x, p)| x * p).sum();
    }
    let xs = d.values();
    let survival = d.survival();
    xs[0]
        + xs.windows(2)
            .zip(&survival)
            .map(|(w, &s)| (w[1] - w[0]) * psi.weight(s))
            .sum::<f64>()
}

/// `VaR_λ(X) = inf { t : P[-X <= t] >= 1 - λ }`.
pub fn value_at_risk(d: &DiscreteDistribution, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Domain(format!("VaR level {lambda} outside (0, 1)")));
    }
    d.negate().quantile(1.0 - lambda)
}

/// `ES_λ(X) = (1/λ) ∫_0^λ VaR_γ(X) dγ`, integrated exactly over the VaR steps.
pub fn expected_shortfall(d: &DiscreteDistribution, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Domain(format!("ES level {lambda} outside (0, 1]")));
    }
    // VaR_γ equals the loss atom l_j for γ in [1 - G_j, 1 - G_{j-1}).
    let loss = d.negate();
    let mut upper: f64 = 1.0;
    let mut total = 0.0;
    for (&l, &g) in loss.values().iter().zip(loss.cumulative()) {
        let lower = 1.0 - g;
        let width = upper.min(lambda) - lower.max(0.0);
        if width > 0.0 {
            total += l * width;
        }
        upper = lower;
    }
    Ok(total / lambda)
}

/// `∫_0^1 VaR_γ(X) dψ(1 - γ)` as a signed Stieltjes sum over the VaR steps.
///
/// Requires a continuous ψ unless VaR itself is continuous (one-point support).
pub fn weighted_var(d: &DiscreteDistribution, psi: &Distortion) -> Result<f64> {
    if !psi.is_continuous() && d.len() > 1 {
        return Err(Error::Unsupported(format!(
            "weighted VaR with discontinuous distortion `{psi}` and a discrete distribution"
        )));
    }
    let loss = d.negate();
    let mut breaks: Vec<f64> = std::iter::once(0.0)
        .chain(loss.cumulative().iter().map(|g| 1.0 - g))
        .chain(std::iter::once(1.0))
        .map(|g| g.clamp(0.0, 1.0))
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let var = value_at_risk(d, 0.5 * (a + b))?;
        total += var * (psi.weight(1.0 - b) - psi.weight(1.0 - a));
    }
    Ok(total)
}
