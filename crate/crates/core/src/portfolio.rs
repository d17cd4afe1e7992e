//! Mean-risk portfolio selection over finite scenario sets.
//!
//! The risk of a portfolio payoff `ṽ` is `ρ(ṽ) = -CE(ṽ)` under an affine utility,
//! a robustified weighted VaR; the criterion is `E_P[ṽ] - ρ(ṽ)` for a separately
//! supplied mean prior `P`.

use std::cmp::Ordering;
use std::io::Read;

use rayon::prelude::*;
use serde::Serialize;

use crate::ambiguity::{simplex_grid, Prior};
use crate::distribution::{TwoStageVariable, PROB_TOL};
use crate::error::{Error, Result};
use crate::evaluator::Preference;

/// Per-state, per-outcome asset returns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioPanel {
    assets: Vec<String>,
    state_ids: Vec<String>,
    outcome_probs: Vec<Vec<f64>>,
    /// `returns[w][s][asset]`.
    returns: Vec<Vec<Vec<f64>>>,
}

impl ScenarioPanel {
    pub fn new(
        assets: Vec<String>,
        state_ids: Vec<String>,
        outcome_probs: Vec<Vec<f64>>,
        returns: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        if assets.is_empty() {
            return Err(Error::Invalid("a panel needs at least one asset".into()));
        }
        if returns.len() != state_ids.len() {
            return Err(Error::Shape(format!(
                "{} states but {} return blocks",
                state_ids.len(),
                returns.len()
            )));
        }
        for (w, block) in returns.iter().enumerate() {
            if block.len() != outcome_probs.get(w).map_or(0, Vec::len) {
                return Err(Error::Shape(format!(
                    "state `{}`: outcome count mismatch",
                    state_ids[w]
                )));
            }
            for row in block {
                if row.len() != assets.len() {
                    return Err(Error::Shape(format!(
                        "state `{}`: {} returns for {} assets",
                        state_ids[w],
                        row.len(),
                        assets.len()
                    )));
                }
                if row.iter().any(|r| !r.is_finite()) {
                    return Err(Error::Invalid(format!(
                        "state `{}`: non-finite return",
                        state_ids[w]
                    )));
                }
            }
        }
        // validates probabilities and the shared outcome index set
        TwoStageVariable::new(
            state_ids.clone(),
            outcome_probs.clone(),
            returns.iter().map(|b| vec![0.0; b.len()]).collect(),
        )?;
        Ok(ScenarioPanel {
            assets,
            state_ids,
            outcome_probs,
            returns,
        })
    }

    /// Reads `state,prob,outcome,<asset>,...`; rows of a state are its outcomes in order.
    pub fn from_csv(source: &str, reader: impl Read) -> Result<Self> {
        let at = |line: u64, reason: String| Error::Parse {
            input: format!("{source}:{line}"),
            reason,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers().map_err(|e| at(1, e.to_string()))?.clone();
        let expected = ["state", "prob", "outcome"];
        if header.len() < 4 || header.iter().take(3).ne(expected) {
            return Err(at(
                1,
                "header must be `state,prob,outcome,<asset>,...`".into(),
            ));
        }
        let assets: Vec<String> = header.iter().skip(3).map(str::to_string).collect();
        let mut state_ids: Vec<String> = Vec::new();
        let mut probs: Vec<Vec<f64>> = Vec::new();
        let mut returns: Vec<Vec<Vec<f64>>> = Vec::new();
        for record in rdr.records() {
            let record =
                record.map_err(|e| at(e.position().map_or(0, |p| p.line()), e.to_string()))?;
            let line = record.position().map_or(0, |p| p.line());
            let num = |i: usize| -> Result<f64> {
                record[i].parse::<f64>().map_err(|_| {
                    at(
                        line,
                        format!(
                            "`{}` in column `{}` is not a number",
                            &record[i], &header[i]
                        ),
                    )
                })
            };
            let state = record[0].to_string();
            let w = match state_ids.iter().position(|s| *s == state) {
                Some(w) if w + 1 == state_ids.len() => w,
                Some(_) => {
                    return Err(at(
                        line,
                        format!("rows of state `{state}` are not contiguous"),
                    ))
                }
                None => {
                    state_ids.push(state);
                    probs.push(Vec::new());
                    returns.push(Vec::new());
                    state_ids.len() - 1
                }
            };
            probs[w].push(num(1)?);
            returns[w].push((3..record.len()).map(num).collect::<Result<_>>()?);
        }
        if state_ids.is_empty() {
            return Err(at(1, "panel has no rows".into()));
        }
        for (w, p) in probs.iter().enumerate() {
            let total: f64 = p.iter().sum();
            if (total - 1.0).abs() > PROB_TOL {
                return Err(Error::Parse {
                    input: source.to_string(),
                    reason: format!("probabilities of state `{}` sum to {total}", state_ids[w]),
                });
            }
        }
        Self::new(assets, state_ids, probs, returns).map_err(|e| Error::Parse {
            input: source.to_string(),
            reason: e.to_string(),
        })
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    pub fn state_ids(&self) -> &[String] {
        &self.state_ids
    }

    pub fn outcome_probs(&self) -> &[Vec<f64>] {
        &self.outcome_probs
    }

    pub fn returns(&self) -> &[Vec<Vec<f64>>] {
        &self.returns
    }

    pub fn num_assets(&self) -> usize {
        self.assets.len()
    }

    /// Every return multiplied by `a`.
    pub fn scaled(&self, a: f64) -> Self {
        ScenarioPanel {
            returns: self
                .returns
                .iter()
                .map(|b| {
                    b.iter()
                        .map(|row| row.iter().map(|r| a * r).collect())
                        .collect()
                })
                .collect(),
            ..self.clone()
        }
    }
}

/// Portfolio weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Weights(Vec<f64>);

impl Weights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() || w.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid(format!(
                "weights {w:?} are empty or not finite"
            )));
        }
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::Invalid(format!("weights {w:?} sum to {total}")));
        }
        Ok(Weights(w))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Box constraints `lower ≤ w ≤ upper` on top of the budget constraint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constraints {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Constraints {
    pub fn long_only(n: usize) -> Self {
        Constraints {
            lower: vec![0.0; n],
            upper: vec![1.0; n],
        }
    }

    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let ok = lower.len() == upper.len()
            && lower
                .iter()
                .zip(&upper)
                .all(|(l, u)| l.is_finite() && u.is_finite() && l <= u)
            && lower.iter().sum::<f64>() <= 1.0 + PROB_TOL
            && upper.iter().sum::<f64>() >= 1.0 - PROB_TOL;
        if !ok {
            return Err(Error::Invalid(
                "bounds must be finite, ordered and admit weights summing to one".into(),
            ));
        }
        Ok(Constraints { lower, upper })
    }

    pub fn admits(&self, w: &[f64]) -> bool {
        w.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (l, u))| *x >= l - PROB_TOL && *x <= u + PROB_TOL)
    }
}

/// Payoff `Σ_a w_a r_a` in every state and outcome.
pub fn portfolio_variable(panel: &ScenarioPanel, w: &Weights) -> Result<TwoStageVariable> {
    if w.0.len() != panel.num_assets() {
        return Err(Error::Shape(format!(
            "{} weights for {} assets",
            w.0.len(),
            panel.num_assets()
        )));
    }
    let payoffs = panel
        .returns
        .iter()
        .map(|block| {
            block
                .iter()
                .map(|row| row.iter().zip(&w.0).map(|(r, x)| r * x).sum())
                .collect()
        })
        .collect();
    TwoStageVariable::new(
        panel.state_ids.clone(),
        panel.outcome_probs.clone(),
        payoffs,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanRisk {
    pub mean: f64,
    pub risk: f64,
    pub objective: f64,
}

/// `E_P[ṽ] - ρ(ṽ)` with `ρ = -CE` under the (affine) utility of `pref`.
pub fn mean_risk_objective(
    panel: &ScenarioPanel,
    w: &Weights,
    p_mean: &Prior,
    pref: &Preference,
) -> Result<MeanRisk> {
    let (a, b) = pref.phi().affine_params().ok_or_else(|| {
        Error::Configuration(format!(
            "mean-risk objective needs an affine utility, got `{}`",
            pref.phi()
        ))
    })?;
    if p_mean.len() != panel.state_ids.len() {
        return Err(Error::Shape(format!(
            "mean prior over {} states, panel has {}",
            p_mean.len(),
            panel.state_ids.len()
        )));
    }
    let v = portfolio_variable(panel, w)?;
    let per_state: Vec<f64> = v
        .outcome_probs()
        .iter()
        .zip(v.payoffs())
        .map(|(p, x)| p.iter().zip(x).map(|(p, x)| p * x).sum())
        .collect();
    let mean = p_mean.expect(&per_state);
    let risk = -(pref.evaluate(&v)?.value_utils - b) / a;
    Ok(MeanRisk {
        mean,
        risk,
        objective: mean - risk,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizeOptions {
    /// Denominator of the coarse simplex grid.
    pub resolution: usize,
    /// Maximum number of objective evaluations.
    pub budget: usize,
    /// Smallest polish step.
    pub min_step: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            resolution: 10,
            budget: 20_000,
            min_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracePoint {
    pub weights: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Optimum {
    pub weights: Weights,
    pub value: MeanRisk,
    pub evaluations: usize,
    pub trace: Vec<TracePoint>,
}

/// Better objective first, then lexicographically smaller weights.
fn better(a: &TracePoint, b: &TracePoint) -> bool {
    match a.objective.total_cmp(&b.objective) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => {
            a.weights
                .iter()
                .zip(&b.weights)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                == Some(Ordering::Less)
        }
    }
}

fn coarse_grid(c: &Constraints, resolution: usize) -> Vec<Vec<f64>> {
    let free = 1.0 - c.lower.iter().sum::<f64>();
    simplex_grid(c.lower.len(), resolution)
        .into_iter()
        .map(|p| {
            p.iter()
                .zip(&c.lower)
                .map(|(x, l)| l + free * x)
                .collect::<Vec<f64>>()
        })
        .filter(|w| c.admits(w))
        .collect()
}

/// Coarse simplex grid search followed by pairwise coordinate polish with step halving.
pub fn optimize(
    panel: &ScenarioPanel,
    p_mean: &Prior,
    pref: &Preference,
    constraints: &Constraints,
    options: &OptimizeOptions,
) -> Result<Optimum> {
    let n = panel.num_assets();
    if constraints.lower.len() != n {
        return Err(Error::Shape(format!(
            "constraints for {} assets, panel has {n}",
            constraints.lower.len()
        )));
    }
    let resolution = options.resolution.max(1);
    let grid = coarse_grid(constraints, resolution);
    if grid.is_empty() {
        return Err(Error::Invalid(
            "no coarse grid point satisfies the constraints".into(),
        ));
    }
    if options.budget < grid.len() {
        return Err(Error::Budget {
            budget: options.budget,
            required: grid.len(),
        });
    }
    let eval = |w: &[f64]| -> Result<TracePoint> {
        let weights = Weights::new(w.to_vec())?;
        Ok(TracePoint {
            objective: mean_risk_objective(panel, &weights, p_mean, pref)?.objective,
            weights: w.to_vec(),
        })
    };
    let mut trace: Vec<TracePoint> = grid.par_iter().map(|w| eval(w)).collect::<Result<_>>()?;
    let mut best = trace
        .iter()
        .fold(None::<&TracePoint>, |acc, t| match acc {
            Some(b) if !better(t, b) => Some(b),
            _ => Some(t),
        })
        .expect("grid is non-empty")
        .clone();

    let mut step = 1.0 / resolution as f64;
    'polish: while step >= options.min_step {
        let mut moves = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let mut w = best.weights.clone();
                w[i] += step;
                w[j] -= step;
                if constraints.admits(&w) {
                    moves.push(w);
                }
            }
        }
        let remaining = options.budget - trace.len();
        let truncated = moves.len() > remaining;
        moves.truncate(remaining);
        let round: Vec<TracePoint> = moves.par_iter().map(|w| eval(w)).collect::<Result<_>>()?;
        let candidate = round.iter().fold(None::<&TracePoint>, |acc, t| match acc {
            Some(b) if !better(t, b) => Some(b),
            _ => Some(t),
        });
        let improved = candidate.filter(|c| c.objective > best.objective).cloned();
        trace.extend(round);
        match improved {
            Some(c) => best = c,
            None => step /= 2.0,
        }
        if truncated || trace.len() >= options.budget {
            break 'polish;
        }
    }

    let weights = Weights::new(best.weights.clone())?;
    let value = mean_risk_objective(panel, &weights, p_mean, pref)?;
    Ok(Optimum {
        weights,
        value,
        evaluations: trace.len(),
        trace,
    })
}
