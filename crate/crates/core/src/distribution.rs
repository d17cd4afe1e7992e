//! Finite discrete distributions and two-stage random variables.
//!
//! A [`TwoStageVariable`] is a payoff matrix indexed by a state of the world `w`
//! (first stage, ambiguous) and an outcome `s` (second stage, with known
//! probabilities `P^w`). Its per-state marginals are [`DiscreteDistribution`]s.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::utility::UtilityFn;

// Compensated summation, so tied atoms merge to the correctly rounded mass.
#[derive(Default)]
struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        self.compensation += if self.sum.abs() >= x.abs() {
            (self.sum - t) + x
        } else {
            (x - t) + self.sum
        };
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Tolerance on probability sums.
pub const PROB_TOL: f64 = 1e-12;

/// Support points closer than this are merged.
pub const MERGE_TOL: f64 = 1e-12;

/// A probability law with finite support, values strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteDistribution {
    values: Vec<f64>,
    probs: Vec<f64>,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

fn check_probs(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::Invalid("empty probability vector".into()));
    }
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::Invalid(format!(
                "probability {p} at index {i} is not a finite non-negative number"
            )));
        }
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::Invalid(format!(
            "probabilities sum to {total}, expected 1"
        )));
    }
    Ok(())
}

impl DiscreteDistribution {
    /// Builds a distribution from (possibly unsorted, possibly repeated) support points.
    ///
    /// Points within [`MERGE_TOL`] of each other are merged by summing their mass;
    /// zero-mass points are dropped.
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.len() != probs.len() {
            return Err(Error::Shape(format!(
                "{} values but {} probabilities",
                values.len(),
                probs.len()
            )));
        }
        check_probs(&probs)?;
        if let Some(x) = values.iter().find(|x| !x.is_finite()) {
            return Err(Error::Invalid(format!("support point {x} is not finite")));
        }

        let mut pairs: Vec<(f64, f64)> = values.into_iter().zip(probs).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut merged_values: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut merged_probs: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut group = NeumaierSum::default();
        for (x, p) in pairs {
            match merged_values.last() {
                Some(&last) if (x - last).abs() <= MERGE_TOL => group.add(p),
                _ => {
                    if !merged_values.is_empty() {
                        merged_probs.push(group.total());
                    }
                    merged_values.push(x);
                    group = NeumaierSum::default();
                    group.add(p);
                }
            }
        }
        merged_probs.push(group.total());
        let (values, probs): (Vec<f64>, Vec<f64>) = merged_values
            .into_iter()
            .zip(merged_probs)
            .filter(|&(_, p)| p > 0.0)
            .unzip();

        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        *cumulative.last_mut().unwrap() = 1.0;

        Ok(DiscreteDistribution {
            values,
            probs,
            cumulative,
        })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let (values, probs) = pairs.iter().copied().unzip();
        Self::new(values, probs)
    }

    /// The one-point distribution at `x`.
    pub fn point(x: f64) -> Self {
        DiscreteDistribution {
            values: vec![x],
            probs: vec![1.0],
            cumulative: vec![1.0],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn mean(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.probs)
            .map(|(x, p)| x * p)
            .sum()
    }

    /// `F(x_i)` at each support point; the last entry is exactly 1.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// `P(X > x_i)` at each support point, as tail sums; the last entry is exactly 0.
    pub fn survival(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        let mut acc = 0.0;
        for i in (0..self.len()).rev() {
            out[i] = acc;
            acc += self.probs[i];
        }
        out
    }

    /// Right-continuous CDF `P(X <= t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        let idx = self.values.partition_point(|&x| x <= t);
        if idx == 0 {
            0.0
        } else {
            self.cumulative[idx - 1]
        }
    }

    /// Left-continuous generalized inverse `inf { t : F(t) >= lambda }`.
    pub fn quantile(&self, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::Domain(format!(
                "quantile level {lambda} outside (0, 1)"
            )));
        }
        let idx = self
            .cumulative
            .partition_point(|&c| c < lambda - PROB_TOL)
            .min(self.len() - 1);
        Ok(self.values[idx])
    }

    /// Push-forward through `f`, re-sorting and merging the support.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.values.iter().map(|&x| f(x)).collect(),
            self.probs.clone(),
        )
    }

    /// Push-forward through a fallible map (for utilities with restricted domains).
    pub fn try_map(&self, f: impl Fn(f64) -> Result<f64>) -> Result<Self> {
        let values = self
            .values
            .iter()
            .map(|&x| f(x))
            .collect::<Result<Vec<_>>>()?;
        Self::new(values, self.probs.clone())
    }

    /// Law of `-X`.
    pub fn negate(&self) -> Self {
        self.map(|x| -x).expect("negation preserves validity")
    }

    /// `E[(t - X)^+]`, the integrated CDF up to `t`.
    pub fn integrated_cdf(&self, t: f64) -> f64 {
        self.values
            .iter()
            .zip(&self.probs)
            .take_while(|(&x, _)| x <= t)
            .map(|(&x, &p)| p * (t - x))
            .sum()
    }
}

/// Stochastic orders checked by [`dominance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StochasticOrder {
    Fsd,
    Ssd,
    PhiSsd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Dominates,
    Dominated,
    Incomparable,
    Equal,
}

/// Outcome of a dominance check of the first distribution against the second.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceReport {
    pub relation: Relation,
    pub order: StochasticOrder,
    /// A point where the first distribution fails to dominate the second; set iff incomparable.
    pub witness_t: Option<f64>,
}

fn merged_grid(d1: &DiscreteDistribution, d2: &DiscreteDistribution) -> Vec<f64> {
    let mut grid: Vec<f64> = d1.values().iter().chain(d2.values()).copied().collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mids: Vec<f64> = grid.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    grid.extend(mids);
    grid.sort_by(f64::total_cmp);
    grid
}

/// Compares two distributions under FSD, SSD or φ-SSD.
///
/// FSD compares CDFs, SSD compares integrated CDFs `E[(t - X)^+]`. Both are step /
/// piecewise-linear with kinks on the merged support, so checking the merged
/// support plus midpoints is exact. φ-SSD applies SSD to the push-forwards under φ.
pub fn dominance(
    d1: &DiscreteDistribution,
    d2: &DiscreteDistribution,
    order: StochasticOrder,
    phi: Option<&UtilityFn>,
) -> Result<DominanceReport> {
    let (a, b) = match order {
        StochasticOrder::PhiSsd => {
            let phi = phi.ok_or_else(|| {
                Error::Configuration("phi-SSD requires a utility function".into())
            })?;
            (d1.try_map(|x| phi.eval(x))?, d2.try_map(|x| phi.eval(x))?)
        }
        _ => (d1.clone(), d2.clone()),
    };
    let curve = |d: &DiscreteDistribution, t: f64| match order {
        StochasticOrder::Fsd => d.cdf(t),
        StochasticOrder::Ssd | StochasticOrder::PhiSsd => d.integrated_cdf(t),
    };

    let grid = merged_grid(&a, &b);
    let scale = grid.iter().fold(1.0_f64, |m, t| m.max(t.abs()));
    let tol = match order {
        StochasticOrder::Fsd => PROB_TOL,
        _ => PROB_TOL * scale,
    };

    let mut first_fails: Option<f64> = None;
    let mut second_fails = false;
    for &t in &grid {
        let (c1, c2) = (curve(&a, t), curve(&b, t));
        if c1 > c2 + tol && first_fails.is_none() {
            first_fails = Some(t);
        }
        if c2 > c1 + tol {
            second_fails = true;
        }
    }

    let (relation, witness_t) = match (first_fails, second_fails) {
        (None, false) => (Relation::Equal, None),
        (None, true) => (Relation::Dominates, None),
        (Some(_), false) => (Relation::Dominated, None),
        (Some(t), true) => (Relation::Incomparable, Some(t)),
    };
    Ok(DominanceReport {
        relation,
        order,
        witness_t,
    })
}

/// A bounded random variable on `W x S` with finitely many states and outcomes.
///
/// All states share the same outcome index set; `outcome_probs[w][s]` is `P^w(s)`
/// and `payoffs[w][s]` the monetary payoff.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoStageVariable {
    state_ids: Vec<String>,
    outcome_probs: Vec<Vec<f64>>,
    payoffs: Vec<Vec<f64>>,
}

impl TwoStageVariable {
    pub fn new(
        state_ids: Vec<String>,
        outcome_probs: Vec<Vec<f64>>,
        payoffs: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if state_ids.is_empty() {
            return Err(Error::Invalid("a variable needs at least one state".into()));
        }
        if outcome_probs.len() != state_ids.len() || payoffs.len() != state_ids.len() {
            return Err(Error::Shape(format!(
                "{} state ids, {} probability rows, {} payoff rows",
                state_ids.len(),
                outcome_probs.len(),
                payoffs.len()
            )));
        }
        for (i, id) in state_ids.iter().enumerate() {
            if state_ids[..i].contains(id) {
                return Err(Error::Invalid(format!("duplicate state id `{id}`")));
            }
        }
        let n_outcomes = payoffs[0].len();
        for ((id, probs), pay) in state_ids.iter().zip(&outcome_probs).zip(&payoffs) {
            if probs.len() != n_outcomes || pay.len() != n_outcomes {
                return Err(Error::Shape(format!(
                    "state `{id}` has {} probabilities and {} payoffs, expected {n_outcomes}",
                    probs.len(),
                    pay.len()
                )));
            }
            check_probs(probs).map_err(|e| Error::Invalid(format!("state `{id}`: {e}")))?;
            if let Some(x) = pay.iter().find(|x| !x.is_finite()) {
                return Err(Error::Invalid(format!(
                    "state `{id}`: payoff {x} is not finite"
                )));
            }
        }
        Ok(TwoStageVariable {
            state_ids,
            outcome_probs,
            payoffs,
        })
    }

    /// The same lottery in every state.
    pub fn unambiguous(state_ids: Vec<String>, probs: Vec<f64>, payoffs: Vec<f64>) -> Result<Self> {
        let n = state_ids.len();
        Self::new(state_ids, vec![probs; n], vec![payoffs; n])
    }

    /// A payoff that is constant across outcomes within each state (an element of `V'`).
    pub fn risk_free(state_ids: Vec<String>, per_state: Vec<f64>) -> Result<Self> {
        let n = state_ids.len();
        Self::new(
            state_ids,
            vec![vec![1.0]; n],
            per_state.into_iter().map(|x| vec![x]).collect(),
        )
    }

    pub fn constant(state_ids: Vec<String>, m: f64) -> Result<Self> {
        let n = state_ids.len();
        Self::risk_free(state_ids, vec![m; n])
    }

    pub fn state_ids(&self) -> &[String] {
        &self.state_ids
    }

    pub fn outcome_probs(&self) -> &[Vec<f64>] {
        &self.outcome_probs
    }

    pub fn payoffs(&self) -> &[Vec<f64>] {
        &self.payoffs
    }

    pub fn num_states(&self) -> usize {
        self.state_ids.len()
    }

    pub fn num_outcomes(&self) -> usize {
        self.payoffs[0].len()
    }

    pub fn state_index(&self, state: &str) -> Result<usize> {
        self.state_ids
            .iter()
            .position(|s| s == state)
            .ok_or_else(|| Error::UnknownState(state.to_string()))
    }

    /// Distribution of payoffs in `state`, duplicates merged.
    pub fn marginal(&self, state: &str) -> Result<DiscreteDistribution> {
        let idx = self.state_index(state)?;
        Ok(self.marginal_at(idx))
    }

    pub fn marginal_at(&self, idx: usize) -> DiscreteDistribution {
        DiscreteDistribution::new(self.payoffs[idx].clone(), self.outcome_probs[idx].clone())
            .expect("validated at construction")
    }

    /// Applies `f` to every payoff.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.state_ids.clone(),
            self.outcome_probs.clone(),
            self.payoffs
                .iter()
                .map(|row| row.iter().map(|&x| f(x)).collect())
                .collect(),
        )
    }

    /// Replaces the payoff matrix, keeping states and probabilities.
    pub fn with_payoffs(&self, payoffs: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(self.state_ids.clone(), self.outcome_probs.clone(), payoffs)
    }

    /// Same state ids and outcome count.
    pub fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.state_ids != other.state_ids {
            return Err(Error::Shape(
                "variables are defined on different state sets".into(),
            ));
        }
        if self.num_outcomes() != other.num_outcomes() {
            return Err(Error::Shape(format!(
                "outcome index sets differ in size ({} vs {})",
                self.num_outcomes(),
                other.num_outcomes()
            )));
        }
        Ok(())
    }

    /// Same shape and the same outcome probabilities, so point-wise arithmetic is meaningful.
    pub fn check_same_space(&self, other: &Self) -> Result<()> {
        self.check_same_shape(other)?;
        for (w, (a, b)) in self
            .outcome_probs
            .iter()
            .zip(&other.outcome_probs)
            .enumerate()
        {
            if a.iter().zip(b).any(|(x, y)| (x - y).abs() > PROB_TOL) {
                return Err(Error::Shape(format!(
                    "outcome probabilities differ in state `{}`",
                    self.state_ids[w]
                )));
            }
        }
        Ok(())
    }

    /// Point-wise combination of two variables on the same space.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_space(other)?;
        let payoffs = self
            .payoffs
            .iter()
            .zip(&other.payoffs)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect())
            .collect();
        self.with_payoffs(payoffs)
    }

    /// Every state carries the same marginal distribution.
    pub fn is_unambiguous(&self) -> bool {
        let first = self.marginal_at(0);
        (1..self.num_states()).all(|w| self.marginal_at(w) == first)
    }

    /// Payoff constant across outcomes within every state.
    pub fn is_risk_free(&self) -> bool {
        self.payoffs
            .iter()
            .all(|row| row.iter().all(|&x| x == row[0]))
    }
}

/// Whether `v` and `u` move weakly in tandem across outcomes in every state.
pub fn comonotonic(v: &TwoStageVariable, u: &TwoStageVariable) -> Result<bool> {
    v.check_same_shape(u)?;
    for (pv, pu) in v.payoffs().iter().zip(u.payoffs()) {
        for s in 0..pv.len() {
            for t in (s + 1)..pv.len() {
                if (pv[t] - pv[s]) * (pu[t] - pu[s]) < 0.0 {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dd(pairs: &[(f64, f64)]) -> DiscreteDistribution {
        DiscreteDistribution::from_pairs(pairs).unwrap()
    }

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("w{i}")).collect()
    }

    #[test]
    fn cdf_examples() {
        let d = dd(&[(0.0, 0.7), (100.0, 0.3)]);
        assert_eq!(d.cdf(50.0), 0.7);
        assert_eq!(d.cdf(100.0), 1.0);
        assert_eq!(d.cdf(-1.0), 0.0);
        let d = dd(&[(-50.0, 0.2), (10.0, 0.5), (20.0, 0.3)]);
        // cumulative-sum oracle
        let oracle: f64 = [(-50.0, 0.2), (10.0, 0.5), (20.0, 0.3)]
            .iter()
            .filter(|(x, _)| *x <= 10.0)
            .map(|(_, p)| p)
            .sum();
        assert!((d.cdf(10.0) - oracle).abs() < 1e-15);
        assert!((d.cdf(10.0) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn quantile_examples() {
        let d = dd(&[(0.0, 0.7), (100.0, 0.3)]);
        assert_eq!(d.quantile(0.7).unwrap(), 0.0);
        assert_eq!(d.quantile(0.71).unwrap(), 100.0);
        let p = DiscreteDistribution::point(5.0);
        for l in [0.01, 0.5, 0.99] {
            assert_eq!(p.quantile(l).unwrap(), 5.0);
        }
        assert!(matches!(d.quantile(0.0), Err(Error::Domain(_))));
        assert!(matches!(d.quantile(1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn construction_merges_and_validates() {
        let d = dd(&[(1.0, 0.25), (0.0, 0.5), (1.0 + 1e-13, 0.25)]);
        assert_eq!(d.values(), &[0.0, 1.0]);
        assert_eq!(d.probs(), &[0.5, 0.5]);
        assert!(DiscreteDistribution::from_pairs(&[(0.0, 0.5), (1.0, 0.49)]).is_err());
        assert!(DiscreteDistribution::from_pairs(&[(0.0, -0.1), (1.0, 1.1)]).is_err());
        assert!(DiscreteDistribution::from_pairs(&[(f64::NAN, 1.0)]).is_err());
    }

    #[test]
    fn marginal_examples() {
        let v =
            TwoStageVariable::new(ids(1), vec![vec![0.3, 0.7]], vec![vec![100.0, 0.0]]).unwrap();
        assert_eq!(v.marginal("w0").unwrap(), dd(&[(0.0, 0.7), (100.0, 0.3)]));
        let v = TwoStageVariable::new(ids(1), vec![vec![0.5, 0.5]], vec![vec![1.0, 1.0]]).unwrap();
        assert_eq!(v.marginal("w0").unwrap(), DiscreteDistribution::point(1.0));
        assert!(matches!(v.marginal("nope"), Err(Error::UnknownState(_))));
    }

    #[test]
    fn two_stage_validation() {
        assert!(
            TwoStageVariable::new(ids(1), vec![vec![0.5, 0.49]], vec![vec![0.0, 1.0]]).is_err()
        );
        assert!(TwoStageVariable::new(
            ids(2),
            vec![vec![1.0], vec![0.5, 0.5]],
            vec![vec![0.0], vec![0.0, 1.0]]
        )
        .is_err());
        assert!(TwoStageVariable::new(
            vec!["a".into(), "a".into()],
            vec![vec![1.0]; 2],
            vec![vec![0.0]; 2]
        )
        .is_err());
    }

    #[test]
    fn comonotonic_examples() {
        let v = TwoStageVariable::unambiguous(ids(2), vec![0.2, 0.3, 0.5], vec![1.0, 2.0, 3.0])
            .unwrap();
        let u = TwoStageVariable::unambiguous(ids(2), vec![0.2, 0.3, 0.5], vec![10.0, 10.0, 30.0])
            .unwrap();
        assert!(comonotonic(&v, &u).unwrap());
        let v = TwoStageVariable::unambiguous(ids(1), vec![0.5, 0.5], vec![1.0, 2.0]).unwrap();
        let u = TwoStageVariable::unambiguous(ids(1), vec![0.5, 0.5], vec![2.0, 1.0]).unwrap();
        assert!(!comonotonic(&v, &u).unwrap());
        let w = TwoStageVariable::unambiguous(ids(2), vec![0.5, 0.5], vec![2.0, 1.0]).unwrap();
        assert!(matches!(comonotonic(&v, &w), Err(Error::Shape(_))));
    }

    #[test]
    fn dominance_examples() {
        let d1 = dd(&[(0.0, 0.5), (10.0, 0.5)]);
        let d2 = dd(&[(0.0, 0.6), (10.0, 0.4)]);
        let r = dominance(&d1, &d2, StochasticOrder::Fsd, None).unwrap();
        assert_eq!(r.relation, Relation::Dominates);
        assert_eq!(r.witness_t, None);
        let r = dominance(&d2, &d1, StochasticOrder::Fsd, None).unwrap();
        assert_eq!(r.relation, Relation::Dominated);

        let sure = DiscreteDistribution::point(5.0);
        let spread = dd(&[(0.0, 0.5), (10.0, 0.5)]);
        assert_eq!(
            dominance(&sure, &spread, StochasticOrder::Ssd, None)
                .unwrap()
                .relation,
            Relation::Dominates
        );
        let r = dominance(&sure, &spread, StochasticOrder::Fsd, None).unwrap();
        assert_eq!(r.relation, Relation::Incomparable);
        assert!(r.witness_t.is_some());

        for order in [
            StochasticOrder::Fsd,
            StochasticOrder::Ssd,
            StochasticOrder::PhiSsd,
        ] {
            let phi = UtilityFn::affine(1.0, 0.0).unwrap();
            assert_eq!(
                dominance(&d1, &d1, order, Some(&phi)).unwrap().relation,
                Relation::Equal
            );
        }
        assert!(dominance(&d1, &d2, StochasticOrder::PhiSsd, None).is_err());
    }

    fn arb_dist() -> impl Strategy<Value = DiscreteDistribution> {
        prop::collection::vec((-50i32..50, 1u32..20), 1..8).prop_map(|pts| {
            let total: u32 = pts.iter().map(|p| p.1).sum();
            let values = pts.iter().map(|p| p.0 as f64).collect();
            let probs = pts.iter().map(|p| p.1 as f64 / total as f64).collect();
            DiscreteDistribution::new(values, probs).unwrap()
        })
    }

    proptest! {
        #[test]
        fn quantile_inverts_cdf_at_atoms(d in arb_dist(), delta in 1e-9f64..1e-6) {
            for &x in d.values() {
                let below = d.cdf(x - 1e-9);
                let lambda = below + delta;
                if lambda < 1.0 {
                    prop_assert_eq!(d.quantile(lambda).unwrap(), x);
                }
            }
        }

        #[test]
        fn comonotonic_reflexive_and_with_constants(
            rows in prop::collection::vec(prop::collection::vec(-5i32..5, 3), 1..4),
            consts in prop::collection::vec(-5i32..5, 4),
        ) {
            let n = rows.len();
            let v = TwoStageVariable::new(
                ids(n),
                vec![vec![0.2, 0.3, 0.5]; n],
                rows.iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect(),
            ).unwrap();
            let c = v.with_payoffs((0..n).map(|w| vec![consts[w] as f64; 3]).collect()).unwrap();
            prop_assert!(comonotonic(&v, &v).unwrap());
            prop_assert!(comonotonic(&v, &c).unwrap());
            prop_assert!(comonotonic(&c, &v).unwrap());
        }

        #[test]
        fn comonotonic_symmetric(a in prop::collection::vec(-5i32..5, 4), b in prop::collection::vec(-5i32..5, 4)) {
            let v = TwoStageVariable::unambiguous(ids(1), vec![0.25; 4], a.iter().map(|&x| x as f64).collect()).unwrap();
            let u = TwoStageVariable::unambiguous(ids(1), vec![0.25; 4], b.iter().map(|&x| x as f64).collect()).unwrap();
            prop_assert_eq!(comonotonic(&v, &u).unwrap(), comonotonic(&u, &v).unwrap());
        }

        #[test]
        fn merging_duplicates_keeps_cdf(d in arb_dist(), t in -60.0f64..60.0) {
            // split every atom into two equal halves at the same point
            let values: Vec<f64> = d.values().iter().flat_map(|&x| [x, x]).collect();
            let probs: Vec<f64> = d.probs().iter().flat_map(|&p| [p / 2.0, p / 2.0]).collect();
            let split = DiscreteDistribution::new(values, probs).unwrap();
            prop_assert!((split.cdf(t) - d.cdf(t)).abs() < 1e-12);
        }

        #[test]
        fn fsd_implies_ssd_implies_concave_phi_ssd(d1 in arb_dist(), d2 in arb_dist()) {
            let phi = UtilityFn::exponential(0.1).unwrap();
            let fsd = dominance(&d1, &d2, StochasticOrder::Fsd, None).unwrap().relation;
            let ssd = dominance(&d1, &d2, StochasticOrder::Ssd, None).unwrap().relation;
            let phissd = dominance(&d1, &d2, StochasticOrder::PhiSsd, Some(&phi)).unwrap().relation;
            if fsd == Relation::Dominates {
                prop_assert!(matches!(ssd, Relation::Dominates | Relation::Equal));
            }
            if ssd == Relation::Dominates {
                prop_assert!(matches!(phissd, Relation::Dominates | Relation::Equal));
            }
        }
    }
}
