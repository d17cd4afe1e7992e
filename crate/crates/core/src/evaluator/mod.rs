//! The robust rank-dependent representation
//!
//! ```text
//! U(ṽ) = min_Q { E_Q[ ∫ φ(ṽ^w) dν_ψ ] + c(Q) }
//! ```
//!
//! together with certainty equivalents, comparisons, and randomized property
//! batteries for the reductions and ambiguity-attitude results.

mod battery;
pub mod ellsberg;

use serde::Serialize;

use crate::ambiguity::{AmbiguityIndex, Prior};
use crate::distortion::{choquet, Distortion, DistortionKind};
use crate::distribution::{DiscreteDistribution, TwoStageVariable};
use crate::error::{Error, Result};
use crate::utility::UtilityFn;

pub use battery::{
    ambiguity_aversion_check, is_more_ambiguity_averse, reduction_suite, step1_properties,
    AversionComparison, BatterySpec, CheckReport, Counterexample, StructuralComparison,
    DEFAULT_SEED,
};

/// Indifference tolerance of [`Preference::prefer`].
pub const INDIFFERENCE_TOL: f64 = 1e-9;

/// The triple `(φ, ψ, c)` on a labelled state set.
#[derive(Debug, Clone, PartialEq)]
pub struct Preference {
    phi: UtilityFn,
    psi: Distortion,
    c: AmbiguityIndex,
    state_ids: Vec<String>,
}

/// Grammar strings of a preference, echoed in reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedPreference {
    pub utility: String,
    pub distortion: String,
    pub penalty: String,
    pub states: usize,
}

/// Either a monetary certainty equivalent or the utility level that has none.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CertaintyEquivalent {
    Value { value: f64 },
    Overflow { utility: f64 },
}

impl CertaintyEquivalent {
    pub fn value(&self) -> Option<f64> {
        match self {
            CertaintyEquivalent::Value { value } => Some(*value),
            CertaintyEquivalent::Overflow { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    /// The minimum in utility units.
    pub value_utils: f64,
    /// `∫ φ(ṽ^w) dν_ψ` for every state.
    pub per_state_utils: Vec<f64>,
    pub minimizer: Prior,
    pub penalty_at_minimizer: f64,
    pub certainty_equivalent: CertaintyEquivalent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Preferred,
    Dispreferred,
    Indifferent,
}

impl Preference {
    pub fn new(
        phi: UtilityFn,
        psi: Distortion,
        c: AmbiguityIndex,
        state_ids: Vec<String>,
    ) -> Result<Self> {
        if c.dim() != state_ids.len() {
            return Err(Error::Shape(format!(
                "penalty lives on {} states but {} state ids were given",
                c.dim(),
                state_ids.len()
            )));
        }
        Ok(Preference {
            phi,
            psi,
            c,
            state_ids,
        })
    }

    pub fn phi(&self) -> &UtilityFn {
        &self.phi
    }

    pub fn psi(&self) -> &Distortion {
        &self.psi
    }

    pub fn c(&self) -> &AmbiguityIndex {
        &self.c
    }

    pub fn state_ids(&self) -> &[String] {
        &self.state_ids
    }

    pub fn with_phi(&self, phi: UtilityFn) -> Self {
        Preference {
            phi,
            ..self.clone()
        }
    }

    pub fn with_psi(&self, psi: Distortion) -> Self {
        Preference {
            psi,
            ..self.clone()
        }
    }

    pub fn with_c(&self, c: AmbiguityIndex) -> Result<Self> {
        Self::new(
            self.phi.clone(),
            self.psi.clone(),
            c,
            self.state_ids.clone(),
        )
    }

    pub fn resolved(&self) -> ResolvedPreference {
        ResolvedPreference {
            utility: self.phi.spec(),
            distortion: self.psi.spec(),
            penalty: self.c.spec(&self.state_ids),
            states: self.state_ids.len(),
        }
    }

    fn check_states(&self, v: &TwoStageVariable) -> Result<()> {
        if v.state_ids() != self.state_ids.as_slice() {
            return Err(Error::Shape(
                "variable and preference are defined on different state sets".into(),
            ));
        }
        Ok(())
    }

    pub fn inner_rdu(&self, v: &TwoStageVariable) -> Result<Vec<f64>> {
        inner_rdu(v, &self.phi, &self.psi)
    }

    pub fn evaluate(&self, v: &TwoStageVariable) -> Result<Evaluation> {
        self.check_states(v)?;
        let per_state_utils = self.inner_rdu(v)?;
        let robust = self.c.robust_min(&per_state_utils)?;
        let penalty_at_minimizer = self.c.penalty(&robust.minimizer).unwrap_or(f64::NAN);
        Ok(Evaluation {
            value_utils: robust.value,
            certainty_equivalent: self.certainty_equivalent(robust.value),
            per_state_utils,
            minimizer: robust.minimizer,
            penalty_at_minimizer,
        })
    }

    /// `φ⁻¹(u)`, or an overflow marker when `u` is outside the image of φ.
    pub fn certainty_equivalent(&self, utils: f64) -> CertaintyEquivalent {
        match self.phi.inverse(utils) {
            Ok(value) => CertaintyEquivalent::Value { value },
            Err(_) => CertaintyEquivalent::Overflow { utility: utils },
        }
    }

    /// Value of a pure-ambiguity vector given directly in utility units.
    pub fn ambiguity_value(&self, utils: &[f64]) -> Result<f64> {
        Ok(self.c.robust_min(utils)?.value)
    }

    pub fn prefer(&self, v1: &TwoStageVariable, v2: &TwoStageVariable) -> Result<Comparison> {
        let a = self.evaluate(v1)?.value_utils;
        let b = self.evaluate(v2)?.value_utils;
        Ok(if (a - b).abs() <= INDIFFERENCE_TOL {
            Comparison::Indifferent
        } else if a > b {
            Comparison::Preferred
        } else {
            Comparison::Dispreferred
        })
    }
}

/// Per-state distorted expected utility of the push-forward of `ṽ^w` under φ.
pub fn inner_rdu(v: &TwoStageVariable, phi: &UtilityFn, psi: &Distortion) -> Result<Vec<f64>> {
    let domain = phi.domain();
    for (w, row) in v.payoffs().iter().enumerate() {
        if let Some((s, &value)) = row.iter().enumerate().find(|(_, x)| !domain.contains(**x)) {
            return Err(Error::OutOfDomain {
                state: v.state_ids()[w].clone(),
                outcome: s,
                value,
                domain: domain.to_string(),
            });
        }
    }
    (0..v.num_states())
        .map(|w| {
            let utils = v.marginal_at(w).try_map(|x| phi.eval(x))?;
            Ok(choquet(&utils, psi))
        })
        .collect()
}

pub fn evaluate(v: &TwoStageVariable, pref: &Preference) -> Result<Evaluation> {
    pref.evaluate(v)
}

/// `E_{p0}[∫ φ(ṽ^w) dν_ψ]`, the value of an ambiguity-neutral agent with prior `p0`.
pub fn ambiguity_neutral_value(
    v: &TwoStageVariable,
    phi: &UtilityFn,
    psi: &Distortion,
    p0: &Prior,
) -> Result<f64> {
    if p0.len() != v.num_states() {
        return Err(Error::Shape(format!(
            "prior over {} states, variable over {}",
            p0.len(),
            v.num_states()
        )));
    }
    Ok(p0.expect(&inner_rdu(v, phi, psi)?))
}

/// Quiggin's rank-dependent utility `Σ π_i φ(x_i)` with decision weights
/// `π_i = ψ(P[X ≥ x_i]) - ψ(P[X > x_i])`.
pub fn rdu(d: &DiscreteDistribution, phi: &UtilityFn, psi: &Distortion) -> Result<f64> {
    if *psi.kind() == DistortionKind::Identity {
        return d
            .values()
            .iter()
            .zip(d.probs())
            .try_fold(0.0, |acc, (&x, &p)| Ok(acc + p * phi.eval(x)?));
    }
    // tail sums from the top, so the best outcome's upper rank is exactly 0
    let mut strictly_above = 0.0;
    let mut total = 0.0;
    for (i, (&x, &p)) in d.values().iter().zip(d.probs()).enumerate().rev() {
        let at_least = if i == 0 {
            1.0
        } else {
            (strictly_above + p).min(1.0)
        };
        total += (psi.apply(at_least)? - psi.apply(strictly_above)?) * phi.eval(x)?;
        strictly_above = at_least;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambiguity::AmbiguityIndex;

    fn ids(n: usize) -> Vec<String> {
        (1..=n).map(|k| format!("w{k}")).collect()
    }

    fn pref(phi: UtilityFn, psi: Distortion, c: AmbiguityIndex) -> Preference {
        let n = c.dim();
        Preference::new(phi, psi, c, ids(n)).unwrap()
    }

    #[test]
    fn inner_rdu_examples() {
        let v = TwoStageVariable::unambiguous(ids(1), vec![0.7, 0.3], vec![0.0, 100.0]).unwrap();
        let sq = Distortion::power(2.0).unwrap();
        let out = inner_rdu(&v, &UtilityFn::identity(), &sq).unwrap();
        assert!((out[0] - 9.0).abs() < 1e-12);

        let phi = UtilityFn::exponential(0.3).unwrap();
        let c = TwoStageVariable::constant(ids(3), 1.5).unwrap();
        for u in inner_rdu(&c, &phi, &sq).unwrap() {
            assert_eq!(u, phi.eval(1.5).unwrap());
        }

        let affine = UtilityFn::affine(2.0, -1.0).unwrap();
        let a = inner_rdu(&v, &affine, &sq).unwrap();
        assert!((a[0] - (2.0 * out[0] - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn inner_rdu_reports_location() {
        let phi = UtilityFn::power(0.5, 0.0, f64::INFINITY).unwrap();
        let v = TwoStageVariable::new(
            ids(2),
            vec![vec![0.5, 0.5]; 2],
            vec![vec![1.0, 2.0], vec![3.0, -4.0]],
        )
        .unwrap();
        match inner_rdu(&v, &phi, &Distortion::identity()) {
            Err(Error::OutOfDomain {
                state,
                outcome,
                value,
                ..
            }) => assert_eq!((state.as_str(), outcome, value), ("w2", 1, -4.0)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn evaluate_examples() {
        let single = pref(
            UtilityFn::identity(),
            Distortion::power(2.0).unwrap(),
            AmbiguityIndex::entropic(1.0, Prior::uniform(1).unwrap()).unwrap(),
        );
        let v = TwoStageVariable::unambiguous(ids(1), vec![0.7, 0.3], vec![0.0, 100.0]).unwrap();
        let e = single.evaluate(&v).unwrap();
        assert!((e.value_utils - 9.0).abs() < 1e-12);
        assert!(
            (e.value_utils - rdu(&v.marginal_at(0), single.phi(), single.psi()).unwrap()).abs()
                < 1e-12
        );

        let ent = pref(
            UtilityFn::identity(),
            Distortion::identity(),
            AmbiguityIndex::entropic(1.0, Prior::uniform(2).unwrap()).unwrap(),
        );
        let v = TwoStageVariable::risk_free(ids(2), vec![0.0, 1.0]).unwrap();
        let e = ent.evaluate(&v).unwrap();
        assert!((e.value_utils - 0.379885).abs() < 1e-6);
        assert_eq!(e.certainty_equivalent.value(), Some(e.value_utils));

        let expo = pref(
            UtilityFn::exponential(0.5).unwrap(),
            Distortion::prelec(0.65, 1.0).unwrap(),
            AmbiguityIndex::maxmin_simplex(2).unwrap(),
        );
        let m = TwoStageVariable::constant(ids(2), 1.25).unwrap();
        let e = expo.evaluate(&m).unwrap();
        assert!((e.value_utils - expo.phi().eval(1.25).unwrap()).abs() < 1e-15);
        assert!((e.certainty_equivalent.value().unwrap() - 1.25).abs() < 1e-12);
    }

    #[test]
    fn evaluation_invariants() {
        let p = pref(
            UtilityFn::exponential(0.2).unwrap(),
            Distortion::tversky_kahneman(0.7).unwrap(),
            AmbiguityIndex::gini(0.5, Prior::new(vec![0.2, 0.3, 0.5]).unwrap()).unwrap(),
        );
        let v = TwoStageVariable::new(
            ids(3),
            vec![vec![0.5, 0.5], vec![0.2, 0.8], vec![0.9, 0.1]],
            vec![vec![1.0, -2.0], vec![3.0, 0.5], vec![-1.0, 4.0]],
        )
        .unwrap();
        let e = p.evaluate(&v).unwrap();
        let recomputed = e.minimizer.expect(&e.per_state_utils) + e.penalty_at_minimizer;
        assert!((recomputed - e.value_utils).abs() < 1e-9);
        let lowest = e
            .per_state_utils
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        assert!(lowest <= e.value_utils + 1e-12);
        assert!(
            e.value_utils
                <= ambiguity_neutral_value(&v, p.phi(), p.psi(), &p.c().zero_penalty_prior())
                    .unwrap()
                    + 1e-12
        );
    }

    #[test]
    fn overflow_marker() {
        let p = pref(
            UtilityFn::exponential(1.0).unwrap(),
            Distortion::identity(),
            AmbiguityIndex::maxmin_simplex(1).unwrap(),
        );
        assert!(
            matches!(p.certainty_equivalent(1.5), CertaintyEquivalent::Overflow { utility } if utility == 1.5)
        );
    }

    #[test]
    fn prefer_examples() {
        let p = pref(
            UtilityFn::identity(),
            Distortion::power(2.0).unwrap(),
            AmbiguityIndex::maxmin_simplex(1).unwrap(),
        );
        let v = TwoStageVariable::unambiguous(ids(1), vec![0.5, 0.5], vec![0.0, 10.0]).unwrap();
        let u = TwoStageVariable::unambiguous(ids(1), vec![0.5, 0.5], vec![0.0, 5.0]).unwrap();
        assert_eq!(p.prefer(&v, &v).unwrap(), Comparison::Indifferent);
        assert_eq!(p.prefer(&v, &u).unwrap(), Comparison::Preferred);
        assert_eq!(p.prefer(&u, &v).unwrap(), Comparison::Dispreferred);

        // a flat ES segment erases the gap in the upper tail
        let es = p.with_psi(Distortion::es_tail(0.5).unwrap());
        assert_eq!(es.prefer(&v, &u).unwrap(), Comparison::Indifferent);
    }

    #[test]
    fn neutral_value_examples() {
        let v = TwoStageVariable::risk_free(ids(2), vec![0.0, 1.0]).unwrap();
        let id = UtilityFn::identity();
        let psi = Distortion::identity();
        assert_eq!(
            ambiguity_neutral_value(&v, &id, &psi, &Prior::uniform(2).unwrap()).unwrap(),
            0.5
        );
        let degenerate =
            AmbiguityIndex::tabulated(vec![(Prior::uniform(2).unwrap(), 0.0)]).unwrap();
        let e = pref(id.clone(), psi.clone(), degenerate)
            .evaluate(&v)
            .unwrap();
        assert_eq!(e.value_utils, 0.5);
    }

    #[test]
    fn rdu_matches_choquet() {
        let d = DiscreteDistribution::from_pairs(&[(-3.0, 0.2), (1.0, 0.5), (4.0, 0.3)]).unwrap();
        let phi = UtilityFn::exponential(0.4).unwrap();
        let psi = Distortion::prelec(0.6, 1.2).unwrap();
        let via_choquet = choquet(&d.map(|x| phi.eval(x).unwrap()).unwrap(), &psi);
        assert!((rdu(&d, &phi, &psi).unwrap() - via_choquet).abs() < 1e-12);
    }

    #[test]
    fn state_mismatch() {
        let p = pref(
            UtilityFn::identity(),
            Distortion::identity(),
            AmbiguityIndex::maxmin_simplex(2).unwrap(),
        );
        let v = TwoStageVariable::constant(vec!["x".into(), "y".into()], 1.0).unwrap();
        assert!(matches!(p.evaluate(&v), Err(Error::Shape(_))));
        assert!(Preference::new(
            UtilityFn::identity(),
            Distortion::identity(),
            AmbiguityIndex::maxmin_simplex(3).unwrap(),
            ids(2)
        )
        .is_err());
    }
}
