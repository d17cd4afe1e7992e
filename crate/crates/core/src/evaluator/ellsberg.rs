//! Two-urn Ellsberg construction with comonotonic ambiguous addition.
//!
//! Urns A and B hold 25 balls between them in complementary compositions: A has
//! `r_A ∈ {0..25}` red balls and B has `25 - r_A`. Urn C has `r_C ∈ {5..25}` red
//! balls. A state of the world is the pair `(r_A, r_C)`; one uniform draw
//! `U ∈ {1..25}` is shared by all bets, and a bet on an urn pays 100 when
//! `U ≤ (red balls in that urn)`.
//!
//! * `ũ` bets on A, `ṽ` bets on C, `r̃` bets on B.
//! * A maxmin agent prefers `ṽ` (worst case 20) to `ũ` (worst case 0), yet
//!   `ũ ⊕ r̃` is a sure 100 in mean while `ṽ ⊕ r̃` can drop to 20.

use serde::Serialize;

use super::Preference;
use crate::ambiguity::AmbiguityIndex;
use crate::distortion::Distortion;
use crate::distribution::TwoStageVariable;
use crate::error::Result;
use crate::utility::{add_variables, UtilityFn};

pub const BALLS: u32 = 25;
pub const PRIZE: f64 = 100.0;
const C_MIN_RED: u32 = 5;

/// `(r_A, r_C)` for every state, `r_C` outer.
pub fn compositions() -> Vec<(u32, u32)> {
    (C_MIN_RED..=BALLS)
        .flat_map(|rc| (0..=BALLS).map(move |ra| (ra, rc)))
        .collect()
}

pub fn state_ids() -> Vec<String> {
    compositions()
        .iter()
        .map(|(ra, rc)| format!("rA{ra}_rC{rc}"))
        .collect()
}

fn bet(red: impl Fn(u32, u32) -> u32) -> TwoStageVariable {
    let states = compositions();
    let n = BALLS as usize;
    let probs = vec![vec![1.0 / BALLS as f64; n]; states.len()];
    let payoffs = states
        .iter()
        .map(|&(ra, rc)| {
            let k = red(ra, rc);
            (1..=BALLS)
                .map(|draw| if draw <= k { PRIZE } else { 0.0 })
                .collect()
        })
        .collect();
    TwoStageVariable::new(state_ids(), probs, payoffs).expect("well-formed construction")
}

/// Bet on urn A.
pub fn bet_u() -> TwoStageVariable {
    bet(|ra, _| ra)
}

/// Bet on urn C.
pub fn bet_v() -> TwoStageVariable {
    bet(|_, rc| rc)
}

/// Bet on urn B.
pub fn bet_r() -> TwoStageVariable {
    bet(|ra, _| BALLS - ra)
}

/// Maxmin over all compositions with linear utility and no probability weighting.
pub fn preference() -> Preference {
    let ids = state_ids();
    Preference::new(
        UtilityFn::identity(),
        Distortion::identity(),
        AmbiguityIndex::maxmin_simplex(ids.len()).expect("non-empty state set"),
        ids,
    )
    .expect("dimensions agree")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllsbergReport {
    pub states: usize,
    pub u: f64,
    pub v: f64,
    pub u_plus_r: f64,
    pub v_plus_r: f64,
    /// `ṽ ≻ ũ`.
    pub v_preferred_to_u: bool,
    /// `ũ ⊕ r̃ ≻ ṽ ⊕ r̃`.
    pub reversal: bool,
    pub passed: bool,
}

pub fn ellsberg_demo() -> Result<EllsbergReport> {
    let pref = preference();
    let (u, v, r) = (bet_u(), bet_v(), bet_r());
    let u_plus_r = add_variables(&u, &r, pref.phi())?;
    let v_plus_r = add_variables(&v, &r, pref.phi())?;
    let value = |x: &TwoStageVariable| pref.evaluate(x).map(|e| e.value_utils);
    let (u, v, u_plus_r, v_plus_r) = (value(&u)?, value(&v)?, value(&u_plus_r)?, value(&v_plus_r)?);
    let v_preferred_to_u = v > u + super::INDIFFERENCE_TOL;
    let reversal = u_plus_r > v_plus_r + super::INDIFFERENCE_TOL;
    let expected = [(u, 0.0), (v, 20.0), (u_plus_r, 100.0), (v_plus_r, 20.0)];
    Ok(EllsbergReport {
        states: pref.state_ids().len(),
        passed: v_preferred_to_u && reversal && expected.iter().all(|(got, want)| got == want),
        u,
        v,
        u_plus_r,
        v_plus_r,
        v_preferred_to_u,
        reversal,
    })
}
