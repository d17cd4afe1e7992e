//! Rank-dependent evaluation of two-stage payoffs.

pub mod ambiguity;
pub mod distortion;
pub mod distribution;
pub mod error;
pub mod evaluator;
pub mod portfolio;
pub mod utility;

pub use ambiguity::{
    c_min_bruteforce, simplex_grid, AmbiguityIndex, AmbiguityKind, GridSpec, Prior, RobustMin,
};
pub use distortion::{
    choquet, expected_shortfall, value_at_risk, weighted_var, Distortion, DistortionKind,
};
pub use distribution::{
    comonotonic, dominance, DiscreteDistribution, DominanceReport, Relation, StochasticOrder,
    TwoStageVariable,
};
pub use error::{Error, Result};
pub use evaluator::{
    ambiguity_aversion_check, ambiguity_neutral_value, evaluate, inner_rdu,
    is_more_ambiguity_averse, rdu, reduction_suite, step1_properties, AversionComparison,
    BatterySpec, CertaintyEquivalent, CheckReport, Comparison, Evaluation, Preference,
    ResolvedPreference,
};
pub use portfolio::{
    mean_risk_objective, optimize, portfolio_variable, Constraints, MeanRisk, OptimizeOptions,
    Optimum, ScenarioPanel, TracePoint, Weights,
};
pub use utility::{add_variables, mix_variables, Interval, UtilityFn, UtilityKind};
