//! Scenario files: JSON for two-stage variables, CSV for portfolio panels.
//!
//! ```json
//! {"states": {"w1": {"probs": [0.5, 0.5], "payoffs": [0, 10]}, "w2": {...}}}
//! ```
//!
//! State order in the file is the state order of the variable.

use std::fs;
use std::path::Path;

use rankdep_core::{Error, Result, ScenarioPanel, TwoStageVariable};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct StateEntry {
    probs: Vec<f64>,
    payoffs: Vec<f64>,
}

fn parse_error(input: String, reason: impl ToString) -> Error {
    Error::Parse {
        input,
        reason: reason.to_string(),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| parse_error(path.display().to_string(), e))
}

pub fn parse_variable(source: &str, text: &str) -> Result<TwoStageVariable> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| parse_error(format!("{source}:{}:{}", e.line(), e.column()), e))?;
    let Some(obj) = root.as_object() else {
        return Err(parse_error(
            source.to_string(),
            "top level must be an object",
        ));
    };
    if let Some(extra) = obj.keys().find(|k| *k != "states") {
        return Err(parse_error(format!("{source}: {extra}"), "unknown field"));
    }
    let states: &Map<String, Value> = obj
        .get("states")
        .and_then(Value::as_object)
        .ok_or_else(|| parse_error(format!("{source}: states"), "missing or not an object"))?;
    if states.is_empty() {
        return Err(parse_error(format!("{source}: states"), "no states"));
    }
    let mut ids = Vec::with_capacity(states.len());
    let mut probs = Vec::with_capacity(states.len());
    let mut payoffs = Vec::with_capacity(states.len());
    for (id, entry) in states {
        let at = format!("{source}: states.{id}");
        let entry: StateEntry =
            serde_json::from_value(entry.clone()).map_err(|e| parse_error(at.clone(), e))?;
        if entry.probs.len() != entry.payoffs.len() {
            return Err(parse_error(
                at,
                format!(
                    "{} probabilities but {} payoffs",
                    entry.probs.len(),
                    entry.payoffs.len()
                ),
            ));
        }
        let total: f64 = entry.probs.iter().sum();
        if (total - 1.0).abs() > rankdep_core::distribution::PROB_TOL {
            return Err(parse_error(
                format!("{at}.probs"),
                format!("probabilities of state `{id}` sum to {total}"),
            ));
        }
        ids.push(id.clone());
        probs.push(entry.probs);
        payoffs.push(entry.payoffs);
    }
    TwoStageVariable::new(ids, probs, payoffs).map_err(|e| parse_error(source.to_string(), e))
}

pub fn load_variable(path: &Path) -> Result<TwoStageVariable> {
    parse_variable(&path.display().to_string(), &read(path)?)
}

pub fn load_panel(path: &Path) -> Result<ScenarioPanel> {
    let file = fs::File::open(path).map_err(|e| parse_error(path.display().to_string(), e))?;
    ScenarioPanel::from_csv(&path.display().to_string(), file)
}

/// JSON text of a variable in the scenario format.
pub fn variable_to_json(v: &TwoStageVariable) -> String {
    let mut states = Map::new();
    for (w, id) in v.state_ids().iter().enumerate() {
        let entry = StateEntry {
            probs: v.outcome_probs()[w].clone(),
            payoffs: v.payoffs()[w].clone(),
        };
        states.insert(
            id.clone(),
            serde_json::to_value(entry).expect("plain numbers"),
        );
    }
    let mut root = Map::new();
    root.insert("states".into(), Value::Object(states));
    serde_json::to_string(&Value::Object(root)).expect("plain numbers")
}
