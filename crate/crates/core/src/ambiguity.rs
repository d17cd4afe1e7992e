//! Ambiguity indices over a finite state set and the robust inner minimization
//!
//! ```text
//! min_Q { E_Q[u] + c(Q) }
//! ```
//!
//! Every built-in index is solved exactly: maxmin sets by scanning extreme
//! points, entropic penalties in closed form, Gini penalties by water-filling
//! over sorted active sets, tabulated penalties by enumeration.

use std::path::Path;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rayon::prelude::*;
use serde::Serialize;

use crate::distribution::PROB_TOL;
use crate::error::{Error, Result};
use crate::utility::parse_number;

/// Slack of the hull-membership LP.
pub const HULL_TOL: f64 = 1e-9;

/// A probability vector over the states of the world.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Prior {
    weights: Vec<f64>,
}

impl Prior {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Invalid("prior over no states".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Invalid(format!(
                "prior {weights:?} has a negative or non-finite weight"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::Invalid(format!("prior {weights:?} sums to {total}")));
        }
        Ok(Prior { weights })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0 / n as f64; n])
    }

    /// The point mass on state `w`.
    pub fn vertex(n: usize, w: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[w] = 1.0;
        Prior { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `E_Q[u]`.
    pub fn expect(&self, u: &[f64]) -> f64 {
        self.weights.iter().zip(u).map(|(q, x)| q * x).sum()
    }

    /// Parses `uniform` or `w1=p1,w2=p2,...`; unlisted states get weight 0.
    pub fn parse(spec: &str, state_ids: &[String]) -> Result<Self> {
        let spec = spec.trim();
        if spec == "uniform" {
            return Self::uniform(state_ids.len());
        }
        let mut weights = vec![0.0; state_ids.len()];
        for entry in spec.split(',') {
            let (id, p) = entry.split_once('=').ok_or_else(|| {
                Error::parse(spec, format!("`{entry}` is not `state=probability`"))
            })?;
            let idx = state_ids
                .iter()
                .position(|s| s == id.trim())
                .ok_or_else(|| Error::UnknownState(id.trim().to_string()))?;
            weights[idx] = parse_number(spec, p)?;
        }
        Self::new(weights).map_err(|e| Error::parse(spec, e.to_string()))
    }

    pub fn spec(&self, state_ids: &[String]) -> String {
        let parts: Vec<String> = state_ids
            .iter()
            .zip(&self.weights)
            .filter(|(_, p)| **p > 0.0)
            .map(|(id, p)| format!("{id}={p}"))
            .collect();
        parts.join(",")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AmbiguityKind {
    /// Indicator penalty of the convex hull of the listed priors.
    MaxminSet { priors: Vec<Prior> },
    /// `θ Σ q ln(q / p')`.
    Entropic { theta: f64, reference: Prior },
    /// `θ Σ p' (q / p' - 1)^2`.
    Gini { theta: f64, reference: Prior },
    /// Penalty values listed on finitely many priors, grounded at load.
    Tabulated { grid: Vec<(Prior, f64)> },
}

/// A grounded convex penalty `c` on priors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmbiguityIndex {
    #[serde(flatten)]
    kind: AmbiguityKind,
    #[serde(skip)]
    dim: usize,
}

/// Result of `min_Q { E_Q[u] + c(Q) }`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustMin {
    pub value: f64,
    pub minimizer: Prior,
}

impl AmbiguityIndex {
    pub fn new(kind: AmbiguityKind) -> Result<Self> {
        let (kind, dim) = match kind {
            AmbiguityKind::MaxminSet { priors } => {
                let dim = common_dim(priors.iter())?;
                (AmbiguityKind::MaxminSet { priors }, dim)
            }
            AmbiguityKind::Entropic { theta, reference } | AmbiguityKind::Gini { theta, reference }
                if !(theta > 0.0 && theta.is_finite()) || reference.weights.iter().any(|&p| p <= 0.0) =>
            {
                return Err(Error::Invalid(format!(
                    "needs theta > 0 and a reference with full support, got theta = {theta}, reference = {:?}",
                    reference.weights
                )))
            }
            k @ (AmbiguityKind::Entropic { .. } | AmbiguityKind::Gini { .. }) => {
                let dim = match &k {
                    AmbiguityKind::Entropic { reference, .. } | AmbiguityKind::Gini { reference, .. } => reference.len(),
                    _ => unreachable!(),
                };
                (k, dim)
            }
            AmbiguityKind::Tabulated { grid } => {
                let dim = common_dim(grid.iter().map(|(q, _)| q))?;
                if grid.iter().any(|(_, c)| !(c.is_finite() && *c >= 0.0)) {
                    return Err(Error::Invalid("tabulated penalties must be finite and non-negative".into()));
                }
                let floor = grid.iter().map(|(_, c)| *c).fold(f64::INFINITY, f64::min);
                let grid = grid.into_iter().map(|(q, c)| (q, c - floor)).collect();
                (AmbiguityKind::Tabulated { grid }, dim)
            }
        };
        Ok(AmbiguityIndex { kind, dim })
    }

    pub fn maxmin(priors: Vec<Prior>) -> Result<Self> {
        Self::new(AmbiguityKind::MaxminSet { priors })
    }

    /// Maxmin over every prior on `n` states.
    pub fn maxmin_simplex(n: usize) -> Result<Self> {
        Self::maxmin((0..n).map(|w| Prior::vertex(n, w)).collect())
    }

    pub fn entropic(theta: f64, reference: Prior) -> Result<Self> {
        Self::new(AmbiguityKind::Entropic { theta, reference })
    }

    pub fn gini(theta: f64, reference: Prior) -> Result<Self> {
        Self::new(AmbiguityKind::Gini { theta, reference })
    }

    pub fn tabulated(grid: Vec<(Prior, f64)>) -> Result<Self> {
        Self::new(AmbiguityKind::Tabulated { grid })
    }

    pub fn kind(&self) -> &AmbiguityKind {
        &self.kind
    }

    /// Number of states the index lives on.
    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim {
            return Err(Error::Shape(format!(
                "penalty lives on {} states, got {n}",
                self.dim
            )));
        }
        Ok(())
    }

    /// `c(q)`; `+∞` outside the effective domain.
    pub fn penalty(&self, q: &Prior) -> Result<f64> {
        self.check_dim(q.len())?;
        let q = q.weights();
        Ok(match &self.kind {
            AmbiguityKind::MaxminSet { priors } => {
                if in_hull(priors, q)? {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            AmbiguityKind::Entropic { theta, reference } => {
                theta
                    * q.iter()
                        .zip(reference.weights())
                        .filter(|(qw, _)| **qw > 0.0)
                        .map(|(qw, pw)| qw * (qw / pw).ln())
                        .sum::<f64>()
            }
            AmbiguityKind::Gini { theta, reference } => {
                theta
                    * q.iter()
                        .zip(reference.weights())
                        .map(|(qw, pw)| (qw - pw).powi(2) / pw)
                        .sum::<f64>()
            }
            AmbiguityKind::Tabulated { grid } => grid
                .iter()
                .find(|(p, _)| {
                    p.weights()
                        .iter()
                        .zip(q)
                        .all(|(a, b)| (a - b).abs() <= PROB_TOL)
                })
                .map(|(_, c)| *c)
                .ok_or_else(|| Error::UnknownPrior(q.to_vec()))?,
        })
    }

    /// `min_Q { E_Q[u] + c(Q) }` together with a minimizing prior.
    pub fn robust_min(&self, u: &[f64]) -> Result<RobustMin> {
        self.check_dim(u.len())?;
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid(format!("non-finite utilities {u:?}")));
        }
        Ok(match &self.kind {
            AmbiguityKind::MaxminSet { priors } => {
                argmin_by(priors.iter().map(|q| (q.expect(u), q)))
            }
            AmbiguityKind::Entropic { theta, reference } => entropic_min(*theta, reference, u),
            AmbiguityKind::Gini { theta, reference } => gini_min(*theta, reference, u),
            AmbiguityKind::Tabulated { grid } => {
                argmin_by(grid.iter().map(|(q, c)| (q.expect(u) + c, q)))
            }
        })
    }

    /// A prior at which the penalty vanishes.
    pub fn zero_penalty_prior(&self) -> Prior {
        match &self.kind {
            AmbiguityKind::MaxminSet { priors } => priors[0].clone(),
            AmbiguityKind::Entropic { reference, .. } | AmbiguityKind::Gini { reference, .. } => {
                reference.clone()
            }
            AmbiguityKind::Tabulated { grid } => grid
                .iter()
                .find(|(_, c)| *c == 0.0)
                .map(|(q, _)| q.clone())
                .expect("tabulated penalties are grounded at construction"),
        }
    }

    /// Parses `maxmin:simplex | maxmin:[prior;prior;...] | entropic:theta@prior | gini:theta@prior | table:file.csv`.
    pub fn parse(spec: &str, state_ids: &[String]) -> Result<Self> {
        let spec = spec.trim();
        let (name, args) = spec
            .split_once(':')
            .ok_or_else(|| Error::parse(spec, "expected `name:parameters`"))?;
        let built = match name {
            "maxmin" if args.trim() == "simplex" => Self::maxmin_simplex(state_ids.len()),
            "maxmin" => {
                let inner = args
                    .trim()
                    .strip_prefix('[')
                    .and_then(|s| s.strip_suffix(']'))
                    .ok_or_else(|| {
                        Error::parse(spec, "maxmin priors must be written `[prior;prior;...]`")
                    })?;
                let priors = inner
                    .split(';')
                    .map(|p| Prior::parse(p, state_ids))
                    .collect::<Result<Vec<_>>>()?;
                Self::maxmin(priors)
            }
            "entropic" | "gini" => {
                let (theta, prior) = args
                    .split_once('@')
                    .ok_or_else(|| Error::parse(spec, "expected `theta@prior`"))?;
                let theta = parse_number(spec, theta)?;
                let reference = Prior::parse(prior, state_ids)?;
                if name == "entropic" {
                    Self::entropic(theta, reference)
                } else {
                    Self::gini(theta, reference)
                }
            }
            "table" => return Self::from_table_csv(Path::new(args.trim()), state_ids),
            other => return Err(Error::parse(spec, format!("unknown penalty `{other}`"))),
        };
        built.map_err(|e| match e {
            e @ (Error::Parse { .. } | Error::UnknownState(_)) => e,
            e => Error::parse(spec, e.to_string()),
        })
    }

    /// Loads a tabulated penalty from CSV with header `<state ids...>,penalty`.
    pub fn from_table_csv(path: &Path, state_ids: &[String]) -> Result<Self> {
        let where_ = |line: Option<u64>, msg: String| Error::Parse {
            input: match line {
                Some(l) => format!("{}:{l}", path.display()),
                None => path.display().to_string(),
            },
            reason: msg,
        };
        let mut reader = csv::Reader::from_path(path).map_err(|e| where_(None, e.to_string()))?;
        let header = reader
            .headers()
            .map_err(|e| where_(Some(1), e.to_string()))?
            .clone();
        let penalty_col = header
            .iter()
            .position(|h| h.trim() == "penalty")
            .ok_or_else(|| where_(Some(1), "missing `penalty` column".into()))?;
        let cols = state_ids
            .iter()
            .map(|id| {
                header
                    .iter()
                    .position(|h| h.trim() == id)
                    .ok_or_else(|| where_(Some(1), format!("missing column for state `{id}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut grid = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| where_(None, e.to_string()))?;
            let line = record.position().map(|p| p.line());
            let field = |i: usize| -> Result<f64> {
                let raw = record.get(i).unwrap_or("");
                raw.trim().parse::<f64>().map_err(|_| {
                    where_(
                        line,
                        format!("`{raw}` in column `{}` is not a number", &header[i]),
                    )
                })
            };
            let weights = cols.iter().map(|&i| field(i)).collect::<Result<Vec<_>>>()?;
            let prior = Prior::new(weights).map_err(|e| where_(line, e.to_string()))?;
            grid.push((prior, field(penalty_col)?));
        }
        Self::tabulated(grid).map_err(|e| where_(None, e.to_string()))
    }

    pub fn spec(&self, state_ids: &[String]) -> String {
        match &self.kind {
            AmbiguityKind::MaxminSet { priors } if is_simplex(priors) => "maxmin:simplex".into(),
            AmbiguityKind::MaxminSet { priors } => {
                let parts: Vec<String> = priors.iter().map(|p| p.spec(state_ids)).collect();
                format!("maxmin:[{}]", parts.join(";"))
            }
            AmbiguityKind::Entropic { theta, reference } => {
                format!("entropic:{theta}@{}", reference.spec(state_ids))
            }
            AmbiguityKind::Gini { theta, reference } => {
                format!("gini:{theta}@{}", reference.spec(state_ids))
            }
            AmbiguityKind::Tabulated { grid } => format!("table:{} priors", grid.len()),
        }
    }
}

// The vertices e_1, ..., e_n in order.
fn is_simplex(priors: &[Prior]) -> bool {
    priors.iter().enumerate().all(|(i, p)| {
        p.len() == priors.len()
            && p.weights()
                .iter()
                .enumerate()
                .all(|(j, &w)| w == if i == j { 1.0 } else { 0.0 })
    })
}

fn common_dim<'a>(mut priors: impl Iterator<Item = &'a Prior>) -> Result<usize> {
    let first = priors
        .next()
        .ok_or_else(|| Error::Invalid("penalty needs at least one prior".into()))?;
    let dim = first.len();
    if priors.any(|p| p.len() != dim) {
        return Err(Error::Shape("priors of different dimensions".into()));
    }
    Ok(dim)
}

// First strict minimum, so ties resolve to the earliest listed prior.
fn argmin_by<'a>(candidates: impl Iterator<Item = (f64, &'a Prior)>) -> RobustMin {
    let (value, q) = candidates
        .reduce(|best, cur| if cur.0 < best.0 { cur } else { best })
        .expect("index holds at least one prior");
    RobustMin {
        value,
        minimizer: q.clone(),
    }
}

/// `-θ ln E_{p'}[exp(-u/θ)]`, shifted by `min u` for stability.
fn entropic_min(theta: f64, reference: &Prior, u: &[f64]) -> RobustMin {
    let m = u.iter().copied().fold(f64::INFINITY, f64::min);
    let tilted: Vec<f64> = reference
        .weights()
        .iter()
        .zip(u)
        .map(|(p, x)| p * (-(x - m) / theta).exp())
        .collect();
    let z: f64 = tilted.iter().sum();
    let value = m - theta * z.ln();
    let weights = tilted.iter().map(|t| t / z).collect();
    RobustMin {
        value,
        minimizer: Prior { weights },
    }
}

/// Minimizes `Σ q u + θ Σ (q - p')² / p'` over the simplex.
///
/// Stationarity gives `q_w = p'_w max(0, 1 + (μ - u_w) / 2θ)`; the active set is
/// a prefix of the states sorted by `u`, and `μ` is solved exactly per prefix.
fn gini_min(theta: f64, reference: &Prior, u: &[f64]) -> RobustMin {
    let p = reference.weights();
    let mut order: Vec<usize> = (0..u.len()).collect();
    order.sort_by(|&a, &b| u[a].total_cmp(&u[b]).then(a.cmp(&b)));

    let (mut mass, mut weighted) = (0.0, 0.0);
    let mut mu = f64::NAN;
    for (k, &w) in order.iter().enumerate() {
        mass += p[w];
        weighted += p[w] * u[w];
        mu = (2.0 * theta * (1.0 - mass) + weighted) / mass;
        let next_inactive = order.get(k + 1).is_none_or(|&v| u[v] >= mu + 2.0 * theta);
        if next_inactive {
            break;
        }
    }
    let weights: Vec<f64> = p
        .iter()
        .zip(u)
        .map(|(pw, uw)| pw * (1.0 + (mu - uw) / (2.0 * theta)).max(0.0))
        .collect();
    let total: f64 = weights.iter().sum();
    let minimizer = Prior {
        weights: weights.iter().map(|q| q / total).collect(),
    };
    let penalty: f64 = minimizer
        .weights()
        .iter()
        .zip(p)
        .map(|(qw, pw)| (qw - pw).powi(2) / pw)
        .sum();
    RobustMin {
        value: minimizer.expect(u) + theta * penalty,
        minimizer,
    }
}

/// Whether `q` lies in the convex hull of `priors`, by a phase-one LP.
fn in_hull(priors: &[Prior], q: &[f64]) -> Result<bool> {
    if priors.iter().any(|p| {
        p.weights()
            .iter()
            .zip(q)
            .all(|(a, b)| (a - b).abs() <= PROB_TOL)
    }) {
        return Ok(true);
    }
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let lambdas: Vec<_> = priors
        .iter()
        .map(|_| lp.add_var(0.0, (0.0, f64::INFINITY)))
        .collect();
    for (w, &qw) in q.iter().enumerate() {
        let over = lp.add_var(1.0, (0.0, f64::INFINITY));
        let under = lp.add_var(1.0, (0.0, f64::INFINITY));
        let mut row: Vec<_> = lambdas
            .iter()
            .zip(priors)
            .map(|(&l, p)| (l, p.weights()[w]))
            .collect();
        row.push((over, 1.0));
        row.push((under, -1.0));
        lp.add_constraint(row.as_slice(), ComparisonOp::Eq, qw);
    }
    let ones: Vec<_> = lambdas.iter().map(|&l| (l, 1.0)).collect();
    lp.add_constraint(ones.as_slice(), ComparisonOp::Eq, 1.0);
    let solution = lp
        .solve()
        .map_err(|e| Error::Invalid(format!("hull membership LP failed: {e}")))?;
    Ok(solution.objective() <= HULL_TOL)
}

/// All points of the simplex in `dim` coordinates with denominator `resolution`,
/// in lexicographic order.
pub fn simplex_grid(dim: usize, resolution: usize) -> Vec<Vec<f64>> {
    fn fill(prefix: &mut Vec<usize>, left: usize, dim: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() + 1 == dim {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            fill(prefix, left - k, dim, out);
            prefix.pop();
        }
    }
    if dim == 0 {
        return Vec::new();
    }
    let mut counts = Vec::new();
    fill(&mut Vec::with_capacity(dim), resolution, dim, &mut counts);
    counts
        .into_iter()
        .map(|c| {
            c.into_iter()
                .map(|k| k as f64 / resolution as f64)
                .collect()
        })
        .collect()
}

/// Finite set of utility-space vectors scanned by [`c_min_bruteforce`].
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    /// The product lattice `{lo, lo + step, ..., hi}^n`.
    Lattice {
        lo: f64,
        hi: f64,
        step: f64,
    },
    Points(Vec<Vec<f64>>),
}

impl GridSpec {
    /// Parses `lo:hi:step`.
    pub fn parse(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::parse(spec, "expected `lo:hi:step`"));
        }
        let (lo, hi, step) = (
            parse_number(spec, parts[0])?,
            parse_number(spec, parts[1])?,
            parse_number(spec, parts[2])?,
        );
        if !(step > 0.0 && lo <= hi && lo.is_finite() && hi.is_finite()) {
            return Err(Error::parse(spec, "need lo <= hi and step > 0"));
        }
        Ok(GridSpec::Lattice { lo, hi, step })
    }
}

/// `max_{v'} { U*(v') - E_q[v'] }` over a finite set of utility-space vectors.
///
/// `eval_ce` returns the value of a pure-ambiguity vector in utility units. The
/// reduction is a max over a fixed finite set, so the result does not depend
/// on the parallel schedule.
pub fn c_min_bruteforce<F>(eval_ce: F, q: &Prior, grid: &GridSpec) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let n = q.len();
    let gap = |v: &[f64]| eval_ce(v).map(|u| u - q.expect(v));
    let best = match grid {
        GridSpec::Points(points) => {
            if points.is_empty() {
                return Err(Error::Invalid("empty c_min grid".into()));
            }
            if let Some(bad) = points.iter().find(|v| v.len() != n) {
                return Err(Error::Shape(format!(
                    "grid point {bad:?} does not have {n} coordinates"
                )));
            }
            points
                .par_iter()
                .map(|v| gap(v))
                .try_reduce(|| f64::NEG_INFINITY, |a, b| Ok(a.max(b)))?
        }
        GridSpec::Lattice { lo, hi, step } => {
            let per_axis = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            let total = per_axis
                .checked_pow(n as u32)
                .filter(|&t| t <= 50_000_000)
                .ok_or_else(|| {
                    Error::Invalid(format!("lattice with {per_axis}^{n} points is too large"))
                })?;
            (0..total)
                .into_par_iter()
                .map_init(
                    || vec![0.0; n],
                    |v, mut idx| {
                        for coord in v.iter_mut() {
                            *coord = lo + (idx % per_axis) as f64 * step;
                            idx /= per_axis;
                        }
                        gap(v)
                    },
                )
                .try_reduce(|| f64::NEG_INFINITY, |a, b| Ok(a.max(b)))?
        }
    };
    Ok(best)
}
