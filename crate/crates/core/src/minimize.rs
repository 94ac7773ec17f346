//! Minimization of the causal action over small parameterized families of
//! discrete measures, under the volume and trace constraints and an optional
//! bound on the boundedness functional.
//!
//! The search is simulated annealing in parameter space followed by a
//! projected finite-difference descent. Every evaluated point is first
//! projected onto the constraint set by rescaling weights and spectra.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{CMatrix, C64, ONE, ZERO};
use crate::measure::{self, Assembly, Atom, DiscreteMeasure, MeasureError};
use crate::opspace::{OpError, OperatorPoint};

/// Relative tolerance on the constraints for an iterate to count as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MinimizeError {
    #[error("trace integral vanishes but the trace target is {target}")]
    InfeasibleTrace { target: f64 },
    #[error("volume target must be positive and finite, got {0}")]
    InvalidVolume(f64),
    #[error("starting point violates the boundedness bound: T = {value} > C = {bound}")]
    InfeasibleStart { value: f64, bound: f64 },
    #[error("family {family} expects {expected} parameters, got {got}")]
    ParameterCount { family: &'static str, expected: usize, got: usize },
    #[error("parameter {index} = {value} lies outside [{lo}, {hi}]")]
    OutOfDomain { index: usize, value: f64, lo: f64, hi: f64 },
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Operator(#[from] OpError),
}

/// Registered toy families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ToyFamily {
    /// Two rank-one atoms `|e_1><e_1|` and `|e(theta)><e(theta)|` on C^2,
    /// spin dimension 1, equal weights. One parameter `theta in [0, pi]`.
    RankOnePair,
    /// Two atoms on C^2, spin dimension 1. Parameters `(q, theta, r)`:
    /// weights `softplus(q), softplus(-q)`, first atom `diag(1, -logistic(r))`,
    /// second atom the first rotated by `theta`.
    TwoAtom,
}

impl ToyFamily {
    pub fn name(self) -> &'static str {
        match self {
            ToyFamily::RankOnePair => "rank-one-pair",
            ToyFamily::TwoAtom => "two-atom",
        }
    }

    pub fn dim(self) -> usize {
        self.bounds().len()
    }

    /// Box domain of the parameters.
    pub fn bounds(self) -> Vec<(f64, f64)> {
        use std::f64::consts::PI;
        match self {
            ToyFamily::RankOnePair => vec![(0.0, PI)],
            ToyFamily::TwoAtom => vec![(-4.0, 4.0), (0.0, PI), (-4.0, 4.0)],
        }
    }

    /// Default starting point.
    pub fn start(self) -> Vec<f64> {
        match self {
            ToyFamily::RankOnePair => vec![0.3],
            ToyFamily::TwoAtom => vec![1.0, 0.4, 1.0],
        }
    }

    fn check(self, params: &[f64]) -> Result<(), MinimizeError> {
        let bounds = self.bounds();
        if params.len() != bounds.len() {
            return Err(MinimizeError::ParameterCount {
                family: self.name(),
                expected: bounds.len(),
                got: params.len(),
            });
        }
        for (index, (&value, &(lo, hi))) in params.iter().zip(&bounds).enumerate() {
            if !(lo..=hi).contains(&value) {
                return Err(MinimizeError::OutOfDomain { index, value, lo, hi });
            }
        }
        Ok(())
    }

    /// The unprojected measure at `params`. Coinciding atoms are merged.
    pub fn measure(self, params: &[f64]) -> Result<DiscreteMeasure, MinimizeError> {
        self.check(params)?;
        let atoms = match self {
            ToyFamily::RankOnePair => {
                let theta = params[0];
                let e1 = CMatrix::from_column_slice(2, 1, &[ONE, ZERO]);
                let e2 = CMatrix::from_column_slice(2, 1, &[C64::new(theta.cos(), 0.0), C64::new(theta.sin(), 0.0)]);
                vec![
                    Atom::new(OperatorPoint::from_factors(e1, vec![1.0], 1)?, 0.5),
                    Atom::new(OperatorPoint::from_factors(e2, vec![1.0], 1)?, 0.5),
                ]
            }
            ToyFamily::TwoAtom => {
                let (q, theta, r) = (params[0], params[1], params[2]);
                let s = 1.0 / (1.0 + (-r).exp());
                let first = OperatorPoint::from_factors(CMatrix::identity(2, 2), vec![1.0, -s], 1)?;
                let (c, sn) = (C64::new(theta.cos(), 0.0), C64::new(theta.sin(), 0.0));
                let rotation = CMatrix::from_row_slice(2, 2, &[c, -sn, sn, c]);
                let second = first.conjugated(&rotation);
                vec![Atom::new(first, softplus(q)), Atom::new(second, softplus(-q))]
            }
        };
        Ok(DiscreteMeasure::merged(atoms)?)
    }
}

fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else {
        z.exp().ln_1p()
    }
}

/// Targets of the volume and trace constraints and the optional bound `C`
/// on the boundedness functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constraints {
    pub volume_target: f64,
    pub trace_target: f64,
    #[serde(default)]
    pub bound: Option<f64>,
}

impl Constraints {
    /// Targets read off a measure, bound disabled.
    pub fn captured_from(rho: &DiscreteMeasure) -> Self {
        Self {
            volume_target: measure::total_volume(rho),
            trace_target: measure::trace_integral(rho),
            bound: None,
        }
    }
}

/// Rescales all weights to the volume target, then all spectra by one common
/// factor to the trace target.
pub fn project_constraints(rho: &DiscreteMeasure, constraints: &Constraints) -> Result<DiscreteMeasure, MinimizeError> {
    let target = constraints.volume_target;
    if !(target.is_finite() && target > 0.0) {
        return Err(MinimizeError::InvalidVolume(target));
    }
    let weighted = rho.with_scaled_weights(target / measure::total_volume(rho))?;
    let trace = measure::trace_integral(&weighted);
    let scale: f64 = weighted
        .atoms()
        .iter()
        .map(|a| a.weight * a.point.spectrum().iter().map(|v| v.abs()).sum::<f64>())
        .sum();
    let tau = constraints.trace_target;
    if trace.abs() <= 1e-14 * scale {
        if tau == 0.0 {
            return Ok(weighted);
        }
        return Err(MinimizeError::InfeasibleTrace { target: tau });
    }
    if tau == 0.0 {
        return Err(MinimizeError::InfeasibleTrace { target: tau });
    }
    let factor = tau / trace;
    let atoms = weighted
        .atoms()
        .iter()
        .map(|a| Atom::new(a.point.scaled(factor), a.weight))
        .collect();
    // Shrinking spectra can bring atoms within the duplicate distance.
    Ok(DiscreteMeasure::merged(atoms)?)
}

/// A toy minimization problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalProblem {
    pub family: ToyFamily,
    pub constraints: Constraints,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub start: Option<Vec<f64>>,
}

/// Work limits of the minimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budget {
    /// Number of annealing proposals.
    pub proposals: usize,
    /// Maximum number of descent iterations.
    pub polish_iterations: usize,
    /// Initial temperature relative to the starting action.
    pub initial_temperature: f64,
    /// Initial proposal width relative to the parameter box.
    pub initial_step: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            proposals: 2000,
            polish_iterations: 200,
            initial_temperature: 0.1,
            initial_step: 0.25,
        }
    }
}

/// One evaluated point. `accepted` marks a new incumbent best, so the action
/// along accepted records is non-increasing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterateRecord {
    pub iter: usize,
    pub action: f64,
    pub boundedness: f64,
    pub volume: f64,
    pub trace: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MinimizeStatus {
    Converged,
    BudgetExhausted,
}

#[derive(Debug, Clone)]
pub struct MinimizeOutcome {
    pub params: Vec<f64>,
    pub measure: DiscreteMeasure,
    pub action: f64,
    pub boundedness: f64,
    pub log: Vec<IterateRecord>,
    pub status: MinimizeStatus,
}

struct Evaluation {
    measure: DiscreteMeasure,
    action: f64,
    boundedness: f64,
}

impl VariationalProblem {
    /// Projected measure and its functionals at `params`.
    fn evaluate(&self, params: &[f64]) -> Result<Evaluation, MinimizeError> {
        let raw = self.family.measure(params)?;
        let measure = project_constraints(&raw, &self.constraints)?;
        let sums = measure::pair_functionals(&measure, Assembly::Symmetric)?;
        Ok(Evaluation { measure, action: sums.action, boundedness: sums.boundedness })
    }

    /// Projected action at `params`.
    pub fn objective(&self, params: &[f64]) -> Result<f64, MinimizeError> {
        Ok(self.evaluate(params)?.action)
    }

    fn admissible(&self, eval: &Evaluation) -> bool {
        self.constraints.bound.is_none_or(|c| eval.boundedness <= c)
    }
}

fn clamp_into(params: &mut [f64], bounds: &[(f64, f64)]) {
    for (p, &(lo, hi)) in params.iter_mut().zip(bounds) {
        *p = p.clamp(lo, hi);
    }
}

struct Search<'a> {
    problem: &'a VariationalProblem,
    log: Vec<IterateRecord>,
    best_params: Vec<f64>,
    best: Evaluation,
}

impl Search<'_> {
    /// Evaluates, logs and updates the incumbent. Returns the action if the
    /// point is admissible.
    fn visit(&mut self, params: &[f64]) -> Result<Option<f64>, MinimizeError> {
        let eval = self.problem.evaluate(params)?;
        let admissible = self.problem.admissible(&eval);
        let improved = admissible && eval.action < self.best.action;
        self.log.push(IterateRecord {
            iter: self.log.len(),
            action: eval.action,
            boundedness: eval.boundedness,
            volume: measure::total_volume(&eval.measure),
            trace: measure::trace_integral(&eval.measure),
            accepted: improved,
        });
        let action = eval.action;
        if improved {
            self.best_params = params.to_vec();
            self.best = eval;
        }
        Ok(admissible.then_some(action))
    }
}

/// Minimizes the projected action over the family's parameter box.
pub fn minimize_action(problem: &VariationalProblem, budget: &Budget) -> Result<MinimizeOutcome, MinimizeError> {
    let family = problem.family;
    let bounds = family.bounds();
    let start = problem.start.clone().unwrap_or_else(|| family.start());
    let first = problem.evaluate(&start)?;
    if let Some(bound) = problem.constraints.bound {
        if first.boundedness > bound {
            return Err(MinimizeError::InfeasibleStart { value: first.boundedness, bound });
        }
    }
    let mut search = Search {
        problem,
        log: vec![IterateRecord {
            iter: 0,
            action: first.action,
            boundedness: first.boundedness,
            volume: measure::total_volume(&first.measure),
            trace: measure::trace_integral(&first.measure),
            accepted: true,
        }],
        best_params: start.clone(),
        best: first,
    };

    anneal(&mut search, &bounds, budget)?;
    let converged = polish(&mut search, &bounds, budget)?;
    let status = if converged { MinimizeStatus::Converged } else { MinimizeStatus::BudgetExhausted };
    let Search { log, best_params, best, .. } = search;
    Ok(MinimizeOutcome {
        params: best_params,
        action: best.action,
        boundedness: best.boundedness,
        measure: best.measure,
        log,
        status,
    })
}

fn anneal(search: &mut Search<'_>, bounds: &[(f64, f64)], budget: &Budget) -> Result<(), MinimizeError> {
    let steps = budget.proposals;
    if steps == 0 {
        return Ok(());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(search.problem.seed);
    let mut current = search.best_params.clone();
    let mut current_action = search.best.action;
    let t0 = budget.initial_temperature * current_action.abs().max(1e-12);
    let t_end = t0 * 1e-4;
    for k in 0..steps {
        let progress = k as f64 / steps as f64;
        let temperature = t0 * (t_end / t0).powf(progress);
        let width = budget.initial_step * (1.0 - 0.95 * progress);
        let mut proposal = current.clone();
        for (p, &(lo, hi)) in proposal.iter_mut().zip(bounds) {
            *p += width * (hi - lo) * (2.0 * rng.random::<f64>() - 1.0);
        }
        clamp_into(&mut proposal, bounds);
        let u: f64 = rng.random();
        if let Some(action) = search.visit(&proposal)? {
            let delta = action - current_action;
            if delta <= 0.0 || u < (-delta / temperature).exp() {
                current = proposal;
                current_action = action;
            }
        }
    }
    Ok(())
}

/// Central finite-difference gradient; coordinates where the one-sided
/// derivatives disagree by more than 10% are treated as non-smooth and left
/// out of the descent direction.
fn gradient(search: &mut Search<'_>, at: &[f64], value: f64, bounds: &[(f64, f64)]) -> Result<Vec<f64>, MinimizeError> {
    let problem = search.problem;
    let mut grad = vec![0.0; at.len()];
    for i in 0..at.len() {
        let h = 1e-6 * (1.0 + at[i].abs());
        let (lo, hi) = bounds[i];
        let mut up = at.to_vec();
        up[i] = (at[i] + h).min(hi);
        let mut down = at.to_vec();
        down[i] = (at[i] - h).max(lo);
        let f_up = problem.objective(&up)?;
        let f_down = problem.objective(&down)?;
        let h_up = up[i] - at[i];
        let h_down = at[i] - down[i];
        grad[i] = if h_up > 0.0 && h_down > 0.0 {
            let forward = (f_up - value) / h_up;
            let backward = (value - f_down) / h_down;
            let scale = forward.abs().max(backward.abs());
            if scale > 1e-8 * (1.0 + value.abs()) && (forward - backward).abs() > 0.1 * scale {
                0.0
            } else {
                (f_up - f_down) / (h_up + h_down)
            }
        } else if h_up > 0.0 {
            (f_up - value) / h_up
        } else if h_down > 0.0 {
            (value - f_down) / h_down
        } else {
            0.0
        };
    }
    Ok(grad)
}

fn polish(search: &mut Search<'_>, bounds: &[(f64, f64)], budget: &Budget) -> Result<bool, MinimizeError> {
    if budget.polish_iterations == 0 {
        return Ok(false);
    }
    let mut step = 0.1;
    for _ in 0..budget.polish_iterations {
        let at = search.best_params.clone();
        let value = search.best.action;
        let grad = gradient(search, &at, value, bounds)?;
        // Components pushing against an active bound are dropped.
        let direction: Vec<f64> = at
            .iter()
            .zip(&grad)
            .zip(bounds)
            .map(|((&p, &g), &(lo, hi))| {
                if (p <= lo && g > 0.0) || (p >= hi && g < 0.0) {
                    0.0
                } else {
                    -g
                }
            })
            .collect();
        let norm = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
        if norm <= 1e-12 * (1.0 + value.abs()) {
            return Ok(true);
        }
        let mut improved = false;
        let mut trial_step = step;
        while trial_step > 1e-12 {
            let mut trial: Vec<f64> = at.iter().zip(&direction).map(|(p, d)| p + trial_step * d / norm).collect();
            clamp_into(&mut trial, bounds);
            let before = search.best.action;
            search.visit(&trial)?;
            if search.best.action < before {
                improved = true;
                step = (trial_step * 2.0).min(1.0);
                break;
            }
            trial_step *= 0.5;
        }
        if !improved {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Exhaustive search over a regular grid with `per_axis` points per
/// parameter, endpoints included. Ties go to the lowest grid index.
pub fn grid_search(problem: &VariationalProblem, per_axis: usize) -> Result<(Vec<f64>, f64), MinimizeError> {
    let bounds = problem.family.bounds();
    let dim = bounds.len();
    let total = per_axis.pow(dim as u32);
    let point = |mut index: usize| -> Vec<f64> {
        let mut params = vec![0.0; dim];
        for d in (0..dim).rev() {
            let (lo, hi) = bounds[d];
            let k = index % per_axis;
            index /= per_axis;
            params[d] = if per_axis == 1 { lo } else { (lo + (hi - lo) * k as f64 / (per_axis - 1) as f64).min(hi) };
        }
        params
    };
    let best = (0..total)
        .into_par_iter()
        .map(|i| {
            let params = point(i);
            let eval = problem.evaluate(&params)?;
            let value = if problem.admissible(&eval) { eval.action } else { f64::INFINITY };
            Ok::<_, MinimizeError>((value, i))
        })
        .try_reduce(
            || (f64::INFINITY, usize::MAX),
            |a, b| Ok(if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a }),
        )?;
    Ok((point(best.1), best.0))
}

/// `S` of the rank-one pair at its optimum `theta = pi/2`:
/// `tau^4 / (4 V^2)`.
pub fn rank_one_pair_optimum(constraints: &Constraints) -> f64 {
    let v = constraints.volume_target;
    constraints.trace_target.powi(4) / (4.0 * v * v)
}
