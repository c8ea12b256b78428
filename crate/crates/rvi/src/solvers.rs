//! The four top-level solvers with their stopping rules: full-space value
//! iteration, subset value iteration over the reachable simplices
//! (collective or individual), low-dimension value iteration for
//! informative models, and anytime space-progressive value iteration over
//! growing history unions.

use crate::dp::{
    self, dp_update_phi, dp_update_space, dp_update_subset_collective,
    dp_update_subset_individual, DpConfig, DpError, ResidualRegion, SimplexFamily,
};
use crate::geometry::{dedupe, union_prune, AlphaVector, GeomError, VectorSet};
use crate::io::formats::StatsRow;
use crate::model::{History, PomdpModel, SimplexBasis};
use std::time::{Duration, Instant};
use thiserror::Error;

/// Discount below which the threshold formulas (which divide by λ) are
/// replaced by exact-repetition stopping.
pub const MYOPIC_LAMBDA: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Dp(#[from] DpError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("SPVI requires information-rich actions")]
    NoInformationRich,
}

/// How a subset update walks the simplices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsetMode {
    Collective,
    Individual,
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    /// Quality target ε > 0.
    pub epsilon: f64,
    pub max_iterations: usize,
    pub deadline: Option<Duration>,
    pub mode: SubsetMode,
    pub dp: DpConfig,
    /// SPVI: cap on subset expansions.
    pub max_expansions: usize,
    /// SPVI: extend every history associated with an information-poor
    /// action instead of only the maximal ones.
    pub exhaustive_expansion: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            epsilon: 0.01,
            max_iterations: 1000,
            deadline: None,
            mode: SubsetMode::Collective,
            dp: DpConfig::default(),
            max_expansions: 100,
            exhaustive_expansion: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ResidualMet,
    IterationCap,
    AllInformationRich,
    ResourceAbort,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Termination::ResidualMet => "residual-met",
            Termination::IterationCap => "iteration-cap",
            Termination::AllInformationRich => "spvi-all-information-rich",
            Termination::ResourceAbort => "resource-abort",
        };
        f.write_str(s)
    }
}

/// A solver's value function: a flat set or a per-simplex family.
#[derive(Debug)]
pub enum SolvedValue {
    Set(VectorSet),
    Family(SimplexFamily),
}

impl SolvedValue {
    pub fn as_set(&self) -> Option<&VectorSet> {
        match self {
            SolvedValue::Set(s) => Some(s),
            SolvedValue::Family(_) => None,
        }
    }

    pub fn as_family(&self) -> Option<&SimplexFamily> {
        match self {
            SolvedValue::Family(f) => Some(f),
            SolvedValue::Set(_) => None,
        }
    }

    pub fn total_vectors(&self) -> usize {
        match self {
            SolvedValue::Set(s) => s.len(),
            SolvedValue::Family(f) => f.total_vectors(),
        }
    }
}

#[derive(Debug)]
pub struct SolveResult {
    pub value: SolvedValue,
    pub stats: Vec<StatsRow>,
    pub termination: Termination,
    pub residual: f64,
    pub iterations: usize,
}

/// Stopping threshold ε(1−λ)/(2λ) for the whole-space criterion.
pub fn loose_threshold(epsilon: f64, lambda: f64) -> f64 {
    if lambda < MYOPIC_LAMBDA {
        0.0
    } else {
        epsilon * (1.0 - lambda) / (2.0 * lambda)
    }
}

/// Stopping threshold ε(1−λ)/(2λ²|Z|) for the subset criterion.
pub fn strict_threshold(epsilon: f64, lambda: f64, num_observations: usize) -> f64 {
    if lambda < MYOPIC_LAMBDA {
        0.0
    } else {
        let t = epsilon * (1.0 - lambda) / (2.0 * lambda * lambda * num_observations as f64);
        if lambda * num_observations as f64 >= 1.0 {
            debug_assert!(t <= loose_threshold(epsilon, lambda) + 1e-15);
        }
        t
    }
}

fn residual_met(residual: f64, threshold: f64, lambda: f64) -> bool {
    if lambda < MYOPIC_LAMBDA {
        residual <= 1e-9
    } else {
        residual <= threshold
    }
}

fn zero_set(n: usize, region: &str) -> VectorSet {
    VectorSet::new(vec![AlphaVector::new(vec![0.0; n], 0)], n, region)
        .expect("zero set is valid")
}

pub struct Clock {
    start: Instant,
    deadline: Option<Duration>,
}

impl Clock {
    pub fn new(deadline: Option<Duration>) -> Self {
        Clock {
            start: Instant::now(),
            deadline,
        }
    }

    fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    fn expired(&self) -> bool {
        match self.deadline {
            Some(d) => self.start.elapsed() >= d,
            None => false,
        }
    }
}

/// Full-space value iteration from the zero vector; stops on the ε(1−λ)/(2λ)
/// criterion and returns the previous iterate (the set the criterion proves
/// near-optimal to act on).
pub fn solve_vi(model: &PomdpModel, cfg: &SolveConfig) -> Result<SolveResult, SolveError> {
    let threshold = loose_threshold(cfg.epsilon, model.discount());
    let clock = Clock::new(cfg.deadline);
    let mut prev = zero_set(model.num_states(), "space");
    let mut stats = Vec::new();
    let mut residual = f64::INFINITY;
    for iter in 1..=cfg.max_iterations {
        let out = match dp_update_space(model, &prev, &cfg.dp) {
            Ok(o) => o,
            Err(DpError::EnumerationCap { .. }) => {
                return Ok(SolveResult {
                    value: SolvedValue::Set(prev),
                    stats,
                    termination: Termination::ResourceAbort,
                    residual,
                    iterations: iter - 1,
                })
            }
            Err(e) => return Err(e.into()),
        };
        residual = dp::bellman_residual(&out.set, &prev, &ResidualRegion::Space)?;
        stats.push(StatsRow {
            iteration: iter,
            region: out.stats.region.clone(),
            enumerated: out.stats.enumerated,
            kept: out.stats.kept,
            lp_count: out.stats.lp_count,
            residual,
            seconds: clock.elapsed(),
        });
        if residual_met(residual, threshold, model.discount()) {
            return Ok(SolveResult {
                value: SolvedValue::Set(prev),
                stats,
                termination: Termination::ResidualMet,
                residual,
                iterations: iter,
            });
        }
        prev = out.set;
        if clock.expired() {
            break;
        }
    }
    let iterations = stats.len();
    Ok(SolveResult {
        value: SolvedValue::Set(prev),
        stats,
        termination: Termination::IterationCap,
        residual,
        iterations,
    })
}

/// Minimal τ-simplex bases of every realizable (a, z) pair.
pub fn tau_bases(model: &PomdpModel) -> Vec<SimplexBasis> {
    let mut bases = Vec::new();
    for a in 0..model.num_actions() {
        for z in 0..model.num_observations() {
            let b = model.tau_simplex_basis(a, z);
            if !b.is_empty() {
                bases.push(crate::model::minimal_basis(&b));
            }
        }
    }
    bases
}

/// Subset value iteration over the one-step-reachable simplices, stopping on
/// the strict ε(1−λ)/(2λ²|Z|) criterion measured over those simplices.
pub fn solve_ssvi(model: &PomdpModel, cfg: &SolveConfig) -> Result<SolveResult, SolveError> {
    let threshold = strict_threshold(cfg.epsilon, model.discount(), model.num_observations());
    let clock = Clock::new(cfg.deadline);
    let mut stats = Vec::new();
    let mut residual = f64::INFINITY;
    match cfg.mode {
        SubsetMode::Collective => {
            let bases = tau_bases(model);
            let region = ResidualRegion::Bases(&bases);
            let mut prev = zero_set(model.num_states(), "union");
            for iter in 1..=cfg.max_iterations {
                let out = match dp_update_subset_collective(model, &prev, &bases, &cfg.dp) {
                    Ok(o) => o,
                    Err(DpError::EnumerationCap { .. }) => {
                        return Ok(SolveResult {
                            value: SolvedValue::Set(prev),
                            stats,
                            termination: Termination::ResourceAbort,
                            residual,
                            iterations: iter - 1,
                        })
                    }
                    Err(e) => return Err(e.into()),
                };
                residual = dp::bellman_residual(&out.set, &prev, &region)?;
                stats.push(StatsRow {
                    iteration: iter,
                    region: out.stats.region.clone(),
                    enumerated: out.stats.enumerated,
                    kept: out.stats.kept,
                    lp_count: out.stats.lp_count,
                    residual,
                    seconds: clock.elapsed(),
                });
                if residual_met(residual, threshold, model.discount()) {
                    return Ok(SolveResult {
                        value: SolvedValue::Set(prev),
                        stats,
                        termination: Termination::ResidualMet,
                        residual,
                        iterations: iter,
                    });
                }
                prev = out.set;
                if clock.expired() {
                    break;
                }
            }
            let iterations = stats.len();
            Ok(SolveResult {
                value: SolvedValue::Set(prev),
                stats,
                termination: Termination::IterationCap,
                residual,
                iterations,
            })
        }
        SubsetMode::Individual => {
            let init = zero_set(model.num_states(), "union");
            let family = dp::tau_family(model, &init);
            solve_family(model, cfg, family, threshold, false, clock, &mut stats)
        }
    }
}

/// Low-dimension value iteration over the observation-support simplices.
pub fn solve_infovi(model: &PomdpModel, cfg: &SolveConfig) -> Result<SolveResult, SolveError> {
    let threshold = strict_threshold(cfg.epsilon, model.discount(), model.num_observations());
    let clock = Clock::new(cfg.deadline);
    let mut stats = Vec::new();
    let family = dp::phi_family(model);
    solve_family(model, cfg, family, threshold, true, clock, &mut stats)
}

/// Shared iteration loop for family-valued solvers (individual ssVI and
/// infoVI). The residual is the max over entries of the per-simplex
/// residual between consecutive iterates.
#[allow(clippy::too_many_arguments)]
fn solve_family(
    model: &PomdpModel,
    cfg: &SolveConfig,
    mut family: SimplexFamily,
    threshold: f64,
    low_dim: bool,
    clock: Clock,
    stats: &mut Vec<StatsRow>,
) -> Result<SolveResult, SolveError> {
    let mut residual = f64::INFINITY;
    for iter in 1..=cfg.max_iterations {
        let step = if low_dim {
            dp_update_phi(model, &family, &cfg.dp)
        } else {
            dp_update_subset_individual(model, &family, &cfg.dp)
        };
        let (next, s) = match step {
            Ok(x) => x,
            Err(DpError::EnumerationCap { .. }) => {
                return Ok(SolveResult {
                    value: SolvedValue::Family(family),
                    stats: std::mem::take(stats),
                    termination: Termination::ResourceAbort,
                    residual,
                    iterations: iter - 1,
                })
            }
            Err(e) => return Err(e.into()),
        };
        residual = 0.0f64;
        for (old, new) in family.entries.iter().zip(&next.entries) {
            let region = ResidualRegion::Bases(std::slice::from_ref(&old.basis));
            residual = residual.max(dp::bellman_residual(&new.set, &old.set, &region)?);
        }
        stats.push(StatsRow {
            iteration: iter,
            region: s.region.clone(),
            enumerated: s.enumerated,
            kept: s.kept,
            lp_count: s.lp_count,
            residual,
            seconds: clock.elapsed(),
        });
        if residual_met(residual, threshold, model.discount()) {
            return Ok(SolveResult {
                value: SolvedValue::Family(family),
                stats: std::mem::take(stats),
                termination: Termination::ResidualMet,
                residual,
                iterations: iter,
            });
        }
        family = next;
        if clock.expired() {
            break;
        }
    }
    let iterations = stats.len();
    Ok(SolveResult {
        value: SolvedValue::Family(family),
        stats: std::mem::take(stats),
        termination: Termination::IterationCap,
        residual,
        iterations,
    })
}

/// Split of the action set by informativeness, with the observations
/// realizable under each class.
#[derive(Debug, Clone)]
pub struct ActionClassification {
    pub information_rich: Vec<usize>,
    pub information_poor: Vec<usize>,
    pub z_rich: Vec<usize>,
    pub z_poor: Vec<usize>,
}

impl ActionClassification {
    /// Build from a per-action rich flag, deriving the observation classes
    /// from the model's realizable pairs.
    pub fn from_flags(model: &PomdpModel, rich: &[bool]) -> Self {
        assert_eq!(rich.len(), model.num_actions());
        let information_rich: Vec<usize> =
            (0..model.num_actions()).filter(|&a| rich[a]).collect();
        let information_poor: Vec<usize> =
            (0..model.num_actions()).filter(|&a| !rich[a]).collect();
        let reachable = |actions: &[usize]| -> Vec<usize> {
            (0..model.num_observations())
                .filter(|&z| actions.iter().any(|&a| pair_realizable(model, a, z)))
                .collect()
        };
        let z_rich = reachable(&information_rich);
        let z_poor = reachable(&information_poor);
        ActionClassification {
            information_rich,
            information_poor,
            z_rich,
            z_poor,
        }
    }

    pub fn is_rich(&self, a: usize) -> bool {
        self.information_rich.contains(&a)
    }
}

/// True iff some state can emit z after taking a from some reachable state.
pub fn pair_realizable(model: &PomdpModel, a: usize, z: usize) -> bool {
    (0..model.num_states()).any(|s2| {
        model.obs(a, s2, z) > 0.0
            && (0..model.num_states()).any(|s| model.trans(s, a, s2) > 0.0)
    })
}

/// Heuristic split: an action is information-rich iff the mean, over its
/// realizable observations, of |S^az|/|S| is at most `fraction`.
pub fn classify_actions_heuristic(model: &PomdpModel, fraction: f64) -> ActionClassification {
    let n = model.num_states() as f64;
    let rich: Vec<bool> = (0..model.num_actions())
        .map(|a| {
            let sizes: Vec<f64> = (0..model.num_observations())
                .filter(|&z| pair_realizable(model, a, z))
                .map(|z| model.observation_support(a, z).states.len() as f64 / n)
                .collect();
            if sizes.is_empty() {
                return false;
            }
            sizes.iter().sum::<f64>() / sizes.len() as f64 <= fraction
        })
        .collect();
    ActionClassification::from_flags(model, &rich)
}

/// A growing set of belief-reachability histories.
#[derive(Debug, Clone)]
pub struct HistorySet {
    pub histories: Vec<History>,
    pub generation: usize,
}

impl HistorySet {
    pub fn len(&self) -> usize {
        self.histories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.histories.is_empty()
    }

    pub fn contains(&self, h: &History) -> bool {
        self.histories.iter().any(|x| x == h)
    }

    /// h is maximal iff no strict extension of it is in the set.
    pub fn is_maximal(&self, h: &History) -> bool {
        !self.histories.iter().any(|x| {
            x.len() > h.len() && x.pairs[..h.len()] == h.pairs[..]
        })
    }
}

/// Bases of the histories that induce nonempty simplices, with the
/// surviving histories in matching order.
fn history_bases(model: &PomdpModel, h_set: &HistorySet) -> (Vec<SimplexBasis>, Vec<History>) {
    let mut bases = Vec::new();
    let mut kept = Vec::new();
    for h in &h_set.histories {
        let b = model.history_simplex_basis(h);
        if b.is_empty() {
            continue;
        }
        bases.push(crate::model::minimal_basis(&b));
        kept.push(h.clone());
    }
    (bases, kept)
}

/// Per-call outcome of one subset-VI run inside SPVI.
pub struct SubsetViOutcome {
    pub set: VectorSet,
    pub residual: f64,
    pub aborted: bool,
}

/// Monotone value iteration restricted to the union of the history
/// simplices: each step keeps the previous vectors alongside the newly
/// enumerated ones, prunes over the union, and tags survivors with the
/// history of the simplex where their witness succeeded.
pub fn subset_vi(
    model: &PomdpModel,
    init: &VectorSet,
    h_set: &HistorySet,
    eta: f64,
    cfg: &SolveConfig,
    clock: &Clock,
    stats: &mut Vec<StatsRow>,
    iteration: &mut usize,
) -> Result<SubsetViOutcome, SolveError> {
    let (bases, histories) = history_bases(model, h_set);
    if bases.is_empty() {
        return Err(SolveError::NoInformationRich);
    }
    let region = ResidualRegion::Bases(&bases);
    let mut current = init.clone();
    let mut residual = f64::INFINITY;
    loop {
        let out = match dp_update_subset_collective(model, &current, &bases, &cfg.dp) {
            Ok(o) => o,
            Err(DpError::EnumerationCap { .. }) => {
                return Ok(SubsetViOutcome {
                    set: current,
                    residual,
                    aborted: true,
                })
            }
            Err(e) => return Err(e.into()),
        };
        // Union with the previous iterate keeps values monotone.
        let mut merged = out.set.vectors.clone();
        merged.extend(current.vectors.iter().cloned());
        let merged = dedupe(&VectorSet::new(
            merged,
            model.num_states(),
            format!("union[{}]", bases.len()),
        )?);
        let pruned = union_prune(&merged, &bases, &cfg.dp.prune)?;
        let mut next = pruned.set;
        for (v, w) in next.vectors.iter_mut().zip(&pruned.witnesses) {
            if let Some(i) = w.basis_index {
                v.history = Some(histories[i].clone());
            }
        }
        residual = dp::bellman_residual(&next, &current, &region)?;
        *iteration += 1;
        stats.push(StatsRow {
            iteration: *iteration,
            region: next.region.clone(),
            enumerated: out.stats.enumerated,
            kept: next.len(),
            lp_count: out.stats.lp_count + pruned.lp_count,
            residual,
            seconds: clock.elapsed(),
        });
        let done = residual_met(residual, eta, model.discount());
        current = next;
        if done {
            return Ok(SubsetViOutcome {
                set: current,
                residual,
                aborted: false,
            });
        }
        if clock.expired() || *iteration >= cfg.max_iterations {
            return Ok(SubsetViOutcome {
                set: current,
                residual,
                aborted: true,
            });
        }
    }
}

/// Extend the maximal histories associated with surviving
/// information-poor-action vectors by every realizable information-poor
/// pair. With `exhaustive`, the maximality filter is dropped.
pub fn expand_subset(
    model: &PomdpModel,
    v: &VectorSet,
    h_set: &HistorySet,
    classes: &ActionClassification,
    exhaustive: bool,
) -> HistorySet {
    let mut histories = h_set.histories.clone();
    for vec in &v.vectors {
        if classes.is_rich(vec.action) {
            continue;
        }
        let h = match &vec.history {
            Some(h) => h,
            None => continue,
        };
        if !exhaustive && !h_set.is_maximal(h) {
            continue;
        }
        for &a in &classes.information_poor {
            for &z in &classes.z_poor {
                if !pair_realizable(model, a, z) {
                    continue;
                }
                let ext = h.extended(a, z);
                if !histories.iter().any(|x| *x == ext) {
                    histories.push(ext);
                }
            }
        }
    }
    HistorySet {
        histories,
        generation: h_set.generation + 1,
    }
}

/// True iff every vector whose associated history is maximal prescribes an
/// information-rich action.
pub fn spvi_should_stop(
    v: &VectorSet,
    h_set: &HistorySet,
    classes: &ActionClassification,
) -> bool {
    v.vectors.iter().all(|vec| match &vec.history {
        Some(h) => !h_set.is_maximal(h) || classes.is_rich(vec.action),
        None => classes.is_rich(vec.action),
    })
}

/// Worst-case size of the i-th history set. Expansion keeps every existing
/// history and adds at most |A_IP||Z_IP| extensions per maximal one, so the
/// bound is the geometric sum |A_IR||Z_IR| · Σ_{j=0..i} (|A_IP||Z_IP|)^j.
pub fn spvi_growth_bound(classes: &ActionClassification, generation: usize) -> usize {
    let base = classes.information_rich.len() * classes.z_rich.len();
    let step = classes.information_poor.len().max(1) * classes.z_poor.len().max(1);
    let mut total = 0usize;
    let mut term = base;
    for _ in 0..=generation {
        total = total.saturating_add(term);
        term = term.saturating_mul(step);
    }
    total
}

/// Anytime space-progressive value iteration: start from the realizable
/// information-rich pairs and the constant min-reward vector, alternate
/// subset value iteration with subset expansion, and stop when every
/// surviving maximal-history vector prescribes an information-rich action.
pub fn solve_spvi(
    model: &PomdpModel,
    cfg: &SolveConfig,
    classes: &ActionClassification,
) -> Result<SolveResult, SolveError> {
    if classes.information_rich.is_empty() {
        return Err(SolveError::NoInformationRich);
    }
    let clock = Clock::new(cfg.deadline);
    let eta = loose_threshold(cfg.epsilon, model.discount());
    let mut histories = Vec::new();
    for &a in &classes.information_rich {
        for &z in &classes.z_rich {
            if pair_realizable(model, a, z) {
                histories.push(History::single(a, z));
            }
        }
    }
    let mut h_set = HistorySet {
        histories,
        generation: 0,
    };
    if h_set.is_empty() {
        return Err(SolveError::NoInformationRich);
    }
    let n = model.num_states();
    let mut current = VectorSet::new(
        vec![AlphaVector::new(vec![model.min_reward(); n], 0)],
        n,
        "union",
    )?;
    let mut stats = Vec::new();
    let mut iteration = 0;
    let mut residual;
    loop {
        debug_assert!(h_set.len() <= spvi_growth_bound(classes, h_set.generation));
        let outcome = subset_vi(
            model, &current, &h_set, eta, cfg, &clock, &mut stats, &mut iteration,
        )?;
        current = outcome.set;
        residual = outcome.residual;
        if outcome.aborted {
            let term = if clock.expired() || iteration >= cfg.max_iterations {
                Termination::IterationCap
            } else {
                Termination::ResourceAbort
            };
            return Ok(SolveResult {
                value: SolvedValue::Set(current),
                stats,
                termination: term,
                residual,
                iterations: iteration,
            });
        }
        if spvi_should_stop(&current, &h_set, classes) {
            return Ok(SolveResult {
                value: SolvedValue::Set(current),
                stats,
                termination: Termination::AllInformationRich,
                residual,
                iterations: iteration,
            });
        }
        if h_set.generation >= cfg.max_expansions || clock.expired() {
            return Ok(SolveResult {
                value: SolvedValue::Set(current),
                stats,
                termination: Termination::IterationCap,
                residual,
                iterations: iteration,
            });
        }
        let next = expand_subset(model, &current, &h_set, classes, cfg.exhaustive_expansion);
        if next.len() == h_set.len() {
            // Nothing qualified for extension: the stopping criterion holds
            // for every extendable vector.
            return Ok(SolveResult {
                value: SolvedValue::Set(current),
                stats,
                termination: Termination::AllInformationRich,
                residual,
                iterations: iteration,
            });
        }
        h_set = next;
    }
}
