//! POMDP data model, belief calculus, and reachability/structure analysis:
//! transformational matrices, simplex bases, properness, observation supports
//! and histories.

use crate::lp::{Cmp, LpOutcome, LpProblem};
use thiserror::Error;

/// Tolerance for probability normalization checks.
pub const NORM_TOL: f64 = 1e-9;
/// Relative pivot threshold for the numerical rank test.
pub const RANK_PIVOT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("state, action and observation counts must be positive")]
    EmptySpace,
    #[error("discount must lie in [0, 1), got {0}")]
    BadDiscount(f64),
    #[error("probability out of [0, 1]: {kind} entry {index} = {value}")]
    BadProbability {
        kind: &'static str,
        index: usize,
        value: f64,
    },
    #[error("transition row (s={state}, a={action}) sums to {sum}, expected 1")]
    TransitionRow { state: usize, action: usize, sum: f64 },
    #[error("observation row (a={action}, s'={next_state}) sums to {sum}, expected 1")]
    ObservationRow {
        action: usize,
        next_state: usize,
        sum: f64,
    },
    #[error("belief of length {got}, expected {expected}")]
    BeliefLength { got: usize, expected: usize },
    #[error("belief entries sum to {0}, expected 1")]
    BeliefSum(f64),
    #[error("negative belief entry {0}")]
    BeliefNegative(f64),
    #[error("index out of range: {kind} {index} (max {max})")]
    IndexRange {
        kind: &'static str,
        index: usize,
        max: usize,
    },
}

/// A finite POMDP: state, action and observation spaces with transition,
/// observation and reward tables and a discount factor.
#[derive(Debug, Clone, PartialEq)]
pub struct PomdpModel {
    num_states: usize,
    num_actions: usize,
    num_observations: usize,
    transition: Vec<f64>,  // indexed [s][a][s']
    observation: Vec<f64>, // indexed [a][s'][z]
    reward: Vec<f64>,      // indexed [s][a]
    discount: f64,
    pub state_names: Vec<String>,
    pub action_names: Vec<String>,
    pub observation_names: Vec<String>,
}

impl PomdpModel {
    pub fn new(
        num_states: usize,
        num_actions: usize,
        num_observations: usize,
        transition: Vec<f64>,
        observation: Vec<f64>,
        reward: Vec<f64>,
        discount: f64,
    ) -> Result<Self, ModelError> {
        if num_states == 0 || num_actions == 0 || num_observations == 0 {
            return Err(ModelError::EmptySpace);
        }
        if !(0.0..1.0).contains(&discount) {
            return Err(ModelError::BadDiscount(discount));
        }
        assert_eq!(transition.len(), num_states * num_actions * num_states);
        assert_eq!(observation.len(), num_actions * num_states * num_observations);
        assert_eq!(reward.len(), num_states * num_actions);

        for (i, &p) in transition.iter().enumerate() {
            if !(-NORM_TOL..=1.0 + NORM_TOL).contains(&p) {
                return Err(ModelError::BadProbability {
                    kind: "transition",
                    index: i,
                    value: p,
                });
            }
        }
        for (i, &p) in observation.iter().enumerate() {
            if !(-NORM_TOL..=1.0 + NORM_TOL).contains(&p) {
                return Err(ModelError::BadProbability {
                    kind: "observation",
                    index: i,
                    value: p,
                });
            }
        }

        let model = PomdpModel {
            num_states,
            num_actions,
            num_observations,
            transition,
            observation,
            reward,
            discount,
            state_names: (0..num_states).map(|i| format!("s{i}")).collect(),
            action_names: (0..num_actions).map(|i| format!("a{i}")).collect(),
            observation_names: (0..num_observations).map(|i| format!("z{i}")).collect(),
        };
        for s in 0..num_states {
            for a in 0..num_actions {
                let sum: f64 = (0..num_states).map(|s2| model.trans(s, a, s2)).sum();
                if (sum - 1.0).abs() > NORM_TOL {
                    return Err(ModelError::TransitionRow {
                        state: s,
                        action: a,
                        sum,
                    });
                }
            }
        }
        for a in 0..num_actions {
            for s2 in 0..num_states {
                let sum: f64 = (0..num_observations).map(|z| model.obs(a, s2, z)).sum();
                if (sum - 1.0).abs() > NORM_TOL {
                    return Err(ModelError::ObservationRow {
                        action: a,
                        next_state: s2,
                        sum,
                    });
                }
            }
        }
        Ok(model)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }
    pub fn num_actions(&self) -> usize {
        self.num_actions
    }
    pub fn num_observations(&self) -> usize {
        self.num_observations
    }
    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// P(s' | s, a)
    #[inline]
    pub fn trans(&self, s: usize, a: usize, s2: usize) -> f64 {
        self.transition[(s * self.num_actions + a) * self.num_states + s2]
    }

    /// P(z | s', a)
    #[inline]
    pub fn obs(&self, a: usize, s2: usize, z: usize) -> f64 {
        self.observation[(a * self.num_states + s2) * self.num_observations + z]
    }

    /// r(s, a)
    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.num_actions + a]
    }

    pub fn check_action(&self, a: usize) -> Result<(), ModelError> {
        if a >= self.num_actions {
            return Err(ModelError::IndexRange {
                kind: "action",
                index: a,
                max: self.num_actions - 1,
            });
        }
        Ok(())
    }

    pub fn check_observation(&self, z: usize) -> Result<(), ModelError> {
        if z >= self.num_observations {
            return Err(ModelError::IndexRange {
                kind: "observation",
                index: z,
                max: self.num_observations - 1,
            });
        }
        Ok(())
    }

    /// P(z | b, a) = sum over s, s' of P(z, s' | s, a) b(s).
    pub fn observation_prob(&self, b: &BeliefState, a: usize, z: usize) -> f64 {
        let mut total = 0.0;
        for (s, &bs) in b.probs().iter().enumerate() {
            if bs == 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for s2 in 0..self.num_states {
                inner += self.trans(s, a, s2) * self.obs(a, s2, z);
            }
            total += bs * inner;
        }
        total
    }

    /// Bayes update tau(b, a, z). Returns `None` when P(z | b, a) = 0 — the
    /// updated belief is undefined, which is a value, not an error.
    pub fn belief_update(&self, b: &BeliefState, a: usize, z: usize) -> Option<BeliefState> {
        let norm = self.observation_prob(b, a, z);
        if norm <= 1e-12 {
            return None;
        }
        let mut next = vec![0.0; self.num_states];
        for (s, &bs) in b.probs().iter().enumerate() {
            if bs == 0.0 {
                continue;
            }
            for (s2, slot) in next.iter_mut().enumerate() {
                *slot += self.trans(s, a, s2) * self.obs(a, s2, z) * bs;
            }
        }
        for v in &mut next {
            *v /= norm;
        }
        Some(BeliefState::new_unchecked(next))
    }

    /// r(b, a) = sum over s of b(s) r(s, a).
    pub fn belief_reward(&self, b: &BeliefState, a: usize) -> f64 {
        b.probs()
            .iter()
            .enumerate()
            .map(|(s, &bs)| bs * self.reward(s, a))
            .sum()
    }

    pub fn min_reward(&self) -> f64 {
        self.reward.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_reward(&self) -> f64 {
        self.reward.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// The matrix with entry (s', s) = P(s', z | s, a) = P(z | s', a) P(s' | s, a).
    pub fn transformational_matrix(&self, a: usize, z: usize) -> TransformationalMatrix {
        let n = self.num_states;
        let mut entries = vec![0.0; n * n];
        for s2 in 0..n {
            let o = self.obs(a, s2, z);
            for s in 0..n {
                entries[s2 * n + s] = o * self.trans(s, a, s2);
            }
        }
        TransformationalMatrix {
            entries,
            side: n,
            action: a,
            observation: z,
        }
    }

    /// Basis of tau(B, a, z): updated unit beliefs, skipping states from which
    /// z is impossible under a. Empty basis means the pair is unrealizable.
    pub fn tau_simplex_basis(&self, a: usize, z: usize) -> SimplexBasis {
        let points = (0..self.num_states)
            .filter_map(|s| self.belief_update(&BeliefState::unit(s, self.num_states), a, z))
            .collect();
        SimplexBasis {
            points,
            tag: BasisTag::Pair {
                action: a,
                observation: z,
            },
        }
    }

    /// S^az: states s' with P(z | s', a) > 0 (strict positivity of the stored
    /// probability).
    pub fn observation_support(&self, a: usize, z: usize) -> ObservationSupport {
        ObservationSupport {
            action: a,
            observation: z,
            states: (0..self.num_states)
                .filter(|&s2| self.obs(a, s2, z) > 0.0)
                .collect(),
        }
    }

    /// Basis of phi(B, a, z): unit beliefs on the states of S^az.
    pub fn phi_simplex_basis(&self, a: usize, z: usize) -> SimplexBasis {
        let support = self.observation_support(a, z);
        let points = support
            .states
            .iter()
            .map(|&s| BeliefState::unit(s, self.num_states))
            .collect();
        SimplexBasis {
            points,
            tag: BasisTag::Support(support.states),
        }
    }

    /// Basis of tau(B, h): fold single-step updates through the history,
    /// dropping points whose intermediate observation probability is zero.
    pub fn history_simplex_basis(&self, h: &History) -> SimplexBasis {
        assert!(!h.pairs.is_empty(), "history must be nonempty");
        let mut points: Vec<BeliefState> = (0..self.num_states)
            .map(|s| BeliefState::unit(s, self.num_states))
            .collect();
        for &(a, z) in &h.pairs {
            points = points
                .iter()
                .filter_map(|p| self.belief_update(p, a, z))
                .collect();
            if points.is_empty() {
                break;
            }
        }
        SimplexBasis {
            points,
            tag: BasisTag::History(h.clone()),
        }
    }

    /// Per-pair degeneracy of the transformational matrices and the Theorem 3
    /// properness criterion: tau(B) is reported proper iff every matrix is
    /// degenerate.
    pub fn analyze_properness(&self) -> PropernessReport {
        let mut pairs = Vec::new();
        for a in 0..self.num_actions {
            for z in 0..self.num_observations {
                let m = self.transformational_matrix(a, z);
                let rank = m.rank(RANK_PIVOT_TOL);
                pairs.push(PairAnalysis {
                    action: a,
                    observation: z,
                    rank,
                    degenerate: rank < self.num_states,
                });
            }
        }
        let proper = pairs.iter().all(|p| p.degenerate);
        PropernessReport { pairs, proper }
    }

    /// Support sizes for every pair plus the maximum over pairs.
    pub fn informativeness_report(&self) -> InformativenessReport {
        let mut entries = Vec::new();
        let mut max_size = 0;
        for a in 0..self.num_actions {
            for z in 0..self.num_observations {
                let support = self.observation_support(a, z);
                max_size = max_size.max(support.states.len());
                entries.push(support);
            }
        }
        InformativenessReport { entries, max_size }
    }

    /// True when P(z | s', a) does not depend on a for every (s', z).
    pub fn observation_action_independent(&self) -> bool {
        for s2 in 0..self.num_states {
            for z in 0..self.num_observations {
                let p0 = self.obs(0, s2, z);
                for a in 1..self.num_actions {
                    if (self.obs(a, s2, z) - p0).abs() > 1e-12 {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// A probability distribution over the state space.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    probs: Vec<f64>,
}

impl BeliefState {
    pub fn new(probs: Vec<f64>) -> Result<Self, ModelError> {
        if let Some(&neg) = probs.iter().find(|&&p| p < -1e-12) {
            return Err(ModelError::BeliefNegative(neg));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(ModelError::BeliefSum(sum));
        }
        Ok(BeliefState { probs })
    }

    pub(crate) fn new_unchecked(probs: Vec<f64>) -> Self {
        BeliefState { probs }
    }

    /// Clamp tiny negatives to zero and rescale to sum 1; used to clean up
    /// solver output that is a belief up to arithmetic noise.
    pub fn new_normalized(mut probs: Vec<f64>) -> Self {
        for v in &mut probs {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if sum <= 0.0 {
            return BeliefState::uniform(probs.len());
        }
        for v in &mut probs {
            *v /= sum;
        }
        BeliefState { probs }
    }

    pub fn unit(state: usize, num_states: usize) -> Self {
        let mut probs = vec![0.0; num_states];
        probs[state] = 1.0;
        BeliefState { probs }
    }

    pub fn uniform(num_states: usize) -> Self {
        BeliefState {
            probs: vec![1.0 / num_states as f64; num_states],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Convex combination of basis points with the given weights.
    pub fn combine(points: &[BeliefState], weights: &[f64]) -> BeliefState {
        assert_eq!(points.len(), weights.len());
        let n = points[0].len();
        let mut probs = vec![0.0; n];
        for (p, &w) in points.iter().zip(weights) {
            for (slot, &v) in probs.iter_mut().zip(p.probs()) {
                *slot += w * v;
            }
        }
        BeliefState { probs }
    }
}

/// Transformational matrix P_az with entry (s', s) = P(s', z | s, a).
#[derive(Debug, Clone)]
pub struct TransformationalMatrix {
    entries: Vec<f64>, // row-major, row = s', column = s
    side: usize,
    pub action: usize,
    pub observation: usize,
}

impl TransformationalMatrix {
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn entry(&self, s2: usize, s: usize) -> f64 {
        self.entries[s2 * self.side + s]
    }

    /// Numerical rank via Gaussian elimination with partial pivoting; a pivot
    /// counts when its magnitude exceeds `pivot_tol` times the largest entry
    /// of the original matrix.
    pub fn rank(&self, pivot_tol: f64) -> usize {
        let n = self.side;
        let scale = self.entries.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        if scale == 0.0 {
            return 0;
        }
        let threshold = pivot_tol * scale;
        let mut m = self.entries.clone();
        let mut rank = 0;
        let mut row = 0;
        for col in 0..n {
            let pivot = (row..n).max_by(|&i, &j| {
                m[i * n + col]
                    .abs()
                    .partial_cmp(&m[j * n + col].abs())
                    .unwrap()
            });
            let pivot = match pivot {
                Some(p) if m[p * n + col].abs() > threshold => p,
                _ => continue,
            };
            m.swap(pivot * n + col, row * n + col);
            for j in (col + 1)..n {
                m.swap(pivot * n + j, row * n + j);
            }
            let pv = m[row * n + col];
            for i in (row + 1)..n {
                let f = m[i * n + col] / pv;
                if f != 0.0 {
                    for j in col..n {
                        m[i * n + j] -= f * m[row * n + j];
                    }
                }
            }
            rank += 1;
            row += 1;
            if row == n {
                break;
            }
        }
        rank
    }

    /// True iff numerical rank < side with the default pivot threshold.
    pub fn is_degenerate(&self) -> bool {
        self.rank(RANK_PIVOT_TOL) < self.side
    }
}

/// An ordered sequence of (action, observation) pairs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct History {
    pub pairs: Vec<(usize, usize)>,
}

impl History {
    pub fn new(pairs: Vec<(usize, usize)>) -> Self {
        assert!(!pairs.is_empty(), "history length must be >= 1");
        History { pairs }
    }

    pub fn single(a: usize, z: usize) -> Self {
        History { pairs: vec![(a, z)] }
    }

    pub fn extended(&self, a: usize, z: usize) -> Self {
        let mut pairs = self.pairs.clone();
        pairs.push((a, z));
        History { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

impl std::fmt::Display for History {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .pairs
            .iter()
            .map(|(a, z)| format!("{a}:{z}"))
            .collect();
        write!(f, "{}", parts.join(","))
    }
}

/// What generated a simplex basis.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisTag {
    Pair { action: usize, observation: usize },
    History(History),
    Support(Vec<usize>),
}

/// A finite list of belief states whose convex hull is a belief simplex.
#[derive(Debug, Clone)]
pub struct SimplexBasis {
    pub points: Vec<BeliefState>,
    pub tag: BasisTag,
}

impl SimplexBasis {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }
}

/// States with nonzero probability of emitting z after a.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationSupport {
    pub action: usize,
    pub observation: usize,
    pub states: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct PairAnalysis {
    pub action: usize,
    pub observation: usize,
    pub rank: usize,
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct PropernessReport {
    pub pairs: Vec<PairAnalysis>,
    /// Verdict per the Theorem 3 criterion: all matrices degenerate.
    pub proper: bool,
}

#[derive(Debug, Clone)]
pub struct InformativenessReport {
    pub entries: Vec<ObservationSupport>,
    pub max_size: usize,
}

/// If `target` is a convex combination of `points` (within tolerance 1e-9),
/// return the combination weights.
pub fn convex_combination(target: &BeliefState, points: &[BeliefState]) -> Option<Vec<f64>> {
    if points.is_empty() {
        return None;
    }
    let n = target.len();
    let k = points.len();
    let mut lp = LpProblem::new(k);
    lp.maximize(vec![0.0; k]);
    lp.constrain(vec![1.0; k], Cmp::Eq, 1.0);
    for s in 0..n {
        let coeffs: Vec<f64> = points.iter().map(|p| p.probs()[s]).collect();
        lp.constrain(coeffs, Cmp::Eq, target.probs()[s]);
    }
    match lp.solve().ok()? {
        LpOutcome::Optimal { values, .. } => Some(values),
        _ => None,
    }
}

/// Remove every basis point that is a convex combination of the remaining
/// points; one feasibility LP per point.
pub fn minimal_basis(basis: &SimplexBasis) -> SimplexBasis {
    let mut points = basis.points.clone();
    let mut i = 0;
    while i < points.len() {
        let others: Vec<BeliefState> = points
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, p)| p.clone())
            .collect();
        if !others.is_empty() && convex_combination(&points[i], &others).is_some() {
            points.remove(i);
        } else {
            i += 1;
        }
    }
    SimplexBasis {
        points,
        tag: basis.tag.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::gen::{example3, GeneratorParams};

    fn identity_single_obs() -> PomdpModel {
        // 2 states, 1 action with identity transitions, 1 observation.
        PomdpModel::new(
            2,
            1,
            1,
            vec![1.0, 0.0, 0.0, 1.0],
            vec![1.0, 1.0],
            vec![0.0, 0.0],
            0.9,
        )
        .unwrap()
    }

    #[test]
    fn belief_update_example3_unit() {
        let m = example3();
        let b = BeliefState::unit(0, 3);
        let next = m.belief_update(&b, 0, 0).unwrap();
        let expect = [0.5, 0.5, 0.0];
        for (v, e) in next.probs().iter().zip(expect) {
            assert!((v - e).abs() < 1e-12);
        }
    }

    #[test]
    fn belief_update_identity_case() {
        let m = identity_single_obs();
        let b = BeliefState::new(vec![0.3, 0.7]).unwrap();
        let next = m.belief_update(&b, 0, 0).unwrap();
        for (v, e) in next.probs().iter().zip(b.probs()) {
            assert!((v - e).abs() < 1e-12);
        }
    }

    #[test]
    fn belief_update_example3_interior() {
        // b = (0.5, 0, 0.5): P_az b = (0.15, 0.15, 0.2) before normalization.
        let m = example3();
        let b = BeliefState::new(vec![0.5, 0.0, 0.5]).unwrap();
        let next = m.belief_update(&b, 0, 0).unwrap();
        let expect = [0.3, 0.3, 0.4];
        for (v, e) in next.probs().iter().zip(expect) {
            assert!((v - e).abs() < 1e-12, "{next:?}");
        }
    }

    #[test]
    fn observation_prob_example3_is_half() {
        let m = example3();
        for b in [
            BeliefState::unit(1, 3),
            BeliefState::new(vec![0.2, 0.3, 0.5]).unwrap(),
        ] {
            assert!((m.observation_prob(&b, 0, 0) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn observation_prob_single_and_impossible() {
        let m = identity_single_obs();
        let b = BeliefState::uniform(2);
        assert!((m.observation_prob(&b, 0, 0) - 1.0).abs() < 1e-12);

        // Impossible observation: z1 never emitted.
        let m = PomdpModel::new(
            2,
            1,
            2,
            vec![1.0, 0.0, 0.0, 1.0],
            vec![1.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0],
            0.9,
        )
        .unwrap();
        assert_eq!(m.observation_prob(&b, 0, 1), 0.0);
        assert!(m.belief_update(&b, 0, 1).is_none());
    }

    #[test]
    fn belief_reward_basic() {
        let m = PomdpModel::new(
            2,
            1,
            1,
            vec![1.0, 0.0, 0.0, 1.0],
            vec![1.0, 1.0],
            vec![1.0, 3.0],
            0.9,
        )
        .unwrap();
        assert!((m.belief_reward(&BeliefState::unit(1, 2), 0) - 3.0).abs() < 1e-12);
        assert!((m.belief_reward(&BeliefState::uniform(2), 0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn elevator_all_requests_penalty() {
        let m = crate::io::gen::generate(&GeneratorParams::Elevator {
            patterns: 3,
            request_bits: 4,
        })
        .unwrap();
        // A state with all four request bits set carries penalty 1.0.
        let s = crate::io::gen::elevator_state_index(3, 4, 0, 0b1111, 0);
        for a in 0..m.num_actions() {
            assert!((m.reward(s, a) + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn transformational_matrix_example3_rows() {
        let m = example3();
        let p = m.transformational_matrix(0, 0);
        // Eq. (4): rows 1 and 2 equal, entries 0.5 * p_i1 etc.
        for s in 0..3 {
            assert!((p.entry(0, s) - p.entry(1, s)).abs() < 1e-12);
        }
        assert!((p.entry(0, 0) - 0.25).abs() < 1e-12);
        assert!((p.entry(2, 0) - 0.0).abs() < 1e-12);
        assert!((p.entry(2, 2) - 0.4).abs() < 1e-12);
        assert!(p.is_degenerate());
    }

    #[test]
    fn identity_matrix_invertible_and_zero_row_degenerate() {
        let m = identity_single_obs();
        let p = m.transformational_matrix(0, 0);
        assert_eq!(p.rank(RANK_PIVOT_TOL), 2);
        assert!(!p.is_degenerate());

        let m = PomdpModel::new(
            2,
            1,
            2,
            vec![1.0, 0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.5, 0.5],
            vec![0.0, 0.0],
            0.9,
        )
        .unwrap();
        // z1 impossible from s0: row 0 of P_{a,z1} is zero.
        let p = m.transformational_matrix(0, 1);
        assert!((p.entry(0, 0)).abs() < 1e-15);
        assert!(p.is_degenerate());
    }

    #[test]
    fn properness_example3() {
        let m = example3();
        let report = m.analyze_properness();
        assert_eq!(report.pairs.len(), 4);
        assert!(report.pairs.iter().all(|p| p.degenerate));
        assert!(report.proper);
    }

    #[test]
    fn properness_identity_stay_not_proper() {
        // A stay action with identity transitions and P(null|s,stay) = 0.9.
        let m = PomdpModel::new(
            2,
            1,
            2,
            vec![1.0, 0.0, 0.0, 1.0],
            vec![0.9, 0.1, 0.9, 0.1],
            vec![0.0, 0.0],
            0.9,
        )
        .unwrap();
        let report = m.analyze_properness();
        assert!(!report.pairs[0].degenerate); // (stay, null)
        assert!(!report.proper);
    }

    #[test]
    fn tau_basis_example3() {
        let m = example3();
        let basis = m.tau_simplex_basis(0, 0);
        let expect = [[0.5, 0.5, 0.0], [0.4, 0.4, 0.2], [0.1, 0.1, 0.8]];
        assert_eq!(basis.len(), 3);
        for (p, e) in basis.points.iter().zip(expect) {
            for (v, ev) in p.probs().iter().zip(e) {
                assert!((v - ev).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tau_basis_identity_and_impossible() {
        let m = identity_single_obs();
        let basis = m.tau_simplex_basis(0, 0);
        assert_eq!(basis.len(), 2);
        for (i, p) in basis.points.iter().enumerate() {
            assert!((p.probs()[i] - 1.0).abs() < 1e-12);
        }

        let m = PomdpModel::new(
            2,
            1,
            2,
            vec![1.0, 0.0, 0.0, 1.0],
            vec![1.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0],
            0.9,
        )
        .unwrap();
        assert!(m.tau_simplex_basis(0, 1).is_empty());
    }

    #[test]
    fn minimal_basis_example3_drops_middle_point() {
        let m = example3();
        let basis = m.tau_simplex_basis(0, 0);
        let min = minimal_basis(&basis);
        assert_eq!(min.len(), 2);
        assert!((min.points[0].probs()[0] - 0.5).abs() < 1e-12);
        assert!((min.points[1].probs()[0] - 0.1).abs() < 1e-12);
        // lambda_1 = (p21 - p31)/(p11 - p31) = 0.75
        let coeffs = convex_combination(&basis.points[1], &min.points).unwrap();
        assert!((coeffs[0] - 0.75).abs() < 1e-9);
        assert!((coeffs[1] - 0.25).abs() < 1e-9);
    }

    #[test]
    fn minimal_basis_keeps_units_and_drops_duplicates() {
        let units: Vec<BeliefState> = (0..3).map(|i| BeliefState::unit(i, 3)).collect();
        let basis = SimplexBasis {
            points: units.clone(),
            tag: BasisTag::Support(vec![0, 1, 2]),
        };
        assert_eq!(minimal_basis(&basis).len(), 3);

        let mut with_dup = units;
        with_dup.push(BeliefState::unit(1, 3));
        let basis = SimplexBasis {
            points: with_dup,
            tag: BasisTag::Support(vec![0, 1, 2]),
        };
        assert_eq!(minimal_basis(&basis).len(), 3);
    }

    #[test]
    fn observation_support_basics() {
        let m = example3();
        for a in 0..2 {
            for z in 0..2 {
                let sup = m.observation_support(a, z);
                assert_eq!(sup.states, vec![0, 1, 2]);
            }
        }
        let phi = m.phi_simplex_basis(0, 0);
        assert_eq!(phi.len(), 3);
    }

    #[test]
    fn history_basis_length_one_matches_tau() {
        let m = example3();
        let h = History::single(0, 0);
        let hb = m.history_simplex_basis(&h);
        let tb = m.tau_simplex_basis(0, 0);
        assert_eq!(hb.len(), tb.len());
        for (a, b) in hb.points.iter().zip(&tb.points) {
            for (x, y) in a.probs().iter().zip(b.probs()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn history_basis_two_steps_matches_matrix_square() {
        // 2-state chain with a noisy observation; apply [a, z] twice.
        let m = PomdpModel::new(
            2,
            1,
            2,
            vec![0.8, 0.2, 0.3, 0.7],
            vec![0.9, 0.1, 0.4, 0.6],
            vec![0.0, 0.0],
            0.9,
        )
        .unwrap();
        let h = History::new(vec![(0, 0), (0, 0)]);
        let hb = m.history_simplex_basis(&h);
        let p = m.transformational_matrix(0, 0);
        for (i, point) in hb.points.iter().enumerate() {
            // normalized P_az^2 * unit_i
            let mut v = [0.0f64; 2];
            for s2 in 0..2 {
                for mid in 0..2 {
                    v[s2] += p.entry(s2, mid) * p.entry(mid, i);
                }
            }
            let norm: f64 = v.iter().sum();
            for (got, want) in point.probs().iter().zip(v.iter().map(|x| x / norm)) {
                assert!((got - want).abs() < 1e-12);
            }
        }
    }
}
