//! Turning value functions into behavior: one-step-lookahead improving
//! policies (over flat sets or per-simplex families), the QMDP baseline,
//! and seeded Monte-Carlo evaluation.

use crate::dp::{FamilyKey, SimplexFamily};
use crate::geometry::{induced_value, VectorSet};
use crate::model::{BeliefState, PomdpModel};
use crate::solvers::SolvedValue;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

/// Convergence residual for the QMDP value iteration.
pub const QMDP_RESIDUAL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error(
        "next belief after (a={action}, z={observation}) lies outside every \
         family region; the family does not cover its own reachable set"
    )]
    OutsideRegions { action: usize, observation: usize },
}

/// A value function an improving policy can look ahead through.
pub enum ValueFn<'a> {
    Set(&'a VectorSet),
    Family(&'a SimplexFamily),
}

impl<'a> ValueFn<'a> {
    pub fn of(solved: &'a SolvedValue) -> ValueFn<'a> {
        match solved {
            SolvedValue::Set(s) => ValueFn::Set(s),
            SolvedValue::Family(f) => ValueFn::Family(f),
        }
    }

    /// Value of the next belief reached via (a, z). Families route the
    /// lookup through the entry keyed by the pair (or by the observation
    /// alone for collapsed families).
    fn eval(
        &self,
        b: &BeliefState,
        a: usize,
        z: usize,
    ) -> Result<f64, PolicyError> {
        match self {
            ValueFn::Set(set) => Ok(induced_value(set, b).0),
            ValueFn::Family(fam) => {
                let entry = fam
                    .get(&FamilyKey::Pair {
                        action: a,
                        observation: z,
                    })
                    .or_else(|| fam.get(&FamilyKey::Obs(z)));
                match entry {
                    Some(e) => Ok(induced_value(&e.set, b).0),
                    None => Err(PolicyError::OutsideRegions {
                        action: a,
                        observation: z,
                    }),
                }
            }
        }
    }
}

/// One-step lookahead: argmax over a of r(b,a) + λ Σ_z P(z|b,a)·V(τ(b,a,z)),
/// skipping zero-probability observations; ties go to the lowest action
/// index. Returns the action and its lookahead value.
pub fn improving_action(
    model: &PomdpModel,
    value: &ValueFn<'_>,
    b: &BeliefState,
) -> Result<(usize, f64), PolicyError> {
    let lambda = model.discount();
    let mut best: Option<(usize, f64)> = None;
    for a in 0..model.num_actions() {
        let mut q = model.belief_reward(b, a);
        if lambda >= 1e-12 {
            for z in 0..model.num_observations() {
                let pz = model.observation_prob(b, a, z);
                if pz <= 1e-12 {
                    continue;
                }
                let next = model
                    .belief_update(b, a, z)
                    .expect("positive-probability observation must update");
                q += lambda * pz * value.eval(&next, a, z)?;
            }
        }
        match best {
            None => best = Some((a, q)),
            Some((_, bq)) if q > bq => best = Some((a, q)),
            _ => {}
        }
    }
    Ok(best.expect("at least one action"))
}

/// A deterministic belief-to-action policy.
pub enum Policy<'a> {
    Improving {
        model: &'a PomdpModel,
        value: ValueFn<'a>,
    },
    Qmdp {
        model: &'a PomdpModel,
        /// Q(s, a), row-major by state.
        q: Vec<f64>,
    },
}

impl Policy<'_> {
    pub fn action(&self, b: &BeliefState) -> Result<usize, PolicyError> {
        match self {
            Policy::Improving { model, value } => {
                Ok(improving_action(model, value, b)?.0)
            }
            Policy::Qmdp { model, q } => {
                let na = model.num_actions();
                let mut best = (0usize, f64::NEG_INFINITY);
                for a in 0..na {
                    let v: f64 = b
                        .probs()
                        .iter()
                        .enumerate()
                        .map(|(s, &p)| p * q[s * na + a])
                        .sum();
                    if v > best.1 {
                        best = (a, v);
                    }
                }
                Ok(best.0)
            }
        }
    }
}

/// QMDP baseline: solve the underlying fully observable MDP by value
/// iteration to residual 1e-8 and act by belief-weighted Q values.
pub fn qmdp_policy(model: &PomdpModel) -> Policy<'_> {
    let n = model.num_states();
    let na = model.num_actions();
    let lambda = model.discount();
    let mut q = vec![0.0; n * na];
    loop {
        let vmax: Vec<f64> = (0..n)
            .map(|s| (0..na).map(|a| q[s * na + a]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let mut delta = 0.0f64;
        let mut next = vec![0.0; n * na];
        for s in 0..n {
            for a in 0..na {
                let mut v = model.reward(s, a);
                for (s2, &vm) in vmax.iter().enumerate() {
                    let p = model.trans(s, a, s2);
                    if p > 0.0 {
                        v += lambda * p * vm;
                    }
                }
                delta = delta.max((v - q[s * na + a]).abs());
                next[s * na + a] = v;
            }
        }
        q = next;
        if delta <= QMDP_RESIDUAL {
            break;
        }
    }
    Policy::Qmdp { model, q }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub trials: usize,
    pub horizon: usize,
    pub mean: f64,
    pub std_error: f64,
    pub seed: u64,
}

impl SimulationReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.trials, self.horizon, self.mean, self.std_error, self.seed
        )
    }
}

impl std::fmt::Display for SimulationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "mean discounted return {:.4} +/- {:.4} (SE) over {} trials, horizon {}, seed {}",
            self.mean, self.std_error, self.trials, self.horizon, self.seed
        )
    }
}

fn sample_categorical(rng: &mut ChaCha20Rng, probs: impl Iterator<Item = f64>) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probs.enumerate() {
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Flat-Dirichlet point on the simplex: normalized unit exponentials.
fn sample_belief(rng: &mut ChaCha20Rng, n: usize) -> BeliefState {
    let raw: Vec<f64> = (0..n).map(|_| -(rng.gen::<f64>()).ln()).collect();
    BeliefState::new_normalized(raw)
}

/// Monte-Carlo evaluation: independent trials from uniformly random initial
/// beliefs, hidden state sampled from the belief, discounted-from-zero
/// returns. Trial t uses RNG stream t of the seed, so a fixed seed gives a
/// bit-identical report regardless of scheduling.
pub fn simulate(
    model: &PomdpModel,
    policy: &Policy<'_>,
    trials: usize,
    horizon: usize,
    seed: u64,
) -> Result<SimulationReport, PolicyError> {
    let n = model.num_states();
    let lambda = model.discount();
    let mut returns = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64 + 1);
        let mut belief = sample_belief(&mut rng, n);
        let mut state = sample_categorical(&mut rng, belief.probs().iter().cloned());
        let mut ret = 0.0;
        let mut discount = 1.0;
        for _ in 0..horizon {
            let a = policy.action(&belief)?;
            ret += discount * model.reward(state, a);
            discount *= lambda;
            let s2 = sample_categorical(&mut rng, (0..n).map(|s2| model.trans(state, a, s2)));
            let z = sample_categorical(
                &mut rng,
                (0..model.num_observations()).map(|z| model.obs(a, s2, z)),
            );
            belief = match model.belief_update(&belief, a, z) {
                Some(b) => b,
                // The sampled observation has positive probability under the
                // true state but can fall below the update cutoff under the
                // tracked belief; restart tracking from the observation.
                None => BeliefState::new_normalized(
                    (0..n).map(|s| model.obs(a, s, z)).collect(),
                ),
            };
            state = s2;
        }
        returns.push(ret);
    }
    let mean = returns.iter().sum::<f64>() / trials as f64;
    let var = if trials > 1 {
        returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (trials - 1) as f64
    } else {
        0.0
    };
    Ok(SimulationReport {
        trials,
        horizon,
        mean,
        std_error: (var / trials as f64).sqrt(),
        seed,
    })
}
