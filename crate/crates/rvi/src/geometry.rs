//! Alpha-vector sets and LP-based witness tests and pruning over the full
//! belief space, over a single simplex, and over unions of simplices.

use crate::lp::{Cmp, LpError, LpOutcome, LpProblem};
use crate::model::{BeliefState, History, SimplexBasis};
use thiserror::Error;

/// Component-wise tolerance under which two vectors count as duplicates.
pub const DEDUPE_TOL: f64 = 1e-12;
/// Default usefulness margin: a vector is useful iff its best advantage
/// exceeds this.
pub const DEFAULT_MARGIN: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("vector dimension {got} does not match set dimension {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("support tags differ within one vector set")]
    SupportMismatch,
    #[error("empty vector set where one vector is required")]
    EmptySet,
    #[error("empty basis list")]
    EmptyBases,
    #[error("LP solver failure: {0}")]
    Lp(#[from] LpError),
}

/// One linear piece of a piecewise-linear-convex value function.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaVector {
    /// Length num_states, or |support| in low-dimension mode.
    pub values: Vec<f64>,
    /// The action that defines this vector.
    pub action: usize,
    /// For DP-built vectors: the predecessor-vector index chosen for each
    /// observation.
    pub obs_map: Option<Vec<usize>>,
    /// Provenance for anytime solving: the history whose simplex witnessed
    /// this vector.
    pub history: Option<History>,
    /// In low-dimension mode, the state indices the values refer to.
    pub support: Option<Vec<usize>>,
}

impl AlphaVector {
    pub fn new(values: Vec<f64>, action: usize) -> Self {
        AlphaVector {
            values,
            action,
            obs_map: None,
            history: None,
            support: None,
        }
    }

    /// Inner product with a full-dimension belief; low-dimension vectors
    /// read the belief through their support.
    pub fn dot(&self, b: &BeliefState) -> f64 {
        match &self.support {
            None => self
                .values
                .iter()
                .zip(b.probs())
                .map(|(v, p)| v * p)
                .sum(),
            Some(sup) => sup
                .iter()
                .zip(&self.values)
                .map(|(&s, v)| v * b.probs()[s])
                .sum(),
        }
    }

    fn close_to(&self, other: &AlphaVector, tol: f64) -> bool {
        self.values.len() == other.values.len()
            && self.support == other.support
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| (a - b).abs() <= tol)
    }
}

/// A set of alpha vectors sharing one dimension (and support tag) that
/// induces a value function over a tagged region.
#[derive(Debug, Clone)]
pub struct VectorSet {
    pub vectors: Vec<AlphaVector>,
    pub dim: usize,
    /// Human-readable region tag: "space", "simplex:…", "union:…",
    /// "support:…".
    pub region: String,
}

impl VectorSet {
    pub fn new(
        vectors: Vec<AlphaVector>,
        dim: usize,
        region: impl Into<String>,
    ) -> Result<Self, GeomError> {
        let support = vectors.first().and_then(|v| v.support.clone());
        for v in &vectors {
            if v.values.len() != dim {
                return Err(GeomError::DimensionMismatch {
                    got: v.values.len(),
                    expected: dim,
                });
            }
            if v.support != support {
                return Err(GeomError::SupportMismatch);
            }
        }
        Ok(VectorSet {
            vectors,
            dim,
            region: region.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Evidence that a vector is useful: a belief in the region where it beats
/// every other vector by `advantage`.
#[derive(Debug, Clone)]
pub struct Witness {
    pub belief: BeliefState,
    /// Positive margin; `f64::INFINITY` when there was nothing to beat.
    pub advantage: f64,
    /// Barycentric weights over the basis points (simplex regions only).
    pub coefficients: Option<Vec<f64>>,
    /// Index of the simplex that produced the witness (union regions only).
    pub basis_index: Option<usize>,
}

/// Pruning knobs.
#[derive(Debug, Clone, Copy)]
pub struct PruneConfig {
    /// A vector is useful iff its optimal advantage exceeds this.
    pub margin: f64,
    /// Test each vector only against vectors kept so far instead of the
    /// whole set. Faster; may retain extra (dominated) vectors but never
    /// changes induced values.
    pub against_survivors: bool,
}

impl Default for PruneConfig {
    fn default() -> Self {
        PruneConfig {
            margin: DEFAULT_MARGIN,
            against_survivors: false,
        }
    }
}

/// A pruned set plus the per-survivor witnesses (parallel to the vectors)
/// and the number of LPs solved.
#[derive(Debug, Clone)]
pub struct PruneOutput {
    pub set: VectorSet,
    pub witnesses: Vec<Witness>,
    pub lp_count: usize,
}

/// Remove component-wise duplicates (within [`DEDUPE_TOL`]), keeping the
/// first occurrence.
pub fn dedupe(set: &VectorSet) -> VectorSet {
    let mut kept: Vec<AlphaVector> = Vec::new();
    for v in &set.vectors {
        if !kept.iter().any(|k| k.close_to(v, DEDUPE_TOL)) {
            kept.push(v.clone());
        }
    }
    VectorSet {
        vectors: kept,
        dim: set.dim,
        region: set.region.clone(),
    }
}

/// Value induced by the set at `b` and the argmax vector index (ties go to
/// the lowest index).
pub fn induced_value(set: &VectorSet, b: &BeliefState) -> (f64, usize) {
    assert!(!set.is_empty(), "induced_value on empty set");
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for (i, v) in set.vectors.iter().enumerate() {
        let val = v.dot(b);
        if val > best {
            best = val;
            arg = i;
        }
    }
    (best, arg)
}

/// Witness LP over the whole belief space: maximize x subject to
/// (β − α)·b ≥ x for every α, with b a distribution. Returns a witness iff
/// the optimum exceeds `margin`.
pub fn space_witness_lp(
    beta: &AlphaVector,
    others: &[AlphaVector],
    margin: f64,
) -> Result<Option<Witness>, GeomError> {
    let n = beta.values.len();
    if others.is_empty() {
        return Ok(Some(Witness {
            belief: BeliefState::unit(0, n),
            advantage: f64::INFINITY,
            coefficients: None,
            basis_index: None,
        }));
    }
    // Variables: b_0..b_{n-1} >= 0, then free x.
    let mut lp = LpProblem::new(n + 1);
    let mut obj = vec![0.0; n + 1];
    obj[n] = 1.0;
    lp.maximize(obj);
    lp.mark_free(n);
    let mut simplex_row = vec![1.0; n + 1];
    simplex_row[n] = 0.0;
    lp.constrain(simplex_row, Cmp::Eq, 1.0);
    for alpha in others {
        let mut row: Vec<f64> = beta
            .values
            .iter()
            .zip(&alpha.values)
            .map(|(b, a)| b - a)
            .collect();
        row.push(-1.0);
        lp.constrain(row, Cmp::Ge, 0.0);
    }
    match lp.solve()? {
        LpOutcome::Optimal { objective, values } if objective > margin => {
            let belief = BeliefState::new_normalized(values[..n].to_vec());
            Ok(Some(Witness {
                belief,
                advantage: objective,
                coefficients: None,
                basis_index: None,
            }))
        }
        _ => Ok(None),
    }
}

/// Witness LP over a simplex: variables λ_i ≥ 0 with Σλ = 1 and a free x;
/// maximize x subject to Σ_i [(β − α)·p_i] λ_i ≥ x for every α.
pub fn simplex_witness_lp(
    beta: &AlphaVector,
    others: &[AlphaVector],
    basis: &SimplexBasis,
    margin: f64,
) -> Result<Option<Witness>, GeomError> {
    assert!(!basis.is_empty(), "witness LP over an empty basis");
    let k = basis.len();
    if others.is_empty() {
        let mut coeffs = vec![0.0; k];
        coeffs[0] = 1.0;
        return Ok(Some(Witness {
            belief: basis.points[0].clone(),
            advantage: f64::INFINITY,
            coefficients: Some(coeffs),
            basis_index: None,
        }));
    }
    let mut lp = LpProblem::new(k + 1);
    let mut obj = vec![0.0; k + 1];
    obj[k] = 1.0;
    lp.maximize(obj);
    lp.mark_free(k);
    let mut sum_row = vec![1.0; k + 1];
    sum_row[k] = 0.0;
    lp.constrain(sum_row, Cmp::Eq, 1.0);
    for alpha in others {
        let mut row: Vec<f64> = basis
            .points
            .iter()
            .map(|p| beta.dot(p) - alpha.dot(p))
            .collect();
        row.push(-1.0);
        lp.constrain(row, Cmp::Ge, 0.0);
    }
    match lp.solve()? {
        LpOutcome::Optimal { objective, values } if objective > margin => {
            let coeffs = values[..k].to_vec();
            let belief = BeliefState::combine(&basis.points, &coeffs);
            Ok(Some(Witness {
                belief,
                advantage: objective,
                coefficients: Some(coeffs),
                basis_index: None,
            }))
        }
        _ => Ok(None),
    }
}

enum Region<'a> {
    Space,
    Simplex(&'a SimplexBasis),
    Union(&'a [SimplexBasis]),
}

fn witness_in_region(
    beta: &AlphaVector,
    others: &[AlphaVector],
    region: &Region<'_>,
    margin: f64,
    lp_count: &mut usize,
) -> Result<Option<Witness>, GeomError> {
    match region {
        Region::Space => {
            *lp_count += 1;
            space_witness_lp(beta, others, margin)
        }
        Region::Simplex(basis) => {
            *lp_count += 1;
            simplex_witness_lp(beta, others, basis, margin)
        }
        Region::Union(bases) => {
            // Short-circuit at the first simplex that yields a witness.
            for (i, basis) in bases.iter().enumerate() {
                *lp_count += 1;
                if let Some(mut w) = simplex_witness_lp(beta, others, basis, margin)? {
                    w.basis_index = Some(i);
                    return Ok(Some(w));
                }
            }
            Ok(None)
        }
    }
}

fn prune_region(
    set: &VectorSet,
    region: Region<'_>,
    cfg: &PruneConfig,
) -> Result<PruneOutput, GeomError> {
    let vectors = &set.vectors;
    let mut removed = vec![false; vectors.len()];
    let mut kept_idx: Vec<usize> = Vec::new();
    let mut witnesses: Vec<Witness> = Vec::new();
    let mut lp_count = 0;
    for i in 0..vectors.len() {
        let others: Vec<AlphaVector> = if cfg.against_survivors {
            kept_idx.iter().map(|&j| vectors[j].clone()).collect()
        } else {
            // The remaining original set: exact ties are resolved by
            // dropping the earlier vector once, never both.
            (0..vectors.len())
                .filter(|&j| j != i && !removed[j])
                .map(|j| vectors[j].clone())
                .collect()
        };
        match witness_in_region(&vectors[i], &others, &region, cfg.margin, &mut lp_count)? {
            Some(w) => {
                kept_idx.push(i);
                witnesses.push(w);
            }
            None => removed[i] = true,
        }
    }
    let kept: Vec<AlphaVector> = kept_idx.iter().map(|&i| vectors[i].clone()).collect();
    Ok(PruneOutput {
        set: VectorSet {
            vectors: kept,
            dim: set.dim,
            region: set.region.clone(),
        },
        witnesses,
        lp_count,
    })
}

/// Minimal set over the whole belief space.
pub fn space_prune(set: &VectorSet, cfg: &PruneConfig) -> Result<PruneOutput, GeomError> {
    if set.is_empty() {
        return Err(GeomError::EmptySet);
    }
    prune_region(set, Region::Space, cfg)
}

/// Minimal set over one simplex.
pub fn simplex_prune(
    set: &VectorSet,
    basis: &SimplexBasis,
    cfg: &PruneConfig,
) -> Result<PruneOutput, GeomError> {
    if set.is_empty() {
        return Err(GeomError::EmptySet);
    }
    prune_region(set, Region::Simplex(basis), cfg)
}

/// Keep every vector that is useful w.r.t. at least one simplex of the
/// union; each witness records which simplex accepted its vector.
pub fn union_prune(
    set: &VectorSet,
    bases: &[SimplexBasis],
    cfg: &PruneConfig,
) -> Result<PruneOutput, GeomError> {
    if set.is_empty() {
        return Err(GeomError::EmptySet);
    }
    if bases.is_empty() {
        return Err(GeomError::EmptyBases);
    }
    prune_region(set, Region::Union(bases), cfg)
}
