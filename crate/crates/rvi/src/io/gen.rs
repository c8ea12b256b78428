//! Benchmark model generators.
//!
//! Each generator emits a fully validated [`PomdpModel`]. The maze and office
//! floor plans are canonical layouts defined here (coordinates, walls and
//! per-location observation strings); they are documented in the module so
//! that every structural fact the analyzers report can be traced back to the
//! tables below.

use crate::model::PomdpModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("generated model failed validation: {0}")]
    Model(#[from] crate::model::ModelError),
}

/// Which benchmark model to build, with problem-specific parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorParams {
    /// The three-state, two-action, two-observation illustration model.
    Example3,
    /// Ten-location maze with deterministic wall-string observations.
    Maze1,
    /// Maze variant with a `stay` action and a `null` observation.
    Maze2,
    /// Elevator control problem; the canonical instance has 3 arrival
    /// patterns and 4 request bits (96 states, 32 observations).
    Elevator { patterns: usize, request_bits: usize },
    /// Office mail-collection navigation problem (35 states, 6 actions,
    /// 23 observations).
    Office,
    /// Random dense/sparse model, reproducible from the seed.
    Random {
        seed: u64,
        num_states: usize,
        num_actions: usize,
        num_observations: usize,
        /// Probability that a candidate transition/observation entry is
        /// zeroed before renormalization; 0.0 gives dense models.
        sparsity: f64,
    },
    /// Toroidal grid where moves are uninformative and a `look` action
    /// nearly reveals the current cell.
    NearDiscernibleGrid { seed: u64, rows: usize, cols: usize },
}

pub const DEFAULT_DISCOUNT: f64 = 0.95;

pub fn generate(params: &GeneratorParams) -> Result<PomdpModel, GenError> {
    match params {
        GeneratorParams::Example3 => Ok(example3()),
        GeneratorParams::Maze1 => Ok(maze1()),
        GeneratorParams::Maze2 => Ok(maze2()),
        GeneratorParams::Elevator {
            patterns,
            request_bits,
        } => elevator(*patterns, *request_bits),
        GeneratorParams::Office => Ok(office()),
        GeneratorParams::Random {
            seed,
            num_states,
            num_actions,
            num_observations,
            sparsity,
        } => random_model(*seed, *num_states, *num_actions, *num_observations, *sparsity),
        GeneratorParams::NearDiscernibleGrid { seed, rows, cols } => {
            near_discernible_grid(*seed, *rows, *cols)
        }
    }
}

// ---------------------------------------------------------------------------
// example3
// ---------------------------------------------------------------------------

/// Three states, two actions, two observations. For each action the
/// transition rows have the form (p_i, p_i, 1 - 2 p_i), so both rows of every
/// transformational matrix coincide on the first two states; both
/// observations are emitted with probability 0.5 everywhere. Action a0 uses
/// p = (0.5, 0.4, 0.1); action a1 uses p = (0.45, 0.3, 0.2). Rewards are all
/// zero — the model exists for structure analysis, not optimization.
pub fn example3() -> PomdpModel {
    let p_a: [[f64; 3]; 2] = [[0.5, 0.4, 0.1], [0.45, 0.3, 0.2]];
    let ns = 3;
    let na = 2;
    let nz = 2;
    let mut transition = vec![0.0; ns * na * ns];
    for (a, ps) in p_a.iter().enumerate() {
        for (s, &p) in ps.iter().enumerate() {
            let row = &mut transition[(s * na + a) * ns..(s * na + a) * ns + ns];
            row[0] = p;
            row[1] = p;
            row[2] = 1.0 - 2.0 * p;
        }
    }
    let observation = vec![0.5; na * ns * nz];
    let reward = vec![0.0; ns * na];
    let mut m = PomdpModel::new(ns, na, nz, transition, observation, reward, DEFAULT_DISCOUNT)
        .expect("example3 model is valid by construction");
    m.state_names = vec!["s1".into(), "s2".into(), "s3".into()];
    m.action_names = vec!["a1".into(), "a2".into()];
    m.observation_names = vec!["z1".into(), "z2".into()];
    m
}

// ---------------------------------------------------------------------------
// mazes
// ---------------------------------------------------------------------------

/// Direction order used for move actions and observation strings: E, S, W, N.
const DIR_DELTAS: [(i32, i32); 4] = [(1, 0), (0, -1), (-1, 0), (0, 1)];
const DIR_NAMES: [&str; 4] = ["e", "s", "w", "n"];

/// A small deterministic grid world: locations with coordinates and an
/// explicit adjacency list (walls may separate touching cells).
struct GridWorld {
    coords: Vec<(i32, i32)>,
    edges: Vec<(usize, usize)>,
}

impl GridWorld {
    fn neighbor(&self, loc: usize, dir: usize) -> Option<usize> {
        let (dx, dy) = DIR_DELTAS[dir];
        let target = (self.coords[loc].0 + dx, self.coords[loc].1 + dy);
        let other = self.coords.iter().position(|&c| c == target)?;
        let connected = self
            .edges
            .iter()
            .any(|&(u, v)| (u, v) == (loc, other) || (v, u) == (loc, other));
        connected.then_some(other)
    }

    /// Outcome distribution of a move: 0.8 one step, 0.1 stay, 0.1 two
    /// steps; blocked steps stop at the last reachable cell.
    fn move_dist(&self, loc: usize, dir: usize) -> Vec<(usize, f64)> {
        let step1 = self.neighbor(loc, dir).unwrap_or(loc);
        let step2 = self.neighbor(step1, dir).unwrap_or(step1);
        let mut acc: Vec<(usize, f64)> = Vec::new();
        for (dest, p) in [(step1, 0.8), (loc, 0.1), (step2, 0.1)] {
            match acc.iter_mut().find(|(d, _)| *d == dest) {
                Some(entry) => entry.1 += p,
                None => acc.push((dest, p)),
            }
        }
        acc
    }

    /// The four-letter wall string of a location: for each direction, 'o'
    /// when open, otherwise the supplied blocked-side letter.
    fn wall_string(&self, loc: usize, blocked_letter: impl Fn(usize, usize) -> char) -> String {
        (0..4)
            .map(|d| {
                if self.neighbor(loc, d).is_some() {
                    'o'
                } else {
                    blocked_letter(loc, d)
                }
            })
            .collect()
    }
}

/// The ten-location maze: a west–east corridor of locations 1–6 (indices
/// 0–5) with two vertical towers, 7 above 3 (9 above 7) and 8 above 4 (10
/// above 8); the towers touch but are separated by a wall.
fn maze_world() -> GridWorld {
    GridWorld {
        coords: vec![
            (0, 0),
            (1, 0),
            (2, 0),
            (3, 0),
            (4, 0),
            (5, 0),
            (2, 1),
            (3, 1),
            (2, 2),
            (3, 2),
        ],
        edges: vec![
            (0, 1),
            (1, 2),
            (2, 3),
            (3, 4),
            (4, 5),
            (2, 6),
            (6, 8),
            (3, 7),
            (7, 9),
        ],
    }
}

fn maze_strings(world: &GridWorld) -> Vec<String> {
    (0..world.coords.len())
        .map(|l| world.wall_string(l, |_, _| 'w'))
        .collect()
}

fn distinct_strings(strings: &[String]) -> Vec<String> {
    let mut seen: Vec<String> = Vec::new();
    for s in strings {
        if !seen.contains(s) {
            seen.push(s.clone());
        }
    }
    seen
}

fn fill_move_transitions(
    transition: &mut [f64],
    world: &GridWorld,
    num_states: usize,
    num_actions: usize,
) {
    for s in 0..world.coords.len() {
        for dir in 0..4 {
            for (dest, p) in world.move_dist(s, dir) {
                transition[(s * num_actions + dir) * num_states + dest] = p;
            }
        }
    }
}

/// maze1: 10 locations, 5 actions (four moves + declare), 6 deterministic
/// string observations; declare pays +1 at location 9 and −1 at location 10.
pub fn maze1() -> PomdpModel {
    let world = maze_world();
    let strings = maze_strings(&world);
    let obs_names = distinct_strings(&strings);
    let ns = 10;
    let na = 5; // e, s, w, n, declare
    let nz = obs_names.len();
    debug_assert_eq!(nz, 6);

    let mut transition = vec![0.0; ns * na * ns];
    fill_move_transitions(&mut transition, &world, ns, na);
    for s in 0..ns {
        transition[(s * na + 4) * ns + s] = 1.0; // declare stays
    }

    let mut observation = vec![0.0; na * ns * nz];
    for a in 0..na {
        for s2 in 0..ns {
            let z = obs_names.iter().position(|o| *o == strings[s2]).unwrap();
            observation[(a * ns + s2) * nz + z] = 1.0;
        }
    }

    let mut reward = vec![0.0; ns * na];
    reward[8 * na + 4] = 1.0;
    reward[9 * na + 4] = -1.0;

    let mut m = PomdpModel::new(ns, na, nz, transition, observation, reward, DEFAULT_DISCOUNT)
        .expect("maze1 model is valid by construction");
    m.state_names = (1..=10).map(|i| format!("loc{i}")).collect();
    m.action_names = DIR_NAMES
        .iter()
        .map(|d| format!("move-{d}"))
        .chain(["declare".to_string()])
        .collect();
    m.observation_names = obs_names;
    m
}

/// maze2: maze1 plus a `stay` action and a `null` observation. `stay` leaves
/// the state unchanged and yields `null` with probability 0.9 (ideal string
/// otherwise); moves misread `owow` as `owww` and `woww` as `wowo` with
/// probability 0.1; `declare` always yields `null`; each move costs 2.
pub fn maze2() -> PomdpModel {
    let world = maze_world();
    let strings = maze_strings(&world);
    let mut obs_names = distinct_strings(&strings);
    obs_names.push("null".to_string());
    let ns = 10;
    let na = 6; // e, s, w, n, declare, stay
    let nz = obs_names.len();
    let null = nz - 1;
    let idx = |name: &str| obs_names.iter().position(|o| o == name).unwrap();

    let mut transition = vec![0.0; ns * na * ns];
    fill_move_transitions(&mut transition, &world, ns, na);
    for s in 0..ns {
        transition[(s * na + 4) * ns + s] = 1.0; // declare
        transition[(s * na + 5) * ns + s] = 1.0; // stay
    }

    let mut observation = vec![0.0; na * ns * nz];
    for s2 in 0..ns {
        let ideal = idx(&strings[s2]);
        // Moves: ideal string, with the two documented misreads.
        let move_pairs: Vec<(usize, f64)> = match strings[s2].as_str() {
            "owow" => vec![(ideal, 0.9), (idx("owww"), 0.1)],
            "woww" => vec![(ideal, 0.9), (idx("wowo"), 0.1)],
            _ => vec![(ideal, 1.0)],
        };
        for a in 0..4 {
            for &(z, p) in &move_pairs {
                observation[(a * ns + s2) * nz + z] += p;
            }
        }
        observation[(4 * ns + s2) * nz + null] = 1.0; // declare
        observation[(5 * ns + s2) * nz + null] = 0.9; // stay
        observation[(5 * ns + s2) * nz + ideal] += 0.1;
    }

    let mut reward = vec![0.0; ns * na];
    for s in 0..ns {
        for a in 0..4 {
            reward[s * na + a] = -2.0;
        }
    }
    reward[8 * na + 4] = 1.0;
    reward[9 * na + 4] = -1.0;

    let mut m = PomdpModel::new(ns, na, nz, transition, observation, reward, DEFAULT_DISCOUNT)
        .expect("maze2 model is valid by construction");
    m.state_names = (1..=10).map(|i| format!("loc{i}")).collect();
    m.action_names = DIR_NAMES
        .iter()
        .map(|d| format!("move-{d}"))
        .chain(["declare".to_string(), "stay".to_string()])
        .collect();
    m.observation_names = obs_names;
    m
}

// ---------------------------------------------------------------------------
// elevator
// ---------------------------------------------------------------------------

/// State index of the elevator model: (pattern, request bits, floor).
pub fn elevator_state_index(
    _patterns: usize,
    request_bits: usize,
    pattern: usize,
    requests: usize,
    floor: usize,
) -> usize {
    (pattern << request_bits | requests) << 1 | floor
}

/// Pattern-dependent probability that a pick-up request arrives at a floor:
/// pattern 0 favors floor 0 (0.5 vs 0.1), pattern 1 favors floor 1, and any
/// further pattern is balanced at 0.3.
fn elevator_arrival_rate(pattern: usize, floor: usize) -> f64 {
    match (pattern, floor) {
        (0, 0) | (1, 1) => 0.5,
        (0, 1) | (1, 0) => 0.1,
        _ => 0.3,
    }
}

/// Two-floor elevator. A state is (arrival pattern, request bits, floor);
/// request bit 0/1 = pick-up at floor 0/1, bit 2/3 = drop-off at floor 0/1
/// (only the first `request_bits` exist). Actions go-up/go-down/stay; the
/// pattern evolves 0.90 self / rest split evenly; `stay` fulfills the
/// current floor's requests (a fulfilled pick-up sets the other floor's
/// drop-off bit when that bit exists); restricted moves are self-loop
/// no-ops. Each observation deterministically reveals the next state's
/// request bits and floor (never the pattern). The reward is −0.25 per
/// outstanding request bit, for every action.
pub fn elevator(patterns: usize, request_bits: usize) -> Result<PomdpModel, GenError> {
    if patterns == 0 || !(1..=4).contains(&request_bits) {
        return Err(GenError::InvalidParams(format!(
            "elevator requires patterns >= 1 and request_bits in 1..=4, got {patterns}/{request_bits}"
        )));
    }
    let nr = 1usize << request_bits;
    let ns = patterns * nr * 2;
    let na = 3; // go-up, go-down, stay
    let nz = nr * 2;

    let pattern_prob = |p: usize, p2: usize| -> f64 {
        if patterns == 1 {
            1.0
        } else if p == p2 {
            0.90
        } else {
            0.10 / (patterns - 1) as f64
        }
    };

    let mut transition = vec![0.0; ns * na * ns];
    let mut reward = vec![0.0; ns * na];
    for p in 0..patterns {
        for r in 0..nr {
            for f in 0..2 {
                let s = elevator_state_index(patterns, request_bits, p, r, f);
                for a in 0..na {
                    reward[s * na + a] = -0.25 * (r.count_ones() as f64);
                    // Next floor: restricted moves are no-ops.
                    let f2 = match a {
                        0 => 1,
                        1 => 0,
                        _ => f,
                    };
                    // Requests after any fulfillment by `stay`.
                    let mut base = r;
                    if a == 2 {
                        let pu = f; // pick-up bit of the current floor
                        let dof = 2 + f; // drop-off bit of the current floor
                        if base & (1 << pu) != 0 {
                            base &= !(1 << pu);
                            let other_do = 2 + (1 - f);
                            if other_do < request_bits {
                                base |= 1 << other_do;
                            }
                        }
                        if dof < request_bits {
                            base &= !(1 << dof);
                        }
                    }
                    // Pick-up bits that may newly arrive.
                    let open_pu: Vec<usize> = (0..request_bits.min(2))
                        .filter(|&bit| base & (1 << bit) == 0)
                        .collect();
                    for p2 in 0..patterns {
                        let pp = pattern_prob(p, p2);
                        for mask in 0..(1usize << open_pu.len()) {
                            let mut r2 = base;
                            let mut prob = pp;
                            for (k, &bit) in open_pu.iter().enumerate() {
                                let rate = elevator_arrival_rate(p2, bit);
                                if mask & (1 << k) != 0 {
                                    r2 |= 1 << bit;
                                    prob *= rate;
                                } else {
                                    prob *= 1.0 - rate;
                                }
                            }
                            let s2 = elevator_state_index(patterns, request_bits, p2, r2, f2);
                            transition[(s * na + a) * ns + s2] += prob;
                        }
                    }
                }
            }
        }
    }

    let mut observation = vec![0.0; na * ns * nz];
    for a in 0..na {
        for p in 0..patterns {
            for r in 0..nr {
                for f in 0..2 {
                    let s2 = elevator_state_index(patterns, request_bits, p, r, f);
                    observation[(a * ns + s2) * nz + (r << 1 | f)] = 1.0;
                }
            }
        }
    }

    let mut m = PomdpModel::new(ns, na, nz, transition, observation, reward, DEFAULT_DISCOUNT)?;
    m.state_names = (0..ns)
        .map(|s| {
            let f = s & 1;
            let r = (s >> 1) & (nr - 1);
            let p = s >> (1 + request_bits);
            format!("p{p}-r{r:0w$b}-f{f}", w = request_bits)
        })
        .collect();
    m.action_names = vec!["go-up".into(), "go-down".into(), "stay".into()];
    m.observation_names = (0..nz)
        .map(|z| format!("r{:0w$b}-f{}", z >> 1, z & 1, w = request_bits))
        .collect();
    Ok(m)
}

// ---------------------------------------------------------------------------
// office
// ---------------------------------------------------------------------------

/// Canonical office floor plan: a west–east corridor of 17 cells (indices
/// 0..=16) at y = 1, with one room per corridor cell — above the corridor
/// for even x, below it for odd x (room index 17 + x). Blocked sides carry a
/// letter: door (d), empty wall (w), or display board (b); the letter tables
/// below are tuned so the 34 locations produce exactly 22 distinct strings.
/// The goal is location index 21 (the room above corridor cell 4).
pub const OFFICE_GOAL: usize = 21;
pub const OFFICE_TERMINAL: usize = 34;

fn office_world() -> GridWorld {
    let mut coords = Vec::new();
    let mut edges = Vec::new();
    for x in 0..17 {
        coords.push((x, 1));
        if x > 0 {
            edges.push((x as usize - 1, x as usize));
        }
    }
    for x in 0..17i32 {
        let y = if x % 2 == 0 { 2 } else { 0 };
        coords.push((x, y));
        edges.push((x as usize, 17 + x as usize));
    }
    GridWorld { coords, edges }
}

fn office_strings(world: &GridWorld) -> Vec<String> {
    // Letters for blocked sides, per location and direction (E,S,W,N).
    let letter = |loc: usize, dir: usize| -> char {
        if loc < 17 {
            // Corridor cells.
            let x = loc;
            match (x, dir) {
                (0, 1) => 'd',
                (0, 2) => 'w',
                (16, 0) => 'w',
                (16, 1) => 'd',
                (_, 1) => ['d', 'w', 'b'][(x / 2 - 1) % 3], // blocked S, even x
                (_, 3) => ['d', 'w', 'b'][((x - 1) / 2) % 3], // blocked N, odd x
                _ => 'w',
            }
        } else {
            let x = loc - 17;
            if x % 2 == 0 {
                // Rooms above: (E, _, W, N) with S open.
                let table = [
                    ['d', 'd', 'w'], // x = 0
                    ['d', 'w', 'w'], // x = 2
                    ['w', 'w', 'w'], // x = 4 (goal room, "woww")
                    ['b', 'w', 'w'], // x = 6
                    ['w', 'o', 'b'], // placeholder, replaced below
                    ['d', 'd', 'b'], // x = 10
                    ['w', 'w', 'd'], // x = 12
                    ['d', 'd', 'w'], // x = 14 (repeat of x = 0)
                    ['d', 'w', 'w'], // x = 16 (repeat of x = 2)
                ];
                let mut row = table[x / 2];
                if x == 8 {
                    row = ['w', 'd', 'b']; // "wodb"
                }
                match dir {
                    0 => row[0],
                    2 => row[1],
                    _ => row[2],
                }
            } else {
                // Rooms below: (E, S, W, _) with N open.
                let table = [
                    ['d', 'd', 'w'], // x = 1
                    ['w', 'd', 'w'], // x = 3
                    ['b', 'w', 'd'], // x = 5
                    ['d', 'b', 'w'], // x = 7
                    ['w', 'w', 'd'], // x = 9
                    ['d', 'w', 'd'], // x = 11
                    ['b', 'd', 'b'], // x = 13
                    ['d', 'd', 'w'], // x = 15 (repeat of x = 1)
                ];
                let row = table[(x - 1) / 2];
                match dir {
                    0 => row[0],
                    1 => row[1],
                    _ => row[2],
                }
            }
        }
    };
    (0..world.coords.len())
        .map(|l| world.wall_string(l, letter))
        .collect()
}

/// Office navigation: 34 locations plus a terminal state; actions are four
/// moves, `look` and `beep`. Only `look` is informative: at a location it
/// yields the ideal string with probability 0.90, `null` with 0.05 and a
/// one-character-off ideal string of another location with 0.05 (split
/// uniformly; folded into the ideal string when no string qualifies).
/// `beep` pays 50 at the goal (then the run enters the absorbing terminal
/// state) and −10 elsewhere; moves cost 2 when aimed at a blocked side;
/// `look` always costs 1.
pub fn office() -> PomdpModel {
    let world = office_world();
    let strings = office_strings(&world);
    let mut obs_names = distinct_strings(&strings);
    debug_assert_eq!(obs_names.len(), 22);
    obs_names.push("null".to_string());
    let nl = 34;
    let ns = 35;
    let na = 6; // e, s, w, n, look, beep
    let nz = obs_names.len();
    let null = nz - 1;
    let idx = |name: &str| obs_names.iter().position(|o| o == name).unwrap();

    let mut transition = vec![0.0; ns * na * ns];
    fill_move_transitions(&mut transition, &world, ns, na);
    for s in 0..nl {
        transition[(s * na + 4) * ns + s] = 1.0; // look
        let beep_dest = if s == OFFICE_GOAL { OFFICE_TERMINAL } else { s };
        transition[(s * na + 5) * ns + beep_dest] = 1.0;
    }
    for a in 0..na {
        transition[(OFFICE_TERMINAL * na + a) * ns + OFFICE_TERMINAL] = 1.0;
    }

    let mut observation = vec![0.0; na * ns * nz];
    let hamming1 = |a: &str, b: &str| a.chars().zip(b.chars()).filter(|(x, y)| x != y).count() == 1;
    for s2 in 0..ns {
        for a in 0..na {
            let row = &mut observation[(a * ns + s2) * nz..(a * ns + s2) * nz + nz];
            if a != 4 || s2 == OFFICE_TERMINAL {
                row[null] = 1.0;
                continue;
            }
            let ideal = &strings[s2];
            let offs: Vec<usize> = obs_names[..22]
                .iter()
                .enumerate()
                .filter(|(_, o)| *o != ideal && hamming1(o, ideal))
                .map(|(z, _)| z)
                .collect();
            row[null] = 0.05;
            if offs.is_empty() {
                row[idx(ideal)] = 0.95;
            } else {
                row[idx(ideal)] = 0.90;
                for &z in &offs {
                    row[z] += 0.05 / offs.len() as f64;
                }
            }
        }
    }

    let mut reward = vec![0.0; ns * na];
    for s in 0..nl {
        for dir in 0..4 {
            if world.neighbor(s, dir).is_none() {
                reward[s * na + dir] = -2.0;
            }
        }
        reward[s * na + 4] = -1.0;
        reward[s * na + 5] = if s == OFFICE_GOAL { 50.0 } else { -10.0 };
    }

    let mut m = PomdpModel::new(ns, na, nz, transition, observation, reward, DEFAULT_DISCOUNT)
        .expect("office model is valid by construction");
    m.state_names = (1..=nl)
        .map(|i| format!("loc{i}"))
        .chain(["terminal".to_string()])
        .collect();
    m.action_names = DIR_NAMES
        .iter()
        .map(|d| format!("move-{d}"))
        .chain(["look".to_string(), "beep".to_string()])
        .collect();
    m.observation_names = obs_names;
    m
}

// ---------------------------------------------------------------------------
// random models
// ---------------------------------------------------------------------------

fn random_row(rng: &mut ChaCha20Rng, len: usize, sparsity: f64) -> Vec<f64> {
    let mut row = vec![0.0; len];
    for slot in row.iter_mut() {
        if rng.gen::<f64>() >= sparsity {
            *slot = rng.gen::<f64>() + 1e-3;
        }
    }
    if row.iter().all(|&v| v == 0.0) {
        row[rng.gen_range(0..len)] = 1.0;
    }
    let sum: f64 = row.iter().sum();
    for v in &mut row {
        *v /= sum;
    }
    row
}

/// Random model; all tables are drawn from a seeded portable RNG so the same
/// parameters always produce the identical model.
pub fn random_model(
    seed: u64,
    num_states: usize,
    num_actions: usize,
    num_observations: usize,
    sparsity: f64,
) -> Result<PomdpModel, GenError> {
    if num_states == 0 || num_actions == 0 || num_observations == 0 {
        return Err(GenError::InvalidParams("zero-sized space".into()));
    }
    if !(0.0..1.0).contains(&sparsity) {
        return Err(GenError::InvalidParams(format!(
            "sparsity must be in [0, 1), got {sparsity}"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut transition = Vec::with_capacity(num_states * num_actions * num_states);
    for _ in 0..num_states * num_actions {
        transition.extend(random_row(&mut rng, num_states, sparsity));
    }
    let mut observation = Vec::with_capacity(num_actions * num_states * num_observations);
    for _ in 0..num_actions * num_states {
        observation.extend(random_row(&mut rng, num_observations, sparsity));
    }
    let reward: Vec<f64> = (0..num_states * num_actions)
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    Ok(PomdpModel::new(
        num_states,
        num_actions,
        num_observations,
        transition,
        observation,
        reward,
        DEFAULT_DISCOUNT,
    )?)
}

// ---------------------------------------------------------------------------
// near-discernible grid
// ---------------------------------------------------------------------------

/// Toroidal rows×cols grid. Moves (0.8 intended / 0.1 stay / 0.1 two cells,
/// wrapping), `declare`, and `stay` yield only `null`; `look` keeps the
/// state and reveals the cell with probability 0.9 (`null` otherwise), so
/// its cell observations pin the state exactly. `declare` pays +10 at the
/// goal cell (chosen from the seed) and −10 elsewhere, then teleports
/// uniformly; `look` costs 0.5. The free `stay` self-loop strictly
/// dominates `look` state-wise (same dynamics, no cost, no information), so
/// a belief-weighted fully-observable baseline never looks, while a
/// belief-space solver still profits from the information.
pub fn near_discernible_grid(seed: u64, rows: usize, cols: usize) -> Result<PomdpModel, GenError> {
    if rows == 0 || cols == 0 || rows * cols < 3 {
        return Err(GenError::InvalidParams(
            "grid needs at least 3 cells".into(),
        ));
    }
    let n = rows * cols;
    let na = 7; // e, s, w, n, look, declare, stay
    let nz = n + 1;
    let null = n;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let goal = rng.gen_range(0..n);

    let shift = |cell: usize, dir: usize| -> usize {
        let (r, c) = (cell / cols, cell % cols);
        let (r2, c2) = match dir {
            0 => (r, (c + 1) % cols),            // e
            1 => ((r + 1) % rows, c),            // s
            2 => (r, (c + cols - 1) % cols),     // w
            _ => ((r + rows - 1) % rows, c),     // n
        };
        r2 * cols + c2
    };

    let mut transition = vec![0.0; n * na * n];
    for s in 0..n {
        for dir in 0..4 {
            let step1 = shift(s, dir);
            let step2 = shift(step1, dir);
            for (dest, p) in [(step1, 0.8), (s, 0.1), (step2, 0.1)] {
                transition[(s * na + dir) * n + dest] += p;
            }
        }
        transition[(s * na + 4) * n + s] = 1.0; // look
        for dest in 0..n {
            transition[(s * na + 5) * n + dest] = 1.0 / n as f64; // declare teleports
        }
        transition[(s * na + 6) * n + s] = 1.0; // stay
    }

    let mut observation = vec![0.0; na * n * nz];
    for a in 0..na {
        for s2 in 0..n {
            let row = &mut observation[(a * n + s2) * nz..(a * n + s2) * nz + nz];
            if a == 4 {
                row[s2] = 0.9;
                row[null] = 0.1;
            } else {
                row[null] = 1.0;
            }
        }
    }

    let mut reward = vec![0.0; n * na];
    for s in 0..n {
        reward[s * na + 4] = -0.5;
        reward[s * na + 5] = if s == goal { 10.0 } else { -10.0 };
    }

    let mut m = PomdpModel::new(n, na, nz, transition, observation, reward, DEFAULT_DISCOUNT)?;
    m.state_names = (0..n)
        .map(|s| format!("c{}-{}", s / cols, s % cols))
        .collect();
    m.action_names = DIR_NAMES
        .iter()
        .map(|d| format!("move-{d}"))
        .chain([
            "look".to_string(),
            "declare".to_string(),
            "stay".to_string(),
        ])
        .collect();
    m.observation_names = (0..n)
        .map(|s| format!("see-c{}-{}", s / cols, s % cols))
        .chain(["null".to_string()])
        .collect();
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maze1_shape_and_observations() {
        let m = maze1();
        assert_eq!(m.num_states(), 10);
        assert_eq!(m.num_actions(), 5);
        assert_eq!(m.num_observations(), 6);
        // Strings follow the canonical table.
        let world = maze_world();
        let strings = maze_strings(&world);
        let expect = [
            "owww", "owow", "owoo", "owoo", "owow", "wwow", "wowo", "wowo", "woww", "woww",
        ];
        assert_eq!(strings, expect);
        // owow is seen exactly at locations 2 and 5 (indices 1, 4).
        let z = m.observation_names.iter().position(|o| o == "owow").unwrap();
        let sup = m.observation_support(0, z);
        assert_eq!(sup.states, vec![1, 4]);
        // Every support has at most two states.
        let info = m.informativeness_report();
        assert!(info.max_size <= 2);
    }

    #[test]
    fn maze1_move_blocking() {
        let m = maze1();
        // From location 1 (index 0), moving west is fully blocked.
        assert!((m.trans(0, 2, 0) - 1.0).abs() < 1e-12);
        // From location 1 moving east: 0.8 to loc2, 0.1 stay, 0.1 overshoot to loc3.
        assert!((m.trans(0, 0, 1) - 0.8).abs() < 1e-12);
        assert!((m.trans(0, 0, 0) - 0.1).abs() < 1e-12);
        assert!((m.trans(0, 0, 2) - 0.1).abs() < 1e-12);
        // Towers are walled off from each other: from 7 (index 6), east stays.
        assert!((m.trans(6, 0, 6) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn maze2_stay_null_invertible() {
        let m = maze2();
        assert_eq!(m.num_actions(), 6);
        assert_eq!(m.num_observations(), 7);
        let null = m.observation_names.iter().position(|o| o == "null").unwrap();
        let p = m.transformational_matrix(5, null);
        assert!(!p.is_degenerate());
        // And the matrix is 0.9 I.
        for i in 0..10 {
            assert!((p.entry(i, i) - 0.9).abs() < 1e-12);
        }
    }

    #[test]
    fn elevator_structure() {
        let m = elevator(3, 4).unwrap();
        assert_eq!(m.num_states(), 96);
        assert_eq!(m.num_observations(), 32);
        let info = m.informativeness_report();
        assert!(info.entries.iter().all(|e| e.states.len() == 3));
        assert!(m.observation_action_independent());
        // Reduced instance also validates.
        let small = elevator(2, 1).unwrap();
        assert_eq!(small.num_states(), 8);
        assert_eq!(small.num_observations(), 4);
    }

    #[test]
    fn elevator_stay_fulfills() {
        let m = elevator(3, 4).unwrap();
        // At floor 0 with pick-up floor0 + drop-off floor0 set, `stay`
        // clears both and sets drop-off floor1 (the boarding passenger).
        let s = elevator_state_index(3, 4, 0, 0b0101, 0);
        let expect_requests = 0b1000;
        let mut mass = 0.0;
        for p2 in 0..3 {
            // Arrivals may re-set pick-up bits, but drop-off bits are exact.
            for r2 in 0..16 {
                if r2 & 0b1100 == expect_requests {
                    mass += m.trans(s, 2, elevator_state_index(3, 4, p2, r2, 0));
                }
            }
        }
        assert!((mass - 1.0).abs() < 1e-9);
    }

    #[test]
    fn office_structure() {
        let m = office();
        assert_eq!(m.num_states(), 35);
        assert_eq!(m.num_actions(), 6);
        assert_eq!(m.num_observations(), 23);
        let world = office_world();
        let strings = office_strings(&world);
        assert_eq!(distinct_strings(&strings).len(), 22);
        // Goal room string is "woww" and beep there pays 50 then terminates.
        assert_eq!(strings[OFFICE_GOAL], "woww");
        assert!((m.reward(OFFICE_GOAL, 5) - 50.0).abs() < 1e-12);
        assert!((m.trans(OFFICE_GOAL, 5, OFFICE_TERMINAL) - 1.0).abs() < 1e-12);
        // Look rows are proper distributions with ideal mass >= 0.90.
        for s in 0..34 {
            let ideal = m
                .observation_names
                .iter()
                .position(|o| *o == strings[s])
                .unwrap();
            assert!(m.obs(4, s, ideal) >= 0.90 - 1e-12);
        }
    }

    #[test]
    fn random_model_deterministic_and_valid() {
        let a = random_model(7, 4, 3, 2, 0.3).unwrap();
        let b = random_model(7, 4, 3, 2, 0.3).unwrap();
        assert_eq!(a, b);
        let c = random_model(8, 4, 3, 2, 0.3).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn grid_structure() {
        let m = near_discernible_grid(11, 3, 3).unwrap();
        assert_eq!(m.num_states(), 9);
        assert_eq!(m.num_observations(), 10);
        // Look pins the cell: each cell observation has a singleton support.
        for z in 0..9 {
            assert_eq!(m.observation_support(4, z).states.len(), 1);
        }
        // Moves are uninformative.
        for a in 0..4 {
            assert_eq!(m.observation_support(a, 9).states.len(), 9);
            for z in 0..9 {
                assert!(m.observation_support(a, z).states.is_empty());
            }
        }
        let again = near_discernible_grid(11, 3, 3).unwrap();
        assert_eq!(m, again);
    }
}
