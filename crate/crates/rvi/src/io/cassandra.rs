//! Parser and serializer for the standard POMDP text format: a preamble of
//! `discount` / `values` / `states` / `actions` / `observations` directives
//! followed by `T:` / `O:` / `R:` entries in scalar, row, or matrix form,
//! with `*` wildcards and the `uniform` / `identity` keywords. `#` starts a
//! comment.

use crate::model::{ModelError, PomdpModel};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}, col {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("model validation failed: {0}")]
    Model(#[from] ModelError),
    #[error("non-stochastic rows: {0}")]
    Stochasticity(String),
}

/// Parse result: the model plus any warnings (currently only about reward
/// entries that had to be marginalized over next states or observations).
#[derive(Debug)]
pub struct ParseOutput {
    pub model: PomdpModel,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
struct Token {
    text: String,
    line: usize,
    col: usize,
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = match line.find('#') {
            Some(i) => &line[..i],
            None => line,
        };
        let mut col = 0;
        for raw in line.split_whitespace() {
            col = line[col..].find(raw).map(|i| i + col).unwrap_or(col);
            // Split a trailing/leading colon glued to a word ("T:" / ":s1").
            let mut rest = raw;
            let mut offset = 0;
            while !rest.is_empty() {
                if let Some(i) = rest.find(':') {
                    if i > 0 {
                        tokens.push(Token {
                            text: rest[..i].to_string(),
                            line: ln + 1,
                            col: col + offset + 1,
                        });
                    }
                    tokens.push(Token {
                        text: ":".to_string(),
                        line: ln + 1,
                        col: col + offset + i + 1,
                    });
                    offset += i + 1;
                    rest = &rest[i + 1..];
                } else {
                    tokens.push(Token {
                        text: rest.to_string(),
                        line: ln + 1,
                        col: col + offset + 1,
                    });
                    break;
                }
            }
            col += raw.len();
        }
    }
    tokens
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

/// A state/action/observation specifier: one index, or all of them.
enum Spec {
    One(usize),
    All,
}

impl Spec {
    fn indices(&self, n: usize) -> Vec<usize> {
        match self {
            Spec::One(i) => vec![*i],
            Spec::All => (0..n).collect(),
        }
    }
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self
            .tokens
            .get(self.pos.min(self.tokens.len().saturating_sub(1)))
            .map(|t| (t.line, t.col))
            .unwrap_or((0, 0));
        Err(ParseError::Syntax {
            line,
            col,
            msg: msg.into(),
        })
    }

    fn expect(&mut self, text: &str) -> Result<(), ParseError> {
        match self.next() {
            Some(t) if t.text == text => Ok(()),
            Some(t) => Err(ParseError::Syntax {
                line: t.line,
                col: t.col,
                msg: format!("expected `{text}`, found `{}`", t.text),
            }),
            None => self.err(format!("expected `{text}`, found end of input")),
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        match self.next() {
            Some(t) => t.text.parse::<f64>().map_err(|_| ParseError::Syntax {
                line: t.line,
                col: t.col,
                msg: format!("expected a number, found `{}`", t.text),
            }),
            None => self.err("expected a number, found end of input"),
        }
    }

    fn spec(&mut self, names: &[String], what: &str) -> Result<Spec, ParseError> {
        match self.next() {
            Some(t) if t.text == "*" => Ok(Spec::All),
            Some(t) => {
                if let Some(i) = names.iter().position(|n| *n == t.text) {
                    return Ok(Spec::One(i));
                }
                if let Ok(i) = t.text.parse::<usize>() {
                    if i < names.len() {
                        return Ok(Spec::One(i));
                    }
                }
                Err(ParseError::Syntax {
                    line: t.line,
                    col: t.col,
                    msg: format!("unknown {what} `{}`", t.text),
                })
            }
            None => self.err(format!("expected a {what}, found end of input")),
        }
    }

    /// `<count>` or a list of names, ending at the next directive keyword.
    fn name_list(&mut self, prefix: char) -> Result<Vec<String>, ParseError> {
        const DIRECTIVES: [&str; 8] = [
            "discount", "values", "states", "actions", "observations", "T", "O", "R",
        ];
        let first = match self.next() {
            Some(t) => t,
            None => return self.err("expected a count or name list"),
        };
        if let Ok(n) = first.text.parse::<usize>() {
            if n == 0 {
                return Err(ParseError::Syntax {
                    line: first.line,
                    col: first.col,
                    msg: "count must be positive".into(),
                });
            }
            return Ok((0..n).map(|i| format!("{prefix}{i}")).collect());
        }
        let mut names = vec![first.text];
        while let Some(t) = self.peek() {
            let is_directive = DIRECTIVES.contains(&t.text.as_str())
                && self
                    .tokens
                    .get(self.pos + 1)
                    .map(|n| n.text == ":")
                    .unwrap_or(false);
            if is_directive {
                break;
            }
            names.push(self.next().unwrap().text);
        }
        Ok(names)
    }
}

/// Parse a model from the standard POMDP text format. `values: cost` files
/// have their rewards negated so the caller always maximizes. Reward entries
/// that depend on the next state or the observation are marginalized to
/// r(s, a) with the model's own probabilities, and a warning is recorded.
pub fn parse_pomdp(text: &str) -> Result<ParseOutput, ParseError> {
    let mut p = Parser {
        tokens: tokenize(text),
        pos: 0,
    };
    let mut discount: Option<f64> = None;
    let mut cost = false;
    let mut states: Option<Vec<String>> = None;
    let mut actions: Option<Vec<String>> = None;
    let mut observations: Option<Vec<String>> = None;
    // Deferred (T/O/R) statements are applied once the spaces are known, so
    // a directive order other than the usual one still parses.
    let mut transition: Option<Vec<f64>> = None;
    let mut observation: Option<Vec<f64>> = None;
    let mut reward_stmts: Vec<RewardStmt> = Vec::new();
    let mut reward_dependent = false;

    while let Some(tok) = p.peek() {
        let word = tok.text.clone();
        match word.as_str() {
            "discount" => {
                p.next();
                p.expect(":")?;
                discount = Some(p.number()?);
            }
            "values" => {
                p.next();
                p.expect(":")?;
                match p.next() {
                    Some(t) if t.text == "reward" => cost = false,
                    Some(t) if t.text == "cost" => cost = true,
                    Some(t) => {
                        return Err(ParseError::Syntax {
                            line: t.line,
                            col: t.col,
                            msg: format!("expected `reward` or `cost`, found `{}`", t.text),
                        })
                    }
                    None => return p.err("expected `reward` or `cost`"),
                }
            }
            "states" => {
                p.next();
                p.expect(":")?;
                states = Some(p.name_list('s')?);
            }
            "actions" => {
                p.next();
                p.expect(":")?;
                actions = Some(p.name_list('a')?);
            }
            "observations" => {
                p.next();
                p.expect(":")?;
                observations = Some(p.name_list('z')?);
            }
            "T" | "O" | "R" => {
                let (s_names, a_names, z_names) = match (&states, &actions, &observations) {
                    (Some(s), Some(a), Some(z)) => (s.clone(), a.clone(), z.clone()),
                    _ => return p.err("T/O/R entry before states/actions/observations"),
                };
                let ns = s_names.len();
                let na = a_names.len();
                let nz = z_names.len();
                p.next();
                p.expect(":")?;
                match word.as_str() {
                    "T" => {
                        let t = transition.get_or_insert_with(|| vec![0.0; ns * na * ns]);
                        parse_t(&mut p, t, &s_names, &a_names)?;
                    }
                    "O" => {
                        let o = observation.get_or_insert_with(|| vec![0.0; na * ns * nz]);
                        parse_o(&mut p, o, &s_names, &a_names, &z_names)?;
                    }
                    _ => {
                        let _ = nz;
                        parse_r(
                            &mut p,
                            &mut reward_stmts,
                            &s_names,
                            &a_names,
                            &z_names,
                            &mut reward_dependent,
                        )?;
                    }
                }
            }
            _ => return p.err(format!("unexpected token `{word}`")),
        }
    }

    let discount = match discount {
        Some(d) => d,
        None => {
            return Err(ParseError::Syntax {
                line: 0,
                col: 0,
                msg: "missing `discount` directive".into(),
            })
        }
    };
    let (states, actions, observations) = match (states, actions, observations) {
        (Some(s), Some(a), Some(z)) => (s, a, z),
        _ => {
            return Err(ParseError::Syntax {
                line: 0,
                col: 0,
                msg: "missing states/actions/observations directive".into(),
            })
        }
    };
    let (ns, na, nz) = (states.len(), actions.len(), observations.len());
    let transition = transition.unwrap_or_else(|| vec![0.0; ns * na * ns]);
    let observation = observation.unwrap_or_else(|| vec![0.0; na * ns * nz]);

    // Reject non-stochastic rows with a listing before full validation.
    let mut bad_rows = Vec::new();
    for s in 0..ns {
        for a in 0..na {
            let sum: f64 = (0..ns).map(|s2| transition[(s * na + a) * ns + s2]).sum();
            if (sum - 1.0).abs() > 1e-6 {
                bad_rows.push(format!("T[{}][{}] sums to {sum}", states[s], actions[a]));
            }
        }
    }
    for a in 0..na {
        for s2 in 0..ns {
            let sum: f64 = (0..nz).map(|z| observation[(a * ns + s2) * nz + z]).sum();
            if (sum - 1.0).abs() > 1e-6 {
                bad_rows.push(format!("O[{}][{}] sums to {sum}", actions[a], states[s2]));
            }
        }
    }
    if !bad_rows.is_empty() {
        return Err(ParseError::Stochasticity(bad_rows.join("; ")));
    }

    // Rewards: exact r(s, a) writes when no entry depends on the next state
    // or the observation; otherwise fill the 4-index table and marginalize
    // with the model's own probabilities (recording a warning).
    let mut warnings = Vec::new();
    let sign = if cost { -1.0 } else { 1.0 };
    let mut reward = vec![0.0; ns * na];
    if !reward_dependent {
        for stmt in &reward_stmts {
            for ai in stmt.a.indices(na) {
                for si in stmt.s.indices(ns) {
                    reward[si * na + ai] = sign * stmt.v;
                }
            }
        }
    } else {
        warnings.push(
            "reward entries depend on next state and/or observation; marginalized to r(s,a) \
             using the model's transition/observation probabilities"
                .to_string(),
        );
        let mut reward4 = vec![0.0; na * ns * ns * nz];
        for stmt in &reward_stmts {
            for ai in stmt.a.indices(na) {
                for si in stmt.s.indices(ns) {
                    for s2i in stmt.s2.indices(ns) {
                        for zi in stmt.z.indices(nz) {
                            reward4[((ai * ns + si) * ns + s2i) * nz + zi] = stmt.v;
                        }
                    }
                }
            }
        }
        for s in 0..ns {
            for a in 0..na {
                let mut total = 0.0;
                for s2 in 0..ns {
                    let pt = transition[(s * na + a) * ns + s2];
                    if pt == 0.0 {
                        continue;
                    }
                    for z in 0..nz {
                        let po = observation[(a * ns + s2) * nz + z];
                        if po == 0.0 {
                            continue;
                        }
                        total += pt * po * reward4[((a * ns + s) * ns + s2) * nz + z];
                    }
                }
                reward[s * na + a] = sign * total;
            }
        }
    }

    let mut model = PomdpModel::new(ns, na, nz, transition, observation, reward, discount)?;
    model.state_names = states;
    model.action_names = actions;
    model.observation_names = observations;
    Ok(ParseOutput { model, warnings })
}

fn parse_t(
    p: &mut Parser,
    t: &mut [f64],
    s_names: &[String],
    a_names: &[String],
) -> Result<(), ParseError> {
    let ns = s_names.len();
    let na = a_names.len();
    let a = p.spec(a_names, "action")?;
    if p.peek().map(|t| t.text == ":").unwrap_or(false) {
        p.next();
        let s = p.spec(s_names, "state")?;
        if p.peek().map(|t| t.text == ":").unwrap_or(false) {
            // T: a : s : s' p
            p.next();
            let s2 = p.spec(s_names, "state")?;
            let v = p.number()?;
            for ai in a.indices(na) {
                for si in s.indices(ns) {
                    for s2i in s2.indices(ns) {
                        t[(si * na + ai) * ns + s2i] = v;
                    }
                }
            }
        } else {
            // T: a : s   + row of |S| probabilities (or `uniform`)
            let row = parse_row(p, ns)?;
            for ai in a.indices(na) {
                for si in s.indices(ns) {
                    for (s2i, &v) in row.iter().enumerate() {
                        t[(si * na + ai) * ns + s2i] = v;
                    }
                }
            }
        }
    } else {
        // T: a  + identity / uniform / |S|×|S| matrix
        let matrix = parse_matrix(p, ns, ns, true)?;
        for ai in a.indices(na) {
            for si in 0..ns {
                for s2i in 0..ns {
                    t[(si * na + ai) * ns + s2i] = matrix[si * ns + s2i];
                }
            }
        }
    }
    Ok(())
}

fn parse_o(
    p: &mut Parser,
    o: &mut [f64],
    s_names: &[String],
    a_names: &[String],
    z_names: &[String],
) -> Result<(), ParseError> {
    let ns = s_names.len();
    let na = a_names.len();
    let nz = z_names.len();
    let a = p.spec(a_names, "action")?;
    if p.peek().map(|t| t.text == ":").unwrap_or(false) {
        p.next();
        let s2 = p.spec(s_names, "state")?;
        if p.peek().map(|t| t.text == ":").unwrap_or(false) {
            // O: a : s' : z p
            p.next();
            let z = p.spec(z_names, "observation")?;
            let v = p.number()?;
            for ai in a.indices(na) {
                for s2i in s2.indices(ns) {
                    for zi in z.indices(nz) {
                        o[(ai * ns + s2i) * nz + zi] = v;
                    }
                }
            }
        } else {
            let row = parse_row(p, nz)?;
            for ai in a.indices(na) {
                for s2i in s2.indices(ns) {
                    for (zi, &v) in row.iter().enumerate() {
                        o[(ai * ns + s2i) * nz + zi] = v;
                    }
                }
            }
        }
    } else {
        let matrix = parse_matrix(p, ns, nz, false)?;
        for ai in a.indices(na) {
            for s2i in 0..ns {
                for zi in 0..nz {
                    o[(ai * ns + s2i) * nz + zi] = matrix[s2i * nz + zi];
                }
            }
        }
    }
    Ok(())
}

struct RewardStmt {
    a: Spec,
    s: Spec,
    s2: Spec,
    z: Spec,
    v: f64,
}

fn parse_r(
    p: &mut Parser,
    stmts: &mut Vec<RewardStmt>,
    s_names: &[String],
    a_names: &[String],
    z_names: &[String],
    dependent: &mut bool,
) -> Result<(), ParseError> {
    let a = p.spec(a_names, "action")?;
    p.expect(":")?;
    let s = p.spec(s_names, "state")?;
    p.expect(":")?;
    let s2 = p.spec(s_names, "state")?;
    p.expect(":")?;
    let z = p.spec(z_names, "observation")?;
    let v = p.number()?;
    if matches!(s2, Spec::One(_)) || matches!(z, Spec::One(_)) {
        *dependent = true;
    }
    stmts.push(RewardStmt { a, s, s2, z, v });
    Ok(())
}

fn parse_row(p: &mut Parser, len: usize) -> Result<Vec<f64>, ParseError> {
    if p.peek().map(|t| t.text == "uniform").unwrap_or(false) {
        p.next();
        return Ok(vec![1.0 / len as f64; len]);
    }
    (0..len).map(|_| p.number()).collect()
}

fn parse_matrix(
    p: &mut Parser,
    rows: usize,
    cols: usize,
    allow_identity: bool,
) -> Result<Vec<f64>, ParseError> {
    match p.peek().map(|t| t.text.clone()) {
        Some(k) if k == "uniform" => {
            p.next();
            Ok(vec![1.0 / cols as f64; rows * cols])
        }
        Some(k) if k == "identity" && allow_identity => {
            p.next();
            let mut m = vec![0.0; rows * cols];
            for i in 0..rows.min(cols) {
                m[i * cols + i] = 1.0;
            }
            Ok(m)
        }
        _ => (0..rows * cols).map(|_| p.number()).collect(),
    }
}

/// Serialize a model to the same text format; `parse_pomdp` on the output
/// reproduces the model exactly (f64 values are printed in Rust's shortest
/// round-trip decimal form).
pub fn serialize_pomdp(model: &PomdpModel) -> String {
    let mut out = String::new();
    out.push_str(&format!("discount: {}\n", model.discount()));
    out.push_str("values: reward\n");
    out.push_str(&format!("states: {}\n", model.state_names.join(" ")));
    out.push_str(&format!("actions: {}\n", model.action_names.join(" ")));
    out.push_str(&format!(
        "observations: {}\n\n",
        model.observation_names.join(" ")
    ));
    for a in 0..model.num_actions() {
        for s in 0..model.num_states() {
            let row: Vec<String> = (0..model.num_states())
                .map(|s2| model.trans(s, a, s2).to_string())
                .collect();
            out.push_str(&format!(
                "T: {} : {} {}\n",
                model.action_names[a],
                model.state_names[s],
                row.join(" ")
            ));
        }
    }
    out.push('\n');
    for a in 0..model.num_actions() {
        for s2 in 0..model.num_states() {
            let row: Vec<String> = (0..model.num_observations())
                .map(|z| model.obs(a, s2, z).to_string())
                .collect();
            out.push_str(&format!(
                "O: {} : {} {}\n",
                model.action_names[a],
                model.state_names[s2],
                row.join(" ")
            ));
        }
    }
    out.push('\n');
    for a in 0..model.num_actions() {
        for s in 0..model.num_states() {
            let r = model.reward(s, a);
            if r != 0.0 {
                out.push_str(&format!(
                    "R: {} : {} : * : * {}\n",
                    model.action_names[a], model.state_names[s], r
                ));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::gen::{self, GeneratorParams};

    #[test]
    fn parse_minimal_model() {
        let text = "\
# tiny two-state chain
discount: 0.95
values: reward
states: left right
actions: go
observations: ping
T: go : left : right 1.0
T: go : right : right 1.0
O: go : * : ping 1.0
R: go : left : * : * 1.0
";
        let out = parse_pomdp(text).unwrap();
        let m = &out.model;
        assert_eq!(m.num_states(), 2);
        assert!((m.discount() - 0.95).abs() < 1e-15);
        assert!((m.trans(0, 0, 1) - 1.0).abs() < 1e-15);
        assert!((m.reward(0, 0) - 1.0).abs() < 1e-15);
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn identity_and_uniform_keywords() {
        let text = "\
discount: 0.9
values: reward
states: 3
actions: 2
observations: 2
T: 0 identity
T: 1 uniform
O: * uniform
";
        let m = parse_pomdp(text).unwrap().model;
        assert!((m.trans(1, 0, 1) - 1.0).abs() < 1e-15);
        assert!((m.trans(1, 0, 0)).abs() < 1e-15);
        assert!((m.trans(0, 1, 2) - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.obs(1, 2, 0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cost_values_negate() {
        let text = "\
discount: 0.5
values: cost
states: 1
actions: 1
observations: 1
T: 0 identity
O: 0 uniform
R: * : * : * : * 2.0
";
        let m = parse_pomdp(text).unwrap().model;
        assert!((m.reward(0, 0) + 2.0).abs() < 1e-15);
    }

    #[test]
    fn dependent_reward_marginalized_with_warning() {
        let text = "\
discount: 0.9
values: reward
states: 2
actions: 1
observations: 1
T: 0 : * uniform
O: 0 uniform
R: 0 : * : s1 : * 4.0
";
        let out = parse_pomdp(text).unwrap();
        assert_eq!(out.warnings.len(), 1);
        // Reward 4 on arriving at s1, arrival probability 0.5 -> r = 2.
        assert!((out.model.reward(0, 0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn syntax_error_has_location() {
        let text = "discount: 0.9\nvalues: reward\nstates: 2\nactions: 1\nobservations: 1\nT: 0 : bogus 1.0\n";
        match parse_pomdp(text) {
            Err(ParseError::Syntax { line, msg, .. }) => {
                assert_eq!(line, 6);
                assert!(msg.contains("bogus"));
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn non_stochastic_row_rejected() {
        let text = "\
discount: 0.9
values: reward
states: 2
actions: 1
observations: 1
T: 0 : s0 : s1 0.5
T: 0 : s1 identity
O: 0 uniform
";
        // Row for s0 sums to 0.5, and `T: 0 : s1 identity` is not valid
        // grammar here; write the row form instead.
        let text = text.replace("T: 0 : s1 identity", "T: 0 : s1 0.0 1.0");
        match parse_pomdp(&text) {
            Err(ParseError::Stochasticity(msg)) => assert!(msg.contains("T[s0]")),
            other => panic!("expected stochasticity error, got {other:?}"),
        }
    }

    #[test]
    fn example3_file_reproduces_transformational_matrix() {
        // Hand-written file for the three-state example: both observations
        // have probability 0.5 everywhere and the first action's rows are
        // (p_i, p_i, 1-2p_i) for p = (0.5, 0.4, 0.1).
        let text = "\
discount: 0.95
values: reward
states: s1 s2 s3
actions: a1 a2
observations: z1 z2
T: a1 : s1 0.5 0.5 0.0
T: a1 : s2 0.4 0.4 0.2
T: a1 : s3 0.1 0.1 0.8
T: a2 : s1 0.45 0.45 0.1
T: a2 : s2 0.3 0.3 0.4
T: a2 : s3 0.2 0.2 0.6
O: * uniform
";
        let m = parse_pomdp(text).unwrap().model;
        let p = m.transformational_matrix(0, 0);
        for s in 0..3 {
            assert!((p.entry(0, s) - p.entry(1, s)).abs() < 1e-15);
        }
        assert!((p.entry(0, 0) - 0.25).abs() < 1e-15);
        assert!((p.entry(2, 1) - 0.1).abs() < 1e-15);
        assert!(p.is_degenerate());
    }

    #[test]
    fn round_trip_generated_models() {
        for params in [
            GeneratorParams::Example3,
            GeneratorParams::Maze2,
            GeneratorParams::Random {
                seed: 3,
                num_states: 4,
                num_actions: 3,
                num_observations: 2,
                sparsity: 0.3,
            },
        ] {
            let m = gen::generate(&params).unwrap();
            let text = serialize_pomdp(&m);
            let back = parse_pomdp(&text).unwrap().model;
            assert_eq!(m, back, "round trip failed for {params:?}");
            // Serialization is also textually stable.
            assert_eq!(text, serialize_pomdp(&back));
        }
    }
}
