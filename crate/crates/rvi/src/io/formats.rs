//! Line-oriented persistence formats: alpha-vector set files, run-stats CSV
//! rows, and action-classification files.

use crate::geometry::{AlphaVector, VectorSet};
use crate::model::History;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T, FormatError> {
    Err(FormatError::Malformed {
        line,
        msg: msg.into(),
    })
}

/// Serialize a vector set: a `dim=<n> region=<tag>` header, then per vector
/// one metadata line (`action=<i>` plus optional `support=` / `history=`)
/// and one line of values at 17 significant digits, with blank lines
/// between vectors. The observation map of DP-built vectors is transient
/// and not persisted.
pub fn write_vector_set(set: &VectorSet) -> String {
    let mut out = String::new();
    let region = if set.region.is_empty() {
        "space".to_string()
    } else {
        set.region.replace(' ', "_")
    };
    out.push_str(&format!("dim={} region={}\n", set.dim, region));
    for v in &set.vectors {
        out.push('\n');
        out.push_str(&format!("action={}", v.action));
        if let Some(sup) = &v.support {
            let list: Vec<String> = sup.iter().map(|s| s.to_string()).collect();
            out.push_str(&format!(" support={}", list.join(",")));
        }
        if let Some(h) = &v.history {
            out.push_str(&format!(" history={h}"));
        }
        out.push('\n');
        let vals: Vec<String> = v.values.iter().map(|x| format!("{x:.16e}")).collect();
        out.push_str(&vals.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_vector_set(text: &str) -> Result<VectorSet, FormatError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = match lines.next() {
        Some(x) => x,
        None => return err(1, "empty file"),
    };
    let mut dim: Option<usize> = None;
    let mut region: Option<String> = None;
    for field in header.split_whitespace() {
        match field.split_once('=') {
            Some(("dim", v)) => {
                dim = Some(v.parse().map_err(|_| FormatError::Malformed {
                    line: hline,
                    msg: format!("bad dim `{v}`"),
                })?)
            }
            Some(("region", v)) => region = Some(v.to_string()),
            _ => return err(hline, format!("unexpected header field `{field}`")),
        }
    }
    let dim = match dim {
        Some(d) => d,
        None => return err(hline, "missing dim"),
    };
    let region = region.unwrap_or_else(|| "space".to_string());

    let mut vectors = Vec::new();
    while let Some((mline, meta)) = lines.next() {
        let mut action: Option<usize> = None;
        let mut support: Option<Vec<usize>> = None;
        let mut history: Option<History> = None;
        for field in meta.split_whitespace() {
            match field.split_once('=') {
                Some(("action", v)) => {
                    action = Some(v.parse().map_err(|_| FormatError::Malformed {
                        line: mline,
                        msg: format!("bad action `{v}`"),
                    })?)
                }
                Some(("support", v)) => {
                    let parsed: Result<Vec<usize>, _> =
                        v.split(',').map(|x| x.parse::<usize>()).collect();
                    support = Some(parsed.map_err(|_| FormatError::Malformed {
                        line: mline,
                        msg: format!("bad support list `{v}`"),
                    })?);
                }
                Some(("history", v)) => {
                    let mut pairs = Vec::new();
                    for part in v.split(',') {
                        let (a, z) = match part.split_once(':') {
                            Some(x) => x,
                            None => return err(mline, format!("bad history pair `{part}`")),
                        };
                        match (a.parse::<usize>(), z.parse::<usize>()) {
                            (Ok(a), Ok(z)) => pairs.push((a, z)),
                            _ => return err(mline, format!("bad history pair `{part}`")),
                        }
                    }
                    history = Some(History::new(pairs));
                }
                _ => return err(mline, format!("unexpected field `{field}`")),
            }
        }
        let action = match action {
            Some(a) => a,
            None => return err(mline, "missing action"),
        };
        let (vline, vals_line) = match lines.next() {
            Some(x) => x,
            None => return err(mline, "vector metadata without a value line"),
        };
        let values: Result<Vec<f64>, _> = vals_line
            .split_whitespace()
            .map(|x| x.parse::<f64>())
            .collect();
        let values = values.map_err(|_| FormatError::Malformed {
            line: vline,
            msg: "unparseable value".into(),
        })?;
        if values.len() != dim {
            return err(
                vline,
                format!("expected {dim} values, found {}", values.len()),
            );
        }
        if let Some(sup) = &support {
            if sup.len() != dim {
                return err(mline, "support length differs from dim");
            }
        }
        let mut v = AlphaVector::new(values, action);
        v.support = support;
        v.history = history;
        vectors.push(v);
    }
    VectorSet::new(vectors, dim, region).map_err(|e| FormatError::Malformed {
        line: hline,
        msg: e.to_string(),
    })
}

/// Header of the per-iteration run-stats CSV.
pub const STATS_CSV_HEADER: &str = "iteration,region,enumerated,kept,lp_count,residual,seconds";

#[derive(Debug, Clone)]
pub struct StatsRow {
    pub iteration: usize,
    pub region: String,
    pub enumerated: usize,
    pub kept: usize,
    pub lp_count: usize,
    pub residual: f64,
    pub seconds: f64,
}

pub fn stats_csv(rows: &[StatsRow]) -> String {
    let mut out = String::from(STATS_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.iteration, r.region, r.enumerated, r.kept, r.lp_count, r.residual, r.seconds
        ));
    }
    out
}

/// Serialize an action classification: one `name rich|poor` line per action.
pub fn write_classification(action_names: &[String], rich: &[bool]) -> String {
    action_names
        .iter()
        .zip(rich)
        .map(|(n, &r)| format!("{n} {}\n", if r { "rich" } else { "poor" }))
        .collect()
}

/// Parse a classification file into a per-action rich flag, matching lines
/// to the model's action names (indices also accepted).
pub fn read_classification(
    text: &str,
    action_names: &[String],
) -> Result<Vec<bool>, FormatError> {
    let mut rich = vec![None; action_names.len()];
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, class) = match line.rsplit_once(char::is_whitespace) {
            Some(x) => x,
            None => return err(i + 1, format!("expected `<action> rich|poor`, found `{line}`")),
        };
        let name = name.trim();
        let idx = action_names
            .iter()
            .position(|n| n == name)
            .or_else(|| name.parse::<usize>().ok().filter(|&k| k < action_names.len()));
        let idx = match idx {
            Some(k) => k,
            None => return err(i + 1, format!("unknown action `{name}`")),
        };
        let flag = match class.trim() {
            "rich" => true,
            "poor" => false,
            other => return err(i + 1, format!("expected rich|poor, found `{other}`")),
        };
        rich[idx] = Some(flag);
    }
    rich.iter()
        .enumerate()
        .map(|(k, v)| match v {
            Some(f) => Ok(*f),
            None => err(0, format!("action `{}` not classified", action_names[k])),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn vector_set_round_trip_random() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for case in 0..10 {
            let dim = rng.gen_range(1..5);
            let n = rng.gen_range(1..6);
            let vectors: Vec<AlphaVector> = (0..n)
                .map(|_| {
                    let vals: Vec<f64> = (0..dim).map(|_| rng.gen_range(-10.0..10.0)).collect();
                    let mut v = AlphaVector::new(vals, rng.gen_range(0..4));
                    if case % 3 == 0 {
                        v.history = Some(History::new(vec![(1, 0), (0, 2)]));
                    }
                    v
                })
                .collect();
            let set = VectorSet::new(vectors, dim, "space").unwrap();
            let text = write_vector_set(&set);
            let back = read_vector_set(&text).unwrap();
            assert_eq!(back.dim, set.dim);
            assert_eq!(back.region, set.region);
            assert_eq!(back.vectors.len(), set.vectors.len());
            for (a, b) in set.vectors.iter().zip(&back.vectors) {
                assert_eq!(a.values, b.values, "values must survive exactly");
                assert_eq!(a.action, b.action);
                assert_eq!(a.history, b.history);
            }
        }
    }

    #[test]
    fn low_dimension_set_preserves_support() {
        let mut v = AlphaVector::new(vec![1.5, -2.5], 1);
        v.support = Some(vec![3, 7]);
        let set = VectorSet::new(vec![v], 2, "support:3,7").unwrap();
        let back = read_vector_set(&write_vector_set(&set)).unwrap();
        assert_eq!(back.vectors[0].support, Some(vec![3, 7]));
        assert_eq!(back.region, "support:3,7");
    }

    #[test]
    fn malformed_files_report_line() {
        match read_vector_set("dim=2 region=space\n\naction=0\n1.0\n") {
            Err(FormatError::Malformed { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected malformed error, got {other:?}"),
        }
        assert!(read_vector_set("").is_err());
        match read_vector_set("dim=x region=space\n") {
            Err(FormatError::Malformed { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected malformed error, got {other:?}"),
        }
    }

    #[test]
    fn stats_csv_shape() {
        let rows = vec![StatsRow {
            iteration: 1,
            region: "space".into(),
            enumerated: 10,
            kept: 3,
            lp_count: 12,
            residual: 0.5,
            seconds: 0.01,
        }];
        let text = stats_csv(&rows);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), STATS_CSV_HEADER);
        assert_eq!(lines.next().unwrap(), "1,space,10,3,12,0.5,0.01");
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn classification_round_trip() {
        let names: Vec<String> = ["move", "look"].iter().map(|s| s.to_string()).collect();
        let text = write_classification(&names, &[false, true]);
        assert_eq!(text, "move poor\nlook rich\n");
        let back = read_classification(&text, &names).unwrap();
        assert_eq!(back, vec![false, true]);
        assert!(read_classification("move poor\n", &names).is_err());
        assert!(read_classification("move poor\nlook odd\n", &names).is_err());
    }
}
