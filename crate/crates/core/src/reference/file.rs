//! Plain-text reference model files.
//!
//! ```text
//! # comments and blank lines are ignored
//! p 3
//! mean 0 0 0
//! covariance
//! 1 0 0
//! 0 1 0
//! 0 0 1
//! prob 0.95        # or: c2 7.814727903251178
//! ```
//!
//! `p` must appear before `covariance`, which is followed by exactly `p` rows.
//! Exactly one of `prob` or `c2` is required. Numbers are decimal literals and
//! are written back with the shortest round-trip representation.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{Level, ReferenceModel};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, SpdMatrix};

#[derive(Clone, Debug, PartialEq)]
pub struct ModelFile {
    pub mean: Vec<f64>,
    pub covariance: Matrix,
    pub level: Level,
}

impl ModelFile {
    pub fn model(&self) -> Result<ReferenceModel> {
        ReferenceModel::new(self.mean.clone(), self.covariance.clone(), self.level)
    }

    /// File form of a model, stating its level as `c2`.
    pub fn from_model(model: &ReferenceModel) -> Self {
        Self {
            mean: model.mean().to_vec(),
            covariance: model.covariance().matrix().clone(),
            level: Level::C2(model.level_c2()),
        }
    }
}

struct Cursor<'a> {
    path: &'a Path,
    lines: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
}

impl<'a> Cursor<'a> {
    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line,
            message: message.into(),
        }
    }
}

fn parse_numbers(c: &Cursor<'_>, line: usize, fields: &[&str]) -> Result<Vec<f64>> {
    fields
        .iter()
        .map(|f| {
            let v: f64 = f
                .parse()
                .map_err(|_| c.err(line, format!("not a decimal number: {f:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(c.err(line, format!("non-finite value: {f:?}")))
            }
        })
        .collect()
}

fn parse_scalar(c: &Cursor<'_>, line: usize, key: &str, rest: &[&str]) -> Result<f64> {
    if rest.len() != 1 {
        return Err(c.err(line, format!("`{key}` takes exactly one value")));
    }
    Ok(parse_numbers(c, line, rest)?[0])
}

/// Parses the text of a model file; `path` is used only in error messages.
pub fn parse_model(text: &str, path: impl AsRef<Path>) -> Result<ModelFile> {
    let path = path.as_ref();
    let iter: Box<dyn Iterator<Item = (usize, &str)>> = Box::new(
        text.lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty()),
    );
    let mut c = Cursor {
        path,
        lines: iter.peekable(),
    };

    let mut p: Option<usize> = None;
    let mut mean: Option<Vec<f64>> = None;
    let mut cov: Option<Matrix> = None;
    let mut level: Option<Level> = None;
    let mut last_line = 0;

    while let Some((line, content)) = c.lines.next() {
        last_line = line;
        let fields: Vec<&str> = content.split_whitespace().collect();
        let (key, rest) = (fields[0], &fields[1..]);
        match key {
            "p" => {
                if p.is_some() {
                    return Err(c.err(line, "duplicate `p`"));
                }
                if rest.len() != 1 {
                    return Err(c.err(line, "`p` takes exactly one value"));
                }
                let v: usize = rest[0]
                    .parse()
                    .map_err(|_| c.err(line, format!("`p` must be a count, got {:?}", rest[0])))?;
                if v < 2 {
                    return Err(c.err(line, "`p` must be at least 2"));
                }
                p = Some(v);
            }
            "mean" => {
                if mean.is_some() {
                    return Err(c.err(line, "duplicate `mean`"));
                }
                mean = Some(parse_numbers(&c, line, rest)?);
            }
            "covariance" => {
                if cov.is_some() {
                    return Err(c.err(line, "duplicate `covariance`"));
                }
                if !rest.is_empty() {
                    return Err(c.err(line, "`covariance` rows go on the following lines"));
                }
                let dim = p.ok_or_else(|| c.err(line, "`p` must be given before `covariance`"))?;
                let mut data = Vec::with_capacity(dim * dim);
                for r in 0..dim {
                    let (row_line, row) = c
                        .lines
                        .next()
                        .ok_or_else(|| c.err(line, format!("covariance has {r} rows, expected {dim}")))?;
                    last_line = row_line;
                    let fields: Vec<&str> = row.split_whitespace().collect();
                    if fields.len() != dim {
                        return Err(c.err(
                            row_line,
                            format!("covariance row has {} values, expected {dim}", fields.len()),
                        ));
                    }
                    data.extend(parse_numbers(&c, row_line, &fields)?);
                }
                cov = Some(Matrix::new(dim, dim, data)?);
            }
            "prob" | "c2" => {
                if level.is_some() {
                    return Err(c.err(line, "only one of `prob` or `c2` may be given"));
                }
                let v = parse_scalar(&c, line, key, rest)?;
                level = Some(if key == "prob" {
                    Level::Probability(v)
                } else {
                    Level::C2(v)
                });
            }
            other => return Err(c.err(line, format!("unknown key `{other}`"))),
        }
    }

    let end = last_line.max(1);
    let p = p.ok_or_else(|| c.err(end, "missing `p`"))?;
    let mean = mean.ok_or_else(|| c.err(end, "missing `mean`"))?;
    if mean.len() != p {
        return Err(c.err(end, format!("`mean` has {} values, expected {p}", mean.len())));
    }
    let covariance = cov.ok_or_else(|| c.err(end, "missing `covariance`"))?;
    let level = level.ok_or_else(|| c.err(end, "missing `prob` or `c2`"))?;
    // validate eagerly so bad files fail at load time
    SpdMatrix::new(covariance.clone())?;
    level.c2(p)?;
    Ok(ModelFile {
        mean,
        covariance,
        level,
    })
}

pub fn read_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(PathBuf::from(path), e))?;
    parse_model(&text, path)
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values
        .into_iter()
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn write_model(file: &ModelFile) -> String {
    let p = file.mean.len();
    let mut out = String::new();
    let _ = writeln!(out, "p {p}");
    let _ = writeln!(out, "mean {}", join(file.mean.iter().copied()));
    let _ = writeln!(out, "covariance");
    for r in file.covariance.row_iter() {
        let _ = writeln!(out, "{}", join(r.iter().copied()));
    }
    match file.level {
        Level::Probability(v) => {
            let _ = writeln!(out, "prob {v}");
        }
        Level::C2(v) => {
            let _ = writeln!(out, "c2 {v}");
        }
        Level::Sigma(z) => {
            let c2 = file.level.c2(p).unwrap_or(f64::NAN);
            let _ = writeln!(out, "# {z} sigma\nc2 {c2}");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SAMPLE: &str = "# reference\np 3\nmean 1 2.5 -3\ncovariance\n2 0.5 0\n0.5 1 0\n0 0 4   # diag\n\nprob 0.95\n";

    #[test]
    fn parses_sample() {
        let f = parse_model(SAMPLE, "ref.txt").unwrap();
        assert_eq!(f.mean, vec![1.0, 2.5, -3.0]);
        assert_eq!(f.covariance[(0, 1)], 0.5);
        assert_eq!(f.covariance[(2, 2)], 4.0);
        assert_eq!(f.level, Level::Probability(0.95));
        let m = f.model().unwrap();
        assert!((m.level_c2() - 7.814727903251178).abs() < 1e-9);
    }

    fn line_of(err: Error) -> usize {
        match err {
            Error::Parse { line, .. } => line,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        let ragged = "p 2\nmean 0 0\ncovariance\n1 0\n0\nc2 1\n";
        assert_eq!(line_of(parse_model(ragged, "x").unwrap_err()), 5);
        let bad_num = "p 2\nmean 0 zero\n";
        assert_eq!(line_of(parse_model(bad_num, "x").unwrap_err()), 2);
        let both = "p 2\nmean 0 0\ncovariance\n1 0\n0 1\nc2 1\nprob 0.5\n";
        assert_eq!(line_of(parse_model(both, "x").unwrap_err()), 7);
        let no_level = "p 2\nmean 0 0\ncovariance\n1 0\n0 1\n";
        assert!(matches!(parse_model(no_level, "x"), Err(Error::Parse { .. })));
        let cov_first = "covariance\n1 0\n0 1\n";
        assert_eq!(line_of(parse_model(cov_first, "x").unwrap_err()), 1);
        let unknown = "p 2\nsigma 3\n";
        assert_eq!(line_of(parse_model(unknown, "x").unwrap_err()), 2);
    }

    #[test]
    fn rejects_non_spd_covariance() {
        let text = "p 2\nmean 0 0\ncovariance\n1 2\n2 1\nc2 1\n";
        assert!(matches!(
            parse_model(text, "x"),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    proptest! {
        #[test]
        fn write_then_parse_is_bit_exact(
            mean in prop::collection::vec(-1e6f64..1e6, 3),
            diag in prop::collection::vec(0.01f64..1e3, 3),
            off in -0.009f64..0.009,
            c2 in 0.001f64..100.0,
        ) {
            let mut cov = Matrix::diag(&diag);
            cov[(0, 1)] = off;
            cov[(1, 0)] = off;
            let f = ModelFile { mean, covariance: cov, level: Level::C2(c2) };
            let back = parse_model(&write_model(&f), "mem").unwrap();
            prop_assert_eq!(back, f);
        }
    }
}
