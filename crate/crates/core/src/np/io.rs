//! Plain-text format: one row per line, whitespace-separated decimals.
//! Blank lines and `#` comments are ignored.

use std::path::Path;

use super::{DiscreteChannel, DiscreteDist};
use crate::error::{Error, Result};

/// Parse rows of numbers, keeping the source line number of each row.
pub fn parse_rows(text: &str) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| Error::Parse { line: i + 1, msg: format!("not a number: {tok:?}") })
                    .and_then(|v| {
                        if v.is_finite() {
                            Ok(v)
                        } else {
                            Err(Error::Parse { line: i + 1, msg: format!("non-finite value {tok:?}") })
                        }
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((i + 1, row));
    }
    Ok(rows)
}

pub fn parse_dist(text: &str) -> Result<DiscreteDist> {
    let rows = parse_rows(text)?;
    match rows.as_slice() {
        [(line, row)] => DiscreteDist::new(row.clone()).map_err(|e| Error::Parse { line: *line, msg: e.to_string() }),
        [] => Err(Error::Parse { line: 0, msg: "no data".into() }),
        [_, (line, _), ..] => Err(Error::Parse { line: *line, msg: "a distribution is a single row".into() }),
    }
}

pub fn parse_channel(text: &str) -> Result<DiscreteChannel> {
    let rows = parse_rows(text)?;
    if rows.is_empty() {
        return Err(Error::Parse { line: 0, msg: "no data".into() });
    }
    let width = rows[0].1.len();
    for (line, r) in &rows {
        if r.len() != width {
            return Err(Error::Parse { line: *line, msg: format!("expected {width} entries, found {}", r.len()) });
        }
        DiscreteDist::new(r.clone()).map_err(|e| Error::Parse { line: *line, msg: e.to_string() })?;
    }
    DiscreteChannel::new(rows.into_iter().map(|(_, r)| r).collect())
}

pub fn load_dist(path: impl AsRef<Path>) -> Result<DiscreteDist> {
    parse_dist(&std::fs::read_to_string(path)?)
}

pub fn load_channel(path: impl AsRef<Path>) -> Result<DiscreteChannel> {
    parse_channel(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_channel_with_comments() {
        let ch = parse_channel("# bsc\n0.9 0.1\n\n0.1 0.9  # second row\n").unwrap();
        assert_eq!((ch.n_inputs(), ch.n_outputs()), (2, 2));
    }

    #[test]
    fn reports_offending_line() {
        match parse_channel("0.5 0.5\n0.5 0.6\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse_dist("0.5 x") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
        assert!(parse_dist("0.5 0.5\n0.5 0.5").is_err());
    }
}
