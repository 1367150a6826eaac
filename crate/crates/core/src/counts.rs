//! Plain-text permutation counts.
//!
//! ```text
//! n=3
//! 1 2 3,40
//! 2 3 1,7
//! ```
//!
//! Images are 1-based. Repeated permutations merge by summing their counts;
//! blank lines are ignored.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fit::EmpiricalData;
use crate::perm::{Limits, Permutation, HARD_MAX_N};

pub fn parse_counts_str(text: &str) -> Result<EmpiricalData> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty file, expected header n=<integer>".into(),
    })?;
    let header_line = text.lines().position(|l| !l.trim().is_empty()).unwrap_or(0) + 1;
    let n: usize = header
        .trim()
        .strip_prefix("n=")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| Error::Parse {
            line: header_line,
            msg: format!("expected header n=<integer>, found '{}'", header.trim()),
        })?;
    Limits::new(HARD_MAX_N)?.check(n)?;

    let mut records = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let parse_err = |msg: String| Error::Parse { line: line_no, msg };
        let (images, count) = line
            .split_once(',')
            .ok_or_else(|| parse_err("expected '<images>,<count>'".into()))?;
        let count: u64 = count
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("count '{}' is not a non-negative integer", count.trim())))?;
        if count == 0 {
            return Err(parse_err("count must be positive".into()));
        }
        let images: Vec<usize> = images
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_err(format!("image '{t}' is not an integer"))))
            .collect::<Result<_>>()?;
        if images.len() != n {
            return Err(Error::InvalidData(format!(
                "line {line_no}: {} images for n = {n}",
                images.len()
            )));
        }
        let pi = Permutation::from_one_based(&images)
            .map_err(|e| Error::InvalidData(format!("line {line_no}: {e}")))?;
        records.push((pi, count));
    }
    EmpiricalData::from_pairs(n, records.iter().map(|(p, c)| (p, *c)))
}

pub fn parse_counts(path: impl AsRef<Path>) -> Result<EmpiricalData> {
    parse_counts_str(&std::fs::read_to_string(path)?)
}

/// Observed permutations in lexicographic order, one per line.
pub fn write_counts_string(data: &EmpiricalData) -> String {
    let mut out = format!("n={}\n", data.n());
    for (pi, c) in data.observed() {
        let _ = writeln!(out, "{pi},{c}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::empirical;

    #[test]
    fn parses_examples() {
        let d = parse_counts_str("n=2\n1 2,3\n2 1,1").unwrap();
        assert_eq!(d.total(), 4);
        assert_eq!(empirical(&d).unwrap().probs(), &[0.75, 0.25]);

        let d = parse_counts_str("n=2\n1 2,1\n1 2,1\n").unwrap();
        assert_eq!(d.counts(), &[2, 0]);

        assert!(matches!(parse_counts_str("n=2\n1 1,5"), Err(Error::InvalidData(_))));
    }

    #[test]
    fn reports_line_numbers() {
        match parse_counts_str("n=3\n1 2 3,4\n\n2 1 3;4\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        match parse_counts_str("size 3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_counts_str("n=3\n1 2 3,x"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn write_then_parse() {
        let d = parse_counts_str("n=3\n3 1 2,2\n1 2 3,5\n").unwrap();
        let text = write_counts_string(&d);
        assert_eq!(text, "n=3\n1 2 3,5\n3 1 2,2\n");
        assert_eq!(parse_counts_str(&text).unwrap(), d);
    }
}
