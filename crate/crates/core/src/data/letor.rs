//! LETOR / SVMLight ranking files.
//!
//! ```text
//! <rel> qid:<id> <idx>:<val> <idx>:<val> ... [# comment]
//! ```
//!
//! Consecutive lines sharing a `qid` form one query. Blank lines and lines
//! holding only a comment are skipped.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::Ranking;

use super::labels::ranking_from_relevance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LetorItem {
    pub relevance: u32,
    /// Sparse features with strictly increasing indices, all `>= 1`.
    pub features: Vec<(u32, f64)>,
    pub comment: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawQuery {
    pub query_id: String,
    pub items: Vec<LetorItem>,
}

impl RawQuery {
    pub fn relevance(&self) -> Vec<u32> {
        self.items.iter().map(|i| i.relevance).collect()
    }

    pub fn ranking(&self) -> Result<Ranking> {
        ranking_from_relevance(&self.relevance())
    }
}

/// Parses a whole LETOR document. Line numbers in errors are one-based.
pub fn parse_letor(input: &[u8]) -> Result<Vec<RawQuery>> {
    let mut queries: Vec<RawQuery> = Vec::new();
    for (idx, raw) in input.split(|&b| b == b'\n').enumerate() {
        let line_no = idx + 1;
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        let line = std::str::from_utf8(raw)
            .map_err(|e| Error::parse(line_no, format!("invalid UTF-8: {e}")))?;
        let Some((qid, item)) = parse_line(line, line_no)? else {
            continue;
        };
        match queries.last_mut() {
            Some(q) if q.query_id == qid => q.items.push(item),
            _ => queries.push(RawQuery {
                query_id: qid,
                items: vec![item],
            }),
        }
    }
    Ok(queries)
}

fn parse_line(line: &str, line_no: usize) -> Result<Option<(String, LetorItem)>> {
    let (body, comment) = match line.find('#') {
        Some(pos) => (&line[..pos], Some(line[pos + 1..].trim().to_string())),
        None => (line, None),
    };
    let mut tokens = body.split_whitespace();
    let Some(rel) = tokens.next() else {
        return Ok(None);
    };
    let relevance: u32 = rel.parse().map_err(|_| {
        Error::parse(
            line_no,
            format!("relevance '{rel}' is not a nonnegative integer"),
        )
    })?;
    let qid = tokens
        .next()
        .and_then(|t| t.strip_prefix("qid:"))
        .filter(|q| !q.is_empty())
        .ok_or_else(|| Error::parse(line_no, "missing qid:<id> after the relevance label"))?
        .to_string();
    let mut features: Vec<(u32, f64)> = Vec::new();
    for tok in tokens {
        let (idx, val) = tok
            .split_once(':')
            .ok_or_else(|| Error::parse(line_no, format!("feature '{tok}' is not idx:value")))?;
        let idx: u32 = idx.parse().ok().filter(|&i| i >= 1).ok_or_else(|| {
            Error::parse(
                line_no,
                format!("feature index '{idx}' must be an integer >= 1"),
            )
        })?;
        let val: f64 = val
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| {
                Error::parse(
                    line_no,
                    format!("feature value '{val}' is not a finite number"),
                )
            })?;
        if let Some(&(prev, _)) = features.last() {
            if idx <= prev {
                return Err(Error::parse(
                    line_no,
                    format!("feature index {idx} does not increase after {prev}"),
                ));
            }
        }
        features.push((idx, val));
    }
    Ok(Some((
        qid,
        LetorItem {
            relevance,
            features,
            comment: comment.filter(|c| !c.is_empty()),
        },
    )))
}

pub fn write_letor<W: Write>(mut out: W, queries: &[RawQuery]) -> io::Result<()> {
    for q in queries {
        for item in &q.items {
            write!(out, "{} qid:{}", item.relevance, q.query_id)?;
            for (idx, val) in &item.features {
                write!(out, " {idx}:{val}")?;
            }
            if let Some(c) = &item.comment {
                write!(out, " # {c}")?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_one_line() {
        let q = parse_letor(b"2 qid:10 1:0.5 5:1.25 # note").unwrap();
        assert_eq!(q.len(), 1);
        assert_eq!(q[0].query_id, "10");
        let item = &q[0].items[0];
        assert_eq!(item.relevance, 2);
        assert_eq!(item.features, vec![(1, 0.5), (5, 1.25)]);
        assert_eq!(item.comment.as_deref(), Some("note"));
    }

    #[test]
    fn empty_input() {
        assert!(parse_letor(b"").unwrap().is_empty());
        assert!(parse_letor(b"\n\n# only a comment\n").unwrap().is_empty());
    }

    #[test]
    fn groups_consecutive_qids() {
        let text = b"1 qid:a 1:1\n0 qid:a 1:2\r\n2 qid:b\n1 qid:a 2:3\n";
        let q = parse_letor(text).unwrap();
        let ids: Vec<_> = q
            .iter()
            .map(|q| (q.query_id.as_str(), q.items.len()))
            .collect();
        assert_eq!(ids, vec![("a", 2), ("b", 1), ("a", 1)]);
        assert_eq!(q[0].ranking().unwrap().ranks(), &[1, 2]);
    }

    fn line_of(err: Error) -> usize {
        match err {
            Error::Parse { line, .. } => line,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn reports_line_numbers() {
        assert_eq!(
            line_of(parse_letor(b"1 qid:1 1:2\nx qid:1\n").unwrap_err()),
            2
        );
        assert_eq!(line_of(parse_letor(b"\n\n1 1:2\n").unwrap_err()), 3);
        assert_eq!(line_of(parse_letor(b"1 qid:1 3:1 2:1").unwrap_err()), 1);
        assert_eq!(line_of(parse_letor(b"1 qid:1 3:1 3:1").unwrap_err()), 1);
        assert_eq!(line_of(parse_letor(b"1 qid:1 0:1").unwrap_err()), 1);
        assert_eq!(line_of(parse_letor(b"1 qid:1 1:nan").unwrap_err()), 1);
        assert_eq!(line_of(parse_letor(b"-1 qid:1").unwrap_err()), 1);
        assert_eq!(line_of(parse_letor(b"1 qid:").unwrap_err()), 1);
        assert_eq!(line_of(parse_letor(b"1 qid:1\n\xff\xfe").unwrap_err()), 2);
    }

    #[test]
    fn writes_parseable_lines() {
        let q = parse_letor(b"3 qid:7 2:0.1 9:-4e-7 # doc 12\n0 qid:7\n").unwrap();
        let mut buf = Vec::new();
        write_letor(&mut buf, &q).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "3 qid:7 2:0.1 9:-0.0000004 # doc 12\n0 qid:7\n"
        );
        assert_eq!(parse_letor(&buf).unwrap(), q);
    }
}
