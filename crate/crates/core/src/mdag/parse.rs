//! Model file format.
//!
//! ```text
//! # comment
//! missing X1
//! missing X2 card=3
//! observed W
//! hidden U
//! edge X1(1) -> X2(1)
//! ```
//!
//! Declarations must precede edges.

use thiserror::Error;

use super::{MDag, ModelError, ModelSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: {source}")]
    Model {
        line: usize,
        #[source]
        source: ModelError,
    },
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

// Column (1-based, in chars) of the first occurrence of `needle` in `text`.
fn column_of(text: &str, needle: &str) -> usize {
    text.find(needle).map(|b| text[..b].chars().count() + 1).unwrap_or(1)
}

pub fn parse_model(text: &str) -> Result<MDag, ParseError> {
    let mut spec = ModelSpec::new();
    let mut edge_lines = Vec::new();
    let mut seen_edge = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let (keyword, rest) = match trimmed.split_once(char::is_whitespace) {
            Some((k, r)) => (k, r.trim()),
            None => (trimmed, ""),
        };
        match keyword {
            "missing" | "observed" | "hidden" => {
                if seen_edge {
                    return Err(syntax(
                        line_no,
                        column_of(raw, keyword),
                        "declarations must precede edges",
                    ));
                }
                let mut tokens = rest.split_whitespace();
                let name = tokens
                    .next()
                    .ok_or_else(|| syntax(line_no, column_of(raw, keyword) + keyword.len(), "expected a variable name"))?;
                for tok in tokens {
                    let value = tok.strip_prefix("card=").ok_or_else(|| {
                        syntax(line_no, column_of(raw, tok), format!("unexpected token `{tok}`"))
                    })?;
                    let card: usize = value.parse().map_err(|_| {
                        syntax(line_no, column_of(raw, tok), format!("invalid cardinality `{value}`"))
                    })?;
                    spec.cardinalities.insert(name.to_string(), card);
                }
                let list = match keyword {
                    "missing" => &mut spec.missing,
                    "observed" => &mut spec.observed,
                    _ => &mut spec.hidden,
                };
                list.push(name.to_string());
            }
            "edge" => {
                seen_edge = true;
                let (a, b) = rest.split_once("->").ok_or_else(|| {
                    syntax(line_no, column_of(raw, keyword), "expected `edge A -> B`")
                })?;
                let (a, b) = (a.trim(), b.trim());
                if a.is_empty() || a.contains(char::is_whitespace) {
                    return Err(syntax(line_no, column_of(raw, "edge") + 5, "expected one source vertex"));
                }
                if b.is_empty() || b.contains(char::is_whitespace) {
                    return Err(syntax(line_no, column_of(raw, "->") + 2, "expected one target vertex"));
                }
                spec.edges.push((a.to_string(), b.to_string()));
                edge_lines.push(line_no);
            }
            other => {
                return Err(syntax(
                    line_no,
                    column_of(raw, other),
                    format!("unknown statement `{other}`"),
                ))
            }
        }
    }
    spec.build().map_err(|e| {
        let line = match &e {
            ModelError::UnknownVertex { edge, .. }
            | ModelError::RestrictionA { edge, .. }
            | ModelError::RestrictionB { edge, .. }
            | ModelError::Acyclicity { edge }
            | ModelError::DuplicateEdge { edge } => spec
                .edges
                .iter()
                .position(|(a, b)| a == edge.from.as_str() && b == edge.to.as_str())
                .map(|i| edge_lines[i])
                .unwrap_or(0),
            _ => 0,
        };
        ParseError::Model { line, source: e }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdag::{canonical_model, CanonicalModel};

    #[test]
    fn round_trip_canonical() {
        for c in CanonicalModel::ALL {
            let m = canonical_model(c);
            let again = parse_model(&m.to_model_text()).unwrap();
            assert_eq!(m, again, "{c:?}");
        }
    }

    #[test]
    fn comments_and_cards() {
        let m = parse_model("# two vars\nmissing X card=3  # trailing\nobserved W\n\nedge W->X(1)\n").unwrap();
        assert_eq!(m.cardinality("X"), Some(3));
        assert_eq!(m.state_count("X"), Some(4));
    }

    #[test]
    fn errors_carry_positions() {
        match parse_model("missing X\nfoo Y\n") {
            Err(ParseError::Syntax { line: 2, column: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_model("missing X\nedge X(1) -> R_X\nmissing Y\n") {
            Err(ParseError::Syntax { line: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_model("missing X\nmissing Y\nedge R_X -> Y(1)\n") {
            Err(ParseError::Model { line: 3, source: ModelError::RestrictionB { .. } }) => {}
            other => panic!("{other:?}"),
        }
        match parse_model("missing X card=two\n") {
            Err(ParseError::Syntax { line: 1, column: 11, .. }) => {}
            other => panic!("{other:?}"),
        }
    }
}
