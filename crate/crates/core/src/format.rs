//! Plain-text instance and matching files.
//!
//! Instance files:
//!
//! ```text
//! SMTI <nU> <nW>            or    HRT <n> <m>
//!                                 CAP <c1> ... <cm>
//! U <i>: <groups>
//! ...
//! W <j>: <groups>
//! ```
//!
//! `<groups>` lists 1-based opposite-side indices in rank order; tied entries
//! are wrapped in parentheses, e.g. `U 1: (1 3) 2`. Blank lines and lines
//! starting with `#` are ignored. Every agent must have exactly one line.
//!
//! Matching files hold one `u<i> w<j>` pair per line.

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::model::{AgentRef, Instance, InstanceSpec, Kind, Matching, Side, Violation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnbalancedParen,
    IndexOutOfRange { index: usize, limit: usize },
    DuplicateLine(AgentRef),
    MissingLine(AgentRef),
    Invalid(Violation),
    Matching(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Syntax(msg) => f.write_str(msg),
            ParseErrorKind::UnbalancedParen => f.write_str("unbalanced parenthesis"),
            ParseErrorKind::IndexOutOfRange { index, limit } => {
                write!(f, "index {index} out of range 1..={limit}")
            }
            ParseErrorKind::DuplicateLine(a) => write!(f, "second line for {a}"),
            ParseErrorKind::MissingLine(a) => write!(f, "no line for {a}"),
            ParseErrorKind::Invalid(v) => write!(f, "{v}"),
            ParseErrorKind::Matching(msg) => f.write_str(msg),
        }
    }
}

fn err(line: usize, column: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, column, kind }
}

fn syntax(line: usize, column: usize, msg: impl Into<String>) -> ParseError {
    err(line, column, ParseErrorKind::Syntax(msg.into()))
}

/// Non-blank, non-comment lines as `(line number, column offset, text)`.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let trimmed = raw.trim_start();
        let offset = raw.len() - trimmed.len();
        let trimmed = trimmed.trim_end();
        (!trimmed.is_empty() && !trimmed.starts_with('#')).then_some((i + 1, offset + 1, trimmed))
    })
}

/// Whitespace-separated tokens with 1-based columns.
fn words(s: &str, base: usize) -> impl Iterator<Item = (usize, &str)> {
    s.split_whitespace().map(move |w| {
        let offset = w.as_ptr() as usize - s.as_ptr() as usize;
        (base + offset, w)
    })
}

fn number(line: usize, (column, word): (usize, &str)) -> Result<usize, ParseError> {
    word.parse()
        .map_err(|_| syntax(line, column, format!("expected a number, found `{word}`")))
}

fn parse_groups(
    line: usize,
    base: usize,
    s: &str,
    limit: usize,
) -> Result<Vec<Vec<usize>>, ParseError> {
    let mut groups = Vec::new();
    let mut open: Option<(usize, Vec<usize>)> = None;
    let mut chars = s.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        let column = base + i;
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' => {
                if open.is_some() {
                    return Err(syntax(line, column, "nested parenthesis"));
                }
                open = Some((column, Vec::new()));
                chars.next();
            }
            ')' => {
                let Some((_, group)) = open.take() else {
                    return Err(err(line, column, ParseErrorKind::UnbalancedParen));
                };
                if group.is_empty() {
                    return Err(syntax(line, column, "empty tie group"));
                }
                groups.push(group);
                chars.next();
            }
            c if c.is_ascii_digit() => {
                let mut end = i;
                while let Some(&(j, d)) = chars.peek() {
                    if !d.is_ascii_digit() {
                        break;
                    }
                    end = j + d.len_utf8();
                    chars.next();
                }
                let index: usize = s[i..end]
                    .parse()
                    .map_err(|_| syntax(line, column, "index too large"))?;
                if index == 0 || index > limit {
                    return Err(err(
                        line,
                        column,
                        ParseErrorKind::IndexOutOfRange { index, limit },
                    ));
                }
                match open.as_mut() {
                    Some((_, group)) => group.push(index - 1),
                    None => groups.push(vec![index - 1]),
                }
            }
            other => {
                return Err(syntax(
                    line,
                    column,
                    format!("unexpected character `{other}`"),
                ))
            }
        }
    }
    if let Some((column, _)) = open {
        return Err(err(line, column, ParseErrorKind::UnbalancedParen));
    }
    Ok(groups)
}

/// Parses and validates an instance file.
pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let mut lines = content_lines(text);
    let (hline, hcol, header) = lines
        .next()
        .ok_or_else(|| syntax(1, 1, "empty input, expected a header"))?;
    let mut h = words(header, hcol);
    let kind = match h.next() {
        Some((_, "SMTI")) => Kind::Smti,
        Some((_, "HRT")) => Kind::Hrt,
        Some((c, w)) => {
            return Err(syntax(
                hline,
                c,
                format!("expected SMTI or HRT, found `{w}`"),
            ))
        }
        None => unreachable!("content lines are non-empty"),
    };
    let mut dim = || -> Result<usize, ParseError> {
        let w = h
            .next()
            .ok_or_else(|| syntax(hline, hcol + header.len(), "missing size in header"))?;
        number(hline, w)
    };
    let (n_u, n_w) = (dim()?, dim()?);
    if let Some((c, w)) = h.next() {
        return Err(syntax(hline, c, format!("unexpected `{w}` after header")));
    }

    let quota_w = match kind {
        Kind::Smti => vec![1; n_w],
        Kind::Hrt => {
            let (line, col, text) = lines
                .next()
                .ok_or_else(|| syntax(hline + 1, 1, "expected a CAP line"))?;
            let mut ws = words(text, col);
            if ws.next().map(|(_, w)| w) != Some("CAP") {
                return Err(syntax(line, col, "expected a CAP line"));
            }
            let caps = ws
                .map(|w| number(line, w).map(|n| n as u32))
                .collect::<Result<Vec<_>, _>>()?;
            if caps.len() != n_w {
                return Err(syntax(
                    line,
                    col,
                    format!("expected {n_w} capacities, found {}", caps.len()),
                ));
            }
            caps
        }
    };

    let mut prefs: [Vec<Option<Vec<Vec<usize>>>>; 2] = [vec![None; n_u], vec![None; n_w]];
    let mut line_of: [Vec<usize>; 2] = [vec![0; n_u], vec![0; n_w]];
    for (line, col, text) in lines {
        let (head, rest) = text
            .split_once(':')
            .ok_or_else(|| syntax(line, col, "expected `U <i>:` or `W <j>:`"))?;
        let mut hw = words(head, col);
        let (side, limit, other_limit) = match hw.next() {
            Some((_, "U")) => (Side::U, n_u, n_w),
            Some((_, "W")) => (Side::W, n_w, n_u),
            Some((c, w)) => return Err(syntax(line, c, format!("expected U or W, found `{w}`"))),
            None => return Err(syntax(line, col, "missing agent side")),
        };
        let idx_word = hw
            .next()
            .ok_or_else(|| syntax(line, col, "missing agent index"))?;
        let index = number(line, idx_word)?;
        if index == 0 || index > limit {
            return Err(err(
                line,
                idx_word.0,
                ParseErrorKind::IndexOutOfRange { index, limit },
            ));
        }
        if let Some((c, w)) = hw.next() {
            return Err(syntax(line, c, format!("unexpected `{w}` before `:`")));
        }
        let s = side as usize;
        let agent = AgentRef {
            side,
            index: index - 1,
        };
        if prefs[s][index - 1].is_some() {
            return Err(err(line, col, ParseErrorKind::DuplicateLine(agent)));
        }
        let groups = parse_groups(line, col + head.len() + 1, rest, other_limit)?;
        prefs[s][index - 1] = Some(groups);
        line_of[s][index - 1] = line;
    }

    let [pu, pw] = prefs;
    let collect = |side: Side, v: Vec<Option<Vec<Vec<usize>>>>| {
        v.into_iter()
            .enumerate()
            .map(|(index, p)| {
                p.ok_or_else(|| {
                    err(
                        hline,
                        1,
                        ParseErrorKind::MissingLine(AgentRef { side, index }),
                    )
                })
            })
            .collect::<Result<Vec<_>, _>>()
    };
    let spec = InstanceSpec {
        kind,
        quota_u: vec![1; n_u],
        quota_w,
        prefs_u: collect(Side::U, pu)?,
        prefs_w: collect(Side::W, pw)?,
    };
    Instance::new(spec).map_err(|e| match e {
        crate::ModelError::Invalid(mut violations) => {
            let v = violations.swap_remove(0);
            let line = match &v {
                Violation::Duplicate { agent, .. }
                | Violation::EmptyTieGroup { agent }
                | Violation::IndexOutOfRange { agent, .. }
                | Violation::ZeroQuota { agent }
                | Violation::SmtiQuota { agent, .. }
                | Violation::ResidentQuota { agent, .. } => {
                    line_of[agent.side as usize][agent.index]
                }
                Violation::Mutuality { lister, .. } => line_of[lister.side as usize][lister.index],
                Violation::ListCount { .. } => hline,
            };
            err(line, 1, ParseErrorKind::Invalid(v))
        }
        other => syntax(hline, 1, other.to_string()),
    })
}

/// Canonical text for `inst`; `parse_instance` inverts it exactly.
pub fn emit_instance(inst: &Instance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {}", inst.kind(), inst.n_u(), inst.n_w());
    if inst.kind() == Kind::Hrt {
        out.push_str("CAP");
        for w in inst.side_agents(Side::W) {
            let _ = write!(out, " {}", inst.quota(w));
        }
        out.push('\n');
    }
    for side in [Side::U, Side::W] {
        let tag = if side == Side::U { 'U' } else { 'W' };
        for (i, v) in inst.side_agents(side).enumerate() {
            let _ = write!(out, "{tag} {}:", i + 1);
            for group in inst.list(v).groups() {
                let idx = |x| inst.agent_ref(x).index + 1;
                if let [single] = group {
                    let _ = write!(out, " {}", idx(*single));
                } else {
                    out.push_str(" (");
                    for (k, &x) in group.iter().enumerate() {
                        if k > 0 {
                            out.push(' ');
                        }
                        let _ = write!(out, "{}", idx(x));
                    }
                    out.push(')');
                }
            }
            out.push('\n');
        }
    }
    out
}

/// One `u<i> w<j>` line per matched pair, sorted.
pub fn emit_matching(inst: &Instance, m: &Matching) -> String {
    let mut out = String::new();
    for (u, w) in m.pairs() {
        let _ = writeln!(out, "{} {}", inst.agent_ref(u), inst.agent_ref(w));
    }
    out
}

fn agent_token(
    line: usize,
    (column, word): (usize, &str),
    side: Side,
    limit: usize,
) -> Result<usize, ParseError> {
    let prefix = if side == Side::U { 'u' } else { 'w' };
    let digits = word.strip_prefix(prefix).ok_or_else(|| {
        syntax(
            line,
            column,
            format!("expected `{prefix}<index>`, found `{word}`"),
        )
    })?;
    let index = number(line, (column + 1, digits))?;
    if index == 0 || index > limit {
        return Err(err(
            line,
            column,
            ParseErrorKind::IndexOutOfRange { index, limit },
        ));
    }
    Ok(index - 1)
}

/// Parses a matching file against `inst`, checking acceptability and quotas.
pub fn parse_matching(inst: &Instance, text: &str) -> Result<Matching, ParseError> {
    let mut m = Matching::empty(inst);
    for (line, col, text) in content_lines(text) {
        let mut ws = words(text, col);
        let (Some(a), Some(b), None) = (ws.next(), ws.next(), ws.next()) else {
            return Err(syntax(line, col, "expected `u<i> w<j>`"));
        };
        let u = inst.u(agent_token(line, a, Side::U, inst.n_u())?);
        let w = inst.w(agent_token(line, b, Side::W, inst.n_w())?);
        let problem = if !inst.accepts(u, w) {
            Some("pair is not mutually acceptable".to_string())
        } else if m.contains(u, w) {
            Some("pair listed twice".to_string())
        } else {
            [u, w]
                .into_iter()
                .find(|&v| m.is_full(inst, v))
                .map(|v| format!("{} exceeds its quota {}", inst.agent_ref(v), inst.quota(v)))
        };
        if let Some(msg) = problem {
            return Err(err(line, col, ParseErrorKind::Matching(msg)));
        }
        m.connect(u, w);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{toy, TOY_TEXT};

    #[test]
    fn toy_text_parses_to_toy() {
        let inst = parse_instance(TOY_TEXT).unwrap();
        assert_eq!(inst, toy());
        assert_eq!(emit_instance(&inst), TOY_TEXT);
    }

    #[test]
    fn minimal_instance() {
        let inst = parse_instance("SMTI 1 1\nU 1: 1\nW 1: 1\n").unwrap();
        assert_eq!(inst.agent_count(), 2);
        assert!(inst.accepts(inst.u(0), inst.w(0)));
    }

    #[test]
    fn unbalanced_paren_reports_line_two() {
        let e = parse_instance("SMTI 1 1\nU 1: (1\nW 1: 1\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert_eq!(e.column, 6);
        assert_eq!(e.kind, ParseErrorKind::UnbalancedParen);
        assert!(e.to_string().starts_with("line 2, column 6"));
    }

    #[test]
    fn errors_carry_locations() {
        let e = parse_instance("SMTI 2 1\nU 1: 1\nU 2:\nW 1: 2\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(matches!(
            e.kind,
            ParseErrorKind::Invalid(Violation::Mutuality { .. })
        ));

        let e = parse_instance("SMTI 1 1\nU 1: 3\nW 1: 1\n").unwrap_err();
        assert_eq!((e.line, e.column), (2, 6));
        assert_eq!(
            e.kind,
            ParseErrorKind::IndexOutOfRange { index: 3, limit: 1 }
        );

        let e = parse_instance("SMTI 1 1\nU 1: 1\n").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::MissingLine(AgentRef::w(0)));

        let e = parse_instance("SMTI 1 1\nU 1: 1\nU 1: 1\nW 1: 1").unwrap_err();
        assert_eq!(e.line, 3);

        let e = parse_instance("SMTX 1 1\n").unwrap_err();
        assert_eq!((e.line, e.column), (1, 1));

        let e = parse_instance("SMTI 1 1\nU 1: () 1\nW 1: 1").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Syntax(_)));
    }

    #[test]
    fn hrt_round_trip() {
        let text = "HRT 3 2\nCAP 2 1\nU 1: (1 2)\nU 2: 1\nU 3: 2 1\nW 1: 2 (1 3)\nW 2: (1 3)\n";
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.kind(), Kind::Hrt);
        assert_eq!(inst.quota(inst.w(0)), 2);
        assert_eq!(emit_instance(&inst), text);
    }

    #[test]
    fn comments_and_singleton_parens_are_accepted() {
        let inst = parse_instance("# toy\nSMTI 1 2\n\nU 1: (2) 1\nW 1: 1\nW 2: 1\n").unwrap();
        assert_eq!(emit_instance(&inst), "SMTI 1 2\nU 1: 2 1\nW 1: 1\nW 2: 1\n");
    }

    #[test]
    fn matching_files() {
        let inst = toy();
        let m = parse_matching(&inst, "u1 w1\nu2 w2\n").unwrap();
        assert_eq!(m.size(), 2);
        assert_eq!(emit_matching(&inst, &m), "u1 w1\nu2 w2\n");

        let e = parse_matching(&inst, "u1 w1\nu3 w2\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse_matching(&inst, "u1 w1\nu1 w3\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(parse_matching(&inst, "w1 u1\n").is_err());
        assert!(parse_matching(&inst, "u9 w1\n").is_err());
    }
}
