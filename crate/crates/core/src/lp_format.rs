//! CPLEX LP file export and parsing.
//!
//! The writer emits ASCII with LF line endings and the sections
//! `Minimize`, `Subject To`, `Bounds`, `Binary`, `General`, `End`. Variable
//! names follow `<kind>_<entity>[_<t>]` from the standard form; every column
//! appears in the Bounds section in registry order, which is what makes the
//! parser's column ordering exact. Numbers use Rust's shortest
//! round-tripping float formatting, so parsing a written file reproduces the
//! standard form coefficient for coefficient.

use std::fmt::Write as _;
use std::io;

use thiserror::Error;

use crate::model::{Model, RowSense};
use crate::standard_form::{ConstraintMatrix, StandardForm};

/// Wrap constraint and objective lines beyond this many characters.
const WRAP_COLUMN: usize = 200;

#[derive(Debug, Clone, Error, PartialEq)]
#[error("lp parse error at line {line}: {message}")]
pub struct LpParseError {
    pub line: usize,
    pub message: String,
}

/// Serialize a model; the text is deterministic for identical models.
pub fn export_lp_string(model: &Model) -> String {
    write_lp_string(&StandardForm::from_model(model))
}

/// Serialize a model to any writer.
pub fn export_lp(model: &Model, mut destination: impl io::Write) -> io::Result<()> {
    destination.write_all(export_lp_string(model).as_bytes())
}

pub fn write_lp_string(sf: &StandardForm) -> String {
    let mut out = String::new();
    out.push_str("Minimize\n");
    let objective_terms: Vec<(usize, f64)> = sf
        .objective
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(j, c)| (j, *c))
        .collect();
    if objective_terms.is_empty() && sf.ncols > 0 {
        // keep the section well-formed for parsers that need a term
        let _ = writeln!(out, " obj: 0 {}", sf.col_names[0]);
    } else {
        out.push_str(" obj:");
        write_terms(&mut out, &objective_terms, &sf.col_names);
        out.push('\n');
    }

    out.push_str("Subject To\n");
    for i in 0..sf.row_count() {
        let terms = sf.matrix.row_terms(i);
        let _ = write!(out, " {}:", sf.row_names[i]);
        if terms.is_empty() {
            let _ = write!(out, " 0 {}", sf.col_names[0]);
        } else {
            write_terms(&mut out, &terms, &sf.col_names);
        }
        let _ = writeln!(
            out,
            " {} {}",
            match sf.senses[i] {
                RowSense::Le => "<=",
                RowSense::Eq => "=",
            },
            format_number(sf.rhs[i])
        );
    }

    out.push_str("Bounds\n");
    for j in 0..sf.ncols {
        let name = &sf.col_names[j];
        let (lo, up) = (sf.lower[j], sf.upper[j]);
        if lo == up {
            let _ = writeln!(out, " {name} = {}", format_number(lo));
        } else if up.is_infinite() {
            let _ = writeln!(out, " {name} >= {}", format_number(lo));
        } else {
            let _ = writeln!(out, " {} <= {name} <= {}", format_number(lo), format_number(up));
        }
    }

    let binaries: Vec<&str> = (0..sf.ncols)
        .filter(|&j| sf.integrality[j] && sf.lower[j] >= 0.0 && sf.upper[j] <= 1.0)
        .map(|j| sf.col_names[j].as_str())
        .collect();
    let generals: Vec<&str> = (0..sf.ncols)
        .filter(|&j| sf.integrality[j] && !(sf.lower[j] >= 0.0 && sf.upper[j] <= 1.0))
        .map(|j| sf.col_names[j].as_str())
        .collect();
    for (keyword, names) in [("Binary", binaries), ("General", generals)] {
        if names.is_empty() {
            continue;
        }
        out.push_str(keyword);
        out.push('\n');
        let mut line = String::from(" ");
        for name in names {
            if line.len() + name.len() + 1 > WRAP_COLUMN && line.trim() != "" {
                out.push_str(line.trim_end());
                out.push('\n');
                line = String::from(" ");
            }
            line.push_str(name);
            line.push(' ');
        }
        if !line.trim().is_empty() {
            out.push_str(line.trim_end());
            out.push('\n');
        }
    }

    out.push_str("End\n");
    out
}

fn write_terms(out: &mut String, terms: &[(usize, f64)], names: &[String]) {
    let mut column = out.len() - out.rfind('\n').map_or(0, |p| p + 1);
    for (index, (col, coefficient)) in terms.iter().enumerate() {
        let mut piece = String::new();
        if *coefficient < 0.0 {
            piece.push_str(" -");
        } else if index > 0 {
            piece.push_str(" +");
        }
        let magnitude = coefficient.abs();
        if magnitude != 1.0 {
            let _ = write!(piece, " {}", format_number(magnitude));
        }
        let _ = write!(piece, " {}", names[*col]);
        if index > 0 && column + piece.len() > WRAP_COLUMN {
            out.push_str("\n   ");
            column = 3;
        }
        out.push_str(&piece);
        column += piece.len();
    }
}

/// Shortest decimal representation that parses back to the same f64.
fn format_number(value: f64) -> String {
    format!("{value}")
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Name(String),
    Number(f64),
    Plus,
    Minus,
    Le,
    Ge,
    EqSign,
    Colon,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    Objective { maximize: bool },
    Constraints,
    Bounds,
    Binary,
    General,
    End,
}

fn section_header(line: &str) -> Option<Section> {
    let lowered = line.trim().to_ascii_lowercase();
    match lowered.as_str() {
        "minimize" | "min" | "minimise" => Some(Section::Objective { maximize: false }),
        "maximize" | "max" | "maximise" => Some(Section::Objective { maximize: true }),
        "subject to" | "such that" | "st" | "s.t." => Some(Section::Constraints),
        "bounds" | "bound" => Some(Section::Bounds),
        "binary" | "binaries" | "bin" => Some(Section::Binary),
        "general" | "generals" | "gen" => Some(Section::General),
        "end" => Some(Section::End),
        _ => None,
    }
}

fn tokenize(line: &str, line_no: usize) -> Result<Vec<Token>, LpParseError> {
    let mut tokens = Vec::new();
    let bytes: Vec<char> = line.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        match c {
            '\\' => break, // comment to end of line
            '+' => {
                tokens.push(Token::Plus);
                i += 1;
            }
            '-' => {
                tokens.push(Token::Minus);
                i += 1;
            }
            ':' => {
                tokens.push(Token::Colon);
                i += 1;
            }
            '<' | '>' | '=' => {
                let mut sense = String::from(c);
                if i + 1 < bytes.len() && matches!(bytes[i + 1], '<' | '>' | '=') {
                    sense.push(bytes[i + 1]);
                    i += 1;
                }
                i += 1;
                tokens.push(match sense.as_str() {
                    "<" | "<=" | "=<" => Token::Le,
                    ">" | ">=" | "=>" => Token::Ge,
                    "=" | "==" => Token::EqSign,
                    other => {
                        return Err(LpParseError {
                            line: line_no,
                            message: format!("unrecognized comparison '{other}'"),
                        })
                    }
                });
            }
            _ if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_digit()
                        || bytes[i] == '.'
                        || bytes[i] == 'e'
                        || bytes[i] == 'E'
                        || ((bytes[i] == '+' || bytes[i] == '-')
                            && i > start
                            && matches!(bytes[i - 1], 'e' | 'E')))
                {
                    i += 1;
                }
                let text: String = bytes[start..i].iter().collect();
                let value = text.parse::<f64>().map_err(|_| LpParseError {
                    line: line_no,
                    message: format!("invalid number '{text}'"),
                })?;
                tokens.push(Token::Number(value));
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_' || bytes[i] == '.')
                {
                    i += 1;
                }
                tokens.push(Token::Name(bytes[start..i].iter().collect()));
            }
            other => {
                return Err(LpParseError {
                    line: line_no,
                    message: format!("unexpected character '{other}'"),
                })
            }
        }
    }
    Ok(tokens)
}

#[derive(Default)]
struct Columns {
    names: Vec<String>,
    index: std::collections::BTreeMap<String, usize>,
}

impl Columns {
    fn resolve(&mut self, name: &str) -> usize {
        if let Some(&j) = self.index.get(name) {
            return j;
        }
        let j = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), j);
        j
    }
}

/// Parse LP text back into a standard form. Column order follows the Bounds
/// section (complete and registry-ordered in files written by this module);
/// names seen only elsewhere are appended in first-use order.
pub fn parse_lp_str(text: &str) -> Result<StandardForm, LpParseError> {
    let mut columns = Columns::default();
    let mut section = None;

    // Bounds lines register the columns first so ordering round-trips.
    for line in text.lines() {
        if let Some(header) = section_header(line) {
            section = Some(header);
            continue;
        }
        if section == Some(Section::Bounds) {
            for token in tokenize(line, 0)? {
                if let Token::Name(name) = token {
                    if !name.eq_ignore_ascii_case("free")
                        && !name.eq_ignore_ascii_case("inf")
                        && !name.eq_ignore_ascii_case("infinity")
                    {
                        columns.resolve(&name);
                    }
                }
            }
        }
    }

    let mut maximize = false;
    let mut objective_tokens: Vec<(usize, Token)> = Vec::new();
    let mut constraint_tokens: Vec<(usize, Token)> = Vec::new();
    let mut bounds_lines: Vec<(usize, Vec<Token>)> = Vec::new();
    let mut binary_names: Vec<String> = Vec::new();
    let mut general_names: Vec<String> = Vec::new();

    section = None;
    for (line_index, line) in text.lines().enumerate() {
        let line_no = line_index + 1;
        if let Some(header) = section_header(line) {
            if let Section::Objective { maximize: m } = header {
                maximize = m;
            }
            section = Some(header);
            continue;
        }
        let tokens = tokenize(line, line_no)?;
        if tokens.is_empty() {
            continue;
        }
        match section {
            Some(Section::Objective { .. }) => {
                objective_tokens.extend(tokens.into_iter().map(|t| (line_no, t)))
            }
            Some(Section::Constraints) => {
                constraint_tokens.extend(tokens.into_iter().map(|t| (line_no, t)))
            }
            Some(Section::Bounds) => bounds_lines.push((line_no, tokens)),
            Some(Section::Binary) | Some(Section::General) => {
                let bucket = if section == Some(Section::Binary) {
                    &mut binary_names
                } else {
                    &mut general_names
                };
                for token in tokens {
                    match token {
                        Token::Name(name) => bucket.push(name),
                        other => {
                            return Err(LpParseError {
                                line: line_no,
                                message: format!("expected variable name, found {other:?}"),
                            })
                        }
                    }
                }
            }
            Some(Section::End) => {
                return Err(LpParseError {
                    line: line_no,
                    message: "content after End".into(),
                })
            }
            None => {
                return Err(LpParseError {
                    line: line_no,
                    message: "content before the objective section".into(),
                })
            }
        }
    }

    let (_, objective_terms, rest) = parse_expression(&objective_tokens, &mut columns)?;
    if !rest.is_empty() {
        return Err(LpParseError {
            line: rest[0].0,
            message: "trailing tokens after objective".into(),
        });
    }

    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut senses: Vec<RowSense> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut row_names: Vec<String> = Vec::new();
    let mut remaining: &[(usize, Token)] = &constraint_tokens;
    while !remaining.is_empty() {
        let (label, terms, rest) = parse_expression(remaining, &mut columns)?;
        let (sense_token, rest) = rest.split_first().ok_or_else(|| LpParseError {
            line: remaining[0].0,
            message: "constraint without comparison".into(),
        })?;
        let (rhs_value, rest) = parse_signed_number(rest, sense_token.0)?;
        let mut merged: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
        for (col, a) in terms {
            *merged.entry(col).or_insert(0.0) += a;
        }
        let (sense, negate) = match sense_token.1 {
            Token::Le => (RowSense::Le, false),
            Token::Ge => (RowSense::Le, true),
            Token::EqSign => (RowSense::Eq, false),
            ref other => {
                return Err(LpParseError {
                    line: sense_token.0,
                    message: format!("expected comparison, found {other:?}"),
                })
            }
        };
        let factor = if negate { -1.0 } else { 1.0 };
        rows.push(
            merged
                .into_iter()
                .map(|(col, a)| (col, a * factor))
                .filter(|(_, a)| *a != 0.0)
                .collect(),
        );
        senses.push(sense);
        rhs.push(rhs_value * factor);
        row_names.push(label.unwrap_or_else(|| format!("r{}", rows.len() - 1)));
        remaining = rest;
    }

    let ncols = columns.names.len();
    let mut lower = vec![0.0; ncols];
    let mut upper = vec![f64::INFINITY; ncols];
    for (line_no, tokens) in bounds_lines {
        apply_bounds_line(&tokens, line_no, &mut columns, &mut lower, &mut upper)?;
    }

    let mut integrality = vec![false; ncols];
    for name in &general_names {
        integrality[columns.resolve(name)] = true;
    }
    for name in &binary_names {
        let j = columns.resolve(name);
        integrality[j] = true;
        lower[j] = lower[j].max(0.0);
        upper[j] = upper[j].min(1.0);
    }

    let mut objective = vec![0.0; ncols];
    for (col, a) in objective_terms {
        objective[col] += if maximize { -a } else { a };
    }

    Ok(StandardForm {
        ncols,
        matrix: ConstraintMatrix::from_rows(ncols, rows),
        senses,
        rhs,
        objective,
        lower,
        upper,
        integrality,
        col_names: columns.names,
        row_names,
    })
}

type TokenSlice<'a> = &'a [(usize, Token)];

/// Parse an optional `label:` then a linear expression; stops before the
/// first comparison token.
fn parse_expression<'a>(
    tokens: TokenSlice<'a>,
    columns: &mut Columns,
) -> Result<(Option<String>, Vec<(usize, f64)>, TokenSlice<'a>), LpParseError> {
    let mut label = None;
    let mut rest = tokens;
    if let [(_, Token::Name(name)), (_, Token::Colon), tail @ ..] = tokens {
        label = Some(name.clone());
        rest = tail;
    }
    let mut terms = Vec::new();
    let mut sign = 1.0;
    let mut pending: Option<f64> = None;
    let mut index = 0;
    while index < rest.len() {
        match &rest[index].1 {
            Token::Plus => {
                if pending.is_some() {
                    return Err(LpParseError {
                        line: rest[index].0,
                        message: "dangling coefficient before '+'".into(),
                    });
                }
            }
            Token::Minus => sign = -sign,
            Token::Number(value) => {
                if pending.is_some() {
                    return Err(LpParseError {
                        line: rest[index].0,
                        message: "two consecutive numbers in expression".into(),
                    });
                }
                pending = Some(*value);
            }
            Token::Name(name) => {
                let col = columns.resolve(name);
                terms.push((col, sign * pending.take().unwrap_or(1.0)));
                sign = 1.0;
            }
            Token::Le | Token::Ge | Token::EqSign => break,
            Token::Colon => {
                return Err(LpParseError {
                    line: rest[index].0,
                    message: "unexpected ':'".into(),
                })
            }
        }
        index += 1;
    }
    if pending.is_some() {
        return Err(LpParseError {
            line: rest.last().map_or(0, |t| t.0),
            message: "dangling coefficient at end of expression".into(),
        });
    }
    Ok((label, terms, &rest[index..]))
}

fn parse_signed_number<'a>(
    tokens: TokenSlice<'a>,
    line: usize,
) -> Result<(f64, TokenSlice<'a>), LpParseError> {
    match tokens {
        [(_, Token::Minus), (_, Token::Number(v)), rest @ ..] => Ok((-v, rest)),
        [(_, Token::Plus), (_, Token::Number(v)), rest @ ..] => Ok((*v, rest)),
        [(_, Token::Number(v)), rest @ ..] => Ok((*v, rest)),
        _ => Err(LpParseError {
            line,
            message: "expected a number".into(),
        }),
    }
}

fn apply_bounds_line(
    tokens: &[Token],
    line: usize,
    columns: &mut Columns,
    lower: &mut [f64],
    upper: &mut [f64],
) -> Result<(), LpParseError> {
    let err = |message: &str| LpParseError {
        line,
        message: message.into(),
    };
    match tokens {
        [Token::Name(name), Token::Name(kw)] if kw.eq_ignore_ascii_case("free") => {
            let j = columns.resolve(name);
            lower[j] = f64::NEG_INFINITY;
            upper[j] = f64::INFINITY;
            Ok(())
        }
        [Token::Name(name), Token::Ge, rest @ ..] => {
            let (v, rest) = parse_signed_value(rest, line)?;
            if !rest.is_empty() {
                return Err(err("trailing tokens in bound"));
            }
            lower[columns.resolve(name)] = v;
            Ok(())
        }
        [Token::Name(name), Token::Le, rest @ ..] => {
            let (v, rest) = parse_signed_value(rest, line)?;
            if !rest.is_empty() {
                return Err(err("trailing tokens in bound"));
            }
            upper[columns.resolve(name)] = v;
            Ok(())
        }
        [Token::Name(name), Token::EqSign, rest @ ..] => {
            let (v, rest) = parse_signed_value(rest, line)?;
            if !rest.is_empty() {
                return Err(err("trailing tokens in bound"));
            }
            let j = columns.resolve(name);
            lower[j] = v;
            upper[j] = v;
            Ok(())
        }
        _ => {
            // forms starting with a number: "l <= x" or "l <= x <= u"
            let (lo, rest) = parse_signed_value(tokens, line)?;
            match rest {
                [Token::Le, Token::Name(name), rest @ ..] => {
                    let j = columns.resolve(name);
                    lower[j] = lo;
                    match rest {
                        [] => Ok(()),
                        [Token::Le, tail @ ..] => {
                            let (up, tail) = parse_signed_value(tail, line)?;
                            if !tail.is_empty() {
                                return Err(err("trailing tokens in bound"));
                            }
                            upper[j] = up;
                            Ok(())
                        }
                        _ => Err(err("malformed bound line")),
                    }
                }
                _ => Err(err("malformed bound line")),
            }
        }
    }
}

fn parse_signed_value(
    tokens: &[Token],
    line: usize,
) -> Result<(f64, &[Token]), LpParseError> {
    match tokens {
        [Token::Minus, Token::Number(v), rest @ ..] => Ok((-v, rest)),
        [Token::Plus, Token::Number(v), rest @ ..] => Ok((*v, rest)),
        [Token::Number(v), rest @ ..] => Ok((*v, rest)),
        _ => Err(LpParseError {
            line,
            message: "expected a number".into(),
        }),
    }
}
