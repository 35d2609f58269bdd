//! Cleaning-plan file parser.
//!
//! One directive per line, `#` starts a comment:
//!
//! ```text
//! drop <col>
//! recode <col> <code> -> -1
//! require <col>
//! rule <id>: if <atom> [and <atom>]* then <col> := <value>
//! ```
//!
//! Atoms: `<col> = missing`, `<col> != missing`, `<col> = <int>`,
//! `<col> in {1,2,3}`, `<col> in [HH:MM, HH:MM)`. Values: `<int>` or
//! `col(<col>)`. Column names with spaces are double-quoted.

use super::{Assignment, CleanError, CleaningPlan, DomainRule, Guard};
use crate::clean::time::parse_hhmm;
use crate::table::MISSING_CODE;

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Word(String),
    Quoted(String),
    Symbol(&'static str),
}

impl Token {
    fn text(&self) -> &str {
        match self {
            Token::Word(w) | Token::Quoted(w) => w,
            Token::Symbol(s) => s,
        }
    }
}

fn lex(line: &str, line_no: usize) -> Result<Vec<Token>, CleanError> {
    let err = |reason: String| CleanError::PlanParse { line: line_no, reason };
    let mut tokens = Vec::new();
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '#' {
            break;
        } else if c == '"' {
            let start = i + 1;
            let mut j = start;
            while j < chars.len() && chars[j] != '"' {
                j += 1;
            }
            if j == chars.len() {
                return Err(err("unterminated quote".to_string()));
            }
            tokens.push(Token::Quoted(chars[start..j].iter().collect()));
            i = j + 1;
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            tokens.push(Token::Symbol("->"));
            i += 2;
        } else if c == ':' && chars.get(i + 1) == Some(&'=') {
            tokens.push(Token::Symbol(":="));
            i += 2;
        } else if c == '!' && chars.get(i + 1) == Some(&'=') {
            tokens.push(Token::Symbol("!="));
            i += 2;
        } else if matches!(c, ':' | '=' | '{' | '}' | '[' | ']' | '(' | ')' | ',') {
            tokens.push(Token::Symbol(match c {
                ':' => ":",
                '=' => "=",
                '{' => "{",
                '}' => "}",
                '[' => "[",
                ']' => "]",
                '(' => "(",
                ')' => ")",
                ',' => ",",
                _ => unreachable!(),
            }));
            i += 1;
        } else {
            // Bare word. A leading digit (or minus) may carry an HH:MM colon.
            let start = i;
            let numeric = c.is_ascii_digit() || c == '-';
            while i < chars.len() {
                let ch = chars[i];
                if ch.is_whitespace()
                    || matches!(ch, '"' | '#' | '=' | '{' | '}' | '[' | ']' | '(' | ')' | ',')
                {
                    break;
                }
                if ch == ':' {
                    let keep = numeric
                        && chars.get(i + 1).is_some_and(char::is_ascii_digit)
                        && i > start;
                    if !keep {
                        break;
                    }
                }
                if ch == '!' || (ch == '-' && i > start && chars.get(i + 1) == Some(&'>')) {
                    break;
                }
                i += 1;
            }
            tokens.push(Token::Word(chars[start..i].iter().collect()));
        }
    }
    Ok(tokens)
}

struct Cursor<'a> {
    tokens: &'a [Token],
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, reason: impl Into<String>) -> CleanError {
        CleanError::PlanParse { line: self.line, reason: reason.into() }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect_symbol(&mut self, sym: &str) -> Result<(), CleanError> {
        match self.next() {
            Some(Token::Symbol(s)) if s == sym => Ok(()),
            other => Err(self.err(format!("expected `{sym}`, found {other:?}"))),
        }
    }

    fn expect_word(&mut self, word: &str) -> Result<(), CleanError> {
        match self.next() {
            Some(Token::Word(w)) if w == word => Ok(()),
            other => Err(self.err(format!("expected `{word}`, found {other:?}"))),
        }
    }

    /// Column name: quoted string or bare word.
    fn column(&mut self) -> Result<String, CleanError> {
        match self.next() {
            Some(Token::Quoted(s)) | Some(Token::Word(s)) => Ok(s),
            other => Err(self.err(format!("expected column name, found {other:?}"))),
        }
    }

    fn integer(&mut self) -> Result<i64, CleanError> {
        match self.next() {
            Some(Token::Word(w)) => {
                w.parse::<i64>().map_err(|_| self.err(format!("expected integer, found `{w}`")))
            }
            other => Err(self.err(format!("expected integer, found {other:?}"))),
        }
    }

    fn done(&self) -> bool {
        self.pos >= self.tokens.len()
    }
}

fn parse_atom(cur: &mut Cursor) -> Result<Guard, CleanError> {
    let column = cur.column()?;
    match cur.next() {
        Some(Token::Symbol("=")) => match cur.peek() {
            Some(Token::Word(w)) if w == "missing" => {
                cur.next();
                Ok(Guard::Missing { column })
            }
            _ => Ok(Guard::Equals { column, code: cur.integer()? }),
        },
        Some(Token::Symbol("!=")) => {
            cur.expect_word("missing")?;
            Ok(Guard::Present { column })
        }
        Some(Token::Word(w)) if w == "in" => match cur.next() {
            Some(Token::Symbol("{")) => {
                let mut codes = vec![cur.integer()?];
                loop {
                    match cur.next() {
                        Some(Token::Symbol(",")) => codes.push(cur.integer()?),
                        Some(Token::Symbol("}")) => break,
                        other => return Err(cur.err(format!("expected `,` or `}}`, found {other:?}"))),
                    }
                }
                Ok(Guard::InSet { column, codes })
            }
            Some(Token::Symbol("[")) => {
                let start = cur.next();
                cur.expect_symbol(",")?;
                let end = cur.next();
                cur.expect_symbol(")")?;
                let parse = |tok: Option<Token>| -> Result<u32, CleanError> {
                    let text = tok.as_ref().map(Token::text).unwrap_or("");
                    parse_hhmm(text)
                        .ok_or_else(|| cur.err(format!("expected HH:MM, found `{text}`")))
                };
                Ok(Guard::TimeWindow {
                    column,
                    start_minutes: parse(start)?,
                    end_minutes: parse(end)?,
                })
            }
            other => Err(cur.err(format!("expected `{{` or `[` after `in`, found {other:?}"))),
        },
        other => Err(cur.err(format!("expected `=`, `!=` or `in`, found {other:?}"))),
    }
}

fn parse_rule(cur: &mut Cursor) -> Result<DomainRule, CleanError> {
    let id = cur.column()?;
    cur.expect_symbol(":")?;
    cur.expect_word("if")?;
    let mut guards = vec![parse_atom(cur)?];
    loop {
        match cur.peek() {
            Some(Token::Word(w)) if w == "and" => {
                cur.next();
                guards.push(parse_atom(cur)?);
            }
            _ => break,
        }
    }
    cur.expect_word("then")?;
    let target = cur.column()?;
    cur.expect_symbol(":=")?;
    let assignment = match cur.peek() {
        Some(Token::Word(w)) if w == "col" => {
            cur.next();
            cur.expect_symbol("(")?;
            let source = cur.column()?;
            cur.expect_symbol(")")?;
            Assignment::CopyFrom { column: target, source }
        }
        _ => {
            let code = cur.integer()?;
            if code == MISSING_CODE {
                return Err(cur.err("rule assignments may not write the missing marker"));
            }
            Assignment::Code { column: target, code }
        }
    };
    Ok(DomainRule { id, guards, assignment })
}

pub fn parse_plan(text: &str) -> Result<CleaningPlan, CleanError> {
    let mut plan = CleaningPlan::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let tokens = lex(raw, line_no)?;
        if tokens.is_empty() {
            continue;
        }
        let mut cur = Cursor { tokens: &tokens, pos: 0, line: line_no };
        let head = match cur.next() {
            Some(Token::Word(w)) => w.clone(),
            other => return Err(cur.err(format!("expected directive, found {other:?}"))),
        };
        match head.as_str() {
            "drop" => plan.drop_columns.push(cur.column()?),
            "require" => plan.require_present.push(cur.column()?),
            "recode" => {
                let column = cur.column()?;
                let code = cur.integer()?;
                cur.expect_symbol("->")?;
                let to = cur.integer()?;
                if to != MISSING_CODE {
                    return Err(cur.err("recode target must be -1"));
                }
                plan.recode_unknown.push((column, code));
            }
            "rule" => plan.domain_rules.push(parse_rule(&mut cur)?),
            other => return Err(cur.err(format!("unknown directive `{other}`"))),
        }
        if !cur.done() {
            return Err(cur.err(format!("trailing tokens after directive: {:?}", cur.peek())));
        }
    }
    Ok(plan)
}
