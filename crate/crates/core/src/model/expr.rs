//! Boolean predictor expressions and their text syntax.
//!
//! Grammar (whitespace is insignificant):
//!
//! ```text
//! expr   := term ('|' term)*
//! term   := factor ('&' factor)*
//! factor := '!' factor | '(' expr ')' | name | '0' | '1'
//! ```

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::state::NetworkState;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BooleanExpr {
    Const(bool),
    Var(usize),
    Not(Box<BooleanExpr>),
    And(Vec<BooleanExpr>),
    Or(Vec<BooleanExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("syntax error at column {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown gene `{name}` at column {pos}")]
    UnknownGene { name: String, pos: usize },
}

impl BooleanExpr {
    pub fn var(index: usize) -> Self {
        BooleanExpr::Var(index)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: BooleanExpr) -> Self {
        BooleanExpr::Not(Box::new(inner))
    }

    pub fn evaluate(&self, state: &NetworkState) -> bool {
        match self {
            BooleanExpr::Const(value) => *value,
            BooleanExpr::Var(gene) => state.get(*gene),
            BooleanExpr::Not(inner) => !inner.evaluate(state),
            BooleanExpr::And(items) => items.iter().all(|e| e.evaluate(state)),
            BooleanExpr::Or(items) => items.iter().any(|e| e.evaluate(state)),
        }
    }

    /// Gene indices appearing in the expression (its parent set).
    pub fn parents(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<usize>) {
        match self {
            BooleanExpr::Const(_) => {}
            BooleanExpr::Var(gene) => {
                out.insert(*gene);
            }
            BooleanExpr::Not(inner) => inner.collect_vars(out),
            BooleanExpr::And(items) | BooleanExpr::Or(items) => {
                items.iter().for_each(|e| e.collect_vars(out))
            }
        }
    }

    pub fn max_var(&self) -> Option<usize> {
        self.parents().into_iter().next_back()
    }

    /// Renders the expression using `names` for variables, parenthesizing
    /// only where needed for [`parse_expression`] to rebuild the same tree.
    pub fn display<'a>(&'a self, names: &'a [String]) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, names }
    }
}

pub struct ExprDisplay<'a> {
    expr: &'a BooleanExpr,
    names: &'a [String],
}

impl ExprDisplay<'_> {
    fn write(&self, expr: &BooleanExpr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match expr {
            BooleanExpr::Const(value) => f.write_str(if *value { "1" } else { "0" }),
            BooleanExpr::Var(gene) => match self.names.get(*gene) {
                Some(name) => f.write_str(name),
                None => write!(f, "x{gene}"),
            },
            BooleanExpr::Not(inner) => {
                f.write_str("!")?;
                self.write_wrapped(inner, matches!(**inner, BooleanExpr::And(_) | BooleanExpr::Or(_)), f)
            }
            BooleanExpr::And(items) => {
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" & ")?;
                    }
                    let wrap = matches!(item, BooleanExpr::And(_) | BooleanExpr::Or(_));
                    self.write_wrapped(item, wrap, f)?;
                }
                Ok(())
            }
            BooleanExpr::Or(items) => {
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    self.write_wrapped(item, matches!(item, BooleanExpr::Or(_)), f)?;
                }
                Ok(())
            }
        }
    }

    fn write_wrapped(&self, expr: &BooleanExpr, wrap: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if wrap {
            f.write_str("(")?;
            self.write(expr, f)?;
            f.write_str(")")
        } else {
            self.write(expr, f)
        }
    }
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(self.expr, f)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Not,
    And,
    Or,
    Open,
    Close,
    Const(bool),
    Name(String),
}

fn tokenize(text: &str) -> Result<Vec<(Token, usize)>, ExprError> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = i + 1;
        match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '!' => tokens.push((Token::Not, pos)),
            '&' => tokens.push((Token::And, pos)),
            '|' => tokens.push((Token::Or, pos)),
            '(' => tokens.push((Token::Open, pos)),
            ')' => tokens.push((Token::Close, pos)),
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let token = match word.as_str() {
                    "0" => Token::Const(false),
                    "1" => Token::Const(true),
                    _ if word.chars().next().is_some_and(|c| c.is_ascii_digit()) => {
                        return Err(ExprError::Syntax {
                            pos,
                            msg: format!("`{word}` is neither a constant nor a gene name"),
                        })
                    }
                    _ => Token::Name(word),
                };
                tokens.push((token, pos));
                continue;
            }
            other => {
                return Err(ExprError::Syntax { pos, msg: format!("unexpected character `{other}`") })
            }
        }
        i += 1;
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<(Token, usize)>,
    cursor: usize,
    names: &'a [String],
    end_pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.cursor).map(|(t, _)| t)
    }

    fn pos(&self) -> usize {
        self.tokens.get(self.cursor).map_or(self.end_pos, |(_, p)| *p)
    }

    fn expr(&mut self) -> Result<BooleanExpr, ExprError> {
        let mut items = vec![self.term()?];
        while self.peek() == Some(&Token::Or) {
            self.cursor += 1;
            items.push(self.term()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { BooleanExpr::Or(items) })
    }

    fn term(&mut self) -> Result<BooleanExpr, ExprError> {
        let mut items = vec![self.factor()?];
        while self.peek() == Some(&Token::And) {
            self.cursor += 1;
            items.push(self.factor()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { BooleanExpr::And(items) })
    }

    fn factor(&mut self) -> Result<BooleanExpr, ExprError> {
        let pos = self.pos();
        let Some((token, _)) = self.tokens.get(self.cursor).cloned() else {
            return Err(ExprError::Syntax { pos, msg: "unexpected end of expression".into() });
        };
        self.cursor += 1;
        match token {
            Token::Not => Ok(BooleanExpr::not(self.factor()?)),
            Token::Open => {
                let inner = self.expr()?;
                if self.peek() != Some(&Token::Close) {
                    return Err(ExprError::Syntax { pos: self.pos(), msg: "expected `)`".into() });
                }
                self.cursor += 1;
                Ok(inner)
            }
            Token::Const(value) => Ok(BooleanExpr::Const(value)),
            Token::Name(name) => match self.names.iter().position(|n| *n == name) {
                Some(index) => Ok(BooleanExpr::Var(index)),
                None => Err(ExprError::UnknownGene { name, pos }),
            },
            other => Err(ExprError::Syntax { pos, msg: format!("unexpected token {other:?}") }),
        }
    }
}

/// Parses `text` against the declared gene names (`!` binds tighter than
/// `&`, which binds tighter than `|`).
pub fn parse_expression(text: &str, gene_names: &[String]) -> Result<BooleanExpr, ExprError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, cursor: 0, names: gene_names, end_pos: text.chars().count() + 1 };
    let expr = parser.expr()?;
    if parser.cursor != parser.tokens.len() {
        return Err(ExprError::Syntax { pos: parser.pos(), msg: "trailing input".into() });
    }
    Ok(expr)
}
