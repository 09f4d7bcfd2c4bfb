//! Line-oriented model file format.
//!
//! ```text
//! # comment
//! genes: x0,x1,x2
//! x0: 0.5 :: x0 & !x1
//! x0: 0.5 :: x0
//! x1: !x0          # single predictor, probability 1
//! x2: 1
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{parse_expression, PbnModel, Predictor};
use crate::error::ModelError;

fn parse_error(line: usize, msg: impl Into<String>) -> ModelError {
    ModelError::Parse { line, msg: msg.into() }
}

/// Parses model text and validates the result.
pub fn parse_model(text: &str) -> Result<PbnModel, ModelError> {
    let mut names: Option<Vec<String>> = None;
    let mut predictors: Vec<Vec<Predictor>> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((head, rest)) = line.split_once(':') else {
            return Err(parse_error(line_no, "expected `<gene>: ...` or `genes: ...`"));
        };
        let head = head.trim();
        if head == "genes" && names.is_none() {
            let declared: Vec<String> = rest.split(',').map(|s| s.trim().to_string()).collect();
            if let Some(bad) = declared.iter().find(|n| !is_identifier(n)) {
                return Err(parse_error(line_no, format!("invalid gene name `{bad}`")));
            }
            predictors = vec![Vec::new(); declared.len()];
            names = Some(declared);
            continue;
        }
        let Some(names) = names.as_ref() else {
            return Err(parse_error(line_no, "predictor line before the `genes:` header"));
        };
        let Some(gene) = names.iter().position(|n| n == head) else {
            return Err(parse_error(line_no, format!("unknown gene `{head}`")));
        };
        let rest = rest.trim();
        let (probability, expr_text) = match rest.split_once("::") {
            Some((p, e)) if p.trim().is_empty() => (1.0, e),
            Some((p, e)) => {
                let p: f64 =
                    p.trim().parse().map_err(|_| parse_error(line_no, format!("invalid probability `{}`", p.trim())))?;
                (p, e)
            }
            None => (1.0, rest),
        };
        let expr = parse_expression(expr_text, names).map_err(|e| parse_error(line_no, e.to_string()))?;
        predictors[gene].push(Predictor::new(expr, probability));
    }

    let Some(names) = names else {
        return Err(parse_error(text.lines().count().max(1), "missing `genes:` header"));
    };
    PbnModel::new(names, predictors)
}

fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Reads and validates a model file.
pub fn load_model(path: impl AsRef<Path>) -> Result<PbnModel, ModelError> {
    let text = fs::read_to_string(path.as_ref())?;
    parse_model(&text)
}

/// Serializes a model in the text format accepted by [`parse_model`].
pub fn write_model(model: &PbnModel) -> String {
    let names = model.gene_names();
    let mut out = String::new();
    let _ = writeln!(out, "genes: {}", names.join(","));
    for (gene, list) in model.all_predictors().iter().enumerate() {
        for p in list {
            let expr = p.expr.display(names);
            if list.len() == 1 && p.selection_probability == 1.0 {
                let _ = writeln!(out, "{}: {expr}", names[gene]);
            } else {
                let _ = writeln!(out, "{}: {} :: {expr}", names[gene], p.selection_probability);
            }
        }
    }
    out
}

pub fn save_model(model: &PbnModel, path: impl AsRef<Path>) -> Result<(), ModelError> {
    fs::write(path.as_ref(), write_model(model))?;
    Ok(())
}
