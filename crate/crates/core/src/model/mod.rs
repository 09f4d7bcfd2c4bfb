//! Boolean / probabilistic Boolean network model.

mod expr;
mod format;

use std::collections::HashSet;
use std::fmt;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use expr::{parse_expression, BooleanExpr, ExprDisplay, ExprError};
pub use format::{load_model, parse_model, save_model, write_model};

use crate::error::ModelError;
use crate::state::{NetworkState, MAX_GENES};

/// Absolute tolerance on per-gene selection-probability sums.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-9;

/// One candidate update function of a gene with its selection probability.
#[derive(Clone, Debug, PartialEq)]
pub struct Predictor {
    pub expr: BooleanExpr,
    pub selection_probability: f64,
}

impl Predictor {
    pub fn new(expr: BooleanExpr, selection_probability: f64) -> Self {
        Self { expr, selection_probability }
    }
}

/// A single problem found by [`PbnModel::validate`].
#[derive(Clone, Debug, PartialEq)]
pub enum ValidationIssue {
    NoGenes,
    TooManyGenes { count: usize },
    DuplicateGeneName { name: String },
    GeneCountMismatch { names: usize, predictor_lists: usize },
    NoPredictors { gene: usize },
    NonPositiveProbability { gene: usize, predictor: usize, value: f64 },
    ProbabilitySum { gene: usize, sum: f64 },
    VariableOutOfRange { gene: usize, predictor: usize, variable: usize },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::NoGenes => write!(f, "model declares no genes"),
            ValidationIssue::TooManyGenes { count } => {
                write!(f, "model declares {count} genes, at most {MAX_GENES} are supported")
            }
            ValidationIssue::DuplicateGeneName { name } => write!(f, "duplicate gene name `{name}`"),
            ValidationIssue::GeneCountMismatch { names, predictor_lists } => {
                write!(f, "{names} gene names but {predictor_lists} predictor lists")
            }
            ValidationIssue::NoPredictors { gene } => write!(f, "gene {gene}: no predictor functions"),
            ValidationIssue::NonPositiveProbability { gene, predictor, value } => {
                write!(f, "gene {gene}, predictor {predictor}: non-positive probability {value}")
            }
            ValidationIssue::ProbabilitySum { gene, sum } => {
                write!(f, "gene {gene}: selection probabilities sum to {sum}, expected 1")
            }
            ValidationIssue::VariableOutOfRange { gene, predictor, variable } => {
                write!(f, "gene {gene}, predictor {predictor}: variable out of range (index {variable})")
            }
        }
    }
}

/// A probabilistic Boolean network: each gene owns one or more predictors
/// with selection probabilities summing to one. With one predictor per gene
/// the model is a plain Boolean network.
#[derive(Clone, Debug, PartialEq)]
pub struct PbnModel {
    gene_names: Vec<String>,
    predictors: Vec<Vec<Predictor>>,
}

impl PbnModel {
    /// Builds and validates a model.
    pub fn new(gene_names: Vec<String>, predictors: Vec<Vec<Predictor>>) -> Result<Self, ModelError> {
        let model = Self::new_unchecked(gene_names, predictors);
        model.validate().map_err(ModelError::Validation)?;
        Ok(model)
    }

    /// Builds a model without validation; see [`PbnModel::validate`].
    pub fn new_unchecked(gene_names: Vec<String>, predictors: Vec<Vec<Predictor>>) -> Self {
        Self { gene_names, predictors }
    }

    pub fn validate(&self) -> Result<(), Vec<ValidationIssue>> {
        let mut issues = Vec::new();
        let n = self.gene_names.len();
        if n == 0 {
            issues.push(ValidationIssue::NoGenes);
        }
        if n > MAX_GENES {
            issues.push(ValidationIssue::TooManyGenes { count: n });
        }
        let mut seen = HashSet::new();
        for name in &self.gene_names {
            if !seen.insert(name) {
                issues.push(ValidationIssue::DuplicateGeneName { name: name.clone() });
            }
        }
        if self.predictors.len() != n {
            issues.push(ValidationIssue::GeneCountMismatch { names: n, predictor_lists: self.predictors.len() });
        }
        for (gene, list) in self.predictors.iter().enumerate() {
            if list.is_empty() {
                issues.push(ValidationIssue::NoPredictors { gene });
                continue;
            }
            for (j, p) in list.iter().enumerate() {
                if !(p.selection_probability > 0.0) {
                    issues.push(ValidationIssue::NonPositiveProbability {
                        gene,
                        predictor: j,
                        value: p.selection_probability,
                    });
                }
                if let Some(variable) = p.expr.parents().into_iter().find(|&v| v >= n) {
                    issues.push(ValidationIssue::VariableOutOfRange { gene, predictor: j, variable });
                }
            }
            let sum: f64 = list.iter().map(|p| p.selection_probability).sum();
            if (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
                issues.push(ValidationIssue::ProbabilitySum { gene, sum });
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(issues)
        }
    }

    pub fn gene_count(&self) -> usize {
        self.gene_names.len()
    }

    pub fn gene_names(&self) -> &[String] {
        &self.gene_names
    }

    pub fn predictors(&self, gene: usize) -> &[Predictor] {
        &self.predictors[gene]
    }

    pub fn all_predictors(&self) -> &[Vec<Predictor>] {
        &self.predictors
    }

    /// True when every gene has exactly one predictor.
    pub fn is_bn(&self) -> bool {
        self.predictors.iter().all(|list| list.len() == 1)
    }

    /// Number of states, `2^n`.
    pub fn state_count(&self) -> u64 {
        1u64 << self.gene_count()
    }

    pub fn state(&self, index: u64) -> NetworkState {
        NetworkState::from_index(self.gene_count(), index)
    }
}

/// The four-gene reference PBN shipped as `models/example1.pbn`: fixed
/// points `0000`, `0101` and the cyclic attractor `{1000, 1010}`.
pub fn example1() -> PbnModel {
    parse_model(include_str!("../../../../models/example1.pbn")).expect("bundled model is valid")
}

/// Generates a random model for tests and benchmarks.
///
/// Each predictor reads a random subset of at most `max_parents` genes and
/// combines their (possibly negated) literals with random `&`/`|`
/// operators. Selection probabilities are uniform. Deterministic in `seed`.
pub fn random_model(n: usize, max_parents: usize, predictors_per_gene: usize, seed: u64) -> PbnModel {
    assert!(n >= 1 && n <= MAX_GENES, "gene count {n} out of range");
    assert!(max_parents >= 1 && max_parents <= n, "max_parents must be in 1..=n");
    assert!(predictors_per_gene >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    let probability = 1.0 / predictors_per_gene as f64;
    let genes: Vec<usize> = (0..n).collect();
    let predictors = (0..n)
        .map(|_| {
            (0..predictors_per_gene)
                .map(|_| {
                    let k = rng.random_range(1..=max_parents);
                    let parents: Vec<usize> = genes.choose_multiple(&mut rng, k).copied().collect();
                    Predictor::new(random_formula(&parents, &mut rng), probability)
                })
                .collect()
        })
        .collect();
    PbnModel::new_unchecked(names, predictors)
}

fn random_formula<R: Rng>(parents: &[usize], rng: &mut R) -> BooleanExpr {
    let literal = |gene: usize, rng: &mut R| {
        if rng.random_bool(0.5) {
            BooleanExpr::not(BooleanExpr::var(gene))
        } else {
            BooleanExpr::var(gene)
        }
    };
    let mut acc = literal(parents[0], rng);
    for &gene in &parents[1..] {
        let lit = literal(gene, rng);
        let conjunction = rng.random_bool(0.5);
        acc = match (acc, conjunction) {
            (BooleanExpr::And(mut items), true) => {
                items.push(lit);
                BooleanExpr::And(items)
            }
            (BooleanExpr::Or(mut items), false) => {
                items.push(lit);
                BooleanExpr::Or(items)
            }
            (other, true) => BooleanExpr::And(vec![other, lit]),
            (other, false) => BooleanExpr::Or(vec![other, lit]),
        };
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn flags_each_violation() {
        let model = PbnModel::new_unchecked(
            names(2),
            vec![
                vec![
                    Predictor::new(BooleanExpr::var(0), 1.1),
                    Predictor::new(BooleanExpr::var(1), -0.1),
                ],
                vec![Predictor::new(BooleanExpr::var(2), 1.0)],
            ],
        );
        let issues = model.validate().unwrap_err();
        assert_eq!(issues.len(), 2);
        assert!(issues.iter().any(|i| i.to_string().contains("non-positive probability")));
        assert!(issues.iter().any(|i| i.to_string().contains("variable out of range")));
    }

    #[test]
    fn probability_sum_tolerance() {
        let model = |p: f64| {
            PbnModel::new_unchecked(
                names(1),
                vec![vec![
                    Predictor::new(BooleanExpr::var(0), p),
                    Predictor::new(BooleanExpr::Const(true), 1.0 - p + 1e-10),
                ]],
            )
        };
        assert!(model(0.3).validate().is_ok());
        let bad = PbnModel::new_unchecked(
            names(1),
            vec![vec![Predictor::new(BooleanExpr::var(0), 0.5), Predictor::new(BooleanExpr::var(0), 0.4)]],
        );
        assert!(matches!(bad.validate().unwrap_err()[..], [ValidationIssue::ProbabilitySum { gene: 0, .. }]));
    }

    #[test]
    fn random_models_are_valid_and_deterministic() {
        for seed in 0..20 {
            let bn = random_model(7, 3, 1, seed);
            assert!(bn.validate().is_ok());
            assert!(bn.is_bn());
            let pbn = random_model(7, 3, 3, seed);
            assert!(pbn.validate().is_ok());
            assert!(!pbn.is_bn());
            assert!(pbn.all_predictors().iter().all(|l| l.len() == 3));
            for list in pbn.all_predictors() {
                for p in list {
                    assert!(p.expr.parents().len() <= 3);
                }
            }
            assert_eq!(random_model(7, 3, 3, seed), pbn);
        }
        assert_ne!(random_model(7, 3, 1, 1), random_model(7, 3, 1, 2));
    }
}
