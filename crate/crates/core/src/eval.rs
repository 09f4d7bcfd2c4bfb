//! Greedy evaluation of a trained agent over every ordered landmark pair,
//! and comparison against the oracle's minimal lengths.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::agent::{select_action, QNetwork};
use crate::env::{format_interventions, parse_interventions, ControlEnv, EnvConfig, Intervention, Landmarks};
use crate::error::EvalError;
use crate::model::PbnModel;
use crate::oracle::OracleRow;
use crate::pasip::PaRegistry;

pub const EVAL_CSV_HEADER: &str = "source_id,target_id,repeat,success,length,interventions";

#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    pub repeats: usize,
    pub seed: u64,
    pub env: EnvConfig,
    pub max_settles: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { repeats: 10, seed: 0, env: EnvConfig::default(), max_settles: 10 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalRow {
    pub source_id: usize,
    pub target_id: usize,
    pub repeat: usize,
    pub success: bool,
    /// Number of interventions applied.
    pub length: usize,
    pub interventions: Vec<Intervention>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairSummary {
    pub source_id: usize,
    pub target_id: usize,
    pub runs: usize,
    pub successes: usize,
    /// Mean length over successful runs only.
    pub mean_length: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    pub fn success_rate(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().filter(|r| r.success).count() as f64 / self.rows.len() as f64
    }

    /// Mean length over successful runs.
    pub fn mean_length(&self) -> Option<f64> {
        mean(self.rows.iter().filter(|r| r.success).map(|r| r.length))
    }

    /// Successful-run length histogram.
    pub fn histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for r in self.rows.iter().filter(|r| r.success) {
            *h.entry(r.length).or_insert(0) += 1;
        }
        h
    }

    pub fn pairs(&self) -> Vec<PairSummary> {
        summarize(&self.rows)
    }
}

fn mean(values: impl Iterator<Item = usize>) -> Option<f64> {
    let (sum, count) = values.fold((0usize, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum as f64 / count as f64)
}

pub fn summarize(rows: &[EvalRow]) -> Vec<PairSummary> {
    let mut groups: BTreeMap<(usize, usize), Vec<&EvalRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.source_id, r.target_id)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((source_id, target_id), runs)| PairSummary {
            source_id,
            target_id,
            runs: runs.len(),
            successes: runs.iter().filter(|r| r.success).count(),
            mean_length: mean(runs.iter().filter(|r| r.success).map(|r| r.length)),
        })
        .collect()
}

/// Runs one greedy episode from `source` to `target`.
#[allow(clippy::too_many_arguments)]
pub fn run_greedy_episode<R: Rng + ?Sized>(
    params: &QNetwork<f32>,
    model: &PbnModel,
    registry: &PaRegistry,
    landmarks: &Landmarks,
    source: usize,
    target: usize,
    config: &EvalConfig,
    rng: &mut R,
) -> Result<(bool, Vec<Intervention>), EvalError> {
    let env_config = EnvConfig { detect: config.env.detect && landmarks.grows(), ..config.env.clone() };
    let mut env = ControlEnv::new(model, registry.clone(), env_config);
    let mut obs = env.reset(landmarks.problem(source, target)?, rng)?;
    let mut applied = Vec::new();
    loop {
        let action = select_action(params, &obs, 0.0, rng, config.env.max_flips);
        let out = env.step(&action, rng)?;
        applied.push(action);
        obs = out.observation;
        if out.done {
            return Ok((out.success, applied));
        }
        if !out.settled {
            for _ in 0..config.max_settles {
                let settled = env.settle(rng);
                obs = settled.observation;
                if settled.settled || settled.done {
                    break;
                }
            }
            if env.episode().done {
                return Ok((env.episode().success, applied));
            }
            if !env.at_control_point() {
                return Ok((false, applied));
            }
        }
    }
}

/// Greedy (epsilon = 0) evaluation over all ordered landmark pairs. Each pair
/// gets its own random stream derived from the seed, so results do not
/// depend on scheduling.
pub fn evaluate(
    params: &QNetwork<f32>,
    model: &PbnModel,
    registry: &PaRegistry,
    landmarks: &Landmarks,
    config: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    let expected = 2 * model.gene_count();
    if params.shape().inputs != expected {
        return Err(EvalError::InputMismatch { expected: params.shape().inputs, found: expected });
    }
    let pairs = landmarks.pairs();
    let per_pair: Vec<Result<Vec<EvalRow>, EvalError>> = pairs
        .par_iter()
        .enumerate()
        .map(|(index, &(source, target))| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(index as u64);
            (0..config.repeats)
                .map(|repeat| {
                    let (success, interventions) =
                        run_greedy_episode(params, model, registry, landmarks, source, target, config, &mut rng)?;
                    Ok(EvalRow {
                        source_id: source,
                        target_id: target,
                        repeat,
                        success,
                        length: interventions.len(),
                        interventions,
                    })
                })
                .collect()
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_pair {
        rows.extend(r?);
    }
    Ok(EvalReport { rows })
}

pub fn write_eval_csv(rows: &[EvalRow]) -> String {
    let mut out = String::from(EVAL_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.source_id,
            r.target_id,
            r.repeat,
            u8::from(r.success),
            r.length,
            format_interventions(&r.interventions)
        ));
    }
    out
}

pub fn parse_eval_csv(text: &str) -> Result<Vec<EvalRow>, EvalError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == EVAL_CSV_HEADER => {}
        _ => return Err(EvalError::Csv { line: 1, msg: format!("expected header `{EVAL_CSV_HEADER}`") }),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
        let err = |msg: String| EvalError::Csv { line: i + 1, msg };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(err(format!("expected 6 fields, found {}", f.len())));
        }
        let num = |s: &str| s.trim().parse::<usize>().map_err(|_| err(format!("bad integer `{s}`")));
        let success = match f[3].trim() {
            "1" => true,
            "0" => false,
            other => return Err(err(format!("bad success flag `{other}`"))),
        };
        rows.push(EvalRow {
            source_id: num(f[0])?,
            target_id: num(f[1])?,
            repeat: num(f[2])?,
            success,
            length: num(f[4])?,
            interventions: parse_interventions(f[5]).map_err(err)?,
        });
    }
    Ok(rows)
}

pub fn write_histogram_csv(histogram: &BTreeMap<usize, usize>) -> String {
    let mut out = String::from("length,count\n");
    for (len, count) in histogram {
        out.push_str(&format!("{len},{count}\n"));
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct OverheadEntry {
    pub source_id: usize,
    pub target_id: usize,
    pub agent_mean_length: Option<f64>,
    pub oracle_length: usize,
}

impl OverheadEntry {
    pub fn ratio(&self) -> Option<f64> {
        let agent = self.agent_mean_length?;
        (self.oracle_length > 0).then(|| agent / self.oracle_length as f64)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub entries: Vec<OverheadEntry>,
    pub warnings: Vec<String>,
}

impl Comparison {
    /// Mean agent length over pairs with at least one success.
    pub fn mean_agent_length(&self) -> Option<f64> {
        let lengths: Vec<f64> = self.entries.iter().filter_map(|e| e.agent_mean_length).collect();
        (!lengths.is_empty()).then(|| lengths.iter().sum::<f64>() / lengths.len() as f64)
    }

    /// Mean oracle length over the same pairs.
    pub fn mean_oracle_length(&self) -> Option<f64> {
        let lengths: Vec<f64> =
            self.entries.iter().filter(|e| e.agent_mean_length.is_some()).map(|e| e.oracle_length as f64).collect();
        (!lengths.is_empty()).then(|| lengths.iter().sum::<f64>() / lengths.len() as f64)
    }

    pub fn to_csv(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
        let mut out = String::from("source_id,target_id,agent_mean_length,oracle_length,ratio\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.source_id,
                e.target_id,
                fmt(e.agent_mean_length),
                e.oracle_length,
                fmt(e.ratio())
            ));
        }
        out
    }
}

/// Joins evaluation rows with oracle lengths per pair. Pairs missing from
/// the oracle output (unreachable) are skipped with a warning.
pub fn compare(eval: &[EvalRow], oracle: &[OracleRow]) -> Comparison {
    let lengths: BTreeMap<(usize, usize), usize> =
        oracle.iter().map(|r| ((r.source_id, r.target_id), r.min_length)).collect();
    let mut entries = Vec::new();
    let mut warnings = Vec::new();
    for pair in summarize(eval) {
        match lengths.get(&(pair.source_id, pair.target_id)) {
            Some(&oracle_length) => entries.push(OverheadEntry {
                source_id: pair.source_id,
                target_id: pair.target_id,
                agent_mean_length: pair.mean_length,
                oracle_length,
            }),
            None => warnings.push(format!(
                "pair {} -> {} has no oracle strategy (unreachable); excluded",
                pair.source_id, pair.target_id
            )),
        }
    }
    Comparison { entries, warnings }
}
