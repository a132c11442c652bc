//! A plain genetic algorithm over the same operators and random streams.
//!
//! Every proposal is evaluated; there is no embedding, surrogate or
//! acquisition step. With `k_propose = m_select` the engine must reproduce
//! this trajectory exactly.

use std::collections::HashSet;

use super::campaign::{initial_candidates, select_parents, EngineError};
use super::config::CampaignConfig;
use super::rng::{stream, Purpose};
use crate::objectives::{EvalError, Objective};
use crate::seqcore::{propose_pool, EvaluationDataset, Sequence};

/// Successfully evaluated sequences per generation (index 0 = initialization).
pub fn reference_ga(config: &CampaignConfig, objective: &dyn Objective) -> Result<Vec<Vec<Sequence>>, EngineError> {
    config.validate()?;
    let mut dataset = EvaluationDataset::new();
    let mut history = Vec::with_capacity(config.total_generations() + 1);

    let (candidates, _) = initial_candidates(config);
    history.push(evaluate_new(&mut dataset, objective, candidates, 0)?);

    let mut t = 0;
    for phase in &config.schedule {
        for _ in 0..phase.generations {
            t += 1;
            let elites = select_parents(config, &dataset, phase, t)?;
            let mut rng = stream(config.master_seed, t as u64, Purpose::Proposals);
            let pool = propose_pool(&elites, &config.mutation, phase.k_propose, |s| dataset.contains(s), &mut rng);
            let batch: Vec<Sequence> = pool.candidates.into_iter().take(phase.m_select).collect();
            history.push(evaluate_new(&mut dataset, objective, batch, t)?);
        }
    }
    Ok(history)
}

fn evaluate_new(
    dataset: &mut EvaluationDataset,
    objective: &dyn Objective,
    candidates: Vec<Sequence>,
    generation: usize,
) -> Result<Vec<Sequence>, EngineError> {
    let mut seen = HashSet::new();
    let batch: Vec<Sequence> =
        candidates.into_iter().filter(|s| !dataset.contains(s) && seen.insert(s.clone())).collect();
    let mut added = Vec::with_capacity(batch.len());
    for (seq, result) in batch.iter().zip(objective.evaluate_batch(&batch)) {
        match result {
            Ok(score) => {
                dataset
                    .insert(seq.clone(), score, generation)
                    .map_err(|_| EngineError::Evaluator(EvalError::NonFiniteScore(seq.clone())))?;
                added.push(seq.clone());
            }
            Err(e) if e.is_fatal() => return Err(e.into()),
            Err(_) => {}
        }
    }
    Ok(added)
}
