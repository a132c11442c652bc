use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use thiserror::Error;

use super::budget::{secs, BudgetCounters, ComponentTimes};
use super::config::{CampaignConfig, ConfigError, EliteSource, SchedulePhase};
use super::log::{
    read_evaluations, read_generation_lines, Checkpoint, EvaluatedCandidate, EvaluationRecord, FailedCandidate,
    GenerationLine, GenerationRecord, InitRecord, LogError, LogWriter, CONFIG_FILE, SURROGATE_FILE,
};
use super::rng::{stream, Purpose};
use crate::acquisition::{select_for_evaluation, select_uniform_among_top, AcquisitionError};
use crate::embed::{EmbedError, Embedder, EmbeddingVector, Encoder};
use crate::objectives::{EvalError, Objective};
use crate::seqcore::{
    propose_pool, select_from_entries, Alphabet, DatasetError, EvaluationDataset, ScoredSequence, SelectionError,
    SelectionStrategy, Sequence, ALPHABET_SIZE, DEDUP_RETRY_FACTOR,
};
use crate::surrogate::{fit_surrogate, PosteriorPrediction, SurrogateError, SurrogateModel};

/// Minimum dataset size for fitting a surrogate.
pub const MIN_SURROGATE_POINTS: usize = 4;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("evaluator failure: {0}")]
    Evaluator(#[from] EvalError),
    #[error("initialization incomplete: {failed} of {attempted} initial evaluations failed (first: {first}); resume to retry")]
    InitialEvaluation { failed: usize, attempted: usize, first: EvalError },
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Acquisition(#[from] AcquisitionError),
    #[error("cannot resume: {0}")]
    Resume(String),
}

impl EngineError {
    /// True when the campaign stopped because the objective could not be evaluated.
    pub fn is_evaluator_failure(&self) -> bool {
        matches!(self, EngineError::Evaluator(_) | EngineError::InitialEvaluation { .. })
    }
}

/// Result of a finished (or initialization-only) campaign.
#[derive(Debug, Clone)]
pub struct CampaignLog {
    pub config: CampaignConfig,
    pub init: InitRecord,
    pub generations: Vec<GenerationRecord>,
    pub dataset: EvaluationDataset,
    pub counters: BudgetCounters,
    pub surrogate: Option<SurrogateModel>,
    pub output_dir: Option<PathBuf>,
}

impl CampaignLog {
    /// Every evaluated sequence (the population only ever grows).
    pub fn population(&self) -> Vec<Sequence> {
        self.dataset.entries().iter().map(|e| e.sequence.clone()).collect()
    }

    pub fn best(&self) -> Option<&ScoredSequence> {
        self.dataset.best(self.config.objective.direction)
    }

    /// Successfully evaluated sequences of generation `t >= 1`, in evaluation order.
    pub fn evaluated_in(&self, t: usize) -> Vec<Sequence> {
        self.generations
            .iter()
            .filter(|g| g.generation == t)
            .flat_map(|g| g.evaluated.iter().map(|c| c.sequence.clone()))
            .collect()
    }
}

/// Exact counts and per-component wall-clock of a campaign.
pub fn budget_report(log: &CampaignLog) -> BudgetCounters {
    log.counters.clone()
}

/// Sequences to evaluate at initialization plus how many were admitted
/// without a novelty check.
pub(crate) fn initial_candidates(config: &CampaignConfig) -> (Vec<Sequence>, usize) {
    let mut seen = HashSet::new();
    let mut seeds: Vec<Sequence> =
        config.initial_sequences.iter().filter(|s| seen.insert((*s).clone())).cloned().collect();
    if seeds.len() < config.initial_sequences.len() {
        log::warn!("dropped {} duplicate initial sequences", config.initial_sequences.len() - seeds.len());
    }
    if seeds.len() > config.n_init {
        log::warn!(
            "{} initial sequences given, n_init = {}; using the first {}",
            seeds.len(),
            config.n_init,
            config.n_init
        );
        seeds.truncate(config.n_init);
        return (seeds, 0);
    }

    if seeds.is_empty() {
        let mut rng = stream(config.master_seed, 0, Purpose::InitialSequences);
        let cap = DEDUP_RETRY_FACTOR * config.n_init;
        let mut out = Vec::with_capacity(config.n_init);
        let mut attempts = 0;
        let mut fallback = 0;
        while out.len() < config.n_init {
            let len = rng.gen_range(config.mutation.min_length..=config.mutation.max_length);
            let text: String = (0..len).map(|_| Alphabet::residue(rng.gen_range(0..ALPHABET_SIZE)) as char).collect();
            let seq = Sequence::parse(&text).expect("alphabet residues are valid");
            attempts += 1;
            if attempts > cap {
                fallback += 1;
                out.push(seq);
            } else if seen.insert(seq.clone()) {
                out.push(seq);
            }
        }
        return (out, fallback);
    }

    let missing = config.n_init - seeds.len();
    if missing == 0 {
        return (seeds, 0);
    }
    let mut rng = stream(config.master_seed, 0, Purpose::TopUp);
    let pool = propose_pool(&seeds, &config.mutation, missing, |s| seen.contains(s), &mut rng);
    let fallback = pool.fallback_admitted;
    seeds.extend(pool.candidates);
    (seeds, fallback)
}

/// Live campaign: dataset, frozen embedder, current surrogate and counters.
pub struct CampaignState {
    config: CampaignConfig,
    objective: Box<dyn Objective>,
    embedder: Embedder,
    surrogate: Option<SurrogateModel>,
    dataset: EvaluationDataset,
    /// Embedding of each dataset entry, same order.
    embeddings: Vec<EmbeddingVector>,
    generation: usize,
    next_timestamp: u64,
    counters: BudgetCounters,
    init: InitRecord,
    records: Vec<GenerationRecord>,
    writer: Option<LogWriter>,
}

impl std::fmt::Debug for CampaignState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CampaignState")
            .field("generation", &self.generation)
            .field("dataset_size", &self.dataset.len())
            .field("counters", &self.counters)
            .finish_non_exhaustive()
    }
}

/// Builds the objective from the config and initializes the campaign.
pub fn initialize_campaign(config: CampaignConfig) -> Result<CampaignState, EngineError> {
    config.validate()?;
    let objective = config.objective.build()?;
    initialize_with_objective(config, objective)
}

/// Initializes a campaign against an already constructed objective.
///
/// Evaluates the `n_init` initial sequences, fits the embedding projection
/// on them and fits the first surrogate.
pub fn initialize_with_objective(
    config: CampaignConfig,
    objective: Box<dyn Objective>,
) -> Result<CampaignState, EngineError> {
    config.validate()?;
    let writer = match &config.output_dir {
        Some(dir) => Some(LogWriter::create(dir, &config.to_toml_string())?),
        None => None,
    };
    initialize_inner(config, objective, writer, EvaluationDataset::new(), BudgetCounters::default(), 0)
}

fn initialize_inner(
    config: CampaignConfig,
    objective: Box<dyn Objective>,
    mut writer: Option<LogWriter>,
    mut dataset: EvaluationDataset,
    mut counters: BudgetCounters,
    mut next_timestamp: u64,
) -> Result<CampaignState, EngineError> {
    let (candidates, fallback_admitted) = initial_candidates(&config);
    let mut queued = HashSet::new();
    let to_evaluate: Vec<Sequence> =
        candidates.iter().filter(|s| !dataset.contains(s) && queued.insert((*s).clone())).cloned().collect();
    let already = candidates.iter().filter(|s| dataset.contains(s)).count();
    let dedup_shortfall = candidates.len() - to_evaluate.len() - already;
    if dedup_shortfall > 0 {
        log::warn!("initialization: {dedup_shortfall} duplicate candidates will not be evaluated");
        counters.dedup_shortfall += dedup_shortfall as u64;
    }

    let mut timing = ComponentTimes::default();
    let started = Instant::now();
    let results = objective.evaluate_batch(&to_evaluate);
    timing.objective = secs(started.elapsed());
    if let Some(fatal) = results.iter().filter_map(|r| r.as_ref().err()).find(|e| e.is_fatal()) {
        return Err(EngineError::Evaluator(fatal.clone()));
    }

    let mut failures = Vec::new();
    for (seq, result) in to_evaluate.iter().zip(results) {
        let mut record = EvaluationRecord {
            generation: 0,
            sequence: seq.clone(),
            score: None,
            acq_value: None,
            surrogate_mean: None,
            surrogate_std: None,
            timestamp: next_timestamp,
            error: None,
        };
        next_timestamp += 1;
        match result {
            Ok(score) => {
                insert_checked(&mut dataset, seq, score, 0)?;
                counters.objective_evals += 1;
                record.score = Some(score);
            }
            Err(e) => {
                log::warn!("initial evaluation of {seq} failed: {e}");
                counters.objective_failures += 1;
                record.error = Some(e.to_string());
                failures.push(e);
            }
        }
        if let Some(w) = writer.as_mut() {
            w.write_evaluation(&record)?;
        }
    }
    counters.wall_clock.objective += timing.objective;

    if let Some(first) = failures.first().cloned() {
        if let Some(w) = writer.as_mut() {
            w.checkpoint(config.master_seed, false, 0, next_timestamp, &counters, false)?;
        }
        return Err(EngineError::InitialEvaluation { failed: failures.len(), attempted: to_evaluate.len(), first });
    }

    let embed_started = Instant::now();
    let (embedder, embeddings) = build_embedder(&config, &dataset)?;
    timing.embedding = secs(embed_started.elapsed());
    counters.embeddings_computed += embeddings.len() as u64;
    counters.wall_clock.embedding += timing.embedding;

    let mut state = CampaignState {
        config,
        objective,
        embedder,
        surrogate: None,
        dataset,
        embeddings,
        generation: 0,
        next_timestamp,
        counters,
        init: InitRecord::default(),
        records: Vec::new(),
        writer,
    };
    let fit_time = state.refit(0, None, true)?;
    timing.surrogate_fit = fit_time;

    let best = state.dataset.best(state.config.objective.direction);
    state.init = InitRecord {
        n_init: state.config.n_init,
        evaluated: state.dataset.len(),
        failed: 0,
        dedup_shortfall,
        fallback_admitted,
        pca_components: state.embedder.pca().map(|p| p.n_components()),
        pca_rank: state.embedder.pca().map(|p| p.rank),
        refit: state.surrogate.is_some(),
        validation_r2: state.surrogate.as_ref().and_then(|m| m.validation_r2()),
        best_score: best.map(|b| b.score),
        best_sequence: best.map(|b| b.sequence.clone()),
        timing,
    };
    if let Some(w) = state.writer.as_mut() {
        w.write_generation_line(&GenerationLine::Init(state.init.clone()))?;
        w.checkpoint(state.config.master_seed, true, 0, state.next_timestamp, &state.counters, false)?;
    }
    Ok(state)
}

fn insert_checked(
    dataset: &mut EvaluationDataset,
    seq: &Sequence,
    score: f64,
    generation: usize,
) -> Result<(), EngineError> {
    match dataset.insert(seq.clone(), score, generation) {
        Ok(()) => Ok(()),
        Err(DatasetError::NonFinite { .. }) => Err(EngineError::Evaluator(EvalError::NonFiniteScore(seq.clone()))),
        Err(DatasetError::Duplicate(_)) => unreachable!("duplicates are filtered before evaluation"),
    }
}

/// Fits the projection on the initial dataset and embeds every entry.
fn build_embedder(
    config: &CampaignConfig,
    dataset: &EvaluationDataset,
) -> Result<(Embedder, Vec<EmbeddingVector>), EngineError> {
    let encoder = Encoder::from_config(&config.embedding)?;
    let seqs: Vec<Sequence> =
        dataset.entries().iter().filter(|e| e.generation == 0).map(|e| e.sequence.clone()).collect();
    let n_components = config.embedding.pca_components.and_then(|k| {
        let max = seqs.len().saturating_sub(1).min(encoder.raw_dim());
        if max == 0 {
            log::warn!("too few initial sequences for a projection; using raw features");
            None
        } else if k > max {
            log::warn!("pca_components = {k} exceeds the maximum {max} for this data; using {max}");
            Some(max)
        } else {
            Some(k)
        }
    });
    let embedder = Embedder::fit(encoder, &seqs, n_components)?;
    let embeddings = dataset.entries().iter().map(|e| embedder.embed(&e.sequence)).collect::<Result<Vec<_>, _>>()?;
    Ok((embedder, embeddings))
}

impl CampaignState {
    pub fn config(&self) -> &CampaignConfig {
        &self.config
    }

    pub fn dataset(&self) -> &EvaluationDataset {
        &self.dataset
    }

    pub fn surrogate(&self) -> Option<&SurrogateModel> {
        self.surrogate.as_ref()
    }

    pub fn embedder(&self) -> &Embedder {
        &self.embedder
    }

    pub fn counters(&self) -> &BudgetCounters {
        &self.counters
    }

    /// Number of completed generations.
    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn records(&self) -> &[GenerationRecord] {
        &self.records
    }

    pub fn init_record(&self) -> &InitRecord {
        &self.init
    }

    pub fn is_complete(&self) -> bool {
        self.generation >= self.config.total_generations()
    }

    /// Refits on entries up to `upto` (all when `None`) with the stream of
    /// `generation`. Returns the fit time in seconds.
    fn refit(&mut self, generation: usize, upto: Option<usize>, count: bool) -> Result<f64, EngineError> {
        let data: Vec<(EmbeddingVector, f64)> = self
            .dataset
            .entries()
            .iter()
            .zip(&self.embeddings)
            .filter(|(e, _)| upto.is_none_or(|g| e.generation <= g))
            .map(|(e, z)| (z.clone(), e.score))
            .collect();
        if data.len() < MIN_SURROGATE_POINTS {
            log::warn!("only {} data points; no surrogate until at least {MIN_SURROGATE_POINTS}", data.len());
            self.surrogate = None;
            return Ok(0.0);
        }
        let mut rng = stream(self.config.master_seed, generation as u64, Purpose::SurrogateFit);
        let started = Instant::now();
        let model = fit_surrogate(&data, &self.config.surrogate, &mut rng)?;
        let elapsed = secs(started.elapsed());
        if count {
            self.counters.surrogate_fits += 1;
            self.counters.wall_clock.surrogate_fit += elapsed;
        }
        self.surrogate = Some(model);
        Ok(elapsed)
    }

    /// Runs the next scheduled generation; `None` once the schedule is done.
    pub fn next_generation(&mut self) -> Result<Option<&GenerationRecord>, EngineError> {
        let t = self.generation + 1;
        let Some(phase_index) = self.config.phase_at(t) else {
            return Ok(None);
        };
        let phase = self.config.schedule[phase_index].clone();
        run_generation(self, &phase)?;
        Ok(self.records.last())
    }

    /// Closes the log (counters record, final checkpoint, surrogate snapshot).
    pub fn finish(mut self) -> Result<CampaignLog, EngineError> {
        if let Some(w) = self.writer.as_mut() {
            w.write_generation_line(&GenerationLine::Counters(self.counters.clone()))?;
            w.checkpoint(self.config.master_seed, true, self.generation, self.next_timestamp, &self.counters, true)?;
            if let Some(model) = &self.surrogate {
                model.save(&w.dir().join(SURROGATE_FILE))?;
            }
        }
        Ok(self.into_log())
    }

    fn into_log(self) -> CampaignLog {
        CampaignLog {
            output_dir: self.writer.as_ref().map(|w| w.dir().to_path_buf()),
            config: self.config,
            init: self.init,
            generations: self.records,
            dataset: self.dataset,
            counters: self.counters,
            surrogate: self.surrogate,
        }
    }
}

/// Parents for generation `t`.
pub(crate) fn select_parents(
    config: &CampaignConfig,
    dataset: &EvaluationDataset,
    phase: &SchedulePhase,
    t: usize,
) -> Result<Vec<Sequence>, EngineError> {
    let direction = config.objective.direction;
    let mut rng = stream(config.master_seed, t as u64, Purpose::Elites);
    let entries = dataset.entries();
    let mut source: Vec<&ScoredSequence> = match config.elite_source {
        EliteSource::History => entries.iter().collect(),
        EliteSource::LastGeneration => entries.iter().filter(|e| e.generation + 1 == t).collect(),
    };
    if source.is_empty() {
        source = entries.iter().collect();
    }
    let elites =
        select_from_entries(source.iter().copied(), &phase.elite_strategy, phase.elite_k, direction, &mut rng)?;
    if elites.is_empty() {
        log::info!("generation {t}: no entry passes the elite threshold; falling back to top_k");
        return Ok(select_from_entries(
            source.iter().copied(),
            &SelectionStrategy::TopK,
            phase.elite_k,
            direction,
            &mut rng,
        )?);
    }
    Ok(elites)
}

/// Executes one generation of `phase`.
///
/// Order: elites → proposal pool → embed → predict → acquisition → select →
/// evaluate → dataset update → refit. Random draws come from streams keyed
/// by the campaign seed, this generation's index and the purpose of the draw.
/// Non-fatal evaluator errors drop the affected candidates; a lost evaluator
/// aborts the generation without modifying the dataset.
pub fn run_generation(state: &mut CampaignState, phase: &SchedulePhase) -> Result<GenerationRecord, EngineError> {
    let t = state.generation + 1;
    let seed = state.config.master_seed;
    let direction = state.config.objective.direction;
    let phase_index = state.config.phase_at(t).unwrap_or(state.config.schedule.len());
    let phase_start = phase_index < state.config.schedule.len()
        && state.config.schedule[..phase_index].iter().map(|p| p.generations).sum::<usize>() + 1 == t;
    let mut timing = ComponentTimes::default();

    let started = Instant::now();
    let elites = select_parents(&state.config, &state.dataset, phase, t)?;
    let mut rng = stream(seed, t as u64, Purpose::Proposals);
    let dataset = &state.dataset;
    let pool = propose_pool(&elites, &state.config.mutation, phase.k_propose, |s| dataset.contains(s), &mut rng);
    timing.proposal = secs(started.elapsed());

    let started = Instant::now();
    let pool_embeddings = pool.candidates.iter().map(|s| state.embedder.embed(s)).collect::<Result<Vec<_>, _>>()?;
    timing.embedding = secs(started.elapsed());
    let embeddings_computed = pool_embeddings.len() as u64;

    let started = Instant::now();
    let predictions: Option<Vec<PosteriorPrediction>> = match &state.surrogate {
        Some(model) => Some(model.predict_batch(&pool_embeddings)?),
        None => None,
    };
    timing.surrogate_predict = secs(started.elapsed());

    let started = Instant::now();
    let incumbent = state.dataset.best(direction).map(|b| b.score).expect("dataset is non-empty after initialization");
    let values: Option<Vec<f64>> = predictions
        .as_ref()
        .map(|preds| preds.iter().map(|p| phase.acquisition.value(*p, incumbent, direction)).collect());
    let m_select = phase.m_select.min(pool.len());
    let selected: Vec<usize> = match &values {
        Some(values) => match phase.uniform_among_top {
            Some(top) => {
                let mut rng = stream(seed, t as u64, Purpose::AcquisitionSampling);
                select_uniform_among_top(&pool.candidates, values, m_select, top, &mut rng)?
            }
            None => select_for_evaluation(&pool.candidates, values, m_select)?,
        },
        None => (0..m_select).collect(),
    };
    timing.selection = secs(started.elapsed());

    let mut batch_seen = HashSet::new();
    let chosen: Vec<usize> = selected
        .into_iter()
        .filter(|&i| {
            let s = &pool.candidates[i];
            !state.dataset.contains(s) && batch_seen.insert(s.clone())
        })
        .collect();
    let dedup_shortfall = m_select - chosen.len();
    if dedup_shortfall > 0 {
        log::warn!("generation {t}: {dedup_shortfall} selected candidates were already evaluated; skipping them");
    }

    let batch: Vec<Sequence> = chosen.iter().map(|&i| pool.candidates[i].clone()).collect();
    let started = Instant::now();
    let results = state.objective.evaluate_batch(&batch);
    timing.objective = secs(started.elapsed());
    if let Some(fatal) = results.iter().filter_map(|r| r.as_ref().err()).find(|e| e.is_fatal()) {
        return Err(EngineError::Evaluator(fatal.clone()));
    }

    // Nothing below can fail half-way except I/O, so state updates start here.
    state.counters.embeddings_computed += embeddings_computed;
    if predictions.is_some() {
        state.counters.surrogate_predictions += pool.len() as u64;
    }
    state.counters.dedup_shortfall += dedup_shortfall as u64;

    let mut evaluated = Vec::with_capacity(batch.len());
    let mut failures = Vec::new();
    let mut eval_records = Vec::with_capacity(batch.len());
    for (&i, result) in chosen.iter().zip(results) {
        let seq = &pool.candidates[i];
        let pred = predictions.as_ref().map(|p| p[i]);
        let acq = values.as_ref().map(|v| v[i]);
        let mut record = EvaluationRecord {
            generation: t,
            sequence: seq.clone(),
            score: None,
            acq_value: acq,
            surrogate_mean: pred.map(|p| p.mean),
            surrogate_std: pred.map(|p| p.std),
            timestamp: state.next_timestamp,
            error: None,
        };
        state.next_timestamp += 1;
        match result {
            Ok(score) => {
                insert_checked(&mut state.dataset, seq, score, t)?;
                state.embeddings.push(pool_embeddings[i].clone());
                state.counters.objective_evals += 1;
                record.score = Some(score);
                evaluated.push(EvaluatedCandidate {
                    sequence: seq.clone(),
                    score,
                    acq_value: acq,
                    surrogate_mean: record.surrogate_mean,
                    surrogate_std: record.surrogate_std,
                });
            }
            Err(e) => {
                log::warn!("generation {t}: evaluation of {seq} failed: {e}");
                state.counters.objective_failures += 1;
                record.error = Some(e.to_string());
                failures.push(FailedCandidate { sequence: seq.clone(), error: e.to_string() });
            }
        }
        eval_records.push(record);
    }

    let mut refit = t.is_multiple_of(state.config.refit_interval);
    if refit {
        timing.surrogate_fit = state.refit(t, None, true)?;
        refit = state.surrogate.is_some();
    }
    state.generation = t;

    let wc = &mut state.counters.wall_clock;
    wc.objective += timing.objective;
    wc.embedding += timing.embedding;
    wc.surrogate_predict += timing.surrogate_predict;
    wc.proposal += timing.proposal;
    wc.selection += timing.selection;

    let best = state.dataset.best(direction);
    let record = GenerationRecord {
        generation: t,
        phase: phase_index,
        phase_start,
        acquisition: phase.acquisition.name().to_string(),
        k_propose: phase.k_propose,
        m_select: phase.m_select,
        evaluated,
        failures,
        dedup_shortfall,
        fallback_admitted: pool.fallback_admitted,
        elites,
        refit,
        validation_r2: if refit { state.surrogate.as_ref().and_then(|m| m.validation_r2()) } else { None },
        best_score: best.map(|b| b.score),
        best_sequence: best.map(|b| b.sequence.clone()),
        dataset_size: state.dataset.len(),
        timing,
    };

    if let Some(w) = state.writer.as_mut() {
        for r in &eval_records {
            w.write_evaluation(r)?;
        }
        w.write_generation_line(&GenerationLine::Generation(record.clone()))?;
        w.checkpoint(seed, true, t, state.next_timestamp, &state.counters, false)?;
    }
    state.records.push(record.clone());
    Ok(record)
}

/// Runs every phase of the schedule and closes the log.
pub fn run_campaign(config: CampaignConfig) -> Result<CampaignLog, EngineError> {
    let mut state = initialize_campaign(config)?;
    drive(&mut state)?;
    state.finish()
}

/// Like [`run_campaign`] with an already constructed objective.
pub fn run_campaign_with_objective(
    config: CampaignConfig,
    objective: Box<dyn Objective>,
) -> Result<CampaignLog, EngineError> {
    let mut state = initialize_with_objective(config, objective)?;
    drive(&mut state)?;
    state.finish()
}

fn drive(state: &mut CampaignState) -> Result<(), EngineError> {
    while state.next_generation()?.is_some() {
        if let Some(r) = state.records.last() {
            log::info!(
                "generation {} (phase {}): {} evaluated, best {:?}",
                r.generation,
                r.phase,
                r.evaluated.len(),
                r.best_score
            );
        }
    }
    Ok(())
}

/// Continues an interrupted campaign from the checkpoint in `dir`.
pub fn resume_campaign(dir: &Path) -> Result<CampaignLog, EngineError> {
    let mut config = CampaignConfig::load(&dir.join(CONFIG_FILE))?;
    config.output_dir = Some(dir.to_path_buf());
    let objective = config.objective.build()?;
    resume_with_objective(dir, config, objective)
}

/// Rebuilds the state recorded in `dir` and runs the remaining generations.
///
/// Anything logged after the last checkpoint is discarded. The dataset,
/// projection and surrogate are reconstructed exactly, so a resumed run
/// continues as the uninterrupted run would have.
pub fn resume_with_objective(
    dir: &Path,
    mut config: CampaignConfig,
    objective: Box<dyn Objective>,
) -> Result<CampaignLog, EngineError> {
    config.output_dir = Some(dir.to_path_buf());
    config.validate()?;
    let checkpoint = Checkpoint::load(dir)?;
    if checkpoint.master_seed != config.master_seed {
        return Err(EngineError::Resume(format!(
            "checkpoint seed {} does not match config seed {}",
            checkpoint.master_seed, config.master_seed
        )));
    }
    let writer = LogWriter::reopen(dir, &checkpoint)?;
    let records = read_evaluations(dir)?;
    let lines = read_generation_lines(dir)?;

    let mut dataset = EvaluationDataset::new();
    for r in &records {
        if let Some(score) = r.score {
            dataset
                .insert(r.sequence.clone(), score, r.generation)
                .map_err(|e| EngineError::Resume(format!("evaluation log: {e}")))?;
        }
    }

    if !checkpoint.initialized {
        log::info!("resuming an incomplete initialization ({} initial scores on record)", dataset.len());
        let mut state =
            initialize_inner(config, objective, Some(writer), dataset, checkpoint.counters, checkpoint.next_timestamp)?;
        drive(&mut state)?;
        return state.finish();
    }

    let mut init = None;
    let mut generations = Vec::new();
    for line in lines {
        match line {
            GenerationLine::Init(r) => init = Some(r),
            GenerationLine::Generation(r) => generations.push(r),
            GenerationLine::Counters(_) => {}
        }
    }
    let init = init.ok_or_else(|| EngineError::Resume("generation log has no init record".into()))?;
    if generations.len() != checkpoint.completed_generations {
        return Err(EngineError::Resume(format!(
            "checkpoint says {} generations, log has {}",
            checkpoint.completed_generations,
            generations.len()
        )));
    }

    let (embedder, embeddings) = build_embedder(&config, &dataset)?;
    let completed = checkpoint.completed_generations;
    let last_fit = completed - completed % config.refit_interval;
    let mut state = CampaignState {
        config,
        objective,
        embedder,
        surrogate: None,
        dataset,
        embeddings,
        generation: completed,
        next_timestamp: checkpoint.next_timestamp,
        counters: checkpoint.counters.clone(),
        init,
        records: generations,
        writer: Some(writer),
    };
    state.refit(last_fit, Some(last_fit), false)?;

    if checkpoint.finished {
        return Ok(state.into_log());
    }
    drive(&mut state)?;
    state.finish()
}
