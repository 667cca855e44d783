//! Runs the active wells for an inlet, pools their rephrasings, annotates
//! them with views and scores them against every active constraint.
//!
//! Each run is a job executed on a background thread; wells complete
//! independently and the pool grows as they do. Scoring, de-duplication and
//! sorting happen when the pool is read.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::constraints::{self, advice_for, Advice, Annotation, Constraint, ConstraintError, ConstraintSpec};
use crate::exec::Execution;
use crate::lm::TokenId;
use crate::model::{ConfigError, Document, DocumentError, InletId, Rephrasing, WellConfig, WellId, WellKind};
use crate::views;
use crate::wells::{Insight, ViewKind, WellContext, WellError, WellRegistry, WellRun, WellServices};

/// Provenance colours, indexed by a hash of the well id.
pub const PALETTE: [&str; 12] = [
    "#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#42d4f4", "#f032e6", "#9a6324",
    "#469990", "#808000", "#000075", "#a9a9a9",
];

pub fn well_color(id: &WellId) -> &'static str {
    let digest = Sha256::digest(id.as_str().as_bytes());
    let n = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
    PALETTE[(n % PALETTE.len() as u64) as usize]
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "camelCase")]
pub enum WellStatus {
    Pending,
    Done,
    Failed {
        reason: String,
        /// The failure came from a language-model backend.
        backend: bool,
    },
    /// Finished after its inlet moved on to a newer generation; output
    /// discarded.
    Stale,
}

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error("no active wells for this inlet")]
    NoActiveWells,
    #[error("well {0} is not configured or not active")]
    InactiveWell(WellId),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("well {well}: {source}")]
    Constraint {
        well: WellId,
        source: WellError,
    },
    #[error("unknown job {0}")]
    UnknownJob(String),
}

/// Which wells a run triggers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RunTarget {
    All,
    Single(WellId),
}

/// One well completion, in arrival order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Arrival {
    pub well_id: WellId,
    pub status: WellStatus,
    pub rephrasings: usize,
}

/// Readable state of a job: statuses, the scored and sorted pool, and the
/// arrivals after the requested cursor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct JobSnapshot {
    pub job_id: String,
    pub inlet_id: InletId,
    pub generation: u64,
    pub wells: BTreeMap<WellId, WellStatus>,
    pub rephrasings: Vec<Rephrasing>,
    pub insights: BTreeMap<WellId, Vec<Insight>>,
    pub constraints: Vec<Constraint>,
    pub views: BTreeSet<ViewKind>,
    /// Number of arrivals so far; pass it back to receive only newer ones.
    pub cursor: usize,
    pub arrivals: Vec<Arrival>,
    pub complete: bool,
}

impl JobSnapshot {
    pub fn any_backend_failure(&self) -> bool {
        self.wells
            .values()
            .any(|s| matches!(s, WellStatus::Failed { backend: true, .. }))
    }
}

struct JobState {
    statuses: BTreeMap<WellId, WellStatus>,
    pool: Vec<Rephrasing>,
    insights: BTreeMap<WellId, Vec<Insight>>,
    arrivals: Vec<Arrival>,
    running: usize,
}

struct Job {
    id: String,
    context: WellContext,
    constraints: Vec<Constraint>,
    views: BTreeSet<ViewKind>,
    configs: Vec<WellConfig>,
    /// Tokens of the text before the inlet, when log-probabilities are
    /// annotated.
    context_ids: Option<Vec<TokenId>>,
    seed: Option<u64>,
    state: Mutex<JobState>,
    idle: Condvar,
}

struct Inner {
    registry: Arc<WellRegistry>,
    services: WellServices,
    jobs: Mutex<HashMap<String, Arc<Job>>>,
    /// Latest job and current generation per inlet.
    inlets: Mutex<HashMap<InletId, (String, u64)>>,
    next_job: AtomicU64,
}

/// Cloneable handle; clones share jobs.
#[derive(Clone)]
pub struct Orchestrator {
    inner: Arc<Inner>,
}

impl Orchestrator {
    pub fn new(registry: Arc<WellRegistry>, services: WellServices) -> Self {
        Self {
            inner: Arc::new(Inner {
                registry,
                services,
                jobs: Mutex::new(HashMap::new()),
                inlets: Mutex::new(HashMap::new()),
                next_job: AtomicU64::new(1),
            }),
        }
    }

    pub fn registry(&self) -> &WellRegistry {
        &self.inner.registry
    }

    pub fn services(&self) -> &WellServices {
        &self.inner.services
    }

    /// Records the document's current inlet generations so that results
    /// from older generations are dropped when they arrive.
    pub fn sync_document(&self, doc: &Document) {
        let mut inlets = self.inner.inlets.lock().unwrap();
        for inlet in doc.inlets() {
            if let Some(entry) = inlets.get_mut(&inlet.id) {
                entry.1 = inlet.generation;
            }
        }
    }

    fn current_generation(&self, inlet: &InletId) -> Option<u64> {
        self.inner.inlets.lock().unwrap().get(inlet).map(|e| e.1)
    }

    /// Configs that take part in runs on `inlet`: active configs selected by
    /// the inlet (all active ones when it selects none), plus every words
    /// well.
    fn active_configs(doc: &Document, inlet: &InletId, configs: &[WellConfig]) -> Result<Vec<WellConfig>, OrchestratorError> {
        let inlet = doc.inlet(inlet)?;
        Ok(configs
            .iter()
            .filter(|c| {
                c.kind.is(WellKind::WORDS)
                    || (c.active
                        && (inlet.active_well_ids.is_empty() || inlet.active_well_ids.contains(&c.well_id)))
            })
            .cloned()
            .collect())
    }

    /// Starts a run. Running all wells begins a new generation of the
    /// inlet; running a single well re-runs it inside the current
    /// generation's job when there is one.
    pub fn run_wells(
        &self,
        doc: &mut Document,
        inlet_id: &InletId,
        configs: &[WellConfig],
        target: RunTarget,
        seed: Option<u64>,
    ) -> Result<String, OrchestratorError> {
        let active = Self::active_configs(doc, inlet_id, configs)?;
        for c in &active {
            self.inner.registry.validate(c)?;
        }
        let to_run: Vec<WellConfig> = match &target {
            RunTarget::All => active.clone(),
            RunTarget::Single(id) => vec![active
                .iter()
                .find(|c| &c.well_id == id)
                .cloned()
                .ok_or_else(|| OrchestratorError::InactiveWell(id.clone()))?],
        };
        if to_run.is_empty() {
            return Err(OrchestratorError::NoActiveWells);
        }

        if let RunTarget::Single(_) = target {
            let current = doc.inlet(inlet_id)?.generation;
            let existing = self.inner.inlets.lock().unwrap().get(inlet_id).cloned();
            if let Some((job_id, generation)) = existing {
                if generation == current {
                    let job = self.job(&job_id)?;
                    self.launch(job, to_run);
                    return Ok(job_id);
                }
            }
        }

        let generation = doc.begin_run(inlet_id)?;
        let slice = doc.slice_context(inlet_id)?;
        let context = WellContext {
            inlet_id: inlet_id.clone(),
            generation,
            slice,
        };
        let services = &self.inner.services;
        let mut constraints = Vec::new();
        for c in &active {
            let well = self.inner.registry.get(&c.kind).expect("validated kind");
            let emitted = well
                .constraints(c, &context, services)
                .map_err(|source| OrchestratorError::Constraint {
                    well: c.well_id.clone(),
                    source,
                })?;
            constraints.extend(emitted);
        }
        let views = views_for(&active, &constraints);
        let context_ids = if views.contains(&ViewKind::LogProb) {
            services.logit.as_ref().and_then(|b| {
                b.tokenize(views::split_context(&context.slice.before).0)
                    .ok()
                    .map(|t| t.iter().map(|t| t.id).collect())
            })
        } else {
            None
        };
        let n = self.inner.next_job.fetch_add(1, AtomicOrdering::SeqCst);
        let job = Arc::new(Job {
            id: format!("job-{n}"),
            context,
            constraints,
            views,
            configs: active,
            context_ids,
            seed,
            state: Mutex::new(JobState {
                statuses: BTreeMap::new(),
                pool: Vec::new(),
                insights: BTreeMap::new(),
                arrivals: Vec::new(),
                running: 0,
            }),
            idle: Condvar::new(),
        });
        self.inner.jobs.lock().unwrap().insert(job.id.clone(), job.clone());
        self.inner
            .inlets
            .lock()
            .unwrap()
            .insert(inlet_id.clone(), (job.id.clone(), generation));
        let id = job.id.clone();
        self.launch(job, to_run);
        Ok(id)
    }

    fn launch(&self, job: Arc<Job>, wells: Vec<WellConfig>) {
        {
            let mut st = job.state.lock().unwrap();
            st.running += 1;
            for w in &wells {
                st.statuses.insert(w.well_id.clone(), WellStatus::Pending);
            }
        }
        let this = self.clone();
        std::thread::spawn(move || {
            let exec = this.inner.services.exec;
            exec.for_each(&wells, |cfg| this.run_one(&job, cfg));
            let mut st = job.state.lock().unwrap();
            st.running -= 1;
            job.idle.notify_all();
        });
    }

    fn run_one(&self, job: &Job, cfg: &WellConfig) {
        let services = &self.inner.services;
        let advice = Advice::merge(job.constraints.iter().map(|c| advice_for(c, &cfg.kind)));
        let well = self.inner.registry.get(&cfg.kind).expect("validated kind");
        let result = well.run(&WellRun {
            config: cfg,
            context: &job.context,
            advice: &advice,
            services,
            seed: job.seed,
        });
        let (status, output) = match result {
            Ok(mut out) => {
                let color = well_color(&cfg.well_id);
                services.exec.for_each_mut(&mut out.rephrasings, |r| {
                    r.color = color.to_owned();
                    r.generation = job.context.generation;
                    self.annotate(job, r);
                });
                (WellStatus::Done, Some(out))
            }
            Err(e) => {
                log::warn!("well {} failed: {e}", cfg.well_id);
                (
                    WellStatus::Failed {
                        reason: e.to_string(),
                        backend: e.is_backend(),
                    },
                    None,
                )
            }
        };
        let stale = self.current_generation(&job.context.inlet_id) != Some(job.context.generation);
        let mut st = job.state.lock().unwrap();
        let (status, count) = match (stale, output) {
            (true, _) => (WellStatus::Stale, 0),
            (false, Some(out)) => {
                let count = out.rephrasings.len();
                st.pool.extend(out.rephrasings);
                st.insights.insert(cfg.well_id.clone(), out.insights);
                (status, count)
            }
            (false, None) => (status, 0),
        };
        st.statuses.insert(cfg.well_id.clone(), status.clone());
        st.arrivals.push(Arrival {
            well_id: cfg.well_id.clone(),
            status,
            rephrasings: count,
        });
        job.idle.notify_all();
    }

    /// Attaches the job's active views. Failures leave the view unset.
    fn annotate(&self, job: &Job, r: &mut Rephrasing) {
        let services = &self.inner.services;
        if job.views.contains(&ViewKind::Pos) {
            views::annotate_pos(r, services.tagger.as_ref());
        }
        if job.views.contains(&ViewKind::Phonemes) {
            views::annotate_phonemes(r, &services.phonology);
        }
        if job.views.contains(&ViewKind::LogProb) && r.total_log_prob.is_none() {
            self.annotate_log_prob(job, r);
        }
    }

    fn annotate_log_prob(&self, job: &Job, r: &mut Rephrasing) {
        let Some(backend) = self.inner.services.logit.as_deref() else {
            return;
        };
        let (head, lead) = views::split_context(&job.context.slice.before);
        let context = match &job.context_ids {
            Some(ids) => ids.clone(),
            None => match backend.tokenize(head) {
                Ok(t) => t.iter().map(|t| t.id).collect(),
                Err(_) => return,
            },
        };
        if let Err(e) = views::annotate_log_probs(r, backend, &context, lead) {
            log::debug!("log-probability annotation failed: {e}");
        }
    }

    /// Scores one rephrasing, annotating on demand when a constraint needs
    /// a missing view. A constraint that still cannot be evaluated scores 0.
    fn score(&self, job: &Job, r: &mut Rephrasing) {
        let services = &self.inner.services;
        let mut scores = BTreeMap::new();
        for c in &job.constraints {
            let s = match constraints::score_constraint(c, r) {
                Ok(s) => s,
                Err(ConstraintError::MissingAnnotation { annotation, .. }) => {
                    match annotation {
                        Annotation::Pos => views::annotate_pos(r, services.tagger.as_ref()),
                        Annotation::Phonemes => views::annotate_phonemes(r, &services.phonology),
                        Annotation::LogProb => self.annotate_log_prob(job, r),
                    }
                    constraints::score_constraint(c, r).unwrap_or(0.0)
                }
                Err(_) => 0.0,
            };
            scores.insert(c.id.clone(), s);
        }
        r.set_scores(scores);
    }

    fn job(&self, id: &str) -> Result<Arc<Job>, OrchestratorError> {
        self.inner
            .jobs
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| OrchestratorError::UnknownJob(id.to_owned()))
    }

    /// Current state of a job with the pool scored, de-duplicated and
    /// sorted. Arrivals are those at index `cursor` and later.
    pub fn snapshot(&self, job_id: &str, cursor: usize) -> Result<JobSnapshot, OrchestratorError> {
        let job = self.job(job_id)?;
        let (mut pool, statuses, insights, arrivals, complete) = {
            let st = job.state.lock().unwrap();
            let complete = st.running == 0
                && st.statuses.values().all(|s| *s != WellStatus::Pending);
            (
                st.pool.clone(),
                st.statuses.clone(),
                st.insights.clone(),
                st.arrivals.clone(),
                complete,
            )
        };
        self.inner
            .services
            .exec
            .for_each_mut(&mut pool, |r| self.score(&job, r));
        Ok(JobSnapshot {
            job_id: job.id.clone(),
            inlet_id: job.context.inlet_id.clone(),
            generation: job.context.generation,
            wells: statuses,
            rephrasings: sort_and_dedupe(pool),
            insights,
            constraints: job.constraints.clone(),
            views: job.views.clone(),
            cursor: arrivals.len(),
            arrivals: arrivals.into_iter().skip(cursor).collect(),
            complete,
        })
    }

    /// Blocks until the job has no pending wells or `timeout` elapses, then
    /// returns its snapshot.
    pub fn wait(&self, job_id: &str, timeout: Duration) -> Result<JobSnapshot, OrchestratorError> {
        let job = self.job(job_id)?;
        let deadline = Instant::now() + timeout;
        {
            let mut st = job.state.lock().unwrap();
            while st.running > 0 || st.statuses.values().any(|s| *s == WellStatus::Pending) {
                let now = Instant::now();
                if now >= deadline {
                    break;
                }
                st = job.idle.wait_timeout(st, deadline - now).unwrap().0;
            }
        }
        self.snapshot(job_id, 0)
    }

    /// The latest job for an inlet.
    pub fn latest_job(&self, inlet: &InletId) -> Option<String> {
        self.inner.inlets.lock().unwrap().get(inlet).map(|e| e.0.clone())
    }

    /// Well configs a job was launched with.
    pub fn job_configs(&self, job_id: &str) -> Result<Vec<WellConfig>, OrchestratorError> {
        Ok(self.job(job_id)?.configs.clone())
    }
}

/// Views to annotate: each view when its well kind is active or a
/// constraint needs it.
fn views_for(active: &[WellConfig], constraints: &[Constraint]) -> BTreeSet<ViewKind> {
    let mut v = BTreeSet::new();
    let kinds: BTreeSet<&str> = active.iter().map(|c| c.kind.as_str()).collect();
    if kinds.contains(WellKind::WORDS) || constraints.iter().any(|c| c.spec.needs() == Some(Annotation::Pos)) {
        v.insert(ViewKind::Pos);
    }
    if kinds.contains(WellKind::CONTEXT)
        || constraints
            .iter()
            .any(|c| matches!(c.spec, ConstraintSpec::LogProbBand(_)))
    {
        v.insert(ViewKind::LogProb);
    }
    if kinds.contains(WellKind::SOUND)
        || constraints
            .iter()
            .any(|c| c.spec.needs() == Some(Annotation::Phonemes))
    {
        v.insert(ViewKind::Phonemes);
    }
    v
}

/// Total order: overall score descending, internal score descending, text
/// ascending.
pub fn pool_order(a: &Rephrasing, b: &Rephrasing) -> std::cmp::Ordering {
    b.overall_score
        .total_cmp(&a.overall_score)
        .then_with(|| b.internal_score.total_cmp(&a.internal_score))
        .then_with(|| a.text.cmp(&b.text))
        .then_with(|| a.well_id.cmp(&b.well_id))
}

/// Collapses entries with identical text, keeping the best-ranked one and
/// the union of provenance, then sorts by [`pool_order`].
pub fn sort_and_dedupe(pool: Vec<Rephrasing>) -> Vec<Rephrasing> {
    let mut by_text: BTreeMap<String, Rephrasing> = BTreeMap::new();
    for r in pool {
        match by_text.get_mut(&r.text) {
            None => {
                by_text.insert(r.text.clone(), r);
            }
            Some(kept) => {
                let mut provenance: BTreeSet<WellId> = kept.provenance.drain(..).collect();
                provenance.extend(r.provenance.iter().cloned());
                if pool_order(&r, kept).is_lt() {
                    *kept = r;
                }
                kept.provenance = provenance.into_iter().collect();
            }
        }
    }
    let mut out: Vec<Rephrasing> = by_text.into_values().collect();
    for r in &mut out {
        r.provenance.sort();
        r.provenance.dedup();
    }
    out.sort_by(pool_order);
    out
}

/// Applies `exec` to score a detached pool against `constraints`, without a
/// job. Missing annotations score 0.
pub fn score_pool(pool: &mut [Rephrasing], constraints: &[Constraint], exec: Execution) {
    exec.for_each_mut(pool, |r| {
        let scores = constraints
            .iter()
            .map(|c| (c.id.clone(), constraints::score_constraint(c, r).unwrap_or(0.0)))
            .collect();
        r.set_scores(scores);
    });
}
