//! The repair driver: a FIFO queue of methods with pending mutations, each
//! explored by iterating mutation vectors, with optional pruning jumps
//! driven by variabilization feedback.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interp::{sieve, Input, InputPool, SieveResult};
use crate::lang::{method_to_string, Method, Program, StmtId};
use crate::localize::{annotate, localize, LocalizeError, LocalizeOptions};
use crate::mutate::{apply, mutant_hash, Catalog, MutantId, Provenance, VectorIter};
use crate::prune::{get_feedback, PruneError};
use crate::scope::Scope;
use crate::verify::{accept, detect_many, Acceptance, Detection, VerifyError, VerifyOptions};

#[derive(Debug, Error)]
pub enum RepairError {
    #[error("no method named `{0}`")]
    NoMethod(String),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Localize(#[from] LocalizeError),
    #[error(transparent)]
    Prune(#[from] PruneError),
    #[error("no mutable statements after localization")]
    NothingToMutate,
}

/// Where the per-statement budgets come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Localization {
    /// Budgets written in the source.
    Annotations,
    /// Explicit budgets, e.g. the ground truth of a seeded case.
    Oracle(BTreeMap<StmtId, u32>),
    /// Statements blamed by unsat cores, each given `budget`.
    UnsatCore { budget: u32, threshold: f64 },
}

#[derive(Clone, Debug)]
pub struct RepairConfig {
    pub scope: Scope,
    pub max_depth: usize,
    pub prune: bool,
    pub catalog: Catalog,
    pub localization: Localization,
    /// Counterexamples gathered before the search starts.
    pub initial_cexs: usize,
    pub seed: u64,
    pub timeout: Option<Duration>,
    pub conflict_budget: Option<u64>,
    /// Keep exploring after the first fix; every fix is recorded.
    pub explore_all: bool,
    /// Record the id of every generated candidate.
    pub collect_ids: bool,
}

impl Default for RepairConfig {
    fn default() -> Self {
        RepairConfig {
            scope: Scope::default(),
            max_depth: 4,
            prune: true,
            catalog: Catalog::default(),
            localization: Localization::Annotations,
            initial_cexs: 3,
            seed: 0,
            timeout: None,
            conflict_budget: None,
            explore_all: false,
            collect_ids: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Fixed,
    NotFixable,
    Timeout,
    NonExhaustive,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Fixed => 0,
            Outcome::NotFixable => 1,
            Outcome::Timeout | Outcome::NonExhaustive => 2,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub generated: u64,
    pub sieved: u64,
    pub rejected: u64,
    pub accepted: u64,
    pub duplicates: u64,
    /// Vectors jumped over by pruning.
    pub pruned_skipped: u64,
    pub depth_skipped: u64,
    pub bases: u64,
}

impl Counters {
    /// Distinct candidates that were run or verified.
    pub fn visited(&self) -> u64 {
        self.sieved + self.rejected + self.accepted
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseStats {
    pub queries: u64,
    pub millis: f64,
}

impl PhaseStats {
    fn add(&mut self, t: Instant, queries: u64) {
        self.queries += queries;
        self.millis += t.elapsed().as_secs_f64() * 1000.0;
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SatStats {
    pub detect: PhaseStats,
    pub localize: PhaseStats,
    pub accept: PhaseStats,
    pub feedback: PhaseStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fix {
    pub source: String,
    pub provenance: Provenance,
    #[serde(skip)]
    pub method: Option<Method>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepairReport {
    pub method: String,
    pub outcome: Outcome,
    pub already_correct: bool,
    pub fix: Option<Fix>,
    /// Further fixes, only when exploring past the first one.
    pub other_fixes: Vec<Fix>,
    pub counters: Counters,
    pub sat: SatStats,
    /// Pool size after each change.
    pub pool_sizes: Vec<usize>,
    pub budgets: BTreeMap<StmtId, u32>,
    pub feedback_log: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub mutant_ids: Vec<String>,
    /// Failing inputs gathered during the search.
    #[serde(skip)]
    pub pool: Vec<Input>,
    pub millis: f64,
}

impl RepairReport {
    fn new(method: &str) -> RepairReport {
        RepairReport {
            method: method.to_string(),
            outcome: Outcome::NotFixable,
            already_correct: false,
            fix: None,
            other_fixes: Vec::new(),
            counters: Counters::default(),
            sat: SatStats::default(),
            pool_sizes: Vec::new(),
            budgets: BTreeMap::new(),
            feedback_log: Vec::new(),
            mutant_ids: Vec::new(),
            pool: Vec::new(),
            millis: 0.0,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs detection, localization and the mutation search on one method.
pub fn repair(prog: &Program, name: &str, cfg: &RepairConfig) -> Result<RepairReport, RepairError> {
    let start = Instant::now();
    let m = prog
        .method(name)
        .ok_or_else(|| RepairError::NoMethod(name.to_string()))?;
    let mut report = RepairReport::new(name);
    let vopts = VerifyOptions {
        conflict_budget: cfg.conflict_budget,
        seed: cfg.seed,
    };

    let t = Instant::now();
    let (cexs, detection) = detect_many(prog, m, cfg.scope, cfg.initial_cexs.max(1), &vopts)?;
    report.sat.detect.add(t, cexs.len() as u64 + 1);
    match detection {
        Detection::Correct { .. } => {
            report.outcome = Outcome::Fixed;
            report.already_correct = true;
            report.fix = Some(Fix {
                source: method_to_string(m),
                provenance: Provenance::default(),
                method: Some(m.clone()),
            });
            report.millis = start.elapsed().as_secs_f64() * 1000.0;
            return Ok(report);
        }
        Detection::Unknown => {
            report.outcome = Outcome::NonExhaustive;
            return Ok(report);
        }
        Detection::Faulty(_) => {}
    }
    let mut pool = InputPool::new();
    for c in &cexs {
        let _ = pool.add(prog, m, cfg.scope, c.input.clone());
    }
    report.pool_sizes.push(pool.len());

    let annotated = match &cfg.localization {
        Localization::Annotations => m.clone(),
        Localization::Oracle(b) => m.with_budgets(b),
        Localization::UnsatCore { budget, threshold } => {
            let t = Instant::now();
            let inputs: Vec<Input> = cexs.iter().map(|c| c.input.clone()).collect();
            let lopts = LocalizeOptions {
                threshold: *threshold,
                conflict_budget: cfg.conflict_budget,
                seed: cfg.seed,
            };
            let r = localize(prog, m, cfg.scope, &inputs, &lopts)?;
            report.sat.localize.add(t, inputs.len() as u64);
            annotate(m, &r, *budget)
        }
    };
    report.budgets = annotated.budgets().into_iter().filter(|(_, b)| *b > 0).collect();
    if annotated.total_budget() == 0 {
        return Err(RepairError::NothingToMutate);
    }

    let mut search = Search {
        prog,
        cfg,
        vopts,
        pool,
        report,
        start,
        seen: HashSet::new(),
        queued: HashSet::new(),
        queue: VecDeque::new(),
        non_exhaustive: false,
    };
    search.seen.insert(mutant_hash(&annotated));
    search.queued.insert((mutant_hash(&annotated), annotated.budgets()));
    search.queue.push_back((annotated, Provenance::default()));
    let outcome = search.run()?;
    let mut report = search.report;
    report.pool = search.pool.inputs().to_vec();
    report.outcome = outcome;
    report.millis = start.elapsed().as_secs_f64() * 1000.0;
    Ok(report)
}

struct Search<'a> {
    prog: &'a Program,
    cfg: &'a RepairConfig,
    vopts: VerifyOptions,
    pool: InputPool,
    report: RepairReport,
    start: Instant,
    seen: HashSet<MutantId>,
    queued: HashSet<(MutantId, BTreeMap<StmtId, u32>)>,
    queue: VecDeque<(Method, Provenance)>,
    non_exhaustive: bool,
}

enum Step {
    Continue,
    Done(Outcome),
}

impl Search<'_> {
    fn run(&mut self) -> Result<Outcome, RepairError> {
        while let Some((base, prov)) = self.queue.pop_front() {
            self.report.counters.bases += 1;
            if let Step::Done(o) = self.explore(&base, &prov)? {
                return Ok(o);
            }
        }
        Ok(if !self.report.other_fixes.is_empty() || self.report.fix.is_some() {
            Outcome::Fixed
        } else if self.non_exhaustive {
            Outcome::NonExhaustive
        } else {
            Outcome::NotFixable
        })
    }

    fn timed_out(&self) -> bool {
        self.cfg.timeout.is_some_and(|t| self.start.elapsed() >= t)
    }

    fn enqueue(&mut self, cand: Method, prov: Provenance) {
        if cand.total_budget() == 0 || prov.depth() >= self.cfg.max_depth {
            return;
        }
        if self.queued.insert((mutant_hash(&cand), cand.budgets())) {
            self.queue.push_back((cand, prov));
        }
    }

    /// Iterates the mutation vectors of one base method.
    fn explore(&mut self, base: &Method, prov: &Provenance) -> Result<Step, RepairError> {
        let table = self.cfg.catalog.obtain_mutants(self.prog, base);
        let positions = table.positions.clone();
        let m = positions.len();
        let mut it = VectorIter::new(&table.arities());
        // The zero vector is the base itself.
        it.next();
        while let Some(v) = it.next() {
            if self.timed_out() {
                return Ok(Step::Done(Outcome::Timeout));
            }
            let changed = v.iter().filter(|j| **j > 0).count();
            if prov.depth() + changed > self.cfg.max_depth {
                self.report.counters.depth_skipped += 1;
                continue;
            }
            let cand = apply(base, &table, &v).expect("vector within budgets");
            let cprov = prov.extend(base, &table, &v);
            let id = mutant_hash(&cand);
            self.report.counters.generated += 1;
            if self.cfg.collect_ids {
                self.report.mutant_ids.push(id.to_hex());
            }
            if !self.seen.insert(id) {
                self.report.counters.duplicates += 1;
                self.enqueue(cand, cprov);
                continue;
            }
            let failing = match sieve(self.prog, &cand, self.cfg.scope, &self.pool) {
                SieveResult::Fail { input, .. } => {
                    self.report.counters.sieved += 1;
                    Some(input)
                }
                SieveResult::Pass => {
                    let t = Instant::now();
                    let a = accept(self.prog, &cand, self.cfg.scope, &mut self.pool, &self.vopts)?;
                    self.report.sat.accept.add(t, 1);
                    match a {
                        Acceptance::Accepted => {
                            self.report.counters.accepted += 1;
                            let fix = Fix {
                                source: method_to_string(&cand),
                                provenance: cprov.clone(),
                                method: Some(cand.clone()),
                            };
                            if !self.cfg.explore_all {
                                self.report.fix = Some(fix);
                                return Ok(Step::Done(Outcome::Fixed));
                            }
                            if self.report.fix.is_none() {
                                self.report.fix = Some(fix);
                            } else {
                                self.report.other_fixes.push(fix);
                            }
                            self.enqueue(cand, cprov);
                            continue;
                        }
                        Acceptance::Rejected(cex) => {
                            self.report.counters.rejected += 1;
                            self.report.pool_sizes.push(self.pool.len());
                            Some(cex.input)
                        }
                        Acceptance::Unknown => {
                            self.report.counters.rejected += 1;
                            self.non_exhaustive = true;
                            None
                        }
                    }
                }
            };
            self.enqueue(cand.clone(), cprov);
            let (true, Some(input)) = (self.cfg.prune, failing) else {
                continue;
            };
            let t = Instant::now();
            let fb = get_feedback(
                self.prog,
                &cand,
                &positions,
                &input,
                self.cfg.scope,
                self.cfg.conflict_budget,
            )?;
            self.report.sat.feedback.add(t, fb.trail.len() as u64);
            let k = fb.k;
            if k == 0 {
                continue;
            }
            let rank = it.rank(&v);
            if k < m {
                it.set_to_zero_range(0, k - 1);
                it.advance_one_starting_at(k);
            } else {
                it.finish();
            }
            let skipped = it.next_rank() - rank - 1;
            self.report.counters.pruned_skipped =
                self.report.counters.pruned_skipped.saturating_add(skipped as u64);
            let line = if k < m {
                format!(
                    "level {k} UNSAT at S_{k} (statement {}); skipped {skipped} vectors",
                    positions[k - 1]
                )
            } else {
                format!("all {m} levels UNSAT; abandoning base, skipped {skipped} vectors")
            };
            log::debug!("{line}");
            self.report.feedback_log.push(line);
        }
        Ok(Step::Continue)
    }
}

pub use crate::mutate::estimate_space;
