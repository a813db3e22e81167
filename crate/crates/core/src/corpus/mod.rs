//! Benchmark programs with contracts, and seeded-bug cases derived from them.

pub mod sources;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{self, parse_expr, program_to_string, LangError, Method, Program, StmtId};
use crate::mutate::{apply_one, sites, Catalog, Operator};
use crate::scope::Scope;
use crate::verify::{detect, Detection, VerifyError, VerifyOptions};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("no method named `{0}`")]
    NoMethod(String),
    #[error("a seeded case needs at least one mutation")]
    NoMutations,
    #[error("statement {stmt}: no mutation {index} under {op}")]
    BadStep { stmt: StmtId, op: Operator, index: usize },
    #[error("reference method `{0}` is not correct at its scope")]
    ReferenceFaulty(String),
    #[error("seeded program is still correct")]
    StillCorrect,
    #[error("no faulty draw after {0} attempts")]
    Exhausted(usize),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// One mutation of a seed script: the `index`-th mutation that `op`
/// produces on statement `stmt` of the method as it is at that point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedStep {
    pub stmt: StmtId,
    pub op: Operator,
    pub index: usize,
    pub description: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCase {
    pub name: String,
    /// File stem of the reference program.
    pub program: String,
    pub method: String,
    pub script: Vec<SeedStep>,
    /// Number of seeded mutations per statement.
    pub budgets: BTreeMap<StmtId, u32>,
    pub scope: Scope,
    /// Faulty program text with the budgets written in.
    pub source: String,
    /// Draws discarded because the result was still correct.
    pub redraws: usize,
}

impl BenchmarkCase {
    pub fn load(&self) -> Program {
        lang::load(&self.source)
            .expect("case source typechecks")
            .into_program()
    }

    /// Number of seeded mutations.
    pub fn bugs(&self) -> usize {
        self.budgets.values().sum::<u32>() as usize
    }
}

/// Reference programs: file stem, source, methods that get seeded.
pub fn references() -> Vec<(&'static str, &'static str, Vec<&'static str>)> {
    vec![
        ("sllist", sources::SLLIST, vec!["contains", "getNode", "insert"]),
        ("bstree", sources::BSTREE, vec!["contains", "insert"]),
        ("set", sources::SET, vec!["add"]),
    ]
}

pub fn reference_program(stem: &str) -> Option<Program> {
    references()
        .into_iter()
        .find(|(s, _, _)| *s == stem)
        .map(|(_, src, _)| lang::load(src).expect("reference typechecks").into_program())
}

/// Every statement with something to mutate, with budget one.
fn all_mutable(m: &Method) -> Method {
    let b = m
        .statements()
        .iter()
        .filter(|s| !sites(s).is_empty())
        .map(|s| (s.id, 1))
        .collect();
    m.with_budgets(&b)
}

fn apply_step(p: &Program, m: &Method, cat: &Catalog, step: &SeedStep) -> Result<Method, CorpusError> {
    let s = m.statement(step.stmt).ok_or(CorpusError::BadStep {
        stmt: step.stmt,
        op: step.op,
        index: step.index,
    })?;
    let mut work = m.clone();
    work.statement_mut(step.stmt).unwrap().budget = 1;
    let muts: Vec<_> = cat
        .statement_mutations(p, &work, s)
        .into_iter()
        .filter(|mu| mu.op == step.op)
        .collect();
    let mu = muts.get(step.index).ok_or(CorpusError::BadStep {
        stmt: step.stmt,
        op: step.op,
        index: step.index,
    })?;
    let mut out = apply_one(&work, step.stmt, mu).expect("budget set");
    out.statement_mut(step.stmt).unwrap().budget = 0;
    Ok(out)
}

/// Applies a seed script to `method` of the correct program and checks
/// the result is faulty at `scope`.
pub fn seed_script(
    correct: &Program,
    method: &str,
    script: &[SeedStep],
    scope: Scope,
) -> Result<(Program, BTreeMap<StmtId, u32>), CorpusError> {
    if script.is_empty() {
        return Err(CorpusError::NoMutations);
    }
    let cat = Catalog::default();
    let m0 = correct
        .method(method)
        .ok_or_else(|| CorpusError::NoMethod(method.to_string()))?
        .with_budgets(&BTreeMap::new());
    let mut m = m0;
    let mut budgets: BTreeMap<StmtId, u32> = BTreeMap::new();
    for step in script {
        m = apply_step(correct, &m, &cat, step)?;
        *budgets.entry(step.stmt).or_insert(0) += 1;
    }
    let m = m.with_budgets(&budgets);
    let p = correct.with_method(m.clone());
    match detect(&p, &m, scope, &VerifyOptions::default())? {
        Detection::Faulty(_) => Ok((p, budgets)),
        _ => Err(CorpusError::StillCorrect),
    }
}

/// Draws `n` random mutations (statements may repeat) until the result is
/// faulty.
pub fn seed_bugs(
    correct: &Program,
    stem: &str,
    method: &str,
    n: usize,
    scope: Scope,
    rng_seed: u64,
) -> Result<BenchmarkCase, CorpusError> {
    if n == 0 {
        return Err(CorpusError::NoMutations);
    }
    let cat = Catalog::default();
    let base = correct
        .method(method)
        .ok_or_else(|| CorpusError::NoMethod(method.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    const ATTEMPTS: usize = 50;
    for attempt in 0..ATTEMPTS {
        let mut m = base.with_budgets(&BTreeMap::new());
        let mut script = Vec::new();
        for _ in 0..n {
            let work = all_mutable(&m);
            let ids = work.mutable_from_bottom();
            let id = ids[rng.gen_range(0..ids.len())];
            let muts = cat.statement_mutations(correct, &work, work.statement(id).unwrap());
            if muts.is_empty() {
                continue;
            }
            let mu = &muts[rng.gen_range(0..muts.len())];
            let index = muts.iter().filter(|x| x.op == mu.op).position(|x| x == mu).unwrap();
            let step = SeedStep {
                stmt: id,
                op: mu.op,
                index,
                description: mu.describe(),
            };
            m = apply_step(correct, &m, &cat, &step)?;
            script.push(step);
        }
        if script.len() < n {
            continue;
        }
        match seed_script(correct, method, &script, scope) {
            Ok((p, budgets)) => {
                if !reversible(correct, &p, method, &budgets) {
                    continue;
                }
                return Ok(BenchmarkCase {
                    name: format!("{stem}-{method}-{n}bug-s{rng_seed}"),
                    program: stem.to_string(),
                    method: method.to_string(),
                    script,
                    budgets,
                    scope,
                    source: program_to_string(&p),
                    redraws: attempt,
                })
            }
            Err(CorpusError::StillCorrect) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(CorpusError::Exhausted(ATTEMPTS))
}

/// Whether every seeded statement can be mutated back to its reference
/// form within its budget.
pub fn reversible(correct: &Program, seeded: &Program, method: &str, budgets: &BTreeMap<StmtId, u32>) -> bool {
    let cat = Catalog::default();
    let goal = correct.method(method).unwrap();
    let m = seeded.method(method).unwrap();
    budgets.iter().all(|(&id, &b)| {
        let want = &goal.statement(id).unwrap().kind;
        let mut frontier = vec![m.with_budgets(&BTreeMap::from([(id, b)]))];
        for _ in 0..b {
            let mut next = Vec::new();
            for f in &frontier {
                if &f.statement(id).unwrap().kind == want {
                    return true;
                }
                for mu in cat.statement_mutations(seeded, f, f.statement(id).unwrap()) {
                    next.push(apply_one(f, id, &mu).unwrap());
                }
            }
            frontier = next;
        }
        frontier.iter().any(|f| &f.statement(id).unwrap().kind == want)
    })
}

/// The two-fault `add` case: the scan starts at the second node and the
/// size is decremented.
pub fn two_fault_add() -> BenchmarkCase {
    let p = reference_program("set").unwrap();
    let mut m = p.method("add").unwrap().clone();
    for (id, e) in [(1, "this.head.next"), (13, "this.size - 1")] {
        match &mut m.statement_mut(id).unwrap().kind {
            lang::StmtKind::Assign { value, .. } | lang::StmtKind::FieldAssign { value, .. } => {
                *value = parse_expr(e).unwrap()
            }
            _ => unreachable!(),
        }
    }
    let budgets = BTreeMap::from([(1, 1), (13, 1)]);
    let m = m.with_budgets(&budgets);
    let p = p.with_method(m);
    BenchmarkCase {
        name: "set-add-two-fault".to_string(),
        program: "set".to_string(),
        method: "add".to_string(),
        script: Vec::new(),
        budgets,
        scope: Scope::default(),
        source: program_to_string(&p),
        redraws: 0,
    }
}

/// Seeded cases: every reference method, one to three bugs, `draws` draws
/// each, plus the two-fault `add` case.
pub fn manifest(draws: usize) -> Result<Vec<BenchmarkCase>, CorpusError> {
    let scope = Scope::default();
    let mut out = Vec::new();
    for (stem, src, methods) in references() {
        let p = lang::load(src)?.into_program();
        for method in methods {
            let m = p.method(method).unwrap();
            if !matches!(detect(&p, m, scope, &VerifyOptions::default())?, Detection::Correct { .. }) {
                return Err(CorpusError::ReferenceFaulty(method.to_string()));
            }
            for n in 1..=3 {
                for d in 0..draws {
                    let seed = 1000 * n as u64 + d as u64;
                    out.push(seed_bugs(&p, stem, method, n, scope, seed)?);
                }
            }
        }
    }
    out.push(two_fault_add());
    Ok(out)
}

/// Writes `<name>.imp` and `<name>.case.json` for each case.
pub fn export(cases: &[BenchmarkCase], dir: &Path) -> Result<(), CorpusError> {
    std::fs::create_dir_all(dir)?;
    for c in cases {
        std::fs::write(dir.join(format!("{}.imp", c.name)), &c.source)?;
        std::fs::write(
            dir.join(format!("{}.case.json", c.name)),
            serde_json::to_string_pretty(c)?,
        )?;
    }
    Ok(())
}

/// Reads every `.case.json` in `dir`, sorted by name.
pub fn import(dir: &Path) -> Result<Vec<BenchmarkCase>, CorpusError> {
    let mut names: BTreeSet<String> = BTreeSet::new();
    for e in std::fs::read_dir(dir)? {
        let name = e?.file_name().to_string_lossy().into_owned();
        if name.ends_with(".case.json") {
            names.insert(name);
        }
    }
    names
        .iter()
        .map(|n| Ok(serde_json::from_str(&std::fs::read_to_string(dir.join(n))?)?))
        .collect()
}
