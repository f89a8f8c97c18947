//! Enumerative synthesis of CNP programs consistent with a job.
//!
//! Programs are enumerated by iterative deepening on node count. Within a
//! size class the order is canonical: `const < ltValue < iif < proj < ande <
//! ore`, then fields left to right (argument names by valence position,
//! constants by value). The first program yielded is therefore a smallest
//! consistent one.
//!
//! The search space is pruned without losing any minimal solution:
//! leaves name valence arguments directly, so `proj` only ever renames the
//! reserved `iif` output onto a valence argument (and is never nested
//! directly inside another `proj`); `ande(p, q)` is generated only with
//! `p` strictly before `q`; and a subprogram is abandoned as soon as the
//! nodes left cannot mention every argument still missing.

use std::cell::{Cell, RefCell};
use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::ops::ControlFlow;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::cnp::{ArgName, CompiledObservables, Mode, Program, IIF_OUT};
use crate::error::{Error, Result};
use crate::exec::{map_ordered, Parallelism};
use crate::jobfile::SynthesisJob;

pub const DEFAULT_MAX_SIZE: usize = 12;
pub const DEFAULT_TIME_BUDGET: Duration = Duration::from_secs(60);

#[derive(Clone, Debug)]
pub struct SynthConfig {
    pub max_size: usize,
    pub max_programs: usize,
    pub time_budget: Duration,
    pub allow_ore: bool,
    pub parallelism: Parallelism,
    /// Number of complete candidates checked together.
    pub batch_size: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            max_size: DEFAULT_MAX_SIZE,
            max_programs: 1,
            time_budget: DEFAULT_TIME_BUDGET,
            allow_ore: true,
            parallelism: Parallelism::default(),
            batch_size: 4096,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub program: Program,
    pub size: usize,
}

/// Why the search stopped without producing the requested programs.
#[derive(Clone, Debug, PartialEq)]
pub enum Exhaustion {
    /// Every program up to `max_size` nodes was examined.
    SizeBound { max_size: usize },
    /// The time budget ran out while examining programs of `size` nodes.
    TimeBound { size: usize, elapsed: Duration },
}

impl fmt::Display for Exhaustion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exhaustion::SizeBound { max_size } => {
                write!(
                    f,
                    "no program of at most {max_size} nodes satisfies the job"
                )
            }
            Exhaustion::TimeBound { size, elapsed } => write!(
                f,
                "time budget exhausted after {:.1}s while searching size {size}",
                elapsed.as_secs_f64()
            ),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SynthesisRun {
    pub candidates: Vec<Candidate>,
    /// `None` when `max_programs` candidates were found.
    pub exhausted: Option<Exhaustion>,
    /// Complete programs (all arguments mentioned) checked against the job.
    pub checked: u64,
}

/// Checks the preconditions of a synthesis job.
pub fn validate_job(job: &SynthesisJob) -> Result<()> {
    let valence = job.valence();
    if valence.len() > 30 {
        return Err(Error::InvalidJob(
            "at most 30 arguments are supported".into(),
        ));
    }
    if valence.names().any(|n| n.as_str() == IIF_OUT) {
        return Err(Error::InvalidJob(format!(
            "`{IIF_OUT}` is reserved and cannot name a job argument"
        )));
    }
    if valence.inputs().count() == 0 {
        return Err(Error::InvalidJob("valence has no in-mode argument".into()));
    }
    if valence.outputs().count() != 1 {
        return Err(Error::InvalidJob(
            "valence must have exactly one out-mode argument".into(),
        ));
    }
    if !job.observables().iter().any(|o| o.positive()) {
        return Err(Error::InvalidJob("job has no positive observable".into()));
    }
    if job.constants().is_empty() {
        return Err(Error::InvalidJob("constant pool is empty".into()));
    }
    Ok(())
}

/// Streams consistent programs to `on_candidate`, smallest first. Returns
/// `Ok(None)` when the callback stopped the search.
pub fn enumerate_with(
    job: &SynthesisJob,
    cfg: &SynthConfig,
    mut on_candidate: impl FnMut(Candidate) -> ControlFlow<()>,
) -> Result<(Option<Exhaustion>, u64)> {
    validate_job(job)?;
    let start = Instant::now();
    let deadline = start + cfg.time_budget;
    let gen = Generator::new(job, cfg, deadline);
    let observables = CompiledObservables::new(job);
    let full = gen.full_mask();
    let batch_size = cfg.batch_size.max(1);
    let mut checked = 0u64;

    for size in 1..=cfg.max_size {
        let mut batch: Vec<Arc<Program>> = Vec::with_capacity(batch_size);
        let mut stopped = false;
        let mut flush = |batch: &mut Vec<Arc<Program>>, stopped: &mut bool| -> ControlFlow<()> {
            checked += batch.len() as u64;
            let verdicts = map_ordered(cfg.parallelism, batch, |p| observables.accepts(p));
            for (p, ok) in batch.drain(..).zip(verdicts) {
                if ok {
                    let cand = Candidate {
                        program: (*p).clone(),
                        size,
                    };
                    if on_candidate(cand).is_break() {
                        *stopped = true;
                        return ControlFlow::Break(());
                    }
                }
            }
            ControlFlow::Continue(())
        };

        let flow = gen.each(size, Kind::Any, full, gen.o_bit, &mut |item| {
            batch.push(item.prog.clone());
            if batch.len() >= batch_size {
                flush(&mut batch, &mut stopped)?;
                // the generator's own check can lag while it replays a cached class
                if Instant::now() >= deadline {
                    gen.timed_out.set(true);
                    return ControlFlow::Break(());
                }
            }
            ControlFlow::Continue(())
        });
        if flow.is_continue() || gen.timed_out.get() {
            let _ = flush(&mut batch, &mut stopped);
        }
        if stopped {
            return Ok((None, checked));
        }
        if gen.timed_out.get() {
            return Ok((
                Some(Exhaustion::TimeBound {
                    size,
                    elapsed: start.elapsed(),
                }),
                checked,
            ));
        }
    }
    Ok((
        Some(Exhaustion::SizeBound {
            max_size: cfg.max_size,
        }),
        checked,
    ))
}

/// Collects up to `cfg.max_programs` consistent programs in canonical order.
pub fn enumerate(job: &SynthesisJob, cfg: &SynthConfig) -> Result<SynthesisRun> {
    let mut candidates = Vec::new();
    let limit = cfg.max_programs.max(1);
    let (exhausted, checked) = enumerate_with(job, cfg, |c| {
        candidates.push(c);
        if candidates.len() >= limit {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    Ok(SynthesisRun {
        candidates,
        exhausted,
        checked,
    })
}

/// The smallest consistent program, or [`Error::Exhausted`].
pub fn first_explanation(job: &SynthesisJob, cfg: &SynthConfig) -> Result<Candidate> {
    let cfg = SynthConfig {
        max_programs: 1,
        ..cfg.clone()
    };
    let mut run = enumerate(job, &cfg)?;
    match run.exhausted {
        None => Ok(run.candidates.swap_remove(0)),
        Some(why) => Err(Error::Exhausted(why)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Kind {
    /// Pure tests: leaves combined with `ande`/`ore`.
    Cond,
    Any,
}

#[derive(Clone)]
struct Item {
    prog: Arc<Program>,
    mask: u32,
}

/// Upper bound on the number of distinct arguments of a program with
/// `size` nodes: each leaf names one argument, binary nodes add nothing,
/// and only an `iif` can add the reserved output.
fn max_args(size: usize) -> u32 {
    (size / 2 + 1) as u32
}

const CACHE_MAX_SIZE: usize = 5;
const CACHE_MAX_ITEMS: usize = 400_000;

type Flow = ControlFlow<()>;

struct Generator<'a> {
    names: Vec<ArgName>,
    o_bit: u32,
    pool: &'a [f64],
    allow_ore: bool,
    deadline: Instant,
    ticks: Cell<u32>,
    timed_out: Cell<bool>,
    cache: RefCell<HashMap<(usize, Kind, u32), Option<Arc<Vec<Item>>>>>,
}

impl<'a> Generator<'a> {
    fn new(job: &'a SynthesisJob, cfg: &SynthConfig, deadline: Instant) -> Self {
        let names: Vec<ArgName> = job.valence().names().cloned().collect();
        let o_bit = 1u32 << names.len();
        Generator {
            names,
            o_bit,
            pool: job.constants(),
            allow_ore: cfg.allow_ore,
            deadline,
            ticks: Cell::new(0),
            timed_out: Cell::new(false),
            cache: RefCell::new(HashMap::new()),
        }
    }

    fn full_mask(&self) -> u32 {
        self.o_bit - 1
    }

    fn expired(&self) -> bool {
        if self.timed_out.get() {
            return true;
        }
        let t = self.ticks.get().wrapping_add(1);
        self.ticks.set(t);
        if t % 512 == 0 && Instant::now() >= self.deadline {
            self.timed_out.set(true);
        }
        self.timed_out.get()
    }

    fn rank(&self, name: &ArgName) -> usize {
        self.names
            .iter()
            .position(|n| n == name)
            .unwrap_or(self.names.len())
    }

    /// Total order matching the generation order within one size class.
    fn canon_cmp(&self, a: &Program, b: &Program) -> Ordering {
        fn ctor(p: &Program) -> u8 {
            match p {
                Program::Const(..) => 0,
                Program::LtValue(..) => 1,
                Program::Iif(..) => 2,
                Program::Proj(..) => 3,
                Program::Ande(..) => 4,
                Program::Ore(..) => 5,
            }
        }
        let by_size =
            |x: &Program, y: &Program| x.size().cmp(&y.size()).then_with(|| self.canon_cmp(x, y));
        ctor(a).cmp(&ctor(b)).then_with(|| match (a, b) {
            (Program::Const(x, u), Program::Const(y, v))
            | (Program::LtValue(x, u), Program::LtValue(y, v)) => {
                self.rank(x).cmp(&self.rank(y)).then_with(|| u.total_cmp(v))
            }
            (Program::Iif(c1, t1, e1), Program::Iif(c2, t2, e2)) => by_size(c1, c2)
                .then_with(|| t1.total_cmp(t2))
                .then_with(|| e1.total_cmp(e2)),
            (Program::Proj(p1, r1), Program::Proj(p2, r2)) => {
                let targets = |r: &[(ArgName, ArgName)]| -> Vec<usize> {
                    r.iter().map(|(_, t)| self.rank(t)).collect()
                };
                targets(r1).cmp(&targets(r2)).then_with(|| by_size(p1, p2))
            }
            (Program::Ande(l1, r1), Program::Ande(l2, r2))
            | (Program::Ore(l1, r1), Program::Ore(l2, r2)) => {
                by_size(l1, l2).then_with(|| by_size(r1, r2))
            }
            _ => Ordering::Equal,
        })
    }

    /// Calls `f` for every program of exactly `size` nodes and kind `kind`
    /// whose arguments include `req` and avoid `forbid`, in canonical order.
    fn each(
        &self,
        size: usize,
        kind: Kind,
        req: u32,
        forbid: u32,
        f: &mut dyn FnMut(&Item) -> Flow,
    ) -> Flow {
        if size == 0 || req & forbid != 0 || req.count_ones() > max_args(size) {
            return ControlFlow::Continue(());
        }
        if self.expired() {
            return ControlFlow::Break(());
        }
        if size <= CACHE_MAX_SIZE {
            if let Some(list) = self.cached(size, kind, forbid) {
                for item in list.iter() {
                    if item.mask & req == req {
                        f(item)?;
                    }
                }
                return ControlFlow::Continue(());
            }
            if self.timed_out.get() {
                return ControlFlow::Break(());
            }
        }
        self.generate(size, kind, req, forbid, f)
    }

    fn cached(&self, size: usize, kind: Kind, forbid: u32) -> Option<Arc<Vec<Item>>> {
        let key = (size, kind, forbid);
        if let Some(entry) = self.cache.borrow().get(&key) {
            return entry.clone();
        }
        let mut items = Vec::new();
        let mut too_big = false;
        let flow = self.generate(size, kind, 0, forbid, &mut |item| {
            items.push(item.clone());
            if items.len() > CACHE_MAX_ITEMS {
                too_big = true;
                return ControlFlow::Break(());
            }
            ControlFlow::Continue(())
        });
        if flow.is_break() && !too_big {
            // timed out: nothing reliable to store
            return None;
        }
        let entry = (!too_big).then(|| Arc::new(items));
        self.cache.borrow_mut().insert(key, entry.clone());
        entry
    }

    fn generate(
        &self,
        size: usize,
        kind: Kind,
        req: u32,
        forbid: u32,
        f: &mut dyn FnMut(&Item) -> Flow,
    ) -> Flow {
        if size == 1 {
            return self.leaves(req, forbid, f);
        }

        if kind == Kind::Any && forbid & self.o_bit == 0 {
            let o_bit = self.o_bit;
            let pool = self.pool;
            self.each(
                size - 1,
                Kind::Cond,
                req & !o_bit,
                forbid | o_bit,
                &mut |c| {
                    for &t in pool {
                        for &e in pool {
                            let prog = Arc::new(Program::Iif(c.prog.clone(), t, e));
                            f(&Item {
                                prog,
                                mask: c.mask | o_bit,
                            })?;
                        }
                    }
                    ControlFlow::Continue(())
                },
            )?;
        }

        if kind == Kind::Any && req & self.o_bit == 0 {
            for (i, target) in self.names.iter().enumerate() {
                let bit = 1u32 << i;
                if forbid & bit != 0 {
                    continue;
                }
                let renaming: Arc<[(ArgName, ArgName)]> =
                    Arc::from(vec![(ArgName::iif_out(), target.clone())]);
                let inner_req = (req & !bit) | self.o_bit;
                let inner_forbid = (forbid & !self.o_bit) | bit;
                self.each(size - 1, Kind::Any, inner_req, inner_forbid, &mut |inner| {
                    if matches!(*inner.prog, Program::Proj(..)) {
                        return ControlFlow::Continue(());
                    }
                    let prog = Arc::new(Program::Proj(inner.prog.clone(), renaming.clone()));
                    f(&Item {
                        prog,
                        mask: (inner.mask & !self.o_bit) | bit,
                    })
                })?;
            }
        }

        self.binary(size, kind, req, forbid, false, f)?;
        if self.allow_ore {
            self.binary(size, kind, req, forbid, true, f)?;
        }
        ControlFlow::Continue(())
    }

    fn leaves(&self, req: u32, forbid: u32, f: &mut dyn FnMut(&Item) -> Flow) -> Flow {
        for lt in [false, true] {
            for (i, name) in self.names.iter().enumerate() {
                let bit = 1u32 << i;
                if forbid & bit != 0 || req & !bit != 0 {
                    continue;
                }
                for &v in self.pool {
                    let prog = if lt {
                        Program::LtValue(name.clone(), v)
                    } else {
                        Program::Const(name.clone(), v)
                    };
                    f(&Item {
                        prog: Arc::new(prog),
                        mask: bit,
                    })?;
                }
            }
        }
        ControlFlow::Continue(())
    }

    /// `ande` (and `ore` over pure tests) is commutative, so only ordered
    /// pairs are produced; `ore` over generators keeps both orders because
    /// the left branch takes priority.
    fn binary(
        &self,
        size: usize,
        kind: Kind,
        req: u32,
        forbid: u32,
        ore: bool,
        f: &mut dyn FnMut(&Item) -> Flow,
    ) -> Flow {
        let commutative = !ore || kind == Kind::Cond;
        for l_size in 1..size - 1 {
            let r_size = size - 1 - l_size;
            if commutative && l_size > r_size {
                break;
            }
            self.each(l_size, kind, 0, forbid, &mut |l| {
                let rest = req & !l.mask;
                if rest.count_ones() > max_args(r_size) {
                    return ControlFlow::Continue(());
                }
                self.each(r_size, kind, rest, forbid, &mut |r| {
                    if l_size == r_size {
                        let ord = self.canon_cmp(&l.prog, &r.prog);
                        if ord == Ordering::Equal || (commutative && ord == Ordering::Greater) {
                            return ControlFlow::Continue(());
                        }
                    }
                    let prog = if ore {
                        Program::Ore(l.prog.clone(), r.prog.clone())
                    } else {
                        Program::Ande(l.prog.clone(), r.prog.clone())
                    };
                    f(&Item {
                        prog: Arc::new(prog),
                        mask: l.mask | r.mask,
                    })
                })
            })?;
        }
        ControlFlow::Continue(())
    }
}

/// The out-mode argument of a job's valence.
pub fn output_name(job: &SynthesisJob) -> Option<&ArgName> {
    job.valence()
        .entries()
        .iter()
        .find(|(_, m)| *m == Mode::Out)
        .map(|(n, _)| n)
}
