//! Relational evaluator for the CNP fragment.
//!
//! A program is run against an environment of already-bound arguments.
//! `const` tests a bound argument or binds a free one, `ltValue` and `iif`
//! conditions are pure tests, `iif` binds its reserved output, `proj`
//! evaluates its inner program in a renamed scope, `ande` threads bindings
//! left to right (swapping the order when the left side needs a value only
//! the right side produces) and `ore` takes the left branch when it holds.
//! There is no recursion in the fragment, so every evaluation terminates.

use super::ast::{args_of, ArgName, Binding, Mode, Program, Valence};
use crate::error::{Error, Result};
use crate::jobfile::SynthesisJob;

/// Tolerance used whenever two values are compared for equality.
pub const VALUE_TOLERANCE: f64 = 1e-9;

#[inline]
pub fn values_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= VALUE_TOLERANCE
}

#[derive(Clone, Debug, Default)]
pub(crate) struct Env {
    slots: Vec<(ArgName, f64)>,
}

impl Env {
    pub(crate) fn from_pairs(pairs: impl IntoIterator<Item = (ArgName, f64)>) -> Self {
        Env {
            slots: pairs.into_iter().collect(),
        }
    }

    pub(crate) fn get(&self, name: &ArgName) -> Option<f64> {
        self.slots
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }

    /// Binds `name` or checks it against the existing value.
    fn unify(&mut self, name: &ArgName, value: f64) -> bool {
        match self.get(name) {
            Some(existing) => values_equal(existing, value),
            None => {
                self.slots.push((name.clone(), value));
                true
            }
        }
    }

    fn mark(&self) -> usize {
        self.slots.len()
    }

    fn undo(&mut self, mark: usize) {
        self.slots.truncate(mark);
    }
}

/// Runs `p` against `env`. `test_only` forbids `const` from binding free
/// arguments, which is how `iif` conditions are evaluated.
pub(crate) fn holds(p: &Program, env: &mut Env, test_only: bool) -> Result<bool> {
    match p {
        Program::Const(a, v) => match env.get(a) {
            Some(x) => Ok(values_equal(x, *v)),
            None if test_only => Err(Error::Unbound(a.to_string())),
            None => {
                env.slots.push((a.clone(), *v));
                Ok(true)
            }
        },
        Program::LtValue(a, v) => match env.get(a) {
            Some(x) => Ok(x < *v),
            None => Err(Error::Unbound(a.to_string())),
        },
        Program::Iif(cond, then_v, else_v) => {
            let mark = env.mark();
            let taken = holds(cond, env, true);
            env.undo(mark);
            let value = if taken? { *then_v } else { *else_v };
            Ok(env.unify(&ArgName::iif_out(), value))
        }
        Program::Proj(inner, renaming) => {
            let mut scope = Env::default();
            for (outer_name, v) in &env.slots {
                if let Some((src, _)) = renaming.iter().find(|(_, t)| t == outer_name) {
                    scope.slots.push((src.clone(), *v));
                } else if !renaming.iter().any(|(s, _)| s == outer_name) {
                    scope.slots.push((outer_name.clone(), *v));
                }
            }
            if !holds(inner, &mut scope, test_only)? {
                return Ok(false);
            }
            for (inner_name, v) in scope.slots {
                let outer_name = match renaming.iter().find(|(s, _)| *s == inner_name) {
                    Some((_, t)) => t.clone(),
                    None if renaming.iter().any(|(_, t)| *t == inner_name) => continue,
                    None => inner_name,
                };
                if !env.unify(&outer_name, v) {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Program::Ande(l, r) => {
            let mark = env.mark();
            match holds(l, env, test_only) {
                Ok(true) => holds(r, env, test_only),
                Ok(false) => Ok(false),
                Err(Error::Unbound(_)) => {
                    env.undo(mark);
                    Ok(holds(r, env, test_only)? && holds(l, env, test_only)?)
                }
                Err(e) => Err(e),
            }
        }
        Program::Ore(l, r) => {
            let mark = env.mark();
            if holds(l, env, test_only)? {
                Ok(true)
            } else {
                env.undo(mark);
                holds(r, env, test_only)
            }
        }
    }
}

/// Computes the out-mode arguments of `valence` from `input`, or `None` when
/// the input is outside the relation denoted by `p`.
pub fn evaluate(p: &Program, input: &Binding, valence: &Valence) -> Result<Option<Binding>> {
    for a in args_of(p)? {
        if valence.mode_of(&a).is_none() {
            return Err(Error::Signature(a.to_string()));
        }
    }
    for (name, _) in input.iter() {
        if valence.mode_of(name) != Some(Mode::In) {
            return Err(Error::InvalidArgument(format!(
                "input binds `{name}`, which is not an in-mode argument"
            )));
        }
    }
    let mut env = Env::default();
    for name in valence.inputs() {
        let v = input.get(name).ok_or_else(|| {
            Error::InvalidArgument(format!("input does not bind in-mode argument `{name}`"))
        })?;
        env.slots.push((name.clone(), v));
    }
    if !holds(p, &mut env, false)? {
        return Ok(None);
    }
    let mut out = Binding::new();
    for name in valence.outputs() {
        let v = env
            .get(name)
            .ok_or_else(|| Error::UnboundOutput(name.to_string()))?;
        out.insert(name.clone(), v);
    }
    Ok(Some(out))
}

/// Observables of a job pre-split into in-part and expected out-part.
#[derive(Clone, Debug)]
pub struct CompiledObservables {
    rows: Vec<CompiledRow>,
    outputs: Vec<ArgName>,
}

#[derive(Clone, Debug)]
struct CompiledRow {
    inputs: Vec<(ArgName, f64)>,
    expected: Vec<f64>,
    positive: bool,
}

impl CompiledObservables {
    pub fn new(job: &SynthesisJob) -> Self {
        let valence = job.valence();
        let outputs: Vec<ArgName> = valence.outputs().cloned().collect();
        let rows = job
            .observables()
            .iter()
            .map(|obs| {
                let mut inputs = Vec::new();
                let mut expected = Vec::new();
                for ((name, mode), (_, v)) in valence.entries().iter().zip(obs.values()) {
                    match mode {
                        Mode::In => inputs.push((name.clone(), *v)),
                        Mode::Out => expected.push(*v),
                    }
                }
                CompiledRow {
                    inputs,
                    expected,
                    positive: obs.positive(),
                }
            })
            .collect();
        CompiledObservables { rows, outputs }
    }

    fn row_matches(&self, p: &Program, row: &CompiledRow) -> Result<bool> {
        let mut env = Env::from_pairs(row.inputs.iter().cloned());
        if !holds(p, &mut env, false)? {
            return Ok(false);
        }
        for (name, want) in self.outputs.iter().zip(&row.expected) {
            let got = env
                .get(name)
                .ok_or_else(|| Error::UnboundOutput(name.to_string()))?;
            if !values_equal(got, *want) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn check(&self, p: &Program) -> Result<bool> {
        for row in &self.rows {
            if self.row_matches(p, row)? != row.positive {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Like [`check`](Self::check) but treats evaluation errors as failure.
    /// Positive rows run first since they reject most candidates.
    pub(crate) fn accepts(&self, p: &Program) -> bool {
        self.rows
            .iter()
            .filter(|r| r.positive)
            .chain(self.rows.iter().filter(|r| !r.positive))
            .all(|row| matches!(self.row_matches(p, row), Ok(m) if m == row.positive))
    }
}

/// True iff every positive observable of `job` is reproduced by `p` and no
/// negative one is.
pub fn satisfies(p: &Program, job: &SynthesisJob) -> Result<bool> {
    for a in args_of(p)? {
        if job.valence().mode_of(&a).is_none() {
            return Err(Error::Signature(a.to_string()));
        }
    }
    CompiledObservables::new(job).check(p)
}
