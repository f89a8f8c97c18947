//! Test support shared by the integration suites.

#![allow(dead_code)]

pub mod strategies;

use std::collections::BTreeSet;
use std::ops::ControlFlow;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rice_core::blackbox::{FeatureVector, Label, Mlp};
use rice_core::cnp::{
    args_of, evaluate, ArgName, Binding, CompiledObservables, Mode, Program, Valence,
};
use rice_core::jobfile::{Observable, SynthesisJob};
use rice_core::synthesis::{enumerate, SynthConfig};
use rice_core::translate::to_clauses;

pub const REFERENCE_PROGRAM: &str =
    "ande(const(rd,1.0),proj(iif(ltValue(a,0.6),0.0,1.0),[a->dist,o->go]))";

pub fn red_job() -> SynthesisJob {
    rice_core::jobfile::parse(include_str!("../golden/red_job.pl")).unwrap()
}

pub fn full_job() -> SynthesisJob {
    rice_core::jobfile::parse(include_str!("../golden/full_job.pl")).unwrap()
}

/// Exhaustive enumeration of well-formed programs without any of the
/// synthesizer's pruning: every name of the valence plus `o` at every
/// leaf, every injective renaming at every projection (nested ones
/// included), both orders of every binary node.
pub struct BruteForce {
    names: Vec<ArgName>,
    constants: Vec<f64>,
    /// `by_size[s]` holds every well-formed program of `s` nodes, for the
    /// sizes small enough to keep.
    by_size: Vec<Vec<Program>>,
}

/// Sizes kept in memory; larger ones are streamed.
const STORED: usize = 3;

impl BruteForce {
    pub fn new(valence: &Valence, constants: &[f64]) -> Self {
        let mut names: Vec<ArgName> = valence.names().cloned().collect();
        names.push(ArgName::iif_out());
        let mut bf = BruteForce {
            names,
            constants: constants.to_vec(),
            by_size: vec![Vec::new()],
        };
        for s in 1..=STORED {
            let mut all = Vec::new();
            let _ = bf.each(s, &mut |p| {
                all.push(p.clone());
                ControlFlow::Continue(())
            });
            bf.by_size.push(all);
        }
        bf
    }

    fn each_of(
        &self,
        size: usize,
        f: &mut dyn FnMut(&Program) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        if size < self.by_size.len() {
            for p in &self.by_size[size] {
                f(p)?;
            }
            ControlFlow::Continue(())
        } else {
            self.each(size, f)
        }
    }

    /// Calls `f` on every well-formed program of exactly `size` nodes.
    pub fn each(
        &self,
        size: usize,
        f: &mut dyn FnMut(&Program) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        if size == 1 {
            for n in &self.names {
                for &c in &self.constants {
                    f(&Program::Const(n.clone(), c))?;
                    f(&Program::LtValue(n.clone(), c))?;
                }
            }
            return ControlFlow::Continue(());
        }
        // iif and proj wrap one program of size - 1
        self.each_of(size - 1, &mut |inner| {
            if inner.is_condition() && !args_of(inner).unwrap().contains(&ArgName::iif_out()) {
                for &t in &self.constants {
                    for &e in &self.constants {
                        f(&Program::iif(inner.clone(), t, e))?;
                    }
                }
            }
            for r in self.renamings(inner) {
                let p = Program::Proj(inner.clone().into(), r.into());
                if args_of(&p).is_ok() {
                    f(&p)?;
                }
            }
            ControlFlow::Continue(())
        })?;
        for ls in 1..size - 1 {
            let rs = size - 1 - ls;
            self.each_of(ls, &mut |l| {
                self.each_of(rs, &mut |r| {
                    for p in [
                        Program::ande(l.clone(), r.clone()),
                        Program::ore(l.clone(), r.clone()),
                    ] {
                        if args_of(&p).is_ok() {
                            f(&p)?;
                        }
                    }
                    ControlFlow::Continue(())
                })
            })?;
        }
        ControlFlow::Continue(())
    }

    /// Every non-empty injective renaming of arguments of `p` into the
    /// name set, without identity pairs.
    fn renamings(&self, p: &Program) -> Vec<Vec<(ArgName, ArgName)>> {
        let args: Vec<ArgName> = args_of(p).unwrap().into_iter().collect();
        let mut out = Vec::new();
        let mut current = Vec::new();
        self.extend_renaming(&args, 0, &mut current, &mut out);
        out.retain(|r| !r.is_empty());
        out
    }

    fn extend_renaming(
        &self,
        args: &[ArgName],
        i: usize,
        current: &mut Vec<(ArgName, ArgName)>,
        out: &mut Vec<Vec<(ArgName, ArgName)>>,
    ) {
        if i == args.len() {
            out.push(current.clone());
            return;
        }
        self.extend_renaming(args, i + 1, current, out);
        for t in &self.names {
            if *t == args[i] || current.iter().any(|(_, used)| used == t) {
                continue;
            }
            current.push((args[i].clone(), t.clone()));
            self.extend_renaming(args, i + 1, current, out);
            current.pop();
        }
    }
}

/// The smallest program whose arguments are exactly the valence names
/// and that satisfies the job, scanning sizes up to `max_size`.
pub fn brute_force_first(job: &SynthesisJob, max_size: usize) -> Option<(usize, Program)> {
    let bf = BruteForce::new(job.valence(), job.constants());
    let want = job.valence().name_set();
    let obs = CompiledObservables::new(job);
    for size in 1..=max_size {
        let mut hit = None;
        let _ = bf.each(size, &mut |p| {
            if args_of(p).unwrap() == want && obs.check(p).unwrap_or(false) {
                hit = Some(p.clone());
                return ControlFlow::Break(());
            }
            ControlFlow::Continue(())
        });
        if let Some(p) = hit {
            return Some((size, p));
        }
    }
    None
}

/// A small random job: two or three names, a pool of at most four
/// constants, one to three positive rows and sometimes a negative one.
pub fn random_job(seed: u64) -> SynthesisJob {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let three = rng.gen_bool(0.4);
    let spec = if three {
        "x:in,z:in,y:out"
    } else {
        "x:in,y:out"
    };
    let valence = Valence::from_spec(spec).unwrap();
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    let k = if three {
        rng.gen_range(2..=3)
    } else {
        rng.gen_range(2..=4)
    };
    let mut pool: Vec<f64> = grid.choose_multiple(&mut rng, k).copied().collect();
    pool.sort_by(f64::total_cmp);
    let rows = rng.gen_range(1..=3);
    let mut observables = Vec::new();
    for i in 0..=rows {
        let positive = i < rows;
        if !positive && !rng.gen_bool(0.3) {
            break;
        }
        let values = valence
            .names()
            .map(|n| (n.clone(), *pool.choose(&mut rng).unwrap()))
            .collect();
        observables.push(Observable::new(values, positive));
    }
    SynthesisJob::new(valence, pool, observables).unwrap()
}

/// All in-mode names of `valence` mapped to every pool value combination.
pub fn grid_inputs(valence: &Valence, values: &[f64]) -> Vec<Vec<(ArgName, f64)>> {
    let inputs: Vec<&ArgName> = valence
        .entries()
        .iter()
        .filter(|(_, m)| *m == Mode::In)
        .map(|(n, _)| n)
        .collect();
    let mut out = vec![Vec::new()];
    for name in inputs {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |&v| {
                    let mut row = prefix.clone();
                    row.push((name.clone(), v));
                    row
                })
            })
            .collect();
    }
    out
}

pub fn set<T: Ord + Clone>(items: &[T]) -> BTreeSet<T> {
    items.iter().cloned().collect()
}

/// Largest relative difference between backpropagation and central
/// differences with step `1e-5`, over every parameter.
pub struct GradientCheck {
    /// Largest relative error over the smooth parameters.
    pub worst: f64,
    pub checked: usize,
    /// Parameters whose perturbation crosses a rectifier kink: the central
    /// difference is off but one one-sided difference matches.
    pub kinks: usize,
}

pub fn gradient_check(seed: u64) -> GradientCheck {
    const H: f64 = 1e-5;
    let model = Mlp::new_random(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let batch: Vec<(FeatureVector, Label)> = (0..8)
        .map(|_| {
            let f = FeatureVector::new(
                f64::from(rng.gen_range(0..2u8)),
                f64::from(rng.gen_range(0..2u8)),
                f64::from(rng.gen_range(0..2u8)),
                rng.gen(),
            );
            (
                f,
                if rng.gen_bool(0.5) {
                    Label::Go
                } else {
                    Label::Stop
                },
            )
        })
        .collect();
    let (base, grad) = model.loss_and_gradient(&batch);
    let mut check = GradientCheck {
        worst: 0.0,
        checked: 0,
        kinks: 0,
    };
    for (k, g) in grad.iter().enumerate() {
        let mut plus = model.clone();
        plus.params_mut()[k] += H;
        let mut minus = model.clone();
        minus.params_mut()[k] -= H;
        let (up, down) = (
            plus.loss_and_gradient(&batch).0,
            minus.loss_and_gradient(&batch).0,
        );
        let (forward, backward) = ((up - base) / H, (base - down) / H);
        let rel = |a: f64, b: f64| {
            let scale = a.abs().max(b.abs());
            if scale < 1e-7 {
                (a - b).abs()
            } else {
                (a - b).abs() / scale
            }
        };
        let err = rel(*g, (up - down) / (2.0 * H));
        if err > 1e-4 && rel(*g, forward).min(rel(*g, backward)) <= 1e-3 {
            check.kinks += 1;
            continue;
        }
        check.worst = check.worst.max(err);
        check.checked += 1;
    }
    check
}

/// Programs used for translation checks: the reference program, the start of
/// the red-job stream, first candidates of random jobs and a few
/// disjunctions.
pub fn translation_corpus() -> Vec<(Program, Valence)> {
    let red = Valence::from_spec("rd:in,dist:in,go:out").unwrap();
    let mut out = vec![(REFERENCE_PROGRAM.parse().unwrap(), red.clone())];
    let cfg = SynthConfig {
        max_size: 7,
        max_programs: 150,
        time_budget: Duration::from_secs(120),
        ..SynthConfig::default()
    };
    for c in enumerate(&red_job(), &cfg).unwrap().candidates {
        out.push((c.program, red.clone()));
    }
    let small = SynthConfig {
        max_size: 5,
        max_programs: 10,
        ..cfg
    };
    for seed in 0..20 {
        let job = random_job(seed);
        for c in enumerate(&job, &small).unwrap().candidates {
            out.push((c.program, job.valence().clone()));
        }
    }
    let xy = Valence::from_spec("x:in,y:out").unwrap();
    for text in [
        "ore(ande(ltValue(x,0.5),const(y,0.0)),const(y,1.0))",
        "ore(proj(iif(ltValue(a,0.25),1.0,0.0),[a->x,o->y]),const(y,0.5))",
        "ande(ore(const(x,0.0),const(x,1.0)),const(y,1.0))",
    ] {
        out.push((text.parse().unwrap(), xy.clone()));
    }
    out
}

#[derive(Debug, Default)]
pub struct Fidelity {
    pub programs: usize,
    pub compared: usize,
    /// Inputs on which the program raises an error and has no clause reading.
    pub skipped: usize,
    pub mismatches: Vec<String>,
}

/// Runs clauses and program side by side on a 0.01 grid of every input.
pub fn translation_fidelity() -> Fidelity {
    let values: Vec<f64> = (0..=100).map(|i| f64::from(i) / 100.0).collect();
    let mut report = Fidelity::default();
    for (p, valence) in translation_corpus() {
        report.programs += 1;
        let clauses = to_clauses(&p, &valence).unwrap();
        for row in grid_inputs(&valence, &values) {
            let input: Binding = row.into_iter().collect();
            match evaluate(&p, &input, &valence) {
                Ok(direct) => {
                    report.compared += 1;
                    if clauses.evaluate(&input) != direct {
                        report.mismatches.push(format!("{p} on {input}"));
                    }
                }
                Err(_) => report.skipped += 1,
            }
        }
    }
    report
}
