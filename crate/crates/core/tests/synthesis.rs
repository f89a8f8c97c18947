mod common;

use std::ops::ControlFlow;
use std::time::Duration;

use common::{brute_force_first, random_job, red_job, BruteForce};
use proptest::prelude::*;
use rice_core::cnp::{args_of, satisfies, Program};
use rice_core::exec::Parallelism;
use rice_core::jobfile::Observable;
use rice_core::synthesis::{enumerate, first_explanation, SynthConfig};

fn cfg(max_size: usize, max_programs: usize) -> SynthConfig {
    SynthConfig {
        max_size,
        max_programs,
        time_budget: Duration::from_secs(600),
        ..SynthConfig::default()
    }
}

#[test]
fn brute_force_counts_small_sizes() {
    let job = random_job(0);
    let bf = BruteForce::new(job.valence(), job.constants());
    let mut count = 0usize;
    let _ = bf.each(1, &mut |_| {
        count += 1;
        ControlFlow::Continue(())
    });
    let names = job.valence().len() + 1;
    assert_eq!(count, 2 * names * job.constants().len());
}

#[test]
fn minimal_size_matches_brute_force() {
    for seed in 0..12 {
        let job = random_job(seed);
        let ours = enumerate(&job, &cfg(5, 1)).unwrap();
        let theirs = brute_force_first(&job, 5);
        assert_eq!(
            ours.candidates.first().map(|c| c.size),
            theirs.as_ref().map(|(s, _)| *s),
            "seed {seed}: ours {:?} brute force {:?}",
            ours.candidates.first().map(|c| c.program.to_string()),
            theirs.map(|(_, p)| p.to_string())
        );
        if let Some(c) = ours.candidates.first() {
            assert!(satisfies(&c.program, &job).unwrap());
        }
    }
}

#[test]
fn red_job_first_candidate() {
    let c = first_explanation(&red_job(), &cfg(12, 1)).unwrap();
    assert_eq!(c.size, 5);
    assert_eq!(
        c.program.to_string(),
        "proj(iif(ande(const(rd,1.0),ltValue(dist,0.6)),0.0,1.0),[o->go])"
    );
}

#[test]
fn later_candidates_are_larger_or_equal_and_sound() {
    let job = red_job();
    let run = enumerate(&job, &cfg(6, 40)).unwrap();
    assert!(run.candidates.len() > 1);
    let want = job.valence().name_set();
    for pair in run.candidates.windows(2) {
        assert!(pair[0].size <= pair[1].size);
    }
    for c in &run.candidates {
        assert_eq!(c.program.size(), c.size);
        assert_eq!(args_of(&c.program).unwrap(), want);
        assert!(satisfies(&c.program, &job).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn deterministic_and_mode_independent(seed in 0u64..10_000) {
        let job = random_job(seed);
        let seq = SynthConfig { parallelism: Parallelism::Sequential, ..cfg(4, 5) };
        let par = SynthConfig { parallelism: Parallelism::Parallel, batch_size: 7, ..cfg(4, 5) };
        let a = enumerate(&job, &seq).unwrap();
        let b = enumerate(&job, &seq).unwrap();
        let c = enumerate(&job, &par).unwrap();
        prop_assert_eq!(&a.candidates, &b.candidates);
        prop_assert_eq!(&a.candidates, &c.candidates);
    }

    #[test]
    fn negative_observable_only_removes(seed in 0u64..10_000, neg_seed in 0u64..10_000) {
        let job = random_job(seed);
        let extra = random_job(neg_seed);
        prop_assume!(extra.valence() == job.valence());
        let row = Observable::new(extra.observables()[0].values().to_vec(), false);
        let constrained = job.clone().with_observable(row).unwrap();
        let all: Vec<Program> = enumerate(&job, &cfg(4, 200)).unwrap()
            .candidates.into_iter().map(|c| c.program).collect();
        let fewer: Vec<Program> = enumerate(&constrained, &cfg(4, 200)).unwrap()
            .candidates.into_iter().map(|c| c.program).collect();
        // same canonical order, so the constrained stream is a subsequence
        let mut it = all.iter();
        for p in &fewer {
            prop_assert!(it.any(|q| q == p), "{} not in the unconstrained stream", p);
        }
    }
}
