//! Generators for programs and jobs.

use proptest::prelude::*;
use rice_core::cnp::{ArgName, Mode, Program, Valence};
use rice_core::jobfile::{Observable, SynthesisJob};

pub const PROGRAM_NAMES: [&str; 4] = ["x", "y", "z", "o"];
pub const PROGRAM_VALUES: [f64; 4] = [0.0, 0.25, 0.5, 1.0];

fn name() -> impl Strategy<Value = String> {
    prop::sample::select(&PROGRAM_NAMES[..]).prop_map(String::from)
}

pub fn value() -> impl Strategy<Value = f64> {
    prop::sample::select(&PROGRAM_VALUES[..])
}

pub fn condition() -> impl Strategy<Value = Program> {
    let leaf = prop_oneof![
        (name(), value()).prop_map(|(n, v)| Program::constant(&n, v).unwrap()),
        (name(), value()).prop_map(|(n, v)| Program::lt_value(&n, v).unwrap()),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Program::ande(l, r)),
            (inner.clone(), inner).prop_map(|(l, r)| Program::ore(l, r)),
        ]
    })
}

/// Arbitrary programs; most are well formed, the rest exercise the
/// well-formedness checks.
pub fn program() -> impl Strategy<Value = Program> {
    let leaf = prop_oneof![
        (name(), value()).prop_map(|(n, v)| Program::constant(&n, v).unwrap()),
        (name(), value()).prop_map(|(n, v)| Program::lt_value(&n, v).unwrap()),
        (condition(), value(), value()).prop_map(|(c, t, e)| Program::iif(c, t, e)),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Program::ande(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Program::ore(l, r)),
            (inner, name(), name()).prop_map(|(p, s, t)| {
                Program::proj(p.clone(), &[(s.as_str(), t.as_str())]).unwrap_or(p)
            }),
        ]
    })
}

const JOB_NAMES: [&str; 6] = ["rd", "am", "gr", "dist", "go", "x_1"];

fn number() -> impl Strategy<Value = f64> {
    prop_oneof![
        (0u32..=100).prop_map(|i| f64::from(i) / 100.0),
        -1e6f64..1e6,
        prop::num::f64::NORMAL,
    ]
}

pub fn job() -> impl Strategy<Value = SynthesisJob> {
    (
        prop::sample::subsequence(&JOB_NAMES[..], 1..=JOB_NAMES.len()),
        prop::collection::vec(any::<bool>(), JOB_NAMES.len()),
        prop::collection::vec(number(), 0..8),
        prop::collection::vec(
            (
                prop::collection::vec(number(), JOB_NAMES.len()),
                any::<bool>(),
            ),
            0..10,
        ),
    )
        .prop_map(|(names, outs, constants, rows)| {
            let entries: Vec<(ArgName, Mode)> = names
                .iter()
                .zip(&outs)
                .map(|(n, out)| {
                    (
                        ArgName::new(n).unwrap(),
                        if *out { Mode::Out } else { Mode::In },
                    )
                })
                .collect();
            let valence = Valence::new(entries).unwrap();
            let observables = rows
                .into_iter()
                .map(|(values, positive)| {
                    let values = valence.names().cloned().zip(values).collect();
                    Observable::new(values, positive)
                })
                .collect();
            SynthesisJob::new(valence, constants, observables).unwrap()
        })
}
