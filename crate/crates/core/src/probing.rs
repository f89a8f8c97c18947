//! One-at-a-time sensitivity analysis: sweep the distance for every light
//! state, keep the grid points next to a change of the rounded output, and
//! export them as a synthesis job.

use crate::blackbox::{FeatureVector, LightState, Oracle};
use crate::cnp::{ArgName, Mode, Valence};
use crate::error::{Error, Result};
use crate::exec::{map_ordered, Parallelism};
use crate::jobfile::{Observable, SynthesisJob};

pub const DEFAULT_STEPS: usize = 100;

/// Rounded model outputs along the distance axis for one light state.
#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub state: LightState,
    /// `points[i] = i / steps`.
    pub points: Vec<f64>,
    /// Rounded predictions, each 0.0 or 1.0 for a well-behaved oracle.
    pub outputs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalExample {
    pub input: FeatureVector,
    pub go: f64,
}

pub fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

pub fn distance_sweep(state: LightState, steps: usize, oracle: &dyn Oracle) -> Result<Sweep> {
    if steps == 0 {
        return Err(Error::InvalidArgument(
            "sweep needs at least one step".into(),
        ));
    }
    let points: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
    let outputs = points
        .iter()
        .map(|&d| oracle.action(&FeatureVector::with_lights(state, d)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Sweep {
        state,
        points,
        outputs,
    })
}

/// Both endpoints plus both neighbours of every output change, by distance.
pub fn critical_points(s: &Sweep) -> Vec<CriticalExample> {
    let last = s.points.len().saturating_sub(1);
    let mut keep = vec![false; s.points.len()];
    if let Some(k) = keep.first_mut() {
        *k = true;
    }
    if let Some(k) = keep.last_mut() {
        *k = true;
    }
    for i in 0..last {
        if s.outputs[i] != s.outputs[i + 1] {
            keep[i] = true;
            keep[i + 1] = true;
        }
    }
    keep.iter()
        .enumerate()
        .filter(|(_, k)| **k)
        .map(|(i, _)| CriticalExample {
            input: FeatureVector::with_lights(s.state, round2(s.points[i])),
            go: round2(s.outputs[i]),
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct ProbeConfig {
    pub steps: usize,
    pub states: Vec<LightState>,
    pub parallelism: Parallelism,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            steps: DEFAULT_STEPS,
            states: LightState::regular(),
            parallelism: Parallelism::default(),
        }
    }
}

/// Valence of every probe job: the four features in, `go` out.
pub fn probe_valence() -> Valence {
    let mut entries: Vec<(ArgName, Mode)> = FeatureVector::NAMES
        .iter()
        .map(|n| (ArgName::new(n).expect("static name"), Mode::In))
        .collect();
    entries.push((ArgName::new("go").expect("static name"), Mode::Out));
    Valence::new(entries).expect("distinct names")
}

/// Sweeps every configured state; states may run concurrently, each sweep
/// queries the oracle sequentially.
pub fn sweeps(oracle: &dyn Oracle, cfg: &ProbeConfig) -> Result<Vec<Sweep>> {
    map_ordered(cfg.parallelism, &cfg.states, |state| {
        distance_sweep(*state, cfg.steps, oracle)
    })
    .into_iter()
    .collect()
}

pub fn job_from_sweeps(sweeps: &[Sweep]) -> Result<SynthesisJob> {
    let valence = probe_valence();
    let names: Vec<ArgName> = valence.names().cloned().collect();
    let mut observables = Vec::new();
    let mut constants = Vec::new();
    for sweep in sweeps {
        for ex in critical_points(sweep) {
            let f = ex.input;
            let values = [f.rd, f.am, f.gr, f.dist, ex.go].map(round2);
            constants.push(values[3]);
            constants.push(values[4]);
            observables.push(Observable::new(
                names.iter().cloned().zip(values).collect(),
                true,
            ));
        }
    }
    SynthesisJob::new(valence, constants, observables)
}

/// Probes `oracle` and assembles the synthesis job.
pub fn probe(oracle: &dyn Oracle, cfg: &ProbeConfig) -> Result<SynthesisJob> {
    job_from_sweeps(&sweeps(oracle, cfg)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blackbox::RuleOracle;

    fn dists(ex: &[CriticalExample]) -> Vec<f64> {
        ex.iter().map(|e| e.input.dist).collect()
    }

    #[test]
    fn green_sweep_is_all_go() {
        let s = distance_sweep(LightState::GREEN, 100, &RuleOracle).unwrap();
        assert_eq!(s.points.len(), 101);
        assert!(s.outputs.iter().all(|&o| o == 1.0));
        assert_eq!(dists(&critical_points(&s)), [0.0, 1.0]);
    }

    #[test]
    fn red_sweep_transition() {
        let s = distance_sweep(LightState::RED, 100, &RuleOracle).unwrap();
        for (p, o) in s.points.iter().zip(&s.outputs) {
            let want = if *p <= 0.59 + 1e-12 { 0.0 } else { 1.0 };
            assert_eq!(*o, want, "dist {p}");
        }
        let ex = critical_points(&s);
        assert_eq!(dists(&ex), [0.0, 0.59, 0.6, 1.0]);
        assert_eq!(
            ex.iter().map(|e| e.go).collect::<Vec<_>>(),
            [0.0, 0.0, 1.0, 1.0]
        );
    }

    #[test]
    fn amber_sweep_rule() {
        let s = distance_sweep(LightState::AMBER, 100, &RuleOracle).unwrap();
        assert_eq!(
            dists(&critical_points(&s)),
            [0.0, 0.09, 0.1, 0.8, 0.81, 1.0]
        );
    }

    #[test]
    fn single_step() {
        let s = distance_sweep(LightState::RED, 1, &RuleOracle).unwrap();
        assert_eq!(s.points, [0.0, 1.0]);
        assert!(distance_sweep(LightState::RED, 0, &RuleOracle).is_err());
    }

    #[test]
    fn rule_probe_job() {
        let job = probe(&RuleOracle, &ProbeConfig::default()).unwrap();
        assert_eq!(job.observables().len(), 12);
        assert_eq!(job.constants(), [0.0, 0.09, 0.1, 0.59, 0.6, 0.8, 0.81, 1.0]);
    }

    #[test]
    fn irregular_states_fail_for_rule_oracle() {
        let cfg = ProbeConfig {
            states: LightState::all_combinations(),
            ..ProbeConfig::default()
        };
        assert!(probe(&RuleOracle, &cfg).is_err());
    }
}
