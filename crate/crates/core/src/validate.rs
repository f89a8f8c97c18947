//! Randomized agreement testing between an explanation and a black box.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blackbox::{FeatureVector, LightState, Oracle};
use crate::cnp::{evaluate, ArgName, Binding, Mode, Program, Valence};
use crate::error::{Error, Result};
use crate::exec::{map_ordered, Parallelism};

/// Disagreeing inputs kept in a report.
pub const MAX_EXAMPLES: usize = 20;

/// Number of independently seeded sample partitions; fixed so that the
/// report does not depend on the execution mode.
const PARTITIONS: usize = 16;

/// A program used as a black box: its `go` binding is the prediction.
#[derive(Clone, Debug)]
pub struct ProgramOracle {
    program: Program,
    valence: Valence,
    output: ArgName,
}

impl ProgramOracle {
    pub fn new(program: Program, valence: Valence) -> Result<Self> {
        let outputs: Vec<&ArgName> = valence.outputs().collect();
        let output = match outputs[..] {
            [o] => o.clone(),
            _ => {
                return Err(Error::InvalidArgument(
                    "explanation valence needs exactly one output".into(),
                ))
            }
        };
        for name in valence.inputs() {
            if FeatureVector::NAMES.iter().all(|n| *n != name.as_str()) {
                return Err(Error::Signature(name.to_string()));
            }
        }
        Ok(ProgramOracle {
            program,
            valence,
            output,
        })
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn valence(&self) -> &Valence {
        &self.valence
    }
}

impl Oracle for ProgramOracle {
    fn predict(&self, f: &FeatureVector) -> Result<f64> {
        let mut input = Binding::new();
        for name in self.valence.inputs() {
            // checked in `new`
            let v = f.get(name.as_str()).unwrap_or_default();
            input.insert(name.clone(), v);
        }
        evaluate(&self.program, &input, &self.valence)?
            .and_then(|b| b.get(&self.output))
            .ok_or_else(|| Error::IncompleteExplanation {
                name: self.output.to_string(),
                input: f.to_string(),
            })
    }
}

/// Fixed feature values; the sampled light state must agree with them.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Region {
    fixed: Vec<(ArgName, f64)>,
}

impl Region {
    pub fn new(fixed: Vec<(ArgName, f64)>) -> Result<Self> {
        for (name, _) in &fixed {
            if FeatureVector::NAMES.iter().all(|n| *n != name.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "unknown feature `{name}` in region"
                )));
            }
        }
        Ok(Region { fixed })
    }

    /// Parses `name=value,...`; the empty string is the unrestricted region.
    pub fn parse(text: &str) -> Result<Self> {
        let mut fixed = Vec::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, value) = part.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!("expected name=value, got `{part}`"))
            })?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad value in `{part}`")))?;
            fixed.push((ArgName::new(name.trim())?, value));
        }
        Region::new(fixed)
    }

    /// The region where the given light is on and the others are off.
    pub fn light(state: LightState) -> Self {
        let fixed = ["rd", "am", "gr"]
            .iter()
            .zip(state.0)
            .map(|(n, v)| (ArgName::new(n).expect("static name"), v))
            .collect();
        Region { fixed }
    }

    pub fn fixed(&self) -> &[(ArgName, f64)] {
        &self.fixed
    }

    fn value(&self, name: &str) -> Option<f64> {
        self.fixed
            .iter()
            .find(|(n, _)| n.as_str() == name)
            .map(|(_, v)| *v)
    }

    /// Light states to sample from: regular states that agree with the
    /// region, or the single fully fixed state.
    fn states(&self) -> Result<Vec<LightState>> {
        let agrees = |s: &LightState| {
            ["rd", "am", "gr"]
                .iter()
                .zip(s.0)
                .all(|(n, v)| self.value(n).is_none_or(|f| f == v))
        };
        let regular: Vec<LightState> = LightState::regular().into_iter().filter(agrees).collect();
        if !regular.is_empty() {
            return Ok(regular);
        }
        match (self.value("rd"), self.value("am"), self.value("gr")) {
            (Some(r), Some(a), Some(g)) => Ok(vec![LightState([r, a, g])]),
            _ => Err(Error::InvalidArgument(
                "region admits no regular light state".into(),
            )),
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .fixed
            .iter()
            .map(|(n, v)| format!("{n}={v:?}"))
            .collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Disagreement {
    pub input: FeatureVector,
    pub explanation: f64,
    pub oracle: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgreementReport {
    pub samples: usize,
    pub disagreements: usize,
    /// The first disagreeing inputs in sampling order.
    pub examples: Vec<Disagreement>,
}

impl AgreementReport {
    pub fn rate(&self) -> f64 {
        self.disagreements as f64 / self.samples as f64
    }

    fn merge(mut self, other: AgreementReport) -> AgreementReport {
        self.samples += other.samples;
        self.disagreements += other.disagreements;
        let room = MAX_EXAMPLES - self.examples.len();
        self.examples.extend(other.examples.into_iter().take(room));
        self
    }
}

impl fmt::Display for AgreementReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} of {} sampled inputs disagree",
            self.disagreements, self.samples
        )?;
        for d in &self.examples {
            writeln!(
                f,
                "  {} explanation={:?} oracle={:?}",
                d.input, d.explanation, d.oracle
            )?;
        }
        writeln!(f, "disagreement_rate={}", self.rate())
    }
}

fn sample(rng: &mut ChaCha8Rng, region: &Region, states: &[LightState]) -> FeatureVector {
    let state = states[rng.gen_range(0..states.len())];
    let dist = rng.gen::<f64>();
    let mut f = FeatureVector::with_lights(state, dist);
    if let Some(d) = region.value("dist") {
        f.dist = d;
    }
    f
}

/// Estimates how often `p` and the rounded oracle output differ on inputs
/// drawn uniformly from `region`.
///
/// Samples are split into fixed partitions, each with its own ChaCha
/// stream of `seed`, so the report is the same in every execution mode.
pub fn agreement(
    p: &Program,
    valence: &Valence,
    oracle: &dyn Oracle,
    n: usize,
    seed: u64,
    region: &Region,
    parallelism: Parallelism,
) -> Result<AgreementReport> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "agreement needs at least one sample".into(),
        ));
    }
    for name in crate::cnp::args_of(p)? {
        if valence.mode_of(&name).is_none() {
            return Err(Error::Signature(name.to_string()));
        }
    }
    for name in valence.names() {
        let fixed_or_sampled = region.value(name.as_str()).is_some()
            || valence.mode_of(name) == Some(Mode::Out)
            || FeatureVector::NAMES.contains(&name.as_str());
        if !fixed_or_sampled {
            return Err(Error::Signature(name.to_string()));
        }
    }
    let explanation = ProgramOracle::new(p.clone(), valence.clone())?;
    let states = region.states()?;
    let partitions: Vec<(u64, usize)> = (0..PARTITIONS)
        .map(|i| (i as u64, n / PARTITIONS + usize::from(i < n % PARTITIONS)))
        .collect();
    let parts = map_ordered(parallelism, &partitions, |&(stream, count)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut report = AgreementReport {
            samples: count,
            disagreements: 0,
            examples: Vec::new(),
        };
        for _ in 0..count {
            let f = sample(&mut rng, region, &states);
            let mine = explanation.action(&f)?;
            let theirs = oracle.action(&f)?;
            if mine != theirs {
                report.disagreements += 1;
                if report.examples.len() < MAX_EXAMPLES {
                    report.examples.push(Disagreement {
                        input: f,
                        explanation: mine,
                        oracle: theirs,
                    });
                }
            }
        }
        Ok(report)
    });
    let mut total = AgreementReport {
        samples: 0,
        disagreements: 0,
        examples: Vec::new(),
    };
    for part in parts {
        total = total.merge(part?);
    }
    Ok(total)
}
