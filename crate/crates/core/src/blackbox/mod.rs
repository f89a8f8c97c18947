//! Black-box decision models for the traffic-light scenario.

mod dataset;
mod external;
mod mlp;

use std::fmt;

pub use dataset::{generate_dataset, Dataset};
pub use external::{serve, ExternalOracle, QUIT};
pub use mlp::{train, Gradients, Mlp, TrainConfig, TrainReport, ARCHITECTURE};

use crate::error::{Error, Result};

/// Light indicators plus the distance to the light as a fraction of 100m.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureVector {
    pub rd: f64,
    pub am: f64,
    pub gr: f64,
    pub dist: f64,
}

impl FeatureVector {
    pub const NAMES: [&'static str; 4] = ["rd", "am", "gr", "dist"];

    pub fn new(rd: f64, am: f64, gr: f64, dist: f64) -> Self {
        FeatureVector { rd, am, gr, dist }
    }

    pub fn with_lights(lights: LightState, dist: f64) -> Self {
        let [rd, am, gr] = lights.0;
        FeatureVector { rd, am, gr, dist }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.rd, self.am, self.gr, self.dist]
    }

    pub fn lights(&self) -> LightState {
        LightState([self.rd, self.am, self.gr])
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "rd" => Some(self.rd),
            "am" => Some(self.am),
            "gr" => Some(self.gr),
            "dist" => Some(self.dist),
            _ => None,
        }
    }
}

impl fmt::Display for FeatureVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[rd:{:.2}, am:{:.2}, gr:{:.2}, dist:{:.4}]",
            self.rd, self.am, self.gr, self.dist
        )
    }
}

/// Values of the three light indicators `(rd, am, gr)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LightState(pub [f64; 3]);

impl LightState {
    pub const RED: LightState = LightState([1.0, 0.0, 0.0]);
    pub const AMBER: LightState = LightState([0.0, 1.0, 0.0]);
    pub const GREEN: LightState = LightState([0.0, 0.0, 1.0]);

    /// The three states seen in training, red first.
    pub fn regular() -> Vec<LightState> {
        vec![Self::RED, Self::AMBER, Self::GREEN]
    }

    /// All eight on/off assignments, the regular ones first.
    pub fn all_combinations() -> Vec<LightState> {
        let mut states = Self::regular();
        for mask in 0..8u8 {
            let s = LightState([
                f64::from(mask >> 2 & 1),
                f64::from(mask >> 1 & 1),
                f64::from(mask & 1),
            ]);
            if !states.contains(&s) {
                states.push(s);
            }
        }
        states
    }

    pub fn is_regular(&self) -> bool {
        self.0.iter().filter(|&&v| v == 1.0).count() == 1
            && self.0.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    pub fn name(&self) -> String {
        match *self {
            Self::RED => "red".into(),
            Self::AMBER => "amber".into(),
            Self::GREEN => "green".into(),
            LightState([r, a, g]) => format!("lights_{r}{a}{g}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Label {
    Stop,
    Go,
}

impl Label {
    pub fn value(self) -> f64 {
        match self {
            Label::Stop => 0.0,
            Label::Go => 1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::Stop => Label::Go,
            Label::Go => Label::Stop,
        }
    }

    pub fn from_value(v: f64) -> Option<Self> {
        if v == 0.0 {
            Some(Label::Stop)
        } else if v == 1.0 {
            Some(Label::Go)
        } else {
            None
        }
    }
}

/// The ground-truth traffic rule the training labels are drawn from.
///
/// Red stops closer than 60m, amber stops between 10m and 80m inclusive,
/// green always goes.
pub fn rule_label(f: &FeatureVector) -> Result<Label> {
    let lights = f.lights();
    if !lights.is_regular() {
        return Err(Error::IrregularState(lights.0));
    }
    let stop = if f.rd == 1.0 {
        f.dist < 0.6
    } else if f.am == 1.0 {
        (0.1..=0.8).contains(&f.dist)
    } else {
        false
    };
    Ok(if stop { Label::Stop } else { Label::Go })
}

/// Anything that maps a feature vector to a score in `[0, 1]`.
pub trait Oracle: Sync {
    fn predict(&self, f: &FeatureVector) -> Result<f64>;

    /// The action: the prediction rounded to the nearest integer.
    fn action(&self, f: &FeatureVector) -> Result<f64> {
        Ok(self.predict(f)?.round_ties_even())
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RuleOracle;

impl Oracle for RuleOracle {
    fn predict(&self, f: &FeatureVector) -> Result<f64> {
        rule_label(f).map(Label::value)
    }
}

impl<O: Oracle + ?Sized> Oracle for &O {
    fn predict(&self, f: &FeatureVector) -> Result<f64> {
        (**self).predict(f)
    }
}

impl<O: Oracle + ?Sized + Send> Oracle for Box<O> {
    fn predict(&self, f: &FeatureVector) -> Result<f64> {
        (**self).predict(f)
    }
}
