use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{rule_label, FeatureVector, Label, LightState};
use crate::error::{Error, Result};

/// Labelled traffic-light samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub rows: Vec<(FeatureVector, Label)>,
    pub seed: u64,
    pub noise_rate: f64,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Number of rows whose label disagrees with the rule.
    pub fn noisy_rows(&self) -> usize {
        self.rows
            .iter()
            .filter(|(f, l)| rule_label(f).map_or(true, |r| r != *l))
            .count()
    }

    /// CSV with header `rd,am,gr,dist,label`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rd,am,gr,dist,label\n");
        for (f, label) in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{}",
                f.rd,
                f.am,
                f.gr,
                f.dist,
                label.value()
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == "rd,am,gr,dist,label" => {}
            _ => return Err(Error::parse(1, "expected header `rd,am,gr,dist,label`")),
        }
        let mut rows = Vec::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(line_no, e.to_string()))?;
            let [rd, am, gr, dist, label] = fields[..] else {
                return Err(Error::parse(
                    line_no,
                    format!("expected 5 fields, found {}", fields.len()),
                ));
            };
            let label = Label::from_value(label).ok_or_else(|| {
                Error::parse(line_no, format!("label must be 0 or 1, found {label}"))
            })?;
            rows.push((FeatureVector::new(rd, am, gr, dist), label));
        }
        Ok(Dataset {
            rows,
            seed: 0,
            noise_rate: 0.0,
        })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }
}

/// Draws `n` samples with a uniformly chosen light and a uniform distance,
/// labels them with the rule, then flips exactly `round(noise * n)` labels.
///
/// Distances are rounded to 6 decimals before labelling so the CSV form
/// carries exactly the labelled values.
pub fn generate_dataset(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "dataset size must be positive".into(),
        ));
    }
    if !(0.0..0.5).contains(&noise) {
        return Err(Error::InvalidArgument(format!(
            "noise rate {noise} outside [0, 0.5)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = LightState::regular();
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let lights = states[rng.gen_range(0..states.len())];
        let dist = (rng.gen::<f64>() * 1e6).round() / 1e6;
        let f = FeatureVector::with_lights(lights, dist);
        rows.push((f, rule_label(&f)?));
    }
    let flips = (noise * n as f64).round() as usize;
    for i in index::sample(&mut rng, n, flips) {
        rows[i].1 = rows[i].1.flipped();
    }
    Ok(Dataset {
        rows,
        seed,
        noise_rate: noise,
    })
}
