//! Synthesis job files: ground facts naming the valence, the constant pool
//! and the observables.
//!
//! ```text
//! jobValence([rd:in, dist:in, go:out]).
//! jobConstant(0.6).
//! jobObservable([rd:1.00, dist:0.59, go:0.00], true).
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::cnp::{values_equal, ArgName, Mode, Valence};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    values: Vec<(ArgName, f64)>,
    positive: bool,
}

impl Observable {
    pub fn new(values: Vec<(ArgName, f64)>, positive: bool) -> Self {
        Observable { values, positive }
    }

    /// Values in valence order.
    pub fn values(&self) -> &[(ArgName, f64)] {
        &self.values
    }

    pub fn positive(&self) -> bool {
        self.positive
    }

    pub fn get(&self, name: &ArgName) -> Option<f64> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisJob {
    valence: Valence,
    constants: Vec<f64>,
    observables: Vec<Observable>,
}

impl SynthesisJob {
    /// Builds a job; the constant pool is sorted and deduplicated.
    pub fn new(
        valence: Valence,
        constants: Vec<f64>,
        observables: Vec<Observable>,
    ) -> Result<Self> {
        for (i, obs) in observables.iter().enumerate() {
            check_observable_shape(&valence, obs)
                .map_err(|m| Error::InvalidJob(format!("observable {}: {m}", i + 1)))?;
        }
        if let Some(v) = constants.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidJob(format!("non-finite constant {v}")));
        }
        Ok(SynthesisJob {
            valence,
            constants: canonical_pool(constants),
            observables,
        })
    }

    pub fn valence(&self) -> &Valence {
        &self.valence
    }

    pub fn constants(&self) -> &[f64] {
        &self.constants
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn with_observable(mut self, obs: Observable) -> Result<Self> {
        check_observable_shape(&self.valence, &obs).map_err(Error::InvalidJob)?;
        self.observables.push(obs);
        Ok(self)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse(&text)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serialize(self)).map_err(|e| Error::io(path, e))
    }
}

fn check_observable_shape(valence: &Valence, obs: &Observable) -> Result<(), String> {
    if obs.values.len() != valence.len() {
        return Err(format!(
            "expected {} values, found {}",
            valence.len(),
            obs.values.len()
        ));
    }
    for ((want, _), (got, v)) in valence.entries().iter().zip(&obs.values) {
        if want != got {
            return Err(format!("expected argument `{want}`, found `{got}`"));
        }
        if !v.is_finite() {
            return Err(format!("non-finite value for `{got}`"));
        }
    }
    Ok(())
}

fn canonical_pool(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    values.dedup_by(|a, b| values_equal(*a, *b));
    values
}

/// Constant-pool formatting: shortest round-trip decimal, e.g. `0.6`, `1.0`.
pub fn format_constant(v: f64) -> String {
    format!("{v:?}")
}

/// Observable formatting: two decimals, unless that would lose information.
pub fn format_observable_value(v: f64) -> String {
    let two = format!("{v:.2}");
    if two.parse::<f64>().ok() == Some(v) {
        two
    } else {
        format!("{v:?}")
    }
}

pub fn serialize(job: &SynthesisJob) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "jobValence({}).", job.valence);
    for c in &job.constants {
        let _ = writeln!(out, "jobConstant({}).", format_constant(*c));
    }
    for obs in &job.observables {
        out.push_str("jobObservable([");
        for (i, (n, v)) in obs.values.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            let _ = write!(out, "{n}:{}", format_observable_value(*v));
        }
        let _ = writeln!(out, "], {}).", obs.positive);
    }
    out
}

pub fn parse(text: &str) -> Result<SynthesisJob> {
    let mut valence: Option<(usize, Valence)> = None;
    let mut constants = Vec::new();
    let mut raw_observables: Vec<(usize, Vec<(ArgName, f64)>, bool)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fact = line
            .strip_suffix('.')
            .ok_or_else(|| Error::parse(line_no, "fact must end with `.`"))?;
        let (head, args) = fact
            .split_once('(')
            .ok_or_else(|| Error::parse(line_no, "expected `name(...)`"))?;
        let args = args
            .strip_suffix(')')
            .ok_or_else(|| Error::parse(line_no, "unbalanced parentheses"))?;
        match head.trim() {
            "jobValence" => {
                if let Some((first, _)) = valence {
                    return Err(Error::parse(
                        line_no,
                        format!("duplicate jobValence (first on line {first})"),
                    ));
                }
                let entries = parse_list(args, line_no)?
                    .into_iter()
                    .map(|(name, mode)| {
                        let mode = match mode {
                            "in" => Mode::In,
                            "out" => Mode::Out,
                            other => {
                                return Err(Error::parse(
                                    line_no,
                                    format!("unknown mode `{other}`"),
                                ))
                            }
                        };
                        Ok((name, mode))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let v = Valence::new(entries).map_err(|e| Error::parse(line_no, e.to_string()))?;
                valence = Some((line_no, v));
            }
            "jobConstant" => constants.push(parse_number(args, line_no)?),
            "jobObservable" => {
                let (list, polarity) = args
                    .rsplit_once(',')
                    .ok_or_else(|| Error::parse(line_no, "expected `[...], true|false`"))?;
                let positive = match polarity.trim() {
                    "true" => true,
                    "false" => false,
                    other => {
                        return Err(Error::parse(line_no, format!("invalid polarity `{other}`")))
                    }
                };
                let values = parse_list(list, line_no)?
                    .into_iter()
                    .map(|(name, v)| Ok((name, parse_number(v, line_no)?)))
                    .collect::<Result<Vec<_>>>()?;
                raw_observables.push((line_no, values, positive));
            }
            other => return Err(Error::parse(line_no, format!("unknown fact `{other}`"))),
        }
    }

    let (_, valence) = valence.ok_or_else(|| Error::parse(1, "missing jobValence fact"))?;
    let mut observables = Vec::with_capacity(raw_observables.len());
    for (line_no, values, positive) in raw_observables {
        let obs = Observable::new(values, positive);
        check_observable_shape(&valence, &obs).map_err(|m| Error::parse(line_no, m))?;
        observables.push(obs);
    }
    SynthesisJob::new(valence, constants, observables)
}

fn parse_number(s: &str, line_no: usize) -> Result<f64> {
    let s = s.trim();
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::parse(line_no, format!("invalid number `{s}`"))),
    }
}

/// Parses `[name:x, name:y]` into `(name, x)` pairs.
fn parse_list(s: &str, line_no: usize) -> Result<Vec<(ArgName, &str)>> {
    let inner = s
        .trim()
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| Error::parse(line_no, "expected a `[...]` list"))?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|item| {
            let (name, value) = item.split_once(':').ok_or_else(|| {
                Error::parse(
                    line_no,
                    format!("expected `name:value` in `{}`", item.trim()),
                )
            })?;
            let name =
                ArgName::new(name.trim()).map_err(|e| Error::parse(line_no, e.to_string()))?;
            Ok((name, value.trim()))
        })
        .collect()
}

/// Restricts `job` to the observables matching `fixed` and removes the
/// `drop`ped arguments. Dropping an argument that still varies among the
/// kept rows is refused.
pub fn slice(
    job: &SynthesisJob,
    fixed: &[(ArgName, f64)],
    drop: &[ArgName],
) -> Result<SynthesisJob> {
    for (name, _) in fixed {
        if job.valence.mode_of(name).is_none() {
            return Err(Error::InvalidArgument(format!(
                "cannot fix unknown argument `{name}`"
            )));
        }
    }
    for name in drop {
        match job.valence.mode_of(name) {
            None => {
                return Err(Error::InvalidArgument(format!(
                    "cannot drop unknown argument `{name}`"
                )))
            }
            Some(Mode::Out) => {
                return Err(Error::InvalidArgument(format!(
                    "cannot drop out-mode argument `{name}`"
                )))
            }
            Some(Mode::In) => {}
        }
    }
    if fixed.is_empty() && drop.is_empty() {
        return Ok(job.clone());
    }

    let kept: Vec<&Observable> = job
        .observables
        .iter()
        .filter(|obs| {
            fixed
                .iter()
                .all(|(n, v)| obs.get(n).is_some_and(|x| values_equal(x, *v)))
        })
        .collect();

    for name in drop {
        let mut values = kept.iter().filter_map(|o| o.get(name));
        if let Some(first) = values.next() {
            if values.any(|v| !values_equal(v, first)) {
                return Err(Error::UnsafeSlice(name.to_string()));
            }
        }
    }

    let dropped: BTreeSet<&ArgName> = drop.iter().collect();
    let valence = Valence::new(
        job.valence
            .entries()
            .iter()
            .filter(|(n, _)| !dropped.contains(n))
            .cloned()
            .collect(),
    )?;
    let observables: Vec<Observable> = kept
        .into_iter()
        .map(|o| {
            Observable::new(
                o.values
                    .iter()
                    .filter(|(n, _)| !dropped.contains(n))
                    .cloned()
                    .collect(),
                o.positive,
            )
        })
        .collect();
    let constants = observables
        .iter()
        .flat_map(|o| o.values.iter().map(|(_, v)| *v))
        .collect();
    SynthesisJob::new(valence, constants, observables)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const REFERENCE_LISTING: &str = include_str!("../tests/golden/full_job.pl");
    const RED_SLICE: &str = include_str!("../tests/golden/red_job.pl");

    fn name(s: &str) -> ArgName {
        ArgName::new(s).unwrap()
    }

    #[test]
    fn parses_reference_listing() {
        let job = parse(REFERENCE_LISTING).unwrap();
        assert_eq!(job.valence().len(), 5);
        assert_eq!(job.constants().len(), 8);
        assert_eq!(job.observables().len(), 12);
        assert_eq!(serialize(&job), REFERENCE_LISTING);
    }

    #[test]
    fn empty_observables_are_valid() {
        let job = parse("jobValence([x:in, y:out]).\njobConstant(0.0).\n").unwrap();
        assert!(job.observables().is_empty());
    }

    #[test]
    fn arity_mismatch_reports_line() {
        let text = "jobValence([rd:in, am:in, gr:in, dist:in, go:out]).\n\njobObservable([rd:1.00], true).\n";
        match parse(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_errors() {
        let bad = [
            "jobValence([x:in]).\njobValence([x:in]).\n",
            "jobFoo(1).\n",
            "jobValence([x:in]).\njobConstant(abc).\n",
            "jobValence([x:in]).\njobObservable([x:1.0], maybe).\n",
            "jobValence([x:sideways]).\n",
            "jobConstant(1.0).\n",
            "jobValence([x:in])\n",
            "jobValence([x:in, y:out]).\njobObservable([y:1.0, x:0.0], true).\n",
        ];
        for text in bad {
            assert!(matches!(parse(text), Err(Error::Parse { .. })), "{text}");
        }
    }

    #[test]
    fn facts_in_any_order_serialize_canonically() {
        let text = "jobObservable([x:0.50, y:1.00], false).\njobConstant(1.0).\n\njobConstant(0.5).\njobValence([x:in, y:out]).\n";
        let job = parse(text).unwrap();
        assert_eq!(
            serialize(&job),
            "jobValence([x:in, y:out]).\njobConstant(0.5).\njobConstant(1.0).\njobObservable([x:0.50, y:1.00], false).\n"
        );
    }

    #[test]
    fn odd_values_survive_round_trip() {
        let text = "jobValence([x:in, y:out]).\njobConstant(0.125).\njobObservable([x:0.125, y:1.00], true).\n";
        let job = parse(text).unwrap();
        assert_eq!(serialize(&job), text);
    }

    #[test]
    fn slice_to_red() {
        let job = parse(REFERENCE_LISTING).unwrap();
        let red = slice(&job, &[(name("rd"), 1.0)], &[name("am"), name("gr")]).unwrap();
        assert_eq!(serialize(&red), RED_SLICE);
    }

    #[test]
    fn slice_identity() {
        let job = parse(REFERENCE_LISTING).unwrap();
        assert_eq!(slice(&job, &[], &[]).unwrap(), job);
    }

    #[test]
    fn slice_refuses_information_loss() {
        let red = parse(RED_SLICE).unwrap();
        assert!(matches!(
            slice(&red, &[], &[name("dist")]),
            Err(Error::UnsafeSlice(n)) if n == "dist"
        ));
        assert!(slice(&red, &[], &[name("go")]).is_err());
        assert!(slice(&red, &[(name("nope"), 1.0)], &[]).is_err());
    }
}
