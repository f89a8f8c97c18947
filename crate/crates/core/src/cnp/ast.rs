use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Name introduced by `iif` for its computed value.
pub const IIF_OUT: &str = "o";

/// Argument name: a non-empty token of lowercase letters, digits and `_`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArgName(Arc<str>);

impl ArgName {
    pub fn new(name: &str) -> Result<Self> {
        let ok = !name.is_empty()
            && name
                .bytes()
                .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_');
        if ok {
            Ok(ArgName(Arc::from(name)))
        } else {
            Err(Error::InvalidName(name.to_string()))
        }
    }

    pub fn iif_out() -> Self {
        ArgName(Arc::from(IIF_OUT))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_iif_out(&self) -> bool {
        &*self.0 == IIF_OUT
    }
}

impl fmt::Debug for ArgName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for ArgName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    In,
    Out,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::In => "in",
            Mode::Out => "out",
        }
    }
}

/// Ordered signature of a relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Valence {
    entries: Vec<(ArgName, Mode)>,
}

impl Valence {
    pub fn new(entries: Vec<(ArgName, Mode)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (name, _) in &entries {
            if !seen.insert(name.clone()) {
                return Err(Error::WellFormedness(format!(
                    "duplicate argument `{name}` in valence"
                )));
            }
        }
        Ok(Valence { entries })
    }

    /// Parses the compact `rd:in,dist:in,go:out` form.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, mode) = item.split_once(':').ok_or_else(|| {
                Error::InvalidArgument(format!("expected name:mode, got `{item}`"))
            })?;
            let mode = match mode.trim() {
                "in" => Mode::In,
                "out" => Mode::Out,
                other => return Err(Error::InvalidArgument(format!("unknown mode `{other}`"))),
            };
            entries.push((ArgName::new(name.trim())?, mode));
        }
        Valence::new(entries)
    }

    pub fn entries(&self) -> &[(ArgName, Mode)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &ArgName> + '_ {
        self.entries.iter().map(|(n, _)| n)
    }

    pub fn name_set(&self) -> BTreeSet<ArgName> {
        self.names().cloned().collect()
    }

    pub fn inputs(&self) -> impl Iterator<Item = &ArgName> + '_ {
        self.entries
            .iter()
            .filter(|(_, m)| *m == Mode::In)
            .map(|(n, _)| n)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &ArgName> + '_ {
        self.entries
            .iter()
            .filter(|(_, m)| *m == Mode::Out)
            .map(|(n, _)| n)
    }

    pub fn mode_of(&self, name: &ArgName) -> Option<Mode> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| *m)
    }

    pub fn position(&self, name: &ArgName) -> Option<usize> {
        self.entries.iter().position(|(n, _)| n == name)
    }
}

impl fmt::Display for Valence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, (name, mode)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{name}:{}", mode.as_str())?;
        }
        f.write_str("]")
    }
}

/// A set of argument values, keyed by name.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Binding(BTreeMap<ArgName, f64>);

impl Binding {
    pub fn new() -> Self {
        Binding::default()
    }

    pub fn insert(&mut self, name: ArgName, value: f64) {
        self.0.insert(name, value);
    }

    pub fn with(mut self, name: &str, value: f64) -> Result<Self> {
        self.insert(ArgName::new(name)?, value);
        Ok(self)
    }

    pub fn get(&self, name: &ArgName) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn get_str(&self, name: &str) -> Option<f64> {
        self.0
            .iter()
            .find(|(n, _)| n.as_str() == name)
            .map(|(_, v)| *v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ArgName, f64)> + '_ {
        self.0.iter().map(|(n, v)| (n, *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<(ArgName, f64)> for Binding {
    fn from_iter<I: IntoIterator<Item = (ArgName, f64)>>(iter: I) -> Self {
        Binding(iter.into_iter().collect())
    }
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (n, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{n}:{v:.2}")?;
        }
        f.write_str("}")
    }
}

/// One `src -> target` pair of a projection.
pub type Rename = (ArgName, ArgName);

/// Program of the CNP fragment. Children are shared so that enumerated
/// programs can reuse subtrees.
#[derive(Clone, Debug, PartialEq)]
pub enum Program {
    Const(ArgName, f64),
    LtValue(ArgName, f64),
    Iif(Arc<Program>, f64, f64),
    Proj(Arc<Program>, Arc<[Rename]>),
    Ande(Arc<Program>, Arc<Program>),
    Ore(Arc<Program>, Arc<Program>),
}

impl Program {
    pub fn constant(arg: &str, v: f64) -> Result<Self> {
        Ok(Program::Const(ArgName::new(arg)?, v))
    }

    pub fn lt_value(arg: &str, v: f64) -> Result<Self> {
        Ok(Program::LtValue(ArgName::new(arg)?, v))
    }

    pub fn iif(cond: Program, then_v: f64, else_v: f64) -> Self {
        Program::Iif(Arc::new(cond), then_v, else_v)
    }

    pub fn proj(inner: Program, renaming: &[(&str, &str)]) -> Result<Self> {
        let renaming = renaming
            .iter()
            .map(|(s, t)| Ok((ArgName::new(s)?, ArgName::new(t)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Program::Proj(Arc::new(inner), renaming.into()))
    }

    pub fn ande(left: Program, right: Program) -> Self {
        Program::Ande(Arc::new(left), Arc::new(right))
    }

    pub fn ore(left: Program, right: Program) -> Self {
        Program::Ore(Arc::new(left), Arc::new(right))
    }

    /// Node count; a projection and its renaming map count as one node.
    pub fn size(&self) -> usize {
        match self {
            Program::Const(..) | Program::LtValue(..) => 1,
            Program::Iif(c, ..) => 1 + c.size(),
            Program::Proj(p, _) => 1 + p.size(),
            Program::Ande(l, r) | Program::Ore(l, r) => 1 + l.size() + r.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Program::Const(..) | Program::LtValue(..) => 1,
            Program::Iif(c, ..) => 1 + c.depth(),
            Program::Proj(p, _) => 1 + p.depth(),
            Program::Ande(l, r) | Program::Ore(l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    /// Condition-class programs are pure tests: no `iif` anywhere inside.
    pub fn is_condition(&self) -> bool {
        match self {
            Program::Const(..) | Program::LtValue(..) => true,
            Program::Iif(..) => false,
            Program::Proj(p, _) => p.is_condition(),
            Program::Ande(l, r) | Program::Ore(l, r) => l.is_condition() && r.is_condition(),
        }
    }

    /// Every constant occurring in the program, in no particular order.
    pub fn constants(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_constants(&mut out);
        out
    }

    fn collect_constants(&self, out: &mut Vec<f64>) {
        match self {
            Program::Const(_, v) | Program::LtValue(_, v) => out.push(*v),
            Program::Iif(c, t, e) => {
                c.collect_constants(out);
                out.push(*t);
                out.push(*e);
            }
            Program::Proj(p, _) => p.collect_constants(out),
            Program::Ande(l, r) | Program::Ore(l, r) => {
                l.collect_constants(out);
                r.collect_constants(out);
            }
        }
    }
}

/// Argument set of a program, checking well-formedness on the way.
pub fn args_of(p: &Program) -> Result<BTreeSet<ArgName>> {
    match p {
        Program::Const(a, v) | Program::LtValue(a, v) => {
            if !v.is_finite() {
                return Err(Error::WellFormedness(format!("non-finite constant {v}")));
            }
            Ok(BTreeSet::from([a.clone()]))
        }
        Program::Iif(cond, t, e) => {
            if !cond.is_condition() {
                return Err(Error::WellFormedness(
                    "iif condition must be a test (no nested iif)".into(),
                ));
            }
            if !t.is_finite() || !e.is_finite() {
                return Err(Error::WellFormedness("non-finite iif branch value".into()));
            }
            let mut args = args_of(cond)?;
            if !args.insert(ArgName::iif_out()) {
                return Err(Error::WellFormedness(format!(
                    "iif condition mentions the reserved name `{IIF_OUT}`"
                )));
            }
            Ok(args)
        }
        Program::Proj(inner, renaming) => {
            let inner_args = args_of(inner)?;
            let mut sources = BTreeSet::new();
            let mut targets = BTreeSet::new();
            for (src, tgt) in renaming.iter() {
                if !inner_args.contains(src) {
                    return Err(Error::WellFormedness(format!(
                        "projection source `{src}` is not an argument of the inner program"
                    )));
                }
                if !sources.insert(src.clone()) || !targets.insert(tgt.clone()) {
                    return Err(Error::WellFormedness(format!(
                        "projection renaming is not injective at `{src}->{tgt}`"
                    )));
                }
            }
            let mut out = BTreeSet::new();
            for a in inner_args {
                let renamed = renaming
                    .iter()
                    .find(|(s, _)| *s == a)
                    .map(|(_, t)| t.clone())
                    .unwrap_or(a);
                if !out.insert(renamed.clone()) {
                    return Err(Error::WellFormedness(format!(
                        "projection renames onto existing argument `{renamed}`"
                    )));
                }
            }
            Ok(out)
        }
        Program::Ande(l, r) | Program::Ore(l, r) => {
            let mut args = args_of(l)?;
            args.extend(args_of(r)?);
            Ok(args)
        }
    }
}
