//! Human-readable renderings of CNP programs: definite clauses and
//! templated English.

use std::fmt::Write as _;

use crate::cnp::{args_of, values_equal, ArgName, Binding, Mode, Program, Valence};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Formula {
    Eq(ArgName, f64),
    Lt(ArgName, f64),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Clause {
    pub body: Vec<Formula>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClauseSet {
    pub valence: Valence,
    pub clauses: Vec<Clause>,
    /// Notes about overlapping `ore` branches, resolved left first.
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symbols {
    Unicode,
    Ascii,
}

struct Syms {
    arrow: &'static str,
    and: &'static str,
    or: &'static str,
    not: &'static str,
    end: &'static str,
}

impl Symbols {
    fn table(self) -> Syms {
        match self {
            Symbols::Unicode => Syms {
                arrow: " ← ",
                and: " ∧ ",
                or: " ∨ ",
                not: "¬",
                end: "",
            },
            Symbols::Ascii => Syms {
                arrow: " :- ",
                and: ", ",
                or: "; ",
                not: "\\+",
                end: ".",
            },
        }
    }
}

/// Clause variable for an argument: `dist` becomes `Dist`.
pub fn variable(name: &ArgName) -> String {
    let mut chars = name.as_str().chars();
    match chars.next() {
        Some(c) => c.to_ascii_uppercase().to_string() + chars.as_str(),
        None => String::new(),
    }
}

/// Maps names of the current scope to names of the outermost scope.
#[derive(Clone)]
struct Scope {
    renaming: Vec<(ArgName, ArgName)>,
}

impl Scope {
    fn root() -> Self {
        Scope {
            renaming: Vec::new(),
        }
    }

    fn resolve(&self, name: &ArgName) -> ArgName {
        self.renaming
            .iter()
            .find(|(s, _)| s == name)
            .map(|(_, t)| t.clone())
            .unwrap_or_else(|| name.clone())
    }

    fn enter(&self, renaming: &[(ArgName, ArgName)]) -> Self {
        let renaming = renaming
            .iter()
            .map(|(s, t)| (s.clone(), self.resolve(t)))
            .chain(
                // names the projection passes through unchanged
                self.renaming
                    .iter()
                    .filter(|(s, _)| !renaming.iter().any(|(src, tgt)| src == s || tgt == s))
                    .cloned(),
            )
            .collect();
        Scope { renaming }
    }
}

fn condition_formula(p: &Program, scope: &Scope) -> Formula {
    match p {
        Program::Const(a, v) => Formula::Eq(scope.resolve(a), *v),
        Program::LtValue(a, v) => Formula::Lt(scope.resolve(a), *v),
        Program::Proj(inner, r) => condition_formula(inner, &scope.enter(r)),
        Program::Ande(l, r) => {
            let mut parts = Vec::new();
            for side in [l, r] {
                match condition_formula(side, scope) {
                    Formula::And(inner) => parts.extend(inner),
                    f => parts.push(f),
                }
            }
            Formula::And(parts)
        }
        Program::Ore(l, r) => {
            let mut parts = Vec::new();
            for side in [l, r] {
                match condition_formula(side, scope) {
                    Formula::Or(inner) => parts.extend(inner),
                    f => parts.push(f),
                }
            }
            Formula::Or(parts)
        }
        Program::Iif(..) => unreachable!("conditions never contain iif"),
    }
}

/// Whether `p` can bind an out-mode argument of `valence`.
fn binds_output(p: &Program, scope: &Scope, valence: &Valence) -> bool {
    match p {
        Program::Const(a, _) => valence.mode_of(&scope.resolve(a)) == Some(Mode::Out),
        Program::LtValue(..) => false,
        Program::Iif(..) => valence.mode_of(&scope.resolve(&ArgName::iif_out())) == Some(Mode::Out),
        Program::Proj(inner, r) => binds_output(inner, &scope.enter(r), valence),
        Program::Ande(l, r) | Program::Ore(l, r) => {
            binds_output(l, scope, valence) || binds_output(r, scope, valence)
        }
    }
}

fn branches(
    p: &Program,
    scope: &Scope,
    valence: &Valence,
    warnings: &mut Vec<String>,
) -> Vec<Vec<Formula>> {
    match p {
        Program::Const(a, v) => vec![vec![Formula::Eq(scope.resolve(a), *v)]],
        Program::LtValue(a, v) => vec![vec![Formula::Lt(scope.resolve(a), *v)]],
        Program::Iif(cond, t, e) => {
            let out = scope.resolve(&ArgName::iif_out());
            let c = condition_formula(cond, scope);
            let mut taken = match c.clone() {
                Formula::And(parts) => parts,
                f => vec![f],
            };
            taken.push(Formula::Eq(out.clone(), *t));
            let other = vec![Formula::Not(Box::new(c)), Formula::Eq(out, *e)];
            vec![taken, other]
        }
        Program::Proj(inner, r) => branches(inner, &scope.enter(r), valence, warnings),
        Program::Ande(l, r) => {
            let left = branches(l, scope, valence, warnings);
            let right = branches(r, scope, valence, warnings);
            let mut out = Vec::with_capacity(left.len() * right.len());
            for bl in &left {
                for br in &right {
                    out.push(bl.iter().chain(br).cloned().collect());
                }
            }
            out
        }
        Program::Ore(l, r) => {
            if !binds_output(p, scope, valence) {
                return vec![vec![condition_formula(p, scope)]];
            }
            warnings.push(format!(
                "branches of `{p}` may overlap; the left branch takes priority"
            ));
            let mut out = branches(l, scope, valence, warnings);
            out.extend(branches(r, scope, valence, warnings));
            out
        }
    }
}

fn check_program(p: &Program, valence: &Valence) -> Result<()> {
    for a in args_of(p)? {
        if valence.mode_of(&a).is_none() {
            return Err(Error::Signature(a.to_string()));
        }
    }
    Ok(())
}

/// One clause per conditional branch; clauses are tried in order.
pub fn to_clauses(p: &Program, valence: &Valence) -> Result<ClauseSet> {
    check_program(p, valence)?;
    let mut warnings = Vec::new();
    let clauses = branches(p, &Scope::root(), valence, &mut warnings)
        .into_iter()
        .map(|body| Clause { body })
        .collect();
    Ok(ClauseSet {
        valence: valence.clone(),
        clauses,
        warnings,
    })
}

fn render_formula(f: &Formula, s: &Syms, nested: bool, out: &mut String) {
    match f {
        Formula::Eq(a, v) => {
            let _ = write!(out, "{}={v:?}", variable(a));
        }
        Formula::Lt(a, v) => {
            let _ = write!(out, "{}<{v:?}", variable(a));
        }
        Formula::Not(inner) => {
            out.push_str(s.not);
            out.push('(');
            render_formula(inner, s, false, out);
            out.push(')');
        }
        Formula::And(parts) | Formula::Or(parts) => {
            let sep = if matches!(f, Formula::And(_)) {
                s.and
            } else {
                s.or
            };
            if nested {
                out.push('(');
            }
            for (i, part) in parts.iter().enumerate() {
                if i > 0 {
                    out.push_str(sep);
                }
                render_formula(part, s, true, out);
            }
            if nested {
                out.push(')');
            }
        }
    }
}

impl ClauseSet {
    pub fn head(&self) -> String {
        let vars: Vec<String> = self.valence.names().map(variable).collect();
        format!("model({})", vars.join(","))
    }

    pub fn render(&self, symbols: Symbols) -> String {
        let s = symbols.table();
        let head = self.head();
        let mut out = String::new();
        for clause in &self.clauses {
            out.push_str(&head);
            out.push_str(s.arrow);
            for (i, lit) in clause.body.iter().enumerate() {
                if i > 0 {
                    out.push_str(s.and);
                }
                // top-level disjunctions still need parentheses next to conjunction
                render_formula(lit, &s, matches!(lit, Formula::Or(_)), &mut out);
            }
            out.push_str(s.end);
            out.push('\n');
        }
        for w in &self.warnings {
            let _ = writeln!(out, "% warning: {w}");
        }
        out
    }

    /// Runs the clauses as a logic program: the first clause whose body
    /// holds determines the outputs. Equalities on unbound out-mode
    /// arguments bind them; every other literal is a test and waits until
    /// its arguments are bound.
    pub fn evaluate(&self, input: &Binding) -> Option<Binding> {
        'clauses: for clause in &self.clauses {
            let mut env: Vec<(ArgName, f64)> = input.iter().map(|(n, v)| (n.clone(), v)).collect();
            let mut pending: Vec<&Formula> = clause.body.iter().collect();
            while !pending.is_empty() {
                let before = pending.len();
                let mut failed = false;
                pending.retain(|lit| match step(lit, &mut env, &self.valence) {
                    Some(true) => false,
                    Some(false) => {
                        failed = true;
                        false
                    }
                    None => true,
                });
                if failed || pending.len() == before {
                    continue 'clauses;
                }
            }
            let mut out = Binding::new();
            for name in self.valence.outputs() {
                let v = env.iter().find(|(n, _)| n == name)?.1;
                out.insert(name.clone(), v);
            }
            return Some(out);
        }
        None
    }
}

fn lookup(env: &[(ArgName, f64)], name: &ArgName) -> Option<f64> {
    env.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
}

/// `Some(truth)` once decidable, `None` while arguments are missing.
fn step(lit: &Formula, env: &mut Vec<(ArgName, f64)>, valence: &Valence) -> Option<bool> {
    if let Formula::Eq(a, v) = lit {
        if lookup(env, a).is_none() && valence.mode_of(a) == Some(Mode::Out) {
            env.push((a.clone(), *v));
            return Some(true);
        }
    }
    test(lit, env)
}

fn test(f: &Formula, env: &[(ArgName, f64)]) -> Option<bool> {
    match f {
        Formula::Eq(a, v) => lookup(env, a).map(|x| values_equal(x, *v)),
        Formula::Lt(a, v) => lookup(env, a).map(|x| x < *v),
        Formula::Not(inner) => test(inner, env).map(|b| !b),
        Formula::And(parts) => {
            let mut all = true;
            for p in parts {
                all &= test(p, env)?;
            }
            Some(all)
        }
        Formula::Or(parts) => {
            let mut any = false;
            for p in parts {
                any |= test(p, env)?;
            }
            Some(any)
        }
    }
}

/// Templated English: conditions become "the x is v" phrases, `iif`
/// becomes "when ... assign ..., otherwise assign ...".
pub fn to_english(p: &Program, valence: &Valence) -> Result<String> {
    check_program(p, valence)?;
    let r = English { valence };
    let mut conditions = Vec::new();
    let mut actions = Vec::new();
    r.split(p, &Scope::root(), &mut conditions, &mut actions);
    Ok(if actions.is_empty() {
        conditions.join(" and ")
    } else if conditions.is_empty() {
        capitalize(&actions.join(" and ")) + "."
    } else {
        format!(
            "If {}, {}.",
            conditions.join(" and "),
            actions.join(" and ")
        )
    })
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

struct English<'a> {
    valence: &'a Valence,
}

impl English<'_> {
    /// Flattens top-level conjunctions into condition and action phrases.
    fn split(
        &self,
        p: &Program,
        scope: &Scope,
        conditions: &mut Vec<String>,
        actions: &mut Vec<String>,
    ) {
        match p {
            Program::Ande(l, r) => {
                self.split(l, scope, conditions, actions);
                self.split(r, scope, conditions, actions);
            }
            Program::Proj(inner, r) => self.split(inner, &scope.enter(r), conditions, actions),
            _ if binds_output(p, scope, self.valence) => actions.push(self.action(p, scope)),
            _ => conditions.push(self.condition(p, scope)),
        }
    }

    fn condition(&self, p: &Program, scope: &Scope) -> String {
        match p {
            Program::Const(a, v) => format!("the {} is {v:?}", scope.resolve(a)),
            Program::LtValue(a, v) => format!("the {} is less than {v:?}", scope.resolve(a)),
            Program::Proj(inner, r) => self.condition(inner, &scope.enter(r)),
            Program::Ande(l, r) => format!(
                "{} and {}",
                self.condition(l, scope),
                self.condition(r, scope)
            ),
            Program::Ore(l, r) => format!(
                "{} or {}",
                self.condition(l, scope),
                self.condition(r, scope)
            ),
            // an iif whose result lands on an input only tests that input
            Program::Iif(c, t, e) => {
                let out = scope.resolve(&ArgName::iif_out());
                format!(
                    "the {out} is {t:?} when {}, otherwise the {out} is {e:?}",
                    self.condition(c, scope)
                )
            }
        }
    }

    fn action(&self, p: &Program, scope: &Scope) -> String {
        match p {
            Program::Const(a, v) => format!("assign {} to {v:?}", scope.resolve(a)),
            Program::Iif(c, t, e) => {
                let out = scope.resolve(&ArgName::iif_out());
                format!(
                    "when {} assign {out} to {t:?}, otherwise assign {out} to {e:?}",
                    self.condition(c, scope)
                )
            }
            Program::Proj(inner, r) => self.action(inner, &scope.enter(r)),
            Program::Ore(l, r) => format!(
                "{}, or else {}",
                self.clause(l, scope),
                self.clause(r, scope)
            ),
            Program::Ande(..) => self.clause(p, scope),
            Program::LtValue(..) => self.condition(p, scope),
        }
    }

    /// A nested conjunction rendered as "if <conditions>, <actions>".
    fn clause(&self, p: &Program, scope: &Scope) -> String {
        let mut conditions = Vec::new();
        let mut actions = Vec::new();
        self.split(p, scope, &mut conditions, &mut actions);
        match (conditions.is_empty(), actions.is_empty()) {
            (_, true) => conditions.join(" and "),
            (true, false) => actions.join(" and "),
            (false, false) => format!("if {}, {}", conditions.join(" and "), actions.join(" and ")),
        }
    }
}
