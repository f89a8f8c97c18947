//! Textual program syntax: `ande(const(rd,1.0),proj(iif(ltValue(a,0.6),0.0,1.0),[a->dist,o->go]))`.
//!
//! The printer emits no whitespace and formats numbers as the shortest
//! decimal that reads back to the same value, so `parse(print(p)) == p`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::ast::{ArgName, Program, Rename};
use crate::error::{Error, Result};

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Program::Const(a, v) => write!(f, "const({a},{v:?})"),
            Program::LtValue(a, v) => write!(f, "ltValue({a},{v:?})"),
            Program::Iif(c, t, e) => write!(f, "iif({c},{t:?},{e:?})"),
            Program::Proj(p, renaming) => {
                write!(f, "proj({p},[")?;
                for (i, (s, t)) in renaming.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{s}->{t}")?;
                }
                f.write_str("])")
            }
            Program::Ande(l, r) => write!(f, "ande({l},{r})"),
            Program::Ore(l, r) => write!(f, "ore({l},{r})"),
        }
    }
}

impl FromStr for Program {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_program(s)
    }
}

pub fn parse_program(text: &str) -> Result<Program> {
    let mut parser = Parser { src: text, pos: 0 };
    let p = parser.program()?;
    parser.skip_ws();
    if parser.pos != text.len() {
        return Err(parser.error("trailing input"));
    }
    Ok(p)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, msg: &str) -> Error {
        let line = self.src[..self.pos].matches('\n').count() + 1;
        Error::parse(line, format!("{msg} at offset {}", self.pos))
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn eat(&mut self, tok: &str) -> Result<()> {
        self.skip_ws();
        if self.src[self.pos..].starts_with(tok) {
            self.pos += tok.len();
            Ok(())
        } else {
            Err(self.error(&format!("expected `{tok}`")))
        }
    }

    fn peek(&mut self, tok: &str) -> bool {
        self.skip_ws();
        self.src[self.pos..].starts_with(tok)
    }

    fn word(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        if len == 0 {
            return Err(self.error("expected identifier"));
        }
        self.pos += len;
        Ok(&rest[..len])
    }

    fn name(&mut self) -> Result<ArgName> {
        let start = self.pos;
        let w = self.word()?;
        ArgName::new(w).map_err(|_| {
            self.pos = start;
            self.error(&format!("invalid argument name `{w}`"))
        })
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = rest
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')))
            .unwrap_or(rest.len());
        let v: f64 = rest[..len]
            .parse()
            .map_err(|_| self.error("expected number"))?;
        if !v.is_finite() {
            return Err(self.error("number must be finite"));
        }
        self.pos += len;
        Ok(v)
    }

    fn program(&mut self) -> Result<Program> {
        let start = self.pos;
        let head = self.word()?;
        self.eat("(")?;
        let p = match head {
            "const" | "ltValue" => {
                let a = self.name()?;
                self.eat(",")?;
                let v = self.number()?;
                if head == "const" {
                    Program::Const(a, v)
                } else {
                    Program::LtValue(a, v)
                }
            }
            "iif" => {
                let c = self.program()?;
                self.eat(",")?;
                let t = self.number()?;
                self.eat(",")?;
                let e = self.number()?;
                Program::Iif(Arc::new(c), t, e)
            }
            "proj" => {
                let inner = self.program()?;
                self.eat(",")?;
                self.eat("[")?;
                let mut renaming: Vec<Rename> = Vec::new();
                if !self.peek("]") {
                    loop {
                        let s = self.name()?;
                        self.eat("->")?;
                        let t = self.name()?;
                        renaming.push((s, t));
                        if self.peek(",") {
                            self.eat(",")?;
                        } else {
                            break;
                        }
                    }
                }
                self.eat("]")?;
                Program::Proj(Arc::new(inner), renaming.into())
            }
            "ande" | "ore" => {
                let l = self.program()?;
                self.eat(",")?;
                let r = self.program()?;
                if head == "ande" {
                    Program::Ande(Arc::new(l), Arc::new(r))
                } else {
                    Program::Ore(Arc::new(l), Arc::new(r))
                }
            }
            other => {
                self.pos = start;
                return Err(self.error(&format!("unknown combinator `{other}`")));
            }
        };
        self.eat(")")?;
        Ok(p)
    }
}
