//! Oracle living in a child process.
//!
//! Line protocol over the child's stdin/stdout: the request is
//! `rd am gr dist` as space-separated decimals, the response one decimal in
//! `[0, 1]`; `QUIT` ends the session.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use super::{FeatureVector, Oracle};
use crate::error::{Error, Result};

pub const QUIT: &str = "QUIT";

struct Session {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

pub struct ExternalOracle {
    session: Mutex<Session>,
    timeout: Duration,
}

impl ExternalOracle {
    pub fn spawn(program: &str, args: &[String], timeout: Duration) -> Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::OracleIo(format!("failed to start `{program}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(ExternalOracle {
            session: Mutex::new(Session {
                child,
                stdin,
                lines: rx,
            }),
            timeout,
        })
    }

    /// Splits a shell-like command line on whitespace and spawns it.
    pub fn spawn_command(command: &str, timeout: Duration) -> Result<Self> {
        let mut parts = command.split_whitespace().map(String::from);
        let program = parts
            .next()
            .ok_or_else(|| Error::OracleIo("empty oracle command".into()))?;
        let args: Vec<String> = parts.collect();
        Self::spawn(&program, &args, timeout)
    }
}

impl Oracle for ExternalOracle {
    fn predict(&self, f: &FeatureVector) -> Result<f64> {
        let mut s = self
            .session
            .lock()
            .map_err(|_| Error::OracleIo("oracle session poisoned".into()))?;
        writeln!(s.stdin, "{:?} {:?} {:?} {:?}", f.rd, f.am, f.gr, f.dist)
            .and_then(|_| s.stdin.flush())
            .map_err(|e| Error::OracleIo(format!("write failed: {e}")))?;
        let line = match s.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => return Err(Error::OracleIo(format!("read failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => {
                return Err(Error::OracleIo(format!(
                    "no response within {:?}",
                    self.timeout
                )))
            }
            Err(RecvTimeoutError::Disconnected) => {
                return Err(Error::OracleIo("oracle process closed its output".into()))
            }
        };
        let v: f64 = line
            .trim()
            .parse()
            .map_err(|_| Error::OracleIo(format!("malformed response `{}`", line.trim())))?;
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::OracleIo(format!("response {v} outside [0, 1]")));
        }
        Ok(v)
    }
}

impl Drop for ExternalOracle {
    fn drop(&mut self) {
        if let Ok(s) = self.session.get_mut() {
            let _ = writeln!(s.stdin, "{QUIT}");
            let _ = s.stdin.flush();
            for _ in 0..50 {
                if let Ok(Some(_)) = s.child.try_wait() {
                    return;
                }
                thread::sleep(Duration::from_millis(10));
            }
            let _ = s.child.kill();
            let _ = s.child.wait();
        }
    }
}

/// Answers protocol requests from `input` with `oracle` until `QUIT` or EOF.
/// Malformed requests and oracle failures end the session with an error.
pub fn serve(oracle: &dyn Oracle, input: impl BufRead, mut output: impl Write) -> Result<()> {
    for line in input.lines() {
        let line = line.map_err(|e| Error::OracleIo(e.to_string()))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line == QUIT {
            break;
        }
        let nums = line
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| Error::OracleIo(format!("malformed request `{line}`")))?;
        let [rd, am, gr, dist] = nums[..] else {
            return Err(Error::OracleIo(format!("expected 4 values, got `{line}`")));
        };
        let v = oracle.predict(&FeatureVector::new(rd, am, gr, dist))?;
        writeln!(output, "{v:?}")
            .and_then(|_| output.flush())
            .map_err(|e| Error::OracleIo(e.to_string()))?;
    }
    Ok(())
}
