use std::io::Read;
use std::path::Path;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

use super::{HarnessError, LabelMode, Result, TargetSpec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "code")]
pub enum RejectReason {
    ExitCode(i32),
    /// Terminated by a signal.
    Killed,
    Timeout,
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RejectReason::ExitCode(c) => write!(f, "exit {c}"),
            RejectReason::Killed => f.write_str("killed"),
            RejectReason::Timeout => f.write_str("timeout"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub accepted: bool,
    pub label: Option<String>,
    pub reason: Option<RejectReason>,
    pub wall_ms: f64,
    pub stderr: Vec<u8>,
}

fn drain<R: Read + Send + 'static>(pipe: Option<R>) -> thread::JoinHandle<Vec<u8>> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(mut p) = pipe {
            let _ = p.read_to_end(&mut buf);
        }
        buf
    })
}

/// Runs the target on `input`. Exit code 0 accepts; anything else, a signal
/// or running past the timeout rejects.
pub fn execute_target(spec: &TargetSpec, input: &Path) -> Result<Execution> {
    spec.validate()?;
    let argv = spec.argv(input);
    let start = Instant::now();
    let mut child = Command::new(&argv[0])
        .args(&argv[1..])
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|source| HarnessError::Spawn { command: argv.join(" "), source })?;
    let out = drain(child.stdout.take());
    let err = drain(child.stderr.take());
    let status = child
        .wait_timeout(Duration::from_millis(spec.timeout_ms))
        .map_err(|source| HarnessError::Spawn { command: argv.join(" "), source })?;
    let status = match status {
        Some(s) => Some(s),
        None => {
            let _ = child.kill();
            let _ = child.wait();
            None
        }
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let stdout = out.join().unwrap_or_default();
    let stderr = err.join().unwrap_or_default();

    let reason = match status {
        None => Some(RejectReason::Timeout),
        Some(s) if s.success() => None,
        Some(s) => Some(s.code().map_or(RejectReason::Killed, RejectReason::ExitCode)),
    };
    let accepted = reason.is_none();
    let label = if accepted && spec.label_mode == LabelMode::StdoutLabel {
        String::from_utf8_lossy(&stdout)
            .lines()
            .next()
            .map(|l| l.trim().to_string())
            .filter(|l| !l.is_empty())
    } else {
        None
    };
    Ok(Execution { accepted, label, reason, wall_ms, stderr })
}
