//! External evaluator child process adapter.
//!
//! Wire protocol: one request per line on the child's stdin — space-separated
//! decimal coordinates, UTF-8 — answered by one line holding a single decimal
//! value on the child's stdout. The child must flush after each response.
//! One pending request at a time; driver-level caching still applies.

use scamr::{Model, ScamrError};
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::Duration;

struct ChildPipes {
    child: Child,
    stdin: ChildStdin,
    responses: Receiver<std::io::Result<String>>,
}

pub struct ExternalEvaluator {
    dim: usize,
    timeout: Duration,
    pipes: Mutex<ChildPipes>,
}

impl ExternalEvaluator {
    pub fn spawn(command: &str, dim: usize, timeout_secs: u64) -> Result<Self, ScamrError> {
        let mut parts = command.split_whitespace();
        let program = parts.next().ok_or_else(|| {
            ScamrError::InvalidConfig("empty external evaluator command".to_string())
        })?;
        let mut child = Command::new(program)
            .args(parts)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| ScamrError::Evaluation {
                point: vec![],
                message: format!("cannot spawn evaluator {command:?}: {e}"),
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = std::sync::mpsc::channel();
        std::thread::spawn(move || {
            let mut reader = BufReader::new(stdout);
            loop {
                let mut line = String::new();
                match reader.read_line(&mut line) {
                    Ok(0) => break,
                    Ok(_) => {
                        if tx.send(Ok(line)).is_err() {
                            break;
                        }
                    }
                    Err(e) => {
                        let _ = tx.send(Err(e));
                        break;
                    }
                }
            }
        });
        Ok(Self {
            dim,
            timeout: Duration::from_secs(timeout_secs),
            pipes: Mutex::new(ChildPipes {
                child,
                stdin,
                responses: rx,
            }),
        })
    }
}

impl Model for ExternalEvaluator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> Result<f64, ScamrError> {
        let mut pipes = self.pipes.lock().unwrap();
        let request = x
            .iter()
            .map(|v| format!("{v:.17e}"))
            .collect::<Vec<_>>()
            .join(" ");
        writeln!(pipes.stdin, "{request}")
            .and_then(|_| pipes.stdin.flush())
            .map_err(|e| ScamrError::Evaluation {
                point: x.to_vec(),
                message: format!("evaluator stdin closed: {e}"),
            })?;
        let line = match pipes.responses.recv_timeout(self.timeout) {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => {
                return Err(ScamrError::Evaluation {
                    point: x.to_vec(),
                    message: format!("evaluator read failed: {e}"),
                })
            }
            Err(RecvTimeoutError::Timeout) => {
                return Err(ScamrError::Evaluation {
                    point: x.to_vec(),
                    message: format!("evaluator timed out after {:?}", self.timeout),
                })
            }
            Err(RecvTimeoutError::Disconnected) => {
                let status = pipes
                    .child
                    .try_wait()
                    .ok()
                    .flatten()
                    .map(|s| s.to_string())
                    .unwrap_or_else(|| "unknown".to_string());
                return Err(ScamrError::Evaluation {
                    point: x.to_vec(),
                    message: format!("evaluator exited ({status}) before responding"),
                });
            }
        };
        let value: f64 = line.trim().parse().map_err(|_| ScamrError::Evaluation {
            point: x.to_vec(),
            message: format!("evaluator answered unparsable value {:?}", line.trim()),
        })?;
        if !value.is_finite() {
            return Err(ScamrError::NonFiniteModelValue {
                value,
                point: x.to_vec(),
            });
        }
        Ok(value)
    }
}

impl Drop for ExternalEvaluator {
    fn drop(&mut self) {
        if let Ok(mut pipes) = self.pipes.lock() {
            let _ = pipes.child.kill();
            let _ = pipes.child.wait();
        }
    }
}
