//! Evaluator backed by a child process speaking the JSON-lines protocol.
//!
//! One request is in flight at a time. Replies are read on a helper thread
//! so each request can be bounded by a timeout; a reply that arrives after
//! its request timed out is discarded.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, ExitStatus, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, warn};

use crate::error::EvaluatorError;
use crate::evaluators::protocol::{
    encode, ChildMessage, LabelMap, ParentMessage, ResultMessage, PROTOCOL_VERSION,
};
use crate::evaluators::{Evaluation, Evaluator, Status};
use crate::space::{Combination, SearchSpace};

#[derive(Debug)]
pub struct ExternalEvaluator {
    command: String,
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<String>,
    timeout: Duration,
    input_size: u32,
    next_id: u64,
    abandoned: HashSet<u64>,
    dead: Option<String>,
    name: String,
    last_violation: Option<String>,
    shut_down: bool,
}

/// Spawns `command args...`, performs the handshake and returns a ready
/// evaluator. `timeout_s` bounds the handshake and every request.
pub fn external_evaluator(
    command: &str,
    args: &[String],
    timeout_s: f64,
    input_size: u32,
) -> Result<ExternalEvaluator, EvaluatorError> {
    ExternalEvaluator::spawn(command, args, Duration::from_secs_f64(timeout_s), input_size)
}

enum Reply {
    Line(String),
    TimedOut,
    Closed,
}

impl ExternalEvaluator {
    pub fn spawn(
        command: &str,
        args: &[String],
        timeout: Duration,
        input_size: u32,
    ) -> Result<Self, EvaluatorError> {
        let mut child = Command::new(command)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| EvaluatorError::Spawn { command: command.to_string(), source })?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                match line {
                    Ok(line) => {
                        if tx.send(line).is_err() {
                            break;
                        }
                    }
                    Err(_) => break,
                }
            }
        });
        let mut evaluator = ExternalEvaluator {
            command: command.to_string(),
            child,
            stdin,
            lines,
            timeout,
            input_size,
            next_id: 1,
            abandoned: HashSet::new(),
            dead: None,
            name: String::new(),
            last_violation: None,
            shut_down: false,
        };
        evaluator.handshake()?;
        Ok(evaluator)
    }

    fn handshake(&mut self) -> Result<(), EvaluatorError> {
        self.send(&ParentMessage::Hello { protocol: PROTOCOL_VERSION })
            .map_err(|e| EvaluatorError::Handshake(format!("cannot send hello: {e}")))?;
        let line = match self.receive(Instant::now() + self.timeout) {
            Reply::Line(line) => line,
            Reply::TimedOut => {
                return Err(EvaluatorError::Handshake(format!(
                    "no hello from `{}` within {:?}",
                    self.command, self.timeout
                )))
            }
            Reply::Closed => {
                return Err(EvaluatorError::Handshake(format!("`{}` exited before hello", self.command)))
            }
        };
        match serde_json::from_str::<ChildMessage>(&line) {
            Ok(ChildMessage::Hello { protocol, name }) if protocol == PROTOCOL_VERSION => {
                self.name = name;
                Ok(())
            }
            Ok(ChildMessage::Hello { protocol, .. }) => Err(EvaluatorError::Handshake(format!(
                "protocol mismatch: child speaks {protocol}, parent speaks {PROTOCOL_VERSION}"
            ))),
            _ => Err(EvaluatorError::Handshake(format!("malformed hello: {line}"))),
        }
    }

    /// Name the child announced in its hello.
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_dead(&self) -> bool {
        self.dead.is_some()
    }

    /// Why the most recent request ended in `protocol_error`, if it did.
    pub fn last_violation(&self) -> Option<&str> {
        self.last_violation.as_deref()
    }

    pub fn set_timeout(&mut self, timeout: Duration) {
        self.timeout = timeout;
    }

    fn send(&mut self, message: &ParentMessage) -> std::io::Result<()> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::BrokenPipe, "stdin closed"))?;
        let mut line = encode(message);
        line.push('\n');
        stdin.write_all(line.as_bytes())?;
        stdin.flush()
    }

    fn receive(&self, deadline: Instant) -> Reply {
        let remaining = deadline.saturating_duration_since(Instant::now());
        match self.lines.recv_timeout(remaining) {
            Ok(line) => Reply::Line(line),
            Err(RecvTimeoutError::Timeout) => Reply::TimedOut,
            Err(RecvTimeoutError::Disconnected) => Reply::Closed,
        }
    }

    fn violation(&mut self, id: u64, message: String) -> Evaluation {
        warn!("evaluator `{}`: {message}", self.command);
        self.last_violation = Some(message);
        // a correct reply may still be on its way; it must not be mistaken
        // for the answer to a later request
        self.abandoned.insert(id);
        Evaluation::failure(Status::ProtocolError)
    }

    /// Sends one eval request for `labels` and waits for its reply.
    pub fn evaluate_labels(&mut self, labels: LabelMap) -> Result<Evaluation, EvaluatorError> {
        if let Some(reason) = &self.dead {
            return Err(EvaluatorError::Dead(reason.clone()));
        }
        self.last_violation = None;
        let id = self.next_id;
        self.next_id += 1;
        let request = ParentMessage::Eval { id, combination: labels, input_size: self.input_size };
        if let Err(e) = self.send(&request) {
            let reason = format!("request {id} could not be sent: {e}");
            self.dead = Some(reason.clone());
            return Err(EvaluatorError::Dead(reason));
        }
        let deadline = Instant::now() + self.timeout;
        loop {
            let line = match self.receive(deadline) {
                Reply::Line(line) => line,
                Reply::TimedOut => {
                    debug!("request {id} timed out after {:?}", self.timeout);
                    self.abandoned.insert(id);
                    return Ok(Evaluation::failure(Status::Timeout));
                }
                Reply::Closed => {
                    let reason = format!("child exited with request {id} pending (protocol_error)");
                    self.dead = Some(reason.clone());
                    return Err(EvaluatorError::Dead(reason));
                }
            };
            let reply: ResultMessage = match serde_json::from_str::<ChildMessage>(&line) {
                Ok(ChildMessage::Result(reply)) => reply,
                Ok(other) => return Ok(self.violation(id, format!("unexpected message {other:?}"))),
                Err(e) => return Ok(self.violation(id, format!("malformed reply `{line}`: {e}"))),
            };
            if reply.id != id {
                if self.abandoned.remove(&reply.id) {
                    debug!("discarding late reply to request {}", reply.id);
                    continue;
                }
                return Ok(self.violation(id, format!("reply id {} does not match request {id}", reply.id)));
            }
            let evaluation = reply.to_evaluation();
            if evaluation.status() == Status::ProtocolError {
                let detail = reply.detail.clone().unwrap_or_default();
                self.last_violation =
                    Some(format!("status `{}` {detail}", reply.status).trim_end().to_string());
                if reply.status != "error" {
                    warn!("evaluator `{}`: invalid reply {line}", self.command);
                }
            }
            return Ok(evaluation);
        }
    }

    /// Sends `shutdown` and waits for the child to exit; kills it if it
    /// does not exit within the timeout.
    pub fn shutdown(mut self) -> Result<Option<ExitStatus>, EvaluatorError> {
        self.shut_down = true;
        let _ = self.send(&ParentMessage::Shutdown);
        self.stdin = None;
        let deadline = Instant::now() + self.timeout;
        loop {
            if let Some(status) = self.child.try_wait()? {
                return Ok(Some(status));
            }
            if Instant::now() >= deadline {
                let _ = self.child.kill();
                let _ = self.child.wait();
                return Ok(None);
            }
            thread::sleep(Duration::from_millis(5));
        }
    }
}

impl Evaluator for ExternalEvaluator {
    fn evaluate(
        &mut self,
        space: &SearchSpace,
        combination: &Combination,
    ) -> Result<Evaluation, EvaluatorError> {
        let labels = space.labels(combination)?;
        let map = LabelMap(
            space.dimensions().iter().zip(labels).map(|(d, l)| (d.name.clone(), l.to_string())).collect(),
        );
        self.evaluate_labels(map)
    }
}

impl Drop for ExternalEvaluator {
    fn drop(&mut self) {
        if self.shut_down {
            return;
        }
        let _ = self.send(&ParentMessage::Shutdown);
        self.stdin = None;
        let deadline = Instant::now() + Duration::from_millis(200);
        while Instant::now() < deadline {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(5));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
