//! Line-oriented subprocess bridge to models living in another process.
//!
//! ```text
//! engine -> model   XSHAP-PROTO 1
//! model  -> engine  OK
//! engine -> model   PREDICT <n> <m>
//! engine -> model   <n lines of m comma-separated floats>
//! model  -> engine  <n lines, one float each>
//! engine -> model   BYE
//! ```

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::models::{Mode, Predictor};
use crate::table::{default_names, DataTable};

pub const PROTOCOL_VERSION: u32 = 1;

const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);
const STDERR_TAIL: usize = 2048;

pub fn handshake_line() -> String {
    format!("XSHAP-PROTO {PROTOCOL_VERSION}\n")
}

/// Encodes a prediction request. Floats use the shortest representation
/// that parses back to the same value.
pub fn encode_request(x: &DataTable) -> String {
    let mut out = String::with_capacity(16 + x.n_rows() * x.n_cols() * 20);
    let _ = writeln!(out, "PREDICT {} {}", x.n_rows(), x.n_cols());
    for row in x.rows() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

/// Parses one reply line into a prediction, enforcing positivity in
/// multiplicative mode.
pub fn parse_reply_line(line: &str, row: usize, mode: Mode) -> Result<f64> {
    let text = line.trim();
    let value: f64 = text.parse().map_err(|_| {
        Error::ExternalModel(format!("non-numeric reply {text:?} for row {row}"))
    })?;
    if !value.is_finite() {
        return Err(Error::ExternalModel(format!("non-finite reply {text:?} for row {row}")));
    }
    if mode == Mode::Multiplicative && value <= 0.0 {
        return Err(Error::NonPositivePrediction { row, value });
    }
    Ok(value)
}

/// Serves `model` over the protocol until `BYE` or end of input.
pub fn serve<P, R, W>(model: &P, input: R, mut output: W) -> Result<()>
where
    P: Predictor + ?Sized,
    R: BufRead,
    W: Write,
{
    let io_err = |e: std::io::Error| Error::ExternalModel(e.to_string());
    let mut lines = input.lines();
    let hello = lines
        .next()
        .transpose()
        .map_err(io_err)?
        .ok_or_else(|| Error::ExternalModel("missing handshake".into()))?;
    if hello.trim() != handshake_line().trim() {
        return Err(Error::ExternalModel(format!("unsupported handshake {hello:?}")));
    }
    output.write_all(b"OK\n").map_err(io_err)?;
    output.flush().map_err(io_err)?;

    while let Some(line) = lines.next().transpose().map_err(io_err)? {
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("BYE") => return Ok(()),
            Some("PREDICT") => {}
            _ => return Err(Error::ExternalModel(format!("unexpected command {line:?}"))),
        }
        let n: usize = parse_count(parts.next())?;
        let m: usize = parse_count(parts.next())?;
        let mut values = Vec::with_capacity(n * m);
        for i in 0..n {
            let row = lines
                .next()
                .transpose()
                .map_err(io_err)?
                .ok_or_else(|| Error::ExternalModel(format!("request truncated at row {i}")))?;
            let before = values.len();
            for cell in row.split(',') {
                values.push(cell.trim().parse::<f64>().map_err(|_| {
                    Error::ExternalModel(format!("bad value {cell:?} in row {i}"))
                })?);
            }
            if values.len() - before != m {
                return Err(Error::ExternalModel(format!(
                    "row {i} has {} values, expected {m}",
                    values.len() - before
                )));
            }
        }
        let table = DataTable::new(default_names(m), n, values)?;
        let mut reply = String::with_capacity(n * 20);
        for y in model.predict(&table)? {
            let _ = writeln!(reply, "{y}");
        }
        output.write_all(reply.as_bytes()).map_err(io_err)?;
        output.flush().map_err(io_err)?;
    }
    Ok(())
}

fn parse_count(token: Option<&str>) -> Result<usize> {
    token
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::ExternalModel(format!("bad PREDICT header token {token:?}")))
}

struct Session {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    stderr: Arc<Mutex<String>>,
    broken: bool,
}

/// Model evaluated by a subprocess speaking the line protocol.
///
/// Requests are serialised through one channel, so the model is not
/// [`parallel_safe`](Predictor::parallel_safe).
pub struct ExternalModel {
    command: String,
    n_features: usize,
    mode: Mode,
    timeout: Duration,
    session: Mutex<Session>,
}

impl std::fmt::Debug for ExternalModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalModel")
            .field("command", &self.command)
            .field("n_features", &self.n_features)
            .field("mode", &self.mode)
            .finish_non_exhaustive()
    }
}

impl ExternalModel {
    /// Launches `command` through `sh -c` and performs the handshake.
    pub fn spawn(command: &str, n_features: usize, mode: Mode) -> Result<Self> {
        Self::spawn_with_timeout(command, n_features, mode, DEFAULT_TIMEOUT)
    }

    pub fn spawn_with_timeout(command: &str, n_features: usize, mode: Mode, timeout: Duration) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::ExternalModel(format!("failed to launch {command:?}: {e}")))?;

        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });

        let stderr = Arc::new(Mutex::new(String::new()));
        let mut err_pipe = child.stderr.take().expect("piped stderr");
        let sink = Arc::clone(&stderr);
        thread::spawn(move || {
            let mut buf = [0u8; 1024];
            while let Ok(k) = err_pipe.read(&mut buf) {
                if k == 0 {
                    break;
                }
                let mut s = sink.lock().unwrap_or_else(|p| p.into_inner());
                s.push_str(&String::from_utf8_lossy(&buf[..k]));
                if s.len() > STDERR_TAIL {
                    let cut = s.len() - STDERR_TAIL;
                    let cut = (cut..s.len()).find(|&i| s.is_char_boundary(i)).unwrap_or(s.len());
                    s.drain(..cut);
                }
            }
        });

        let stdin = child.stdin.take();
        let model = Self {
            command: command.to_string(),
            n_features,
            mode,
            timeout,
            session: Mutex::new(Session {
                child,
                stdin,
                lines,
                stderr,
                broken: false,
            }),
        };
        model.with_session(|s| {
            s.send(handshake_line().as_bytes())?;
            let reply = s.recv(timeout)?;
            if reply.trim() != "OK" {
                return Err(format!("handshake rejected with {reply:?}"));
            }
            Ok(())
        })?;
        Ok(model)
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    fn with_session<T>(&self, f: impl FnOnce(&mut Session) -> std::result::Result<T, String>) -> Result<T> {
        let mut s = self.session.lock().unwrap_or_else(|p| p.into_inner());
        if s.broken {
            return Err(Error::ExternalModel(format!(
                "session with {:?} is unusable after an earlier protocol error",
                self.command
            )));
        }
        f(&mut s).map_err(|msg| {
            s.broken = true;
            Error::ExternalModel(format!("{msg}{}", s.diagnostics()))
        })
    }
}

impl Session {
    fn send(&mut self, bytes: &[u8]) -> std::result::Result<(), String> {
        let stdin = self.stdin.as_mut().ok_or("stdin closed")?;
        stdin
            .write_all(bytes)
            .and_then(|()| stdin.flush())
            .map_err(|e| format!("write failed: {e}"))
    }

    fn recv(&mut self, timeout: Duration) -> std::result::Result<String, String> {
        match self.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(format!("read failed: {e}")),
            Err(RecvTimeoutError::Timeout) => Err(format!("no reply within {timeout:?}")),
            Err(RecvTimeoutError::Disconnected) => Err("model closed its output".into()),
        }
    }

    fn diagnostics(&mut self) -> String {
        let mut out = String::new();
        if let Ok(Some(status)) = self.child.try_wait() {
            let _ = write!(out, "; process exited with {status}");
        }
        // give the stderr reader a moment to drain a crashing process
        thread::sleep(Duration::from_millis(20));
        let err = self.stderr.lock().unwrap_or_else(|p| p.into_inner());
        let tail = err.trim();
        if !tail.is_empty() {
            let _ = write!(out, "; stderr: {tail}");
        }
        out
    }
}

impl Predictor for ExternalModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict(&self, x: &DataTable) -> Result<Vec<f64>> {
        x.ensure_cols(self.n_features)?;
        let n = x.n_rows();
        let request = encode_request(x);
        let mut lines = Vec::with_capacity(n);
        self.with_session(|s| {
            s.send(request.as_bytes())?;
            for i in 0..n {
                let line = s.recv(self.timeout).map_err(|e| format!("expected {n} replies, got {i}: {e}"))?;
                lines.push(line);
            }
            Ok(())
        })?;

        let mut out = Vec::with_capacity(n);
        for (row, line) in lines.iter().enumerate() {
            match parse_reply_line(line, row, self.mode) {
                Ok(v) => out.push(v),
                Err(e) => {
                    let mut s = self.session.lock().unwrap_or_else(|p| p.into_inner());
                    let diag = s.diagnostics();
                    return Err(match e {
                        Error::ExternalModel(msg) => Error::ExternalModel(format!("{msg}{diag}")),
                        other => other,
                    });
                }
            }
        }
        Ok(out)
    }

    fn parallel_safe(&self) -> bool {
        false
    }
}

impl Drop for ExternalModel {
    fn drop(&mut self) {
        let s = self.session.get_mut().unwrap_or_else(|p| p.into_inner());
        if let Some(mut stdin) = s.stdin.take() {
            let _ = stdin.write_all(b"BYE\n");
            let _ = stdin.flush();
        }
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::LogGlm;

    #[test]
    fn request_encoding_round_trips() {
        let x = DataTable::from_rows(&[vec![0.1, -2.5e-300], vec![1.0 / 3.0, 7.0]]).unwrap();
        let text = encode_request(&x);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("PREDICT 2 2"));
        let parsed: Vec<f64> = lines
            .flat_map(|l| l.split(',').map(|c| c.parse::<f64>().unwrap()).collect::<Vec<_>>())
            .collect();
        assert_eq!(parsed, x.as_slice());
    }

    #[test]
    fn reply_parsing() {
        assert_eq!(parse_reply_line(" 2.5 ", 0, Mode::Multiplicative).unwrap(), 2.5);
        assert_eq!(
            parse_reply_line("-1.0", 3, Mode::Multiplicative),
            Err(Error::NonPositivePrediction { row: 3, value: -1.0 })
        );
        assert_eq!(parse_reply_line("-1.0", 3, Mode::Additive).unwrap(), -1.0);
        assert!(matches!(
            parse_reply_line("abc", 0, Mode::Additive),
            Err(Error::ExternalModel(_))
        ));
        assert!(parse_reply_line("inf", 0, Mode::Additive).is_err());
    }

    #[test]
    fn serve_answers_requests() {
        let glm = LogGlm::new(0.0, vec![1.0, 2.0]);
        let x = DataTable::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let input = format!("{}{}BYE\n", handshake_line(), encode_request(&x));
        let mut out = Vec::new();
        serve(&glm, input.as_bytes(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("OK"));
        let ys: Vec<f64> = lines.map(|l| parse_reply_line(l, 0, Mode::Multiplicative).unwrap()).collect();
        assert_eq!(ys, glm.predict(&x).unwrap());
    }

    #[test]
    fn serve_rejects_bad_input() {
        let glm = LogGlm::new(0.0, vec![1.0]);
        assert!(serve(&glm, "HELLO\n".as_bytes(), Vec::new()).is_err());
        let input = format!("{}PREDICT 2 1\n1.0\n", handshake_line());
        assert!(serve(&glm, input.as_bytes(), Vec::new()).is_err());
        let input = format!("{}PREDICT 1 1\n1.0,2.0\n", handshake_line());
        assert!(serve(&glm, input.as_bytes(), Vec::new()).is_err());
    }
}
