//! Word alignments for the coverage detector.
//!
//! Token indices on both sides come from whitespace tokenization, which is also what
//! the sidecar aligner receives.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::str::FromStr;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::corpus::{PairId, SentencePair};
use crate::error::{Error, Result};

/// Source/target link set over whitespace token indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AlignmentLinks {
    links: BTreeSet<(usize, usize)>,
    src_len: usize,
    tgt_len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PharaohError {
    #[error("malformed link '{0}' (expected i-j)")]
    Malformed(String),
    #[error("link {source_index}-{target_index} out of range for {src_len}x{tgt_len} tokens")]
    OutOfRange {
        source_index: usize,
        target_index: usize,
        src_len: usize,
        tgt_len: usize,
    },
}

impl AlignmentLinks {
    pub fn new(
        links: impl IntoIterator<Item = (usize, usize)>,
        src_len: usize,
        tgt_len: usize,
    ) -> Result<Self, PharaohError> {
        let mut out = AlignmentLinks {
            links: BTreeSet::new(),
            src_len,
            tgt_len,
        };
        for (i, j) in links {
            out.insert(i, j)?;
        }
        Ok(out)
    }

    pub fn empty(src_len: usize, tgt_len: usize) -> Self {
        AlignmentLinks {
            links: BTreeSet::new(),
            src_len,
            tgt_len,
        }
    }

    /// Token i linked to token i while both exist.
    pub fn diagonal(src_len: usize, tgt_len: usize) -> Self {
        AlignmentLinks {
            links: (0..src_len.min(tgt_len)).map(|i| (i, i)).collect(),
            src_len,
            tgt_len,
        }
    }

    pub fn insert(&mut self, i: usize, j: usize) -> Result<(), PharaohError> {
        if i >= self.src_len || j >= self.tgt_len {
            return Err(PharaohError::OutOfRange {
                source_index: i,
                target_index: j,
                src_len: self.src_len,
                tgt_len: self.tgt_len,
            });
        }
        self.links.insert((i, j));
        Ok(())
    }

    pub fn links(&self) -> &BTreeSet<(usize, usize)> {
        &self.links
    }

    pub fn src_len(&self) -> usize {
        self.src_len
    }

    pub fn tgt_len(&self) -> usize {
        self.tgt_len
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Per source token: does it take part in any link?
    pub fn source_aligned(&self) -> Vec<bool> {
        let mut aligned = vec![false; self.src_len];
        for &(i, _) in &self.links {
            aligned[i] = true;
        }
        aligned
    }

    pub fn to_pharaoh(&self) -> String {
        let mut out = String::new();
        for (n, (i, j)) in self.links.iter().enumerate() {
            if n > 0 {
                out.push(' ');
            }
            out.push_str(&format!("{i}-{j}"));
        }
        out
    }
}

impl fmt::Display for AlignmentLinks {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_pharaoh())
    }
}

/// Parses whitespace-separated `i-j` links (0-indexed). Duplicates collapse.
pub fn parse_pharaoh(line: &str, src_len: usize, tgt_len: usize) -> Result<AlignmentLinks, PharaohError> {
    let mut out = AlignmentLinks::empty(src_len, tgt_len);
    for tok in line.split_whitespace() {
        let (i, j) = tok
            .split_once('-')
            .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)))
            .ok_or_else(|| PharaohError::Malformed(tok.to_string()))?;
        out.insert(i, j)?;
    }
    Ok(out)
}

/// Whitespace token counts `(source, target)` of a pair.
pub fn token_lengths(pair: &SentencePair) -> (usize, usize) {
    (
        pair.source.split_whitespace().count(),
        pair.target.split_whitespace().count(),
    )
}

/// Result of aligning one pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AlignOutcome {
    Links(AlignmentLinks),
    /// No usable alignment for this pair; coverage is not checked for it.
    Unavailable(String),
}

pub trait AlignmentProvider: Send {
    fn align(&mut self, pair: &SentencePair) -> Result<AlignOutcome>;

    /// Aligns a batch in order. Providers with several connections override this.
    fn align_batch(&mut self, pairs: &[SentencePair]) -> Result<Vec<AlignOutcome>> {
        pairs.iter().map(|p| self.align(p)).collect()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DiagonalProvider;

impl AlignmentProvider for DiagonalProvider {
    fn align(&mut self, pair: &SentencePair) -> Result<AlignOutcome> {
        let (s, t) = token_lengths(pair);
        Ok(AlignOutcome::Links(AlignmentLinks::diagonal(s, t)))
    }
}

/// Line-aligned Pharaoh file; line k belongs to pair id k.
pub struct FileProvider {
    lines: Box<dyn BufRead + Send>,
    next_line: u64,
    origin: String,
    buf: String,
}

impl FileProvider {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io_path(path, e))?;
        Ok(Self::from_reader(
            BufReader::new(file),
            path.display().to_string(),
        ))
    }

    pub fn from_reader(reader: impl BufRead + Send + 'static, origin: impl Into<String>) -> Self {
        FileProvider {
            lines: Box::new(reader),
            next_line: 0,
            origin: origin.into(),
            buf: String::new(),
        }
    }

    fn read_line(&mut self) -> Result<bool> {
        self.buf.clear();
        let n = self
            .lines
            .read_line(&mut self.buf)
            .map_err(|e| Error::io(self.origin.clone(), e))?;
        Ok(n > 0)
    }
}

impl AlignmentProvider for FileProvider {
    fn align(&mut self, pair: &SentencePair) -> Result<AlignOutcome> {
        if pair.id < self.next_line {
            return Err(Error::Invariant(format!(
                "alignment requested for pair {} after line {} of {} was consumed",
                pair.id,
                self.next_line - 1,
                self.origin
            )));
        }
        while self.next_line <= pair.id {
            if !self.read_line()? {
                return Err(Error::Alignment(format!(
                    "{} ended after {} lines, before pair {}",
                    self.origin, self.next_line, pair.id
                )));
            }
            self.next_line += 1;
        }
        let (s, t) = token_lengths(pair);
        Ok(match parse_pharaoh(self.buf.trim_end(), s, t) {
            Ok(links) => AlignOutcome::Links(links),
            Err(e) => AlignOutcome::Unavailable(format!(
                "{} line {} (pair {}): {e}",
                self.origin,
                pair.id + 1,
                pair.id
            )),
        })
    }
}

/// Where a sidecar aligner listens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SidecarEndpoint {
    /// Spawn the command and talk over its stdin/stdout.
    Command(Vec<String>),
    Tcp(String),
    Unix(PathBuf),
}

impl FromStr for SidecarEndpoint {
    type Err = Error;

    /// `tcp://host:port`, `unix:///path/to/socket` or `cmd:program arg...`.
    fn from_str(s: &str) -> Result<Self> {
        if let Some(addr) = s.strip_prefix("tcp://") {
            Ok(SidecarEndpoint::Tcp(addr.to_string()))
        } else if let Some(path) = s.strip_prefix("unix://") {
            Ok(SidecarEndpoint::Unix(PathBuf::from(path)))
        } else if let Some(cmd) = s.strip_prefix("cmd:") {
            let argv: Vec<String> = cmd.split_whitespace().map(str::to_string).collect();
            if argv.is_empty() {
                return Err(Error::Config("empty sidecar command".into()));
            }
            Ok(SidecarEndpoint::Command(argv))
        } else {
            Err(Error::Config(format!(
                "bad sidecar endpoint '{s}' (expected tcp://host:port, unix:///path or cmd:program args)"
            )))
        }
    }
}

#[derive(Serialize)]
struct AlignRequest<'a> {
    id: u64,
    src: Vec<&'a str>,
    tgt: Vec<&'a str>,
}

#[derive(Deserialize)]
struct AlignResponse {
    id: u64,
    #[serde(default)]
    links: Option<Vec<[usize; 2]>>,
    #[serde(default)]
    error: Option<String>,
}

/// One connection to a sidecar aligner with at most one request in flight.
///
/// A request that times out leaves the pair unavailable; its late response is
/// recognised by id and discarded while waiting for the next one.
pub struct SidecarConnection {
    writer: Box<dyn Write + Send>,
    responses: Receiver<io::Result<String>>,
    next_id: u64,
    timeout: Duration,
    child: Option<Child>,
}

impl SidecarConnection {
    pub fn connect(endpoint: &SidecarEndpoint, timeout: Duration) -> Result<Self> {
        match endpoint {
            SidecarEndpoint::Command(argv) => Self::spawn(argv, timeout),
            SidecarEndpoint::Tcp(addr) => {
                let stream = TcpStream::connect(addr)
                    .map_err(|e| Error::io(format!("connecting to sidecar at {addr}"), e))?;
                let read = stream
                    .try_clone()
                    .map_err(|e| Error::io("cloning sidecar socket", e))?;
                Ok(Self::from_io(read, stream, timeout))
            }
            #[cfg(unix)]
            SidecarEndpoint::Unix(path) => {
                let stream = std::os::unix::net::UnixStream::connect(path)
                    .map_err(|e| Error::io(format!("connecting to sidecar at {}", path.display()), e))?;
                let read = stream
                    .try_clone()
                    .map_err(|e| Error::io("cloning sidecar socket", e))?;
                Ok(Self::from_io(read, stream, timeout))
            }
            #[cfg(not(unix))]
            SidecarEndpoint::Unix(_) => Err(Error::Config(
                "unix sockets are not available on this platform".into(),
            )),
        }
    }

    pub fn spawn(argv: &[String], timeout: Duration) -> Result<Self> {
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| Error::Config("empty sidecar command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::io(format!("spawning sidecar '{program}'"), e))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut conn = Self::from_io(stdout, stdin, timeout);
        conn.child = Some(child);
        Ok(conn)
    }

    /// Uses an arbitrary byte stream pair, e.g. in-process pipes in tests.
    pub fn from_io(
        reader: impl io::Read + Send + 'static,
        writer: impl Write + Send + 'static,
        timeout: Duration,
    ) -> Self {
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut reader = BufReader::new(reader);
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
        SidecarConnection {
            writer: Box::new(writer),
            responses: rx,
            next_id: 0,
            timeout,
            child: None,
        }
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    pub fn align_tokens(&mut self, src: Vec<&str>, tgt: Vec<&str>) -> Result<AlignOutcome> {
        let (src_len, tgt_len) = (src.len(), tgt.len());
        if src_len == 0 || tgt_len == 0 {
            return Ok(AlignOutcome::Links(AlignmentLinks::empty(src_len, tgt_len)));
        }
        let id = self.next_id;
        self.next_id += 1;
        let mut line = serde_json::to_string(&AlignRequest { id, src, tgt })
            .map_err(|e| Error::Invariant(format!("encoding sidecar request: {e}")))?;
        line.push('\n');
        self.writer
            .write_all(line.as_bytes())
            .and_then(|_| self.writer.flush())
            .map_err(|e| Error::io("writing to sidecar", e))?;

        let deadline = Instant::now() + self.timeout;
        loop {
            let remaining = deadline.saturating_duration_since(Instant::now());
            let raw = match self.responses.recv_timeout(remaining) {
                Ok(Ok(raw)) => raw,
                Ok(Err(e)) => return Err(Error::io("reading from sidecar", e)),
                Err(RecvTimeoutError::Timeout) => {
                    return Ok(AlignOutcome::Unavailable(format!(
                        "sidecar did not answer request {id} within {} ms",
                        self.timeout.as_millis()
                    )))
                }
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(Error::Alignment("sidecar closed the connection".into()))
                }
            };
            let payload = raw.trim_end();
            let resp: AlignResponse = serde_json::from_str(payload).map_err(|e| Error::Protocol {
                message: format!("unparsable response: {e}"),
                payload: payload.to_string(),
            })?;
            if resp.id < id {
                // Late answer to a request that already timed out.
                continue;
            }
            if resp.id > id {
                return Err(Error::Protocol {
                    message: format!("response id {} while request {id} is outstanding", resp.id),
                    payload: payload.to_string(),
                });
            }
            if let Some(message) = resp.error {
                return Ok(AlignOutcome::Unavailable(format!("sidecar error: {message}")));
            }
            let links = resp.links.ok_or_else(|| Error::Protocol {
                message: "response has neither links nor error".into(),
                payload: payload.to_string(),
            })?;
            return AlignmentLinks::new(links.into_iter().map(|[i, j]| (i, j)), src_len, tgt_len)
                .map(AlignOutcome::Links)
                .map_err(|e| Error::Protocol {
                    message: e.to_string(),
                    payload: payload.to_string(),
                });
        }
    }
}

impl AlignmentProvider for SidecarConnection {
    fn align(&mut self, pair: &SentencePair) -> Result<AlignOutcome> {
        self.align_tokens(
            pair.source.split_whitespace().collect(),
            pair.target.split_whitespace().collect(),
        )
    }
}

impl Drop for SidecarConnection {
    fn drop(&mut self) {
        if let Some(mut child) = self.child.take() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// Several sidecar connections used in parallel over contiguous chunks of a batch.
pub struct SidecarPool {
    connections: Vec<SidecarConnection>,
}

impl SidecarPool {
    pub fn new(connections: Vec<SidecarConnection>) -> Result<Self> {
        if connections.is_empty() {
            return Err(Error::Config("sidecar pool needs at least one connection".into()));
        }
        Ok(SidecarPool { connections })
    }

    pub fn connect(endpoint: &SidecarEndpoint, count: usize, timeout: Duration) -> Result<Self> {
        let connections = (0..count.max(1))
            .map(|_| SidecarConnection::connect(endpoint, timeout))
            .collect::<Result<Vec<_>>>()?;
        Self::new(connections)
    }
}

impl AlignmentProvider for SidecarPool {
    fn align(&mut self, pair: &SentencePair) -> Result<AlignOutcome> {
        self.connections[0].align(pair)
    }

    fn align_batch(&mut self, pairs: &[SentencePair]) -> Result<Vec<AlignOutcome>> {
        if pairs.is_empty() {
            return Ok(Vec::new());
        }
        let chunk = pairs.len().div_ceil(self.connections.len());
        let results: Vec<Result<Vec<AlignOutcome>>> = thread::scope(|s| {
            let handles: Vec<_> = self
                .connections
                .iter_mut()
                .zip(pairs.chunks(chunk))
                .map(|(conn, part)| s.spawn(move || conn.align_batch(part)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sidecar worker panicked"))
                .collect()
        });
        let mut out = Vec::with_capacity(pairs.len());
        for r in results {
            out.extend(r?);
        }
        Ok(out)
    }
}

/// Pairs whose alignment is known up front, keyed by id. Mostly for tests and the FFI.
#[derive(Debug, Clone, Default)]
pub struct StaticProvider {
    links: std::collections::HashMap<PairId, AlignmentLinks>,
}

impl StaticProvider {
    pub fn insert(&mut self, id: PairId, links: AlignmentLinks) {
        self.links.insert(id, links);
    }
}

impl AlignmentProvider for StaticProvider {
    fn align(&mut self, pair: &SentencePair) -> Result<AlignOutcome> {
        Ok(match self.links.get(&pair.id) {
            Some(l) => AlignOutcome::Links(l.clone()),
            None => AlignOutcome::Unavailable(format!("no alignment for pair {}", pair.id)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn pharaoh_parse() {
        let l = parse_pharaoh("0-0 1-2 2-1", 3, 3).unwrap();
        assert_eq!(l.links().iter().copied().collect::<Vec<_>>(), [(0, 0), (1, 2), (2, 1)]);
        assert!(parse_pharaoh("", 3, 3).unwrap().is_empty());
        assert_eq!(parse_pharaoh("1-1 1-1", 2, 2).unwrap().len(), 1);
        assert!(matches!(
            parse_pharaoh("5-0", 3, 3),
            Err(PharaohError::OutOfRange { source_index: 5, .. })
        ));
        assert!(matches!(parse_pharaoh("0:1", 3, 3), Err(PharaohError::Malformed(_))));
        assert!(matches!(parse_pharaoh("0-", 3, 3), Err(PharaohError::Malformed(_))));
    }

    #[test]
    fn pharaoh_round_trip() {
        let l = parse_pharaoh("2-1 0-0 1-3", 3, 4).unwrap();
        assert_eq!(parse_pharaoh(&l.to_pharaoh(), 3, 4).unwrap(), l);
    }

    #[test]
    fn diagonal_stub() {
        let pair = SentencePair::new(0, "a b c d", "w x y z u v");
        let AlignOutcome::Links(l) = DiagonalProvider.align(&pair).unwrap() else {
            panic!("diagonal is always available")
        };
        assert_eq!(l.links().iter().copied().collect::<Vec<_>>(), [(0, 0), (1, 1), (2, 2), (3, 3)]);
    }

    #[test]
    fn file_provider_indexes_by_pair_id() {
        let mut p = FileProvider::from_reader(Cursor::new("0-0\n0-1 1-0\n9-9\n"), "mem");
        let a = SentencePair::new(0, "x", "y");
        let c = SentencePair::new(2, "x y", "y z");
        assert_eq!(
            p.align(&a).unwrap(),
            AlignOutcome::Links(parse_pharaoh("0-0", 1, 1).unwrap())
        );
        // Pair 1 was malformed in the corpus and never requested.
        assert!(matches!(p.align(&c).unwrap(), AlignOutcome::Unavailable(m) if m.contains("pair 2")));
        let d = SentencePair::new(3, "x", "y");
        assert!(matches!(p.align(&d), Err(Error::Alignment(_))));
    }

    #[test]
    fn endpoint_parsing() {
        assert_eq!(
            "tcp://127.0.0.1:9000".parse::<SidecarEndpoint>().unwrap(),
            SidecarEndpoint::Tcp("127.0.0.1:9000".into())
        );
        assert_eq!(
            "unix:///tmp/a.sock".parse::<SidecarEndpoint>().unwrap(),
            SidecarEndpoint::Unix("/tmp/a.sock".into())
        );
        assert_eq!(
            "cmd:python3 -m aligner".parse::<SidecarEndpoint>().unwrap(),
            SidecarEndpoint::Command(vec!["python3".into(), "-m".into(), "aligner".into()])
        );
        assert!("http://x".parse::<SidecarEndpoint>().is_err());
    }
}
