//! Colouring oracles for the cube [3]^n.
//!
//! An oracle is named by a spec string:
//!
//! | spec         | colour of a word                                                    |
//! |--------------|---------------------------------------------------------------------|
//! | `const:c`    | always `c`                                                          |
//! | `count`      | `(#ones + 2 * #threes) mod r`                                       |
//! | `hash:seed`  | FNV-1a 64 of `seed` (8 bytes, big endian) ++ run encoding, `mod r`  |
//! | `table:path` | looked up in an explicit colour table file                          |
//! | `exec:cmd`   | answered by a child process over a line protocol                    |
//!
//! The line protocol: the child first prints `HJ-ORACLE 1 <r>`; for each
//! query the parent writes `EVAL <run-encoding>` and the child answers with
//! a single colour on its own line.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{HjError, Result};
use crate::word::{Symbol, Word};

pub type ColourId = u32;

/// Largest table accepted, in points.
pub const MAX_TABLE_POINTS: u64 = 1_000_000;

pub const TIMEOUT_ENV: &str = "HJLINE_ORACLE_TIMEOUT_MS";
const DEFAULT_TIMEOUT_MS: u64 = 10_000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("bad oracle spec: {0}")]
    Spec(String),

    #[error("oracle returned colour {colour}, outside 0..{r}")]
    Range { colour: u64, r: u32 },

    #[error("oracle gave an unusable reply: {0:?}")]
    BadReply(String),

    #[error("oracle did not answer within {0} ms")]
    Timeout(u64),

    #[error("oracle expects words of length {expected}, got {got}")]
    Dimension { expected: u64, got: u64 },

    #[error("evaluation budget of {budget} unique words exhausted")]
    Budget { budget: u64 },

    #[error("oracle process failure: {0}")]
    Process(String),
}

impl OracleError {
    /// True for the failures that mean the oracle answered outside its contract.
    pub fn is_range_error(&self) -> bool {
        matches!(
            self,
            OracleError::Range { .. }
                | OracleError::BadReply(_)
                | OracleError::Timeout(_)
                | OracleError::Dimension { .. }
                | OracleError::Process(_)
        )
    }
}

pub trait ColourOracle {
    /// Number of colours.
    fn r(&self) -> u32;

    /// The spec string this oracle was built from.
    fn spec(&self) -> &str;

    fn colour(&mut self, word: &Word) -> Result<ColourId, OracleError>;

    /// Whether a later run can rebuild an identical oracle from `spec()` alone.
    fn replayable(&self) -> bool {
        true
    }

    /// Word length the oracle is restricted to, if any.
    fn dimension(&self) -> Option<u64> {
        None
    }
}

pub fn make_oracle(spec: &str, r: u32) -> Result<Box<dyn ColourOracle>> {
    if r == 0 {
        return Err(HjError::invalid("r must be at least 1"));
    }
    let (kind, arg) = match spec.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (spec, None),
    };
    let bad = |msg: String| HjError::Oracle(OracleError::Spec(msg));
    let oracle: Box<dyn ColourOracle> = match (kind, arg) {
        ("const", Some(c)) => {
            let c: u32 = c.parse().map_err(|_| bad(format!("const colour {c:?} is not an integer")))?;
            if c >= r {
                return Err(bad(format!("const colour {c} must be below r = {r}")));
            }
            Box::new(ConstOracle { spec: spec.to_string(), r, colour: c })
        }
        ("count", None) => Box::new(CountOracle { spec: spec.to_string(), r }),
        ("hash", Some(seed)) => {
            let seed: u64 = seed.parse().map_err(|_| bad(format!("hash seed {seed:?} is not a u64")))?;
            Box::new(HashOracle { spec: spec.to_string(), r, seed })
        }
        ("table", Some(path)) => {
            let table = ColourTable::read(Path::new(path))?;
            if table.r != r {
                return Err(bad(format!("table has r = {}, run has r = {r}", table.r)));
            }
            Box::new(TableOracle { spec: spec.to_string(), table })
        }
        ("exec", Some(cmd)) => Box::new(ExecOracle::spawn(spec, cmd, r)?),
        _ => return Err(bad(format!("unknown oracle {spec:?}"))),
    };
    Ok(oracle)
}

struct ConstOracle {
    spec: String,
    r: u32,
    colour: ColourId,
}

impl ColourOracle for ConstOracle {
    fn r(&self) -> u32 {
        self.r
    }
    fn spec(&self) -> &str {
        &self.spec
    }
    fn colour(&mut self, _word: &Word) -> Result<ColourId, OracleError> {
        Ok(self.colour)
    }
}

struct CountOracle {
    spec: String,
    r: u32,
}

pub fn count_colour(word: &Word, r: u32) -> ColourId {
    let [ones, _, threes] = word.symbol_counts();
    ((ones as u128 + 2 * threes as u128) % r as u128) as ColourId
}

impl ColourOracle for CountOracle {
    fn r(&self) -> u32 {
        self.r
    }
    fn spec(&self) -> &str {
        &self.spec
    }
    fn colour(&mut self, word: &Word) -> Result<ColourId, OracleError> {
        Ok(count_colour(word, self.r))
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

struct Fnv1a(u64);

impl Fnv1a {
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(FNV_PRIME);
        }
    }

    fn write_decimal(&mut self, mut v: u64) {
        let mut buf = [0u8; 20];
        let mut i = buf.len();
        loop {
            i -= 1;
            buf[i] = b'0' + (v % 10) as u8;
            v /= 10;
            if v == 0 {
                break;
            }
        }
        self.write(&buf[i..]);
    }
}

/// FNV-1a 64 over the seed's big-endian bytes followed by the word's
/// canonical run encoding, without materialising the encoding.
pub fn fnv1a_word(seed: u64, word: &Word) -> u64 {
    let mut h = Fnv1a(FNV_OFFSET);
    h.write(&seed.to_be_bytes());
    for (i, run) in word.runs().iter().enumerate() {
        if i > 0 {
            h.write(b",");
        }
        h.write(&[b'0' + run.symbol.value(), b'x']);
        h.write_decimal(run.len);
    }
    h.0
}

struct HashOracle {
    spec: String,
    r: u32,
    seed: u64,
}

impl ColourOracle for HashOracle {
    fn r(&self) -> u32 {
        self.r
    }
    fn spec(&self) -> &str {
        &self.spec
    }
    fn colour(&mut self, word: &Word) -> Result<ColourId, OracleError> {
        Ok((fnv1a_word(self.seed, word) % self.r as u64) as ColourId)
    }
}

/// Explicit colouring of [m]^n, indexed by base-m expansion with the first
/// coordinate most significant.
///
/// File format: a header line `m n r`, then one colour per line for every
/// point in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColourTable {
    pub m: u32,
    pub n: u32,
    pub r: u32,
    pub colours: Vec<ColourId>,
}

impl ColourTable {
    pub fn new(m: u32, n: u32, r: u32, colours: Vec<ColourId>) -> Result<Self> {
        if m < 2 || n == 0 || r == 0 {
            return Err(HjError::invalid(format!("bad table shape m={m} n={n} r={r}")));
        }
        let points = point_count(m, n)?;
        if colours.len() as u64 != points {
            return Err(HjError::invalid(format!("table needs {points} colours, got {}", colours.len())));
        }
        if let Some(c) = colours.iter().find(|&&c| c >= r) {
            return Err(HjError::invalid(format!("table colour {c} is not below r = {r}")));
        }
        Ok(ColourTable { m, n, r, colours })
    }

    pub fn points(&self) -> usize {
        self.colours.len()
    }

    /// Index of a point given as 1-based coordinates.
    pub fn index_of(&self, point: &[u32]) -> Option<usize> {
        if point.len() != self.n as usize {
            return None;
        }
        let mut idx = 0usize;
        for &x in point {
            if x == 0 || x > self.m {
                return None;
            }
            idx = idx * self.m as usize + (x - 1) as usize;
        }
        Some(idx)
    }

    pub fn colour_of_word(&self, word: &Word) -> Result<ColourId, OracleError> {
        if word.len() != self.n as u64 {
            return Err(OracleError::Dimension { expected: self.n as u64, got: word.len() });
        }
        let mut idx = 0usize;
        for run in word.runs() {
            let s = run.symbol.value() as u32;
            if s > self.m {
                return Err(OracleError::BadReply(format!("symbol {s} outside [{}]", self.m)));
            }
            for _ in 0..run.len {
                idx = idx * self.m as usize + (s - 1) as usize;
            }
        }
        Ok(self.colours[idx])
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {} {}\n", self.m, self.n, self.r);
        for c in &self.colours {
            s.push_str(&c.to_string());
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |msg: &str| HjError::Oracle(OracleError::Spec(format!("malformed table: {msg}")));
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header: Vec<u32> = lines
            .next()
            .ok_or_else(|| bad("missing header"))?
            .split_whitespace()
            .map(|x| x.parse().map_err(|_| bad("header must be `m n r`")))
            .collect::<Result<_>>()?;
        let [m, n, r] = header[..] else {
            return Err(bad("header must be `m n r`"));
        };
        if m < 2 || n == 0 || r == 0 {
            return Err(bad("header values out of range"));
        }
        let points = point_count(m, n).map_err(|_| bad("too many points"))?;
        let colours = lines
            .map(|l| l.parse::<ColourId>().map_err(|_| bad("colour lines must be integers")))
            .collect::<Result<Vec<_>>>()?;
        if colours.len() as u64 != points {
            return Err(bad(&format!("expected {points} colours, found {}", colours.len())));
        }
        if colours.iter().any(|&c| c >= r) {
            return Err(bad("colour not below r"));
        }
        Ok(ColourTable { m, n, r, colours })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            HjError::Oracle(OracleError::Spec(format!("cannot read table {}: {e}", path.display())))
        })?;
        Self::parse(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// m^n, refusing anything above [`MAX_TABLE_POINTS`].
pub fn point_count(m: u32, n: u32) -> Result<u64> {
    (m as u64)
        .checked_pow(n)
        .filter(|&p| p <= MAX_TABLE_POINTS)
        .ok_or_else(|| HjError::invalid(format!("{m}^{n} points exceeds the table cap of {MAX_TABLE_POINTS}")))
}

struct TableOracle {
    spec: String,
    table: ColourTable,
}

impl ColourOracle for TableOracle {
    fn r(&self) -> u32 {
        self.table.r
    }
    fn spec(&self) -> &str {
        &self.spec
    }
    fn colour(&mut self, word: &Word) -> Result<ColourId, OracleError> {
        self.table.colour_of_word(word)
    }
    fn dimension(&self) -> Option<u64> {
        Some(self.table.n as u64)
    }
}

/// Oracle backed by a child process speaking the `HJ-ORACLE 1` protocol.
pub struct ExecOracle {
    spec: String,
    r: u32,
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    timeout_ms: u64,
}

impl ExecOracle {
    pub fn spawn(spec: &str, cmd: &str, r: u32) -> Result<Self> {
        let timeout_ms = match std::env::var(TIMEOUT_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| HjError::invalid(format!("{TIMEOUT_ENV} must be an integer, got {v:?}")))?,
            Err(_) => DEFAULT_TIMEOUT_MS,
        };
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(cmd)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| OracleError::Process(format!("cannot start {cmd:?}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let mut oracle = ExecOracle { spec: spec.to_string(), r, child, stdin, lines: rx, timeout_ms };
        let hello = oracle
            .next_line()
            .map_err(|e| OracleError::Spec(format!("handshake failed: {e}")))?;
        let expected = format!("HJ-ORACLE 1 {r}");
        if hello.trim() != expected {
            return Err(OracleError::Spec(format!("handshake: expected {expected:?}, got {hello:?}")).into());
        }
        Ok(oracle)
    }

    fn next_line(&mut self) -> Result<String, OracleError> {
        match self.lines.recv_timeout(Duration::from_millis(self.timeout_ms)) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(OracleError::Process(e.to_string())),
            Err(RecvTimeoutError::Timeout) => Err(OracleError::Timeout(self.timeout_ms)),
            Err(RecvTimeoutError::Disconnected) => Err(OracleError::Process("oracle closed its output".into())),
        }
    }
}

impl ColourOracle for ExecOracle {
    fn r(&self) -> u32 {
        self.r
    }
    fn spec(&self) -> &str {
        &self.spec
    }
    fn replayable(&self) -> bool {
        false
    }
    fn colour(&mut self, word: &Word) -> Result<ColourId, OracleError> {
        writeln!(self.stdin, "EVAL {}", word.encode())
            .and_then(|_| self.stdin.flush())
            .map_err(|e| OracleError::Process(e.to_string()))?;
        let reply = self.next_line()?;
        let colour: u64 = reply.trim().parse().map_err(|_| OracleError::BadReply(reply.clone()))?;
        if colour >= self.r as u64 {
            return Err(OracleError::Range { colour, r: self.r });
        }
        Ok(colour as ColourId)
    }
}

impl Drop for ExecOracle {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleStats {
    /// Distinct words passed to the underlying oracle.
    pub unique: u64,
    /// All requests, memo hits included.
    pub total: u64,
}

/// Memoizing wrapper that counts requests, enforces the colour range and
/// caps the number of distinct evaluations. Single-threaded.
pub struct CountingOracle {
    inner: Box<dyn ColourOracle>,
    memo: HashMap<Word, ColourId>,
    stats: OracleStats,
    budget: Option<u64>,
}

impl CountingOracle {
    pub fn new(inner: Box<dyn ColourOracle>) -> Self {
        CountingOracle { inner, memo: HashMap::new(), stats: OracleStats::default(), budget: None }
    }

    pub fn with_budget(inner: Box<dyn ColourOracle>, budget: u64) -> Self {
        CountingOracle { budget: Some(budget), ..Self::new(inner) }
    }

    pub fn stats(&self) -> OracleStats {
        self.stats
    }

    pub fn inner(&self) -> &dyn ColourOracle {
        self.inner.as_ref()
    }
}

pub fn with_memo_and_counting(oracle: Box<dyn ColourOracle>) -> CountingOracle {
    CountingOracle::new(oracle)
}

impl ColourOracle for CountingOracle {
    fn r(&self) -> u32 {
        self.inner.r()
    }

    fn spec(&self) -> &str {
        self.inner.spec()
    }

    fn replayable(&self) -> bool {
        self.inner.replayable()
    }

    fn dimension(&self) -> Option<u64> {
        self.inner.dimension()
    }

    fn colour(&mut self, word: &Word) -> Result<ColourId, OracleError> {
        self.stats.total += 1;
        if let Some(&c) = self.memo.get(word) {
            return Ok(c);
        }
        if let Some(budget) = self.budget {
            if self.stats.unique >= budget {
                return Err(OracleError::Budget { budget });
            }
        }
        let c = self.inner.colour(word)?;
        if c >= self.inner.r() {
            return Err(OracleError::Range { colour: c as u64, r: self.inner.r() });
        }
        self.stats.unique += 1;
        self.memo.insert(word.clone(), c);
        Ok(c)
    }
}

/// Lexicographic enumeration of [3]^len, first letter most significant.
pub fn letter_vectors(len: usize) -> impl Iterator<Item = Vec<Symbol>> {
    let total = 3usize.pow(len as u32);
    (0..total).map(move |mut idx| {
        let mut v = vec![Symbol::One; len];
        for slot in v.iter_mut().rev() {
            *slot = Symbol::ALL[idx % 3];
            idx /= 3;
        }
        v
    })
}
