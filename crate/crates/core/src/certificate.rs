//! Serializable proof objects and their independent verification.
//!
//! A certificate records the block sizes, the full pair table, the final
//! collision, the chain of words linking v(q2) to the middle point of the
//! line, and the line itself. Verification rebuilds every word from the
//! recorded numbers and re-queries the oracle named by the certificate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{HjError, Result};
use crate::oracle::{ColourId, ColourOracle, OracleStats};
use crate::solver::{build_v, final_word, letters_of, line_from_collision, Pair, PairTable, Side};
use crate::word::{block_structure, BlockStructure, Mode, Symbol, Word};

pub const CERTIFICATE_VERSION: u32 = 1;

impl Serialize for Symbol {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.value())
    }
}

impl<'de> Deserialize<'de> for Symbol {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = u64::deserialize(deserializer)?;
        Symbol::from_value(v).ok_or_else(|| serde::de::Error::custom(format!("{v} is not a symbol")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    /// The two words are literally equal.
    Identify,
    /// The two words are v_2 and v_1 at some level and share a colour by induction.
    Conclude,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainStep {
    pub kind: StepKind,
    pub from: Word,
    pub to: Word,
    pub ell: Option<usize>,
    pub letters: Option<Vec<Symbol>>,
    pub i_from: Option<u8>,
    pub i_to: Option<u8>,
}

impl ChainStep {
    pub fn identify(from: Word, to: Word) -> Self {
        ChainStep { kind: StepKind::Identify, from, to, ell: None, letters: None, i_from: None, i_to: None }
    }

    pub fn conclude(from: Word, to: Word, ell: usize, letters: Vec<Symbol>) -> Self {
        ChainStep {
            kind: StepKind::Conclude,
            from,
            to,
            ell: Some(ell),
            letters: Some(letters),
            i_from: Some(2),
            i_to: Some(1),
        }
    }
}

/// Run-encoded template over {1, 2, 3} with gaps (`*`) at the active positions,
/// e.g. `1x5,*x4,2x55,*x2`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Template {
    runs: Vec<(Option<Symbol>, u64)>,
}

impl Template {
    pub fn push(&mut self, symbol: Option<Symbol>, len: u64) -> Result<()> {
        if len == 0 {
            return Ok(());
        }
        self.len().checked_add(len).ok_or(HjError::Overflow("template length"))?;
        match self.runs.last_mut() {
            Some(last) if last.0 == symbol => last.1 += len,
            _ => self.runs.push((symbol, len)),
        }
        Ok(())
    }

    pub fn runs(&self) -> &[(Option<Symbol>, u64)] {
        &self.runs
    }

    pub fn len(&self) -> u64 {
        self.runs.iter().map(|r| r.1).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    /// Gap positions as maximal 1-based closed intervals.
    pub fn gaps(&self) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        let mut pos = 0u64;
        for &(s, len) in &self.runs {
            if s.is_none() {
                out.push((pos + 1, pos + len));
            }
            pos += len;
        }
        out
    }

    pub fn fill(&self, x: Symbol) -> Word {
        let runs = self.runs.iter().map(|&(s, len)| (s.unwrap_or(x), len));
        Word::from_runs(runs).expect("template length already checked")
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (s, len)) in self.runs.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            match s {
                Some(s) => write!(f, "{s}x{len}")?,
                None => write!(f, "*x{len}")?,
            }
        }
        Ok(())
    }
}

impl FromStr for Template {
    type Err = HjError;

    fn from_str(s: &str) -> Result<Self> {
        let mut t = Template::default();
        if s.trim().is_empty() {
            return Ok(t);
        }
        for part in s.trim().split(',') {
            let bad = || HjError::MalformedWord(format!("bad template run {part:?}"));
            let (sym, len) = part.split_once('x').ok_or_else(bad)?;
            let symbol = match sym {
                "*" => None,
                "1" => Some(Symbol::One),
                "2" => Some(Symbol::Two),
                "3" => Some(Symbol::Three),
                _ => return Err(bad()),
            };
            t.push(symbol, len.parse().map_err(|_| bad())?)?;
        }
        Ok(t)
    }
}

impl Serialize for Template {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Template {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(deserializer)?.parse().map_err(serde::de::Error::custom)
    }
}

/// A combinatorial line of [3]^n: fixed symbols off the active set, one
/// common symbol on it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineSpec {
    pub n: u64,
    pub active: Vec<(u64, u64)>,
    pub fixed: Template,
}

impl LineSpec {
    pub fn from_template(fixed: Template) -> Result<Self> {
        let line = LineSpec { n: fixed.len(), active: fixed.gaps(), fixed };
        line.validate()?;
        Ok(line)
    }

    /// Non-empty, ascending, disjoint intervals inside [1, n] that are
    /// exactly the gaps of the template.
    pub fn validate(&self) -> Result<()> {
        if self.active.is_empty() {
            return Err(HjError::invalid("active set is empty"));
        }
        let mut prev_hi = 0u64;
        for &(lo, hi) in &self.active {
            if lo == 0 || lo > hi || hi > self.n || (prev_hi > 0 && lo <= prev_hi + 1) {
                return Err(HjError::invalid(format!("active interval [{lo}, {hi}] is out of order or out of range")));
            }
            prev_hi = hi;
        }
        if self.fixed.len() != self.n {
            return Err(HjError::invalid(format!("template length {} differs from n = {}", self.fixed.len(), self.n)));
        }
        if self.fixed.gaps() != self.active {
            return Err(HjError::invalid("template gaps do not match the active set"));
        }
        Ok(())
    }

    pub fn active_size(&self) -> u64 {
        self.active.iter().map(|(lo, hi)| hi - lo + 1).sum()
    }

    pub fn point(&self, x: Symbol) -> Word {
        self.fixed.fill(x)
    }
}

pub fn point_of_line(line: &LineSpec, x: Symbol) -> Word {
    line.point(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineVerdict {
    Monochromatic(ColourId),
    /// The first pair of points (by symbol) whose colours differ.
    Mismatch { first: Symbol, second: Symbol, colours: [ColourId; 3] },
}

pub fn verify_line(line: &LineSpec, oracle: &mut dyn ColourOracle) -> Result<LineVerdict> {
    line.validate()?;
    if let Some(d) = oracle.dimension() {
        if d != line.n {
            return Err(HjError::invalid(format!("oracle dimension {d} differs from line dimension {}", line.n)));
        }
    }
    let mut colours = [0; 3];
    for (slot, x) in colours.iter_mut().zip(Symbol::ALL) {
        let c = oracle.colour(&line.point(x))?;
        if c >= oracle.r() {
            return Err(crate::oracle::OracleError::Range { colour: c as u64, r: oracle.r() }.into());
        }
        *slot = c;
    }
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        if colours[a] != colours[b] {
            return Ok(LineVerdict::Mismatch { first: Symbol::ALL[a], second: Symbol::ALL[b], colours });
        }
    }
    Ok(LineVerdict::Monochromatic(colours[0]))
}

mod decimal_strings {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u64>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| s.parse().map_err(serde::de::Error::custom))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub version: u32,
    pub r: u32,
    pub mode: Mode,
    #[serde(with = "decimal_strings")]
    pub block_sizes: Vec<u64>,
    /// `[k, p1, p2]` per block.
    pub pair_table: Vec<(usize, u64, u64)>,
    pub final_collision: (usize, usize),
    pub chain: Vec<ChainStep>,
    pub line: LineSpec,
    pub shared_colour: ColourId,
    pub oracle: String,
    pub stats: OracleStats,
}

impl Certificate {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        bs: &BlockStructure,
        pairs: &PairTable,
        final_collision: (usize, usize),
        chain: Vec<ChainStep>,
        line: LineSpec,
        shared_colour: ColourId,
        oracle: String,
        stats: OracleStats,
    ) -> Self {
        Certificate {
            version: CERTIFICATE_VERSION,
            r: bs.r(),
            mode: bs.mode(),
            block_sizes: bs.sizes().to_vec(),
            pair_table: pairs.iter().map(|(k, p)| (k, p.p1, p.p2)).collect(),
            final_collision,
            chain,
            line,
            shared_colour,
            oracle,
            stats,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn block_structure(&self) -> Result<BlockStructure> {
        let custom = (self.mode == Mode::Custom).then_some(self.block_sizes.as_slice());
        block_structure(self.r, self.mode, custom)
    }

    /// The recorded pairs as a table over blocks 1..=t, if indices are consecutive from 1.
    pub fn pairs(&self) -> Result<PairTable> {
        for (i, &(k, _, _)) in self.pair_table.iter().enumerate() {
            if k != i + 1 {
                return Err(HjError::invalid(format!("pair table entry {i} is for block {k}, expected {}", i + 1)));
            }
        }
        PairTable::new(1, self.pair_table.iter().map(|&(_, p1, p2)| Pair { p1, p2 }).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail(String),
    Skipped(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckResult {
    pub id: u8,
    pub name: &'static str,
    pub status: CheckStatus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| !matches!(c.status, CheckStatus::Fail(_)))
    }

    pub fn failed_ids(&self) -> Vec<u8> {
        self.checks
            .iter()
            .filter(|c| matches!(c.status, CheckStatus::Fail(_)))
            .map(|c| c.id)
            .collect()
    }

    pub fn status(&self, id: u8) -> Option<&CheckStatus> {
        self.checks.iter().find(|c| c.id == id).map(|c| &c.status)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            match &c.status {
                CheckStatus::Pass => writeln!(f, "[{}] {:<14} PASS", c.id, c.name)?,
                CheckStatus::Fail(why) => writeln!(f, "[{}] {:<14} FAIL  {why}", c.id, c.name)?,
                CheckStatus::Skipped(why) => writeln!(f, "[{}] {:<14} SKIP  {why}", c.id, c.name)?,
            }
        }
        Ok(())
    }
}

pub const CHECK_NAMES: [&str; 7] =
    ["blocks", "pairs", "identify", "conclude", "endpoints", "line", "recompute"];

type Check = std::result::Result<(), String>;

fn check_blocks(cert: &Certificate) -> Check {
    if cert.version != CERTIFICATE_VERSION {
        return Err(format!("unsupported version {}", cert.version));
    }
    let bs = cert.block_structure().map_err(|e| e.to_string())?;
    if bs.sizes() != cert.block_sizes.as_slice() {
        return Err(format!("{} mode with r = {} gives sizes {:?}, certificate has {:?}", cert.mode, cert.r, bs.sizes(), cert.block_sizes));
    }
    if bs.t() != cert.r as usize {
        return Err("block count differs from r".into());
    }
    if cert.line.n != bs.n() {
        return Err(format!("line dimension {} differs from n = {}", cert.line.n, bs.n()));
    }
    Ok(())
}

fn check_pairs(bs: &BlockStructure, cert: &Certificate) -> Check {
    let pairs = cert.pairs().map_err(|e| e.to_string())?;
    pairs.check_against(bs, 1).map_err(|e| e.to_string())
}

fn check_identifications(cert: &Certificate) -> Check {
    if cert.chain.is_empty() {
        return Err("chain is empty".into());
    }
    for (i, step) in cert.chain.iter().enumerate() {
        let expected = if i % 2 == 0 { StepKind::Identify } else { StepKind::Conclude };
        if step.kind != expected {
            return Err(format!("step {i} is {:?}, expected {expected:?}", step.kind));
        }
        if step.kind == StepKind::Identify && step.from != step.to {
            return Err(format!("identification step {i} joins unequal words"));
        }
    }
    if cert.chain.last().map(|s| s.kind) != Some(StepKind::Identify) {
        return Err("chain must end with an identification".into());
    }
    for (i, pair) in cert.chain.windows(2).enumerate() {
        if pair[0].to != pair[1].from {
            return Err(format!("steps {i} and {} are not linked", i + 1));
        }
    }
    Ok(())
}

fn check_conclusions(bs: &BlockStructure, cert: &Certificate, oracle: &mut dyn ColourOracle) -> Check {
    let pairs = cert.pairs().map_err(|e| e.to_string())?;
    let empty = Word::empty();
    for (i, step) in cert.chain.iter().enumerate().filter(|(_, s)| s.kind == StepKind::Conclude) {
        let (Some(ell), Some(letters), Some(2), Some(1)) = (step.ell, step.letters.as_ref(), step.i_from, step.i_to) else {
            return Err(format!("conclusion step {i} must record ℓ, letters, i_from = 2, i_to = 1"));
        };
        if ell == 0 {
            return Err(format!("conclusion step {i} has ℓ = 0"));
        }
        let second = build_v(bs, &empty, &pairs, ell, Side::Second, letters).map_err(|e| format!("step {i}: {e}"))?;
        let first = build_v(bs, &empty, &pairs, ell, Side::First, letters).map_err(|e| format!("step {i}: {e}"))?;
        if step.from != second || step.to != first {
            return Err(format!("conclusion step {i} words are not v_2 and v_1 at ℓ = {ell}"));
        }
        let c_from = oracle.colour(&step.from).map_err(|e| e.to_string())?;
        let c_to = oracle.colour(&step.to).map_err(|e| e.to_string())?;
        if c_from != c_to {
            return Err(format!("conclusion step {i}: colours {c_from} and {c_to} differ"));
        }
    }
    Ok(())
}

fn check_endpoints(bs: &BlockStructure, cert: &Certificate, oracle: &mut dyn ColourOracle) -> Check {
    let pairs = cert.pairs().map_err(|e| e.to_string())?;
    let (q1, q2) = cert.final_collision;
    let t = bs.t();
    if !(q1 < q2 && q2 <= t) {
        return Err(format!("final collision ({q1}, {q2}) is not 0 <= q1 < q2 <= {t}"));
    }
    let (first, last) = match (cert.chain.first(), cert.chain.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err("chain is empty".into()),
    };
    let v_q2 = final_word(bs, &pairs, q2).map_err(|e| e.to_string())?;
    let v_q1 = final_word(bs, &pairs, q1).map_err(|e| e.to_string())?;
    let middle = build_v(bs, &Word::empty(), &pairs, 0, Side::First, &letters_of(q1, q2 - q1, t - q2))
        .map_err(|e| e.to_string())?;
    if first.from != v_q2 {
        return Err(format!("chain does not start at v({q2})"));
    }
    if last.to != middle {
        return Err("chain does not end at v(0; 1..1 2..2 3..3)".into());
    }
    for (name, w) in [("chain start", &first.from), ("chain end", &last.to), ("v(q1)", &v_q1)] {
        let c = oracle.colour(w).map_err(|e| e.to_string())?;
        if c != cert.shared_colour {
            return Err(format!("{name} has colour {c}, certificate claims {}", cert.shared_colour));
        }
    }
    Ok(())
}

fn check_line(cert: &Certificate, oracle: &mut dyn ColourOracle) -> Check {
    match verify_line(&cert.line, oracle).map_err(|e| e.to_string())? {
        LineVerdict::Monochromatic(c) if c == cert.shared_colour => Ok(()),
        LineVerdict::Monochromatic(c) => Err(format!("line has colour {c}, certificate claims {}", cert.shared_colour)),
        LineVerdict::Mismatch { first, second, colours } => {
            Err(format!("points {first} and {second} differ (colours {colours:?})"))
        }
    }
}

fn check_recompute(bs: &BlockStructure, cert: &Certificate) -> Check {
    let pairs = cert.pairs().map_err(|e| e.to_string())?;
    let (q1, q2) = cert.final_collision;
    let line = line_from_collision(bs, &pairs, q1, q2).map_err(|e| e.to_string())?;
    if line != cert.line {
        return Err("recorded line differs from the line rebuilt from pairs and collision".into());
    }
    Ok(())
}

/// Runs the seven checks in fixed order. Checks that need colours are
/// skipped when the oracle cannot be replayed; checks that need a valid
/// block structure fail when it cannot be rebuilt.
pub fn verify_certificate(cert: &Certificate, oracle: &mut dyn ColourOracle) -> VerificationReport {
    let mut results: Vec<CheckStatus> = Vec::with_capacity(7);
    let blocks = check_blocks(cert);
    results.push(to_status(blocks.clone()));
    let bs = cert.block_structure().ok();
    let replayable = oracle.replayable();
    let oracle_ok = oracle.r() == cert.r;

    let need_bs = |f: &mut dyn FnMut(&BlockStructure) -> Check| match &bs {
        Some(bs) => to_status(f(bs)),
        None => CheckStatus::Fail("block structure cannot be rebuilt".into()),
    };

    results.push(need_bs(&mut |bs| check_pairs(bs, cert)));
    results.push(to_status(check_identifications(cert)));
    results.push(if !replayable {
        CheckStatus::Skipped("oracle is not replayable".into())
    } else if !oracle_ok {
        CheckStatus::Fail(format!("oracle has r = {}, certificate has r = {}", oracle.r(), cert.r))
    } else {
        need_bs(&mut |bs| check_conclusions(bs, cert, oracle))
    });
    results.push(if !replayable {
        CheckStatus::Skipped("oracle is not replayable".into())
    } else if !oracle_ok {
        CheckStatus::Fail(format!("oracle has r = {}, certificate has r = {}", oracle.r(), cert.r))
    } else {
        need_bs(&mut |bs| check_endpoints(bs, cert, oracle))
    });
    results.push(if oracle_ok {
        to_status(check_line(cert, oracle))
    } else {
        CheckStatus::Fail(format!("oracle has r = {}, certificate has r = {}", oracle.r(), cert.r))
    });
    results.push(need_bs(&mut |bs| check_recompute(bs, cert)));

    VerificationReport {
        checks: results
            .into_iter()
            .enumerate()
            .map(|(i, status)| CheckResult { id: i as u8 + 1, name: CHECK_NAMES[i], status })
            .collect(),
    }
}

fn to_status(c: Check) -> CheckStatus {
    match c {
        Ok(()) => CheckStatus::Pass,
        Err(why) => CheckStatus::Fail(why),
    }
}
