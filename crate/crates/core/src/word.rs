//! Run-length encoded words over the alphabet {1, 2, 3} and the block
//! layout used to assemble them.
//!
//! Every word the line finder builds is a concatenation of a handful of
//! constant runs per block, while the blocks themselves can be billions of
//! positions long. Words are therefore never expanded: they are stored as
//! canonical runs (no empty run, no two neighbouring runs with the same
//! symbol), which makes structural equality coincide with equality of the
//! underlying sequences.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{HjError, Result};

/// Longest word accepted in expanded (one character per position) form.
pub const MAX_EXPANDED_LEN: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Symbol {
    One = 1,
    Two = 2,
    Three = 3,
}

impl Symbol {
    pub const ALL: [Symbol; 3] = [Symbol::One, Symbol::Two, Symbol::Three];

    pub fn value(self) -> u8 {
        self as u8
    }

    pub fn from_value(v: u64) -> Option<Symbol> {
        match v {
            1 => Some(Symbol::One),
            2 => Some(Symbol::Two),
            3 => Some(Symbol::Three),
            _ => None,
        }
    }

    fn from_char(c: char) -> Option<Symbol> {
        match c {
            '1' => Some(Symbol::One),
            '2' => Some(Symbol::Two),
            '3' => Some(Symbol::Three),
            _ => None,
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

impl TryFrom<u64> for Symbol {
    type Error = HjError;

    fn try_from(v: u64) -> Result<Self> {
        Symbol::from_value(v).ok_or_else(|| HjError::invalid(format!("{v} is not a symbol of {{1,2,3}}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Run {
    pub symbol: Symbol,
    pub len: u64,
}

/// A finite word over {1, 2, 3} in canonical run-length form.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Word {
    runs: Vec<Run>,
    len: u64,
}

impl Word {
    pub fn empty() -> Self {
        Word::default()
    }

    /// Builds a word from arbitrary runs, dropping empty ones and merging
    /// neighbours that share a symbol.
    pub fn from_runs<I: IntoIterator<Item = (Symbol, u64)>>(runs: I) -> Result<Self> {
        let mut w = Word::empty();
        for (s, n) in runs {
            w.push_run(s, n)?;
        }
        Ok(w)
    }

    pub fn from_symbols(symbols: &[Symbol]) -> Self {
        let mut w = Word::empty();
        for &s in symbols {
            // one position at a time cannot overflow a u64 length
            w.push_run(s, 1).expect("length fits");
        }
        w
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push_run(&mut self, symbol: Symbol, len: u64) -> Result<()> {
        if len == 0 {
            return Ok(());
        }
        self.len = self.len.checked_add(len).ok_or(HjError::Overflow("word length"))?;
        match self.runs.last_mut() {
            Some(last) if last.symbol == symbol => last.len += len,
            _ => self.runs.push(Run { symbol, len }),
        }
        Ok(())
    }

    pub fn concat(&self, other: &Word) -> Result<Word> {
        let mut w = self.clone();
        for r in &other.runs {
            w.push_run(r.symbol, r.len)?;
        }
        Ok(w)
    }

    /// Symbol at a 1-based position; time is linear in the number of runs.
    pub fn symbol_at(&self, index: u64) -> Result<Symbol> {
        if index == 0 || index > self.len {
            return Err(HjError::invalid(format!(
                "position {index} outside word of length {}",
                self.len
            )));
        }
        let mut end = 0u64;
        for r in &self.runs {
            end += r.len;
            if index <= end {
                return Ok(r.symbol);
            }
        }
        unreachable!("run lengths sum to the word length")
    }

    /// Number of positions holding each symbol, indexed by `symbol - 1`.
    pub fn symbol_counts(&self) -> [u64; 3] {
        let mut counts = [0u64; 3];
        for r in &self.runs {
            counts[r.symbol as usize - 1] += r.len;
        }
        counts
    }

    pub fn expand(&self) -> Result<Vec<Symbol>> {
        if self.len > MAX_EXPANDED_LEN {
            return Err(HjError::invalid(format!(
                "word of length {} is too long to expand",
                self.len
            )));
        }
        let mut out = Vec::with_capacity(self.len as usize);
        for r in &self.runs {
            out.extend(std::iter::repeat_n(r.symbol, r.len as usize));
        }
        Ok(out)
    }

    /// Canonical text encoding, e.g. `1x64,2x2`. The empty word encodes as "".
    pub fn encode(&self) -> String {
        self.to_string()
    }

    pub fn decode(s: &str) -> Result<Word> {
        s.parse()
    }

    pub(crate) fn is_canonical(&self) -> bool {
        self.runs.iter().all(|r| r.len > 0)
            && self.runs.windows(2).all(|p| p[0].symbol != p[1].symbol)
            && self.runs.iter().map(|r| r.len).sum::<u64>() == self.len
    }
}

pub fn words_equal(u: &Word, v: &Word) -> bool {
    u == v
}

pub fn word_symbol_at(u: &Word, index: u64) -> Result<Symbol> {
    u.symbol_at(index)
}

pub fn word_length(u: &Word) -> u64 {
    u.len()
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.runs.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}x{}", r.symbol, r.len)?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = HjError;

    /// Accepts the run encoding (`1x3,2x1`) or, for short words, the
    /// expanded form (`1112`).
    fn from_str(s: &str) -> Result<Word> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Word::empty());
        }
        if !s.contains('x') {
            if s.len() as u64 > MAX_EXPANDED_LEN {
                return Err(HjError::MalformedWord(format!(
                    "expanded form limited to {MAX_EXPANDED_LEN} symbols"
                )));
            }
            let symbols = s
                .chars()
                .map(|c| Symbol::from_char(c).ok_or_else(|| HjError::MalformedWord(format!("bad symbol {c:?}"))))
                .collect::<Result<Vec<_>>>()?;
            return Ok(Word::from_symbols(&symbols));
        }
        let mut w = Word::empty();
        for part in s.split(',') {
            let (sym, len) = part
                .split_once('x')
                .ok_or_else(|| HjError::MalformedWord(format!("run {part:?} lacks 'x'")))?;
            let mut chars = sym.chars();
            let symbol = match (chars.next(), chars.next()) {
                (Some(c), None) => Symbol::from_char(c),
                _ => None,
            }
            .ok_or_else(|| HjError::MalformedWord(format!("bad symbol in run {part:?}")))?;
            let len: u64 = len
                .parse()
                .map_err(|_| HjError::MalformedWord(format!("bad length in run {part:?}")))?;
            w.push_run(symbol, len)?;
        }
        Ok(w)
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.encode())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Paper,
    Minimal,
    Custom,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Paper => "paper",
            Mode::Minimal => "minimal",
            Mode::Custom => "custom",
        })
    }
}

impl FromStr for Mode {
    type Err = HjError;

    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "paper" => Ok(Mode::Paper),
            "minimal" => Ok(Mode::Minimal),
            "custom" => Ok(Mode::Custom),
            other => Err(HjError::invalid(format!("unknown mode {other:?}"))),
        }
    }
}

/// Partition of the coordinates 1..=n into `t = r` consecutive blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStructure {
    r: u32,
    sizes: Vec<u64>,
    prefix: Vec<u64>,
    mode: Mode,
}

impl BlockStructure {
    pub fn new(r: u32, mode: Mode, custom_sizes: Option<&[u64]>) -> Result<Self> {
        if r == 0 {
            return Err(HjError::invalid("r must be at least 1"));
        }
        let t = r as usize;
        let sizes = match mode {
            Mode::Paper => (1..=t).map(|j| paper_block_size(r, t - j)).collect::<Result<Vec<_>>>()?,
            Mode::Minimal => minimal_sizes(r)?,
            Mode::Custom => {
                let sizes = custom_sizes.ok_or_else(|| HjError::invalid("custom mode needs block sizes"))?;
                if sizes.len() != t {
                    return Err(HjError::invalid(format!(
                        "custom mode needs exactly t = {t} block sizes, got {}",
                        sizes.len()
                    )));
                }
                if sizes.contains(&0) {
                    return Err(HjError::invalid("block sizes must be positive"));
                }
                sizes.to_vec()
            }
        };
        if mode != Mode::Custom && custom_sizes.is_some() {
            return Err(HjError::invalid(format!("block sizes are only accepted in custom mode, not {mode}")));
        }
        let mut prefix = Vec::with_capacity(t + 1);
        prefix.push(0u64);
        for &n in &sizes {
            let last = *prefix.last().unwrap();
            prefix.push(last.checked_add(n).ok_or(HjError::Overflow("prefix sums"))?);
        }
        let bs = BlockStructure { r, sizes, prefix, mode };
        if mode != Mode::Custom {
            for j in 0..t {
                let needed = bs.colour_space_size(j)?;
                if bs.block_size(j + 1) < needed {
                    return Err(HjError::Invariant(format!(
                        "block {} has {} positions but level {j} has {needed} composite colours",
                        j + 1,
                        bs.block_size(j + 1)
                    )));
                }
            }
        }
        Ok(bs)
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn t(&self) -> usize {
        self.sizes.len()
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn sizes(&self) -> &[u64] {
        &self.sizes
    }

    /// n_k for 1-based block index k.
    pub fn block_size(&self, k: usize) -> u64 {
        self.sizes[k - 1]
    }

    /// s_j = n_1 + ... + n_j, with s_0 = 0.
    pub fn prefix_sum(&self, j: usize) -> u64 {
        self.prefix[j]
    }

    /// Cube dimension n = s_t.
    pub fn n(&self) -> u64 {
        self.prefix[self.t()]
    }

    /// Number of distinct composite colours at level `j`: one unordered
    /// pair from {0..n_k} for every block k in j+2..=t, times one of r
    /// colours for each of the 3^(t-j-1) letter vectors.
    pub fn colour_space_size(&self, j: usize) -> Result<u64> {
        if j >= self.t() {
            return Err(HjError::invalid(format!("level {j} outside 0..{}", self.t())));
        }
        colour_space(self.r, &self.sizes[j + 1..])
    }
}

pub fn block_structure(r: u32, mode: Mode, custom_sizes: Option<&[u64]>) -> Result<BlockStructure> {
    BlockStructure::new(r, mode, custom_sizes)
}

/// r^(6^e).
fn paper_block_size(r: u32, e: usize) -> Result<u64> {
    if r == 1 {
        return Ok(1);
    }
    let exp = 6u32.checked_pow(e as u32).ok_or(HjError::Overflow("paper block size"))?;
    (r as u64).checked_pow(exp).ok_or(HjError::Overflow("paper block size"))
}

fn pairs_in(n: u64) -> Result<u64> {
    // C(n + 1, 2)
    let a = n as u128 * (n as u128 + 1) / 2;
    u64::try_from(a).map_err(|_| HjError::Overflow("colour space size"))
}

/// Colour count for a level whose deeper blocks have sizes `deeper`.
fn colour_space(r: u32, deeper: &[u64]) -> Result<u64> {
    let exp = 3u32.checked_pow(deeper.len() as u32).ok_or(HjError::Overflow("colour space size"))?;
    let mut total = (r as u64).checked_pow(exp).ok_or(HjError::Overflow("colour space size"))?;
    for &n in deeper {
        total = total.checked_mul(pairs_in(n)?).ok_or(HjError::Overflow("colour space size"))?;
    }
    Ok(total)
}

fn minimal_sizes(r: u32) -> Result<Vec<u64>> {
    let t = r as usize;
    let mut sizes = vec![0u64; t];
    for k in (1..=t).rev() {
        // n_k is the colour count of level k - 1, which only involves blocks after k
        sizes[k - 1] = colour_space(r, &sizes[k..])?;
    }
    Ok(sizes)
}

/// How one block of a structured word is filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockFill {
    /// `p` ones, then twos.
    Cut(u64),
    /// `p1` ones, `p2 - p1` copies of `a`, then twos.
    Tri { p1: u64, p2: u64, a: Symbol },
}

impl BlockFill {
    fn check(&self, size: u64) -> Result<()> {
        let ok = match *self {
            BlockFill::Cut(p) => p <= size,
            BlockFill::Tri { p1, p2, .. } => p1 < p2 && p2 <= size,
        };
        if ok {
            Ok(())
        } else {
            Err(HjError::invalid(format!("fill {self:?} out of range for block of size {size}")))
        }
    }

    fn write(&self, size: u64, w: &mut Word) -> Result<()> {
        match *self {
            BlockFill::Cut(p) => {
                w.push_run(Symbol::One, p)?;
                w.push_run(Symbol::Two, size - p)?;
            }
            BlockFill::Tri { p1, p2, a } => {
                w.push_run(Symbol::One, p1)?;
                w.push_run(a, p2 - p1)?;
                w.push_run(Symbol::Two, size - p2)?;
            }
        }
        Ok(())
    }
}

/// `prefix` followed by each block realised left to right.
pub fn assemble(prefix: &Word, blocks: &[(u64, BlockFill)]) -> Result<Word> {
    let mut w = prefix.clone();
    for (size, fill) in blocks {
        fill.check(*size)?;
        fill.write(*size, &mut w)?;
    }
    debug_assert!(w.is_canonical());
    Ok(w)
}

/// w 1^q 2^(size - q).
pub fn extend_simple(w: &Word, q: u64, block_size: u64) -> Result<Word> {
    assemble(w, &[(block_size, BlockFill::Cut(q))])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn word(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn block_sizes_per_mode() {
        let bs = block_structure(2, Mode::Paper, None).unwrap();
        assert_eq!(bs.sizes(), &[64, 2]);
        assert_eq!(bs.n(), 66);
        assert_eq!(bs.t(), 2);

        let bs = block_structure(1, Mode::Paper, None).unwrap();
        assert_eq!(bs.sizes(), &[1]);
        assert_eq!(bs.n(), 1);

        let bs = block_structure(2, Mode::Minimal, None).unwrap();
        assert_eq!(bs.sizes(), &[24, 2]);
        assert_eq!(bs.n(), 26);

        // n_1 = C(163,2) * C(4,2) * 3^9
        let bs = block_structure(3, Mode::Minimal, None).unwrap();
        assert_eq!(bs.sizes(), &[13203 * 6 * 19683, 162, 3]);

        let bs = block_structure(3, Mode::Paper, None).unwrap();
        assert_eq!(bs.sizes(), &[3u64.pow(36), 729, 3]);
    }

    #[test]
    fn block_structure_rejects_bad_input() {
        assert!(block_structure(0, Mode::Paper, None).is_err());
        assert!(block_structure(2, Mode::Custom, None).is_err());
        assert!(block_structure(2, Mode::Custom, Some(&[3])).is_err());
        assert!(block_structure(2, Mode::Custom, Some(&[3, 0])).is_err());
        assert!(block_structure(2, Mode::Paper, Some(&[3, 3])).is_err());
        assert!(matches!(block_structure(4, Mode::Paper, None), Err(HjError::Overflow(_))));
        let bs = block_structure(2, Mode::Custom, Some(&[2, 2])).unwrap();
        assert_eq!(bs.prefix_sum(1), 2);
        assert_eq!(bs.n(), 4);
    }

    #[test]
    fn colour_space_examples() {
        let bs = block_structure(2, Mode::Paper, None).unwrap();
        assert_eq!(bs.colour_space_size(0).unwrap(), 24);
        assert_eq!(bs.colour_space_size(1).unwrap(), 2);
        let bs = block_structure(3, Mode::Minimal, None).unwrap();
        assert_eq!(bs.colour_space_size(1).unwrap(), 162);
        assert_eq!(bs.colour_space_size(2).unwrap(), 3);
        assert!(bs.colour_space_size(3).is_err());
    }

    #[test]
    fn assemble_examples() {
        let w = assemble(
            &Word::empty(),
            &[(4, BlockFill::Cut(1)), (2, BlockFill::Tri { p1: 0, p2: 1, a: Symbol::Three })],
        )
        .unwrap();
        assert_eq!(w, word("122232"));
        assert_eq!(assemble(&Word::empty(), &[]).unwrap(), Word::empty());
        assert_eq!(assemble(&word("12"), &[(3, BlockFill::Cut(3))]).unwrap(), word("12111"));
        assert!(assemble(&Word::empty(), &[(3, BlockFill::Cut(4))]).is_err());
        assert!(assemble(&Word::empty(), &[(3, BlockFill::Tri { p1: 2, p2: 2, a: Symbol::One })]).is_err());
    }

    #[test]
    fn extend_simple_examples() {
        assert_eq!(extend_simple(&Word::empty(), 0, 3).unwrap(), word("222"));
        assert_eq!(extend_simple(&Word::empty(), 3, 3).unwrap(), word("111"));
        assert_eq!(extend_simple(&word("3"), 1, 2).unwrap(), word("312"));
        assert!(extend_simple(&Word::empty(), 4, 3).is_err());
    }

    #[test]
    fn equality_and_lookup() {
        assert!(words_equal(&word("112"), &word("112")));
        assert!(!words_equal(&word("12"), &word("21")));
        let w = word("1x64,2x2");
        assert_eq!(word_symbol_at(&w, 65).unwrap(), Symbol::Two);
        assert_eq!(word_symbol_at(&w, 64).unwrap(), Symbol::One);
        assert_eq!(word_length(&w), 66);
        assert!(word_symbol_at(&w, 0).is_err());
        assert!(word_symbol_at(&w, 67).is_err());
    }

    #[test]
    fn text_encoding() {
        let w = word("1x64,2x2");
        assert_eq!(w.encode(), "1x64,2x2");
        assert_eq!(Word::empty().encode(), "");
        assert_eq!(word("").len(), 0);
        // non-canonical input is normalised
        assert_eq!(word("1x2,1x3,2x0,3x1").encode(), "1x5,3x1");
        assert!("4x1".parse::<Word>().is_err());
        assert!("1x".parse::<Word>().is_err());
        assert!("1y2".parse::<Word>().is_err());
        assert!("1x99999999999999999999".parse::<Word>().is_err());
    }

    #[test]
    fn huge_runs_do_not_expand() {
        let bs = block_structure(3, Mode::Minimal, None).unwrap();
        let w = extend_simple(&Word::empty(), 700_000_000, bs.block_size(1)).unwrap();
        assert_eq!(w.runs().len(), 2);
        assert_eq!(w.len(), bs.block_size(1));
        assert!(w.expand().is_err());
        assert_eq!(w.symbol_at(700_000_001).unwrap(), Symbol::Two);
    }

    fn arb_symbol() -> impl Strategy<Value = Symbol> {
        prop::sample::select(Symbol::ALL.to_vec())
    }

    fn arb_fill() -> impl Strategy<Value = (u64, BlockFill)> {
        (1u64..50, 0u64..1000, 0u64..1000, arb_symbol(), any::<bool>()).prop_map(|(size, x, y, a, cut)| {
            if cut {
                (size, BlockFill::Cut(x % (size + 1)))
            } else {
                let p1 = x % size;
                let p2 = p1 + 1 + y % (size - p1);
                (size, BlockFill::Tri { p1, p2, a })
            }
        })
    }

    proptest! {
        #[test]
        fn assemble_is_canonical_and_sized(
            prefix in prop::collection::vec(arb_symbol(), 0..30),
            blocks in prop::collection::vec(arb_fill(), 0..8),
        ) {
            let p = Word::from_symbols(&prefix);
            let w = assemble(&p, &blocks).unwrap();
            prop_assert!(w.is_canonical());
            let total: u64 = blocks.iter().map(|b| b.0).sum();
            prop_assert_eq!(w.len(), p.len() + total);

            // expanded reference built position by position
            let mut expect = prefix.clone();
            for (size, fill) in &blocks {
                for i in 1..=*size {
                    expect.push(match *fill {
                        BlockFill::Cut(q) => if i <= q { Symbol::One } else { Symbol::Two },
                        BlockFill::Tri { p1, p2, a } => {
                            if i <= p1 { Symbol::One } else if i <= p2 { a } else { Symbol::Two }
                        }
                    });
                }
            }
            prop_assert_eq!(w.expand().unwrap(), expect);
        }

        #[test]
        fn cut_fills_use_only_ones_and_twos(sizes in prop::collection::vec((1u64..1_000_000_000, 0u64..u64::MAX), 1..6)) {
            let blocks: Vec<_> = sizes.iter().map(|&(n, q)| (n, BlockFill::Cut(q % (n + 1)))).collect();
            let w = assemble(&Word::empty(), &blocks).unwrap();
            prop_assert!(w.runs().iter().all(|r| r.symbol != Symbol::Three));
        }

        #[test]
        fn expansion_round_trips(symbols in prop::collection::vec(arb_symbol(), 0..300)) {
            let w = Word::from_symbols(&symbols);
            prop_assert_eq!(&w.expand().unwrap(), &symbols);
            prop_assert_eq!(Word::from_symbols(&w.expand().unwrap()), w.clone());
            prop_assert_eq!(w.encode().parse::<Word>().unwrap(), w);
        }
    }
}
