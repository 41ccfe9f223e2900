//! The block-by-block pigeonhole induction and the final line extraction.
//!
//! Level `j` takes a word `w` of length `s_j` and scans `q = 0, 1, ...` over
//! the words `w(q) = w 1^q 2^(n_{j+1} - q)`. Each `w(q)` gets a composite
//! colour made of the pair table the next level produces for it and the
//! oracle colours of its extensions by every letter vector. The first
//! repeated composite colour fixes the pair for block `j + 1`; deeper pairs
//! are inherited from the earlier of the two colliding candidates.
//!
//! Only the words actually reached from the empty word are ever examined,
//! and every level result is memoized by its (canonical) input word, so the
//! pair tables behave as functions of the word.

use std::collections::HashMap;

use log::{debug, info, trace};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::certificate::{Certificate, ChainStep, LineSpec, StepKind, Template};
use crate::error::{HjError, Result};
use crate::oracle::{letter_vectors, ColourId, ColourOracle, CountingOracle};
use crate::word::{assemble, extend_simple, BlockFill, BlockStructure, Symbol, Word};

/// Default cap on unique oracle evaluations.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

/// Letter vectors checked exhaustively up to this many; sampled beyond.
const EXHAUSTIVE_LIMIT: usize = 81;
const SAMPLE_SIZE: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pair {
    pub p1: u64,
    pub p2: u64,
}

/// Cut pairs for the consecutive blocks `first..first + pairs.len()`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PairTable {
    first: usize,
    pairs: Vec<Pair>,
}

impl PairTable {
    /// Table with no pairs, positioned right after block `last`.
    pub fn empty_after(last: usize) -> Self {
        PairTable { first: last + 1, pairs: Vec::new() }
    }

    pub fn new(first: usize, pairs: Vec<Pair>) -> Result<Self> {
        if first == 0 {
            return Err(HjError::invalid("block indices start at 1"));
        }
        Ok(PairTable { first, pairs })
    }

    /// First block covered (or one past the end, if empty).
    pub fn first(&self) -> usize {
        self.first
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, k: usize) -> Option<Pair> {
        k.checked_sub(self.first).and_then(|i| self.pairs.get(i)).copied()
    }

    /// (k, pair) in ascending k.
    pub fn iter(&self) -> impl Iterator<Item = (usize, Pair)> + '_ {
        self.pairs.iter().enumerate().map(move |(i, &p)| (self.first + i, p))
    }

    fn with_front(&self, pair: Pair) -> PairTable {
        let mut pairs = Vec::with_capacity(self.pairs.len() + 1);
        pairs.push(pair);
        pairs.extend_from_slice(&self.pairs);
        PairTable { first: self.first - 1, pairs }
    }

    /// Checks that the table covers exactly blocks `first..=t` of `bs` with
    /// `0 <= p1 < p2 <= n_k`.
    pub fn check_against(&self, bs: &BlockStructure, first: usize) -> Result<()> {
        if self.first != first || self.first + self.pairs.len() != bs.t() + 1 {
            return Err(HjError::invalid(format!(
                "pair table covers blocks {}..{} but blocks {first}..={} are needed",
                self.first,
                self.first + self.pairs.len(),
                bs.t()
            )));
        }
        for (k, p) in self.iter() {
            if !(p.p1 < p.p2 && p.p2 <= bs.block_size(k)) {
                return Err(HjError::invalid(format!(
                    "pair ({}, {}) out of range for block {k} of size {}",
                    p.p1,
                    p.p2,
                    bs.block_size(k)
                )));
            }
        }
        Ok(())
    }
}

/// The colour given to `w(q)` at one level: the pairs inherited from the
/// next level together with the oracle colours of all letter extensions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CompositeColour {
    pub inherited: PairTable,
    /// Indexed by letter vectors in lexicographic order.
    pub colours: Vec<ColourId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelOutcome {
    pub level: usize,
    pub collision: (u64, u64),
    /// Pairs for blocks `level + 1..=t`.
    pub pair_table: PairTable,
    pub witness: CompositeColour,
}

/// Which of the two cut positions is used in the distinguished block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

impl Side {
    pub fn index(self) -> u8 {
        match self {
            Side::First => 1,
            Side::Second => 2,
        }
    }

    pub fn from_index(i: u8) -> Option<Side> {
        match i {
            1 => Some(Side::First),
            2 => Some(Side::Second),
            _ => None,
        }
    }

    fn pick(self, p: Pair) -> u64 {
        match self {
            Side::First => p.p1,
            Side::Second => p.p2,
        }
    }
}

/// w(q; a_{j+2}, ..., a_t): `w` (length s_{j+1}) followed by
/// `Tri(p_{k,1}, p_{k,2}, a_k)` in every later block.
pub fn extend_with_letters(bs: &BlockStructure, w: &Word, pairs: &PairTable, letters: &[Symbol]) -> Result<Word> {
    let start = pairs.first();
    if start == 0 || start > bs.t() + 1 {
        return Err(HjError::invalid(format!("pair table starts at block {start}")));
    }
    pairs.check_against(bs, start)?;
    if w.len() != bs.prefix_sum(start - 1) {
        return Err(HjError::invalid(format!(
            "word has length {} but s_{} = {}",
            w.len(),
            start - 1,
            bs.prefix_sum(start - 1)
        )));
    }
    if letters.len() != pairs.len() {
        return Err(HjError::invalid(format!("{} letters for {} blocks", letters.len(), pairs.len())));
    }
    let blocks: Vec<_> = pairs
        .iter()
        .zip(letters)
        .map(|((k, p), &a)| (bs.block_size(k), BlockFill::Tri { p1: p.p1, p2: p.p2, a }))
        .collect();
    assemble(w, &blocks)
}

/// v_i(ℓ; a_{ℓ+1}, ..., a_t) relative to `prefix` of length s_j, where the
/// table covers blocks `j + 1..=t`.
///
/// Blocks before ℓ get `Cut(p_{k,2})`, block ℓ gets `Cut(p_{ℓ,i})` and later
/// blocks get `Tri(p_{k,1}, p_{k,2}, a_k)`. With `ell == 0` (only allowed
/// when j = 0) every block is a `Tri` block and `side` is ignored.
pub fn build_v(
    bs: &BlockStructure,
    prefix: &Word,
    pairs: &PairTable,
    ell: usize,
    side: Side,
    letters: &[Symbol],
) -> Result<Word> {
    let first = pairs.first();
    if first == 0 || first > bs.t() {
        return Err(HjError::invalid(format!("pair table must start inside 1..={}", bs.t())));
    }
    let j = first - 1;
    pairs.check_against(bs, first)?;
    if prefix.len() != bs.prefix_sum(j) {
        return Err(HjError::invalid(format!("prefix has length {} but s_{j} = {}", prefix.len(), bs.prefix_sum(j))));
    }
    let valid_ell = (ell > j && ell <= bs.t()) || (ell == 0 && j == 0);
    if !valid_ell {
        return Err(HjError::invalid(format!("ℓ = {ell} must satisfy {j} < ℓ <= {}", bs.t())));
    }
    if letters.len() != bs.t() - ell {
        return Err(HjError::invalid(format!("ℓ = {ell} needs {} letters, got {}", bs.t() - ell, letters.len())));
    }
    let blocks: Vec<_> = pairs
        .iter()
        .map(|(k, p)| {
            let fill = if k < ell {
                BlockFill::Cut(p.p2)
            } else if k == ell {
                BlockFill::Cut(side.pick(p))
            } else {
                BlockFill::Tri { p1: p.p1, p2: p.p2, a: letters[k - ell - 1] }
            };
            (bs.block_size(k), fill)
        })
        .collect();
    assemble(prefix, &blocks)
}

/// The letter vector 1^ones 2^twos 3^threes.
pub fn letters_of(ones: usize, twos: usize, threes: usize) -> Vec<Symbol> {
    std::iter::repeat_n(Symbol::One, ones)
        .chain(std::iter::repeat_n(Symbol::Two, twos))
        .chain(std::iter::repeat_n(Symbol::Three, threes))
        .collect()
}

/// v(q) = v(0; 1^q 3^(t - q)).
pub fn final_word(bs: &BlockStructure, pairs: &PairTable, q: usize) -> Result<Word> {
    build_v(bs, &Word::empty(), pairs, 0, Side::First, &letters_of(q, 0, bs.t() - q))
}

pub struct Solver<'a> {
    bs: &'a BlockStructure,
    oracle: &'a mut CountingOracle,
    memo: HashMap<Word, LevelOutcome>,
    rng: ChaCha8Rng,
}

impl<'a> Solver<'a> {
    /// `seed` drives the sampling used by the internal identification checks
    /// when there are too many letter vectors to check them all.
    pub fn new(bs: &'a BlockStructure, oracle: &'a mut CountingOracle, seed: u64) -> Result<Self> {
        if oracle.r() != bs.r() {
            return Err(HjError::invalid(format!("oracle has r = {}, block structure has r = {}", oracle.r(), bs.r())));
        }
        if let Some(d) = oracle.dimension() {
            if d != bs.n() {
                return Err(HjError::invalid(format!("oracle dimension {d} differs from n = {}", bs.n())));
            }
        }
        Ok(Solver { bs, oracle, memo: HashMap::new(), rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn oracle(&mut self) -> &mut CountingOracle {
        self.oracle
    }

    /// χ_{j+1}(w) for a word `w` of length s_{j+1}, plus the pairs the next
    /// level assigns to `w`.
    pub fn composite_colour(&mut self, j: usize, w: &Word) -> Result<(CompositeColour, PairTable)> {
        let t = self.bs.t();
        if j >= t {
            return Err(HjError::invalid(format!("level {j} outside 0..{t}")));
        }
        if w.len() != self.bs.prefix_sum(j + 1) {
            return Err(HjError::invalid(format!("word has length {}, expected s_{} = {}", w.len(), j + 1, self.bs.prefix_sum(j + 1))));
        }
        let pairs = if j + 1 < t {
            self.solve_level(j + 1, w)?.pair_table
        } else {
            PairTable::empty_after(t)
        };
        let mut colours = Vec::with_capacity(3usize.pow((t - j - 1) as u32));
        for letters in letter_vectors(t - j - 1) {
            let word = extend_with_letters(self.bs, w, &pairs, &letters)?;
            colours.push(self.oracle.colour(&word)?);
        }
        Ok((CompositeColour { inherited: pairs.clone(), colours }, pairs))
    }

    /// Induction step at level `j` for a word of length s_j.
    pub fn solve_level(&mut self, j: usize, w: &Word) -> Result<LevelOutcome> {
        let t = self.bs.t();
        if j >= t {
            return Err(HjError::invalid(format!("level {j} outside 0..{t}")));
        }
        if w.len() != self.bs.prefix_sum(j) {
            return Err(HjError::invalid(format!("word has length {}, expected s_{j} = {}", w.len(), self.bs.prefix_sum(j))));
        }
        if let Some(hit) = self.memo.get(w) {
            return Ok(hit.clone());
        }

        let size = self.bs.block_size(j + 1);
        let mut seen: HashMap<CompositeColour, u64> = HashMap::new();
        let mut found = None;
        for q in 0..=size {
            let wq = extend_simple(w, q, size)?;
            let (colour, _) = self.composite_colour(j, &wq)?;
            if let Some((earlier, &q1)) = seen.get_key_value(&colour) {
                if *earlier != colour {
                    return Err(HjError::Invariant("hash map matched unequal composite colours".into()));
                }
                found = Some((q1, q, colour));
                break;
            }
            if j == 0 && q > 0 && q % 1000 == 0 {
                debug!("level 0: scanned {q} candidates, {} unique evaluations", self.oracle.stats().unique);
            }
            seen.insert(colour, q);
        }
        let Some((q1, q2, colour)) = found else {
            return Err(HjError::NoCollision { level: j, scanned: size + 1 });
        };
        drop(seen);

        // Both sides are recomputed (memoized) and compared structurally.
        let w1 = extend_simple(w, q1, size)?;
        let w2 = extend_simple(w, q2, size)?;
        let (c1, inherited) = self.composite_colour(j, &w1)?;
        let (c2, inherited2) = self.composite_colour(j, &w2)?;
        if c1 != c2 || c1 != colour || inherited != inherited2 {
            return Err(HjError::Invariant(format!("composite colours at q = {q1} and q = {q2} differ on recomputation")));
        }

        let pair_table = inherited.with_front(Pair { p1: q1, p2: q2 });
        self.check_identification(j, w, &pair_table, &w2, &inherited)?;

        let outcome = LevelOutcome { level: j, collision: (q1, q2), pair_table, witness: colour };
        if j == 0 {
            info!(
                "level 0: collision ({q1}, {q2}); {} unique evaluations",
                self.oracle.stats().unique
            );
        } else {
            trace!("level {j}: collision ({q1}, {q2})");
        }
        self.memo.insert(w.clone(), outcome.clone());
        Ok(outcome)
    }

    /// For every ℓ > j + 1, v_i(ℓ; a) built from `w` coincides with the same
    /// word built from `w(p_{j+1,2})` one level down.
    fn check_identification(
        &mut self,
        j: usize,
        w: &Word,
        table: &PairTable,
        w2: &Word,
        inherited: &PairTable,
    ) -> Result<()> {
        let t = self.bs.t();
        for ell in j + 2..=t {
            let mut vectors: Vec<_> = letter_vectors(t - ell).collect();
            if vectors.len() > EXHAUSTIVE_LIMIT {
                vectors = vectors.choose_multiple(&mut self.rng, SAMPLE_SIZE).cloned().collect();
            }
            for letters in &vectors {
                for side in [Side::First, Side::Second] {
                    let here = build_v(self.bs, w, table, ell, side, letters)?;
                    let below = build_v(self.bs, w2, inherited, ell, side, letters)?;
                    if here != below {
                        return Err(HjError::Invariant(format!(
                            "identification failed at level {j}, ℓ = {ell}, letters {letters:?}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// The alternating identification / conclusion chain from v(q2) to
/// v(0; 1^q1 2^(q2-q1) 3^(t-q2)).
pub fn build_chain(bs: &BlockStructure, pairs: &PairTable, q1: usize, q2: usize) -> Result<Vec<ChainStep>> {
    let t = bs.t();
    if !(q1 < q2 && q2 <= t) {
        return Err(HjError::invalid(format!("need 0 <= q1 < q2 <= {t}, got ({q1}, {q2})")));
    }
    pairs.check_against(bs, 1)?;
    let empty = Word::empty();
    let threes = t - q2;
    let mut steps = Vec::with_capacity(2 * (q2 - q1) + 1);
    let mut current = final_word(bs, pairs, q2)?;
    for ell in (q1 + 1..=q2).rev() {
        let letters = letters_of(0, q2 - ell, threes);
        let second = build_v(bs, &empty, pairs, ell, Side::Second, &letters)?;
        let first = build_v(bs, &empty, pairs, ell, Side::First, &letters)?;
        steps.push(ChainStep::identify(current, second.clone()));
        steps.push(ChainStep::conclude(second, first.clone(), ell, letters));
        current = first;
    }
    let end = build_v(bs, &empty, pairs, 0, Side::First, &letters_of(q1, q2 - q1, threes))?;
    steps.push(ChainStep::identify(current, end));
    for step in &steps {
        if step.kind == StepKind::Identify && step.from != step.to {
            return Err(HjError::Invariant("chain identification between unequal words".into()));
        }
    }
    Ok(steps)
}

/// The combinatorial line through v(q2), the chain's last word and v(q1):
/// the active set is the middle segment of every block in q1+1..=q2.
pub fn line_from_collision(bs: &BlockStructure, pairs: &PairTable, q1: usize, q2: usize) -> Result<LineSpec> {
    let t = bs.t();
    if !(q1 < q2 && q2 <= t) {
        return Err(HjError::invalid(format!("need 0 <= q1 < q2 <= {t}, got ({q1}, {q2})")));
    }
    pairs.check_against(bs, 1)?;
    let mut fixed = Template::default();
    for (k, p) in pairs.iter() {
        let n = bs.block_size(k);
        if k <= q1 {
            fixed.push(Some(Symbol::One), p.p2)?;
            fixed.push(Some(Symbol::Two), n - p.p2)?;
        } else {
            let middle = if k <= q2 { None } else { Some(Symbol::Three) };
            fixed.push(Some(Symbol::One), p.p1)?;
            fixed.push(middle, p.p2 - p.p1)?;
            fixed.push(Some(Symbol::Two), n - p.p2)?;
        }
    }
    LineSpec::from_template(fixed)
}

/// Runs the full induction from the empty word, then the final pigeonhole
/// over v(0), ..., v(t), and packages the result.
pub fn find_line(bs: &BlockStructure, oracle: &mut CountingOracle, seed: u64) -> Result<Certificate> {
    if bs.t() != bs.r() as usize {
        return Err(HjError::invalid("the final pigeonhole needs t = r"));
    }
    let mut solver = Solver::new(bs, oracle, seed)?;
    let top = solver.solve_level(0, &Word::empty())?;
    let pairs = top.pair_table;

    let t = bs.t();
    let mut seen: HashMap<ColourId, usize> = HashMap::new();
    let mut collision = None;
    for q in 0..=t {
        let c = solver.oracle().colour(&final_word(bs, &pairs, q)?)?;
        if let Some(&q1) = seen.get(&c) {
            collision = Some((q1, q, c));
            break;
        }
        seen.insert(c, q);
    }
    let (q1, q2, shared) = collision.ok_or(HjError::NoCollision { level: t, scanned: t as u64 + 1 })?;
    info!("final pigeonhole: v({q1}) and v({q2}) share colour {shared}");

    let chain = build_chain(bs, &pairs, q1, q2)?;
    let line = line_from_collision(bs, &pairs, q1, q2)?;
    let stats = solver.oracle().stats();
    let spec = solver.oracle().spec().to_string();
    Ok(Certificate::new(bs, &pairs, (q1, q2), chain, line, shared, spec, stats))
}
