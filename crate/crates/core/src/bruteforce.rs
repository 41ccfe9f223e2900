//! Exhaustive machinery for small cubes [m]^n: line enumeration, naive
//! monochromatic-line detection and a backtracking search for colourings
//! without monochromatic lines.

use std::fmt;

use crate::error::{HjError, Result};
use crate::oracle::{point_count, ColourId, ColourTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    /// Largest number of line patterns enumerated.
    pub max_patterns: u64,
    /// Largest number of colour assignments tried by the witness search.
    pub max_nodes: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_patterns: 10_000_000, max_nodes: 10_000_000 }
    }
}

/// A line template over {1..m} with at least one wildcard (`None`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinePattern {
    pub m: u32,
    pub template: Vec<Option<u32>>,
}

impl LinePattern {
    pub fn star_count(&self) -> usize {
        self.template.iter().filter(|x| x.is_none()).count()
    }

    /// Point obtained by writing `x` on every wildcard.
    pub fn point(&self, x: u32) -> Vec<u32> {
        self.template.iter().map(|c| c.unwrap_or(x)).collect()
    }

    /// Table indices of the m points, for x = 1..=m.
    pub fn point_indices(&self) -> Vec<usize> {
        let m = self.m as usize;
        let mut base = 0usize;
        let mut star_weight = 0usize;
        for c in &self.template {
            base *= m;
            star_weight *= m;
            match c {
                Some(v) => base += (*v - 1) as usize,
                None => star_weight += 1,
            }
        }
        (0..m).map(|x| base + x * star_weight).collect()
    }
}

impl fmt::Display for LinePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.template {
            match c {
                Some(v) => write!(f, "{v}")?,
                None => f.write_str("*")?,
            }
        }
        Ok(())
    }
}

/// Every line pattern of [m]^n exactly once, in lexicographic order with
/// symbols ordered 1 < 2 < ... < m < `*`.
pub fn enumerate_lines(m: u32, n: u32, caps: &Caps) -> Result<impl Iterator<Item = LinePattern>> {
    if m < 2 || n == 0 {
        return Err(HjError::invalid(format!("need m >= 2 and n >= 1, got m = {m}, n = {n}")));
    }
    let total = (m as u64 + 1)
        .checked_pow(n)
        .filter(|&c| c <= caps.max_patterns)
        .ok_or_else(|| HjError::invalid(format!("({m}+1)^{n} patterns exceeds the cap of {}", caps.max_patterns)))?;
    let base = m as u64 + 1;
    Ok((0..total).filter_map(move |mut idx| {
        let mut template = vec![None; n as usize];
        let mut stars = 0;
        for slot in template.iter_mut().rev() {
            let d = (idx % base) as u32;
            idx /= base;
            if d == m {
                stars += 1;
            } else {
                *slot = Some(d + 1);
            }
        }
        (stars > 0).then_some(LinePattern { m, template })
    }))
}

pub fn line_count(m: u32, n: u32) -> Option<u64> {
    let a = (m as u64 + 1).checked_pow(n)?;
    let b = (m as u64).checked_pow(n)?;
    Some(a - b)
}

/// First pattern (in enumeration order) whose points all share a colour.
pub fn find_mono_line_naive(table: &ColourTable, caps: &Caps) -> Result<Option<(LinePattern, ColourId)>> {
    if table.colours.len() as u64 != point_count(table.m, table.n)? {
        return Err(HjError::invalid("colour table is incomplete"));
    }
    for pattern in enumerate_lines(table.m, table.n, caps)? {
        let idx = pattern.point_indices();
        let c = table.colours[idx[0]];
        if idx[1..].iter().all(|&i| table.colours[i] == c) {
            return Ok(Some((pattern, c)));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WitnessOutcome {
    /// A colouring with no monochromatic line.
    Found(ColourTable),
    /// The whole search space was exhausted.
    ProvenNone,
    /// The node budget ran out first.
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessSearch {
    pub outcome: WitnessOutcome,
    pub nodes: u64,
}

/// Depth-first search over colourings of [m]^n, points in lexicographic
/// order and colours 0..r, pruning as soon as a line whose points are all
/// assigned is monochromatic.
pub fn hj_lower_witness(m: u32, n: u32, r: u32, caps: &Caps) -> Result<WitnessSearch> {
    if r == 0 {
        return Err(HjError::invalid("r must be at least 1"));
    }
    let points = point_count(m, n)? as usize;
    // Lines grouped by their last point; the other points are checked on assignment.
    let mut closing: Vec<Vec<Vec<usize>>> = vec![Vec::new(); points];
    for pattern in enumerate_lines(m, n, caps)? {
        let mut idx = pattern.point_indices();
        let last = idx.pop().expect("m >= 2");
        closing[last].push(idx);
    }

    let mut colours = vec![0 as ColourId; points];
    let mut next = vec![0 as ColourId; points];
    let mut nodes = 0u64;
    let mut p = 0usize;
    loop {
        if p == points {
            let table = ColourTable::new(m, n, r, colours)?;
            return Ok(WitnessSearch { outcome: WitnessOutcome::Found(table), nodes });
        }
        let mut placed = false;
        while next[p] < r {
            let c = next[p];
            next[p] += 1;
            nodes += 1;
            if nodes > caps.max_nodes {
                return Ok(WitnessSearch { outcome: WitnessOutcome::BudgetExhausted, nodes: caps.max_nodes });
            }
            let mono = closing[p].iter().any(|others| others.iter().all(|&i| colours[i] == c));
            if !mono {
                colours[p] = c;
                placed = true;
                break;
            }
        }
        if placed {
            p += 1;
            if p < points {
                next[p] = 0;
            }
        } else if p == 0 {
            return Ok(WitnessSearch { outcome: WitnessOutcome::ProvenNone, nodes });
        } else {
            p -= 1;
        }
    }
}

/// Smallest n <= n_max for which no line-free r-colouring of [m]^n exists;
/// `None` when every n up to `n_max` admits a witness.
pub fn hj_number_exact(m: u32, r: u32, n_max: u32, caps: &Caps) -> Result<Option<u32>> {
    for n in 1..=n_max {
        match hj_lower_witness(m, n, r, caps)?.outcome {
            WitnessOutcome::ProvenNone => return Ok(Some(n)),
            WitnessOutcome::Found(_) => continue,
            WitnessOutcome::BudgetExhausted => return Err(HjError::SearchBudget(caps.max_nodes)),
        }
    }
    Ok(None)
}
