#![allow(dead_code)]

use std::time::{Duration, Instant};

use hjline::bruteforce::LinePattern;
use hjline::certificate::{verify_certificate, Certificate, StepKind, Template, VerificationReport};
use hjline::oracle::{letter_vectors, make_oracle, with_memo_and_counting};
use hjline::solver::{build_v, find_line, Side};
use hjline::{BlockStructure, Symbol, Word};

pub struct Run {
    pub cert: Certificate,
    pub report: VerificationReport,
    pub elapsed: Duration,
}

/// find_line with a fresh memoized oracle, then verification against another fresh oracle.
pub fn run_and_verify(bs: &BlockStructure, spec: &str) -> hjline::Result<Run> {
    let start = Instant::now();
    let mut oracle = with_memo_and_counting(make_oracle(spec, bs.r())?);
    let cert = find_line(bs, &mut oracle, 0)?;
    let elapsed = start.elapsed();
    let mut replay = make_oracle(&cert.oracle, cert.r)?;
    let report = verify_certificate(&cert, replay.as_mut());
    Ok(Run { cert, report, elapsed })
}

/// Number of (ℓ, letters) for which v_1 and v_2 get different colours,
/// over every ℓ in 1..=t and every letter vector.
pub fn conclusion_violations(cert: &Certificate, spec: &str) -> hjline::Result<(usize, usize)> {
    let bs = cert.block_structure()?;
    let pairs = cert.pairs()?;
    let mut oracle = make_oracle(spec, cert.r)?;
    let (mut checked, mut bad) = (0, 0);
    for ell in 1..=bs.t() {
        for letters in letter_vectors(bs.t() - ell) {
            let v1 = build_v(&bs, &Word::empty(), &pairs, ell, Side::First, &letters)?;
            let v2 = build_v(&bs, &Word::empty(), &pairs, ell, Side::Second, &letters)?;
            checked += 1;
            if oracle.colour(&v1)? != oracle.colour(&v2)? {
                bad += 1;
            }
        }
    }
    Ok((checked, bad))
}

/// The same line as a brute-force pattern over [3]^n (small n only).
pub fn line_to_pattern(cert: &Certificate) -> LinePattern {
    let mut template = Vec::new();
    for &(s, len) in cert.line.fixed.runs() {
        for _ in 0..len {
            template.push(s.map(|x| x.value() as u32));
        }
    }
    LinePattern { m: 3, template }
}

fn other(s: Symbol) -> Symbol {
    if s == Symbol::Two {
        Symbol::Three
    } else {
        Symbol::Two
    }
}

/// Changes the symbol at the last position.
pub fn flip_last(w: &Word) -> Word {
    let mut runs: Vec<(Symbol, u64)> = w.runs().iter().map(|r| (r.symbol, r.len)).collect();
    let (s, len) = runs.pop().expect("non-empty word");
    runs.push((s, len - 1));
    runs.push((other(s), 1));
    Word::from_runs(runs).unwrap()
}

fn flip_fixed(t: &Template) -> Template {
    let mut out = Template::default();
    let mut done = false;
    for &(s, len) in t.runs() {
        match s {
            Some(sym) if !done => {
                out.push(Some(sym), len - 1).unwrap();
                out.push(Some(other(sym)), 1).unwrap();
                done = true;
            }
            _ => out.push(s, len).unwrap(),
        }
    }
    out
}

pub struct Mutation {
    pub name: &'static str,
    /// Check that must fail.
    pub check: u8,
    pub apply: fn(&mut Certificate),
}

fn first_conclusion(c: &mut Certificate) -> &mut hjline::certificate::ChainStep {
    c.chain.iter_mut().find(|s| s.kind == StepKind::Conclude).expect("chain has a conclusion")
}

pub fn mutations() -> Vec<Mutation> {
    vec![
        Mutation { name: "version bumped", check: 1, apply: |c| c.version += 1 },
        Mutation { name: "r changed", check: 1, apply: |c| c.r += 1 },
        Mutation {
            name: "mode swapped",
            check: 1,
            apply: |c| {
                c.mode = if c.mode == hjline::Mode::Paper { hjline::Mode::Minimal } else { hjline::Mode::Paper }
            },
        },
        Mutation { name: "block size bumped", check: 1, apply: |c| c.block_sizes[0] += 1 },
        Mutation { name: "pair collapsed", check: 2, apply: |c| c.pair_table[0].2 = c.pair_table[0].1 },
        Mutation {
            name: "pair beyond block",
            check: 2,
            apply: |c| {
                let last = c.pair_table.len() - 1;
                c.pair_table[last].2 = c.block_sizes[last] + 1;
            },
        },
        Mutation { name: "pair dropped", check: 2, apply: |c| { c.pair_table.pop(); } },
        Mutation { name: "identification word flipped", check: 3, apply: |c| c.chain[0].to = flip_last(&c.chain[0].to) },
        Mutation { name: "conclusion step removed", check: 3, apply: |c| { c.chain.remove(1); } },
        Mutation {
            name: "conclusion level changed",
            check: 4,
            apply: |c| {
                let step = first_conclusion(c);
                step.ell = Some(if step.ell == Some(1) { 2 } else { 1 });
            },
        },
        Mutation {
            name: "conclusion letters changed",
            check: 4,
            apply: |c| {
                let step = first_conclusion(c);
                let letters = step.letters.as_mut().unwrap();
                match letters.first_mut() {
                    Some(a) => *a = if *a == Symbol::One { Symbol::Two } else { Symbol::One },
                    None => letters.push(Symbol::One),
                }
            },
        },
        Mutation {
            name: "conclusion sides swapped",
            check: 4,
            apply: |c| {
                let step = first_conclusion(c);
                step.i_from = Some(1);
                step.i_to = Some(2);
            },
        },
        Mutation { name: "shared colour changed", check: 5, apply: |c| c.shared_colour = (c.shared_colour + 1) % c.r },
        Mutation {
            name: "active interval shifted",
            check: 6,
            apply: |c| {
                let (lo, hi) = c.line.active[0];
                c.line.active[0] = (lo + 1, hi + 1);
            },
        },
        Mutation { name: "fixed coordinate flipped", check: 7, apply: |c| c.line.fixed = flip_fixed(&c.line.fixed) },
        Mutation {
            name: "final collision swapped",
            check: 7,
            apply: |c| c.final_collision = (c.final_collision.1, c.final_collision.0),
        },
    ]
}
