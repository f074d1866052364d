//! Finite covering numbers: counting and grid bounds, an exact
//! iterative-deepening search, and a greedy cover.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::nat::BoundFn;
use crate::slaloms::{space_size, Slalom, SlalomFamily, DEFAULT_GUARD};

/// Counting lower bound, grid upper bound and the grid family realizing it.
#[derive(Clone, Debug, Serialize)]
pub struct Bounds {
    pub lower: u128,
    pub upper: u128,
    #[serde(skip)]
    pub grid: Option<SlalomFamily>,
}

/// Outcome of [`cover_number_exact`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Exact {
    Found { size: u64, family: SlalomFamily },
    ExceedsBudget { budget: u64 },
}

fn check_windows(f: &BoundFn, g: &BoundFn) -> Result<()> {
    if f.window() != g.window() {
        return Err(Error::WindowMismatch {
            expected: f.window(),
            got: g.window(),
        });
    }
    Ok(())
}

fn ceil_div(a: &BigUint, b: &BigUint) -> BigUint {
    (a + b - BigUint::one()) / b
}

fn to_u128(v: BigUint, what: &str) -> Result<u128> {
    v.to_u128().ok_or_else(|| Error::TooLarge(format!("{what} = {v}")))
}

/// `lower = ⌈∏f / ∏min(f,g)⌉`, `upper = ∏⌈f/g⌉`. The grid family is only
/// built when it has at most `DEFAULT_GUARD` members.
pub fn cover_number_bounds(f: &BoundFn, g: &BoundFn) -> Result<Bounds> {
    check_windows(f, g)?;
    let eff = f.pointwise(g, |a, b| a.min(b).clone())?;
    let lower = to_u128(ceil_div(&f.product(), &eff.product()), "counting bound")?;
    let upper_big = f
        .iter()
        .zip(g.iter())
        .fold(BigUint::one(), |acc, (a, b)| acc * ceil_div(a, b));
    let upper = to_u128(upper_big, "grid bound")?;
    let grid = if upper <= DEFAULT_GUARD as u128 {
        Some(grid_family(f, g)?)
    } else {
        None
    };
    Ok(Bounds { lower, upper, grid })
}

/// Products of contiguous chunks `[j g, (j+1) g) ∩ [0, f)`.
pub fn grid_family(f: &BoundFn, g: &BoundFn) -> Result<SlalomFamily> {
    check_windows(f, g)?;
    let fs = f.to_u64s()?;
    let gs = g.to_u64s()?;
    let chunks: Vec<Vec<Vec<u64>>> = fs
        .iter()
        .zip(&gs)
        .map(|(&fk, &gk)| {
            (0..fk)
                .step_by(gk as usize)
                .map(|s| (s..(s + gk).min(fk)).collect())
                .collect()
        })
        .collect();
    let mut members = Vec::new();
    for pick in crate::slaloms::branches(&chunks.iter().map(|c| c.len() as u64).collect::<Vec<_>>()) {
        let sets = pick
            .iter()
            .enumerate()
            .map(|(k, &j)| chunks[k][j as usize].clone())
            .collect();
        members.push(Slalom::new(f.clone(), sets)?);
    }
    SlalomFamily::new(members)
}

/// `C(n, r)`, saturating at `u128::MAX`.
pub fn binomial(n: u64, r: u64) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(x) => x / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// All `r`-subsets of `[0, n)` in lexicographic order.
pub fn combinations(n: u64, r: u64) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    if r > n {
        return out;
    }
    let r = r as usize;
    let mut cur: Vec<u64> = (0..r as u64).collect();
    loop {
        out.push(cur.clone());
        let mut i = r;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < n - (r - i) as u64 {
                cur[i] += 1;
                for j in i + 1..r {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Exact-cardinality candidate slaloms with their coverage bitsets.
struct Universe {
    caps: Vec<u64>,
    words: usize,
    size: usize,
    candidates: Vec<Vec<Vec<u64>>>,
    bits: Vec<Vec<u64>>,
}

/// Memory ceiling for candidate bitsets, in 64-bit words.
const MAX_WORDS: u128 = 1 << 24;

impl Universe {
    fn build(f: &BoundFn, g: &BoundFn, guard: u64) -> Result<Universe> {
        check_windows(f, g)?;
        let caps = f.to_u64s()?;
        let gs: Vec<u64> = g.to_u64s()?.iter().zip(&caps).map(|(&a, &b)| a.min(b)).collect();
        let n_cand = caps
            .iter()
            .zip(&gs)
            .fold(1u128, |acc, (&fk, &gk)| acc.saturating_mul(binomial(fk, gk)));
        if n_cand > guard as u128 {
            return Err(Error::GuardExceeded { size: n_cand, guard });
        }
        let size = space_size(&caps);
        if size > guard as u128 {
            return Err(Error::GuardExceeded { size, guard });
        }
        let words = (size as usize).div_ceil(64);
        if n_cand.saturating_mul(words as u128) > MAX_WORDS {
            return Err(Error::GuardExceeded {
                size: n_cand.saturating_mul(size),
                guard,
            });
        }
        let per_level: Vec<Vec<Vec<u64>>> = caps.iter().zip(&gs).map(|(&fk, &gk)| combinations(fk, gk)).collect();
        let counts: Vec<u64> = per_level.iter().map(|c| c.len() as u64).collect();
        let mut candidates = Vec::with_capacity(n_cand as usize);
        let mut bits = Vec::with_capacity(n_cand as usize);
        for pick in crate::slaloms::branches(&counts) {
            let sets: Vec<Vec<u64>> = pick
                .iter()
                .enumerate()
                .map(|(k, &j)| per_level[k][j as usize].clone())
                .collect();
            let mut b = vec![0u64; words];
            let lens: Vec<u64> = sets.iter().map(|s| s.len() as u64).collect();
            for idx in crate::slaloms::branches(&lens) {
                let mut pos = 0usize;
                for (k, &j) in idx.iter().enumerate() {
                    pos = pos * caps[k] as usize + sets[k][j as usize] as usize;
                }
                b[pos / 64] |= 1 << (pos % 64);
            }
            candidates.push(sets);
            bits.push(b);
        }
        Ok(Universe {
            caps,
            words,
            size: size as usize,
            candidates,
            bits,
        })
    }

    fn full(&self) -> Vec<u64> {
        let mut u = vec![u64::MAX; self.words];
        let extra = self.words * 64 - self.size;
        if extra > 0 {
            let last = self.words - 1;
            u[last] = u64::MAX >> extra;
        }
        u
    }

    fn gain(&self, c: usize, uncovered: &[u64]) -> u32 {
        self.bits[c]
            .iter()
            .zip(uncovered)
            .map(|(a, b)| (a & b).count_ones())
            .sum()
    }

    fn slalom(&self, c: usize, f: &BoundFn) -> Result<Slalom> {
        Slalom::new(f.clone(), self.candidates[c].clone())
    }

    fn contains(&self, c: usize, pos: usize) -> bool {
        self.bits[c][pos / 64] >> (pos % 64) & 1 == 1
    }
}

fn first_set(bits: &[u64]) -> Option<usize> {
    bits.iter()
        .enumerate()
        .find(|(_, w)| **w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

fn popcount(bits: &[u64]) -> u64 {
    bits.iter().map(|w| w.count_ones() as u64).sum()
}

/// Least `m <= budget` such that `m` slaloms of width `g` cover `∏ f`.
///
/// Iterative deepening from the counting bound. Each node branches on the
/// slaloms containing the least uncovered branch, most new coverage first.
pub fn cover_number_exact(f: &BoundFn, g: &BoundFn, budget: u64) -> Result<Exact> {
    cover_number_exact_guarded(f, g, budget, DEFAULT_GUARD)
}

pub fn cover_number_exact_guarded(f: &BoundFn, g: &BoundFn, budget: u64, guard: u64) -> Result<Exact> {
    let bounds = cover_number_bounds(f, g)?;
    let u = Universe::build(f, g, guard)?;
    let per_slalom: u64 = u.caps.iter().zip(g.to_u64s()?).map(|(&a, b)| a.min(b)).product();
    let start = u64::try_from(bounds.lower).unwrap_or(u64::MAX);
    let mut m = start.max(1);
    while m <= budget {
        let mut chosen = Vec::new();
        if search(&u, u.full(), m, per_slalom, &mut chosen) {
            let members = chosen.iter().map(|&c| u.slalom(c, f)).collect::<Result<Vec<_>>>()?;
            return Ok(Exact::Found {
                size: m,
                family: SlalomFamily::new(members)?,
            });
        }
        m += 1;
    }
    Ok(Exact::ExceedsBudget { budget })
}

fn search(u: &Universe, uncovered: Vec<u64>, left: u64, per: u64, chosen: &mut Vec<usize>) -> bool {
    let Some(pos) = first_set(&uncovered) else {
        return true;
    };
    if left == 0 || popcount(&uncovered) > left * per {
        return false;
    }
    let mut options: Vec<(u32, usize)> = (0..u.candidates.len())
        .filter(|&c| u.contains(c, pos))
        .map(|c| (u.gain(c, &uncovered), c))
        .collect();
    options.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, c) in options {
        let next: Vec<u64> = uncovered.iter().zip(&u.bits[c]).map(|(a, b)| a & !b).collect();
        chosen.push(c);
        if search(u, next, left - 1, per, chosen) {
            return true;
        }
        chosen.pop();
    }
    false
}

/// Greedy cover: repeatedly takes the exact-width slalom covering the most
/// new branches, ties to the lexicographically least slalom.
pub fn greedy_cover(f: &BoundFn, g: &BoundFn) -> Result<SlalomFamily> {
    greedy_cover_guarded(f, g, DEFAULT_GUARD)
}

pub fn greedy_cover_guarded(f: &BoundFn, g: &BoundFn, guard: u64) -> Result<SlalomFamily> {
    let u = Universe::build(f, g, guard)?;
    let mut uncovered = u.full();
    let mut members = Vec::new();
    while first_set(&uncovered).is_some() {
        let mut best = (0u32, 0usize);
        for c in 0..u.candidates.len() {
            let gain = u.gain(c, &uncovered);
            if gain > best.0 {
                best = (gain, c);
            }
        }
        let c = best.1;
        for (w, b) in uncovered.iter_mut().zip(&u.bits[c]) {
            *w &= !b;
        }
        members.push(u.slalom(c, f)?);
    }
    SlalomFamily::new(members)
}
