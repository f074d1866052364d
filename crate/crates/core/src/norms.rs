//! Cardinality norms `‖x‖_k = max{m : g(k)·h(k)^m <= |x|}` (0 when no such
//! `m`), the natural norm `log_{c/d}`, and `(c,d)`-completeness.

use std::collections::BTreeSet;

use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::nat::BoundFn;
use crate::scales::Triple;

/// Per-level norm parameters. Values beyond `u64` saturate, which is exact
/// for every size that fits in `u64`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NormSpec {
    g: Vec<u64>,
    h: Vec<u64>,
}

fn saturate(b: &BoundFn) -> Vec<u64> {
    b.iter().map(|v| v.to_u64().unwrap_or(u64::MAX)).collect()
}

impl NormSpec {
    pub fn new(g: Vec<u64>, h: Vec<u64>) -> Result<Self> {
        if g.len() != h.len() {
            return Err(Error::WindowMismatch {
                expected: g.len(),
                got: h.len(),
            });
        }
        if let Some(k) = g.iter().position(|&x| x == 0) {
            return Err(Error::Malformed(format!("g({k}) = 0")));
        }
        if let Some(k) = h.iter().position(|&x| x < 2) {
            return Err(Error::Malformed(format!("h({k}) = {} < 2", h[k])));
        }
        Ok(NormSpec { g, h })
    }

    pub fn from_bounds(g: &BoundFn, h: &BoundFn) -> Result<Self> {
        NormSpec::new(saturate(g), saturate(h))
    }

    pub fn from_triple(t: &Triple) -> Result<Self> {
        NormSpec::from_bounds(&t.g, &t.h)
    }

    pub fn window(&self) -> usize {
        self.g.len()
    }

    pub fn g(&self, k: usize) -> u64 {
        self.g[k]
    }

    pub fn h(&self, k: usize) -> u64 {
        self.h[k]
    }

    pub fn norm(&self, k: usize, size: u64) -> u64 {
        norm_value(self.g[k], self.h[k], size)
    }
}

/// Largest `m` with `g·h^m <= size`, or 0 when `size < g·h`.
pub fn norm_value(g: u64, h: u64, size: u64) -> u64 {
    debug_assert!(g >= 1 && h >= 2);
    let size = size as u128;
    let mut bound = g as u128 * h as u128;
    let mut m = 0;
    while bound <= size {
        m += 1;
        bound *= h as u128;
    }
    m
}

/// Largest `m` with `(c/d)^m <= size`, i.e. `c^m <= size·d^m`.
pub fn natural_norm(c: u64, d: u64, size: u64) -> Result<u64> {
    if d == 0 || c <= d {
        return Err(Error::Precondition(format!(
            "natural norm needs c > d >= 1, got c = {c}, d = {d}"
        )));
    }
    let (mut num, mut den) = (c as u128, d as u128);
    let mut m = 0;
    while num <= size as u128 * den {
        m += 1;
        num = num
            .checked_mul(c as u128)
            .ok_or_else(|| Error::TooLarge("natural norm".into()))?;
        den = den
            .checked_mul(d as u128)
            .ok_or_else(|| Error::TooLarge("natural norm".into()))?;
    }
    Ok(m)
}

/// A decomposition where no `d` pieces keep the norm within 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CdCounterexample {
    pub size: u64,
    pub parts: Vec<u64>,
    pub norm: u64,
    pub best: u64,
}

pub const CD_CHECK_LIMIT: u64 = 12;
pub const CD_LABELED_LIMIT: u64 = 6;

/// Checks `(c,d)`-completeness of a norm that depends only on cardinality,
/// for every `a` of size `1..=x_size`: any split into at most `c` pieces has
/// at most `d` pieces whose union has norm `>= ‖a‖ - 1`.
///
/// Overlapping pieces only make unions bigger, so integer partitions of
/// `|a|` into at most `c` parts are enough.
pub fn cd_complete_check(norm: impl Fn(u64) -> u64, x_size: u64, c: u64, d: u64) -> Result<Option<CdCounterexample>> {
    cd_complete_check_guarded(norm, x_size, c, d, CD_CHECK_LIMIT)
}

pub fn cd_complete_check_guarded(
    norm: impl Fn(u64) -> u64,
    x_size: u64,
    c: u64,
    d: u64,
    limit: u64,
) -> Result<Option<CdCounterexample>> {
    if x_size > limit {
        return Err(Error::GuardExceeded {
            size: x_size as u128,
            guard: limit,
        });
    }
    if c == 0 || d == 0 {
        return Err(Error::Precondition("c and d must be positive".into()));
    }
    for size in 1..=x_size {
        let need = norm(size).saturating_sub(1);
        let mut parts = Vec::new();
        let mut found = None;
        partitions(size, size, c as usize, &mut parts, &mut |p| {
            let best = best_union(p, d as usize, &norm);
            if best < need {
                found = Some(CdCounterexample {
                    size,
                    parts: p.to_vec(),
                    norm: norm(size),
                    best,
                });
                true
            } else {
                false
            }
        });
        if found.is_some() {
            return Ok(found);
        }
    }
    Ok(None)
}

/// Partitions of `n` into at most `slots` parts, each `<= max`, in
/// decreasing part order. `visit` returns `true` to stop.
fn partitions(n: u64, max: u64, slots: usize, acc: &mut Vec<u64>, visit: &mut dyn FnMut(&[u64]) -> bool) -> bool {
    if n == 0 {
        return visit(acc);
    }
    if slots == 0 {
        return false;
    }
    for p in (1..=max.min(n)).rev() {
        acc.push(p);
        let stop = partitions(n - p, p, slots - 1, acc, visit);
        acc.pop();
        if stop {
            return true;
        }
    }
    false
}

fn best_union(parts: &[u64], d: usize, norm: &impl Fn(u64) -> u64) -> u64 {
    let n = parts.len();
    let mut best = 0;
    for mask in 1u32..(1 << n) {
        if mask.count_ones() as usize <= d {
            let s: u64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| parts[i]).sum();
            best = best.max(norm(s));
        }
    }
    best
}

/// The labeled version of [`cd_complete_check`]: every `a ⊆ [0, x_size)` and
/// every assignment of its points to `c` pieces. Sets are bitmasks; only for
/// cross-checking at `x_size <= 6`.
pub fn cd_complete_check_labeled(
    norm: impl Fn(u64) -> u64,
    x_size: u64,
    c: u64,
    d: u64,
) -> Result<Option<(u64, Vec<u64>)>> {
    if x_size > CD_LABELED_LIMIT {
        return Err(Error::GuardExceeded {
            size: x_size as u128,
            guard: CD_LABELED_LIMIT,
        });
    }
    if c == 0 || d == 0 {
        return Err(Error::Precondition("c and d must be positive".into()));
    }
    for a in 1u64..(1 << x_size) {
        let pts: Vec<u64> = (0..x_size).filter(|&i| a >> i & 1 == 1).collect();
        let need = norm(a).saturating_sub(1);
        let total = (c as u128).pow(pts.len() as u32);
        for code in 0..total {
            let mut pieces = vec![0u64; c as usize];
            let mut rest = code;
            for &p in &pts {
                pieces[(rest % c as u128) as usize] |= 1 << p;
                rest /= c as u128;
            }
            let ok = (1u32..(1 << c)).any(|sel| {
                sel.count_ones() as u64 <= d && {
                    let u = (0..c as usize)
                        .filter(|&i| sel >> i & 1 == 1)
                        .fold(0, |acc, i| acc | pieces[i]);
                    u != 0 && norm(u) >= need
                }
            });
            if !ok {
                return Ok(Some((a, pieces)));
            }
        }
    }
    Ok(None)
}

/// Picks at most `d` of the pieces whose union keeps the level-`k` norm of
/// their total union within 1. Pieces are first made disjoint (each loses
/// the points of earlier pieces), then the `d` largest are taken, ties to
/// the lower index. Requires `pieces.len() <= c` and `c <= d·h(k)`.
pub fn cd_select(spec: &NormSpec, k: usize, pieces: &[Vec<u64>], c: u64, d: u64) -> Result<Vec<usize>> {
    if d == 0 {
        return Err(Error::Precondition("d = 0".into()));
    }
    if pieces.len() as u64 > c {
        return Err(Error::Precondition(format!("{} pieces but c = {c}", pieces.len())));
    }
    if c as u128 > d as u128 * spec.h(k) as u128 {
        return Err(Error::Precondition(format!(
            "c/d = {c}/{d} exceeds h({k}) = {}",
            spec.h(k)
        )));
    }
    let mut seen = BTreeSet::new();
    let mut sizes = Vec::with_capacity(pieces.len());
    for (i, p) in pieces.iter().enumerate() {
        let fresh = p.iter().filter(|&&v| seen.insert(v)).count();
        sizes.push((fresh, i));
    }
    sizes.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let chosen: Vec<usize> = sizes.iter().take(d as usize).map(|&(_, i)| i).collect();
    let union: BTreeSet<u64> = chosen.iter().flat_map(|&i| pieces[i].iter().copied()).collect();
    let total = spec.norm(k, seen.len() as u64);
    let got = spec.norm(k, union.len() as u64);
    if got + 1 < total {
        return Err(Error::Invariant(format!(
            "selected pieces have norm {got}, whole set has {total} at level {k}"
        )));
    }
    Ok(chosen)
}

/// `‖f(k)‖_k` per level.
pub fn norm_table(spec: &NormSpec, f: &BoundFn) -> Result<Vec<u64>> {
    if f.window() != spec.window() {
        return Err(Error::WindowMismatch {
            expected: spec.window(),
            got: f.window(),
        });
    }
    Ok(saturate(f).iter().enumerate().map(|(k, &s)| spec.norm(k, s)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_examples() {
        assert_eq!(norm_value(4, 2, 16), 2);
        assert_eq!(norm_value(4, 2, 4), 0);
        assert_eq!(norm_value(4, 2, 3), 0);
        assert_eq!(norm_value(4, 2, 7), 0);
        assert_eq!(norm_value(4, 2, 8), 1);
        assert_eq!(norm_value(1, 2, u64::MAX), 63);
    }

    #[test]
    fn natural_norm_is_floor_log() {
        assert_eq!(natural_norm(2, 1, 1).unwrap(), 0);
        assert_eq!(natural_norm(2, 1, 8).unwrap(), 3);
        assert_eq!(natural_norm(2, 1, 9).unwrap(), 3);
        assert_eq!(natural_norm(3, 2, 3).unwrap(), 2);
        assert!(natural_norm(2, 2, 3).is_err());
    }

    #[test]
    fn natural_norm_is_complete() {
        let r = cd_complete_check(|s| natural_norm(2, 1, s).unwrap(), 8, 2, 1).unwrap();
        assert_eq!(r, None);
    }

    #[test]
    fn cardinality_norm_fails_at_four() {
        let r = cd_complete_check(|s| s, 8, 2, 1).unwrap().unwrap();
        assert_eq!(r.size, 4);
        assert_eq!(r.parts, vec![2, 2]);
        assert_eq!(r.best, 2);
    }

    #[test]
    fn cardinality_norm_labeled_agrees() {
        let (a, _) = cd_complete_check_labeled(|m| m.count_ones() as u64, 5, 2, 1)
            .unwrap()
            .unwrap();
        assert_eq!(a.count_ones(), 4);
    }

    #[test]
    fn log_norm_complete_when_ratio_fits() {
        for (g, h, c, d) in [(4, 2, 2, 1), (2, 3, 3, 1), (1, 2, 4, 2), (3, 4, 8, 2)] {
            assert_eq!(
                cd_complete_check(|s| norm_value(g, h, s), 12, c, d).unwrap(),
                None,
                "{g} {h} {c} {d}"
            );
        }
    }

    #[test]
    fn guard_on_size() {
        assert!(matches!(
            cd_complete_check(|s| s, 13, 2, 1),
            Err(Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn select_examples() {
        let spec = NormSpec::new(vec![4], vec![2]).unwrap();
        let a: Vec<u64> = (0..16).collect();
        let pieces = vec![a[..6].to_vec(), a[6..].to_vec()];
        assert_eq!(cd_select(&spec, 0, &pieces, 2, 1).unwrap(), vec![1]);
        let equal = vec![vec![0, 1], vec![2, 3], vec![4, 5], vec![6, 7]];
        assert_eq!(cd_select(&spec, 0, &equal, 4, 2).unwrap(), vec![0, 1]);
        assert!(cd_select(&spec, 0, &equal, 4, 1).is_err());
    }

    #[test]
    fn overlapping_pieces_use_disjoint_sizes() {
        let spec = NormSpec::new(vec![1], vec![2]).unwrap();
        let pieces = vec![vec![0, 1, 2], vec![0, 1, 2, 3], vec![4, 5, 6, 7]];
        // refined sizes 3, 1, 4
        assert_eq!(cd_select(&spec, 0, &pieces, 4, 2).unwrap(), vec![2, 0]);
    }
}
