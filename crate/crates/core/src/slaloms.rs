//! Slaloms over a finite window and the covering predicate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nat::BoundFn;

/// Largest branch space [`covers`] and friends will walk.
pub const DEFAULT_GUARD: u64 = 1_000_000;

/// A point `s_0 .. s_{K-1}` of a product space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Branch(pub Vec<u64>);

/// Per-level value sets `B_k ⊆ [0, cap(k))`, each nonempty and kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Slalom {
    cap: BoundFn,
    sets: Vec<Vec<u64>>,
}

impl<'de> Deserialize<'de> for Slalom {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            cap: BoundFn,
            sets: Vec<Vec<u64>>,
        }
        let r = Raw::deserialize(d)?;
        Slalom::new(r.cap, r.sets).map_err(serde::de::Error::custom)
    }
}

impl Slalom {
    pub fn new(cap: BoundFn, sets: Vec<Vec<u64>>) -> Result<Self> {
        if sets.len() != cap.window() {
            return Err(Error::WindowMismatch {
                expected: cap.window(),
                got: sets.len(),
            });
        }
        let caps = cap.to_u64s()?;
        let mut clean = Vec::with_capacity(sets.len());
        for (k, mut s) in sets.into_iter().enumerate() {
            s.sort_unstable();
            s.dedup();
            if s.is_empty() {
                return Err(Error::Malformed(format!("slalom level {k} is empty")));
            }
            if let Some(&v) = s.last().filter(|&&v| v >= caps[k]) {
                return Err(Error::Malformed(format!(
                    "value {v} at level {k} is not below {}",
                    caps[k]
                )));
            }
            clean.push(s);
        }
        Ok(Slalom { cap, sets: clean })
    }

    /// The full slalom `B_k = [0, cap(k))`.
    pub fn full(cap: &BoundFn) -> Result<Self> {
        let sets = cap.to_u64s()?.into_iter().map(|c| (0..c).collect()).collect();
        Slalom::new(cap.clone(), sets)
    }

    pub fn cap(&self) -> &BoundFn {
        &self.cap
    }

    pub fn window(&self) -> usize {
        self.sets.len()
    }

    pub fn sets(&self) -> &[Vec<u64>] {
        &self.sets
    }

    pub fn set(&self, k: usize) -> &[u64] {
        &self.sets[k]
    }

    pub fn contains(&self, k: usize, v: u64) -> bool {
        self.sets[k].binary_search(&v).is_ok()
    }

    /// Pointwise `|B_k| <= bound(k)`; returns the first offending level.
    pub fn first_too_wide(&self, bound: &BoundFn) -> Option<(usize, usize)> {
        self.sets
            .iter()
            .enumerate()
            .find(|(k, s)| num_bigint::BigUint::from(s.len()) > *bound.get(*k))
            .map(|(k, s)| (k, s.len()))
    }

    /// Adds the least missing values until `|B_k| = min(g(k), cap(k))`.
    pub fn pad_to(&self, g: &BoundFn) -> Result<Slalom> {
        let g = g.to_u64s()?;
        let caps = self.cap.to_u64s()?;
        let mut sets = self.sets.clone();
        for (k, s) in sets.iter_mut().enumerate() {
            let want = g[k].min(caps[k]) as usize;
            let mut v = 0;
            while s.len() < want {
                if let Err(pos) = s.binary_search(&v) {
                    s.insert(pos, v);
                }
                v += 1;
            }
        }
        Slalom::new(self.cap.clone(), sets)
    }
}

pub fn member(s: &Branch, b: &Slalom) -> Result<bool> {
    if s.0.len() != b.window() {
        return Err(Error::WindowMismatch {
            expected: b.window(),
            got: s.0.len(),
        });
    }
    Ok(s.0.iter().enumerate().all(|(k, &v)| b.contains(k, v)))
}

/// A finite family of slaloms sharing window and cap.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Slalom>", into = "Vec<Slalom>")]
pub struct SlalomFamily {
    cap: Option<BoundFn>,
    members: Vec<Slalom>,
}

impl TryFrom<Vec<Slalom>> for SlalomFamily {
    type Error = Error;
    fn try_from(v: Vec<Slalom>) -> Result<Self> {
        SlalomFamily::new(v)
    }
}

impl From<SlalomFamily> for Vec<Slalom> {
    fn from(f: SlalomFamily) -> Self {
        f.members
    }
}

impl SlalomFamily {
    pub fn new(members: Vec<Slalom>) -> Result<Self> {
        let cap = members.first().map(|m| m.cap.clone());
        if let Some(c) = &cap {
            if let Some(i) = members.iter().position(|m| m.cap != *c) {
                return Err(Error::Malformed(format!(
                    "slalom {i} has cap {} instead of {c}",
                    members[i].cap
                )));
            }
        }
        Ok(SlalomFamily { cap, members })
    }

    pub fn members(&self) -> &[Slalom] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn cap(&self) -> Option<&BoundFn> {
        self.cap.as_ref()
    }
}

/// Result of a covering check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Coverage {
    Covers,
    Uncovered(Branch),
}

impl Coverage {
    pub fn is_cover(&self) -> bool {
        matches!(self, Coverage::Covers)
    }
}

fn check_family(fam: &SlalomFamily, g: &BoundFn, f: &BoundFn) -> Result<()> {
    if g.window() != f.window() {
        return Err(Error::WindowMismatch {
            expected: f.window(),
            got: g.window(),
        });
    }
    for (i, m) in fam.members.iter().enumerate() {
        if m.window() != f.window() {
            return Err(Error::WindowMismatch {
                expected: f.window(),
                got: m.window(),
            });
        }
        if m.cap != *f {
            return Err(Error::Malformed(format!(
                "slalom {i} has cap {} but the space is {f}",
                m.cap
            )));
        }
        if let Some((level, size)) = m.first_too_wide(g) {
            return Err(Error::SlalomTooWide {
                index: i,
                level,
                size,
                bound: g.to_u64s()?[level],
            });
        }
    }
    Ok(())
}

/// Decides whether every branch of `∏ f` lies in some member of `fam`.
///
/// Walks prefixes in lexicographic order and drops a subtree as soon as no
/// member survives it, so the reported branch is the least uncovered one.
pub fn covers(fam: &SlalomFamily, g: &BoundFn, f: &BoundFn) -> Result<Coverage> {
    covers_guarded(fam, g, f, DEFAULT_GUARD)
}

pub fn covers_guarded(fam: &SlalomFamily, g: &BoundFn, f: &BoundFn, guard: u64) -> Result<Coverage> {
    check_family(fam, g, f)?;
    let caps = f.to_u64s()?;
    let size = space_size(&caps);
    if size > guard as u128 {
        return Err(Error::GuardExceeded { size, guard });
    }
    let alive: Vec<usize> = (0..fam.members.len()).collect();
    let mut prefix = Vec::with_capacity(caps.len());
    Ok(match dfs(&fam.members, &caps, &mut prefix, &alive) {
        None => Coverage::Covers,
        Some(b) => Coverage::Uncovered(Branch(b)),
    })
}

fn dfs(members: &[Slalom], caps: &[u64], prefix: &mut Vec<u64>, alive: &[usize]) -> Option<Vec<u64>> {
    let k = prefix.len();
    if alive.is_empty() {
        let mut w = prefix.clone();
        w.resize(caps.len(), 0);
        return Some(w);
    }
    if k == caps.len() {
        return None;
    }
    for v in 0..caps[k] {
        let next: Vec<usize> = alive.iter().copied().filter(|&i| members[i].contains(k, v)).collect();
        prefix.push(v);
        let r = dfs(members, caps, prefix, &next);
        prefix.pop();
        if r.is_some() {
            return r;
        }
    }
    None
}

/// Number of branches of `∏ caps`, saturating.
pub fn space_size(caps: &[u64]) -> u128 {
    caps.iter().fold(1u128, |acc, &c| acc.saturating_mul(c as u128))
}

/// All branches of `∏ caps` in lexicographic order.
pub fn branches(caps: &[u64]) -> impl Iterator<Item = Vec<u64>> + '_ {
    let empty = caps.contains(&0);
    let mut cur: Option<Vec<u64>> = if empty { None } else { Some(vec![0; caps.len()]) };
    std::iter::from_fn(move || {
        let out = cur.clone()?;
        let mut next = out.clone();
        let mut k = caps.len();
        loop {
            if k == 0 {
                cur = None;
                break;
            }
            k -= 1;
            next[k] += 1;
            if next[k] < caps[k] {
                cur = Some(next);
                break;
            }
            next[k] = 0;
        }
        Some(out)
    })
}

/// Full-enumeration covering check, kept as the reference for [`covers`].
pub fn covers_by_enumeration(fam: &SlalomFamily, g: &BoundFn, f: &BoundFn) -> Result<Coverage> {
    check_family(fam, g, f)?;
    let caps = f.to_u64s()?;
    for b in branches(&caps) {
        let br = Branch(b);
        if !fam.members.iter().any(|m| member(&br, m).unwrap_or(false)) {
            return Ok(Coverage::Uncovered(br));
        }
    }
    Ok(Coverage::Covers)
}
