//! Transfer systems between covering problems and the lifting operations that
//! turn covering families for one pair of bounds into covering families for
//! another. Every output family is re-checked against its target space.

use serde::{Deserialize, Serialize};

use crate::covernum::{binomial, combinations};
use crate::error::{Error, Result};
use crate::nat::BoundFn;
use crate::slaloms::{covers, Branch, Coverage, Slalom, SlalomFamily, DEFAULT_GUARD};

/// A partition `w_0, .., w_{I-1}` of the source window together with maps
/// `H^i_l : [0, f'(i)) -> [0, f(l))` for every `l ∈ w_i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TransferSystem {
    f: BoundFn,
    g: BoundFn,
    f_prime: BoundFn,
    g_prime: BoundFn,
    blocks: Vec<Vec<usize>>,
    /// `maps[i][j]` is `H^i_l` for `l = blocks[i][j]`, as a value table.
    maps: Vec<Vec<Vec<u64>>>,
}

#[derive(Deserialize)]
struct RawSystem {
    f: BoundFn,
    g: BoundFn,
    f_prime: BoundFn,
    g_prime: BoundFn,
    blocks: Vec<Vec<usize>>,
    maps: Vec<Vec<Vec<u64>>>,
}

impl<'de> Deserialize<'de> for TransferSystem {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = RawSystem::deserialize(d)?;
        TransferSystem::new(r.f, r.g, r.f_prime, r.g_prime, r.blocks, r.maps).map_err(serde::de::Error::custom)
    }
}

impl TransferSystem {
    pub fn new(
        f: BoundFn,
        g: BoundFn,
        f_prime: BoundFn,
        g_prime: BoundFn,
        blocks: Vec<Vec<usize>>,
        maps: Vec<Vec<Vec<u64>>>,
    ) -> Result<Self> {
        let mismatch = |expected, got| Error::WindowMismatch { expected, got };
        if g.window() != f.window() {
            return Err(mismatch(f.window(), g.window()));
        }
        let n_blocks = f_prime.window();
        if g_prime.window() != n_blocks {
            return Err(mismatch(n_blocks, g_prime.window()));
        }
        if blocks.len() != n_blocks {
            return Err(mismatch(n_blocks, blocks.len()));
        }
        if maps.len() != n_blocks {
            return Err(mismatch(n_blocks, maps.len()));
        }
        let fs = f.to_u64s()?;
        let fps = f_prime.to_u64s()?;
        let mut seen = vec![false; f.window()];
        for (i, w) in blocks.iter().enumerate() {
            if maps[i].len() != w.len() {
                return Err(Error::Malformed(format!(
                    "block {i} has {} levels but {} maps",
                    w.len(),
                    maps[i].len()
                )));
            }
            for (j, &l) in w.iter().enumerate() {
                if l >= seen.len() {
                    return Err(Error::Malformed(format!(
                        "block {i} names level {l} outside the source window"
                    )));
                }
                if std::mem::replace(&mut seen[l], true) {
                    return Err(Error::Malformed(format!("level {l} appears in two blocks")));
                }
                let h = &maps[i][j];
                if h.len() as u64 != fps[i] {
                    return Err(Error::Malformed(format!(
                        "H^{i}_{l} has {} entries, expected f'({i}) = {}",
                        h.len(),
                        fps[i]
                    )));
                }
                if let Some(&v) = h.iter().find(|&&v| v >= fs[l]) {
                    return Err(Error::Malformed(format!(
                        "H^{i}_{l} takes value {v} >= f({l}) = {}",
                        fs[l]
                    )));
                }
            }
        }
        if let Some(l) = seen.iter().position(|s| !s) {
            return Err(Error::Malformed(format!("level {l} is in no block")));
        }
        Ok(TransferSystem {
            f,
            g,
            f_prime,
            g_prime,
            blocks,
            maps,
        })
    }

    pub fn f(&self) -> &BoundFn {
        &self.f
    }
    pub fn g(&self) -> &BoundFn {
        &self.g
    }
    pub fn f_prime(&self) -> &BoundFn {
        &self.f_prime
    }
    pub fn g_prime(&self) -> &BoundFn {
        &self.g_prime
    }
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// `H^i_l` where `l = blocks[i][j]`.
    pub fn map(&self, i: usize, j: usize) -> &[u64] {
        &self.maps[i][j]
    }

    fn preimage(&self, i: usize, u: &[Vec<u64>]) -> Vec<u64> {
        let n = self.maps[i]
            .first()
            .map_or_else(|| self.f_prime.to_u64s().unwrap()[i], |h| h.len() as u64);
        (0..n)
            .filter(|&x| {
                self.maps[i]
                    .iter()
                    .zip(u)
                    .all(|(h, ul)| ul.binary_search(&h[x as usize]).is_ok())
            })
            .collect()
    }
}

/// Outcome of [`check_condition_c`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ConditionC {
    Holds,
    /// `choice[j]` is `u_l` for `l = blocks[block][j]`.
    Fails {
        block: usize,
        choice: Vec<Vec<u64>>,
        preimage: Vec<u64>,
    },
}

impl ConditionC {
    pub fn holds(&self) -> bool {
        matches!(self, ConditionC::Holds)
    }
}

/// For every block `i` and every choice of `u_l ⊆ [0, f(l))` with
/// `|u_l| <= g(l)`, the common preimage has at most `g'(i)` points.
///
/// Per block, whichever of two equivalent enumerations is smaller is used:
/// maximal choices `u_l` (size `min(f, g)`), or candidate preimages
/// `S ⊆ [0, f'(i))` of size `g'(i) + 1` whose images fit under `g`.
pub fn check_condition_c(t: &TransferSystem) -> Result<ConditionC> {
    check_condition_c_guarded(t, DEFAULT_GUARD)
}

pub fn check_condition_c_guarded(t: &TransferSystem, guard: u64) -> Result<ConditionC> {
    let fs = t.f.to_u64s()?;
    let gs = t.g.to_u64s()?;
    let fps = t.f_prime.to_u64s()?;
    let gps = t.g_prime.to_u64s()?;
    for (i, w) in t.blocks.iter().enumerate() {
        if gps[i] >= fps[i] {
            continue;
        }
        let by_choice = w
            .iter()
            .fold(1u128, |acc, &l| acc.saturating_mul(binomial(fs[l], gs[l].min(fs[l]))));
        let by_subset = binomial(fps[i], gps[i] + 1).saturating_mul(w.len().max(1) as u128);
        if by_choice.min(by_subset) > guard as u128 {
            return Err(Error::GuardExceeded {
                size: by_choice.min(by_subset),
                guard,
            });
        }
        let found = if by_choice <= by_subset {
            block_by_choice(t, i, &fs, &gs, gps[i])
        } else {
            block_by_subset(t, i, &gs, fps[i], gps[i])
        };
        if let Some((choice, preimage)) = found {
            return Ok(ConditionC::Fails {
                block: i,
                choice,
                preimage,
            });
        }
    }
    Ok(ConditionC::Holds)
}

fn block_by_choice(t: &TransferSystem, i: usize, fs: &[u64], gs: &[u64], gp: u64) -> Option<(Vec<Vec<u64>>, Vec<u64>)> {
    let options: Vec<Vec<Vec<u64>>> = t.blocks[i]
        .iter()
        .map(|&l| combinations(fs[l], gs[l].min(fs[l])))
        .collect();
    let counts: Vec<u64> = options.iter().map(|o| o.len() as u64).collect();
    for pick in crate::slaloms::branches(&counts) {
        let u: Vec<Vec<u64>> = pick
            .iter()
            .enumerate()
            .map(|(j, &c)| options[j][c as usize].clone())
            .collect();
        let pre = t.preimage(i, &u);
        if pre.len() as u64 > gp {
            return Some((u, pre));
        }
    }
    None
}

fn block_by_subset(t: &TransferSystem, i: usize, gs: &[u64], fp: u64, gp: u64) -> Option<(Vec<Vec<u64>>, Vec<u64>)> {
    for s in combinations(fp, gp + 1) {
        let images: Vec<Vec<u64>> = t.blocks[i]
            .iter()
            .enumerate()
            .map(|(j, _)| {
                let mut v: Vec<u64> = s.iter().map(|&x| t.maps[i][j][x as usize]).collect();
                v.sort_unstable();
                v.dedup();
                v
            })
            .collect();
        if t.blocks[i].iter().zip(&images).all(|(&l, im)| im.len() as u64 <= gs[l]) {
            let pre = t.preimage(i, &images);
            return Some((images, pre));
        }
    }
    None
}

/// `B*_i = {n < f'(i) : H^i_l(n) ∈ B_l for all l ∈ w_i}`, with empty levels
/// replaced by `{0}`.
pub fn slalom_pushforward(t: &TransferSystem, b: &Slalom) -> Result<Slalom> {
    if b.cap() != &t.f {
        return Err(Error::Malformed(format!(
            "slalom cap {} differs from source bound {}",
            b.cap(),
            t.f
        )));
    }
    if let Some((level, size)) = b.first_too_wide(&t.g) {
        return Err(Error::SlalomTooWide {
            index: 0,
            level,
            size,
            bound: t.g.to_u64s()?[level],
        });
    }
    let gps = t.g_prime.to_u64s()?;
    let mut sets = Vec::with_capacity(t.blocks.len());
    for (i, w) in t.blocks.iter().enumerate() {
        let u: Vec<Vec<u64>> = w.iter().map(|&l| b.set(l).to_vec()).collect();
        let mut pre = t.preimage(i, &u);
        if pre.len() as u64 > gps[i] {
            return Err(Error::PreimageBound { block: i });
        }
        if pre.is_empty() {
            pre.push(0);
        }
        sets.push(pre);
    }
    Slalom::new(t.f_prime.clone(), sets)
}

/// `x*(l) = H^i_l(x(i))` for `l ∈ w_i`.
pub fn branch_pushforward(t: &TransferSystem, x: &Branch) -> Result<Branch> {
    if x.0.len() != t.blocks.len() {
        return Err(Error::WindowMismatch {
            expected: t.blocks.len(),
            got: x.0.len(),
        });
    }
    let fps = t.f_prime.to_u64s()?;
    let mut out = vec![0; t.f.window()];
    for (i, w) in t.blocks.iter().enumerate() {
        if x.0[i] >= fps[i] {
            return Err(Error::Malformed(format!(
                "branch value {} at {i} not below f'({i}) = {}",
                x.0[i], fps[i]
            )));
        }
        for (j, &l) in w.iter().enumerate() {
            out[l] = t.maps[i][j][x.0[i] as usize];
        }
    }
    Ok(Branch(out))
}

/// Pushes every member forward and checks that the result covers `∏ f'`.
pub fn transfer_family(t: &TransferSystem, fam: &SlalomFamily) -> Result<SlalomFamily> {
    let members = fam
        .members()
        .iter()
        .map(|b| slalom_pushforward(t, b))
        .collect::<Result<Vec<_>>>()?;
    let out = SlalomFamily::new(members)?;
    require_cover(&out, &t.g_prime, &t.f_prime)?;
    Ok(out)
}

fn require_cover(fam: &SlalomFamily, g: &BoundFn, f: &BoundFn) -> Result<()> {
    match covers(fam, g, f)? {
        Coverage::Covers => Ok(()),
        Coverage::Uncovered(b) => Err(Error::NotCovering(b.0)),
    }
}

fn checked_product(mut vals: impl Iterator<Item = u64>, what: &str) -> Result<u64> {
    vals.try_fold(1u64, |acc, v| acc.checked_mul(v))
        .ok_or_else(|| Error::TooLarge(what.to_string()))
}

/// Groups consecutive levels `[n_i, n_{i+1})` and codes each group by mixed
/// radix, most significant digit at the lowest level. `cuts` lists the block
/// starts and must begin with 0.
pub fn block_coding_system(f: &BoundFn, g: &BoundFn, cuts: &[usize]) -> Result<TransferSystem> {
    let k = f.window();
    if g.window() != k {
        return Err(Error::WindowMismatch {
            expected: k,
            got: g.window(),
        });
    }
    if cuts.first() != Some(&0) || cuts.windows(2).any(|w| w[0] >= w[1]) || cuts.last().is_some_and(|&c| c >= k) {
        return Err(Error::Malformed(format!(
            "cuts {cuts:?} must start at 0, increase, and stay below {k}"
        )));
    }
    let fs = f.to_u64s()?;
    let gs = g.to_u64s()?;
    let mut blocks = Vec::new();
    let mut maps = Vec::new();
    let mut fp = Vec::new();
    let mut gp = Vec::new();
    for (i, &start) in cuts.iter().enumerate() {
        let end = cuts.get(i + 1).copied().unwrap_or(k);
        let w: Vec<usize> = (start..end).collect();
        let size = checked_product(w.iter().map(|&l| fs[l]), "f' block product")?;
        if size > DEFAULT_GUARD {
            return Err(Error::GuardExceeded {
                size: size as u128,
                guard: DEFAULT_GUARD,
            });
        }
        let gsize = checked_product(w.iter().map(|&l| gs[l]), "g' block product")?;
        let mut hs = vec![Vec::with_capacity(size as usize); w.len()];
        for n in 0..size {
            let mut rest = n;
            for (j, &l) in w.iter().enumerate().rev() {
                hs[j].push(rest % fs[l]);
                rest /= fs[l];
            }
        }
        blocks.push(w);
        maps.push(hs);
        fp.push(size);
        gp.push(gsize);
    }
    TransferSystem::new(
        f.clone(),
        g.clone(),
        BoundFn::from_u64s(&fp)?,
        BoundFn::from_u64s(&gp)?,
        blocks,
        maps,
    )
}

/// Block partition and, per block, the map tables.
type BlockMaps = (Vec<Vec<usize>>, Vec<Vec<Vec<u64>>>);

/// `I` blocks; block `i` has one source level per function
/// `[0, 2^i) -> [0, range)`, listed in lexicographic order of value tables.
fn function_blocks(range: u64, n_blocks: usize) -> Result<BlockMaps> {
    let mut blocks = Vec::new();
    let mut maps = Vec::new();
    let mut next = 0usize;
    for i in 0..n_blocks {
        let dom = 1u64 << i;
        let count = (range as u128)
            .checked_pow(dom as u32)
            .filter(|&c| c <= DEFAULT_GUARD as u128);
        let count = count.ok_or(Error::GuardExceeded {
            size: (range as u128).saturating_pow(dom as u32),
            guard: DEFAULT_GUARD,
        })? as usize;
        blocks.push((next..next + count).collect());
        next += count;
        maps.push(crate::slaloms::branches(&vec![range; dom as usize]).collect());
    }
    if next as u64 > DEFAULT_GUARD {
        return Err(Error::GuardExceeded {
            size: next as u128,
            guard: DEFAULT_GUARD,
        });
    }
    Ok((blocks, maps))
}

/// Source bounds `f ≡ n+1`, `g ≡ n`; target `f'(i) = 2^i`, `g'(i) = n`; block
/// `i` carries all `(n+1)^(2^i)` functions `[0, 2^i) -> [0, n+1)`.
pub fn allfunctions_system(n: u64, n_blocks: usize) -> Result<TransferSystem> {
    allfunctions_with_range(n, n_blocks, n + 1)
}

/// Same target as [`allfunctions_system`] but with only the `n^(2^i)`
/// functions into `[0, n)` per block. Condition (c) fails for this variant
/// as soon as `2^i > n`.
pub fn allfunctions_system_literal(n: u64, n_blocks: usize) -> Result<TransferSystem> {
    allfunctions_with_range(n, n_blocks, n)
}

fn allfunctions_with_range(n: u64, n_blocks: usize, range: u64) -> Result<TransferSystem> {
    if n == 0 || n_blocks == 0 || n_blocks > 20 {
        return Err(Error::Precondition(format!(
            "need n >= 1 and 1 <= blocks <= 20, got n = {n}, blocks = {n_blocks}"
        )));
    }
    let (blocks, maps) = function_blocks(range, n_blocks)?;
    let width: usize = blocks.iter().map(|w| w.len()).sum();
    let fp: Vec<u64> = (0..n_blocks).map(|i| 1u64 << i).collect();
    TransferSystem::new(
        BoundFn::constant(n + 1, width)?,
        BoundFn::constant(n, width)?,
        BoundFn::from_u64s(&fp)?,
        BoundFn::constant(n, n_blocks)?,
        blocks,
        maps,
    )
}

fn require_input(fam: &SlalomFamily, g: &BoundFn, f: &BoundFn) -> Result<()> {
    if f.window() != g.window() {
        return Err(Error::WindowMismatch {
            expected: f.window(),
            got: g.window(),
        });
    }
    if fam.is_empty() {
        return Err(Error::NotCovering(vec![0; f.window()]));
    }
    require_cover(fam, g, f)
}

/// Lifts a family through a partition of `[0, target(k))` into `f(k)` blocks:
/// each member's `C_k` becomes the union of the blocks it names.
fn lift_through_blocks(fam: &SlalomFamily, target: &BoundFn, blocks: &[Vec<Vec<u64>>]) -> Result<SlalomFamily> {
    let members = fam
        .members()
        .iter()
        .map(|c| {
            let sets = c
                .sets()
                .iter()
                .enumerate()
                .map(|(k, ck)| ck.iter().flat_map(|&i| blocks[k][i as usize].iter().copied()).collect())
                .collect();
            Slalom::new(target.clone(), sets)
        })
        .collect::<Result<Vec<_>>>()?;
    SlalomFamily::new(members)
}

/// From `g`-slaloms covering `∏ f`, builds the same number of `f`-slaloms
/// covering `∏ f·⌊f/g⌋` using contiguous blocks of size `⌊f/g⌋`.
pub fn halving_lift(f: &BoundFn, g: &BoundFn, fam: &SlalomFamily) -> Result<SlalomFamily> {
    require_input(fam, g, f)?;
    let fs = f.to_u64s()?;
    let gs = g.to_u64s()?;
    let q: Vec<u64> = fs.iter().zip(&gs).map(|(&a, &b)| a / b).collect();
    if let Some(k) = q.iter().position(|&x| x == 0) {
        return Err(Error::Precondition(format!("f({k}) < g({k})")));
    }
    let target = BoundFn::from_u64s(&fs.iter().zip(&q).map(|(&a, &b)| a * b).collect::<Vec<_>>())?;
    let blocks: Vec<Vec<Vec<u64>>> = fs
        .iter()
        .zip(&q)
        .map(|(&fk, &qk)| (0..fk).map(|i| (i * qk..(i + 1) * qk).collect()).collect())
        .collect();
    let out = lift_through_blocks(fam, &target, &blocks)?;
    require_cover(&out, f, &target)?;
    Ok(out)
}

/// From `g`-slaloms covering `∏ f`, builds `f`-slaloms covering `∏ (2f - g)`:
/// the first `f - g` blocks are pairs, the rest singletons.
pub fn addition_lift(f: &BoundFn, g: &BoundFn, fam: &SlalomFamily) -> Result<SlalomFamily> {
    require_input(fam, g, f)?;
    let fs = f.to_u64s()?;
    let gs = g.to_u64s()?;
    if let Some(k) = (0..fs.len()).find(|&k| gs[k] >= fs[k]) {
        return Err(Error::Precondition(format!("need g < f, fails at level {k}")));
    }
    let target = BoundFn::from_u64s(&fs.iter().zip(&gs).map(|(&a, &b)| 2 * a - b).collect::<Vec<_>>())?;
    let blocks: Vec<Vec<Vec<u64>>> = fs
        .iter()
        .zip(&gs)
        .map(|(&fk, &gk)| {
            let pairs = fk - gk;
            (0..fk)
                .map(|i| {
                    if i < pairs {
                        vec![2 * i, 2 * i + 1]
                    } else {
                        vec![i + pairs]
                    }
                })
                .collect()
        })
        .collect();
    let out = lift_through_blocks(fam, &target, &blocks)?;
    require_cover(&out, f, &target)?;
    Ok(out)
}

/// From `g`-slaloms covering `∏ f` and `h`-slaloms covering `∏ g`, builds at
/// most `|G|·|H|` `h`-slaloms covering `∏ f`. Each `B ∈ G` is padded to width
/// `g` and `D ∈ H` is carried into it by the increasing bijection.
pub fn transitivity_compose(
    f: &BoundFn,
    g: &BoundFn,
    h: &BoundFn,
    big: &SlalomFamily,
    small: &SlalomFamily,
) -> Result<SlalomFamily> {
    require_input(big, g, f)?;
    require_input(small, h, g)?;
    if !g.le(f) {
        return Err(Error::Precondition("need g <= f".into()));
    }
    let mut members = Vec::with_capacity(big.len() * small.len());
    for b in big.members() {
        let b = b.pad_to(g)?;
        for d in small.members() {
            let sets = b
                .sets()
                .iter()
                .zip(d.sets())
                .map(|(bk, dk)| dk.iter().map(|&j| bk[j as usize]).collect())
                .collect();
            members.push(Slalom::new(f.clone(), sets)?);
        }
    }
    let out = SlalomFamily::new(members)?;
    require_cover(&out, h, f)?;
    Ok(out)
}

/// Pairs members of a family for `(f, g)` with members of a family for
/// `(f', g')`, coding `(a, b)` as `a·f' + b`.
pub fn product_pair(
    f: &BoundFn,
    g: &BoundFn,
    fam: &SlalomFamily,
    f2: &BoundFn,
    g2: &BoundFn,
    fam2: &SlalomFamily,
) -> Result<SlalomFamily> {
    require_input(fam, g, f)?;
    require_input(fam2, g2, f2)?;
    if f.window() != f2.window() {
        return Err(Error::WindowMismatch {
            expected: f.window(),
            got: f2.window(),
        });
    }
    let target = f.pointwise(f2, |a, b| a * b)?;
    let gt = g.pointwise(g2, |a, b| a * b)?;
    target.to_u64s()?;
    let f2s = f2.to_u64s()?;
    let mut members = Vec::with_capacity(fam.len() * fam2.len());
    for a in fam.members() {
        for b in fam2.members() {
            let sets = (0..f.window())
                .map(|k| {
                    a.set(k)
                        .iter()
                        .flat_map(|&x| b.set(k).iter().map(move |&y| (x, y)))
                        .map(|(x, y)| x * f2s[k] + y)
                        .collect()
                })
                .collect();
            members.push(Slalom::new(target.clone(), sets)?);
        }
    }
    let out = SlalomFamily::new(members)?;
    require_cover(&out, &gt, &target)?;
    Ok(out)
}

/// Counts the `η ∈ 2^N` with `η↾l ∈ B_l` for every `l <= N`, where level `l`
/// codes binary strings of length `l` most significant bit first (so
/// `cap(l) = 2^l` and the window is `N + 1`). The count never exceeds
/// `|B_N|`; an excess is reported as a broken invariant.
pub fn branch_chain_bound(b: &Slalom, depth: usize) -> Result<u64> {
    if b.window() != depth + 1 {
        return Err(Error::WindowMismatch {
            expected: depth + 1,
            got: b.window(),
        });
    }
    if depth > 24 {
        return Err(Error::TooLarge(format!("depth {depth}")));
    }
    let caps = b.cap().to_u64s()?;
    if let Some(l) = (0..=depth).find(|&l| caps[l] != 1 << l) {
        return Err(Error::Malformed(format!(
            "level {l} has cap {} instead of 2^{l}",
            caps[l]
        )));
    }
    let count = b
        .set(depth)
        .iter()
        .filter(|&&eta| (0..depth).all(|l| b.contains(l, eta >> (depth - l))))
        .count() as u64;
    let top = b.set(depth).len() as u64;
    if count > top {
        return Err(Error::Invariant(format!("{count} chains through {top} top nodes")));
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covernum::{cover_number_exact, grid_family, Exact};

    fn bf(v: &[u64]) -> BoundFn {
        BoundFn::from_u64s(v).unwrap()
    }

    fn sl(cap: &[u64], sets: &[&[u64]]) -> Slalom {
        Slalom::new(bf(cap), sets.iter().map(|s| s.to_vec()).collect()).unwrap()
    }

    fn fam(v: Vec<Slalom>) -> SlalomFamily {
        SlalomFamily::new(v).unwrap()
    }

    #[test]
    fn block_coding_2x2() {
        let t = block_coding_system(&bf(&[2, 2]), &bf(&[1, 1]), &[0]).unwrap();
        assert_eq!(t.f_prime(), &bf(&[4]));
        assert_eq!(t.g_prime(), &bf(&[1]));
        assert!(check_condition_c(&t).unwrap().holds());
        assert_eq!(branch_pushforward(&t, &Branch(vec![3])).unwrap(), Branch(vec![1, 1]));
        let b = sl(&[2, 2], &[&[1], &[0]]);
        assert_eq!(slalom_pushforward(&t, &b).unwrap().sets(), &[vec![2]]);
    }

    #[test]
    fn block_coding_shapes() {
        let t = block_coding_system(&bf(&[2, 3]), &bf(&[1, 1]), &[0]).unwrap();
        assert_eq!((t.f_prime(), t.g_prime()), (&bf(&[6]), &bf(&[1])));
        let id = block_coding_system(&bf(&[2, 3]), &bf(&[1, 2]), &[0, 1]).unwrap();
        assert_eq!(id.f_prime(), &bf(&[2, 3]));
        assert_eq!(id.map(1, 0), &[0, 1, 2]);
        let t = block_coding_system(&bf(&[3, 3]), &bf(&[2, 2]), &[0]).unwrap();
        assert_eq!((t.f_prime(), t.g_prime()), (&bf(&[9]), &bf(&[4])));
        assert!(check_condition_c(&t).unwrap().holds());
    }

    #[test]
    fn constant_maps_fail_condition_c() {
        let t = TransferSystem::new(
            bf(&[2]),
            bf(&[1]),
            bf(&[3]),
            bf(&[1]),
            vec![vec![0]],
            vec![vec![vec![1, 1, 1]]],
        )
        .unwrap();
        match check_condition_c(&t).unwrap() {
            ConditionC::Fails {
                block,
                choice,
                preimage,
            } => {
                assert_eq!(block, 0);
                assert!(choice[0].contains(&1));
                assert_eq!(preimage, vec![0, 1, 2]);
            }
            ConditionC::Holds => panic!("constant maps cannot satisfy (c)"),
        }
        let x = branch_pushforward(&t, &Branch(vec![2])).unwrap();
        assert_eq!(x, Branch(vec![1]));
    }

    #[test]
    fn allfunctions_shapes_and_condition() {
        let t = allfunctions_system(2, 2).unwrap();
        assert_eq!(t.blocks()[0].len(), 3);
        assert_eq!(t.blocks()[1].len(), 9);
        assert_eq!(t.f().window(), 12);
        assert!(check_condition_c(&t).unwrap().holds());
        for n in 1..=3 {
            for i in 1..=2 {
                assert!(check_condition_c(&allfunctions_system(n, i).unwrap()).unwrap().holds());
            }
        }
    }

    #[test]
    fn allfunctions_zero_slalom_pushes_to_padding() {
        let t = allfunctions_system(2, 2).unwrap();
        let b = Slalom::new(t.f().clone(), vec![vec![0]; 12]).unwrap();
        let star = slalom_pushforward(&t, &b).unwrap();
        // no point is sent to 0 by every function, so both levels are padding
        assert_eq!(star.sets(), &[vec![0], vec![0]]);
        let two = Slalom::new(t.f().clone(), vec![vec![0, 1]; 12]).unwrap();
        assert!(slalom_pushforward(&t, &two).unwrap().sets().iter().all(|s| s == &[0]));
    }

    #[test]
    fn literal_allfunctions_fails_once_blocks_outgrow_n() {
        assert!(check_condition_c(&allfunctions_system_literal(2, 2).unwrap())
            .unwrap()
            .holds());
        match check_condition_c(&allfunctions_system_literal(2, 3).unwrap()).unwrap() {
            ConditionC::Fails { block, preimage, .. } => {
                assert_eq!(block, 2);
                assert!(preimage.len() > 2);
            }
            ConditionC::Holds => panic!("expected a counterexample"),
        }
    }

    #[test]
    fn partition_is_validated() {
        let e = TransferSystem::new(
            bf(&[2, 2]),
            bf(&[1, 1]),
            bf(&[2]),
            bf(&[1]),
            vec![vec![0, 0]],
            vec![vec![vec![0, 1], vec![0, 1]]],
        );
        assert!(matches!(e, Err(Error::Malformed(_))));
        let e = TransferSystem::new(
            bf(&[2, 2]),
            bf(&[1, 1]),
            bf(&[2]),
            bf(&[1]),
            vec![vec![0]],
            vec![vec![vec![0, 1]]],
        );
        assert!(matches!(e, Err(Error::Malformed(_))));
    }

    #[test]
    fn halving_example() {
        let g = fam(vec![sl(&[4], &[&[0, 1]]), sl(&[4], &[&[2, 3]])]);
        let out = halving_lift(&bf(&[4]), &bf(&[2]), &g).unwrap();
        assert_eq!(out.members()[0].sets(), &[vec![0, 1, 2, 3]]);
        assert_eq!(out.members()[1].sets(), &[vec![4, 5, 6, 7]]);
    }

    #[test]
    fn halving_on_exact_cover() {
        let f = bf(&[4, 4]);
        let g = bf(&[2, 2]);
        let Exact::Found { family, .. } = cover_number_exact(&f, &g, 10).unwrap() else {
            panic!()
        };
        let out = halving_lift(&f, &g, &family).unwrap();
        assert_eq!(out.len(), 4);
        assert_eq!(out.cap(), Some(&bf(&[8, 8])));
    }

    #[test]
    fn halving_rejects_non_cover() {
        let g = fam(vec![sl(&[4], &[&[0, 1]])]);
        assert!(matches!(
            halving_lift(&bf(&[4]), &bf(&[2]), &g),
            Err(Error::NotCovering(_))
        ));
    }

    #[test]
    fn addition_example() {
        let g = fam(vec![sl(&[3], &[&[0, 1]]), sl(&[3], &[&[1, 2]])]);
        let out = addition_lift(&bf(&[3]), &bf(&[2]), &g).unwrap();
        assert_eq!(out.members()[0].sets(), &[vec![0, 1, 2]]);
        assert_eq!(out.members()[1].sets(), &[vec![2, 3]]);
    }

    #[test]
    fn compose_example() {
        let f = bf(&[4]);
        let g = bf(&[2]);
        let h = bf(&[1]);
        let big = grid_family(&f, &g).unwrap();
        let small = grid_family(&g, &h).unwrap();
        let out = transitivity_compose(&f, &g, &h, &big, &small).unwrap();
        assert_eq!(out.len(), 4);
        let id = fam(vec![Slalom::full(&g).unwrap()]);
        let same = transitivity_compose(&f, &g, &g, &big, &id).unwrap();
        assert_eq!(same, big);
    }

    #[test]
    fn product_examples() {
        let f = bf(&[2]);
        let one = bf(&[1]);
        let singles = grid_family(&f, &one).unwrap();
        let out = product_pair(&f, &one, &singles, &f, &one, &singles).unwrap();
        assert_eq!(out.len(), 4);
        let full = fam(vec![Slalom::full(&f).unwrap()]);
        let out = product_pair(&f, &f, &full, &f, &f, &full).unwrap();
        assert_eq!(out.members()[0].sets(), &[vec![0, 1, 2, 3]]);
    }

    #[test]
    fn chain_bound() {
        let caps: Vec<u64> = (0..4).map(|l| 1 << l).collect();
        let zeros = Slalom::new(bf(&caps), vec![vec![0]; 4]).unwrap();
        assert_eq!(branch_chain_bound(&zeros, 3).unwrap(), 1);
        let b = Slalom::new(bf(&caps), vec![vec![0], vec![0, 1], vec![0, 3], vec![1, 6, 7]]).unwrap();
        // 001 (via 00, 0), 110 and 111 (via 11, 1)
        assert_eq!(branch_chain_bound(&b, 3).unwrap(), 3);
        assert!(branch_chain_bound(&b, 2).is_err());
    }
}
