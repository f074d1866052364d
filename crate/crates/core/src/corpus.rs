//! Seeded instance generators shared by the command line and the tests.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::conditions::{to_normal_form, Coord, CoordId, CoordTriple, NormedTree, ProductCondition};
use crate::error::{Error, Result};
use crate::extraction::{check_almostall, check_decides, check_smalllevel, FiniteName};
use crate::game::ThinningSets;
use crate::nat::BoundFn;
use crate::reductions::{check_condition_c, TransferSystem};
use crate::scales::ScaleSeq;
use crate::slaloms::{covers, Coverage, Slalom, SlalomFamily};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_bound<R: Rng>(rng: &mut R, window: usize, lo: u64, hi: u64) -> Vec<u64> {
    (0..window).map(|_| rng.gen_range(lo..=hi)).collect()
}

/// Largest set drawn by [`random_set`]; deep levels of the preset scales
/// allow millions of values, which would only slow the checks down.
pub const MAX_RANDOM_SET: u64 = 256;

/// A random subset of `[0, cap)` with between 1 and `max` elements (at most
/// [`MAX_RANDOM_SET`]).
fn random_set<R: Rng>(rng: &mut R, cap: u64, max: u64) -> Vec<u64> {
    let size = rng.gen_range(1..=max.min(cap).clamp(1, MAX_RANDOM_SET));
    sample(rng, cap, size)
}

/// `size` distinct values below `cap`, sorted.
fn sample<R: Rng>(rng: &mut R, cap: u64, size: u64) -> Vec<u64> {
    let mut v: Vec<u64> = rand::seq::index::sample(rng, cap as usize, size as usize)
        .into_iter()
        .map(|x| x as u64)
        .collect();
    v.sort_unstable();
    v
}

/// A random slalom over `f` with `|B_k| <= g(k)`.
pub fn random_slalom<R: Rng>(rng: &mut R, f: &[u64], g: &[u64]) -> Result<Slalom> {
    let sets = f.iter().zip(g).map(|(&fk, &gk)| random_set(rng, fk, gk)).collect();
    Slalom::new(BoundFn::from_u64s(f)?, sets)
}

/// Random `g`-slaloms, topped up with a slalom through each uncovered branch
/// until the family covers `∏ f`.
pub fn random_cover<R: Rng>(rng: &mut R, f: &[u64], g: &[u64]) -> Result<SlalomFamily> {
    let (fb, gb) = (BoundFn::from_u64s(f)?, BoundFn::from_u64s(g)?);
    let mut members: Vec<Slalom> = (0..rng.gen_range(1..=3))
        .map(|_| random_slalom(rng, f, g))
        .collect::<Result<_>>()?;
    loop {
        let fam = SlalomFamily::new(members.clone())?;
        match covers(&fam, &gb, &fb)? {
            Coverage::Covers => return Ok(fam),
            Coverage::Uncovered(x) => {
                let sets = (0..f.len())
                    .map(|k| {
                        let mut s = random_set(rng, f[k], g[k]);
                        if !s.contains(&x.0[k]) {
                            s[0] = x.0[k];
                        }
                        s
                    })
                    .collect();
                members.push(Slalom::new(fb.clone(), sets)?);
            }
        }
    }
}

/// A random transfer system with windows and bounds at most `max_window`
/// and `max_f`; not filtered by condition (c).
pub fn random_transfer_system<R: Rng>(rng: &mut R, max_window: usize, max_f: u64) -> Result<TransferSystem> {
    let n = rng.gen_range(1..=max_window);
    let m = rng.gen_range(1..=max_window);
    let f = random_bound(rng, n, 1, max_f);
    let g: Vec<u64> = f.iter().map(|&x| rng.gen_range(1..=x)).collect();
    let fp = random_bound(rng, m, 1, max_f);
    let gp: Vec<u64> = fp.iter().map(|&x| rng.gen_range(1..=x)).collect();
    let mut blocks = vec![Vec::new(); m];
    for l in 0..n {
        blocks[rng.gen_range(0..m)].push(l);
    }
    let maps = blocks
        .iter()
        .enumerate()
        .map(|(i, w)| {
            w.iter()
                .map(|&l| (0..fp[i]).map(|_| rng.gen_range(0..f[l])).collect())
                .collect()
        })
        .collect();
    TransferSystem::new(
        BoundFn::from_u64s(&f)?,
        BoundFn::from_u64s(&g)?,
        BoundFn::from_u64s(&fp)?,
        BoundFn::from_u64s(&gp)?,
        blocks,
        maps,
    )
}

/// Draws systems until one satisfies condition (c); `None` after `tries`.
pub fn random_sound_system<R: Rng>(
    rng: &mut R,
    max_window: usize,
    max_f: u64,
    tries: usize,
) -> Result<Option<TransferSystem>> {
    for _ in 0..tries {
        let t = random_transfer_system(rng, max_window, max_f)?;
        if check_condition_c(&t)?.holds() {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

fn scale_u64(scale: &ScaleSeq, k: usize) -> Result<(u64, u64)> {
    let conv = |x: &num_bigint::BigUint| u64::try_from(x).map_err(|_| Error::TooLarge(format!("scale level {k}")));
    Ok((conv(scale.lo(k))?, conv(scale.hi(k))?))
}

/// A random triple valid on `scale` over its first `window` levels.
pub fn random_triple<R: Rng>(rng: &mut R, scale: &ScaleSeq, window: usize) -> Result<CoordTriple> {
    let (mut f, mut g, mut h) = (Vec::new(), Vec::new(), Vec::new());
    for k in 0..window {
        let (lo, hi) = scale_u64(scale, k)?;
        let fk = rng.gen_range(lo + 1..=hi);
        f.push(fk);
        g.push(rng.gen_range(lo..fk));
        h.push(rng.gen_range(lo..=lo.saturating_mul(2)));
    }
    CoordTriple::new(f, g, h)
}

fn linear_tree<R: Rng>(rng: &mut R, t: CoordTriple, depth: usize) -> Result<NormedTree> {
    let path: Vec<u64> = (0..depth).map(|k| rng.gen_range(0..t.f[k])).collect();
    let mut tree = NormedTree::linear(t, &path)?;
    if tree.depth() != depth {
        tree = NormedTree::from_nodes(depth, tree.triple().clone(), tree.nodes().iter().cloned())?;
    }
    Ok(tree)
}

/// A random valid condition on `scale` with up to `max_coords` coordinates:
/// each coordinate gets a stem at a random level, one split there with
/// random successors, and random linear continuations. Trees on scales whose
/// norms vanish can only split once, at their stem.
pub fn random_scale_condition<R: Rng>(
    rng: &mut R,
    scale: &ScaleSeq,
    max_coords: usize,
    depth: usize,
) -> Result<ProductCondition> {
    let n = rng.gen_range(1..=max_coords);
    let mut coords = BTreeMap::new();
    for c in 0..n {
        let t = random_triple(rng, scale, depth)?;
        let stem_len = rng.gen_range(0..=depth);
        let mut stem: Vec<u64> = (0..stem_len).map(|k| rng.gen_range(0..t.f[k])).collect();
        let mut nodes = BTreeSet::new();
        for k in 0..=stem_len {
            nodes.insert(stem[..k].to_vec());
        }
        if stem_len < depth {
            let fk = t.f[stem_len];
            let width = rng.gen_range(2..=fk.clamp(2, 6));
            for v in sample(rng, fk, width.min(fk)) {
                stem.push(v);
                let mut node = stem.clone();
                stem.pop();
                nodes.insert(node.clone());
                while node.len() < depth {
                    node.push(rng.gen_range(0..t.f[node.len()]));
                    nodes.insert(node.clone());
                }
            }
        }
        let tree = NormedTree::from_nodes(depth, t, nodes)?;
        coords.insert(CoordId::new(format!("c{c}")), Coord { tree, zeta: c as u32 });
    }
    ProductCondition::new(depth, coords)
}

/// Combs on off-scale parameters (`g = 1`, `h = 2`): along a random spine,
/// a coordinate splitting at level `k` gets `2^(k+2)` successors, which is
/// norm `k + 2`, so any set of split levels is valid. Other branches are
/// constant. The result is put in normal form.
pub fn random_comb_condition<R: Rng>(rng: &mut R, max_coords: usize, depth: usize) -> Result<ProductCondition> {
    let n = rng.gen_range(1..=max_coords);
    let f = 1u64 << (depth + 1);
    let t = CoordTriple::constant(f, 1, 2, depth)?;
    let mut coords = BTreeMap::new();
    for c in 0..n {
        let levels: BTreeSet<usize> = (0..depth).filter(|_| rng.gen_bool(0.4)).collect();
        let spine: Vec<u64> = (0..depth).map(|k| rng.gen_range(0..1u64 << (k + 2))).collect();
        let mut nodes = BTreeSet::from([vec![]]);
        let mut frontier: Vec<Vec<u64>> = vec![vec![]];
        for k in 0..depth {
            let mut next = Vec::new();
            for node in frontier {
                let on_spine = node[..] == spine[..k];
                let vals: Vec<u64> = if on_spine && levels.contains(&k) {
                    (0..1u64 << (k + 2)).collect()
                } else if on_spine {
                    vec![spine[k]]
                } else {
                    vec![0]
                };
                for v in vals {
                    let mut m = node.clone();
                    m.push(v);
                    nodes.insert(m.clone());
                    next.push(m);
                }
            }
            frontier = next;
        }
        let tree = NormedTree::from_nodes(depth, t.clone(), nodes)?;
        coords.insert(CoordId::new(format!("c{c}")), Coord { tree, zeta: 0 });
    }
    to_normal_form(&ProductCondition::new(depth, coords)?)
}

/// For every split, the top successors that keep at least half the norm.
pub fn upper_half_sets(p: &ProductCondition) -> ThinningSets {
    let mut out = ThinningSets::new();
    for s in p.splits() {
        let t = p.coords()[&s.coord].tree.triple();
        let need = s.norm.div_ceil(2);
        let m = (1..=s.succ.len())
            .find(|&m| t.norm(s.level, m as u64) >= need)
            .unwrap_or(s.succ.len());
        let keep: BTreeSet<u64> = s.succ[s.succ.len() - m..].iter().copied().collect();
        out.insert((s.coord, s.node), keep);
    }
    out
}

/// A condition, a name on it, the `ξ` parameters bounding the name, and the
/// coordinates whose splits are read as fibers.
#[derive(Clone, Debug, Serialize)]
pub struct ExtractionInstance {
    pub condition: ProductCondition,
    pub name: FiniteName,
    pub xi: CoordTriple,
    pub a: BTreeSet<CoordId>,
    /// Coordinate carrying the split, if any.
    pub designated: Option<CoordId>,
}

impl ExtractionInstance {
    /// Normal form, level bounds, small levels, the almost-all inequality and
    /// the deciding properties.
    pub fn check(&self, scale: &ScaleSeq) -> Result<()> {
        let p = &self.condition;
        crate::conditions::validate_condition(p)?;
        if !p.is_normal_form() {
            return Err(Error::Precondition("not in normal form".into()));
        }
        crate::conditions::level_size_check(p, scale)?;
        check_smalllevel(p, scale)?;
        check_almostall(p, &self.xi, &self.a)?;
        check_decides(p, &self.name)
    }
}

/// A random instance on `scale` with depth up to `max_depth`. When the
/// scale's first level admits norm 3 (`lo_0^4 <= hi_0`) one coordinate
/// splits at the root with between `lo_0^4` and `f(0)` successors; the other
/// coordinates are linear.
pub fn random_extraction_instance<R: Rng>(
    rng: &mut R,
    scale: &ScaleSeq,
    max_depth: usize,
) -> Result<ExtractionInstance> {
    let depth = rng.gen_range(1..=max_depth.min(scale.window()));
    let n = rng.gen_range(1..=3usize);
    let (lo0, hi0) = scale_u64(scale, 0)?;
    let split_ok = lo0.checked_pow(4).is_some_and(|x| x <= hi0);
    let mut coords = BTreeMap::new();
    let mut designated = None;
    for c in 0..n {
        let id = CoordId::new(format!("c{c}"));
        let mut t = random_triple(rng, scale, depth)?;
        let tree = if c == 0 && split_ok {
            t.g[0] = lo0;
            t.h[0] = lo0;
            t.f[0] = rng.gen_range(lo0.pow(4)..=hi0);
            let width = rng.gen_range(lo0.pow(4)..=t.f[0]);
            let mut nodes = BTreeSet::from([vec![]]);
            for v in sample(rng, t.f[0], width) {
                let mut node = vec![v];
                nodes.insert(node.clone());
                while node.len() < depth {
                    node.push(rng.gen_range(0..t.f[node.len()]));
                    nodes.insert(node.clone());
                }
            }
            designated = Some(id.clone());
            NormedTree::from_nodes(depth, t, nodes)?
        } else {
            linear_tree(rng, t, depth)?
        };
        coords.insert(id, Coord { tree, zeta: c as u32 });
    }
    let condition = ProductCondition::new(depth, coords)?;

    let mut a = BTreeSet::new();
    let mut xi = random_triple(rng, scale, depth)?;
    if let Some(d) = &designated {
        let tz = condition.coords()[d].tree.triple().clone();
        let ok = |xi: &CoordTriple| crate::extraction::almostall_holds(tz.f[0], xi.f[0], xi.g[0], tz.h[0], 1);
        if rng.gen_bool(0.3) {
            a.insert(d.clone());
        } else {
            for _ in 0..20 {
                if ok(&xi) {
                    break;
                }
                xi = random_triple(rng, scale, depth)?;
            }
            if !ok(&xi) {
                a.insert(d.clone());
            }
        }
    }
    for id in condition.ids() {
        if Some(&id) != designated.as_ref() && rng.gen_bool(0.5) {
            a.insert(id);
        }
    }

    let bound = xi.f[..depth].to_vec();
    let kind = rng.gen_range(0..4);
    let salt: u64 = rng.gen();
    let mut labels = BTreeMap::new();
    for b in condition.branches()? {
        let first = b[0].first().copied().unwrap_or(0);
        let tau: Vec<u64> = (0..depth)
            .map(|k| match kind {
                0 => salt % bound[k],
                1 => first % bound[k],
                _ => rng.gen_range(0..bound[k]),
            })
            .collect();
        labels.insert(b, tau);
    }
    let name = FiniteName::new(condition.ids(), bound, labels)?;
    Ok(ExtractionInstance {
        condition,
        name,
        xi,
        a,
        designated,
    })
}

/// Random `g`-slaloms for coordinate `id` of `p`, plus one that holds the
/// least successors of the first split.
pub fn adversarial_slaloms<R: Rng>(
    rng: &mut R,
    p: &ProductCondition,
    id: &CoordId,
    count: usize,
) -> Result<Vec<Slalom>> {
    let tree = p.tree(id)?;
    let t = tree.triple();
    let (f, g) = (&t.f[..p.depth()], &t.g[..p.depth()]);
    let mut out: Vec<Slalom> = (0..count).map(|_| random_slalom(rng, f, g)).collect::<Result<_>>()?;
    if let Some(s) = tree.splits().first() {
        let mut sets: Vec<Vec<u64>> = (0..p.depth()).map(|k| vec![rng.gen_range(0..f[k])]).collect();
        let mut succ = tree.succ(s);
        succ.truncate(g[s.len()] as usize);
        sets[s.len()] = succ;
        out.push(Slalom::new(BoundFn::from_u64s(f)?, sets)?);
    }
    out.shuffle(rng);
    Ok(out)
}
