//! Names at finite depth, deciding, and turning a bounded name into a
//! slalom of small width.
//!
//! A name labels every full branch tuple of its host condition with a value
//! sequence; a tuple decides `τ↾k` when all branches through it carry the
//! same first `k` values.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::conditions::{validate_condition, CoordId, CoordTriple, Node, ProductCondition, SplitInfo};
use crate::error::{Error, Result, Violation};
use crate::game::{thinning, ThinningSets};
use crate::norms::{cd_select, NormSpec};
use crate::scales::ScaleSeq;
use crate::slaloms::{member, Branch, Slalom};

pub type Tuple = Vec<Node>;

/// Total labeling of branch tuples by value sequences `τ(0) .. τ(N-1)`
/// with `τ(k) < bound(k)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteName {
    coords: Vec<CoordId>,
    bound: Vec<u64>,
    labels: BTreeMap<Tuple, Vec<u64>>,
}

impl FiniteName {
    pub fn new(coords: Vec<CoordId>, bound: Vec<u64>, labels: BTreeMap<Tuple, Vec<u64>>) -> Result<Self> {
        for (t, tau) in &labels {
            if t.len() != coords.len() {
                return Err(Error::WindowMismatch {
                    expected: coords.len(),
                    got: t.len(),
                });
            }
            if tau.len() != bound.len() {
                return Err(Error::WindowMismatch {
                    expected: bound.len(),
                    got: tau.len(),
                });
            }
            if let Some(k) = (0..tau.len()).find(|&k| tau[k] >= bound[k]) {
                return Err(Error::Malformed(format!(
                    "τ({k}) = {} is not below {}",
                    tau[k], bound[k]
                )));
            }
        }
        Ok(FiniteName { coords, bound, labels })
    }

    /// Labels every branch of `p` by `f`.
    pub fn from_fn(p: &ProductCondition, bound: Vec<u64>, f: impl Fn(&[Node]) -> Vec<u64>) -> Result<Self> {
        let labels = p.branches()?.into_iter().map(|t| {
            let v = f(&t);
            (t, v)
        });
        FiniteName::new(p.ids(), bound, labels.collect())
    }

    pub fn coords(&self) -> &[CoordId] {
        &self.coords
    }

    pub fn bound(&self) -> &[u64] {
        &self.bound
    }

    pub fn labels(&self) -> &BTreeMap<Tuple, Vec<u64>> {
        &self.labels
    }

    pub fn get(&self, t: &[Node]) -> Result<&[u64]> {
        self.labels
            .get(t)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Precondition(format!("name has no label for {t:?}")))
    }

    /// The name is defined on every branch of `p`.
    pub fn check_host(&self, p: &ProductCondition) -> Result<()> {
        if self.coords != p.ids() {
            return Err(Error::Precondition(
                "name and condition have different coordinates".into(),
            ));
        }
        if self.bound.len() != p.depth() {
            return Err(Error::WindowMismatch {
                expected: p.depth(),
                got: self.bound.len(),
            });
        }
        for t in p.branches()? {
            self.get(&t)?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct LabelJson {
    tuple: Tuple,
    tau: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct NameJson {
    coords: Vec<CoordId>,
    bound: Vec<u64>,
    branches: Vec<LabelJson>,
}

impl Serialize for FiniteName {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        NameJson {
            coords: self.coords.clone(),
            bound: self.bound.clone(),
            branches: self
                .labels
                .iter()
                .map(|(t, v)| LabelJson {
                    tuple: t.clone(),
                    tau: v.clone(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteName {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = NameJson::deserialize(d)?;
        let labels = raw.branches.into_iter().map(|l| (l.tuple, l.tau)).collect();
        FiniteName::new(raw.coords, raw.bound, labels).map_err(serde::de::Error::custom)
    }
}

fn truncate(t: &[Node], m: usize) -> Tuple {
    t.iter().map(|n| n[..m].to_vec()).collect()
}

/// For every tuple of level `m`, `τ↾k` if it is decided there.
pub fn decided(
    p: &ProductCondition,
    tau: &FiniteName,
    m: usize,
    k: usize,
) -> Result<BTreeMap<Tuple, Option<Vec<u64>>>> {
    let mut out: BTreeMap<Tuple, Option<Vec<u64>>> = BTreeMap::new();
    for b in p.branches()? {
        let v = tau.get(&b)?[..k].to_vec();
        out.entry(truncate(&b, m))
            .and_modify(|e| {
                if e.as_ref() != Some(&v) {
                    *e = None;
                }
            })
            .or_insert(Some(v));
    }
    Ok(out)
}

/// `τ↾k` when it is constant on all branches through `tuple`.
pub fn decides(p: &ProductCondition, tuple: &[Node], tau: &FiniteName, k: usize) -> Result<Option<Vec<u64>>> {
    let m = tuple.first().map_or(0, |n| n.len());
    p.trim(tuple)?;
    Ok(decided(p, tau, m, k)?.remove(tuple).flatten())
}

/// Checks the deciding properties used by the extraction: at a splitting
/// level `k` each tuple of level `k` and of level `k+1` decides `τ↾k`; at
/// any other level each tuple of level `k` decides `τ(k)`.
pub fn check_decides(p: &ProductCondition, tau: &FiniteName) -> Result<()> {
    let splitting: BTreeSet<usize> = p.splitting_levels().into_iter().collect();
    let mut v = Vec::new();
    let mut need = |m: usize, k: usize, rule: &'static str| -> Result<()> {
        for (t, d) in decided(p, tau, m, k)? {
            if d.is_none() {
                v.push(Violation::new(m, rule, format!("{t:?} does not decide τ↾{k}")));
            }
        }
        Ok(())
    };
    for k in 0..p.depth() {
        if splitting.contains(&k) {
            need(k, k, "decides-at-split")?;
            need(k + 1, k, "decides-above-split")?;
        } else {
            need(k, k + 1, "decides-value")?;
        }
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::Violations(v))
    }
}

fn spec_of(t: &CoordTriple) -> Result<NormSpec> {
    NormSpec::new(t.g.clone(), t.h.clone())
}

/// Successor values of the split `s` grouped by the value `τ↾upto` decided by
/// `tuple^{+ν}`; classes are listed by value.
fn classes(
    p: &ProductCondition,
    tau: &FiniteName,
    s: &SplitInfo,
    tuple: &[Node],
    succ: &[u64],
    upto: usize,
) -> Result<BTreeMap<Vec<u64>, Vec<u64>>> {
    let at = p.ids().iter().position(|id| *id == s.coord).expect("split coordinate");
    let table = decided(p, tau, s.level + 1, upto)?;
    let mut out: BTreeMap<Vec<u64>, Vec<u64>> = BTreeMap::new();
    for &nu in succ {
        let mut ext: Tuple = tuple.to_vec();
        for (j, n) in ext.iter_mut().enumerate() {
            if j == at {
                n.push(nu);
            } else {
                let c = &p.coords()[&p.ids()[j]].tree;
                n.push(c.succ(n)[0]);
            }
        }
        let val = table
            .get(&ext)
            .cloned()
            .flatten()
            .ok_or_else(|| Error::Invariant(format!("{ext:?} does not decide τ↾{upto}")))?;
        out.entry(val).or_default().push(nu);
    }
    Ok(out)
}

/// The chain `succ = F^0 ⊇ F^1 ⊇ ..` over the level tuples at split `s`,
/// each step keeping the `d` largest classes; returns the last set and the
/// values of the kept classes.
fn chain(
    p: &ProductCondition,
    tau: &FiniteName,
    s: &SplitInfo,
    upto: usize,
    c: u64,
    d: u64,
) -> Result<(Vec<u64>, BTreeSet<Vec<u64>>)> {
    let spec = spec_of(p.coords()[&s.coord].tree.triple())?;
    let at = p.ids().iter().position(|id| *id == s.coord).expect("split coordinate");
    let mut current = s.succ.clone();
    let mut kept = BTreeSet::new();
    for tuple in p.level(s.level)?.tuples {
        if tuple[at] != s.node {
            // the tuple has a single extension; its value is kept as is
            let cls = decided(p, tau, s.level, upto)?;
            if let Some(Some(v)) = cls.get(&tuple) {
                kept.insert(v.clone());
                continue;
            }
            let ext: Tuple = tuple
                .iter()
                .zip(p.ids())
                .map(|(n, id)| {
                    let mut m = n.clone();
                    m.push(p.coords()[&id].tree.succ(n)[0]);
                    m
                })
                .collect();
            let v = decided(p, tau, s.level + 1, upto)?
                .remove(&ext)
                .flatten()
                .ok_or_else(|| Error::Invariant(format!("{ext:?} does not decide τ↾{upto}")))?;
            kept.insert(v);
            continue;
        }
        let cls = classes(p, tau, s, &tuple, &current, upto)?;
        let (vals, pieces): (Vec<Vec<u64>>, Vec<Vec<u64>>) = cls.into_iter().unzip();
        if pieces.len() as u64 > c || c as u128 > d as u128 * spec.h(s.level) as u128 {
            return Err(Error::CaseBound {
                level: s.level,
                case: "chain",
                size: c.max(pieces.len() as u64),
                bound: d.saturating_mul(spec.h(s.level)),
            });
        }
        let chosen = cd_select(&spec, s.level, &pieces, c, d)?;
        let mut next: Vec<u64> = chosen.iter().flat_map(|&i| pieces[i].iter().copied()).collect();
        next.sort_unstable();
        kept.extend(chosen.iter().map(|&i| vals[i].clone()));
        current = next;
    }
    Ok((current, kept))
}

/// Thins `p` so that every tuple at a splitting level `k` decides `τ↾k`.
/// Splits are handled from the deepest down; at each one the successor set
/// is cut along the level tuples, one value class per tuple, losing at most
/// one unit of norm per tuple, and the sets are then applied by
/// [`thinning`].
pub fn densify_decide(p: &ProductCondition, tau: &FiniteName) -> Result<ProductCondition> {
    validate_condition(p)?;
    if !p.is_normal_form() {
        return Err(Error::Precondition("densify needs normal form".into()));
    }
    tau.check_host(p)?;
    let mut work = p.clone();
    let mut sets = ThinningSets::new();
    for s in p.splits().into_iter().rev() {
        let h = p.coords()[&s.coord].tree.triple().h[s.level];
        // number of candidate values of τ↾k; at most h classes may appear
        let classes_seen = decided(&work, tau, s.level + 1, s.level)?
            .values()
            .flatten()
            .collect::<BTreeSet<_>>()
            .len() as u64;
        if classes_seen > h {
            return Err(Error::Precondition(format!(
                "{classes_seen} values of τ↾{} exceed h({}) = {h}",
                s.level, s.level
            )));
        }
        let (f, _) = chain(&work, tau, &s, s.level, h, 1)?;
        let keep: BTreeSet<u64> = f.iter().copied().collect();
        let tree = &work.coords()[&s.coord].tree;
        let nf = tree.triple().norm(s.level, keep.len() as u64);
        if 2 * nf < s.norm {
            return Err(Error::NormBudget {
                split: s.l,
                level: s.level,
            });
        }
        work = work.with_tree(&s.coord, tree.restrict_succ(&s.node, &keep))?;
        if keep.len() < s.succ.len() {
            sets.insert((s.coord.clone(), s.node.clone()), keep);
        }
    }
    let q = thinning(p, &sets)?;
    check_decides(&q, tau).map_err(|e| Error::Invariant(format!("densified condition: {e}")))?;
    Ok(q)
}

/// `|Level_{k_l}| < min(‖η_l‖/2, lo_{k_l})` at every split.
pub fn check_smalllevel(p: &ProductCondition, scale: &ScaleSeq) -> Result<()> {
    if !p.is_normal_form() {
        return Err(Error::Precondition("needs normal form".into()));
    }
    let mut v = Vec::new();
    for s in p.splits() {
        let l = p.level_size(s.level);
        let lo = scale.lo(s.level);
        if 2 * l >= s.norm as u128 || num_bigint::BigUint::from(l) >= *lo {
            v.push(Violation::new(
                s.level,
                "small-level",
                format!("|Level| = {l}, norm {}, lo = {lo}", s.norm),
            ));
        }
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::Violations(v))
    }
}

/// At each split outside `a`:
/// `min(f_ζ/g_ξ, f_ξ/(g_ξ·h_ζ)) < 1/|Level|`, in exact arithmetic.
pub fn check_almostall(p: &ProductCondition, xi: &CoordTriple, a: &BTreeSet<CoordId>) -> Result<()> {
    if let Some(x) = a.iter().find(|x| !p.coords().contains_key(x)) {
        return Err(Error::Precondition(format!("{x} is not a coordinate")));
    }
    if xi.window() < p.depth() {
        return Err(Error::WindowMismatch {
            expected: p.depth(),
            got: xi.window(),
        });
    }
    let mut v = Vec::new();
    for s in p.splits().into_iter().filter(|s| !a.contains(&s.coord)) {
        let k = s.level;
        let t = p.coords()[&s.coord].tree.triple();
        if !almostall_holds(t.f[k], xi.f[k], xi.g[k], t.h[k], p.level_size(k)) {
            v.push(Violation::new(
                k,
                "almost-all",
                format!(
                    "f_ζ = {}, f_ξ = {}, g_ξ = {}, h_ζ = {}, |Level| = {}",
                    t.f[k],
                    xi.f[k],
                    xi.g[k],
                    t.h[k],
                    p.level_size(k)
                ),
            ));
        }
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::Violations(v))
    }
}

/// `min(f_ζ/g_ξ, f_ξ/(g_ξ·h_ζ)) < 1/l`.
pub fn almostall_holds(f_zeta: u64, f_xi: u64, g_xi: u64, h_zeta: u64, l: u128) -> bool {
    let (fz, fx, gx, hz) = (f_zeta as u128, f_xi as u128, g_xi as u128, h_zeta as u128);
    fz.saturating_mul(l) < gx || fx.saturating_mul(l) < gx.saturating_mul(hz)
}

/// Extends `p` so that no branch of coordinate `id` lies in `b`. Prefers the
/// first node (by level, then lexicographically) of positive norm where
/// `|B_k| <= g(k)`; otherwise any node with a successor outside `B_k`.
/// Returns the extension and the level where the branches leave `b`.
pub fn avoid_slalom(p: &ProductCondition, id: &CoordId, b: &Slalom) -> Result<(ProductCondition, usize)> {
    let tree = p.tree(id)?;
    if b.window() != p.depth() {
        return Err(Error::WindowMismatch {
            expected: p.depth(),
            got: b.window(),
        });
    }
    let mut nodes: Vec<&Node> = tree.nodes().iter().filter(|n| n.len() < p.depth()).collect();
    nodes.sort_by(|x, y| x.len().cmp(&y.len()).then(x.cmp(y)));
    let free = |n: &Node| tree.succ(n).into_iter().find(|&v| !b.contains(n.len(), v));
    let g = &tree.triple().g;
    let pick = nodes
        .iter()
        .find(|n| tree.norm(n) > 0 && b.set(n.len()).len() as u64 <= g[n.len()])
        .or_else(|| nodes.iter().find(|n| free(n).is_some()))
        .ok_or_else(|| Error::NoAvoidingNode(id.to_string()))?;
    let v = free(pick).ok_or_else(|| Error::Invariant(format!("{pick:?} has positive norm but no free successor")))?;
    let mut target = (*pick).clone();
    target.push(v);
    let q = p.with_tree(id, tree.trim_to(&target))?;
    for br in q.tree(id)?.branches() {
        if member(&Branch(br.clone()), b)? {
            return Err(Error::Invariant(format!("{br:?} still lies in the slalom")));
        }
    }
    Ok((q, target.len() - 1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Case {
    /// Not a splitting level: the values decided by level-`k` tuples.
    NonSplitting,
    /// The split is in `A`: one set per node of the split coordinate.
    Fibers,
    /// `f_ζ(k)·|Level_k| <= g_ξ(k)`: all values decided one level up.
    Small,
    /// Otherwise: the class chain with `c = f_ξ(k)`, `d = ⌊g_ξ(k)/|Level_k|⌋`.
    Chain,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Fiber {
    pub key: Node,
    pub values: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevelSet {
    pub level: usize,
    pub case: Case,
    pub level_size: u128,
    pub bound: u64,
    /// The plain set; empty for [`Case::Fibers`].
    pub values: Vec<u64>,
    /// Coordinate keying the fibers, for [`Case::Fibers`].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coord: Option<CoordId>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fibers: Vec<Fiber>,
}

impl LevelSet {
    /// The set that applies to `branch`.
    pub fn set_for(&self, ids: &[CoordId], branch: &[Node]) -> &[u64] {
        match &self.coord {
            None => &self.values,
            Some(c) => {
                let at = ids.iter().position(|x| x == c).expect("fiber coordinate");
                let key = &branch[at][..=self.level];
                self.fibers.iter().find(|f| f.key == key).map_or(&[][..], |f| &f.values)
            }
        }
    }

    /// Largest set size (over fibers when keyed).
    pub fn width(&self) -> usize {
        match self.coord {
            None => self.values.len(),
            Some(_) => self.fibers.iter().map(|f| f.values.len()).max().unwrap_or(0),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Extraction {
    pub levels: Vec<LevelSet>,
    /// The (possibly thinned) condition the sets are verified on.
    pub condition: ProductCondition,
    pub branches_checked: usize,
}

fn values_of(table: &BTreeMap<Tuple, Option<Vec<u64>>>, k: usize, rule: &str) -> Result<BTreeMap<Tuple, u64>> {
    table
        .iter()
        .map(|(t, v)| match v {
            Some(v) => Ok((t.clone(), v[k])),
            None => Err(Error::Precondition(format!("{rule}: {t:?} does not decide τ({k})"))),
        })
        .collect()
}

/// Builds per-level sets of width at most `g_ξ(k)` that contain `τ(k)` on
/// every branch of the returned condition, then checks that on every
/// branch. `a` holds the coordinates whose splits get keyed fibers; `xi`
/// supplies `f_ξ` (the bound of the name) and `g_ξ`.
pub fn extract_slalom(
    q: &ProductCondition,
    tau: &FiniteName,
    a: &BTreeSet<CoordId>,
    xi: &CoordTriple,
) -> Result<Extraction> {
    validate_condition(q)?;
    if !q.is_normal_form() {
        return Err(Error::Precondition("extraction needs normal form".into()));
    }
    tau.check_host(q)?;
    if xi.window() < q.depth() {
        return Err(Error::WindowMismatch {
            expected: q.depth(),
            got: xi.window(),
        });
    }
    if let Some(k) = (0..q.depth()).find(|&k| tau.bound()[k] > xi.f[k]) {
        return Err(Error::Precondition(format!("name bound at {k} exceeds f_ξ")));
    }
    let ids = q.ids();
    let splits: BTreeMap<usize, SplitInfo> = q.splits().into_iter().map(|s| (s.level, s)).collect();
    let mut levels = Vec::with_capacity(q.depth());
    let mut sets = ThinningSets::new();
    for k in 0..q.depth() {
        let l = q.level_size(k);
        let g = xi.g[k];
        let bound_err = |case: &'static str, size: u128, bound: u128| Error::CaseBound {
            level: k,
            case,
            size: size.min(u64::MAX as u128) as u64,
            bound: bound.min(u64::MAX as u128) as u64,
        };
        let mut out = LevelSet {
            level: k,
            case: Case::NonSplitting,
            level_size: l,
            bound: g,
            values: Vec::new(),
            coord: None,
            fibers: Vec::new(),
        };
        match splits.get(&k) {
            None => {
                let vals = values_of(&decided(q, tau, k, k + 1)?, k, "non-splitting level")?;
                let set: BTreeSet<u64> = vals.into_values().collect();
                if l >= g as u128 || set.len() as u128 > l {
                    return Err(bound_err("non-splitting", l.max(set.len() as u128), g as u128));
                }
                out.values = set.into_iter().collect();
            }
            Some(s) if a.contains(&s.coord) => {
                let at = ids.iter().position(|x| *x == s.coord).expect("split coordinate");
                let vals = values_of(&decided(q, tau, k + 1, k + 1)?, k, "fiber level")?;
                let mut fibers: BTreeMap<Node, BTreeSet<u64>> = BTreeMap::new();
                for (t, v) in vals {
                    fibers.entry(t[at].clone()).or_default().insert(v);
                }
                let widest = fibers.values().map(BTreeSet::len).max().unwrap_or(0) as u128;
                if l >= g as u128 || widest > l {
                    return Err(bound_err("fibers", l.max(widest), g as u128));
                }
                out.case = Case::Fibers;
                out.coord = Some(s.coord.clone());
                out.fibers = fibers
                    .into_iter()
                    .map(|(key, v)| Fiber {
                        key,
                        values: v.into_iter().collect(),
                    })
                    .collect();
            }
            Some(s) => {
                let f_zeta = q.coords()[&s.coord].tree.triple().f[k];
                if (f_zeta as u128).saturating_mul(l) <= g as u128 {
                    let vals = values_of(&decided(q, tau, k + 1, k + 1)?, k, "small case")?;
                    let set: BTreeSet<u64> = vals.into_values().collect();
                    if set.len() as u64 > g {
                        return Err(bound_err("small", set.len() as u128, g as u128));
                    }
                    out.case = Case::Small;
                    out.values = set.into_iter().collect();
                } else {
                    let d = (g as u128 / l.max(1)) as u64;
                    if d == 0 {
                        return Err(bound_err("chain", l, g as u128));
                    }
                    let (f, kept) = chain(q, tau, s, k + 1, xi.f[k], d)?;
                    let set: BTreeSet<u64> = kept.into_iter().map(|v| v[k]).collect();
                    if set.len() as u64 > g {
                        return Err(bound_err("chain", set.len() as u128, g as u128));
                    }
                    if f.len() < s.succ.len() {
                        sets.insert((s.coord.clone(), s.node.clone()), f.into_iter().collect());
                    }
                    out.case = Case::Chain;
                    out.values = set.into_iter().collect();
                }
            }
        }
        levels.push(out);
    }
    let condition = if sets.is_empty() {
        q.clone()
    } else {
        thinning(q, &sets)?
    };
    let branches = condition.branches()?;
    for br in &branches {
        let tv = tau.get(br)?;
        for ls in &levels {
            if !ls.set_for(&ids, br).contains(&tv[ls.level]) {
                return Err(Error::Invariant(format!(
                    "τ({}) = {} on {br:?} is missing from the extracted set",
                    ls.level, tv[ls.level]
                )));
            }
        }
    }
    Ok(Extraction {
        levels,
        condition,
        branches_checked: branches.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::{Coord, NormedTree};
    use crate::nat::BoundFn;

    fn id(s: &str) -> CoordId {
        CoordId::new(s)
    }

    /// Root splits into `width` successors, linear (all zeros) above.
    fn fan(t: CoordTriple, depth: usize, at: usize, width: u64) -> NormedTree {
        let mut nodes = BTreeSet::new();
        let stem = vec![0u64; at];
        for k in 0..=at {
            nodes.insert(stem[..k].to_vec());
        }
        for v in 0..width {
            let mut n = stem.clone();
            n.push(v);
            while n.len() <= depth {
                nodes.insert(n.clone());
                n.push(0);
            }
        }
        NormedTree::from_nodes(depth, t, nodes).unwrap()
    }

    fn cond(trees: Vec<(&str, NormedTree)>) -> ProductCondition {
        let depth = trees[0].1.depth();
        ProductCondition::new(
            depth,
            trees
                .into_iter()
                .map(|(i, tree)| (id(i), Coord { tree, zeta: 0 }))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn decides_examples() {
        let t = CoordTriple::constant(8, 1, 2, 2).unwrap();
        let p = cond(vec![("a", fan(t, 2, 1, 4))]);
        let constant = FiniteName::from_fn(&p, vec![8, 8], |_| vec![3, 3]).unwrap();
        for tup in p.level(1).unwrap().tuples {
            assert_eq!(decides(&p, &tup, &constant, 2).unwrap(), Some(vec![3, 3]));
        }
        let ind = FiniteName::from_fn(&p, vec![8, 8], |b| vec![0, (b[0][1] == 2) as u64]).unwrap();
        assert_eq!(decides(&p, &[vec![0]], &ind, 2).unwrap(), None);
        assert_eq!(decides(&p, &[vec![0]], &ind, 1).unwrap(), Some(vec![0]));
        assert_eq!(decides(&p, &[vec![0, 2]], &ind, 2).unwrap(), Some(vec![0, 1]));
    }

    /// Root splits in 4 (norm 2 with g=1, h=2), [0] splits in 8 (norm 3).
    fn two_splits() -> ProductCondition {
        let t = CoordTriple::constant(64, 1, 2, 3).unwrap();
        let mut nodes = BTreeSet::from([vec![]]);
        for a in 0..4u64 {
            let w = if a == 0 { 8 } else { 1 };
            nodes.insert(vec![a]);
            for b in 0..w {
                nodes.insert(vec![a, b]);
                nodes.insert(vec![a, b, 0]);
            }
        }
        cond(vec![("a", NormedTree::from_nodes(3, t, nodes).unwrap())])
    }

    #[test]
    fn densify_cuts_undecided_split() {
        let p = two_splits();
        validate_condition(&p).unwrap();
        // τ(0) depends on the choice at the level-1 split
        let tau = FiniteName::from_fn(&p, vec![2, 2, 2], |b| vec![(b[0][1] >= 4) as u64, 0, 0]).unwrap();
        assert!(check_decides(&p, &tau).is_err());
        let q = densify_decide(&p, &tau).unwrap();
        check_decides(&q, &tau).unwrap();
        let succ = q.coords()[&id("a")].tree.succ(&[0]);
        assert!(succ.iter().all(|&v| v < 4));
    }

    #[test]
    fn densify_keeps_constant_name() {
        let p = two_splits();
        let tau = FiniteName::from_fn(&p, vec![2, 2, 2], |_| vec![1, 1, 1]).unwrap();
        let q = densify_decide(&p, &tau).unwrap();
        assert!(crate::conditions::leq(&p, &q));
        for s in q.splits() {
            assert_eq!(s.succ, p.coords()[&s.coord].tree.succ(&s.node));
        }
    }

    #[test]
    fn smalllevel_examples() {
        let scale = ScaleSeq::preset("T2").unwrap();
        let t = CoordTriple::constant(20, 1, 2, 1).unwrap();
        // 16 successors, norm 4, level size 1
        let p = cond(vec![("a", fan(t.clone(), 1, 0, 16))]);
        assert!(check_smalllevel(&p, &scale).is_ok());
        // 4 successors, norm 2
        let p = cond(vec![("a", fan(t.clone(), 1, 0, 4))]);
        assert!(check_smalllevel(&p, &scale).is_err());
        let lin = cond(vec![("a", NormedTree::linear(t, &[3]).unwrap())]);
        assert!(check_smalllevel(&lin, &scale).is_ok());
    }

    #[test]
    fn almostall_arithmetic() {
        // 2·3 < 8, so the first term already is below 1/3
        assert!(almostall_holds(2, 100, 8, 2, 3));
        assert!(!almostall_holds(2, 100, 8, 2, 5));
        assert!(almostall_holds(2, 100, 16, 2, 3));
        // second term: f_ξ·l < g_ξ·h_ζ
        assert!(almostall_holds(50, 7, 4, 2, 1));
        assert!(!almostall_holds(50, 9, 4, 2, 1));
    }

    #[test]
    fn almostall_skips_coordinates_in_a() {
        let t = CoordTriple::constant(20, 1, 2, 1).unwrap();
        let p = cond(vec![("a", fan(t, 1, 0, 16))]);
        let xi = CoordTriple::constant(20, 2, 2, 1).unwrap();
        assert!(check_almostall(&p, &xi, &BTreeSet::new()).is_err());
        assert!(check_almostall(&p, &xi, &BTreeSet::from([id("a")])).is_ok());
        assert!(check_almostall(&p, &xi, &BTreeSet::from([id("z")])).is_err());
    }

    fn slalom(cap: &[u64], sets: Vec<Vec<u64>>) -> Slalom {
        Slalom::new(BoundFn::from_u64s(cap).unwrap(), sets).unwrap()
    }

    #[test]
    fn avoid_examples() {
        let t = CoordTriple::new(vec![20, 50], vec![2, 41], vec![2, 41]).unwrap();
        let p = cond(vec![("a", fan(t.clone(), 2, 0, 16))]);
        let b = slalom(&[20, 50], vec![vec![1, 2], vec![0]]);
        let (q, k) = avoid_slalom(&p, &id("a"), &b).unwrap();
        assert_eq!(k, 0);
        assert_eq!(q.tree(&id("a")).unwrap().succ(&[]), vec![0]);

        let lin = cond(vec![("a", NormedTree::linear(t.clone(), &[3, 7]).unwrap())]);
        let b = slalom(&[20, 50], vec![vec![3], vec![1]]);
        assert_eq!(avoid_slalom(&lin, &id("a"), &b).unwrap().1, 1);
        let b = slalom(&[20, 50], vec![vec![3], vec![7]]);
        assert!(matches!(
            avoid_slalom(&lin, &id("a"), &b),
            Err(Error::NoAvoidingNode(_))
        ));
    }

    #[test]
    fn constant_name_gives_singletons() {
        let t = CoordTriple::new(vec![20, 50], vec![2, 41], vec![2, 41]).unwrap();
        let p = cond(vec![("a", fan(t, 2, 0, 16))]);
        let xi = CoordTriple::new(vec![8, 50], vec![4, 41], vec![2, 41]).unwrap();
        let tau = FiniteName::from_fn(&p, vec![8, 50], |_| vec![5, 40]).unwrap();
        let ex = extract_slalom(&p, &tau, &BTreeSet::new(), &xi).unwrap();
        assert!(ex.levels.iter().all(|l| l.values.len() == 1));
        assert_eq!(ex.levels[0].case, Case::Chain);
    }

    #[test]
    fn small_case_toy() {
        // level 0: a splits in 2; level 1: z splits in 2 with f_ζ = 2
        let ta = CoordTriple::new(vec![2, 1, 1], vec![1, 1, 1], vec![2, 2, 2]).unwrap();
        let tz = CoordTriple::new(vec![1, 2, 1], vec![1, 1, 1], vec![2, 2, 2]).unwrap();
        let mut za = BTreeSet::from([vec![], vec![0]]);
        for v in 0..2 {
            za.insert(vec![0, v]);
            za.insert(vec![0, v, 0]);
        }
        let p = cond(vec![
            ("a", fan(ta, 3, 0, 2)),
            ("z", NormedTree::from_nodes(3, tz, za).unwrap()),
        ]);
        validate_condition(&p).unwrap();
        assert_eq!(p.level_size(1), 2);
        let xi = CoordTriple::constant(16, 8, 2, 3).unwrap();
        let tau = FiniteName::from_fn(&p, vec![16; 3], |b| {
            let s = b[0][0] * 2 + b[1][1];
            vec![b[0][0], s + 4, 15 - s]
        })
        .unwrap();
        let ex = extract_slalom(&p, &tau, &BTreeSet::new(), &xi).unwrap();
        assert_eq!(ex.levels[1].case, Case::Small);
        assert!(ex.levels[1].values.len() <= 4);
        assert_eq!(ex.branches_checked, 4);
        // level 2 does not split; 4 tuples, each decides
        assert_eq!(ex.levels[2].values.len(), 4);
    }

    #[test]
    fn chain_case_toy() {
        let tz = CoordTriple::constant(64, 1, 8, 1).unwrap();
        let p = cond(vec![("z", fan(tz, 1, 0, 64))]);
        let xi = CoordTriple::constant(12, 4, 2, 1).unwrap();
        let tau = FiniteName::from_fn(&p, vec![12], |b| vec![b[0][0] % 12]).unwrap();
        let ex = extract_slalom(&p, &tau, &BTreeSet::new(), &xi).unwrap();
        assert_eq!(ex.levels[0].case, Case::Chain);
        assert_eq!(ex.levels[0].values, vec![0, 1, 2, 3]);
        let succ = ex.condition.tree(&id("z")).unwrap().succ(&[]);
        assert!(succ.iter().all(|v| v % 12 < 4));
        assert_eq!(ex.branches_checked, succ.len());
    }

    #[test]
    fn fiber_case_toy() {
        let t = CoordTriple::new(vec![20, 50], vec![2, 41], vec![2, 41]).unwrap();
        let p = cond(vec![("a", fan(t, 2, 0, 16))]);
        let xi = CoordTriple::new(vec![9, 50], vec![4, 41], vec![2, 41]).unwrap();
        let tau = FiniteName::from_fn(&p, vec![9, 50], |b| vec![b[0][0] % 9, 0]).unwrap();
        let ex = extract_slalom(&p, &tau, &BTreeSet::from([id("a")]), &xi).unwrap();
        assert_eq!(ex.levels[0].case, Case::Fibers);
        assert_eq!(ex.levels[0].fibers.len(), 16);
        assert_eq!(ex.levels[0].width(), 1);
    }

    #[test]
    fn chain_rejects_zero_d() {
        let t = CoordTriple::new(vec![20, 50], vec![2, 41], vec![2, 41]).unwrap();
        // the level-1 split sits on 16 tuples; g_ξ(1) = 8 gives d = 0
        let t2 = CoordTriple::new(vec![20, 50], vec![1, 1], vec![2, 2]).unwrap();
        let p = cond(vec![
            ("a", fan(t, 2, 0, 16)),
            (
                "b",
                NormedTree::from_nodes(2, t2, vec![vec![], vec![0], vec![0, 0], vec![0, 1]]).unwrap(),
            ),
        ]);
        validate_condition(&p).unwrap();
        let xi = CoordTriple::new(vec![8, 50], vec![4, 8], vec![2, 41]).unwrap();
        let tau = FiniteName::from_fn(&p, vec![8, 50], |_| vec![0, 0]).unwrap();
        let err = extract_slalom(&p, &tau, &BTreeSet::new(), &xi).unwrap_err();
        assert!(matches!(err, Error::CaseBound { level: 1, .. }));
    }

    #[test]
    fn name_json_round_trip() {
        let t = CoordTriple::constant(8, 1, 2, 2).unwrap();
        let p = cond(vec![("a", fan(t, 2, 1, 4))]);
        let tau = FiniteName::from_fn(&p, vec![8, 8], |b| vec![b[0][1], 1]).unwrap();
        let s = serde_json::to_string(&tau).unwrap();
        assert_eq!(serde_json::from_str::<FiniteName>(&s).unwrap(), tau);
        assert!(serde_json::from_str::<FiniteName>(
            r#"{"coords":["a"],"bound":[1],"branches":[{"tuple":[[0]],"tau":[3]}]}"#
        )
        .is_err());
    }
}
