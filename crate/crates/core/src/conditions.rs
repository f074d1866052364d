//! Finite-depth normed trees and finite product conditions.
//!
//! A tree is stored as its full node set (prefix closed, every node of
//! length below the depth has a successor). Nodes with more than one
//! successor are splitting nodes; the `n`-th splitting level consists of the
//! splitting nodes with exactly `n` splitting proper prefixes, and every one
//! of them must have norm at least `n`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::norms::norm_value;
use crate::scales::{ScaleSeq, Triple};

pub type Node = Vec<u64>;

/// Guard on the number of tuples [`ProductCondition::level`] will list.
pub const LEVEL_GUARD: u128 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoordId(pub String);

impl CoordId {
    pub fn new(s: impl Into<String>) -> Self {
        CoordId(s.into())
    }
}

impl std::fmt::Display for CoordId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Per-level `(f, g, h)` of one coordinate, narrowed to `u64`. Unlike
/// [`Triple`] it is not tied to a scale, so small hand-made parameters can be
/// used to exercise the tree machinery.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoordTriple {
    pub f: Vec<u64>,
    pub g: Vec<u64>,
    pub h: Vec<u64>,
}

impl<'de> Deserialize<'de> for CoordTriple {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            f: Vec<u64>,
            g: Vec<u64>,
            h: Vec<u64>,
        }
        let r = Raw::deserialize(d)?;
        CoordTriple::new(r.f, r.g, r.h).map_err(serde::de::Error::custom)
    }
}

impl CoordTriple {
    pub fn new(f: Vec<u64>, g: Vec<u64>, h: Vec<u64>) -> Result<Self> {
        if g.len() != f.len() || h.len() != f.len() {
            return Err(Error::WindowMismatch {
                expected: f.len(),
                got: if g.len() != f.len() { g.len() } else { h.len() },
            });
        }
        for k in 0..f.len() {
            if f[k] == 0 || g[k] == 0 || h[k] < 2 {
                return Err(Error::Malformed(format!(
                    "level {k}: need f, g >= 1 and h >= 2, got ({}, {}, {})",
                    f[k], g[k], h[k]
                )));
            }
        }
        Ok(CoordTriple { f, g, h })
    }

    pub fn from_triple(t: &Triple) -> Result<Self> {
        CoordTriple::new(t.f.to_u64s()?, t.g.to_u64s()?, t.h.to_u64s()?)
    }

    /// Constant parameters over `window` levels.
    pub fn constant(f: u64, g: u64, h: u64, window: usize) -> Result<Self> {
        CoordTriple::new(vec![f; window], vec![g; window], vec![h; window])
    }

    pub fn window(&self) -> usize {
        self.f.len()
    }

    pub fn norm(&self, k: usize, size: u64) -> u64 {
        norm_value(self.g[k], self.h[k], size)
    }
}

/// One coordinate: a tree of fixed depth over its parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormedTree {
    depth: usize,
    triple: CoordTriple,
    nodes: BTreeSet<Node>,
}

fn extends(node: &[u64], prefix: &[u64]) -> bool {
    node.len() >= prefix.len() && node[..prefix.len()] == *prefix
}

fn comparable(a: &[u64], b: &[u64]) -> bool {
    extends(a, b) || extends(b, a)
}

impl NormedTree {
    /// Builds a tree from raw nodes; only the window is checked here, the
    /// rest is reported by [`validate_condition`].
    pub fn from_nodes(depth: usize, triple: CoordTriple, nodes: impl IntoIterator<Item = Node>) -> Result<Self> {
        if triple.window() < depth {
            return Err(Error::WindowMismatch {
                expected: depth,
                got: triple.window(),
            });
        }
        Ok(NormedTree {
            depth,
            triple,
            nodes: nodes.into_iter().collect(),
        })
    }

    /// The tree with the single branch `path`.
    pub fn linear(triple: CoordTriple, path: &[u64]) -> Result<Self> {
        NormedTree::from_nodes(path.len(), triple, (0..=path.len()).map(|k| path[..k].to_vec()))
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn triple(&self) -> &CoordTriple {
        &self.triple
    }

    pub fn nodes(&self) -> &BTreeSet<Node> {
        &self.nodes
    }

    pub fn contains(&self, eta: &[u64]) -> bool {
        self.nodes.contains(eta)
    }

    /// Nodes extending `eta`, including `eta`, in lexicographic order.
    pub fn cone<'a>(&'a self, eta: &'a [u64]) -> impl Iterator<Item = &'a Node> + 'a {
        self.nodes.range(eta.to_vec()..).take_while(move |n| extends(n, eta))
    }

    /// Successor values of `eta`.
    pub fn succ(&self, eta: &[u64]) -> Vec<u64> {
        self.cone(eta)
            .filter(|n| n.len() == eta.len() + 1)
            .map(|n| n[eta.len()])
            .collect()
    }

    /// `‖succ(eta)‖` at level `|eta|`; 0 at the top level.
    pub fn norm(&self, eta: &[u64]) -> u64 {
        if eta.len() >= self.depth {
            return 0;
        }
        self.triple.norm(eta.len(), self.succ(eta).len() as u64)
    }

    pub fn nodes_at(&self, k: usize) -> Vec<&Node> {
        self.nodes.iter().filter(|n| n.len() == k).collect()
    }

    pub fn width(&self, k: usize) -> usize {
        self.nodes.iter().filter(|n| n.len() == k).count()
    }

    pub fn is_split(&self, eta: &[u64]) -> bool {
        eta.len() < self.depth && self.succ(eta).len() > 1
    }

    /// Splitting nodes ordered by level, then lexicographically.
    pub fn splits(&self) -> Vec<Node> {
        let mut v: Vec<Node> = self.nodes.iter().filter(|n| self.is_split(n)).cloned().collect();
        v.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
        v
    }

    /// Number of splitting proper prefixes of `eta`.
    pub fn split_index(&self, eta: &[u64]) -> usize {
        (0..eta.len()).filter(|&k| self.is_split(&eta[..k])).count()
    }

    /// First splitting node, or the unique leaf of a linear tree.
    pub fn stem(&self) -> Node {
        let mut eta = Vec::new();
        while eta.len() < self.depth {
            let s = self.succ(&eta);
            if s.len() != 1 {
                break;
            }
            eta.push(s[0]);
        }
        eta
    }

    /// Full branches (nodes of length `depth`).
    pub fn branches(&self) -> Vec<&Node> {
        self.nodes_at(self.depth)
    }

    /// Nodes comparable with `eta`.
    pub fn trim_to(&self, eta: &[u64]) -> NormedTree {
        NormedTree {
            depth: self.depth,
            triple: self.triple.clone(),
            nodes: self.nodes.iter().filter(|n| comparable(n, eta)).cloned().collect(),
        }
    }

    /// Above `eta` keep only extensions whose next value lies in `keep`.
    pub fn restrict_succ(&self, eta: &[u64], keep: &BTreeSet<u64>) -> NormedTree {
        let k = eta.len();
        NormedTree {
            depth: self.depth,
            triple: self.triple.clone(),
            nodes: self
                .nodes
                .iter()
                .filter(|n| !(n.len() > k && extends(n, eta) && !keep.contains(&n[k])))
                .cloned()
                .collect(),
        }
    }

    /// Above `eta` keep only extensions of `eta⌢v`.
    pub fn prune_to(&self, eta: &[u64], v: u64) -> NormedTree {
        self.restrict_succ(eta, &BTreeSet::from([v]))
    }

    pub fn is_subtree_of(&self, other: &NormedTree) -> bool {
        self.depth == other.depth && self.nodes.is_subset(&other.nodes)
    }

    /// Checks prefix closure, value bounds, successors and split norms.
    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if !self.nodes.contains(&Vec::new()) {
            v.push(Violation::new(0, "root", "tree has no root"));
            return v;
        }
        for n in &self.nodes {
            let k = n.len();
            if k > self.depth {
                v.push(Violation::new(
                    k,
                    "depth",
                    format!("node {n:?} is longer than depth {}", self.depth),
                ));
                continue;
            }
            if k > 0 && !self.nodes.contains(&n[..k - 1]) {
                v.push(Violation::new(k, "prefix-closed", format!("parent of {n:?} missing")));
            }
            if let Some(i) = (0..k).find(|&i| n[i] >= self.triple.f[i]) {
                v.push(Violation::new(
                    i,
                    "value-bound",
                    format!("{n:?} has value {} >= f({i}) = {}", n[i], self.triple.f[i]),
                ));
            }
            if k < self.depth {
                let s = self.succ(n).len() as u64;
                if s == 0 {
                    v.push(Violation::new(k, "successor", format!("{n:?} has no successor")));
                } else if s > 1 {
                    let idx = self.split_index(n) as u64;
                    let norm = self.triple.norm(k, s);
                    if norm < idx {
                        v.push(Violation::new(
                            k,
                            "split-norm",
                            format!("{n:?} is in splitting level {idx} but has norm {norm} ({s} successors)"),
                        ));
                    }
                }
            }
        }
        v
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coord {
    pub tree: NormedTree,
    /// Index of the parameter family the coordinate belongs to.
    pub zeta: u32,
}

/// Finitely many coordinates, each a tree of the common depth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductCondition {
    depth: usize,
    coords: BTreeMap<CoordId, Coord>,
}

/// Splitting node bookkeeping: the `l`-th splitting level `k_l`, its node
/// `η_l`, coordinate `α_l`, family `ζ_l` and norm.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SplitInfo {
    pub l: usize,
    pub level: usize,
    pub coord: CoordId,
    pub node: Node,
    pub zeta: u32,
    pub succ: Vec<u64>,
    pub norm: u64,
}

/// All tuples of one level, aligned with `coords`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevelView {
    pub level: usize,
    pub coords: Vec<CoordId>,
    pub active: Vec<CoordId>,
    pub tuples: Vec<Vec<Node>>,
}

impl ProductCondition {
    pub fn new(depth: usize, coords: BTreeMap<CoordId, Coord>) -> Result<Self> {
        if let Some((id, _)) = coords.iter().find(|(_, c)| c.tree.depth != depth) {
            return Err(Error::Malformed(format!(
                "coordinate {id} has depth other than {depth}"
            )));
        }
        Ok(ProductCondition { depth, coords })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn coords(&self) -> &BTreeMap<CoordId, Coord> {
        &self.coords
    }

    pub fn ids(&self) -> Vec<CoordId> {
        self.coords.keys().cloned().collect()
    }

    pub fn coord(&self, id: &CoordId) -> Result<&Coord> {
        self.coords
            .get(id)
            .ok_or_else(|| Error::Malformed(format!("no coordinate {id}")))
    }

    pub fn tree(&self, id: &CoordId) -> Result<&NormedTree> {
        Ok(&self.coord(id)?.tree)
    }

    pub fn with_tree(&self, id: &CoordId, tree: NormedTree) -> Result<Self> {
        let mut out = self.clone();
        out.coords
            .get_mut(id)
            .ok_or_else(|| Error::Malformed(format!("no coordinate {id}")))?
            .tree = tree;
        Ok(out)
    }

    /// Adds a coordinate (used by strategies that widen the domain).
    pub fn with_coord(&self, id: CoordId, coord: Coord) -> Result<Self> {
        if coord.tree.depth != self.depth {
            return Err(Error::Malformed(format!("coordinate {id} has the wrong depth")));
        }
        let mut out = self.clone();
        out.coords.insert(id, coord);
        Ok(out)
    }

    /// Coordinates whose stem has length at most `k`.
    pub fn active(&self, k: usize) -> BTreeSet<CoordId> {
        self.coords
            .iter()
            .filter(|(_, c)| c.tree.stem().len() <= k)
            .map(|(id, _)| id.clone())
            .collect()
    }

    /// `|Level_k|` as a product of per-coordinate widths.
    pub fn level_size(&self, k: usize) -> u128 {
        self.coords
            .values()
            .fold(1u128, |acc, c| acc.saturating_mul(c.tree.width(k) as u128))
    }

    /// Every tuple of nodes of length `k`, in lexicographic order.
    pub fn level(&self, k: usize) -> Result<LevelView> {
        if k > self.depth {
            return Err(Error::Precondition(format!("level {k} above depth {}", self.depth)));
        }
        let size = self.level_size(k);
        if size > LEVEL_GUARD {
            return Err(Error::GuardExceeded {
                size,
                guard: LEVEL_GUARD as u64,
            });
        }
        let per: Vec<Vec<&Node>> = self.coords.values().map(|c| c.tree.nodes_at(k)).collect();
        let counts: Vec<u64> = per.iter().map(|p| p.len() as u64).collect();
        let tuples = crate::slaloms::branches(&counts)
            .map(|pick| {
                pick.iter()
                    .enumerate()
                    .map(|(j, &i)| per[j][i as usize].clone())
                    .collect()
            })
            .collect();
        Ok(LevelView {
            level: k,
            coords: self.ids(),
            active: self.active(k).into_iter().collect(),
            tuples,
        })
    }

    /// Full branches as tuples.
    pub fn branches(&self) -> Result<Vec<Vec<Node>>> {
        Ok(self.level(self.depth)?.tuples)
    }

    /// Splitting pairs ordered by level, coordinate and node. Indices `l`
    /// count splitting levels, so they are meaningful in normal form.
    pub fn splits(&self) -> Vec<SplitInfo> {
        let mut raw: Vec<(usize, CoordId, Node)> = Vec::new();
        for (id, c) in &self.coords {
            for n in c.tree.splits() {
                raw.push((n.len(), id.clone(), n));
            }
        }
        raw.sort();
        let mut out = Vec::with_capacity(raw.len());
        let mut l = 0;
        let mut last_level = None;
        for (level, coord, node) in raw {
            if let Some(prev) = last_level {
                if prev != level {
                    l += 1;
                }
            }
            last_level = Some(level);
            let c = &self.coords[&coord];
            out.push(SplitInfo {
                l,
                level,
                zeta: c.zeta,
                succ: c.tree.succ(&node),
                norm: c.tree.norm(&node),
                coord,
                node,
            });
        }
        out
    }

    /// Splitting levels in increasing order.
    pub fn splitting_levels(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.splits().iter().map(|s| s.level).collect();
        v.dedup();
        v
    }

    /// At most one splitting pair per level.
    pub fn is_normal_form(&self) -> bool {
        let s = self.splits();
        s.windows(2).all(|w| w[0].level != w[1].level)
    }

    /// Restricts every coordinate to the nodes comparable with its entry of
    /// `tuple` (a tuple of some level, in coordinate order).
    pub fn trim(&self, tuple: &[Node]) -> Result<Self> {
        if tuple.len() != self.coords.len() {
            return Err(Error::WindowMismatch {
                expected: self.coords.len(),
                got: tuple.len(),
            });
        }
        let k = tuple.first().map_or(0, |t| t.len());
        let mut out = self.clone();
        for ((id, c), eta) in out.coords.iter_mut().zip(tuple) {
            if eta.len() != k || !c.tree.contains(eta) {
                return Err(Error::Precondition(format!("{eta:?} is not a level-{k} node of {id}")));
            }
            c.tree = c.tree.trim_to(eta);
        }
        Ok(out)
    }

    /// Prunes the `l`-th splitting node to its successor `nu` (given as the
    /// full node). Requires normal form.
    pub fn prune(&self, l: usize, nu: &[u64]) -> Result<Self> {
        if !self.is_normal_form() {
            return Err(Error::Precondition("prune needs normal form".into()));
        }
        let s = self
            .splits()
            .into_iter()
            .find(|s| s.l == l)
            .ok_or_else(|| Error::Precondition(format!("no splitting level {l}")))?;
        if nu.len() != s.level + 1 || !extends(nu, &s.node) || !s.succ.contains(&nu[s.level]) {
            return Err(Error::Precondition(format!(
                "{nu:?} is not a successor of {:?}",
                s.node
            )));
        }
        self.prune_node(&s.coord, &s.node, nu[s.level])
    }

    /// Above `eta` in coordinate `id`, keep only extensions of `eta⌢v`.
    pub fn prune_node(&self, id: &CoordId, eta: &[u64], v: u64) -> Result<Self> {
        let t = self.tree(id)?;
        if !t.succ(eta).contains(&v) {
            return Err(Error::Precondition(format!(
                "{v} is not a successor of {eta:?} in {id}"
            )));
        }
        self.with_tree(id, t.prune_to(eta, v))
    }
}

/// Report-style validity check of every coordinate.
pub fn validate_condition(p: &ProductCondition) -> Result<()> {
    let mut v = Vec::new();
    for (id, c) in &p.coords {
        for mut x in c.tree.violations() {
            x.detail = format!("coordinate {id}: {}", x.detail);
            v.push(x);
        }
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::Violations(v))
    }
}

/// `p <= q`: `q` extends `p` (larger domain, smaller trees).
pub fn leq(p: &ProductCondition, q: &ProductCondition) -> bool {
    p.depth == q.depth
        && p.coords.iter().all(|(id, c)| {
            q.coords
                .get(id)
                .is_some_and(|d| d.zeta == c.zeta && d.tree.triple == c.tree.triple && d.tree.is_subtree_of(&c.tree))
        })
}

/// `p <=_k q`: `p <= q`, nodes of `p` up to length `k` survive in `q`, and
/// both have the same active coordinates at `k`.
pub fn leq_k(p: &ProductCondition, q: &ProductCondition, k: usize) -> bool {
    leq(p, q)
        && p.coords.iter().all(|(id, c)| {
            let d = &q.coords[id].tree;
            c.tree.nodes.iter().filter(|n| n.len() <= k).all(|n| d.contains(n))
        })
        && p.active(k) == q.active(k)
}

/// Sweeps levels upward; at a level with several splitting pairs the first
/// one (by coordinate, then node) is kept and the others are pruned to their
/// least successor. Pruning only lowers splitting indices, so validity is
/// preserved.
pub fn to_normal_form(p: &ProductCondition) -> Result<ProductCondition> {
    validate_condition(p)?;
    let mut q = p.clone();
    for k in 0..q.depth {
        loop {
            let at_k: Vec<SplitInfo> = q.splits().into_iter().filter(|s| s.level == k).collect();
            if at_k.len() <= 1 {
                break;
            }
            let s = &at_k[1];
            q = q.prune_node(&s.coord, &s.node, s.succ[0])?;
        }
    }
    validate_condition(&q).map_err(|e| Error::Invariant(format!("normal form broke validity: {e}")))?;
    Ok(q)
}

/// `|Level_k| <= lo_{k-1}·hi_{k-1}` for `1 <= k <= depth`, and that bound
/// `< lo_k` wherever the scale reaches level `k`.
pub fn level_size_check(p: &ProductCondition, scale: &ScaleSeq) -> Result<()> {
    if !p.is_normal_form() {
        return Err(Error::Precondition("level bound needs normal form".into()));
    }
    if scale.window() < p.depth {
        return Err(Error::WindowMismatch {
            expected: p.depth,
            got: scale.window(),
        });
    }
    let mut v = Vec::new();
    for k in 1..=p.depth {
        let bound = scale.lo(k - 1) * scale.hi(k - 1);
        let size = p.level_size(k);
        if num_bigint::BigUint::from(size) > bound {
            v.push(Violation::new(
                k,
                "level-size",
                format!("|Level_{k}| = {size} > {bound}"),
            ));
        }
        if k < scale.window() && bound >= *scale.lo(k) {
            v.push(Violation::new(
                k,
                "level-size",
                format!("{bound} >= lo_{k} = {}", scale.lo(k)),
            ));
        }
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::Violations(v))
    }
}

// JSON: {"depth": N, "coords": {"a": {"triple": {...}, "zeta": 0, "nodes": [...]}}}

#[derive(Serialize, Deserialize)]
struct CoordJson {
    triple: CoordTriple,
    #[serde(default)]
    zeta: u32,
    nodes: Vec<Node>,
}

#[derive(Serialize, Deserialize)]
struct ConditionJson {
    depth: usize,
    coords: BTreeMap<CoordId, CoordJson>,
}

impl Serialize for ProductCondition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ConditionJson {
            depth: self.depth,
            coords: self
                .coords
                .iter()
                .map(|(id, c)| {
                    (
                        id.clone(),
                        CoordJson {
                            triple: c.tree.triple.clone(),
                            zeta: c.zeta,
                            nodes: c.tree.nodes.iter().cloned().collect(),
                        },
                    )
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProductCondition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = ConditionJson::deserialize(d)?;
        let mut coords = BTreeMap::new();
        for (id, c) in raw.coords {
            let tree = NormedTree::from_nodes(raw.depth, c.triple, c.nodes).map_err(serde::de::Error::custom)?;
            coords.insert(id, Coord { tree, zeta: c.zeta });
        }
        ProductCondition::new(raw.depth, coords).map_err(serde::de::Error::custom)
    }
}
