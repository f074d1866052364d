//! The finite fusion game between an accountant and a spendthrift.
//!
//! Round `n` (from 1): the accountant names a coordinate `α`, a node `η` of
//! length `i_{n-1}` in `p_{n-1}(α)` and a bound `b_n`; the spendthrift answers
//! with `p_n` and a splitting node `ν ⊇ η` of norm above `b_n`, after which
//! `i_n = |ν| + 1`. Because depth is finite the game may also end early when
//! the accountant has nothing left to ask or the spendthrift cannot answer.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::conditions::{leq_k, validate_condition, CoordId, Node, ProductCondition, SplitInfo};
use crate::error::{Error, Result, Violation};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Move {
    pub coord: CoordId,
    pub eta: Node,
    pub bound: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reply {
    pub condition: ProductCondition,
    pub nu: Node,
}

/// Position before round `round`: `condition` is `p_{round-1}` and `level`
/// is `i_{round-1}`.
#[derive(Clone, Debug)]
pub struct GameState {
    pub round: usize,
    pub level: usize,
    pub condition: ProductCondition,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    pub coord: CoordId,
    pub eta: Node,
    pub bound: u64,
    pub nu: Node,
    pub norm: u64,
    pub next_level: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    Accountant,
    Spendthrift,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum Outcome {
    /// All requested rounds were played.
    Completed,
    /// The accountant had no node left to ask about.
    Exhausted,
    /// The spendthrift had no legal answer.
    Stalled,
    /// A player broke a rule; no winner is declared.
    Forfeit { player: Player, round: usize, rule: String },
}

#[derive(Clone, Debug, Serialize)]
pub struct GameResult {
    #[serde(flatten)]
    pub outcome: Outcome,
    pub rounds: Vec<RoundRecord>,
    #[serde(rename = "final")]
    pub last: ProductCondition,
    /// The fused condition; `None` after a forfeit.
    pub fused: Option<ProductCondition>,
}

/// Play is with perfect information, so the accountant may ask whether the
/// spendthrift has an answer to a candidate move.
pub trait Accountant {
    fn name(&self) -> &str;
    fn play(&mut self, state: &GameState, answerable: &dyn Fn(&Move) -> bool) -> Option<Move>;
}

/// Strategies are functions of the visible position.
pub trait Spendthrift {
    fn name(&self) -> &str;
    fn reply(&self, state: &GameState, mv: &Move) -> Option<Reply>;

    /// Successor kept when a leftover split is closed off.
    fn close(&self, _coord: &CoordId, _node: &[u64], succ: &[u64]) -> u64 {
        succ[0]
    }
}

fn extends(node: &[u64], prefix: &[u64]) -> bool {
    node.len() >= prefix.len() && node[..prefix.len()] == *prefix
}

/// Picks the successor kept when a split is closed off.
type CloseFn<'a> = dyn Fn(&CoordId, &[u64], &[u64]) -> u64 + 'a;

fn is_stem(p: &ProductCondition, s: &SplitInfo) -> bool {
    p.coords()[&s.coord].tree.stem() == s.node
}

/// Prunes every split at levels `[level, |nu|)` so that `nu` survives; the
/// successor kept at a split off the path of `nu` comes from `close`.
/// `None` when a stem sits at `level` (pruning it would change the active
/// coordinates there) and is not `nu` itself.
fn clear_below(
    p: &ProductCondition,
    level: usize,
    coord: &CoordId,
    nu: &[u64],
    close: &CloseFn,
) -> Option<ProductCondition> {
    let mut q = p.clone();
    loop {
        let Some(s) = q.splits().into_iter().find(|s| s.level >= level && s.level < nu.len()) else {
            return Some(q);
        };
        if s.level == level && is_stem(&q, &s) {
            return None;
        }
        let keep = if s.coord == *coord && extends(nu, &s.node) {
            nu[s.level]
        } else {
            close(&s.coord, &s.node, &s.succ)
        };
        q = q.prune_node(&s.coord, &s.node, keep).ok()?;
    }
}

fn least(_: &CoordId, _: &[u64], succ: &[u64]) -> u64 {
    succ[0]
}

/// Lowest splitting node `ν ⊇ η` of norm above `bound` that can be reached
/// legally, together with the cleared condition.
fn minimal_plan(
    p: &ProductCondition,
    level: usize,
    mv: &Move,
    min_norm: u64,
    admissible: &dyn Fn(&ProductCondition, &SplitInfo) -> bool,
    close: &CloseFn,
) -> Option<(ProductCondition, Node)> {
    p.splits()
        .into_iter()
        .filter(|s| s.coord == mv.coord && extends(&s.node, &mv.eta) && s.norm > min_norm && admissible(p, s))
        .find_map(|s| clear_below(p, level, &mv.coord, &s.node, close).map(|q| (q, s.node)))
}

/// Visits coordinates round robin (starting at `(n - 1) mod |dom|`) and asks
/// about the least node of the current level the spendthrift can answer,
/// with `b_n = n`.
#[derive(Clone, Debug, Default)]
pub struct Bookkeeping;

impl Accountant for Bookkeeping {
    fn name(&self) -> &str {
        "bookkeeping"
    }

    fn play(&mut self, state: &GameState, answerable: &dyn Fn(&Move) -> bool) -> Option<Move> {
        let p = &state.condition;
        let ids = p.ids();
        if ids.is_empty() || state.level >= p.depth() {
            return None;
        }
        let bound = state.round as u64;
        let start = (state.round - 1) % ids.len();
        for j in 0..ids.len() {
            let id = &ids[(start + j) % ids.len()];
            for eta in p.coords()[id].tree.nodes_at(state.level) {
                let mv = Move {
                    coord: id.clone(),
                    eta: eta.clone(),
                    bound,
                };
                if answerable(&mv) {
                    return Some(mv);
                }
            }
        }
        None
    }
}

/// Answers with the lowest qualifying split and closes everything in
/// between at its least successor.
#[derive(Clone, Debug, Default)]
pub struct Minimal;

impl Spendthrift for Minimal {
    fn name(&self) -> &str {
        "minimal"
    }

    fn reply(&self, state: &GameState, mv: &Move) -> Option<Reply> {
        let (condition, nu) = minimal_plan(&state.condition, state.level, mv, mv.bound, &|_, _| true, &least)?;
        Some(Reply { condition, nu })
    }
}

/// Like [`Minimal`] but also adds a fresh linear coordinate each round.
#[derive(Clone, Debug)]
pub struct Widening {
    pub template: crate::conditions::Coord,
}

impl Spendthrift for Widening {
    fn name(&self) -> &str {
        "widening"
    }

    fn reply(&self, state: &GameState, mv: &Move) -> Option<Reply> {
        let (q, nu) = minimal_plan(&state.condition, state.level, mv, mv.bound, &|_, _| true, &least)?;
        let mut id = CoordId::new(format!("w{}", state.round));
        while q.coords().contains_key(&id) {
            id = CoordId::new(format!("{}'", id.0));
        }
        let condition = q.with_coord(id, self.template.clone()).ok()?;
        Some(Reply { condition, nu })
    }
}

/// Chosen successor sets `F` per splitting node.
pub type ThinningSets = BTreeMap<(CoordId, Node), BTreeSet<u64>>;

/// Answers with the lowest split whose set `F` has norm above `b_n`, reached
/// through values of the sets `F`, and replaces its successors by `F`. When
/// `F` keeps half the norm, a split of norm above `2·b_n` always qualifies.
#[derive(Clone, Debug)]
pub struct Thinning {
    pub sets: ThinningSets,
}

impl Thinning {
    fn allowed(&self, coord: &CoordId, node: &[u64], succ: &[u64]) -> Vec<u64> {
        match self.sets.get(&(coord.clone(), node.to_vec())) {
            Some(f) => f.iter().copied().collect(),
            None => succ.to_vec(),
        }
    }
}

impl Spendthrift for Thinning {
    fn name(&self) -> &str {
        "thinning"
    }

    fn reply(&self, state: &GameState, mv: &Move) -> Option<Reply> {
        let p = &state.condition;
        let path_ok = |p: &ProductCondition, s: &SplitInfo| {
            let tree = &p.coords()[&s.coord].tree;
            let f = self.allowed(&s.coord, &s.node, &s.succ);
            tree.triple().norm(s.level, f.len() as u64) > mv.bound
                && (mv.eta.len()..s.level).all(|j| {
                    let anc = &s.node[..j];
                    !tree.is_split(anc) || self.allowed(&s.coord, anc, &tree.succ(anc)).contains(&s.node[j])
                })
        };
        let close = |c: &CoordId, n: &[u64], succ: &[u64]| self.allowed(c, n, succ)[0];
        let (q, nu) = minimal_plan(p, state.level, mv, mv.bound, &path_ok, &close)?;
        let tree = &q.coords()[&mv.coord].tree;
        let f: BTreeSet<u64> = self.allowed(&mv.coord, &nu, &tree.succ(&nu)).into_iter().collect();
        let condition = q.with_tree(&mv.coord, tree.restrict_succ(&nu, &f)).ok()?;
        Some(Reply { condition, nu })
    }

    fn close(&self, coord: &CoordId, node: &[u64], succ: &[u64]) -> u64 {
        self.allowed(coord, node, succ)[0]
    }
}

/// Checks the accountant's move; returns the broken rule.
pub fn check_move(state: &GameState, mv: &Move) -> std::result::Result<(), &'static str> {
    let tree = match state.condition.coords().get(&mv.coord) {
        Some(c) => &c.tree,
        None => return Err("coordinate"),
    };
    if !tree.contains(&mv.eta) {
        return Err("node");
    }
    if mv.eta.len() != state.level {
        return Err("level");
    }
    Ok(())
}

/// Checks a reply against rules 1 to 6, validity and normal form.
pub fn check_reply(state: &GameState, mv: &Move, reply: &Reply) -> Result<()> {
    let prev = &state.condition;
    let q = &reply.condition;
    let nu = &reply.nu;
    let i = state.level;
    let mut v = Vec::new();
    let mut fail = |rule: &'static str, detail: String| v.push(Violation::new(i, rule, detail));
    if let Err(e) = validate_condition(q) {
        fail("valid", e.to_string());
    }
    if !q.is_normal_form() {
        fail("normal-form", "more than one split on a level".into());
    }
    if !leq_k(prev, q, i) {
        fail("1", format!("the answer does not extend the position at level {i}"));
    }
    let tree = q.coords().get(&mv.coord).map(|c| &c.tree);
    if !tree.is_some_and(|t| t.contains(nu)) {
        fail("2", format!("{nu:?} is not a node of {}", mv.coord));
    }
    let norm = tree.map_or(0, |t| t.norm(nu));
    if norm <= mv.bound {
        fail("3", format!("norm {norm} is not above {}", mv.bound));
    }
    if !extends(nu, &mv.eta) {
        fail("4", format!("{nu:?} does not extend {:?}", mv.eta));
    }
    for (id, c) in q.coords() {
        if !prev.coords().contains_key(id) && c.tree.stem().len() <= nu.len() {
            fail("5", format!("new coordinate {id} has stem at or below {}", nu.len()));
        }
    }
    let (a, b, c) = (q.level_size(nu.len()), q.level_size(i), prev.level_size(i));
    if a != b || b != c {
        fail("6", format!("level sizes {a}, {b}, {c} differ"));
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::Violations(v))
    }
}

/// Closes off every split at level `level` or above, lowest first.
pub fn fuse(p: &ProductCondition, level: usize, spend: &dyn Spendthrift) -> Result<ProductCondition> {
    let mut q = p.clone();
    while let Some(s) = q.splits().into_iter().find(|s| s.level >= level) {
        let keep = spend.close(&s.coord, &s.node, &s.succ);
        q = q.prune_node(&s.coord, &s.node, keep)?;
    }
    Ok(q)
}

/// Plays up to `rounds` rounds from `start`, which must be valid and in
/// normal form.
pub fn play(
    start: &ProductCondition,
    acc: &mut dyn Accountant,
    spend: &dyn Spendthrift,
    rounds: usize,
) -> Result<GameResult> {
    validate_condition(start)?;
    if !start.is_normal_form() {
        return Err(Error::Precondition(
            "the game starts from a normal-form condition".into(),
        ));
    }
    let mut state = GameState {
        round: 1,
        level: 0,
        condition: start.clone(),
    };
    let mut records = Vec::new();
    let outcome = loop {
        if state.round > rounds {
            break Outcome::Completed;
        }
        let answerable = |mv: &Move| spend.reply(&state, mv).is_some();
        let Some(mv) = acc.play(&state, &answerable) else {
            break Outcome::Exhausted;
        };
        if let Err(rule) = check_move(&state, &mv) {
            break Outcome::Forfeit {
                player: Player::Accountant,
                round: state.round,
                rule: rule.into(),
            };
        }
        let Some(reply) = spend.reply(&state, &mv) else {
            break Outcome::Stalled;
        };
        if let Err(Error::Violations(v)) = check_reply(&state, &mv, &reply) {
            break Outcome::Forfeit {
                player: Player::Spendthrift,
                round: state.round,
                rule: v[0].rule.into(),
            };
        }
        let norm = reply.condition.coords()[&mv.coord].tree.norm(&reply.nu);
        records.push(RoundRecord {
            round: state.round,
            coord: mv.coord,
            eta: mv.eta,
            bound: mv.bound,
            nu: reply.nu.clone(),
            norm,
            next_level: reply.nu.len() + 1,
        });
        state = GameState {
            round: state.round + 1,
            level: reply.nu.len() + 1,
            condition: reply.condition,
        };
    };
    let fused = match outcome {
        Outcome::Forfeit { .. } => None,
        // nothing was played, so nothing is closed off
        _ if rounds == 0 => Some(start.clone()),
        _ => {
            let q = fuse(&state.condition, state.level, spend)?;
            check_fused(start, &q, &records)?;
            Some(q)
        }
    };
    Ok(GameResult {
        outcome,
        rounds: records,
        last: state.condition,
        fused,
    })
}

/// The fused condition is valid, extends the start, and its splits are
/// exactly the answers of the spendthrift, in order.
fn check_fused(start: &ProductCondition, q: &ProductCondition, records: &[RoundRecord]) -> Result<()> {
    validate_condition(q).map_err(|e| Error::Invariant(format!("fused condition invalid: {e}")))?;
    if !crate::conditions::leq(start, q) {
        return Err(Error::Invariant("fused condition does not extend the start".into()));
    }
    let got: Vec<(CoordId, Node)> = q.splits().into_iter().map(|s| (s.coord, s.node)).collect();
    let want: Vec<(CoordId, Node)> = records.iter().map(|r| (r.coord.clone(), r.nu.clone())).collect();
    if got != want {
        return Err(Error::Invariant(format!(
            "fused splits {got:?} differ from answers {want:?}"
        )));
    }
    Ok(())
}

/// Thins `p` to the sets `F`: the result extends `p`, every surviving
/// split of `p` has successors inside its `F`, and keeps at least half its
/// norm. Splits without an entry keep all successors.
pub fn thinning(p: &ProductCondition, sets: &ThinningSets) -> Result<ProductCondition> {
    validate_condition(p)?;
    if !p.is_normal_form() {
        return Err(Error::Precondition("thinning needs normal form".into()));
    }
    let splits = p.splits();
    for ((id, node), f) in sets {
        let s = splits
            .iter()
            .find(|s| s.coord == *id && s.node == *node)
            .ok_or_else(|| Error::Precondition(format!("{node:?} is not a split of {id}")))?;
        if f.is_empty() || !f.iter().all(|x| s.succ.contains(x)) {
            return Err(Error::Precondition(format!(
                "F at {node:?} is not a nonempty subset of succ"
            )));
        }
        let nf = p.coords()[id].tree.triple().norm(s.level, f.len() as u64);
        if 2 * nf < s.norm {
            return Err(Error::NormBudget {
                split: s.l,
                level: s.level,
            });
        }
    }
    let spend = Thinning { sets: sets.clone() };
    let res = play(p, &mut Bookkeeping, &spend, splits.len() + 1)?;
    let q = res
        .fused
        .ok_or_else(|| Error::Invariant(format!("thinning game ended in {:?}", res.outcome)))?;
    for s in &splits {
        let t = &q.coords()[&s.coord].tree;
        if !t.contains(&s.node) {
            continue;
        }
        let succ = t.succ(&s.node);
        let f = spend.allowed(&s.coord, &s.node, &s.succ);
        if !succ.iter().all(|x| f.contains(x)) {
            return Err(Error::Invariant(format!("{:?} keeps successors outside F", s.node)));
        }
        if succ.len() > 1 && 2 * t.norm(&s.node) < s.norm {
            return Err(Error::Invariant(format!("{:?} lost more than half its norm", s.node)));
        }
    }
    Ok(q)
}
