//! Seeded random instances.
//!
//! Graphs are layered: hypotheses `h0..` come first and every later node
//! `n0..` draws one to three parents among the nodes before it, so the
//! result is acyclic and the all-hypotheses-true assignment makes every node
//! true. Costs are small integers, which keeps ties exact.
//!
//! Networks draw each table row as `p_i = f + (1 - f r) u_i / Σ u` with
//! `u_i` uniform on `[0, 1)`, range size `r` and floor `f = 0.05`, so no
//! entry is closer than `f` to 0 or 1. With `allow_extreme` the floor is 0
//! and about one row in five is deterministic.
//!
//! Linear programs have up to 30 variables in `[0, 1]` and small integer
//! rows built around an anchor point on the half-integer grid, so most are
//! feasible; about one row in seven is shifted past the anchor.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bayes::{BayesianNetwork, InstantiationSet, Variable};
use crate::constraint::{LinearConstraint, Relation};
use crate::lp::{LpChange, LpProblem};
use crate::waodag::{Label, Node, Waodag};

pub const PROBABILITY_FLOOR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostProfile {
    /// `cost_true > cost_false` on every node.
    Strict,
    /// `cost_true >= cost_false` everywhere, with equality on some nodes.
    Monotonic,
    /// Arbitrary signs.
    Any,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WaodagGenConfig {
    pub max_hypotheses: usize,
    pub max_nodes: usize,
    pub max_parents: usize,
    pub max_cost: i32,
    pub profile: CostProfile,
}

impl Default for WaodagGenConfig {
    fn default() -> Self {
        WaodagGenConfig {
            max_hypotheses: 10,
            max_nodes: 25,
            max_parents: 3,
            max_cost: 10,
            profile: CostProfile::Monotonic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BayesGenConfig {
    pub max_variables: usize,
    pub max_range: usize,
    pub max_parents: usize,
    pub allow_extreme: bool,
}

impl Default for BayesGenConfig {
    fn default() -> Self {
        BayesGenConfig {
            max_variables: 6,
            max_range: 3,
            max_parents: 2,
            allow_extreme: false,
        }
    }
}

fn costs(rng: &mut ChaCha8Rng, profile: CostProfile, hypothesis: bool, max: i32) -> (f64, f64) {
    let (t, f) = match profile {
        CostProfile::Strict if hypothesis => (rng.gen_range(1..=max), 0),
        CostProfile::Strict => (rng.gen_range(1..=2), 0),
        CostProfile::Monotonic if hypothesis => (rng.gen_range(0..=max), 0),
        CostProfile::Monotonic => (if rng.gen_bool(0.25) { 1 } else { 0 }, 0),
        CostProfile::Any => (rng.gen_range(-3..=max), rng.gen_range(0..=3)),
    };
    (t as f64, f as f64)
}

pub fn random_waodag(seed: u64, cfg: &WaodagGenConfig) -> Waodag {
    assert!(cfg.max_hypotheses >= 1 && cfg.max_nodes >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = rng.gen_range(1..=cfg.max_hypotheses.min(cfg.max_nodes - 1));
    let internal = rng.gen_range(1..=cfg.max_nodes - h);
    let mut nodes = Vec::with_capacity(h + internal);
    let mut edges = Vec::new();
    for i in 0..h {
        let label = if rng.gen_bool(0.5) {
            Label::And
        } else {
            Label::Or
        };
        let (t, f) = costs(&mut rng, cfg.profile, true, cfg.max_cost);
        nodes.push(Node::new(format!("h{i}"), label, t, f));
    }
    for i in 0..internal {
        let id = h + i;
        let label = if rng.gen_bool(0.5) {
            Label::And
        } else {
            Label::Or
        };
        let (t, f) = costs(&mut rng, cfg.profile, false, cfg.max_cost);
        nodes.push(Node::new(format!("n{i}"), label, t, f));
        let k = rng.gen_range(1..=cfg.max_parents.min(id));
        let mut parents = sample(&mut rng, id, k).into_vec();
        parents.sort_unstable();
        edges.extend(parents.into_iter().map(|p| (p, id)));
    }
    let picks = rng.gen_range(1..=internal.min(2));
    let mut evidence: Vec<usize> = sample(&mut rng, internal, picks)
        .into_iter()
        .map(|i| h + i)
        .collect();
    evidence.sort_unstable();
    Waodag::from_indices(nodes, edges, evidence).expect("layered graphs are valid")
}

fn random_row(rng: &mut ChaCha8Rng, r: usize, allow_extreme: bool) -> Vec<f64> {
    if allow_extreme && rng.gen_bool(0.2) {
        let hot = rng.gen_range(0..r);
        return (0..r).map(|a| if a == hot { 1.0 } else { 0.0 }).collect();
    }
    let floor = if allow_extreme {
        0.0
    } else {
        PROBABILITY_FLOOR
    };
    let u: Vec<f64> = (0..r).map(|_| rng.gen::<f64>() + 1e-9).collect();
    let total: f64 = u.iter().sum();
    let mut row: Vec<f64> = u
        .iter()
        .map(|ui| floor + (1.0 - floor * r as f64) * ui / total)
        .collect();
    let rest: f64 = row[..r - 1].iter().sum();
    row[r - 1] = 1.0 - rest;
    row
}

pub fn random_bayesnet(seed: u64, cfg: &BayesGenConfig) -> BayesianNetwork {
    assert!(cfg.max_variables >= 1 && cfg.max_range >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=cfg.max_variables);
    let ranges: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=cfg.max_range)).collect();
    let variables = ranges
        .iter()
        .enumerate()
        .map(|(i, &r)| Variable::new(format!("X{i}"), (0..r).map(|a| format!("v{a}"))))
        .collect();
    let mut parents = Vec::with_capacity(n);
    let mut tables = Vec::with_capacity(n);
    for (i, &r) in ranges.iter().enumerate() {
        let k = rng.gen_range(0..=cfg.max_parents.min(i));
        let mut ps = sample(&mut rng, i.max(1), k).into_vec();
        ps.sort_unstable();
        let configs: usize = ps.iter().map(|&p| ranges[p]).product();
        let table = (0..configs)
            .flat_map(|_| random_row(&mut rng, r, cfg.allow_extreme))
            .collect();
        parents.push(ps);
        tables.push(table);
    }
    BayesianNetwork::from_tables(variables, parents, tables).expect("generated rows are normalized")
}

/// Observes each variable with probability `p`, at a uniform value.
pub fn random_evidence(bn: &BayesianNetwork, seed: u64, p: f64) -> InstantiationSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut e = InstantiationSet::new();
    for v in 0..bn.len() {
        let observed = rng.gen_bool(p);
        let value = rng.gen_range(0..bn.range_len(v));
        if observed {
            e.insert(v, value).expect("fresh variable");
        }
    }
    e
}

/// A stream of random linear programs and modifications of them.
#[derive(Debug, Clone)]
pub struct LpGen {
    rng: ChaCha8Rng,
}

impl LpGen {
    pub fn new(seed: u64) -> Self {
        LpGen {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// A row over `n` variables whose slack at `anchor` is usually nonnegative.
    pub fn row(&mut self, n: usize, anchor: &[f64]) -> LinearConstraint {
        let rng = &mut self.rng;
        let k = rng.gen_range(1..=n.min(6));
        let terms: Vec<(f64, usize)> = (0..k)
            .map(|_| (rng.gen_range(-3..=3) as f64, rng.gen_range(0..n)))
            .collect();
        let rel = match rng.gen_range(0..5) {
            0 | 1 => Relation::Le,
            2 | 3 => Relation::Ge,
            _ => Relation::Eq,
        };
        let act: f64 = terms.iter().map(|&(c, v)| c * anchor[v]).sum();
        let shift = rng.gen_range(-1..=1) as f64;
        let rhs = match rel {
            Relation::Le => act + shift.max(0.0) - if rng.gen_bool(0.15) { 2.0 } else { 0.0 },
            Relation::Ge => act - shift.max(0.0) + if rng.gen_bool(0.15) { 2.0 } else { 0.0 },
            Relation::Eq => act,
        };
        LinearConstraint::new(terms, rel, rhs)
    }

    /// A problem and its anchor point.
    pub fn problem(&mut self) -> (LpProblem, Vec<f64>) {
        let n = self.rng.gen_range(1..=30);
        let cost = (0..n).map(|_| self.rng.gen_range(-5.0..5.0)).collect();
        let mut p = LpProblem::new(cost, self.rng.gen_range(-1.0..1.0)).expect("finite costs");
        let anchor: Vec<f64> = (0..n)
            .map(|_| self.rng.gen_range(0..=2) as f64 / 2.0)
            .collect();
        for _ in 0..self.rng.gen_range(0..=n) {
            let row = self.row(n, &anchor);
            p.add_row(row).expect("rows use declared variables");
        }
        (p, anchor)
    }

    /// A new row or a fixing of one variable, equally often.
    pub fn change(&mut self, p: &LpProblem, anchor: &[f64]) -> LpChange {
        let n = p.num_vars();
        if self.rng.gen_bool(0.5) {
            LpChange::Row(self.row(n, anchor))
        } else {
            let var = self.rng.gen_range(0..n);
            let (lower, upper) = match self.rng.gen_range(0..3) {
                0 => (0.0, 0.0),
                1 => (1.0, 1.0),
                _ => (0.0, 0.5),
            };
            LpChange::Bounds { var, lower, upper }
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Applies `change` to `p` as a from-scratch model.
pub fn apply_lp_change(p: &mut LpProblem, change: &LpChange) {
    match change {
        LpChange::Row(row) => p.add_row(row.clone()).expect("rows use declared variables"),
        LpChange::Bounds { var, lower, upper } => {
            p.set_bounds(*var, *lower, *upper).expect("valid bounds")
        }
    }
}
