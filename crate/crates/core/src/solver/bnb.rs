use std::cmp::Ordering;
use std::collections::BinaryHeap;

use ordered_float::OrderedFloat;

use super::{BnbConfig, SolverError};
use crate::constraint::{Assignment01, ConstraintSystem, LinearConstraint, FEASIBILITY_TOLERANCE};
use crate::lp::{relax, LpConfig, LpSession, LpStatus};

/// Counters accumulated over one or more searches.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BnbStats {
    pub searches: usize,
    pub nodes: usize,
    pub lp_iterations: usize,
    /// Pool cuts pulled into some relaxation.
    pub lazy_rows: usize,
    pub max_depth: usize,
    /// A child bound below its parent's, or a 0-1 leaf cheaper than its
    /// node's bound. Nonzero means the LP bound is not a lower bound.
    pub weak_duality_violations: usize,
}

impl BnbStats {
    pub fn absorb(&mut self, other: &BnbStats) {
        self.searches += other.searches;
        self.nodes += other.nodes;
        self.lp_iterations += other.lp_iterations;
        self.lazy_rows += other.lazy_rows;
        self.max_depth = self.max_depth.max(other.max_depth);
        self.weak_duality_violations += other.weak_duality_violations;
    }
}

/// An LP relaxation plus the set of pool cuts it already contains.
///
/// Pool cuts enter only once the relaxation's optimum violates them, so
/// the optimum equals that of the relaxation with every pool cut present.
#[derive(Debug, Clone)]
pub(crate) struct Relaxation {
    session: LpSession,
    active: Vec<bool>,
}

impl Relaxation {
    pub(crate) fn new(system: &ConstraintSystem, cfg: LpConfig) -> Self {
        Relaxation {
            session: LpSession::new(relax(system), cfg),
            active: Vec::new(),
        }
    }

    /// Solves and then adds violated pool cuts until none remain. `None`
    /// when infeasible.
    fn evaluate(
        &mut self,
        pool: &[LinearConstraint],
        stats: &mut BnbStats,
    ) -> Result<Option<f64>, SolverError> {
        self.active.resize(pool.len(), false);
        let tol = self.session.config().feasibility_tol;
        loop {
            let status = self.session.solve()?;
            stats.lp_iterations += self.session.last_iterations();
            if status == LpStatus::Infeasible {
                return Ok(None);
            }
            let x = self.session.values();
            let mut added = false;
            for (k, cut) in pool.iter().enumerate() {
                if !self.active[k] && !cut.holds_at(&x, tol) {
                    self.session.add_row(cut.clone())?;
                    self.active[k] = true;
                    stats.lazy_rows += 1;
                    added = true;
                }
            }
            if !added {
                return Ok(Some(self.session.objective()));
            }
        }
    }
}

struct Node {
    bound: f64,
    seq: usize,
    depth: usize,
    relaxation: Relaxation,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    /// Reversed so that the max-heap pops the smallest `(bound, seq)`.
    fn cmp(&self, other: &Self) -> Ordering {
        (OrderedFloat(other.bound), other.seq).cmp(&(OrderedFloat(self.bound), self.seq))
    }
}

fn slack(bound: f64) -> f64 {
    1e-7 * (1.0 + bound.abs())
}

struct Search<'a> {
    system: &'a ConstraintSystem,
    pool: &'a [LinearConstraint],
    cfg: &'a BnbConfig,
    stats: BnbStats,
    incumbent: Option<(Assignment01, f64)>,
    /// No 0-1 solution costs less than this.
    floor: f64,
    found: &'a mut Vec<(Assignment01, f64)>,
    heap: BinaryHeap<Node>,
    seq: usize,
}

impl Search<'_> {
    fn cutoff(&self) -> f64 {
        self.incumbent
            .as_ref()
            .map_or(f64::INFINITY, |(_, c)| c - self.cfg.prune_eps)
    }

    /// The incumbent has reached the floor.
    fn settled(&self) -> bool {
        self.incumbent
            .as_ref()
            .is_some_and(|(_, c)| *c <= self.floor + self.cfg.prune_eps)
    }

    fn count_node(&mut self, depth: usize) -> Result<(), SolverError> {
        self.stats.nodes += 1;
        self.stats.max_depth = self.stats.max_depth.max(depth);
        if self.stats.nodes > self.cfg.node_limit {
            return Err(SolverError::NodeLimitExceeded(self.cfg.node_limit));
        }
        Ok(())
    }

    /// Most fractional variable, ties by lowest index; `None` when integral.
    fn branching_variable(&self, x: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (v, &xv) in x.iter().enumerate() {
            let frac = xv.min(1.0 - xv);
            if frac > self.cfg.integrality_tol && best.is_none_or(|(_, f)| frac > f) {
                best = Some((v, frac));
            }
        }
        best.map(|(v, _)| v)
    }

    fn holds_everywhere(&self, s: &Assignment01) -> bool {
        let values = s.as_f64();
        self.system.satisfies(s).unwrap_or(false)
            && self
                .pool
                .iter()
                .all(|c| c.holds_at(&values, FEASIBILITY_TOLERANCE))
    }

    /// Records an integral optimum as incumbent or queues the node.
    fn place(
        &mut self,
        bound: f64,
        depth: usize,
        relaxation: Relaxation,
    ) -> Result<(), SolverError> {
        let x = relaxation.session.values();
        if self.branching_variable(&x).is_none() {
            let s = Assignment01::round(&x);
            if self.holds_everywhere(&s) {
                let cost = self.system.objective(&s)?;
                if cost < bound - slack(bound) {
                    self.stats.weak_duality_violations += 1;
                    log::warn!("leaf cost {cost} below node bound {bound}");
                }
                self.found.push((s.clone(), cost));
                if cost < self.cutoff() {
                    log::debug!("incumbent {cost} at depth {depth}");
                    self.incumbent = Some((s, cost));
                }
                return Ok(());
            }
            log::warn!("rounded LP point violates the system; branching on it");
        }
        self.seq += 1;
        self.heap.push(Node {
            bound,
            seq: self.seq,
            depth,
            relaxation,
        });
        Ok(())
    }

    fn branch(&mut self, node: Node) -> Result<(), SolverError> {
        let x = node.relaxation.session.values();
        let var = self.branching_variable(&x).unwrap_or_else(|| {
            // Integral but rejected by the system: branch on the largest deviation.
            (0..x.len())
                .max_by(|&a, &b| {
                    let da = (x[a] - x[a].round()).abs();
                    let db = (x[b] - x[b].round()).abs();
                    da.total_cmp(&db).then(b.cmp(&a))
                })
                .expect("nonempty")
        });
        let Node {
            bound: parent,
            depth,
            relaxation,
            ..
        } = node;
        if relaxation.session.problem().lower()[var] == relaxation.session.problem().upper()[var] {
            return Ok(());
        }
        let mut last = Some(relaxation);
        for value in [0.0, 1.0] {
            if self.settled() {
                break;
            }
            self.count_node(depth + 1)?;
            let mut child = if value == 0.0 {
                last.clone().expect("present")
            } else {
                last.take().expect("present")
            };
            child.session.set_bounds(var, value, value)?;
            let Some(bound) = child.evaluate(self.pool, &mut self.stats)? else {
                continue;
            };
            if bound < parent - slack(parent) {
                self.stats.weak_duality_violations += 1;
                log::warn!("child bound {bound} below parent bound {parent}");
            }
            if bound >= self.cutoff() {
                continue;
            }
            self.place(bound, depth + 1, child)?;
        }
        Ok(())
    }
}

/// Starting points for [`search`]. `incumbent` must be a 0-1 solution of
/// the system and the pool; `floor` a lower bound on every such solution.
/// Every integral leaf met during the search is appended to `found`.
pub(crate) struct Hints<'a> {
    pub incumbent: Option<(Assignment01, f64)>,
    pub floor: f64,
    pub found: &'a mut Vec<(Assignment01, f64)>,
}

/// Best-first branch and bound from `root`; rows added to `root` while
/// evaluating it stay there.
pub(crate) fn search(
    system: &ConstraintSystem,
    pool: &[LinearConstraint],
    root: &mut Relaxation,
    cfg: &BnbConfig,
    hints: Hints<'_>,
) -> Result<(Option<(Assignment01, f64)>, BnbStats), SolverError> {
    let mut s = Search {
        system,
        pool,
        cfg,
        stats: BnbStats {
            searches: 1,
            ..BnbStats::default()
        },
        incumbent: hints.incumbent,
        floor: hints.floor,
        found: hints.found,
        heap: BinaryHeap::new(),
        seq: 0,
    };
    s.count_node(0)?;
    if let Some(bound) = root.evaluate(pool, &mut s.stats)? {
        s.place(bound, 0, root.clone())?;
    }
    while let Some(node) = s.heap.pop() {
        if node.bound >= s.cutoff() || s.settled() {
            break;
        }
        s.branch(node)?;
    }
    Ok((s.incumbent, s.stats))
}

/// An optimal 0-1 solution of `l` with its cost, or `None` if there is none.
pub fn branch_and_bound(
    l: &ConstraintSystem,
    cfg: &BnbConfig,
) -> Result<(Option<(Assignment01, f64)>, BnbStats), SolverError> {
    let mut root = Relaxation::new(l, cfg.lp);
    let hints = Hints {
        incumbent: None,
        floor: f64::NEG_INFINITY,
        found: &mut Vec::new(),
    };
    search(l, &[], &mut root, cfg, hints)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::{encode_waodag, Relation};
    use crate::waodag::tony;

    #[test]
    fn tony_optimum() {
        let enc = encode_waodag(&tony(), true).unwrap();
        let (best, stats) = branch_and_bound(&enc.system, &BnbConfig::default()).unwrap();
        let (s, cost) = best.unwrap();
        assert_eq!(cost, 8.0);
        assert_eq!(s.values(), &[false, false, true, false, true]);
        assert_eq!(stats.weak_duality_violations, 0);
    }

    #[test]
    fn infeasible_system_has_no_solution() {
        let mut l = ConstraintSystem::new();
        l.add_variable("x", 1.0, 0.0).unwrap();
        l.add_constraint(LinearConstraint::new(vec![(1.0, 0)], Relation::Ge, 1.0))
            .unwrap();
        l.add_constraint(LinearConstraint::new(vec![(1.0, 0)], Relation::Le, 0.0))
            .unwrap();
        let (best, _) = branch_and_bound(&l, &BnbConfig::default()).unwrap();
        assert!(best.is_none());
    }

    #[test]
    fn fractional_relaxation_needs_branching() {
        // min -x0 - x1 - x2 with pairwise x_i + x_j <= 1: LP 1.5, integer 1.
        let mut l = ConstraintSystem::new();
        for i in 0..3 {
            l.add_variable(format!("x{i}"), -1.0, 0.0).unwrap();
        }
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            l.add_constraint(LinearConstraint::new(
                vec![(1.0, a), (1.0, b)],
                Relation::Le,
                1.0,
            ))
            .unwrap();
        }
        let (best, stats) = branch_and_bound(&l, &BnbConfig::default()).unwrap();
        assert_eq!(best.unwrap().1, -1.0);
        assert!(stats.nodes > 1);
        assert_eq!(stats.weak_duality_violations, 0);
    }

    #[test]
    fn node_limit() {
        let mut l = ConstraintSystem::new();
        for i in 0..3 {
            l.add_variable(format!("x{i}"), -1.0, 0.0).unwrap();
        }
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            l.add_constraint(LinearConstraint::new(
                vec![(1.0, a), (1.0, b)],
                Relation::Le,
                1.0,
            ))
            .unwrap();
        }
        let cfg = BnbConfig {
            node_limit: 1,
            ..BnbConfig::default()
        };
        assert_eq!(
            branch_and_bound(&l, &cfg).unwrap_err(),
            SolverError::NodeLimitExceeded(1)
        );
    }
}
