//! Weighted AND/OR directed acyclic graphs.
//!
//! A [`Waodag`] carries a cost for assigning each node true or false, an
//! AND/OR label per node, and a set of evidence nodes that every explanation
//! must make true. Nodes with zero in-degree are hypotheses and may be
//! assumed freely; every other node is determined by its parents.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Index of a node in declaration order.
pub type NodeId = usize;

/// Default cap on the number of hypotheses the brute-force oracle accepts.
pub const ORACLE_HYPOTHESIS_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WaodagError {
    #[error("graph contains a cycle through node `{0}`")]
    CyclicGraph(String),
    #[error("edge `{parent}` -> `{child}` references an unknown node")]
    DanglingEdge { parent: String, child: String },
    #[error("duplicate edge `{parent}` -> `{child}`")]
    DuplicateEdge { parent: String, child: String },
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("evidence references unknown node `{0}`")]
    UnknownEvidenceNode(String),
    #[error("node `{0}` has a non-finite cost")]
    NonFiniteCost(String),
    #[error("truth assignment covers {found} nodes, graph has {expected}")]
    DomainMismatch { expected: usize, found: usize },
    #[error("node `{0}` is not a hypothesis (it has parents)")]
    NotHypothesis(String),
    #[error("assignment is not an explanation")]
    NotAnExplanation,
    #[error("oracle refuses {found} hypotheses (limit {limit})")]
    OracleTooLarge { found: usize, limit: usize },
    #[error("perturbation delta must be positive and finite, got {0}")]
    NonPositiveDelta(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    And,
    Or,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::And => f.write_str("and"),
            Label::Or => f.write_str("or"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub name: String,
    pub label: Label,
    pub cost_true: f64,
    pub cost_false: f64,
}

impl Node {
    pub fn new(name: impl Into<String>, label: Label, cost_true: f64, cost_false: f64) -> Self {
        Node {
            name: name.into(),
            label,
            cost_true,
            cost_false,
        }
    }

    pub fn cost(&self, value: bool) -> f64 {
        if value {
            self.cost_true
        } else {
            self.cost_false
        }
    }
}

/// Result of the syntactic monotonicity test on node costs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    /// `cost_true > cost_false` on every node.
    Strict,
    /// `cost_true >= cost_false` on every node.
    Monotonic,
    /// The sufficient condition fails; the semantic property is not decided.
    Unknown,
}

/// Total map from nodes to booleans, indexed by [`NodeId`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TruthAssignment(Vec<bool>);

impl TruthAssignment {
    pub fn new(values: Vec<bool>) -> Self {
        TruthAssignment(values)
    }

    pub fn all(len: usize, value: bool) -> Self {
        TruthAssignment(vec![value; len])
    }

    pub fn get(&self, node: NodeId) -> bool {
        self.0[node]
    }

    pub fn set(&mut self, node: NodeId, value: bool) {
        self.0[node] = value;
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[bool] {
        &self.0
    }

    /// Nodes assigned true, in id order.
    pub fn true_nodes(&self) -> BTreeSet<NodeId> {
        (0..self.0.len()).filter(|&i| self.0[i]).collect()
    }
}

/// A set of hypothesis nodes. Also used for general node sets such as the
/// support set of an explanation.
pub type HypothesisSet = BTreeSet<NodeId>;

#[derive(Debug, Clone, PartialEq)]
pub struct Waodag {
    nodes: Vec<Node>,
    edges: Vec<(NodeId, NodeId)>,
    evidence: Vec<NodeId>,
    parents: Vec<Vec<NodeId>>,
    topo: Vec<NodeId>,
    hypotheses: Vec<NodeId>,
}

impl Waodag {
    /// Builds a graph from named nodes, named edges `(parent, child)` and
    /// named evidence nodes, then validates it.
    pub fn new<S: AsRef<str>>(
        nodes: Vec<Node>,
        edges: &[(S, S)],
        evidence: &[S],
    ) -> Result<Self, WaodagError> {
        let mut index = std::collections::HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if index.insert(node.name.clone(), i).is_some() {
                return Err(WaodagError::DuplicateNode(node.name.clone()));
            }
        }
        let mut resolved = Vec::with_capacity(edges.len());
        for (p, c) in edges {
            let (p, c) = (p.as_ref(), c.as_ref());
            match (index.get(p), index.get(c)) {
                (Some(&pi), Some(&ci)) => resolved.push((pi, ci)),
                _ => {
                    return Err(WaodagError::DanglingEdge {
                        parent: p.to_string(),
                        child: c.to_string(),
                    })
                }
            }
        }
        let mut ev = Vec::with_capacity(evidence.len());
        for name in evidence {
            let name = name.as_ref();
            match index.get(name) {
                Some(&i) => {
                    if !ev.contains(&i) {
                        ev.push(i);
                    }
                }
                None => return Err(WaodagError::UnknownEvidenceNode(name.to_string())),
            }
        }
        Self::from_indices(nodes, resolved, ev)
    }

    /// Builds a graph from index-based edges and evidence.
    pub fn from_indices(
        nodes: Vec<Node>,
        edges: Vec<(NodeId, NodeId)>,
        evidence: Vec<NodeId>,
    ) -> Result<Self, WaodagError> {
        let mut w = Waodag {
            parents: vec![Vec::new(); nodes.len()],
            nodes,
            edges,
            evidence,
            topo: Vec::new(),
            hypotheses: Vec::new(),
        };
        w.validate()?;
        for &(p, c) in &w.edges {
            w.parents[c].push(p);
        }
        w.hypotheses = (0..w.nodes.len())
            .filter(|&q| w.parents[q].is_empty())
            .collect();
        w.topo = w.topological_order()?;
        Ok(w)
    }

    /// Checks every structural invariant: edges reference known nodes and
    /// are not repeated, evidence is a subset of the nodes, costs are finite
    /// and the edge relation is acyclic.
    pub fn validate(&self) -> Result<(), WaodagError> {
        let n = self.nodes.len();
        let mut seen = BTreeSet::new();
        for &(p, c) in &self.edges {
            if p >= n || c >= n {
                return Err(WaodagError::DanglingEdge {
                    parent: self.nodes.get(p).map_or(p.to_string(), |x| x.name.clone()),
                    child: self.nodes.get(c).map_or(c.to_string(), |x| x.name.clone()),
                });
            }
            if !seen.insert((p, c)) {
                return Err(WaodagError::DuplicateEdge {
                    parent: self.nodes[p].name.clone(),
                    child: self.nodes[c].name.clone(),
                });
            }
        }
        for &q in &self.evidence {
            if q >= n {
                return Err(WaodagError::UnknownEvidenceNode(q.to_string()));
            }
        }
        for node in &self.nodes {
            if !node.cost_true.is_finite() || !node.cost_false.is_finite() {
                return Err(WaodagError::NonFiniteCost(node.name.clone()));
            }
        }
        self.topological_order().map(|_| ())
    }

    // Kahn's algorithm, smallest ready id first so the order is canonical.
    fn topological_order(&self) -> Result<Vec<NodeId>, WaodagError> {
        let n = self.nodes.len();
        let mut indeg = vec![0usize; n];
        let mut children = vec![Vec::new(); n];
        for &(p, c) in &self.edges {
            indeg[c] += 1;
            children[p].push(c);
        }
        let mut ready: BTreeSet<NodeId> = (0..n).filter(|&q| indeg[q] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(q) = ready.pop_first() {
            order.push(q);
            for &c in &children[q] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() < n {
            let culprit = (0..n).find(|&q| indeg[q] > 0).unwrap_or(0);
            return Err(WaodagError::CyclicGraph(self.nodes[culprit].name.clone()));
        }
        Ok(order)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn evidence(&self) -> &[NodeId] {
        &self.evidence
    }

    pub fn parents(&self, id: NodeId) -> &[NodeId] {
        &self.parents[id]
    }

    /// Zero in-degree nodes, in declaration order.
    pub fn hypotheses(&self) -> &[NodeId] {
        &self.hypotheses
    }

    pub fn is_hypothesis(&self, id: NodeId) -> bool {
        self.parents[id].is_empty()
    }

    pub fn topological(&self) -> &[NodeId] {
        &self.topo
    }

    pub fn find(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.name == name)
    }

    fn check_domain(&self, e: &TruthAssignment) -> Result<(), WaodagError> {
        if e.len() != self.nodes.len() {
            return Err(WaodagError::DomainMismatch {
                expected: self.nodes.len(),
                found: e.len(),
            });
        }
        Ok(())
    }

    /// The value a node must take given its parents' values. `None` for
    /// hypotheses, which are unconstrained.
    fn implied(&self, q: NodeId, e: &TruthAssignment) -> Option<bool> {
        let parents = &self.parents[q];
        if parents.is_empty() {
            return None;
        }
        Some(match self.nodes[q].label {
            Label::And => parents.iter().all(|&p| e.get(p)),
            Label::Or => parents.iter().any(|&p| e.get(p)),
        })
    }

    pub fn is_valid(&self, e: &TruthAssignment) -> Result<bool, WaodagError> {
        self.check_domain(e)?;
        Ok((0..self.nodes.len()).all(|q| self.implied(q, e).is_none_or(|v| v == e.get(q))))
    }

    pub fn is_explanation(&self, e: &TruthAssignment) -> Result<bool, WaodagError> {
        Ok(self.is_valid(e)? && self.evidence.iter().all(|&q| e.get(q)))
    }

    /// The unique valid assignment whose true hypotheses are exactly `h`.
    pub fn propagate(&self, h: &HypothesisSet) -> Result<TruthAssignment, WaodagError> {
        if let Some(&bad) = h
            .iter()
            .find(|&&q| q >= self.len() || !self.is_hypothesis(q))
        {
            let name = self
                .nodes
                .get(bad)
                .map_or(bad.to_string(), |n| n.name.clone());
            return Err(WaodagError::NotHypothesis(name));
        }
        let mut e = TruthAssignment::all(self.len(), false);
        for &q in &self.topo {
            let v = self.implied(q, &e).unwrap_or_else(|| h.contains(&q));
            e.set(q, v);
        }
        Ok(e)
    }

    /// Total cost `Σ c(q, e(q))`; defined for any assignment.
    pub fn cost(&self, e: &TruthAssignment) -> Result<f64, WaodagError> {
        self.check_domain(e)?;
        Ok(self
            .nodes
            .iter()
            .zip(e.values())
            .map(|(n, &v)| n.cost(v))
            .sum())
    }

    /// Base set (true hypotheses) and support set (all true nodes).
    pub fn base_and_support(
        &self,
        e: &TruthAssignment,
    ) -> Result<(HypothesisSet, BTreeSet<NodeId>), WaodagError> {
        self.check_domain(e)?;
        let support = e.true_nodes();
        let base = self
            .hypotheses
            .iter()
            .copied()
            .filter(|&q| e.get(q))
            .collect();
        Ok((base, support))
    }

    pub fn monotonicity_class(&self) -> Monotonicity {
        if self.nodes.iter().all(|n| n.cost_true > n.cost_false) {
            Monotonicity::Strict
        } else if self.nodes.iter().all(|n| n.cost_true >= n.cost_false) {
            Monotonicity::Monotonic
        } else {
            Monotonicity::Unknown
        }
    }

    /// True iff no proper subset of the base set of `e` yields an explanation.
    ///
    /// Only the one-removed subsets are checked: propagation is monotone in
    /// the hypothesis set, so if no maximal proper subset explains the
    /// evidence then no smaller one does.
    pub fn is_cardinal(&self, e: &TruthAssignment) -> Result<bool, WaodagError> {
        if !self.is_explanation(e)? {
            return Err(WaodagError::NotAnExplanation);
        }
        let (base, _) = self.base_and_support(e)?;
        for &h in &base {
            let mut smaller = base.clone();
            smaller.remove(&h);
            if self.is_explanation(&self.propagate(&smaller)?)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Bit vector of the base set over hypotheses in declaration order; the
    /// secondary sort key of the oracle.
    pub fn base_key(&self, e: &TruthAssignment) -> Vec<bool> {
        self.hypotheses.iter().map(|&q| e.get(q)).collect()
    }

    /// Every explanation with its cost, by nondecreasing cost and then by
    /// [`Waodag::base_key`].
    pub fn enumerate_explanations_oracle(
        &self,
        limit: usize,
    ) -> Result<Vec<(TruthAssignment, f64)>, WaodagError> {
        let h = self.hypotheses.len();
        if h > limit || h >= usize::BITS as usize {
            return Err(WaodagError::OracleTooLarge { found: h, limit });
        }
        let mut out = Vec::new();
        for mask in 0u64..(1u64 << h) {
            let set: HypothesisSet = (0..h)
                .filter(|&i| mask >> i & 1 == 1)
                .map(|i| self.hypotheses[i])
                .collect();
            let e = self.propagate(&set)?;
            if self.is_explanation(&e)? {
                let c = self.cost(&e)?;
                out.push((e, c));
            }
        }
        out.sort_by(|(ea, ca), (eb, cb)| {
            ca.total_cmp(cb)
                .then_with(|| self.base_key(ea).cmp(&self.base_key(eb)))
        });
        Ok(out)
    }

    /// Largest absolute cost in the graph.
    pub fn max_abs_cost(&self) -> f64 {
        self.nodes
            .iter()
            .flat_map(|n| [n.cost_true.abs(), n.cost_false.abs()])
            .fold(0.0, f64::max)
    }

    /// `1e-9 * (1 + max |cost|)`.
    pub fn default_delta(&self) -> f64 {
        1e-9 * (1.0 + self.max_abs_cost())
    }

    /// Copy in which every node with `cost_true <= cost_false` gets
    /// `cost_true = cost_false + delta`.
    pub fn perturb_strict(&self, delta: f64) -> Result<Waodag, WaodagError> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(WaodagError::NonPositiveDelta(delta));
        }
        let mut w = self.clone();
        for n in &mut w.nodes {
            if n.cost_true <= n.cost_false {
                n.cost_true = n.cost_false + delta;
            }
        }
        Ok(w)
    }
}

/// The graph of Tony's office habits: three hypotheses feeding one AND node
/// and one OR node, with "no answer" observed.
pub fn tony() -> Waodag {
    let nodes = vec![
        Node::new("Tony-in", Label::Or, 5.0, 0.0),
        Node::new("Tony-sleeping", Label::Or, 4.0, 0.0),
        Node::new("Tony-out", Label::Or, 8.0, 0.0),
        Node::new("phone-disconnected", Label::And, 0.0, 0.0),
        Node::new("phone-noanswer", Label::Or, 0.0, 0.0),
    ];
    let edges = [
        ("Tony-in", "phone-disconnected"),
        ("Tony-sleeping", "phone-disconnected"),
        ("phone-disconnected", "phone-noanswer"),
        ("Tony-out", "phone-noanswer"),
    ];
    Waodag::new(nodes, &edges, &["phone-noanswer"]).expect("tony graph is valid")
}
