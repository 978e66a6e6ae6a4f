//! Discrete Bayesian networks described as variables plus complete
//! conditional probability tables.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

pub type VarId = usize;

/// Default cap on the number of complete instantiation-sets the MPE oracle
/// will enumerate.
pub const ORACLE_CONFIG_LIMIT: u64 = 1 << 20;

const ROW_TOLERANCE: f64 = 1e-9;
const UNDERFLOW: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BayesError {
    #[error("parent relation has a cycle through `{0}`")]
    CyclicNetwork(String),
    #[error("row of `{variable}` given [{}] sums to {sum}", config.join(", "))]
    RowNotNormalized {
        variable: String,
        config: Vec<String>,
        sum: f64,
    },
    #[error("missing entry P({variable}={value} | {})", config.join(", "))]
    MissingCptEntry {
        variable: String,
        value: String,
        config: Vec<String>,
    },
    #[error("value `{value}` is not in the range of `{variable}`")]
    ValueOutOfRange { variable: String, value: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("variable `{0}` has an empty or repeated range")]
    BadRange(String),
    #[error("more than one table given for `{0}`")]
    DuplicateCpt(String),
    #[error("entry for `{variable}` given [{}] appears twice", config.join(", "))]
    DuplicateCptEntry {
        variable: String,
        config: Vec<String>,
    },
    #[error("table for `{variable}` lists {found} parent values, expected {expected}")]
    ParentArity {
        variable: String,
        expected: usize,
        found: usize,
    },
    #[error("probability {value} for `{variable}` is outside [0, 1]")]
    InvalidProbability { variable: String, value: f64 },
    #[error("`{variable}` is instantiated to both `{first}` and `{second}`")]
    ConflictingInstantiation {
        variable: String,
        first: String,
        second: String,
    },
    #[error("instantiation-set does not cover variable `{0}`")]
    IncompleteInstantiation(String),
    #[error("oracle refuses {found} configurations (limit {limit})")]
    OracleTooLarge { found: u64, limit: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub range: Vec<String>,
}

impl Variable {
    pub fn new<S: Into<String>>(
        name: impl Into<String>,
        range: impl IntoIterator<Item = S>,
    ) -> Self {
        Variable {
            name: name.into(),
            range: range.into_iter().map(Into::into).collect(),
        }
    }

    pub fn value_index(&self, value: &str) -> Option<usize> {
        self.range.iter().position(|v| v == value)
    }
}

/// One row of a named table: the parent values, then `(value, probability)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CptRowSpec {
    pub given: Vec<String>,
    pub probs: Vec<(String, f64)>,
}

/// A named conditional probability table, as read from a model file.
#[derive(Debug, Clone, PartialEq)]
pub struct CptSpec {
    pub child: String,
    pub parents: Vec<String>,
    pub rows: Vec<CptRowSpec>,
}

/// Conditional probability table of one variable. Rows are parent
/// configurations in mixed radix, first parent most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    parents: Vec<VarId>,
    table: Vec<f64>,
}

impl Cpt {
    pub fn parents(&self) -> &[VarId] {
        &self.parents
    }
    pub fn table(&self) -> &[f64] {
        &self.table
    }
}

/// A set of `(variable, value index)` pairs with at most one value per
/// variable.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InstantiationSet(BTreeMap<VarId, usize>);

impl InstantiationSet {
    pub fn new() -> Self {
        InstantiationSet(BTreeMap::new())
    }

    /// Adds `var = value`. Returns the already present value on conflict.
    pub fn insert(&mut self, var: VarId, value: usize) -> Result<(), usize> {
        match self.0.get(&var) {
            Some(&old) if old != value => Err(old),
            _ => {
                self.0.insert(var, value);
                Ok(())
            }
        }
    }

    pub fn get(&self, var: VarId) -> Option<usize> {
        self.0.get(&var).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, usize)> + '_ {
        self.0.iter().map(|(&k, &v)| (k, v))
    }

    /// The variables instantiated.
    pub fn span(&self) -> BTreeSet<VarId> {
        self.0.keys().copied().collect()
    }

    /// True iff every entry of `self` appears in `outer`.
    pub fn is_consistent_with(&self, outer: &InstantiationSet) -> bool {
        self.iter().all(|(k, v)| outer.get(k) == Some(v))
    }
}

impl FromIterator<(VarId, usize)> for InstantiationSet {
    fn from_iter<T: IntoIterator<Item = (VarId, usize)>>(iter: T) -> Self {
        InstantiationSet(iter.into_iter().collect())
    }
}

/// Span of an instantiation-set.
pub fn span(w: &InstantiationSet) -> BTreeSet<VarId> {
    w.span()
}

/// True iff `inner ⊆ outer`.
pub fn is_consistent(inner: &InstantiationSet, outer: &InstantiationSet) -> bool {
    inner.is_consistent_with(outer)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesianNetwork {
    variables: Vec<Variable>,
    cpts: Vec<Cpt>,
    topo: Vec<VarId>,
}

impl BayesianNetwork {
    /// Builds a network from named tables. Every variable needs exactly one
    /// table, and every `(value, parent configuration)` entry must be given.
    pub fn new(variables: Vec<Variable>, cpts: Vec<CptSpec>) -> Result<Self, BayesError> {
        let mut index = HashMap::new();
        for (i, v) in variables.iter().enumerate() {
            if index.insert(v.name.as_str(), i).is_some() {
                return Err(BayesError::DuplicateVariable(v.name.clone()));
            }
            let distinct: BTreeSet<&String> = v.range.iter().collect();
            if v.range.is_empty() || distinct.len() != v.range.len() {
                return Err(BayesError::BadRange(v.name.clone()));
            }
        }
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| BayesError::UnknownVariable(name.to_string()))
        };

        let mut parents: Vec<Option<Vec<VarId>>> = vec![None; variables.len()];
        let mut tables: Vec<Vec<f64>> = vec![Vec::new(); variables.len()];
        for spec in &cpts {
            let child = lookup(&spec.child)?;
            if parents[child].is_some() {
                return Err(BayesError::DuplicateCpt(spec.child.clone()));
            }
            let ps = spec
                .parents
                .iter()
                .map(|p| lookup(p))
                .collect::<Result<Vec<_>, _>>()?;
            let configs: usize = ps.iter().map(|&p| variables[p].range.len()).product();
            let r = variables[child].range.len();
            let mut table = vec![f64::NAN; configs * r];
            let mut seen = vec![false; configs];
            for row in &spec.rows {
                if row.given.len() != ps.len() {
                    return Err(BayesError::ParentArity {
                        variable: spec.child.clone(),
                        expected: ps.len(),
                        found: row.given.len(),
                    });
                }
                let mut config = 0;
                for (&p, value) in ps.iter().zip(&row.given) {
                    let vi = variables[p].value_index(value).ok_or_else(|| {
                        BayesError::ValueOutOfRange {
                            variable: variables[p].name.clone(),
                            value: value.clone(),
                        }
                    })?;
                    config = config * variables[p].range.len() + vi;
                }
                if std::mem::replace(&mut seen[config], true) {
                    return Err(BayesError::DuplicateCptEntry {
                        variable: spec.child.clone(),
                        config: row.given.clone(),
                    });
                }
                for (value, p) in &row.probs {
                    let a = variables[child].value_index(value).ok_or_else(|| {
                        BayesError::ValueOutOfRange {
                            variable: spec.child.clone(),
                            value: value.clone(),
                        }
                    })?;
                    table[config * r + a] = *p;
                }
            }
            parents[child] = Some(ps);
            tables[child] = table;
        }

        let mut out_cpts = Vec::with_capacity(variables.len());
        for (i, (ps, table)) in parents.into_iter().zip(tables).enumerate() {
            let Some(ps) = ps else {
                return Err(BayesError::MissingCptEntry {
                    variable: variables[i].name.clone(),
                    value: variables[i].range[0].clone(),
                    config: Vec::new(),
                });
            };
            out_cpts.push(Cpt { parents: ps, table });
        }
        let mut bn = BayesianNetwork {
            variables,
            cpts: out_cpts,
            topo: Vec::new(),
        };
        bn.validate()?;
        bn.topo = bn.topological_order()?;
        Ok(bn)
    }

    /// Builds a network from index-based parents and flat tables laid out as
    /// documented on [`Cpt`].
    pub fn from_tables(
        variables: Vec<Variable>,
        parents: Vec<Vec<VarId>>,
        tables: Vec<Vec<f64>>,
    ) -> Result<Self, BayesError> {
        let cpts = parents
            .into_iter()
            .zip(tables)
            .map(|(parents, table)| Cpt { parents, table })
            .collect();
        let mut bn = BayesianNetwork {
            variables,
            cpts,
            topo: Vec::new(),
        };
        bn.validate()?;
        bn.topo = bn.topological_order()?;
        Ok(bn)
    }

    pub fn validate(&self) -> Result<(), BayesError> {
        let n = self.variables.len();
        if self.cpts.len() != n {
            let missing = &self.variables[self.cpts.len().min(n.saturating_sub(1))];
            return Err(BayesError::MissingCptEntry {
                variable: missing.name.clone(),
                value: missing.range.first().cloned().unwrap_or_default(),
                config: Vec::new(),
            });
        }
        for (i, v) in self.variables.iter().enumerate() {
            if v.range.is_empty() {
                return Err(BayesError::BadRange(v.name.clone()));
            }
            if let Some(&p) = self.cpts[i].parents.iter().find(|&&p| p >= n) {
                return Err(BayesError::UnknownVariable(p.to_string()));
            }
        }
        self.topological_order()?;
        for (i, var) in self.variables.iter().enumerate() {
            let cpt = &self.cpts[i];
            let r = var.range.len();
            let configs = self.num_configs(i);
            if cpt.table.len() != configs * r {
                return Err(BayesError::MissingCptEntry {
                    variable: var.name.clone(),
                    value: var.range[0].clone(),
                    config: Vec::new(),
                });
            }
            for c in 0..configs {
                let row = &cpt.table[c * r..(c + 1) * r];
                let names = || self.config_names(i, c);
                if let Some(a) = row.iter().position(|p| p.is_nan()) {
                    return Err(BayesError::MissingCptEntry {
                        variable: var.name.clone(),
                        value: var.range[a].clone(),
                        config: names(),
                    });
                }
                if let Some(&p) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                    return Err(BayesError::InvalidProbability {
                        variable: var.name.clone(),
                        value: p,
                    });
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_TOLERANCE {
                    return Err(BayesError::RowNotNormalized {
                        variable: var.name.clone(),
                        config: names(),
                        sum,
                    });
                }
            }
        }
        Ok(())
    }

    fn topological_order(&self) -> Result<Vec<VarId>, BayesError> {
        let n = self.variables.len();
        let mut indeg = vec![0usize; n];
        let mut children = vec![Vec::new(); n];
        for (c, cpt) in self.cpts.iter().enumerate() {
            for &p in &cpt.parents {
                indeg[c] += 1;
                children[p].push(c);
            }
        }
        let mut ready: BTreeSet<VarId> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &c in &children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() < n {
            let culprit = (0..n).find(|&v| indeg[v] > 0).unwrap_or(0);
            return Err(BayesError::CyclicNetwork(
                self.variables[culprit].name.clone(),
            ));
        }
        Ok(order)
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id]
    }

    pub fn find(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn range_len(&self, id: VarId) -> usize {
        self.variables[id].range.len()
    }

    pub fn parents(&self, id: VarId) -> &[VarId] {
        &self.cpts[id].parents
    }

    pub fn cpt(&self, id: VarId) -> &Cpt {
        &self.cpts[id]
    }

    /// A topological order of the variables, smallest ready id first.
    pub fn topological(&self) -> &[VarId] {
        &self.topo
    }

    pub fn num_configs(&self, id: VarId) -> usize {
        self.cpts[id]
            .parents
            .iter()
            .map(|&p| self.range_len(p))
            .product()
    }

    /// Parent value indices of configuration `config` of `id`.
    pub fn config_values(&self, id: VarId, mut config: usize) -> Vec<usize> {
        let parents = &self.cpts[id].parents;
        let mut values = vec![0; parents.len()];
        for (slot, &p) in values.iter_mut().zip(parents).rev() {
            let r = self.range_len(p);
            *slot = config % r;
            config /= r;
        }
        values
    }

    fn config_names(&self, id: VarId, config: usize) -> Vec<String> {
        self.config_values(id, config)
            .iter()
            .zip(&self.cpts[id].parents)
            .map(|(&v, &p)| self.variables[p].range[v].clone())
            .collect()
    }

    pub fn config_index(&self, id: VarId, parent_values: &[usize]) -> usize {
        self.cpts[id]
            .parents
            .iter()
            .zip(parent_values)
            .fold(0, |acc, (&p, &v)| acc * self.range_len(p) + v)
    }

    /// `P(id = value | configuration)`.
    pub fn entry(&self, id: VarId, value: usize, config: usize) -> f64 {
        self.cpts[id].table[config * self.range_len(id) + value]
    }

    /// Total number of table entries `|P|`.
    pub fn entry_count(&self) -> usize {
        self.cpts.iter().map(|c| c.table.len()).sum()
    }

    /// Sum of range sizes over all variables.
    pub fn range_total(&self) -> usize {
        self.variables.iter().map(|v| v.range.len()).sum()
    }

    /// Product of range sizes, saturating.
    pub fn config_space(&self) -> u64 {
        self.variables
            .iter()
            .fold(1u64, |acc, v| acc.saturating_mul(v.range.len() as u64))
    }

    /// Builds an instantiation-set from `(variable, value)` names.
    pub fn instantiation<S: AsRef<str>>(
        &self,
        pairs: &[(S, S)],
    ) -> Result<InstantiationSet, BayesError> {
        let mut w = InstantiationSet::new();
        for (var, value) in pairs {
            let (var, value) = (var.as_ref(), value.as_ref());
            let id = self
                .find(var)
                .ok_or_else(|| BayesError::UnknownVariable(var.to_string()))?;
            let vi = self.variables[id].value_index(value).ok_or_else(|| {
                BayesError::ValueOutOfRange {
                    variable: var.to_string(),
                    value: value.to_string(),
                }
            })?;
            w.insert(id, vi)
                .map_err(|old| BayesError::ConflictingInstantiation {
                    variable: var.to_string(),
                    first: self.variables[id].range[old].clone(),
                    second: value.to_string(),
                })?;
        }
        Ok(w)
    }

    /// Checks that every entry names a known variable and an in-range value.
    pub fn check_instantiation(&self, w: &InstantiationSet) -> Result<(), BayesError> {
        for (var, value) in w.iter() {
            let v = self
                .variables
                .get(var)
                .ok_or_else(|| BayesError::UnknownVariable(var.to_string()))?;
            if value >= v.range.len() {
                return Err(BayesError::ValueOutOfRange {
                    variable: v.name.clone(),
                    value: value.to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn is_complete(&self, w: &InstantiationSet) -> Result<bool, BayesError> {
        self.check_instantiation(w)?;
        Ok(w.len() == self.variables.len())
    }

    /// Like [`BayesianNetwork::is_complete`], naming the first uncovered variable.
    pub fn require_complete(&self, w: &InstantiationSet) -> Result<(), BayesError> {
        self.check_instantiation(w)?;
        match (0..self.len()).find(|&v| w.get(v).is_none()) {
            Some(v) => Err(BayesError::IncompleteInstantiation(
                self.variables[v].name.clone(),
            )),
            None => Ok(()),
        }
    }

    fn factors<'a>(&'a self, w: &'a InstantiationSet) -> impl Iterator<Item = f64> + 'a {
        (0..self.len()).map(move |v| {
            let pv: Vec<usize> = self.cpts[v]
                .parents
                .iter()
                .map(|&p| w.get(p).expect("complete"))
                .collect();
            self.entry(v, w.get(v).expect("complete"), self.config_index(v, &pv))
        })
    }

    /// Natural log of the chain-rule joint of a complete instantiation-set.
    pub fn log_probability(&self, w: &InstantiationSet) -> Result<f64, BayesError> {
        self.require_complete(w)?;
        Ok(self.factors(w).map(f64::ln).sum())
    }

    /// Chain-rule joint probability of a complete instantiation-set.
    pub fn probability(&self, w: &InstantiationSet) -> Result<f64, BayesError> {
        self.require_complete(w)?;
        let p: f64 = self.factors(w).product();
        if p > 0.0 && p < UNDERFLOW {
            return Ok(self.log_probability(w)?.exp());
        }
        Ok(p)
    }

    /// Every complete instantiation-set consistent with `e`, by
    /// nonincreasing probability and then lexicographically by value index in
    /// variable order.
    pub fn enumerate_mpe_oracle(
        &self,
        e: &InstantiationSet,
        limit: u64,
    ) -> Result<Vec<(InstantiationSet, f64)>, BayesError> {
        self.check_instantiation(e)?;
        let space = self.config_space();
        if space > limit {
            return Err(BayesError::OracleTooLarge {
                found: space,
                limit,
            });
        }
        let free: Vec<VarId> = (0..self.len()).filter(|&v| e.get(v).is_none()).collect();
        let mut values: Vec<usize> = (0..self.len()).map(|v| e.get(v).unwrap_or(0)).collect();
        let mut out = Vec::new();
        loop {
            let w: InstantiationSet = values.iter().copied().enumerate().collect();
            let p = self.probability(&w)?;
            out.push((values.clone(), w, p));
            // odometer over the free variables, last one fastest
            let mut i = free.len();
            loop {
                if i == 0 {
                    out.sort_by(|a, b| b.2.total_cmp(&a.2).then_with(|| a.0.cmp(&b.0)));
                    return Ok(out.into_iter().map(|(_, w, p)| (w, p)).collect());
                }
                i -= 1;
                let v = free[i];
                values[v] += 1;
                if values[v] < self.range_len(v) {
                    break;
                }
                values[v] = 0;
            }
        }
    }
}

/// The three-variable network with `C` depending on `A` and `B`. `p_c` holds
/// `P(C=true | A, B)` for `(A, B)` = (t,t), (t,f), (f,t), (f,f); `p_a` and `p_b`
/// are the priors of `A=true` and `B=true`. Ranges are `["true", "false"]`.
pub fn abc_network(p_c: [f64; 4], p_a: f64, p_b: f64) -> BayesianNetwork {
    let tf = ["true", "false"];
    let variables = vec![
        Variable::new("A", tf),
        Variable::new("B", tf),
        Variable::new("C", tf),
    ];
    let table_c = p_c.iter().flat_map(|&p| [p, 1.0 - p]).collect();
    BayesianNetwork::from_tables(
        variables,
        vec![vec![], vec![], vec![0, 1]],
        vec![vec![p_a, 1.0 - p_a], vec![p_b, 1.0 - p_b], table_c],
    )
    .expect("valid network")
}

/// [`abc_network`] with `P(C=t|A,B)` = 0.9, 0.7, 0.4, 0.1 and priors 0.6, 0.3.
pub fn abc_network_default() -> BayesianNetwork {
    abc_network([0.9, 0.7, 0.4, 0.1], 0.6, 0.3)
}
