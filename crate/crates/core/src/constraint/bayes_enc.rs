use super::{Assignment01, ConstraintError, ConstraintSystem, LinearConstraint, Relation};
use crate::bayes::{BayesError, BayesianNetwork, InstantiationSet, VarId};

/// Probabilities below this are treated as zero.
pub const DEFAULT_ZERO_EPSILON: f64 = 1e-12;

/// What to do with table entries whose `-ln P` would be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZeroProbPolicy {
    /// Cost entries with `P < epsilon` as `-ln epsilon`.
    Clamp { epsilon: f64 },
    /// Refuse networks with any entry `P < epsilon`.
    Reject { epsilon: f64 },
}

impl Default for ZeroProbPolicy {
    fn default() -> Self {
        ZeroProbPolicy::Clamp {
            epsilon: DEFAULT_ZERO_EPSILON,
        }
    }
}

/// The conditional variable `q[child=value | parents=config]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conditional {
    pub var: usize,
    pub child: VarId,
    pub value: usize,
    pub config: usize,
    /// `(parent, value index)` for each parent in table order.
    pub given: Vec<(VarId, usize)>,
    pub probability: f64,
}

/// A constraint system induced by a Bayesian network.
///
/// Variables are laid out as all indicators `A=a` (grouped by network
/// variable, in range order) followed by all conditional variables (by
/// child, then value, then parent configuration). Rows are one
/// `Σ_a A=a = 1` per network variable, one
/// `q - Σ C=c - A=a >= -n` per conditional and one `A=a - Σ q = 0` per
/// indicator, in that order; evidence rows and optional permissibility rows
/// are appended after them.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesEncoding {
    pub system: ConstraintSystem,
    pub network: BayesianNetwork,
    indicators: Vec<Vec<usize>>,
    conditionals: Vec<Conditional>,
    upsilon: Vec<Vec<Vec<usize>>>,
    evidence: InstantiationSet,
    strict: bool,
}

fn cost_of(
    p: f64,
    policy: ZeroProbPolicy,
    label: impl FnOnce() -> String,
) -> Result<f64, ConstraintError> {
    let p = match policy {
        ZeroProbPolicy::Clamp { epsilon } => p.max(epsilon),
        ZeroProbPolicy::Reject { epsilon } if p < epsilon => {
            return Err(ConstraintError::ZeroProbabilityRejected(label()))
        }
        ZeroProbPolicy::Reject { .. } => p,
    };
    Ok(-p.ln() + 0.0)
}

pub fn encode_bayesnet(
    bn: &BayesianNetwork,
    policy: ZeroProbPolicy,
) -> Result<BayesEncoding, ConstraintError> {
    bn.validate()?;
    let mut system = ConstraintSystem::new();
    let mut indicators = Vec::with_capacity(bn.len());
    for v in bn.variables() {
        let group = v
            .range
            .iter()
            .map(|a| system.add_variable(format!("{}={}", v.name, a), 0.0, 0.0))
            .collect::<Result<Vec<_>, _>>()?;
        indicators.push(group);
    }

    let mut conditionals = Vec::with_capacity(bn.entry_count());
    let mut upsilon: Vec<Vec<Vec<usize>>> = (0..bn.len())
        .map(|v| vec![Vec::new(); bn.range_len(v)])
        .collect();
    for (child, slots) in upsilon.iter_mut().enumerate() {
        let var = bn.variable(child);
        for (value, slot) in slots.iter_mut().enumerate() {
            for config in 0..bn.num_configs(child) {
                let given: Vec<(VarId, usize)> = bn
                    .parents(child)
                    .iter()
                    .copied()
                    .zip(bn.config_values(child, config))
                    .collect();
                let label = given
                    .iter()
                    .map(|&(p, c)| format!("{}={}", bn.variable(p).name, bn.variable(p).range[c]))
                    .collect::<Vec<_>>()
                    .join(",");
                let name = format!("q[{}={}|{}]", var.name, var.range[value], label);
                let probability = bn.entry(child, value, config);
                let cost = cost_of(probability, policy, || name.clone())?;
                let id = system.add_variable(name, cost, 0.0)?;
                slot.push(conditionals.len());
                conditionals.push(Conditional {
                    var: id,
                    child,
                    value,
                    config,
                    given,
                    probability,
                });
            }
        }
    }

    for group in &indicators {
        system.add_constraint(LinearConstraint::new(
            group.iter().map(|&x| (1.0, x)).collect(),
            Relation::Eq,
            1.0,
        ))?;
    }
    for q in &conditionals {
        let mut terms = vec![(1.0, q.var)];
        terms.extend(q.given.iter().map(|&(p, c)| (-1.0, indicators[p][c])));
        terms.push((-1.0, indicators[q.child][q.value]));
        system.add_constraint(LinearConstraint::new(
            terms,
            Relation::Ge,
            -(q.given.len() as f64),
        ))?;
    }
    for (child, per_value) in upsilon.iter().enumerate() {
        for (value, group) in per_value.iter().enumerate() {
            let mut terms = vec![(1.0, indicators[child][value])];
            terms.extend(group.iter().map(|&i| (-1.0, conditionals[i].var)));
            system.add_constraint(LinearConstraint::new(terms, Relation::Eq, 0.0))?;
        }
    }

    let enc = BayesEncoding {
        system,
        network: bn.clone(),
        indicators,
        conditionals,
        upsilon,
        evidence: InstantiationSet::new(),
        strict: false,
    };
    debug_assert_eq!(
        enc.system.num_variables(),
        bn.entry_count() + bn.range_total()
    );
    debug_assert_eq!(
        enc.system.constraints().len(),
        bn.len() + bn.entry_count() + bn.range_total()
    );
    Ok(enc)
}

impl BayesEncoding {
    /// Indicator variables `Δ(A)` of one network variable.
    pub fn indicators(&self, var: VarId) -> &[usize] {
        &self.indicators[var]
    }

    /// Indicator variable of `var = value`.
    pub fn indicator(&self, var: VarId, value: usize) -> usize {
        self.indicators[var][value]
    }

    /// The union of all indicator groups, in variable order.
    pub fn delta(&self) -> Vec<usize> {
        self.indicators.iter().flatten().copied().collect()
    }

    pub fn conditionals(&self) -> &[Conditional] {
        &self.conditionals
    }

    /// Indices into [`BayesEncoding::conditionals`] of the group `Υ` for
    /// `var = value`.
    pub fn upsilon(&self, var: VarId, value: usize) -> &[usize] {
        &self.upsilon[var][value]
    }

    pub fn evidence(&self) -> &InstantiationSet {
        &self.evidence
    }

    /// Whether the explicit `q <= A=a`, `q <= C=c` rows are present.
    pub fn is_strict(&self) -> bool {
        self.strict
    }

    /// Appends one `A=a = 1` row per evidence entry not already applied.
    pub fn apply_evidence(&self, e: &InstantiationSet) -> Result<BayesEncoding, ConstraintError> {
        self.network.check_instantiation(e)?;
        let mut enc = self.clone();
        for (var, value) in e.iter() {
            if enc.evidence.get(var) == Some(value) {
                continue;
            }
            enc.evidence.insert(var, value).map_err(|old| {
                let v = self.network.variable(var);
                BayesError::ConflictingInstantiation {
                    variable: v.name.clone(),
                    first: v.range[old].clone(),
                    second: v.range[value].clone(),
                }
            })?;
            enc.system.add_constraint(LinearConstraint::new(
                vec![(1.0, enc.indicators[var][value])],
                Relation::Eq,
                1.0,
            ))?;
        }
        Ok(enc)
    }

    /// Every conditional at 1 has its head and parent indicators at 1.
    pub fn is_permissible(&self, s: &Assignment01) -> Result<bool, ConstraintError> {
        self.check_domain(s)?;
        Ok(self.conditionals.iter().all(|q| {
            !s.get(q.var)
                || (s.get(self.indicators[q.child][q.value])
                    && q.given.iter().all(|&(p, c)| s.get(self.indicators[p][c])))
        }))
    }

    fn check_domain(&self, s: &Assignment01) -> Result<(), ConstraintError> {
        if s.len() != self.system.num_variables() {
            return Err(ConstraintError::DomainMismatch {
                expected: self.system.num_variables(),
                found: s.len(),
            });
        }
        Ok(())
    }

    /// Collects the indicators at 1. `s` must be a 0-1 solution.
    pub fn solution_to_instantiation(
        &self,
        s: &Assignment01,
    ) -> Result<InstantiationSet, ConstraintError> {
        if !self.system.satisfies(s)? {
            return Err(ConstraintError::NotASolution);
        }
        let mut w = InstantiationSet::new();
        for (var, group) in self.indicators.iter().enumerate() {
            for (value, &x) in group.iter().enumerate() {
                if s.get(x) {
                    w.insert(var, value)
                        .map_err(|_| ConstraintError::NotASolution)?;
                }
            }
        }
        Ok(w)
    }

    /// The permissible 0-1 solution of a complete instantiation-set.
    pub fn instantiation_to_solution(
        &self,
        w: &InstantiationSet,
    ) -> Result<Assignment01, ConstraintError> {
        self.network.require_complete(w)?;
        let mut s = Assignment01::zeros(self.system.num_variables());
        for (var, value) in w.iter() {
            s.set(self.indicators[var][value], true);
        }
        for child in 0..self.network.len() {
            let value = w.get(child).expect("complete");
            let pv: Vec<usize> = self
                .network
                .parents(child)
                .iter()
                .map(|&p| w.get(p).expect("complete"))
                .collect();
            let config = self.network.config_index(child, &pv);
            let q = self.upsilon[child][value]
                .iter()
                .map(|&i| &self.conditionals[i])
                .find(|q| q.config == config)
                .expect("one conditional per configuration");
            s.set(q.var, true);
        }
        Ok(s)
    }

    /// `1e-9 * (1 + max |cost|)`.
    pub fn default_delta(&self) -> f64 {
        1e-9 * (1.0 + self.system.max_abs_cost())
    }

    /// Raises every conditional cost `<= 0` to `delta`.
    pub fn ensure_positive_conditional_costs(
        &self,
        delta: f64,
    ) -> Result<BayesEncoding, ConstraintError> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(ConstraintError::NonPositiveDelta(delta));
        }
        let mut enc = self.clone();
        for q in &self.conditionals {
            if enc.system.psi(q.var, true) <= 0.0 {
                enc.system.set_psi(q.var, true, delta)?;
            }
        }
        Ok(enc)
    }

    /// Appends `q - A=a <= 0` and `q - C=c <= 0` for every conditional.
    pub fn add_permissibility_constraints(&self) -> BayesEncoding {
        let mut enc = self.clone();
        if enc.strict {
            return enc;
        }
        for q in &self.conditionals {
            let head = self.indicators[q.child][q.value];
            let rows =
                std::iter::once(head).chain(q.given.iter().map(|&(p, c)| self.indicators[p][c]));
            for x in rows {
                enc.system
                    .add_constraint(LinearConstraint::new(
                        vec![(1.0, q.var), (-1.0, x)],
                        Relation::Le,
                        0.0,
                    ))
                    .expect("indices are declared");
            }
        }
        enc.strict = true;
        enc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes::{abc_network_default, Variable};

    fn w_tft(bn: &BayesianNetwork) -> InstantiationSet {
        bn.instantiation(&[("A", "true"), ("B", "false"), ("C", "true")])
            .unwrap()
    }

    #[test]
    fn sizes_match_counting_rules() {
        let bn = abc_network_default();
        let enc = encode_bayesnet(&bn, ZeroProbPolicy::default()).unwrap();
        assert_eq!(enc.system.num_variables(), 18);
        assert_eq!(enc.system.constraints().len(), 21);
        let ev = enc
            .apply_evidence(&bn.instantiation(&[("C", "true")]).unwrap())
            .unwrap();
        assert_eq!(ev.system.constraints().len(), 22);
        let same = enc.apply_evidence(&InstantiationSet::new()).unwrap();
        assert_eq!(same, enc);

        let coin = BayesianNetwork::from_tables(
            vec![Variable::new("X", ["v1", "v2"])],
            vec![vec![]],
            vec![vec![0.5, 0.5]],
        )
        .unwrap();
        let c = encode_bayesnet(&coin, ZeroProbPolicy::default()).unwrap();
        assert_eq!(
            (c.system.num_variables(), c.system.constraints().len()),
            (4, 5)
        );
    }

    #[test]
    fn conditional_cost_is_negative_log() {
        let bn = abc_network_default();
        let enc = encode_bayesnet(&bn, ZeroProbPolicy::default()).unwrap();
        let q = enc.system.find("q[C=true|A=true,B=false]").unwrap();
        assert_eq!(enc.system.psi(q, true), -(0.7f64.ln()));
        assert_eq!(enc.system.psi(q, false), 0.0);
        let prior = enc.system.find("q[A=true|]").unwrap();
        assert_eq!(enc.system.psi(prior, true), -(0.6f64.ln()));
    }

    #[test]
    fn objective_is_negative_log_probability() {
        let bn = abc_network_default();
        let enc = encode_bayesnet(&bn, ZeroProbPolicy::default()).unwrap();
        let s = enc.instantiation_to_solution(&w_tft(&bn)).unwrap();
        let theta = enc.system.objective(&s).unwrap();
        let by_factors = -(0.6f64.ln()) - (0.7f64.ln()) - (0.7f64.ln());
        assert!((theta - by_factors).abs() < 1e-12);
        assert!((theta + 0.294f64.ln()).abs() < 1e-9);
        assert!((theta - 1.22418).abs() < 1e-5);
    }

    #[test]
    fn instantiation_to_solution_sets_expected_variables() {
        let bn = abc_network_default();
        let enc = encode_bayesnet(&bn, ZeroProbPolicy::default()).unwrap();
        let s = enc.instantiation_to_solution(&w_tft(&bn)).unwrap();
        let on: Vec<&str> = (0..s.len())
            .filter(|&v| s.get(v))
            .map(|v| enc.system.name(v))
            .collect();
        assert_eq!(
            on,
            vec![
                "A=true",
                "B=false",
                "C=true",
                "q[A=true|]",
                "q[B=false|]",
                "q[C=true|A=true,B=false]"
            ]
        );
        assert!(enc.system.satisfies(&s).unwrap());
        assert!(enc.is_permissible(&s).unwrap());
    }

    #[test]
    fn round_trip_on_all_complete_sets() {
        let bn = abc_network_default();
        let enc = encode_bayesnet(&bn, ZeroProbPolicy::default()).unwrap();
        for (w, _) in bn
            .enumerate_mpe_oracle(&InstantiationSet::new(), 64)
            .unwrap()
        {
            let s = enc.instantiation_to_solution(&w).unwrap();
            assert_eq!(enc.solution_to_instantiation(&s).unwrap(), w);
        }
        let partial = bn.instantiation(&[("A", "true")]).unwrap();
        assert!(matches!(
            enc.instantiation_to_solution(&partial),
            Err(ConstraintError::Bayes(BayesError::IncompleteInstantiation(
                _
            )))
        ));
        assert_eq!(
            enc.solution_to_instantiation(&Assignment01::zeros(18)),
            Err(ConstraintError::NotASolution)
        );
    }

    #[test]
    fn permissibility_examples() {
        let bn = abc_network_default();
        let enc = encode_bayesnet(&bn, ZeroProbPolicy::default()).unwrap();
        let mut s = Assignment01::zeros(18);
        s.set(enc.system.find("q[C=true|A=true,B=true]").unwrap(), true);
        s.set(enc.system.find("A=true").unwrap(), true);
        s.set(enc.system.find("B=false").unwrap(), true);
        s.set(enc.system.find("C=true").unwrap(), true);
        assert!(!enc.is_permissible(&s).unwrap());
        assert!(enc.is_permissible(&Assignment01::zeros(18)).unwrap());
        assert!(!enc.system.satisfies(&Assignment01::zeros(18)).unwrap());
    }

    #[test]
    fn full_evidence_leaves_one_solution() {
        let bn = abc_network_default();
        let enc = encode_bayesnet(&bn, ZeroProbPolicy::default())
            .unwrap()
            .apply_evidence(&w_tft(&bn))
            .unwrap();
        let n = enc.system.num_variables();
        let mut permissible = 0;
        for mask in 0u32..(1 << n) {
            let s = Assignment01::new((0..n).map(|i| mask >> i & 1 == 1).collect());
            if enc.system.satisfies(&s).unwrap() && enc.is_permissible(&s).unwrap() {
                permissible += 1;
                assert_eq!(enc.solution_to_instantiation(&s).unwrap(), w_tft(&bn));
            }
        }
        assert_eq!(permissible, 1);
    }

    #[test]
    fn evidence_errors() {
        let bn = abc_network_default();
        let enc = encode_bayesnet(&bn, ZeroProbPolicy::default()).unwrap();
        let bogus: InstantiationSet = [(9, 0)].into_iter().collect();
        assert!(matches!(
            enc.apply_evidence(&bogus),
            Err(ConstraintError::Bayes(BayesError::UnknownVariable(_)))
        ));
        let out: InstantiationSet = [(0, 5)].into_iter().collect();
        assert!(matches!(
            enc.apply_evidence(&out),
            Err(ConstraintError::Bayes(BayesError::ValueOutOfRange { .. }))
        ));
    }

    #[test]
    fn positive_costs_and_zero_policy() {
        let sure = BayesianNetwork::from_tables(
            vec![Variable::new("X", ["a", "b"])],
            vec![vec![]],
            vec![vec![1.0, 0.0]],
        )
        .unwrap();
        let enc = encode_bayesnet(&sure, ZeroProbPolicy::default()).unwrap();
        let qa = enc.system.find("q[X=a|]").unwrap();
        let qb = enc.system.find("q[X=b|]").unwrap();
        assert_eq!(enc.system.psi(qa, true), 0.0);
        assert!((enc.system.psi(qb, true) + DEFAULT_ZERO_EPSILON.ln()).abs() < 1e-12);
        let pos = enc.ensure_positive_conditional_costs(1e-6).unwrap();
        assert_eq!(pos.system.psi(qa, true), 1e-6);
        assert!(pos
            .conditionals()
            .iter()
            .all(|q| pos.system.psi(q.var, true) >= 1e-6));
        assert!(enc.ensure_positive_conditional_costs(0.0).is_err());

        let rejected = encode_bayesnet(
            &sure,
            ZeroProbPolicy::Reject {
                epsilon: DEFAULT_ZERO_EPSILON,
            },
        );
        assert!(matches!(
            rejected,
            Err(ConstraintError::ZeroProbabilityRejected(_))
        ));

        let bn = abc_network_default();
        let f = encode_bayesnet(&bn, ZeroProbPolicy::default()).unwrap();
        assert_eq!(
            f.ensure_positive_conditional_costs(f.default_delta())
                .unwrap(),
            f
        );
    }

    #[test]
    fn permissibility_rows() {
        let bn = abc_network_default();
        let enc = encode_bayesnet(&bn, ZeroProbPolicy::default()).unwrap();
        let strict = enc.add_permissibility_constraints();
        assert_eq!(strict.system.constraints().len(), 21 + 28);
        assert!(strict.is_strict());
        assert_eq!(strict.add_permissibility_constraints(), strict);

        let flat = BayesianNetwork::from_tables(
            vec![
                Variable::new("X", ["a", "b"]),
                Variable::new("Y", ["a", "b", "c"]),
            ],
            vec![vec![], vec![]],
            vec![vec![0.5, 0.5], vec![0.2, 0.3, 0.5]],
        )
        .unwrap();
        let e = encode_bayesnet(&flat, ZeroProbPolicy::default()).unwrap();
        let added = e
            .add_permissibility_constraints()
            .system
            .constraints()
            .len()
            - e.system.constraints().len();
        assert_eq!(added, e.conditionals().len());
    }

    #[test]
    fn golden_dump_prefix() {
        let bn = abc_network_default();
        let enc = encode_bayesnet(&bn, ZeroProbPolicy::default()).unwrap();
        let dump = enc.system.dump();
        let lines: Vec<&str> = dump.lines().collect();
        assert_eq!(lines.len(), 18 + 21);
        assert_eq!(lines[0], "var A=true 0 0");
        assert_eq!(lines[18], "+1 A=true +1 A=false = 1");
        assert_eq!(lines[21], "+1 q[A=true|] -1 A=true >= 0");
        assert_eq!(
            lines[25],
            "+1 q[C=true|A=true,B=true] -1 A=true -1 B=true -1 C=true >= -2"
        );
        assert_eq!(lines[33], "+1 A=true -1 q[A=true|] = 0");
        assert_eq!(
            lines[37],
            "+1 C=true -1 q[C=true|A=true,B=true] -1 q[C=true|A=true,B=false] -1 q[C=true|A=false,B=true] -1 q[C=true|A=false,B=false] = 0"
        );
    }
}
