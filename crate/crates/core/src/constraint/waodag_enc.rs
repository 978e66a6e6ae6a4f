use super::{Assignment01, ConstraintError, ConstraintSystem, LinearConstraint, Relation};
use crate::waodag::{Label, NodeId, TruthAssignment, Waodag};

/// A constraint system induced by a graph. Variable `i` is `x[<node i>]`,
/// so the variable/node bijection is the identity on indices.
#[derive(Debug, Clone, PartialEq)]
pub struct WaodagEncoding {
    pub system: ConstraintSystem,
    pub waodag: Waodag,
    /// Whether the evidence rows `x_q = 1` are present.
    pub essential: bool,
}

/// Compiles `w` into its constraint system.
///
/// Rows are emitted node by node in declaration order. An AND node `q` with
/// parents `D` gets `x_q - x_p <= 0` per parent and then
/// `Σ x_p - x_q <= |D| - 1`; an OR node gets `Σ x_p - x_q >= 0` and then
/// `x_q - x_p >= 0` per parent. Nodes without parents get no rows. With
/// `essential`, one `x_q = 1` row per evidence node follows.
pub fn encode_waodag(w: &Waodag, essential: bool) -> Result<WaodagEncoding, ConstraintError> {
    w.validate()?;
    let mut system = ConstraintSystem::new();
    for node in w.nodes() {
        system.add_variable(format!("x[{}]", node.name), node.cost_true, node.cost_false)?;
    }
    for q in 0..w.len() {
        let parents = w.parents(q);
        if parents.is_empty() {
            continue;
        }
        match w.node(q).label {
            Label::And => {
                for &p in parents {
                    system.add_constraint(LinearConstraint::new(
                        vec![(1.0, q), (-1.0, p)],
                        Relation::Le,
                        0.0,
                    ))?;
                }
                let mut terms: Vec<(f64, usize)> = parents.iter().map(|&p| (1.0, p)).collect();
                terms.push((-1.0, q));
                system.add_constraint(LinearConstraint::new(
                    terms,
                    Relation::Le,
                    parents.len() as f64 - 1.0,
                ))?;
            }
            Label::Or => {
                let mut terms: Vec<(f64, usize)> = parents.iter().map(|&p| (1.0, p)).collect();
                terms.push((-1.0, q));
                system.add_constraint(LinearConstraint::new(terms, Relation::Ge, 0.0))?;
                for &p in parents {
                    system.add_constraint(LinearConstraint::new(
                        vec![(1.0, q), (-1.0, p)],
                        Relation::Ge,
                        0.0,
                    ))?;
                }
            }
        }
    }
    if essential {
        for &q in w.evidence() {
            system.add_constraint(LinearConstraint::new(vec![(1.0, q)], Relation::Eq, 1.0))?;
        }
    }
    Ok(WaodagEncoding {
        system,
        waodag: w.clone(),
        essential,
    })
}

impl WaodagEncoding {
    pub fn var_of(&self, node: NodeId) -> usize {
        node
    }

    pub fn node_of(&self, var: usize) -> NodeId {
        var
    }

    /// Variables of the hypothesis nodes, in declaration order.
    pub fn hypothesis_vars(&self) -> Vec<usize> {
        self.waodag
            .hypotheses()
            .iter()
            .map(|&q| self.var_of(q))
            .collect()
    }

    pub fn solution_to_truth(&self, s: &Assignment01) -> Result<TruthAssignment, ConstraintError> {
        if s.len() != self.waodag.len() {
            return Err(ConstraintError::DomainMismatch {
                expected: self.waodag.len(),
                found: s.len(),
            });
        }
        Ok(TruthAssignment::new(
            (0..self.waodag.len())
                .map(|q| s.get(self.var_of(q)))
                .collect(),
        ))
    }

    pub fn truth_to_solution(&self, e: &TruthAssignment) -> Result<Assignment01, ConstraintError> {
        if e.len() != self.waodag.len() {
            return Err(ConstraintError::DomainMismatch {
                expected: self.waodag.len(),
                found: e.len(),
            });
        }
        Ok(Assignment01::new(
            (0..self.system.num_variables())
                .map(|v| e.get(self.node_of(v)))
                .collect(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waodag::{tony, HypothesisSet, Node};

    fn out(w: &Waodag) -> TruthAssignment {
        let h: HypothesisSet = [w.find("Tony-out").unwrap()].into_iter().collect();
        w.propagate(&h).unwrap()
    }

    #[test]
    fn tony_sizes() {
        let enc = encode_waodag(&tony(), true).unwrap();
        assert_eq!(enc.system.num_variables(), 5);
        assert_eq!(enc.system.constraints().len(), 7);
        let plain = encode_waodag(&tony(), false).unwrap();
        assert_eq!(plain.system.constraints().len(), 6);
    }

    #[test]
    fn hypotheses_only_graph_has_no_rows() {
        let w = Waodag::new::<&str>(
            vec![
                Node::new("a", Label::And, 1.0, 0.0),
                Node::new("b", Label::Or, 2.0, 0.0),
            ],
            &[],
            &[],
        )
        .unwrap();
        assert!(encode_waodag(&w, false)
            .unwrap()
            .system
            .constraints()
            .is_empty());
    }

    #[test]
    fn tony_objective_and_feasibility() {
        let w = tony();
        let enc = encode_waodag(&w, true).unwrap();
        let s = enc.truth_to_solution(&out(&w)).unwrap();
        assert_eq!(enc.system.objective(&s).unwrap(), 8.0);
        assert!(enc.system.satisfies(&s).unwrap());
        assert!(!enc.system.satisfies(&Assignment01::zeros(5)).unwrap());
    }

    #[test]
    fn zero_one_points_are_exactly_the_explanations() {
        let w = tony();
        let enc = encode_waodag(&w, true).unwrap();
        let mut found = Vec::new();
        for mask in 0u32..32 {
            let s = Assignment01::new((0..5).map(|i| mask >> i & 1 == 1).collect());
            if enc.system.satisfies(&s).unwrap() {
                let e = enc.solution_to_truth(&s).unwrap();
                assert!(w.is_explanation(&e).unwrap());
                assert_eq!(enc.truth_to_solution(&e).unwrap(), s);
                found.push(e);
            }
        }
        found.sort();
        let mut oracle: Vec<TruthAssignment> = w
            .enumerate_explanations_oracle(20)
            .unwrap()
            .into_iter()
            .map(|(e, _)| e)
            .collect();
        oracle.sort();
        assert_eq!(found, oracle);
    }

    #[test]
    fn conversions() {
        let enc = encode_waodag(&tony(), true).unwrap();
        let ones = Assignment01::new(vec![true; 5]);
        assert_eq!(
            enc.solution_to_truth(&ones).unwrap(),
            TruthAssignment::all(5, true)
        );
        assert!(enc.solution_to_truth(&Assignment01::zeros(3)).is_err());
    }

    #[test]
    fn golden_dump() {
        let enc = encode_waodag(&tony(), true).unwrap();
        let expected = "\
var x[Tony-in] 5 0
var x[Tony-sleeping] 4 0
var x[Tony-out] 8 0
var x[phone-disconnected] 0 0
var x[phone-noanswer] 0 0
+1 x[phone-disconnected] -1 x[Tony-in] <= 0
+1 x[phone-disconnected] -1 x[Tony-sleeping] <= 0
+1 x[Tony-in] +1 x[Tony-sleeping] -1 x[phone-disconnected] <= 1
+1 x[phone-disconnected] +1 x[Tony-out] -1 x[phone-noanswer] >= 0
+1 x[phone-noanswer] -1 x[phone-disconnected] >= 0
+1 x[phone-noanswer] -1 x[Tony-out] >= 0
+1 x[phone-noanswer] = 1
";
        assert_eq!(enc.system.dump(), expected);
    }
}
