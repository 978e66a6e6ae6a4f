use super::SolverError;
use crate::constraint::{Assignment01, LinearConstraint, Relation, WaodagEncoding};

/// `Σ_{x∈scope} F(s,x) <= |scope| - 1` with `F(s,x) = x` where `s(x) = 1`
/// and `1 - x` otherwise, expanded to
/// `Σ_{s(x)=1} x - Σ_{s(x)=0} x <= #ones - 1`.
pub fn exclusion_cut(s: &Assignment01, scope: &[usize]) -> Result<LinearConstraint, SolverError> {
    if scope.is_empty() {
        return Err(SolverError::EmptyScope);
    }
    let terms: Vec<(f64, usize)> = scope
        .iter()
        .map(|&x| (if s.get(x) { 1.0 } else { -1.0 }, x))
        .collect();
    let ones = terms.iter().filter(|t| t.0 > 0.0).count();
    Ok(LinearConstraint::new(
        terms,
        Relation::Le,
        ones as f64 - 1.0,
    ))
}

/// `Σ_{x∈H(s)} x <= |H(s)| - 1` over the hypothesis variables at 1.
pub fn cardinal_cut(
    s: &Assignment01,
    enc: &WaodagEncoding,
) -> Result<LinearConstraint, SolverError> {
    let terms: Vec<(f64, usize)> = enc
        .hypothesis_vars()
        .into_iter()
        .filter(|&x| s.get(x))
        .map(|x| (1.0, x))
        .collect();
    if terms.is_empty() {
        return Err(SolverError::EmptyBaseSet);
    }
    let rhs = terms.len() as f64 - 1.0;
    Ok(LinearConstraint::new(terms, Relation::Le, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::encode_waodag;
    use crate::waodag::tony;

    #[test]
    fn exclusion_expansion() {
        let s = Assignment01::new(vec![true, false, true]);
        let cut = exclusion_cut(&s, &[0, 1, 2]).unwrap();
        assert_eq!(
            cut,
            LinearConstraint::new(vec![(1.0, 0), (-1.0, 1), (1.0, 2)], Relation::Le, 1.0)
        );
        let single = exclusion_cut(&Assignment01::new(vec![true]), &[0]).unwrap();
        assert_eq!(
            single,
            LinearConstraint::new(vec![(1.0, 0)], Relation::Le, 0.0)
        );
        assert_eq!(exclusion_cut(&s, &[]), Err(SolverError::EmptyScope));
    }

    #[test]
    fn exclusion_removes_only_its_point() {
        let enc = encode_waodag(&tony(), true).unwrap();
        let out = Assignment01::new(vec![false, false, true, false, true]);
        let cut = exclusion_cut(&out, &[0, 1, 2, 3, 4]).unwrap();
        let removed: Vec<u32> = (0u32..32)
            .filter(|mask| {
                let x: Vec<f64> = (0..5).map(|i| (mask >> i & 1) as f64).collect();
                !cut.holds_at(&x, 1e-9)
            })
            .collect();
        assert_eq!(removed, vec![0b10100]);
        assert_eq!(enc.system.num_variables(), 5);
    }

    #[test]
    fn cardinal_rows() {
        let enc = encode_waodag(&tony(), true).unwrap();
        let out = Assignment01::new(vec![false, false, true, false, true]);
        assert_eq!(
            cardinal_cut(&out, &enc).unwrap(),
            LinearConstraint::new(vec![(1.0, 2)], Relation::Le, 0.0)
        );
        let in_sleep = Assignment01::new(vec![true, true, false, true, true]);
        assert_eq!(
            cardinal_cut(&in_sleep, &enc).unwrap(),
            LinearConstraint::new(vec![(1.0, 0), (1.0, 1)], Relation::Le, 1.0)
        );
        let all = Assignment01::new(vec![true; 5]);
        assert_eq!(
            cardinal_cut(&all, &enc).unwrap(),
            LinearConstraint::new(vec![(1.0, 0), (1.0, 1), (1.0, 2)], Relation::Le, 2.0)
        );
        assert_eq!(
            cardinal_cut(&Assignment01::zeros(5), &enc),
            Err(SolverError::EmptyBaseSet)
        );
    }
}
