//! Measures how many disjunction-free actions a domain turns into when every
//! precondition is rewritten in disjunctive normal form, one action per term.
//! Effect conditions are left alone.

use crate::formula::{flatten_to_dnf, Dnf, Formula};

use super::PddlDocument;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlattenCount {
    Terms(usize),
    /// Flattening was abandoned with this many terms in its largest
    /// intermediate set.
    CapExceeded {
        materialized: u64,
    },
}

impl FlattenCount {
    /// Exact count, or the materialized count when the cap was hit.
    pub fn reported(&self) -> u64 {
        match *self {
            FlattenCount::Terms(n) => n as u64,
            FlattenCount::CapExceeded { materialized } => materialized,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlattenReport {
    pub cap: usize,
    pub per_action: Vec<FlattenCount>,
}

impl FlattenReport {
    pub fn action_count(&self) -> usize {
        self.per_action.len()
    }

    /// Actions after flattening, counting materialized terms where the cap was hit.
    pub fn total_terms(&self) -> u64 {
        self.per_action
            .iter()
            .map(FlattenCount::reported)
            .fold(0, u64::saturating_add)
    }

    pub fn cap_exceeded(&self) -> bool {
        self.per_action
            .iter()
            .any(|c| matches!(c, FlattenCount::CapExceeded { .. }))
    }

    /// Flattened actions per original action.
    pub fn blowup(&self) -> f64 {
        if self.per_action.is_empty() {
            return 0.0;
        }
        self.total_terms() as f64 / self.per_action.len() as f64
    }
}

pub fn flatten_preconditions<'a>(
    preconditions: impl IntoIterator<Item = &'a Formula>,
    cap: usize,
) -> FlattenReport {
    let per_action = preconditions
        .into_iter()
        .map(|p| match flatten_to_dnf(p, cap) {
            Dnf::Terms(terms) => FlattenCount::Terms(terms.len()),
            Dnf::CapExceeded { materialized } => FlattenCount::CapExceeded { materialized },
        })
        .collect();
    FlattenReport { cap, per_action }
}

pub fn flatten_domain(doc: &PddlDocument, cap: usize) -> FlattenReport {
    flatten_preconditions(doc.actions.iter().map(|a| &a.precondition), cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::ActionSchema;
    use crate::formula::tests::{nv, v};
    use crate::formula::{conjoin, disjoin};

    fn doc(preconditions: Vec<Formula>) -> PddlDocument {
        PddlDocument {
            domain_name: "f".into(),
            width: 16,
            actions: preconditions
                .into_iter()
                .enumerate()
                .map(|(id, precondition)| ActionSchema {
                    id,
                    precondition,
                    effects: vec![disjoin(vec![v(0), v(1)]); 16],
                })
                .collect(),
        }
    }

    #[test]
    fn disjunction_free_domain_is_unchanged() {
        let r = flatten_domain(
            &doc(vec![conjoin(vec![v(0), nv(1)]), Formula::top(), v(3)]),
            100,
        );
        assert_eq!(r.total_terms(), 3);
        assert!(!r.cap_exceeded());
    }

    #[test]
    fn conjunction_of_binary_ors_doubles() {
        for k in 1..=8 {
            let p = conjoin(
                (0..k)
                    .map(|i| disjoin(vec![v(2 * i), v(2 * i + 1)]))
                    .collect(),
            );
            let r = flatten_domain(&doc(vec![p]), 1 << 12);
            assert_eq!(r.per_action, vec![FlattenCount::Terms(1 << k)]);
        }
    }

    #[test]
    fn cap_is_reported() {
        let p = conjoin(
            (0..8)
                .map(|i| disjoin(vec![v(2 * i), v(2 * i + 1)]))
                .collect(),
        );
        let r = flatten_domain(&doc(vec![p, v(0)]), 100);
        assert!(r.cap_exceeded());
        assert!(r.total_terms() > 100);
    }
}
