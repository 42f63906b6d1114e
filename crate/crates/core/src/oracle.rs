//! Independent brute-force reference: the full joint distribution by direct
//! enumeration, conditioned on tensor-weakened evidence and marginalized.
//! Everything the chain engine computes is tested against this module, which
//! shares no code path with the chain.

use crate::error::{Error, Result};
use crate::net::BayesNet;
use crate::predicate::Predicate;
use crate::state::State;
use crate::Query;

/// Cap on joint-table entries (2^22); larger nets are only oracle-checked on
/// pruned sub-queries that fit.
pub const DEFAULT_JOINT_CAP: usize = 1 << 22;

/// The full joint distribution over every node of a net, in a deterministic
/// topological order.
#[derive(Debug, Clone)]
pub struct JointState {
    state: State,
}

impl JointState {
    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn marginal(&self, node: &str) -> Result<State> {
        self.state.marginalize(&[node])
    }
}

/// Deterministic topological order: first-ready in declaration order.
fn stable_topo(net: &BayesNet) -> Vec<usize> {
    let n = net.len();
    let children = net.children();
    let mut indeg: Vec<usize> = net.nodes().iter().map(|d| d.parents.len()).collect();
    let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while !ready.is_empty() {
        let i = ready.remove(0);
        order.push(i);
        for &c in &children[i] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                let pos = ready.partition_point(|&r| r < c);
                ready.insert(pos, c);
            }
        }
    }
    order
}

pub fn joint_state(net: &BayesNet) -> Result<JointState> {
    joint_state_capped(net, DEFAULT_JOINT_CAP)
}

/// Builds the joint by the chain rule, one node at a time: the entry at a full
/// assignment is the product over nodes of their CPT row at the assignment's
/// parent values.
pub fn joint_state_capped(net: &BayesNet, cap: usize) -> Result<JointState> {
    let mut required = 1usize;
    for node in net.nodes() {
        required = required.saturating_mul(node.card());
    }
    if required > cap {
        return Err(Error::SizeCap { required, cap });
    }

    let order = stable_topo(net);
    let mut placed: Vec<usize> = Vec::new(); // node index per coordinate
    let mut probs = vec![1.0f64];
    let mut space = crate::Space::unit();

    for &ni in &order {
        let node = &net.nodes()[ni];
        let parent_pos: Vec<usize> = node
            .parents
            .iter()
            .map(|p| {
                let pi = net.index_of(p).unwrap();
                placed.iter().position(|&x| x == pi).unwrap()
            })
            .collect();
        let cards: Vec<usize> = placed.iter().map(|&x| net.nodes()[x].card()).collect();
        let card = node.card();
        let mut next = vec![0.0f64; probs.len() * card];
        let mut digits = vec![0usize; placed.len()];
        for (idx, &p) in probs.iter().enumerate() {
            if idx > 0 {
                let mut i = placed.len() - 1;
                loop {
                    digits[i] += 1;
                    if digits[i] < cards[i] {
                        break;
                    }
                    digits[i] = 0;
                    i -= 1;
                }
            }
            let mut row = 0usize;
            for (k, &pos) in parent_pos.iter().enumerate() {
                let pcard = net.node(&node.parents[k]).unwrap().card();
                row = row * pcard + digits[pos];
            }
            let base = idx * card;
            for y in 0..card {
                next[base + y] = p * node.cpt[row * card + y];
            }
        }
        probs = next;
        placed.push(ni);
        space = space.product(&net.var_space(&node.name)?);
    }

    Ok(JointState {
        state: State::new(space, probs)?,
    })
}

/// Ground-truth inference: condition the full joint on the conjunction of all
/// weakened evidence predicates, then marginalize to the observation node.
pub fn brute_infer(net: &BayesNet, query: &Query) -> Result<State> {
    brute_infer_capped(net, query, DEFAULT_JOINT_CAP)
}

pub fn brute_infer_capped(net: &BayesNet, query: &Query, cap: usize) -> Result<State> {
    if !net.contains(&query.observe) {
        return Err(Error::UnknownName {
            name: query.observe.clone(),
        });
    }
    let joint = joint_state_capped(net, cap)?;
    let space = joint.state().space().clone();
    let mut pred = Predicate::truth(space.clone());
    let mut nodes = Vec::new();
    for (node, p) in &query.evidence {
        let at = space
            .index_of(node)
            .ok_or_else(|| Error::UnknownName { name: node.clone() })?;
        pred = pred.conjoin(&p.weaken(&space, at)?)?;
        nodes.push(node.clone());
    }
    let updated = joint.state().update(&pred).map_err(|e| match e {
        Error::ZeroValidity => Error::InconsistentEvidence { nodes },
        other => other,
    })?;
    updated.marginalize(&[&query.observe])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::NodeDef;
    use crate::testutil::{asia, assert_close, rng_for};
    use rand::Rng;

    #[test]
    fn asia_joint_marginals_match_hand_values() {
        let net = asia();
        let joint = joint_state(&net).unwrap();
        assert_close(
            joint.marginal("either").unwrap().probs(),
            &[0.064828, 0.935172],
            1e-12,
        );
        assert_close(
            joint.marginal("dysp").unwrap().probs(),
            &[0.3974534, 0.6025466],
            1e-12,
        );
        assert_close(joint.marginal("smoke").unwrap().probs(), &[0.5, 0.5], 1e-12);
    }

    #[test]
    fn independent_roots_join_as_tensor() {
        let net = BayesNet::new(
            "two",
            vec![
                NodeDef {
                    name: "a".into(),
                    labels: vec!["t".into(), "f".into()],
                    parents: vec![],
                    cpt: vec![0.3, 0.7],
                },
                NodeDef {
                    name: "b".into(),
                    labels: vec!["t".into(), "f".into()],
                    parents: vec![],
                    cpt: vec![0.9, 0.1],
                },
            ],
        )
        .unwrap();
        let joint = joint_state(&net).unwrap();
        assert_close(joint.state().probs(), &[0.27, 0.03, 0.63, 0.07], 1e-15);
    }

    #[test]
    fn cap_is_enforced() {
        let nodes: Vec<NodeDef> = (0..23)
            .map(|i| NodeDef {
                name: format!("n{i}"),
                labels: vec!["t".into(), "f".into()],
                parents: vec![],
                cpt: vec![0.5, 0.5],
            })
            .collect();
        let net = BayesNet::new("big", nodes).unwrap();
        assert!(matches!(joint_state(&net), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn golden_asia_queries() {
        let net = asia();
        let sharp = Query::with_sharp(&net, "dysp", &[("asia", "t"), ("xray", "f")]).unwrap();
        let out = brute_infer(&net, &sharp).unwrap();
        assert_close(
            out.probs(),
            &[0.36687577310995634, 0.6331242268900437],
            1e-12,
        );

        let fuzzy = Query::new(
            "dysp",
            vec![
                (
                    "asia".to_string(),
                    Predicate::new(net.var_space("asia").unwrap(), vec![0.9, 0.2]).unwrap(),
                ),
                (
                    "xray".to_string(),
                    Predicate::new(net.var_space("xray").unwrap(), vec![0.1, 0.75]).unwrap(),
                ),
            ],
        );
        let out = brute_infer(&net, &fuzzy).unwrap();
        assert_close(
            out.probs(),
            &[0.3711086833118701, 0.6288913166881299],
            1e-12,
        );

        // no evidence: the prior marginal
        let plain = Query::new("dysp", vec![]);
        let out = brute_infer(&net, &plain).unwrap();
        assert_close(out.probs(), &[0.3974534, 0.6025466], 1e-12);
    }

    #[test]
    fn evidence_order_does_not_matter() {
        let net = asia();
        let mut rng = rng_for("oracle-order");
        for _ in 0..10 {
            let p1 = Predicate::new(
                net.var_space("asia").unwrap(),
                vec![rng.random_range(0.1..1.0), rng.random_range(0.1..1.0)],
            )
            .unwrap();
            let p2 = Predicate::new(
                net.var_space("bronc").unwrap(),
                vec![rng.random_range(0.1..1.0), rng.random_range(0.1..1.0)],
            )
            .unwrap();
            let q12 = Query::new(
                "dysp",
                vec![("asia".into(), p1.clone()), ("bronc".into(), p2.clone())],
            );
            let q21 = Query::new("dysp", vec![("bronc".into(), p2), ("asia".into(), p1)]);
            let a = brute_infer(&net, &q12).unwrap();
            let b = brute_infer(&net, &q21).unwrap();
            assert_close(a.probs(), b.probs(), 1e-15);
        }
    }

    #[test]
    fn inconsistent_evidence_is_reported() {
        let net = asia();
        // either is the OR of lung and tub: lung=t forces either=t
        let q = Query::with_sharp(&net, "dysp", &[("lung", "t"), ("either", "f")]).unwrap();
        match brute_infer(&net, &q) {
            Err(Error::InconsistentEvidence { nodes }) => {
                assert!(nodes.contains(&"lung".to_string()));
                assert!(nodes.contains(&"either".to_string()));
            }
            other => panic!("expected inconsistent evidence, got {other:?}"),
        }
    }
}
