//! The stretch-and-infer query engine: prune the net to the query-relevant
//! nodes, pick a low-width topological order by dry runs, stretch, then run a
//! forward state-transformation pass up to the observation point and a
//! backward predicate-transformation pass down to it, folding each evidence
//! predicate in (suitably weakened) at the chain position where its node
//! first appears. The answer is the updated state at the observation point,
//! marginalized to the observation node.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::net::BayesNet;
use crate::predicate::Predicate;
use crate::state::State;
use crate::stretch::{dry_run_select, stretch, Chain};

/// An inference question: the posterior of `observe` given fuzzy evidence
/// predicates on other nodes (sharp evidence is an indicator predicate).
#[derive(Debug, Clone)]
pub struct Query {
    pub observe: String,
    pub evidence: Vec<(String, Predicate)>,
}

impl Query {
    pub fn new(observe: impl Into<String>, evidence: Vec<(String, Predicate)>) -> Self {
        Query {
            observe: observe.into(),
            evidence,
        }
    }

    /// Sharp evidence sugar: each `(node, label)` becomes the indicator
    /// predicate at that label.
    pub fn with_sharp(net: &BayesNet, observe: &str, items: &[(&str, &str)]) -> Result<Self> {
        let mut evidence = Vec::with_capacity(items.len());
        for (node, label) in items {
            let def = net.node(node)?;
            let idx = def
                .labels
                .iter()
                .position(|l| l == label)
                .ok_or_else(|| Error::Query(format!("{label} is not a label of {node}")))?;
            let space = net.var_space(node)?;
            evidence.push(((*node).to_string(), Predicate::indicator(space, idx)?));
        }
        Ok(Query::new(observe, evidence))
    }
}

/// Inference knobs; the defaults match the command-line defaults.
#[derive(Debug, Clone)]
pub struct InferConfig {
    /// Random dry stretch runs used to pick a low-width order (>= 1).
    pub dry_runs: usize,
    /// Seed for the order sampler; run `i` derives seed + i.
    pub seed: u64,
    /// Prune query-irrelevant nodes before stretching.
    pub prune: bool,
}

impl Default for InferConfig {
    fn default() -> Self {
        InferConfig {
            dry_runs: 1000,
            seed: 0,
            prune: true,
        }
    }
}

/// How an answer was produced: the chosen order, its width, the stage count
/// and the wall time.
#[derive(Debug, Clone)]
pub struct InferReport {
    pub order: Vec<String>,
    pub width: usize,
    pub stage_count: usize,
    pub pruned_nodes: Vec<String>,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct InferOutcome {
    pub posterior: State,
    pub report: InferReport,
}

/// Chain positions of the observation node and of each evidence node: the
/// position where the node's wire first exists (0 is the initial state, `k+1`
/// is the state after stage `k`).
pub fn locate_stages(chain: &Chain, query: &Query) -> Result<(usize, BTreeMap<String, usize>)> {
    let obs = chain.point_of(&query.observe).ok_or_else(|| {
        Error::Graph(format!(
            "internal error: observation node {} is not in the chain",
            query.observe
        ))
    })?;
    let mut evidence = BTreeMap::new();
    for (node, _) in &query.evidence {
        let point = chain.point_of(node).ok_or_else(|| {
            Error::Graph(format!(
                "internal error: evidence node {node} is not in the chain"
            ))
        })?;
        evidence.insert(node.clone(), point);
    }
    Ok((obs, evidence))
}

/// Evidence predicates weakened to the product space of their chain position,
/// grouped by position and conjoined per position.
fn weakened_by_point(
    chain: &Chain,
    query: &Query,
) -> Result<BTreeMap<usize, (Vec<String>, Predicate)>> {
    let mut grouped: BTreeMap<usize, (Vec<String>, Predicate)> = BTreeMap::new();
    for (node, pred) in &query.evidence {
        let point = chain.point_of(node).ok_or_else(|| {
            Error::Graph(format!(
                "internal error: evidence node {node} is not in the chain"
            ))
        })?;
        let space = chain.space_at(point);
        let coord = chain
            .wires_at(point)
            .iter()
            .position(|w| w == node)
            .expect("a node's wire exists at its own point");
        let weak = pred.weaken(space, coord)?;
        match grouped.get_mut(&point) {
            Some((nodes, acc)) => {
                nodes.push(node.clone());
                *acc = acc.conjoin(&weak)?;
            }
            None => {
                grouped.insert(point, (vec![node.clone()], weak));
            }
        }
    }
    Ok(grouped)
}

/// Forward pass: transform the initial state stage by stage up to the
/// observation point, conditioning on each evidence predicate just before the
/// stage that follows its position. Evidence sitting at the observation point
/// itself is left to the backward pass.
pub fn forward_pass(chain: &Chain, query: &Query, obs_point: usize) -> Result<State> {
    let weakened = weakened_by_point(chain, query)?;
    let mut state = chain.initial().clone();
    for i in 0..obs_point {
        if let Some((nodes, pred)) = weakened.get(&i) {
            state = state.update(pred).map_err(|e| match e {
                Error::ZeroValidity => Error::InconsistentEvidence {
                    nodes: nodes.clone(),
                },
                other => other,
            })?;
        }
        state = chain.stages()[i].forward(chain.space_at(i), &state)?;
    }
    Ok(state)
}

/// Backward pass: pull the truth predicate (or the final-stage evidence) back
/// from the end of the chain to the observation point, conjoining evidence
/// along the way. Zero predicates surface later as zero validity.
pub fn backward_pass(chain: &Chain, query: &Query, obs_point: usize) -> Result<Predicate> {
    let weakened = weakened_by_point(chain, query)?;
    let n = chain.len();
    let mut pred = Predicate::truth(chain.space_at(n).clone());
    if let Some((_, p)) = weakened.get(&n) {
        pred = pred.conjoin(p)?;
    }
    for i in (obs_point..n).rev() {
        pred = chain.stages()[i].backward(chain.space_at(i), &pred)?;
        if let Some((_, p)) = weakened.get(&i) {
            pred = pred.conjoin(p)?;
        }
    }
    Ok(pred)
}

fn validate_query(net: &BayesNet, query: &Query) -> Result<()> {
    if !net.contains(&query.observe) {
        return Err(Error::UnknownName {
            name: query.observe.clone(),
        });
    }
    for (node, pred) in &query.evidence {
        let def = net.node(node)?;
        if pred.values().len() != def.card() {
            return Err(Error::Query(format!(
                "evidence for {node} has {} entries, the node has {} labels",
                pred.values().len(),
                def.card()
            )));
        }
        if pred.is_zero() {
            return Err(Error::InconsistentEvidence {
                nodes: vec![node.clone()],
            });
        }
    }
    Ok(())
}

/// Answers a query on a net; see the module docs for the pipeline.
pub fn infer(net: &BayesNet, query: &Query, cfg: &InferConfig) -> Result<State> {
    Ok(infer_report(net, query, cfg)?.posterior)
}

/// [`infer`] plus the chosen order, width and timing.
pub fn infer_report(net: &BayesNet, query: &Query, cfg: &InferConfig) -> Result<InferOutcome> {
    let start = Instant::now();
    if cfg.dry_runs == 0 {
        return Err(Error::Query("dry_runs must be at least 1".into()));
    }
    validate_query(net, query)?;

    let mut relevant: Vec<&str> = vec![query.observe.as_str()];
    relevant.extend(query.evidence.iter().map(|(n, _)| n.as_str()));
    let pruned;
    let (net, pruned_nodes) = if cfg.prune {
        pruned = net.prune(&relevant)?;
        let kept: std::collections::HashSet<&str> =
            pruned.nodes().iter().map(|n| n.name.as_str()).collect();
        let dropped = net
            .nodes()
            .iter()
            .map(|n| n.name.clone())
            .filter(|n| !kept.contains(n.as_str()))
            .collect();
        (&pruned, dropped)
    } else {
        (net, Vec::new())
    };

    let keep = [query.observe.as_str()];
    let (order, width) = dry_run_select(net, &keep, cfg.dry_runs, cfg.seed)?;
    let chain = stretch(net, &order, &keep)?;

    let (obs_point, _) = locate_stages(&chain, query)?;
    let forward = forward_pass(&chain, query, obs_point)?;
    let backward = backward_pass(&chain, query, obs_point)?;

    let backward_nodes: Vec<String> = {
        let located = locate_stages(&chain, query)?.1;
        located
            .into_iter()
            .filter(|(_, p)| *p >= obs_point)
            .map(|(n, _)| n)
            .collect()
    };
    let updated = forward.update(&backward).map_err(|e| match e {
        Error::ZeroValidity => Error::InconsistentEvidence {
            nodes: backward_nodes,
        },
        other => other,
    })?;
    let posterior = updated.marginalize(&[&query.observe])?;

    Ok(InferOutcome {
        posterior,
        report: InferReport {
            order,
            width,
            stage_count: chain.len(),
            pruned_nodes,
            elapsed: start.elapsed(),
        },
    })
}
