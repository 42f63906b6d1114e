//! Stretching: rewriting a Bayesian network as a linear chain of channel
//! stages along a topological order.
//!
//! Each stage fuses the wire shuffling (a coordinate permutation), the node's
//! CPT channel applied to the leading coordinates, and the lazy copying needed
//! to keep a parent alive for its remaining consumers. A wire is dropped (as
//! an explicit projection stage) right after its last consumer unless it is
//! named in the `keep` set, so intermediate product spaces stay as small as
//! the chosen order allows. The chain width (the largest intermediate
//! product, initial state included) can be computed symbolically without
//! touching any matrices, so candidate orders are screened by randomized
//! dry runs before anything is built.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::net::{topological_order, BayesNet};
use crate::predicate::Predicate;
use crate::space::{Space, Var};
use crate::state::State;

/// What a stage does to its (post-permutation) input coordinates.
#[derive(Debug, Clone)]
pub enum StageOp {
    /// Apply a node's CPT channel to the leading `consumed` coordinates,
    /// keeping the parent slots listed in `retained` alive next to the new
    /// node wire. Roots have `consumed == 0` and tensor their prior in front.
    Apply {
        channel: Channel,
        consumed: usize,
        retained: Vec<usize>,
    },
    /// Sum out the leading `dropped` coordinates (dead wires).
    Project { dropped: usize },
}

/// One link of a stretched chain.
#[derive(Debug, Clone)]
pub struct Stage {
    /// Wire shuffle fused into this stage: post-permutation coordinate `j`
    /// reads pre-permutation coordinate `perm[j]`.
    pub perm: Vec<usize>,
    pub op: StageOp,
    /// The node whose CPT this stage applies; `None` for projection stages.
    pub introduces: Option<String>,
    /// Node name carried by each output coordinate.
    pub wires_out: Vec<String>,
    cod_space: Space,
}

/// A linearized Bayesian network: an initial state (the tensor of the leading
/// run of root priors in the order) followed by channel stages.
#[derive(Debug, Clone)]
pub struct Chain {
    initial: State,
    initial_wires: Vec<String>,
    stages: Vec<Stage>,
    width: usize,
}

impl Stage {
    pub fn cod_space(&self) -> &Space {
        &self.cod_space
    }

    /// Post-permutation cardinalities of the input.
    fn permuted_cards(&self, prev: &Space) -> Vec<usize> {
        let cards = prev.cards();
        self.perm.iter().map(|&i| cards[i]).collect()
    }

    fn apply_perm(&self, prev: &Space, values: &[f64]) -> Vec<f64> {
        if self.perm.iter().enumerate().all(|(j, &i)| j == i) {
            return values.to_vec();
        }
        let cards = prev.cards();
        let n = cards.len();
        let mut inv = vec![0usize; n];
        for (j, &i) in self.perm.iter().enumerate() {
            inv[i] = j;
        }
        // stride of pre-perm coordinate k in the permuted layout
        let permuted_cards = self.permuted_cards(prev);
        let mut out_strides = vec![1usize; n];
        for j in (0..n.saturating_sub(1)).rev() {
            out_strides[j] = out_strides[j + 1] * permuted_cards[j + 1];
        }
        let contrib: Vec<usize> = (0..n).map(|k| out_strides[inv[k]]).collect();
        let mut out = vec![0.0; values.len()];
        let mut digits = vec![0usize; n];
        let mut out_pos = 0usize;
        for (idx, &v) in values.iter().enumerate() {
            if idx > 0 {
                let mut i = n - 1;
                loop {
                    digits[i] += 1;
                    out_pos += contrib[i];
                    if digits[i] < cards[i] {
                        break;
                    }
                    out_pos -= contrib[i] * cards[i];
                    digits[i] = 0;
                    i -= 1;
                }
            }
            out[out_pos] = v;
        }
        out
    }

    /// Undo the permutation: gather post-perm values back into pre-perm order.
    fn unapply_perm(&self, prev: &Space, values: &[f64]) -> Vec<f64> {
        if self.perm.iter().enumerate().all(|(j, &i)| j == i) {
            return values.to_vec();
        }
        let cards = prev.cards();
        let n = cards.len();
        let mut inv = vec![0usize; n];
        for (j, &i) in self.perm.iter().enumerate() {
            inv[i] = j;
        }
        let permuted_cards = self.permuted_cards(prev);
        let mut out_strides = vec![1usize; n];
        for j in (0..n.saturating_sub(1)).rev() {
            out_strides[j] = out_strides[j + 1] * permuted_cards[j + 1];
        }
        let contrib: Vec<usize> = (0..n).map(|k| out_strides[inv[k]]).collect();
        let mut out = vec![0.0; values.len()];
        let mut digits = vec![0usize; n];
        let mut post_pos = 0usize;
        for (idx, slot) in out.iter_mut().enumerate() {
            if idx > 0 {
                let mut i = n - 1;
                loop {
                    digits[i] += 1;
                    post_pos += contrib[i];
                    if digits[i] < cards[i] {
                        break;
                    }
                    post_pos -= contrib[i] * cards[i];
                    digits[i] = 0;
                    i -= 1;
                }
            }
            *slot = values[post_pos];
        }
        out
    }

    /// Pushes a state on the previous space through this stage.
    pub fn forward(&self, prev: &Space, state: &State) -> Result<State> {
        debug_assert_eq!(state.space(), prev);
        let permuted = self.apply_perm(prev, state.probs());
        let cards = self.permuted_cards(prev);
        let out = match &self.op {
            StageOp::Apply {
                channel,
                consumed,
                retained,
            } => {
                let (k_size, rest) = split_sizes(&cards, *consumed);
                let node_card = channel.cod().size();
                let (ret_size, xr_of) = retained_index(&cards[..*consumed], retained, k_size);
                let mut out = vec![0.0; node_card * ret_size * rest];
                for (x, &xr) in xr_of.iter().enumerate() {
                    let row = channel.row(x);
                    let base_in = x * rest;
                    for (y, &m) in row.iter().enumerate() {
                        if m == 0.0 {
                            continue;
                        }
                        let base_out = (y * ret_size + xr) * rest;
                        for r in 0..rest {
                            out[base_out + r] += m * permuted[base_in + r];
                        }
                    }
                }
                out
            }
            StageOp::Project { dropped } => {
                let (d_size, rest) = split_sizes(&cards, *dropped);
                let mut out = vec![0.0; rest];
                for i in 0..d_size {
                    let base = i * rest;
                    for r in 0..rest {
                        out[r] += permuted[base + r];
                    }
                }
                out
            }
        };
        State::new(self.cod_space.clone(), out)
    }

    /// Pulls a predicate on this stage's codomain back to the previous space.
    pub fn backward(&self, prev: &Space, pred: &Predicate) -> Result<Predicate> {
        debug_assert_eq!(pred.space(), &self.cod_space);
        let cards = self.permuted_cards(prev);
        let q = pred.values();
        let permuted: Vec<f64> = match &self.op {
            StageOp::Apply {
                channel,
                consumed,
                retained,
            } => {
                let (k_size, rest) = split_sizes(&cards, *consumed);
                let (ret_size, xr_of) = retained_index(&cards[..*consumed], retained, k_size);
                let mut out = vec![0.0; k_size * rest];
                for (x, &xr) in xr_of.iter().enumerate() {
                    let row = channel.row(x);
                    let base_out = x * rest;
                    for (y, &m) in row.iter().enumerate() {
                        if m == 0.0 {
                            continue;
                        }
                        let base_in = (y * ret_size + xr) * rest;
                        for r in 0..rest {
                            out[base_out + r] += m * q[base_in + r];
                        }
                    }
                }
                out
            }
            StageOp::Project { dropped } => {
                let (d_size, rest) = split_sizes(&cards, *dropped);
                let mut out = vec![0.0; d_size * rest];
                for i in 0..d_size {
                    out[i * rest..(i + 1) * rest].copy_from_slice(&q[..rest]);
                }
                out
            }
        };
        let values = self.unapply_perm(prev, &permuted);
        Predicate::new(prev.clone(), values)
    }

    /// Materializes the full stage channel `prev ⇸ cod` (small chains only;
    /// tests check it against the structured paths above).
    pub fn channel(&self, prev: &Space) -> Result<Channel> {
        let perm_ch = Channel::permutation(prev, &self.perm)?;
        let mid = perm_ch.cod().clone();
        let cards = mid.cards();
        let m = self.cod_space.size();
        let n = mid.size();
        let mut matrix = vec![0.0; n * m];
        match &self.op {
            StageOp::Apply {
                channel,
                consumed,
                retained,
            } => {
                let (k_size, rest) = split_sizes(&cards, *consumed);
                let (ret_size, xr_of) = retained_index(&cards[..*consumed], retained, k_size);
                for (x, &xr) in xr_of.iter().enumerate() {
                    for r in 0..rest {
                        let pre = x * rest + r;
                        for (y, &v) in channel.row(x).iter().enumerate() {
                            let post = (y * ret_size + xr) * rest + r;
                            matrix[pre * m + post] = v;
                        }
                    }
                }
            }
            StageOp::Project { dropped } => {
                let (d_size, rest) = split_sizes(&cards, *dropped);
                for i in 0..d_size {
                    for r in 0..rest {
                        matrix[(i * rest + r) * m + r] = 1.0;
                    }
                }
            }
        }
        let op_ch = Channel::new(mid, self.cod_space.clone(), matrix)?;
        op_ch.after(&perm_ch)
    }
}

fn split_sizes(cards: &[usize], lead: usize) -> (usize, usize) {
    let k: usize = cards[..lead].iter().product();
    let rest: usize = cards[lead..].iter().product();
    (k, rest)
}

/// For each flat index over the leading parent block, the flat index of its
/// retained sub-coordinates. Returns (retained block size, lookup table).
fn retained_index(
    parent_cards: &[usize],
    retained: &[usize],
    k_size: usize,
) -> (usize, Vec<usize>) {
    let ret_size: usize = retained.iter().map(|&s| parent_cards[s]).product();
    let mut table = vec![0usize; k_size];
    let k = parent_cards.len();
    let mut digits = vec![0usize; k];
    for (x, slot) in table.iter_mut().enumerate() {
        if x > 0 {
            let mut i = k - 1;
            loop {
                digits[i] += 1;
                if digits[i] < parent_cards[i] {
                    break;
                }
                digits[i] = 0;
                i -= 1;
            }
        }
        let mut xr = 0usize;
        for &s in retained {
            xr = xr * parent_cards[s] + digits[s];
        }
        *slot = xr;
    }
    (ret_size, table)
}

impl Chain {
    pub fn initial(&self) -> &State {
        &self.initial
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// Number of stages; chain positions run from 0 (initial state) to this.
    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// The space of the state at position `pos` (0 = initial).
    pub fn space_at(&self, pos: usize) -> &Space {
        if pos == 0 {
            self.initial.space()
        } else {
            &self.stages[pos - 1].cod_space
        }
    }

    /// Node identities of the coordinates at position `pos`.
    pub fn wires_at(&self, pos: usize) -> &[String] {
        if pos == 0 {
            &self.initial_wires
        } else {
            &self.stages[pos - 1].wires_out
        }
    }

    /// First position at which `node`'s wire exists: 0 for initial-state
    /// roots, stage index + 1 for stage-introduced nodes.
    pub fn point_of(&self, node: &str) -> Option<usize> {
        if self.initial_wires.iter().any(|w| w == node) {
            return Some(0);
        }
        self.stages
            .iter()
            .position(|s| s.introduces.as_deref() == Some(node))
            .map(|i| i + 1)
    }

    /// Runs the whole chain forward with no evidence.
    pub fn push_through(&self) -> Result<State> {
        let mut w = self.initial.clone();
        for (i, stage) in self.stages.iter().enumerate() {
            w = stage.forward(self.space_at(i), &w)?;
        }
        Ok(w)
    }

    /// Plain-text stage listing for debugging.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "initial: {} (size {})\n",
            self.initial.space().describe(),
            self.initial.space().size()
        ));
        for (i, s) in self.stages.iter().enumerate() {
            let kind = match (&s.op, &s.introduces) {
                (StageOp::Apply { consumed, .. }, Some(n)) => {
                    format!("apply {n} (consumes {consumed})")
                }
                (StageOp::Project { dropped }, _) => format!("project out {dropped}"),
                (StageOp::Apply { .. }, None) => "apply".into(),
            };
            out.push_str(&format!(
                "stage {i}: {kind:<28} -> {} (size {})\n",
                s.cod_space.describe(),
                s.cod_space.size()
            ));
        }
        out.push_str(&format!("width: {}\n", self.width));
        out
    }

    /// Graphviz rendering of the chain.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph chain {\n  rankdir=TB;\n  node [shape=box];\n");
        out.push_str(&format!(
            "  s0 [label=\"initial\\n{}\"];\n",
            self.initial.space().describe()
        ));
        for (i, s) in self.stages.iter().enumerate() {
            let label = match (&s.op, &s.introduces) {
                (_, Some(n)) => n.clone(),
                (StageOp::Project { dropped }, None) => format!("project {dropped}"),
                _ => "stage".into(),
            };
            out.push_str(&format!(
                "  s{} [label=\"{}\\n{}\"];\n  s{} -> s{};\n",
                i + 1,
                label,
                s.cod_space.describe(),
                i,
                i + 1
            ));
        }
        out.push_str("}\n");
        out
    }
}

// ---------------------------------------------------------------------------
// planning

#[derive(Debug)]
enum PlanKind {
    Apply { node: usize, retained: Vec<usize> },
    Project { dropped: usize },
}

#[derive(Debug)]
struct PlanStep {
    perm: Vec<usize>,
    kind: PlanKind,
    wires_out: Vec<usize>,
    cod_size: usize,
}

struct Plan {
    prefix: Vec<usize>,
    steps: Vec<PlanStep>,
    width: usize,
}

fn check_order(net: &BayesNet, order: &[String]) -> Result<Vec<usize>> {
    if order.len() != net.len() {
        return Err(Error::Graph(format!(
            "order lists {} nodes, net has {}",
            order.len(),
            net.len()
        )));
    }
    let mut idx = Vec::with_capacity(order.len());
    let mut placed = vec![false; net.len()];
    for name in order {
        let i = net
            .index_of(name)
            .ok_or_else(|| Error::Graph(format!("order names unknown node {name}")))?;
        if placed[i] {
            return Err(Error::Graph(format!("order repeats node {name}")));
        }
        for p in &net.nodes()[i].parents {
            if !placed[net.index_of(p).unwrap()] {
                return Err(Error::Graph(format!(
                    "order is not topological: {name} precedes its parent {p}"
                )));
            }
        }
        placed[i] = true;
        idx.push(i);
    }
    Ok(idx)
}

fn plan(net: &BayesNet, order: &[String], keep: &[&str]) -> Result<Plan> {
    let order_idx = check_order(net, order)?;
    let mut keep_flag = vec![false; net.len()];
    for name in keep {
        let i = net.index_of(name).ok_or_else(|| Error::UnknownName {
            name: (*name).to_string(),
        })?;
        keep_flag[i] = true;
    }
    let children = net.children();
    let mut remaining: Vec<usize> = children.iter().map(Vec::len).collect();
    let cards: Vec<usize> = net.nodes().iter().map(|n| n.card()).collect();
    let size_of = |wires: &[usize]| -> usize { wires.iter().map(|&w| cards[w]).product() };

    // leading run of roots folds into the initial state
    let mut cursor = 0;
    let mut prefix = Vec::new();
    while cursor < order_idx.len() && net.nodes()[order_idx[cursor]].is_root() {
        prefix.push(order_idx[cursor]);
        cursor += 1;
    }

    let mut wires: Vec<usize> = prefix.clone();
    let mut steps = Vec::new();
    let mut width = size_of(&wires).max(1);

    let project_dead = |wires: &mut Vec<usize>,
                        remaining: &[usize],
                        steps: &mut Vec<PlanStep>,
                        width: &mut usize| {
        let dead: Vec<usize> = (0..wires.len())
            .filter(|&j| remaining[wires[j]] == 0 && !keep_flag[wires[j]])
            .collect();
        if dead.is_empty() {
            return;
        }
        let alive: Vec<usize> = (0..wires.len()).filter(|j| !dead.contains(j)).collect();
        let perm: Vec<usize> = dead.iter().chain(alive.iter()).copied().collect();
        let out: Vec<usize> = alive.iter().map(|&j| wires[j]).collect();
        let cod_size = out.iter().map(|&w| cards[w]).product::<usize>().max(1);
        steps.push(PlanStep {
            perm,
            kind: PlanKind::Project {
                dropped: dead.len(),
            },
            wires_out: out.clone(),
            cod_size,
        });
        *width = (*width).max(cod_size);
        *wires = out;
    };

    project_dead(&mut wires, &remaining, &mut steps, &mut width);

    for &ni in &order_idx[cursor..] {
        let node = &net.nodes()[ni];
        let parent_idx: Vec<usize> = node
            .parents
            .iter()
            .map(|p| net.index_of(p).unwrap())
            .collect();
        // claim one wire position per parent, in CPT order
        let claimed: Vec<usize> = parent_idx
            .iter()
            .map(|&p| {
                wires
                    .iter()
                    .position(|&w| w == p)
                    .expect("topological order guarantees live parent wires")
            })
            .collect();
        let rest: Vec<usize> = (0..wires.len()).filter(|j| !claimed.contains(j)).collect();
        let perm: Vec<usize> = claimed.iter().chain(rest.iter()).copied().collect();
        let retained: Vec<usize> = (0..parent_idx.len())
            .filter(|&s| remaining[parent_idx[s]] > 1 || keep_flag[parent_idx[s]])
            .collect();
        for &p in &parent_idx {
            remaining[p] -= 1;
        }
        let mut out = Vec::with_capacity(1 + retained.len() + rest.len());
        out.push(ni);
        out.extend(retained.iter().map(|&s| parent_idx[s]));
        out.extend(rest.iter().map(|&j| wires[j]));
        let cod_size = size_of(&out);
        width = width.max(cod_size);
        steps.push(PlanStep {
            perm,
            kind: PlanKind::Apply { node: ni, retained },
            wires_out: out.clone(),
            cod_size,
        });
        wires = out;
        project_dead(&mut wires, &remaining, &mut steps, &mut width);
    }

    Ok(Plan {
        prefix,
        steps,
        width,
    })
}

/// The width a chain stretched along `order` would have, computed by symbolic
/// wire-cardinality simulation without building any matrix (a "dry run").
pub fn chain_width(net: &BayesNet, order: &[String], keep: &[&str]) -> Result<usize> {
    Ok(plan(net, order, keep)?.width)
}

/// Builds the chain of channel stages for `order`. Wires named in `keep` are
/// never projected away (the observation node during inference; the sink
/// nodes when stretching a whole network).
pub fn stretch(net: &BayesNet, order: &[String], keep: &[&str]) -> Result<Chain> {
    let plan = plan(net, order, keep)?;
    let var_of = |ni: usize| -> Result<Var> {
        let n = &net.nodes()[ni];
        Var::new(n.name.clone(), n.labels.clone())
    };

    let mut initial = State::unit();
    for &ni in &plan.prefix {
        initial = initial.tensor(&net.root_prior(&net.nodes()[ni].name)?);
    }
    let initial_wires: Vec<String> = plan
        .prefix
        .iter()
        .map(|&ni| net.nodes()[ni].name.clone())
        .collect();

    let mut stages = Vec::with_capacity(plan.steps.len());
    for step in &plan.steps {
        let cod_space = Space::new(
            step.wires_out
                .iter()
                .map(|&ni| var_of(ni))
                .collect::<Result<Vec<_>>>()?,
        )?;
        debug_assert_eq!(cod_space.size(), step.cod_size);
        let (op, introduces) = match &step.kind {
            PlanKind::Apply { node, retained } => {
                let name = &net.nodes()[*node].name;
                let channel = net.cpt_to_channel(name)?;
                (
                    StageOp::Apply {
                        consumed: channel.dom().vars().len(),
                        channel,
                        retained: retained.clone(),
                    },
                    Some(name.clone()),
                )
            }
            PlanKind::Project { dropped } => (StageOp::Project { dropped: *dropped }, None),
        };
        stages.push(Stage {
            perm: step.perm.clone(),
            op,
            introduces,
            wires_out: step
                .wires_out
                .iter()
                .map(|&ni| net.nodes()[ni].name.clone())
                .collect(),
            cod_space,
        });
    }

    Ok(Chain {
        initial,
        initial_wires,
        stages,
        width: plan.width,
    })
}

/// Samples `n_runs` random topological orders (run `i` seeded with
/// `seed + i`), dry-runs each, and returns the first order achieving the
/// minimum width. Deterministic for a fixed seed regardless of scheduling.
pub fn dry_run_select(
    net: &BayesNet,
    keep: &[&str],
    n_runs: usize,
    seed: u64,
) -> Result<(Vec<String>, usize)> {
    if n_runs == 0 {
        return Err(Error::Query("dry run count must be at least 1".into()));
    }
    let mut best: Option<(usize, Vec<String>)> = None;
    for run in 0..n_runs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(run as u64));
        let order = topological_order(net, &mut rng);
        let width = chain_width(net, &order, keep)?;
        let better = match &best {
            None => true,
            Some((w, _)) => width < *w,
        };
        if better {
            best = Some((width, order));
        }
    }
    let (width, order) = best.unwrap();
    Ok((order, width))
}

/// Distribution of widths over `n_runs` dry runs, for reporting.
pub fn dry_run_widths(
    net: &BayesNet,
    keep: &[&str],
    n_runs: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(n_runs);
    for run in 0..n_runs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(run as u64));
        let order = topological_order(net, &mut rng);
        out.push(chain_width(net, &order, keep)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{asia, assert_close, random_net, rng_for};

    fn keep_sinks(net: &BayesNet) -> Vec<String> {
        net.sinks()
    }

    fn as_refs(v: &[String]) -> Vec<&str> {
        v.iter().map(String::as_str).collect()
    }

    fn strs(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn figure_order_gives_width_eight() {
        let net = asia();
        let order = strs(&[
            "smoke", "asia", "bronc", "lung", "tub", "either", "dysp", "xray",
        ]);
        let keep = keep_sinks(&net);
        let chain = stretch(&net, &order, &as_refs(&keep)).unwrap();
        assert_eq!(chain.width(), 8);
        assert_eq!(chain.initial().space().size(), 4);
        assert_eq!(chain.initial().probs(), &[0.005, 0.495, 0.005, 0.495]);
        // the introduced sequence follows the order beyond the two roots
        let intro: Vec<_> = chain
            .stages()
            .iter()
            .filter_map(|s| s.introduces.clone())
            .collect();
        assert_eq!(
            intro,
            strs(&["bronc", "lung", "tub", "either", "dysp", "xray"])
        );
        assert_eq!(chain_width(&net, &order, &as_refs(&keep)).unwrap(), 8);
    }

    #[test]
    fn single_root_is_just_the_prior() {
        let net = asia().prune(&["smoke"]).unwrap();
        let order = strs(&["smoke"]);
        let chain = stretch(&net, &order, &["smoke"]).unwrap();
        assert!(chain.is_empty());
        assert_eq!(chain.initial().probs(), &[0.5, 0.5]);
        assert_eq!(chain.width(), 2);
    }

    #[test]
    fn full_chain_reproduces_the_dysp_marginal() {
        let net = asia();
        let order = strs(&[
            "smoke", "asia", "bronc", "lung", "tub", "either", "dysp", "xray",
        ]);
        let keep = keep_sinks(&net);
        let chain = stretch(&net, &order, &as_refs(&keep)).unwrap();
        let end = chain.push_through().unwrap();
        let dysp = end.marginalize(&["dysp"]).unwrap();
        assert_close(dysp.probs(), &[0.3974534, 0.6025466], 1e-12);
    }

    #[test]
    fn rejects_non_topological_orders() {
        let net = asia();
        let order = strs(&[
            "bronc", "smoke", "asia", "lung", "tub", "either", "dysp", "xray",
        ]);
        assert!(matches!(stretch(&net, &order, &[]), Err(Error::Graph(_))));
        let short = strs(&["smoke"]);
        assert!(chain_width(&net, &short, &[]).is_err());
    }

    #[test]
    fn exhaustive_asia_orders_all_have_width_eight() {
        // independent enumeration of every topological order
        let net = asia();
        let keep = keep_sinks(&net);
        let keep: Vec<&str> = keep.iter().map(String::as_str).collect();
        let names = net.node_names();
        let mut orders = Vec::new();
        let mut current = Vec::new();
        fn rec(
            net: &BayesNet,
            names: &[String],
            current: &mut Vec<String>,
            orders: &mut Vec<Vec<String>>,
        ) {
            if current.len() == names.len() {
                orders.push(current.clone());
                return;
            }
            for name in names {
                if current.contains(name) {
                    continue;
                }
                let parents = &net.node(name).unwrap().parents;
                if parents.iter().all(|p| current.contains(p)) {
                    current.push(name.clone());
                    rec(net, names, current, orders);
                    current.pop();
                }
            }
        }
        rec(&net, &names, &mut current, &mut orders);
        assert_eq!(orders.len(), 58);
        let widths: Vec<usize> = orders
            .iter()
            .map(|o| chain_width(&net, o, &keep).unwrap())
            .collect();
        assert_eq!(*widths.iter().min().unwrap(), 8);
        assert_eq!(*widths.iter().max().unwrap(), 8);
    }

    #[test]
    fn dry_run_select_is_deterministic_and_finds_asia_minimum() {
        let net = asia();
        let keep = keep_sinks(&net);
        let keep: Vec<&str> = keep.iter().map(String::as_str).collect();
        let (order_a, w_a) = dry_run_select(&net, &keep, 100, 7).unwrap();
        let (order_b, w_b) = dry_run_select(&net, &keep, 100, 7).unwrap();
        assert_eq!(order_a, order_b);
        assert_eq!(w_a, 8);
        assert_eq!(w_b, 8);
        let (_, w1) = dry_run_select(&net, &keep, 1, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let only = topological_order(&net, &mut rng);
        assert_eq!(w1, chain_width(&net, &only, &keep).unwrap());
    }

    #[test]
    fn chain_width_agrees_with_built_chains_on_random_nets() {
        let mut rng = rng_for("width-agree");
        for _ in 0..40 {
            let net = random_net(&mut rng, 7, 0.4, 3);
            let keep = keep_sinks(&net);
            let keep: Vec<&str> = keep.iter().map(String::as_str).collect();
            let order = topological_order(&net, &mut rng);
            let w = chain_width(&net, &order, &keep).unwrap();
            let chain = stretch(&net, &order, &keep).unwrap();
            assert_eq!(w, chain.width());
            // recompute from the built spaces
            let mut seen = chain.initial().space().size();
            for s in chain.stages() {
                seen = seen.max(s.cod_space().size());
            }
            assert_eq!(w, seen);
            assert!(w >= net.nodes().iter().map(|n| n.card()).max().unwrap());
        }
    }

    #[test]
    fn wire_conservation_holds_along_random_chains() {
        let mut rng = rng_for("wire-conserve");
        for _ in 0..25 {
            let net = random_net(&mut rng, 7, 0.4, 3);
            let keep = keep_sinks(&net);
            let keep: Vec<&str> = keep.iter().map(String::as_str).collect();
            let order = topological_order(&net, &mut rng);
            let chain = stretch(&net, &order, &keep).unwrap();
            for (i, stage) in chain.stages().iter().enumerate() {
                let prev: Vec<String> = chain.wires_at(i).to_vec();
                let out = &stage.wires_out;
                match &stage.op {
                    StageOp::Apply {
                        consumed, retained, ..
                    } => {
                        let node = stage.introduces.clone().unwrap();
                        assert_eq!(out[0], node);
                        // post-perm leading wires are the node's parents
                        let parents = &net.node(&node).unwrap().parents;
                        let shuffled: Vec<&String> = stage.perm.iter().map(|&j| &prev[j]).collect();
                        assert_eq!(*consumed, parents.len());
                        for (s, p) in parents.iter().enumerate() {
                            assert_eq!(shuffled[s], p);
                        }
                        // retained parents stay, consumed ones vanish, rest pass through
                        let mut expect = vec![node.clone()];
                        expect.extend(retained.iter().map(|&s| parents[s].clone()));
                        expect.extend(shuffled[*consumed..].iter().map(|s| (*s).clone()));
                        assert_eq!(*out, expect);
                    }
                    StageOp::Project { dropped } => {
                        let shuffled: Vec<&String> = stage.perm.iter().map(|&j| &prev[j]).collect();
                        let expect: Vec<String> =
                            shuffled[*dropped..].iter().map(|s| (*s).clone()).collect();
                        assert_eq!(*out, expect);
                        for w in &shuffled[..*dropped] {
                            assert!(!keep.contains(&w.as_str()));
                        }
                    }
                }
                // no wire needed later is gone: every future parent is live
                let live: std::collections::HashSet<&String> = out.iter().collect();
                let pos = |n: &str| order.iter().position(|o| o == n).unwrap();
                for future in order
                    .iter()
                    .filter(|n| chain.point_of(n).map(|p| p > i + 1).unwrap_or(false))
                {
                    for parent in &net.node(future).unwrap().parents {
                        if pos(parent) < pos(future) && chain.point_of(parent).unwrap() <= i + 1 {
                            assert!(
                                live.contains(parent),
                                "wire {parent} needed by {future} dropped early"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn structured_stage_application_matches_materialized_channels() {
        let mut rng = rng_for("stage-dual");
        for _ in 0..20 {
            let net = random_net(&mut rng, 6, 0.45, 4);
            let keep = keep_sinks(&net);
            let keep: Vec<&str> = keep.iter().map(String::as_str).collect();
            let order = topological_order(&net, &mut rng);
            let chain = stretch(&net, &order, &keep).unwrap();
            let mut w = chain.initial().clone();
            for (i, stage) in chain.stages().iter().enumerate() {
                let prev = chain.space_at(i);
                let ch = stage.channel(prev).unwrap();
                let via_matrix = ch.transform_state(&w).unwrap();
                let via_struct = stage.forward(prev, &w).unwrap();
                assert_close(via_struct.probs(), via_matrix.probs(), 1e-12);
                // backward pullback agrees too, on a random predicate
                let vals: Vec<f64> = (0..stage.cod_space().size())
                    .map(|_| rand::Rng::random_range(&mut rng, 0.0..1.0))
                    .collect();
                let q = Predicate::new(stage.cod_space().clone(), vals).unwrap();
                let back_matrix = ch.transform_pred(&q).unwrap();
                let back_struct = stage.backward(prev, &q).unwrap();
                assert_close(back_struct.values(), back_matrix.values(), 1e-12);
                w = via_struct;
            }
        }
    }

    #[test]
    fn chain_marginals_match_the_oracle_on_random_nets() {
        let mut rng = rng_for("chain-oracle");
        for _ in 0..20 {
            let net = random_net(&mut rng, 8, 0.35, 3);
            let keep = keep_sinks(&net);
            let keep: Vec<&str> = keep.iter().map(String::as_str).collect();
            let order = topological_order(&net, &mut rng);
            let chain = stretch(&net, &order, &keep).unwrap();
            let joint = crate::oracle::joint_state(&net).unwrap();
            // marginal of every node read off at its introduction point
            let mut w = chain.initial().clone();
            let check = |state: &State, pos: usize| {
                for wire in chain.wires_at(pos) {
                    if chain.point_of(wire) == Some(pos) {
                        let got = state.marginalize(&[wire]).unwrap();
                        let want = joint.marginal(wire).unwrap();
                        assert_close(got.probs(), want.probs(), 1e-9);
                    }
                }
            };
            check(&w, 0);
            for (i, stage) in chain.stages().iter().enumerate() {
                w = stage.forward(chain.space_at(i), &w).unwrap();
                check(&w, i + 1);
            }
        }
    }

    #[test]
    fn describe_and_dot_render() {
        let net = asia();
        let order = strs(&[
            "smoke", "asia", "bronc", "lung", "tub", "either", "dysp", "xray",
        ]);
        let keep = keep_sinks(&net);
        let chain = stretch(&net, &order, &as_refs(&keep)).unwrap();
        let text = chain.describe();
        assert!(text.contains("apply bronc"));
        assert!(text.contains("width: 8"));
        let dot = chain.to_dot();
        assert!(dot.starts_with("digraph chain {"));
        assert!(dot.contains("s0 -> s1"));
    }
}
