use std::collections::{HashMap, HashSet};

use rand::Rng;

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::space::{Space, Var};
use crate::state::State;
use crate::BIF_ROW_TOL;

/// One node of a Bayesian network: a named discrete variable, its parents,
/// and a conditional probability table with one row per parent-label
/// combination (row-major over the declared parent order, first parent
/// slowest) and one column per label.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeDef {
    pub name: String,
    pub labels: Vec<String>,
    pub parents: Vec<String>,
    pub cpt: Vec<f64>,
}

impl NodeDef {
    pub fn card(&self) -> usize {
        self.labels.len()
    }

    pub fn is_root(&self) -> bool {
        self.parents.is_empty()
    }
}

/// A directed acyclic graph of [`NodeDef`]s in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesNet {
    name: String,
    nodes: Vec<NodeDef>,
    by_name: HashMap<String, usize>,
}

impl BayesNet {
    /// Validates node references, CPT shapes, row normalization (within
    /// [`BIF_ROW_TOL`], then renormalized exactly) and acyclicity.
    pub fn new(name: impl Into<String>, mut nodes: Vec<NodeDef>) -> Result<Self> {
        let mut by_name = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if n.labels.len() < 2 {
                return Err(Error::TooFewLabels {
                    name: n.name.clone(),
                });
            }
            if by_name.insert(n.name.clone(), i).is_some() {
                return Err(Error::DuplicateName {
                    name: n.name.clone(),
                });
            }
        }
        for n in &nodes {
            let mut seen = HashSet::new();
            for p in &n.parents {
                if !by_name.contains_key(p) {
                    return Err(Error::UnknownName { name: p.clone() });
                }
                if !seen.insert(p) {
                    return Err(Error::DuplicateName { name: p.clone() });
                }
            }
        }
        let cards: HashMap<String, usize> = nodes
            .iter()
            .map(|n| (n.name.clone(), n.labels.len()))
            .collect();
        for n in &mut nodes {
            let rows: usize = n.parents.iter().map(|p| cards[p]).product();
            let cols = n.labels.len();
            if n.cpt.len() != rows * cols {
                return Err(Error::SpaceMismatch {
                    op: "NodeDef cpt",
                    expected: format!("{} x {} entries for {}", rows, cols, n.name),
                    found: format!("{}", n.cpt.len()),
                });
            }
            for r in 0..rows {
                let row = &mut n.cpt[r * cols..(r + 1) * cols];
                let mut sum = 0.0;
                for &v in row.iter() {
                    if v < 0.0 || !v.is_finite() {
                        return Err(Error::OutOfRange {
                            context: format!("cpt row {} of {}", r, n.name),
                            value: v,
                        });
                    }
                    sum += v;
                }
                if (sum - 1.0).abs() > BIF_ROW_TOL {
                    return Err(Error::NotNormalized {
                        what: format!("cpt row {} of {}", r, n.name),
                        sum,
                    });
                }
                for v in row.iter_mut() {
                    *v /= sum;
                }
            }
        }
        let net = BayesNet {
            name: name.into(),
            nodes,
            by_name,
        };
        net.check_acyclic()?;
        Ok(net)
    }

    fn check_acyclic(&self) -> Result<()> {
        // Kahn's algorithm; any unplaced node sits on a cycle.
        let n = self.nodes.len();
        let mut indeg = vec![0usize; n];
        let mut children = vec![Vec::new(); n];
        for (i, node) in self.nodes.iter().enumerate() {
            for p in &node.parents {
                let pi = self.by_name[p];
                children[pi].push(i);
                indeg[i] += 1;
            }
        }
        let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut placed = 0;
        while let Some(i) = ready.pop() {
            placed += 1;
            for &c in &children[i] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.push(c);
                }
            }
        }
        if placed < n {
            let stuck = (0..n).find(|&i| indeg[i] > 0).unwrap();
            return Err(Error::Cycle {
                node: self.nodes[stuck].name.clone(),
            });
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NodeDef] {
        &self.nodes
    }

    pub fn node(&self, name: &str) -> Result<&NodeDef> {
        self.by_name
            .get(name)
            .map(|&i| &self.nodes[i])
            .ok_or_else(|| Error::UnknownName { name: name.into() })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.by_name.contains_key(name)
    }

    pub fn node_names(&self) -> Vec<String> {
        self.nodes.iter().map(|n| n.name.clone()).collect()
    }

    /// Children lists in declaration order, parallel to `nodes()`.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            for p in &n.parents {
                out[self.by_name[p]].push(i);
            }
        }
        out
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    /// Nodes without children.
    pub fn sinks(&self) -> Vec<String> {
        let children = self.children();
        self.nodes
            .iter()
            .enumerate()
            .filter(|(i, _)| children[*i].is_empty())
            .map(|(_, n)| n.name.clone())
            .collect()
    }

    /// The one-variable space of a node.
    pub fn var_space(&self, name: &str) -> Result<Space> {
        let n = self.node(name)?;
        Space::new(vec![Var::new(n.name.clone(), n.labels.clone())?])
    }

    /// The CPT of `node` as a channel `B₁ x ... x Bₙ ⇸ A` from the product of
    /// its parents' spaces (declared order) to its own space. Roots become
    /// channels from the singleton space, i.e. their prior.
    pub fn cpt_to_channel(&self, name: &str) -> Result<Channel> {
        let node = self.node(name)?;
        let mut dom_vars = Vec::with_capacity(node.parents.len());
        for p in &node.parents {
            let pd = self.node(p)?;
            dom_vars.push(Var::new(pd.name.clone(), pd.labels.clone())?);
        }
        let dom = Space::new(dom_vars)?;
        let cod = self.var_space(name)?;
        Channel::new(dom, cod, node.cpt.clone())
    }

    /// A root node's prior as a state.
    pub fn root_prior(&self, name: &str) -> Result<State> {
        let node = self.node(name)?;
        if !node.is_root() {
            return Err(Error::Query(format!("{name} is not a root node")));
        }
        State::new(self.var_space(name)?, node.cpt.clone())
    }

    /// Removes every node that has no member of `relevant` in its descendant
    /// closure (itself included): one backward reachability pass over parent
    /// edges from the relevant set. The result is a valid net containing the
    /// full ancestor closure of `relevant`.
    pub fn prune(&self, relevant: &[&str]) -> Result<BayesNet> {
        let mut stack = Vec::with_capacity(relevant.len());
        for name in relevant {
            match self.by_name.get(*name) {
                Some(&i) => stack.push(i),
                None => {
                    return Err(Error::UnknownName {
                        name: (*name).to_string(),
                    })
                }
            }
        }
        let mut keep = vec![false; self.nodes.len()];
        while let Some(i) = stack.pop() {
            if keep[i] {
                continue;
            }
            keep[i] = true;
            for p in &self.nodes[i].parents {
                stack.push(self.by_name[p]);
            }
        }
        let nodes: Vec<NodeDef> = self
            .nodes
            .iter()
            .enumerate()
            .filter(|(i, _)| keep[*i])
            .map(|(_, n)| n.clone())
            .collect();
        BayesNet::new(self.name.clone(), nodes)
    }
}

/// A uniformly-randomized topological order: at every step one node is drawn
/// uniformly among those whose parents are all placed. Deterministic for a
/// fixed RNG state.
pub fn topological_order<R: Rng + ?Sized>(net: &BayesNet, rng: &mut R) -> Vec<String> {
    let n = net.len();
    let mut indeg: Vec<usize> = net.nodes().iter().map(|d| d.parents.len()).collect();
    let children = net.children();
    // kept sorted by node index so candidate enumeration is deterministic
    let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while !ready.is_empty() {
        let pick = rng.random_range(0..ready.len());
        let i = ready.remove(pick);
        order.push(net.nodes()[i].name.clone());
        for &c in &children[i] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                let pos = ready.partition_point(|&r| r < c);
                ready.insert(pos, c);
            }
        }
    }
    debug_assert_eq!(order.len(), n, "valid nets are acyclic");
    order
}
