use crate::error::{Error, Result};

/// One named discrete variable with an ordered label set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Var {
    pub name: String,
    pub labels: Vec<String>,
}

impl Var {
    pub fn new(name: impl Into<String>, labels: Vec<String>) -> Result<Self> {
        let name = name.into();
        if labels.len() < 2 {
            return Err(Error::TooFewLabels { name });
        }
        Ok(Var { name, labels })
    }

    pub fn card(&self) -> usize {
        self.labels.len()
    }
}

/// An ordered list of discrete variables: the domain (or codomain) type of
/// states, predicates and channels. The empty list is the singleton space `1`.
///
/// Points of the space are indexed row-major over the variable order, first
/// variable slowest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Space {
    vars: Vec<Var>,
}

impl Space {
    pub fn new(vars: Vec<Var>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for v in &vars {
            if v.labels.len() < 2 {
                return Err(Error::TooFewLabels {
                    name: v.name.clone(),
                });
            }
            if !seen.insert(v.name.clone()) {
                return Err(Error::DuplicateName {
                    name: v.name.clone(),
                });
            }
        }
        Ok(Space { vars })
    }

    /// The singleton space `1` with a single point and no variables.
    pub fn unit() -> Self {
        Space { vars: Vec::new() }
    }

    /// A one-variable space.
    pub fn single(name: impl Into<String>, labels: &[&str]) -> Result<Self> {
        Space::new(vec![Var::new(
            name,
            labels.iter().map(|s| s.to_string()).collect(),
        )?])
    }

    /// Builds a space from possibly-colliding variables, making names unique
    /// by appending an incrementing positional suffix to later occurrences.
    pub fn with_renaming(vars: Vec<Var>) -> Self {
        let mut out: Vec<Var> = Vec::with_capacity(vars.len());
        let mut taken: std::collections::HashSet<String> = std::collections::HashSet::new();
        for mut v in vars {
            if taken.contains(&v.name) {
                let base = v.name.clone();
                let mut k = 1;
                while taken.contains(&format!("{base}__{k}")) {
                    k += 1;
                }
                v.name = format!("{base}__{k}");
            }
            taken.insert(v.name.clone());
            out.push(v);
        }
        Space { vars: out }
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn is_unit(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn size(&self) -> usize {
        self.vars.iter().map(Var::card).product()
    }

    pub fn cards(&self) -> Vec<usize> {
        self.vars.iter().map(Var::card).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    /// Product space `self x other`; names from `other` are suffixed on
    /// collision.
    pub fn product(&self, other: &Space) -> Space {
        let mut vars = self.vars.clone();
        vars.extend(other.vars.iter().cloned());
        Space::with_renaming(vars)
    }

    /// Strides for row-major indexing (first variable slowest).
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.vars.len()];
        for i in (0..self.vars.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.vars[i + 1].card();
        }
        strides
    }

    /// Decodes a flat index into per-variable label indices.
    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0usize; self.vars.len()];
        for i in (0..self.vars.len()).rev() {
            let c = self.vars[i].card();
            digits[i] = index % c;
            index /= c;
        }
        digits
    }

    /// Encodes per-variable label indices into a flat index.
    pub fn encode(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.vars.len());
        let mut index = 0usize;
        for (i, &d) in digits.iter().enumerate() {
            debug_assert!(d < self.vars[i].card());
            index = index * self.vars[i].card() + d;
        }
        index
    }

    /// The comma-joined label tuple at a flat index, e.g. `t,f`.
    pub fn point_label(&self, index: usize) -> String {
        let digits = self.decode(index);
        digits
            .iter()
            .enumerate()
            .map(|(i, &d)| self.vars[i].labels[d].as_str())
            .collect::<Vec<_>>()
            .join(",")
    }

    pub(crate) fn describe(&self) -> String {
        if self.is_unit() {
            "1".to_string()
        } else {
            self.vars
                .iter()
                .map(|v| format!("{}({})", v.name, v.card()))
                .collect::<Vec<_>>()
                .join(" x ")
        }
    }
}
