use crate::error::{Error, Result};
use crate::predicate::Predicate;
use crate::space::Space;
use crate::NORM_TOL;

/// A probability distribution over a [`Space`]: non-negative entries summing
/// to 1 within [`NORM_TOL`], indexed row-major over the variable order.
///
/// States are never silently renormalized; any operation that drifts past the
/// tolerance fails in this constructor instead.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    space: Space,
    probs: Vec<f64>,
}

impl State {
    pub fn new(space: Space, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != space.size() {
            return Err(Error::SpaceMismatch {
                op: "State::new",
                expected: format!("{} entries", space.size()),
                found: format!("{} entries", probs.len()),
            });
        }
        for &p in &probs {
            if p < 0.0 || !p.is_finite() {
                return Err(Error::OutOfRange {
                    context: "state probability".into(),
                    value: p,
                });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized {
                what: "state".into(),
                sum,
            });
        }
        Ok(State { space, probs })
    }

    /// Point mass at one index of the space.
    pub fn point(space: Space, index: usize) -> Result<Self> {
        if index >= space.size() {
            return Err(Error::OutOfRange {
                context: "point index".into(),
                value: index as f64,
            });
        }
        let mut probs = vec![0.0; space.size()];
        probs[index] = 1.0;
        Ok(State { space, probs })
    }

    pub fn uniform(space: Space) -> Self {
        let n = space.size();
        State {
            space,
            probs: vec![1.0 / n as f64; n],
        }
    }

    /// The unique state on the singleton space `1`.
    pub fn unit() -> Self {
        State {
            space: Space::unit(),
            probs: vec![1.0],
        }
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Joint product state; colliding names from `other` are suffixed.
    pub fn tensor(&self, other: &State) -> State {
        let space = self.space.product(&other.space);
        let mut probs = Vec::with_capacity(self.probs.len() * other.probs.len());
        for &a in &self.probs {
            for &b in &other.probs {
                probs.push(a * b);
            }
        }
        State { space, probs }
    }

    /// Validity `w |= p`: the expected value of `p` in this state.
    pub fn validity(&self, p: &Predicate) -> Result<f64> {
        if p.space() != &self.space {
            return Err(Error::SpaceMismatch {
                op: "validity",
                expected: self.space.describe(),
                found: p.space().describe(),
            });
        }
        Ok(self
            .probs
            .iter()
            .zip(p.values())
            .map(|(&r, &v)| r * v)
            .sum())
    }

    /// Conditioning `w given p`: reweight by the predicate and renormalize by
    /// the validity. Fails with [`Error::ZeroValidity`] when `w |= p` is zero.
    pub fn update(&self, p: &Predicate) -> Result<State> {
        let validity = self.validity(p)?;
        if validity <= 0.0 {
            return Err(Error::ZeroValidity);
        }
        let probs = self
            .probs
            .iter()
            .zip(p.values())
            .map(|(&r, &v)| r * v / validity)
            .collect();
        State::new(self.space.clone(), probs)
    }

    /// Sums out every coordinate not named in `keep`; the output variable
    /// order follows this state's order restricted to `keep`.
    pub fn marginalize(&self, keep: &[&str]) -> Result<State> {
        let mut keep_idx = Vec::with_capacity(keep.len());
        for name in keep {
            match self.space.index_of(name) {
                Some(i) => keep_idx.push(i),
                None => {
                    return Err(Error::UnknownName {
                        name: (*name).to_string(),
                    })
                }
            }
        }
        keep_idx.sort_unstable();
        keep_idx.dedup();
        if keep_idx.is_empty() {
            return Err(Error::Query(
                "marginalize needs at least one variable".into(),
            ));
        }
        self.marginalize_indices(&keep_idx)
    }

    /// Index-based marginalization; `keep` must be strictly increasing.
    pub fn marginalize_indices(&self, keep: &[usize]) -> Result<State> {
        let vars = self.space.vars();
        let out_space = Space::new(keep.iter().map(|&i| vars[i].clone()).collect())?;
        let out_strides = out_space.strides();
        let mut probs = vec![0.0; out_space.size()];
        let mut digits = vec![0usize; vars.len()];
        for (idx, &p) in self.probs.iter().enumerate() {
            // incremental odometer instead of decode() per entry
            if idx > 0 {
                let mut i = vars.len() - 1;
                loop {
                    digits[i] += 1;
                    if digits[i] < vars[i].card() {
                        break;
                    }
                    digits[i] = 0;
                    i -= 1;
                }
            }
            let mut out = 0usize;
            for (k, &vi) in keep.iter().enumerate() {
                out += digits[vi] * out_strides[k];
            }
            probs[out] += p;
        }
        State::new(out_space, probs)
    }

    /// Replaces the space with an equally-shaped one (same cardinalities);
    /// used to restore original node names after chain bookkeeping.
    pub fn relabel(&self, space: Space) -> Result<State> {
        if space.size() != self.space.size() || space.cards() != self.space.cards() {
            return Err(Error::SpaceMismatch {
                op: "relabel",
                expected: self.space.describe(),
                found: space.describe(),
            });
        }
        Ok(State {
            space,
            probs: self.probs.clone(),
        })
    }
}

/// Ket notation: `0.3669|t> + 0.6331|f>`: four decimals, labels comma-joined,
/// terms in row-major index order.
impl std::fmt::Display for State {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let terms: Vec<String> = self
            .probs
            .iter()
            .enumerate()
            .map(|(i, p)| format!("{:.4}|{}>", p, self.space.point_label(i)))
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}
