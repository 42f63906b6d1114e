use crate::error::{Error, Result};
use crate::space::Space;
use crate::NORM_TOL;

/// A fuzzy predicate on a [`Space`]: one truth value in `[0,1]` per point.
/// Sharp predicates take only the values 0 and 1; evidence in queries is just
/// a predicate on the evidence node's space.
#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    space: Space,
    values: Vec<f64>,
}

impl Predicate {
    pub fn new(space: Space, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.size() {
            return Err(Error::SpaceMismatch {
                op: "Predicate::new",
                expected: format!("{} entries", space.size()),
                found: format!("{} entries", values.len()),
            });
        }
        let mut clamped = values;
        for v in &mut clamped {
            if !v.is_finite() || *v < -NORM_TOL || *v > 1.0 + NORM_TOL {
                return Err(Error::OutOfRange {
                    context: "predicate value".into(),
                    value: *v,
                });
            }
            *v = v.clamp(0.0, 1.0);
        }
        Ok(Predicate {
            space,
            values: clamped,
        })
    }

    /// The truth predicate, constantly 1.
    pub fn truth(space: Space) -> Self {
        let n = space.size();
        Predicate {
            space,
            values: vec![1.0; n],
        }
    }

    /// Sharp predicate holding exactly at one point.
    pub fn indicator(space: Space, index: usize) -> Result<Self> {
        if index >= space.size() {
            return Err(Error::OutOfRange {
                context: "indicator index".into(),
                value: index as f64,
            });
        }
        let mut values = vec![0.0; space.size()];
        values[index] = 1.0;
        Ok(Predicate { space, values })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Pointwise conjunction `p & q` on a shared space.
    pub fn conjoin(&self, other: &Predicate) -> Result<Predicate> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch {
                op: "conjoin",
                expected: self.space.describe(),
                found: other.space.describe(),
            });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a * b)
            .collect();
        Ok(Predicate {
            space: self.space.clone(),
            values,
        })
    }

    /// Product predicate `(p ⊗ q)(x,y) = p(x) * q(y)`.
    pub fn tensor(&self, other: &Predicate) -> Predicate {
        let space = self.space.product(&other.space);
        let mut values = Vec::with_capacity(self.values.len() * other.values.len());
        for &a in &self.values {
            for &b in &other.values {
                values.push(a * b);
            }
        }
        Predicate { space, values }
    }

    /// Extends this predicate to `target` by tensoring with truth on every
    /// other coordinate, placing it at coordinate block `at`. The target
    /// coordinates starting at `at` must carry the same label lists as this
    /// predicate's space.
    pub fn weaken(&self, target: &Space, at: usize) -> Result<Predicate> {
        let n = self.space.vars().len();
        let tvars = target.vars();
        if at + n > tvars.len()
            || self
                .space
                .vars()
                .iter()
                .zip(&tvars[at..at + n])
                .any(|(a, b)| a.labels != b.labels)
        {
            return Err(Error::SpaceMismatch {
                op: "weaken",
                expected: self.space.describe(),
                found: target.describe(),
            });
        }
        let tcards = target.cards();
        let own_space_strides = self.space.strides();
        let mut values = vec![0.0; target.size()];
        let mut digits = vec![0usize; tvars.len()];
        for (idx, slot) in values.iter_mut().enumerate() {
            if idx > 0 {
                let mut i = tvars.len() - 1;
                loop {
                    digits[i] += 1;
                    if digits[i] < tcards[i] {
                        break;
                    }
                    digits[i] = 0;
                    i -= 1;
                }
            }
            let mut sub = 0usize;
            for k in 0..n {
                sub += digits[at + k] * own_space_strides[k];
            }
            *slot = self.values[sub];
        }
        Ok(Predicate {
            space: target.clone(),
            values,
        })
    }
}
