use crate::error::{Error, Result};
use crate::predicate::Predicate;
use crate::space::Space;
use crate::state::State;
use crate::NORM_TOL;

/// A probabilistic channel `dom ⇸ cod`: a row-stochastic matrix with one row
/// (a distribution on `cod`) per point of `dom`. Conditional probability
/// tables, deterministic maps, copies and projections are all channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    dom: Space,
    cod: Space,
    matrix: Vec<f64>, // row-major, matrix[x * cod.size() + y]
}

impl Channel {
    pub fn new(dom: Space, cod: Space, matrix: Vec<f64>) -> Result<Self> {
        let (n, m) = (dom.size(), cod.size());
        if matrix.len() != n * m {
            return Err(Error::SpaceMismatch {
                op: "Channel::new",
                expected: format!("{} entries", n * m),
                found: format!("{} entries", matrix.len()),
            });
        }
        for (x, row) in matrix.chunks(m).enumerate() {
            let mut sum = 0.0;
            for &v in row {
                if v < 0.0 || !v.is_finite() {
                    return Err(Error::OutOfRange {
                        context: format!("channel row {x}"),
                        value: v,
                    });
                }
                sum += v;
            }
            if (sum - 1.0).abs() > NORM_TOL {
                return Err(Error::NotNormalized {
                    what: format!("channel row {x}"),
                    sum,
                });
            }
        }
        Ok(Channel { dom, cod, matrix })
    }

    pub fn identity(space: &Space) -> Self {
        let n = space.size();
        let mut matrix = vec![0.0; n * n];
        for x in 0..n {
            matrix[x * n + x] = 1.0;
        }
        Channel {
            dom: space.clone(),
            cod: space.clone(),
            matrix,
        }
    }

    /// A state seen as a channel `1 ⇸ X` from the singleton space.
    pub fn from_state(state: &State) -> Self {
        Channel {
            dom: Space::unit(),
            cod: state.space().clone(),
            matrix: state.probs().to_vec(),
        }
    }

    /// The copy channel `Δ: X ⇸ X x X`, each row a point mass at `(x,x)`.
    /// The second copy's variable names are suffixed.
    pub fn copy(space: &Space) -> Self {
        let cod = space.product(space);
        let n = space.size();
        let mut matrix = vec![0.0; n * n * n];
        for x in 0..n {
            matrix[x * (n * n) + x * n + x] = 1.0;
        }
        Channel {
            dom: space.clone(),
            cod,
            matrix,
        }
    }

    /// Projection `π: X₁ x ... x Xₖ ⇸ Π_{i in keep} Xᵢ`; state transformation
    /// along it is marginalization.
    pub fn projection(space: &Space, keep: &[usize]) -> Result<Self> {
        let vars = space.vars();
        for &i in keep {
            if i >= vars.len() {
                return Err(Error::OutOfRange {
                    context: "projection coordinate".into(),
                    value: i as f64,
                });
            }
        }
        let cod = Space::new(keep.iter().map(|&i| vars[i].clone()).collect())?;
        let cod_strides = cod.strides();
        let n = space.size();
        let m = cod.size();
        let mut matrix = vec![0.0; n * m];
        for x in 0..n {
            let digits = space.decode(x);
            let y: usize = keep
                .iter()
                .enumerate()
                .map(|(k, &i)| digits[i] * cod_strides[k])
                .sum();
            matrix[x * m + y] = 1.0;
        }
        Ok(Channel {
            dom: space.clone(),
            cod,
            matrix,
        })
    }

    /// Deterministic wire shuffle: output coordinate `j` carries input
    /// coordinate `perm[j]`. `perm` must be a bijection on the coordinates.
    pub fn permutation(space: &Space, perm: &[usize]) -> Result<Self> {
        let vars = space.vars();
        if !is_permutation(perm, vars.len()) {
            return Err(Error::InvalidPermutation);
        }
        let cod = Space::new(perm.iter().map(|&i| vars[i].clone()).collect())?;
        let cod_strides = cod.strides();
        let n = space.size();
        let mut matrix = vec![0.0; n * n];
        for x in 0..n {
            let digits = space.decode(x);
            let y: usize = perm
                .iter()
                .enumerate()
                .map(|(j, &i)| digits[i] * cod_strides[j])
                .sum();
            matrix[x * n + y] = 1.0;
        }
        Ok(Channel {
            dom: space.clone(),
            cod,
            matrix,
        })
    }

    pub fn dom(&self) -> &Space {
        &self.dom
    }

    pub fn cod(&self) -> &Space {
        &self.cod
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn row(&self, x: usize) -> &[f64] {
        let m = self.cod.size();
        &self.matrix[x * m..(x + 1) * m]
    }

    /// Swaps the space labels without touching the matrix; the new spaces must
    /// have the same cardinality profile. Chain bookkeeping uses this to line
    /// up CPT channels with suffixed wire names.
    pub fn relabel(&self, dom: Space, cod: Space) -> Result<Channel> {
        if dom.size() != self.dom.size() || cod.size() != self.cod.size() {
            return Err(Error::SpaceMismatch {
                op: "Channel::relabel",
                expected: format!("{} -> {}", self.dom.describe(), self.cod.describe()),
                found: format!("{} -> {}", dom.describe(), cod.describe()),
            });
        }
        Ok(Channel {
            dom,
            cod,
            matrix: self.matrix.clone(),
        })
    }

    /// State transformation `c >> w`: pushes a distribution on the domain
    /// forward to one on the codomain.
    pub fn transform_state(&self, state: &State) -> Result<State> {
        if state.space() != &self.dom {
            return Err(Error::SpaceMismatch {
                op: "state transformation",
                expected: self.dom.describe(),
                found: state.space().describe(),
            });
        }
        let m = self.cod.size();
        let mut probs = vec![0.0; m];
        for (x, &r) in state.probs().iter().enumerate() {
            if r == 0.0 {
                continue;
            }
            let row = self.row(x);
            for (y, &s) in row.iter().enumerate() {
                probs[y] += r * s;
            }
        }
        State::new(self.cod.clone(), probs)
    }

    /// Predicate transformation `c << q`: pulls a predicate on the codomain
    /// back to the expected truth value per domain point.
    pub fn transform_pred(&self, pred: &Predicate) -> Result<Predicate> {
        if pred.space() != &self.cod {
            return Err(Error::SpaceMismatch {
                op: "predicate transformation",
                expected: self.cod.describe(),
                found: pred.space().describe(),
            });
        }
        let n = self.dom.size();
        let values = (0..n)
            .map(|x| {
                self.row(x)
                    .iter()
                    .zip(pred.values())
                    .map(|(&s, &q)| s * q)
                    .sum()
            })
            .collect();
        Predicate::new(self.dom.clone(), values)
    }

    /// Sequential composition `self ∗ other` (apply `other` first): row `x` of
    /// the result is `self >> other(x)`.
    pub fn after(&self, other: &Channel) -> Result<Channel> {
        if other.cod != self.dom {
            return Err(Error::SpaceMismatch {
                op: "sequential composition",
                expected: self.dom.describe(),
                found: other.cod.describe(),
            });
        }
        let n = other.dom.size();
        let m = self.cod.size();
        let mut matrix = vec![0.0; n * m];
        for x in 0..n {
            let row = other.row(x);
            let out = &mut matrix[x * m..(x + 1) * m];
            for (y, &s) in row.iter().enumerate() {
                if s == 0.0 {
                    continue;
                }
                for (z, &t) in self.row(y).iter().enumerate() {
                    out[z] += s * t;
                }
            }
        }
        Channel::new(other.dom.clone(), self.cod.clone(), matrix)
    }

    /// Parallel composition `c ⊗ d` acting independently on a product space.
    pub fn tensor(&self, other: &Channel) -> Channel {
        let dom = self.dom.product(&other.dom);
        let cod = self.cod.product(&other.cod);
        let (m1, m2) = (self.cod.size(), other.cod.size());
        let m = m1 * m2;
        let mut matrix = vec![0.0; dom.size() * m];
        for x1 in 0..self.dom.size() {
            for x2 in 0..other.dom.size() {
                let x = x1 * other.dom.size() + x2;
                let out = &mut matrix[x * m..(x + 1) * m];
                for (y1, &a) in self.row(x1).iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    for (y2, &b) in other.row(x2).iter().enumerate() {
                        out[y1 * m2 + y2] = a * b;
                    }
                }
            }
        }
        Channel { dom, cod, matrix }
    }
}

fn is_permutation(perm: &[usize], n: usize) -> bool {
    if perm.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &i in perm {
        if i >= n || seen[i] {
            return false;
        }
        seen[i] = true;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{asia, assert_close, rng_for, small_channel, small_state};
    use rand::Rng;

    #[test]
    fn lung_after_smoke_matches_fig1() {
        let net = asia();
        let smoke = net.root_prior("smoke").unwrap();
        let lung = net.cpt_to_channel("lung").unwrap();
        let out = lung.transform_state(&smoke).unwrap();
        assert_close(out.probs(), &[0.055, 0.945], 1e-12);

        let asia_st = net.root_prior("asia").unwrap();
        let tub = net.cpt_to_channel("tub").unwrap();
        let out = tub.transform_state(&asia_st).unwrap();
        assert_close(out.probs(), &[0.0104, 0.9896], 1e-12);
    }

    #[test]
    fn identity_transforms_are_identities() {
        let mut rng = rng_for("identity");
        for _ in 0..50 {
            let w = small_state(&mut rng, 3);
            let id = Channel::identity(w.space());
            assert_close(id.transform_state(&w).unwrap().probs(), w.probs(), 1e-15);
        }
    }

    #[test]
    fn predicate_transform_reads_cpt_columns() {
        let net = asia();
        let lung = net.cpt_to_channel("lung").unwrap();
        let tt = Predicate::indicator(lung.cod().clone(), 0).unwrap();
        let pulled = lung.transform_pred(&tt).unwrap();
        assert_close(pulled.values(), &[0.1, 0.01], 1e-15);

        let xray = net.cpt_to_channel("xray").unwrap();
        let ff = Predicate::indicator(xray.cod().clone(), 1).unwrap();
        let pulled = xray.transform_pred(&ff).unwrap();
        assert_close(pulled.values(), &[0.02, 0.95], 1e-15);

        // c << 1 = 1
        let one = Predicate::truth(xray.cod().clone());
        let back = xray.transform_pred(&one).unwrap();
        assert_close(back.values(), &[1.0, 1.0], 1e-15);
    }

    #[test]
    fn validity_examples_from_fig1() {
        let net = asia();
        let smoke = net.root_prior("smoke").unwrap();
        let lung = net.cpt_to_channel("lung").unwrap();
        let tt = Predicate::indicator(lung.cod().clone(), 0).unwrap();
        let pulled = lung.transform_pred(&tt).unwrap();
        // smoke |= (lung << tt) equals (lung >> smoke) |= tt
        let v = smoke.validity(&pulled).unwrap();
        assert!((v - 0.055).abs() < 1e-12);

        let asia_st = net.root_prior("asia").unwrap();
        let tt_asia = Predicate::indicator(asia_st.space().clone(), 0).unwrap();
        assert!((asia_st.validity(&tt_asia).unwrap() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn smoke_given_lung_evidence_then_bronc() {
        let net = asia();
        let smoke = net.root_prior("smoke").unwrap();
        let lung = net.cpt_to_channel("lung").unwrap();
        let bronc = net.cpt_to_channel("bronc").unwrap();
        let tt = Predicate::indicator(lung.cod().clone(), 0).unwrap();
        let pulled = lung.transform_pred(&tt).unwrap();
        let updated = smoke.update(&pulled).unwrap();
        let out = bronc.transform_state(&updated).unwrap();
        assert_close(out.probs(), &[6.3 / 11.0, 4.7 / 11.0], 1e-12);
        // four printed decimals: 0.5727|t> + 0.4273|f>
        assert!((out.probs()[0] - 0.5727).abs() < 1e-4);
    }

    #[test]
    fn composition_computes_the_either_marginal() {
        let net = asia();
        let smoke = net.root_prior("smoke").unwrap();
        let asia_st = net.root_prior("asia").unwrap();
        let lung = net.cpt_to_channel("lung").unwrap();
        let tub = net.cpt_to_channel("tub").unwrap();
        let either = net.cpt_to_channel("either").unwrap();

        let lt = lung.tensor(&tub);
        let composite = either
            .relabel(lt.cod().clone(), either.cod().clone())
            .unwrap()
            .after(&lt)
            .unwrap();
        let out = composite.transform_state(&smoke.tensor(&asia_st)).unwrap();
        assert_close(out.probs(), &[0.064828, 0.935172], 1e-12);
    }

    #[test]
    fn tensor_of_pushforward_and_prior() {
        let net = asia();
        let smoke = net.root_prior("smoke").unwrap();
        let asia_st = net.root_prior("asia").unwrap();
        let lung = net.cpt_to_channel("lung").unwrap();
        let pushed = lung.transform_state(&smoke).unwrap();
        let joint = pushed.tensor(&asia_st);
        assert_close(joint.probs(), &[0.00055, 0.05445, 0.00945, 0.93555], 1e-12);
    }

    #[test]
    fn identity_laws_for_composition() {
        let mut rng = rng_for("id-laws");
        for _ in 0..30 {
            let c = small_channel(&mut rng, 3, 3);
            let idc = Channel::identity(c.cod());
            let idd = Channel::identity(c.dom());
            let left = idc.after(&c).unwrap();
            let right = c.after(&idd).unwrap();
            assert_close(left.matrix(), c.matrix(), 1e-15);
            assert_close(right.matrix(), c.matrix(), 1e-15);
        }
    }

    #[test]
    fn functoriality_against_explicit_two_step() {
        let mut rng = rng_for("functor");
        for _ in 0..100 {
            let c = small_channel(&mut rng, 2, 2);
            let d = small_channel(&mut rng, 2, 2);
            let d = d.relabel(c.cod().clone(), d.cod().clone()).unwrap();
            let w = small_state(&mut rng, 2);
            let w = w.relabel(c.dom().clone()).unwrap();
            let fused = d.after(&c).unwrap().transform_state(&w).unwrap();
            let stepped = d.transform_state(&c.transform_state(&w).unwrap()).unwrap();
            assert_close(fused.probs(), stepped.probs(), 1e-12);
        }
    }

    #[test]
    fn copy_then_project_is_identity() {
        let s = Space::single("a", &["t", "f"]).unwrap();
        let copy = Channel::copy(&s);
        let pi1 = Channel::projection(copy.cod(), &[0]).unwrap();
        let pi2 = Channel::projection(copy.cod(), &[1]).unwrap();
        let id = Channel::identity(&s);
        assert_close(pi1.after(&copy).unwrap().matrix(), id.matrix(), 1e-15);
        // the second projection lands on the renamed copy; same matrix
        assert_close(pi2.after(&copy).unwrap().matrix(), id.matrix(), 1e-15);
    }

    #[test]
    fn copy_of_the_smoke_prior() {
        let net = asia();
        let smoke = net.root_prior("smoke").unwrap();
        let copy = Channel::copy(smoke.space());
        let out = copy.transform_state(&smoke).unwrap();
        assert_close(out.probs(), &[0.5, 0.0, 0.0, 0.5], 1e-15);
    }

    #[test]
    fn swap_exchanges_tensor_factors() {
        let mut rng = rng_for("swap");
        for _ in 0..50 {
            let w = small_state(&mut rng, 2);
            let r = small_state(&mut rng, 2);
            let joint = w.tensor(&r);
            let swap = Channel::permutation(joint.space(), &[1, 0]).unwrap();
            let swapped = swap.transform_state(&joint).unwrap();
            let expect = r.tensor(&w);
            assert_close(swapped.probs(), expect.probs(), 1e-15);
            // swap ∗ swap = id
            let back = Channel::permutation(swap.cod(), &[1, 0]).unwrap();
            let id = back.after(&swap).unwrap();
            assert_close(
                id.matrix(),
                Channel::identity(joint.space()).matrix(),
                1e-15,
            );
        }
    }

    #[test]
    fn permutation_rejects_non_bijections() {
        let s = Space::single("a", &["t", "f"]).unwrap();
        let p = s.product(&Space::single("b", &["t", "f"]).unwrap());
        assert!(matches!(
            Channel::permutation(&p, &[0, 0]),
            Err(Error::InvalidPermutation)
        ));
        let id = Channel::permutation(&p, &[0, 1]).unwrap();
        assert_close(id.matrix(), Channel::identity(&p).matrix(), 1e-15);
    }

    #[test]
    fn tensor_of_identities_is_the_product_identity() {
        let x = Space::single("x", &["t", "f"]).unwrap();
        let y = Space::single("y", &["a", "b", "c"]).unwrap();
        let t = Channel::identity(&x).tensor(&Channel::identity(&y));
        let id = Channel::identity(&x.product(&y));
        assert_close(t.matrix(), id.matrix(), 1e-15);
    }

    #[test]
    fn interchange_law_on_random_channels() {
        let mut rng = rng_for("interchange");
        for _ in 0..50 {
            let c = small_channel(&mut rng, 2, 2);
            let d = small_channel(&mut rng, 2, 2);
            let e = small_channel(&mut rng, 2, 2);
            let f = small_channel(&mut rng, 2, 2);
            let d = d.relabel(c.cod().clone(), d.cod().clone()).unwrap();
            let e = e.relabel(f.cod().clone(), e.cod().clone()).unwrap();
            let lhs = d.tensor(&e).after(&c.tensor(&f)).unwrap();
            let rhs = d.after(&c).unwrap().tensor(&e.after(&f).unwrap());
            assert_close(lhs.matrix(), rhs.matrix(), 1e-12);
        }
    }

    #[test]
    fn tensor_channels_act_factorwise_on_tensor_states() {
        // (c ⊗ d) >> (w ⊗ r) = (c >> w) ⊗ (d >> r)
        let mut rng = rng_for("tensor-states");
        for _ in 0..100 {
            let c = small_channel(&mut rng, 2, 3);
            let d = small_channel(&mut rng, 3, 2);
            let w = small_state(&mut rng, 2).relabel(c.dom().clone()).unwrap();
            let r = small_state(&mut rng, 3).relabel(d.dom().clone()).unwrap();
            let joint = c.tensor(&d).transform_state(&w.tensor(&r)).unwrap();
            let split = c
                .transform_state(&w)
                .unwrap()
                .tensor(&d.transform_state(&r).unwrap());
            assert_close(joint.probs(), split.probs(), 1e-12);
        }
    }

    #[test]
    fn non_interacting_channels_shift() {
        // (c ⊗ id) ∗ (id ⊗ d) = (id ⊗ d) ∗ (c ⊗ id)
        let mut rng = rng_for("shift");
        for _ in 0..50 {
            let a = rng.random_range(2..4usize);
            let b = rng.random_range(2..4usize);
            let c = small_channel(&mut rng, a, a);
            let d = small_channel(&mut rng, b, b);
            let id_b = Channel::identity(d.dom());
            let id_a = Channel::identity(c.dom());
            let first = c.tensor(&id_b);
            let second = Channel::identity(c.cod()).tensor(&d);
            let lhs = second
                .relabel(first.cod().clone(), second.cod().clone())
                .unwrap();
            let lhs = lhs.after(&first).unwrap();
            let first2 = id_a.tensor(&d);
            let second2 = c.tensor(&Channel::identity(d.cod()));
            let rhs = second2
                .relabel(first2.cod().clone(), second2.cod().clone())
                .unwrap();
            let rhs = rhs.after(&first2).unwrap();
            assert_close(lhs.matrix(), rhs.matrix(), 1e-12);
        }
    }

    #[test]
    fn duality_of_transformation_and_validity() {
        let mut rng = rng_for("duality");
        for _ in 0..200 {
            let c = small_channel(&mut rng, 3, 2);
            let w = small_state(&mut rng, 3).relabel(c.dom().clone()).unwrap();
            let q = {
                let vals = (0..c.cod().size())
                    .map(|_| rng.random_range(0.0..1.0))
                    .collect();
                Predicate::new(c.cod().clone(), vals).unwrap()
            };
            let lhs = c.transform_state(&w).unwrap().validity(&q).unwrap();
            let rhs = w.validity(&c.transform_pred(&q).unwrap()).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
