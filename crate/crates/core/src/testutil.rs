//! Shared helpers for unit tests: the Asia network keyed in by hand from its
//! published tables (independent of the BIF parser), seeded RNGs, and random
//! small states/channels/nets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::Channel;
use crate::net::{BayesNet, NodeDef};
use crate::space::Space;
use crate::state::State;

pub fn assert_close(got: &[f64], want: &[f64], tol: f64) {
    assert_eq!(got.len(), want.len(), "length mismatch");
    for (i, (g, w)) in got.iter().zip(want).enumerate() {
        assert!(
            (g - w).abs() <= tol,
            "entry {i}: got {g}, want {w} (tol {tol})\n  got  = {got:?}\n  want = {want:?}"
        );
    }
}

/// Stable per-test RNG.
pub fn rng_for(tag: &str) -> ChaCha8Rng {
    let mut seed = 0u64;
    for b in tag.bytes() {
        seed = seed.wrapping_mul(131).wrapping_add(b as u64);
    }
    ChaCha8Rng::seed_from_u64(seed)
}

fn node(name: &str, parents: &[&str], cpt: &[f64]) -> NodeDef {
    NodeDef {
        name: name.into(),
        labels: vec!["t".into(), "f".into()],
        parents: parents.iter().map(|s| s.to_string()).collect(),
        cpt: cpt.to_vec(),
    }
}

/// The eight-node Asia network with its published tables.
pub fn asia() -> BayesNet {
    BayesNet::new(
        "asia",
        vec![
            node("asia", &[], &[0.01, 0.99]),
            node("tub", &["asia"], &[0.05, 0.95, 0.01, 0.99]),
            node("smoke", &[], &[0.5, 0.5]),
            node("lung", &["smoke"], &[0.1, 0.9, 0.01, 0.99]),
            node("bronc", &["smoke"], &[0.6, 0.4, 0.3, 0.7]),
            node(
                "either",
                &["lung", "tub"],
                &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0],
            ),
            node("xray", &["either"], &[0.98, 0.02, 0.05, 0.95]),
            node(
                "dysp",
                &["bronc", "either"],
                &[0.9, 0.1, 0.7, 0.3, 0.8, 0.2, 0.1, 0.9],
            ),
        ],
    )
    .unwrap()
}

static SALT: std::sync::atomic::AtomicUsize = std::sync::atomic::AtomicUsize::new(0);

fn fresh_space(card: usize) -> Space {
    let labels: Vec<&str> = ["l0", "l1", "l2", "l3"][..card].to_vec();
    let salt = SALT.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
    Space::single(format!("v{salt}"), &labels).unwrap()
}

/// A random state on a fresh one-variable space of the given cardinality.
pub fn small_state<R: Rng + ?Sized>(rng: &mut R, card: usize) -> State {
    let space = fresh_space(card);
    let mut probs: Vec<f64> = (0..card).map(|_| rng.random_range(0.01..1.0)).collect();
    let sum: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= sum;
    }
    State::new(space, probs).unwrap()
}

/// A random channel between fresh one-variable spaces.
pub fn small_channel<R: Rng + ?Sized>(rng: &mut R, dom: usize, cod: usize) -> Channel {
    let d = fresh_space(dom);
    let c = fresh_space(cod);
    let mut matrix = Vec::with_capacity(dom * cod);
    for _ in 0..dom {
        let mut row: Vec<f64> = (0..cod).map(|_| rng.random_range(0.01..1.0)).collect();
        let sum: f64 = row.iter().sum();
        for v in &mut row {
            *v /= sum;
        }
        matrix.extend(row);
    }
    Channel::new(d, c, matrix).unwrap()
}

/// A random DAG with structural zeros: each CPT row keeps 1..cols entries,
/// the rest are exactly zero, so deterministic sub-mechanisms and genuinely
/// unsatisfiable evidence combinations occur.
pub fn random_sparse_net<R: Rng + ?Sized>(rng: &mut R, n: usize, density: f64) -> BayesNet {
    let net = random_net(rng, n, density, 3);
    let mut nodes = net.nodes().to_vec();
    for node in &mut nodes {
        let cols = node.card();
        for row in node.cpt.chunks_mut(cols) {
            let live = rng.random_range(1..=cols);
            let mut keep: Vec<usize> = (0..cols).collect();
            while keep.len() > live {
                keep.remove(rng.random_range(0..keep.len()));
            }
            let mut sum = 0.0;
            for (i, v) in row.iter_mut().enumerate() {
                if keep.contains(&i) {
                    sum += *v;
                } else {
                    *v = 0.0;
                }
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
    }
    BayesNet::new("sparse", nodes).unwrap()
}

/// A random DAG over `n` nodes with cardinalities 2..=`max_card` and strictly
/// positive random CPT rows; edge (i, j) for i < j appears with probability
/// `density`.
pub fn random_net<R: Rng + ?Sized>(rng: &mut R, n: usize, density: f64, max_card: usize) -> BayesNet {
    let cards: Vec<usize> = (0..n).map(|_| rng.random_range(2..=max_card)).collect();
    let mut nodes = Vec::with_capacity(n);
    for j in 0..n {
        let parents: Vec<String> = (0..j)
            .filter(|_| rng.random_bool(density))
            .map(|i| format!("n{i}"))
            .collect();
        let rows: usize = parents
            .iter()
            .map(|p| cards[p[1..].parse::<usize>().unwrap()])
            .product();
        let cols = cards[j];
        let mut cpt = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let mut row: Vec<f64> = (0..cols).map(|_| rng.random_range(0.05..1.0)).collect();
            let sum: f64 = row.iter().sum();
            for v in &mut row {
                *v /= sum;
            }
            cpt.extend(row);
        }
        let labels = (0..cols).map(|k| format!("l{k}")).collect();
        nodes.push(NodeDef {
            name: format!("n{j}"),
            labels,
            parents,
            cpt,
        });
    }
    BayesNet::new("random", nodes).unwrap()
}
