#![allow(dead_code)]

use chillax::hierarchy::{Hierarchy, NodeId};
use chillax::synth::random_dag;
use chillax::LabeledExample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const T1: &str = "A\tR\nB\tR\na1\tA\na2\tA\nb1\tB";

pub fn t1() -> Hierarchy {
    Hierarchy::parse(T1).unwrap()
}

/// T1 plus node c below both A and B.
pub fn d1() -> Hierarchy {
    Hierarchy::parse(&format!("{T1}\nc\tA\nc\tB")).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dag(seed: u64, n: usize) -> Hierarchy {
    random_dag(n, 3, &mut rng(seed))
}

pub fn id(h: &Hierarchy, name: &str) -> NodeId {
    h.id(name).unwrap()
}

pub fn example(id: impl Into<String>, label: &str, features: Vec<f64>) -> LabeledExample {
    LabeledExample {
        id: id.into(),
        label: label.to_string(),
        features,
    }
}

/// Parent map closure by repeated relaxation until nothing changes.
pub fn ancestors_fixed_point(h: &Hierarchy) -> Vec<Vec<bool>> {
    let n = h.len();
    let mut anc = vec![vec![false; n]; n];
    for v in h.nodes() {
        for &p in h.parents(v) {
            anc[v.index()][p.index()] = true;
        }
    }
    loop {
        let mut changed = false;
        for v in 0..n {
            for a in 0..n {
                if anc[v][a] {
                    let above = anc[a].clone();
                    for (b, &up) in above.iter().enumerate() {
                        if up && !anc[v][b] {
                            anc[v][b] = true;
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            return anc;
        }
    }
}

/// Length of every upward path from `v` to the root, by enumeration.
pub fn upward_path_lengths(h: &Hierarchy, v: NodeId) -> Vec<usize> {
    if v == h.root() {
        return vec![0];
    }
    h.parents(v)
        .iter()
        .flat_map(|&p| upward_path_lengths(h, p))
        .map(|l| l + 1)
        .collect()
}

/// Total-variation distance between two distributions.
pub fn tv(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0
}
