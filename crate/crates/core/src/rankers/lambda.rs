//! Lambda gradients shared by LambdaRank and LambdaMART.

use super::rank_order;

/// A pair where `better` has the higher label, with the NDCG change of
/// swapping the two in the current ranking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairDelta {
    pub better: usize,
    pub worse: usize,
    pub delta: f64,
}

fn gain(label: u8) -> f64 {
    (2f64).powi(i32::from(label)) - 1.0
}

fn discount(position: usize, k: usize) -> f64 {
    if position <= k {
        1.0 / ((position + 1) as f64).log2()
    } else {
        0.0
    }
}

/// |ΔNDCG@k| for every label-ordered pair under the ranking induced by
/// `scores`. Empty when the ideal DCG is zero.
pub fn ndcg_swap_deltas(scores: &[f64], doc_ids: &[String], labels: &[u8], k: usize) -> Vec<PairDelta> {
    let mut ideal: Vec<u8> = labels.to_vec();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: f64 = ideal
        .iter()
        .enumerate()
        .map(|(r, &y)| gain(y) * discount(r + 1, k))
        .sum();
    if idcg <= 0.0 {
        return Vec::new();
    }
    let mut position = vec![0usize; scores.len()];
    for (r, i) in rank_order(scores, doc_ids).into_iter().enumerate() {
        position[i] = r + 1;
    }
    let mut pairs = Vec::new();
    for i in 0..labels.len() {
        for j in 0..labels.len() {
            if labels[i] <= labels[j] {
                continue;
            }
            let delta = ((gain(labels[i]) - gain(labels[j])) * (discount(position[i], k) - discount(position[j], k)))
                .abs()
                / idcg;
            pairs.push(PairDelta {
                better: i,
                worse: j,
                delta,
            });
        }
    }
    pairs
}

/// Magnitude of the pull between `better` (score `s_i`) and `worse` (score `s_j`).
pub fn pair_lambda(s_i: f64, s_j: f64, delta: f64) -> f64 {
    delta / (1.0 + (s_i - s_j).exp())
}

/// Per-document lambdas (ascent direction: positive pushes a document up)
/// and their second-order weights Σ|Δ|ρ(1−ρ).
pub fn lambdas(scores: &[f64], pairs: &[PairDelta]) -> (Vec<f64>, Vec<f64>) {
    let mut lam = vec![0.0; scores.len()];
    let mut w = vec![0.0; scores.len()];
    for p in pairs {
        let rho = 1.0 / (1.0 + (scores[p.better] - scores[p.worse]).exp());
        let l = p.delta * rho;
        lam[p.better] += l;
        lam[p.worse] -= l;
        let h = p.delta * rho * (1.0 - rho);
        w[p.better] += h;
        w[p.worse] += h;
    }
    (lam, w)
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// Σ |Δ| · ln(1 + exp(−(s_i − s_j))) with the deltas held fixed; its
/// negative score gradient is exactly the lambda vector.
pub fn pairwise_cost(scores: &[f64], pairs: &[PairDelta]) -> f64 {
    pairs
        .iter()
        .map(|p| p.delta * softplus(-(scores[p.better] - scores[p.worse])))
        .sum()
}
