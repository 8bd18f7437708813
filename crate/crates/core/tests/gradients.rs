//! Analytic gradients against central finite differences.

mod common;

use common::{numeric_gradient, random_connected, random_embedding, relative_error};
use curvreg::embedder::{
    build_sgns_corpus, le_loss_grad, mf_loss_grad, sample_non_edges, sgns_batch_grad,
    sgns_batch_loss, SgnsBatch, SparseGrad,
};
use curvreg::evaluation::{logistic_loss_grad, Logistic};
use curvreg::graph::{random_walks, WalkConfig};
use curvreg::regularizer::{build_state, omega_gradient, omega_loss, RegularizerKind};
use curvreg::{seed, Embedding};
use rand::Rng;

const H: f64 = 1e-6;
const INSTANCES: u64 = 24;

fn dims(i: u64) -> usize {
    if i.is_multiple_of(2) {
        2
    } else {
        8
    }
}

#[test]
fn omega_gradient_matches_finite_differences() {
    for i in 0..INSTANCES {
        let n = 5 + (i as usize * 7) % 26;
        let g = random_connected(n, 0.15, 100 + i);
        let x = random_embedding(n, dims(i), 200 + i);
        let kind = match i % 3 {
            0 => RegularizerKind::Full,
            1 => RegularizerKind::Sampled { sample_size: 8, seed: i },
            _ => RegularizerKind::Walk,
        };
        let walk = WalkConfig { walks_per_node: 2, walk_length: 8, ..WalkConfig::default() };
        let state = build_state(&g, kind, &walk, 300 + i, None).unwrap();
        let analytic = omega_gradient(&x, &state).unwrap();
        let numeric = numeric_gradient(&x, H, |e| omega_loss(e, &state).unwrap().loss);
        let err = relative_error(analytic.as_slice(), numeric.as_slice());
        assert!(err < 1e-4, "instance {i} ({kind:?}, n={n}): relative error {err:e}");
    }
}

#[test]
fn mf_gradient_matches_finite_differences() {
    for i in 0..INSTANCES {
        let n = 5 + (i as usize * 5) % 26;
        let g = random_connected(n, 0.2, 400 + i);
        let x = random_embedding(n, dims(i), 500 + i);
        let negatives = sample_non_edges(&g, 2, 600 + i);
        let (_, analytic) = mf_loss_grad(&x, &g, &negatives);
        let numeric = numeric_gradient(&x, H, |e| mf_loss_grad(e, &g, &negatives).0);
        let err = relative_error(analytic.as_slice(), numeric.as_slice());
        assert!(err < 1e-4, "instance {i}: relative error {err:e}");
    }
}

#[test]
fn le_gradient_matches_finite_differences() {
    for i in 0..INSTANCES {
        let n = 5 + (i as usize * 3) % 26;
        let g = random_connected(n, 0.2, 700 + i);
        let x = random_embedding(n, dims(i), 800 + i);
        let mut rng = seed::rng(900 + i);
        let beta = rng.gen_range(0.1..10.0);
        let gamma = rng.gen_range(0.1..10.0);
        let (_, analytic) = le_loss_grad(&x, &g, beta, gamma);
        let numeric = numeric_gradient(&x, H, |e| le_loss_grad(e, &g, beta, gamma).0.total());
        let err = relative_error(analytic.as_slice(), numeric.as_slice());
        assert!(err < 1e-4, "instance {i}: relative error {err:e}");
    }
}

#[test]
fn sgns_gradient_matches_finite_differences() {
    for i in 0..INSTANCES {
        let n = 6 + (i as usize * 5) % 25;
        let d = dims(i);
        let g = random_connected(n, 0.2, 1000 + i);
        let walks = random_walks(&g, &WalkConfig { walks_per_node: 2, walk_length: 6, ..WalkConfig::default() }, i).unwrap();
        let corpus = build_sgns_corpus(&walks, n, 2).unwrap();
        let mut rng = seed::rng(1100 + i);
        let idx: Vec<usize> = (0..16).map(|_| rng.gen_range(0..corpus.pairs.len())).collect();
        let batch = SgnsBatch::draw(&corpus, &idx, 3, &mut rng);
        let x = random_embedding(n, d, 1200 + i);
        let y = random_embedding(n, d, 1300 + i);
        let mut gx = SparseGrad::new(n, d);
        let mut gy = SparseGrad::new(n, d);
        let loss = sgns_batch_grad(&x, &y, &batch, &mut gx, &mut gy);
        assert!((loss - sgns_batch_loss(&x, &y, &batch)).abs() < 1e-9 * loss.max(1.0));
        let nx = numeric_gradient(&x, H, |e| sgns_batch_loss(e, &y, &batch));
        let ny = numeric_gradient(&y, H, |e| sgns_batch_loss(&x, e, &batch));
        let ex = relative_error(gx.to_dense().as_slice(), nx.as_slice());
        let ey = relative_error(gy.to_dense().as_slice(), ny.as_slice());
        assert!(ex < 1e-3 && ey < 1e-3, "instance {i}: center error {ex:e}, context error {ey:e}");
    }
}

fn flatten(m: &Logistic) -> Vec<f64> {
    m.weights.iter().copied().chain([m.bias]).collect()
}

#[test]
fn logistic_gradient_matches_finite_differences() {
    for i in 0..INSTANCES {
        let mut rng = seed::rng(1400 + i);
        let m = rng.gen_range(5..40);
        let d = dims(i);
        let x = random_embedding(m, d, 1500 + i);
        let y: Vec<bool> = (0..m).map(|_| rng.gen()).collect();
        let model = Logistic { weights: (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect(), bias: rng.gen_range(-1.0..1.0) };
        let l2 = if i % 3 == 0 { 0.0 } else { 1e-2 };
        let (_, grad) = logistic_loss_grad(&model, &x, &y, l2);
        let params = Embedding::from_vec(1, d + 1, flatten(&model)).unwrap();
        let numeric = numeric_gradient(&params, H, |p| {
            let s = p.as_slice();
            let candidate = Logistic { weights: s[..d].to_vec(), bias: s[d] };
            logistic_loss_grad(&candidate, &x, &y, l2).0
        });
        let err = relative_error(&flatten(&grad), numeric.as_slice());
        assert!(err < 1e-4, "instance {i}: relative error {err:e}");
    }
}
