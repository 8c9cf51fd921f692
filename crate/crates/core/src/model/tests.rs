use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::graph::synthetic::erdos_renyi;

fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("n{i}")).collect()
}

fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

fn small_cfg(input_dim: usize, classes: Option<usize>) -> ModelConfig {
    ModelConfig {
        num_filters: 3,
        filter_dim: 4,
        embed_dim: 5,
        ..ModelConfig::new(input_dim, classes)
    }
}

/// Dense `α(D^-1/2 (A+I) D^-1/2 X θ)`.
fn dense_filter(g: &Graph, theta: &Matrix, act: Activation) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        a[i][i] = 1.0;
        for &j in g.neighbors(i) {
            a[i][j] = 1.0;
        }
    }
    let deg: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let x: Vec<Vec<f64>> = (0..n).map(|i| g.features().dense_row(i)).collect();
    let mut out = vec![vec![0.0; theta.cols()]; n];
    for i in 0..n {
        for j in 0..n {
            let c = a[i][j] / (deg[i] * deg[j]).sqrt();
            for k in 0..theta.rows() {
                for f in 0..theta.cols() {
                    out[i][f] += c * x[j][k] * theta.get(k, f);
                }
            }
        }
        out[i].iter_mut().for_each(|v| *v = act.apply(*v));
    }
    out
}

#[test]
fn path_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x: Vec<Vec<f64>> = (0..3).map(|_| (0..4).map(|_| rng.gen::<f64>()).collect()).collect();
    let g = Graph::new(ids(3), &[(0, 1), (1, 2)], Features::from_dense(4, &x).unwrap(), None).unwrap();
    let theta = random_matrix(4, 3, &mut rng);
    for act in [Activation::Identity, Activation::Relu, Activation::Tanh, Activation::Sigmoid] {
        let dense = dense_filter(&g, &theta, act);
        for u in 0..3 {
            let local = filter_aggregate(&g, g.features(), u, &theta, act).unwrap();
            for (a, b) in local.iter().zip(&dense[u]) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn random_graphs_match_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for trial in 0..20 {
        let n = rng.gen_range(1..=20);
        let g = erdos_renyi(n, rng.gen_range(0.0..0.5), 6, trial);
        let theta = random_matrix(6, 4, &mut rng);
        let dense = dense_filter(&g, &theta, Activation::Identity);
        for u in 0..n {
            let local = filter_aggregate(&g, g.features(), u, &theta, Activation::Identity).unwrap();
            for (a, b) in local.iter().zip(&dense[u]) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn isolated_node_projects_its_own_attributes() {
    let x = vec![vec![0.5, -0.0, 2.0]];
    let g = Graph::new(ids(1), &[], Features::from_dense(3, &x).unwrap(), None).unwrap();
    let theta = random_matrix(3, 2, &mut ChaCha8Rng::seed_from_u64(1));
    let out = filter_aggregate(&g, g.features(), 0, &theta, Activation::Identity).unwrap();
    for f in 0..2 {
        let expect = 0.5 * theta.get(0, f) + 2.0 * theta.get(2, f);
        assert!((out[f] - expect).abs() < 1e-15);
    }
}

#[test]
fn zero_inputs_give_zero_filter_output() {
    let g = Graph::new(ids(3), &[(0, 1), (1, 2)], Features::zeros(3, 4), None).unwrap();
    let theta = random_matrix(4, 3, &mut ChaCha8Rng::seed_from_u64(1));
    assert_eq!(filter_aggregate(&g, g.features(), 1, &theta, Activation::Relu).unwrap(), vec![0.0; 3]);
}

#[test]
fn filter_dimension_mismatch() {
    let g = erdos_renyi(4, 0.5, 3, 0);
    let theta = Matrix::zeros(4, 2);
    assert!(matches!(
        filter_aggregate(&g, g.features(), 0, &theta, Activation::Relu),
        Err(Error::Dimension(_))
    ));
}

#[test]
fn single_filter_forward_is_bit_identical_to_filter_aggregate() {
    let g = erdos_renyi(15, 0.3, 6, 2);
    let cfg = ModelConfig {
        num_filters: 1,
        ..small_cfg(6, None)
    };
    let params = ModelParams::init(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let nodes: Vec<usize> = (0..15).collect();
    let fwd = Forward::run(&g, &nodes, &params, &cfg).unwrap();
    for u in 0..15 {
        let single = filter_aggregate(&g, g.features(), u, &params.theta[0], cfg.aggregator_activation).unwrap();
        assert_eq!(fwd.aggregation(u), single.as_slice());
        assert_eq!(mf_aggregate(&g, g.features(), u, &params, &cfg).unwrap(), single);
    }
}

#[test]
fn duplicate_filters_repeat_output() {
    let g = erdos_renyi(6, 0.5, 3, 1);
    let cfg = ModelConfig {
        num_filters: 2,
        ..small_cfg(3, None)
    };
    let mut params = ModelParams::init(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    params.theta[1] = params.theta[0].clone();
    let out = mf_aggregate(&g, g.features(), 2, &params, &cfg).unwrap();
    assert_eq!(out[..4], out[4..]);
}

#[test]
fn default_widths() {
    let cfg = ModelConfig::new(1433, Some(7));
    assert_eq!(cfg.aggregation_width(), 400);
    assert_eq!(cfg.encoder_input_width(), 1433 + 400);
    let g = erdos_renyi(5, 0.5, 1433, 0);
    let params = ModelParams::init(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert_eq!(mf_aggregate(&g, g.features(), 0, &params, &cfg).unwrap().len(), 400);
    let h = encode(&g, g.features(), 0, &params, &cfg).unwrap();
    assert_eq!(h.len(), 100);
    let emb = embed_nodes(&g, &[0], &params, &cfg).unwrap();
    assert_eq!(classify(emb.row(0), &params, &cfg).unwrap().len(), 7);
}

#[test]
fn config_validation() {
    assert!(ModelConfig { depth: 2, ..small_cfg(3, None) }.validate().is_err());
    assert!(ModelConfig { num_filters: 0, ..small_cfg(3, None) }.validate().is_err());
    assert!(small_cfg(3, Some(0)).validate().is_err());
    assert!(small_cfg(3, Some(2)).validate().is_ok());
}

/// Straight-line recomputation with explicit loops over the dense attribute matrix.
fn encode_oracle(g: &Graph, u: usize, p: &ModelParams, cfg: &ModelConfig) -> Vec<f64> {
    let x: Vec<Vec<f64>> = (0..g.node_count()).map(|i| g.features().dense_row(i)).collect();
    let mut input = x[u].clone();
    let du = (g.neighbors(u).len() + 1) as f64;
    for theta in &p.theta {
        let mut acc = vec![0.0; cfg.filter_dim];
        let mut hood = g.neighbors(u).to_vec();
        hood.push(u);
        for j in hood {
            let dj = (g.neighbors(j).len() + 1) as f64;
            for f in 0..cfg.filter_dim {
                let mut s = 0.0;
                for k in 0..cfg.input_dim {
                    s += x[j][k] * theta.get(k, f);
                }
                acc[f] += s / (du * dj).sqrt();
            }
        }
        input.extend(acc.into_iter().map(|v| cfg.aggregator_activation.apply(v)));
    }
    (0..cfg.embed_dim)
        .map(|e| {
            let mut s = p.b_enc[e];
            for (k, v) in input.iter().enumerate() {
                s += v * p.w_enc.get(k, e);
            }
            cfg.encoder_activation.apply(s)
        })
        .collect()
}

#[test]
fn encode_matches_straight_line_oracle() {
    let g = erdos_renyi(12, 0.3, 5, 4);
    for act in [Activation::Relu, Activation::Tanh, Activation::Sigmoid] {
        let cfg = ModelConfig {
            aggregator_activation: act,
            encoder_activation: act,
            ..small_cfg(5, None)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut params = ModelParams::init(&cfg, &mut rng).unwrap();
        params.b_enc.iter_mut().for_each(|b| *b = rng.gen_range(-0.5..0.5));
        let nodes: Vec<usize> = (0..12).collect();
        let fwd = Forward::run(&g, &nodes, &params, &cfg).unwrap();
        for u in 0..12 {
            let oracle = encode_oracle(&g, u, &params, &cfg);
            let direct = encode(&g, g.features(), u, &params, &cfg).unwrap();
            for k in 0..cfg.embed_dim {
                assert!((oracle[k] - direct[k]).abs() <= 1e-12);
                assert!((oracle[k] - fwd.hidden(u)[k]).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn zero_attributes_give_zero_embedding_error() {
    let g = Graph::new(ids(3), &[(0, 1)], Features::zeros(3, 4), None).unwrap();
    let cfg = ModelConfig {
        encoder_activation: Activation::Relu,
        ..small_cfg(4, None)
    };
    let params = ModelParams::init(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert_eq!(encode(&g, g.features(), 0, &params, &cfg).unwrap(), vec![0.0; 5]);
    match embed_nodes(&g, &[2], &params, &cfg) {
        Err(Error::ZeroEmbedding(id)) => assert_eq!(id, "n2"),
        other => panic!("expected zero-embedding error, got {other:?}"),
    }
}

fn nonneg_graph(n: usize, seed: u64) -> Graph {
    erdos_renyi(n, 0.3, 6, seed)
}

/// Parameters for which every node has a nonzero hidden vector.
fn safe_params(cfg: &ModelConfig, seed: u64) -> ModelParams {
    let mut p = ModelParams::init(cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    p.b_enc.iter_mut().for_each(|b| *b = 0.3);
    p
}

#[test]
fn embeddings_have_unit_norm_and_any_order() {
    let g = nonneg_graph(20, 5);
    let cfg = small_cfg(6, None);
    let params = safe_params(&cfg, 1);
    let order = [7, 3, 3, 19, 0];
    let emb = embed_nodes(&g, &order, &params, &cfg).unwrap();
    assert_eq!(emb.nodes(), &order);
    for r in 0..emb.len() {
        assert!((norm(emb.row(r)) - 1.0).abs() <= 1e-9);
    }
    assert_eq!(emb.row(1), emb.row(2));
}

#[test]
fn relabeling_permutes_embeddings() {
    let n = 10;
    let g = nonneg_graph(n, 8);
    let mut perm: Vec<usize> = (0..n).collect();
    use rand::seq::SliceRandom;
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(2));
    // node i of g becomes node perm[i] of h
    let mut inv = vec![0; n];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    let rows: Vec<Vec<f64>> = (0..n).map(|p| g.features().dense_row(inv[p])).collect();
    let edges: Vec<(usize, usize)> = g.edges().map(|(a, b)| (perm[a], perm[b])).collect();
    let h = Graph::new(ids(n), &edges, Features::from_dense(6, &rows).unwrap(), None).unwrap();
    let cfg = small_cfg(6, None);
    let params = safe_params(&cfg, 3);
    let all: Vec<usize> = (0..n).collect();
    let eg = embed_nodes(&g, &all, &params, &cfg).unwrap();
    let eh = embed_nodes(&h, &all, &params, &cfg).unwrap();
    for i in 0..n {
        for (a, b) in eg.row(i).iter().zip(eh.row(perm[i])) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn identical_nodes_get_identical_embeddings() {
    let x = vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![0.5, 0.5], vec![0.0, 2.0]];
    let g = Graph::new(ids(4), &[(0, 1), (0, 2), (1, 3), (2, 3)], Features::from_dense(2, &x).unwrap(), None).unwrap();
    let cfg = small_cfg(2, None);
    let params = safe_params(&cfg, 4);
    let emb = embed_nodes(&g, &[1, 2], &params, &cfg).unwrap();
    assert_eq!(emb.row(0), emb.row(1));
}

#[test]
fn classify_properties() {
    let cfg = small_cfg(3, Some(7));
    let mut params = ModelParams::init(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let z = [0.2, -0.4, 0.1, 0.8, 0.3];
    let p = classify(&z, &params, &cfg).unwrap();
    assert_eq!(p.len(), 7);
    assert!(p.iter().all(|&v| v > 0.0));
    assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);

    params.b_cls.as_mut().unwrap().iter_mut().for_each(|b| *b += 12.5);
    let shifted = classify(&z, &params, &cfg).unwrap();
    for (a, b) in p.iter().zip(&shifted) {
        assert!((a - b).abs() <= 1e-12);
    }

    params.w_cls.as_mut().unwrap().as_mut_slice().fill(0.0);
    params.b_cls.as_mut().unwrap().fill(0.0);
    for v in classify(&z, &params, &cfg).unwrap() {
        assert!((v - 1.0 / 7.0).abs() <= 1e-15);
    }

    let headless = small_cfg(3, None);
    let hp = ModelParams::init(&headless, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert!(matches!(classify(&z, &hp, &headless), Err(Error::MissingHead)));
}

/// Scalar test loss: a fixed linear functional of every unit embedding plus
/// cross-entropy of the head on every node. Returns the loss and `∂/∂params`.
fn probe_loss(g: &Graph, p: &ModelParams, cfg: &ModelConfig, c: &Matrix, with_grad: bool) -> (f64, Option<ModelParams>) {
    let nodes: Vec<usize> = (0..g.node_count()).collect();
    let fwd = Forward::run(g, &nodes, p, cfg).unwrap();
    let mut loss = 0.0;
    let mut dz = c.clone();
    let mut grads = p.zeros_like();
    for r in 0..nodes.len() {
        let z = fwd.z(r);
        loss += dot(c.row(r), z);
        let probs = softmax(&logits(z, p).unwrap());
        let label = r % probs.len();
        loss -= probs[label].ln();
        let mut dl = probs.clone();
        dl[label] -= 1.0;
        head_backward(z, &dl, p, &mut grads, dz.row_mut(r)).unwrap();
    }
    if with_grad {
        fwd.backward_into(&dz, p, &mut grads).unwrap();
        (loss, Some(grads))
    } else {
        (loss, None)
    }
}

fn check_gradients(act: Activation, seed: u64) {
    let g = nonneg_graph(12, seed);
    let cfg = ModelConfig {
        num_filters: 2,
        filter_dim: 3,
        embed_dim: 4,
        aggregator_activation: act,
        encoder_activation: act,
        ..ModelConfig::new(6, Some(3))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = safe_params(&cfg, seed);
    params.b_cls.as_mut().unwrap().iter_mut().for_each(|b| *b = rng.gen_range(-0.5..0.5));
    let c = random_matrix(12, 4, &mut rng);
    let (_, grads) = probe_loss(&g, &params, &cfg, &c, true);
    let grads = grads.unwrap();
    let analytic: Vec<(String, Vec<f64>)> = grads.blocks().into_iter().map(|(n, b)| (n, b.to_vec())).collect();
    let h = 1e-5;
    for (bi, (name, ga)) in analytic.iter().enumerate() {
        for i in 0..ga.len() {
            let mut plus = params.clone();
            plus.blocks_mut()[bi][i] += h;
            let mut minus = params.clone();
            minus.blocks_mut()[bi][i] -= h;
            let fd = (probe_loss(&g, &plus, &cfg, &c, false).0 - probe_loss(&g, &minus, &cfg, &c, false).0) / (2.0 * h);
            let rel = (fd - ga[i]).abs() / fd.abs().max(ga[i].abs()).max(1e-6);
            assert!(rel <= 1e-4, "{act} {name}[{i}]: analytic {} vs numeric {fd}", ga[i]);
        }
    }
}

#[test]
fn gradients_match_finite_differences_relu() {
    check_gradients(Activation::Relu, 21);
}

#[test]
fn gradients_match_finite_differences_tanh() {
    check_gradients(Activation::Tanh, 22);
}

#[test]
fn gradients_match_finite_differences_sigmoid() {
    check_gradients(Activation::Sigmoid, 23);
}

#[test]
fn gradients_match_finite_differences_identity() {
    check_gradients(Activation::Identity, 24);
}

#[test]
fn masked_filter_has_zero_gradient() {
    let g = nonneg_graph(10, 6);
    let cfg = small_cfg(6, None);
    let mut params = safe_params(&cfg, 6);
    // rows of W_enc reading filter 1 are zero, so the loss ignores it
    let f = cfg.filter_dim;
    for m in cfg.input_dim + f..cfg.input_dim + 2 * f {
        params.w_enc.row_mut(m).fill(0.0);
    }
    let nodes: Vec<usize> = (0..10).collect();
    let fwd = Forward::run(&g, &nodes, &params, &cfg).unwrap();
    let dz = random_matrix(10, cfg.embed_dim, &mut ChaCha8Rng::seed_from_u64(1));
    let grads = fwd.backward(&dz, &params).unwrap();
    assert!(grads.theta[1].as_slice().iter().all(|&v| v == 0.0));
    assert!(grads.theta[0].as_slice().iter().any(|&v| v != 0.0));
}

#[test]
fn normalization_gradient_is_orthogonal_to_z() {
    // with identity activations dL/dh = (I - z zᵀ) dz / ‖h‖, which equals dL/db_enc
    let g = nonneg_graph(1, 0);
    let cfg = ModelConfig {
        encoder_activation: Activation::Identity,
        ..small_cfg(6, None)
    };
    let params = safe_params(&cfg, 2);
    let fwd = Forward::run(&g, &[0], &params, &cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let dz = random_matrix(1, cfg.embed_dim, &mut rng);
        let grads = fwd.backward(&dz, &params).unwrap();
        assert!(dot(&grads.b_enc, fwd.z(0)).abs() <= 1e-12);
    }
}

#[test]
fn backward_rejects_wrong_shape() {
    let g = nonneg_graph(4, 0);
    let cfg = small_cfg(6, None);
    let params = safe_params(&cfg, 0);
    let fwd = Forward::run(&g, &[0, 1], &params, &cfg).unwrap();
    assert!(fwd.backward(&Matrix::zeros(3, 5), &params).is_err());
    assert!(Forward::run(&g, &[1, 0], &params, &cfg).is_err());
}

#[test]
fn non_finite_gradient_names_block() {
    let g = nonneg_graph(4, 0);
    let cfg = small_cfg(6, None);
    let params = safe_params(&cfg, 0);
    let fwd = Forward::run(&g, &[0], &params, &cfg).unwrap();
    let mut dz = Matrix::zeros(1, 5);
    dz.set(0, 0, f64::NAN);
    match fwd.backward(&dz, &params) {
        Err(Error::NonFinite(block)) => assert!(!block.is_empty()),
        other => panic!("expected non-finite error, got {other:?}"),
    }
}

#[test]
fn checkpoint_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    for classes in [None, Some(3)] {
        let cfg = small_cfg(6, classes);
        let ckpt = Checkpoint {
            config: cfg.clone(),
            params: safe_params(&cfg, 9),
            seed: u64::MAX,
            epoch: 17,
            meta: vec![("dataset".into(), "cora".into()), ("lr".into(), "0.001".into())],
        };
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&path, &ckpt).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap(), ckpt);
    }
}

#[test]
fn corrupted_checkpoint_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_cfg(6, Some(3));
    let ckpt = Checkpoint {
        config: cfg.clone(),
        params: safe_params(&cfg, 9),
        seed: 1,
        epoch: 0,
        meta: vec![],
    };
    let path = dir.path().join("model.ckpt");
    save_checkpoint(&path, &ckpt).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    for (from, to) in [
        ("mfgcn-checkpoint 1", "mfgcn-checkpoint 9"),
        ("filter_dim 4", "filter_dim 5"),
        ("matrix w_enc", "matrix w_xxx"),
        ("depth 1", "depth x"),
    ] {
        let bad = dir.path().join("bad.ckpt");
        std::fs::write(&bad, text.replacen(from, to, 1)).unwrap();
        let err = load_checkpoint(&bad).unwrap_err();
        assert!(matches!(err, Error::Checkpoint(_)), "{from}: {err}");
    }
    let truncated = dir.path().join("short.ckpt");
    std::fs::write(&truncated, &text[..text.len() / 2]).unwrap();
    assert!(load_checkpoint(&truncated).is_err());
}
