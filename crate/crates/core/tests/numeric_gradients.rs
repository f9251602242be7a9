//! Gradient integrity for every differentiable tape op, checked against a
//! central finite-difference oracle, plus tape determinism and matmul
//! associativity.

use metagraphloc::numeric::{Aggregation, Axis, Matrix, NodeId, ReduceKind, Tape};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    metagraphloc::rng::stream(seed, 0xFD)
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random::<f64>() * 2.0 - 1.0)
}

/// Central finite differences of a scalar loss with respect to each
/// parameter entry. Independent of the backward pass under test.
fn finite_diff(params: &[Matrix], loss: &dyn Fn(&[Matrix]) -> f64, h: f64) -> Vec<Matrix> {
    let mut grads = Vec::with_capacity(params.len());
    for pi in 0..params.len() {
        let (rows, cols) = params[pi].shape();
        let mut g = Matrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                let mut plus = params.to_vec();
                plus[pi].set(r, c, params[pi].get(r, c) + h);
                let mut minus = params.to_vec();
                minus[pi].set(r, c, params[pi].get(r, c) - h);
                g.set(r, c, (loss(&plus) - loss(&minus)) / (2.0 * h));
            }
        }
        grads.push(g);
    }
    grads
}

fn max_rel_err(analytic: &[Matrix], numeric: &[Matrix]) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, n) in analytic.iter().zip(numeric) {
        assert_eq!(a.shape(), n.shape());
        for (x, y) in a.data().iter().zip(n.data()) {
            let scale = x.abs().max(y.abs()).max(1e-4);
            worst = worst.max((x - y).abs() / scale);
        }
    }
    worst
}

/// Runs one gradcheck: builds the tape via `build`, takes analytic grads,
/// and compares against finite differences of the same forward.
fn gradcheck(
    params: &[Matrix],
    build: &dyn Fn(&mut Tape, &[NodeId]) -> NodeId,
    tol: f64,
) -> f64 {
    let loss_value = |ps: &[Matrix]| -> f64 {
        let mut t = Tape::new();
        let ids: Vec<NodeId> = ps.iter().map(|p| t.param(p.clone())).collect();
        let out = build(&mut t, &ids);
        t.value(out).get(0, 0)
    };
    let mut t = Tape::new();
    let ids: Vec<NodeId> = params.iter().map(|p| t.param(p.clone())).collect();
    let out = build(&mut t, &ids);
    t.backward(out).unwrap();
    let analytic = t.gradients(&ids);
    let numeric = finite_diff(params, &loss_value, 1e-5);
    let err = max_rel_err(&analytic, &numeric);
    assert!(err < tol, "gradient mismatch: rel err {err}");
    err
}

#[test]
fn matmul_gradient_matches_finite_differences() {
    // 4x3 * 3x2 per the operation contract; rel err below 1e-5.
    let mut r = rng(1);
    let a = random_matrix(&mut r, 4, 3);
    let b = random_matrix(&mut r, 3, 2);
    let err = gradcheck(&[a, b], &|t, ids| {
        let p = t.matmul(ids[0], ids[1]).unwrap();
        t.sum_all(p).unwrap()
    }, 1e-5);
    assert!(err < 1e-5);
}

#[test]
fn leaky_relu_composite_matches_finite_differences() {
    // f(x) = sum(leaky_relu(W x)) on random 3x3, rel err < 1e-4.
    for seed in 0..20 {
        let mut r = rng(100 + seed);
        let w = random_matrix(&mut r, 3, 3);
        let x = random_matrix(&mut r, 3, 3);
        gradcheck(&[w, x], &|t, ids| {
            let p = t.matmul(ids[0], ids[1]).unwrap();
            let a = t.leaky_relu(p, 0.01);
            t.sum_all(a).unwrap()
        }, 1e-4);
    }
}

#[test]
fn elementwise_ops_match_finite_differences() {
    for seed in 0..100 {
        let mut r = rng(200 + seed);
        let rows = r.random_range(1..5usize);
        let cols = r.random_range(1..5usize);
        let a = random_matrix(&mut r, rows, cols);
        let b = random_matrix(&mut r, rows, cols);
        gradcheck(&[a, b], &|t, ids| {
            let s = t.add(ids[0], ids[1]).unwrap();
            let d = t.sub(s, ids[1]).unwrap();
            let m = t.mul(d, ids[1]).unwrap();
            let q = t.square(m);
            let sc = t.scale(q, 0.7);
            t.mean_all(sc).unwrap()
        }, 1e-4);
    }
}

#[test]
fn reductions_match_finite_differences() {
    let kinds = [ReduceKind::Sum, ReduceKind::Mean, ReduceKind::Max];
    let axes = [Axis::Rows, Axis::Cols, Axis::All];
    for seed in 0..100 {
        let mut r = rng(300 + seed);
        let rows = r.random_range(2..5usize);
        let cols = r.random_range(2..5usize);
        let a = random_matrix(&mut r, rows, cols);
        let kind = kinds[(seed % 3) as usize];
        let axis = axes[((seed / 3) % 3) as usize];
        gradcheck(&[a], &|t, ids| {
            let red = t.reduce(ids[0], kind, axis).unwrap();
            let sq = t.square(red);
            t.sum_all(sq).unwrap()
        }, 1e-4);
    }
}

#[test]
fn gather_and_segment_match_finite_differences() {
    let aggs = [Aggregation::Add, Aggregation::Mean, Aggregation::Max];
    for seed in 0..100 {
        let mut r = rng(400 + seed);
        let rows = r.random_range(2..6usize);
        let cols = r.random_range(1..4usize);
        let a = random_matrix(&mut r, rows, cols);
        let n_gather = r.random_range(2..7usize);
        let indices: Vec<usize> = (0..n_gather).map(|_| r.random_range(0..rows)).collect();
        // Two segments, both non-empty by construction.
        let segments: Vec<usize> =
            (0..n_gather).map(|i| if i == 0 { 0 } else if i == 1 { 1 } else { r.random_range(0..2) }).collect();
        let agg = aggs[(seed % 3) as usize];
        gradcheck(&[a], &|t, ids| {
            let g = t.gather_rows(ids[0], &indices).unwrap();
            let s = t.segment_reduce(g, &segments, 2, agg).unwrap();
            let sq = t.square(s);
            t.sum_all(sq).unwrap()
        }, 1e-4);
    }
}

#[test]
fn reshape_chain_matches_finite_differences() {
    for seed in 0..50 {
        let mut r = rng(500 + seed);
        let a = random_matrix(&mut r, 3, 4);
        let w = random_matrix(&mut r, 12, 2);
        gradcheck(&[a, w], &|t, ids| {
            let flat = t.flatten_row(ids[0]).unwrap();
            let p = t.matmul(flat, ids[1]).unwrap();
            let sq = t.square(p);
            t.sum_all(sq).unwrap()
        }, 1e-4);
    }
}

#[test]
fn tape_evaluation_is_deterministic() {
    let build = |seed: u64| -> f64 {
        let mut r = rng(seed);
        let a = random_matrix(&mut r, 6, 5);
        let b = random_matrix(&mut r, 5, 4);
        let mut t = Tape::new();
        let ia = t.param(a);
        let ib = t.param(b);
        let p = t.matmul(ia, ib).unwrap();
        let l = t.leaky_relu(p, 0.01);
        let s = t.mean_all(l).unwrap();
        t.value(s).get(0, 0)
    };
    for seed in 0..10 {
        let x = build(seed);
        let y = build(seed);
        assert_eq!(x.to_bits(), y.to_bits(), "seed {seed} not bit-identical");
    }
}

#[test]
fn matmul_associativity_on_well_conditioned_triples() {
    for seed in 0..50 {
        let mut r = rng(600 + seed);
        let d1 = r.random_range(2..6usize);
        let d2 = r.random_range(2..6usize);
        let d3 = r.random_range(2..6usize);
        let d4 = r.random_range(2..6usize);
        let a = random_matrix(&mut r, d1, d2);
        let b = random_matrix(&mut r, d2, d3);
        let c = random_matrix(&mut r, d3, d4);
        let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
        let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
        assert!(left.max_abs_diff(&right) < 1e-9);
    }
}
