use std::collections::BTreeMap;
use std::sync::Arc;

use gdtm::codec::FloatCodec;
use gdtm::engine::{ortho_unit, Block, Feed, Graph, Sparse};
use gdtm::network::LinearNet;
use gdtm::simplex::{Basis, SimplexLoss};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Fixture {
    g: Graph<f64>,
}

fn simplex_loss() -> SimplexLoss<f64> {
    let mut l = SimplexLoss::new(3);
    l.push(1.5, Basis::Hat { v: 0, mu: 0.7 }).unwrap();
    l.push(-2.0, Basis::EdgeBump { v: 1, w: 2 }).unwrap();
    l.push(0.75, Basis::Profile { v: 0, w: 2 }).unwrap();
    l.push(3.0, Basis::UnsymCorner { v: 2, w: 1, mu: 0.25 }).unwrap();
    l
}

/// Scalar graph touching every differentiable node kind.
fn fixture() -> Fixture {
    let mut g = Graph::new();
    let t = g.param(Block::T, 3);
    let z = g.param(Block::Z, 2);
    let s = g.param(Block::S, 3);
    let th = g.param(Block::Probe, 2);
    let x = g.input("x", 2);
    let a = g.linear(
        vec![(t, Sparse::new(2, 3, vec![(0, 0, 1.0), (0, 1, -2.0), (1, 2, 0.5), (1, 0, 1.0)]))],
        vec![0.3, -0.1],
    );
    let r = g.relu(a);
    let nt = g.square_norm(t);
    let shifted = g.linear(vec![(nt, Sparse::identity(1))], vec![1.0]);
    let q = g.sqrt(shifted);
    let rep = g.replicate(q, 2);
    let p = g.product(r, rep);
    let o = g.ortho_unit(z);
    let po = g.product(p, o);
    let npo = g.square_norm(po);
    let st = g.linear(vec![(t, Sparse::sum(3))], vec![0.0]);
    let c = g.cutoff(st, vec![(-1.0, 0.0), (0.5, 2.0), (1.0, 1.0)]);
    let sl = g.simplex_loss(s, Arc::new(simplex_loss()));
    let pr = g.primary(
        th,
        x,
        Arc::new(LinearNet {
            input_dim: 2,
            output_dim: 1,
        }),
        1,
    );
    let pr2 = g.product(pr, pr);
    let parts = [npo, c, sl, pr2];
    let out = g.linear(parts.iter().map(|&id| (id, Sparse::identity(1))).collect(), vec![0.0]);
    g.set_output(out);
    Fixture { g }
}

fn random_feed(rng: &mut ChaCha8Rng) -> Feed<f64> {
    let mut params = BTreeMap::new();
    params.insert(Block::T, (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect());
    params.insert(Block::Z, (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect());
    let w: Vec<f64> = (0..3).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    let mut s: Vec<f64> = w.iter().map(|x| x / total).collect();
    s[2] = 1.0 - s[0] - s[1];
    params.insert(Block::S, s);
    params.insert(Block::Probe, (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let mut inputs = BTreeMap::new();
    inputs.insert("x".to_string(), vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
    Feed { params, inputs }
}

fn value(g: &Graph<f64>, feed: &Feed<f64>) -> f64 {
    g.run(feed).unwrap()[0]
}

/// Central difference along `dir` in block `b`.
fn fd(g: &Graph<f64>, feed: &Feed<f64>, b: Block, dir: &[f64]) -> f64 {
    let h = 1e-6;
    let shift = |sign: f64| {
        let mut f = feed.clone();
        for (p, d) in f.params.get_mut(&b).unwrap().iter_mut().zip(dir) {
            *p += sign * h * d;
        }
        value(g, &f)
    };
    (shift(1.0) - shift(-1.0)) / (2.0 * h)
}

fn directions(b: Block, len: usize) -> Vec<Vec<f64>> {
    if b == Block::S {
        // Zero-sum directions keep the point on the simplex.
        vec![vec![1.0, -1.0, 0.0], vec![0.0, 1.0, -1.0], vec![-1.0, 0.0, 1.0]]
    } else {
        (0..len)
            .map(|i| (0..len).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect()
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn gradients_match_finite_differences() {
    let Fixture { g } = fixture();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let blocks = [Block::T, Block::Z, Block::S, Block::Probe];
    for _ in 0..20 {
        let feed = random_feed(&mut rng);
        let grads = g.grad(&feed, &blocks).unwrap();
        let vals = g.eval(&feed).unwrap();
        for b in blocks {
            let grad = &grads[&b];
            for dir in directions(b, grad.len()) {
                let analytic: f64 = grad.iter().zip(&dir).map(|(x, y)| x * y).sum();
                let numeric = fd(&g, &feed, b, &dir);
                assert!(rel_close(analytic, numeric, 1e-6), "{b:?} {dir:?}: {analytic} vs {numeric}");
                let forward = g.jvp(&vals, b, &dir).unwrap()[0];
                assert!(rel_close(forward, numeric, 1e-6), "{b:?} jvp {dir:?}: {forward} vs {numeric}");
            }
        }
    }
}

#[test]
fn stop_gradient_and_barriers_cut_derivatives() {
    let mut g = Graph::new();
    let t = g.param(Block::T, 2);
    let sg = g.stop_gradient(t);
    let p = g.product(sg, t);
    let enc = g.encode(t, FloatCodec::Passthrough64, 130, 1, false);
    let dec = g.decode(enc, FloatCodec::Passthrough64, 1, 1, 128);
    let q = g.product(dec, t);
    let both = g.add(p, q);
    let out = g.linear(vec![(both, Sparse::sum(2))], vec![0.0]);
    g.set_output(out);
    let mut feed = Feed::default();
    feed.params.insert(Block::T, vec![1.5, -2.0]);
    let vals = g.eval(&feed).unwrap();
    // Round trip through the tape is exact.
    assert_eq!(vals[dec.0], vec![1.5, -2.0]);
    assert_eq!(vals[out.0], vec![2.0 * (1.5 * 1.5 + 4.0)]);
    // Without the cuts the gradient would be 4 t.
    let grad = g.grad(&feed, &[Block::T]).unwrap();
    assert_eq!(grad[&Block::T], vec![3.0, -4.0]);
    assert_eq!(g.jvp(&vals, Block::T, &[1.0, 0.0]).unwrap(), vec![3.0]);
}

#[test]
fn one_sided_derivatives_at_kinks() {
    let mut g = Graph::new();
    let t = g.param(Block::T, 1);
    let r = g.relu(t);
    let c = g.cutoff(t, vec![(0.0, 0.0), (1.0, 2.0)]);
    let out = g.add(r, c);
    g.set_output(out);
    let mut feed = Feed::default();
    feed.params.insert(Block::T, vec![0.0]);
    let vals = g.eval(&feed).unwrap();
    assert_eq!(g.jvp(&vals, Block::T, &[1.0]).unwrap(), vec![3.0]);
    assert_eq!(g.jvp(&vals, Block::T, &[-1.0]).unwrap(), vec![0.0]);
    // relu'(0) = 0, cutoff uses the right slope.
    assert_eq!(g.grad(&feed, &[Block::T]).unwrap()[&Block::T], vec![2.0]);
    feed.params.insert(Block::T, vec![1.0]);
    let vals = g.eval(&feed).unwrap();
    assert_eq!(g.jvp(&vals, Block::T, &[-1.0]).unwrap(), vec![-3.0]);
    assert_eq!(g.jvp(&vals, Block::T, &[1.0]).unwrap(), vec![1.0]);
}

#[test]
fn depth_and_dump() {
    let Fixture { g } = fixture();
    // z -> ortho_unit (5) -> product -> square_norm.
    assert_eq!(g.depth().unwrap(), 7);
    let dump = g.dump();
    for kind in ["relu", "sqrt", "ortho_unit", "simplex_loss", "primary", "cutoff", "(output)"] {
        assert!(dump.contains(kind), "{kind} missing from\n{dump}");
    }
    assert_eq!(dump.lines().count(), g.nodes().len());
}

#[test]
fn ortho_unit_is_exact_on_the_demo_target() {
    assert_eq!(ortho_unit(&[0.0, 3.0]), vec![1.0, 0.0]);
}

#[test]
fn blend_is_exact_at_the_ends() {
    let mut g = Graph::new();
    let w = g.param(Block::Z, 1);
    let a = g.constant(vec![f64::MAX / 4.0, 1.0]);
    let b = g.constant(vec![0.1, 0.2]);
    let out = g.blend(w, a, b);
    g.set_output(out);
    let mut feed = Feed::default();
    feed.params.insert(Block::Z, vec![1.0]);
    assert_eq!(g.run(&feed).unwrap(), vec![0.1, 0.2]);
    feed.params.insert(Block::Z, vec![0.0]);
    assert_eq!(g.run(&feed).unwrap(), vec![f64::MAX / 4.0, 1.0]);
}
