//! Central-difference gradient checks for every differentiable op and loss.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stereosync::tensorcore::Var;
use stereosync::{Graph, Result, Tensor};

pub const STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;
pub const INSTANCES: usize = 20;

/// Worst relative error seen for one op over all its random instances.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub instances: usize,
    pub worst: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.instances >= INSTANCES && self.worst < TOLERANCE
    }
}

type Build = dyn Fn(&mut Graph, &[Var]) -> Result<Var>;

/// Reduces a non-scalar output to a scalar with fixed random weights so that
/// every output element carries a distinct upstream gradient.
fn scalar_loss(graph: &mut Graph, out: Var, weights: &[f64]) -> Result<Var> {
    let n = graph.value(out).numel();
    if n == 1 {
        return Ok(out);
    }
    let w = graph.constant(Tensor::new(vec![n, 1], weights[..n].to_vec())?);
    let b = graph.constant(Tensor::zeros(&[1]));
    graph.dense(out, w, b)
}

fn evaluate(inputs: &[Tensor], build: &Build, weights: &[f64]) -> f64 {
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.constant(t.clone())).collect();
    let out = build(&mut g, &vars).unwrap();
    let loss = scalar_loss(&mut g, out, weights).unwrap();
    g.value(loss).item().unwrap()
}

/// ‖analytic − numeric‖ / max(‖analytic‖, ‖numeric‖) over all inputs.
pub fn relative_error(inputs: &[Tensor], build: &Build, rng: &mut ChaCha8Rng) -> f64 {
    let weights: Vec<f64> = (0..4096).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.leaf(t.clone())).collect();
    let out = build(&mut g, &vars).unwrap();
    let loss = scalar_loss(&mut g, out, &weights).unwrap();
    g.backward(loss).unwrap();

    let (mut diff, mut na, mut nn) = (0.0, 0.0, 0.0);
    for (k, var) in vars.iter().enumerate() {
        let analytic = g
            .grad(*var)
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![0.0; inputs[k].numel()]);
        for (e, &a) in analytic.iter().enumerate() {
            let mut shifted = inputs.to_vec();
            shifted[k].values_mut()[e] += STEP;
            let up = evaluate(&shifted, build, &weights);
            shifted[k].values_mut()[e] -= 2.0 * STEP;
            let down = evaluate(&shifted, build, &weights);
            let numeric = (up - down) / (2.0 * STEP);
            diff += (a - numeric).powi(2);
            na += a.powi(2);
            nn += numeric.powi(2);
        }
    }
    let scale = na.sqrt().max(nn.sqrt());
    if scale < 1e-12 {
        0.0
    } else {
        diff.sqrt() / scale
    }
}

fn uniform(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(
        shape.to_vec(),
        (0..n).map(|_| rng.gen_range(lo..hi)).collect(),
    )
    .unwrap()
}

/// Values in ±[0.05, 1], kept away from the ReLU kink.
fn away_from_zero(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    let v = (0..n)
        .map(|_| {
            let m = rng.gen_range(0.05..1.0);
            if rng.gen_bool(0.5) {
                m
            } else {
                -m
            }
        })
        .collect();
    Tensor::new(shape.to_vec(), v).unwrap()
}

fn probability(rng: &mut ChaCha8Rng, n: usize) -> Tensor {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
    let s: f64 = raw.iter().sum();
    Tensor::vector(raw.into_iter().map(|v| v / s).collect())
}

fn check(
    name: &'static str,
    seed: u64,
    make: impl Fn(&mut ChaCha8Rng) -> Vec<Tensor>,
    build: &Build,
) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let worst = (0..INSTANCES)
        .map(|_| {
            let inputs = make(&mut rng);
            relative_error(&inputs, build, &mut rng)
        })
        .fold(0.0, f64::max);
    CheckResult {
        name,
        instances: INSTANCES,
        worst,
    }
}

/// Runs every check and returns one result per op or loss.
pub fn gradient_suite() -> Vec<CheckResult> {
    let mut out = Vec::new();
    out.push(check(
        "conv2d",
        1,
        |r| {
            let (h, w) = (r.gen_range(3..7), r.gen_range(3..7));
            let (c, f) = (r.gen_range(1..4), r.gen_range(1..4));
            vec![
                uniform(r, &[h, w, c], -1.0, 1.0),
                uniform(r, &[3, 3, c, f], -1.0, 1.0),
                uniform(r, &[f], -1.0, 1.0),
            ]
        },
        &|g, v| g.conv2d(v[0], v[1], v[2]),
    ));
    out.push(check(
        "maxpool2d",
        2,
        |r| {
            let (h, w, c) = (
                2 * r.gen_range(1..4),
                2 * r.gen_range(1..4),
                r.gen_range(1..4),
            );
            vec![uniform(r, &[h, w, c], -1.0, 1.0)]
        },
        &|g, v| g.maxpool2d(v[0]),
    ));
    out.push(check(
        "global_avg_pool",
        3,
        |r| {
            let (h, w, c) = (r.gen_range(1..5), r.gen_range(1..5), r.gen_range(1..5));
            vec![uniform(r, &[h, w, c], -1.0, 1.0)]
        },
        &|g, v| g.global_avg_pool(v[0]),
    ));
    out.push(check(
        "dense",
        4,
        |r| {
            let (n, m) = (r.gen_range(1..9), r.gen_range(1..9));
            vec![
                uniform(r, &[n], -1.0, 1.0),
                uniform(r, &[n, m], -1.0, 1.0),
                uniform(r, &[m], -1.0, 1.0),
            ]
        },
        &|g, v| g.dense(v[0], v[1], v[2]),
    ));
    out.push(check(
        "relu",
        5,
        |r| {
            let n = r.gen_range(1..12);
            vec![away_from_zero(r, &[n])]
        },
        &|g, v| Ok(g.relu(v[0])),
    ));
    out.push(check(
        "sigmoid",
        6,
        |r| {
            let n = r.gen_range(1..12);
            vec![uniform(r, &[n], -4.0, 4.0)]
        },
        &|g, v| Ok(g.sigmoid(v[0])),
    ));
    out.push(check(
        "softmax",
        7,
        |r| {
            let n = r.gen_range(2..12);
            vec![uniform(r, &[n], -3.0, 3.0)]
        },
        &|g, v| Ok(g.softmax(v[0])),
    ));
    out.push(check(
        "add",
        8,
        |r| {
            let n = r.gen_range(1..8);
            vec![uniform(r, &[n], -1.0, 1.0), uniform(r, &[n], -1.0, 1.0)]
        },
        &|g, v| g.add(v[0], v[1]),
    ));
    out.push(check(
        "sub",
        9,
        |r| {
            let n = r.gen_range(1..8);
            vec![uniform(r, &[n], -1.0, 1.0), uniform(r, &[n], -1.0, 1.0)]
        },
        &|g, v| g.sub(v[0], v[1]),
    ));
    out.push(check(
        "scale",
        10,
        |r| {
            let n = r.gen_range(1..8);
            vec![uniform(r, &[n], -1.0, 1.0)]
        },
        &|g, v| Ok(g.scale(v[0], -1.7)),
    ));
    out.push(check(
        "sum",
        11,
        |r| {
            let n = r.gen_range(1..8);
            vec![uniform(r, &[n], -1.0, 1.0)]
        },
        &|g, v| Ok(g.sum(v[0])),
    ));
    out.push(check(
        "bce_loss",
        12,
        |r| {
            vec![
                Tensor::scalar(r.gen_range(0.05..0.95)),
                Tensor::scalar(f64::from(r.gen_range(0..2u8))),
            ]
        },
        &|g, v| {
            let label = g.value(v[1]).item().unwrap().round();
            g.bce_loss(v[0], label)
        },
    ));
    out.push(check(
        "categorical_ce_loss",
        13,
        |r| {
            let n = r.gen_range(2..10);
            let label = r.gen_range(0..n);
            vec![probability(r, n), Tensor::scalar(label as f64)]
        },
        &|g, v| {
            let label = g.value(v[1]).item().unwrap().round() as usize;
            g.categorical_ce_loss(v[0], label)
        },
    ));
    let embeddings = |r: &mut ChaCha8Rng| {
        let shape = if r.gen_bool(0.5) {
            vec![r.gen_range(2..9)]
        } else {
            vec![r.gen_range(2..4), r.gen_range(2..6)]
        };
        (0..3)
            .map(|_| uniform(r, &shape, -1.0, 1.0))
            .collect::<Vec<_>>()
    };
    out.push(check("triplet_euclidean_loss", 14, embeddings, &|g, v| {
        g.triplet_euclidean_loss(v[0], v[1], v[2], false)
    }));
    out.push(check(
        "triplet_euclidean_loss (hinge)",
        15,
        // Far negatives keep the bracket clear of zero on both sides.
        |r| {
            let n = r.gen_range(2..9);
            let a = uniform(r, &[n], -1.0, 1.0);
            let p = uniform(r, &[n], -1.0, 1.0);
            let neg = if r.gen_bool(0.5) {
                uniform(r, &[n], 5.0, 6.0)
            } else {
                a.clone()
            };
            vec![a, p, neg]
        },
        &|g, v| g.triplet_euclidean_loss(v[0], v[1], v[2], true),
    ));
    out.push(check(
        "triplet_cosine_loss",
        16,
        // Negatives close to the anchor keep the hinge active.
        |r| {
            let n = r.gen_range(2..9);
            let a = uniform(r, &[n], 0.5, 1.0);
            let p = uniform(r, &[n], -1.0, 1.0);
            let neg = Tensor::vector(
                a.values()
                    .iter()
                    .map(|x| x + r.gen_range(-0.1..0.1))
                    .collect(),
            );
            vec![a, p, neg]
        },
        &|g, v| g.triplet_cosine_loss(v[0], v[1], v[2]),
    ));
    out
}
