#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use crnflux::LabeledGenerator;

pub fn network(name: &str) -> String {
    format!("{}/../../networks/{name}", env!("CARGO_MANIFEST_DIR"))
}

pub fn tri_q() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[-3.0, 1.0, 2.0, 2.0, -3.0, 1.0, 1.0, 2.0, -3.0])
}

pub fn tri_gen() -> LabeledGenerator {
    LabeledGenerator::from_matrix(tri_q()).unwrap()
}

/// Random connected graph with symmetric edge pattern: a random spanning
/// tree plus each remaining pair with probability `p`. Rates are
/// log-uniform in [0.1, 10].
pub fn random_generator<R: Rng>(rng: &mut R, n: usize, p: f64) -> LabeledGenerator {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut adj = vec![vec![false; n]; n];
    for k in 1..n {
        let parent = order[rng.random_range(0..k)];
        adj[order[k]][parent] = true;
        adj[parent][order[k]] = true;
    }
    for i in 0..n {
        for j in i + 1..n {
            if !adj[i][j] && rng.random::<f64>() < p {
                adj[i][j] = true;
                adj[j][i] = true;
            }
        }
    }
    let mut q = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if adj[i][j] {
                q[(i, j)] = 10f64.powf(rng.random_range(-1.0..1.0));
            }
        }
    }
    LabeledGenerator::from_matrix(q).unwrap()
}

/// A small random network in the input format, one to three internal
/// species capped by bounds or a shared conservation law.
pub fn random_spec_text<R: Rng>(rng: &mut R) -> String {
    let ny = rng.random_range(2..=3);
    let nx = rng.random_range(1..=2);
    let nr = rng.random_range(2..=4);
    let mut s = String::new();
    let ys: Vec<String> = (0..ny).map(|i| format!("Y{i}")).collect();
    s.push_str(&format!("species internal {}\n", ys.join(" ")));
    let xs: Vec<String> = (0..nx).map(|i| format!("X{i}={:.3}", rng.random_range(0.2..3.0))).collect();
    s.push_str(&format!("species external {}\n", xs.join(" ")));
    let side = |rng: &mut R| -> (Vec<u32>, Vec<u32>) {
        let y = (0..ny).map(|_| if rng.random::<f64>() < 0.4 { rng.random_range(1..=2) } else { 0 }).collect();
        let x = (0..nx).map(|_| if rng.random::<f64>() < 0.3 { 1 } else { 0 }).collect();
        (y, x)
    };
    let render = |y: &[u32], x: &[u32]| -> String {
        let mut terms = Vec::new();
        for (i, &c) in y.iter().enumerate() {
            match c {
                0 => {}
                1 => terms.push(format!("Y{i}")),
                c => terms.push(format!("{c}*Y{i}")),
            }
        }
        for (i, &c) in x.iter().enumerate() {
            if c > 0 {
                terms.push(format!("X{i}"));
            }
        }
        if terms.is_empty() {
            "0".into()
        } else {
            terms.join(" + ")
        }
    };
    let mut seen = Vec::new();
    let mut l = 0;
    while l < nr {
        let (ry, rx) = side(rng);
        let (py, px) = side(rng);
        let net: Vec<i64> = py.iter().zip(&ry).map(|(&p, &r)| p as i64 - r as i64).collect();
        let neg: Vec<i64> = net.iter().map(|c| -c).collect();
        if net.iter().all(|&c| c == 0) || seen.contains(&net) || seen.contains(&neg) {
            continue;
        }
        seen.push(net);
        s.push_str(&format!(
            "reaction R{l}: {} <-> {} ; kf={:.3} kr={:.3}\n",
            render(&ry, &rx),
            render(&py, &px),
            rng.random_range(0.2..4.0),
            rng.random_range(0.2..4.0)
        ));
        l += 1;
    }
    if rng.random::<bool>() {
        s.push_str(&format!("conserve {} = {}\n", ys.join("+"), rng.random_range(1..=3)));
    } else {
        for y in &ys {
            s.push_str(&format!("bound {y} <= {}\n", rng.random_range(1..=2)));
        }
    }
    s.push_str("omega 1\n");
    s
}
