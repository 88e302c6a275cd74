//! Independent oracles shared by the integration tests. Nothing here calls
//! into the solver or the field tables under test.
#![allow(dead_code)]

use linesec::capacity::{ChannelParams, Randomness};
use linesec::lp::{LineNetwork, LpModel, Relation, Sense};
use rand::Rng;

/// Shift-and-add product in GF(2^bits) modulo `poly`.
pub fn ref_mul(a: u32, b: u32, poly: u32, bits: u32) -> u32 {
    let (mut a, mut b, mut acc) = (a, b, 0);
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a >> bits & 1 == 1 {
            a ^= poly;
        }
    }
    acc
}

pub fn ref_inv(a: u32, poly: u32, bits: u32) -> u32 {
    (1..1u32 << bits)
        .find(|&x| ref_mul(a, x, poly, bits) == 1)
        .expect("nonzero elements are invertible")
}

/// Rank by plain Gaussian elimination with the reference arithmetic.
pub fn ref_rank(rows: &[Vec<u32>], poly: u32, bits: u32) -> usize {
    let mut m: Vec<Vec<u32>> = rows.to_vec();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..m.len()).find(|&r| m[r][c] != 0) else {
            continue;
        };
        m.swap(rank, p);
        let inv = ref_inv(m[rank][c], poly, bits);
        for r in 0..m.len() {
            if r != rank && m[r][c] != 0 {
                let f = ref_mul(m[r][c], inv, poly, bits);
                for k in 0..cols {
                    let t = ref_mul(f, m[rank][k], poly, bits);
                    m[r][k] ^= t;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Maximum of the model's objective by enumerating every basic solution:
/// each choice of `nvars` tight constraints or bounds is solved and kept if
/// feasible. `None` when no vertex is feasible. Assumes a bounded optimum.
pub fn vertex_optimum(model: &LpModel) -> Option<f64> {
    let nv = model.variables().len();
    assert!(nv <= 8, "vertex oracle is exponential");
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for c in model.constraints() {
        let mut a = vec![0.0; nv];
        for &(v, x) in &c.terms {
            a[v] += x;
        }
        planes.push((a, c.rhs));
    }
    for (i, v) in model.variables().iter().enumerate() {
        let mut a = vec![0.0; nv];
        a[i] = 1.0;
        planes.push((a, v.lower));
    }
    let mut obj = vec![0.0; nv];
    for &(v, x) in model.objective() {
        obj[v] += x;
    }
    let sign = if model.sense() == Sense::Maximize { 1.0 } else { -1.0 };
    let mut best: Option<f64> = None;
    let mut pick = Vec::with_capacity(nv);
    subsets(planes.len(), nv, &mut pick, &mut |idx| {
        let a: Vec<Vec<f64>> = idx.iter().map(|&i| planes[i].0.clone()).collect();
        let b: Vec<f64> = idx.iter().map(|&i| planes[i].1).collect();
        let Some(x) = solve_square(a, b) else { return };
        if !feasible(model, &x) {
            return;
        }
        let val: f64 = obj.iter().zip(&x).map(|(c, v)| c * v).sum();
        if best.is_none_or(|b| sign * val > sign * b) {
            best = Some(val);
        }
    });
    best
}

fn subsets(n: usize, k: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if cur.len() == k {
        f(cur);
        return;
    }
    let start = cur.last().map_or(0, |&l| l + 1);
    for i in start..n {
        if n - i < k - cur.len() {
            break;
        }
        cur.push(i);
        subsets(n, k, cur, f);
        cur.pop();
    }
}

fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                if f != 0.0 {
                    for k in c..n {
                        a[r][k] -= f * a[c][k];
                    }
                    b[r] -= f * b[c];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

pub fn feasible(model: &LpModel, x: &[f64]) -> bool {
    const TOL: f64 = 1e-8;
    model.variables().iter().zip(x).all(|(v, &xi)| xi >= v.lower - TOL)
        && model.constraints().iter().all(|c| {
            let lhs: f64 = c.terms.iter().map(|&(v, a)| a * x[v]).sum();
            match c.relation {
                Relation::Le => lhs <= c.rhs + TOL,
                Relation::Ge => lhs >= c.rhs - TOL,
                Relation::Eq => (lhs - c.rhs).abs() <= TOL,
            }
        })
}

/// Hop with both erasure probabilities in [lo, hi].
pub fn random_hop<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> ChannelParams {
    ChannelParams::new(rng.gen_range(lo..=hi), rng.gen_range(lo..=hi)).unwrap()
}

/// Line of `n` random hops; the source is unlimited with probability 1/2
/// and each relay has rate in [0, 1.5].
pub fn random_line<R: Rng>(rng: &mut R, n: usize, v: usize) -> LineNetwork {
    let hops = (0..n).map(|_| random_hop(rng, 0.05, 0.95)).collect();
    let rand = (0..n)
        .map(|j| {
            if j == 0 && rng.gen_bool(0.5) {
                Randomness::Unlimited
            } else {
                Randomness::Limited(rng.gen_range(0.0..1.5))
            }
        })
        .collect();
    LineNetwork::new(hops, rand, v).unwrap()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}
