//! Loop-level reference implementations shared by the integration tests.
#![allow(dead_code)]

use cleer::diffcore::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `[B][K][D]` view of a tensor for the loop oracles.
pub type View = Vec<Vec<Vec<f64>>>;

pub fn view(t: &Tensor) -> View {
    let (b, k, d) = (t.shape()[0], t.shape()[1], t.shape()[2]);
    (0..b)
        .map(|i| (0..k).map(|s| t.data()[(i * k + s) * d..(i * k + s + 1) * d].to_vec()).collect())
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `-log(exp(pos) / sum(exp(all)))` in the stable form.
pub fn nll(pos: f64, all: &[f64]) -> f64 {
    let m = all.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + all.iter().map(|v| (v - m).exp()).sum::<f64>().ln() - pos
}

pub fn oracle_tcl(z: &View, zp: &View) -> f64 {
    let (b, k) = (z.len(), z[0].len());
    let mut total = 0.0;
    for i in 0..b {
        for t in 0..k {
            let mut all: Vec<f64> = (0..k).map(|s| dot(&z[i][t], &zp[i][s])).collect();
            all.extend((0..k).filter(|&s| s != t).map(|s| dot(&z[i][t], &z[i][s])));
            total += nll(dot(&z[i][t], &zp[i][t]), &all);
        }
    }
    total / (b * k) as f64
}

pub fn oracle_icl(z: &View, zp: &View) -> f64 {
    let (b, k) = (z.len(), z[0].len());
    let mut total = 0.0;
    for i in 0..b {
        for t in 0..k {
            let mut all: Vec<f64> = (0..b).map(|j| dot(&z[i][t], &zp[j][t])).collect();
            all.extend((0..b).filter(|&j| j != i).map(|j| dot(&z[i][t], &z[j][t])));
            total += nll(dot(&z[i][t], &zp[i][t]), &all);
        }
    }
    total / (b * k) as f64
}

pub fn pool(z: &View) -> View {
    z.iter()
        .map(|row| {
            row.chunks(2)
                .map(|pair| {
                    (0..pair[0].len())
                        .map(|d| pair.iter().map(|v| v[d]).fold(f64::NEG_INFINITY, f64::max))
                        .collect()
                })
                .collect()
        })
        .collect()
}

pub fn oracle_hcl(z: &View, zp: &View) -> (f64, usize) {
    let (mut a, mut b) = (z.clone(), zp.clone());
    let mut levels = Vec::new();
    loop {
        levels.push(oracle_tcl(&a, &b) + oracle_icl(&a, &b));
        if a[0].len() == 1 {
            break;
        }
        a = pool(&a);
        b = pool(&b);
    }
    (levels.iter().sum::<f64>() / levels.len() as f64, levels.len())
}

pub fn pair(shape: [usize; 3], scale: f64, seed: u64) -> (Tensor, Tensor) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = Tensor::randn(&shape, &mut rng);
    let mut b = Tensor::randn(&shape, &mut rng);
    a.data_mut().iter_mut().for_each(|v| *v *= scale);
    b.data_mut().iter_mut().for_each(|v| *v *= scale);
    (a, b)
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}
