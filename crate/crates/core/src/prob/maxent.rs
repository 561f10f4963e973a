//! Maximum of `H(X | Y)` over input distributions `P'(X)` for a fixed sensor
//! `P(Y | X)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use super::conditional::ConditionalTable;
use super::info::clamp_nonnegative;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct MaxEntropyOptions {
    /// Largest input dimension for which the grid cross-check runs.
    pub grid_limit: usize,
    /// Grid step is `1 / grid_resolution`.
    pub grid_resolution: usize,
    /// Allow inputs above `grid_limit`, using gradient ascent only.
    pub approximate: bool,
    pub random_starts: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for MaxEntropyOptions {
    fn default() -> Self {
        Self {
            grid_limit: 4,
            grid_resolution: 50,
            approximate: false,
            random_starts: 8,
            max_iterations: 500,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MaxEntropy {
    pub value: f64,
    /// Maximizing input distribution.
    pub input: Vec<f64>,
    pub gradient_value: f64,
    pub grid_value: Option<f64>,
}

/// `H(X|Y)` with `X ~ p` pushed through `sensor`.
pub fn conditional_entropy_given_output(sensor: &ConditionalTable, p: &[f64]) -> f64 {
    let s = sensor.matrix();
    let mut h = 0.0;
    for y in 0..s.nrows() {
        let q: f64 = (0..s.ncols()).map(|x| s[(y, x)] * p[x]).sum();
        if q <= 0.0 {
            continue;
        }
        for x in 0..s.ncols() {
            let joint = s[(y, x)] * p[x];
            if joint > 0.0 {
                h -= joint * (joint / q).ln();
            }
        }
    }
    clamp_nonnegative(h)
}

fn gradient(sensor: &ConditionalTable, p: &[f64]) -> Vec<f64> {
    let s = sensor.matrix();
    let q: Vec<f64> = (0..s.nrows())
        .map(|y| (0..s.ncols()).map(|x| s[(y, x)] * p[x]).sum())
        .collect();
    (0..s.ncols())
        .map(|x| {
            let mut g = -p[x].max(1e-15).ln();
            for (y, &qy) in q.iter().enumerate() {
                let syx = s[(y, x)];
                if syx > 0.0 {
                    g += syx * (qy.max(1e-300).ln() - syx.ln());
                }
            }
            g
        })
        .collect()
}

/// Euclidean projection onto the probability simplex.
pub(crate) fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumulative += ui;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

fn ascend(sensor: &ConditionalTable, start: Vec<f64>, max_iterations: usize) -> (f64, Vec<f64>) {
    let mut p = start;
    let mut h = conditional_entropy_given_output(sensor, &p);
    let mut step = 1.0;
    for _ in 0..max_iterations {
        let g = gradient(sensor, &p);
        let mut improved = false;
        let mut t = step;
        for _ in 0..60 {
            let cand = project_to_simplex(
                &p.iter().zip(&g).map(|(pi, gi)| pi + t * gi).collect::<Vec<_>>(),
            );
            let hc = conditional_entropy_given_output(sensor, &cand);
            let ascent: f64 = g.iter().zip(cand.iter().zip(&p)).map(|(gi, (c, pi))| gi * (c - pi)).sum();
            if hc >= h + 1e-4 * ascent && hc > h {
                let moved = cand.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                p = cand;
                h = hc;
                improved = moved > 1e-13;
                step = (t * 2.0).min(1e3);
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (h, p)
}

fn for_each_grid_point(dim: usize, resolution: usize, f: &mut impl FnMut(&[f64])) {
    fn rec(prefix: &mut Vec<usize>, remaining: usize, dim: usize, res: usize, f: &mut impl FnMut(&[f64])) {
        if prefix.len() == dim - 1 {
            prefix.push(remaining);
            let point: Vec<f64> = prefix.iter().map(|&k| k as f64 / res as f64).collect();
            f(&point);
            prefix.pop();
            return;
        }
        for k in 0..=remaining {
            prefix.push(k);
            rec(prefix, remaining - k, dim, res, f);
            prefix.pop();
        }
    }
    rec(&mut Vec::with_capacity(dim), resolution, dim, resolution, f);
}

/// `max_{P'(X)} H(X | Y)` for `Y ~ sensor(X)`, by multi-start projected
/// gradient ascent plus (for small inputs) an exhaustive simplex grid. The
/// larger of the two is returned with its maximizer.
pub fn max_conditional_entropy(sensor: &ConditionalTable, options: &MaxEntropyOptions) -> Result<MaxEntropy> {
    let dim = sensor.cols();
    if dim > options.grid_limit && !options.approximate {
        return Err(Error::DimensionLimit { dimension: dim, limit: options.grid_limit });
    }

    let mut starts = vec![vec![1.0 / dim as f64; dim]];
    for i in 0..dim {
        let mut s = vec![0.1 / dim as f64; dim];
        s[i] += 0.9;
        starts.push(s);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    for _ in 0..options.random_starts {
        let w: Vec<f64> = (0..dim).map(|_| Exp1.sample(&mut rng)).collect();
        let total: f64 = w.iter().sum();
        starts.push(w.into_iter().map(|x| x / total).collect());
    }

    let mut best = (f64::NEG_INFINITY, Vec::new());
    for start in starts {
        let cand = ascend(sensor, start, options.max_iterations);
        if cand.0 > best.0 {
            best = cand;
        }
    }
    let gradient_value = best.0;

    let mut grid_value = None;
    if dim <= options.grid_limit {
        let mut grid_best = (f64::NEG_INFINITY, Vec::new());
        for_each_grid_point(dim, options.grid_resolution, &mut |p| {
            let h = conditional_entropy_given_output(sensor, p);
            if h > grid_best.0 {
                grid_best = (h, p.to_vec());
            }
        });
        grid_value = Some(grid_best.0);
        if grid_best.0 > best.0 {
            best = grid_best;
        }
    }

    Ok(MaxEntropy { value: best.0, input: best.1, gradient_value, grid_value })
}
