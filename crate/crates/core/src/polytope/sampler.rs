//! Hit-and-run over the polytope in an affine chart with exact rational snap-back.
//!
//! Coordinates that vanish on the whole polytope are fixed at zero first; the remaining
//! system is reduced to row echelon form so the basic coordinates are affine functions of
//! the free ones. The walk runs in floating point over the free coordinates. Each kept
//! sample is truncated to a dyadic grid, the basic coordinates are recomputed exactly, and
//! if rounding pushed the point outside it is pulled toward an interior centre until it is
//! feasible again.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{lp_optimize, EquivalencePolytope, LinearFunctional, Sense};
use crate::canon::CanonicalResponseVector;
use crate::error::Result;
use crate::rational::{from_f64_truncated, ratio, to_f64, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerConfig {
    /// Walk steps before the first kept sample, per chart dimension.
    pub burn_in_per_dim: usize,
    /// Walk steps between kept samples, per chart dimension.
    pub thin_per_dim: usize,
    /// Grid exponent of the snap-back step.
    pub snap_bits: u32,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            burn_in_per_dim: 20,
            thin_per_dim: 2,
            snap_bits: 32,
        }
    }
}

struct Chart {
    /// Coordinates that may be positive.
    active: Vec<usize>,
    /// Positions (within `active`) of basic and free coordinates.
    basic: Vec<usize>,
    free: Vec<usize>,
    /// `x_basic[i] = rhs[i] - Σ_f coef[i][f] x_free[f]`.
    rhs: Vec<Rational>,
    coef: Vec<Vec<Rational>>,
    centre: Vec<Rational>,
}

impl Chart {
    fn build(polytope: &EquivalencePolytope) -> Result<Self> {
        let m = polytope.dimension();
        let mut active = Vec::new();
        let mut vertices = Vec::new();
        for j in 0..m {
            let hi = lp_optimize(polytope, &LinearFunctional::coordinate(m, j), Sense::Maximize)?;
            if hi.value.is_positive() {
                active.push(j);
                vertices.push(hi.point);
            }
        }
        let centre = if vertices.is_empty() {
            // every coordinate vanishes: impossible for a probability vector, but keep the
            // LP's own answer rather than inventing one
            lp_optimize(polytope, &LinearFunctional::coordinate(m, 0), Sense::Maximize)?.point
        } else {
            let k = ratio(vertices.len() as i64, 1);
            (0..m)
                .map(|j| vertices.iter().fold(Rational::zero(), |acc, v| acc + &v[j]) / &k)
                .collect()
        };

        // Row-reduce the equality system restricted to active columns.
        let mut rows: Vec<Vec<Rational>> = polytope
            .constraint_matrix()
            .iter()
            .map(|r| active.iter().map(|&j| r[j].clone()).collect())
            .collect();
        let mut rhs: Vec<Rational> = polytope.rhs().to_vec();
        let mut basic = Vec::new();
        let mut r = 0;
        for c in 0..active.len() {
            let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else { continue };
            rows.swap(r, p);
            rhs.swap(r, p);
            let pv = rows[r][c].clone();
            for v in rows[r].iter_mut() {
                *v /= &pv;
            }
            rhs[r] /= &pv;
            for i in 0..rows.len() {
                if i != r && !rows[i][c].is_zero() {
                    let f = rows[i][c].clone();
                    let pivot_row = rows[r].clone();
                    for (v, pr) in rows[i].iter_mut().zip(&pivot_row) {
                        *v -= &f * pr;
                    }
                    let rr = rhs[r].clone();
                    rhs[i] -= f * rr;
                }
            }
            basic.push(c);
            r += 1;
            if r == rows.len() {
                break;
            }
        }
        rows.truncate(basic.len());
        rhs.truncate(basic.len());
        let free: Vec<usize> = (0..active.len()).filter(|c| !basic.contains(c)).collect();
        let coef = rows
            .iter()
            .map(|row| free.iter().map(|&f| row[f].clone()).collect())
            .collect();
        Ok(Self {
            active,
            basic,
            free,
            rhs,
            coef,
            centre,
        })
    }

    fn dimension(&self) -> usize {
        self.free.len()
    }

    fn centre_theta(&self) -> Vec<f64> {
        self.free.iter().map(|&f| to_f64(&self.centre[self.active[f]])).collect()
    }

    fn assemble(&self, theta: &[Rational], m: usize) -> Vec<Rational> {
        let mut x = vec![Rational::zero(); m];
        for (k, &f) in self.free.iter().enumerate() {
            x[self.active[f]] = theta[k].clone();
        }
        for (i, &b) in self.basic.iter().enumerate() {
            let v = self.coef[i]
                .iter()
                .zip(theta)
                .filter(|(c, _)| !c.is_zero())
                .fold(self.rhs[i].clone(), |acc, (c, t)| acc - c * t);
            x[self.active[b]] = v;
        }
        x
    }

    /// Feasible interval of `t` for `theta + t * dir`.
    fn chord(&self, theta: &[f64], dir: &[f64], coef: &[Vec<f64>], rhs: &[f64]) -> (f64, f64) {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        let mut clip = |value: f64, slope: f64| {
            // value + t * slope >= 0
            if slope > 1e-15 {
                lo = lo.max(-value / slope);
            } else if slope < -1e-15 {
                hi = hi.min(-value / slope);
            }
        };
        for k in 0..theta.len() {
            clip(theta[k], dir[k]);
        }
        for i in 0..rhs.len() {
            let value = rhs[i] - coef[i].iter().zip(theta).map(|(c, t)| c * t).sum::<f64>();
            let slope = -coef[i].iter().zip(dir).map(|(c, d)| c * d).sum::<f64>();
            clip(value, slope);
        }
        (lo.min(0.0), hi.max(0.0))
    }
}

/// Chart and interior centre of a polytope, reusable across independent walks.
pub struct PolytopeSampler {
    chart: Chart,
    dimension: usize,
    coef: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

impl PolytopeSampler {
    pub fn new(polytope: &EquivalencePolytope) -> Result<Self> {
        let chart = Chart::build(polytope)?;
        let coef = chart.coef.iter().map(|r| r.iter().map(to_f64).collect()).collect();
        let rhs = chart.rhs.iter().map(to_f64).collect();
        Ok(Self {
            chart,
            dimension: polytope.dimension(),
            coef,
            rhs,
        })
    }

    /// Affine dimension of the feasible region.
    pub fn chart_dimension(&self) -> usize {
        self.chart.dimension()
    }

    /// Relative-interior point: the average of one maximizing vertex per coordinate.
    pub fn centre(&self) -> &[Rational] {
        &self.chart.centre
    }

    /// `n` exact feasible points from one walk, deterministic in `seed`.
    pub fn sample(&self, n: usize, seed: u64, config: SamplerConfig) -> Vec<Vec<Rational>> {
        let d = self.chart.dimension();
        if n == 0 {
            return Vec::new();
        }
        if d == 0 {
            return vec![self.chart.centre.clone(); n];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut theta = self.chart.centre_theta();
        for _ in 0..config.burn_in_per_dim * d {
            self.step(&mut theta, &mut rng);
        }
        let mut out = Vec::with_capacity(n);
        for s in 0..n {
            if s > 0 {
                for _ in 0..config.thin_per_dim.max(1) * d {
                    self.step(&mut theta, &mut rng);
                }
            }
            out.push(snap(&self.chart, &theta, self.dimension, config.snap_bits));
        }
        out
    }

    fn step(&self, theta: &mut [f64], rng: &mut ChaCha8Rng) {
        let mut dir: Vec<f64> = (0..theta.len()).map(|_| StandardNormal.sample(rng)).collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return;
        }
        dir.iter_mut().for_each(|x| *x /= norm);
        let (lo, hi) = self.chart.chord(theta, &dir, &self.coef, &self.rhs);
        if hi > lo {
            let t = rng.random_range(lo..=hi);
            for (x, u) in theta.iter_mut().zip(&dir) {
                *x += t * u;
            }
        }
    }
}

/// `n` exact feasible points, deterministic in `seed`.
pub fn sample_points(polytope: &EquivalencePolytope, n: usize, seed: u64, config: SamplerConfig) -> Result<Vec<Vec<Rational>>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    Ok(PolytopeSampler::new(polytope)?.sample(n, seed, config))
}

fn snap(chart: &Chart, theta: &[f64], m: usize, bits: u32) -> Vec<Rational> {
    let exact: Vec<Rational> = theta.iter().map(|&t| from_f64_truncated(t, bits)).collect();
    let x = chart.assemble(&exact, m);
    if x.iter().all(|v| !v.is_negative()) {
        return x;
    }
    let one = Rational::one();
    let mut alpha = Rational::new(1.into(), BigInt::from(1u64) << bits);
    while alpha < one {
        let mixed: Vec<Rational> = x
            .iter()
            .zip(&chart.centre)
            .map(|(a, c)| (&one - &alpha) * a + &alpha * c)
            .collect();
        if mixed.iter().all(|v| !v.is_negative()) {
            return mixed;
        }
        alpha *= ratio(2, 1);
    }
    chart.centre.clone()
}

pub fn sample_polytope(polytope: &EquivalencePolytope, n: usize, seed: u64) -> Result<Vec<CanonicalResponseVector>> {
    Ok(sample_points(polytope, n, seed, SamplerConfig::default())?
        .iter()
        .map(|p| polytope.response_vector(p))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, LISTED_TO_CANONICAL};
    use crate::polytope::build_polytope;

    fn zy(p00: Rational, p01: Rational) -> EquivalencePolytope {
        let obs = fixtures::zy_observation(&ratio(1, 3), &p00, &p01).unwrap();
        build_polytope(&fixtures::zy_graph(), &obs, "Z").unwrap()
    }

    #[test]
    fn empty_request() {
        let p = zy(ratio(1, 2), ratio(1, 2));
        assert!(sample_polytope(&p, 0, 1).unwrap().is_empty());
    }

    #[test]
    fn point_polytope_repeats() {
        let p = zy(ratio(1, 1), ratio(1, 1));
        let s = sample_points(&p, 5, 9, SamplerConfig::default()).unwrap();
        assert_eq!(s.len(), 5);
        assert!(s.iter().all(|x| *x == s[0] && p.contains(x)));
    }

    #[test]
    fn line_samples_are_feasible_and_centred() {
        let p = zy(ratio(3, 5), ratio(3, 10));
        let pts = sample_points(&p, 1000, 42, SamplerConfig::default()).unwrap();
        assert!(pts.iter().all(|x| p.contains(x)));
        let l = LISTED_TO_CANONICAL[0] as usize;
        let mean = pts.iter().map(|x| to_f64(&x[l])).sum::<f64>() / pts.len() as f64;
        assert!((mean - 0.15).abs() < 0.05 * 0.3, "mean {mean}");
        let again = sample_points(&p, 1000, 42, SamplerConfig::default()).unwrap();
        assert_eq!(pts, again);
    }

    #[test]
    fn higher_dimensional_chain_samples_are_feasible() {
        let m = crate::random::random_generic_scm(&mut ChaCha8Rng::seed_from_u64(5), &fixtures::chain_graph()).unwrap();
        let obs = m.joint_distribution(&[0, 1, 2]);
        let p = build_polytope(m.dag(), &obs, "Z").unwrap();
        let pts = sample_points(&p, 50, 3, SamplerConfig::default()).unwrap();
        assert!(pts.iter().all(|x| p.contains(x)));
        for x in &pts {
            assert_eq!(p.induced_joint(x).unwrap(), *p.observed());
        }
    }
}
