use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SearchBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let b = Self { lower, upper };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.len() != self.upper.len() || self.lower.is_empty() {
            return Err(Error::InvalidSettings(format!(
                "bounds have lengths {} and {}",
                self.lower.len(),
                self.upper.len()
            )));
        }
        for (l, u) in self.lower.iter().zip(&self.upper) {
            if !(l.is_finite() && u.is_finite() && l <= u) {
                return Err(Error::InvalidSettings(format!("invalid bound pair [{l}, {u}]")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&l, &u))| v.clamp(l, u))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PsoSettings {
    pub swarm_size: usize,
    pub max_iters: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub seed: u64,
    /// Velocity limit as a fraction of each bound width.
    pub max_velocity: f64,
    /// Stop after `stall_iters` iterations whose best-value improvement is
    /// below `stall_tol` (relative). Zero disables the check.
    pub stall_iters: usize,
    pub stall_tol: f64,
}

impl Default for PsoSettings {
    fn default() -> Self {
        Self {
            swarm_size: 40,
            max_iters: 150,
            inertia: 0.729,
            cognitive: 1.49445,
            social: 1.49445,
            seed: 1,
            max_velocity: 0.5,
            stall_iters: 0,
            stall_tol: 1e-9,
        }
    }
}

impl PsoSettings {
    pub fn validate(&self) -> Result<()> {
        if self.swarm_size < 2 {
            return Err(Error::InvalidSettings("swarm_size must be at least 2".into()));
        }
        for (name, v) in [
            ("inertia", self.inertia),
            ("cognitive", self.cognitive),
            ("social", self.social),
            ("stall_tol", self.stall_tol),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidSettings(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !(self.max_velocity > 0.0) {
            return Err(Error::InvalidSettings("max_velocity must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsoOutcome {
    pub theta: Vec<f64>,
    pub value: f64,
    /// Best value after initialization and after each iteration.
    pub history: Vec<f64>,
    pub evaluations: usize,
}

fn reflect(x: f64, v: f64, lo: f64, hi: f64) -> (f64, f64) {
    if lo == hi {
        return (lo, 0.0);
    }
    let (mut x, mut v) = (x, v);
    if x < lo {
        x = lo + (lo - x);
        v = -v;
    } else if x > hi {
        x = hi - (x - hi);
        v = -v;
    }
    (x.clamp(lo, hi), v)
}

fn evaluate<F>(f: &F, xs: &[Vec<f64>]) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    // Indexed collection keeps the order independent of scheduling.
    xs.par_iter()
        .map(|x| {
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        })
        .collect()
}

/// Global-best particle swarm over a box. Deterministic for a given seed,
/// whatever the size of the rayon pool it runs on. When `initial` is given it
/// is placed as particle 0.
pub fn pso_minimize<F>(
    f: F,
    bounds: &SearchBounds,
    settings: &PsoSettings,
    initial: Option<&[f64]>,
) -> Result<PsoOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    bounds.validate()?;
    settings.validate()?;
    let dim = bounds.dim();
    if let Some(x0) = initial {
        if x0.len() != dim {
            return Err(Error::InvalidSettings(format!(
                "initial point has {} entries, expected {dim}",
                x0.len()
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let width: Vec<f64> = bounds.lower.iter().zip(&bounds.upper).map(|(l, u)| u - l).collect();
    let vmax: Vec<f64> = width.iter().map(|w| w * settings.max_velocity).collect();

    let mut pos: Vec<Vec<f64>> = (0..settings.swarm_size)
        .map(|_| {
            (0..dim)
                .map(|d| bounds.lower[d] + width[d] * rng.gen::<f64>())
                .collect()
        })
        .collect();
    if let Some(x0) = initial {
        pos[0] = bounds.clamp(x0);
    }
    let mut vel: Vec<Vec<f64>> = (0..settings.swarm_size)
        .map(|_| {
            (0..dim)
                .map(|d| vmax[d] * (2.0 * rng.gen::<f64>() - 1.0) * 0.2)
                .collect()
        })
        .collect();

    let mut vals = evaluate(&f, &pos);
    let mut evaluations = vals.len();
    let mut pbest = pos.clone();
    let mut pbest_val = vals.clone();
    let best_index = |v: &[f64]| {
        v.iter()
            .enumerate()
            .fold(0, |bi, (i, x)| if *x < v[bi] { i } else { bi })
    };
    let mut g = best_index(&pbest_val);
    let mut gbest = pbest[g].clone();
    let mut gbest_val = pbest_val[g];
    let mut history = vec![gbest_val];
    let mut stall = 0;

    for _ in 0..settings.max_iters {
        for i in 0..settings.swarm_size {
            for d in 0..dim {
                let (r1, r2): (f64, f64) = (rng.gen(), rng.gen());
                let v = settings.inertia * vel[i][d]
                    + settings.cognitive * r1 * (pbest[i][d] - pos[i][d])
                    + settings.social * r2 * (gbest[d] - pos[i][d]);
                let v = v.clamp(-vmax[d], vmax[d]);
                let (x, v) = reflect(pos[i][d] + v, v, bounds.lower[d], bounds.upper[d]);
                pos[i][d] = x;
                vel[i][d] = v;
            }
        }
        vals = evaluate(&f, &pos);
        evaluations += vals.len();
        for i in 0..settings.swarm_size {
            if vals[i] < pbest_val[i] {
                pbest_val[i] = vals[i];
                pbest[i].clone_from(&pos[i]);
            }
        }
        g = best_index(&pbest_val);
        let prev = gbest_val;
        if pbest_val[g] < gbest_val {
            gbest_val = pbest_val[g];
            gbest.clone_from(&pbest[g]);
        }
        history.push(gbest_val);
        if settings.stall_iters > 0 {
            if prev - gbest_val <= settings.stall_tol * prev.abs() {
                stall += 1;
                if stall >= settings.stall_iters {
                    break;
                }
            } else {
                stall = 0;
            }
        }
    }
    Ok(PsoOutcome {
        theta: gbest,
        value: gbest_val,
        history,
        evaluations,
    })
}
