use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{arg, Result};

#[derive(Clone, Copy, Debug)]
pub struct PartitionParams {
    /// ψ(t) = exp(-sharpness/t) in the transition profile.
    pub sharpness: f64,
    /// Fourier truncation residual above which the partition carries a warning.
    pub residual_bound: f64,
}

impl Default for PartitionParams {
    fn default() -> Self {
        PartitionParams { sharpness: 1.75, residual_bound: 1e-5 }
    }
}

/// Smooth partition e_1² + e_2² = 1 on the circle subordinate to the arcs
/// (-π-1/2, 1/2) and (-1/2, π+1/2), together with its descent to the
/// `fold`-sheeted circle ℝ/2π·fold·ℤ.
#[derive(Clone, Debug, Serialize)]
pub struct CirclePartition {
    pub fold: usize,
    pub grid_size: usize,
    pub fourier_cutoff: usize,
    pub sharpness: f64,
    /// e^fold_i on the grid -π·fold + 2π·fold·j/grid_size.
    pub samples_e1: Vec<f64>,
    pub samples_e2: Vec<f64>,
    /// Base-circle coefficients, index m ↦ m + fourier_cutoff.
    pub fourier_e1: Vec<Complex64>,
    pub fourier_e2: Vec<Complex64>,
    /// Coefficients of e^fold_i in e^{imX/fold}, index m ↦ m + fold·fourier_cutoff.
    pub lift_e1: Vec<Complex64>,
    pub lift_e2: Vec<Complex64>,
    pub residual: f64,
    pub warning: Option<String>,
}

fn psi(t: f64, alpha: f64) -> f64 {
    if t > 0.0 {
        (-alpha / t).exp()
    } else {
        0.0
    }
}

/// Smooth step: 0 for t ≤ 0, 1 for t ≥ 1.
fn step(t: f64, alpha: f64) -> f64 {
    let a = psi(t, alpha);
    let b = psi(1.0 - t, alpha);
    a / (a + b)
}

fn ramp(t: f64, alpha: f64) -> f64 {
    (0.5 * PI * step(t, alpha)).sin()
}

/// Lift of e_1 to ℝ, supported in (-π-1/2, 1/2).
pub(crate) fn lifted_e1(x: f64, alpha: f64) -> f64 {
    ramp(x + PI + 0.5, alpha) * ramp(0.5 - x, alpha)
}

/// Lift of e_2 to ℝ, supported in (-1/2, π+1/2).
pub(crate) fn lifted_e2(x: f64, alpha: f64) -> f64 {
    ramp(x + 0.5, alpha) * ramp(PI + 0.5 - x, alpha)
}

/// Descent of a lifted function to ℝ/2π·fold·ℤ.
fn descend(x: f64, fold: usize, alpha: f64, which: usize) -> f64 {
    let period = 2.0 * PI * fold as f64;
    let f = if which == 1 { lifted_e1 } else { lifted_e2 };
    (-2..=2).map(|j| f(x + period * j as f64, alpha)).sum()
}

impl CirclePartition {
    /// Base circle e_i at x (period 2π).
    pub fn base_value(&self, which: usize, x: f64) -> f64 {
        descend(x, 1, self.sharpness, which)
    }

    /// e^fold_i at X (period 2π·fold).
    pub fn lift_value(&self, which: usize, x: f64) -> f64 {
        descend(x, self.fold, self.sharpness, which)
    }

    /// Lifted coefficients of e^fold_i as (m, c_m) pairs.
    pub fn lift_coefficients(&self, which: usize) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let c = if which == 1 { &self.lift_e1 } else { &self.lift_e2 };
        let off = (self.fold * self.fourier_cutoff) as i64;
        c.iter().enumerate().map(move |(i, &v)| (i as i64 - off, v))
    }
}

/// Coefficients c_m of a 2π·fold-periodic function with |m| ≤ cutoff, plus
/// the sup-norm truncation residual on the quadrature grid.
fn coefficients(fold: usize, cutoff: usize, alpha: f64, which: usize) -> (Vec<Complex64>, f64) {
    let per_base = (16 * cutoff).next_power_of_two().max(4096);
    let len = fold * per_base;
    let h = 2.0 * PI / per_base as f64;
    let samples: Vec<f64> = (0..len).map(|j| descend(-PI * fold as f64 + j as f64 * h, fold, alpha, which)).collect();
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);

    let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * cutoff + 1];
    for m in 0..=cutoff {
        // X_j = -π·fold + j h  ⇒  e^{-imX_j/fold} = (-1)^m e^{-2πi m j/len}
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let c = buf[m] * (sign / len as f64);
        coeffs[cutoff + m] = c;
        coeffs[cutoff - m] = c.conj();
    }
    coeffs[cutoff].im = 0.0;

    let mut series = vec![Complex64::new(0.0, 0.0); len];
    for m in 0..=cutoff {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        series[m] = coeffs[cutoff + m] * sign;
        if m > 0 {
            series[len - m] = coeffs[cutoff - m] * sign;
        }
    }
    planner.plan_fft_inverse(len).process(&mut series);
    let residual = samples.iter().zip(&series).map(|(s, t)| (s - t.re).abs().max(t.im.abs())).fold(0.0, f64::max);
    (coeffs, residual)
}

pub fn build_circle_partition(fold: usize, grid_size: usize, fourier_cutoff: usize) -> Result<CirclePartition> {
    build_circle_partition_with(fold, grid_size, fourier_cutoff, PartitionParams::default())
}

pub fn build_circle_partition_with(
    fold: usize,
    grid_size: usize,
    fourier_cutoff: usize,
    params: PartitionParams,
) -> Result<CirclePartition> {
    if fold == 0 {
        return arg("fold must be positive");
    }
    if grid_size == 0 || !grid_size.is_multiple_of(2 * fold) {
        return arg(format!("grid size {grid_size} not divisible by 2·fold = {}", 2 * fold));
    }
    if fourier_cutoff == 0 {
        return arg("fourier cutoff must be at least 1");
    }
    if !(params.sharpness > 0.0) {
        return arg("sharpness must be positive");
    }
    let alpha = params.sharpness;
    let h = 2.0 * PI * fold as f64 / grid_size as f64;
    let grid = |j: usize| -PI * fold as f64 + j as f64 * h;
    let samples_e1 = (0..grid_size).map(|j| descend(grid(j), fold, alpha, 1)).collect();
    let samples_e2 = (0..grid_size).map(|j| descend(grid(j), fold, alpha, 2)).collect();

    let (fourier_e1, r1) = coefficients(1, fourier_cutoff, alpha, 1);
    let (fourier_e2, r2) = coefficients(1, fourier_cutoff, alpha, 2);
    let (lift_e1, r3) = coefficients(fold, fold * fourier_cutoff, alpha, 1);
    let (lift_e2, r4) = coefficients(fold, fold * fourier_cutoff, alpha, 2);
    let residual = r1.max(r2).max(r3).max(r4);
    let warning = (residual > params.residual_bound).then(|| {
        format!(
            "degraded accuracy: Fourier truncation residual {residual:.3e} exceeds {:.1e} at cutoff {fourier_cutoff}",
            params.residual_bound
        )
    });
    Ok(CirclePartition {
        fold,
        grid_size,
        fourier_cutoff,
        sharpness: alpha,
        samples_e1,
        samples_e2,
        fourier_e1,
        fourier_e2,
        lift_e1,
        lift_e2,
        residual,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_is_complementary() {
        for i in 0..=100 {
            let t = -0.2 + 1.4 * i as f64 / 100.0;
            assert!((step(t, 1.75) + step(1.0 - t, 1.75) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn lifts_vanish_outside_windows() {
        for i in 0..1000 {
            let x = -8.0 + 16.0 * i as f64 / 1000.0;
            if x <= -PI - 0.5 || x >= 0.5 {
                assert_eq!(lifted_e1(x, 1.75), 0.0);
            }
            if x <= -0.5 || x >= PI + 0.5 {
                assert_eq!(lifted_e2(x, 1.75), 0.0);
            }
        }
    }
}
