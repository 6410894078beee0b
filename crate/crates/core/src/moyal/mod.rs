//! The Moyal plane on a uniform grid over [-L/2, L/2)^{2N}.
//!
//! Conventions: 𝓕f(u) = ∫ f(t) e^{-it·u} dt, Ff(u) = 𝓕f(Ju) with
//! J = [[0, I], [-I, 0]], and
//! (f×g)(x) = (2π)^{-2N} ∬ f(x+s) g(x+t) e^{is·Jt} ds dt,
//! for which 2e^{-|x|²/2} is idempotent in 2N = 2.

pub(crate) mod fft;
mod io;
mod product;
pub(crate) mod transform;

use num_complex::Complex64;

use crate::error::{arg, DeformError, Result};

pub use io::{read_grid, read_grid_file, write_grid, write_grid_file, GridMetadata};
pub use product::{
    direct_star_quadrature, moyal_star, moyal_times, op_norm_estimate, twisted_convolution, MoyalParams,
};
pub use transform::{dilate, fourier, inverse_fourier, shift, symplectic_fourier};

/// Relative size allowed on the outermost grid shell of a Schwartz-class input.
pub const BOUNDARY_DECAY: f64 = 1e-8;

const MAX_SAMPLES: usize = 1 << 24;

#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    halfdim: usize,
    points: usize,
    extent: f64,
    samples: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(halfdim: usize, points: usize, extent: f64, samples: Vec<Complex64>) -> Result<Self> {
        if halfdim == 0 {
            return arg("half dimension must be positive");
        }
        if points < 8 || !points.is_multiple_of(2) {
            return arg(format!("points per axis must be even and at least 8, got {points}"));
        }
        if !(extent > 0.0 && extent.is_finite()) {
            return arg(format!("extent must be positive, got {extent}"));
        }
        let len = points.checked_pow(2 * halfdim as u32).filter(|&l| l <= MAX_SAMPLES);
        match len {
            Some(l) if l == samples.len() => {}
            Some(l) => return arg(format!("expected {l} samples, got {}", samples.len())),
            None => return arg(format!("grid {points}^{} is too large", 2 * halfdim)),
        }
        Ok(GridFunction { halfdim, points, extent, samples })
    }

    pub fn zeros(halfdim: usize, points: usize, extent: f64) -> Result<Self> {
        let len = match points.checked_pow(2 * halfdim as u32) {
            Some(l) if l <= MAX_SAMPLES => l,
            _ => return arg(format!("grid {points}^{} is too large", 2 * halfdim)),
        };
        Self::new(halfdim, points, extent, vec![Complex64::new(0.0, 0.0); len])
    }

    /// Samples `f` at the grid points.
    pub fn from_fn(halfdim: usize, points: usize, extent: f64, f: impl Fn(&[f64]) -> Complex64) -> Result<Self> {
        let mut g = Self::zeros(halfdim, points, extent)?;
        let dim = 2 * halfdim;
        let mut x = vec![0.0; dim];
        for flat in 0..g.samples.len() {
            let mut rem = flat;
            for a in (0..dim).rev() {
                x[a] = g.coord(rem % points);
                rem /= points;
            }
            g.samples[flat] = f(&x);
        }
        Ok(g)
    }

    pub fn halfdim(&self) -> usize {
        self.halfdim
    }

    pub fn dim(&self) -> usize {
        2 * self.halfdim
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn spacing(&self) -> f64 {
        self.extent / self.points as f64
    }

    /// Coordinate of grid index j on any axis.
    pub fn coord(&self, j: usize) -> f64 {
        -0.5 * self.extent + j as f64 * self.spacing()
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    fn cell(&self) -> f64 {
        self.spacing().powi(self.dim() as i32)
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.halfdim == other.halfdim
            && self.points == other.points
            && (self.extent - other.extent).abs() <= 1e-12 * self.extent
    }

    pub(crate) fn check_grid(&self, other: &Self) -> Result<()> {
        if !self.same_grid(other) {
            return arg(format!(
                "grid mismatch: (N={}, M={}, L={}) vs (N={}, M={}, L={})",
                self.halfdim, self.points, self.extent, other.halfdim, other.points, other.extent
            ));
        }
        Ok(())
    }

    pub(crate) fn with_samples(&self, samples: Vec<Complex64>) -> Self {
        GridFunction { samples, ..self.clone() }
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// max|f| over the outermost shell divided by max|f| (0 for f = 0).
    pub fn boundary_ratio(&self) -> f64 {
        let m = self.max_abs();
        if m == 0.0 {
            return 0.0;
        }
        let (dim, pts) = (self.dim(), self.points);
        let mut shell = 0.0f64;
        for (flat, c) in self.samples.iter().enumerate() {
            let mut rem = flat;
            let mut edge = false;
            for _ in 0..dim {
                let j = rem % pts;
                edge |= j == 0 || j == pts - 1;
                rem /= pts;
            }
            if edge {
                shell = shell.max(c.norm());
            }
        }
        shell / m
    }

    pub fn is_schwartz(&self) -> bool {
        self.boundary_ratio() <= BOUNDARY_DECAY
    }

    /// Ingestion check for functions declared Schwartz-class.
    pub fn assert_schwartz(&self) -> Result<()> {
        let r = self.boundary_ratio();
        if r > BOUNDARY_DECAY {
            return Err(DeformError::Ingestion(format!(
                "boundary decay violated: shell/max = {r:.3e} > {BOUNDARY_DECAY:.0e}"
            )));
        }
        Ok(())
    }

    /// ∫ f (Riemann sum on the periodic grid).
    pub fn integral(&self) -> Complex64 {
        self.samples.iter().sum::<Complex64>() * self.cell()
    }

    /// ∫ conj(f) g.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_grid(other)?;
        Ok(self.samples.iter().zip(&other.samples).map(|(a, b)| a.conj() * b).sum::<Complex64>() * self.cell())
    }

    pub fn l2_norm(&self) -> f64 {
        (self.samples.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.cell()).sqrt()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.with_samples(self.samples.iter().map(|c| c * s).collect())
    }

    pub fn conj(&self) -> Self {
        self.with_samples(self.samples.iter().map(|c| c.conj()).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        Ok(self.with_samples(self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect()))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        Ok(self.with_samples(self.samples.iter().zip(&other.samples).map(|(a, b)| a - b).collect()))
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        Ok(self.with_samples(self.samples.iter().zip(&other.samples).map(|(a, b)| a * b).collect()))
    }

    /// ‖f − g‖₂ / ‖g‖₂.
    pub fn relative_l2_diff(&self, reference: &Self) -> Result<f64> {
        let d = self.sub(reference)?.l2_norm();
        let r = reference.l2_norm();
        Ok(if r == 0.0 { d } else { d / r })
    }
}

pub fn l2_norm(f: &GridFunction) -> f64 {
    f.l2_norm()
}
