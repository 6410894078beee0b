use num_complex::Complex64;
use std::f64::consts::PI;

use super::{level_theta, TowerSpec};
use crate::error::{range, Result};
use crate::moyal::fft::{apply_axis_matrix, fft_all};
use crate::moyal::transform::interpolate_tensor;
use crate::moyal::GridFunction;
use crate::torus::{TorusElement, PRUNE_RELATIVE};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PeriodizeMethod {
    /// Sum the lattice translates over one cell, then take Fourier coefficients.
    Direct,
    /// Sample 𝓕f at the dual lattice.
    Fourier,
}

#[derive(Clone, Debug)]
pub struct Periodized {
    pub element: TorusElement,
    pub level: usize,
    pub m: u64,
    /// Estimated ℓ¹ size of everything not represented in `element`.
    pub tail_bound: f64,
}

/// Largest lattice frequency p with p/m below the grid's Nyquist frequency.
fn frequency_cutoff(f: &GridFunction, m: u64) -> i64 {
    let nyquist = PI / f.spacing();
    ((m as f64 * nyquist) * (1.0 - 1e-12)).floor() as i64
}

/// Turns a dense coefficient box of side 2K+1 into a level element plus tail.
fn finish(
    f: &GridFunction,
    tower: &TowerSpec,
    level: usize,
    k: i64,
    coeffs: Vec<Complex64>,
) -> Result<Periodized> {
    let m = tower.m(level)?;
    let dim = f.dim();
    let side = (2 * k + 1) as usize;
    let norm = (2.0 * PI * m as f64).powi(-(dim as i32));
    let top = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let thr = PRUNE_RELATIVE * top;

    let mut terms = Vec::new();
    let mut shell_max = 0.0f64;
    let mut inner_max = 0.0f64;
    let mut pruned = 0.0;
    let mut idx = vec![0i64; dim];
    for (flat, &c) in coeffs.iter().enumerate() {
        let mut rem = flat;
        for a in (0..dim).rev() {
            idx[a] = (rem % side) as i64 - k;
            rem /= side;
        }
        let radius = idx.iter().map(|x| x.abs()).max().unwrap_or(0);
        if radius == k {
            shell_max = shell_max.max(c.norm());
        } else if radius == k - 1 {
            inner_max = inner_max.max(c.norm());
        }
        if c.norm() < thr || c.norm() == 0.0 {
            pruned += c.norm();
        } else {
            terms.push((idx.clone(), c));
        }
    }
    let element = TorusElement::from_terms(level_theta(f.halfdim(), m), terms)?.with_cutoff(k.max(0) as u64)?;

    // unresolved spectrum beyond the box, extrapolated geometrically from the
    // last two shells; mass beyond the grid; roundoff
    let ratio = if inner_max > 0.0 { (shell_max / inner_max).min(0.999) } else { 0.999 };
    let outer = side as f64 + 2.0;
    let shell_count = outer.powi(dim as i32) - (side as f64).powi(dim as i32);
    let beyond = shell_max * ratio / (1.0 - ratio);
    let cell = f.spacing().powi(dim as i32);
    let mass: f64 = f.samples().iter().map(|c| c.norm()).sum::<f64>() * cell;
    let outside = f.max_abs() * f.boundary_ratio() * f.extent().powi(dim as i32);
    let tail_bound = beyond * shell_count + norm * outside + 1e3 * f64::EPSILON * norm * mass + pruned;
    Ok(Periodized { element, level, m, tail_bound })
}

fn fourier_path(f: &GridFunction, tower: &TowerSpec, level: usize) -> Result<Periodized> {
    let m = tower.m(level)?;
    let k = frequency_cutoff(f, m);
    if k < 0 {
        return range("grid too coarse to resolve any lattice frequency");
    }
    let dim = f.dim();
    let h = f.spacing();
    let norm = (2.0 * PI * m as f64).powi(-(dim as i32));
    let rows = (2 * k + 1) as usize;
    let mut mat = vec![Complex64::new(0.0, 0.0); rows * f.points()];
    for r in 0..rows {
        let xi = (r as i64 - k) as f64 / m as f64;
        for j in 0..f.points() {
            mat[r * f.points() + j] = Complex64::from_polar(h, -f.coord(j) * xi);
        }
    }
    let mut shape = vec![f.points(); dim];
    let mut data = f.samples().to_vec();
    for axis in 0..dim {
        data = apply_axis_matrix(&data, &mut shape, axis, &mat, rows);
    }
    data.iter_mut().for_each(|c| *c *= norm);
    finish(f, tower, level, k, data)
}

fn direct_path(f: &GridFunction, tower: &TowerSpec, level: usize) -> Result<Periodized> {
    let m = tower.m(level)?;
    let period = 2.0 * PI * m as f64;
    if f.extent() < 2.0 * period {
        return range(format!(
            "extent {} too small for direct periodization at m = {m} (needs ≥ {})",
            f.extent(),
            2.0 * period
        ));
    }
    let k = frequency_cutoff(f, m);
    if k < 0 {
        return range("grid too coarse to resolve any lattice frequency");
    }
    let dim = f.dim();
    let q = (4 * k + 4) as usize;
    let reach = ((0.5 * f.extent() + 0.5 * period) / period).ceil() as i64;
    let translates = (2 * reach + 1) as usize;
    let mut pts = Vec::with_capacity(q * translates);
    for g in -reach..=reach {
        for i in 0..q {
            pts.push(-0.5 * period + i as f64 * period / q as f64 + g as f64 * period);
        }
    }
    let values = interpolate_tensor(f, &vec![pts; dim]);

    // fold translates onto the cell
    let big = q * translates;
    let cell_len = q.pow(dim as u32);
    let mut cell = vec![Complex64::new(0.0, 0.0); cell_len];
    for (flat, &v) in values.iter().enumerate() {
        let mut rem = flat;
        let mut target = 0;
        let mut mul = 1;
        for _ in 0..dim {
            target += (rem % big % q) * mul;
            mul *= q;
            rem /= big;
        }
        cell[target] += v;
    }
    fft_all(&mut cell, q, dim, false);

    let side = (2 * k + 1) as usize;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); side.pow(dim as u32)];
    let scale = 1.0 / cell_len as f64;
    let mut p = vec![0i64; dim];
    for (flat, slot) in coeffs.iter_mut().enumerate() {
        let mut rem = flat;
        for a in (0..dim).rev() {
            p[a] = (rem % side) as i64 - k;
            rem /= side;
        }
        // y_i = -πm + i·2πm/q  ⇒  e^{-ip·y_i/m} = (-1)^p e^{-2πi p i/q}
        let mut src = 0;
        for &x in &p {
            src = src * q + x.rem_euclid(q as i64) as usize;
        }
        let sign = if p.iter().sum::<i64>().rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        *slot = cell[src] * (sign * scale);
    }
    finish(f, tower, level, k, coeffs)
}

/// pr_n f: the Fourier coefficients of Σ_{g ∈ 2πm_nℤ^{2N}} f(· + g), which
/// equal (2πm_n)^{-2N} 𝓕f(p/m_n).
pub fn periodize(f: &GridFunction, tower: &TowerSpec, level: usize, method: PeriodizeMethod) -> Result<Periodized> {
    f.assert_schwartz()?;
    periodize_unchecked(f, tower, level, method)
}

/// For computed products whose size may sit at the roundoff floor, where the
/// boundary test is meaningless. Boundary mass still enters the tail bound.
pub(crate) fn periodize_unchecked(
    f: &GridFunction,
    tower: &TowerSpec,
    level: usize,
    method: PeriodizeMethod,
) -> Result<Periodized> {
    match method {
        PeriodizeMethod::Fourier => fourier_path(f, tower, level),
        PeriodizeMethod::Direct => direct_path(f, tower, level),
    }
}
