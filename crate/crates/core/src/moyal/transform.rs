use num_complex::Complex64;
use std::f64::consts::PI;

use super::fft::{apply_axis_matrix, fft_all};
use super::{GridFunction, BOUNDARY_DECAY};
use crate::error::{arg, range, Result};

/// Multiplies by (-1)^{Σ indices}.
fn checkerboard(data: &mut [Complex64], side: usize, dim: usize) {
    for (flat, c) in data.iter_mut().enumerate() {
        let mut rem = flat;
        let mut parity = 0;
        for _ in 0..dim {
            parity += rem % side;
            rem /= side;
        }
        if parity % 2 == 1 {
            *c = -*c;
        }
    }
}

/// 𝓕f(u) = ∫ f(t) e^{-it·u} dt on the dual grid of extent 2πM/L.
pub fn fourier(f: &GridFunction) -> GridFunction {
    let (m, dim) = (f.points(), f.dim());
    let mut data = f.samples().to_vec();
    checkerboard(&mut data, m, dim);
    fft_all(&mut data, m, dim, false);
    checkerboard(&mut data, m, dim);
    let cell = f.spacing().powi(dim as i32);
    data.iter_mut().for_each(|c| *c *= cell);
    GridFunction { halfdim: f.halfdim(), points: m, extent: 2.0 * PI * m as f64 / f.extent(), samples: data }
}

/// Exact inverse of `fourier`: f(t) = (2π)^{-2N} ∫ F(u) e^{it·u} du.
pub fn inverse_fourier(big_f: &GridFunction) -> GridFunction {
    let (m, dim) = (big_f.points(), big_f.dim());
    let extent = 2.0 * PI * m as f64 / big_f.extent();
    let h = extent / m as f64;
    let mut data = big_f.samples().to_vec();
    checkerboard(&mut data, m, dim);
    fft_all(&mut data, m, dim, true);
    checkerboard(&mut data, m, dim);
    let s = 1.0 / ((m as f64).powi(dim as i32) * h.powi(dim as i32));
    data.iter_mut().for_each(|c| *c *= s);
    GridFunction { halfdim: big_f.halfdim(), points: m, extent, samples: data }
}

/// Ff(u) = ∫ f(t) e^{-it·Ju} dt = 𝓕f(Ju).
pub fn symplectic_fourier(f: &GridFunction) -> GridFunction {
    let g = fourier(f);
    let (m, dim, n) = (g.points(), g.dim(), g.halfdim());
    let mut out = vec![Complex64::new(0.0, 0.0); g.samples().len()];
    let mut idx = vec![0usize; dim];
    for (flat, slot) in out.iter_mut().enumerate() {
        let mut rem = flat;
        for a in (0..dim).rev() {
            idx[a] = rem % m;
            rem /= m;
        }
        // (Ju)_a = u_{a+N}, (Ju)_{a+N} = -u_a
        let mut src = 0;
        for a in 0..dim {
            let j = if a < n { idx[a + n] } else { (m - idx[a - n]) % m };
            src = src * m + j;
        }
        *slot = g.samples()[src];
    }
    g.with_samples(out)
}

/// Periodic trigonometric interpolation kernel on M points of period L.
fn periodic_sinc(z: f64, m: usize, l: f64) -> f64 {
    let t = PI * z / l;
    if t.abs() < 1e-15 {
        return 1.0;
    }
    (m as f64 * t).sin() / (m as f64 * t.tan())
}

/// Matrix evaluating the trig interpolant of grid data at the given points;
/// points outside [-L/2, L/2) get a zero row.
pub(crate) fn interpolation_matrix(f: &GridFunction, points: &[f64]) -> Vec<Complex64> {
    let (m, l) = (f.points(), f.extent());
    let mut w = vec![Complex64::new(0.0, 0.0); points.len() * m];
    for (r, &y) in points.iter().enumerate() {
        if y < -0.5 * l || y >= 0.5 * l {
            continue;
        }
        for j in 0..m {
            w[r * m + j] = Complex64::new(periodic_sinc(y - f.coord(j), m, l), 0.0);
        }
    }
    w
}

/// Evaluates the trig interpolant on the tensor grid points[0] × … × points[dim-1].
pub(crate) fn interpolate_tensor(f: &GridFunction, points: &[Vec<f64>]) -> Vec<Complex64> {
    let mut shape = vec![f.points(); f.dim()];
    let mut data = f.samples().to_vec();
    for (axis, pts) in points.iter().enumerate() {
        let w = interpolation_matrix(f, pts);
        data = apply_axis_matrix(&data, &mut shape, axis, &w, pts.len());
    }
    data
}

/// max |DFT coefficient| at frequencies with some |k| > limit, relative to the max.
fn spectral_excess(f: &GridFunction, limit: f64) -> f64 {
    let (m, dim) = (f.points(), f.dim());
    let mut data = f.samples().to_vec();
    fft_all(&mut data, m, dim, false);
    let (mut top, mut beyond) = (0.0f64, 0.0f64);
    for (flat, c) in data.iter().enumerate() {
        let mut rem = flat;
        let mut outside = false;
        for _ in 0..dim {
            let k = rem % m;
            let kc = if k < m / 2 { k as f64 } else { k as f64 - m as f64 };
            outside |= kc.abs() > limit;
            rem /= m;
        }
        top = top.max(c.norm());
        if outside {
            beyond = beyond.max(c.norm());
        }
    }
    if top == 0.0 {
        0.0
    } else {
        beyond / top
    }
}

fn check_still_schwartz(input: &GridFunction, output: &GridFunction, what: &str) -> Result<()> {
    if input.is_schwartz() && !output.is_schwartz() {
        return range(format!(
            "{what} moves the support onto the grid boundary (shell/max = {:.2e})",
            output.boundary_ratio()
        ));
    }
    Ok(())
}

/// E_a f(x) = a^{N/2} f(a^{1/2} x), resampled by trigonometric interpolation.
pub fn dilate(f: &GridFunction, a: f64) -> Result<GridFunction> {
    if !(a > 0.0 && a.is_finite()) {
        return arg(format!("dilation factor must be positive, got {a}"));
    }
    if a == 1.0 {
        return Ok(f.clone());
    }
    let s = a.sqrt();
    if a > 1.0 {
        let excess = spectral_excess(f, 0.5 * f.points() as f64 / s);
        if excess > BOUNDARY_DECAY {
            return range(format!(
                "dilation by {a} exceeds the grid bandwidth (spectral content {excess:.2e} beyond the new Nyquist limit)"
            ));
        }
    }
    let pts: Vec<f64> = (0..f.points()).map(|j| s * f.coord(j)).collect();
    let data = interpolate_tensor(f, &vec![pts; f.dim()]);
    let scale = a.powf(0.25 * f.dim() as f64);
    let out = f.with_samples(data.into_iter().map(|c| c * scale).collect());
    check_still_schwartz(f, &out, &format!("dilation by {a}"))?;
    Ok(out)
}

/// f_Δ(x) = f(x + Δ) by a spectral phase ramp.
pub fn shift(f: &GridFunction, delta: &[f64]) -> Result<GridFunction> {
    let (m, dim, l) = (f.points(), f.dim(), f.extent());
    if delta.len() != dim {
        return arg(format!("shift of length {} on a {dim}-dimensional grid", delta.len()));
    }
    if let Some(d) = delta.iter().find(|d| !(d.abs() < 0.5 * l)) {
        return range(format!("shift component {d} exceeds half the grid extent {}", 0.5 * l));
    }
    let tables: Vec<Vec<Complex64>> = delta
        .iter()
        .map(|&d| {
            (0..m)
                .map(|k| {
                    let kc = if k < m / 2 { k as f64 } else { k as f64 - m as f64 };
                    let w = 2.0 * PI * kc / l;
                    if k == m / 2 {
                        Complex64::new((w * d).cos(), 0.0)
                    } else {
                        Complex64::from_polar(1.0, w * d)
                    }
                })
                .collect()
        })
        .collect();
    let mut data = f.samples().to_vec();
    fft_all(&mut data, m, dim, false);
    for (flat, c) in data.iter_mut().enumerate() {
        let mut rem = flat;
        for a in (0..dim).rev() {
            *c *= tables[a][rem % m];
            rem /= m;
        }
    }
    fft_all(&mut data, m, dim, true);
    let norm = 1.0 / (m as f64).powi(dim as i32);
    let out = f.with_samples(data.into_iter().map(|c| c * norm).collect());
    check_still_schwartz(f, &out, "shift")?;
    Ok(out)
}
