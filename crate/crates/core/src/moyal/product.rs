use num_complex::Complex64;
use std::f64::consts::PI;

use super::fft::{fft_all, plan};
use super::transform::{dilate, fourier, inverse_fourier};
use super::GridFunction;
use crate::error::{arg, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoyalParams {
    theta: f64,
}

impl MoyalParams {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return arg(format!("θ must be positive, got {theta}"));
        }
        Ok(MoyalParams { theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

fn decode(mut flat: usize, side: usize, out: &mut [usize]) {
    for a in (0..out.len()).rev() {
        out[a] = flat % side;
        flat /= side;
    }
}

/// (f⋄g)(u) = ∫ f(u−t) g(t) e^{-iu·Jt} dt, with f extended by zero off the grid.
///
/// The phase splits as e^{-iu_q·t_p} e^{iu_p·t_q}; for each pair of q-rows the
/// remaining sum over p is a linear convolution done by zero-padded FFT.
pub fn twisted_convolution(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    f.check_grid(g)?;
    let (m, n) = (f.points(), f.halfdim());
    let d = m.pow(n as u32);
    let p = 2 * m;
    let pd = p.pow(n as u32);
    let cell = f.spacing().powi(f.dim() as i32);
    let x: Vec<f64> = (0..m).map(|j| f.coord(j)).collect();
    let table: Vec<Complex64> = (0..m * m).map(|i| Complex64::from_polar(1.0, -x[i / m] * x[i % m])).collect();

    let mut multi = vec![0usize; n];
    let pad: Vec<usize> = (0..d)
        .map(|j| {
            decode(j, m, &mut multi);
            multi.iter().fold(0, |acc, &i| acc * p + i)
        })
        .collect();
    let extract: Vec<usize> = (0..d)
        .map(|j| {
            decode(j, m, &mut multi);
            multi.iter().fold(0, |acc, &i| acc * p + i + m / 2)
        })
        .collect();
    let rows: Vec<Vec<usize>> = (0..d)
        .map(|j| {
            let mut v = vec![0; n];
            decode(j, m, &mut v);
            v
        })
        .collect();

    let zero = Complex64::new(0.0, 0.0);
    let f_rows: Vec<Option<Vec<Complex64>>> = (0..d)
        .map(|q| {
            let row = &f.samples()[q * d..(q + 1) * d];
            if row.iter().all(|&c| c == zero) {
                return None;
            }
            let mut buf = vec![zero; pd];
            for (j, &c) in row.iter().enumerate() {
                buf[pad[j]] = c;
            }
            fft_all(&mut buf, p, n, false);
            Some(buf)
        })
        .collect();
    let g_nonzero: Vec<bool> = (0..d).map(|q| g.samples()[q * d..(q + 1) * d].iter().any(|&c| c != zero)).collect();

    let scale = cell / pd as f64;
    let single = n == 1;
    let fwd = plan(p, false);
    let inv = plan(p, true);
    let mut out = vec![zero; d * d];
    let mut buf = vec![zero; pd];
    for uq in 0..d {
        let uqm = &rows[uq];
        for tq in 0..d {
            if !g_nonzero[tq] {
                continue;
            }
            let tqm = &rows[tq];
            let mut dq = 0;
            let mut inside = true;
            for a in 0..n {
                let v = uqm[a] as isize - tqm[a] as isize + (m / 2) as isize;
                if v < 0 || v >= m as isize {
                    inside = false;
                    break;
                }
                dq = dq * m + v as usize;
            }
            let Some(frow) = (if inside { f_rows[dq].as_ref() } else { None }) else {
                continue;
            };
            buf.iter_mut().for_each(|c| *c = zero);
            let grow = &g.samples()[tq * d..(tq + 1) * d];
            for (tp, &c) in grow.iter().enumerate() {
                let tpm = &rows[tp];
                let mut ph = table[uqm[0] * m + tpm[0]];
                for a in 1..n {
                    ph *= table[uqm[a] * m + tpm[a]];
                }
                buf[pad[tp]] = c * ph;
            }
            if single {
                fwd.process(&mut buf);
            } else {
                fft_all(&mut buf, p, n, false);
            }
            for (b, fr) in buf.iter_mut().zip(frow) {
                *b *= fr;
            }
            if single {
                inv.process(&mut buf);
            } else {
                fft_all(&mut buf, p, n, true);
            }
            let dst = &mut out[uq * d..(uq + 1) * d];
            for up in 0..d {
                let upm = &rows[up];
                let mut ph = table[upm[0] * m + tqm[0]].conj();
                for a in 1..n {
                    ph *= table[upm[a] * m + tqm[a]].conj();
                }
                dst[up] += buf[extract[up]] * ph * scale;
            }
        }
    }
    Ok(f.with_samples(out))
}

/// f×g = (2π)^{-2N} 𝓕^{-1}(𝓕f ⋄ 𝓕g).
pub fn moyal_times(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    f.check_grid(g)?;
    let t = twisted_convolution(&fourier(f), &fourier(g))?;
    let back = inverse_fourier(&t);
    let s = (2.0 * PI).powi(-(f.dim() as i32));
    Ok(f.with_samples(back.into_samples().into_iter().map(|c| c * s).collect()))
}

/// f⋆_θ g = (θ/2)^{-N/2} E_{2/θ}(E_{θ/2}f × E_{θ/2}g).
pub fn moyal_star(f: &GridFunction, g: &GridFunction, params: MoyalParams) -> Result<GridFunction> {
    f.check_grid(g)?;
    let theta = params.theta();
    if theta == 2.0 {
        return moyal_times(f, g);
    }
    let s = 0.5 * theta;
    let prod = moyal_times(&dilate(f, s)?, &dilate(g, s)?)?;
    let back = dilate(&prod, 1.0 / s)?;
    Ok(back.scale(Complex64::new(s.powf(-0.5 * f.halfdim() as f64), 0.0)))
}

const QUADRATURE_MAX_POINTS: usize = 32;

/// (f⋆_θ g)(x) = (πθ)^{-2N} ∬ f(x+s) g(x+t) e^{i(2/θ) s·Jt} ds dt by direct
/// double quadrature, O(M^{4N}). Intended as a reference for small grids;
/// the inner integral is restricted to the band resolved by the grid.
pub fn direct_star_quadrature(f: &GridFunction, g: &GridFunction, params: MoyalParams) -> Result<GridFunction> {
    f.check_grid(g)?;
    let (m, dim, n) = (f.points(), f.dim(), f.halfdim());
    if m > QUADRATURE_MAX_POINTS {
        return arg(format!("direct quadrature limited to M ≤ {QUADRATURE_MAX_POINTS}, got {m}"));
    }
    let kappa = 2.0 / params.theta();
    let h = f.spacing();
    let cell = h.powi(dim as i32);
    let side = 2 * m - 1;
    let x: Vec<f64> = (0..m).map(|j| f.coord(j)).collect();
    let t: Vec<f64> = (0..side).map(|j| (j as f64 - (m - 1) as f64) * h).collect();
    // a[i][τ] = e^{iκ x_i t_τ}, b[i][j] = e^{iκ x_i x_j}
    let a: Vec<Complex64> = (0..m * side).map(|i| Complex64::from_polar(1.0, kappa * x[i / side] * t[i % side])).collect();
    let b: Vec<Complex64> = (0..m * m).map(|i| Complex64::from_polar(1.0, kappa * x[i / m] * x[i % m])).collect();

    let len = f.samples().len();
    let grid_idx: Vec<Vec<usize>> = (0..len)
        .map(|j| {
            let mut v = vec![0; dim];
            decode(j, m, &mut v);
            v
        })
        .collect();
    let diff_len = side.pow(dim as u32);

    // Φ(t) = h^{2N} Σ_y f(y) e^{iκ y·Jt},  y·Jt = Σ_a y_a t_{a+N} − y_{a+N} t_a
    let mut phi = vec![Complex64::new(0.0, 0.0); diff_len];
    let mut tau = vec![0usize; dim];
    // frequencies κ|t_a| ≥ π/h are not resolved by the y-quadrature; there Φ is
    // left at zero instead of taking aliased values
    let band = PI / (h * kappa);
    for (ti, slot) in phi.iter_mut().enumerate() {
        decode(ti, side, &mut tau);
        if tau.iter().any(|&k| t[k].abs() >= band) {
            continue;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (yi, &fy) in f.samples().iter().enumerate() {
            if fy == Complex64::new(0.0, 0.0) {
                continue;
            }
            let y = &grid_idx[yi];
            let mut ph = Complex64::new(1.0, 0.0);
            for q in 0..n {
                ph *= a[y[q] * side + tau[q + n]] * a[y[q + n] * side + tau[q]].conj();
            }
            acc += fy * ph;
        }
        *slot = acc * cell;
    }

    // out(x) = (πθ)^{-2N} h^{2N} Σ_z e^{-iκ x·Jz} Φ(z − x) g(z)
    let pre = (PI * params.theta()).powi(-(dim as i32)) * cell;
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for (xi, slot) in out.iter_mut().enumerate() {
        let xm = &grid_idx[xi];
        let mut acc = Complex64::new(0.0, 0.0);
        for (zi, &gz) in g.samples().iter().enumerate() {
            if gz == Complex64::new(0.0, 0.0) {
                continue;
            }
            let zm = &grid_idx[zi];
            let mut ph = Complex64::new(1.0, 0.0);
            let mut di = 0;
            for q in 0..n {
                ph *= b[xm[q] * m + zm[q + n]].conj() * b[xm[q + n] * m + zm[q]];
            }
            for c in 0..dim {
                di = di * side + (zm[c] + m - 1 - xm[c]);
            }
            acc += ph * phi[di] * gz;
        }
        *slot = acc * pre;
    }
    Ok(f.with_samples(out))
}

/// Lower bound on the operator norm of g ↦ f⋆_θ g on L²: power iteration of
/// g ↦ f̄⋆(f⋆g) from the normalized Gaussian e^{-|x|²/2}, reporting the
/// largest ‖f⋆v‖₂/‖v‖₂ seen.
pub fn op_norm_estimate(f: &GridFunction, params: MoyalParams, probes: usize) -> Result<f64> {
    if probes == 0 {
        return arg("at least one probe is required");
    }
    let probe = GridFunction::from_fn(f.halfdim(), f.points(), f.extent(), |x| {
        Complex64::new((-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp(), 0.0)
    })?;
    let mut v = probe.scale(Complex64::new(1.0 / probe.l2_norm(), 0.0));
    let adjoint = f.conj();
    let mut best = 0.0f64;
    for _ in 0..probes {
        let w = moyal_star(f, &v, params)?;
        best = best.max(w.l2_norm());
        let z = moyal_star(&adjoint, &w, params)?;
        let zn = z.l2_norm();
        if zn == 0.0 {
            break;
        }
        v = z.scale(Complex64::new(1.0 / zn, 0.0));
    }
    Ok(best)
}
