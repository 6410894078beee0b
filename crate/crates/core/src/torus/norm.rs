use num_complex::Complex64;

use super::{phase::pair_phase, TorusElement};
use crate::error::{arg, Result};

const MAX_ITER: usize = 200;
const REL_TOL: f64 = 1e-10;
const MAX_BASIS: usize = 1 << 21;

/// Largest singular value of left ⋆-multiplication by `a`, compressed to the
/// basis {ξ_k : max|k_j| ≤ basis_cutoff} of ℓ²(ℤ^n). Power iteration on M^H M
/// from the normalized all-ones vector.
pub fn approx_operator_norm(a: &TorusElement, basis_cutoff: u64) -> Result<f64> {
    if basis_cutoff < a.support_radius() {
        return arg(format!(
            "basis cutoff {basis_cutoff} below the element's support radius {}",
            a.support_radius()
        ));
    }
    let n = a.n();
    let side = 2 * basis_cutoff as usize + 1;
    let dim = match side.checked_pow(n as u32) {
        Some(d) if d <= MAX_BASIS => d,
        _ => return arg(format!("basis of side {side} in dimension {n} is too large")),
    };
    let k = basis_cutoff as i64;
    let decode = |mut flat: usize, out: &mut [i64]| {
        for j in (0..n).rev() {
            out[j] = (flat % side) as i64 - k;
            flat /= side;
        }
    };
    let encode = |p: &[i64]| -> Option<usize> {
        let mut flat = 0usize;
        for &x in p {
            if x.abs() > k {
                return None;
            }
            flat = flat * side + (x + k) as usize;
        }
        Some(flat)
    };

    let mut rows = Vec::new();
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let mut s = vec![0i64; n];
    let mut p = vec![0i64; n];
    for col in 0..dim {
        decode(col, &mut s);
        for (r, c) in a.iter() {
            for j in 0..n {
                p[j] = r[j] + s[j];
            }
            if let Some(row) = encode(&p) {
                rows.push(row);
                cols.push(col);
                vals.push(c * pair_phase(a.theta(), r, &s));
            }
        }
    }
    if vals.is_empty() {
        return Ok(0.0);
    }

    let mut v = vec![Complex64::new(1.0 / (dim as f64).sqrt(), 0.0); dim];
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    let mut sigma = 0.0f64;
    for _ in 0..MAX_ITER {
        w.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
        for i in 0..vals.len() {
            w[rows[i]] += vals[i] * v[cols[i]];
        }
        let next = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
        for i in 0..vals.len() {
            v[cols[i]] += vals[i].conj() * w[rows[i]];
        }
        let z = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let done = (next - sigma).abs() <= REL_TOL * next;
        sigma = sigma.max(next);
        if z == 0.0 || done {
            break;
        }
        v.iter_mut().for_each(|x| *x /= z);
    }
    Ok(sigma)
}
