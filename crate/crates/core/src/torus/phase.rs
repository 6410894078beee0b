//! Twisting phases e^{-πi r·Θs}, evaluated as products of per-axis tables.

use num_complex::Complex64;
use std::f64::consts::PI;

use super::DeformationMatrix;

/// Above this value of n·cutoff² the bilinear form is accumulated in
/// double-double arithmetic.
pub const EXTENDED_THRESHOLD: f64 = 1e4;

#[derive(Clone, Copy, Debug, Default)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    fn add_product(self, a: f64, b: f64) -> Self {
        let p = a * b;
        let pe = a.mul_add(b, -p);
        let s = self.hi + p;
        let bb = s - self.hi;
        let se = (self.hi - (s - bb)) + (p - bb);
        let lo = self.lo + pe + se;
        let hi = s + lo;
        DoubleDouble { hi, lo: lo - (hi - s) }
    }

    /// `self * k` reduced into [-2, 2); the period of e^{-πi x} is 2.
    fn times_int_mod2(self, k: i64) -> f64 {
        let kf = k as f64;
        let p = self.hi * kf;
        let pe = self.hi.mul_add(kf, -p);
        (p % 2.0) + (pe + self.lo * kf)
    }
}

/// Coefficients w with `w·x == fixed·Θx` for the given fixed index, i.e.
/// w_b = Σ_a fixed_a Θ_ab (`left = true`) or w_a = Σ_b Θ_ab fixed_b.
fn contract(theta: &DeformationMatrix, fixed: &[i64], left: bool) -> Vec<DoubleDouble> {
    let n = theta.n();
    let mut w = vec![DoubleDouble::default(); n];
    for (x, wx) in w.iter_mut().enumerate() {
        let mut acc = DoubleDouble::default();
        for (y, &fy) in fixed.iter().enumerate() {
            if fy == 0 || x == y {
                continue;
            }
            let t = if left { theta.entry(y, x) } else { theta.entry(x, y) };
            acc = acc.add_product(t, fy as f64);
        }
        *wx = acc;
    }
    w
}

/// Per-axis phase tables: `tables[x][j] = e^{-πi w_x (lo_x + j)}` so that the
/// phase of a pair is the product over axes.
pub struct PhaseTables {
    pub tables: Vec<Vec<Complex64>>,
}

impl PhaseTables {
    pub fn new(
        theta: &DeformationMatrix,
        fixed: &[i64],
        fixed_is_left: bool,
        lo: &[i64],
        hi: &[i64],
        extended: bool,
    ) -> Self {
        let w = contract(theta, fixed, fixed_is_left);
        let tables = w
            .iter()
            .enumerate()
            .map(|(x, wx)| {
                (lo[x]..=hi[x])
                    .map(|k| {
                        let t = if extended {
                            wx.times_int_mod2(k)
                        } else {
                            ((wx.hi + wx.lo) * k as f64) % 2.0
                        };
                        let (s, c) = (PI * t).sin_cos();
                        Complex64::new(c, -s)
                    })
                    .collect()
            })
            .collect();
        PhaseTables { tables }
    }
}

/// Direct evaluation of e^{-πi r·Θs} for a single pair.
pub fn pair_phase(theta: &DeformationMatrix, r: &[i64], s: &[i64]) -> Complex64 {
    let w = contract(theta, r, true);
    let mut t = 0.0;
    for (x, wx) in w.iter().enumerate() {
        t += wx.times_int_mod2(s[x]);
    }
    let (sn, c) = (PI * (t % 2.0)).sin_cos();
    Complex64::new(c, -sn)
}
