//! Smooth noncommutative torus C^∞(T^n_Θ) in the Fourier picture: finitely
//! supported coefficient arrays on ℤ^n with the twisted product
//! (a⋆b)(p) = Σ_{r+s=p} a(r) b(s) e^{-πi r·Θs}.

mod json;
mod norm;
pub mod phase;

use num_complex::Complex64;
use std::cmp::Ordering;

use crate::error::{arg, DeformError, Result};
use phase::{PhaseTables, EXTENDED_THRESHOLD};

pub use json::{element_from_json, element_to_json};
pub use norm::approx_operator_norm;

/// Default relative prune threshold applied after arithmetic.
pub const PRUNE_RELATIVE: f64 = 1e-15;

/// Largest dense accumulator the product kernel will allocate.
const DENSE_LIMIT: usize = 1 << 26;

/// Real skew-symmetric n×n matrix, stored as its strict upper triangle.
#[derive(Clone, Debug, PartialEq)]
pub struct DeformationMatrix {
    n: usize,
    upper: Vec<f64>,
}

fn upper_index(n: usize, r: usize, s: usize) -> usize {
    r * n - r * (r + 1) / 2 + (s - r - 1)
}

impl DeformationMatrix {
    pub fn zero(n: usize) -> Self {
        DeformationMatrix { n, upper: vec![0.0; n * n.saturating_sub(1) / 2] }
    }

    /// Row-major strict upper triangle.
    pub fn from_upper(n: usize, upper: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return arg("deformation matrix dimension must be positive");
        }
        if upper.len() != n * (n - 1) / 2 {
            return arg(format!(
                "expected {} upper-triangle entries for n={n}, got {}",
                n * (n - 1) / 2,
                upper.len()
            ));
        }
        if upper.iter().any(|x| !x.is_finite()) {
            return arg("deformation matrix entries must be finite");
        }
        Ok(DeformationMatrix { n, upper })
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return arg("deformation matrix must be square");
        }
        for r in 0..n {
            for s in 0..n {
                if rows[r][s] != -rows[s][r] {
                    return arg(format!("matrix is not skew-symmetric at ({r},{s})"));
                }
            }
        }
        let mut upper = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            upper.extend_from_slice(&row[r + 1..]);
        }
        Self::from_upper(n, upper)
    }

    /// θ·J on ℝ^{2N} with J = [[0, I], [-I, 0]].
    pub fn symplectic(halfdim: usize, theta: f64) -> Self {
        let n = 2 * halfdim;
        let mut m = Self::zero(n);
        for a in 0..halfdim {
            m.upper[upper_index(n, a, a + halfdim)] = theta;
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn entry(&self, r: usize, s: usize) -> f64 {
        match r.cmp(&s) {
            Ordering::Equal => 0.0,
            Ordering::Less => self.upper[upper_index(self.n, r, s)],
            Ordering::Greater => -self.upper[upper_index(self.n, s, r)],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.upper.iter().all(|&x| x == 0.0)
    }

    /// Entries θ_rs / (k_r k_s).
    pub fn cover(&self, k: &[u64]) -> Self {
        let mut m = self.clone();
        for r in 0..self.n {
            for s in r + 1..self.n {
                m.upper[upper_index(self.n, r, s)] /= (k[r] * k[s]) as f64;
            }
        }
        m
    }
}

/// Finitely supported element of C^∞(T^n_Θ). Indices are kept sorted
/// lexicographically and every index satisfies max_j |k_j| ≤ cutoff.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusElement {
    theta: DeformationMatrix,
    cutoff: u64,
    idx: Vec<i64>,
    val: Vec<Complex64>,
}

fn max_abs(k: &[i64]) -> u64 {
    k.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0)
}

impl TorusElement {
    pub fn zero(theta: DeformationMatrix) -> Self {
        TorusElement { theta, cutoff: 0, idx: Vec::new(), val: Vec::new() }
    }

    pub fn one(theta: DeformationMatrix) -> Self {
        let n = theta.n();
        TorusElement { theta, cutoff: 0, idx: vec![0; n], val: vec![Complex64::new(1.0, 0.0)] }
    }

    /// The basis unitary U_k.
    pub fn unitary(k: &[i64], theta: DeformationMatrix) -> Result<Self> {
        if k.len() != theta.n() {
            return arg(format!("index of length {} for n={}", k.len(), theta.n()));
        }
        Ok(TorusElement {
            cutoff: max_abs(k),
            theta,
            idx: k.to_vec(),
            val: vec![Complex64::new(1.0, 0.0)],
        })
    }

    /// Sums duplicate indices and drops exact zeros. The cutoff is the
    /// largest max-norm in the support.
    pub fn from_terms<I>(theta: DeformationMatrix, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<i64>, Complex64)>,
    {
        let n = theta.n();
        let mut terms: Vec<(Vec<i64>, Complex64)> = terms.into_iter().collect();
        if let Some((k, _)) = terms.iter().find(|(k, _)| k.len() != n) {
            return arg(format!("index {k:?} has wrong length for n={n}"));
        }
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        let mut idx = Vec::with_capacity(terms.len() * n);
        let mut val: Vec<Complex64> = Vec::with_capacity(terms.len());
        let mut last: Option<Vec<i64>> = None;
        for (k, c) in terms {
            if last.as_ref() == Some(&k) {
                *val.last_mut().unwrap() += c;
            } else {
                idx.extend_from_slice(&k);
                val.push(c);
                last = Some(k);
            }
        }
        let mut e = TorusElement { theta, cutoff: 0, idx, val };
        e.retain(|_, c| c != Complex64::new(0.0, 0.0));
        e.cutoff = e.support_radius();
        Ok(e)
    }

    /// Declares a larger cutoff bound.
    pub fn with_cutoff(mut self, cutoff: u64) -> Result<Self> {
        if cutoff < self.support_radius() {
            return arg(format!("cutoff {cutoff} below support radius {}", self.support_radius()));
        }
        self.cutoff = cutoff;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.theta.n()
    }

    pub fn theta(&self) -> &DeformationMatrix {
        &self.theta
    }

    pub fn cutoff(&self) -> u64 {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.val.len()
    }

    pub fn is_empty(&self) -> bool {
        self.val.is_empty()
    }

    pub fn support_radius(&self) -> u64 {
        self.iter().map(|(k, _)| max_abs(k)).max().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[i64], Complex64)> + '_ {
        let n = self.n();
        self.val.iter().enumerate().map(move |(i, &c)| (&self.idx[i * n..(i + 1) * n], c))
    }

    pub fn get(&self, k: &[i64]) -> Complex64 {
        let n = self.n();
        let (mut lo, mut hi) = (0, self.val.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.idx[mid * n..(mid + 1) * n].cmp(k) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return self.val[mid],
            }
        }
        Complex64::new(0.0, 0.0)
    }

    fn retain(&mut self, mut keep: impl FnMut(&[i64], Complex64) -> bool) {
        let n = self.n();
        let mut w = 0;
        for i in 0..self.val.len() {
            if keep(&self.idx[i * n..(i + 1) * n], self.val[i]) {
                self.idx.copy_within(i * n..(i + 1) * n, w * n);
                self.val[w] = self.val[i];
                w += 1;
            }
        }
        self.idx.truncate(w * n);
        self.val.truncate(w);
    }

    /// Drops coefficients with |c| < rel·max|c| (and exact zeros).
    pub fn pruned(mut self, rel: f64) -> Self {
        let m = self.val.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let thr = rel * m;
        self.retain(|_, c| c.norm() >= thr && c.norm() > 0.0);
        self
    }

    /// Coefficientwise map keeping indices in place.
    pub fn map_coeffs(&self, mut f: impl FnMut(&[i64], Complex64) -> Complex64) -> Self {
        let mut out = self.clone();
        let n = self.n();
        for i in 0..out.val.len() {
            out.val[i] = f(&self.idx[i * n..(i + 1) * n], self.val[i]);
        }
        out.retain(|_, c| c != Complex64::new(0.0, 0.0));
        out
    }

    /// Re-indexes every coefficient and retags the deformation matrix.
    /// The map must be injective.
    pub fn reindex(
        &self,
        theta: DeformationMatrix,
        cutoff: u64,
        mut f: impl FnMut(&[i64]) -> Vec<i64>,
    ) -> Result<Self> {
        let e = Self::from_terms(theta, self.iter().map(|(k, c)| (f(k), c)))?;
        e.with_cutoff(cutoff)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map_coeffs(|_, c| c * s)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.theta != other.theta {
            return Err(DeformError::Argument("deformation matrices differ".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let cutoff = self.cutoff.max(other.cutoff);
        let terms = self.iter().chain(other.iter()).map(|(k, c)| (k.to_vec(), c));
        Self::from_terms(self.theta.clone(), terms)?.with_cutoff(cutoff)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Largest coefficientwise difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max))
    }

    /// Splits off the coefficients with max|k_j| > cutoff; returns the
    /// truncated element and the ℓ¹ mass of the discarded tail.
    pub fn truncate(&self, cutoff: u64) -> (Self, f64) {
        let mut tail = 0.0;
        let mut out = self.clone();
        out.retain(|k, c| {
            let keep = max_abs(k) <= cutoff;
            if !keep {
                tail += c.norm();
            }
            keep
        });
        out.cutoff = cutoff.min(self.cutoff);
        (out, tail)
    }

    pub fn star(&self, other: &Self) -> Result<Self> {
        self.star_with(other, PRUNE_RELATIVE)
    }

    /// Twisted convolution with a configurable relative prune threshold.
    pub fn star_with(&self, other: &Self, prune: f64) -> Result<Self> {
        self.check_same(other)?;
        let cutoff = self.cutoff + other.cutoff;
        let out = if self.is_empty() || other.is_empty() {
            TorusElement::zero(self.theta.clone())
        } else {
            star_kernel(self, other)?
        };
        let mut out = out.pruned(prune);
        out.cutoff = cutoff;
        Ok(out)
    }

    /// a*(p) = conj a(-p).
    pub fn involution(&self) -> Self {
        let terms = self.iter().map(|(k, c)| (k.iter().map(|x| -x).collect(), c.conj()));
        Self::from_terms(self.theta.clone(), terms)
            .and_then(|e| e.with_cutoff(self.cutoff))
            .expect("reflection preserves dimension and cutoff")
    }

    /// τ(a) = a(0).
    pub fn trace(&self) -> Complex64 {
        self.get(&vec![0; self.n()])
    }

    /// τ(a*⋆b).
    pub fn l2_inner(&self, other: &Self) -> Result<Complex64> {
        self.check_same(other)?;
        // only r = -s terms reach the origin; e^{-πi(-s)·Θs} = 1
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, c) in self.iter() {
            acc += c.conj() * other.get(k);
        }
        Ok(acc)
    }

    /// Σ|c|, an upper bound for the C*-norm.
    pub fn one_norm(&self) -> f64 {
        self.val.iter().map(|c| c.norm()).sum()
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.iter().all(|(k, c)| {
            let m: Vec<i64> = k.iter().map(|x| -x).collect();
            (self.get(&m).conj() - c).norm() <= tol
        })
    }
}

pub fn make_unitary(k: &[i64], theta: DeformationMatrix) -> Result<TorusElement> {
    TorusElement::unitary(k, theta)
}

pub fn star_product(a: &TorusElement, b: &TorusElement) -> Result<TorusElement> {
    a.star(b)
}

pub fn involution(a: &TorusElement) -> TorusElement {
    a.involution()
}

pub fn trace(a: &TorusElement) -> Complex64 {
    a.trace()
}

pub fn l2_inner(a: &TorusElement, b: &TorusElement) -> Result<Complex64> {
    a.l2_inner(b)
}

pub fn one_norm_bound(a: &TorusElement) -> f64 {
    a.one_norm()
}

struct Bounds {
    lo: Vec<i64>,
    hi: Vec<i64>,
}

fn bounds(e: &TorusElement) -> Bounds {
    let n = e.n();
    let mut lo = vec![i64::MAX; n];
    let mut hi = vec![i64::MIN; n];
    for (k, _) in e.iter() {
        for j in 0..n {
            lo[j] = lo[j].min(k[j]);
            hi[j] = hi[j].max(k[j]);
        }
    }
    Bounds { lo, hi }
}

fn star_kernel(a: &TorusElement, b: &TorusElement) -> Result<TorusElement> {
    let n = a.n();
    let (ba, bb) = (bounds(a), bounds(b));
    let lo: Vec<i64> = (0..n).map(|j| ba.lo[j] + bb.lo[j]).collect();
    let hi: Vec<i64> = (0..n).map(|j| ba.hi[j] + bb.hi[j]).collect();
    let side: Vec<usize> = (0..n).map(|j| (hi[j] - lo[j] + 1) as usize).collect();
    let volume = side.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s));
    let commutative = a.theta.is_zero();
    let reach = a.cutoff.max(b.cutoff) as f64;
    let extended = n as f64 * reach * reach > EXTENDED_THRESHOLD;

    // The outer loop runs over the operand with fewer terms; phase tables are
    // built along the axes of the other operand's bounding box.
    let outer_is_left = a.len() <= b.len();
    let (outer, inner, inner_b) = if outer_is_left { (a, b, &bb) } else { (b, a, &ba) };

    let dense = matches!(volume, Some(v) if v <= DENSE_LIMIT && v <= 64 * a.len() * b.len() + 4096);
    if !dense {
        let mut terms = Vec::with_capacity(a.len() * b.len());
        for (r, x) in a.iter() {
            for (s, y) in b.iter() {
                let ph = if commutative { Complex64::new(1.0, 0.0) } else { phase::pair_phase(&a.theta, r, s) };
                terms.push((r.iter().zip(s).map(|(p, q)| p + q).collect(), x * y * ph));
            }
        }
        return TorusElement::from_terms(a.theta.clone(), terms);
    }

    let mut stride = vec![1usize; n];
    for j in (0..n.saturating_sub(1)).rev() {
        stride[j] = stride[j + 1] * side[j + 1];
    }
    let mut acc = vec![Complex64::new(0.0, 0.0); volume.unwrap()];

    // Precomputed inner offsets and per-axis table positions.
    let inner_off: Vec<i64> = inner
        .iter()
        .map(|(s, _)| (0..n).map(|j| s[j] * stride[j] as i64).sum())
        .collect();
    let inner_pos: Vec<usize> = inner
        .iter()
        .flat_map(|(s, _)| (0..n).map(move |j| (s[j] - inner_b.lo[j]) as usize).collect::<Vec<_>>())
        .collect();
    let inner_val: Vec<Complex64> = inner.iter().map(|(_, c)| c).collect();

    for (r, x) in outer.iter() {
        let base: i64 = (0..n).map(|j| (r[j] - lo[j]) * stride[j] as i64).sum();
        if commutative {
            for (i, &y) in inner_val.iter().enumerate() {
                acc[(base + inner_off[i]) as usize] += x * y;
            }
            continue;
        }
        // outer is the left factor: phase = e^{-πi r·Θs}, tables over s.
        // outer is the right factor: phase = e^{-πi s·Θr}, tables over s.
        let tables = PhaseTables::new(&a.theta, r, outer_is_left, &inner_b.lo, &inner_b.hi, extended);
        for (i, &y) in inner_val.iter().enumerate() {
            let pos = &inner_pos[i * n..(i + 1) * n];
            let mut ph = tables.tables[0][pos[0]];
            for j in 1..n {
                ph *= tables.tables[j][pos[j]];
            }
            acc[(base + inner_off[i]) as usize] += x * y * ph;
        }
    }

    let mut idx = Vec::new();
    let mut val = Vec::new();
    let mut k = lo.clone();
    for (flat, c) in acc.into_iter().enumerate() {
        if c != Complex64::new(0.0, 0.0) {
            let mut rem = flat;
            for j in 0..n {
                k[j] = lo[j] + (rem / stride[j]) as i64;
                rem %= stride[j];
            }
            idx.extend_from_slice(&k);
            val.push(c);
        }
    }
    Ok(TorusElement { theta: a.theta.clone(), cutoff: 0, idx, val })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn symplectic_layout() {
        let t = DeformationMatrix::symplectic(2, 0.5);
        assert_eq!(t.entry(0, 2), 0.5);
        assert_eq!(t.entry(3, 1), -0.5);
        assert_eq!(t.entry(0, 1), 0.0);
    }

    #[test]
    fn from_dense_rejects_non_skew() {
        assert!(DeformationMatrix::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]]).is_err());
        let m = DeformationMatrix::from_dense(&[vec![0.0, 0.3], vec![-0.3, 0.0]]).unwrap();
        assert_eq!(m.upper(), &[0.3]);
    }

    #[test]
    fn generator_product_phase() {
        let th = 0.37;
        let t = DeformationMatrix::from_upper(2, vec![th]).unwrap();
        let u1 = TorusElement::unitary(&[1, 0], t.clone()).unwrap();
        let u2 = TorusElement::unitary(&[0, 1], t).unwrap();
        let p = u1.star(&u2).unwrap();
        let want = Complex64::from_polar(1.0, -std::f64::consts::PI * th);
        assert_eq!(p.len(), 1);
        assert!((p.get(&[1, 1]) - want).norm() < 1e-15);
        assert_eq!(p.cutoff(), 2);
    }

    #[test]
    fn from_terms_merges_and_drops_zeros() {
        let t = DeformationMatrix::zero(1);
        let e = TorusElement::from_terms(
            t,
            vec![(vec![2], c(1.0, 0.0)), (vec![-1], c(0.5, 0.0)), (vec![2], c(-1.0, 0.0))],
        )
        .unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e.get(&[-1]), c(0.5, 0.0));
        assert_eq!(e.cutoff(), 1);
    }

    #[test]
    fn truncate_reports_tail() {
        let t = DeformationMatrix::zero(1);
        let e = TorusElement::from_terms(t, vec![(vec![0], c(1.0, 0.0)), (vec![3], c(0.0, 2.0))]).unwrap();
        let (tr, tail) = e.truncate(2);
        assert_eq!(tr.len(), 1);
        assert_eq!(tail, 2.0);
    }

    #[test]
    fn sparse_fallback_matches_dense() {
        let t = DeformationMatrix::from_upper(2, vec![0.61]).unwrap();
        let a = TorusElement::from_terms(t.clone(), vec![(vec![0, 0], c(1.0, 0.5)), (vec![3000, -2000], c(0.3, 0.0))]).unwrap();
        let b = TorusElement::from_terms(t, vec![(vec![1, 1], c(0.2, -0.1)), (vec![-4000, 2500], c(1.0, 0.0))]).unwrap();
        let p = a.star(&b).unwrap();
        for (r, x) in a.iter() {
            for (s, y) in b.iter() {
                let k: Vec<i64> = r.iter().zip(s).map(|(p, q)| p + q).collect();
                let want = x * y * phase::pair_phase(a.theta(), r, s);
                assert!((p.get(&k) - want).norm() < 1e-12);
            }
        }
    }
}
