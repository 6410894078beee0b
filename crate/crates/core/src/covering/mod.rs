//! Finite coverings C(T^n_Θ) → C(T^n_Θ̃) given by u_j ↦ v_j^{k_j}, with the
//! deck group ℤ_{k_1}×…×ℤ_{k_n}, partitions of unity on the circle and the
//! covering-sum identities.

mod defect;
mod partition;

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{arg, Result};
use crate::torus::{DeformationMatrix, TorusElement};

pub use defect::{covering_sum_defect, covering_sum_matrix, resolution_defect, DefectReport};
pub use partition::{build_circle_partition, build_circle_partition_with, CirclePartition, PartitionParams};

#[derive(Clone, Debug, PartialEq)]
pub struct CoveringSpec {
    base_theta: DeformationMatrix,
    k: Vec<u64>,
    cover_theta: DeformationMatrix,
}

impl CoveringSpec {
    pub fn new(base_theta: DeformationMatrix, k: Vec<u64>) -> Result<Self> {
        if k.len() != base_theta.n() {
            return arg(format!("covering degrees {:?} for n={}", k, base_theta.n()));
        }
        if k.contains(&0) {
            return arg("covering degrees must be positive");
        }
        let cover_theta = base_theta.cover(&k);
        Ok(CoveringSpec { base_theta, k, cover_theta })
    }

    pub fn base_theta(&self) -> &DeformationMatrix {
        &self.base_theta
    }

    pub fn cover_theta(&self) -> &DeformationMatrix {
        &self.cover_theta
    }

    pub fn k(&self) -> &[u64] {
        &self.k
    }

    pub fn n(&self) -> usize {
        self.k.len()
    }

    pub fn group_order(&self) -> u64 {
        self.k.iter().product()
    }

    /// All deck elements in lexicographic order, identity first.
    pub fn deck_elements(&self) -> Vec<DeckElement> {
        let mut out = vec![DeckElement { p: vec![0; self.n()] }];
        for j in 0..self.n() {
            let mut next = Vec::with_capacity(out.len() * self.k[j] as usize);
            for g in &out {
                for r in 0..self.k[j] {
                    let mut p = g.p.clone();
                    p[j] = r;
                    next.push(DeckElement { p });
                }
            }
            out = next;
        }
        out.sort();
        out
    }

    fn check_cover(&self, a: &TorusElement) -> Result<()> {
        if a.theta() != &self.cover_theta {
            return arg("element is not in the cover algebra");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DeckElement {
    p: Vec<u64>,
}

impl DeckElement {
    /// Reduces each residue into 0..k_j.
    pub fn new(p: &[i64], spec: &CoveringSpec) -> Result<Self> {
        if p.len() != spec.n() {
            return arg(format!("deck element of length {} for n={}", p.len(), spec.n()));
        }
        Ok(DeckElement { p: p.iter().zip(&spec.k).map(|(&x, &k)| x.rem_euclid(k as i64) as u64).collect() })
    }

    pub fn identity(n: usize) -> Self {
        DeckElement { p: vec![0; n] }
    }

    pub fn residues(&self) -> &[u64] {
        &self.p
    }

    pub fn is_identity(&self) -> bool {
        self.p.iter().all(|&x| x == 0)
    }
}

/// e^{2πi N/D} with the exponent reduced to a symmetric representative so
/// that opposite exponents give exactly conjugate values.
fn root_of_unity(num: i128, den: i128) -> Complex64 {
    let mut r = num.rem_euclid(den);
    if 2 * r == den {
        return Complex64::new(-1.0, 0.0);
    }
    if 2 * r > den {
        r -= den;
    }
    if r == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let (s, c) = (2.0 * PI * r as f64 / den as f64).sin_cos();
    Complex64::new(c, s)
}

/// Phase e^{2πi Σ p_j l_j / k_j} of a deck element on the index l.
pub fn deck_phase(g: &DeckElement, l: &[i64], k: &[u64]) -> Complex64 {
    let den: i128 = k.iter().map(|&x| x as i128).product();
    let mut num: i128 = 0;
    for j in 0..k.len() {
        let kj = k[j] as i128;
        let r = (g.p[j] as i128 * l[j] as i128).rem_euclid(kj);
        num = (num + r * (den / kj)).rem_euclid(den);
    }
    root_of_unity(num, den)
}

/// u_j ↦ v_j^{k_j}.
pub fn embed(a: &TorusElement, spec: &CoveringSpec) -> Result<TorusElement> {
    if a.theta() != &spec.base_theta {
        return arg("element is not in the base algebra");
    }
    let kmax = spec.k.iter().copied().max().unwrap_or(1);
    a.reindex(spec.cover_theta.clone(), a.cutoff() * kmax, |l| {
        l.iter().zip(&spec.k).map(|(&x, &k)| x * k as i64).collect()
    })
}

/// Inverse of `embed` on G-invariant elements.
pub fn descend(a: &TorusElement, spec: &CoveringSpec) -> Result<TorusElement> {
    spec.check_cover(a)?;
    if a.iter().any(|(l, _)| l.iter().zip(&spec.k).any(|(&x, &k)| x % k as i64 != 0)) {
        return arg("element is not invariant under the deck group");
    }
    let kmin = spec.k.iter().copied().min().unwrap_or(1);
    a.reindex(spec.base_theta.clone(), a.cutoff() / kmin, |l| {
        l.iter().zip(&spec.k).map(|(&x, &k)| x / k as i64).collect()
    })
}

pub fn deck_action(g: &DeckElement, a: &TorusElement, spec: &CoveringSpec) -> Result<TorusElement> {
    spec.check_cover(a)?;
    if g.is_identity() {
        return Ok(a.clone());
    }
    Ok(a.map_coeffs(|l, c| c * deck_phase(g, l, &spec.k)))
}

/// (1/|G|) Σ_g g·a: keeps the coefficients whose indices are divisible by k.
pub fn invariant_projection(a: &TorusElement, spec: &CoveringSpec) -> Result<TorusElement> {
    spec.check_cover(a)?;
    Ok(a.map_coeffs(|l, c| {
        if l.iter().zip(&spec.k).all(|(&x, &k)| x % k as i64 == 0) {
            c
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

/// ⟨a, b⟩ = Σ_g g(a*⋆b).
pub fn hilbert_inner(a: &TorusElement, b: &TorusElement, spec: &CoveringSpec) -> Result<TorusElement> {
    spec.check_cover(a)?;
    let p = invariant_projection(&a.involution().star(b)?, spec)?;
    Ok(p.scale(Complex64::new(spec.group_order() as f64, 0.0)))
}

/// Coefficient at l multiplied by e^{2πi Σ_j l_j x_j / d_j}.
pub fn grading_action(x: &[f64], a: &TorusElement, denominators: &[u64]) -> Result<TorusElement> {
    if x.len() != a.n() || denominators.len() != a.n() {
        return arg("grading vector dimension mismatch");
    }
    if denominators.contains(&0) {
        return arg("grading denominators must be positive");
    }
    Ok(a.map_coeffs(|l, c| {
        let mut t = 0.0;
        for j in 0..l.len() {
            t += (l[j] as f64 * x[j] / denominators[j] as f64).fract();
        }
        c * Complex64::from_polar(1.0, 2.0 * PI * t.fract())
    }))
}
