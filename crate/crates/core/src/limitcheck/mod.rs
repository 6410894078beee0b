//! The tower of tori T^{2N}_{θ/m_n²} approximating the Moyal plane: periodization
//! of grid functions onto each level, the special-element defect
//! ‖a_n⋆a_n − b_n‖, separation decay and the trace identity.
//!
//! Everything here works in the θ = 2 gauge of `moyal`, where the deck
//! lattice is 2πℤ^{2N} and level n carries Θ_n = J/(π m_n²).

mod periodize;

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::covering::{embed, invariant_projection, CoveringSpec};
use crate::error::{arg, Result};
use crate::moyal::{dilate, moyal_times, shift, GridFunction};
use crate::torus::{DeformationMatrix, TorusElement};

use periodize::periodize_unchecked;
pub use periodize::{periodize, PeriodizeMethod, Periodized};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TowerSpec {
    p: Vec<u64>,
    m: Vec<u64>,
}

impl TowerSpec {
    pub fn new(p: Vec<u64>) -> Result<Self> {
        if let Some(&bad) = p.iter().find(|&&x| x < 2) {
            return arg(format!("tower factors must be ≥ 2, got {bad}"));
        }
        let mut m = vec![1u64];
        for &x in &p {
            match m.last().unwrap().checked_mul(x) {
                Some(v) if v <= 1 << 20 => m.push(v),
                _ => return arg("tower index overflows"),
            }
        }
        Ok(TowerSpec { p, m })
    }

    pub fn p(&self) -> &[u64] {
        &self.p
    }

    pub fn depth(&self) -> usize {
        self.p.len()
    }

    /// m_n = p_1⋯p_n.
    pub fn m(&self, level: usize) -> Result<u64> {
        match self.m.get(level) {
            Some(&v) => Ok(v),
            None => arg(format!("level {level} beyond tower depth {}", self.depth())),
        }
    }

    pub fn levels(&self) -> &[u64] {
        &self.m
    }
}

/// Θ_n = J/(π m²).
pub fn level_theta(halfdim: usize, m: u64) -> DeformationMatrix {
    DeformationMatrix::symplectic(halfdim, 1.0 / (PI * (m as f64) * (m as f64)))
}

/// (θ/2)^{-N/2} E_{θ/2} f: carries ⋆_θ to ×, so the tower machinery applies
/// to any θ after this one dilation.
pub fn to_standard_gauge(f: &GridFunction, theta: f64) -> Result<GridFunction> {
    let s = 0.5 * theta;
    Ok(dilate(f, s)?.scale(Complex64::new(s.powf(-0.5 * f.halfdim() as f64), 0.0)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpecialReport {
    pub level: usize,
    pub m: u64,
    pub defect: f64,
    pub tail_bound: f64,
    pub l2_identity_lhs: f64,
    pub l2_identity_rhs_a: f64,
    pub l2_identity_rhs_b: f64,
}

fn check_real(f: &GridFunction, nonneg: bool) -> Result<()> {
    let tol = 1e-12 * f.max_abs();
    for c in f.samples() {
        if c.im.abs() > tol {
            return arg("input must be real");
        }
        if nonneg && c.re < -tol {
            return arg("input must be pointwise non-negative");
        }
    }
    Ok(())
}

fn level_report(
    f: &GridFunction,
    square: &GridFunction,
    tower: &TowerSpec,
    level: usize,
) -> Result<SpecialReport> {
    let a = periodize(f, tower, level, PeriodizeMethod::Fourier)?;
    let b = periodize_unchecked(square, tower, level, PeriodizeMethod::Fourier)?;
    let diff = a.element.star(&a.element)?.sub(&b.element)?;
    let tail = (2.0 * a.element.one_norm() + a.tail_bound) * a.tail_bound + b.tail_bound;
    let scale = (2.0 * PI * a.m as f64).powi(f.dim() as i32);
    let tau = b.element.trace().re;
    let lhs = f.l2_norm().powi(2);
    Ok(SpecialReport {
        level,
        m: a.m,
        defect: diff.one_norm(),
        tail_bound: tail,
        l2_identity_lhs: lhs,
        l2_identity_rhs_a: (scale * tau).abs(),
        l2_identity_rhs_b: (tau / scale).abs(),
    })
}

/// Special-element defect ‖a_n⋆a_n − b_n‖₁ with a_n = pr_n f, b_n = pr_n(f×f).
pub fn special_defect(f: &GridFunction, tower: &TowerSpec, level: usize) -> Result<SpecialReport> {
    Ok(special_defect_levels(f, tower, &[level])?.remove(0))
}

/// Same as `special_defect` for several levels, sharing the product f×f.
pub fn special_defect_levels(f: &GridFunction, tower: &TowerSpec, levels: &[usize]) -> Result<Vec<SpecialReport>> {
    check_real(f, true)?;
    f.assert_schwartz()?;
    let square = moyal_times(f, f)?;
    levels.iter().map(|&n| level_report(f, &square, tower, n)).collect()
}

/// The θ = 0 analogue of `special_defect`: a commutative torus at every level
/// and the pointwise square in place of f×f.
pub fn commutative_defect(f: &GridFunction, tower: &TowerSpec, level: usize) -> Result<SpecialReport> {
    check_real(f, true)?;
    let square = f.mul(f)?;
    let flat = |e: &TorusElement| TorusElement::from_terms(DeformationMatrix::zero(e.n()), e.iter().map(|(k, c)| (k.to_vec(), c)));
    let a = periodize(f, tower, level, PeriodizeMethod::Fourier)?;
    let b = periodize_unchecked(&square, tower, level, PeriodizeMethod::Fourier)?;
    let (ea, eb) = (flat(&a.element)?, flat(&b.element)?);
    let diff = ea.star(&ea)?.sub(&eb)?;
    let scale = (2.0 * PI * a.m as f64).powi(f.dim() as i32);
    let tau = eb.trace().re;
    Ok(SpecialReport {
        level,
        m: a.m,
        defect: diff.one_norm(),
        tail_bound: (2.0 * ea.one_norm() + a.tail_bound) * a.tail_bound + b.tail_bound,
        l2_identity_lhs: f.l2_norm().powi(2),
        l2_identity_rhs_a: (scale * tau).abs(),
        l2_identity_rhs_b: (tau / scale).abs(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeltaPoint {
    pub separation: f64,
    pub norm: f64,
    pub tail_bound: f64,
}

/// ‖pr_n(f_Δ × f)‖₁ for each Δ, sorted by |Δ|.
pub fn delta_decay(f: &GridFunction, deltas: &[Vec<f64>], tower: &TowerSpec, level: usize) -> Result<Vec<(f64, f64)>> {
    Ok(delta_decay_points(f, deltas, tower, level)?.into_iter().map(|p| (p.separation, p.norm)).collect())
}

/// `delta_decay` with the periodization tail of each product.
pub fn delta_decay_points(f: &GridFunction, deltas: &[Vec<f64>], tower: &TowerSpec, level: usize) -> Result<Vec<DeltaPoint>> {
    let mut out = deltas
        .iter()
        .map(|d| {
            let moved = shift(f, d)?;
            let prod = moyal_times(&moved, f)?;
            let per = periodize_unchecked(&prod, tower, level, PeriodizeMethod::Fourier)?;
            Ok(DeltaPoint {
                separation: d.iter().map(|x| x * x).sum::<f64>().sqrt(),
                norm: per.element.one_norm(),
                tail_bound: per.tail_bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.separation.total_cmp(&b.separation));
    Ok(out)
}

/// Compares ‖f‖₂² with the two candidate normalisations of τ(pr_n(f×f)):
/// rhs_a = (2πm_n)^{2N} τ(b_n) and rhs_b = (2πm_n)^{-2N} τ(b_n).
pub fn l2_trace_compare(f: &GridFunction, tower: &TowerSpec, level: usize) -> Result<SpecialReport> {
    check_real(f, false)?;
    let m = tower.m(level)?;
    let square = moyal_times(f, f)?;
    let b = periodize_unchecked(&square, tower, level, PeriodizeMethod::Fourier)?;
    let scale = (2.0 * PI * m as f64).powi(f.dim() as i32);
    let tau = b.element.trace().re;
    Ok(SpecialReport {
        level,
        m,
        defect: 0.0,
        tail_bound: b.tail_bound,
        l2_identity_lhs: f.l2_norm().powi(2),
        l2_identity_rhs_a: (scale * tau).abs(),
        l2_identity_rhs_b: (tau / scale).abs(),
    })
}

/// Which candidate matches the left side within `rel`, if exactly one does.
pub fn matched_constant(r: &SpecialReport, rel: f64) -> Option<char> {
    let close = |x: f64| (x - r.l2_identity_lhs).abs() <= rel * r.l2_identity_lhs.abs().max(f64::MIN_POSITIVE);
    match (close(r.l2_identity_rhs_a), close(r.l2_identity_rhs_b)) {
        (true, false) => Some('a'),
        (false, true) => Some('b'),
        _ => None,
    }
}

/// The covering of level `from` by level `to`, with k = m_to/m_from on every axis.
/// Its cover matrix equals Θ_to only up to rounding; move elements across with
/// `TorusElement::reindex`.
pub fn level_covering(halfdim: usize, tower: &TowerSpec, from: usize, to: usize) -> Result<CoveringSpec> {
    let (mf, mt) = (tower.m(from)?, tower.m(to)?);
    if from > to {
        return arg(format!("levels out of order: {from} > {to}"));
    }
    CoveringSpec::new(level_theta(halfdim, mf), vec![mt / mf; 2 * halfdim])
}

/// Same coefficients, tagged with another deformation. Level matrices and
/// covering matrices agree only up to rounding.
fn with_theta(e: &TorusElement, theta: DeformationMatrix) -> Result<TorusElement> {
    TorusElement::from_terms(theta, e.iter().map(|(k, c)| (k.to_vec(), c)))
}

fn retag(e: &TorusElement, halfdim: usize, m: u64) -> Result<TorusElement> {
    with_theta(e, level_theta(halfdim, m))
}

/// ‖composite embedding n→n+1→…→m − single embedding with k = m_m/m_n‖₁
/// applied to `a`, which must live at level n.
pub fn tower_embedding_check(tower: &TowerSpec, from: usize, to: usize, a: &TorusElement) -> Result<f64> {
    if !a.n().is_multiple_of(2) {
        return arg("tower elements live on even-dimensional tori");
    }
    let halfdim = a.n() / 2;
    let single = embed(a, &level_covering(halfdim, tower, from, to)?)?;
    let mut step = a.clone();
    for j in from..to {
        let spec = level_covering(halfdim, tower, j, j + 1)?;
        step = retag(&embed(&retag(&step, halfdim, tower.m(j)?)?, &spec)?, halfdim, tower.m(j + 1)?)?;
    }
    Ok(retag(&single, halfdim, tower.m(to)?)?.sub(&step)?.one_norm())
}

/// Max coefficient gap between embed(pr_n f) and |G|·P(pr_m f), where P is
/// the invariant projection for the covering of level n by level m.
pub fn periodization_compatibility(f: &GridFunction, tower: &TowerSpec, from: usize, to: usize) -> Result<(f64, f64)> {
    let halfdim = f.halfdim();
    let spec = level_covering(halfdim, tower, from, to)?;
    let lo = periodize(f, tower, from, PeriodizeMethod::Fourier)?;
    let hi = periodize(f, tower, to, PeriodizeMethod::Fourier)?;
    let up = embed(&lo.element, &spec)?;
    let inv = invariant_projection(&with_theta(&hi.element, spec.cover_theta().clone())?, &spec)?
        .scale(Complex64::new(spec.group_order() as f64, 0.0));
    // the lower level only resolves frequencies up to its own cutoff
    let (inv, _) = inv.truncate(up.cutoff());
    Ok((up.max_abs_diff(&inv)?, lo.tail_bound + spec.group_order() as f64 * hi.tail_bound))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
}

/// Least squares fit of log y = slope·log x + intercept.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 2 {
        return arg("slope fit needs at least two points");
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())) {
        return arg("slope fit needs positive finite values");
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return arg("slope fit needs distinct abscissae");
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    Ok(SlopeFit { slope, intercept, residual: (ss / n).sqrt() })
}
