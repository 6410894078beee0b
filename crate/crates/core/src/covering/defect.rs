
use super::{deck_action, CirclePartition, CoveringSpec, DeckElement};
use crate::error::{arg, Result};
use crate::torus::TorusElement;

#[derive(Clone, Debug)]
pub struct DefectReport {
    pub defect: f64,
    /// Largest Fourier truncation residual among the partitions used.
    pub residual: f64,
    pub warnings: Vec<String>,
}

fn check(spec: &CoveringSpec, partitions: &[CirclePartition]) -> Result<()> {
    if partitions.len() != spec.n() {
        return arg(format!("{} partitions for n={}", partitions.len(), spec.n()));
    }
    for (j, (p, &k)) in partitions.iter().zip(spec.k()).enumerate() {
        if p.fold as u64 != k {
            return arg(format!("partition {j} has fold {} but k_{j} = {k}", p.fold));
        }
    }
    Ok(())
}

/// e^{k_j}_{ι}(v_j) for ι = (h, i): the i-th lifted partition function moved
/// by the deck element h along axis j, placed on the j-th lattice axis.
pub(crate) fn axis_factors(spec: &CoveringSpec, partition: &CirclePartition, axis: usize) -> Result<Vec<TorusElement>> {
    let n = spec.n();
    let k = spec.k()[axis];
    let cutoff = (partition.fold * partition.fourier_cutoff) as u64;
    let mut out = Vec::with_capacity(2 * k as usize);
    for which in [1, 2] {
        let terms = partition.lift_coefficients(which).map(|(m, c)| {
            let mut l = vec![0i64; n];
            l[axis] = m;
            (l, c)
        });
        let e = TorusElement::from_terms(spec.cover_theta().clone(), terms)?.with_cutoff(cutoff)?;
        for h in 0..k {
            let mut p = vec![0i64; n];
            p[axis] = h as i64;
            out.push(deck_action(&DeckElement::new(&p, spec)?, &e, spec)?);
        }
    }
    Ok(out)
}

fn sum(theta: &crate::torus::DeformationMatrix, parts: Vec<TorusElement>) -> Result<TorusElement> {
    parts.into_iter().try_fold(TorusElement::zero(theta.clone()), |acc, p| acc.add(&p))
}

fn report(defect: f64, partitions: &[CirclePartition]) -> DefectReport {
    DefectReport {
        defect,
        residual: partitions.iter().map(|p| p.residual).fold(0.0, f64::max),
        warnings: partitions.iter().filter_map(|p| p.warning.clone()).collect(),
    }
}

/// D_g = Σ_ι β_ι ⋆ g(α_ι) with α_ι = e_{ι_1}(v_1)⋯e_{ι_n}(v_n), β_ι = α_ι*.
/// Evaluated axis by axis: S_j = Σ_{ι_j} E_j* ⋆ S_{j-1} ⋆ g(E_j).
pub fn covering_sum_matrix(spec: &CoveringSpec, partitions: &[CirclePartition], g: &DeckElement) -> Result<TorusElement> {
    check(spec, partitions)?;
    let theta = spec.cover_theta();
    let mut s = TorusElement::one(theta.clone());
    for (axis, part) in partitions.iter().enumerate() {
        let mut terms = Vec::new();
        for e in axis_factors(spec, part, axis)? {
            let ge = deck_action(g, &e, spec)?;
            terms.push(e.involution().star(&s)?.star(&ge)?);
        }
        s = sum(theta, terms)?;
    }
    Ok(s)
}

/// ‖Σ_ι β_ι ⋆ g(α_ι) − δ_{g,e}·1‖₁.
pub fn covering_sum_defect(spec: &CoveringSpec, partitions: &[CirclePartition], g: &DeckElement) -> Result<DefectReport> {
    let d = covering_sum_matrix(spec, partitions, g)?;
    let target = if g.is_identity() {
        TorusElement::one(spec.cover_theta().clone())
    } else {
        TorusElement::zero(spec.cover_theta().clone())
    };
    Ok(report(d.sub(&target)?.one_norm(), partitions))
}

/// ‖Σ_ι α_ι ⋆ ⟨α_ι, x⟩ − x‖₁, using Σ_ι α_ι⋆⟨α_ι,x⟩ = Σ_g (Σ_ι α_ι ⋆ g(β_ι)) ⋆ g(x).
pub fn resolution_defect(spec: &CoveringSpec, partitions: &[CirclePartition], x: &TorusElement) -> Result<DefectReport> {
    check(spec, partitions)?;
    let theta = spec.cover_theta();
    if x.theta() != theta {
        return arg("test element is not in the cover algebra");
    }
    let factors: Vec<Vec<TorusElement>> =
        partitions.iter().enumerate().map(|(axis, p)| axis_factors(spec, p, axis)).collect::<Result<_>>()?;
    let mut total = TorusElement::zero(theta.clone());
    for g in spec.deck_elements() {
        // T^(j) = Σ_{ι_j} E_j ⋆ T^(j+1) ⋆ g(E_j)*, innermost axis last
        let mut t = TorusElement::one(theta.clone());
        for axis in (0..spec.n()).rev() {
            let mut terms = Vec::new();
            for e in &factors[axis] {
                let ge = deck_action(&g, &e.involution(), spec)?;
                terms.push(e.star(&t)?.star(&ge)?);
            }
            t = sum(theta, terms)?;
        }
        total = total.add(&t.star(&deck_action(&g, x, spec)?)?)?;
    }
    Ok(report(total.sub(x)?.one_norm(), partitions))
}
