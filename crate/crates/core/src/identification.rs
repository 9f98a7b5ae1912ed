//! Identification checks and selection diagnostics.
//!
//! * [`check_theorem1`] enumerates subsets of candidate TCPs whose reduced-form
//!   ratios `Γ_j / δ_j` share a common constant and decides whether the
//!   constant is unique.
//! * [`check_majority_rule`] is the sufficient condition `I ≤ p_z / 2`.
//! * [`irrepresentable_diagnostic`], [`rip_constants`] and
//!   [`theorem3_condition`] evaluate the selection-consistency and recovery
//!   conditions on a concrete design.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    gram_support_extremes, select_columns, symmetric_extremes, Matrix, Projector, Vector,
};

/// Maximum number of supports the brute-force RIP computation will visit.
pub const RIP_SUPPORT_LIMIT: u128 = 1_000_000;

/// Subset lists are reported in full only up to this many candidate TCPs.
pub const FULL_LISTING_MAX_PZ: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentificationMethod {
    Theorem1,
    MajorityRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistentSubset {
    /// Zero-based TCP indices.
    pub indices: Vec<usize>,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationReport {
    pub identified: bool,
    pub subsets: Vec<ConsistentSubset>,
    pub distinct_q_count: usize,
    pub distinct_q: Vec<f64>,
    pub subset_size: usize,
    pub method: IdentificationMethod,
}

/// `true` iff `invalid_bound ≤ p_z / 2`.
pub fn check_majority_rule(p_z: usize, invalid_bound: usize) -> Result<bool> {
    if invalid_bound < 1 || invalid_bound > p_z {
        return Err(Error::InvalidBound(format!(
            "I = {invalid_bound} must lie in 1..={p_z}"
        )));
    }
    Ok(2 * invalid_bound <= p_z)
}

pub fn majority_rule_report(p_z: usize, invalid_bound: usize) -> Result<IdentificationReport> {
    let holds = check_majority_rule(p_z, invalid_bound)?;
    Ok(IdentificationReport {
        identified: holds,
        subsets: Vec::new(),
        distinct_q_count: usize::from(holds),
        distinct_q: Vec::new(),
        subset_size: p_z - invalid_bound + 1,
        method: IdentificationMethod::MajorityRule,
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}

fn push_distinct(distinct: &mut Vec<f64>, q: f64, tol: f64) {
    if !distinct.iter().any(|&d| close(d, q, tol)) {
        distinct.push(q);
    }
}

/// Decide whether `(α, γ)` is identified from reduced-form moment vectors.
///
/// A subset `C` of size `p_z − I + 1` is consistent when a single `q`
/// satisfies `δ_j q = Γ_j` for every `j ∈ C` (within `tol`, relative). The
/// effect is identified iff every consistent subset yields the same `q`.
/// Subsets are enumerated lexicographically and listed in full when
/// `p_z ≤ 12`; larger problems use a sorted-ratio sweep with the same verdict.
pub fn check_theorem1(
    delta_tilde: &[f64],
    gamma_tilde: &[f64],
    invalid_bound: usize,
    tol: f64,
) -> Result<IdentificationReport> {
    let p_z = delta_tilde.len();
    if gamma_tilde.len() != p_z {
        return Err(Error::Dimension(format!(
            "delta has {p_z} entries, gamma has {}",
            gamma_tilde.len()
        )));
    }
    if invalid_bound < 1 || invalid_bound > p_z {
        return Err(Error::InvalidBound(format!(
            "I = {invalid_bound} must lie in 1..={p_z}"
        )));
    }
    let weak: Vec<usize> = delta_tilde
        .iter()
        .enumerate()
        .filter(|(_, d)| !(d.abs() > tol))
        .map(|(j, _)| j)
        .collect();
    if !weak.is_empty() {
        return Err(Error::AssumptionViolation {
            message: "reduced-form OCP coefficients must be nonzero".into(),
            indices: weak,
        });
    }
    let ratios: Vec<f64> = gamma_tilde
        .iter()
        .zip(delta_tilde)
        .map(|(g, d)| g / d)
        .collect();
    let size = p_z - invalid_bound + 1;
    if p_z <= FULL_LISTING_MAX_PZ {
        Ok(enumerate_subsets(&ratios, size, tol))
    } else {
        Ok(sweep_ratios(&ratios, size, tol))
    }
}

fn subset_q(ratios: &[f64], subset: &[usize], tol: f64) -> Option<f64> {
    let first = ratios[subset[0]];
    subset
        .iter()
        .all(|&j| close(ratios[j], first, tol))
        .then(|| subset.iter().map(|&j| ratios[j]).sum::<f64>() / subset.len() as f64)
}

fn enumerate_subsets(ratios: &[f64], size: usize, tol: f64) -> IdentificationReport {
    let mut subsets = Vec::new();
    let mut distinct = Vec::new();
    for subset in (0..ratios.len()).combinations(size) {
        if let Some(q) = subset_q(ratios, &subset, tol) {
            push_distinct(&mut distinct, q, tol);
            subsets.push(ConsistentSubset { indices: subset, q });
        }
    }
    IdentificationReport {
        identified: distinct.len() <= 1,
        subsets,
        distinct_q_count: distinct.len(),
        distinct_q: distinct,
        subset_size: size,
        method: IdentificationMethod::Theorem1,
    }
}

/// Same verdict as [`enumerate_subsets`] without visiting every subset: sort the
/// ratios and find maximal runs whose members all agree within `tol`; a
/// consistent subset of the requested size exists for every run at least that
/// long. Short-circuits on the second distinct constant.
fn sweep_ratios(ratios: &[f64], size: usize, tol: f64) -> IdentificationReport {
    let mut order: Vec<usize> = (0..ratios.len()).collect();
    order.sort_by(|&a, &b| ratios[a].total_cmp(&ratios[b]));
    let mut distinct = Vec::new();
    let mut subsets = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let anchor = ratios[order[start]];
        let mut end = start;
        while end + 1 < order.len() && close(ratios[order[end + 1]], anchor, tol) {
            end += 1;
        }
        if end + 1 - start >= size {
            let mut members: Vec<usize> = order[start..start + size].to_vec();
            members.sort_unstable();
            let q = members.iter().map(|&j| ratios[j]).sum::<f64>() / size as f64;
            push_distinct(&mut distinct, q, tol);
            subsets.push(ConsistentSubset {
                indices: members,
                q,
            });
            if distinct.len() > 1 {
                break;
            }
        }
        start += 1;
    }
    IdentificationReport {
        identified: distinct.len() <= 1,
        subsets,
        distinct_q_count: distinct.len(),
        distinct_q: distinct,
        subset_size: size,
        method: IdentificationMethod::Theorem1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrrepresentableReport {
    pub value: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RipReport {
    pub order: usize,
    /// δ⁻ of Z.
    pub rip_lower: f64,
    /// δ⁺ of Z, of `P_Ŵ Z` and of `P_D̃ Z`, in that order.
    pub rip_upper: Vec<f64>,
    pub theorem3_margin: f64,
}

impl RipReport {
    pub fn holds(&self) -> bool {
        self.theorem3_margin > 0.0
    }
}

/// Combined selection diagnostics for one OCP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub irrepresentable: Option<IrrepresentableReport>,
    pub rip: Option<RipReport>,
}

/// `‖C_{AᶜA} C_{AA}⁻¹ s(α_A)‖_∞` with `C = (1/n) XᵀX` for the projected design `X`.
pub fn irrepresentable_diagnostic(
    projected_design: &Matrix,
    invalid_set: &[usize],
    signs: &[f64],
) -> Result<IrrepresentableReport> {
    let p = projected_design.ncols();
    let n = projected_design.nrows() as f64;
    if invalid_set.is_empty() || invalid_set.len() >= p {
        return Err(Error::InvalidInput(format!(
            "invalid set must be nonempty and proper (size {} of {p})",
            invalid_set.len()
        )));
    }
    if signs.len() != invalid_set.len() {
        return Err(Error::Dimension(format!(
            "{} signs for an invalid set of size {}",
            signs.len(),
            invalid_set.len()
        )));
    }
    if let Some(&bad) = invalid_set.iter().find(|&&j| j >= p) {
        return Err(Error::IndexOutOfRange { index: bad, len: p });
    }
    let complement: Vec<usize> = (0..p).filter(|j| !invalid_set.contains(j)).collect();
    let xa = select_columns(projected_design, invalid_set);
    let xc = select_columns(projected_design, &complement);
    let c_aa = xa.tr_mul(&xa) / n;
    let c_ca = xc.tr_mul(&xa) / n;
    let (min_eig, _) = symmetric_extremes(c_aa.clone());
    if !(min_eig > 1e-10) {
        return Err(Error::SingularBlock { min_eig });
    }
    let s = Vector::from_column_slice(signs);
    let solved = c_aa
        .cholesky()
        .ok_or(Error::SingularBlock { min_eig })?
        .solve(&s);
    let value = (c_ca * solved).abs().max();
    Ok(IrrepresentableReport {
        value,
        holds: value < 1.0,
    })
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Brute-force lower/upper restricted isometry constants of order `k`.
pub fn rip_constants(design: &Matrix, k: usize) -> Result<(f64, f64)> {
    let p = design.ncols();
    if k < 1 || k > p {
        return Err(Error::InvalidBound(format!(
            "sparsity k = {k} must lie in 1..={p}"
        )));
    }
    let count = binomial(p, k);
    if count > RIP_SUPPORT_LIMIT {
        return Err(Error::CombinatorialBlowup {
            count,
            limit: RIP_SUPPORT_LIMIT,
        });
    }
    let gram = design.tr_mul(design);
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for support in (0..p).combinations(k) {
        let sub = Matrix::from_fn(k, k, |a, b| gram[(support[a], support[b])]);
        let (l, h) = symmetric_extremes(sub);
        lo = lo.min(l);
        hi = hi.max(h);
    }
    Ok((lo, hi))
}

/// Recovery margin `2δ⁻(Z) − δ⁺(Z) − 2δ⁺(P_Ŵ Z) − 2δ⁺(P_D̃ Z)` at order `2 s_z`.
///
/// `d_tilde` may hold several columns (treatment plus covariates, residualized
/// on `Ŵ`); the projection is onto their joint span.
pub fn theorem3_condition(
    z: &Matrix,
    what: &Vector,
    d_tilde: &Matrix,
    s_z: usize,
) -> Result<RipReport> {
    let p_z = z.ncols();
    let order = 2 * s_z;
    if s_z == 0 || order > p_z {
        return Err(Error::InvalidBound(format!(
            "need 1 <= 2 s_z <= p_z, got s_z = {s_z}, p_z = {p_z}"
        )));
    }
    let count = binomial(p_z, order);
    if count > RIP_SUPPORT_LIMIT {
        return Err(Error::CombinatorialBlowup {
            count,
            limit: RIP_SUPPORT_LIMIT,
        });
    }
    let w_proj = Projector::new(&Matrix::from_column_slice(what.len(), 1, what.as_slice()))?;
    let d_proj = Projector::new(d_tilde)?;
    let (z_lo, z_hi) = rip_constants(z, order)?;
    let (_, w_hi) = rip_constants(&w_proj.project(z), order)?;
    let (_, d_hi) = rip_constants(&d_proj.project(z), order)?;
    Ok(RipReport {
        order,
        rip_lower: z_lo,
        rip_upper: vec![z_hi, w_hi, d_hi],
        theorem3_margin: 2.0 * z_lo - z_hi - 2.0 * w_hi - 2.0 * d_hi,
    })
}

/// Extremes of the Gram matrix on one support; re-exported for diagnostics callers.
pub fn support_extremes(design: &Matrix, support: &[usize]) -> Result<(f64, f64)> {
    gram_support_extremes(design, support)
}
