//! Cylinder equidistribution on the full shift over the support alphabet.
//!
//! Words in S_μⁿ whose group product is the identity ("loops") carry the
//! weight ν_ξ(\[s\]) = μ_ξ(s₁)⋯μ_ξ(s_n); normalizing by μ_ξ*ⁿ(e) gives a
//! probability measure m_n on cylinder sets which converges to the Bernoulli
//! measure ν_ξ as n grows. The closed form
//!
//!   m_n(\[u₁,…,u_k\]) = μ_ξ(u₁)⋯μ_ξ(u_k) · μ_ξ*⁽ⁿ⁻ᵏ⁾(u⁻¹) / μ_ξ*ⁿ(e),
//!
//! with u = u₁⋯u_k, turns the table lookups into the cylinder weights; the
//! n = k boundary case works through the μ*⁰ = δ_e convention. A separate
//! brute-force enumeration of loops doubles as the oracle for that formula.
//!
//! The finite-n Gurevič pressure P_n(t) of the one-coordinate potential
//! log μ_ξ(s₁) perturbed by t·(indicator of \[u\]) is computed by exact
//! enumeration over S_μⁿ with cyclic orbit evaluation; P_n(0) = 0 is the
//! normalization identity and dP/dt at 0 recovers ν_ξ(\[u\]). Enumeration is
//! exact rather than sampled — the quantities are finite sums at fixed n and
//! sampling would blur the oracle checks — with a hard guard on |S_μ|ⁿ.

use serde::Serialize;
use thiserror::Error;

use crate::groups::{GroupElement, GroupError};
use crate::measures::{ConvolutionTable, FinMeasure, MeasureError};
use crate::numeric::{least_squares, LogSumExp};

/// Hard ceiling on |S_μ|ⁿ for the exact enumerations.
pub const ENUMERATION_CAP: f64 = 1e8;

#[derive(Debug, Error)]
pub enum ShiftError {
    #[error("cylinder word must have at least one letter")]
    EmptyCylinder,
    #[error("cylinder letter {index} lies outside the support of the measure")]
    LetterOutsideSupport { index: usize },
    #[error("n = {n} is smaller than the cylinder length k = {k}")]
    HorizonTooSmall { n: usize, k: usize },
    #[error("μ*ⁿ(e) = 0 at n = {n} (periodicity); cylinder measure undefined there")]
    ZeroReturnProbability { n: usize },
    #[error("enumeration guard exceeded: |S|^n ≈ {words:.3e} > {cap:.0e}")]
    EnumerationGuard { words: f64, cap: f64 },
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// A finite word (u₁,…,u_k) of support elements, naming the cylinder set of
/// all sequences that start with it.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderWord {
    letters: Vec<GroupElement>,
}

impl CylinderWord {
    pub fn new(letters: Vec<GroupElement>) -> Result<Self, ShiftError> {
        if letters.is_empty() {
            return Err(ShiftError::EmptyCylinder);
        }
        Ok(CylinderWord { letters })
    }

    pub fn letters(&self) -> &[GroupElement] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        false // by construction k ≥ 1
    }

    /// The group product u = u₁⋯u_k.
    pub fn product(&self) -> Result<GroupElement, GroupError> {
        let mut acc = self.letters[0].clone();
        for l in &self.letters[1..] {
            acc = acc.multiply(l)?;
        }
        Ok(acc)
    }
}

/// Indices of the cylinder letters inside the measure's sorted atom list.
fn support_indices(mu: &FinMeasure, u: &CylinderWord) -> Result<Vec<usize>, ShiftError> {
    u.letters()
        .iter()
        .enumerate()
        .map(|(index, g)| {
            mu.atoms()
                .binary_search_by(|(a, _)| a.cmp(g))
                .map_err(|_| ShiftError::LetterOutsideSupport { index })
        })
        .collect()
}

/// ν_ξ(\[u\]) = μ_ξ(u₁)⋯μ_ξ(u_k): the Bernoulli cylinder weight.
pub fn nu_xi_cylinder(mu_xi: &FinMeasure, u: &CylinderWord) -> Result<f64, ShiftError> {
    let idx = support_indices(mu_xi, u)?;
    Ok(idx.iter().map(|&i| mu_xi.atoms()[i].1).product())
}

/// m_n(\[u\]) by the closed convolution formula, in log-scale arithmetic.
/// Requires n ≥ k (n = k uses the δ_e convention for μ*⁰).
pub fn m_n_cylinder(
    table_xi: &ConvolutionTable,
    u: &CylinderWord,
    n: usize,
) -> Result<f64, ShiftError> {
    let k = u.len();
    if n < k {
        return Err(ShiftError::HorizonTooSmall { n, k });
    }
    let base = table_xi.base();
    let idx = support_indices(base, u)?;
    let e = base.descriptor().identity();
    let p_e = table_xi.probability_of(&e, n)?;
    if p_e.is_zero() {
        return Err(ShiftError::ZeroReturnProbability { n });
    }
    let u_inv = u.product()?.inverse();
    let p_tail = table_xi.probability_of(&u_inv, n - k)?;
    if p_tail.is_zero() {
        return Ok(0.0);
    }
    let log_prefix: f64 = idx.iter().map(|&i| base.atoms()[i].1.ln()).sum();
    Ok((log_prefix + p_tail.ln() - p_e.ln()).exp())
}

/// Brute-force m_n(\[u\]): enumerates all loops of length n, summing Bernoulli
/// weights of those that start with u. Independent of the convolution table;
/// the oracle for [`m_n_cylinder`].
pub fn m_n_bruteforce(mu_xi: &FinMeasure, u: &CylinderWord, n: usize) -> Result<f64, ShiftError> {
    let k = u.len();
    if n < k {
        return Err(ShiftError::HorizonTooSmall { n, k });
    }
    guard_enumeration(mu_xi.support_size(), n)?;
    let u_idx = support_indices(mu_xi, u)?;
    let atoms = mu_xi.atoms();
    let e = mu_xi.descriptor().identity();

    // DFS over words with a running product stack.
    let mut word = vec![0usize; n];
    let mut weight = vec![1.0f64; n + 1];
    let mut product = vec![e.clone(); n + 1];
    let mut loop_mass = 0.0f64;
    let mut cylinder_mass = 0.0f64;

    let mut depth = 0usize;
    loop {
        if depth == n {
            if product[n] == e {
                loop_mass += weight[n];
                if word[..k] == u_idx[..] {
                    cylinder_mass += weight[n];
                }
            }
            // backtrack to the last position that can be advanced
            loop {
                if depth == 0 {
                    if loop_mass == 0.0 {
                        return Err(ShiftError::ZeroReturnProbability { n });
                    }
                    return Ok(cylinder_mass / loop_mass);
                }
                depth -= 1;
                if word[depth] + 1 < atoms.len() {
                    word[depth] += 1;
                    break;
                }
                word[depth] = 0;
            }
        }
        let (g, w) = &atoms[word[depth]];
        weight[depth + 1] = weight[depth] * w;
        product[depth + 1] = product[depth].multiply(g)?;
        depth += 1;
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EquidistRow {
    pub n: usize,
    pub m_n: f64,
    pub deviation: f64,
}

/// Deviations |m_n(\[u\]) − ν_ξ(\[u\])| over a range of n, with a trend check.
#[derive(Clone, Debug, Serialize)]
pub struct EquidistReport {
    pub nu_xi: f64,
    pub rows: Vec<EquidistRow>,
    /// Max deviation over the final quartile of computed rows.
    pub max_final_quartile_deviation: f64,
    /// Least-squares slope of deviation against n.
    pub trend_slope: f64,
    pub trend_downward: bool,
}

/// Tabulates m_n(\[u\]) for n in `[n_from, n_to]`, skipping n where the walk
/// cannot return (zero μ_ξ*ⁿ(e)). Errors if no n in the range is usable.
pub fn equidist_report(
    table_xi: &ConvolutionTable,
    u: &CylinderWord,
    n_from: usize,
    n_to: usize,
) -> Result<EquidistReport, ShiftError> {
    let nu = nu_xi_cylinder(table_xi.base(), u)?;
    let start = n_from.max(u.len());
    let end = n_to.min(table_xi.n_max());
    let mut rows = Vec::new();
    for n in start..=end {
        match m_n_cylinder(table_xi, u, n) {
            Ok(m) => rows.push(EquidistRow {
                n,
                m_n: m,
                deviation: (m - nu).abs(),
            }),
            Err(ShiftError::ZeroReturnProbability { .. }) => continue,
            Err(other) => return Err(other),
        }
    }
    if rows.is_empty() {
        return Err(ShiftError::ZeroReturnProbability { n: end });
    }
    let quartile_start = rows.len() - rows.len().div_ceil(4);
    let max_final_quartile_deviation = rows[quartile_start..]
        .iter()
        .map(|r| r.deviation)
        .fold(0.0f64, f64::max);
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.deviation)).collect();
    let trend_slope = least_squares(&pts).map(|(_, b)| b).unwrap_or(0.0);
    Ok(EquidistReport {
        nu_xi: nu,
        rows,
        max_final_quartile_deviation,
        trend_slope,
        trend_downward: trend_slope < 0.0,
    })
}

fn guard_enumeration(support: usize, n: usize) -> Result<(), ShiftError> {
    let words = (support as f64).powi(n as i32);
    if words > ENUMERATION_CAP {
        return Err(ShiftError::EnumerationGuard {
            words,
            cap: ENUMERATION_CAP,
        });
    }
    Ok(())
}

/// Cyclic occurrence count of the pattern `u_idx` in the periodic word:
/// positions j = 0..n−1 of the orbit of s_∞ under the shift.
fn cyclic_count(word: &[usize], u_idx: &[usize]) -> usize {
    let n = word.len();
    let k = u_idx.len();
    (0..n)
        .filter(|&j| (0..k).all(|i| word[(j + i) % n] == u_idx[i]))
        .count()
}

/// Finite-n Gurevič pressure of φ = log μ_ξ(s₁) perturbed by t·χ, with χ the
/// indicator of the cylinder \[u\]:
///
///   P_n(t) = (1/n) · log Σ_{s ∈ S^n} exp( Σ_j [log μ_ξ(s_{j+1}) + t·χ(σʲs_∞)] ),
///
/// where the orbit of the periodic point s_∞ is evaluated cyclically.
/// Exact enumeration; P_n(0) = 0 up to rounding by Bernoulli normalization.
pub fn pressure_finite_n(
    mu_xi: &FinMeasure,
    u: &CylinderWord,
    t: f64,
    n: usize,
) -> Result<f64, ShiftError> {
    if n == 0 {
        return Err(ShiftError::HorizonTooSmall { n, k: 1 });
    }
    guard_enumeration(mu_xi.support_size(), n)?;
    let u_idx = support_indices(mu_xi, u)?;
    let log_w: Vec<f64> = mu_xi.atoms().iter().map(|(_, w)| w.ln()).collect();
    let supp = log_w.len();

    let mut acc = LogSumExp::new();
    let mut word = vec![0usize; n];
    let mut log_weight = vec![0.0f64; n + 1];
    let mut depth = 0usize;
    loop {
        if depth == n {
            let count = cyclic_count(&word, &u_idx);
            acc.add_log_term(log_weight[n] + t * count as f64);
            loop {
                if depth == 0 {
                    return Ok(acc.ln() / n as f64);
                }
                depth -= 1;
                if word[depth] + 1 < supp {
                    word[depth] += 1;
                    break;
                }
                word[depth] = 0;
            }
        }
        log_weight[depth + 1] = log_weight[depth] + log_w[word[depth]];
        depth += 1;
    }
}

/// Which words enter the large-deviation tail sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LdDomain {
    /// All of S_μⁿ.
    FullShift,
    /// Only loops (group product = identity).
    Loops,
}

/// Exact tail mass Σ ν_ξ(\[s\]) over words s ∈ S^n whose orbital frequency of
/// the cylinder \[u\] deviates from ν_ξ(\[u\]) by more than ε.
pub fn ld_tail_mass(
    mu_xi: &FinMeasure,
    u: &CylinderWord,
    eps: f64,
    n: usize,
    domain: LdDomain,
) -> Result<f64, ShiftError> {
    if n == 0 {
        return Err(ShiftError::HorizonTooSmall { n, k: 1 });
    }
    guard_enumeration(mu_xi.support_size(), n)?;
    let u_idx = support_indices(mu_xi, u)?;
    let nu_u = nu_xi_cylinder(mu_xi, u)?;
    let atoms = mu_xi.atoms();
    let e = mu_xi.descriptor().identity();
    let track_products = domain == LdDomain::Loops;

    let mut word = vec![0usize; n];
    let mut weight = vec![1.0f64; n + 1];
    let mut product = vec![e.clone(); n + 1];
    let mut tail = 0.0f64;
    let mut depth = 0usize;
    loop {
        if depth == n {
            let freq = cyclic_count(&word, &u_idx) as f64 / n as f64;
            if (freq - nu_u).abs() > eps && (!track_products || product[n] == e) {
                tail += weight[n];
            }
            loop {
                if depth == 0 {
                    return Ok(tail);
                }
                depth -= 1;
                if word[depth] + 1 < atoms.len() {
                    word[depth] += 1;
                    break;
                }
                word[depth] = 0;
            }
        }
        let (g, w) = &atoms[word[depth]];
        weight[depth + 1] = weight[depth] * w;
        if track_products {
            product[depth + 1] = product[depth].multiply(g)?;
        }
        depth += 1;
    }
}
