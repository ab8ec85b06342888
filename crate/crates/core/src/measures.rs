//! Finitely supported measures on a group, convolution powers, pushforwards
//! to ℤᵏ, and the bounded-horizon aperiodicity / non-degeneracy evidence.
//!
//! Convolution iterates as μ*⁽ⁿ⁺¹⁾ = μ*ⁿ * μ, so the support grows one
//! ball-layer per step. Probabilities are kept in linear space with an
//! explicit per-level log rescale factor: with rescaling on, each stored
//! level is renormalized to mass one and `scale_log` accumulates the true
//! log-mass, so μ*ⁿ(g) = stored(g)·exp(scale_log(n)) survives underflow for
//! any horizon. A configurable support cap fails fast rather than truncating
//! — every quantity downstream is an exact finite sum and truncation would
//! silently corrupt it.
//!
//! Level construction is deterministic bit-for-bit regardless of thread
//! count: the previous level is cut into fixed-size chunks, chunk products
//! are accumulated independently (in parallel), and partial sums merge in
//! chunk order; atoms are kept sorted by canonical element order throughout.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::groups::{GroupDescriptor, GroupElement, GroupError};
use crate::numeric::{LogValue, SplitMix64};

/// Tolerance inside which a measure's total mass counts as probability one.
pub const PROBABILITY_TOL: f64 = 1e-12;

/// Default cap on the support size of a single convolution power.
pub const DEFAULT_SUPPORT_CAP: usize = 50_000_000;

/// Fixed chunk length for parallel level construction; results do not
/// depend on it being reached by any particular thread.
const PAR_CHUNK: usize = 2048;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("measure has empty support")]
    EmptySupport,
    #[error("atom weight {weight} is not strictly positive and finite")]
    BadWeight { weight: f64 },
    #[error("element does not belong to the measure's group")]
    ElementOutsideGroup,
    #[error("descriptor mismatch between measures")]
    DescriptorMismatch,
    #[error("operation requires a probability measure (total mass {total})")]
    NotProbability { total: f64 },
    #[error("support cap exceeded at n = {n}: {support} atoms > cap {cap}")]
    SupportCapExceeded {
        n: usize,
        support: usize,
        cap: usize,
    },
    #[error("lazification parameter {eps} outside (0, 1)")]
    EpsOutOfRange { eps: f64 },
    #[error("power index {n} out of range (table holds n ≤ {n_max})")]
    PowerOutOfRange { n: usize, n_max: usize },
    #[error("horizon {horizon} invalid (must be 1..={n_max})")]
    BadHorizon { horizon: usize, n_max: usize },
    #[error("lattice rank mismatch: expected {expected}, found {found}")]
    RankMismatch { expected: usize, found: usize },
}

/// A finitely supported measure on a group: a sparse map from canonical
/// elements to strictly positive weights. Immutable once built.
#[derive(Clone, Debug)]
pub struct FinMeasure {
    descriptor: GroupDescriptor,
    atoms: Vec<(GroupElement, f64)>,
    total: f64,
    is_probability: bool,
}

fn coalesce_sorted(atoms: &mut Vec<(GroupElement, f64)>) {
    atoms.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    let mut out: Vec<(GroupElement, f64)> = Vec::with_capacity(atoms.len());
    for (g, w) in atoms.drain(..) {
        match out.last_mut() {
            Some((last, lw)) if *last == g => *lw += w,
            _ => out.push((g, w)),
        }
    }
    *atoms = out;
}

impl FinMeasure {
    /// Builds a measure from raw atoms; duplicate elements have their
    /// weights summed. Weights must be strictly positive and finite.
    pub fn from_atoms(
        descriptor: GroupDescriptor,
        mut atoms: Vec<(GroupElement, f64)>,
    ) -> Result<Self, MeasureError> {
        if atoms.is_empty() {
            return Err(MeasureError::EmptySupport);
        }
        for (g, w) in &atoms {
            if !w.is_finite() || *w <= 0.0 {
                return Err(MeasureError::BadWeight { weight: *w });
            }
            if !descriptor.contains(g) {
                return Err(MeasureError::ElementOutsideGroup);
            }
        }
        coalesce_sorted(&mut atoms);
        let total: f64 = atoms.iter().map(|(_, w)| w).sum();
        Ok(FinMeasure {
            descriptor,
            is_probability: (total - 1.0).abs() <= PROBABILITY_TOL,
            atoms,
            total,
        })
    }

    /// Builds a measure from `(word, weight)` pairs; the words are evaluated
    /// over the descriptor's alphabet and duplicate resulting elements have
    /// their weights summed.
    pub fn from_words(
        descriptor: GroupDescriptor,
        words: &[(String, f64)],
    ) -> Result<Self, MeasureError> {
        let mut atoms = Vec::with_capacity(words.len());
        for (word, weight) in words {
            let g = descriptor.evaluate_word(word)?;
            atoms.push((g, *weight));
        }
        Self::from_atoms(descriptor, atoms)
    }

    /// The Dirac mass at the identity (the n = 0 convolution power).
    pub fn dirac(descriptor: GroupDescriptor) -> Self {
        let e = descriptor.identity();
        FinMeasure {
            descriptor,
            atoms: vec![(e, 1.0)],
            total: 1.0,
            is_probability: true,
        }
    }

    pub fn descriptor(&self) -> &GroupDescriptor {
        &self.descriptor
    }

    /// Atoms in canonical element order.
    pub fn atoms(&self) -> &[(GroupElement, f64)] {
        &self.atoms
    }

    pub fn support_size(&self) -> usize {
        self.atoms.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.total
    }

    pub fn is_probability(&self) -> bool {
        self.is_probability
    }

    /// Weight of an element, zero when outside the support.
    pub fn weight_of(&self, g: &GroupElement) -> f64 {
        match self.atoms.binary_search_by(|(a, _)| a.cmp(g)) {
            Ok(i) => self.atoms[i].1,
            Err(_) => 0.0,
        }
    }

    pub fn supports(&self, g: &GroupElement) -> bool {
        self.atoms.binary_search_by(|(a, _)| a.cmp(g)).is_ok()
    }
}

/// (μ*ν)(g) = Σ_s μ(s) ν(s⁻¹ g), summed over the finite support product.
pub fn convolve(mu: &FinMeasure, nu: &FinMeasure) -> Result<FinMeasure, MeasureError> {
    if mu.descriptor != nu.descriptor {
        return Err(MeasureError::DescriptorMismatch);
    }
    let mut acc: HashMap<GroupElement, f64> = HashMap::with_capacity(mu.atoms.len());
    for (a, wa) in &mu.atoms {
        for (b, wb) in &nu.atoms {
            let g = a.multiply(b)?;
            *acc.entry(g).or_insert(0.0) += wa * wb;
        }
    }
    let atoms: Vec<(GroupElement, f64)> = acc.into_iter().collect();
    FinMeasure::from_atoms(mu.descriptor.clone(), atoms)
}

/// Per-level payload used when reassembling a table from the cache:
/// (sorted atoms, total mass, scale log).
pub type LevelParts = Vec<(Vec<(GroupElement, f64)>, f64, f64)>;

/// One stored convolution power.
#[derive(Clone, Debug)]
struct Level {
    atoms: Vec<(GroupElement, f64)>,
    total_mass: f64,
    scale_log: f64,
}

/// Convolution powers μ*⁰ = δ_e, μ*¹, …, μ*ⁿ of a probability measure,
/// with per-level mass bookkeeping. Immutable and safe for concurrent reads.
#[derive(Clone, Debug)]
pub struct ConvolutionTable {
    base: FinMeasure,
    rescaled: bool,
    levels: Vec<Level>,
}

/// Multiplies every atom of `prev` by every support atom, merging partial
/// sums in fixed chunk order so the result is identical for any thread count.
fn convolve_level(
    prev: &[(GroupElement, f64)],
    base: &[(GroupElement, f64)],
) -> Result<Vec<(GroupElement, f64)>, MeasureError> {
    let chunk_maps: Result<Vec<HashMap<GroupElement, f64>>, GroupError> = prev
        .par_chunks(PAR_CHUNK)
        .map(|chunk| {
            let mut m: HashMap<GroupElement, f64> =
                HashMap::with_capacity(chunk.len() * base.len());
            for (g, w) in chunk {
                for (s, ws) in base {
                    let prod = g.multiply(s)?;
                    *m.entry(prod).or_insert(0.0) += w * ws;
                }
            }
            Ok(m)
        })
        .collect();
    let chunk_maps = chunk_maps?;

    let mut merged: HashMap<GroupElement, f64> = HashMap::new();
    for m in chunk_maps {
        for (g, w) in m {
            *merged.entry(g).or_insert(0.0) += w;
        }
    }
    let mut atoms: Vec<(GroupElement, f64)> = merged.into_iter().collect();
    atoms.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    Ok(atoms)
}

/// Iterated convolution μ*ⁿ for n up to `n_max` with the default support cap.
pub fn power_sequence(
    mu: &FinMeasure,
    n_max: usize,
    rescale: bool,
) -> Result<ConvolutionTable, MeasureError> {
    power_sequence_with_cap(mu, n_max, rescale, DEFAULT_SUPPORT_CAP)
}

pub fn power_sequence_with_cap(
    mu: &FinMeasure,
    n_max: usize,
    rescale: bool,
    support_cap: usize,
) -> Result<ConvolutionTable, MeasureError> {
    if !mu.is_probability {
        return Err(MeasureError::NotProbability { total: mu.total });
    }
    let e = mu.descriptor.identity();
    let mut levels = Vec::with_capacity(n_max + 1);
    levels.push(Level {
        atoms: vec![(e, 1.0)],
        total_mass: 1.0,
        scale_log: 0.0,
    });

    for n in 1..=n_max {
        let prev = &levels[n - 1];
        let mut atoms = convolve_level(&prev.atoms, &mu.atoms)?;
        if atoms.len() > support_cap {
            return Err(MeasureError::SupportCapExceeded {
                n,
                support: atoms.len(),
                cap: support_cap,
            });
        }
        let raw_total: f64 = atoms.iter().map(|(_, w)| w).sum();
        let (total_mass, scale_log) = if rescale {
            let inv = 1.0 / raw_total;
            for (_, w) in atoms.iter_mut() {
                *w *= inv;
            }
            let renormalized: f64 = atoms.iter().map(|(_, w)| w).sum();
            (renormalized, prev.scale_log + raw_total.ln())
        } else {
            (raw_total, prev.scale_log)
        };
        levels.push(Level {
            atoms,
            total_mass,
            scale_log,
        });
    }
    Ok(ConvolutionTable {
        base: mu.clone(),
        rescaled: rescale,
        levels,
    })
}

impl ConvolutionTable {
    pub fn base(&self) -> &FinMeasure {
        &self.base
    }

    pub fn n_max(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn is_rescaled(&self) -> bool {
        self.rescaled
    }

    pub fn support_size(&self, n: usize) -> usize {
        self.levels[n].atoms.len()
    }

    pub fn level_atoms(&self, n: usize) -> &[(GroupElement, f64)] {
        &self.levels[n].atoms
    }

    pub fn level_total_mass(&self, n: usize) -> f64 {
        self.levels[n].total_mass
    }

    pub fn level_scale_log(&self, n: usize) -> f64 {
        self.levels[n].scale_log
    }

    pub(crate) fn from_parts(base: FinMeasure, rescaled: bool, parts: LevelParts) -> Self {
        ConvolutionTable {
            base,
            rescaled,
            levels: parts
                .into_iter()
                .map(|(atoms, total_mass, scale_log)| Level {
                    atoms,
                    total_mass,
                    scale_log,
                })
                .collect(),
        }
    }

    /// μ*ⁿ(g) as a log-scaled pair; exact table lookup, zero when absent.
    pub fn probability_of(&self, g: &GroupElement, n: usize) -> Result<LogValue, MeasureError> {
        if n >= self.levels.len() {
            return Err(MeasureError::PowerOutOfRange {
                n,
                n_max: self.n_max(),
            });
        }
        if !self.base.descriptor.contains(g) {
            return Err(MeasureError::ElementOutsideGroup);
        }
        let level = &self.levels[n];
        let mantissa = match level.atoms.binary_search_by(|(a, _)| a.cmp(g)) {
            Ok(i) => level.atoms[i].1,
            Err(_) => return Ok(LogValue::ZERO),
        };
        Ok(LogValue::new(mantissa, level.scale_log))
    }

    /// μ*ⁿ(e) for n = 0..=n_max (n = 0 is δ_e by convention).
    pub fn return_sequence(&self) -> Vec<LogValue> {
        let e = self.base.descriptor.identity();
        (0..self.levels.len())
            .map(|n| self.probability_of(&e, n).expect("n in range"))
            .collect()
    }
}

/// Finitely supported measure on ℤᵏ (the pushforward μ̄ = π_*μ).
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeMeasure {
    rank: usize,
    atoms: Vec<(Vec<i64>, f64)>,
    total: f64,
}

impl LatticeMeasure {
    pub fn from_atoms(rank: usize, atoms: Vec<(Vec<i64>, f64)>) -> Result<Self, MeasureError> {
        if atoms.is_empty() {
            return Err(MeasureError::EmptySupport);
        }
        let mut merged: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
        for (m, w) in atoms {
            if !w.is_finite() || w <= 0.0 {
                return Err(MeasureError::BadWeight { weight: w });
            }
            if m.len() != rank {
                return Err(MeasureError::RankMismatch {
                    expected: rank,
                    found: m.len(),
                });
            }
            *merged.entry(m).or_insert(0.0) += w;
        }
        let atoms: Vec<(Vec<i64>, f64)> = merged.into_iter().collect();
        let total = atoms.iter().map(|(_, w)| w).sum();
        Ok(LatticeMeasure { rank, atoms, total })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn atoms(&self) -> &[(Vec<i64>, f64)] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.total
    }

    pub fn is_probability(&self) -> bool {
        (self.total - 1.0).abs() <= PROBABILITY_TOL
    }

    pub fn weight_of(&self, m: &[i64]) -> f64 {
        match self.atoms.binary_search_by(|(a, _)| a.as_slice().cmp(m)) {
            Ok(i) => self.atoms[i].1,
            Err(_) => 0.0,
        }
    }

    /// Σ m·w̄(m), the mean displacement vector.
    pub fn mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.rank];
        for (m, w) in &self.atoms {
            for (acc, &mi) in mean.iter_mut().zip(m) {
                *acc += mi as f64 * w;
            }
        }
        mean
    }

    /// Lattice convolution (ω*ν)(m) = Σ_s ω(s)ν(m−s).
    pub fn convolve(&self, other: &LatticeMeasure) -> Result<LatticeMeasure, MeasureError> {
        if self.rank != other.rank {
            return Err(MeasureError::RankMismatch {
                expected: self.rank,
                found: other.rank,
            });
        }
        let mut acc: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
        for (a, wa) in &self.atoms {
            for (b, wb) in &other.atoms {
                let sum: Vec<i64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                *acc.entry(sum).or_insert(0.0) += wa * wb;
            }
        }
        LatticeMeasure::from_atoms(self.rank, acc.into_iter().collect())
    }
}

/// Pushforward under π: sums weights over fibers, preserving total mass.
pub fn pushforward(mu: &FinMeasure) -> LatticeMeasure {
    let rank = mu.descriptor().abelianization_rank();
    let mut acc: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    for (g, w) in mu.atoms() {
        *acc.entry(g.project()).or_insert(0.0) += w;
    }
    LatticeMeasure {
        rank,
        total: acc.values().sum(),
        atoms: acc.into_iter().collect(),
    }
}

/// (1−eps)·μ + eps·δ_e; the standard device for producing an aperiodic walk.
pub fn lazify(mu: &FinMeasure, eps: f64) -> Result<FinMeasure, MeasureError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(MeasureError::EpsOutOfRange { eps });
    }
    let mut atoms: Vec<(GroupElement, f64)> = mu
        .atoms()
        .iter()
        .map(|(g, w)| (g.clone(), (1.0 - eps) * w))
        .collect();
    atoms.push((mu.descriptor().identity(), eps * mu.total_mass()));
    FinMeasure::from_atoms(mu.descriptor().clone(), atoms)
}

/// Finite-horizon aperiodicity evidence. Not a proof: the report records the
/// horizon and the observed pattern only.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AperiodicityReport {
    pub horizon: usize,
    /// Smallest n₀ ≤ horizon with μ*ⁿ(e) > 0 for all n ∈ [n₀, horizon].
    pub aperiodic_from: Option<usize>,
    /// gcd of { n ≤ horizon : μ*ⁿ(e) > 0 }; `None` when no returns observed.
    pub period: Option<usize>,
    pub note: String,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Scans μ*ⁿ(e) for n = 1..=horizon and classifies the zero pattern.
pub fn aperiodicity_check(
    table: &ConvolutionTable,
    horizon: usize,
) -> Result<AperiodicityReport, MeasureError> {
    if horizon == 0 || horizon > table.n_max() {
        return Err(MeasureError::BadHorizon {
            horizon,
            n_max: table.n_max(),
        });
    }
    let e = table.base().descriptor().identity();
    let mut positive: Vec<usize> = Vec::new();
    let mut last_zero: Option<usize> = None;
    for n in 1..=horizon {
        if table.probability_of(&e, n)?.is_zero() {
            last_zero = Some(n);
        } else {
            positive.push(n);
        }
    }
    let period = positive.iter().copied().reduce(gcd);
    // Aperiodicity evidence requires return times of gcd 1 AND a positive
    // suffix up to the horizon; a bare tail hit (e.g. the even horizon of a
    // period-2 walk) is not evidence.
    let aperiodic_from = match (period, last_zero) {
        (Some(1), None) => Some(1),
        (Some(1), Some(lz)) if lz < horizon => Some(lz + 1),
        _ => None,
    };
    let note = match (aperiodic_from, period) {
        (Some(n0), _) => format!(
            "μ*ⁿ(e) > 0 for all n in [{n0}, {horizon}]; finite-horizon evidence only, not a proof of aperiodicity"
        ),
        (None, Some(p)) if p >= 2 => format!(
            "returns observed only at multiples of {p} up to horizon {horizon}; period-{p} evidence, not a proof"
        ),
        (None, Some(_)) => format!(
            "irregular return pattern up to horizon {horizon}; evidence inconclusive"
        ),
        (None, None) => format!("no returns observed up to horizon {horizon}"),
    };
    Ok(AperiodicityReport {
        horizon,
        aperiodic_from,
        period,
        note,
    })
}

/// Bounded-horizon non-degeneracy certificate: BFS over products of support
/// letters up to the given length, checking that every standard generator
/// and its inverse is reached. Semigroup generation is undecidable in
/// general; `verified` only certifies the bounded search.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NondegeneracyReport {
    pub verified: bool,
    pub radius: usize,
    pub unreached: Vec<String>,
    pub note: String,
}

pub fn nondegeneracy_check(
    mu: &FinMeasure,
    radius: usize,
) -> Result<NondegeneracyReport, MeasureError> {
    use std::collections::HashSet;
    let mut reached: HashSet<GroupElement> = HashSet::new();
    let mut frontier: Vec<GroupElement> = mu.atoms().iter().map(|(g, _)| g.clone()).collect();
    for _ in 0..radius {
        let mut next = Vec::new();
        for g in frontier.drain(..) {
            if reached.insert(g.clone()) {
                for (s, _) in mu.atoms() {
                    next.push(g.multiply(s)?);
                }
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    for g in frontier {
        reached.insert(g);
    }

    let mut unreached: Vec<String> = mu
        .descriptor()
        .alphabet()
        .into_iter()
        .filter(|sym| !reached.contains(&sym.element))
        .map(|sym| sym.name)
        .collect();
    unreached.sort();
    let verified = unreached.is_empty();
    let note = if verified {
        format!(
            "all generators and inverses are products of ≤ {radius} support letters; bounded certificate only"
        )
    } else {
        format!(
            "targets {unreached:?} not reached by products of ≤ {radius} support letters; semigroup generation unverified at this radius"
        )
    };
    Ok(NondegeneracyReport {
        verified,
        radius,
        unreached,
        note,
    })
}

/// Product of n i.i.d. draws from μ. Deterministic given the seed: draws
/// come from SplitMix64 and atoms are scanned in canonical order.
pub fn sample_path(mu: &FinMeasure, n: usize, seed: u64) -> Result<GroupElement, MeasureError> {
    if !mu.is_probability() {
        return Err(MeasureError::NotProbability { total: mu.total });
    }
    let mut rng = SplitMix64::new(seed);
    let mut acc = mu.descriptor().identity();
    for _ in 0..n {
        acc = acc.multiply(draw(mu, &mut rng))?;
    }
    Ok(acc)
}

fn draw<'a>(mu: &'a FinMeasure, rng: &mut SplitMix64) -> &'a GroupElement {
    let u = rng.next_f64();
    let mut cum = 0.0;
    for (g, w) in mu.atoms() {
        cum += w;
        if u < cum {
            return g;
        }
    }
    &mu.atoms().last().expect("nonempty support").0
}

/// Fraction of `trials` independent length-n paths ending at `target`;
/// the Monte Carlo oracle for table values.
pub fn empirical_frequency(
    mu: &FinMeasure,
    target: &GroupElement,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<f64, MeasureError> {
    if !mu.is_probability() {
        return Err(MeasureError::NotProbability { total: mu.total });
    }
    let mut rng = SplitMix64::new(seed);
    let mut hits = 0usize;
    for _ in 0..trials {
        let mut acc = mu.descriptor().identity();
        for _ in 0..n {
            acc = acc.multiply(draw(mu, &mut rng))?;
        }
        if acc == *target {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials as f64)
}
