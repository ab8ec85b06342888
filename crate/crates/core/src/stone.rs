//! The abelianized moment generating function φ_μ(v) = Σ e^{⟨v,m⟩} μ̄(m),
//! its unique minimizer ξ, and the exponential tilt μ_ξ.
//!
//! With finite support φ is entire and strictly convex whenever the support
//! affinely spans through the origin, and the minimum value φ_μ(ξ) equals the
//! spectral radius λ(ℤᵏ, μ̄) of the abelianized walk. The minimizer exists iff
//! φ is coercive, i.e. iff 0 lies in the interior of the convex hull of the
//! support; that precondition (plus full ℤ-span, the lattice form of
//! non-degeneracy) is decided exactly in integer arithmetic before Newton
//! iteration starts.
//!
//! Tilting by ξ reweights μ_ξ(g) = φ(ξ)⁻¹ e^{⟨ξ,π(g)⟩} μ(g) on the same
//! support and centres the abelianized walk; the identity
//! μ_ξ*ⁿ(g) = φ(ξ)⁻ⁿ e^{⟨ξ,π(g)⟩} μ*ⁿ(g) is exact and lets one convolution
//! table serve both measures.

use thiserror::Error;

use crate::groups::GroupElement;
use crate::linalg;
use crate::measures::{FinMeasure, LatticeMeasure, MeasureError};
use crate::numeric::SplitMix64;

/// ‖∇φ‖₂ at which Newton iteration stops.
pub const GRAD_TOL: f64 = 1e-12;
/// Maximum Newton iterations before reporting failure.
pub const MAX_ITER: usize = 200;
/// Armijo sufficient-decrease constant for the backtracking line search.
const ARMIJO: f64 = 1e-4;
/// Below this Hessian eigenvalue estimate the step falls back to plain
/// gradient descent. Cannot trigger under the checked preconditions, but
/// keeps failure graceful.
const HESSIAN_FLOOR: f64 = 1e-14;
/// Restarted minimizations must agree with the primary run within this.
const RESTART_TOL: f64 = 1e-9;
/// Number of random restarts used to exercise uniqueness of the minimizer.
const RESTARTS: usize = 4;

#[derive(Debug, Error)]
pub enum StoneError {
    #[error("minimizer may not exist: 0 is not interior to the convex hull of the support of μ̄")]
    MinimizerMayNotExist,
    #[error("support of μ̄ does not span ℤᵏ over ℤ (non-degeneracy precondition)")]
    SupportSpanNotFull,
    #[error(
        "Newton iteration did not converge: ‖∇φ‖ = {grad_norm:.3e} after {iterations} iterations"
    )]
    DidNotConverge { grad_norm: f64, iterations: usize },
    #[error("restarted minimizations disagree by {spread:.3e} (> {RESTART_TOL:.0e}); uniqueness check failed")]
    RestartDisagreement { spread: f64 },
    #[error("vector has length {found}, expected rank {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Outcome of minimizing φ: the tilt vector ξ, the minimum value
/// φ_μ(ξ) = λ(Ḡ, μ̄), and optimizer diagnostics.
#[derive(Clone, Debug)]
pub struct TiltReport {
    pub xi: Vec<f64>,
    pub phi_min: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub hessian_min_eigenvalue_estimate: f64,
}

fn check_len(rank: usize, v: &[f64]) -> Result<(), StoneError> {
    if v.len() != rank {
        return Err(StoneError::DimensionMismatch {
            expected: rank,
            found: v.len(),
        });
    }
    Ok(())
}

fn dot(v: &[f64], m: &[i64]) -> f64 {
    v.iter().zip(m).map(|(a, &b)| a * b as f64).sum()
}

/// φ(v) = Σ_m e^{⟨v,m⟩} μ̄(m). Always finite: the sum is finite.
pub fn phi(mubar: &LatticeMeasure, v: &[f64]) -> f64 {
    mubar.atoms().iter().map(|(m, w)| dot(v, m).exp() * w).sum()
}

/// ∇φ(v) = Σ_m m e^{⟨v,m⟩} μ̄(m).
pub fn grad_phi(mubar: &LatticeMeasure, v: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; mubar.rank()];
    for (m, w) in mubar.atoms() {
        let f = dot(v, m).exp() * w;
        for (gi, &mi) in g.iter_mut().zip(m) {
            *gi += mi as f64 * f;
        }
    }
    g
}

/// Hess φ(v) = Σ_m m mᵀ e^{⟨v,m⟩} μ̄(m); positive semidefinite everywhere.
pub fn hessian_phi(mubar: &LatticeMeasure, v: &[f64]) -> Vec<Vec<f64>> {
    let k = mubar.rank();
    let mut h = vec![vec![0.0; k]; k];
    for (m, w) in mubar.atoms() {
        let f = dot(v, m).exp() * w;
        for i in 0..k {
            for j in 0..k {
                h[i][j] += m[i] as f64 * m[j] as f64 * f;
            }
        }
    }
    h
}

/// The coercivity / non-degeneracy precondition of the minimizer: the
/// support must span ℤᵏ over ℤ and contain 0 strictly inside its hull.
pub fn coercivity_check(mubar: &LatticeMeasure) -> Result<(), StoneError> {
    let k = mubar.rank();
    let points: Vec<Vec<i64>> = mubar.atoms().iter().map(|(m, _)| m.clone()).collect();
    if !linalg::origin_interior_of_hull(&points, k) {
        return Err(StoneError::MinimizerMayNotExist);
    }
    if !linalg::integer_span_is_full(&points, k) {
        return Err(StoneError::SupportSpanNotFull);
    }
    Ok(())
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct NewtonOutcome {
    xi: Vec<f64>,
    grad_norm: f64,
    iterations: usize,
    hessian_min_eig: f64,
}

fn newton_from(mubar: &LatticeMeasure, start: Vec<f64>) -> Result<NewtonOutcome, StoneError> {
    let mut v = start;
    for iter in 0..MAX_ITER {
        let g = grad_phi(mubar, &v);
        let gn = norm2(&g);
        if gn <= GRAD_TOL {
            let h = hessian_phi(mubar, &v);
            return Ok(NewtonOutcome {
                xi: v,
                grad_norm: gn,
                iterations: iter,
                hessian_min_eig: linalg::min_eigenvalue(&h),
            });
        }
        let h = hessian_phi(mubar, &v);
        let eig_min = linalg::min_eigenvalue(&h);
        let neg_g: Vec<f64> = g.iter().map(|x| -x).collect();
        let direction = if eig_min < HESSIAN_FLOOR {
            neg_g.clone()
        } else {
            linalg::solve(&h, &neg_g).unwrap_or(neg_g.clone())
        };
        let slope: f64 = g.iter().zip(&direction).map(|(a, b)| a * b).sum();
        // A non-descent direction can only come from numerical breakdown;
        // fall back to the gradient.
        let (direction, slope) = if slope < 0.0 {
            (direction, slope)
        } else {
            let s = -gn * gn;
            (neg_g, s)
        };

        let base = phi(mubar, &v);
        let mut step = 1.0;
        for _ in 0..80 {
            let trial: Vec<f64> = v
                .iter()
                .zip(&direction)
                .map(|(x, d)| x + step * d)
                .collect();
            let value = phi(mubar, &trial);
            if value <= base + ARMIJO * step * slope {
                v = trial;
                break;
            }
            step *= 0.5;
        }
    }
    let gn = norm2(&grad_phi(mubar, &v));
    Err(StoneError::DidNotConverge {
        grad_norm: gn,
        iterations: MAX_ITER,
    })
}

/// Finds the unique minimizer ξ of φ by damped Newton iteration from v = 0,
/// after the exact coercivity precheck. Uniqueness is exercised by
/// reconverging from four random starts with ‖v‖ ≤ 2 and demanding agreement
/// within 1e−9.
pub fn minimize_phi(mubar: &LatticeMeasure) -> Result<TiltReport, StoneError> {
    coercivity_check(mubar)?;
    let k = mubar.rank();
    let primary = newton_from(mubar, vec![0.0; k])?;

    let mut rng = SplitMix64::new(0x5EED_0001);
    let mut spread = 0.0f64;
    for _ in 0..RESTARTS {
        let mut u: Vec<f64> = (0..k).map(|_| rng.next_symmetric()).collect();
        let n = norm2(&u).max(0.5);
        for x in u.iter_mut() {
            *x *= 2.0 / n;
        }
        let restart = newton_from(mubar, u)?;
        let dist = primary
            .xi
            .iter()
            .zip(&restart.xi)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        spread = spread.max(dist);
    }
    if spread > RESTART_TOL {
        return Err(StoneError::RestartDisagreement { spread });
    }

    Ok(TiltReport {
        phi_min: phi(mubar, &primary.xi),
        xi: primary.xi,
        grad_norm: primary.grad_norm,
        iterations: primary.iterations,
        hessian_min_eigenvalue_estimate: primary.hessian_min_eig,
    })
}

/// μ_ξ(g) = φ(ξ)⁻¹ e^{⟨ξ,π(g)⟩} μ(g): a probability measure with the same
/// support. φ(ξ) is evaluated over the same atoms in the same order, so the
/// tilted mass is one to rounding.
pub fn tilt_measure(mu: &FinMeasure, xi: &[f64]) -> Result<FinMeasure, StoneError> {
    let rank = mu.descriptor().abelianization_rank();
    check_len(rank, xi)?;
    let factors: Vec<(GroupElement, f64)> = mu
        .atoms()
        .iter()
        .map(|(g, w)| {
            let f = dot(xi, &g.project()).exp() * w;
            (g.clone(), f)
        })
        .collect();
    let phi_xi: f64 = factors.iter().map(|(_, f)| f).sum();
    let atoms: Vec<(GroupElement, f64)> =
        factors.into_iter().map(|(g, f)| (g, f / phi_xi)).collect();
    Ok(FinMeasure::from_atoms(mu.descriptor().clone(), atoms)?)
}

/// Centredness report: the mean vector Σ m μ̄(m) and whether its max-norm is
/// ≤ 1e−12. Rank 0 counts as centred.
#[derive(Clone, Debug, PartialEq)]
pub struct CentredReport {
    pub mean: Vec<f64>,
    pub centred: bool,
}

pub fn is_centred(mubar: &LatticeMeasure) -> CentredReport {
    let mean = mubar.mean();
    let max_norm = mean.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    CentredReport {
        centred: max_norm <= 1e-12,
        mean,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{GroupDescriptor, GroupElement};
    use crate::measures::{power_sequence, pushforward, FinMeasure};

    fn z1_measure(p: f64) -> LatticeMeasure {
        LatticeMeasure::from_atoms(1, vec![(vec![1], p), (vec![-1], 1.0 - p)]).unwrap()
    }

    fn heis_bar() -> LatticeMeasure {
        LatticeMeasure::from_atoms(
            2,
            vec![
                (vec![1, 0], 0.4),
                (vec![-1, 0], 0.1),
                (vec![0, 1], 0.3),
                (vec![0, -1], 0.2),
            ],
        )
        .unwrap()
    }

    #[test]
    fn phi_at_zero_is_total_mass() {
        assert!((phi(&z1_measure(0.75), &[0.0]) - 1.0).abs() < 1e-15);
        assert!((phi(&heis_bar(), &[0.0, 0.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn phi_hand_value() {
        // 0.75·2 + 0.25·0.5 = 1.625 at v = ln 2.
        let v = [2.0f64.ln()];
        assert!((phi(&z1_measure(0.75), &v) - 1.625).abs() < 1e-12);
    }

    #[test]
    fn gradient_examples() {
        let g = grad_phi(&z1_measure(0.5), &[0.0]);
        assert!(g[0].abs() < 1e-15);
        let g = grad_phi(&z1_measure(0.75), &[0.0]);
        assert!((g[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mubar = heis_bar();
        let mut rng = SplitMix64::new(2024);
        let h = 1e-6;
        for _ in 0..20 {
            let v: Vec<f64> = (0..2).map(|_| rng.next_symmetric()).collect();
            let g = grad_phi(&mubar, &v);
            let hess = hessian_phi(&mubar, &v);
            for i in 0..2 {
                let mut vp = v.clone();
                let mut vm = v.clone();
                vp[i] += h;
                vm[i] -= h;
                let fd = (phi(&mubar, &vp) - phi(&mubar, &vm)) / (2.0 * h);
                assert!(
                    (fd - g[i]).abs() <= 1e-6 * g[i].abs().max(1.0),
                    "grad fd mismatch: {fd} vs {}",
                    g[i]
                );
                let fd_grad_p = grad_phi(&mubar, &vp);
                let fd_grad_m = grad_phi(&mubar, &vm);
                for j in 0..2 {
                    let fd2 = (fd_grad_p[j] - fd_grad_m[j]) / (2.0 * h);
                    assert!(
                        (fd2 - hess[i][j]).abs() <= 1e-6 * hess[i][j].abs().max(1.0),
                        "hessian fd mismatch at ({i},{j})"
                    );
                }
            }
        }
    }

    #[test]
    fn symmetric_walk_minimizes_at_zero() {
        let report = minimize_phi(&z1_measure(0.5)).unwrap();
        assert!(report.xi[0].abs() < 1e-10);
        assert!((report.phi_min - 1.0).abs() < 1e-12);
        assert!(report.grad_norm <= GRAD_TOL);
    }

    #[test]
    fn biased_z_walk_closed_form() {
        // ξ = ½ ln(q/p), φ_min = 2√(pq) for p·eᵛ + q·e⁻ᵛ.
        let report = minimize_phi(&z1_measure(0.75)).unwrap();
        let xi_exact = 0.5 * (0.25f64 / 0.75).ln();
        let phi_exact = 2.0 * (0.75f64 * 0.25).sqrt();
        assert!((report.xi[0] - xi_exact).abs() < 1e-9);
        assert!((report.phi_min - phi_exact).abs() < 1e-9);
    }

    #[test]
    fn heisenberg_pushforward_closed_form() {
        // Coordinates separate: per-coordinate two-point closed form.
        let report = minimize_phi(&heis_bar()).unwrap();
        let xi1 = 0.5 * (0.1f64 / 0.4).ln();
        let xi2 = 0.5 * (0.2f64 / 0.3).ln();
        let phi_exact = 2.0 * (0.4f64 * 0.1).sqrt() + 2.0 * (0.3f64 * 0.2).sqrt();
        assert!((report.xi[0] - xi1).abs() < 1e-9);
        assert!((report.xi[1] - xi2).abs() < 1e-9);
        assert!((report.phi_min - phi_exact).abs() < 1e-9);
        assert!(report.hessian_min_eigenvalue_estimate > 0.0);
    }

    #[test]
    fn minimum_is_global_against_random_probes() {
        let mubar = heis_bar();
        let report = minimize_phi(&mubar).unwrap();
        let mut rng = SplitMix64::new(7);
        for _ in 0..100 {
            let v: Vec<f64> = (0..2).map(|_| 2.0 * rng.next_symmetric()).collect();
            let dist: f64 = v
                .iter()
                .zip(&report.xi)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let value = phi(&mubar, &v);
            assert!(value >= report.phi_min - 1e-12);
            if dist > 1e-3 {
                assert!(
                    value > report.phi_min,
                    "φ not strictly larger at distance {dist}"
                );
            }
        }
    }

    #[test]
    fn coercivity_failures_are_reported() {
        let one_sided = LatticeMeasure::from_atoms(1, vec![(vec![1], 1.0)]).unwrap();
        assert!(matches!(
            minimize_phi(&one_sided),
            Err(StoneError::MinimizerMayNotExist)
        ));
        // {±2} spans 2ℤ only: hull is fine, span is not.
        let even = LatticeMeasure::from_atoms(1, vec![(vec![2], 0.5), (vec![-2], 0.5)]).unwrap();
        assert!(matches!(
            minimize_phi(&even),
            Err(StoneError::SupportSpanNotFull)
        ));
        // Rank-deficient in ℤ²: all support on a line.
        let line =
            LatticeMeasure::from_atoms(2, vec![(vec![1, 1], 0.5), (vec![-1, -1], 0.5)]).unwrap();
        assert!(matches!(
            minimize_phi(&line),
            Err(StoneError::MinimizerMayNotExist)
        ));
    }

    #[test]
    fn tilt_examples() {
        let d = GroupDescriptor::lattice(1).unwrap();
        let mu = FinMeasure::from_atoms(
            d,
            vec![
                (GroupElement::Lattice(vec![1]), 0.75),
                (GroupElement::Lattice(vec![-1]), 0.25),
            ],
        )
        .unwrap();
        // ξ = 0 leaves the measure unchanged.
        let same = tilt_measure(&mu, &[0.0]).unwrap();
        for ((g1, w1), (g2, w2)) in same.atoms().iter().zip(mu.atoms()) {
            assert_eq!(g1, g2);
            assert!((w1 - w2).abs() < 1e-15);
        }
        // The optimal tilt symmetrizes the biased walk.
        let report = minimize_phi(&pushforward(&mu)).unwrap();
        let tilted = tilt_measure(&mu, &report.xi).unwrap();
        assert!((tilted.weight_of(&GroupElement::Lattice(vec![1])) - 0.5).abs() < 1e-12);
        assert!((tilted.weight_of(&GroupElement::Lattice(vec![-1])) - 0.5).abs() < 1e-12);
        assert!(tilted.is_probability());
    }

    #[test]
    fn tilted_measure_is_centred() {
        let d = GroupDescriptor::heisenberg();
        let mu = FinMeasure::from_words(
            d.clone(),
            &[
                ("a".into(), 0.4),
                ("a-".into(), 0.1),
                ("b".into(), 0.3),
                ("b-".into(), 0.2),
            ],
        )
        .unwrap();
        let report = minimize_phi(&pushforward(&mu)).unwrap();
        let tilted = tilt_measure(&mu, &report.xi).unwrap();
        let mean = pushforward(&tilted).mean();
        for c in mean {
            assert!(c.abs() <= 1e-10, "tilted mean component {c}");
        }
    }

    #[test]
    fn tilt_identity_on_heisenberg_powers() {
        let d = GroupDescriptor::heisenberg();
        let mu = FinMeasure::from_words(
            d.clone(),
            &[
                ("a".into(), 0.4),
                ("a-".into(), 0.1),
                ("b".into(), 0.3),
                ("b-".into(), 0.2),
            ],
        )
        .unwrap();
        let report = minimize_phi(&pushforward(&mu)).unwrap();
        let tilted = tilt_measure(&mu, &report.xi).unwrap();
        let t_mu = power_sequence(&mu, 6, false).unwrap();
        let t_xi = power_sequence(&tilted, 6, false).unwrap();
        let e = mu.descriptor().identity();
        // μ_ξ*⁶(e)·φ(ξ)⁶ = μ*⁶(e) to 1e−12 relative.
        let lhs = t_xi.probability_of(&e, 6).unwrap().value() * report.phi_min.powi(6);
        let rhs = t_mu.probability_of(&e, 6).unwrap().value();
        assert!(((lhs - rhs) / rhs).abs() < 1e-12);
    }

    #[test]
    fn centredness_examples() {
        let sym = is_centred(&z1_measure(0.5));
        assert!(sym.centred);
        let biased = is_centred(&z1_measure(0.75));
        assert!(!biased.centred);
        assert!((biased.mean[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn centred_iff_xi_zero_iff_phi_min_one() {
        for (mubar, expect_centred) in [(z1_measure(0.5), true), (z1_measure(0.75), false)] {
            let centred = is_centred(&mubar).centred;
            assert_eq!(centred, expect_centred);
            let report = minimize_phi(&mubar).unwrap();
            let xi_zero = report.xi.iter().all(|x| x.abs() <= 1e-8);
            let phi_one = (report.phi_min - 1.0).abs() <= 1e-10;
            assert_eq!(centred, xi_zero);
            assert_eq!(centred, phi_one);
        }
    }

    #[test]
    fn dimension_mismatch_reported() {
        let d = GroupDescriptor::heisenberg();
        let mu = FinMeasure::from_words(d.clone(), &[("a".into(), 1.0)]).unwrap();
        assert!(matches!(
            tilt_measure(&mu, &[0.1]),
            Err(StoneError::DimensionMismatch { .. })
        ));
    }
}
