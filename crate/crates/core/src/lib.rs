//! Random walks on finitely generated groups: convolution powers, spectral
//! radius estimation, and ratio-limit diagnostics.
//!
//! The crate computes exact convolution powers μ*ⁿ of a finitely supported
//! probability measure μ on one of several built-in groups (lattices ℤᵏ, free
//! groups, the discrete Heisenberg group, the lamplighter group ℤ₂ ≀ ℤ and the
//! solvable Baumslag–Solitar group BS(1,2)), and from them estimates the
//! spectral radius λ(G,μ) = limsup (μ*ⁿ(e))^{1/n}.
//!
//! On the abelianization side it minimizes the moment generating function
//! φ_μ(v) = Σ e^{⟨v,π(g)⟩} μ(g) over v ∈ ℝᵏ, whose minimum value equals the
//! abelianized spectral radius λ(Ḡ,μ̄). Comparing the two estimates gives
//! numerical evidence for or against the equality λ(G,μ) = λ(Ḡ,μ̄), which
//! characterises amenability of G for non-degenerate walks. The minimizer ξ
//! drives exponential tilting μ_ξ, harmonicity checks of g ↦ e^{⟨ξ,π(g)⟩},
//! ratio-limit tables μ*ⁿ(g)/μ*ⁿ(e) → e^{−⟨ξ,π(g)⟩}, and the shift-space
//! machinery (loop-cylinder measures, finite-n Gurevič pressure, large
//! deviation tails) used to cross-validate the equidistribution predictions.
//!
//! Module map:
//! - [`groups`]: group elements in canonical normal form, word evaluation,
//!   and the torsion-free abelianization homomorphism π : G → ℤᵏ.
//! - [`measures`]: finitely supported measures, convolution power tables,
//!   pushforwards to ℤᵏ, aperiodicity/non-degeneracy evidence, path sampling.
//! - [`stone`]: φ_μ and its gradient/Hessian, the Newton minimizer, tilted
//!   measures, and the centredness test.
//! - [`spectral`]: return-probability estimators, Gerl ratios, Richardson
//!   extrapolation, the amenability verdict, harmonicity residuals, the ζ(t)
//!   series diagnostic, and an exact radial oracle for free groups.
//! - [`shift`]: cylinder measures m_n and ν_ξ on the full shift over the
//!   support alphabet, finite-n pressure, and large-deviation tail masses.
//! - [`config`], [`cache`], [`pipeline`]: the declarative experiment runner
//!   behind the CLI (JSON config in, JSON/CSV/plot-data out, cached tables).

pub mod cache;
pub mod config;
pub mod groups;
pub mod linalg;
pub mod measures;
pub mod numeric;
pub mod pipeline;
pub mod shift;
pub mod spectral;
pub mod stone;

pub use config::ExperimentConfig;
pub use groups::{GroupDescriptor, GroupElement};
pub use measures::{ConvolutionTable, FinMeasure, LatticeMeasure};
pub use numeric::LogValue;
pub use pipeline::{run, RunOptions, RunReport};
pub use shift::CylinderWord;
pub use spectral::{SpectralReport, Verdict};
pub use stone::TiltReport;
