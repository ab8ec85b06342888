//! The experiment runner: config in, verdicts and sequence files out.
//!
//! Pipeline order: bounded checks → pushforward → mgf minimization → tilt →
//! one convolution table for the tilted measure → spectral report → ratio
//! table → cylinder equidistribution. Only the tilted table is ever built:
//! μ*ⁿ(g) = φ(ξ)ⁿ e^{−⟨ξ,π(g)⟩} μ_ξ*ⁿ(g) is exact, so both measures read
//! from it. Ratio and equidistribution stages run only when the walk shows
//! aperiodicity evidence (or was made lazy); a periodic walk skips them with
//! an explanation instead of failing.
//!
//! Reports are deterministic: identical config and seed reproduce
//! byte-identical JSON, and every numeric claim is recomputable from the
//! cached table alone.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::cache::{self, CacheLoad};
use crate::config::{ConfigError, ExperimentConfig, OutputFormats, ValidatedExperiment};
use crate::groups::GroupElement;
use crate::measures::{
    aperiodicity_check, lazify, nondegeneracy_check, power_sequence_with_cap, pushforward,
    AperiodicityReport, ConvolutionTable, MeasureError, NondegeneracyReport,
};
use crate::numeric::LogValue;
use crate::shift::{
    equidist_report, nu_xi_cylinder, pressure_finite_n, CylinderWord, EquidistReport, ShiftError,
};
use crate::spectral::{build_spectral_report, SpectralError, SpectralReport, SpectralRow, Verdict};
use crate::stone::{is_centred, minimize_phi, tilt_measure, StoneError};

/// Radius used by the bounded non-degeneracy certificate.
const NONDEGENERACY_RADIUS: usize = 6;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Stone(#[from] StoneError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Shift(#[from] ShiftError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Cache(#[from] crate::cache::CacheError),
}

impl PipelineError {
    /// CLI exit code: 2 for configuration errors, 3 for resource-cap
    /// failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Shift(ShiftError::LetterOutsideSupport { .. }) => 2,
            PipelineError::Measure(MeasureError::SupportCapExceeded { .. }) => 3,
            PipelineError::Shift(ShiftError::EnumerationGuard { .. }) => 3,
            _ => 1,
        }
    }
}

/// Which optional stages to run; checks and the mgf minimization always run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StageSet {
    pub spectral: bool,
    pub ratio: bool,
    pub equidist: bool,
}

impl StageSet {
    pub fn all() -> Self {
        StageSet {
            spectral: true,
            ratio: true,
            equidist: true,
        }
    }

    pub fn none() -> Self {
        StageSet {
            spectral: false,
            ratio: false,
            equidist: false,
        }
    }

    pub fn only_spectral() -> Self {
        StageSet {
            spectral: true,
            ..Self::none()
        }
    }

    pub fn only_ratio() -> Self {
        StageSet {
            ratio: true,
            ..Self::none()
        }
    }

    pub fn only_equidist() -> Self {
        StageSet {
            equidist: true,
            ..Self::none()
        }
    }

    fn needs_table(&self) -> bool {
        self.spectral || self.ratio || self.equidist
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub seed: u64,
    pub use_cache: bool,
    pub stages: StageSet,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            seed: 0,
            use_cache: true,
            stages: StageSet::all(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TiltSummary {
    pub xi: Vec<f64>,
    pub phi_min: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct CentredSummary {
    pub mean: Vec<f64>,
    pub centred: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralSummary {
    pub n_max: usize,
    pub period: Option<usize>,
    pub lambda_bar: f64,
    pub extrapolated_lambda: Option<f64>,
    pub extrapolation_residual: Option<f64>,
    pub fekete_lower: Option<f64>,
    pub gap: Option<f64>,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub note: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioEntry {
    pub word: String,
    pub projection: Vec<i64>,
    /// e^{−⟨ξ,π(g)⟩}, computed from the tilt vector and π only.
    pub predicted_limit: f64,
    pub final_n: usize,
    pub final_ratio: f64,
    pub final_relative_deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioStage {
    pub note: String,
    pub entries: Vec<RatioEntry>,
}

/// Finite-n pressure diagnostics attached to one cylinder: P_n(0) should
/// vanish and the derivative at 0 should recover ν_ξ(\[u\]).
#[derive(Clone, Debug, Serialize)]
pub struct PressureSummary {
    pub n: usize,
    pub p_at_zero: f64,
    pub derivative_at_zero: f64,
    pub nu_xi: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquidistStage {
    pub cylinder: Vec<String>,
    pub nu_xi: f64,
    pub rows_computed: usize,
    pub final_n: usize,
    pub final_m_n: f64,
    pub final_deviation: f64,
    pub max_final_quartile_deviation: f64,
    pub trend_slope: f64,
    pub trend_downward: bool,
    /// Present when the support is small enough for exact enumeration.
    pub pressure: Option<PressureSummary>,
}

/// The JSON-facing run summary. Field order is declaration order and stays
/// stable across runs.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub report_version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub group: String,
    pub abelianization_rank: usize,
    pub support_size: usize,
    pub lazify_eps: Option<f64>,
    pub nondegeneracy: NondegeneracyReport,
    pub aperiodicity: Option<AperiodicityReport>,
    pub tilt: TiltSummary,
    pub centred: CentredSummary,
    pub spectral: Option<SpectralSummary>,
    pub ratio: Option<RatioStage>,
    pub equidist: Option<Vec<EquidistStage>>,
    pub skipped_stages: Vec<String>,
    pub verdict: Option<Verdict>,
    pub config: ExperimentConfig,
}

/// Ratio rows for one test element: (word, predicted limit, per-n ratios).
pub type RatioRows = (String, f64, Vec<(usize, f64)>);

/// Per-n sequences backing the CSV and plot outputs.
#[derive(Clone, Debug, Default)]
pub struct RunData {
    pub spectral_rows: Vec<SpectralRow>,
    pub ratio_rows: Vec<RatioRows>,
    pub equidist_reports: Vec<(Vec<String>, EquidistReport)>,
    /// Per-cylinder pressure scans: (cylinder index, rows of (t, P_n(t))).
    pub pressure_scans: Vec<(usize, usize, Vec<(f64, f64)>)>,
}

/// Report plus sequence data; `emit` writes both.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: RunReport,
    pub data: RunData,
}

/// Return probabilities of μ derived from the tilted table via the exact
/// tilt identity μ*ⁿ(e) = φ(ξ)ⁿ μ_ξ*ⁿ(e).
fn derived_mu_returns(table_xi: &ConvolutionTable, lambda_bar: f64) -> Vec<LogValue> {
    let log_lambda = lambda_bar.ln();
    table_xi
        .return_sequence()
        .iter()
        .enumerate()
        .map(|(n, p)| {
            if p.is_zero() {
                LogValue::ZERO
            } else {
                LogValue::new(p.mantissa, p.log_scale + n as f64 * log_lambda)
            }
        })
        .collect()
}

/// Runs the pipeline for a config. Deterministic given (config, seed).
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutput, PipelineError> {
    let validated: ValidatedExperiment = config.validate()?;
    let mu = match validated.lazify_eps {
        Some(eps) => lazify(&validated.base_measure, eps)?,
        None => validated.base_measure.clone(),
    };

    let nondegeneracy = nondegeneracy_check(&mu, NONDEGENERACY_RADIUS)?;
    let mubar = pushforward(&mu);
    let centred = is_centred(&mubar);
    let tilt = minimize_phi(&mubar)?;
    let lambda_bar = tilt.phi_min;
    let mu_xi = tilt_measure(&mu, &tilt.xi)?;

    let mut skipped: Vec<String> = Vec::new();
    let mut aperiodicity: Option<AperiodicityReport> = None;
    let mut spectral_summary: Option<SpectralSummary> = None;
    let mut ratio_stage: Option<RatioStage> = None;
    let mut equidist_stage: Option<Vec<EquidistStage>> = None;
    let mut data = RunData::default();
    let mut verdict: Option<Verdict> = None;

    if opts.stages.needs_table() {
        let table = obtain_table(&validated, &mu_xi, opts)?;
        let aperiodic = aperiodicity_check(&table, validated.n_max)?;
        let mu_returns = derived_mu_returns(&table, lambda_bar);

        if opts.stages.spectral {
            let report: SpectralReport =
                build_spectral_report(&mu_returns, lambda_bar, validated.tolerance);
            verdict = Some(report.verdict);
            spectral_summary = Some(SpectralSummary {
                n_max: report.n_max,
                period: report.period,
                lambda_bar: report.lambda_bar,
                extrapolated_lambda: report.extrapolated_lambda,
                extrapolation_residual: report.extrapolation_residual,
                fekete_lower: report.fekete_lower,
                gap: report.gap,
                tolerance: report.tolerance,
                verdict: report.verdict,
                note: report.note.clone(),
            });
            data.spectral_rows = report.rows;
        }

        let aperiodic_evidence = aperiodic.aperiodic_from.is_some();
        if opts.stages.ratio {
            if aperiodic_evidence {
                ratio_stage = Some(build_ratio_stage(
                    &table,
                    &validated.test_elements,
                    &tilt.xi,
                    verdict,
                    &mut data,
                )?);
            } else {
                skipped.push(format!(
                    "ratio: no aperiodicity evidence ({}); set options.lazify_eps to make the walk aperiodic",
                    aperiodic.note
                ));
            }
        }
        if opts.stages.equidist {
            if validated.cylinders.is_empty() {
                skipped.push("equidist: no cylinders configured".into());
            } else if aperiodic_evidence {
                equidist_stage = Some(build_equidist_stage(
                    &table,
                    &validated.cylinders,
                    &mut data,
                )?);
            } else {
                skipped.push(format!(
                    "equidist: no aperiodicity evidence ({}); set options.lazify_eps to make the walk aperiodic",
                    aperiodic.note
                ));
            }
        }
        aperiodicity = Some(aperiodic);
    }

    let report = RunReport {
        report_version: 1,
        config_hash: config.content_hash(),
        seed: opts.seed,
        group: validated.descriptor.canonical_name(),
        abelianization_rank: validated.descriptor.abelianization_rank(),
        support_size: mu.support_size(),
        lazify_eps: validated.lazify_eps,
        nondegeneracy,
        aperiodicity,
        tilt: TiltSummary {
            xi: tilt.xi.clone(),
            phi_min: tilt.phi_min,
            grad_norm: tilt.grad_norm,
            iterations: tilt.iterations,
        },
        centred: CentredSummary {
            mean: centred.mean,
            centred: centred.centred,
        },
        spectral: spectral_summary,
        ratio: ratio_stage,
        equidist: equidist_stage,
        skipped_stages: skipped,
        verdict,
        config: config.clone(),
    };
    Ok(RunOutput { report, data })
}

fn obtain_table(
    validated: &ValidatedExperiment,
    mu_xi: &crate::measures::FinMeasure,
    opts: &RunOptions,
) -> Result<ConvolutionTable, PipelineError> {
    if let (true, Some(dir)) = (opts.use_cache, validated.cache_dir.as_deref()) {
        if let CacheLoad::Hit(table) = cache::load_table(dir, mu_xi, validated.n_max, true) {
            return Ok(table);
        }
        let table = power_sequence_with_cap(mu_xi, validated.n_max, true, validated.support_cap)?;
        cache::store_table(dir, &table)?;
        Ok(table)
    } else {
        Ok(power_sequence_with_cap(
            mu_xi,
            validated.n_max,
            true,
            validated.support_cap,
        )?)
    }
}

fn build_ratio_stage(
    table_xi: &ConvolutionTable,
    test_elements: &[(String, GroupElement)],
    xi: &[f64],
    verdict: Option<Verdict>,
    data: &mut RunData,
) -> Result<RatioStage, PipelineError> {
    let e = table_xi.base().descriptor().identity();
    let mut entries = Vec::new();
    for (word, g) in test_elements {
        let projection = g.project();
        let inner: f64 = xi.iter().zip(&projection).map(|(a, &b)| a * b as f64).sum();
        let predicted = (-inner).exp();
        let mut rows: Vec<(usize, f64)> = Vec::new();
        for n in 1..=table_xi.n_max() {
            let num = table_xi.probability_of(g, n)?;
            let den = table_xi.probability_of(&e, n)?;
            if num.is_zero() || den.is_zero() {
                continue;
            }
            // μ*ⁿ(g)/μ*ⁿ(e) = e^{−⟨ξ,π(g)⟩} · μ_ξ*ⁿ(g)/μ_ξ*ⁿ(e)
            rows.push((n, predicted * (num.ln() - den.ln()).exp()));
        }
        if let Some(&(final_n, final_ratio)) = rows.last() {
            entries.push(RatioEntry {
                word: word.clone(),
                projection,
                predicted_limit: predicted,
                final_n,
                final_ratio,
                final_relative_deviation: (final_ratio / predicted - 1.0).abs(),
            });
        } else {
            entries.push(RatioEntry {
                word: word.clone(),
                projection,
                predicted_limit: predicted,
                final_n: 0,
                final_ratio: 0.0,
                final_relative_deviation: 0.0,
            });
        }
        data.ratio_rows.push((word.clone(), predicted, rows));
    }
    let note = match verdict {
        Some(Verdict::GapDetected) => {
            "spectral gap detected: the predicted limits e^{-<xi,pi(g)>} assume amenability and are reported for inspection only".to_string()
        }
        Some(Verdict::AmenableConsistent) => {
            "amenable-consistent spectral comparison: ratios are expected to approach e^{-<xi,pi(g)>}".to_string()
        }
        _ => "predicted limits e^{-<xi,pi(g)>} apply when the group is amenable and the walk aperiodic".to_string(),
    };
    Ok(RatioStage { note, entries })
}

/// Largest n ≤ 10 (and ≤ n_max) whose exact enumeration stays below 10⁶
/// words; `None` when even n = 2 is too large.
fn pressure_scan_horizon(support: usize, n_max: usize) -> Option<usize> {
    (2..=n_max.min(10))
        .rev()
        .find(|&n| (support as f64).powi(n as i32) <= 1e6)
}

fn build_equidist_stage(
    table_xi: &ConvolutionTable,
    cylinders: &[(Vec<String>, Vec<GroupElement>)],
    data: &mut RunData,
) -> Result<Vec<EquidistStage>, PipelineError> {
    let mu_xi = table_xi.base();
    let mut stages = Vec::new();
    for (idx, (words, letters)) in cylinders.iter().enumerate() {
        let u = CylinderWord::new(letters.clone()).map_err(PipelineError::Shift)?;
        let report = equidist_report(table_xi, &u, u.len(), table_xi.n_max())?;
        let last = report.rows.last().expect("nonempty rows");

        let pressure = match pressure_scan_horizon(mu_xi.support_size(), table_xi.n_max()) {
            Some(n) if n >= u.len() => {
                let mut scan = Vec::with_capacity(11);
                for i in -5i32..=5 {
                    let t = i as f64 / 10.0;
                    scan.push((t, pressure_finite_n(mu_xi, &u, t, n)?));
                }
                let h = 1e-4;
                let derivative = (pressure_finite_n(mu_xi, &u, h, n)?
                    - pressure_finite_n(mu_xi, &u, -h, n)?)
                    / (2.0 * h);
                let summary = PressureSummary {
                    n,
                    p_at_zero: pressure_finite_n(mu_xi, &u, 0.0, n)?,
                    derivative_at_zero: derivative,
                    nu_xi: nu_xi_cylinder(mu_xi, &u)?,
                };
                data.pressure_scans.push((idx, n, scan));
                Some(summary)
            }
            _ => None,
        };

        stages.push(EquidistStage {
            cylinder: words.clone(),
            nu_xi: report.nu_xi,
            rows_computed: report.rows.len(),
            final_n: last.n,
            final_m_n: last.m_n,
            final_deviation: last.deviation,
            max_final_quartile_deviation: report.max_final_quartile_deviation,
            trend_slope: report.trend_slope,
            trend_downward: report.trend_downward,
            pressure,
        });
        data.equidist_reports.push((words.clone(), report));
    }
    Ok(stages)
}

fn write_file(path: &Path, contents: &str) -> Result<(), PipelineError> {
    let mut f = std::fs::File::create(path).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })?;
    f.write_all(contents.as_bytes())
        .map_err(|source| PipelineError::Io {
            path: path.display().to_string(),
            source,
        })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the report and sequence files into `dir` according to the
/// config's output formats. Returns the paths written, in a fixed order.
pub fn emit(output: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let formats: OutputFormats = output
        .report
        .config
        .validate()
        .map(|v| v.formats)
        .unwrap_or_default();
    std::fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut written = Vec::new();

    if formats.json {
        let path = dir.join("report.json");
        let mut text = serde_json::to_string_pretty(&output.report).expect("report serializes");
        text.push('\n');
        write_file(&path, &text)?;
        written.push(path);
    }

    if formats.csv {
        if !output.data.spectral_rows.is_empty() {
            let path = dir.join("spectral.csv");
            let mut text =
                String::from("n,return_prob_mantissa,return_prob_log10,root_estimate,gerl_ratio\n");
            for row in &output.data.spectral_rows {
                text.push_str(&format!(
                    "{},{},{},{},{}\n",
                    row.n,
                    row.return_mantissa,
                    fmt_opt(row.return_log10),
                    fmt_opt(row.root_estimate),
                    fmt_opt(row.gerl_ratio),
                ));
            }
            write_file(&path, &text)?;
            written.push(path);
        }
        for (i, (word, predicted, rows)) in output.data.ratio_rows.iter().enumerate() {
            let path = dir.join(format!("ratio-{i}.csv"));
            let mut text = format!("# element: {word}\nn,ratio,predicted,relative_deviation\n");
            for (n, ratio) in rows {
                text.push_str(&format!(
                    "{},{},{},{}\n",
                    n,
                    ratio,
                    predicted,
                    (ratio / predicted - 1.0).abs()
                ));
            }
            write_file(&path, &text)?;
            written.push(path);
        }
        for (i, (words, report)) in output.data.equidist_reports.iter().enumerate() {
            let path = dir.join(format!("equidist-{i}.csv"));
            let mut text = format!("# cylinder: [{}]\nn,m_n,nu_xi,deviation\n", words.join(" "));
            for row in &report.rows {
                text.push_str(&format!(
                    "{},{},{},{}\n",
                    row.n, row.m_n, report.nu_xi, row.deviation
                ));
            }
            write_file(&path, &text)?;
            written.push(path);
        }
        for (idx, n, scan) in &output.data.pressure_scans {
            let path = dir.join(format!("pressure-{idx}.csv"));
            let mut text = format!("# finite-n pressure scan at n = {n}\nt,pressure\n");
            for (t, p) in scan {
                text.push_str(&format!("{t},{p}\n"));
            }
            write_file(&path, &text)?;
            written.push(path);
        }
    }

    if formats.plot {
        // Two-column space-separated n vs value, ready for external plotting.
        let mut emit_dat = |name: String, rows: Vec<(usize, f64)>| -> Result<(), PipelineError> {
            let path = dir.join(name);
            let mut text = String::new();
            for (n, v) in rows {
                text.push_str(&format!("{n} {v}\n"));
            }
            write_file(&path, &text)?;
            written.push(path);
            Ok(())
        };
        if !output.data.spectral_rows.is_empty() {
            emit_dat(
                "plot-return-log10.dat".into(),
                output
                    .data
                    .spectral_rows
                    .iter()
                    .filter_map(|r| r.return_log10.map(|v| (r.n, v)))
                    .collect(),
            )?;
            emit_dat(
                "plot-root-estimate.dat".into(),
                output
                    .data
                    .spectral_rows
                    .iter()
                    .filter_map(|r| r.root_estimate.map(|v| (r.n, v)))
                    .collect(),
            )?;
            emit_dat(
                "plot-gerl-ratio.dat".into(),
                output
                    .data
                    .spectral_rows
                    .iter()
                    .filter_map(|r| r.gerl_ratio.map(|v| (r.n, v)))
                    .collect(),
            )?;
        }
        for (i, (_, _, rows)) in output.data.ratio_rows.iter().enumerate() {
            emit_dat(format!("plot-ratio-{i}.dat"), rows.clone())?;
        }
        for (i, (_, report)) in output.data.equidist_reports.iter().enumerate() {
            emit_dat(
                format!("plot-equidist-{i}.dat"),
                report.rows.iter().map(|r| (r.n, r.m_n)).collect(),
            )?;
        }
    }

    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lazy_z_config(cache_dir: Option<&Path>) -> ExperimentConfig {
        let cache = cache_dir
            .map(|d| format!(",\n  \"cache_dir\": {:?}", d.display().to_string()))
            .unwrap_or_default();
        let text = format!(
            r#"{{
            "group": {{"family": "lattice", "params": {{"k": 1}}}},
            "measure": [
                {{"word": "x1", "weight": 0.75}},
                {{"word": "x1-", "weight": 0.25}}
            ],
            "options": {{
                "n_max": 120,
                "lazify_eps": 0.2,
                "test_elements": ["x1", "x1 x1"],
                "cylinders": [["x1"]],
                "output": ["json", "csv", "plot"]{cache}
            }}
        }}"#
        );
        ExperimentConfig::from_json(&text).unwrap()
    }

    #[test]
    fn full_pipeline_on_lazy_biased_z() {
        let config = lazy_z_config(None);
        let out = run(&config, &RunOptions::default()).unwrap();
        let report = &out.report;
        assert!(report.nondegeneracy.verified);
        let aperiodic = report.aperiodicity.as_ref().unwrap();
        assert_eq!(aperiodic.aperiodic_from, Some(1));
        assert!(!report.centred.centred);
        // ξ = ½ln(1/3) survives lazification.
        let xi_exact = 0.5 * (1.0f64 / 3.0).ln();
        assert!((report.tilt.xi[0] - xi_exact).abs() < 1e-9);
        // λ̄ = 0.8·(√3/2) + 0.2
        let lambda_bar = 0.8 * 3.0f64.sqrt() / 2.0 + 0.2;
        assert!((report.tilt.phi_min - lambda_bar).abs() < 1e-12);

        let spectral = report.spectral.as_ref().unwrap();
        assert_eq!(spectral.verdict, Verdict::AmenableConsistent);
        assert_eq!(report.verdict, Some(Verdict::AmenableConsistent));

        let ratio = report.ratio.as_ref().unwrap();
        let sqrt3 = 3.0f64.sqrt();
        assert!((ratio.entries[0].predicted_limit - sqrt3).abs() < 1e-9);
        assert!((ratio.entries[1].predicted_limit - 3.0).abs() < 1e-9);
        assert!(ratio.entries[0].final_relative_deviation < 0.05);

        let equidist = report.equidist.as_ref().unwrap();
        assert_eq!(equidist.len(), 1);
        assert!(equidist[0].trend_downward);
        let pressure = equidist[0].pressure.as_ref().unwrap();
        assert!(pressure.p_at_zero.abs() <= 1e-12);
        assert!((pressure.derivative_at_zero - pressure.nu_xi).abs() <= 1e-6);
        assert!(report.skipped_stages.is_empty());
    }

    #[test]
    fn periodic_walk_skips_ratio_and_equidist() {
        let text = r#"{
            "group": {"family": "lattice", "params": {"k": 1}},
            "measure": [
                {"word": "x1", "weight": 0.5},
                {"word": "x1-", "weight": 0.5}
            ],
            "options": {
                "n_max": 30,
                "test_elements": ["x1"],
                "cylinders": [["x1"]]
            }
        }"#;
        let config = ExperimentConfig::from_json(text).unwrap();
        let out = run(&config, &RunOptions::default()).unwrap();
        assert!(out.report.ratio.is_none());
        assert!(out.report.equidist.is_none());
        assert_eq!(out.report.skipped_stages.len(), 2);
        assert!(out.report.skipped_stages[0].contains("lazify"));
        // Spectral still runs with the period handled.
        let spectral = out.report.spectral.as_ref().unwrap();
        assert_eq!(spectral.period, Some(2));
        assert_eq!(spectral.verdict, Verdict::AmenableConsistent);
    }

    #[test]
    fn reports_are_byte_identical_across_runs() {
        let config = lazy_z_config(None);
        let a = run(&config, &RunOptions::default()).unwrap();
        let b = run(&config, &RunOptions::default()).unwrap();
        let ja = serde_json::to_string_pretty(&a.report).unwrap();
        let jb = serde_json::to_string_pretty(&b.report).unwrap();
        assert_eq!(ja, jb);
    }

    #[test]
    fn cache_hit_reproduces_report() {
        let dir =
            std::env::temp_dir().join(format!("groupwalk-pipeline-cache-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        let config = lazy_z_config(Some(&dir));
        let cold = run(&config, &RunOptions::default()).unwrap();
        assert!(dir.exists());
        let warm = run(&config, &RunOptions::default()).unwrap();
        assert_eq!(
            serde_json::to_string(&cold.report).unwrap(),
            serde_json::to_string(&warm.report).unwrap()
        );
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn emit_writes_expected_files() {
        let dir = std::env::temp_dir().join(format!("groupwalk-emit-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        let config = lazy_z_config(None);
        let out = run(&config, &RunOptions::default()).unwrap();
        let written = emit(&out, &dir).unwrap();
        let names: Vec<String> = written
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().to_string())
            .collect();
        assert!(names.contains(&"report.json".to_string()));
        assert!(names.contains(&"spectral.csv".to_string()));
        assert!(names.contains(&"ratio-0.csv".to_string()));
        assert!(names.contains(&"equidist-0.csv".to_string()));
        assert!(names.contains(&"pressure-0.csv".to_string()));
        assert!(names.contains(&"plot-return-log10.dat".to_string()));

        let csv = std::fs::read_to_string(dir.join("spectral.csv")).unwrap();
        assert!(
            csv.starts_with("n,return_prob_mantissa,return_prob_log10,root_estimate,gerl_ratio\n")
        );

        // Emission is deterministic byte for byte.
        let json1 = std::fs::read(dir.join("report.json")).unwrap();
        let out2 = run(&config, &RunOptions::default()).unwrap();
        emit(&out2, &dir).unwrap();
        let json2 = std::fs::read(dir.join("report.json")).unwrap();
        assert_eq!(json1, json2);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
