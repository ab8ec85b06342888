//! Declarative experiment configuration: one JSON document naming a group,
//! a measure as weighted words, and run options.
//!
//! Word grammar: whitespace-separated tokens, each a generator name with an
//! optional trailing `-` for the inverse (`a-` is a⁻¹). Generator names per
//! family: `x1..xk` (lattice), `a..z` (free), `a b` (heisenberg), `s t`
//! (lamplighter, `s` its own inverse), `a b` (bs12).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::groups::{GroupDescriptor, GroupElement};
use crate::measures::FinMeasure;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config field `{path}`: {reason}")]
    Invalid { path: String, reason: String },
}

fn invalid(path: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.into(),
        reason: reason.into(),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub group: GroupSection,
    pub measure: Vec<WordWeight>,
    pub options: OptionsSection,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GroupSection {
    /// One of "lattice", "free", "heisenberg", "lamplighter", "bs12".
    pub family: String,
    #[serde(default)]
    pub params: GroupParams,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GroupParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WordWeight {
    pub word: String,
    pub weight: f64,
}

fn default_tolerance() -> f64 {
    0.02
}

fn default_output() -> Vec<String> {
    vec!["json".into(), "csv".into()]
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OptionsSection {
    pub n_max: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lazify_eps: Option<f64>,
    /// Tolerance for the spectral comparison verdict.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Cylinder words for the equidistribution stage: each cylinder is a
    /// list of words, one word per letter.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cylinders: Vec<Vec<String>>,
    /// Test elements (as words) for the ratio-limit table.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub test_elements: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
    /// Cap on the support size of a single convolution power; exceeding it
    /// aborts the run rather than truncating.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support_cap: Option<usize>,
    /// Output formats: any of "json", "csv", "plot".
    #[serde(default = "default_output")]
    pub output: Vec<String>,
}

/// Which emit targets are enabled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OutputFormats {
    pub json: bool,
    pub csv: bool,
    pub plot: bool,
}

/// Everything from the config resolved into domain objects. The base
/// measure is renormalized to total mass exactly one (the config tolerance
/// for Σ weights is looser than the probability invariant).
#[derive(Clone, Debug)]
pub struct ValidatedExperiment {
    pub descriptor: GroupDescriptor,
    pub base_measure: FinMeasure,
    pub lazify_eps: Option<f64>,
    pub n_max: usize,
    pub tolerance: f64,
    pub cylinders: Vec<(Vec<String>, Vec<GroupElement>)>,
    pub test_elements: Vec<(String, GroupElement)>,
    pub cache_dir: Option<PathBuf>,
    pub support_cap: usize,
    pub formats: OutputFormats,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    /// FNV-1a hash of the canonical JSON form; echoed into reports so a
    /// report is traceable to the exact configuration that produced it.
    pub fn content_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        format!("{:016x}", crate::numeric::fnv1a64(canonical.as_bytes()))
    }

    pub fn validate(&self) -> Result<ValidatedExperiment, ConfigError> {
        let descriptor = match self.group.family.as_str() {
            "lattice" => {
                let k = self
                    .group
                    .params
                    .k
                    .ok_or_else(|| invalid("group.params.k", "lattice requires k"))?;
                GroupDescriptor::lattice(k)
                    .map_err(|e| invalid("group.params.k", e.to_string()))?
            }
            "free" => {
                let r = self
                    .group
                    .params
                    .r
                    .ok_or_else(|| invalid("group.params.r", "free requires r"))?;
                GroupDescriptor::free(r).map_err(|e| invalid("group.params.r", e.to_string()))?
            }
            "heisenberg" => GroupDescriptor::heisenberg(),
            "lamplighter" => GroupDescriptor::lamplighter(),
            "bs12" => GroupDescriptor::bs12(),
            other => {
                return Err(invalid(
                    "group.family",
                    format!("unknown family `{other}` (expected lattice, free, heisenberg, lamplighter or bs12)"),
                ))
            }
        };

        if self.measure.is_empty() {
            return Err(invalid("measure", "at least one atom is required"));
        }
        let mut total = 0.0f64;
        let mut atoms: Vec<(GroupElement, f64)> = Vec::with_capacity(self.measure.len());
        for (i, ww) in self.measure.iter().enumerate() {
            if !ww.weight.is_finite() || ww.weight <= 0.0 {
                return Err(invalid(
                    format!("measure[{i}].weight"),
                    format!("must be strictly positive and finite, got {}", ww.weight),
                ));
            }
            let g = descriptor
                .evaluate_word(&ww.word)
                .map_err(|e| invalid(format!("measure[{i}].word"), e.to_string()))?;
            total += ww.weight;
            atoms.push((g, ww.weight));
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(
                "measure",
                format!("weights must sum to 1 within 1e-9, got {total:.12}"),
            ));
        }
        // Renormalize so downstream probability invariants hold exactly.
        for (_, w) in atoms.iter_mut() {
            *w /= total;
        }
        let base_measure = FinMeasure::from_atoms(descriptor.clone(), atoms)
            .map_err(|e| invalid("measure", e.to_string()))?;

        let opts = &self.options;
        if opts.n_max < 2 {
            return Err(invalid("options.n_max", "must be at least 2"));
        }
        if let Some(eps) = opts.lazify_eps {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(invalid(
                    "options.lazify_eps",
                    format!("must lie strictly in (0, 1), got {eps}"),
                ));
            }
        }
        if !(opts.tolerance > 0.0 && opts.tolerance.is_finite()) {
            return Err(invalid("options.tolerance", "must be positive and finite"));
        }
        if let Some(cap) = opts.support_cap {
            if cap == 0 {
                return Err(invalid("options.support_cap", "must be positive"));
            }
        }

        let mut cylinders = Vec::with_capacity(opts.cylinders.len());
        for (i, words) in opts.cylinders.iter().enumerate() {
            if words.is_empty() {
                return Err(invalid(
                    format!("options.cylinders[{i}]"),
                    "cylinder needs at least one letter word",
                ));
            }
            let mut letters = Vec::with_capacity(words.len());
            for (j, w) in words.iter().enumerate() {
                let g = descriptor
                    .evaluate_word(w)
                    .map_err(|e| invalid(format!("options.cylinders[{i}][{j}]"), e.to_string()))?;
                letters.push(g);
            }
            cylinders.push((words.clone(), letters));
        }

        let mut test_elements = Vec::with_capacity(opts.test_elements.len());
        for (i, w) in opts.test_elements.iter().enumerate() {
            let g = descriptor
                .evaluate_word(w)
                .map_err(|e| invalid(format!("options.test_elements[{i}]"), e.to_string()))?;
            test_elements.push((w.clone(), g));
        }

        let mut formats = OutputFormats::default();
        for (i, f) in opts.output.iter().enumerate() {
            match f.as_str() {
                "json" => formats.json = true,
                "csv" => formats.csv = true,
                "plot" => formats.plot = true,
                other => {
                    return Err(invalid(
                        format!("options.output[{i}]"),
                        format!("unknown format `{other}` (expected json, csv or plot)"),
                    ))
                }
            }
        }

        Ok(ValidatedExperiment {
            descriptor,
            base_measure,
            lazify_eps: opts.lazify_eps,
            n_max: opts.n_max,
            tolerance: opts.tolerance,
            cylinders,
            test_elements,
            cache_dir: opts.cache_dir.clone(),
            support_cap: opts
                .support_cap
                .unwrap_or(crate::measures::DEFAULT_SUPPORT_CAP),
            formats,
        })
    }
}
