//! On-disk cache of convolution tables.
//!
//! One text file per table, keyed by a hash of (group, measure atoms, n_max,
//! rescale mode). The header repeats all keyed data verbatim and the loader
//! validates it together with per-level mass checks, so a hash collision,
//! version bump or tampered record is detected and answered by recomputing
//! rather than by trusting the file. Mantissas are printed with 17
//! significant digits, which round-trips f64 exactly: store-then-load
//! reproduces the table bit for bit.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::groups::GroupElement;
use crate::measures::{ConvolutionTable, FinMeasure, LevelParts};
use crate::numeric::{fnv1a64, from_hex, to_hex};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache io at {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Cache key: hash of (group descriptor, measure atoms, n, mode).
pub fn table_key(mu: &FinMeasure, n_max: usize, rescaled: bool) -> String {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(mu.descriptor().canonical_name().as_bytes());
    for (g, w) in mu.atoms() {
        bytes.extend_from_slice(&g.canonical_key());
        bytes.extend_from_slice(&w.to_be_bytes());
    }
    bytes.extend_from_slice(&(n_max as u64).to_be_bytes());
    bytes.push(rescaled as u8);
    format!("{:016x}", fnv1a64(&bytes))
}

fn table_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("{key}.gwt"))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CacheError + '_ {
    move |source| CacheError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes the table to `<dir>/<key>.gwt` (atomically via a temp file) and
/// returns the path.
pub fn store_table(dir: &Path, table: &ConvolutionTable) -> Result<PathBuf, CacheError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mu = table.base();
    let key = table_key(mu, table.n_max(), table.is_rescaled());
    let path = table_path(dir, &key);
    let tmp = dir.join(format!("{key}.gwt.tmp"));

    let mut out = String::new();
    out.push_str(&format!("groupwalk-table {FORMAT_VERSION}\n"));
    out.push_str(&format!("key {key}\n"));
    out.push_str(&format!("group {}\n", mu.descriptor().canonical_name()));
    out.push_str(&format!(
        "mode {}\n",
        if table.is_rescaled() {
            "rescaled"
        } else {
            "exact"
        }
    ));
    out.push_str(&format!("n_max {}\n", table.n_max()));
    out.push_str(&format!("measure {}\n", mu.atoms().len()));
    for (g, w) in mu.atoms() {
        out.push_str(&format!("{} {:.16e}\n", to_hex(&g.canonical_key()), w));
    }
    for n in 0..=table.n_max() {
        let atoms = table.level_atoms(n);
        out.push_str(&format!(
            "level {n} {:.16e} {:.16e} {}\n",
            table.level_total_mass(n),
            table.level_scale_log(n),
            atoms.len()
        ));
        for (g, w) in atoms {
            out.push_str(&format!("{} {:.16e}\n", to_hex(&g.canonical_key()), w));
        }
    }
    out.push_str("end\n");

    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(out.as_bytes()).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    fs::rename(&tmp, &path).map_err(io_err(&path))?;
    Ok(path)
}

/// Result of a cache probe: either the validated table, or the reason the
/// entry was unusable (caller recomputes either way).
pub enum CacheLoad {
    Hit(ConvolutionTable),
    Miss(String),
}

impl CacheLoad {
    pub fn miss_reason(&self) -> Option<&str> {
        match self {
            CacheLoad::Hit(_) => None,
            CacheLoad::Miss(reason) => Some(reason),
        }
    }
}

/// Tries to load the table for (μ, n_max, mode). Every validation failure is
/// a miss, never an error: a corrupt cache only costs a recomputation.
pub fn load_table(dir: &Path, mu: &FinMeasure, n_max: usize, rescaled: bool) -> CacheLoad {
    match try_load(dir, mu, n_max, rescaled) {
        Ok(table) => CacheLoad::Hit(table),
        Err(reason) => CacheLoad::Miss(reason),
    }
}

fn try_load(
    dir: &Path,
    mu: &FinMeasure,
    n_max: usize,
    rescaled: bool,
) -> Result<ConvolutionTable, String> {
    let key = table_key(mu, n_max, rescaled);
    let path = table_path(dir, &key);
    let text = fs::read_to_string(&path).map_err(|e| format!("no cache entry: {e}"))?;
    let mut lines = text.lines();

    let mut expect = |prefix: &str| -> Result<String, String> {
        let line = lines.next().ok_or_else(|| format!("missing `{prefix}`"))?;
        line.strip_prefix(prefix)
            .map(|rest| rest.trim().to_string())
            .ok_or_else(|| format!("expected `{prefix}`, found `{line}`"))
    };

    let version = expect("groupwalk-table ")?;
    if version != FORMAT_VERSION.to_string() {
        return Err(format!("format version mismatch: {version}"));
    }
    let file_key = expect("key ")?;
    if file_key != key {
        return Err("key mismatch".into());
    }
    let group = expect("group ")?;
    if group != mu.descriptor().canonical_name() {
        return Err("group descriptor mismatch".into());
    }
    let mode = expect("mode ")?;
    if mode != if rescaled { "rescaled" } else { "exact" } {
        return Err("mode mismatch".into());
    }
    let file_n_max: usize = expect("n_max ")?
        .parse()
        .map_err(|_| "bad n_max".to_string())?;
    if file_n_max != n_max {
        return Err("n_max mismatch".into());
    }

    let atom_count: usize = expect("measure ")?
        .parse()
        .map_err(|_| "bad measure count".to_string())?;
    if atom_count != mu.atoms().len() {
        return Err("measure support size mismatch".into());
    }
    for (g, w) in mu.atoms() {
        let line = lines.next().ok_or("truncated measure block")?;
        let (hex, weight) = split_record(line)?;
        if from_hex(&hex).ok_or("bad hex")? != g.canonical_key() {
            return Err("measure atom mismatch".into());
        }
        if weight.to_bits() != w.to_bits() {
            return Err("measure weight mismatch".into());
        }
    }

    let mut parts: LevelParts = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let header = lines.next().ok_or("truncated level header")?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 || fields[0] != "level" {
            return Err(format!("bad level header `{header}`"));
        }
        let level_n: usize = fields[1].parse().map_err(|_| "bad level index")?;
        if level_n != n {
            return Err("level index mismatch".into());
        }
        let total_mass: f64 = fields[2].parse().map_err(|_| "bad total mass")?;
        let scale_log: f64 = fields[3].parse().map_err(|_| "bad scale log")?;
        let count: usize = fields[4].parse().map_err(|_| "bad atom count")?;

        let mut atoms = Vec::with_capacity(count);
        let mut mass = 0.0f64;
        for _ in 0..count {
            let line = lines.next().ok_or("truncated level block")?;
            let (hex, mantissa) = split_record(line)?;
            let element = GroupElement::from_canonical_key(&from_hex(&hex).ok_or("bad hex")?)
                .map_err(|e| e.to_string())?;
            mass += mantissa;
            atoms.push((element, mantissa));
        }
        // Mass check: the stored total must match the records it heads.
        if (mass - total_mass).abs() > 1e-12 * total_mass.abs().max(1.0) {
            return Err(format!(
                "level {n} mass check failed: records sum to {mass:.17e}, header says {total_mass:.17e}"
            ));
        }
        // Sanity for probability bases: true mass ≈ 1.
        if mu.is_probability() && (total_mass * scale_log.exp() - 1.0).abs() > 1e-6 {
            return Err(format!("level {n} true mass far from 1"));
        }
        atoms.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        parts.push((atoms, total_mass, scale_log));
    }
    match lines.next() {
        Some("end") => {}
        _ => return Err("missing end marker".into()),
    }
    Ok(ConvolutionTable::from_parts(mu.clone(), rescaled, parts))
}

fn split_record(line: &str) -> Result<(String, f64), String> {
    let mut it = line.split_whitespace();
    let hex = it.next().ok_or("empty record")?.to_string();
    let value: f64 = it
        .next()
        .ok_or("record missing value")?
        .parse()
        .map_err(|_| "bad record value")?;
    if it.next().is_some() {
        return Err("trailing fields in record".into());
    }
    Ok((hex, value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::GroupDescriptor;
    use crate::measures::power_sequence;

    fn tmp_dir(tag: &str) -> PathBuf {
        let dir =
            std::env::temp_dir().join(format!("groupwalk-cache-test-{tag}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn sample_table() -> ConvolutionTable {
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
        power_sequence(&mu, 6, true).unwrap()
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let dir = tmp_dir("roundtrip");
        let table = sample_table();
        store_table(&dir, &table).unwrap();
        let loaded = match load_table(&dir, table.base(), 6, true) {
            CacheLoad::Hit(t) => t,
            CacheLoad::Miss(reason) => panic!("unexpected miss: {reason}"),
        };
        assert_eq!(loaded.n_max(), table.n_max());
        for n in 0..=6 {
            assert_eq!(
                loaded.level_scale_log(n).to_bits(),
                table.level_scale_log(n).to_bits()
            );
            assert_eq!(
                loaded.level_total_mass(n).to_bits(),
                table.level_total_mass(n).to_bits()
            );
            let a = loaded.level_atoms(n);
            let b = table.level_atoms(n);
            assert_eq!(a.len(), b.len());
            for ((g1, w1), (g2, w2)) in a.iter().zip(b) {
                assert_eq!(g1, g2);
                assert_eq!(w1.to_bits(), w2.to_bits());
            }
        }
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn tampered_record_is_rejected() {
        let dir = tmp_dir("tamper");
        let table = sample_table();
        let path = store_table(&dir, &table).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        // Flip one digit in some record line deep in the file.
        let tampered = text.replacen("4.0000000000000002e-1", "4.1000000000000002e-1", 1);
        assert_ne!(text, tampered, "expected a record to tamper with");
        fs::write(&path, tampered).unwrap();
        match load_table(&dir, table.base(), 6, true) {
            CacheLoad::Miss(reason) => {
                assert!(
                    reason.contains("mismatch") || reason.contains("mass check"),
                    "{reason}"
                );
            }
            CacheLoad::Hit(_) => panic!("tampered cache accepted"),
        }
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn wrong_parameters_miss() {
        let dir = tmp_dir("params");
        let table = sample_table();
        store_table(&dir, &table).unwrap();
        // Different n_max or mode hashes to a different key: clean miss.
        assert!(matches!(
            load_table(&dir, table.base(), 7, true),
            CacheLoad::Miss(_)
        ));
        assert!(matches!(
            load_table(&dir, table.base(), 6, false),
            CacheLoad::Miss(_)
        ));
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dir = tmp_dir("truncate");
        let table = sample_table();
        let path = store_table(&dir, &table).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let cut = &text[..text.len() - 20];
        fs::write(&path, cut).unwrap();
        assert!(matches!(
            load_table(&dir, table.base(), 6, true),
            CacheLoad::Miss(_)
        ));
        fs::remove_dir_all(&dir).unwrap();
    }
}
