//! Directory layout: `manifest.txt` plus one `col_<i>.csv` per non-empty
//! group. Run files hold `value[,value...],freq` lines with decoded values.
//!
//! ```text
//! format-version: 1
//! join-size: 14
//! groups: 2
//! group.0.vars: A
//! group.0.runs: 2
//! group.1.vars: B,C
//! group.1.runs: 3
//! ```

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use super::{Gfjs, RunGroup};
use crate::domain::Domain;
use crate::error::{Error, Result};

pub const MANIFEST: &str = "manifest.txt";
pub const FORMAT_VERSION: u32 = 1;

fn run_file(i: usize) -> String {
    format!("col_{i}.csv")
}

/// Writes the summary into `dir`, creating it if needed. Returns the total
/// number of bytes written.
pub fn store(gfjs: &Gfjs, dir: impl AsRef<Path>) -> Result<u64> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let domain = gfjs.domain();
    let mut bytes = 0u64;

    let mut manifest = format!(
        "format-version: {FORMAT_VERSION}\njoin-size: {}\ngroups: {}\n",
        gfjs.join_size(),
        gfjs.groups().len()
    );
    for (i, g) in gfjs.groups().iter().enumerate() {
        let names: Vec<&str> = g.vars().iter().map(|&v| domain.name(v)).collect();
        manifest.push_str(&format!(
            "group.{i}.vars: {}\ngroup.{i}.runs: {}\n",
            names.join(","),
            g.len()
        ));
    }
    let path = dir.join(MANIFEST);
    fs::write(&path, &manifest).map_err(|e| Error::io(&path, e))?;
    bytes += manifest.len() as u64;

    for (i, g) in gfjs.groups().iter().enumerate() {
        let path = dir.join(run_file(i));
        if g.is_empty() {
            // A stale file from an earlier summary would otherwise be
            // mistaken for this group's runs.
            if path.exists() {
                fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
            }
            continue;
        }
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .flexible(false)
            .from_writer(BufWriter::new(file));
        let mut record: Vec<String> = Vec::with_capacity(g.arity() + 1);
        for (vals, freq) in g.runs() {
            record.clear();
            record.extend(
                g.vars()
                    .iter()
                    .zip(vals)
                    .map(|(&v, &c)| domain.decode(v, c).to_owned()),
            );
            record.push(freq.to_string());
            w.write_record(&record)
                .map_err(|e| Error::Format(e.to_string()))?;
        }
        let mut inner = w
            .into_inner()
            .map_err(|e| Error::io(&path, e.into_error()))?;
        inner.flush().map_err(|e| Error::io(&path, e))?;
        bytes += fs::metadata(&path).map_err(|e| Error::io(&path, e))?.len();
    }
    Ok(bytes)
}

struct Manifest {
    join_size: u64,
    groups: Vec<(Vec<String>, usize)>,
}

fn parse_manifest(text: &str) -> Result<Manifest> {
    let bad = |m: String| Error::Format(m);
    let mut fields: HashMap<&str, &str> = HashMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once(": ")
            .ok_or_else(|| bad(format!("manifest line {}: expected `key: value`", n + 1)))?;
        if fields.insert(key, value).is_some() {
            return Err(bad(format!("manifest key `{key}` repeated")));
        }
    }
    let mut take = |key: &str| -> Result<&str> {
        fields
            .remove(key)
            .ok_or_else(|| Error::Format(format!("manifest lacks `{key}`")))
    };
    let number = |key: &str, value: &str| -> Result<u64> {
        value
            .parse::<u64>()
            .map_err(|_| Error::Format(format!("manifest `{key}` is not a number: `{value}`")))
    };

    let version = take("format-version")?;
    if number("format-version", version)? != u64::from(FORMAT_VERSION) {
        return Err(bad(format!("unsupported format version {version}")));
    }
    let join_size = number("join-size", take("join-size")?)?;
    let count = number("groups", take("groups")?)? as usize;
    let mut groups = Vec::with_capacity(count);
    for i in 0..count {
        let vars_key = format!("group.{i}.vars");
        let runs_key = format!("group.{i}.runs");
        let vars: Vec<String> = take(&vars_key)?.split(',').map(str::to_owned).collect();
        if vars.iter().any(String::is_empty) {
            return Err(bad(format!("`{vars_key}` has an empty variable name")));
        }
        let runs = number(&runs_key, take(&runs_key)?)? as usize;
        groups.push((vars, runs));
    }
    if let Some(key) = fields.keys().next() {
        return Err(bad(format!("unknown manifest key `{key}`")));
    }
    Ok(Manifest { join_size, groups })
}

/// Reads a summary written by [`store`]. Dictionaries are rebuilt from the
/// values present in the run files.
pub fn load(dir: impl AsRef<Path>) -> Result<Gfjs> {
    let dir = dir.as_ref();
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest = parse_manifest(&text)?;

    let names: Vec<String> = manifest
        .groups
        .iter()
        .flat_map(|(v, _)| v.iter().cloned())
        .collect();
    for (i, n) in names.iter().enumerate() {
        if names[..i].contains(n) {
            return Err(Error::Format(format!(
                "variable `{n}` appears in two groups"
            )));
        }
    }

    let mut raw: Vec<Vec<(Vec<String>, u64)>> = Vec::with_capacity(manifest.groups.len());
    for (i, (vars, expected)) in manifest.groups.iter().enumerate() {
        let path = dir.join(run_file(i));
        let mut runs = Vec::with_capacity(*expected);
        if *expected > 0 || path.exists() {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(false)
                .flexible(true)
                .from_path(&path)
                .map_err(|e| csv_error(&path, e))?;
            for (n, record) in reader.records().enumerate() {
                let record = record.map_err(|e| csv_error(&path, e))?;
                if record.len() != vars.len() + 1 {
                    return Err(Error::Format(format!(
                        "{} line {}: expected {} fields, found {}",
                        path.display(),
                        n + 1,
                        vars.len() + 1,
                        record.len()
                    )));
                }
                let freq_field = &record[vars.len()];
                let freq: u64 = freq_field.parse().map_err(|_| {
                    Error::Format(format!(
                        "{} line {}: bad frequency `{freq_field}`",
                        path.display(),
                        n + 1
                    ))
                })?;
                if freq == 0 {
                    return Err(Error::Format(format!(
                        "{} line {}: zero frequency",
                        path.display(),
                        n + 1
                    )));
                }
                let values = record.iter().take(vars.len()).map(str::to_owned).collect();
                runs.push((values, freq));
            }
        }
        if runs.len() != *expected {
            return Err(Error::Format(format!(
                "group {i}: manifest says {expected} runs, file has {}",
                runs.len()
            )));
        }
        raw.push(runs);
    }

    let mut builder = Domain::builder(names.clone());
    let mut base = 0;
    for ((vars, _), runs) in manifest.groups.iter().zip(&raw) {
        for k in 0..vars.len() {
            builder.add(base + k, runs.iter().map(|(vals, _)| vals[k].as_str()));
        }
        base += vars.len();
    }
    let domain = Arc::new(builder.build());

    let mut groups = Vec::with_capacity(raw.len());
    let mut base = 0;
    for ((vars, _), runs) in manifest.groups.iter().zip(&raw) {
        let ids: Vec<usize> = (base..base + vars.len()).collect();
        let mut group = RunGroup::new(ids.clone());
        let mut codes = Vec::with_capacity(vars.len());
        for (vals, freq) in runs {
            codes.clear();
            codes.extend(
                ids.iter()
                    .zip(vals)
                    .map(|(&v, s)| domain.encode(v, s).expect("value was added")),
            );
            group.push(&codes, *freq);
        }
        base += vars.len();
        groups.push(group);
    }

    let gfjs = Gfjs::new(domain, groups).map_err(|e| match e {
        Error::InconsistentSummary(m) => Error::Format(m),
        other => other,
    })?;
    if !gfjs.groups().is_empty() && gfjs.join_size() != manifest.join_size {
        return Err(Error::Format(format!(
            "manifest join-size {} but runs sum to {}",
            manifest.join_size,
            gfjs.join_size()
        )));
    }
    if gfjs.groups().is_empty() && manifest.join_size != 0 {
        return Err(Error::Format(
            "manifest join-size nonzero with no groups".into(),
        ));
    }
    Ok(gfjs)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!("checked is_io_error"),
        }
    } else {
        Error::Format(format!("{}: {e}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gfjs::tests::reference_summary;

    fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
        let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (
                    e.file_name().to_string_lossy().into_owned(),
                    fs::read(e.path()).unwrap(),
                )
            })
            .collect();
        out.sort();
        out
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        store(&reference_summary(), a.path()).unwrap();
        let loaded = load(a.path()).unwrap();
        assert_eq!(loaded.join_size(), 32);
        store(&loaded, b.path()).unwrap();
        assert_eq!(files(a.path()), files(b.path()));
    }

    #[test]
    fn multi_column_groups_and_quoting() {
        let g = Gfjs::from_decoded(&[
            (&["A"], vec![(vec!["a \"q\""], 3)]),
            (
                &["B", "C"],
                vec![(vec!["b,1", "c"], 1), (vec!["b2", "c"], 2)],
            ),
        ])
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        store(&g, dir.path()).unwrap();
        assert_eq!(
            fs::read_to_string(dir.path().join("col_1.csv")).unwrap(),
            "\"b,1\",c,1\nb2,c,2\n"
        );
        let back = load(dir.path()).unwrap();
        assert_eq!(back.decoded(1), g.decoded(1));
        assert_eq!(back.decoded(0), [(vec!["a \"q\""], 3)]);
    }

    #[test]
    fn wrong_join_size_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        store(&reference_summary(), dir.path()).unwrap();
        let path = dir.path().join(MANIFEST);
        let text = fs::read_to_string(&path)
            .unwrap()
            .replace("join-size: 32", "join-size: 33");
        fs::write(&path, text).unwrap();
        assert!(matches!(load(dir.path()), Err(Error::Format(_))));
    }

    #[test]
    fn run_count_mismatch_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        store(&reference_summary(), dir.path()).unwrap();
        let path = dir.path().join(MANIFEST);
        let text = fs::read_to_string(&path)
            .unwrap()
            .replace("group.1.runs: 2", "group.1.runs: 3");
        fs::write(&path, text).unwrap();
        assert!(matches!(load(dir.path()), Err(Error::Format(_))));
    }

    #[test]
    fn unequal_group_totals_are_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        store(&reference_summary(), dir.path()).unwrap();
        fs::write(dir.path().join("col_1.csv"), "b3,8\nb4,25\n").unwrap();
        assert!(matches!(load(dir.path()), Err(Error::Format(_))));
    }

    #[test]
    fn empty_summary_is_manifest_only() {
        let g = Gfjs::from_decoded(&[(&["A"], vec![]), (&["B"], vec![])]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        store(&g, dir.path()).unwrap();
        assert_eq!(files(dir.path()).len(), 1);
        assert_eq!(load(dir.path()).unwrap().join_size(), 0);
    }
}
