//! On-disk cache of learned potentials.
//!
//! A potential depends only on the CSV contents and on which columns are
//! bound, so entries are keyed by a digest of both and stored with raw
//! values. They are re-encoded into the join-wide dictionaries at use, which
//! lets one entry serve any query that binds the same columns.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::domain::Domain;
use crate::error::{add_freq, Error, Result};
use crate::factor::Factor;
use crate::query::Binding;
use crate::relation::Relation;

/// Occurrence counts of the distinct value combinations of some columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    /// Sorted column names.
    columns: Vec<String>,
    /// Ascending by values.
    entries: Vec<(Vec<String>, u64)>,
}

impl CountTable {
    /// Counts `columns` of `relation` (in any order; stored sorted).
    pub fn from_relation(relation: &Relation, columns: &[String]) -> Result<Self> {
        let mut columns = columns.to_vec();
        columns.sort();
        columns.dedup();
        let idx = columns
            .iter()
            .map(|c| {
                relation
                    .column_index(c)
                    .ok_or_else(|| Error::UnknownColumn {
                        relation: relation.name().to_owned(),
                        column: c.clone(),
                    })
            })
            .collect::<Result<Vec<usize>>>()?;
        let mut counts: HashMap<Vec<u32>, u64> = HashMap::new();
        for row in relation.rows() {
            let key: Vec<u32> = idx.iter().map(|&i| row[i]).collect();
            let slot = counts.entry(key).or_insert(0);
            *slot = add_freq(*slot, 1)?;
        }
        let mut coded: Vec<(Vec<u32>, u64)> = counts.into_iter().collect();
        // Codes sort like the raw values they stand for.
        coded.sort_unstable();
        let dicts = relation.dictionaries();
        let entries = coded
            .into_iter()
            .map(|(key, n)| {
                let values = idx
                    .iter()
                    .zip(&key)
                    .map(|(&i, &c)| dicts[i].value_of(c).to_owned())
                    .collect();
                (values, n)
            })
            .collect();
        Ok(CountTable { columns, entries })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn entries(&self) -> &[(Vec<String>, u64)] {
        &self.entries
    }

    /// Number of source rows.
    pub fn rows(&self) -> u64 {
        self.entries.iter().map(|(_, n)| n).sum()
    }

    /// Distinct values of one column.
    pub fn values(&self, column: &str) -> Result<impl Iterator<Item = &str> + '_> {
        let i = self.position(column)?;
        Ok(self.entries.iter().map(move |(v, _)| v[i].as_str()))
    }

    fn position(&self, column: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == column)
            .ok_or_else(|| Error::UnknownColumn {
                relation: "<cached potential>".into(),
                column: column.to_owned(),
            })
    }

    /// The potential over the variables `bindings` assign to these columns.
    pub fn to_factor(&self, bindings: &[Binding], domain: &Domain) -> Result<Factor> {
        let mut pos = Vec::with_capacity(bindings.len());
        let mut scope = Vec::with_capacity(bindings.len());
        for b in bindings {
            pos.push(self.position(&b.column)?);
            scope.push(
                domain
                    .var_id(&b.variable)
                    .ok_or_else(|| Error::UnknownVariable(b.variable.clone()))?,
            );
        }
        let mut rows = Vec::with_capacity(self.entries.len());
        for (values, n) in &self.entries {
            let tuple = pos
                .iter()
                .zip(&scope)
                .map(|(&p, &v)| {
                    domain.encode(v, &values[p]).ok_or_else(|| {
                        Error::InvalidPlan(format!(
                            "value `{}` missing from the join domain",
                            values[p]
                        ))
                    })
                })
                .collect::<Result<Vec<u32>>>()?;
            rows.push((tuple, *n));
        }
        Factor::from_entries(scope, rows)
    }
}

#[derive(Debug, Clone)]
pub struct FactorCache {
    dir: PathBuf,
}

/// Whether a lookup was served from disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheOutcome {
    Hit,
    Miss,
}

impl FactorCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FactorCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Digest of the CSV bytes.
    pub fn digest_file(path: &Path) -> Result<String> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }

    fn key(source: &str, header: bool, columns: &[String]) -> String {
        let mut h = Sha256::new();
        h.update(source.as_bytes());
        h.update(if header { b"\x00h" } else { b"\x00n" });
        for c in columns {
            h.update(b"\x00");
            h.update(c.as_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Returns the counts of `columns` of the CSV at `path`, reading them
    /// from the cache when the file is unchanged and otherwise loading the
    /// CSV and storing the result.
    pub fn get_or_learn(
        &self,
        path: &Path,
        header: bool,
        columns: &[String],
    ) -> Result<(CountTable, CacheOutcome)> {
        let source = Self::digest_file(path)?;
        let mut sorted = columns.to_vec();
        sorted.sort();
        sorted.dedup();
        let key = Self::key(&source, header, &sorted);
        if let Some(table) = self.read(&key, &source, &sorted)? {
            return Ok((table, CacheOutcome::Hit));
        }
        let relation = Relation::load_csv(path, header)?;
        let table = CountTable::from_relation(&relation, &sorted)?;
        self.write(&key, &source, &table)?;
        Ok((table, CacheOutcome::Miss))
    }

    fn paths(&self, key: &str) -> (PathBuf, PathBuf) {
        (
            self.dir.join(format!("{key}.csv")),
            self.dir.join(format!("{key}.manifest")),
        )
    }

    fn write(&self, key: &str, source: &str, table: &CountTable) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let (data, manifest) = self.paths(key);
        let mut buf = Vec::new();
        {
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(&mut buf);
            for (values, n) in &table.entries {
                let mut record = values.clone();
                record.push(n.to_string());
                w.write_record(&record)
                    .map_err(|e| Error::Format(e.to_string()))?;
            }
            w.flush().map_err(|e| Error::io(&data, e))?;
        }
        fs::write(&data, &buf).map_err(|e| Error::io(&data, e))?;

        let mut text = format!(
            "source-digest: {source}\ncolumns: {}\nentries: {}\n",
            table.columns.len(),
            table.entries.len()
        );
        for (i, c) in table.columns.iter().enumerate() {
            text.push_str(&format!("column.{i}: {c}\n"));
        }
        let mut f = fs::File::create(&manifest).map_err(|e| Error::io(&manifest, e))?;
        f.write_all(text.as_bytes())
            .map_err(|e| Error::io(&manifest, e))?;
        Ok(())
    }

    /// `None` when the entry is absent or does not describe `source` and
    /// `columns`; a damaged entry is treated as absent and rebuilt.
    fn read(&self, key: &str, source: &str, columns: &[String]) -> Result<Option<CountTable>> {
        let (data, manifest) = self.paths(key);
        let Ok(text) = fs::read_to_string(&manifest) else {
            return Ok(None);
        };
        let mut expected = format!("source-digest: {source}\ncolumns: {}\n", columns.len());
        let Some(rest) = text.strip_prefix(&expected) else {
            return Ok(None);
        };
        let Some((entries_line, column_lines)) = rest.split_once('\n') else {
            return Ok(None);
        };
        let Some(count) = entries_line
            .strip_prefix("entries: ")
            .and_then(|n| n.parse::<usize>().ok())
        else {
            return Ok(None);
        };
        expected.clear();
        for (i, c) in columns.iter().enumerate() {
            expected.push_str(&format!("column.{i}: {c}\n"));
        }
        if column_lines != expected {
            return Ok(None);
        }

        let Ok(mut reader) = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_path(&data)
        else {
            return Ok(None);
        };
        let mut entries = Vec::with_capacity(count);
        for record in reader.records() {
            let Ok(record) = record else {
                return Ok(None);
            };
            if record.len() != columns.len() + 1 {
                return Ok(None);
            }
            let Ok(n) = record[columns.len()].parse::<u64>() else {
                return Ok(None);
            };
            if n == 0 {
                return Ok(None);
            }
            entries.push((
                record
                    .iter()
                    .take(columns.len())
                    .map(str::to_owned)
                    .collect(),
                n,
            ));
        }
        if entries.len() != count {
            return Ok(None);
        }
        Ok(Some(CountTable {
            columns: columns.to_vec(),
            entries,
        }))
    }
}
