//! Dictionary-encoded relations loaded from CSV.
//!
//! Every column gets its own [`Dictionary`] whose entries are sorted by raw
//! bytes, so comparing codes is the same as comparing the underlying strings.
//! Rows are stored as one flat buffer of codes.

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const MAX_COLUMNS: usize = 64;

/// Sorted value dictionary for one attribute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dictionary {
    attribute: String,
    entries: Vec<String>,
    code_of: HashMap<String, u32>,
}

impl Dictionary {
    /// Builds a dictionary from any collection of values; duplicates are
    /// collapsed and the survivors sorted.
    pub fn from_values<I, S>(attribute: impl Into<String>, values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let distinct: BTreeSet<String> = values.into_iter().map(Into::into).collect();
        let entries: Vec<String> = distinct.into_iter().collect();
        let code_of = entries
            .iter()
            .enumerate()
            .map(|(code, value)| (value.clone(), code as u32))
            .collect();
        Dictionary {
            attribute: attribute.into(),
            entries,
            code_of,
        }
    }

    pub fn attribute(&self) -> &str {
        &self.attribute
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn code_of(&self, value: &str) -> Option<u32> {
        self.code_of.get(value).copied()
    }

    /// Panics on an invalid code; codes only come from this dictionary.
    pub fn value_of(&self, code: u32) -> &str {
        &self.entries[code as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    name: String,
    attributes: Vec<String>,
    dictionaries: Vec<Dictionary>,
    codes: Vec<u32>,
    row_count: u64,
}

impl Relation {
    /// Builds a relation from raw string rows. All rows must have
    /// `attributes.len()` fields.
    pub fn from_rows<R, S>(
        name: impl Into<String>,
        attributes: Vec<String>,
        rows: R,
    ) -> Result<Self>
    where
        R: IntoIterator,
        R::Item: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let rows: Vec<Vec<String>> = rows
            .into_iter()
            .map(|r| r.into_iter().map(Into::into).collect())
            .collect();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != attributes.len() {
                return Err(Error::MalformedCsv {
                    line: i as u64 + 1,
                    message: format!("expected {} fields, found {}", attributes.len(), row.len()),
                });
            }
        }
        Self::encode(name.into(), attributes, rows)
    }

    pub fn load_csv(path: impl AsRef<Path>, header: bool) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::read_csv(name, file, header)
    }

    pub fn read_csv(name: impl Into<String>, input: impl Read, header: bool) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(header)
            .flexible(false)
            .from_reader(input);

        let mut attributes: Option<Vec<String>> = None;
        if header {
            let head = reader.headers().map_err(csv_error)?;
            attributes = Some(head.iter().map(str::to_owned).collect());
        }

        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(csv_error)?;
            rows.push(record.iter().map(str::to_owned).collect::<Vec<_>>());
        }
        let attributes = match attributes {
            Some(a) => a,
            None => {
                let width = rows.first().map_or(0, Vec::len);
                (0..width).map(|i| format!("col{i}")).collect()
            }
        };
        Self::encode(name.into(), attributes, rows)
    }

    // Canonicalization pass: collect distinct values per column, sort, then
    // re-encode every row.
    fn encode(name: String, attributes: Vec<String>, rows: Vec<Vec<String>>) -> Result<Self> {
        if attributes.len() > MAX_COLUMNS {
            return Err(Error::TooManyColumns {
                count: attributes.len(),
                max: MAX_COLUMNS,
            });
        }
        let dictionaries: Vec<Dictionary> = attributes
            .iter()
            .enumerate()
            .map(|(col, attr)| {
                Dictionary::from_values(attr.clone(), rows.iter().map(|r| r[col].as_str()))
            })
            .collect();

        let mut codes = Vec::with_capacity(rows.len() * attributes.len());
        for row in &rows {
            for (col, value) in row.iter().enumerate() {
                codes.push(
                    dictionaries[col]
                        .code_of(value)
                        .expect("value collected above"),
                );
            }
        }
        Ok(Relation {
            name,
            attributes,
            dictionaries,
            codes,
            row_count: rows.len() as u64,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn arity(&self) -> usize {
        self.attributes.len()
    }

    pub fn dictionaries(&self) -> &[Dictionary] {
        &self.dictionaries
    }

    pub fn row_count(&self) -> u64 {
        self.row_count
    }

    pub fn column_index(&self, attribute: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a == attribute)
    }

    /// The code tuple of row `index`. Panics when out of range; use
    /// [`Relation::decode_row`] for checked access.
    pub fn row(&self, index: usize) -> &[u32] {
        let width = self.arity();
        &self.codes[index * width..(index + 1) * width]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> + '_ {
        let width = self.arity().max(1);
        // A zero-arity relation has no stored codes, so chunks yields nothing.
        self.codes.chunks_exact(width)
    }

    pub fn decode_row(&self, index: u64) -> Result<Vec<&str>> {
        if index >= self.row_count {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.row_count,
            });
        }
        Ok(self
            .row(index as usize)
            .iter()
            .zip(&self.dictionaries)
            .map(|(&code, dict)| dict.value_of(code))
            .collect())
    }

    pub fn write_csv(&self, out: impl Write, header: bool) -> Result<()> {
        let mut writer = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(out);
        let map_err = |e: csv::Error| Error::Format(e.to_string());
        if header {
            writer.write_record(&self.attributes).map_err(map_err)?;
        }
        for i in 0..self.row_count {
            writer.write_record(self.decode_row(i)?).map_err(map_err)?;
        }
        writer.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line());
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::io("<csv input>", e),
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => Error::MalformedCsv {
            line,
            message: format!("expected {expected_len} fields, found {len}"),
        },
        csv::ErrorKind::Utf8 { err, .. } => Error::MalformedCsv {
            line,
            message: format!("invalid utf-8: {err}"),
        },
        other => Error::MalformedCsv {
            line,
            message: format!("{other:?}"),
        },
    }
}
