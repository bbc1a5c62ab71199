//! Small hand-built and seeded random join instances.
//!
//! Instances live in memory (a query plus a [`Catalog`] keyed by relative
//! paths) and can be written to a directory as CSV files and a query file.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::pipeline::Catalog;
use crate::query::{Binding, JoinQuery, TableRef};
use crate::relation::Relation;

pub const QUERY_FILE: &str = "query.txt";

#[derive(Debug, Clone)]
pub struct Instance {
    pub query: JoinQuery,
    pub catalog: Catalog,
}

impl Instance {
    /// One table per entry: `(alias, columns bound to variables of the same
    /// name, rows)`. Every variable is projected.
    #[allow(clippy::type_complexity)]
    pub fn new(tables: &[(&str, &[&str], Vec<Vec<String>>)]) -> Result<Self> {
        let mut catalog = Catalog::new();
        let mut refs = Vec::with_capacity(tables.len());
        for (alias, vars, rows) in tables {
            let path = PathBuf::from(format!("{}.csv", alias.to_lowercase()));
            let columns: Vec<String> = vars.iter().map(|v| v.to_string()).collect();
            catalog.insert(
                path.clone(),
                Relation::from_rows(*alias, columns.clone(), rows.clone())?,
            );
            refs.push(TableRef {
                alias: alias.to_string(),
                path,
                bindings: columns
                    .iter()
                    .map(|c| Binding {
                        column: c.clone(),
                        variable: c.clone(),
                    })
                    .collect(),
            });
        }
        let mut query = JoinQuery {
            tables: refs,
            projection: Vec::new(),
            root: None,
        };
        query.projection = query.variables();
        Ok(Instance { query, catalog })
    }

    pub fn with_projection(mut self, projection: &[&str]) -> Self {
        self.query.projection = projection.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn with_root(mut self, root: &str) -> Self {
        self.query.root = Some(root.to_owned());
        self
    }

    /// Writes each relation as a CSV with a header row, plus the query file.
    /// Returns the query file's path.
    pub fn write_to(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for t in &self.query.tables {
            let path = dir.join(&t.path);
            let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            self.catalog.get(&t.path)?.write_csv(file, true)?;
        }
        let path = dir.join(QUERY_FILE);
        fs::write(&path, self.query.to_string()).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn table_sizes(&self) -> Result<Vec<u64>> {
        self.query
            .tables
            .iter()
            .map(|t| self.catalog.get(&t.path).map(Relation::row_count))
            .collect()
    }
}

fn rows(pairs: &[&[&str]]) -> Vec<Vec<String>> {
    pairs
        .iter()
        .map(|r| r.iter().map(|s| s.to_string()).collect())
        .collect()
}

/// Three-table chain A-B-C-D with duplicate rows and the dangling values
/// b3 (only in T2) and c3 (only in T3). Join size 14.
pub fn chain3() -> Instance {
    Instance::new(&[
        (
            "T1",
            &["A", "B"],
            rows(&[&["a1", "b1"], &["a1", "b1"], &["a2", "b1"], &["a2", "b2"]]),
        ),
        (
            "T2",
            &["B", "C"],
            rows(&[
                &["b1", "c1"],
                &["b1", "c2"],
                &["b1", "c2"],
                &["b2", "c1"],
                &["b2", "c4"],
                &["b3", "c4"],
            ]),
        ),
        (
            "T3",
            &["C", "D"],
            rows(&[&["c1", "d1"], &["c1", "d1"], &["c2", "d1"], &["c3", "d2"]]),
        ),
    ])
    .expect("fixture rows are well formed")
}

/// Triangle A-B-C with a few matching and dangling rows per table.
pub fn triangle() -> Instance {
    Instance::new(&[
        (
            "R",
            &["A", "B"],
            rows(&[&["a1", "b1"], &["a1", "b2"], &["a2", "b1"], &["a3", "b3"]]),
        ),
        (
            "S",
            &["B", "C"],
            rows(&[&["b1", "c1"], &["b1", "c2"], &["b2", "c1"], &["b4", "c3"]]),
        ),
        (
            "T",
            &["A", "C"],
            rows(&[&["a1", "c1"], &["a1", "c1"], &["a2", "c2"], &["a2", "c9"]]),
        ),
    ])
    .expect("fixture rows are well formed")
}

/// Two tables whose join keys never meet.
pub fn empty_join() -> Instance {
    Instance::new(&[
        ("L", &["A", "B"], rows(&[&["a1", "b1"], &["a2", "b2"]])),
        ("R", &["B", "C"], rows(&[&["b3", "c1"], &["b4", "c2"]])),
    ])
    .expect("fixture rows are well formed")
}

/// Chain A-B-C-D of three 1,000-row tables over ten values per variable,
/// every table many-to-many. Pair multiplicities in the first table are
/// skewed. The join has exactly 10,000,000 rows but only 10,000 distinct
/// ones.
pub fn redundancy() -> Instance {
    let mut t1 = Vec::with_capacity(1000);
    let mut left = 1000usize;
    for a in 0..10 {
        for b in 0..10 {
            let n = if a == 9 && b == 9 {
                left
            } else {
                1 + (a * 7 + b * 3) % 19
            };
            left -= n;
            for _ in 0..n {
                t1.push(vec![format!("a{a}"), format!("b{b}")]);
            }
        }
    }
    let uniform = |x: &str, y: &str| -> Vec<Vec<String>> {
        let mut out = Vec::with_capacity(1000);
        for i in 0..10 {
            for j in 0..10 {
                for _ in 0..10 {
                    out.push(vec![format!("{x}{i}"), format!("{y}{j}")]);
                }
            }
        }
        out
    };
    Instance::new(&[
        ("T1", &["A", "B"], t1),
        ("T2", &["B", "C"], uniform("b", "c")),
        ("T3", &["C", "D"], uniform("c", "d")),
    ])
    .expect("fixture rows are well formed")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    /// `k` binary tables in a path.
    Chain(usize),
    /// `k` binary tables sharing one centre variable.
    Star(usize),
    /// `k` binary tables forming a heap-ordered binary tree of variables.
    BinaryTree(usize),
    Triangle,
    FourCycle,
}

impl Shape {
    /// Variable pairs, one per table.
    pub fn edges(self) -> Vec<(usize, usize)> {
        match self {
            Shape::Chain(k) => (0..k).map(|i| (i, i + 1)).collect(),
            Shape::Star(k) => (1..=k).map(|i| (0, i)).collect(),
            Shape::BinaryTree(k) => (1..=k).map(|i| ((i - 1) / 2, i)).collect(),
            Shape::Triangle => vec![(0, 1), (1, 2), (2, 0)],
            Shape::FourCycle => vec![(0, 1), (1, 2), (2, 3), (3, 0)],
        }
    }

    pub fn is_tree(self) -> bool {
        !matches!(self, Shape::Triangle | Shape::FourCycle)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RandomParams {
    pub max_rows: usize,
    pub max_distinct: usize,
    /// Add rows whose join values appear in no other table.
    pub inject_uir: bool,
    /// Repeat some rows to create redundancy in the result.
    pub duplicate_rows: bool,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            max_rows: 50,
            max_distinct: 10,
            inject_uir: false,
            duplicate_rows: false,
        }
    }
}

/// Random instance of `shape`. Variables are `V0`, `V1`, ...; table `i`
/// binds columns `x`, `y` to its edge's endpoints.
pub fn random_instance<R: Rng + ?Sized>(
    shape: Shape,
    params: RandomParams,
    rng: &mut R,
) -> Instance {
    let edges = shape.edges();
    let nvars = edges.iter().map(|&(a, b)| a.max(b)).max().unwrap_or(0) + 1;
    let distinct: Vec<usize> = (0..nvars)
        .map(|_| rng.gen_range(1..=params.max_distinct))
        .collect();

    let mut degree = vec![0usize; nvars];
    for &(u, v) in &edges {
        degree[u] += 1;
        degree[v] += 1;
    }
    let reserve =
        if params.inject_uir { 3 } else { 0 } + if params.duplicate_rows { 10 } else { 0 };
    let max_base = params.max_rows.saturating_sub(reserve).max(1);

    let mut catalog = Catalog::new();
    let mut tables = Vec::with_capacity(edges.len());
    for (i, &(u, v)) in edges.iter().enumerate() {
        let base = rng.gen_range(1..=max_base);
        let mut body: Vec<Vec<String>> = (0..base)
            .map(|_| {
                vec![
                    format!("v{u}_{}", rng.gen_range(0..distinct[u])),
                    format!("v{v}_{}", rng.gen_range(0..distinct[v])),
                ]
            })
            .collect();
        let join_sides: Vec<usize> = [(0, u), (1, v)]
            .iter()
            .filter(|&&(_, var)| degree[var] > 1)
            .map(|&(side, _)| side)
            .collect();
        if params.inject_uir && !join_sides.is_empty() {
            // A join value tagged with the table index occurs in no other
            // table, so these rows cannot reach the result.
            let dangling = rng.gen_range(1..=3usize);
            for k in 0..dangling {
                let mut row = body.choose(rng).cloned().expect("at least one row");
                let side = *join_sides.choose(rng).expect("non-empty");
                row[side] = format!("u{i}_{k}");
                body.push(row);
            }
        }
        if params.duplicate_rows {
            let copies = rng.gen_range(1..=body.len().min(10));
            for _ in 0..copies {
                let row = body.choose(rng).cloned().expect("at least one row");
                body.push(row);
            }
        }
        body.shuffle(rng);

        let alias = format!("T{i}");
        let path = PathBuf::from(format!("t{i}.csv"));
        let relation = Relation::from_rows(alias.clone(), vec!["x".into(), "y".into()], body)
            .expect("rows have two fields");
        catalog.insert(path.clone(), relation);
        tables.push(TableRef {
            alias,
            path,
            bindings: vec![
                Binding {
                    column: "x".into(),
                    variable: format!("V{u}"),
                },
                Binding {
                    column: "y".into(),
                    variable: format!("V{v}"),
                },
            ],
        });
    }

    let mut query = JoinQuery {
        tables,
        projection: Vec::new(),
        root: None,
    };
    query.projection = query.variables();
    Instance { query, catalog }
}

/// A random non-empty proper subset of the instance's variables (the whole
/// set when there is only one), in random order.
pub fn random_projection<R: Rng + ?Sized>(instance: &Instance, rng: &mut R) -> Vec<String> {
    let mut vars = instance.query.variables();
    vars.shuffle(rng);
    let keep = if vars.len() == 1 {
        1
    } else {
        rng.gen_range(1..vars.len())
    };
    vars.truncate(keep);
    vars
}

/// Named fixtures for the command line.
pub fn by_name(name: &str) -> Option<Instance> {
    Some(match name {
        "chain3" => chain3(),
        "triangle" => triangle(),
        "empty" => empty_join(),
        "redundancy" => redundancy(),
        _ => return None,
    })
}

pub const NAMES: &[&str] = &["chain3", "triangle", "empty", "redundancy"];
