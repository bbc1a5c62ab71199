//! End-to-end summarization: learn potentials, plan, infer, generate.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::cache::{CacheOutcome, FactorCache};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::factor::{learn_factor, Factor};
use crate::gfjs::{generate_gfjs_traced, GenerationStats, Gfjs};
use crate::graph::{
    agm_bound, fractional_edge_cover, plan_elimination, EdgeCover, EliminationPlan,
};
use crate::inference::{build_generator, Generator};
use crate::query::{build_join_graph, JoinGraph, JoinQuery, VarId};
use crate::relation::Relation;

/// Relations keyed by the path a query refers to them by.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    relations: HashMap<PathBuf, Arc<Relation>>,
}

impl Catalog {
    pub fn new() -> Self {
        Catalog::default()
    }

    pub fn insert(&mut self, path: impl Into<PathBuf>, relation: Relation) {
        self.relations.insert(path.into(), Arc::new(relation));
    }

    pub fn get(&self, path: &Path) -> Result<&Relation> {
        self.relations
            .get(path)
            .map(|r| r.as_ref())
            .ok_or_else(|| Error::MissingRelation(path.display().to_string()))
    }

    pub fn contains(&self, path: &Path) -> bool {
        self.relations.contains_key(path)
    }

    /// Loads every CSV the query mentions; shared paths are read once.
    pub fn load(query: &JoinQuery, header: bool) -> Result<Self> {
        let mut catalog = Catalog::new();
        for t in &query.tables {
            if !catalog.contains(&t.path) {
                catalog.insert(t.path.clone(), Relation::load_csv(&t.path, header)?);
            }
        }
        Ok(catalog)
    }

    /// Rows of the largest relation the query uses.
    pub fn largest(&self, query: &JoinQuery) -> Result<u64> {
        let mut n = 0;
        for t in &query.tables {
            n = n.max(self.get(&t.path)?.row_count());
        }
        Ok(n)
    }
}

/// Join-wide domain: each variable's dictionary is the union of the raw
/// values of every column bound to it.
pub fn build_domain(query: &JoinQuery, catalog: &Catalog) -> Result<Domain> {
    let mut builder = Domain::builder(query.variables());
    let names = query.variables();
    for t in &query.tables {
        let rel = catalog.get(&t.path)?;
        for b in &t.bindings {
            let col = rel
                .column_index(&b.column)
                .ok_or_else(|| Error::UnknownColumn {
                    relation: rel.name().to_owned(),
                    column: b.column.clone(),
                })?;
            let var = names
                .binary_search(&b.variable)
                .expect("query variables are sorted");
            builder.add(var, rel.dictionaries()[col].entries());
        }
    }
    Ok(builder.build())
}

/// Domain plus one potential per table reference, in query order.
#[derive(Debug, Clone)]
pub struct Learned {
    pub domain: Arc<Domain>,
    pub factors: Vec<Factor>,
}

pub fn learn(query: &JoinQuery, catalog: &Catalog) -> Result<Learned> {
    let domain = build_domain(query, catalog)?;
    let factors = query
        .tables
        .iter()
        .map(|t| learn_factor(catalog.get(&t.path)?, &t.bindings, &domain))
        .collect::<Result<Vec<_>>>()?;
    Ok(Learned {
        domain: Arc::new(domain),
        factors,
    })
}

/// Learned potentials plus per-table row counts, read through `cache`.
/// CSVs are only parsed on a cache miss.
#[derive(Debug, Clone)]
pub struct CachedLearn {
    pub learned: Learned,
    pub table_sizes: Vec<u64>,
    pub hits: usize,
}

pub fn learn_cached(query: &JoinQuery, cache: &FactorCache, header: bool) -> Result<CachedLearn> {
    let mut tables = Vec::with_capacity(query.tables.len());
    let mut hits = 0;
    for t in &query.tables {
        let columns: Vec<String> = t.bindings.iter().map(|b| b.column.clone()).collect();
        let (table, outcome) = cache.get_or_learn(&t.path, header, &columns)?;
        if outcome == CacheOutcome::Hit {
            hits += 1;
        }
        tables.push(table);
    }

    let names = query.variables();
    let mut builder = Domain::builder(names.clone());
    for (t, table) in query.tables.iter().zip(&tables) {
        for b in &t.bindings {
            let var = names
                .binary_search(&b.variable)
                .expect("query variables are sorted");
            builder.add(var, table.values(&b.column)?);
        }
    }
    let domain = builder.build();
    let factors = query
        .tables
        .iter()
        .zip(&tables)
        .map(|(t, table)| table.to_factor(&t.bindings, &domain))
        .collect::<Result<Vec<_>>>()?;
    Ok(CachedLearn {
        learned: Learned {
            domain: Arc::new(domain),
            factors,
        },
        table_sizes: tables.iter().map(|t| t.rows()).collect(),
        hits,
    })
}

/// Resolves the query's projection and root to variable ids.
pub fn projection_ids(query: &JoinQuery, graph: &JoinGraph) -> Result<(Vec<VarId>, Option<VarId>)> {
    let id = |name: &str| {
        graph
            .var_id(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_owned()))
    };
    let projection = query
        .projection
        .iter()
        .map(|n| id(n))
        .collect::<Result<Vec<_>>>()?;
    let root = query.root.as_deref().map(id).transpose()?;
    Ok((projection, root))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PhaseTimings {
    pub learn: Duration,
    pub plan: Duration,
    pub potential_join: Duration,
    pub generator_build: Duration,
    pub gfjs_generate: Duration,
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub graph: JoinGraph,
    pub plan: EliminationPlan,
    pub cover: EdgeCover,
    pub generator: Generator,
    pub gfjs: Gfjs,
    pub generation: GenerationStats,
    pub timings: PhaseTimings,
    /// Rows of the largest input relation.
    pub largest_table: u64,
    /// The edge-cover bound over distinct input tuples. Duplicate rows can
    /// push the bag result past `cover.bound`; the number of distinct result
    /// tuples never exceeds this one.
    pub set_bound: f64,
}

impl Summary {
    /// Projection in query order, as ids into the summary's domain.
    pub fn output_order(&self, query: &JoinQuery) -> Vec<VarId> {
        query
            .projection
            .iter()
            .map(|n| {
                self.gfjs
                    .domain()
                    .var_id(n)
                    .expect("projected variables are summarized")
            })
            .collect()
    }
}

/// Runs the whole pipeline on in-memory relations.
pub fn summarize(query: &JoinQuery, catalog: &Catalog) -> Result<Summary> {
    let started = Instant::now();
    let learned = learn(query, catalog)?;
    let learn_time = started.elapsed();
    let sizes = query
        .tables
        .iter()
        .map(|t| catalog.get(&t.path).map(Relation::row_count))
        .collect::<Result<Vec<u64>>>()?;
    summarize_learned(query, learned, &sizes, learn_time)
}

/// Runs planning, inference and generation on already learned potentials.
/// `table_sizes` are the row counts of the query's tables, in order.
pub fn summarize_learned(
    query: &JoinQuery,
    learned: Learned,
    table_sizes: &[u64],
    learn_time: Duration,
) -> Result<Summary> {
    let mut timings = PhaseTimings {
        learn: learn_time,
        ..PhaseTimings::default()
    };

    let started = Instant::now();
    let graph = build_join_graph(query)?;
    let (projection, root) = projection_ids(query, &graph)?;
    let plan = plan_elimination(&graph, &projection, root)?;
    let cover = fractional_edge_cover(&graph, table_sizes);
    timings.plan = started.elapsed();

    let distinct: Vec<u64> = learned.factors.iter().map(|f| f.len() as u64).collect();
    let set_bound = agm_bound(&cover.weights, &distinct);

    let started = Instant::now();
    let generator = build_generator(&plan, learned.factors)?;
    let build_time = started.elapsed();
    timings.potential_join = generator.stats().potential_join_time;
    timings.generator_build = build_time.saturating_sub(timings.potential_join);

    let started = Instant::now();
    let (gfjs, generation) = generate_gfjs_traced(&generator, Arc::clone(&learned.domain))?;
    timings.gfjs_generate = started.elapsed();

    Ok(Summary {
        graph,
        plan,
        cover,
        generator,
        gfjs,
        generation,
        timings,
        largest_table: table_sizes.iter().copied().max().unwrap_or(0),
        set_bound,
    })
}
