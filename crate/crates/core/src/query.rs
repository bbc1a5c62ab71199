//! Join-query files and the join hypergraph.
//!
//! A query file has one directive per line:
//!
//! ```text
//! # comment
//! table <alias> <csv-path> <col=Var> [<col=Var> ...]
//! project <Var> [<Var> ...]
//! root <Var>
//! ```
//!
//! Equi-join predicates are expressed by binding columns of different tables
//! to the same variable name.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Index of a variable in [`JoinGraph::variables`]. Variables are sorted by
/// name, so comparing ids is the same as comparing names.
pub type VarId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binding {
    pub column: String,
    pub variable: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableRef {
    pub alias: String,
    pub path: PathBuf,
    pub bindings: Vec<Binding>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinQuery {
    pub tables: Vec<TableRef>,
    pub projection: Vec<String>,
    pub root: Option<String>,
}

impl JoinQuery {
    /// All distinct variable names, sorted.
    pub fn variables(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self
            .tables
            .iter()
            .flat_map(|t| t.bindings.iter().map(|b| b.variable.as_str()))
            .collect();
        set.into_iter().map(str::to_owned).collect()
    }

    /// Variables bound by at least two table references.
    pub fn join_variables(&self) -> Vec<String> {
        let mut count: HashMap<&str, usize> = HashMap::new();
        for t in &self.tables {
            for b in &t.bindings {
                *count.entry(&b.variable).or_default() += 1;
            }
        }
        let mut out: Vec<String> = count
            .into_iter()
            .filter(|&(_, n)| n >= 2)
            .map(|(v, _)| v.to_owned())
            .collect();
        out.sort();
        out
    }

    /// Resolves relative csv paths against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        for t in &mut self.tables {
            if t.path.is_relative() {
                t.path = base.join(&t.path);
            }
        }
    }
}

/// Renders the query in the grammar [`parse_query`] accepts.
impl std::fmt::Display for JoinQuery {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for t in &self.tables {
            write!(f, "table {} {}", t.alias, t.path.display())?;
            for b in &t.bindings {
                write!(f, " {}={}", b.column, b.variable)?;
            }
            writeln!(f)?;
        }
        writeln!(f, "project {}", self.projection.join(" "))?;
        if let Some(r) = &self.root {
            writeln!(f, "root {r}")?;
        }
        Ok(())
    }
}

fn valid_identifier(s: &str) -> bool {
    !s.is_empty() && !s.contains([',', '=', ':', '"'])
}

pub fn parse_query(text: &str) -> Result<JoinQuery> {
    let mut tables: Vec<TableRef> = Vec::new();
    let mut projection: Option<(usize, Vec<String>)> = None;
    let mut root: Option<(usize, String)> = None;
    let syntax = |line: usize, message: String| Error::Syntax { line, message };

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let directive = tokens.next().unwrap_or_default();
        let args: Vec<&str> = tokens.collect();
        match directive {
            "table" => {
                if args.len() < 3 {
                    return Err(syntax(
                        line,
                        "expected `table <alias> <csv-path> <col=Var>...`".into(),
                    ));
                }
                let alias = args[0].to_owned();
                if !valid_identifier(&alias) {
                    return Err(syntax(line, format!("invalid alias `{alias}`")));
                }
                if tables.iter().any(|t| t.alias == alias) {
                    return Err(Error::DuplicateAlias(alias));
                }
                let mut bindings = Vec::new();
                let mut seen_cols = HashSet::new();
                let mut seen_vars = HashSet::new();
                for binding in &args[2..] {
                    let (column, variable) = binding.split_once('=').ok_or_else(|| {
                        syntax(
                            line,
                            format!("binding `{binding}` is not of the form col=Var"),
                        )
                    })?;
                    if column.is_empty() || !valid_identifier(variable) {
                        return Err(syntax(line, format!("invalid binding `{binding}`")));
                    }
                    if !seen_cols.insert(column) {
                        return Err(syntax(line, format!("column `{column}` bound twice")));
                    }
                    if !seen_vars.insert(variable) {
                        return Err(syntax(
                            line,
                            format!("variable `{variable}` bound twice in one table"),
                        ));
                    }
                    bindings.push(Binding {
                        column: column.to_owned(),
                        variable: variable.to_owned(),
                    });
                }
                tables.push(TableRef {
                    alias,
                    path: PathBuf::from(args[1]),
                    bindings,
                });
            }
            "project" => {
                if projection.is_some() {
                    return Err(syntax(line, "duplicate `project` directive".into()));
                }
                if args.is_empty() {
                    return Err(syntax(line, "`project` needs at least one variable".into()));
                }
                let mut seen = HashSet::new();
                for v in &args {
                    if !seen.insert(*v) {
                        return Err(syntax(line, format!("variable `{v}` projected twice")));
                    }
                }
                projection = Some((line, args.iter().map(|s| s.to_string()).collect()));
            }
            "root" => {
                if root.is_some() {
                    return Err(syntax(line, "duplicate `root` directive".into()));
                }
                match args.as_slice() {
                    [v] => root = Some((line, v.to_string())),
                    _ => return Err(syntax(line, "expected `root <Var>`".into())),
                }
            }
            other => return Err(syntax(line, format!("unknown directive `{other}`"))),
        }
    }

    if tables.is_empty() {
        return Err(syntax(
            text.lines().count() + 1,
            "query has no `table` directive".into(),
        ));
    }
    let (_, projection) = projection.ok_or_else(|| {
        syntax(
            text.lines().count() + 1,
            "query has no `project` directive".into(),
        )
    })?;

    let bound: HashSet<&str> = tables
        .iter()
        .flat_map(|t| t.bindings.iter().map(|b| b.variable.as_str()))
        .collect();
    if let Some(v) = projection.iter().find(|v| !bound.contains(v.as_str())) {
        return Err(Error::UnknownVariable(v.clone()));
    }
    let root = match root {
        Some((line, v)) => {
            if !bound.contains(v.as_str()) {
                return Err(Error::UnknownVariable(v));
            }
            if !projection.contains(&v) {
                return Err(syntax(
                    line,
                    format!("root `{v}` is not a projected variable"),
                ));
            }
            Some(v)
        }
        None => None,
    };

    Ok(JoinQuery {
        tables,
        projection,
        root,
    })
}

/// Reads and parses a query file; relative csv paths are resolved against
/// the file's directory.
pub fn load_query(path: impl AsRef<Path>) -> Result<JoinQuery> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut query = parse_query(&text)?;
    if let Some(dir) = path.parent() {
        query.resolve_paths(dir);
    }
    Ok(query)
}

/// The qualitative model: one node per variable, one hyperedge per table
/// reference, and the pairwise edges implied by co-bound variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinGraph {
    variables: Vec<String>,
    hyperedges: Vec<Vec<VarId>>,
    adjacency: Vec<BTreeSet<VarId>>,
}

impl JoinGraph {
    /// Builds a graph from variable names and hyperedges given as name lists.
    /// Does not check connectivity.
    pub fn from_hyperedges<S: AsRef<str>>(names: &[S], hyperedges: &[Vec<S>]) -> Self {
        let set: BTreeSet<String> = names.iter().map(|s| s.as_ref().to_owned()).collect();
        let variables: Vec<String> = set.into_iter().collect();
        let id = |n: &str| {
            variables
                .binary_search_by(|v| v.as_str().cmp(n))
                .expect("declared variable")
        };
        let edges: Vec<Vec<VarId>> = hyperedges
            .iter()
            .map(|e| {
                let ids: BTreeSet<VarId> = e.iter().map(|n| id(n.as_ref())).collect();
                ids.into_iter().collect()
            })
            .collect();
        Self::from_ids(variables, edges)
    }

    pub(crate) fn from_ids(variables: Vec<String>, hyperedges: Vec<Vec<VarId>>) -> Self {
        let mut adjacency = vec![BTreeSet::new(); variables.len()];
        for e in &hyperedges {
            for (i, &u) in e.iter().enumerate() {
                for &v in &e[i + 1..] {
                    if u != v {
                        adjacency[u].insert(v);
                        adjacency[v].insert(u);
                    }
                }
            }
        }
        JoinGraph {
            variables,
            hyperedges,
            adjacency,
        }
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.variables[v]
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.variables
            .binary_search_by(|v| v.as_str().cmp(name))
            .ok()
    }

    pub fn hyperedges(&self) -> &[Vec<VarId>] {
        &self.hyperedges
    }

    pub fn neighbors(&self, v: VarId) -> &BTreeSet<VarId> {
        &self.adjacency[v]
    }

    pub fn adjacency(&self) -> &[BTreeSet<VarId>] {
        &self.adjacency
    }

    /// Pairwise edges `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(VarId, VarId)> {
        let mut out = Vec::new();
        for (u, nbrs) in self.adjacency.iter().enumerate() {
            out.extend(nbrs.range(u + 1..).map(|&v| (u, v)));
        }
        out
    }

    pub fn connected_components(&self) -> usize {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut components = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            components += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(u) = stack.pop() {
                for &v in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        components
    }

    /// True when the pairwise graph is a tree (connected and acyclic).
    pub fn is_tree(&self) -> bool {
        !self.is_empty() && self.connected_components() == 1 && self.edges().len() == self.len() - 1
    }
}

pub fn build_join_graph(query: &JoinQuery) -> Result<JoinGraph> {
    let names = query.variables();
    let edges: Vec<Vec<String>> = query
        .tables
        .iter()
        .map(|t| t.bindings.iter().map(|b| b.variable.clone()).collect())
        .collect();
    let graph = JoinGraph::from_hyperedges(&names, &edges);
    let components = graph.connected_components();
    if components > 1 {
        return Err(Error::DisconnectedGraph { components });
    }
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHAIN: &str = "\
# chain of three tables
table T1 t1.csv A=A B=B
table T2 t2.csv B=B C=C
table T3 t3.csv C=C D=D
project A B C D
";

    #[test]
    fn display_round_trips() {
        let mut q = parse_query(CHAIN).unwrap();
        q.root = Some("B".into());
        assert_eq!(parse_query(&q.to_string()).unwrap(), q);
    }

    #[test]
    fn parses_chain() {
        let q = parse_query(CHAIN).unwrap();
        assert_eq!(q.tables.len(), 3);
        assert_eq!(q.variables(), ["A", "B", "C", "D"]);
        assert_eq!(q.join_variables(), ["B", "C"]);
        assert_eq!(q.root, None);
    }

    #[test]
    fn unbound_projection() {
        let err = parse_query("table T t.csv a=A\nproject X\n").unwrap_err();
        assert!(matches!(err, Error::UnknownVariable(v) if v == "X"));
    }

    #[test]
    fn single_table_has_no_join_variables() {
        let q = parse_query("table T t.csv a=A b=B\nproject A B\n").unwrap();
        assert!(q.join_variables().is_empty());
        let g = build_join_graph(&q).unwrap();
        assert_eq!(g.edges(), [(0, 1)]);
    }

    #[test]
    fn duplicate_alias() {
        let err = parse_query("table T a.csv x=X\ntable T b.csv x=X\nproject X\n").unwrap_err();
        assert!(matches!(err, Error::DuplicateAlias(a) if a == "T"));
    }

    #[test]
    fn self_join_via_aliases() {
        let q =
            parse_query("table F1 f.csv u=U v=V\ntable F2 f.csv u=V v=W\nproject U W\n").unwrap();
        assert_eq!(q.tables[0].path, q.tables[1].path);
        assert_eq!(q.join_variables(), ["V"]);
    }

    #[test]
    fn syntax_errors_carry_lines() {
        for (text, expected) in [
            ("table T t.csv A\nproject A\n", 1),
            ("table T t.csv a=A\nselect A\n", 2),
            ("table T t.csv a=A\n\nproject\n", 3),
            ("table T t.csv a=A b=A\nproject A\n", 1),
            ("table T t.csv a=A b=B\nproject A\nroot B\n", 3),
        ] {
            match parse_query(text) {
                Err(Error::Syntax { line, .. }) => assert_eq!(line, expected, "{text}"),
                other => panic!("expected syntax error for {text:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn chain_graph_is_a_path() {
        let g = build_join_graph(&parse_query(CHAIN).unwrap()).unwrap();
        assert_eq!(g.hyperedges(), [vec![0, 1], vec![1, 2], vec![2, 3]]);
        assert_eq!(g.edges(), [(0, 1), (1, 2), (2, 3)]);
        assert!(g.is_tree());
    }

    #[test]
    fn triangle_graph_is_a_cycle() {
        let q = parse_query(
            "table T1 a.csv x=A1 y=A2\ntable T2 b.csv x=A2 y=A3\ntable T3 c.csv x=A3 y=A1\nproject A1 A2 A3\n",
        )
        .unwrap();
        let g = build_join_graph(&q).unwrap();
        assert_eq!(g.edges().len(), 3);
        assert!(!g.is_tree());
        assert!(g.adjacency().iter().all(|n| n.len() == 2));
    }

    #[test]
    fn disconnected_rejected() {
        let q = parse_query("table T1 a.csv x=A\ntable T2 b.csv y=B\nproject A B\n").unwrap();
        assert!(matches!(
            build_join_graph(&q),
            Err(Error::DisconnectedGraph { components: 2 })
        ));
    }
}
