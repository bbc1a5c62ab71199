use std::collections::BTreeSet;

use crate::query::VarId;
use crate::relation::Dictionary;

/// Join-wide value dictionaries, one per variable.
///
/// Each variable's dictionary is the sorted union of the raw values found in
/// every column bound to it, so codes compare and intersect consistently
/// across tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    names: Vec<String>,
    dictionaries: Vec<Dictionary>,
}

impl Domain {
    pub fn new(names: Vec<String>, dictionaries: Vec<Dictionary>) -> Self {
        assert_eq!(names.len(), dictionaries.len());
        Domain {
            names,
            dictionaries,
        }
    }

    pub fn builder(names: Vec<String>) -> DomainBuilder {
        let values = vec![BTreeSet::new(); names.len()];
        DomainBuilder { names, values }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, var: VarId) -> &str {
        &self.names[var]
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.names.iter().position(|n| n == name)
    }

    pub fn dictionary(&self, var: VarId) -> &Dictionary {
        &self.dictionaries[var]
    }

    pub fn decode(&self, var: VarId, code: u32) -> &str {
        self.dictionaries[var].value_of(code)
    }

    pub fn encode(&self, var: VarId, value: &str) -> Option<u32> {
        self.dictionaries[var].code_of(value)
    }
}

pub struct DomainBuilder {
    names: Vec<String>,
    values: Vec<BTreeSet<String>>,
}

impl DomainBuilder {
    pub fn add<I, S>(&mut self, var: VarId, values: I) -> &mut Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let set = &mut self.values[var];
        for v in values {
            let v = v.as_ref();
            if !set.contains(v) {
                set.insert(v.to_owned());
            }
        }
        self
    }

    pub fn build(self) -> Domain {
        let dictionaries = self
            .names
            .iter()
            .zip(self.values)
            .map(|(name, values)| Dictionary::from_values(name.clone(), values))
            .collect();
        Domain {
            names: self.names,
            dictionaries,
        }
    }
}
