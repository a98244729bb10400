use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{PolyError, Polynomial, VarId};

/// Append-only table of named scalar variables. A [`VarId`] is the position of its
/// variable in the table and is never reused.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Registry {
    names: Vec<String>,
    lookup: HashMap<String, VarId>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>) -> Result<VarId, PolyError> {
        let name = name.into();
        if name.is_empty() {
            return Err(PolyError::EmptyName);
        }
        if name.contains(|c: char| c.is_whitespace() || "*^+".contains(c)) {
            return Err(PolyError::BadName(name));
        }
        if self.lookup.contains_key(&name) {
            return Err(PolyError::DuplicateName(name));
        }
        let id = VarId(self.names.len() as u32);
        self.lookup.insert(name.clone(), id);
        self.names.push(name);
        Ok(id)
    }

    /// Registers `prefix[0]`, `prefix[1]`, ... and returns the ids in order.
    pub fn add_block(&mut self, prefix: &str, n: usize) -> Result<Vec<VarId>, PolyError> {
        (0..n).map(|i| self.add(format!("{prefix}[{i}]"))).collect()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.names[v.index()]
    }

    pub fn get(&self, name: &str) -> Option<VarId> {
        self.lookup.get(name).copied()
    }

    pub fn contains(&self, v: VarId) -> bool {
        v.index() < self.names.len()
    }

    pub fn ids(&self) -> impl Iterator<Item = VarId> {
        (0..self.names.len() as u32).map(VarId)
    }

    /// Checks that every variable of `p` belongs to this registry.
    pub fn check(&self, p: &Polynomial) -> Result<(), PolyError> {
        match p.support_vars().into_iter().find(|v| !self.contains(*v)) {
            Some(v) => Err(PolyError::ForeignVariable(v)),
            None => Ok(()),
        }
    }
}

impl From<Vec<String>> for Registry {
    fn from(names: Vec<String>) -> Self {
        let lookup = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), VarId(i as u32)))
            .collect();
        Self { names, lookup }
    }
}

impl From<Registry> for Vec<String> {
    fn from(r: Registry) -> Self {
        r.names
    }
}
