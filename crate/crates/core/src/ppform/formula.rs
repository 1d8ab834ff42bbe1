use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{codec_value, from_value, parse_doc, RelationalStructure};

/// A constraint `rel(scope)`; scope entries index the formula's variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    pub rel: String,
    pub scope: Vec<usize>,
}

/// A primitive positive formula: a conjunction of atoms with some variables
/// free (in a fixed order) and the rest existentially quantified.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PPFormula {
    names: Vec<String>,
    free: Vec<usize>,
    atoms: Vec<Atom>,
}

impl PPFormula {
    /// Builds a formula from variable names; variables are numbered in order
    /// of first appearance, free ones first.
    pub fn new(free: &[&str], atoms: &[(&str, &[&str])]) -> Result<Self> {
        let mut phi = PPFormula::default();
        for name in free {
            if phi.var(name).is_some() {
                return Err(Error::invalid(format!("free variable '{name}' listed twice")));
            }
            let v = phi.add_named_var(name);
            phi.free.push(v);
        }
        for (rel, scope) in atoms {
            let scope = scope
                .iter()
                .map(|n| phi.var(n).unwrap_or_else(|| phi.add_named_var(n)))
                .collect();
            phi.atoms.push(Atom {
                rel: rel.to_string(),
                scope,
            });
        }
        Ok(phi)
    }

    /// Builds a formula from raw parts, validating indices.
    pub fn from_parts(names: Vec<String>, free: Vec<usize>, atoms: Vec<Atom>) -> Result<Self> {
        let n = names.len();
        if names.iter().collect::<BTreeSet<_>>().len() != n {
            return Err(Error::invalid("variable names must be distinct"));
        }
        if free.iter().collect::<BTreeSet<_>>().len() != free.len() {
            return Err(Error::invalid("free variables must be distinct"));
        }
        if free.iter().chain(atoms.iter().flat_map(|a| &a.scope)).any(|&v| v >= n) {
            return Err(Error::invalid("variable index out of range"));
        }
        if let Some(a) = atoms.iter().find(|a| a.scope.is_empty()) {
            return Err(Error::invalid(format!("atom '{}' has an empty scope", a.rel)));
        }
        Ok(PPFormula { names, free, atoms })
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn var(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn free(&self) -> &[usize] {
        &self.free
    }

    pub fn is_free(&self, v: usize) -> bool {
        self.free.contains(&v)
    }

    pub fn bound(&self) -> Vec<usize> {
        (0..self.num_vars()).filter(|v| !self.is_free(*v)).collect()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Same formula with a different list of free variables.
    pub fn with_free(&self, free: Vec<usize>) -> Result<Self> {
        PPFormula::from_parts(self.names.clone(), free, self.atoms.clone())
    }

    /// Adds a bound variable whose name starts with `base`; returns its index.
    pub fn add_var(&mut self, base: &str) -> usize {
        let name = if self.var(base).is_none() {
            base.to_string()
        } else {
            (1..)
                .map(|i| format!("{base}_{i}"))
                .find(|n| self.var(n).is_none())
                .expect("unbounded name supply")
        };
        self.add_named_var(&name)
    }

    fn add_named_var(&mut self, name: &str) -> usize {
        self.names.push(name.to_string());
        self.names.len() - 1
    }

    pub fn add_atom(&mut self, rel: impl Into<String>, scope: Vec<usize>) {
        assert!(scope.iter().all(|&v| v < self.num_vars()), "scope out of range");
        self.atoms.push(Atom {
            rel: rel.into(),
            scope,
        });
    }

    pub(crate) fn atoms_mut(&mut self) -> &mut Vec<Atom> {
        &mut self.atoms
    }

    /// Drops variables not in `keep`, renumbering the rest in order. Atoms
    /// must only mention kept variables.
    pub(crate) fn retain_vars(&mut self, keep: &BTreeSet<usize>) {
        let map: Vec<Option<usize>> = {
            let mut next = 0;
            (0..self.num_vars())
                .map(|v| {
                    keep.contains(&v).then(|| {
                        next += 1;
                        next - 1
                    })
                })
                .collect()
        };
        self.names = keep.iter().map(|&v| self.names[v].clone()).collect();
        self.free = self.free.iter().filter_map(|&v| map[v]).collect();
        for atom in &mut self.atoms {
            for v in &mut atom.scope {
                *v = map[*v].expect("atom mentions a dropped variable");
            }
        }
    }

    /// Checks that every atom names a relation of `a` with matching arity.
    pub fn check(&self, a: &RelationalStructure) -> Result<()> {
        for (i, atom) in self.atoms.iter().enumerate() {
            let rel = a.relation(&atom.rel).ok_or_else(|| {
                Error::parse(format!("atoms[{i}].rel"), format!("unknown relation '{}'", atom.rel))
            })?;
            if rel.arity() != atom.scope.len() {
                return Err(Error::ArityMismatch {
                    location: format!("atoms[{i}].scope"),
                    expected: rel.arity(),
                    found: atom.scope.len(),
                });
            }
        }
        Ok(())
    }

    /// Largest atom arity, at least 2.
    pub fn theta(&self) -> usize {
        self.atoms.iter().map(|a| a.scope.len()).max().unwrap_or(0).max(2)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomDoc {
    rel: String,
    scope: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FormulaDoc {
    free: Vec<String>,
    atoms: Vec<AtomDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    bound: Vec<String>,
}

impl PPFormula {
    /// `{"free": [...], "atoms": [{"rel", "scope"}], "bound"?: [...]}`;
    /// `bound` lists variables that occur in no atom and are not free.
    pub fn to_json_value(&self) -> Value {
        let used: BTreeSet<usize> = self
            .atoms
            .iter()
            .flat_map(|a| a.scope.iter().copied())
            .chain(self.free.iter().copied())
            .collect();
        codec_value(&FormulaDoc {
            free: self.free.iter().map(|&v| self.names[v].clone()).collect(),
            atoms: self
                .atoms
                .iter()
                .map(|a| AtomDoc {
                    rel: a.rel.clone(),
                    scope: a.scope.iter().map(|&v| self.names[v].clone()).collect(),
                })
                .collect(),
            bound: (0..self.num_vars())
                .filter(|v| !used.contains(v))
                .map(|v| self.names[v].clone())
                .collect(),
        })
    }

    pub fn to_json(&self) -> String {
        self.to_json_value().to_string()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = parse_doc(text)?;
        Self::from_json_value(&value)
    }

    pub fn from_json_value(value: &Value) -> Result<Self> {
        let doc: FormulaDoc = from_value(value, "formula")?;
        let free: Vec<&str> = doc.free.iter().map(String::as_str).collect();
        let scopes: Vec<Vec<&str>> = doc
            .atoms
            .iter()
            .map(|a| a.scope.iter().map(String::as_str).collect())
            .collect();
        let atoms: Vec<(&str, &[&str])> = doc
            .atoms
            .iter()
            .zip(&scopes)
            .map(|(a, s)| (a.rel.as_str(), s.as_slice()))
            .collect();
        if let Some(i) = scopes.iter().position(Vec::is_empty) {
            return Err(Error::parse(format!("atoms[{i}].scope"), "empty scope"));
        }
        let mut phi = PPFormula::new(&free, &atoms)?;
        for name in &doc.bound {
            if phi.var(name).is_some() {
                return Err(Error::parse("bound", format!("variable '{name}' already used")));
            }
            phi.add_named_var(name);
        }
        Ok(phi)
    }
}

impl fmt::Display for PPFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bound = self.bound();
        if !bound.is_empty() {
            let names: Vec<&str> = bound.iter().map(|&v| self.name(v)).collect();
            write!(f, "∃{} ", names.join(","))?;
        }
        if self.atoms.is_empty() {
            return write!(f, "⊤");
        }
        for (i, atom) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, " ∧ ")?;
            }
            let names: Vec<&str> = atom.scope.iter().map(|&v| self.name(v)).collect();
            write!(f, "{}({})", atom.rel, names.join(","))?;
        }
        Ok(())
    }
}
