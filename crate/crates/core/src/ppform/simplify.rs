use std::collections::{BTreeMap, BTreeSet};

use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::model::{Relation, RelationalStructure, Subset};
use crate::ppform::{analyze_formula, PPFormula};

/// Prefix for relations introduced by rewriting.
pub const DERIVED_PREFIX: &str = "_d";

/// A rewritten formula together with the structure it is evaluated in: the
/// input structure plus every relation the rewriting introduced.
#[derive(Clone, Debug)]
pub struct Rewritten {
    pub formula: PPFormula,
    pub structure: RelationalStructure,
    /// Names of the relations added to `structure`.
    pub derived: Vec<String>,
}

/// Adds `rel` under a fresh derived name unless an equal relation is
/// already present; returns the name to use.
pub(crate) fn register(st: &mut RelationalStructure, derived: &mut Vec<String>, rel: Relation) -> String {
    if let Some((name, _)) = st.relations().iter().find(|(_, r)| **r == rel) {
        return name.clone();
    }
    let name = st.fresh_name(DERIVED_PREFIX);
    st.insert(name.clone(), rel).expect("derived relations are in range");
    derived.push(name.clone());
    name
}

/// Properties of a simplified form that `phi` violates, as messages.
///
/// A simplified formula is connected, its free variables are exactly its
/// leaves, bound variables have degree 2 or 3, no scope repeats a variable
/// and there are no unary atoms.
pub fn simplified_violations(phi: &PPFormula) -> Vec<String> {
    let report = analyze_formula(phi);
    let mut out = Vec::new();
    if !report.is_connected {
        out.push("not connected".to_string());
    }
    let leaves: BTreeSet<usize> = report.leaves.iter().copied().collect();
    let free: BTreeSet<usize> = phi.free().iter().copied().collect();
    if leaves != free {
        out.push("free variables differ from leaves".to_string());
    }
    for v in phi.bound() {
        if !(2..=3).contains(&report.degree[v]) {
            out.push(format!("bound variable {} has degree {}", phi.name(v), report.degree[v]));
        }
    }
    if !report.is_simple {
        out.push("some scope repeats a variable".to_string());
    }
    if phi.atoms().iter().any(|a| a.scope.len() == 1) {
        out.push("unary atom present".to_string());
    }
    out
}

pub fn is_simplified(phi: &PPFormula) -> bool {
    simplified_violations(phi).is_empty()
}

struct Rewriter<'a> {
    phi: PPFormula,
    st: RelationalStructure,
    derived: Vec<String>,
    engine: &'a Engine,
}

impl Rewriter<'_> {
    fn rel(&self, atom: usize) -> &Relation {
        self.st.relation(&self.phi.atoms()[atom].rel).expect("checked")
    }

    fn set_rel(&mut self, atom: usize, rel: Relation) {
        let name = register(&mut self.st, &mut self.derived, rel);
        self.phi.atoms_mut()[atom].rel = name;
    }

    fn degree(&self, v: usize) -> usize {
        self.phi.atoms().iter().flat_map(|a| &a.scope).filter(|&&w| w == v).count()
    }

    fn equality(&mut self) -> String {
        let eq = Relation::diagonal(self.st.size(), 2);
        register(&mut self.st, &mut self.derived, eq)
    }

    /// Replaces an atom whose scope repeats a variable by one over the
    /// distinct variables.
    fn split_repeats(&mut self) -> bool {
        let Some(i) = self.phi.atoms().iter().position(|a| {
            a.scope.iter().collect::<BTreeSet<_>>().len() != a.scope.len()
        }) else {
            return false;
        };
        let scope = self.phi.atoms()[i].scope.clone();
        let mut distinct = Vec::new();
        for &v in &scope {
            if !distinct.contains(&v) {
                distinct.push(v);
            }
        }
        // position of the first occurrence of each scope entry
        let first: Vec<usize> = scope
            .iter()
            .map(|v| scope.iter().position(|w| w == v).unwrap())
            .collect();
        let keep: Vec<usize> = distinct
            .iter()
            .map(|v| scope.iter().position(|w| w == v).unwrap())
            .collect();
        let mut rel = Relation::empty(distinct.len());
        for t in self.rel(i).iter() {
            if (0..scope.len()).all(|p| t[p] == t[first[p]]) {
                rel.insert(keep.iter().map(|&p| t[p]).collect());
            }
        }
        self.set_rel(i, rel);
        self.phi.atoms_mut()[i].scope = distinct;
        true
    }

    /// Folds a unary atom into another atom on the same variable; several
    /// unary atoms on a variable without other atoms are intersected.
    fn fold_unary(&mut self) -> bool {
        let atoms = self.phi.atoms();
        for (u, atom) in atoms.iter().enumerate() {
            if atom.scope.len() != 1 {
                continue;
            }
            let v = atom.scope[0];
            let allowed: Subset = self.rel(u).iter().map(|t| t[0]).collect();
            let host = atoms
                .iter()
                .position(|a| a.scope.len() > 1 && a.scope.contains(&v))
                .or_else(|| {
                    atoms
                        .iter()
                        .enumerate()
                        .position(|(j, a)| j != u && a.scope == [v])
                });
            let Some(host) = host else { continue };
            let mask: Vec<Option<&Subset>> = atoms[host]
                .scope
                .iter()
                .map(|&w| (w == v).then_some(&allowed))
                .collect();
            let rel = self.rel(host).restrict(&mask);
            self.set_rel(host, rel);
            self.phi.atoms_mut().remove(u);
            return true;
        }
        false
    }

    /// Projects out a bound variable of degree one from its atom.
    fn project_bound_leaf(&mut self) -> bool {
        for v in self.phi.bound() {
            if self.degree(v) != 1 {
                continue;
            }
            let i = self
                .phi
                .atoms()
                .iter()
                .position(|a| a.scope.contains(&v))
                .expect("degree one");
            if self.phi.atoms()[i].scope.len() < 2 {
                continue;
            }
            let p = self.phi.atoms()[i].scope.iter().position(|&w| w == v).unwrap();
            let rel = self.rel(i).project_out(p).expect("arity at least two");
            self.set_rel(i, rel);
            self.phi.atoms_mut()[i].scope.remove(p);
            return true;
        }
        false
    }

    /// Drops components without free variables, keeping their effect when
    /// they are unsatisfiable; fails if free variables are split.
    fn connect(&mut self) -> Result<()> {
        let report = analyze_formula(&self.phi);
        let (with_free, bound_only): (Vec<_>, Vec<_>) = report
            .components
            .into_iter()
            .partition(|c| self.phi.free().iter().any(|v| c.contains(v)));
        if with_free.len() > 1 {
            return Err(Error::Precondition(
                "free variables lie in distinct components; the relation is a product".into(),
            ));
        }
        let Some(keep) = with_free.into_iter().next() else {
            return Err(Error::invalid("formula has no free variables"));
        };
        let mut unsatisfiable = false;
        for component in &bound_only {
            let atoms = self
                .phi
                .atoms()
                .iter()
                .filter(|a| component.contains(&a.scope[0]))
                .cloned()
                .collect();
            let sub = PPFormula::from_parts(self.phi.names().to_vec(), Vec::new(), atoms)?;
            if !self.engine.pp_satisfiable(&sub, &self.st)? {
                unsatisfiable = true;
            }
        }
        self.phi.atoms_mut().retain(|a| keep.contains(&a.scope[0]));
        self.phi.retain_vars(&keep);
        if unsatisfiable {
            match self.phi.atoms().first().map(|a| a.scope.len()) {
                Some(arity) => self.set_rel(0, Relation::empty(arity)),
                None => {
                    let name = register(&mut self.st, &mut self.derived, Relation::empty(1));
                    let v = self.phi.free()[0];
                    self.phi.add_atom(name, vec![v]);
                }
            }
        }
        Ok(())
    }

    /// Gives every free variable of degree at least two a bound copy joined
    /// by an equality atom, so free variables become leaves.
    fn detach_free(&mut self) {
        for v in self.phi.free().to_vec() {
            if self.degree(v) < 2 {
                continue;
            }
            let base = format!("{}'", self.phi.name(v));
            let copy = self.phi.add_var(&base);
            for atom in self.phi.atoms_mut() {
                for w in &mut atom.scope {
                    if *w == v {
                        *w = copy;
                    }
                }
            }
            let eq = self.equality();
            self.phi.add_atom(eq, vec![v, copy]);
        }
    }

    /// Splits bound variables of degree above three along a chain of
    /// equality atoms.
    fn reduce_degree(&mut self) {
        let mut queue: Vec<usize> = self.phi.bound();
        while let Some(v) = queue.pop() {
            let occurrences: Vec<(usize, usize)> = self
                .phi
                .atoms()
                .iter()
                .enumerate()
                .flat_map(|(i, a)| {
                    a.scope
                        .iter()
                        .enumerate()
                        .filter(move |&(_, &w)| w == v)
                        .map(move |(p, _)| (i, p))
                })
                .collect();
            if occurrences.len() <= 3 {
                continue;
            }
            let base = format!("{}'", self.phi.name(v));
            let copy = self.phi.add_var(&base);
            for &(i, p) in &occurrences[2..] {
                self.phi.atoms_mut()[i].scope[p] = copy;
            }
            let eq = self.equality();
            self.phi.add_atom(eq, vec![v, copy]);
            queue.push(copy);
        }
    }
}

impl Engine {
    /// Rewrites `phi` into a simplified form defining the same relation.
    ///
    /// Rewrites, repeated to a fixpoint: atoms with repeated variables are
    /// replaced by their diagonal restriction; unary atoms are folded into
    /// another atom on the same variable; bound variables of degree one are
    /// projected out of their atom. Then components without free variables
    /// are dropped, free variables of degree above one are detached through
    /// an equality atom, and bound variables of degree above three are split
    /// along equality atoms. New relations are added to the returned
    /// structure. The result is checked to define the same relation.
    ///
    /// A formula whose only variable is free and carries only unary atoms
    /// keeps a single unary atom; no simplified form exists for it.
    pub fn simplify(&self, phi: &PPFormula, a: &RelationalStructure) -> Result<Rewritten> {
        let original = self.evaluate_pp(phi, a)?;
        let mut rw = Rewriter {
            phi: phi.clone(),
            st: a.clone(),
            derived: Vec::new(),
            engine: self,
        };
        while rw.split_repeats() || rw.fold_unary() || rw.project_bound_leaf() {}
        rw.connect()?;
        rw.detach_free();
        rw.reduce_degree();
        let rewritten = self.evaluate_pp(&rw.phi, &rw.st)?;
        if rewritten != original {
            return Err(Error::invalid("internal error: simplification changed the relation"));
        }
        Ok(Rewritten {
            formula: rw.phi,
            structure: rw.st,
            derived: rw.derived,
        })
    }

    /// Replaces the relations of the given atoms; the substituted relations
    /// are registered in the returned structure.
    pub fn pp_substitute(
        &self,
        phi: &PPFormula,
        a: &RelationalStructure,
        replacements: &BTreeMap<usize, Relation>,
    ) -> Result<Rewritten> {
        phi.check(a)?;
        let mut formula = phi.clone();
        let mut structure = a.clone();
        let mut derived = Vec::new();
        for (&i, rel) in replacements {
            let atom = formula
                .atoms()
                .get(i)
                .ok_or_else(|| Error::invalid(format!("no atom with index {i}")))?;
            if atom.scope.len() != rel.arity() {
                return Err(Error::ArityMismatch {
                    location: format!("replacement for atom {i}"),
                    expected: atom.scope.len(),
                    found: rel.arity(),
                });
            }
            rel.check_bounds(a.size(), &format!("replacement for atom {i}"))?;
            let name = structure.fresh_name(DERIVED_PREFIX);
            structure.insert(name.clone(), rel.clone())?;
            derived.push(name.clone());
            formula.atoms_mut()[i].rel = name;
        }
        Ok(Rewritten {
            formula,
            structure,
            derived,
        })
    }
}
