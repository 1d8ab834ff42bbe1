use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::ppform::PPFormula;

/// Structure of a formula's incidence multigraph: variables on one side,
/// atoms on the other, one edge per (atom, position).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormulaReport {
    /// Number of incident (atom, position) pairs per variable.
    pub degree: Vec<usize>,
    /// Variables of degree at most one.
    pub leaves: Vec<usize>,
    /// Connected components as variable sets, ordered by least member.
    pub components: Vec<BTreeSet<usize>>,
    /// Whether no scope repeats a variable (no multiple edges).
    pub is_simple: bool,
    pub is_acyclic: bool,
    /// Acyclic and simple.
    pub is_tree: bool,
    pub is_connected: bool,
}

impl FormulaReport {
    pub fn to_json_value(&self, phi: &PPFormula) -> Value {
        let names = |vs: &mut dyn Iterator<Item = usize>| -> Vec<String> {
            vs.map(|v| phi.name(v).to_string()).collect()
        };
        let degree: BTreeMap<&str, usize> = self
            .degree
            .iter()
            .enumerate()
            .map(|(v, &d)| (phi.name(v), d))
            .collect();
        json!({
            "degree": degree,
            "leaves": names(&mut self.leaves.iter().copied()),
            "components": self
                .components
                .iter()
                .map(|c| names(&mut c.iter().copied()))
                .collect::<Vec<_>>(),
            "is_tree": self.is_tree,
            "is_connected": self.is_connected,
            "is_simple": self.is_simple,
            "is_acyclic": self.is_acyclic,
        })
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut x = x;
        while self.0[x] != r {
            let next = self.0[x];
            self.0[x] = r;
            x = next;
        }
        r
    }

    /// Joins the classes; false if they were already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra.max(rb)] = ra.min(rb);
        true
    }
}

pub fn analyze_formula(phi: &PPFormula) -> FormulaReport {
    let n = phi.num_vars();
    let mut degree = vec![0; n];
    for atom in phi.atoms() {
        for &v in &atom.scope {
            degree[v] += 1;
        }
    }
    let leaves = (0..n).filter(|&v| degree[v] <= 1).collect();
    let is_simple = phi
        .atoms()
        .iter()
        .all(|a| a.scope.iter().collect::<BTreeSet<_>>().len() == a.scope.len());
    // Incidence graph: variables 0..n, atoms n..n+m.
    let mut uf = UnionFind::new(n + phi.atoms().len());
    let mut is_acyclic = true;
    for (i, atom) in phi.atoms().iter().enumerate() {
        for &v in &atom.scope {
            if !uf.union(v, n + i) {
                is_acyclic = false;
            }
        }
    }
    let mut by_root: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for v in 0..n {
        by_root.entry(uf.find(v)).or_default().insert(v);
    }
    let mut components: Vec<BTreeSet<usize>> = by_root.into_values().collect();
    components.sort_by_key(|c| c.first().copied());
    FormulaReport {
        degree,
        leaves,
        is_connected: components.len() <= 1,
        components,
        is_simple,
        is_acyclic,
        is_tree: is_simple && is_acyclic,
    }
}

/// Variables other than `a` sharing an atom with `a`.
pub fn neigh(phi: &PPFormula, a: usize) -> BTreeSet<usize> {
    phi.atoms()
        .iter()
        .filter(|atom| atom.scope.contains(&a))
        .flat_map(|atom| atom.scope.iter().copied())
        .filter(|&v| v != a)
        .collect()
}

/// Variables reachable from `start` in the incidence graph restricted to
/// the atoms for which `keep` holds.
fn component_of(phi: &PPFormula, start: usize, keep: impl Fn(usize) -> bool) -> BTreeSet<usize> {
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for (i, atom) in phi.atoms().iter().enumerate() {
            if keep(i) && atom.scope.contains(&v) {
                for &w in &atom.scope {
                    if seen.insert(w) {
                        queue.push_back(w);
                    }
                }
            }
        }
    }
    seen
}

/// The branch rooted at `a` containing `b`: the component of `b` after
/// removing every atom containing `a` except one. The kept atom is the
/// least-indexed atom of `a` through which `b` is reachable without passing
/// through `a` (for tree formulas there is exactly one).
pub fn branch(phi: &PPFormula, a: usize, b: usize) -> Result<BTreeSet<usize>> {
    if a == b {
        return Err(Error::invalid("branch is undefined for a = b"));
    }
    if a >= phi.num_vars() || b >= phi.num_vars() {
        return Err(Error::invalid("branch variable out of range"));
    }
    let a_atoms: Vec<usize> = (0..phi.atoms().len())
        .filter(|&i| phi.atoms()[i].scope.contains(&a))
        .collect();
    // Everything reachable from b when a's atoms are all removed.
    let side = component_of(phi, b, |i| !a_atoms.contains(&i));
    let kept = a_atoms
        .iter()
        .copied()
        .find(|&i| phi.atoms()[i].scope.iter().any(|v| side.contains(v)));
    Ok(component_of(phi, b, |i| !a_atoms.contains(&i) || Some(i) == kept))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `S(z1,w1,w2) ∧ S(z2,w2,w3) ∧ S(z3,w3,w4)` with z's free.
    fn comb3() -> PPFormula {
        PPFormula::new(
            &["z1", "z2", "z3"],
            &[
                ("S", &["z1", "w1", "w2"]),
                ("S", &["z2", "w2", "w3"]),
                ("S", &["z3", "w3", "w4"]),
            ],
        )
        .unwrap()
    }

    fn names(phi: &PPFormula, vs: &BTreeSet<usize>) -> Vec<String> {
        vs.iter().map(|&v| phi.name(v).to_string()).collect()
    }

    #[test]
    fn comb_is_a_tree() {
        let phi = comb3();
        let r = analyze_formula(&phi);
        assert!(r.is_tree && r.is_connected);
        let leaves: BTreeSet<usize> = r.leaves.iter().copied().collect();
        assert_eq!(names(&phi, &leaves), ["z1", "z2", "z3", "w1", "w4"]);
        let w2 = phi.var("w2").unwrap();
        assert_eq!(names(&phi, &neigh(&phi, w2)), ["z1", "z2", "w1", "w3"]);
    }

    #[test]
    fn double_edge_is_not_a_tree() {
        let phi = PPFormula::new(&["x"], &[("R", &["x", "y"]), ("R", &["y", "x"])]).unwrap();
        let r = analyze_formula(&phi);
        assert!(!r.is_tree && r.is_simple && !r.is_acyclic);
        let phi = PPFormula::new(&["x"], &[("R", &["x", "x"])]).unwrap();
        assert!(!analyze_formula(&phi).is_tree);
    }

    #[test]
    fn branches() {
        let phi = comb3();
        let v = |n| phi.var(n).unwrap();
        let b = branch(&phi, v("w2"), v("z1")).unwrap();
        assert_eq!(names(&phi, &b), ["z1", "w1", "w2"]);
        let b = branch(&phi, v("w3"), v("z1")).unwrap();
        assert_eq!(names(&phi, &b), ["z1", "z2", "w1", "w2", "w3"]);
        let b = branch(&phi, v("z1"), v("w4")).unwrap();
        assert_eq!(b.len(), phi.num_vars());
        assert!(branch(&phi, v("z1"), v("z1")).is_err());
    }

    #[test]
    fn components_of_disconnected_formula() {
        let phi = PPFormula::new(&["x", "y"], &[("R", &["x", "u"]), ("R", &["y", "v"])]).unwrap();
        let r = analyze_formula(&phi);
        assert_eq!(r.components.len(), 2);
        assert!(r.is_tree && !r.is_connected);
    }
}
