use std::collections::{BTreeMap, BTreeSet};

use crate::engine::network::{Network, MAX_DOMAIN};
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::model::{Relation, RelationalStructure, Tuple};
use crate::ppform::{analyze_formula, PPFormula};

/// Partial results of the tree evaluation: for each value of the subtree's
/// root variable, the assignments to the free variables in `cols`.
struct Partial {
    cols: Vec<usize>,
    rows: BTreeMap<usize, BTreeSet<Tuple>>,
}

struct TreeEval<'a> {
    phi: &'a PPFormula,
    a: &'a RelationalStructure,
    incident: Vec<Vec<usize>>,
    cap: usize,
}

impl TreeEval<'_> {
    fn product(&self, left: &BTreeSet<Tuple>, right: &BTreeSet<Tuple>) -> Result<BTreeSet<Tuple>> {
        let n = left.len().saturating_mul(right.len());
        if n > self.cap {
            return Err(Error::cap("relation tuples", n, self.cap));
        }
        Ok(left
            .iter()
            .flat_map(|l| right.iter().map(move |r| [l.as_slice(), r].concat()))
            .collect())
    }

    fn var(&self, v: usize, parent: Option<usize>) -> Result<Partial> {
        let free = self.phi.is_free(v);
        let mut part = Partial {
            cols: if free { vec![v] } else { Vec::new() },
            rows: (0..self.a.size())
                .map(|x| (x, BTreeSet::from([if free { vec![x] } else { Vec::new() }])))
                .collect(),
        };
        for &atom in &self.incident[v] {
            if Some(atom) == parent {
                continue;
            }
            let child = self.atom(atom, v)?;
            let mut rows = BTreeMap::new();
            for (x, left) in &part.rows {
                if let Some(right) = child.rows.get(x) {
                    rows.insert(*x, self.product(left, right)?);
                }
            }
            part.cols.extend(child.cols);
            part.rows = rows;
        }
        Ok(part)
    }

    fn atom(&self, atom: usize, parent: usize) -> Result<Partial> {
        let scope = &self.phi.atoms()[atom].scope;
        let rel = self.a.relation(&self.phi.atoms()[atom].rel).expect("checked");
        let p = scope.iter().position(|&v| v == parent).expect("parent in scope");
        let children: Vec<(usize, Partial)> = scope
            .iter()
            .enumerate()
            .filter(|&(q, _)| q != p)
            .map(|(q, &c)| Ok((q, self.var(c, Some(atom))?)))
            .collect::<Result<_>>()?;
        let mut rows: BTreeMap<usize, BTreeSet<Tuple>> = BTreeMap::new();
        for t in rel.iter() {
            let mut acc = BTreeSet::from([Vec::new()]);
            for (q, child) in &children {
                match child.rows.get(&t[*q]) {
                    Some(right) => acc = self.product(&acc, right)?,
                    None => {
                        acc.clear();
                        break;
                    }
                }
            }
            if !acc.is_empty() {
                let entry = rows.entry(t[p]).or_default();
                entry.extend(acc);
                if entry.len() > self.cap {
                    return Err(Error::cap("relation tuples", entry.len(), self.cap));
                }
            }
        }
        Ok(Partial {
            cols: children.into_iter().flat_map(|(_, c)| c.cols).collect(),
            rows,
        })
    }
}

impl Engine {
    /// The relation over the free variables defined by `phi` in `a`.
    /// Uses dynamic programming along the incidence forest when `phi` is a
    /// tree formula and constraint search otherwise.
    pub fn evaluate_pp(&self, phi: &PPFormula, a: &RelationalStructure) -> Result<Relation> {
        phi.check(a)?;
        if analyze_formula(phi).is_tree {
            self.evaluate_tree(phi, a)
        } else {
            self.evaluate_search(phi, a)
        }
    }

    /// Exact evaluation of a tree formula by dynamic programming.
    pub fn evaluate_tree(&self, phi: &PPFormula, a: &RelationalStructure) -> Result<Relation> {
        phi.check(a)?;
        let report = analyze_formula(phi);
        if !report.is_tree {
            return Err(Error::invalid("formula is not a tree formula"));
        }
        let mut incident = vec![Vec::new(); phi.num_vars()];
        for (i, atom) in phi.atoms().iter().enumerate() {
            for &v in &atom.scope {
                incident[v].push(i);
            }
        }
        let eval = TreeEval {
            phi,
            a,
            incident,
            cap: self.limits().max_relation_tuples,
        };
        let mut cols = Vec::new();
        let mut rows = BTreeSet::from([Vec::new()]);
        for component in &report.components {
            let root = phi
                .free()
                .iter()
                .copied()
                .find(|v| component.contains(v))
                .unwrap_or(*component.first().expect("components are nonempty"));
            let part = eval.var(root, None)?;
            let tuples: BTreeSet<Tuple> = part.rows.into_values().flatten().collect();
            if tuples.is_empty() {
                return Ok(Relation::empty(phi.free().len()));
            }
            rows = eval.product(&rows, &tuples)?;
            cols.extend(part.cols);
        }
        let order: Vec<usize> = phi
            .free()
            .iter()
            .map(|v| cols.iter().position(|c| c == v).expect("every free variable is a column"))
            .collect();
        Ok(rows
            .into_iter()
            .map(|t| order.iter().map(|&i| t[i]).collect())
            .collect::<BTreeSet<Tuple>>()
            .into_iter()
            .fold(Relation::empty(phi.free().len()), |mut r, t| {
                r.insert(t);
                r
            }))
    }

    /// Evaluation by propagation and backtracking search; works for any
    /// formula.
    pub fn evaluate_search(&self, phi: &PPFormula, a: &RelationalStructure) -> Result<Relation> {
        phi.check(a)?;
        let net = formula_network(phi, a)?;
        let cap = self.limits().max_relation_tuples;
        let tuples = net
            .project_solutions(net.initial_domains(), phi.free(), cap)
            .map_err(|n| Error::cap("relation tuples", n, cap))?;
        let mut out = Relation::empty(phi.free().len());
        for t in tuples {
            out.insert(t);
        }
        Ok(out)
    }

    /// Whether `phi` has a satisfying assignment in `a`.
    pub fn pp_satisfiable(&self, phi: &PPFormula, a: &RelationalStructure) -> Result<bool> {
        phi.check(a)?;
        let net = formula_network(phi, a)?;
        Ok(net.satisfiable(net.initial_domains()))
    }
}

fn formula_network(phi: &PPFormula, a: &RelationalStructure) -> Result<Network> {
    if a.size() > MAX_DOMAIN {
        return Err(Error::DomainTooLarge(format!(
            "constraint search supports at most {MAX_DOMAIN} elements, got {}",
            a.size()
        )));
    }
    let mut net = Network::new(phi.num_vars(), a.size());
    let mut handles: BTreeMap<&str, usize> = BTreeMap::new();
    for atom in phi.atoms() {
        let handle = *handles.entry(atom.rel.as_str()).or_insert_with(|| {
            let rel = a.relation(&atom.rel).expect("checked");
            net.add_relation(rel.arity(), rel.iter().map(Vec::as_slice))
        });
        net.add_constraint(handle, &atom.scope);
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(arity: usize, ts: &[&[usize]]) -> Relation {
        Relation::from_tuples(arity, ts.iter().map(|t| t.to_vec())).unwrap()
    }

    fn ord2() -> RelationalStructure {
        RelationalStructure::new(2)
            .unwrap()
            .with("leq", rel(2, &[&[0, 0], &[0, 1], &[1, 1]]))
            .unwrap()
            .expanded()
            .unwrap()
    }

    fn both(phi: &PPFormula, a: &RelationalStructure) -> Relation {
        let e = Engine::default();
        let search = e.evaluate_search(phi, a).unwrap();
        if analyze_formula(phi).is_tree {
            assert_eq!(e.evaluate_tree(phi, a).unwrap(), search);
        }
        assert_eq!(e.evaluate_pp(phi, a).unwrap(), search);
        search
    }

    #[test]
    fn composition_of_order() {
        let phi = PPFormula::new(&["x1", "x2"], &[("leq", &["x1", "y"]), ("leq", &["y", "x2"])])
            .unwrap();
        assert_eq!(both(&phi, &ord2()), *ord2().relation("leq").unwrap());
    }

    #[test]
    fn single_atom_and_contradiction() {
        let a = ord2();
        let phi = PPFormula::new(&["x", "y"], &[("leq", &["x", "y"])]).unwrap();
        assert_eq!(both(&phi, &a), *a.relation("leq").unwrap());
        let phi = PPFormula::new(&["y", "x"], &[("leq", &["x", "y"])]).unwrap();
        assert_eq!(both(&phi, &a), rel(2, &[&[0, 0], &[1, 0], &[1, 1]]));
        let phi = PPFormula::new(&["x"], &[("_s0", &["x"]), ("_s1", &["x"])]).unwrap();
        assert!(both(&phi, &a).is_empty());
    }

    #[test]
    fn free_variable_in_no_atom_ranges_over_domain() {
        let a = ord2();
        let phi = PPFormula::new(&["x", "z"], &[("_s1", &["x"])]).unwrap();
        assert_eq!(both(&phi, &a), rel(2, &[&[1, 0], &[1, 1]]));
    }

    #[test]
    fn unsatisfiable_bound_component_empties_result() {
        let a = ord2();
        let phi = PPFormula::new(
            &["x"],
            &[("_s0", &["x"]), ("_s0", &["u"]), ("_s1", &["u"])],
        )
        .unwrap();
        assert!(both(&phi, &a).is_empty());
        assert!(!Engine::default().pp_satisfiable(&phi, &a).unwrap());
    }

    #[test]
    fn cyclic_formula_uses_search() {
        let a = ord2();
        let phi = PPFormula::new(&["x", "y"], &[("leq", &["x", "y"]), ("leq", &["y", "x"])])
            .unwrap();
        assert_eq!(both(&phi, &a), rel(2, &[&[0, 0], &[1, 1]]));
    }

    #[test]
    fn unknown_relation_is_reported() {
        let phi = PPFormula::new(&["x"], &[("nope", &["x"])]).unwrap();
        assert!(Engine::default().evaluate_pp(&phi, &ord2()).is_err());
    }

    #[test]
    fn zero_free_variables() {
        let a = ord2();
        let phi = PPFormula::new(&[], &[("leq", &["u", "v"])]).unwrap();
        let r = both(&phi, &a);
        assert_eq!(r.len(), 1);
    }
}
