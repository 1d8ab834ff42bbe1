//! Brute-force oracles and fixtures shared by the integration tests. None of
//! them goes through the constraint solver.

#![allow(dead_code)]

use std::collections::BTreeSet;

use absorb_core::model::all_tuples;
use absorb_core::ppform::{Atom, PPFormula};
use absorb_core::{OperationTable, Relation, RelationalStructure, Subset, Tuple};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn rel(arity: usize, ts: &[&[usize]]) -> Relation {
    Relation::from_tuples(arity, ts.iter().map(|t| t.to_vec())).unwrap()
}

pub fn ord2() -> RelationalStructure {
    RelationalStructure::new(2)
        .unwrap()
        .with("leq", rel(2, &[&[0, 0], &[0, 1], &[1, 1]]))
        .unwrap()
}

pub fn aff2() -> RelationalStructure {
    RelationalStructure::new(2)
        .unwrap()
        .with("aff", rel(3, &[&[0, 0, 0], &[0, 1, 1], &[1, 0, 1], &[1, 1, 0]]))
        .unwrap()
}

pub fn trivial() -> RelationalStructure {
    RelationalStructure::new(1).unwrap()
}

/// The chain order on three elements.
pub fn ord3() -> RelationalStructure {
    let leq = Relation::from_tuples(
        2,
        all_tuples(3, 2).filter(|t| t[0] <= t[1]),
    )
    .unwrap();
    RelationalStructure::new(3).unwrap().with("leq", leq).unwrap()
}

/// Idempotent and compatible with every relation, checked tuple by tuple.
pub fn is_idempotent_polymorphism(a: &RelationalStructure, t: &OperationTable) -> bool {
    let n = t.arity();
    if (0..a.size()).any(|x| t.eval(&vec![x; n]) != x) {
        return false;
    }
    a.relations().values().all(|r| {
        let rows: Vec<&Tuple> = r.iter().collect();
        if rows.is_empty() {
            return true;
        }
        let mut pick = vec![0usize; n];
        loop {
            let image: Tuple = (0..r.arity())
                .map(|j| {
                    let args: Vec<usize> = pick.iter().map(|&i| rows[i][j]).collect();
                    t.eval(&args)
                })
                .collect();
            if !r.contains(&image) {
                return false;
            }
            let mut i = 0;
            loop {
                if i == n {
                    return true;
                }
                pick[i] += 1;
                if pick[i] < rows.len() {
                    break;
                }
                pick[i] = 0;
                i += 1;
            }
        }
    })
}

/// Every ternary idempotent polymorphism, by enumerating all tables.
pub fn ternary_polymorphisms(a: &RelationalStructure) -> Vec<OperationTable> {
    let size = a.size();
    assert!(size <= 2, "table enumeration is only feasible on two elements");
    all_tuples(size, size * size * size)
        .map(|v| OperationTable::new(size, 3, v).unwrap())
        .filter(|t| is_idempotent_polymorphism(a, t))
        .collect()
}

/// The local Jónsson test computed from the full list of ternary
/// polymorphisms: returns the least failing `(a, c, d, b1, b2)`.
pub fn brute_jonsson(a: &RelationalStructure, b: &Subset) -> Option<[usize; 5]> {
    let size = a.size();
    let polys = ternary_polymorphisms(a);
    let bs: Vec<usize> = b.iter().collect();
    for x in 0..size {
        for c in 0..size {
            for d in 0..size {
                for &b1 in &bs {
                    for &b2 in &bs {
                        let mut edges = BTreeSet::new();
                        for p in &polys {
                            if b.contains(p.eval(&[b1, b2, d])) {
                                edges.insert((p.eval(&[x, c, x]), p.eval(&[x, c, c])));
                            }
                        }
                        let mut seen = BTreeSet::from([x]);
                        let mut stack = vec![x];
                        while let Some(u) = stack.pop() {
                            for &(s, t) in &edges {
                                if s == u && seen.insert(t) {
                                    stack.push(t);
                                }
                            }
                        }
                        if !seen.contains(&c) {
                            return Some([x, c, d, b1, b2]);
                        }
                    }
                }
            }
        }
    }
    None
}

/// `R` avoids `B^n` and every coordinate can leave `B` while the others stay.
pub fn oracle_essential(r: &Relation, b: &Subset) -> bool {
    let inside = |t: &Tuple, skip: Option<usize>| {
        t.iter().enumerate().all(|(j, &x)| Some(j) == skip || b.contains(x))
    };
    !r.iter().any(|t| inside(t, None)) && (0..r.arity()).all(|i| r.iter().any(|t| inside(t, Some(i))))
}

/// Evaluates a formula by trying every assignment.
pub fn brute_eval(phi: &PPFormula, a: &RelationalStructure) -> Relation {
    let mut out = Relation::empty(phi.free().len());
    for assignment in all_tuples(a.size(), phi.num_vars()) {
        let ok = phi.atoms().iter().all(|at| {
            let t: Tuple = at.scope.iter().map(|&v| assignment[v]).collect();
            a.relation(&at.rel).unwrap().contains(&t)
        });
        if ok {
            out.insert(phi.free().iter().map(|&v| assignment[v]).collect());
        }
    }
    out
}

pub fn random_relation<R: Rng>(rng: &mut R, size: usize, arity: usize, density: f64) -> Relation {
    let mut r = Relation::empty(arity);
    for t in all_tuples(size, arity) {
        if rng.gen_bool(density) {
            r.insert(t);
        }
    }
    r
}

/// A random formula whose incidence multigraph is a tree: atoms of arity 2
/// or 3 grown from one variable, each attached to an existing variable,
/// with random relations `r0, r1, ..` and the leaves free. With
/// `extra_free` some internal variables are made free as well.
pub fn random_tree_formula<R: Rng>(
    rng: &mut R,
    size: usize,
    max_vars: usize,
    extra_free: bool,
) -> (PPFormula, RelationalStructure) {
    let mut st = RelationalStructure::new(size).unwrap();
    let mut names = vec!["v0".to_string()];
    let mut atoms = Vec::new();
    while names.len() < max_vars {
        let arity = if names.len() + 2 <= max_vars && rng.gen_bool(0.5) { 3 } else { 2 };
        let anchor = rng.gen_range(0..names.len());
        let mut scope = vec![anchor];
        for _ in 1..arity {
            scope.push(names.len());
            names.push(format!("v{}", names.len()));
        }
        scope.shuffle(rng);
        let name = format!("r{}", atoms.len());
        st.insert(name.clone(), random_relation(rng, size, arity, 0.6)).unwrap();
        atoms.push(Atom { rel: name, scope });
    }
    let mut degree = vec![0; names.len()];
    for at in &atoms {
        for &v in &at.scope {
            degree[v] += 1;
        }
    }
    let free: Vec<usize> = (0..names.len())
        .filter(|&v| degree[v] <= 1 || (extra_free && rng.gen_bool(0.2)))
        .collect();
    (PPFormula::from_parts(names, free, atoms).unwrap(), st)
}

/// A random formula with arbitrary scopes (repeats and cycles allowed).
pub fn random_formula<R: Rng>(rng: &mut R, size: usize, vars: usize, atoms: usize) -> (PPFormula, RelationalStructure) {
    let mut st = RelationalStructure::new(size).unwrap();
    let names: Vec<String> = (0..vars).map(|i| format!("v{i}")).collect();
    let mut out = Vec::new();
    for i in 0..atoms {
        let arity = rng.gen_range(1..=3);
        let scope: Vec<usize> = (0..arity).map(|_| rng.gen_range(0..vars)).collect();
        let name = format!("r{i}");
        st.insert(name.clone(), random_relation(rng, size, arity, 0.6)).unwrap();
        out.push(Atom { rel: name, scope });
    }
    let mut free: Vec<usize> = (0..vars).filter(|_| rng.gen_bool(0.5)).collect();
    if free.is_empty() {
        free.push(0);
    }
    (PPFormula::from_parts(names, free, out).unwrap(), st)
}
