//! Exhaustive small-structure corpora and derived fixtures.
//!
//! The corpus for `(size, max_arity)` consists of every structure on
//! `0..size` with a single relation `R` of arity at most `max_arity`,
//! expanded by the singleton relations, together with every nonempty
//! proper subuniverse `B`. Structures whose expansions carry the same set
//! of relations are kept once.

use std::collections::BTreeSet;

use serde_json::{json, Value};

use crate::decide::Decision;
use crate::engine::{is_b_essential_any_arity, Engine};
use crate::error::{Error, Result};
use crate::model::{all_tuples, checked_pow, Relation, RelationalStructure, Subset, Tuple};
use crate::par;
use crate::ppform::PPFormula;

/// Most relation choices a corpus may enumerate.
pub const MAX_RELATION_CHOICES: usize = 1 << 20;

/// Name of the single relation in corpus structures.
pub const RELATION_NAME: &str = "R";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    /// Position of the structure in the deduplicated enumeration.
    pub structure_index: usize,
    pub structure: RelationalStructure,
    pub b: Subset,
}

impl Instance {
    pub fn id(&self) -> String {
        let b: Vec<String> = self.b.iter().map(|x| x.to_string()).collect();
        format!("s{:04}-b{}", self.structure_index, b.join("_"))
    }

    pub fn to_json_value(&self) -> Value {
        json!({
            "id": self.id(),
            "structure": self.structure.to_json_value(),
            "b": self.b.to_json_value(),
        })
    }
}

/// Number of relations of arity `1..=max_arity` on `size` elements, counting
/// the empty relation of each arity.
pub fn relation_choices(size: usize, max_arity: usize) -> Result<usize> {
    let mut total: usize = 0;
    for r in 1..=max_arity {
        let count = checked_pow(size, r)
            .and_then(|n| u32::try_from(n).ok())
            .and_then(|n| 2usize.checked_pow(n))
            .filter(|&c| c <= MAX_RELATION_CHOICES)
            .ok_or_else(|| Error::cap("relation choices", format!("2^({size}^{r})"), MAX_RELATION_CHOICES))?;
        total = total
            .checked_add(count)
            .filter(|&t| t <= MAX_RELATION_CHOICES)
            .ok_or_else(|| Error::cap("relation choices", "more", MAX_RELATION_CHOICES))?;
    }
    Ok(total)
}

/// The deduplicated, singleton-expanded corpus structures in enumeration
/// order: by arity, then by the bitmask of tuples present.
pub fn structures(size: usize, max_arity: usize) -> Result<Vec<RelationalStructure>> {
    relation_choices(size, max_arity)?;
    let mut seen: BTreeSet<Vec<Relation>> = BTreeSet::new();
    let mut out = Vec::new();
    for r in 1..=max_arity {
        let tuples: Vec<Tuple> = all_tuples(size, r).collect();
        for mask in 0u64..(1u64 << tuples.len()) {
            let mut rel = Relation::empty(r);
            for (i, t) in tuples.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    rel.insert(t.clone());
                }
            }
            let a = RelationalStructure::new(size)?
                .with(RELATION_NAME, rel)?
                .expanded()?;
            let key: Vec<Relation> = a.relations().values().cloned().collect::<BTreeSet<_>>().into_iter().collect();
            if seen.insert(key) {
                out.push(a);
            }
        }
    }
    Ok(out)
}

/// Nonempty proper subuniverses of `a`, ordered by size then elements.
pub fn proper_subuniverses(engine: &Engine, a: &RelationalStructure) -> Result<Vec<Subset>> {
    let n = a.size();
    if n > 16 {
        return Err(Error::DomainTooLarge(format!("subuniverse enumeration needs at most 16 elements, got {n}")));
    }
    let a = a.expanded()?;
    let mut out = Vec::new();
    for mask in 1u64..(1u64 << n) - 1 {
        let b = Subset::from_mask(mask);
        if engine.closure_unary(&a, &b)?.1 {
            out.push(b);
        }
    }
    out.sort_by_key(|b| (b.len(), b.to_vec()));
    Ok(out)
}

/// Every corpus instance, structures in enumeration order and subuniverses
/// within each.
pub fn instances(engine: &Engine, size: usize, max_arity: usize) -> Result<Vec<Instance>> {
    let structs = structures(size, max_arity)?;
    let indexed: Vec<(usize, RelationalStructure)> = structs.into_iter().enumerate().collect();
    let per = par::map_until_err(engine.is_parallel(), &indexed, |(i, a)| {
        Ok::<_, Error>(
            proper_subuniverses(engine, a)?
                .into_iter()
                .map(|b| Instance {
                    structure_index: *i,
                    structure: a.clone(),
                    b,
                })
                .collect::<Vec<_>>(),
        )
    })?;
    Ok(per.into_iter().flatten().collect())
}

/// Decides every instance, in parallel when the engine allows; results come
/// back in input order.
pub fn decide_sweep(engine: &Engine, instances: &[Instance]) -> Vec<Result<Decision>> {
    par::map(engine.is_parallel(), instances, |inst| {
        engine.decide_jonsson(&inst.structure, &inst.b)
    })
}

/// Distinct subpowers of `A^3` generated by one to `max_gens` tuples, with
/// the least generator list (in enumeration order) producing each.
pub fn section_pool(
    engine: &Engine,
    a: &RelationalStructure,
    max_gens: usize,
) -> Result<Vec<(Vec<Tuple>, Relation)>> {
    let a = a.expanded()?;
    let tuples: Vec<Tuple> = all_tuples(a.size(), 3).collect();
    let mut lists: Vec<Vec<Tuple>> = Vec::new();
    fn extend(tuples: &[Tuple], start: usize, cur: &mut Vec<Tuple>, max: usize, out: &mut Vec<Vec<Tuple>>) {
        if !cur.is_empty() {
            out.push(cur.clone());
        }
        if cur.len() == max {
            return;
        }
        for i in start..tuples.len() {
            cur.push(tuples[i].clone());
            extend(tuples, i + 1, cur, max, out);
            cur.pop();
        }
    }
    extend(&tuples, 0, &mut Vec::new(), max_gens, &mut lists);
    let generated = par::map_until_err(engine.is_parallel(), &lists, |g| {
        engine.generate_subpower(&a, g, 3).map(|s| s.tuples)
    })?;
    let mut seen = BTreeSet::new();
    Ok(lists
        .into_iter()
        .zip(generated)
        .filter(|(_, r)| seen.insert(r.clone()))
        .collect())
}

/// A structure, subset and simplified formula defining a `B`-essential
/// relation, ready for the surgery step.
#[derive(Clone, Debug)]
pub struct SurgeryFixture {
    pub structure: RelationalStructure,
    pub b: Subset,
    pub formula: PPFormula,
    /// Bound variable and atom to operate on.
    pub y: usize,
    pub atom: usize,
}

/// Surgery fixtures for an instance where `B` Jónsson absorbs: for every
/// binary `B`-essential subpower `U` among the generated binary subpowers,
/// the formulas `U(x1, y) ∧ y = x2` and `U(x1, y) ∧ V(y, x2)` for binary
/// subpowers `V` keeping the relation `B`-essential, with both choices of
/// atom.
pub fn surgery_fixtures(engine: &Engine, a: &RelationalStructure, b: &Subset) -> Result<Vec<SurgeryFixture>> {
    let base = a.expanded()?;
    let tuples: Vec<Tuple> = all_tuples(a.size(), 2).collect();
    let mut binaries = BTreeSet::new();
    for i in 0..tuples.len() {
        for j in i..tuples.len() {
            let gens = if i == j { vec![tuples[i].clone()] } else { vec![tuples[i].clone(), tuples[j].clone()] };
            binaries.insert(engine.generate_subpower(&base, &gens, 2)?.tuples);
        }
    }
    let mut out = Vec::new();
    let essentials: Vec<&Relation> = binaries.iter().filter(|u| is_b_essential_any_arity(u, b)).collect();
    for u in essentials {
        let mut partners: Vec<&Relation> = binaries.iter().collect();
        let eq = Relation::diagonal(a.size(), 2);
        partners.retain(|v| **v != eq);
        partners.insert(0, &eq);
        for v in partners {
            let st = base
                .clone()
                .with("_u", u.clone())?
                .with("_v", v.clone())?;
            let formula = PPFormula::new(&["x1", "x2"], &[("_u", &["x1", "y"]), ("_v", &["y", "x2"])])?;
            if !is_b_essential_any_arity(&engine.evaluate_pp(&formula, &st)?, b) {
                continue;
            }
            let y = formula.var("y").expect("declared");
            for atom in 0..2 {
                out.push(SurgeryFixture {
                    structure: st.clone(),
                    b: b.clone(),
                    formula: formula.clone(),
                    y,
                    atom,
                });
            }
        }
    }
    Ok(out)
}
