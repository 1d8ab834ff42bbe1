use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::model::{all_tuples, Relation, RelationalStructure, Subset, Tuple};
use crate::par;

/// Generators of a B-essential subpower of `A^n`: `generators[i]` has its
/// `i`-th entry outside `B` and all others inside, and the relation they
/// generate avoids `B^n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EssentialWitness {
    pub arity: usize,
    pub generators: Vec<Tuple>,
    pub relation: Relation,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WitnessDoc {
    arity: usize,
    generators: Vec<Tuple>,
}

impl EssentialWitness {
    /// `{"arity": n, "generators": [...]}`; the generated relation is not
    /// part of the document.
    pub fn to_json_value(&self) -> Value {
        crate::model::codec_value(&WitnessDoc {
            arity: self.arity,
            generators: self.generators.clone(),
        })
    }
}

/// `R` avoids `B^n` and every projection dropping one coordinate meets
/// `B^(n-1)`.
pub fn is_b_essential(r: &Relation, b: &Subset) -> Result<bool> {
    if r.arity() < 2 {
        return Err(Error::invalid("B-essential relations have arity at least 2"));
    }
    Ok(is_b_essential_any_arity(r, b))
}

/// Same test, extended to arity 1 (`R` nonempty and disjoint from `B`).
pub(crate) fn is_b_essential_any_arity(r: &Relation, b: &Subset) -> bool {
    if r.meets_power(b) {
        return false;
    }
    (0..r.arity()).all(|i| {
        r.iter().any(|t| {
            t.iter()
                .enumerate()
                .all(|(j, &x)| j == i || b.contains(x))
        })
    })
}

impl Engine {
    /// Looks for generators `t_1, ..., t_n` with
    /// `t_i in B^(i-1) x (A \ B) x B^(n-i)` whose generated subpower (under the
    /// idempotent polymorphisms of `a`) avoids `B^n`; the lexicographically
    /// first such list is returned. `None` means `a` has no `n`-ary
    /// B-essential subpower.
    pub fn essential_witness_search(
        &self,
        a: &RelationalStructure,
        b: &Subset,
        n: usize,
    ) -> Result<Option<EssentialWitness>> {
        if b.is_empty() {
            return Err(Error::EmptySubset);
        }
        a.check_subset(b)?;
        if n < 2 {
            return Err(Error::invalid("essential witnesses need arity at least 2"));
        }
        let outside = b.complement(a.size());
        if outside.is_empty() {
            return Ok(None);
        }
        let a = a.expanded()?;
        let net = self.power_network(&a, n)?;

        // options for t_i, each list sorted
        let options: Vec<Vec<Tuple>> = (0..n)
            .map(|i| {
                all_tuples(a.size(), n)
                    .filter(|t| {
                        t.iter().enumerate().all(|(j, &x)| {
                            if j == i {
                                outside.contains(x)
                            } else {
                                b.contains(x)
                            }
                        })
                    })
                    .collect()
            })
            .collect();
        let per = options[0].len();
        let count = crate::model::checked_pow(per, n)
            .filter(|&c| c <= self.limits().max_power_vertices)
            .ok_or_else(|| {
                Error::cap(
                    "essential generator lists",
                    format!("{per}^{n}"),
                    self.limits().max_power_vertices,
                )
            })?;
        let lists: Vec<Vec<Tuple>> = (0..count)
            .map(|code| {
                let choice = crate::model::unrank(code, per, n);
                choice
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| options[i][c].clone())
                    .collect()
            })
            .collect();

        let avoids = |gens: &Vec<Tuple>| {
            let mut doms = net.domains();
            for col in Self::columns(gens, n) {
                net.restrict(&mut doms, &col, b);
            }
            !net.satisfiable(doms)
        };
        let Some((_, gens)) = par::find_first(self.is_parallel(), &lists, avoids) else {
            return Ok(None);
        };
        let sub = self.generate_subpower(&a, gens, n)?;
        Ok(Some(EssentialWitness {
            arity: n,
            generators: gens.clone(),
            relation: sub.tuples,
        }))
    }
}
