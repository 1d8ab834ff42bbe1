use serde_json::{json, Value};

use crate::engine::{is_b_essential_any_arity, Engine};
use crate::error::{Error, Result};
use crate::model::{Relation, RelationalStructure, Subset};
use crate::ppform::simplify::register;
use crate::ppform::{simplified_violations, PPFormula};

/// Choice made for one block of free-variable copies: the copy `m` that
/// stays free and a unary restriction on each other copy (`None` at `m`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockChoice {
    pub m: usize,
    pub restrictions: Vec<Option<Subset>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurgeryChoice {
    /// The split variable and the atom moved to its new copy.
    pub y: usize,
    pub atom: usize,
    /// The relation defined by the formula at `y`.
    pub c: Subset,
    /// Number of chained copies (the domain size).
    pub copies: usize,
    pub blocks: Vec<BlockChoice>,
}

impl SurgeryChoice {
    pub fn to_json_value(&self, phi: &PPFormula) -> Value {
        json!({
            "y": phi.name(self.y),
            "atom": self.atom,
            "c": self.c.to_vec(),
            "copies": self.copies,
            "blocks": self.blocks.iter().map(|b| json!({
                "m": b.m,
                "restrictions": b.restrictions.iter()
                    .map(|r| r.as_ref().map(Subset::to_vec))
                    .collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })
    }
}

/// Every intermediate formula of one surgery step.
#[derive(Clone, Debug)]
pub struct SurgeryOutcome {
    /// Copy of the input with the chosen atom moved to a fresh variable and
    /// both copies restricted to `C`.
    pub psi: PPFormula,
    /// Chained copies of `psi`; free variables in block order
    /// `x_1^1 .. x_1^l, x_2^1, ..`.
    pub theta: PPFormula,
    /// Relation of `theta`.
    pub v: Relation,
    /// The resulting formula, defining a `B`-essential relation.
    pub formula: PPFormula,
    pub relation: Relation,
    /// Input structure plus the relations the step introduced.
    pub structure: RelationalStructure,
    pub choice: SurgeryChoice,
}

/// Whether `v` avoids `B^s` and, for each block, meets the relaxation with
/// that block free and all others in `B`.
pub fn block_property(v: &Relation, b: &Subset, blocks: &[usize]) -> (bool, Vec<bool>) {
    let avoids = !v.meets_power(b);
    let mut offset = 0;
    let relaxations = blocks
        .iter()
        .map(|&len| {
            let range = offset..offset + len;
            offset += len;
            v.iter().any(|t| {
                t.iter()
                    .enumerate()
                    .all(|(j, &x)| range.contains(&j) || b.contains(x))
            })
        })
        .collect();
    (avoids, relaxations)
}

/// Chooses one copy per block and restrictions on the others so that the
/// result is `B`-essential, given that `w` avoids `B^s` and meets every
/// block relaxation. Works on the last block longer than one and its last
/// coordinate `p`: if no tuple of `w` has all coordinates but `p` in `B`,
/// `p` is projected away and left unrestricted; otherwise `p` is kept and
/// the rest of its block is restricted to `B`.
pub fn choose_blocks(w: &Relation, blocks: &[usize], b: &Subset, size: usize) -> Vec<BlockChoice> {
    debug_assert_eq!(w.arity(), blocks.iter().sum::<usize>());
    let Some(i) = blocks.iter().rposition(|&len| len > 1) else {
        return blocks
            .iter()
            .map(|_| BlockChoice {
                m: 0,
                restrictions: vec![None],
            })
            .collect();
    };
    let offset: usize = blocks[..i].iter().sum();
    let len = blocks[i];
    let p = offset + len - 1;
    let relaxed = w
        .iter()
        .any(|t| t.iter().enumerate().all(|(j, &x)| j == p || b.contains(x)));
    let mut shorter = blocks.to_vec();
    if relaxed {
        shorter[i] = 1;
        let mask: Vec<Option<&Subset>> = (0..w.arity())
            .map(|j| (offset..p).contains(&j).then_some(b))
            .collect();
        let keep: Vec<usize> = (0..w.arity()).filter(|j| !(offset..p).contains(j)).collect();
        let inner = w.restrict(&mask).project_onto(&keep);
        let mut out = choose_blocks(&inner, &shorter, b, size);
        out[i] = BlockChoice {
            m: len - 1,
            restrictions: (0..len).map(|j| (j + 1 < len).then(|| b.clone())).collect(),
        };
        out
    } else {
        shorter[i] -= 1;
        let inner = w.project_out(p).expect("arity at least two");
        let mut out = choose_blocks(&inner, &shorter, b, size);
        out[i].restrictions.push(Some(Subset::full(size)));
        out
    }
}

/// The relation obtained from `w` by keeping copy `m` of each block and
/// requiring the other copies to lie in their restrictions.
pub fn apply_choices(w: &Relation, choices: &[BlockChoice]) -> Relation {
    let mut out = Relation::empty(choices.len());
    'tuples: for t in w.iter() {
        let mut offset = 0;
        let mut row = Vec::with_capacity(choices.len());
        for choice in choices {
            for (j, r) in choice.restrictions.iter().enumerate() {
                if let Some(r) = r {
                    if !r.contains(t[offset + j]) {
                        continue 'tuples;
                    }
                }
            }
            row.push(t[offset + choice.m]);
            offset += choice.restrictions.len();
        }
        out.insert(row);
    }
    out
}

impl Engine {
    /// One surgery step on the simplified formula `phi`, which must define a
    /// `B`-essential relation, at the bound variable `y` and an atom
    /// containing it. Requires `B` to Jónsson absorb `Pol(a)`.
    ///
    /// The step moves the atom to a fresh copy `y*` of `y`, restricts both
    /// to `C`, the set of values `y` takes in solutions, chains `|A|` copies
    /// of the result with `y*` of one copy identified with `y` of the next,
    /// and selects one copy of each free variable with restrictions on the
    /// other copies. The resulting relation is checked to be `B`-essential.
    pub fn surgery_step(
        &self,
        phi: &PPFormula,
        a: &RelationalStructure,
        b: &Subset,
        y: usize,
        atom: usize,
    ) -> Result<SurgeryOutcome> {
        phi.check(a)?;
        a.check_subset(b)?;
        if y >= phi.num_vars() || phi.is_free(y) {
            return Err(Error::Precondition("the split variable must be bound".into()));
        }
        if !phi.atoms().get(atom).is_some_and(|at| at.scope.contains(&y)) {
            return Err(Error::Precondition(
                "the chosen atom must contain the split variable".into(),
            ));
        }
        if let Some(v) = simplified_violations(phi).first() {
            return Err(Error::Precondition(format!("formula is not simplified: {v}")));
        }
        let u = self.evaluate_pp(phi, a)?;
        if !is_b_essential_any_arity(&u, b) {
            return Err(Error::Precondition("the formula's relation is not B-essential".into()));
        }
        if !self.decide_jonsson(a, b)?.holds {
            return Err(Error::Precondition("B does not Jónsson absorb Pol(A)".into()));
        }

        let mut structure = a.clone();
        let mut derived = Vec::new();
        let c: Subset = self
            .evaluate_pp(&phi.with_free(vec![y])?, a)?
            .iter()
            .map(|t| t[0])
            .collect();

        // First step: move the atom to y*, restrict y and y* to C.
        let mut psi = phi.clone();
        let y_star = psi.add_var(&format!("{}*", phi.name(y)));
        for v in &mut psi.atoms_mut()[atom].scope {
            if *v == y {
                *v = y_star;
            }
        }
        let c_name = register(&mut structure, &mut derived, Relation::unary(&c));
        psi.add_atom(c_name.clone(), vec![y]);
        psi.add_atom(c_name, vec![y_star]);

        // Second step: chain l copies, y* of copy i equal to y of copy i+1.
        let l = a.size();
        let n = psi.num_vars();
        let mut names = Vec::new();
        let mut index = vec![vec![usize::MAX; n]; l];
        for (i, row) in index.iter_mut().enumerate() {
            for (w, slot) in row.iter_mut().enumerate() {
                if w == y_star && i + 1 < l {
                    continue;
                }
                *slot = names.len();
                names.push(format!("{}^{}", psi.name(w), i + 1));
            }
        }
        for i in 0..l - 1 {
            index[i][y_star] = index[i + 1][y];
        }
        let atoms = (0..l)
            .flat_map(|i| {
                psi.atoms().iter().map({
                    let index = &index;
                    move |at| crate::ppform::Atom {
                        rel: at.rel.clone(),
                        scope: at.scope.iter().map(|&w| index[i][w]).collect(),
                    }
                })
            })
            .collect();
        let kappa = phi.free().len();
        let block_free: Vec<usize> = phi
            .free()
            .iter()
            .flat_map(|&x| (0..l).map(move |i| (i, x)))
            .map(|(i, x)| index[i][x])
            .collect();
        let theta = PPFormula::from_parts(names, block_free.clone(), atoms)?;
        let v = self.evaluate_pp(&theta, &structure)?;
        let blocks = vec![l; kappa];
        let (avoids, relaxations) = block_property(&v, b, &blocks);
        if !avoids || relaxations.contains(&false) {
            return Err(Error::invalid(
                "block property fails for the chained copies; B-essentiality is not preserved",
            ));
        }

        // Third step: keep one copy per block, restrict the others.
        let choices = choose_blocks(&v, &blocks, b, a.size());
        let relation = apply_choices(&v, &choices);
        let mut names = theta.names().to_vec();
        let mut free = Vec::with_capacity(kappa);
        for (k, (&x, choice)) in phi.free().iter().zip(&choices).enumerate() {
            let kept = block_free[k * l + choice.m];
            names[kept] = phi.name(x).to_string();
            free.push(kept);
        }
        let mut formula = PPFormula::from_parts(names, free, theta.atoms().to_vec())?;
        for (k, choice) in choices.iter().enumerate() {
            for (j, r) in choice.restrictions.iter().enumerate() {
                if let Some(r) = r.as_ref().filter(|r| !r.is_full(a.size())) {
                    let name = register(&mut structure, &mut derived, Relation::unary(r));
                    formula.add_atom(name, vec![block_free[k * l + j]]);
                }
            }
        }
        let check = self.evaluate_pp(&formula, &structure)?;
        if check != relation || !is_b_essential_any_arity(&relation, b) {
            return Err(Error::invalid(
                "surgery produced a relation that is not B-essential",
            ));
        }
        Ok(SurgeryOutcome {
            psi,
            theta,
            v,
            formula,
            relation,
            structure,
            choice: SurgeryChoice {
                y,
                atom,
                c,
                copies: l,
                blocks: choices,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::all_tuples;

    fn rel(arity: usize, ts: &[&[usize]]) -> Relation {
        Relation::from_tuples(arity, ts.iter().map(|t| t.to_vec())).unwrap()
    }

    /// `{0,1}` with "x or y" and equality: `{0}` absorbs via majority and
    /// "x or y" is `{0}`-essential.
    fn or2() -> RelationalStructure {
        RelationalStructure::new(2)
            .unwrap()
            .with("or", rel(2, &[&[0, 1], &[1, 0], &[1, 1]]))
            .unwrap()
            .with("eq", Relation::diagonal(2, 2))
            .unwrap()
            .expanded()
            .unwrap()
    }

    fn fixture() -> PPFormula {
        PPFormula::new(&["x1", "x2"], &[("or", &["x1", "y"]), ("eq", &["y", "x2"])]).unwrap()
    }

    #[test]
    fn step_on_or_relation() {
        let e = Engine::default();
        let phi = fixture();
        let y = phi.var("y").unwrap();
        let b = Subset::singleton(0);
        for atom in 0..2 {
            let out = e.surgery_step(&phi, &or2(), &b, y, atom).unwrap();
            let l = 2;
            assert_eq!(out.theta.num_vars(), l * out.psi.num_vars() - (l - 1));
            assert_eq!(out.theta.atoms().len(), l * out.psi.atoms().len());
            let (avoids, relax) = block_property(&out.v, &b, &[l, l]);
            assert!(avoids && relax.iter().all(|&r| r));
            assert!(is_b_essential_any_arity(&out.relation, &b));
            assert_eq!(out.formula.free().len(), 2);
        }
    }

    #[test]
    fn preconditions_are_checked() {
        let e = Engine::default();
        let phi = fixture();
        let b = Subset::singleton(0);
        let x1 = phi.var("x1").unwrap();
        let y = phi.var("y").unwrap();
        assert!(matches!(e.surgery_step(&phi, &or2(), &b, x1, 0), Err(Error::Precondition(_))));
        let not_essential =
            PPFormula::new(&["x1", "x2"], &[("eq", &["x1", "y"]), ("eq", &["y", "x2"])]).unwrap();
        assert!(matches!(
            e.surgery_step(&not_essential, &or2(), &b, y, 0),
            Err(Error::Precondition(_))
        ));
    }

    /// Exhaustive check of the block choice on small relations meeting the
    /// hypotheses.
    #[test]
    fn block_choices_are_essential() {
        let b = Subset::singleton(0);
        let blocks = [2, 1];
        let all: Vec<Vec<usize>> = all_tuples(2, 3).collect();
        let mut checked = 0;
        for mask in 0u32..(1 << all.len()) {
            let w: Relation = all
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, t)| t.clone())
                .collect();
            let (avoids, relax) = block_property(&w, &b, &blocks);
            if !avoids || relax.contains(&false) {
                continue;
            }
            let choices = choose_blocks(&w, &blocks, &b, 2);
            assert!(is_b_essential_any_arity(&apply_choices(&w, &choices), &b), "{w:?}");
            checked += 1;
        }
        assert!(checked > 0);
    }
}
