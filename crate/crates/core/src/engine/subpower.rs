use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::model::{OperationTable, Relation, RelationalStructure, Subset, Tuple};

/// A subpower `<S>` of `A^n` together with the generators it came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subpower {
    pub arity: usize,
    pub tuples: Relation,
    pub generators: Vec<Tuple>,
}

impl Engine {
    fn check_generators(&self, a: &RelationalStructure, gens: &[Tuple], n: usize) -> Result<()> {
        if gens.is_empty() {
            return Err(Error::invalid("at least one generator is required"));
        }
        if n == 0 {
            return Err(Error::invalid("subpower arity must be positive"));
        }
        for (i, g) in gens.iter().enumerate() {
            if g.len() != n {
                return Err(Error::ArityMismatch {
                    location: format!("generator {i}"),
                    expected: n,
                    found: g.len(),
                });
            }
            if let Some(&v) = g.iter().find(|&&v| v >= a.size()) {
                return Err(Error::OutOfRange {
                    location: format!("generator {i}"),
                    value: v,
                    size: a.size(),
                });
            }
        }
        Ok(())
    }

    /// Column `j` of the generator matrix: `(g_1[j], ..., g_k[j])`.
    pub(crate) fn columns(gens: &[Tuple], n: usize) -> Vec<Tuple> {
        (0..n).map(|j| gens.iter().map(|g| g[j]).collect()).collect()
    }

    /// Whether `t` lies in the subpower of `A^n` generated by `gens`.
    pub fn subpower_membership(
        &self,
        a: &RelationalStructure,
        gens: &[Tuple],
        t: &[usize],
    ) -> Result<bool> {
        Ok(self.membership_witness(a, gens, t)?.is_some())
    }

    /// A `|gens|`-ary polymorphism of `a` mapping the generators to `t`, if
    /// `t` is in the generated subpower.
    pub fn membership_witness(
        &self,
        a: &RelationalStructure,
        gens: &[Tuple],
        t: &[usize],
    ) -> Result<Option<OperationTable>> {
        self.check_generators(a, gens, t.len())?;
        if let Some(&v) = t.iter().find(|&&v| v >= a.size()) {
            return Err(Error::OutOfRange {
                location: "target tuple".into(),
                value: v,
                size: a.size(),
            });
        }
        let net = self.power_network(a, gens.len())?;
        let mut doms = net.domains();
        for (col, &value) in Self::columns(gens, t.len()).iter().zip(t) {
            net.pin(&mut doms, col, value);
        }
        Ok(net.solve(doms))
    }

    /// The subpower of `A^n` generated by `gens` under `Pol(a)`.
    pub fn generate_subpower(
        &self,
        a: &RelationalStructure,
        gens: &[Tuple],
        n: usize,
    ) -> Result<Subpower> {
        self.check_generators(a, gens, n)?;
        let net = self.power_network(a, gens.len())?;
        let cols = Self::columns(gens, n);
        let images = net.images(net.domains(), &cols, self.limits().max_relation_tuples)?;
        Ok(Subpower {
            arity: n,
            tuples: Relation::from_tuples(n, images)?,
            generators: gens.to_vec(),
        })
    }

    /// The smallest subuniverse of `Pol(a)` containing `b`, and whether it
    /// equals `b`.
    pub fn closure_unary(&self, a: &RelationalStructure, b: &Subset) -> Result<(Subset, bool)> {
        if b.is_empty() {
            return Err(Error::EmptySubset);
        }
        a.check_subset(b)?;
        let gens: Vec<Tuple> = b.iter().map(|x| vec![x]).collect();
        let sub = self.generate_subpower(a, &gens, 1)?;
        let closure: Subset = sub.tuples.iter().map(|t| t[0]).collect();
        let closed = &closure == b;
        Ok((closure, closed))
    }

    pub(crate) fn require_subuniverse(&self, a: &RelationalStructure, b: &Subset) -> Result<()> {
        let (_, closed) = self.closure_unary(a, b)?;
        if closed {
            Ok(())
        } else {
            Err(Error::NotSubuniverse(format!("{:?}", b.to_vec())))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::all_tuples;

    fn rel(arity: usize, ts: &[&[usize]]) -> Relation {
        Relation::from_tuples(arity, ts.iter().map(|t| t.to_vec())).unwrap()
    }

    fn ord2() -> RelationalStructure {
        RelationalStructure::new(2)
            .unwrap()
            .with("leq", rel(2, &[&[0, 0], &[0, 1], &[1, 1]]))
            .unwrap()
            .with("s0", rel(1, &[&[0]]))
            .unwrap()
            .with("s1", rel(1, &[&[1]]))
            .unwrap()
    }

    fn aff2() -> RelationalStructure {
        RelationalStructure::new(2)
            .unwrap()
            .with("aff", rel(3, &[&[0, 0, 0], &[0, 1, 1], &[1, 0, 1], &[1, 1, 0]]))
            .unwrap()
            .expanded()
            .unwrap()
    }

    /// Closure of `gens` under every polymorphism of arity <= 3 found by
    /// enumerating all tables over a 2-element domain.
    fn brute_closure(a: &RelationalStructure, gens: &[Tuple]) -> Relation {
        let size = a.size();
        let mut polys = Vec::new();
        for k in 1..=3usize {
            let cells = size.pow(k as u32);
            for values in all_tuples(size, cells) {
                let f = OperationTable::new(size, k, values).unwrap();
                if f.is_polymorphism(a) {
                    polys.push(f);
                }
            }
        }
        let mut cur: Relation = gens.iter().cloned().collect();
        loop {
            let mut next = cur.clone();
            let ts: Vec<Tuple> = cur.iter().cloned().collect();
            for f in &polys {
                let k = f.arity();
                for choice in all_tuples(ts.len(), k) {
                    let rows: Vec<&[usize]> = choice.iter().map(|&i| ts[i].as_slice()).collect();
                    next.insert(f.apply_rows(&rows));
                }
            }
            if next == cur {
                return cur;
            }
            cur = next;
        }
    }

    #[test]
    fn affine_closure_matches_brute_force() {
        let e = Engine::default();
        let gens = vec![vec![1, 0], vec![0, 1]];
        let oracle = brute_closure(&aff2(), &gens);
        assert_eq!(oracle, rel(2, &[&[0, 1], &[1, 0]]));
        let sub = e.generate_subpower(&aff2(), &gens, 2).unwrap();
        assert_eq!(sub.tuples, oracle);
        assert!(!e.subpower_membership(&aff2(), &gens, &[1, 1]).unwrap());
        assert!(e.subpower_membership(&aff2(), &gens, &[0, 1]).unwrap());
    }

    #[test]
    fn order_closure_matches_brute_force() {
        let e = Engine::default();
        let gens = vec![vec![0, 1], vec![1, 0]];
        let oracle = brute_closure(&ord2(), &gens);
        assert_eq!(oracle, Relation::full(2, 2));
        assert_eq!(e.generate_subpower(&ord2(), &gens, 2).unwrap().tuples, oracle);
        assert!(e.subpower_membership(&ord2(), &gens, &[0, 0]).unwrap());
    }

    #[test]
    fn idempotent_single_generator() {
        let e = Engine::default();
        for a in [ord2(), aff2()] {
            let sub = e.generate_subpower(&a, &[vec![0, 0]], 2).unwrap();
            assert_eq!(sub.tuples, rel(2, &[&[0, 0]]));
        }
    }

    #[test]
    fn unary_closures() {
        let e = Engine::default();
        let (c, closed) = e.closure_unary(&aff2(), &Subset::singleton(0)).unwrap();
        assert_eq!(c, Subset::singleton(0));
        assert!(closed);
        let neq = RelationalStructure::new(2)
            .unwrap()
            .with("neq", rel(2, &[&[0, 1], &[1, 0]]))
            .unwrap();
        let (c, closed) = e.closure_unary(&neq, &Subset::singleton(0)).unwrap();
        assert_eq!(c, Subset::full(2));
        assert!(!closed);
        assert!(matches!(
            e.closure_unary(&neq, &Subset::default()),
            Err(Error::EmptySubset)
        ));
        let (c, _) = e.closure_unary(&ord2(), &Subset::singleton(1)).unwrap();
        assert_eq!(c, Subset::singleton(1));
    }
}
