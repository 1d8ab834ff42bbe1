use crate::engine::network::{full_mask, Mask, Network, MAX_DOMAIN};
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::model::{
    all_tuples, checked_pow, rank, Relation, RelationalStructure, Subset, Tuple,
};
use crate::model::OperationTable;

impl Engine {
    /// The `k`-th power of `a`: universe `A^k` ranked lexicographically, and a
    /// tuple of `k`-tuples in a relation iff every coordinate row lies in the
    /// original relation.
    pub fn power_structure(&self, a: &RelationalStructure, k: usize) -> Result<RelationalStructure> {
        let vertices = self.power_vertices(a.size(), k)?;
        self.check_constraints(a, k)?;
        let mut out = RelationalStructure::new(vertices)?;
        for (name, rel) in a.relations() {
            let mut lifted = Relation::empty(rel.arity());
            for_each_lifted(rel, k, a.size(), |scope| {
                lifted.insert(scope.to_vec());
            });
            out.insert(name.clone(), lifted)?;
        }
        Ok(out)
    }

    pub(crate) fn power_vertices(&self, size: usize, k: usize) -> Result<usize> {
        let cap = self.limits().max_power_vertices;
        match checked_pow(size, k) {
            Some(n) if n <= cap => Ok(n),
            _ => Err(Error::cap("power structure", format!("{size}^{k} vertices"), cap)),
        }
    }

    fn check_constraints(&self, a: &RelationalStructure, k: usize) -> Result<()> {
        let cap = self.limits().max_constraints;
        let mut total: usize = 0;
        for rel in a.relations().values() {
            let n = checked_pow(rel.len(), k)
                .ok_or_else(|| Error::cap("power structure", "overflow constraints", cap))?;
            total = total.saturating_add(n);
        }
        if total > cap {
            return Err(Error::cap("power structure", format!("{total} constraints"), cap));
        }
        Ok(())
    }

    /// Compiles the homomorphism problem `A^k -> A` once so it can be solved
    /// under many different vertex restrictions.
    pub(crate) fn power_network(&self, a: &RelationalStructure, k: usize) -> Result<PowerNetwork> {
        if a.size() > MAX_DOMAIN {
            return Err(Error::DomainTooLarge(format!(
                "{} elements, the solver handles at most {MAX_DOMAIN}",
                a.size()
            )));
        }
        let vertices = self.power_vertices(a.size(), k)?;
        self.check_constraints(a, k)?;
        let mut net = Network::new(vertices, a.size());
        for rel in a.relations().values() {
            let handle = net.add_relation(rel.arity(), rel.iter().map(Vec::as_slice));
            for_each_lifted(rel, k, a.size(), |scope| net.add_constraint(handle, scope));
        }
        Ok(PowerNetwork {
            net,
            size: a.size(),
            arity: k,
        })
    }
}

/// Calls `f` with the scope (vertex ranks) of every lifted tuple of `rel` in
/// the `k`-th power.
fn for_each_lifted<F: FnMut(&[usize])>(rel: &Relation, k: usize, size: usize, mut f: F) {
    let tuples: Vec<&Tuple> = rel.iter().collect();
    if tuples.is_empty() {
        return;
    }
    if k == 0 {
        return;
    }
    let mut idx = vec![0usize; k];
    let mut scope = vec![0usize; rel.arity()];
    loop {
        for (j, slot) in scope.iter_mut().enumerate() {
            *slot = idx.iter().fold(0, |acc, &i| acc * size + tuples[i][j]);
        }
        f(&scope);
        if !crate::model::table::advance(&mut idx, tuples.len()) {
            break;
        }
    }
}

/// The compiled problem `A^k -> A`; a solution is the value table of a
/// `k`-ary polymorphism.
pub(crate) struct PowerNetwork {
    net: Network,
    size: usize,
    arity: usize,
}

impl PowerNetwork {
    pub(crate) fn domains(&self) -> Vec<Mask> {
        self.net.initial_domains()
    }

    pub(crate) fn vertex(&self, args: &[usize]) -> usize {
        debug_assert_eq!(args.len(), self.arity);
        rank(args, self.size)
    }

    /// Restricts the vertex `args` to `allowed`.
    pub(crate) fn restrict(&self, doms: &mut [Mask], args: &[usize], allowed: &Subset) {
        doms[self.vertex(args)] &= allowed.mask() & full_mask(self.size);
    }

    pub(crate) fn pin(&self, doms: &mut [Mask], args: &[usize], value: usize) {
        doms[self.vertex(args)] &= 1 << value;
    }

    pub(crate) fn solve(&self, doms: Vec<Mask>) -> Option<OperationTable> {
        self.net
            .solve(doms)
            .map(|values| OperationTable::new(self.size, self.arity, values).expect("valid table"))
    }

    pub(crate) fn satisfiable(&self, doms: Vec<Mask>) -> bool {
        self.net.satisfiable(doms)
    }

    /// All images `(f(cols[0]), ..., f(cols[m-1]))` over polymorphisms `f`
    /// satisfying `doms`, sorted.
    pub(crate) fn images(&self, doms: Vec<Mask>, cols: &[Tuple], cap: usize) -> Result<Vec<Tuple>> {
        let proj: Vec<usize> = cols.iter().map(|c| self.vertex(c)).collect();
        self.net
            .project_solutions(doms, &proj, cap)
            .map_err(|n| Error::cap("generated relation", format!("more than {} tuples", n - 1), cap))
    }

    /// All argument tuples of the power, in rank order.
    pub(crate) fn all_args(&self) -> impl Iterator<Item = Tuple> {
        all_tuples(self.size, self.arity)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{HomInstance, Limits};
    use crate::model::Subset;

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

    #[test]
    fn power_sizes() {
        let e = Engine::default();
        let triv = RelationalStructure::new(1).unwrap();
        assert_eq!(e.power_structure(&triv, 3).unwrap().size(), 1);
        let p = e.power_structure(&ord2(), 2).unwrap();
        assert_eq!(p.size(), 4);
        assert_eq!(p.relation("leq").unwrap().len(), 9);
        let p = e.power_structure(&aff2(), 2).unwrap();
        assert_eq!(p.relation("aff").unwrap().len(), 16);
    }

    #[test]
    fn cap_is_enforced() {
        let e = Engine::new(Limits {
            max_power_vertices: 7,
            ..Limits::default()
        });
        let err = e.power_structure(&ord2(), 3).unwrap_err();
        assert!(err.is_resource());
        assert!(e.power_structure(&ord2(), 2).is_ok());
    }

    #[test]
    fn ac_on_identity_signature() {
        let inst = HomInstance::new(ord2(), ord2()).unwrap();
        let doms = inst.ac_fixpoint().unwrap();
        assert!(doms.iter().all(|d| d == &Subset::full(2)) || doms.len() == 2);
        // s0/s1 pin the vertices, so the only homomorphism is the identity
        assert_eq!(inst.find_hom(), Some(vec![0, 1]));
    }

    #[test]
    fn ac_on_identity_signature_without_constants() {
        let leq = RelationalStructure::new(2)
            .unwrap()
            .with("leq", rel(2, &[&[0, 0], &[0, 1], &[1, 1]]))
            .unwrap();
        let inst = HomInstance::new(leq.clone(), leq).unwrap();
        assert_eq!(inst.ac_fixpoint().unwrap(), vec![Subset::full(2); 2]);
    }

    #[test]
    fn pin_against_singleton_is_inconsistent() {
        let mut inst = HomInstance::new(ord2(), ord2()).unwrap();
        inst.pin(0, 1);
        assert!(inst.ac_fixpoint().is_none());
        assert!(inst.find_hom().is_none());
    }

    #[test]
    fn pinned_binary_search_returns_min() {
        let e = Engine::default();
        let p = e.power_structure(&ord2(), 2).unwrap();
        let mut inst = HomInstance::new(p, ord2()).unwrap();
        inst.pin(rank(&[0, 1], 2), 0).pin(rank(&[1, 0], 2), 0);
        assert_eq!(inst.find_hom(), Some(vec![0, 0, 0, 1]));
    }

    #[test]
    fn empty_relation_constraint_has_no_solution() {
        let src = RelationalStructure::new(1)
            .unwrap()
            .with("r", rel(2, &[&[0, 0]]))
            .unwrap();
        let tgt = RelationalStructure::new(2)
            .unwrap()
            .with("r", Relation::empty(2))
            .unwrap();
        assert!(HomInstance::new(src, tgt).unwrap().find_hom().is_none());
    }

    #[test]
    fn signature_mismatch_rejected() {
        assert!(HomInstance::new(ord2(), aff2()).is_err());
    }

    #[test]
    fn compiled_network_agrees_with_materialised_power() {
        let e = Engine::default();
        for a in [ord2(), aff2()] {
            let net = e.power_network(&a, 2).unwrap();
            let sol = net.solve(net.domains()).unwrap();
            let inst = HomInstance::new(e.power_structure(&a, 2).unwrap(), a.clone()).unwrap();
            assert_eq!(inst.find_hom().unwrap(), sol.values().to_vec());
            assert!(sol.is_polymorphism(&a));
        }
    }
}
