use crate::engine::network::{full_mask, Mask, Network, MAX_DOMAIN};
use crate::error::{Error, Result};
use crate::model::{RelationalStructure, Subset};

/// A homomorphism-extension problem: find a map from the source universe to
/// the target universe that sends every source tuple of each relation into
/// the target relation of the same name, and respects per-vertex candidate
/// sets (pins are singleton candidate sets).
#[derive(Clone, Debug)]
pub struct HomInstance {
    source: RelationalStructure,
    target: RelationalStructure,
    domains: Vec<Subset>,
}

impl HomInstance {
    /// Fails unless both structures have the same relation names with the
    /// same arities, or when the target has more than 64 elements.
    pub fn new(source: RelationalStructure, target: RelationalStructure) -> Result<Self> {
        if target.size() > MAX_DOMAIN {
            return Err(Error::DomainTooLarge(format!(
                "target has {} elements, the solver handles at most {MAX_DOMAIN}",
                target.size()
            )));
        }
        let sig = |s: &RelationalStructure| -> Vec<(String, usize)> {
            s.relations().iter().map(|(n, r)| (n.clone(), r.arity())).collect()
        };
        if sig(&source) != sig(&target) {
            return Err(Error::invalid("source and target signatures differ"));
        }
        let domains = vec![Subset::full(target.size()); source.size()];
        Ok(HomInstance {
            source,
            target,
            domains,
        })
    }

    pub fn source(&self) -> &RelationalStructure {
        &self.source
    }

    pub fn target(&self) -> &RelationalStructure {
        &self.target
    }

    pub fn domains(&self) -> &[Subset] {
        &self.domains
    }

    /// Pins source vertex `v` to target element `a` (intersecting with any
    /// earlier restriction).
    pub fn pin(&mut self, v: usize, a: usize) -> &mut Self {
        self.restrict(v, &Subset::singleton(a))
    }

    /// Restricts source vertex `v` to the candidates in `allowed`.
    pub fn restrict(&mut self, v: usize, allowed: &Subset) -> &mut Self {
        self.domains[v] = self.domains[v].intersection(allowed);
        self
    }

    fn network(&self) -> (Network, Vec<Mask>) {
        let mut net = Network::new(self.source.size(), self.target.size());
        for (name, src) in self.source.relations() {
            let tgt = self.target.relation(name).expect("signature checked");
            let handle = net.add_relation(tgt.arity(), tgt.iter().map(Vec::as_slice));
            for scope in src.iter() {
                net.add_constraint(handle, scope);
            }
        }
        let full = full_mask(self.target.size());
        let doms = net
            .initial_domains()
            .into_iter()
            .zip(&self.domains)
            .map(|(m, d)| m & d.mask() & full)
            .collect();
        (net, doms)
    }

    /// Arc-consistent domains, or `None` when the instance is inconsistent.
    pub fn ac_fixpoint(&self) -> Option<Vec<Subset>> {
        let (net, doms) = self.network();
        net.fixpoint(doms)
            .map(|d| d.into_iter().map(Subset::from_mask).collect())
    }

    /// A satisfying assignment (indexed by source vertex), if any.
    pub fn find_hom(&self) -> Option<Vec<usize>> {
        let (net, doms) = self.network();
        net.solve(doms)
    }
}
