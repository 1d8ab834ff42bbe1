use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::model::{OperationTable, RelationalStructure, Subset};

impl Engine {
    /// Searches for an `n`-ary absorption term as a single homomorphism
    /// problem `A^n -> A`: diagonal vertices are pinned to their element and
    /// every argument tuple with at most one entry outside `B` is restricted
    /// to `B`.
    pub fn absorption_term_search(
        &self,
        a: &RelationalStructure,
        b: &Subset,
        n: usize,
    ) -> Result<Option<OperationTable>> {
        if b.is_empty() {
            return Err(Error::EmptySubset);
        }
        a.check_subset(b)?;
        if n == 0 {
            return Err(Error::invalid("term arity must be positive"));
        }
        let a = a.expanded()?;
        let net = self.power_network(&a, n)?;
        let mut doms = net.domains();
        for args in net.all_args() {
            if args.iter().all(|&x| x == args[0]) {
                net.pin(&mut doms, &args, args[0]);
            } else if args.iter().filter(|&&x| !b.contains(x)).count() <= 1 {
                net.restrict(&mut doms, &args, b);
            }
        }
        Ok(net.solve(doms))
    }
}
