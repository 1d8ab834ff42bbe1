//! Constraint network shared by every homomorphism search in the crate.
//!
//! Variables range over a target domain of at most 64 elements, so domains
//! are `u64` bit masks. Propagation is generalised arc consistency over whole
//! constraint scopes; search picks the unassigned variable with the fewest
//! remaining values (lowest index on ties) and tries values in increasing
//! order.

use std::collections::VecDeque;

pub(crate) type Mask = u64;

pub(crate) const MAX_DOMAIN: usize = 64;

pub(crate) fn full_mask(size: usize) -> Mask {
    debug_assert!(size <= MAX_DOMAIN);
    if size == 64 {
        u64::MAX
    } else {
        (1u64 << size) - 1
    }
}

#[derive(Clone, Debug)]
struct TargetRelation {
    arity: usize,
    /// Tuples laid out back to back.
    flat: Vec<u8>,
}

impl TargetRelation {
    fn len(&self) -> usize {
        self.flat.len().checked_div(self.arity).unwrap_or(0)
    }

    fn tuple(&self, i: usize) -> &[u8] {
        &self.flat[i * self.arity..(i + 1) * self.arity]
    }
}

#[derive(Clone, Debug)]
struct Constraint {
    rel: usize,
    scope: Vec<u32>,
    /// For each position, the first position holding the same variable.
    first: Vec<u8>,
}

#[derive(Clone, Debug)]
pub(crate) struct Network {
    rels: Vec<TargetRelation>,
    constraints: Vec<Constraint>,
    watch: Vec<Vec<u32>>,
    /// Masks forced by unary constraints, folded in at construction.
    base: Vec<Mask>,
}

impl Network {
    pub(crate) fn new(vars: usize, size: usize) -> Self {
        assert!(size <= MAX_DOMAIN);
        Network {
            rels: Vec::new(),
            constraints: Vec::new(),
            watch: vec![Vec::new(); vars],
            base: vec![full_mask(size); vars],
        }
    }

    /// Registers a target relation and returns its handle.
    pub(crate) fn add_relation<'a, I>(&mut self, arity: usize, tuples: I) -> usize
    where
        I: IntoIterator<Item = &'a [usize]>,
    {
        let mut flat = Vec::new();
        for t in tuples {
            debug_assert_eq!(t.len(), arity);
            flat.extend(t.iter().map(|&x| x as u8));
        }
        self.rels.push(TargetRelation { arity, flat });
        self.rels.len() - 1
    }

    /// Adds the constraint `rel(scope)`. Unary constraints are folded into
    /// the base domains.
    pub(crate) fn add_constraint(&mut self, rel: usize, scope: &[usize]) {
        let target = &self.rels[rel];
        debug_assert_eq!(target.arity, scope.len());
        if scope.len() == 1 {
            let mask = (0..target.len()).fold(0, |m, i| m | 1 << target.tuple(i)[0]);
            self.base[scope[0]] &= mask;
            return;
        }
        let first = scope
            .iter()
            .map(|v| scope.iter().position(|w| w == v).unwrap() as u8)
            .collect();
        let idx = self.constraints.len() as u32;
        let mut seen: Vec<usize> = Vec::new();
        for &v in scope {
            if !seen.contains(&v) {
                seen.push(v);
                self.watch[v].push(idx);
            }
        }
        self.constraints.push(Constraint {
            rel,
            scope: scope.iter().map(|&v| v as u32).collect(),
            first,
        });
    }

    pub(crate) fn initial_domains(&self) -> Vec<Mask> {
        self.base.clone()
    }

    /// Narrows each scope variable to the values with a support tuple.
    /// Returns the variables that changed, or `None` on a wipe-out.
    fn revise(&self, c: &Constraint, doms: &mut [Mask]) -> Option<Vec<usize>> {
        let rel = &self.rels[c.rel];
        let arity = c.scope.len();
        let mut support = [0 as Mask; 16];
        let mut support_vec;
        let support: &mut [Mask] = if arity <= 16 {
            &mut support[..arity]
        } else {
            support_vec = vec![0; arity];
            &mut support_vec
        };
        'tuples: for i in 0..rel.len() {
            let t = rel.tuple(i);
            for p in 0..arity {
                let v = c.scope[p] as usize;
                if doms[v] >> t[p] & 1 == 0 || t[p] != t[c.first[p] as usize] {
                    continue 'tuples;
                }
            }
            for (s, &x) in support.iter_mut().zip(t) {
                *s |= 1 << x;
            }
        }
        let mut changed = Vec::new();
        for (p, &sup) in support.iter().enumerate().take(arity) {
            if c.first[p] as usize != p {
                continue;
            }
            let v = c.scope[p] as usize;
            let narrowed = doms[v] & sup;
            if narrowed == 0 {
                return None;
            }
            if narrowed != doms[v] {
                doms[v] = narrowed;
                changed.push(v);
            }
        }
        Some(changed)
    }

    /// Establishes generalised arc consistency starting from the constraints
    /// watching `touched` (all constraints when `touched` is `None`).
    pub(crate) fn propagate(&self, doms: &mut [Mask], touched: Option<&[usize]>) -> bool {
        if doms.contains(&0) {
            return false;
        }
        let mut queued = vec![false; self.constraints.len()];
        let mut queue: VecDeque<u32> = VecDeque::new();
        match touched {
            None => {
                queue.extend(0..self.constraints.len() as u32);
                queued.iter_mut().for_each(|q| *q = true);
            }
            Some(vars) => {
                for &v in vars {
                    for &c in &self.watch[v] {
                        if !queued[c as usize] {
                            queued[c as usize] = true;
                            queue.push_back(c);
                        }
                    }
                }
            }
        }
        while let Some(ci) = queue.pop_front() {
            queued[ci as usize] = false;
            let c = &self.constraints[ci as usize];
            let Some(changed) = self.revise(c, doms) else {
                return false;
            };
            for v in changed {
                for &d in &self.watch[v] {
                    if d != ci && !queued[d as usize] {
                        queued[d as usize] = true;
                        queue.push_back(d);
                    }
                }
            }
        }
        true
    }

    /// Arc-consistent fixpoint of `doms`, or `None` when some domain empties.
    pub(crate) fn fixpoint(&self, mut doms: Vec<Mask>) -> Option<Vec<Mask>> {
        self.propagate(&mut doms, None).then_some(doms)
    }

    /// First solution found by MRV / lexicographic-value backtracking.
    pub(crate) fn solve(&self, doms: Vec<Mask>) -> Option<Vec<usize>> {
        let doms = self.fixpoint(doms)?;
        self.search(doms)
    }

    fn search(&self, doms: Vec<Mask>) -> Option<Vec<usize>> {
        let pick = (0..self.base.len())
            .filter(|&v| doms[v].count_ones() > 1)
            .min_by_key(|&v| (doms[v].count_ones(), v));
        let Some(var) = pick else {
            return Some(doms.iter().map(|m| m.trailing_zeros() as usize).collect());
        };
        let mut values = doms[var];
        while values != 0 {
            let a = values.trailing_zeros();
            values &= values - 1;
            let mut next = doms.clone();
            next[var] = 1 << a;
            if self.propagate(&mut next, Some(&[var])) {
                if let Some(sol) = self.search(next) {
                    return Some(sol);
                }
            }
        }
        None
    }

    /// Whether some solution exists.
    pub(crate) fn satisfiable(&self, doms: Vec<Mask>) -> bool {
        self.solve(doms).is_some()
    }

    /// All tuples `(s[proj[0]], ..., s[proj[m-1]])` over solutions `s`, in
    /// lexicographic order. `proj` may repeat variables. Fails with the
    /// number of tuples found so far once more than `cap` are produced.
    pub(crate) fn project_solutions(
        &self,
        doms: Vec<Mask>,
        proj: &[usize],
        cap: usize,
    ) -> Result<Vec<Vec<usize>>, usize> {
        let mut distinct: Vec<usize> = Vec::new();
        for &v in proj {
            if !distinct.contains(&v) {
                distinct.push(v);
            }
        }
        let mut out = Vec::new();
        let Some(doms) = self.fixpoint(doms) else {
            return Ok(out);
        };
        self.enumerate(doms, &distinct, 0, proj, &mut out, cap)?;
        Ok(out)
    }

    fn enumerate(
        &self,
        doms: Vec<Mask>,
        order: &[usize],
        depth: usize,
        proj: &[usize],
        out: &mut Vec<Vec<usize>>,
        cap: usize,
    ) -> Result<(), usize> {
        if depth == order.len() {
            if self.search(doms.clone()).is_some() {
                if out.len() >= cap {
                    return Err(out.len() + 1);
                }
                out.push(proj.iter().map(|&v| doms[v].trailing_zeros() as usize).collect());
            }
            return Ok(());
        }
        let var = order[depth];
        let mut values = doms[var];
        while values != 0 {
            let a = values.trailing_zeros();
            values &= values - 1;
            let mut next = doms.clone();
            next[var] = 1 << a;
            if self.propagate(&mut next, Some(&[var])) {
                self.enumerate(next, order, depth + 1, proj, out, cap)?;
            }
        }
        Ok(())
    }
}
