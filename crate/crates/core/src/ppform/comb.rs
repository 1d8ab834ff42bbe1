use std::collections::BTreeSet;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::engine::{is_b_essential_any_arity, Engine};
use crate::error::{Error, Result};
use crate::model::{codec_value, from_value, parse_doc, Digraph, Relation, RelationalStructure, Subset, Tuple};
use crate::par;
use crate::ppform::simplify::register;
use crate::ppform::{analyze_formula, branch, neigh, simplified_violations, Atom, PPFormula};

/// Where a comb section came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionSource {
    Given,
    /// Subpower of `A^3` generated by these tuples.
    Generated(Vec<Tuple>),
    /// Evaluated from the variables of a formula region.
    Extracted(Vec<String>),
}

/// `∃w_1..w_{λ+1} S_1(z_1,w_1,w_2) ∧ .. ∧ S_λ(z_λ,w_λ,w_{λ+1})` with free
/// variables `z_1..z_λ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CombFormula {
    pub sections: Vec<Relation>,
    pub sources: Vec<SectionSource>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CombDoc {
    sections: Vec<Value>,
}

impl CombFormula {
    pub fn new(sections: Vec<Relation>) -> Result<Self> {
        let n = sections.len();
        Self::with_sources(sections, vec![SectionSource::Given; n])
    }

    pub fn with_sources(sections: Vec<Relation>, sources: Vec<SectionSource>) -> Result<Self> {
        if sections.is_empty() {
            return Err(Error::invalid("a comb needs at least one section"));
        }
        if let Some(i) = sections.iter().position(|s| s.arity() != 3) {
            return Err(Error::invalid(format!("section {} is not ternary", i + 1)));
        }
        if sources.len() != sections.len() {
            return Err(Error::invalid("one source per section"));
        }
        Ok(CombFormula { sections, sources })
    }

    /// Sections generated as subpowers of `A^3` of the singleton expansion.
    pub fn generated(engine: &Engine, a: &RelationalStructure, gens: &[Vec<Tuple>]) -> Result<Self> {
        let a = a.expanded()?;
        let sections = par::map_until_err(engine.is_parallel(), gens, |g| {
            engine.generate_subpower(&a, g, 3).map(|s| s.tuples)
        })?;
        let sources = gens.iter().cloned().map(SectionSource::Generated).collect();
        Self::with_sources(sections, sources)
    }

    pub fn lambda(&self) -> usize {
        self.sections.len()
    }

    /// The comb as a formula over a structure holding the sections as
    /// `S1, S2, ..`.
    pub fn to_formula(&self, size: usize) -> Result<(PPFormula, RelationalStructure)> {
        let lambda = self.lambda();
        let mut st = RelationalStructure::new(size)?;
        let mut names: Vec<String> = (1..=lambda).map(|i| format!("z{i}")).collect();
        names.extend((1..=lambda + 1).map(|i| format!("w{i}")));
        let w = |i: usize| lambda + i - 1;
        let mut atoms = Vec::with_capacity(lambda);
        for (i, s) in self.sections.iter().enumerate() {
            let name = format!("S{}", i + 1);
            st.insert(name.clone(), s.clone())?;
            atoms.push(Atom {
                rel: name,
                scope: vec![i, w(i + 1), w(i + 2)],
            });
        }
        let phi = PPFormula::from_parts(names, (0..lambda).collect(), atoms)?;
        Ok((phi, st))
    }

    /// `{"sections": [relation, ..]}`.
    pub fn to_json_value(&self) -> Value {
        codec_value(&CombDoc {
            sections: self.sections.iter().map(Relation::to_json_value).collect(),
        })
    }

    pub fn to_json(&self) -> String {
        self.to_json_value().to_string()
    }

    pub fn from_json(text: &str, size: usize) -> Result<Self> {
        let value: Value = parse_doc(text)?;
        let doc: CombDoc = from_value(&value, "comb")?;
        let sections = doc
            .sections
            .iter()
            .enumerate()
            .map(|(i, s)| Relation::from_json_value(s, size, &format!("sections[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        Self::new(sections)
    }
}

/// Result of extracting a comb from a simplified tree formula.
#[derive(Clone, Debug)]
pub struct CombExtraction {
    pub comb: CombFormula,
    /// Free variables kept, `z_1..z_λ`, as variables of the input formula.
    pub selected: Vec<usize>,
    /// Spine variables `w_2..w_{λ+1}` of the input formula; `w_1` is a new
    /// variable equal to `z_1`.
    pub spine: Vec<usize>,
    pub kappa: usize,
    pub theta: usize,
}

impl CombExtraction {
    pub fn lambda(&self) -> usize {
        self.comb.lambda()
    }

    pub fn to_json_value(&self, phi: &PPFormula) -> Value {
        let names = |vs: &[usize]| vs.iter().map(|&v| phi.name(v).to_string()).collect::<Vec<_>>();
        json!({
            "lambda": self.lambda(),
            "kappa": self.kappa,
            "theta": self.theta,
            "selected": names(&self.selected),
            "spine": names(&self.spine),
            "comb": self.comb.to_json_value(),
        })
    }
}

/// Whether `kappa <= (2θ - 2)^λ / 2 + 1`.
pub fn comb_bound_holds(kappa: usize, theta: usize, lambda: usize) -> bool {
    let lhs = BigUint::from(2 * kappa.saturating_sub(1));
    let rhs = BigUint::from(2 * theta - 2).pow(lambda as u32);
    lhs <= rhs
}

/// Picks the candidate with the largest score, least index on ties.
fn argmax(candidates: impl Iterator<Item = usize>, score: impl Fn(usize) -> usize) -> Option<usize> {
    candidates.fold(None, |best: Option<usize>, v| match best {
        Some(b) if score(b) >= score(v) => Some(b),
        _ => Some(v),
    })
}

impl Engine {
    /// Extracts a comb from a simplified tree formula, starting at the free
    /// leaf `z1`.
    ///
    /// For `u != z1`, `L(u)` counts free variables outside
    /// `Branch(u; z1)`. The spine starts with `w_2` in `Neigh(z1)`
    /// maximising `L`. At each later spine variable `w_i`: stop if it is a
    /// leaf; if exactly one neighbour lies ahead, move to it; otherwise the
    /// neighbour ahead maximising `L` becomes `w_{i+1}` and the least leaf
    /// in the new region becomes `z_i`. Ties go to the lowest variable.
    /// Unselected free variables are restricted to `B` and each section is
    /// the relation of its region at `(z_i, w_i, w_{i+1})`.
    pub fn comb_extract(
        &self,
        phi: &PPFormula,
        a: &RelationalStructure,
        b: &Subset,
        z1: usize,
    ) -> Result<CombExtraction> {
        phi.check(a)?;
        a.check_subset(b)?;
        let report = analyze_formula(phi);
        if !report.is_tree || !report.is_connected {
            return Err(Error::Precondition("comb extraction needs a connected tree formula".into()));
        }
        if let Some(v) = simplified_violations(phi).first() {
            return Err(Error::Precondition(format!("formula is not simplified: {v}")));
        }
        if z1 >= phi.num_vars() || !phi.is_free(z1) || report.degree[z1] > 1 {
            return Err(Error::Precondition("z1 must be a free leaf".into()));
        }
        let free: BTreeSet<usize> = phi.free().iter().copied().collect();
        let outside = |u: usize| -> Result<usize> {
            let br = branch(phi, u, z1)?;
            Ok(free.iter().filter(|v| !br.contains(v)).count())
        };
        let mut l_cache = vec![None; phi.num_vars()];
        for (u, slot) in l_cache.iter_mut().enumerate() {
            if u != z1 {
                *slot = Some(outside(u)?);
            }
        }
        let l_of = |u: usize| l_cache[u].unwrap_or(0);

        // spine[0] stands for w_1 (identified with z1).
        let mut spine = vec![z1, argmax(neigh(phi, z1).into_iter(), l_of).ok_or_else(|| {
            Error::Precondition("z1 has no neighbours".into())
        })?];
        let mut selected = vec![z1];
        loop {
            let cur = *spine.last().unwrap();
            let prev = spine[spine.len() - 2];
            if report.degree[cur] <= 1 {
                break;
            }
            let behind = branch(phi, cur, prev)?;
            let ahead: Vec<usize> = neigh(phi, cur).into_iter().filter(|v| !behind.contains(v)).collect();
            match ahead.as_slice() {
                [] => return Err(Error::invalid("internal error: spine has nowhere to go")),
                [only] => *spine.last_mut().unwrap() = *only,
                _ => {
                    let next = argmax(ahead.iter().copied(), l_of).unwrap();
                    let region = branch(phi, next, cur)?;
                    let z = region
                        .iter()
                        .copied()
                        .find(|&v| !behind.contains(&v) && v != next && report.degree[v] <= 1)
                        .ok_or_else(|| Error::invalid("internal error: no leaf for the tooth"))?;
                    if !phi.is_free(z) {
                        return Err(Error::invalid("internal error: tooth leaf is bound"));
                    }
                    selected.push(z);
                    spine.push(next);
                }
            }
        }
        let lambda = selected.len();
        debug_assert_eq!(spine.len(), lambda + 1);

        // Restrict unselected free variables to B.
        let mut structure = a.clone();
        let mut derived = Vec::new();
        let mut fixed = phi.clone();
        let b_name = register(&mut structure, &mut derived, Relation::unary(b));
        for &x in phi.free() {
            if !selected.contains(&x) {
                fixed.add_atom(b_name.clone(), vec![x]);
            }
        }

        let mut regions = Vec::with_capacity(lambda);
        regions.push(branch(phi, spine[1], z1)?);
        for i in 1..lambda {
            let ahead = branch(phi, spine[i + 1], spine[i])?;
            let behind = branch(phi, spine[i], spine[i - 1])?;
            let mut region: BTreeSet<usize> = ahead.difference(&behind).copied().collect();
            region.insert(spine[i]);
            regions.push(region);
        }
        let sections = par::map_until_err(self.is_parallel(), &(0..lambda).collect::<Vec<_>>(), |&i| {
            let region = &regions[i];
            let atoms: Vec<Atom> = fixed
                .atoms()
                .iter()
                .filter(|at| at.scope.iter().all(|v| region.contains(v)))
                .cloned()
                .collect();
            if i == 0 {
                let sub = PPFormula::from_parts(fixed.names().to_vec(), vec![z1, spine[1]], atoms)?;
                let pairs = self.evaluate_pp(&sub, &structure)?;
                let mut s1 = Relation::empty(3);
                for t in pairs.iter() {
                    s1.insert(vec![t[0], t[0], t[1]]);
                }
                Ok(s1)
            } else {
                let free = vec![selected[i], spine[i], spine[i + 1]];
                let sub = PPFormula::from_parts(fixed.names().to_vec(), free, atoms)?;
                self.evaluate_pp(&sub, &structure)
            }
        })?;
        let sources = regions
            .iter()
            .map(|r| SectionSource::Extracted(r.iter().map(|&v| phi.name(v).to_string()).collect()))
            .collect();
        let comb = CombFormula::with_sources(sections, sources)?;

        let (comb_phi, comb_st) = comb.to_formula(a.size())?;
        let direct = self.evaluate_pp(&fixed.with_free(selected.clone())?, &structure)?;
        if self.evaluate_pp(&comb_phi, &comb_st)? != direct {
            return Err(Error::invalid("internal error: comb does not define the fixed relation"));
        }
        let kappa = phi.free().len();
        let theta = phi.theta();
        if !comb_bound_holds(kappa, theta, lambda) {
            return Err(Error::invalid(format!(
                "arity bound violated: kappa = {kappa} exceeds (2*{theta}-2)^{lambda}/2 + 1"
            )));
        }
        Ok(CombExtraction {
            comb,
            selected,
            spine: spine[1..].to_vec(),
            kappa,
            theta,
        })
    }
}

/// Connectivity facts for the digraphs `P` (spine paths supported in `B`)
/// and `Q` (supported in `A`) between spine positions `k < l`, with
/// `G = G_k` and `H = H_l`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairReport {
    pub k: usize,
    pub l: usize,
    pub g: Subset,
    pub h: Subset,
    pub p: Digraph,
    pub q: Digraph,
    pub disjoint: bool,
    /// `Q` has an edge from `G` to `H`.
    pub q_meets: bool,
    /// Every vertex of `G` has a `P`-predecessor in `G`.
    pub g_pred: bool,
    /// Every vertex of `H` has a `P`-successor in `H`.
    pub h_succ: bool,
    /// `P`-successors of `G` stay in `G`.
    pub g_closed: bool,
    /// Shortest `P`-walk from `G` to `H`.
    pub walk: Option<Vec<usize>>,
    pub diagonal_in_q: bool,
    pub closed_walk: Option<Vec<usize>>,
    pub p_meets_diagonal: bool,
}

impl PairReport {
    /// The walk conclusion holds whenever its hypotheses on `Q`, `G`, `H`
    /// do.
    pub fn walk_conclusion_holds(&self) -> bool {
        !(self.q_meets && self.g_pred && self.h_succ) || self.walk.is_some()
    }

    /// `P` has a loop whenever `Q` contains the diagonal and `P` a closed
    /// walk.
    pub fn loop_conclusion_holds(&self) -> bool {
        !(self.diagonal_in_q && self.closed_walk.is_some()) || self.p_meets_diagonal
    }

    pub fn to_json_value(&self) -> Value {
        let edges = |d: &Digraph| d.edges().iter().map(|&(u, v)| [u, v]).collect::<Vec<_>>();
        json!({
            "k": self.k,
            "l": self.l,
            "g": self.g.to_vec(),
            "h": self.h.to_vec(),
            "p": edges(&self.p),
            "q": edges(&self.q),
            "disjoint": self.disjoint,
            "q_meets": self.q_meets,
            "g_pred": self.g_pred,
            "h_succ": self.h_succ,
            "g_closed": self.g_closed,
            "walk": self.walk,
            "diagonal_in_q": self.diagonal_in_q,
            "closed_walk": self.closed_walk,
            "p_meets_diagonal": self.p_meets_diagonal,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CombReport {
    pub lambda: usize,
    /// `G_i` for `i = 2..=λ`: ends of spine paths from position 1 with teeth
    /// in `B`.
    pub g: Vec<Subset>,
    /// `H_i` for `i = 2..=λ`: starts of spine paths to position `λ+1` with
    /// teeth in `B`.
    pub h: Vec<Subset>,
    /// Least `(k, l)`, `k < l`, with `(G_k, H_k) = (G_l, H_l)`.
    pub repeated: Option<(usize, usize)>,
    pub pair: Option<PairReport>,
    pub comb_essential: bool,
    /// The comb is `B`-essential, `(G, H)` repeats, `G` and `H` are
    /// disjoint, `G` is closed under `P` and the walk hypotheses hold — an
    /// impossible combination when `B` Jónsson absorbs `Pol(A)`.
    pub contradiction: bool,
}

impl CombReport {
    pub fn to_json_value(&self) -> Value {
        json!({
            "lambda": self.lambda,
            "g": self.g.iter().map(Subset::to_vec).collect::<Vec<_>>(),
            "h": self.h.iter().map(Subset::to_vec).collect::<Vec<_>>(),
            "repeated": self.repeated.map(|(k, l)| [k, l]),
            "pair": self.pair.as_ref().map(PairReport::to_json_value),
            "comb_essential": self.comb_essential,
            "contradiction": self.contradiction,
        })
    }
}

/// `p_i` digraphs: `(u, v)` with `(z, u, v)` in `S_i` for some `z` in `support`.
fn spine_digraphs(comb: &CombFormula, size: usize, support: &Subset) -> Vec<Digraph> {
    comb.sections
        .iter()
        .map(|s| Digraph::new(size, s.iter().filter(|t| support.contains(t[0])).map(|t| (t[1], t[2]))))
        .collect()
}

fn compose_all(ds: &[Digraph], size: usize) -> Digraph {
    ds.iter()
        .fold(Digraph::new(size, (0..size).map(|v| (v, v))), |acc, d| acc.compose(d))
}

/// Report for spine positions `k < l` (1-based, `2 <= k < l <= λ`).
pub fn comb_pair(comb: &CombFormula, size: usize, b: &Subset, k: usize, l: usize) -> Result<PairReport> {
    let lambda = comb.lambda();
    if !(2 <= k && k < l && l <= lambda) {
        return Err(Error::invalid(format!("need 2 <= k < l <= {lambda}, got ({k}, {l})")));
    }
    let pb = spine_digraphs(comb, size, b);
    let pa = spine_digraphs(comb, size, &Subset::full(size));
    let g = compose_all(&pb[..k - 1], size).range();
    let h = compose_all(&pb[l - 1..], size).domain();
    let p = compose_all(&pb[k - 1..l - 1], size);
    let q = compose_all(&pa[k - 1..l - 1], size);
    let q_meets = q.edges().iter().any(|&(u, v)| g.contains(u) && h.contains(v));
    let g_pred = g.iter().all(|c| g.iter().any(|a| p.has_edge(a, c)));
    let h_succ = h.iter().all(|a| h.iter().any(|c| p.has_edge(a, c)));
    let g_closed = p.successors_of(&g).is_subset(&g);
    Ok(PairReport {
        k,
        l,
        disjoint: g.is_disjoint(&h),
        q_meets,
        g_pred,
        h_succ,
        g_closed,
        walk: p.reach(&g, &h),
        diagonal_in_q: (0..size).all(|v| q.has_edge(v, v)),
        closed_walk: p.closed_walk(),
        p_meets_diagonal: p.meets_diagonal(),
        g,
        h,
        p,
        q,
    })
}

impl Engine {
    /// Spine-path analysis of a comb.
    pub fn comb_analyze(&self, comb: &CombFormula, a: &RelationalStructure, b: &Subset) -> Result<CombReport> {
        a.check_subset(b)?;
        let size = a.size();
        let lambda = comb.lambda();
        let pb = spine_digraphs(comb, size, b);
        let g: Vec<Subset> = (2..=lambda).map(|i| compose_all(&pb[..i - 1], size).range()).collect();
        let h: Vec<Subset> = (2..=lambda).map(|i| compose_all(&pb[i - 1..], size).domain()).collect();
        let repeated = (2..=lambda)
            .flat_map(|k| (k + 1..=lambda).map(move |l| (k, l)))
            .find(|&(k, l)| g[k - 2] == g[l - 2] && h[k - 2] == h[l - 2]);
        let pair = repeated
            .map(|(k, l)| comb_pair(comb, size, b, k, l))
            .transpose()?;
        let (phi, st) = comb.to_formula(size)?;
        let comb_essential = is_b_essential_any_arity(&self.evaluate_pp(&phi, &st)?, b);
        let contradiction = comb_essential
            && pair.as_ref().is_some_and(|p| {
                p.disjoint && p.g_closed && p.q_meets && p.g_pred && p.h_succ
            });
        Ok(CombReport {
            lambda,
            g,
            h,
            repeated,
            pair,
            comb_essential,
            contradiction,
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

    fn aff2() -> RelationalStructure {
        RelationalStructure::new(2)
            .unwrap()
            .with("aff", rel(3, &[&[0, 0, 0], &[0, 1, 1], &[1, 0, 1], &[1, 1, 0]]))
            .unwrap()
    }

    /// `G_i` and `H_i` by enumerating every spine path and tooth tuple.
    fn paths_oracle(comb: &CombFormula, size: usize, b: &Subset) -> (Vec<Subset>, Vec<Subset>) {
        let lambda = comb.lambda();
        let mut g = vec![Subset::default(); lambda + 1];
        let mut h = vec![Subset::default(); lambda + 1];
        for teeth in all_tuples(size, lambda) {
            for path in all_tuples(size, lambda + 1) {
                let ok = |i: usize| comb.sections[i].contains(&[teeth[i], path[i], path[i + 1]]);
                for i in 2..=lambda {
                    if (0..i - 1).all(|j| b.contains(teeth[j]) && ok(j)) {
                        g[i].insert(path[i - 1]);
                    }
                    if (i - 1..lambda).all(|j| b.contains(teeth[j]) && ok(j)) {
                        h[i].insert(path[i - 1]);
                    }
                }
            }
        }
        (g.drain(2..).collect(), h.drain(2..).collect())
    }

    #[test]
    fn full_sections() {
        let e = Engine::default();
        let comb = CombFormula::new(vec![Relation::full(2, 3); 4]).unwrap();
        let r = e.comb_analyze(&comb, &aff2(), &Subset::singleton(0)).unwrap();
        assert!(r.g.iter().chain(&r.h).all(|s| s.is_full(2)));
        assert_eq!(r.repeated, Some((2, 3)));
        assert!(!r.comb_essential && !r.contradiction);
    }

    #[test]
    fn affine_sections_match_path_enumeration() {
        let e = Engine::default();
        let gens = vec![vec![0, 0, 0], vec![0, 1, 1], vec![1, 0, 1]];
        let comb = CombFormula::generated(&e, &aff2(), &vec![gens; 4]).unwrap();
        assert_eq!(comb.sections[0], *aff2().relation("aff").unwrap());
        let b = Subset::singleton(0);
        let r = e.comb_analyze(&comb, &aff2(), &b).unwrap();
        let (g, h) = paths_oracle(&comb, 2, &b);
        assert_eq!((r.g.clone(), r.h.clone()), (g, h));
        assert_eq!(r.repeated, Some((2, 3)));
        // w_{i+1} = w_i + z_i always has a solution: the comb relation is full.
        assert!(!r.comb_essential);
    }

    #[test]
    fn comb_json_round_trip() {
        let comb = CombFormula::new(vec![Relation::full(2, 3), rel(3, &[&[0, 1, 0]])]).unwrap();
        assert_eq!(CombFormula::from_json(&comb.to_json(), 2).unwrap(), comb);
        assert!(CombFormula::from_json(r#"{"sections":[]}"#, 2).is_err());
    }

    fn or2() -> RelationalStructure {
        RelationalStructure::new(2)
            .unwrap()
            .with("or", rel(2, &[&[0, 1], &[1, 0], &[1, 1]]))
            .unwrap()
            .with("t", rel(3, &[&[0, 1, 1], &[1, 0, 1], &[1, 1, 0], &[1, 1, 1]]))
            .unwrap()
    }

    #[test]
    fn extraction_from_path() {
        let e = Engine::default();
        let phi = PPFormula::new(&["x1", "x2"], &[("or", &["x1", "w"]), ("or", &["w", "x2"])]).unwrap();
        // w has degree 2 but its neighbours are free leaves: simplified.
        let out = e.comb_extract(&phi, &or2(), &Subset::singleton(0), 0).unwrap();
        assert_eq!(out.lambda(), 1);
        assert!(comb_bound_holds(out.kappa, out.theta, 1));
    }

    #[test]
    fn extraction_from_caterpillar() {
        let e = Engine::default();
        // x0 - y1 - y2 - y3 - x4 spine, teeth x1, x2, x3
        let phi = PPFormula::new(
            &["x0", "x1", "x2", "x3", "x4"],
            &[
                ("t", &["x0", "x1", "y1"]),
                ("t", &["y1", "x2", "y2"]),
                ("or", &["y2", "y3"]),
                ("t", &["y3", "x3", "x4"]),
            ],
        )
        .unwrap();
        let b = Subset::singleton(0);
        let out = e.comb_extract(&phi, &or2(), &b, 0).unwrap();
        assert_eq!(out.selected[0], 0);
        assert!(out.selected.iter().all(|&z| phi.is_free(z)));
        assert!(comb_bound_holds(out.kappa, out.theta, out.lambda()));
        assert!(e.comb_extract(&phi, &or2(), &b, phi.var("y1").unwrap()).is_err());
    }

    #[test]
    fn bound_formula() {
        assert!(comb_bound_holds(5, 2, 3));
        assert!(!comb_bound_holds(6, 2, 3));
        assert!(comb_bound_holds(2, 2, 1));
    }
}
