use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::engine::{Engine, Subpower};
use crate::error::{Error, Result};
use crate::model::{codec_value, from_value, parse_doc, Digraph, OperationTable, RelationalStructure, Subset, Tuple};
use crate::par;

/// `(a, c, d, b1, b2)` with `b1, b2 in B`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Quintuple {
    pub a: usize,
    pub c: usize,
    pub d: usize,
    pub b1: usize,
    pub b2: usize,
}

impl Quintuple {
    pub fn new(a: usize, c: usize, d: usize, b1: usize, b2: usize) -> Self {
        Quintuple { a, c, d, b1, b2 }
    }

    pub fn to_array(self) -> [usize; 5] {
        [self.a, self.c, self.d, self.b1, self.b2]
    }

    pub fn from_array([a, c, d, b1, b2]: [usize; 5]) -> Self {
        Quintuple { a, c, d, b1, b2 }
    }

    /// The generators `(b1,a,a), (b2,c,c), (d,a,c)`.
    pub fn generators(&self) -> Vec<Tuple> {
        vec![
            vec![self.b1, self.a, self.a],
            vec![self.b2, self.c, self.c],
            vec![self.d, self.a, self.c],
        ]
    }

    /// Arguments at which a ternary polymorphism is read off: it generates
    /// `(phi(b1,b2,d), phi(a,c,a), phi(a,c,c))`.
    pub(crate) fn columns(&self) -> [[usize; 3]; 3] {
        [
            [self.b1, self.b2, self.d],
            [self.a, self.c, self.a],
            [self.a, self.c, self.c],
        ]
    }
}

/// All quintuples over `0..size` with `b1, b2 in B`, in lexicographic order.
pub(crate) fn all_quintuples(size: usize, b: &Subset) -> Vec<Quintuple> {
    let mut out = Vec::new();
    for a in 0..size {
        for c in 0..size {
            for d in 0..size {
                for b1 in b.iter() {
                    for b2 in b.iter() {
                        out.push(Quintuple::new(a, c, d, b1, b2));
                    }
                }
            }
        }
    }
    out
}

/// One `B`-coloured edge `u -> v`, witnessed by a ternary polymorphism `phi`
/// with `phi(b1,b2,d) = b`, `phi(a,c,a) = u`, `phi(a,c,c) = v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub b: usize,
    pub u: usize,
    pub v: usize,
    pub phi: OperationTable,
}

/// The walk from `a` to `c` for one quintuple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuintupleProof {
    pub q: Quintuple,
    pub steps: Vec<Step>,
}

/// NP certificate for Jónsson absorption: a coloured walk per quintuple.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Certificate {
    pub quintuples: Vec<QuintupleProof>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Jonsson,
    Absorption,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decision {
    pub mode: Mode,
    pub holds: bool,
    /// Lexicographically least failing quintuple, when `holds` is false.
    pub failing: Option<Quintuple>,
    /// Present when `holds` is true.
    pub certificate: Option<Certificate>,
}

impl Decision {
    pub fn verdict(&self) -> &'static str {
        match (self.mode, self.holds) {
            (Mode::Absorption, true) => "absorbing",
            (Mode::Absorption, false) => "not absorbing",
            (Mode::Jonsson, true) => "jonsson absorbing",
            (Mode::Jonsson, false) => "not jonsson absorbing",
        }
    }

    /// `{"holds", "failing"?, "certificate"?, "verdict"}`.
    pub fn to_json_value(&self) -> Value {
        let mut map = serde_json::Map::new();
        map.insert("holds".into(), Value::Bool(self.holds));
        map.insert("verdict".into(), Value::String(self.verdict().into()));
        if let Some(q) = self.failing {
            map.insert("failing".into(), codec_value(&q.to_array()));
        }
        if let Some(cert) = &self.certificate {
            map.insert("certificate".into(), cert.to_json_value());
        }
        Value::Object(map)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StepDoc {
    b: usize,
    u: usize,
    v: usize,
    phi: Value,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProofDoc {
    q: [usize; 5],
    steps: Vec<StepDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CertificateDoc {
    quintuples: Vec<ProofDoc>,
}

impl Certificate {
    pub fn to_json_value(&self) -> Value {
        codec_value(&CertificateDoc {
            quintuples: self
                .quintuples
                .iter()
                .map(|p| ProofDoc {
                    q: p.q.to_array(),
                    steps: p
                        .steps
                        .iter()
                        .map(|s| StepDoc {
                            b: s.b,
                            u: s.u,
                            v: s.v,
                            phi: s.phi.to_json_value(),
                        })
                        .collect(),
                })
                .collect(),
        })
    }

    pub fn to_json(&self) -> String {
        self.to_json_value().to_string()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = parse_doc(text)?;
        Self::from_json_value(&value)
    }

    pub fn from_json_value(value: &Value) -> Result<Self> {
        let doc: CertificateDoc = from_value(value, "certificate")?;
        let mut quintuples = Vec::with_capacity(doc.quintuples.len());
        for (i, p) in doc.quintuples.into_iter().enumerate() {
            let mut steps = Vec::with_capacity(p.steps.len());
            for (j, s) in p.steps.into_iter().enumerate() {
                let phi = OperationTable::from_json_value(
                    &s.phi,
                    &format!("quintuples[{i}].steps[{j}].phi"),
                )?;
                steps.push(Step {
                    b: s.b,
                    u: s.u,
                    v: s.v,
                    phi,
                });
            }
            quintuples.push(QuintupleProof {
                q: Quintuple::from_array(p.q),
                steps,
            });
        }
        Ok(Certificate { quintuples })
    }
}

impl Engine {
    fn check_input(&self, a: &RelationalStructure, b: &Subset) -> Result<RelationalStructure> {
        if b.is_empty() {
            return Err(Error::EmptySubset);
        }
        a.check_subset(b)?;
        let a = a.expanded()?;
        self.require_subuniverse(&a, b)?;
        Ok(a)
    }

    /// The subpower `R = <(b1,a,a), (b2,c,c), (d,a,c)>` of the singleton
    /// expansion of `a`, and its digraph of `B`-coloured edges
    /// `{(u, v) : (b, u, v) in R, b in B}`.
    pub fn jonsson_digraph(
        &self,
        a: &RelationalStructure,
        b: &Subset,
        q: &Quintuple,
    ) -> Result<(Digraph, Subpower)> {
        a.check_subset(b)?;
        let a = a.expanded()?;
        let r = self.generate_subpower(&a, &q.generators(), 3)?;
        let edges = r
            .tuples
            .iter()
            .filter(|t| b.contains(t[0]))
            .map(|t| (t[1], t[2]));
        Ok((Digraph::new(a.size(), edges), r))
    }

    /// Local Jónsson absorption test with certificate.
    pub fn decide_jonsson(&self, a: &RelationalStructure, b: &Subset) -> Result<Decision> {
        self.decide(a, b, Mode::Jonsson)
    }

    /// Absorption test; same verdict and certificate as
    /// [`decide_jonsson`](Self::decide_jonsson).
    pub fn decide_absorption(&self, a: &RelationalStructure, b: &Subset) -> Result<Decision> {
        self.decide(a, b, Mode::Absorption)
    }

    fn decide(&self, a: &RelationalStructure, b: &Subset, mode: Mode) -> Result<Decision> {
        let a = self.check_input(a, b)?;
        if b.is_full(a.size()) {
            return Ok(Decision {
                mode,
                holds: true,
                failing: None,
                certificate: Some(Certificate::default()),
            });
        }
        let net = self.power_network(&a, 3)?;
        let quintuples = all_quintuples(a.size(), b);
        let outcome = par::map_until_err(self.is_parallel(), &quintuples, |q| {
            coloured_walk(&net, a.size(), b, q).ok_or(*q)
        });
        Ok(match outcome {
            Ok(proofs) => Decision {
                mode,
                holds: true,
                failing: None,
                certificate: Some(Certificate { quintuples: proofs }),
            },
            Err(q) => Decision {
                mode,
                holds: false,
                failing: Some(q),
                certificate: None,
            },
        })
    }
}

/// Explores the `B`-coloured digraph of `q` from `a`, one edge search per
/// candidate edge out of each reached vertex, and returns the
/// lexicographically least shortest walk to `c` with its witnesses.
fn coloured_walk(
    net: &crate::engine::PowerNetwork,
    size: usize,
    b: &Subset,
    q: &Quintuple,
) -> Option<QuintupleProof> {
    let [colour, first, second] = q.columns();
    let mut witnesses: Vec<Option<OperationTable>> = vec![None; size * size];
    let mut graph = Digraph::new(size, []);
    let mut reached = Subset::singleton(q.a);
    let mut frontier = vec![q.a];
    while let Some(u) = frontier.pop() {
        for v in 0..size {
            let mut doms = net.domains();
            net.restrict(&mut doms, &colour, b);
            net.pin(&mut doms, &first, u);
            net.pin(&mut doms, &second, v);
            if let Some(phi) = net.solve(doms) {
                graph.insert(u, v);
                witnesses[u * size + v] = Some(phi);
                if reached.insert(v) {
                    frontier.push(v);
                }
            }
        }
    }
    let walk = graph.reach(&Subset::singleton(q.a), &Subset::singleton(q.c))?;
    let steps = walk
        .windows(2)
        .map(|w| {
            let phi = witnesses[w[0] * size + w[1]].clone().expect("edge has a witness");
            Step {
                b: phi.eval(&colour),
                u: w[0],
                v: w[1],
                phi,
            }
        })
        .collect();
    Some(QuintupleProof { q: *q, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Relation;

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
    fn affine_digraphs() {
        let e = Engine::default();
        let b = Subset::singleton(0);
        let (g, r) = e
            .jonsson_digraph(&aff2(), &b, &Quintuple::new(0, 1, 1, 0, 0))
            .unwrap();
        assert_eq!(&r.tuples, aff2().relation("aff").unwrap());
        assert_eq!(g, Digraph::new(2, [(0, 0), (1, 1)]));

        let (g, r) = e
            .jonsson_digraph(&aff2(), &b, &Quintuple::new(0, 1, 0, 0, 0))
            .unwrap();
        let expected: Relation = [[0, 0, 0], [0, 0, 1], [0, 1, 0], [0, 1, 1]]
            .iter()
            .map(|t| t.to_vec())
            .collect();
        assert_eq!(r.tuples, expected);
        assert_eq!(g, Digraph::new(2, [(0, 0), (0, 1), (1, 0), (1, 1)]));

        let (g, r) = e
            .jonsson_digraph(&aff2(), &b, &Quintuple::new(0, 0, 0, 0, 0))
            .unwrap();
        assert_eq!(r.tuples, rel(3, &[&[0, 0, 0]]));
        assert_eq!(g, Digraph::new(2, [(0, 0)]));
    }

    #[test]
    fn fixture_verdicts() {
        let e = Engine::default();
        let b = Subset::singleton(0);
        let d = e.decide_jonsson(&ord2(), &b).unwrap();
        assert!(d.holds);
        assert_eq!(d.certificate.as_ref().unwrap().quintuples.len(), 8);

        let d = e.decide_absorption(&aff2(), &b).unwrap();
        assert!(!d.holds);
        assert_eq!(d.failing, Some(Quintuple::new(0, 1, 1, 0, 0)));
        assert_eq!(d.verdict(), "not absorbing");

        let triv = RelationalStructure::new(1).unwrap();
        assert!(e.decide_absorption(&triv, &b).unwrap().holds);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let e = Engine::default();
        let b = Subset::singleton(0);
        for a in [ord2(), aff2()] {
            assert_eq!(
                e.sequential().decide_jonsson(&a, &b).unwrap(),
                e.parallel().decide_jonsson(&a, &b).unwrap()
            );
        }
    }

    #[test]
    fn rejects_bad_subsets() {
        let e = Engine::default();
        assert!(matches!(
            e.decide_jonsson(&ord2(), &Subset::default()),
            Err(Error::EmptySubset)
        ));
        // x - y + z mod 3 preserves the directed 3-cycle and maps (0,1,0) to 2.
        let cycle = RelationalStructure::new(3)
            .unwrap()
            .with("r", rel(2, &[&[0, 1], &[1, 2], &[2, 0]]))
            .unwrap();
        assert!(matches!(
            e.decide_jonsson(&cycle, &Subset::new([0, 1])),
            Err(Error::NotSubuniverse(_))
        ));
    }

    #[test]
    fn certificate_json_round_trip() {
        let e = Engine::default();
        let d = e.decide_jonsson(&ord2(), &Subset::singleton(0)).unwrap();
        let cert = d.certificate.unwrap();
        let back = Certificate::from_json(&cert.to_json()).unwrap();
        assert_eq!(back, cert);
    }
}
