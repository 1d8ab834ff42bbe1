//! Canonical JSON for the model types.
//!
//! Serialisation goes through `serde_json::Value`, whose maps are sorted, so
//! keys always come out in order; tuple lists are emitted in lexicographic
//! order. Parsing validates ranges and arities and reports where a problem is.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{OperationTable, Relation, RelationalStructure, Subset, Tuple};

pub(crate) fn parse_doc<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string())
    })
}

pub(crate) fn from_value<T: DeserializeOwned>(value: &Value, location: &str) -> Result<T> {
    T::deserialize(value).map_err(|e| Error::parse(location, e.to_string()))
}

pub(crate) fn codec_value<T: Serialize>(doc: &T) -> Value {
    serde_json::to_value(doc).expect("documents serialise")
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RelationDoc {
    pub arity: usize,
    pub tuples: Vec<Tuple>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StructureDoc {
    size: usize,
    relations: BTreeMap<String, RelationDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubsetDoc {
    elements: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct TableDoc {
    pub arity: usize,
    pub values: Vec<usize>,
}

impl RelationDoc {
    pub(crate) fn into_relation(self, location: &str) -> Result<Relation> {
        if self.arity == 0 {
            return Err(Error::parse(location, "arity must be positive"));
        }
        for (i, t) in self.tuples.iter().enumerate() {
            if t.len() != self.arity {
                return Err(Error::ArityMismatch {
                    location: format!("{location}.tuples[{i}]"),
                    expected: self.arity,
                    found: t.len(),
                });
            }
        }
        Relation::from_tuples(self.arity, self.tuples)
    }
}

impl Relation {
    pub fn to_json_value(&self) -> Value {
        codec_value(&RelationDoc {
            arity: self.arity(),
            tuples: self.iter().cloned().collect(),
        })
    }

    /// Parses a `{"arity": k, "tuples": [...]}` document. Entries are checked
    /// against `size`.
    pub fn from_json_value(value: &Value, size: usize, location: &str) -> Result<Relation> {
        let doc: RelationDoc = from_value(value, location)?;
        let rel = doc.into_relation(location)?;
        rel.check_bounds(size, location)?;
        Ok(rel)
    }
}

impl RelationalStructure {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: StructureDoc = parse_doc(text)?;
        let mut out = RelationalStructure::new(doc.size)?;
        for (name, rel) in doc.relations {
            let location = format!("relations.{name}");
            let size = out.size();
            for (i, t) in rel.tuples.iter().enumerate() {
                if let Some((j, &v)) = t.iter().enumerate().find(|(_, &v)| v >= size) {
                    return Err(Error::OutOfRange {
                        location: format!("{location}.tuples[{i}][{j}]"),
                        value: v,
                        size,
                    });
                }
            }
            let rel = rel.into_relation(&location)?;
            out.insert(name, rel)?;
        }
        Ok(out)
    }

    pub fn to_json_value(&self) -> Value {
        codec_value(&StructureDoc {
            size: self.size(),
            relations: self
                .relations()
                .iter()
                .map(|(n, r)| {
                    (
                        n.clone(),
                        RelationDoc {
                            arity: r.arity(),
                            tuples: r.iter().cloned().collect(),
                        },
                    )
                })
                .collect(),
        })
    }

    /// Canonical compact JSON.
    pub fn to_json(&self) -> String {
        self.to_json_value().to_string()
    }
}

impl Subset {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SubsetDoc = parse_doc(text)?;
        Ok(Subset::new(doc.elements))
    }

    pub fn to_json_value(&self) -> Value {
        codec_value(&SubsetDoc {
            elements: self.to_vec(),
        })
    }

    pub fn to_json(&self) -> String {
        self.to_json_value().to_string()
    }
}

impl OperationTable {
    /// Parses `{"arity": k, "values": [...]}`; the domain size is the integer
    /// `k`-th root of the number of values.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TableDoc = parse_doc(text)?;
        Self::from_doc(doc, "table")
    }

    pub fn from_json_value(value: &Value, location: &str) -> Result<Self> {
        let doc: TableDoc = from_value(value, location)?;
        Self::from_doc(doc, location)
    }

    fn from_doc(doc: TableDoc, location: &str) -> Result<Self> {
        if doc.arity == 0 {
            return Err(Error::parse(location, "arity must be positive"));
        }
        let len = doc.values.len();
        let size = (1..=len)
            .take_while(|s| crate::model::checked_pow(*s, doc.arity).is_some_and(|p| p <= len))
            .find(|s| crate::model::checked_pow(*s, doc.arity) == Some(len))
            .ok_or_else(|| {
                Error::parse(
                    location,
                    format!("{len} values is not a perfect power of arity {}", doc.arity),
                )
            })?;
        OperationTable::new(size, doc.arity, doc.values).map_err(|e| match e {
            Error::OutOfRange { location: l, value, size } => Error::OutOfRange {
                location: format!("{location}.{l}"),
                value,
                size,
            },
            other => other,
        })
    }

    pub fn to_json_value(&self) -> Value {
        codec_value(&TableDoc {
            arity: self.arity(),
            values: self.values().to_vec(),
        })
    }

    pub fn to_json(&self) -> String {
        self.to_json_value().to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ORD2: &str = r#"{"relations":{"leq":{"arity":2,"tuples":[[0,0],[0,1],[1,1]]},"s0":{"arity":1,"tuples":[[0]]},"s1":{"arity":1,"tuples":[[1]]}},"size":2}"#;

    #[test]
    fn ord2_round_trips_byte_identically() {
        let a = RelationalStructure::from_json(ORD2).unwrap();
        assert_eq!(a.size(), 2);
        assert_eq!(a.relation("leq").unwrap().len(), 3);
        assert_eq!(a.to_json(), ORD2);
    }

    #[test]
    fn unsorted_input_is_canonicalised() {
        let text = r#"{"size":2,"relations":{"r":{"tuples":[[1,1],[0,1],[1,1]],"arity":2}}}"#;
        let a = RelationalStructure::from_json(text).unwrap();
        assert_eq!(
            a.to_json(),
            r#"{"relations":{"r":{"arity":2,"tuples":[[0,1],[1,1]]}},"size":2}"#
        );
    }

    #[test]
    fn out_of_range_reported_with_location() {
        let text = r#"{"size":2,"relations":{"r":{"arity":2,"tuples":[[0,1],[0,2]]}}}"#;
        let err = RelationalStructure::from_json(text).unwrap_err();
        assert!(err.to_string().contains("out of range"), "{err}");
        assert!(err.to_string().contains("relations.r.tuples[1][1]"), "{err}");
    }

    #[test]
    fn arity_mismatch_reported() {
        let text = r#"{"size":2,"relations":{"r":{"arity":2,"tuples":[[0,1,1]]}}}"#;
        let err = RelationalStructure::from_json(text).unwrap_err();
        assert!(matches!(err, Error::ArityMismatch { expected: 2, found: 3, .. }));
    }

    #[test]
    fn malformed_document_reports_line_and_column() {
        let err = RelationalStructure::from_json("{\"size\": 2,\n \"relations\": [}").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn table_document_is_binary_min() {
        let t = OperationTable::from_json(r#"{"arity":2,"values":[0,0,0,1]}"#).unwrap();
        assert_eq!(t.size(), 2);
        assert_eq!(t, OperationTable::from_fn(2, 2, |x| x[0].min(x[1])));
        assert_eq!(t.to_json(), r#"{"arity":2,"values":[0,0,0,1]}"#);
        assert!(OperationTable::from_json(r#"{"arity":2,"values":[0,0,1]}"#).is_err());
        assert!(OperationTable::from_json(r#"{"arity":1,"values":[0,2]}"#).is_err());
    }

    #[test]
    fn subset_document() {
        let b = Subset::from_json(r#"{"elements":[2,0,2]}"#).unwrap();
        assert_eq!(b.to_vec(), vec![0, 2]);
        assert_eq!(b.to_json(), r#"{"elements":[0,2]}"#);
    }
}
