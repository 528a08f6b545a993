//! JSON model files.
//!
//! ```json
//! {
//!   "sites": [{"id": 1, "dim": 2}, {"id": 2, "dim": 2}],
//!   "edges": [[1, 2]],
//!   "terms": [
//!     {"support": [1, 2], "pauli": "Z X", "coeff": 0.5},
//!     {"support": [1], "matrix": {"re": [[1, 0], [0, -1]], "im": [[0, 0], [0, 0]]}, "coeff": [1.0, 0.0]}
//!   ],
//!   "beta": 1.0
//! }
//! ```
//!
//! `pauli` is either one letter per qubit of the support (`I` allowed) or a labelled
//! sum such as `"0.5 * Z1 X2 + Y1"`. Merged sites holding several qubits list them
//! under `"qubits": {"<site>": [q, ...]}`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{QmnError, Result};
use crate::graphs::Graph;
use crate::model::{ModelInstance, ModelTerm, TermBody};
use crate::pauli::{Pauli, PauliSum, PauliTerm};
use crate::tensor::{ComplexMatrix, SiteSpace, SupportedOperator, C64};
use crate::SiteId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteEntry {
    pub id: SiteId,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coeff {
    Real(f64),
    Complex([f64; 2]),
}

impl Coeff {
    pub fn value(&self) -> C64 {
        match *self {
            Coeff::Real(x) => C64::new(x, 0.0),
            Coeff::Complex([re, im]) => C64::new(re, im),
        }
    }
}

impl Default for Coeff {
    fn default() -> Self {
        Coeff::Real(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixEntry {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub support: Vec<SiteId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pauli: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixEntry>,
    #[serde(default)]
    pub coeff: Coeff,
}

fn default_beta() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub sites: Vec<SiteEntry>,
    pub edges: Vec<[SiteId; 2]>,
    pub terms: Vec<TermEntry>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub qubits: BTreeMap<SiteId, Vec<SiteId>>,
}

fn field_err(field: String, msg: impl std::fmt::Display) -> QmnError {
    QmnError::Parse(format!("{field}: {msg}"))
}

/// Parses model-file JSON. Syntax errors report line and column; structural errors
/// report the offending field path.
pub fn parse_model_file(text: &str) -> Result<ModelFile> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        let path = e.path().to_string();
        QmnError::Parse(format!("line {} column {}, field `{path}`: {inner}", inner.line(), inner.column()))
    })
}

/// `"Z X I"` (one letter per qubit) when every token is a single letter.
fn is_positional(s: &str) -> bool {
    s.split_whitespace().all(|t| t.len() == 1 && t.chars().all(|c| "IXYZ".contains(c)))
}

fn parse_matrix(m: &MatrixEntry, d: usize, field: &str) -> Result<ComplexMatrix> {
    let check = |rows: &Vec<Vec<f64>>, part: &str| -> Result<()> {
        if rows.len() != d || rows.iter().any(|r| r.len() != d) {
            return Err(field_err(format!("{field}.matrix.{part}"), format!("expected a {d}x{d} array")));
        }
        Ok(())
    };
    check(&m.re, "re")?;
    if let Some(im) = &m.im {
        check(im, "im")?;
    }
    Ok(ComplexMatrix::from_fn(d, d, |i, j| C64::new(m.re[i][j], m.im.as_ref().map_or(0.0, |im| im[i][j]))))
}

impl ModelFile {
    pub fn into_model(self) -> Result<ModelInstance> {
        let space = SiteSpace::new(self.sites.iter().map(|s| (s.id, s.dim))).map_err(|e| field_err("sites".into(), e))?;
        let graph = Graph::new(self.sites.iter().map(|s| s.id), self.edges.iter().map(|e| (e[0], e[1])))
            .map_err(|e| field_err("edges".into(), e))?;
        let mut layout: BTreeMap<SiteId, Vec<SiteId>> =
            self.sites.iter().filter(|s| s.dim == 2).map(|s| (s.id, vec![s.id])).collect();
        for (s, q) in &self.qubits {
            layout.insert(*s, q.clone());
        }
        let mut terms = Vec::with_capacity(self.terms.len());
        for (i, t) in self.terms.iter().enumerate() {
            let field = format!("terms[{i}]");
            let coeff = t.coeff.value();
            let mut term = match (&t.pauli, &t.matrix) {
                (Some(p), None) => {
                    let sum = if is_positional(p) {
                        let mut qubits = Vec::new();
                        for s in &t.support {
                            qubits.extend(layout.get(s).ok_or_else(|| field_err(format!("{field}.pauli"), QmnError::NonQubitSite(*s)))?);
                        }
                        let letters: Vec<&str> = p.split_whitespace().collect();
                        if letters.len() != qubits.len() {
                            return Err(field_err(
                                format!("{field}.pauli"),
                                format!("{} letters for {} qubits", letters.len(), qubits.len()),
                            ));
                        }
                        let word = qubits.iter().zip(letters).filter_map(|(&q, l)| {
                            Pauli::from_letter(l.chars().next().expect("one letter")).flatten().map(|p| (q, p))
                        });
                        PauliSum::from_terms([PauliTerm::new(coeff, word)])
                    } else {
                        p.parse::<PauliSum>().map_err(|e| field_err(format!("{field}.pauli"), e))?.scale(coeff)
                    };
                    ModelTerm::pauli_on(t.support.iter().copied(), sum)
                }
                (None, Some(m)) => {
                    let dims: Vec<usize> =
                        t.support.iter().map(|&s| space.dim_of(s)).collect::<Result<_>>().map_err(|e| field_err(format!("{field}.support"), e))?;
                    let mat = parse_matrix(m, dims.iter().product(), &field)?.scale(coeff);
                    let op = SupportedOperator::new(t.support.clone(), dims, mat).map_err(|e| field_err(field.clone(), e))?;
                    ModelTerm::dense(&op)
                }
                _ => return Err(field_err(field, "exactly one of `pauli` and `matrix` is required")),
            };
            term.label = t.label.clone();
            terms.push(term);
        }
        ModelInstance::with_layout(space, graph, terms, self.beta, layout).map_err(|e| QmnError::Parse(e.to_string()))
    }

    pub fn from_model(model: &ModelInstance) -> Self {
        let sites = model.space.sites().iter().zip(model.space.dims()).map(|(&id, &dim)| SiteEntry { id, dim }).collect();
        let edges = model.graph.edges().into_iter().map(|(a, b)| [a, b]).collect();
        let default_layout = |s: &SiteId, q: &Vec<SiteId>| q.len() == 1 && q[0] == *s;
        let qubits = model.qubit_layout().iter().filter(|(s, q)| !default_layout(s, q)).map(|(s, q)| (*s, q.clone())).collect();
        let terms = model
            .terms
            .iter()
            .map(|t| {
                let (pauli, matrix, coeff) = match &t.body {
                    TermBody::Pauli(p) => pauli_entry(model, &t.support, p),
                    TermBody::Dense(m) => {
                        let (re, im) = m.re_im();
                        let im = if im.iter().flatten().all(|&x| x == 0.0) { None } else { Some(im) };
                        (None, Some(MatrixEntry { re, im }), Coeff::Real(1.0))
                    }
                };
                TermEntry { label: t.label.clone(), support: t.support.clone(), pauli, matrix, coeff }
            })
            .collect();
        Self { sites, edges, terms, beta: model.beta, qubits }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file serializes")
    }
}

fn pauli_entry(model: &ModelInstance, support: &[SiteId], p: &PauliSum) -> (Option<String>, Option<MatrixEntry>, Coeff) {
    let words: Vec<PauliTerm> = p.terms().collect();
    if let ([w], Ok(qubits)) = (words.as_slice(), model.qubits_of(support)) {
        let letters: Vec<String> =
            qubits.iter().map(|&q| w.letter_at(q).map_or('I', |l| l.letter()).to_string()).collect();
        let c = w.coeff;
        let coeff = if c.im == 0.0 { Coeff::Real(c.re) } else { Coeff::Complex([c.re, c.im]) };
        return (Some(letters.join(" ")), None, coeff);
    }
    (Some(p.to_string()), None, Coeff::Real(1.0))
}

pub fn parse_model(text: &str) -> Result<ModelInstance> {
    parse_model_file(text)?.into_model()
}

pub fn read_model(path: impl AsRef<Path>) -> Result<ModelInstance> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| QmnError::Parse(format!("{}: {e}", path.as_ref().display())))?;
    parse_model(&text)
}

pub fn model_to_json(model: &ModelInstance) -> String {
    ModelFile::from_model(model).to_json()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{five_site_cell, triangle_free_model};
    use crate::tensor::random::rng;

    const CHAIN: &str = r#"{
  "sites": [{"id": 1, "dim": 2}, {"id": 2, "dim": 2}, {"id": 3, "dim": 2}],
  "edges": [[1, 2], [2, 3]],
  "terms": [
    {"support": [1, 2], "pauli": "X X"},
    {"support": [2, 3], "pauli": "Z Z", "coeff": 0.5},
    {"support": [3], "matrix": {"re": [[1, 0], [0, -1]]}, "coeff": [0.0, 1.0], "label": "odd"}
  ]
}"#;

    #[test]
    fn grouped_pauli_sums_round_trip() {
        let m = crate::decompose::coarse_grain_model(&five_site_cell(), &std::collections::BTreeMap::from([(5, 1)]), false).unwrap();
        let back = parse_model(&model_to_json(&m)).unwrap();
        for (a, b) in m.terms.iter().zip(&back.terms) {
            assert_eq!(a.as_pauli(), b.as_pauli());
        }
        assert_eq!(back.label(0), "down+left");
    }

    #[test]
    fn parses_both_term_forms() {
        let m = parse_model(CHAIN).unwrap();
        assert_eq!(m.beta, 1.0);
        assert_eq!(m.terms[1].as_pauli().unwrap().to_string(), "0.5 * Z2 Z3");
        assert_eq!(m.label(2), "odd");
        let z = m.term_operator(2).unwrap();
        assert_eq!(z.matrix[(0, 0)], C64::new(0.0, 1.0));
    }

    #[test]
    fn errors_name_line_and_field() {
        let bad = CHAIN.replace("\"dim\": 2}, {\"id\": 2", "\"dim\": \"two\"}, {\"id\": 2");
        let e = parse_model(&bad).unwrap_err().to_string();
        assert!(e.contains("line 2") && e.contains("sites[0].dim"), "{e}");
        let bad = CHAIN.replace("\"Z Z\"", "\"Z Z Z\"");
        let e = parse_model(&bad).unwrap_err().to_string();
        assert!(e.contains("terms[1].pauli"), "{e}");
        let bad = CHAIN.replace("[[1, 0], [0, -1]]", "[[1, 0]]");
        assert!(parse_model(&bad).unwrap_err().to_string().contains("terms[2].matrix.re"));
        assert!(parse_model("{\"sites\": [").is_err());
    }

    #[test]
    fn models_round_trip() {
        for m in [five_site_cell(), parse_model(CHAIN).unwrap()] {
            assert_eq!(parse_model(&model_to_json(&m)).unwrap(), m);
        }
        let g = Graph::cycle(4);
        let m = triangle_free_model(&mut rng(1), &g, &[1, 3].into(), 0.4).unwrap();
        let back = parse_model(&model_to_json(&m)).unwrap();
        assert_eq!(back.hamiltonian(4096).unwrap().max_abs_diff(&m.hamiltonian(4096).unwrap()), 0.0);
    }
}
