//! JSON file schemas for algebras and operators.
//!
//! Algebra files:
//!
//! ```json
//! {
//!   "basis": ["X", "Y", "T"],
//!   "degrees": [1, 1, 2],
//!   "brackets": [{"i": 0, "j": 1, "coeffs": {"2": 1.0}}],
//!   "generators": [0, 1]
//! }
//! ```
//!
//! Indices are zero-based; bracket coefficients are real numbers or
//! `[re, im]` pairs, and contradictory `(i, j)` / `(j, i)` entries are
//! rejected. Operator files:
//!
//! ```json
//! {"order": 2, "algebra": "heisenberg1",
//!  "terms": [{"coeff": "-1", "word": "XX"}, ...]}
//! ```
//!
//! The `algebra` field names a builtin and defaults to `heisenberg1`; the
//! declared order must match the recomputed maximal weighted word length.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::GradedLieAlgebra;
use crate::diffop::DiffOp;
use crate::error::{CoreError, Result};
use crate::expr::CoeffExpr;
use crate::uea::Word;

type C64 = Complex64;

/// Real or `[re, im]` coefficient value.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoeffValue {
    Real(f64),
    Complex([f64; 2]),
}

impl From<CoeffValue> for C64 {
    fn from(v: CoeffValue) -> C64 {
        match v {
            CoeffValue::Real(r) => C64::new(r, 0.0),
            CoeffValue::Complex([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BracketSpec {
    pub i: usize,
    pub j: usize,
    pub coeffs: BTreeMap<String, CoeffValue>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlgebraSpec {
    pub basis: Vec<String>,
    pub degrees: Vec<u32>,
    #[serde(default)]
    pub brackets: Vec<BracketSpec>,
    pub generators: Vec<usize>,
}

impl AlgebraSpec {
    pub fn to_algebra(&self) -> Result<Arc<GradedLieAlgebra>> {
        let mut brackets = Vec::with_capacity(self.brackets.len());
        for b in &self.brackets {
            let mut coeffs = Vec::with_capacity(b.coeffs.len());
            for (k, v) in &b.coeffs {
                let k: usize = k.parse().map_err(|_| {
                    CoreError::InvalidAlgebra(format!("bracket target index {k:?} is not an integer"))
                })?;
                coeffs.push((k, C64::from(*v)));
            }
            brackets.push((b.i, b.j, coeffs));
        }
        let flat: Vec<(usize, usize, Vec<(usize, C64)>)> = brackets;
        GradedLieAlgebra::new(
            self.basis.clone(),
            self.degrees.clone(),
            &flat,
            self.generators.clone(),
        )
    }
}

/// Parse an algebra from JSON text.
pub fn algebra_from_json(src: &str) -> Result<Arc<GradedLieAlgebra>> {
    let spec: AlgebraSpec = serde_json::from_str(src)?;
    spec.to_algebra()
}

/// Resolve a name that is either a builtin or a path to a JSON file.
pub fn load_algebra(name_or_path: &str) -> Result<Arc<GradedLieAlgebra>> {
    if let Ok(alg) = GradedLieAlgebra::builtin(name_or_path) {
        return Ok(alg);
    }
    if std::path::Path::new(name_or_path).exists() {
        let text = std::fs::read_to_string(name_or_path)?;
        return algebra_from_json(&text);
    }
    Err(CoreError::UnknownBuiltin(name_or_path.into()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermSpec {
    pub coeff: String,
    pub word: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub order: u32,
    #[serde(default)]
    pub algebra: Option<String>,
    pub terms: Vec<TermSpec>,
}

impl OperatorSpec {
    pub fn to_diffop(&self, algebra_override: Option<Arc<GradedLieAlgebra>>) -> Result<DiffOp> {
        let alg = match algebra_override {
            Some(a) => a,
            None => load_algebra(self.algebra.as_deref().unwrap_or("heisenberg1"))?,
        };
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let coeff = CoeffExpr::parse(alg.clone(), &t.coeff)?;
            let word = Word::parse(&alg, &t.word)?;
            terms.push((coeff, word));
        }
        let op = DiffOp::new(alg, terms)?;
        if op.order() != self.order {
            return Err(CoreError::InvalidOperator(format!(
                "declared order {} but terms have weighted order {}",
                self.order,
                op.order()
            )));
        }
        Ok(op)
    }
}

/// Parse an operator from JSON text.
pub fn diffop_from_json(
    src: &str,
    algebra_override: Option<Arc<GradedLieAlgebra>>,
) -> Result<DiffOp> {
    let spec: OperatorSpec = serde_json::from_str(src)?;
    spec.to_diffop(algebra_override)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEIS_JSON: &str = r#"{
        "basis": ["X", "Y", "T"],
        "degrees": [1, 1, 2],
        "brackets": [{"i": 0, "j": 1, "coeffs": {"2": 1.0}}],
        "generators": [0, 1]
    }"#;

    #[test]
    fn algebra_round_trip() {
        let alg = algebra_from_json(HEIS_JSON).unwrap();
        assert!(alg.is_heisenberg1());
        assert!(alg.validate().is_empty());
    }

    #[test]
    fn non_antisymmetric_rejected() {
        let bad = r#"{
            "basis": ["X", "Y", "T"],
            "degrees": [1, 1, 2],
            "brackets": [
                {"i": 0, "j": 1, "coeffs": {"2": 1.0}},
                {"i": 1, "j": 0, "coeffs": {"2": 1.0}}
            ],
            "generators": [0, 1]
        }"#;
        assert!(matches!(
            algebra_from_json(bad),
            Err(CoreError::InvalidAlgebra(_))
        ));
        // The antisymmetric counterpart is accepted.
        let good = r#"{
            "basis": ["X", "Y", "T"],
            "degrees": [1, 1, 2],
            "brackets": [
                {"i": 0, "j": 1, "coeffs": {"2": 1.0}},
                {"i": 1, "j": 0, "coeffs": {"2": -1.0}}
            ],
            "generators": [0, 1]
        }"#;
        assert!(algebra_from_json(good).is_ok());
    }

    #[test]
    fn complex_coefficients() {
        let src = r#"{
            "basis": ["A", "B", "C"],
            "degrees": [1, 1, 2],
            "brackets": [{"i": 0, "j": 1, "coeffs": {"2": [0.0, 1.0]}}],
            "generators": [0, 1]
        }"#;
        let alg = algebra_from_json(src).unwrap();
        assert_eq!(alg.structure_constant(0, 1, 2), C64::new(0.0, 1.0));
    }

    #[test]
    fn operator_round_trip() {
        let src = r#"{
            "order": 2,
            "terms": [
                {"coeff": "-1", "word": "XX"},
                {"coeff": "-1", "word": "YY"},
                {"coeff": "i*(2+sin(x))", "word": "XY"},
                {"coeff": "-i*(2+sin(x))", "word": "YX"}
            ]
        }"#;
        let op = diffop_from_json(src, None).unwrap();
        assert_eq!(op.order(), 2);
        assert!(op.algebra().is_heisenberg1());
        let top = op.top_at(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(top.coefficient(&[0, 0, 1]), C64::new(0.0, 2.0));
    }

    #[test]
    fn order_mismatch_rejected() {
        let src = r#"{"order": 3, "terms": [{"coeff": "1", "word": "X"}]}"#;
        assert!(matches!(
            diffop_from_json(src, None),
            Err(CoreError::InvalidOperator(_))
        ));
    }
}
