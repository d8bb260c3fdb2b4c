//! Arithmetic in the universal enveloping algebra.
//!
//! Elements are kept in PBW normal form: sparse maps from exponent vectors
//! (over the full ordered basis) to complex coefficients. Straightening moves
//! out-of-order adjacent letters using the structure constants; the bracket
//! term has one fewer letter, so the rewriting terminates. The cache keyed on
//! whole words keeps repeated subproducts cheap; correctness does not depend
//! on it.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::algebra::GradedLieAlgebra;
use crate::error::{CoreError, Result};

type C64 = Complex64;
type Terms = BTreeMap<Vec<u32>, C64>;

/// Coefficients with modulus below this are pruned after every operation.
pub const PRUNE_TOL: f64 = 1e-14;

/// A word in the preferred generators, stored as generator slots.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word {
    letters: Vec<usize>,
}

impl Word {
    pub fn empty() -> Self {
        Word { letters: vec![] }
    }

    pub fn new(alg: &GradedLieAlgebra, letters: Vec<usize>) -> Result<Self> {
        let n = alg.generator_count();
        for &l in &letters {
            if l >= n {
                return Err(CoreError::IndexOutOfRange { index: l, dim: n });
            }
        }
        Ok(Word { letters })
    }

    /// Parse a concatenation of generator labels, longest label first.
    /// Whitespace between letters is allowed.
    pub fn parse(alg: &GradedLieAlgebra, src: &str) -> Result<Self> {
        let mut letters = Vec::new();
        let mut rest = src.trim();
        // Longest-match so multi-character labels like "X1" win over prefixes.
        let mut by_len: Vec<(usize, &str)> = alg
            .generators()
            .iter()
            .enumerate()
            .map(|(slot, &b)| (slot, alg.labels()[b].as_str()))
            .collect();
        by_len.sort_by_key(|(_, l)| std::cmp::Reverse(l.len()));
        'outer: while !rest.is_empty() {
            rest = rest.trim_start();
            if rest.is_empty() {
                break;
            }
            for &(slot, label) in &by_len {
                if rest.starts_with(label) {
                    letters.push(slot);
                    rest = &rest[label.len()..];
                    continue 'outer;
                }
            }
            return Err(CoreError::Parse {
                pos: src.len() - rest.len(),
                msg: format!("no generator label matches {rest:?}"),
            });
        }
        Ok(Word { letters })
    }

    pub fn letters(&self) -> &[usize] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Weighted length: sum of the generator degrees along the word.
    pub fn weighted_length(&self, alg: &GradedLieAlgebra) -> u32 {
        self.letters
            .iter()
            .map(|&l| alg.generator_degree(l))
            .sum()
    }

    pub fn basis_letters(&self, alg: &GradedLieAlgebra) -> Vec<u16> {
        self.letters
            .iter()
            .map(|&l| alg.generators()[l] as u16)
            .collect()
    }

    pub fn display(&self, alg: &GradedLieAlgebra) -> String {
        self.letters
            .iter()
            .map(|&l| alg.labels()[alg.generators()[l]].as_str())
            .collect::<Vec<_>>()
            .join("")
    }
}

/// Element of the universal enveloping algebra in PBW normal form.
#[derive(Clone, Debug)]
pub struct UeaElement {
    alg: Arc<GradedLieAlgebra>,
    terms: Terms,
}

impl PartialEq for UeaElement {
    fn eq(&self, other: &Self) -> bool {
        self.alg == other.alg && self.terms == other.terms
    }
}

impl UeaElement {
    pub fn zero(alg: Arc<GradedLieAlgebra>) -> Self {
        UeaElement {
            alg,
            terms: Terms::new(),
        }
    }

    pub fn one(alg: Arc<GradedLieAlgebra>) -> Self {
        let mut terms = Terms::new();
        terms.insert(vec![0; alg.dim()], C64::new(1.0, 0.0));
        UeaElement { alg, terms }
    }

    pub fn scalar(alg: Arc<GradedLieAlgebra>, c: C64) -> Self {
        UeaElement::one(alg).scale(c)
    }

    /// The basis vector `e_i` as a degree-one monomial.
    pub fn basis_element(alg: Arc<GradedLieAlgebra>, i: usize) -> Result<Self> {
        if i >= alg.dim() {
            return Err(CoreError::IndexOutOfRange {
                index: i,
                dim: alg.dim(),
            });
        }
        let mut exps = vec![0; alg.dim()];
        exps[i] = 1;
        Ok(UeaElement::from_terms(
            alg,
            [(exps, C64::new(1.0, 0.0))].into_iter().collect(),
        ))
    }

    /// The `j`-th preferred generator.
    pub fn generator(alg: Arc<GradedLieAlgebra>, slot: usize) -> Result<Self> {
        let idx = *alg
            .generators()
            .get(slot)
            .ok_or(CoreError::IndexOutOfRange {
                index: slot,
                dim: alg.generator_count(),
            })?;
        UeaElement::basis_element(alg, idx)
    }

    pub fn from_terms(alg: Arc<GradedLieAlgebra>, terms: Terms) -> Self {
        let mut el = UeaElement { alg, terms };
        el.prune();
        el
    }

    /// PBW normal ordering of a generator word.
    pub fn normal_order(alg: Arc<GradedLieAlgebra>, word: &Word) -> Self {
        let letters = word.basis_letters(&alg);
        let mut cache = HashMap::new();
        let terms = straighten(&alg, &letters, &mut cache);
        UeaElement::from_terms(alg, terms.as_ref().clone())
    }

    pub fn algebra(&self) -> &Arc<GradedLieAlgebra> {
        &self.alg
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &C64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, exps: &[u32]) -> C64 {
        self.terms.get(exps).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| c.norm() > PRUNE_TOL);
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_algebra(other)?;
        let mut terms = self.terms.clone();
        for (e, c) in &other.terms {
            *terms.entry(e.clone()).or_insert(C64::new(0.0, 0.0)) += c;
        }
        Ok(UeaElement::from_terms(self.alg.clone(), terms))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, k: C64) -> Self {
        let terms = self.terms.iter().map(|(e, c)| (e.clone(), c * k)).collect();
        UeaElement::from_terms(self.alg.clone(), terms)
    }

    fn check_algebra(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.alg, &other.alg) || self.alg == other.alg {
            Ok(())
        } else {
            Err(CoreError::AlgebraMismatch)
        }
    }

    /// Associative product, straightened back to normal form.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_algebra(other)?;
        let mut cache = HashMap::new();
        let mut out = Terms::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let mut word: Vec<u16> = Vec::new();
                for (i, &k) in ea.iter().enumerate() {
                    word.extend(std::iter::repeat(i as u16).take(k as usize));
                }
                for (i, &k) in eb.iter().enumerate() {
                    word.extend(std::iter::repeat(i as u16).take(k as usize));
                }
                let straightened = straighten(&self.alg, &word, &mut cache);
                let factor = ca * cb;
                for (e, c) in straightened.iter() {
                    *out.entry(e.clone()).or_insert(C64::new(0.0, 0.0)) += factor * c;
                }
            }
        }
        Ok(UeaElement::from_terms(self.alg.clone(), out))
    }

    /// Formal adjoint of a constant-coefficient operator: the anti-automorphism
    /// extending `X -> -X`, with coefficients conjugated.
    pub fn adjoint(&self) -> Self {
        let mut cache = HashMap::new();
        let mut out = Terms::new();
        for (exps, c) in &self.terms {
            let mut word: Vec<u16> = Vec::new();
            for (i, &k) in exps.iter().enumerate().rev() {
                word.extend(std::iter::repeat(i as u16).take(k as usize));
            }
            let total: u32 = exps.iter().sum();
            let sign = if total % 2 == 0 { 1.0 } else { -1.0 };
            let factor = c.conj() * sign;
            let straightened = straighten(&self.alg, &word, &mut cache);
            for (e, cc) in straightened.iter() {
                *out.entry(e.clone()).or_insert(C64::new(0.0, 0.0)) += factor * cc;
            }
        }
        UeaElement::from_terms(self.alg.clone(), out)
    }

    pub fn monomial_degree(&self, exps: &[u32]) -> u32 {
        exps.iter()
            .zip(self.alg.degrees())
            .map(|(&k, &v)| k * v)
            .sum()
    }

    /// Maximal weighted degree over the terms (zero element has degree 0).
    pub fn weighted_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| self.monomial_degree(e))
            .max()
            .unwrap_or(0)
    }

    /// Sum of the terms of weighted degree exactly `m`.
    pub fn top_part(&self, m: u32) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| self.monomial_degree(e) == m)
            .map(|(e, c)| (e.clone(), *c))
            .collect();
        UeaElement::from_terms(self.alg.clone(), terms)
    }

    /// Dilation: scales a monomial of weighted degree `k` by `t^k`.
    pub fn dilate(&self, t: f64) -> Result<Self> {
        if t <= 0.0 {
            return Err(CoreError::NonPositiveDilation(t));
        }
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| (e.clone(), c * t.powi(self.monomial_degree(e) as i32)))
            .collect();
        Ok(UeaElement::from_terms(self.alg.clone(), terms))
    }

    /// Largest absolute coefficient difference, for approximate comparison.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut keys: Vec<&Vec<u32>> = self.terms.keys().collect();
        keys.extend(other.terms.keys());
        keys.sort();
        keys.dedup();
        keys.into_iter()
            .map(|k| (self.coefficient(k) - other.coefficient(k)).norm())
            .fold(0.0, f64::max)
    }

    /// Canonical homogeneous positive operator built from the generators:
    /// `Delta = -sum_j (-1)^(v/v_j) X_j^(2v/v_j)` with `v = lcm(v_j)`.
    pub fn rockland_laplacian(alg: Arc<GradedLieAlgebra>) -> Self {
        let v = alg.lcm_generator_degree();
        let d = alg.dim();
        let mut terms = Terms::new();
        for slot in 0..alg.generator_count() {
            let vj = alg.generator_degree(slot);
            let power = 2 * v / vj;
            let sign = if (v / vj) % 2 == 0 { 1.0 } else { -1.0 };
            let mut exps = vec![0u32; d];
            exps[alg.generators()[slot]] = power;
            *terms.entry(exps).or_insert(C64::new(0.0, 0.0)) += C64::new(-sign, 0.0);
        }
        UeaElement::from_terms(alg, terms)
    }

    /// Render as a sum of `coeff * label^k` factors; inverse of [`UeaElement::parse`].
    pub fn render(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (exps, c) in &self.terms {
            let mut factors = Vec::new();
            for (i, &k) in exps.iter().enumerate() {
                if k == 1 {
                    factors.push(self.alg.labels()[i].clone());
                } else if k > 1 {
                    factors.push(format!("{}^{}", self.alg.labels()[i], k));
                }
            }
            let coeff = format_c64(*c);
            if factors.is_empty() {
                parts.push(coeff);
            } else {
                parts.push(format!("{} {}", coeff, factors.join(" ")));
            }
        }
        parts.join(" + ")
    }

    /// Parse the output of [`UeaElement::render`].
    pub fn parse(alg: Arc<GradedLieAlgebra>, src: &str) -> Result<Self> {
        let mut terms = Terms::new();
        let trimmed = src.trim();
        if trimmed == "0" {
            return Ok(UeaElement::zero(alg));
        }
        for part in trimmed.split(" + ") {
            let part = part.trim();
            let mut tokens = part.split_whitespace();
            let coeff_tok = tokens.next().ok_or_else(|| CoreError::Parse {
                pos: 0,
                msg: "empty term".into(),
            })?;
            let coeff = parse_c64(coeff_tok).ok_or_else(|| CoreError::Parse {
                pos: 0,
                msg: format!("bad coefficient {coeff_tok:?}"),
            })?;
            let mut exps = vec![0u32; alg.dim()];
            for tok in tokens {
                let (label, power) = match tok.split_once('^') {
                    Some((l, p)) => (
                        l,
                        p.parse::<u32>().map_err(|_| CoreError::Parse {
                            pos: 0,
                            msg: format!("bad power in {tok:?}"),
                        })?,
                    ),
                    None => (tok, 1),
                };
                let idx = alg
                    .labels()
                    .iter()
                    .position(|l| l == label)
                    .ok_or_else(|| CoreError::UnknownIdentifier {
                        name: label.into(),
                        pos: 0,
                    })?;
                exps[idx] += power;
            }
            *terms.entry(exps).or_insert(C64::new(0.0, 0.0)) += coeff;
        }
        Ok(UeaElement::from_terms(alg, terms))
    }
}

impl fmt::Display for UeaElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

fn format_c64(c: C64) -> String {
    format!("({}{}{}i)", c.re, if c.im < 0.0 { "-" } else { "+" }, c.im.abs())
}

fn parse_c64(s: &str) -> Option<C64> {
    let inner = s.strip_prefix('(')?.strip_suffix("i)")?;
    // The imaginary part starts at the rightmost sign that is not part of a
    // float exponent; the real part keeps its own leading sign.
    let bytes = inner.as_bytes();
    let split = (1..bytes.len()).rev().find(|&p| {
        matches!(bytes[p], b'+' | b'-') && !matches!(bytes[p - 1], b'e' | b'E')
    })?;
    let re: f64 = inner[..split].parse().ok()?;
    let im: f64 = inner[split..].parse().ok()?;
    Some(C64::new(re, im))
}

/// PBW straightening of a word over full-basis letters.
///
/// Letters must come out nondecreasing; an adjacent descent `x_a x_b` with
/// `a > b` rewrites to `x_b x_a + [x_a, x_b]`.
fn straighten(
    alg: &GradedLieAlgebra,
    word: &[u16],
    cache: &mut HashMap<Vec<u16>, Arc<Terms>>,
) -> Arc<Terms> {
    if let Some(hit) = cache.get(word) {
        return hit.clone();
    }
    let descent = word.windows(2).position(|w| w[0] > w[1]);
    let result: Terms = match descent {
        None => {
            let mut exps = vec![0u32; alg.dim()];
            for &l in word {
                exps[l as usize] += 1;
            }
            [(exps, C64::new(1.0, 0.0))].into_iter().collect()
        }
        Some(pos) => {
            let (a, b) = (word[pos], word[pos + 1]);
            let mut swapped = word.to_vec();
            swapped.swap(pos, pos + 1);
            let mut acc: Terms = straighten(alg, &swapped, cache).as_ref().clone();
            for k in 0..alg.dim() {
                let c = alg.structure_constant(a as usize, b as usize, k);
                if c.norm() > PRUNE_TOL {
                    let mut shorter: Vec<u16> = Vec::with_capacity(word.len() - 1);
                    shorter.extend_from_slice(&word[..pos]);
                    shorter.push(k as u16);
                    shorter.extend_from_slice(&word[pos + 2..]);
                    let sub = straighten(alg, &shorter, cache);
                    for (e, cc) in sub.iter() {
                        *acc.entry(e.clone()).or_insert(C64::new(0.0, 0.0)) += c * cc;
                    }
                }
            }
            acc
        }
    };
    let arc = Arc::new(result);
    cache.insert(word.to_vec(), arc.clone());
    arc
}
