//! Graded nilpotent Lie algebras in exponential coordinates.
//!
//! A [`GradedLieAlgebra`] is a finite-dimensional Lie algebra with a basis of
//! homogeneous vectors, degrees nondecreasing in basis order, a sparse
//! structure-constant table, and a distinguished generating subset. The group
//! product on exponential coordinates is the Dynkin form of the
//! Baker-Campbell-Hausdorff series, truncated at the nilpotency step (exact
//! for a valid grading).

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::poly::Poly;

type C64 = Complex64;

/// Tolerance for treating a structure constant or residual as zero.
const STRUCT_TOL: f64 = 1e-12;

/// One violated structural invariant, with the offending basis indices.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    /// `c_{ij}^k != -c_{ji}^k`.
    Antisymmetry { i: usize, j: usize, k: usize },
    /// Jacobi sum over the triple `(i, j, k)` does not vanish.
    Jacobi { i: usize, j: usize, k: usize },
    /// Nonzero `c_{ij}^k` with `degree(k) != degree(i) + degree(j)`.
    Grading { i: usize, j: usize, k: usize },
    /// The same basis index appears twice in the generator list.
    DuplicateGenerator { index: usize },
    /// Brackets of the generators span a proper subalgebra.
    GeneratorsDontGenerate { spanned: usize, dim: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Antisymmetry { i, j, k } => {
                write!(f, "antisymmetry fails at (i={i}, j={j}, k={k})")
            }
            Violation::Jacobi { i, j, k } => {
                write!(f, "Jacobi identity fails for triple ({i}, {j}, {k})")
            }
            Violation::Grading { i, j, k } => {
                write!(f, "grading violated at (i={i}, j={j}, k={k})")
            }
            Violation::DuplicateGenerator { index } => {
                write!(f, "generator index {index} listed twice")
            }
            Violation::GeneratorsDontGenerate { spanned, dim } => {
                write!(f, "generators span only {spanned} of {dim} dimensions")
            }
        }
    }
}

/// A point of the group in exponential coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    pub coords: Vec<f64>,
}

impl GroupElement {
    pub fn new(coords: Vec<f64>) -> Self {
        GroupElement { coords }
    }

    pub fn zero(dim: usize) -> Self {
        GroupElement {
            coords: vec![0.0; dim],
        }
    }

    /// Group inverse: negation of exponential coordinates.
    pub fn inverse(&self) -> Self {
        GroupElement {
            coords: self.coords.iter().map(|x| -x).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Which of the two BCH arguments a letter of a Dynkin word refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Side {
    A,
    B,
}

/// A graded nilpotent Lie algebra with a preferred generating set.
#[derive(Debug)]
pub struct GradedLieAlgebra {
    labels: Vec<String>,
    coord_names: Vec<String>,
    degrees: Vec<u32>,
    /// Dense table, index `(i * d + j) * d + k`.
    structure: Vec<C64>,
    /// Real view of the table; present when every entry has zero imaginary part.
    structure_re: Option<Vec<f64>>,
    generators: Vec<usize>,
    step: u32,
    /// Merged Dynkin words with coefficients, up to `step` letters.
    bch_terms: Vec<(f64, Vec<Side>)>,
    /// Flow coefficient polynomials per basis index, derived lazily.
    flow_polys: OnceLock<Vec<Vec<Poly>>>,
}

impl PartialEq for GradedLieAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels
            && self.degrees == other.degrees
            && self.structure == other.structure
            && self.generators == other.generators
    }
}

impl GradedLieAlgebra {
    /// Build an algebra from bracket data `[e_i, e_j] = sum_k c e_k` (given for
    /// `i != j`; the antisymmetric counterpart is filled in automatically).
    ///
    /// The basis is stably re-ordered so degrees are nondecreasing; bracket
    /// and generator indices refer to the order *as declared* and are remapped.
    pub fn new(
        labels: Vec<String>,
        degrees: Vec<u32>,
        brackets: &[(usize, usize, Vec<(usize, C64)>)],
        generators: Vec<usize>,
    ) -> Result<Arc<Self>> {
        let d = labels.len();
        if degrees.len() != d {
            return Err(CoreError::InvalidAlgebra(format!(
                "{} labels but {} degrees",
                d,
                degrees.len()
            )));
        }
        if d == 0 {
            return Err(CoreError::InvalidAlgebra("empty basis".into()));
        }
        if degrees.iter().any(|&v| v == 0) {
            return Err(CoreError::InvalidAlgebra("degrees must be positive".into()));
        }

        // Stable sort by degree; perm[new] = old.
        let mut perm: Vec<usize> = (0..d).collect();
        perm.sort_by_key(|&i| degrees[i]);
        let mut inv = vec![0usize; d];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        let sorted_labels: Vec<String> = perm.iter().map(|&i| labels[i].clone()).collect();
        let sorted_degrees: Vec<u32> = perm.iter().map(|&i| degrees[i]).collect();

        let mut structure = vec![C64::new(0.0, 0.0); d * d * d];
        for &(i, j, ref coeffs) in brackets {
            if i >= d || j >= d {
                return Err(CoreError::IndexOutOfRange {
                    index: i.max(j),
                    dim: d,
                });
            }
            if i == j && coeffs.iter().any(|&(_, c)| c.norm() > STRUCT_TOL) {
                return Err(CoreError::InvalidAlgebra(format!(
                    "nonzero bracket [e_{i}, e_{i}]"
                )));
            }
            for &(k, c) in coeffs {
                if k >= d {
                    return Err(CoreError::IndexOutOfRange { index: k, dim: d });
                }
                let (ni, nj, nk) = (inv[i], inv[j], inv[k]);
                let fwd = (ni * d + nj) * d + nk;
                let bwd = (nj * d + ni) * d + nk;
                if structure[fwd] != C64::new(0.0, 0.0) && (structure[fwd] - c).norm() > STRUCT_TOL
                {
                    return Err(CoreError::InvalidAlgebra(format!(
                        "conflicting entries for bracket ({i}, {j}) -> {k}"
                    )));
                }
                if structure[bwd] != C64::new(0.0, 0.0) && (structure[bwd] + c).norm() > STRUCT_TOL
                {
                    return Err(CoreError::InvalidAlgebra(format!(
                        "non-antisymmetric input for bracket ({i}, {j}) -> {k}"
                    )));
                }
                structure[fwd] = c;
                structure[bwd] = -c;
            }
        }

        let sorted_generators: Vec<usize> = generators
            .iter()
            .map(|&g| {
                if g >= d {
                    Err(CoreError::IndexOutOfRange { index: g, dim: d })
                } else {
                    Ok(inv[g])
                }
            })
            .collect::<Result<_>>()?;

        Self::from_table(sorted_labels, sorted_degrees, structure, sorted_generators)
    }

    /// Build directly from a raw (possibly non-antisymmetric) table. Degrees
    /// must already be nondecreasing. Mostly useful for exercising
    /// [`GradedLieAlgebra::validate`].
    pub fn from_table(
        labels: Vec<String>,
        degrees: Vec<u32>,
        structure: Vec<C64>,
        generators: Vec<usize>,
    ) -> Result<Arc<Self>> {
        let d = labels.len();
        if structure.len() != d * d * d {
            return Err(CoreError::InvalidAlgebra("structure table size mismatch".into()));
        }
        if degrees.windows(2).any(|w| w[0] > w[1]) {
            return Err(CoreError::InvalidAlgebra(
                "degrees must be nondecreasing in basis order".into(),
            ));
        }
        let step = *degrees.iter().max().unwrap();
        if step > 8 {
            return Err(CoreError::InvalidAlgebra(format!(
                "nilpotency step {step} above supported bound 8"
            )));
        }
        let coord_names: Vec<String> = labels.iter().map(|l| l.to_lowercase()).collect();
        {
            let mut seen = coord_names.clone();
            seen.sort();
            seen.dedup();
            if seen.len() != d {
                return Err(CoreError::InvalidAlgebra(
                    "basis labels must be distinct case-insensitively".into(),
                ));
            }
        }
        let structure_re = if structure.iter().all(|c| c.im.abs() <= STRUCT_TOL) {
            Some(structure.iter().map(|c| c.re).collect())
        } else {
            None
        };
        Ok(Arc::new(GradedLieAlgebra {
            labels,
            coord_names,
            degrees,
            structure,
            structure_re,
            generators,
            step,
            bch_terms: dynkin_terms(step as usize),
            flow_polys: OnceLock::new(),
        }))
    }

    /// Built-in algebras: `heisenberg1`, `engel`, `anisotropic_plane`, and
    /// `abelian(d,(v1,...,vd))`.
    pub fn builtin(name: &str) -> Result<Arc<Self>> {
        let trimmed = name.trim();
        match trimmed {
            "heisenberg1" => GradedLieAlgebra::new(
                vec!["X".into(), "Y".into(), "T".into()],
                vec![1, 1, 2],
                &[(0, 1, vec![(2, C64::new(1.0, 0.0))])],
                vec![0, 1],
            ),
            "engel" => GradedLieAlgebra::new(
                vec!["X1".into(), "X2".into(), "X3".into(), "X4".into()],
                vec![1, 1, 2, 3],
                &[
                    (0, 1, vec![(2, C64::new(1.0, 0.0))]),
                    (0, 2, vec![(3, C64::new(1.0, 0.0))]),
                ],
                vec![0, 1],
            ),
            "anisotropic_plane" => GradedLieAlgebra::new(
                vec!["X1".into(), "X2".into()],
                vec![1, 2],
                &[],
                vec![0, 1],
            ),
            other => {
                if let Some(rest) = other.strip_prefix("abelian(") {
                    let inner = rest
                        .strip_suffix(')')
                        .ok_or_else(|| CoreError::UnknownBuiltin(other.into()))?;
                    parse_abelian(inner).ok_or_else(|| CoreError::UnknownBuiltin(other.into()))
                        .and_then(|(d, degs)| {
                            let labels = (1..=d).map(|i| format!("X{i}")).collect();
                            GradedLieAlgebra::new(labels, degs, &[], (0..d).collect())
                        })
                } else {
                    Err(CoreError::UnknownBuiltin(other.into()))
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn step(&self) -> u32 {
        self.step
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Coordinate names for coefficient expressions: lowercased basis labels.
    pub fn coord_names(&self) -> &[String] {
        &self.coord_names
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn degree(&self, i: usize) -> u32 {
        self.degrees[i]
    }

    /// Basis indices of the preferred generators.
    pub fn generators(&self) -> &[usize] {
        &self.generators
    }

    pub fn generator_count(&self) -> usize {
        self.generators.len()
    }

    /// Degree `v_j` of the `j`-th generator.
    pub fn generator_degree(&self, slot: usize) -> u32 {
        self.degrees[self.generators[slot]]
    }

    /// Least common multiple of the generator degrees.
    pub fn lcm_generator_degree(&self) -> u32 {
        self.generators
            .iter()
            .map(|&g| self.degrees[g])
            .fold(1, lcm)
    }

    /// `d_hom = sum_k k * dim(V_k)`, i.e. the sum of all basis degrees.
    pub fn homogeneous_dimension(&self) -> u32 {
        self.degrees.iter().sum()
    }

    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> C64 {
        self.structure[(i * self.dim() + j) * self.dim() + k]
    }

    pub(crate) fn real_structure(&self) -> Result<&[f64]> {
        self.structure_re
            .as_deref()
            .ok_or(CoreError::ComplexStructure)
    }

    /// `[a, b]` for coefficient vectors over the basis.
    pub fn bracket(&self, a: &[C64], b: &[C64]) -> Vec<C64> {
        let d = self.dim();
        let mut out = vec![C64::new(0.0, 0.0); d];
        for i in 0..d {
            if a[i] == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..d {
                if b[j] == C64::new(0.0, 0.0) {
                    continue;
                }
                let prod = a[i] * b[j];
                for k in 0..d {
                    let c = self.structure[(i * d + j) * d + k];
                    if c != C64::new(0.0, 0.0) {
                        out[k] += prod * c;
                    }
                }
            }
        }
        out
    }

    fn bracket_re(&self, table: &[f64], a: &[f64], b: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d];
        for i in 0..d {
            if a[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                if b[j] == 0.0 {
                    continue;
                }
                let prod = a[i] * b[j];
                for k in 0..d {
                    let c = table[(i * d + j) * d + k];
                    if c != 0.0 {
                        out[k] += prod * c;
                    }
                }
            }
        }
        out
    }

    /// Validation report; empty iff all structural invariants hold.
    pub fn validate(&self) -> Vec<Violation> {
        let d = self.dim();
        let mut out = Vec::new();
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let fwd = self.structure_constant(i, j, k);
                    let bwd = self.structure_constant(j, i, k);
                    if i <= j && (fwd + bwd).norm() > STRUCT_TOL {
                        out.push(Violation::Antisymmetry { i, j, k });
                    }
                    if fwd.norm() > STRUCT_TOL
                        && self.degrees[k] != self.degrees[i] + self.degrees[j]
                    {
                        out.push(Violation::Grading { i, j, k });
                    }
                }
            }
        }
        let basis: Vec<Vec<C64>> = (0..d)
            .map(|i| {
                let mut v = vec![C64::new(0.0, 0.0); d];
                v[i] = C64::new(1.0, 0.0);
                v
            })
            .collect();
        for i in 0..d {
            for j in (i + 1)..d {
                for k in (j + 1)..d {
                    let mut acc = self.bracket(&self.bracket(&basis[i], &basis[j]), &basis[k]);
                    let t2 = self.bracket(&self.bracket(&basis[j], &basis[k]), &basis[i]);
                    let t3 = self.bracket(&self.bracket(&basis[k], &basis[i]), &basis[j]);
                    for m in 0..d {
                        acc[m] += t2[m] + t3[m];
                    }
                    if acc.iter().any(|c| c.norm() > STRUCT_TOL) {
                        out.push(Violation::Jacobi { i, j, k });
                    }
                }
            }
        }
        let mut seen = vec![false; d];
        for &g in &self.generators {
            if seen[g] {
                out.push(Violation::DuplicateGenerator { index: g });
            }
            seen[g] = true;
        }
        let spanned = self.generated_dimension();
        if spanned < d {
            out.push(Violation::GeneratorsDontGenerate { spanned, dim: d });
        }
        out
    }

    /// Dimension of the Lie subalgebra generated by the preferred generators.
    fn generated_dimension(&self) -> usize {
        let d = self.dim();
        let mut span: Vec<Vec<C64>> = Vec::new();
        for &g in &self.generators {
            let mut v = vec![C64::new(0.0, 0.0); d];
            v[g] = C64::new(1.0, 0.0);
            add_to_span(&mut span, v);
        }
        loop {
            let before = span.len();
            let snapshot = span.clone();
            for a in &snapshot {
                for b in &snapshot {
                    let br = self.bracket(a, b);
                    add_to_span(&mut span, br);
                }
            }
            if span.len() == before || span.len() == d {
                break;
            }
        }
        span.len()
    }

    /// Dilation `delta_t` on a real coefficient vector.
    pub fn dilate(&self, t: f64, v: &[f64]) -> Result<Vec<f64>> {
        if t <= 0.0 {
            return Err(CoreError::NonPositiveDilation(t));
        }
        Ok(v.iter()
            .zip(&self.degrees)
            .map(|(x, &deg)| x * t.powi(deg as i32))
            .collect())
    }

    pub fn dilate_element(&self, t: f64, g: &GroupElement) -> Result<GroupElement> {
        Ok(GroupElement::new(self.dilate(t, &g.coords)?))
    }

    /// Group product in exponential coordinates via the truncated Dynkin series.
    pub fn bch_multiply(&self, g1: &GroupElement, g2: &GroupElement) -> Result<GroupElement> {
        let table = self.real_structure()?;
        let d = self.dim();
        let mut out = vec![0.0; d];
        for (coeff, word) in &self.bch_terms {
            let v = self.nested_bracket_re(table, word, &g1.coords, &g2.coords);
            for k in 0..d {
                out[k] += coeff * v[k];
            }
        }
        Ok(GroupElement::new(out))
    }

    fn nested_bracket_re(&self, table: &[f64], word: &[Side], a: &[f64], b: &[f64]) -> Vec<f64> {
        let pick = |s: Side| -> &[f64] {
            match s {
                Side::A => a,
                Side::B => b,
            }
        };
        let mut acc: Vec<f64> = pick(word[word.len() - 1]).to_vec();
        for &s in word[..word.len() - 1].iter().rev() {
            acc = self.bracket_re(table, pick(s), &acc);
        }
        acc
    }

    /// One-parameter flow coefficients: coordinate `k` of
    /// `d/ds exp(-s e_b) g |_{s=0}` as a polynomial in the coordinates of `g`.
    pub fn flow_polynomials(&self, basis_idx: usize) -> Result<&[Poly]> {
        let table = self.real_structure()?;
        let all = self.flow_polys.get_or_init(|| {
            (0..self.dim())
                .map(|b| self.derive_flow_polys(table, b))
                .collect()
        });
        Ok(&all[basis_idx])
    }

    /// BCH over the polynomial ring in (s, x_1..x_d) with first argument
    /// `-s e_b`, keeping the coefficient of `s`.
    fn derive_flow_polys(&self, table: &[f64], basis_idx: usize) -> Vec<Poly> {
        let d = self.dim();
        let nv = d + 1; // variable 0 is the flow parameter s
        let mut a: Vec<Poly> = (0..d).map(|_| Poly::zero(nv)).collect();
        a[basis_idx] = Poly::var(nv, 0).scale(-1.0);
        let b: Vec<Poly> = (0..d).map(|k| Poly::var(nv, k + 1)).collect();

        let mut out: Vec<Poly> = (0..d).map(|_| Poly::zero(nv)).collect();
        for (coeff, word) in &self.bch_terms {
            // Words with more than one A letter contribute only s^2 and higher.
            let a_count = word.iter().filter(|&&s| s == Side::A).count();
            if a_count != 1 {
                continue;
            }
            let v = self.nested_bracket_poly(table, word, &a, &b);
            for k in 0..d {
                out[k].add_assign(&v[k].scale(*coeff));
            }
        }
        out.into_iter().map(|p| p.linear_coefficient(0)).collect()
    }

    fn nested_bracket_poly(
        &self,
        table: &[f64],
        word: &[Side],
        a: &[Poly],
        b: &[Poly],
    ) -> Vec<Poly> {
        let d = self.dim();
        let pick = |s: Side| -> &[Poly] {
            match s {
                Side::A => a,
                Side::B => b,
            }
        };
        let mut acc: Vec<Poly> = pick(word[word.len() - 1]).to_vec();
        for &s in word[..word.len() - 1].iter().rev() {
            let left = pick(s);
            let mut next: Vec<Poly> = (0..d).map(|_| Poly::zero(acc[0].nvars())).collect();
            for i in 0..d {
                if left[i].is_zero() {
                    continue;
                }
                for j in 0..d {
                    if acc[j].is_zero() {
                        continue;
                    }
                    for k in 0..d {
                        let c = table[(i * d + j) * d + k];
                        if c != 0.0 {
                            next[k].add_assign(&left[i].mul(&acc[j]).scale(c));
                        }
                    }
                }
            }
            acc = next;
        }
        acc
    }

    /// Structural check for the 3-dimensional Heisenberg algebra with
    /// `[X, Y] = T`, degrees (1, 1, 2), generators `{X, Y}`.
    pub fn is_heisenberg1(&self) -> bool {
        self.dim() == 3
            && self.degrees == [1, 1, 2]
            && self.generators == [0, 1]
            && (self.structure_constant(0, 1, 2) - C64::new(1.0, 0.0)).norm() < STRUCT_TOL
            && self.structure.iter().map(|c| c.norm()).sum::<f64>() < 2.0 + STRUCT_TOL
    }
}

fn parse_abelian(inner: &str) -> Option<(usize, Vec<u32>)> {
    // Accepts "d" or "d,(v1,v2,...)".
    let inner = inner.trim();
    if let Some((d_str, rest)) = inner.split_once(',') {
        let d: usize = d_str.trim().parse().ok()?;
        let rest = rest.trim().strip_prefix('(')?.strip_suffix(')')?;
        let degs: Vec<u32> = rest
            .split(',')
            .map(|s| s.trim().parse().ok())
            .collect::<Option<_>>()?;
        if degs.len() != d || d == 0 {
            return None;
        }
        Some((d, degs))
    } else {
        let d: usize = inner.parse().ok()?;
        if d == 0 {
            return None;
        }
        Some((d, vec![1; d]))
    }
}

fn add_to_span(span: &mut Vec<Vec<C64>>, mut v: Vec<C64>) {
    // Gaussian elimination against current span rows with partial pivoting.
    for row in span.iter() {
        let pivot = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .map(|(i, _)| i)
            .unwrap();
        let factor = v[pivot] / row[pivot];
        for (vi, ri) in v.iter_mut().zip(row) {
            *vi -= factor * ri;
        }
    }
    if v.iter().any(|c| c.norm() > 1e-9) {
        span.push(v);
    }
}

fn lcm(a: u32, b: u32) -> u32 {
    a / gcd(a, b) * b
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Enumerate the Dynkin series terms up to `max_len` letters, merged by word.
fn dynkin_terms(max_len: usize) -> Vec<(f64, Vec<Side>)> {
    use std::collections::HashMap;
    let mut merged: HashMap<Vec<Side>, f64> = HashMap::new();
    // Block sequences ((r_1, s_1), ..., (r_n, s_n)), each pair nonzero,
    // total letter count at most max_len.
    let mut blocks: Vec<(usize, usize)> = Vec::new();
    fn recurse(
        blocks: &mut Vec<(usize, usize)>,
        used: usize,
        max_len: usize,
        merged: &mut HashMap<Vec<Side>, f64>,
    ) {
        if !blocks.is_empty() {
            let n = blocks.len();
            let total = used;
            let mut denom = (n as f64) * (total as f64);
            for &(r, s) in blocks.iter() {
                denom *= factorial(r) * factorial(s);
            }
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            let coeff = sign / denom;
            let mut word = Vec::with_capacity(total);
            for &(r, s) in blocks.iter() {
                word.extend(std::iter::repeat(Side::A).take(r));
                word.extend(std::iter::repeat(Side::B).take(s));
            }
            // Nested brackets ending in a repeated letter vanish identically.
            let len = word.len();
            if !(len >= 2 && word[len - 1] == word[len - 2]) {
                *merged.entry(word).or_insert(0.0) += coeff;
            }
        }
        if used >= max_len {
            return;
        }
        for r in 0..=(max_len - used) {
            for s in 0..=(max_len - used - r) {
                if r + s == 0 {
                    continue;
                }
                blocks.push((r, s));
                recurse(blocks, used + r + s, max_len, merged);
                blocks.pop();
            }
        }
    }
    recurse(&mut blocks, 0, max_len, &mut merged);
    let mut out: Vec<(f64, Vec<Side>)> = merged
        .into_iter()
        .filter(|(_, c)| c.abs() > 1e-15)
        .map(|(w, c)| (c, w))
        .collect();
    out.sort_by(|a, b| (a.1.len(), &a.1).cmp(&(b.1.len(), &b.1)));
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Central finite difference of `f` along the flow `s -> exp(-s e_b) g`.
pub fn flow_derivative<F: Fn(&[f64]) -> f64>(
    alg: &GradedLieAlgebra,
    basis_idx: usize,
    f: &F,
    g: &GroupElement,
    h: f64,
) -> Result<f64> {
    let d = alg.dim();
    let mut dir = GroupElement::zero(d);
    dir.coords[basis_idx] = -h;
    let fwd = alg.bch_multiply(&dir, g)?;
    dir.coords[basis_idx] = h;
    let bwd = alg.bch_multiply(&dir, g)?;
    Ok((f(&fwd.coords) - f(&bwd.coords)) / (2.0 * h))
}

/// Iterated flow difference along a word of basis indices (leftmost applied last).
pub fn flow_word_derivative<F: Fn(&[f64]) -> f64>(
    alg: &GradedLieAlgebra,
    word: &[usize],
    f: &F,
    g: &GroupElement,
    h: f64,
) -> Result<f64> {
    match word {
        [] => Ok(f(&g.coords)),
        [head, rest @ ..] => {
            let inner = |x: &[f64]| -> f64 {
                flow_word_derivative(alg, rest, f, &GroupElement::new(x.to_vec()), h).unwrap()
            };
            flow_derivative(alg, *head, &inner, g, h)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn heis() -> Arc<GradedLieAlgebra> {
        GradedLieAlgebra::builtin("heisenberg1").unwrap()
    }

    #[test]
    fn builtins_validate_clean() {
        for name in ["heisenberg1", "engel", "anisotropic_plane", "abelian(2,(1,1))"] {
            let alg = GradedLieAlgebra::builtin(name).unwrap();
            assert!(alg.validate().is_empty(), "{name}: {:?}", alg.validate());
        }
        assert!(GradedLieAlgebra::builtin("nope").is_err());
    }

    #[test]
    fn homogeneous_dimensions() {
        assert_eq!(heis().homogeneous_dimension(), 4);
        assert_eq!(
            GradedLieAlgebra::builtin("abelian(2,(1,1))")
                .unwrap()
                .homogeneous_dimension(),
            2
        );
        assert_eq!(
            GradedLieAlgebra::builtin("anisotropic_plane")
                .unwrap()
                .homogeneous_dimension(),
            3
        );
        assert_eq!(
            GradedLieAlgebra::builtin("engel").unwrap().homogeneous_dimension(),
            7
        );
    }

    #[test]
    fn grading_violation_detected() {
        // [X, Y] = X with degrees (1, 1, 2): degree bookkeeping fails at k = 0.
        let alg = GradedLieAlgebra::new(
            vec!["X".into(), "Y".into(), "T".into()],
            vec![1, 1, 2],
            &[(0, 1, vec![(0, C64::new(1.0, 0.0))])],
            vec![0, 1],
        )
        .unwrap();
        let report = alg.validate();
        assert!(report
            .iter()
            .any(|v| matches!(v, Violation::Grading { i: 0, j: 1, k: 0 })));
    }

    #[test]
    fn so3_with_fake_grading_fails_grading_only() {
        let one = C64::new(1.0, 0.0);
        let alg = GradedLieAlgebra::new(
            vec!["e1".into(), "e2".into(), "e3".into()],
            vec![1, 1, 2],
            &[
                (0, 1, vec![(2, one)]),
                (1, 2, vec![(0, one)]),
                (2, 0, vec![(1, one)]),
            ],
            vec![0, 1],
        )
        .unwrap();
        let report = alg.validate();
        assert!(report.iter().any(|v| matches!(v, Violation::Grading { .. })));
        assert!(!report.iter().any(|v| matches!(v, Violation::Jacobi { .. })));
    }

    #[test]
    fn heisenberg_group_law_closed_form() {
        let alg = heis();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let g1 = GroupElement::new((0..3).map(|_| rng.gen_range(-2.0..2.0)).collect());
            let g2 = GroupElement::new((0..3).map(|_| rng.gen_range(-2.0..2.0)).collect());
            let prod = alg.bch_multiply(&g1, &g2).unwrap();
            let (x, y, t) = (g1.coords[0], g1.coords[1], g1.coords[2]);
            let (xp, yp, tp) = (g2.coords[0], g2.coords[1], g2.coords[2]);
            let expect = [x + xp, y + yp, t + tp + 0.5 * (x * yp - y * xp)];
            for k in 0..3 {
                assert_abs_diff_eq!(prod.coords[k], expect[k], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn group_axioms_and_associativity() {
        for name in ["heisenberg1", "engel"] {
            let alg = GradedLieAlgebra::builtin(name).unwrap();
            let d = alg.dim();
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            for _ in 0..200 {
                let rnd = |rng: &mut ChaCha8Rng| {
                    GroupElement::new((0..d).map(|_| rng.gen_range(-1.5..1.5)).collect())
                };
                let (g1, g2, g3) = (rnd(&mut rng), rnd(&mut rng), rnd(&mut rng));
                let left = alg
                    .bch_multiply(&alg.bch_multiply(&g1, &g2).unwrap(), &g3)
                    .unwrap();
                let right = alg
                    .bch_multiply(&g1, &alg.bch_multiply(&g2, &g3).unwrap())
                    .unwrap();
                assert!(left.max_abs_diff(&right) < 1e-10, "{name} assoc");
                let id = alg.bch_multiply(&g1, &g1.inverse()).unwrap();
                assert!(id.max_abs_diff(&GroupElement::zero(d)) < 1e-12);
                let same = alg.bch_multiply(&GroupElement::zero(d), &g1).unwrap();
                assert!(same.max_abs_diff(&g1) < 1e-12);
            }
        }
    }

    #[test]
    fn dilation_laws() {
        let alg = heis();
        let v = vec![1.0, 0.0, 1.0]; // X + T
        let dil = alg.dilate(2.0, &v).unwrap();
        assert_eq!(dil, vec![2.0, 0.0, 4.0]);
        assert!(alg.dilate(0.0, &v).is_err());
        assert!(alg.dilate(-1.0, &v).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let w: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let (t, s) = (rng.gen_range(0.1..3.0), rng.gen_range(0.1..3.0));
            let a = alg.dilate(t, &alg.dilate(s, &w).unwrap()).unwrap();
            let b = alg.dilate(t * s, &w).unwrap();
            for k in 0..3 {
                assert_abs_diff_eq!(a[k], b[k], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn dilation_is_group_automorphism() {
        for name in ["heisenberg1", "engel"] {
            let alg = GradedLieAlgebra::builtin(name).unwrap();
            let d = alg.dim();
            let mut rng = ChaCha8Rng::seed_from_u64(23);
            for _ in 0..50 {
                let g1 = GroupElement::new((0..d).map(|_| rng.gen_range(-1.0..1.0)).collect());
                let g2 = GroupElement::new((0..d).map(|_| rng.gen_range(-1.0..1.0)).collect());
                let t = rng.gen_range(0.2..2.5);
                let lhs = alg
                    .bch_multiply(
                        &alg.dilate_element(t, &g1).unwrap(),
                        &alg.dilate_element(t, &g2).unwrap(),
                    )
                    .unwrap();
                let rhs = alg
                    .dilate_element(t, &alg.bch_multiply(&g1, &g2).unwrap())
                    .unwrap();
                assert!(lhs.max_abs_diff(&rhs) < 1e-10);
            }
        }
    }

    #[test]
    fn flow_polynomials_heisenberg() {
        // X-flow: d/ds (x - s, y, t - s y / 2) = (-1, 0, -y/2).
        let alg = heis();
        let polys = alg.flow_polynomials(0).unwrap();
        assert_eq!(polys[0], Poly::constant(3, -1.0));
        assert!(polys[1].is_zero());
        assert_eq!(polys[2], Poly::var(3, 1).scale(-0.5));
        // Y-flow: (0, -1, +x/2).
        let polys = alg.flow_polynomials(1).unwrap();
        assert!(polys[0].is_zero());
        assert_eq!(polys[1], Poly::constant(3, -1.0));
        assert_eq!(polys[2], Poly::var(3, 0).scale(0.5));
        // T-flow: (0, 0, -1).
        let polys = alg.flow_polynomials(2).unwrap();
        assert!(polys[0].is_zero() && polys[1].is_zero());
        assert_eq!(polys[2], Poly::constant(3, -1.0));
    }

    #[test]
    fn flow_polynomials_match_numeric_flow() {
        for name in ["heisenberg1", "engel"] {
            let alg = GradedLieAlgebra::builtin(name).unwrap();
            let d = alg.dim();
            let mut rng = ChaCha8Rng::seed_from_u64(41);
            for b in 0..d {
                let polys: Vec<Poly> = alg.flow_polynomials(b).unwrap().to_vec();
                for _ in 0..10 {
                    let g = GroupElement::new((0..d).map(|_| rng.gen_range(-1.0..1.0)).collect());
                    for k in 0..d {
                        let proj = |x: &[f64]| x[k];
                        let numeric = flow_derivative(&alg, b, &proj, &g, 1e-5).unwrap();
                        let exact = polys[k].eval(&g.coords);
                        assert_abs_diff_eq!(numeric, exact, epsilon = 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn unsorted_degrees_are_normalized() {
        let one = C64::new(1.0, 0.0);
        // Declared with T first; constructor re-sorts so degrees are (1, 1, 2).
        let alg = GradedLieAlgebra::new(
            vec!["T".into(), "X".into(), "Y".into()],
            vec![2, 1, 1],
            &[(1, 2, vec![(0, one)])],
            vec![1, 2],
        )
        .unwrap();
        assert_eq!(alg.degrees(), &[1, 1, 2]);
        assert_eq!(alg.labels(), &["X".to_string(), "Y".into(), "T".into()]);
        assert!(alg.validate().is_empty());
        assert!(alg.is_heisenberg1());
    }
}
