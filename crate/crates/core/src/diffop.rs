//! Variable-coefficient differential operators `P = sum M_a X^alpha`.
//!
//! Words are over the preferred generators; coefficients are symbolic
//! expression trees. Freezing evaluates the coefficients at a point and
//! lands in the enveloping algebra; the formal adjoint and compositions are
//! normalized back to multiplier-times-word form with the Leibniz rule,
//! which keeps every operator in the same shape.

use std::sync::Arc;

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::algebra::GradedLieAlgebra;
use crate::error::{CoreError, Result};
use crate::expr::CoeffExpr;
use crate::uea::{UeaElement, Word};

type C64 = Complex64;

/// Apply the left-invariant vector field of basis vector `b` to a coefficient
/// expression, exactly: the flow is polynomial in the coordinates, so the
/// result stays inside the expression grammar.
pub fn apply_basis_field(
    alg: &Arc<GradedLieAlgebra>,
    basis_idx: usize,
    a: &CoeffExpr,
) -> Result<CoeffExpr> {
    let polys = alg.flow_polynomials(basis_idx)?;
    let mut acc = CoeffExpr::constant(alg.clone(), C64::new(0.0, 0.0));
    for (k, p) in polys.iter().enumerate() {
        if p.is_zero() {
            continue;
        }
        let coeff = CoeffExpr::from_poly(alg.clone(), p);
        acc = acc.add(&coeff.mul(&a.diff_coord(k)));
    }
    Ok(acc)
}

/// Vector field of the `j`-th preferred generator applied to `a`.
pub fn vector_field_apply(
    alg: &Arc<GradedLieAlgebra>,
    generator_slot: usize,
    a: &CoeffExpr,
) -> Result<CoeffExpr> {
    let basis_idx = *alg
        .generators()
        .get(generator_slot)
        .ok_or(CoreError::IndexOutOfRange {
            index: generator_slot,
            dim: alg.generator_count(),
        })?;
    apply_basis_field(alg, basis_idx, a)
}

/// A differential operator as a list of (coefficient, generator word) terms.
#[derive(Clone, Debug)]
pub struct DiffOp {
    alg: Arc<GradedLieAlgebra>,
    terms: Vec<(CoeffExpr, Word)>,
    order: u32,
}

impl DiffOp {
    pub fn new(alg: Arc<GradedLieAlgebra>, terms: Vec<(CoeffExpr, Word)>) -> Result<Self> {
        for (c, _) in &terms {
            if c.algebra() != &alg {
                return Err(CoreError::AlgebraMismatch);
            }
        }
        let order = terms
            .iter()
            .map(|(_, w)| w.weighted_length(&alg))
            .max()
            .unwrap_or(0);
        Ok(DiffOp { alg, terms, order })
    }

    /// The multiplier `M_1` (order zero identity).
    pub fn identity(alg: Arc<GradedLieAlgebra>) -> Self {
        let one = CoeffExpr::constant(alg.clone(), C64::new(1.0, 0.0));
        DiffOp {
            alg,
            terms: vec![(one, Word::empty())],
            order: 0,
        }
    }

    /// A pure multiplier `M_a`.
    pub fn multiplier(a: CoeffExpr) -> Self {
        let alg = a.algebra().clone();
        DiffOp {
            alg,
            terms: vec![(a, Word::empty())],
            order: 0,
        }
    }

    /// Constant-coefficient operator from an enveloping-algebra element with
    /// generator-only monomials is not always possible; instead this wraps a
    /// single generator word with coefficient one.
    pub fn from_word(alg: Arc<GradedLieAlgebra>, word: Word) -> Self {
        let order = word.weighted_length(&alg);
        let one = CoeffExpr::constant(alg.clone(), C64::new(1.0, 0.0));
        DiffOp {
            alg,
            terms: vec![(one, word)],
            order,
        }
    }

    pub fn algebra(&self) -> &Arc<GradedLieAlgebra> {
        &self.alg
    }

    pub fn terms(&self) -> &[(CoeffExpr, Word)] {
        &self.terms
    }

    /// Maximal weighted word length over the terms.
    pub fn order(&self) -> u32 {
        self.order
    }

    /// Freeze the coefficients at `g`: `P_g = sum a(g) X^alpha` in normal form.
    pub fn freeze(&self, g: &[f64]) -> Result<UeaElement> {
        let mut acc = UeaElement::zero(self.alg.clone());
        for (a, word) in &self.terms {
            let value = a.eval(g)?;
            if value.norm() == 0.0 {
                continue;
            }
            let mono = UeaElement::normal_order(self.alg.clone(), word);
            acc = acc.add(&mono.scale(value))?;
        }
        Ok(acc)
    }

    /// Frozen principal part: terms of weighted length exactly the order,
    /// evaluated at `g`. Equals `top_part(freeze(g), order)`.
    pub fn top_at(&self, g: &[f64]) -> Result<UeaElement> {
        Ok(self.freeze(g)?.top_part(self.order))
    }

    /// Formal adjoint, normalized back to multiplier-times-word form.
    pub fn formal_adjoint(&self) -> Result<Self> {
        let mut out: Vec<(CoeffExpr, Word)> = Vec::new();
        for (a, word) in &self.terms {
            let k = word.len();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let reversed: Vec<usize> = word.letters().iter().rev().copied().collect();
            let pushed = push_multiplier(&self.alg, &reversed, &a.conj())?;
            for (c, gamma) in pushed {
                out.push((c.scale(C64::new(sign, 0.0)), Word::new(&self.alg, gamma)?));
            }
        }
        DiffOp::new(self.alg.clone(), out)
    }

    /// Operator composition `P Q`, expanded by the Leibniz rule.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.alg != other.alg {
            return Err(CoreError::AlgebraMismatch);
        }
        let mut out: Vec<(CoeffExpr, Word)> = Vec::new();
        for (a, alpha) in &self.terms {
            for (b, beta) in &other.terms {
                let pushed = push_multiplier(&self.alg, alpha.letters(), b)?;
                for (c, gamma) in pushed {
                    let mut word = gamma;
                    word.extend_from_slice(beta.letters());
                    out.push((a.mul(&c), Word::new(&self.alg, word)?));
                }
            }
        }
        DiffOp::new(self.alg.clone(), out)
    }

    /// `[P, M_psi]`; the weighted order drops by at least one because the
    /// derivative-free Leibniz branch cancels structurally.
    pub fn commutator_with_mult(&self, psi: &CoeffExpr) -> Result<Self> {
        let mut out: Vec<(CoeffExpr, Word)> = Vec::new();
        for (a, alpha) in &self.terms {
            let pushed = push_multiplier(&self.alg, alpha.letters(), psi)?;
            for (c, gamma) in pushed {
                if gamma.len() == alpha.len() {
                    // The untouched branch is M_psi X^alpha; it cancels
                    // against the subtracted M_psi P term.
                    continue;
                }
                out.push((a.mul(&c), Word::new(&self.alg, gamma)?));
            }
        }
        DiffOp::new(self.alg.clone(), out)
    }

    /// Apply as an operator on a coefficient expression (used by tests to
    /// compare compositions against sequential application).
    pub fn apply_symbolic(&self, u: &CoeffExpr) -> Result<CoeffExpr> {
        let mut acc = CoeffExpr::constant(self.alg.clone(), C64::new(0.0, 0.0));
        for (a, word) in &self.terms {
            let mut v = u.clone();
            for &slot in word.letters().iter().rev() {
                v = vector_field_apply(&self.alg, slot, &v)?;
            }
            acc = acc.add(&a.mul(&v));
        }
        Ok(acc)
    }

    /// Sampled estimate of the coefficient bounds `sup |X^beta a|` over
    /// generator words with weighted length at most `k`, plus a conservative
    /// global boundedness certificate per coefficient.
    pub fn coeff_bounds(
        &self,
        k: u32,
        lo: &[f64],
        hi: &[f64],
        n_samples: usize,
        seed: u64,
    ) -> Result<CoeffBoundReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = self.alg.dim();
        let points: Vec<Vec<f64>> = (0..n_samples)
            .map(|_| (0..d).map(|i| rng.gen_range(lo[i]..hi[i])).collect())
            .collect();
        let words = generator_words_up_to(&self.alg, k);
        let mut sampled_sup: f64 = 0.0;
        let mut all_bounded = true;
        for (a, _) in &self.terms {
            for word in &words {
                let mut da = a.clone();
                for &slot in word.iter().rev() {
                    da = vector_field_apply(&self.alg, slot, &da)?;
                }
                if !da.is_provably_bounded() {
                    all_bounded = false;
                }
                for p in &points {
                    sampled_sup = sampled_sup.max(da.eval(p)?.norm());
                }
            }
        }
        Ok(CoeffBoundReport {
            weighted_order: k,
            sampled_sup,
            provably_bounded: all_bounded,
        })
    }
}

/// Sampled data standing in for the uniform-smoothness norm of coefficients.
#[derive(Clone, Debug)]
pub struct CoeffBoundReport {
    pub weighted_order: u32,
    pub sampled_sup: f64,
    /// True when interval analysis certifies every sampled derivative bounded
    /// on the whole group; polynomials and similar growth are flagged false.
    pub provably_bounded: bool,
}

/// All generator words with weighted length at most `k` (including the empty
/// word).
pub fn generator_words_up_to(alg: &GradedLieAlgebra, k: u32) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    let mut frontier: Vec<(Vec<usize>, u32)> = vec![(vec![], 0)];
    while let Some((word, len)) = frontier.pop() {
        for slot in 0..alg.generator_count() {
            let next_len = len + alg.generator_degree(slot);
            if next_len > k {
                continue;
            }
            let mut next = word.clone();
            next.push(slot);
            out.push(next.clone());
            frontier.push((next, next_len));
        }
    }
    out
}

/// Normalize `X^alpha M_b` to `sum M_c X^gamma` by the Leibniz rule.
///
/// Letters are processed from the innermost factor outward; each step maps
/// `M_c X^gamma` to `M_{X c} X^gamma + M_c X^{l gamma}`.
fn push_multiplier(
    alg: &Arc<GradedLieAlgebra>,
    alpha: &[usize],
    b: &CoeffExpr,
) -> Result<Vec<(CoeffExpr, Vec<usize>)>> {
    let mut state: Vec<(CoeffExpr, Vec<usize>)> = vec![(b.clone(), vec![])];
    for &letter in alpha.iter().rev() {
        let mut next = Vec::with_capacity(state.len() * 2);
        for (c, gamma) in state {
            let dc = vector_field_apply(alg, letter, &c)?;
            if dc.as_constant() != Some(C64::new(0.0, 0.0)) {
                next.push((dc, gamma.clone()));
            }
            let mut shifted = Vec::with_capacity(gamma.len() + 1);
            shifted.push(letter);
            shifted.extend_from_slice(&gamma);
            next.push((c, shifted));
        }
        state = next;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{flow_word_derivative, GroupElement};
    use approx::assert_abs_diff_eq;

    fn heis() -> Arc<GradedLieAlgebra> {
        GradedLieAlgebra::builtin("heisenberg1").unwrap()
    }

    fn expr(alg: &Arc<GradedLieAlgebra>, s: &str) -> CoeffExpr {
        CoeffExpr::parse(alg.clone(), s).unwrap()
    }

    fn word(alg: &Arc<GradedLieAlgebra>, s: &str) -> Word {
        Word::parse(alg, s).unwrap()
    }

    /// The operator `-X^2 - Y^2 + i M_f T` with `T = XY - YX`.
    fn heis_family(alg: &Arc<GradedLieAlgebra>, f: &str) -> DiffOp {
        let m1 = C64::new(-1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let fi = expr(alg, f).scale(i);
        DiffOp::new(
            alg.clone(),
            vec![
                (expr(alg, "1").scale(m1), word(alg, "XX")),
                (expr(alg, "1").scale(m1), word(alg, "YY")),
                (fi.clone(), word(alg, "XY")),
                (fi.neg(), word(alg, "YX")),
            ],
        )
        .unwrap()
    }

    #[test]
    fn heisenberg_fields_in_coordinates() {
        let alg = heis();
        // X = -d/dx - (y/2) d/dt, Y = -d/dy + (x/2) d/dt, T = -d/dt.
        let x_coord = expr(&alg, "x");
        let t_coord = expr(&alg, "t");
        let dx = vector_field_apply(&alg, 0, &x_coord).unwrap();
        assert_eq!(dx.as_constant(), Some(C64::new(-1.0, 0.0)));
        let dt = vector_field_apply(&alg, 0, &t_coord).unwrap();
        assert_abs_diff_eq!(
            dt.eval(&[9.0, 4.0, 7.0]).unwrap().re,
            -2.0,
            epsilon = 1e-14
        );
        let c = vector_field_apply(&alg, 1, &expr(&alg, "3")).unwrap();
        assert_eq!(c.as_constant(), Some(C64::new(0.0, 0.0)));
    }

    #[test]
    fn symbolic_fields_match_flow_differences() {
        let alg = heis();
        let a = expr(&alg, "sin(x)*y + cos(t)");
        for slot in 0..2 {
            let sym = vector_field_apply(&alg, slot, &a).unwrap();
            let g = GroupElement::new(vec![0.3, -0.4, 0.8]);
            let f = |c: &[f64]| a.eval(c).unwrap().re;
            let basis_idx = alg.generators()[slot];
            let numeric =
                crate::algebra::flow_derivative(&alg, basis_idx, &f, &g, 1e-5).unwrap();
            assert_abs_diff_eq!(numeric, sym.eval(&g.coords).unwrap().re, epsilon = 1e-9);
        }
    }

    #[test]
    fn freeze_family_operator() {
        let alg = heis();
        let p = heis_family(&alg, "2");
        let frozen = p.freeze(&[0.7, -0.3, 1.1]).unwrap();
        // -X^2 - Y^2 + 2i T
        assert_eq!(frozen.coefficient(&[2, 0, 0]), C64::new(-1.0, 0.0));
        assert_eq!(frozen.coefficient(&[0, 2, 0]), C64::new(-1.0, 0.0));
        assert_eq!(frozen.coefficient(&[0, 0, 1]), C64::new(0.0, 2.0));
        assert_eq!(frozen.term_count(), 3);
        // Constant coefficients: identical at a different point.
        let other = p.freeze(&[5.0, 5.0, 5.0]).unwrap();
        assert!(frozen.max_abs_diff(&other) < 1e-15);
        // Variable coefficient picks up the evaluation.
        let q = DiffOp::new(
            alg.clone(),
            vec![(expr(&alg, "x"), word(&alg, "Y"))],
        )
        .unwrap();
        let fr = q.freeze(&[3.0, 0.0, 0.0]).unwrap();
        assert_eq!(fr.coefficient(&[0, 1, 0]), C64::new(3.0, 0.0));
    }

    #[test]
    fn freeze_is_representation_independent() {
        let alg = heis();
        // XYY - 2 YXY + YYX = [[X, Y], Y] = [T, Y] = 0 as an operator.
        let zero_terms = vec![
            (expr(&alg, "1"), word(&alg, "XYY")),
            (expr(&alg, "-2"), word(&alg, "YXY")),
            (expr(&alg, "1"), word(&alg, "YYX")),
        ];
        let zero_op = DiffOp::new(alg.clone(), zero_terms).unwrap();
        let g = [0.2, 0.4, -0.6];
        assert!(zero_op.freeze(&g).unwrap().is_zero());
        let p = heis_family(&alg, "sin(x)");
        let mut padded_terms = p.terms().to_vec();
        padded_terms.extend(zero_op.terms().iter().cloned());
        let padded = DiffOp::new(alg.clone(), padded_terms).unwrap();
        assert!(p.freeze(&g).unwrap().max_abs_diff(&padded.freeze(&g).unwrap()) < 1e-14);
    }

    #[test]
    fn top_examples() {
        let alg = heis();
        let p = heis_family(&alg, "sin(x)+2");
        let g = [0.9, 0.0, 0.0];
        let top = p.top_at(&g).unwrap();
        // All words have weighted length 2, so top equals the frozen element.
        assert!(top.max_abs_diff(&p.freeze(&g).unwrap()) < 1e-14);
        let f = 0.9_f64.sin() + 2.0;
        assert_eq!(top.coefficient(&[0, 0, 1]), C64::new(0.0, f));

        // Order-two operator with an order-zero multiplier: the multiplier is
        // dropped from the top part.
        let mut terms = p.terms().to_vec();
        terms.push((expr(&alg, "5"), Word::empty()));
        let q = DiffOp::new(alg.clone(), terms).unwrap();
        assert!(q.top_at(&g).unwrap().max_abs_diff(&top) < 1e-14);
    }

    #[test]
    fn adjoint_examples() {
        let alg = heis();
        // P = X (constant coefficient): adjoint is -X.
        let p = DiffOp::from_word(alg.clone(), word(&alg, "X"));
        let adj = p.formal_adjoint().unwrap();
        let g = [0.0; 3];
        let x = UeaElement::generator(alg.clone(), 0).unwrap();
        assert!(adj.freeze(&g).unwrap().max_abs_diff(&x.scale(C64::new(-1.0, 0.0))) < 1e-14);

        // P = M_a (order 0): adjoint is the conjugate multiplier.
        let a = expr(&alg, "sin(x) + 2*i");
        let m = DiffOp::multiplier(a.clone());
        let madj = m.formal_adjoint().unwrap();
        let pt = [0.3, 0.1, -0.2];
        assert_eq!(
            madj.terms()[0].0.eval(&pt).unwrap(),
            a.eval(&pt).unwrap().conj()
        );

        // P = M_a X: adjoint is -M_conj(a) X - M_{X conj(a)}.
        let p = DiffOp::new(alg.clone(), vec![(a.clone(), word(&alg, "X"))]).unwrap();
        let adj = p.formal_adjoint().unwrap();
        let frozen = adj.freeze(&pt).unwrap();
        let xa = vector_field_apply(&alg, 0, &a.conj()).unwrap();
        let expect = x
            .scale(-a.eval(&pt).unwrap().conj())
            .add(&UeaElement::scalar(alg.clone(), -xa.eval(&pt).unwrap()))
            .unwrap();
        assert!(frozen.max_abs_diff(&expect) < 1e-13);
    }

    #[test]
    fn adjoint_is_involutive_as_operator() {
        let alg = heis();
        let p = DiffOp::new(
            alg.clone(),
            vec![
                (expr(&alg, "sin(x)*y"), word(&alg, "XY")),
                (expr(&alg, "cos(t)"), word(&alg, "Y")),
                (expr(&alg, "2"), Word::empty()),
            ],
        )
        .unwrap();
        let padj = p.formal_adjoint().unwrap().formal_adjoint().unwrap();
        // Term lists differ; compare by symbolic application to a test input.
        let u = expr(&alg, "exp(tanh(x)) * cos(y) + t");
        let lhs = p.apply_symbolic(&u).unwrap();
        let rhs = padj.apply_symbolic(&u).unwrap();
        for pt in [[0.1, 0.2, 0.3], [-0.5, 0.8, -0.9], [1.0, -1.0, 0.25]] {
            let a = lhs.eval(&pt).unwrap();
            let b = rhs.eval(&pt).unwrap();
            assert!((a - b).norm() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn compose_examples() {
        let alg = heis();
        let p = heis_family(&alg, "sin(x)");
        let id = DiffOp::identity(alg.clone());
        let left = id.compose(&p).unwrap();
        let g = [0.4, 0.5, 0.6];
        assert!(left.freeze(&g).unwrap().max_abs_diff(&p.freeze(&g).unwrap()) < 1e-13);

        // compose(M_a X, M_b Y) = M_{ab} XY + M_{a Xb} Y
        let a = expr(&alg, "sin(x)");
        let b = expr(&alg, "t*y");
        let pa = DiffOp::new(alg.clone(), vec![(a.clone(), word(&alg, "X"))]).unwrap();
        let pb = DiffOp::new(alg.clone(), vec![(b.clone(), word(&alg, "Y"))]).unwrap();
        let comp = pa.compose(&pb).unwrap();
        assert_eq!(comp.order(), 2);
        let u = expr(&alg, "cos(x)*sin(y) + x*t");
        let seq = pa.apply_symbolic(&pb.apply_symbolic(&u).unwrap()).unwrap();
        let direct = comp.apply_symbolic(&u).unwrap();
        for pt in [[0.1, -0.2, 0.5], [0.7, 0.7, -0.3]] {
            assert!((seq.eval(&pt).unwrap() - direct.eval(&pt).unwrap()).norm() < 1e-10);
        }

        let x_op = DiffOp::from_word(alg.clone(), word(&alg, "X"));
        let xx = x_op.compose(&x_op).unwrap();
        let fr = xx.freeze(&[0.0; 3]).unwrap();
        assert_eq!(fr.coefficient(&[2, 0, 0]), C64::new(1.0, 0.0));
        assert_eq!(fr.term_count(), 1);
    }

    #[test]
    fn commutator_with_multiplier() {
        let alg = heis();
        let psi = expr(&alg, "sin(x)*cos(y)");
        // [X, M_psi] = M_{X psi}
        let x_op = DiffOp::from_word(alg.clone(), word(&alg, "X"));
        let comm = x_op.commutator_with_mult(&psi).unwrap();
        assert_eq!(comm.order(), 0);
        let expect = vector_field_apply(&alg, 0, &psi).unwrap();
        for pt in [[0.3, 0.4, 0.5], [-1.0, 0.2, 0.9]] {
            assert!(
                (comm.terms()[0].0.eval(&pt).unwrap() - expect.eval(&pt).unwrap()).norm() < 1e-12
            );
        }

        // [M_a, M_psi] = 0
        let m = DiffOp::multiplier(expr(&alg, "x*y"));
        assert!(m.commutator_with_mult(&psi).unwrap().terms().is_empty());

        // [Delta, M_psi] has weighted order <= 1.
        let delta = DiffOp::new(
            alg.clone(),
            vec![
                (expr(&alg, "1"), word(&alg, "XX")),
                (expr(&alg, "1"), word(&alg, "YY")),
            ],
        )
        .unwrap();
        let comm = delta.commutator_with_mult(&psi).unwrap();
        assert!(comm.order() <= 1);
        // Application agrees with P(psi u) - psi P(u).
        let u = expr(&alg, "exp(tanh(t)) + x*x");
        let lhs = comm.apply_symbolic(&u).unwrap();
        let rhs_a = delta.apply_symbolic(&psi.mul(&u)).unwrap();
        let rhs_b = psi.mul(&delta.apply_symbolic(&u).unwrap());
        for pt in [[0.2, -0.3, 0.8], [0.9, 0.1, -0.4]] {
            let want = rhs_a.eval(&pt).unwrap() - rhs_b.eval(&pt).unwrap();
            assert!((lhs.eval(&pt).unwrap() - want).norm() < 1e-10);
        }
    }

    #[test]
    fn symbolic_application_matches_flow_differences() {
        let alg = heis();
        let p = DiffOp::new(
            alg.clone(),
            vec![(expr(&alg, "2+sin(x)"), word(&alg, "XY"))],
        )
        .unwrap();
        let u = expr(&alg, "cos(x) * sin(t)");
        let symbolic = p.apply_symbolic(&u).unwrap();
        let g = GroupElement::new(vec![0.3, 0.7, -0.2]);
        let f = |c: &[f64]| u.eval(c).unwrap().re;
        let basis_word = [alg.generators()[0], alg.generators()[1]];
        let numeric = flow_word_derivative(&alg, &basis_word, &f, &g, 1e-4).unwrap()
            * (2.0 + g.coords[0].sin());
        assert_abs_diff_eq!(numeric, symbolic.eval(&g.coords).unwrap().re, epsilon = 1e-6);
    }

    #[test]
    fn coefficient_bound_sampling() {
        let alg = heis();
        let p = heis_family(&alg, "2+sin(x)");
        let rep = p
            .coeff_bounds(2, &[-2.0; 3], &[2.0; 3], 50, 7)
            .unwrap();
        assert!(rep.provably_bounded);
        assert!(rep.sampled_sup >= 1.0 && rep.sampled_sup <= 4.0);
        let q = DiffOp::new(alg.clone(), vec![(expr(&alg, "x*x"), word(&alg, "X"))]).unwrap();
        let rep = q.coeff_bounds(1, &[-2.0; 3], &[2.0; 3], 50, 7).unwrap();
        assert!(!rep.provably_bounded);
    }
}
