//! Periodic lattice discretization with group-flow vector fields and
//! spectral Sobolev norms.
//!
//! Generator fields are central differences along the BCH flow with
//! multilinear interpolation at off-grid points; under periodic wrap they are
//! skew-symmetric, so the canonical operator `Delta_h` is symmetric negative
//! semidefinite and `(1 - Delta_h)` is positive definite. Sobolev powers
//! dispatch on the exponent: integer powers apply the matrix directly (or
//! solve with conjugate gradients), fractional powers go through a dense
//! eigendecomposition that is cached and capped at desk scale.

mod sparse;

pub use sparse::DiscreteOp;

use std::sync::{Arc, OnceLock};

use ndarray::Array2;
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{GradedLieAlgebra, GroupElement};
use crate::covering::PartitionOfUnity;
use crate::diffop::{generator_words_up_to, DiffOp};
use crate::error::{CoreError, Result};
use crate::uea::UeaElement;

type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Largest point count for which the dense eigendecomposition is permitted.
const DENSE_EIG_CAP: usize = 8200;

/// Uniform tensor grid over a coordinate box.
#[derive(Clone, Debug)]
pub struct Grid {
    lo: Vec<f64>,
    counts: Vec<usize>,
    h: Vec<f64>,
    periodic: Vec<bool>,
}

impl Grid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, counts: Vec<usize>, periodic: Vec<bool>) -> Result<Self> {
        let d = lo.len();
        if hi.len() != d || counts.len() != d || periodic.len() != d {
            return Err(CoreError::InvalidAlgebra("grid specification mismatch".into()));
        }
        if counts.iter().any(|&c| c < 2) {
            return Err(CoreError::InvalidAlgebra("grid needs at least 2 points per axis".into()));
        }
        let h = (0..d).map(|i| (hi[i] - lo[i]) / counts[i] as f64).collect();
        Ok(Grid {
            lo,
            counts,
            h,
            periodic,
        })
    }

    /// Periodic cube `[lo, hi)^dim` with `n` points per axis.
    pub fn cube(lo: f64, hi: f64, n: usize, dim: usize) -> Self {
        Grid::new(
            vec![lo; dim],
            vec![hi; dim],
            vec![n; dim],
            vec![true; dim],
        )
        .unwrap()
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn spacing(&self) -> &[f64] {
        &self.h
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.lo[i] + self.h[i] * self.counts[i] as f64)
            .collect()
    }

    pub fn n_pts(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.iter().product()
    }

    pub fn point(&self, mut flat: usize) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d];
        for i in (0..d).rev() {
            let k = flat % self.counts[i];
            flat /= self.counts[i];
            out[i] = self.lo[i] + self.h[i] * k as f64;
        }
        out
    }

    pub fn sample<F: Fn(&[f64]) -> C64>(&self, f: F) -> Vec<C64> {
        (0..self.n_pts()).map(|k| f(&self.point(k))).collect()
    }

    /// Multilinear interpolation weights for an arbitrary coordinate point.
    fn interp_weights(&self, x: &[f64]) -> Result<Vec<(usize, f64)>> {
        let d = self.dim();
        let mut axis_terms: Vec<[(usize, f64); 2]> = Vec::with_capacity(d);
        for i in 0..d {
            let u = (x[i] - self.lo[i]) / self.h[i];
            let n = self.counts[i];
            if self.periodic[i] {
                let uw = u.rem_euclid(n as f64);
                let i0 = uw.floor() as usize % n;
                let frac = uw - uw.floor();
                axis_terms.push([(i0, 1.0 - frac), ((i0 + 1) % n, frac)]);
            } else {
                if u < -1e-12 || u > (n - 1) as f64 + 1e-12 {
                    return Err(CoreError::FlowLeavesBox {
                        axis: i,
                        step: x[i],
                    });
                }
                let i0 = (u.floor().max(0.0) as usize).min(n - 2);
                let frac = u - i0 as f64;
                axis_terms.push([(i0, 1.0 - frac), (i0 + 1, frac)]);
            }
        }
        // Row-major tensor accumulation of the per-axis weights.
        let mut weights: Vec<(usize, f64)> = vec![(0, 1.0)];
        for (i, terms) in axis_terms.iter().enumerate() {
            let mut next = Vec::with_capacity(weights.len() * 2);
            for &(flat, w) in &weights {
                for &(idx, wi) in terms {
                    if wi.abs() > 1e-300 {
                        next.push((flat * self.counts[i] + idx, w * wi));
                    }
                }
            }
            weights = next;
        }
        Ok(weights)
    }
}

/// A grid, its algebra, the discretized generator fields, and the canonical
/// operator, with a lazily cached dense eigendecomposition of `1 - Delta_h`.
pub struct LatticeContext {
    alg: Arc<GradedLieAlgebra>,
    grid: Grid,
    field_ops: Vec<DiscreteOp>,
    delta: DiscreteOp,
    one_minus_delta: DiscreteOp,
    v: u32,
    eig: OnceLock<SpectralDecomposition>,
}

/// Dense eigendecomposition of the real symmetric matrix `1 - Delta_h`.
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Row `k` is the `k`-th orthonormal eigenvector.
    pub vectors: Array2<f64>,
}

impl SpectralDecomposition {
    /// Coefficients of `u` in the eigenbasis.
    pub fn analyze(&self, u: &[C64]) -> Vec<C64> {
        let n = self.eigenvalues.len();
        let mut coeffs = vec![ZERO; n];
        for (k, row) in self.vectors.rows().into_iter().enumerate() {
            let mut acc = ZERO;
            for (j, w) in row.iter().enumerate() {
                acc += C64::new(*w, 0.0) * u[j];
            }
            coeffs[k] = acc;
        }
        coeffs
    }

    /// Apply `(1 - Delta_h)^a` through the eigenbasis.
    pub fn apply_power(&self, u: &[C64], a: f64) -> Vec<C64> {
        let n = self.eigenvalues.len();
        let mut coeffs = self.analyze(u);
        for k in 0..n {
            coeffs[k] *= self.eigenvalues[k].powf(a);
        }
        let mut out = vec![ZERO; n];
        for (k, row) in self.vectors.rows().into_iter().enumerate() {
            let c = coeffs[k];
            if c == ZERO {
                continue;
            }
            for (j, w) in row.iter().enumerate() {
                out[j] += C64::new(*w, 0.0) * c;
            }
        }
        out
    }
}

/// Which Sobolev norm realization to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SobolevVariant {
    /// `||(1 - Delta_h)^(s/2v) u||` via spectral calculus.
    Spectral,
    /// `(sum_(len(alpha) <= s) ||X^alpha u||^2)^(1/2)`; needs `s` in `2v Z_+`.
    Integer,
}

impl LatticeContext {
    pub fn new(alg: Arc<GradedLieAlgebra>, grid: Grid) -> Result<Self> {
        if grid.dim() != alg.dim() {
            return Err(CoreError::InvalidAlgebra(
                "grid dimension does not match the algebra".into(),
            ));
        }
        let field_ops: Vec<DiscreteOp> = (0..alg.dim())
            .map(|b| vector_field_op(&alg, &grid, b))
            .collect::<Result<_>>()?;
        let delta_el = UeaElement::rockland_laplacian(alg.clone());
        let delta = build_from_uea(&delta_el, &grid, &field_ops)?;
        let one_minus_delta = delta.scaled(C64::new(-1.0, 0.0)).add_diagonal(C64::new(1.0, 0.0));
        let v = alg.lcm_generator_degree();
        Ok(LatticeContext {
            alg,
            grid,
            field_ops,
            delta,
            one_minus_delta,
            v,
            eig: OnceLock::new(),
        })
    }

    pub fn algebra(&self) -> &Arc<GradedLieAlgebra> {
        &self.alg
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn v(&self) -> u32 {
        self.v
    }

    pub fn field_op(&self, basis_idx: usize) -> &DiscreteOp {
        &self.field_ops[basis_idx]
    }

    /// The discretized canonical operator (negative semidefinite).
    pub fn delta(&self) -> &DiscreteOp {
        &self.delta
    }

    pub fn one_minus_delta(&self) -> &DiscreteOp {
        &self.one_minus_delta
    }

    /// Discretize a constant-coefficient element.
    pub fn build_operator_uea(&self, el: &UeaElement) -> Result<DiscreteOp> {
        build_from_uea(el, &self.grid, &self.field_ops)
    }

    /// Discretize a variable-coefficient operator.
    pub fn build_operator(&self, p: &DiffOp) -> Result<DiscreteOp> {
        let n = self.grid.n_pts();
        let mut acc = DiscreteOp::zeros(n);
        for (coeff, word) in p.terms() {
            let mut term: Option<DiscreteOp> = None;
            for &slot in word.letters() {
                let basis = p.algebra().generators()[slot];
                term = Some(match term {
                    None => self.field_ops[basis].clone(),
                    Some(m) => m.matmul(&self.field_ops[basis]),
                });
            }
            let word_op = term.unwrap_or_else(|| DiscreteOp::identity(n));
            let diag: Vec<C64> = (0..n)
                .map(|k| coeff.eval(&self.grid.point(k)))
                .collect::<Result<_>>()?;
            acc = acc.add(&DiscreteOp::diagonal(&diag).matmul(&word_op));
        }
        Ok(acc)
    }

    pub fn inner(&self, u: &[C64], w: &[C64]) -> C64 {
        let vol = self.grid.cell_volume();
        u.iter()
            .zip(w)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            * vol
    }

    pub fn l2_norm(&self, u: &[C64]) -> f64 {
        self.inner(u, u).re.max(0.0).sqrt()
    }

    /// Dense eigendecomposition of `1 - Delta_h`, computed once.
    pub fn spectral(&self) -> Result<&SpectralDecomposition> {
        let n = self.grid.n_pts();
        if n > DENSE_EIG_CAP {
            return Err(CoreError::SolverBreakdown(format!(
                "dense eigendecomposition capped at {DENSE_EIG_CAP} points, grid has {n}"
            )));
        }
        if let Some(e) = self.eig.get() {
            return Ok(e);
        }
        let dense = self.one_minus_delta.to_dense_real()?;
        // Symmetrize; the defect is discretization roundoff.
        let sym = (&dense + &dense.t()) * 0.5;
        let (vals, vecs) = crate::linalg::eigh_real(&sym)?;
        let _ = self.eig.set(SpectralDecomposition {
            eigenvalues: vals,
            vectors: vecs,
        });
        Ok(self.eig.get().unwrap())
    }

    /// Apply `(1 - Delta_h)^a`: direct products for integer `a`, conjugate
    /// gradient solves for negative integers, eigenbasis otherwise.
    pub fn apply_power(&self, u: &[C64], a: f64) -> Result<Vec<C64>> {
        if a == 0.0 {
            return Ok(u.to_vec());
        }
        if (a - a.round()).abs() < 1e-12 {
            let k = a.round() as i64;
            let mut out = u.to_vec();
            if k > 0 {
                for _ in 0..k {
                    out = self.one_minus_delta.matvec(&out);
                }
            } else {
                for _ in 0..(-k) {
                    out = cg_solve(
                        |v| self.one_minus_delta.matvec(v),
                        &out,
                        1e-13,
                        20 * self.grid.n_pts() + 200,
                    )?
                    .0;
                }
            }
            return Ok(out);
        }
        Ok(self.spectral()?.apply_power(u, a))
    }

    /// Sobolev norm of a grid function.
    pub fn sobolev_norm(&self, u: &[C64], s: f64, variant: SobolevVariant) -> Result<f64> {
        match variant {
            SobolevVariant::Spectral => {
                let a = s / (2.0 * self.v as f64);
                if (a - a.round()).abs() >= 1e-12 {
                    // Fractional power: one analysis pass is enough for a norm.
                    let spec = self.spectral()?;
                    let coeffs = spec.analyze(u);
                    let sum: f64 = coeffs
                        .iter()
                        .zip(&spec.eigenvalues)
                        .map(|(c, lam)| c.norm_sqr() * lam.powf(2.0 * a))
                        .sum();
                    return Ok((sum * self.grid.cell_volume()).sqrt());
                }
                let w = self.apply_power(u, a)?;
                Ok(self.l2_norm(&w))
            }
            SobolevVariant::Integer => {
                let two_v = 2 * self.v;
                if s < 0.0 || (s / two_v as f64).fract().abs() > 1e-12 {
                    return Err(CoreError::InvalidIntegerOrder(s));
                }
                let mut acc = 0.0;
                for word in generator_words_up_to(&self.alg, s as u32) {
                    let mut w = u.to_vec();
                    for &slot in word.iter().rev() {
                        let basis = self.alg.generators()[slot];
                        w = self.field_ops[basis].matvec(&w);
                    }
                    let nrm = self.l2_norm(&w);
                    acc += nrm * nrm;
                }
                Ok(acc.sqrt())
            }
        }
    }

    /// Homogeneous variant `||(-Delta_h)^(s/2v) u||` through the eigenbasis of
    /// the inhomogeneous operator shifted back by one.
    pub fn homogeneous_sobolev_norm(&self, u: &[C64], s: f64) -> Result<f64> {
        let spec = self.spectral()?;
        let mut coeffs = spec.analyze(u);
        for (k, c) in coeffs.iter_mut().enumerate() {
            let mu = (spec.eigenvalues[k] - 1.0).max(0.0);
            *c *= mu.powf(s / (2.0 * self.v as f64));
        }
        let sum: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        Ok((sum * self.grid.cell_volume()).sqrt())
    }

    /// Deterministic compactly supported smooth test functions well inside the
    /// box (25% margin per side, clear of the periodic seam).
    pub fn interior_test_functions(&self, count: usize, seed: u64) -> Vec<Vec<C64>> {
        let lo = self.grid.lo();
        let hi = self.grid.hi();
        let d = self.grid.dim();
        let inner_lo: Vec<f64> = (0..d)
            .map(|i| lo[i] + 0.25 * (hi[i] - lo[i]))
            .collect();
        let inner_hi: Vec<f64> = (0..d)
            .map(|i| hi[i] - 0.25 * (hi[i] - lo[i]))
            .collect();
        bump_combos(&inner_lo, &inner_hi, count, seed)
            .iter()
            .map(|b| self.grid.sample(|x| b.eval(x)))
            .collect()
    }

    /// Hölder interpolation inequality between spectral Sobolev norms.
    pub fn interpolation_check(&self, u: &[C64], s0: f64, s1: f64, theta: f64) -> Result<bool> {
        let s_mid = (1.0 - theta) * s0 + theta * s1;
        let n_mid = self.sobolev_norm(u, s_mid, SobolevVariant::Spectral)?;
        let n0 = self.sobolev_norm(u, s0, SobolevVariant::Spectral)?;
        let n1 = self.sobolev_norm(u, s1, SobolevVariant::Spectral)?;
        let rhs = n0.powf(1.0 - theta) * n1.powf(theta);
        Ok(n_mid <= rhs * (1.0 + 1e-10) + 1e-300)
    }
}

/// Estimate probe modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeMode {
    Forward,
    Backward,
    Localization,
}

impl ProbeMode {
    pub fn tag(&self) -> &'static str {
        match self {
            ProbeMode::Forward => "forward",
            ProbeMode::Backward => "backward",
            ProbeMode::Localization => "localize",
        }
    }
}

/// Extremal ratio over one test function.
#[derive(Clone, Debug, Serialize)]
pub struct ProbeWitness {
    pub test_index: usize,
    pub ratio: f64,
}

/// Outcome of one probe sweep at fixed `(mode, s, c)`.
#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub mode: String,
    pub s: f64,
    pub c: f64,
    pub grid: Vec<usize>,
    pub n_tests: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub witnesses: Vec<ProbeWitness>,
    /// Largest `|P - P†|` entry before symmetrization (forward/backward).
    pub hermitize_defect: f64,
}

/// Run one probe: ratios of Sobolev norms over the test set.
///
/// Forward: `||(P + ic) u||_(W^s) / ||u||_(W^(s+m))`.
/// Backward: `||(P + ic) u||_(W^(-m)) / ||u||_(L2)`.
/// Localization: `(sum_n ||psi_n u||_(W^s)^2)^(1/2) / ||u||_(W^s)`.
pub fn estimate_probe(
    ctx: &LatticeContext,
    mode: ProbeMode,
    p: &DiffOp,
    s: f64,
    c: f64,
    partition: Option<&PartitionOfUnity>,
    tests: &[Vec<C64>],
) -> Result<ProbeReport> {
    let m = p.order() as f64;
    let mut hermitize_defect = 0.0;
    let op = match mode {
        ProbeMode::Localization => None,
        _ => {
            let raw = ctx.build_operator(p)?;
            hermitize_defect = raw.hermitian_defect();
            Some(raw.hermitian_part().add_diagonal(C64::new(0.0, c)))
        }
    };
    let psi_samples = match mode {
        ProbeMode::Localization => {
            let pou = partition.ok_or_else(|| {
                CoreError::InvalidOperator("localization probe needs a partition".into())
            })?;
            Some(sample_partition(ctx, pou)?)
        }
        _ => None,
    };
    let mut ratios = Vec::with_capacity(tests.len());
    for u in tests {
        let ratio = match mode {
            ProbeMode::Forward => {
                let pu = op.as_ref().unwrap().matvec(u);
                let num = ctx.sobolev_norm(&pu, s, SobolevVariant::Spectral)?;
                let den = ctx.sobolev_norm(u, s + m, SobolevVariant::Spectral)?;
                num / den
            }
            ProbeMode::Backward => {
                let pu = op.as_ref().unwrap().matvec(u);
                let num = ctx.sobolev_norm(&pu, -m, SobolevVariant::Spectral)?;
                let den = ctx.l2_norm(u);
                num / den
            }
            ProbeMode::Localization => {
                let psi = psi_samples.as_ref().unwrap();
                let mut acc = 0.0;
                for psi_n in psi {
                    let loc: Vec<C64> = psi_n
                        .iter()
                        .zip(u.iter())
                        .map(|(w, v)| C64::new(*w, 0.0) * v)
                        .collect();
                    let nrm = ctx.sobolev_norm(&loc, s, SobolevVariant::Spectral)?;
                    acc += nrm * nrm;
                }
                acc.sqrt() / ctx.sobolev_norm(u, s, SobolevVariant::Spectral)?
            }
        };
        ratios.push(ratio);
    }
    let (mut min_r, mut max_r) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut arg_min, mut arg_max) = (0, 0);
    for (i, &r) in ratios.iter().enumerate() {
        if r < min_r {
            min_r = r;
            arg_min = i;
        }
        if r > max_r {
            max_r = r;
            arg_max = i;
        }
    }
    Ok(ProbeReport {
        mode: mode.tag().into(),
        s,
        c,
        grid: ctx.grid().counts().to_vec(),
        n_tests: tests.len(),
        min_ratio: min_r,
        max_ratio: max_r,
        witnesses: vec![
            ProbeWitness {
                test_index: arg_min,
                ratio: min_r,
            },
            ProbeWitness {
                test_index: arg_max,
                ratio: max_r,
            },
        ],
        hermitize_defect,
    })
}

/// Normalized partition bumps sampled on the grid, one vector per center.
/// Points with vanishing theta get zero (test functions are supported away
/// from there).
pub fn sample_partition(ctx: &LatticeContext, pou: &PartitionOfUnity) -> Result<Vec<Vec<f64>>> {
    let n = ctx.grid().n_pts();
    let n_centers = pou.centers().len();
    let mut raw = vec![vec![0.0f64; n]; n_centers];
    let mut theta_sq = vec![0.0f64; n];
    for k in 0..n {
        let g = ctx.grid().point(k);
        for c in 0..n_centers {
            let v = pou.psi_raw(&g, c)?;
            raw[c][k] = v;
            theta_sq[k] += v * v;
        }
    }
    for c in 0..n_centers {
        for k in 0..n {
            raw[c][k] = if theta_sq[k] > 1e-30 {
                raw[c][k] / theta_sq[k].sqrt()
            } else {
                0.0
            };
        }
    }
    Ok(raw)
}

/// Exact grid-level forward bound for a constant-coefficient symmetric
/// operator: the smallest singular value of
/// `(P_h + ic) (1 - Delta_h)^(-(s+m)/2v)`, from the Gram-matrix eigenvalue.
pub fn forward_exact_bound(
    ctx: &LatticeContext,
    p_const: &UeaElement,
    s: f64,
    c: f64,
) -> Result<f64> {
    let n = ctx.grid().n_pts();
    if n > DENSE_EIG_CAP {
        return Err(CoreError::SolverBreakdown(format!(
            "dense bound capped at {DENSE_EIG_CAP} points, grid has {n}"
        )));
    }
    let m = p_const.weighted_degree() as f64;
    let a = (s + m) / (2.0 * ctx.v() as f64);
    let ph = ctx.build_operator_uea(p_const)?.hermitian_part();
    let resolvent_power: Array2<f64> = if (a - a.round()).abs() < 1e-12 && a.round() >= 1.0 {
        let base = ctx.one_minus_delta().to_dense_real()?;
        let sym = (&base + &base.t()) * 0.5;
        let mut acc = sym.clone();
        for _ in 1..(a.round() as usize) {
            acc = acc.dot(&sym);
        }
        crate::linalg::invert_spd(&acc)?
    } else {
        let spec = ctx.spectral()?;
        let nn = spec.eigenvalues.len();
        let mut scaled = spec.vectors.clone();
        for k in 0..nn {
            let w = spec.eigenvalues[k].powf(-a);
            for j in 0..nn {
                scaled[[k, j]] *= w;
            }
        }
        spec.vectors.t().dot(&scaled)
    };
    // M = (P + ic) R, built column by column with the sparse operator.
    let mut m_mat = Array2::<C64>::zeros((n, n));
    let mut col = vec![ZERO; n];
    for j in 0..n {
        for i in 0..n {
            col[i] = C64::new(resolvent_power[[i, j]], 0.0);
        }
        let pc = ph.matvec(&col);
        for i in 0..n {
            m_mat[[i, j]] = pc[i] + C64::new(0.0, c) * col[i];
        }
    }
    let gram = m_mat.t().mapv(|v| v.conj()).dot(&m_mat);
    let (vals, _) = crate::linalg::eigh_complex(&gram)?;
    Ok(vals[0].max(0.0).sqrt())
}

/// Result of one resolvent solve.
#[derive(Clone, Debug, Serialize)]
pub struct ResolventReport {
    pub ratio: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Solve `(P_h + ic) x = b` and report `||x||_(W^m) / ||b||_(L2)`.
///
/// With `P` Hermitian the normal equations `(P^2 + c^2) x = (P - ic) b` are
/// positive definite, so conjugate gradients apply.
pub fn resolvent_probe(
    ctx: &LatticeContext,
    p: &DiffOp,
    c: f64,
    b: &[C64],
) -> Result<ResolventReport> {
    if c == 0.0 {
        return Err(CoreError::SolverBreakdown(
            "resolvent probe needs a nonzero imaginary shift".into(),
        ));
    }
    let ph = ctx.build_operator(p)?.hermitian_part();
    let rhs: Vec<C64> = {
        let pb = ph.matvec(b);
        pb.iter()
            .zip(b)
            .map(|(pv, bv)| pv - C64::new(0.0, c) * bv)
            .collect()
    };
    let apply = |v: &[C64]| {
        let pv = ph.matvec(v);
        let ppv = ph.matvec(&pv);
        ppv.iter()
            .zip(v)
            .map(|(a, w)| a + C64::new(c * c, 0.0) * w)
            .collect::<Vec<C64>>()
    };
    let (x, iters) = cg_solve(apply, &rhs, 1e-12, 20 * ctx.grid().n_pts() + 200)?;
    // Residual of the original system.
    let px = ph.matvec(&x);
    let resid: f64 = px
        .iter()
        .zip(&x)
        .zip(b)
        .map(|((pv, xv), bv)| (pv + C64::new(0.0, c) * xv - bv).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let bn = ctx.l2_norm(b);
    let ratio = if bn == 0.0 {
        0.0
    } else {
        ctx.sobolev_norm(&x, p.order() as f64, SobolevVariant::Spectral)? / bn
    };
    Ok(ResolventReport {
        ratio,
        iterations: iters,
        residual: resid,
    })
}

/// Central difference along the BCH flow of basis vector `basis_idx`, with
/// off-grid values by multilinear interpolation. The flow step is the grid
/// spacing of the matching axis.
pub fn vector_field_op(
    alg: &Arc<GradedLieAlgebra>,
    grid: &Grid,
    basis_idx: usize,
) -> Result<DiscreteOp> {
    let n = grid.n_pts();
    let d = grid.dim();
    let step = grid.spacing()[basis_idx];
    let mut rows: Vec<Vec<(usize, C64)>> = Vec::with_capacity(n);
    for flat in 0..n {
        let g = GroupElement::new(grid.point(flat));
        let mut dir = GroupElement::zero(d);
        let mut row: Vec<(usize, C64)> = Vec::with_capacity(2 * (1 << d));
        dir.coords[basis_idx] = -step;
        let fwd = alg.bch_multiply(&dir, &g)?;
        for (idx, w) in grid.interp_weights(&fwd.coords)? {
            row.push((idx, C64::new(w / (2.0 * step), 0.0)));
        }
        dir.coords[basis_idx] = step;
        let bwd = alg.bch_multiply(&dir, &g)?;
        for (idx, w) in grid.interp_weights(&bwd.coords)? {
            row.push((idx, C64::new(-w / (2.0 * step), 0.0)));
        }
        rows.push(row);
    }
    Ok(DiscreteOp::from_rows(n, rows))
}

fn build_from_uea(el: &UeaElement, grid: &Grid, field_ops: &[DiscreteOp]) -> Result<DiscreteOp> {
    let n = grid.n_pts();
    let mut acc = DiscreteOp::zeros(n);
    for (exps, &c) in el.terms() {
        let mut term: Option<DiscreteOp> = None;
        for (basis, &k) in exps.iter().enumerate() {
            for _ in 0..k {
                term = Some(match term {
                    None => field_ops[basis].clone(),
                    Some(m) => m.matmul(&field_ops[basis]),
                });
            }
        }
        let word_op = match term {
            None => DiscreteOp::identity(n).scaled(c),
            Some(m) => m.scaled(c),
        };
        acc = acc.add(&word_op);
    }
    Ok(acc)
}

/// Complex conjugate-gradient solve for Hermitian positive definite systems.
pub fn cg_solve<F: Fn(&[C64]) -> Vec<C64>>(
    apply: F,
    b: &[C64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<(Vec<C64>, usize)> {
    let n = b.len();
    let b_norm: f64 = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if b_norm == 0.0 {
        return Ok((vec![ZERO; n], 0));
    }
    let mut x = vec![ZERO; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rs_old: f64 = r.iter().map(|v| v.norm_sqr()).sum();
    for it in 0..max_iter {
        if rs_old.sqrt() <= rel_tol * b_norm {
            return Ok((x, it));
        }
        let ap = apply(&p);
        let p_ap: C64 = p.iter().zip(&ap).map(|(a, b)| a.conj() * b).sum();
        if p_ap.re <= 0.0 {
            return Err(CoreError::SolverBreakdown(
                "conjugate gradient lost positive definiteness".into(),
            ));
        }
        let alpha = C64::new(rs_old / p_ap.re, 0.0);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new: f64 = r.iter().map(|v| v.norm_sqr()).sum();
        let beta = C64::new(rs_new / rs_old, 0.0);
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs_old = rs_new;
    }
    if rs_old.sqrt() <= rel_tol * b_norm * 100.0 {
        return Ok((x, max_iter));
    }
    Err(CoreError::SolverBreakdown(format!(
        "conjugate gradient stalled at relative residual {:.3e}",
        rs_old.sqrt() / b_norm
    )))
}

/// One compactly supported smooth bump combination in continuum coordinates.
/// Each bump carries a phase modulation so quadratic forms of odd operators
/// can change sign over the test set.
#[derive(Clone, Debug)]
pub struct BumpCombo {
    bumps: Vec<Bump>,
}

#[derive(Clone, Debug)]
struct Bump {
    amp: C64,
    center: Vec<f64>,
    radius: Vec<f64>,
    wave: Vec<f64>,
}

impl BumpCombo {
    pub fn eval(&self, x: &[f64]) -> C64 {
        let mut acc = ZERO;
        for b in &self.bumps {
            let r2: f64 = x
                .iter()
                .zip(&b.center)
                .zip(&b.radius)
                .map(|((xi, ci), ri)| {
                    let t = (xi - ci) / ri;
                    t * t
                })
                .sum();
            if r2 < 1.0 {
                let phase: f64 = x.iter().zip(&b.wave).map(|(xi, ki)| xi * ki).sum();
                let flat = (1.0 - 1.0 / (1.0 - r2)).exp() * std::f64::consts::E;
                acc += b.amp * C64::new(0.0, phase).exp() * flat;
            }
        }
        acc
    }
}

/// Deterministic bump combinations supported inside `[lo, hi]`.
pub fn bump_combos(lo: &[f64], hi: &[f64], count: usize, seed: u64) -> Vec<BumpCombo> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = lo.len();
    (0..count)
        .map(|_| {
            let n_bumps = rng.gen_range(1..=3);
            let bumps = (0..n_bumps)
                .map(|_| {
                    let radius: Vec<f64> = (0..d)
                        .map(|i| (hi[i] - lo[i]) * rng.gen_range(0.25..0.45))
                        .collect();
                    let center: Vec<f64> = (0..d)
                        .map(|i| {
                            let margin = radius[i];
                            rng.gen_range((lo[i] + margin)..(hi[i] - margin))
                        })
                        .collect();
                    let amp = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    let wave: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.5..1.5)).collect();
                    Bump {
                        amp,
                        center,
                        radius,
                        wave,
                    }
                })
                .collect();
            BumpCombo { bumps }
        })
        .collect()
}
