//! Homogeneous norm, greedy covering nets, and the square partition of unity.
//!
//! The norm is the even-power block formula
//! `|g| = (sum_j ||g_j||^(M/j))^(1/M)` with `M = 2 lcm(1..step)`, so the
//! M-th power is a polynomial and the induced bumps are smooth. Distances are
//! right-invariant: `dist(g1, g2) = |g1 g2^{-1}|`.

use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{GradedLieAlgebra, GroupElement};
use crate::error::{CoreError, Result};

/// The concrete homogeneous norm of an algebra.
#[derive(Clone, Debug)]
pub struct HomogeneousNorm {
    alg: Arc<GradedLieAlgebra>,
    m_exp: u32,
}

impl HomogeneousNorm {
    pub fn new(alg: Arc<GradedLieAlgebra>) -> Self {
        let step = alg.step();
        let m_exp = 2 * (1..=step).fold(1, lcm);
        HomogeneousNorm { alg, m_exp }
    }

    /// The even exponent `M`.
    pub fn exponent(&self) -> u32 {
        self.m_exp
    }

    /// `|g|_hom^M`; polynomial in the coordinates.
    pub fn norm_pow_m(&self, coords: &[f64]) -> f64 {
        let mut acc = 0.0;
        let degrees = self.alg.degrees();
        let mut i = 0;
        while i < coords.len() {
            let deg = degrees[i];
            let mut block_sq = 0.0;
            let mut j = i;
            while j < coords.len() && degrees[j] == deg {
                block_sq += coords[j] * coords[j];
                j += 1;
            }
            // ||g_j||^(M/deg) with M/deg even, so this is an integer power of
            // the squared block norm.
            let half_power = self.m_exp / deg / 2;
            acc += block_sq.powi(half_power as i32);
            i = j;
        }
        acc
    }

    pub fn norm(&self, coords: &[f64]) -> f64 {
        self.norm_pow_m(coords).powf(1.0 / self.m_exp as f64)
    }

    /// Right-invariant distance `|g1 g2^{-1}|`.
    pub fn dist(&self, g1: &GroupElement, g2: &GroupElement) -> Result<f64> {
        let rel = self.alg.bch_multiply(g1, &g2.inverse())?;
        Ok(self.norm(&rel.coords))
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

/// Greedy maximal eps-separated subset of a pitch `eps/4` coordinate lattice,
/// shuffled reproducibly. Every lattice candidate ends up within `eps` of some
/// center, which is what coverage of the region rests on.
pub fn greedy_net(
    alg: &Arc<GradedLieAlgebra>,
    lo: &[f64],
    hi: &[f64],
    eps: f64,
    budget: usize,
    seed: u64,
) -> Result<Vec<GroupElement>> {
    if eps <= 0.0 {
        return Err(CoreError::InvalidAlgebra("eps must be positive".into()));
    }
    let d = alg.dim();
    let norm = HomogeneousNorm::new(alg.clone());
    let pitch = eps / 4.0;
    let mut counts = Vec::with_capacity(d);
    let mut total: usize = 1;
    for i in 0..d {
        let span = hi[i] - lo[i];
        let c = (span / pitch).floor() as usize + 1;
        counts.push(c);
        total = total.saturating_mul(c);
        if total > budget {
            return Err(CoreError::NetBudgetExceeded {
                candidates: total,
                budget,
            });
        }
    }
    let mut candidates: Vec<GroupElement> = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    loop {
        let coords: Vec<f64> = (0..d).map(|i| lo[i] + pitch * idx[i] as f64).collect();
        candidates.push(GroupElement::new(coords));
        let mut axis = d;
        loop {
            if axis == 0 {
                break;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < counts[axis] {
                break;
            }
            idx[axis] = 0;
        }
        if idx.iter().all(|&v| v == 0) {
            break;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    candidates.shuffle(&mut rng);

    let mut centers: Vec<GroupElement> = Vec::new();
    'cand: for cand in candidates {
        for center in &centers {
            if norm.dist(&cand, center)? < eps {
                continue 'cand;
            }
        }
        centers.push(cand);
    }
    Ok(centers)
}

/// Ball intersection counts: for each center, how many of the radius-`radius`
/// balls around all centers (itself included) meet its own.
pub fn overlap_counts(
    alg: &Arc<GradedLieAlgebra>,
    centers: &[GroupElement],
    radius: f64,
) -> Result<Vec<usize>> {
    let norm = HomogeneousNorm::new(alg.clone());
    let mut out = Vec::with_capacity(centers.len());
    for a in centers {
        let mut count = 0;
        for b in centers {
            if norm.dist(a, b)? < 2.0 * radius {
                count += 1;
            }
        }
        out.push(count);
    }
    Ok(out)
}

/// Bump geometry: flat on `B(0, eps)`, supported in `B(0, n_mult * eps)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BumpSpec {
    pub eps: f64,
    pub n_mult: u32,
}

impl Default for BumpSpec {
    fn default() -> Self {
        BumpSpec {
            eps: 1.0,
            n_mult: 2,
        }
    }
}

/// Translated square partition of unity over a finite set of centers.
#[derive(Clone, Debug)]
pub struct PartitionOfUnity {
    alg: Arc<GradedLieAlgebra>,
    norm: HomogeneousNorm,
    centers: Vec<GroupElement>,
    spec: BumpSpec,
}

impl PartitionOfUnity {
    pub fn build(alg: Arc<GradedLieAlgebra>, centers: Vec<GroupElement>, spec: BumpSpec) -> Self {
        let norm = HomogeneousNorm::new(alg.clone());
        PartitionOfUnity {
            alg,
            norm,
            centers,
            spec,
        }
    }

    pub fn centers(&self) -> &[GroupElement] {
        &self.centers
    }

    pub fn spec(&self) -> BumpSpec {
        self.spec
    }

    pub fn norm(&self) -> &HomogeneousNorm {
        &self.norm
    }

    /// The radial profile on `u = |g|^M`: identically one up to `eps^M`, zero
    /// from `(n_mult eps)^M` on, glued smoothly with the standard
    /// `exp(-1/t)` transition.
    fn profile(&self, norm_pow_m: f64) -> f64 {
        let a = (self.spec.eps).powi(self.norm.exponent() as i32);
        let b = (self.spec.n_mult as f64 * self.spec.eps).powi(self.norm.exponent() as i32);
        if norm_pow_m <= a {
            1.0
        } else if norm_pow_m >= b {
            0.0
        } else {
            let u = (norm_pow_m - a) / (b - a);
            smooth_step(1.0 - u)
        }
    }

    /// Unnormalized bump `psi(g g_n^{-1})`.
    pub fn psi_raw(&self, g: &[f64], n: usize) -> Result<f64> {
        let gn_inv = self.centers[n].inverse();
        let rel = self
            .alg
            .bch_multiply(&GroupElement::new(g.to_vec()), &gn_inv)?;
        Ok(self.profile(self.norm.norm_pow_m(&rel.coords)))
    }

    /// `theta(g)^2 = sum_k psi(g g_k^{-1})^2`.
    pub fn theta_sq(&self, g: &[f64]) -> Result<f64> {
        let mut acc = 0.0;
        for n in 0..self.centers.len() {
            let v = self.psi_raw(g, n)?;
            acc += v * v;
        }
        Ok(acc)
    }

    /// Whether `g` lies within `eps` of some center; there `theta^2 >= 1` and
    /// the square partition identity is available.
    pub fn is_covered(&self, g: &[f64]) -> Result<bool> {
        let ge = GroupElement::new(g.to_vec());
        for c in &self.centers {
            if self.norm.dist(&ge, c)? < self.spec.eps {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// All normalized bump values at `g`. Errors outside the covered region.
    pub fn psi_all(&self, g: &[f64]) -> Result<Vec<f64>> {
        let raws: Vec<f64> = (0..self.centers.len())
            .map(|n| self.psi_raw(g, n))
            .collect::<Result<_>>()?;
        let theta_sq: f64 = raws.iter().map(|v| v * v).sum();
        if theta_sq < 1.0 - 1e-9 && !self.is_covered(g)? {
            return Err(CoreError::OutsideCoveredRegion);
        }
        let theta = theta_sq.sqrt();
        Ok(raws.into_iter().map(|v| v / theta).collect())
    }

    /// Single normalized bump `psi_n(g)`.
    pub fn psi(&self, n: usize, g: &[f64]) -> Result<f64> {
        Ok(self.psi_all(g)?[n])
    }
}

fn smooth_step(x: f64) -> f64 {
    // H(x)/(H(x) + H(1-x)) with H(t) = exp(-1/t); one at x = 1, zero at x = 0.
    fn h(t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            (-1.0 / t).exp()
        }
    }
    let num = h(x);
    let den = num + h(1.0 - x);
    num / den
}

/// Summary statistics from sampling a partition over a box.
#[derive(Clone, Debug, Serialize)]
pub struct PartitionStats {
    pub n_centers: usize,
    pub n_samples: usize,
    pub coverage_fraction: f64,
    /// Largest `|sum_n psi_n^2 - 1|` over covered samples.
    pub partition_defect: f64,
    pub theta_sq_min: f64,
    pub theta_sq_max: f64,
    pub overlap_max: usize,
    pub overlap_bound: f64,
}

/// Sample `n_samples` points of the box, check coverage, the square-sum
/// identity, and the theta bounds; also report the worst ball-overlap count
/// at the support radius.
pub fn verify_partition(
    pou: &PartitionOfUnity,
    lo: &[f64],
    hi: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<PartitionStats> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = lo.len();
    let mut covered = 0usize;
    let mut defect: f64 = 0.0;
    let mut theta_min = f64::INFINITY;
    let mut theta_max: f64 = 0.0;
    for _ in 0..n_samples {
        let g: Vec<f64> = (0..d).map(|i| rng.gen_range(lo[i]..hi[i])).collect();
        if !pou.is_covered(&g)? {
            continue;
        }
        covered += 1;
        let theta_sq = pou.theta_sq(&g)?;
        theta_min = theta_min.min(theta_sq);
        theta_max = theta_max.max(theta_sq);
        let sum_sq: f64 = pou.psi_all(&g)?.iter().map(|v| v * v).sum();
        defect = defect.max((sum_sq - 1.0).abs());
    }
    let radius = pou.spec.eps * pou.spec.n_mult as f64;
    let overlaps = overlap_counts(&pou.alg, &pou.centers, radius)?;
    let bound = (4.0 * pou.spec.n_mult as f64 + 1.0)
        .powi(pou.alg.homogeneous_dimension() as i32);
    Ok(PartitionStats {
        n_centers: pou.centers.len(),
        n_samples,
        coverage_fraction: covered as f64 / n_samples as f64,
        partition_defect: defect,
        theta_sq_min: theta_min,
        theta_sq_max: theta_max,
        overlap_max: overlaps.into_iter().max().unwrap_or(0),
        overlap_bound: bound,
    })
}

/// Largest observed `|gh| / (|g| + |h|)` over random pairs; values above one
/// quantify the failure of the plain triangle inequality.
pub fn empirical_quasi_triangle(
    alg: &Arc<GradedLieAlgebra>,
    scale: f64,
    n_pairs: usize,
    seed: u64,
) -> Result<f64> {
    let norm = HomogeneousNorm::new(alg.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = alg.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..n_pairs {
        let g = GroupElement::new((0..d).map(|_| rng.gen_range(-scale..scale)).collect());
        let h = GroupElement::new((0..d).map(|_| rng.gen_range(-scale..scale)).collect());
        let prod = alg.bch_multiply(&g, &h)?;
        let ratio = norm.norm(&prod.coords) / (norm.norm(&g.coords) + norm.norm(&h.coords));
        worst = worst.max(ratio);
    }
    Ok(worst)
}

/// Monte-Carlo Haar (Lebesgue) measure of the ball `B(0, r)`, sampled inside
/// the anisotropic enclosing box with half-widths `r^(degree of axis)`.
pub fn ball_measure(
    alg: &Arc<GradedLieAlgebra>,
    r: f64,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    let norm = HomogeneousNorm::new(alg.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = alg.dim();
    let half: Vec<f64> = alg
        .degrees()
        .iter()
        .map(|&deg| r.powi(deg as i32))
        .collect();
    let box_vol: f64 = half.iter().map(|h| 2.0 * h).product();
    let mut inside = 0usize;
    for _ in 0..n_samples {
        let g: Vec<f64> = (0..d).map(|i| rng.gen_range(-half[i]..half[i])).collect();
        if norm.norm(&g) < r {
            inside += 1;
        }
    }
    Ok(box_vol * inside as f64 / n_samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::flow_word_derivative;
    use approx::assert_abs_diff_eq;

    fn heis() -> Arc<GradedLieAlgebra> {
        GradedLieAlgebra::builtin("heisenberg1").unwrap()
    }

    #[test]
    fn norm_formula_on_heisenberg() {
        let alg = heis();
        let norm = HomogeneousNorm::new(alg.clone());
        assert_eq!(norm.exponent(), 4);
        assert_abs_diff_eq!(norm.norm(&[1.0, 0.0, 0.0]), 1.0, epsilon = 1e-14);
        assert_eq!(norm.norm(&[0.0, 0.0, 0.0]), 0.0);
        let v = [0.7, -0.4, 0.9];
        let expect = ((0.7f64.powi(2) + 0.4f64.powi(2)).powi(2) + 0.9f64.powi(2)).powf(0.25);
        assert_abs_diff_eq!(norm.norm(&v), expect, epsilon = 1e-14);
    }

    #[test]
    fn norm_invariants() {
        let alg = heis();
        let norm = HomogeneousNorm::new(alg.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let g = GroupElement::new((0..3).map(|_| rng.gen_range(-2.0..2.0)).collect());
            let t = rng.gen_range(0.1..4.0);
            let dil = alg.dilate_element(t, &g).unwrap();
            assert_abs_diff_eq!(norm.norm(&dil.coords), t * norm.norm(&g.coords), epsilon = 1e-10);
            assert_abs_diff_eq!(
                norm.norm(&g.inverse().coords),
                norm.norm(&g.coords),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn dist_right_invariance() {
        let alg = heis();
        let norm = HomogeneousNorm::new(alg.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let g1 = GroupElement::new((0..3).map(|_| rng.gen_range(-2.0..2.0)).collect());
            let g2 = GroupElement::new((0..3).map(|_| rng.gen_range(-2.0..2.0)).collect());
            let h = GroupElement::new((0..3).map(|_| rng.gen_range(-2.0..2.0)).collect());
            let d0 = norm.dist(&g1, &g2).unwrap();
            let d1 = norm
                .dist(
                    &alg.bch_multiply(&g1, &h).unwrap(),
                    &alg.bch_multiply(&g2, &h).unwrap(),
                )
                .unwrap();
            assert_abs_diff_eq!(d0, d1, epsilon = 1e-10);
        }
    }

    #[test]
    fn greedy_net_one_dimensional() {
        let alg = GradedLieAlgebra::builtin("abelian(1,(1))").unwrap();
        let centers = greedy_net(&alg, &[0.0], &[10.0], 2.0, 100_000, 1).unwrap();
        // Pairwise separation at least eps.
        let norm = HomogeneousNorm::new(alg.clone());
        for (i, a) in centers.iter().enumerate() {
            for b in centers.iter().skip(i + 1) {
                assert!(norm.dist(a, b).unwrap() >= 2.0 - 1e-12);
            }
        }
        // Coverage at radius eps on samples.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..500 {
            let p = GroupElement::new(vec![rng.gen_range(0.0..10.0)]);
            assert!(centers.iter().any(|c| norm.dist(&p, c).unwrap() < 2.0));
        }
        // Interval of length 10 with separation 2: at most 6 centers, and each
        // radius-2 ball meets at most 5 others (the 1-d bound 5^1).
        assert!(centers.len() <= 6);
        let overlaps = overlap_counts(&alg, &centers, 2.0).unwrap();
        assert!(overlaps.into_iter().max().unwrap() <= 5);
    }

    #[test]
    fn single_point_region() {
        let alg = heis();
        let centers = greedy_net(&alg, &[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0], 0.5, 1000, 1).unwrap();
        assert_eq!(centers.len(), 1);
        assert_eq!(centers[0].coords, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn budget_guard() {
        let alg = heis();
        let r = greedy_net(&alg, &[-4.0; 3], &[4.0; 3], 0.001, 10_000, 1);
        assert!(matches!(r, Err(CoreError::NetBudgetExceeded { .. })));
    }

    #[test]
    fn partition_identity_and_theta() {
        let alg = heis();
        let centers = greedy_net(&alg, &[-2.0; 3], &[2.0; 3], 1.0, 200_000, 7).unwrap();
        let pou = PartitionOfUnity::build(
            alg.clone(),
            centers,
            BumpSpec {
                eps: 1.0,
                n_mult: 2,
            },
        );
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let g: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.5..1.5)).collect();
            if !pou.is_covered(&g).unwrap() {
                continue;
            }
            let vals = pou.psi_all(&g).unwrap();
            let sum_sq: f64 = vals.iter().map(|v| v * v).sum();
            assert!((sum_sq - 1.0).abs() < 1e-12);
            let theta_sq = pou.theta_sq(&g).unwrap();
            assert!(theta_sq >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn single_center_covering_everything() {
        let alg = heis();
        let center = GroupElement::zero(3);
        let pou = PartitionOfUnity::build(
            alg.clone(),
            vec![center],
            BumpSpec {
                eps: 5.0,
                n_mult: 2,
            },
        );
        // Inside the flat region the lone normalized bump is identically one.
        for g in [[0.0, 0.0, 0.0], [0.5, -0.5, 0.3], [1.0, 1.0, 1.0]] {
            assert_abs_diff_eq!(pou.psi(0, &g).unwrap(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn outside_covered_region_errors() {
        let alg = heis();
        let pou = PartitionOfUnity::build(
            alg.clone(),
            vec![GroupElement::zero(3)],
            BumpSpec {
                eps: 0.5,
                n_mult: 2,
            },
        );
        assert!(matches!(
            pou.psi_all(&[50.0, 0.0, 0.0]),
            Err(CoreError::OutsideCoveredRegion)
        ));
    }

    #[test]
    fn ball_measure_scaling() {
        let alg = heis();
        // Haar measure of B(0, r) should scale like r^4.
        let m1 = ball_measure(&alg, 1.0, 200_000, 5).unwrap();
        let m2 = ball_measure(&alg, 2.0, 200_000, 6).unwrap();
        let ratio = m2 / m1;
        assert!(
            (ratio / 16.0 - 1.0).abs() < 0.05,
            "measured scaling {ratio}, expected 16"
        );
    }

    #[test]
    fn quasi_triangle_is_moderate() {
        let alg = heis();
        let q = empirical_quasi_triangle(&alg, 2.0, 2000, 9).unwrap();
        assert!(q > 0.5 && q < 1.5, "quasi-triangle constant {q}");
    }

    #[test]
    fn bump_flow_derivatives_bounded() {
        // Finite-difference X^alpha psi_n stays bounded across n for short words.
        let alg = heis();
        let centers = greedy_net(&alg, &[-2.0; 3], &[2.0; 3], 1.0, 200_000, 13).unwrap();
        let pou = Arc::new(PartitionOfUnity::build(
            alg.clone(),
            centers,
            BumpSpec {
                eps: 1.0,
                n_mult: 2,
            },
        ));
        let words: Vec<Vec<usize>> = vec![vec![0], vec![1], vec![0, 1], vec![0, 0], vec![1, 1]];
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let g: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if !pou.is_covered(&g).unwrap() {
                continue;
            }
            for word in &words {
                let mut sum_sq = 0.0;
                for n in 0..pou.centers().len() {
                    let pou2 = pou.clone();
                    let f = move |c: &[f64]| pou2.psi(n, c).unwrap_or(0.0);
                    let d = flow_word_derivative(
                        &alg,
                        word,
                        &f,
                        &GroupElement::new(g.clone()),
                        1e-3,
                    )
                    .unwrap();
                    sum_sq += d * d;
                }
                worst = worst.max(sum_sq);
            }
        }
        assert!(worst.is_finite());
        assert!(worst < 1e4, "derivative sum {worst}");
    }
}
