//! Minimal multivariate polynomials with `f64` coefficients.
//!
//! These back the exact flow computations: coordinates of a BCH product are
//! polynomial in the inputs, so directional derivatives of coefficient
//! expressions along group flows can be produced symbolically instead of by
//! numerical differentiation.

use std::collections::BTreeMap;

/// A polynomial in `nvars` variables, stored as a sparse exponent map.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Poly::zero(nvars);
        if c != 0.0 {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    /// The monomial `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars);
        let mut exps = vec![0; nvars];
        exps[i] = 1;
        let mut p = Poly::zero(nvars);
        p.terms.insert(exps, 1.0);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &f64)> {
        self.terms.iter()
    }

    fn insert(&mut self, exps: Vec<u32>, c: f64) {
        if c == 0.0 {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(exps) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == 0.0 {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn add_assign(&mut self, other: &Poly) {
        assert_eq!(self.nvars, other.nvars);
        for (e, c) in &other.terms {
            self.insert(e.clone(), *c);
        }
    }

    pub fn scale(&self, k: f64) -> Poly {
        if k == 0.0 {
            return Poly::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * k)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Poly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let exps: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.insert(exps, ca * cb);
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nvars);
        let mut acc = 0.0;
        for (exps, c) in &self.terms {
            let mut m = *c;
            for (xi, &e) in x.iter().zip(exps) {
                for _ in 0..e {
                    m *= xi;
                }
            }
            acc += m;
        }
        acc
    }

    /// Coefficient of `x_i^1`, as a polynomial with variable `i` removed.
    ///
    /// Terms with any other power of `x_i` are dropped.
    pub fn linear_coefficient(&self, i: usize) -> Poly {
        assert!(i < self.nvars);
        let mut out = Poly::zero(self.nvars - 1);
        for (exps, c) in &self.terms {
            if exps[i] != 1 {
                continue;
            }
            let mut reduced: Vec<u32> = Vec::with_capacity(self.nvars - 1);
            reduced.extend_from_slice(&exps[..i]);
            reduced.extend_from_slice(&exps[i + 1..]);
            out.insert(reduced, *c);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_and_eval() {
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let mut p = x.mul(&x);
        p.add_assign(&y.scale(3.0));
        assert_eq!(p.eval(&[2.0, 5.0]), 19.0);
        assert!(Poly::zero(2).is_zero());
    }

    #[test]
    fn linear_coefficient_extraction() {
        // p = 2 s x + s^2 y + 7 x, variables (s, x, y)
        let s = Poly::var(3, 0);
        let x = Poly::var(3, 1);
        let y = Poly::var(3, 2);
        let mut p = s.mul(&x).scale(2.0);
        p.add_assign(&s.mul(&s).mul(&y));
        p.add_assign(&x.scale(7.0));
        let lin = p.linear_coefficient(0);
        assert_eq!(lin, Poly::var(2, 0).scale(2.0));
    }
}
