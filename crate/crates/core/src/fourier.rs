//! Sparse Fourier polynomials over {−1,1}^d: evaluation, symbolic
//! composition, and the degree/sparsity bound checks for compositions.
//!
//! Variable subsets are bitmasks (d ≤ 64), so character multiplication is a
//! single XOR. Coefficients are exact rationals: floating drift could fake a
//! zero coefficient and understate sparsity, and the bound checks need exact
//! counts. Floating evaluation is offered separately for speed.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FourierError {
    #[error("point entries must be ±1, got {0}")]
    BadPoint(f64),
    #[error("composition needs {expected} inner polynomials, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("inner polynomials must share one dimension ({0})")]
    MixedInnerDims(String),
    #[error("bad polynomial: {0}")]
    Parse(String),
}

/// A polynomial Σ_S f̂(S)·Π_{i∈S} xᵢ with exact rational coefficients.
/// Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FourierPoly {
    dim: usize,
    terms: BTreeMap<u64, BigRational>,
}

impl FourierPoly {
    pub fn zero(dim: usize) -> FourierPoly {
        assert!(dim <= 64);
        FourierPoly {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: BigRational) -> FourierPoly {
        let mut p = FourierPoly::zero(dim);
        p.add_term(0, c);
        p
    }

    /// The coordinate projection xᵢ.
    pub fn variable(dim: usize, i: usize) -> FourierPoly {
        assert!(i < dim);
        let mut p = FourierPoly::zero(dim);
        p.add_term(1u64 << i, BigRational::one());
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, &BigRational)> {
        self.terms.iter().map(|(&m, c)| (m, c))
    }

    pub fn coefficient(&self, mask: u64) -> BigRational {
        self.terms
            .get(&mask)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    /// Accumulate a coefficient onto the subset `mask`, dropping exact zeros.
    pub fn add_term(&mut self, mask: u64, coeff: BigRational) {
        debug_assert!(self.dim == 64 || mask < (1u64 << self.dim));
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(mask).or_insert_with(BigRational::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.terms.remove(&mask);
        }
    }

    /// Number of nonzero coefficients.
    pub fn sparsity(&self) -> usize {
        self.terms.len()
    }

    /// Largest subset size with a nonzero coefficient (0 for the zero poly).
    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|m| m.count_ones() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Union of all subsets in the support.
    pub fn active_variables(&self) -> Vec<usize> {
        let union = self.terms.keys().fold(0u64, |acc, m| acc | m);
        (0..self.dim).filter(|i| (union >> i) & 1 == 1).collect()
    }

    /// Whether the polynomial depends on at most `k` coordinates.
    pub fn is_sparse_in_variables(&self, k: usize) -> bool {
        self.active_variables().len() <= k
    }

    /// Exact evaluation at a cube point (entries ±1).
    pub fn evaluate(&self, x: &[i8]) -> Result<BigRational, FourierError> {
        if x.len() != self.dim {
            return Err(FourierError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if let Some(&bad) = x.iter().find(|&&v| v != 1 && v != -1) {
            return Err(FourierError::BadPoint(f64::from(bad)));
        }
        let mut acc = BigRational::zero();
        for (&mask, coeff) in &self.terms {
            let mut sign = 1i8;
            for (i, &xi) in x.iter().enumerate() {
                if (mask >> i) & 1 == 1 {
                    sign *= xi;
                }
            }
            if sign == 1 {
                acc += coeff;
            } else {
                acc -= coeff;
            }
        }
        Ok(acc)
    }

    /// Evaluate the polynomial form at arbitrary rational arguments.
    pub fn evaluate_at(&self, args: &[BigRational]) -> Result<BigRational, FourierError> {
        if args.len() != self.dim {
            return Err(FourierError::DimensionMismatch {
                expected: self.dim,
                got: args.len(),
            });
        }
        let mut acc = BigRational::zero();
        for (&mask, coeff) in &self.terms {
            let mut prod = coeff.clone();
            for (i, arg) in args.iter().enumerate() {
                if (mask >> i) & 1 == 1 {
                    prod *= arg;
                }
            }
            acc += prod;
        }
        Ok(acc)
    }

    /// Fast inexact evaluation.
    pub fn evaluate_f64(&self, x: &[f64]) -> Result<f64, FourierError> {
        if x.len() != self.dim {
            return Err(FourierError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut acc = 0.0;
        for (&mask, coeff) in &self.terms {
            let mut prod = coeff.to_f64().unwrap_or(f64::NAN);
            for (i, &xi) in x.iter().enumerate() {
                if (mask >> i) & 1 == 1 {
                    prod *= xi;
                }
            }
            acc += prod;
        }
        Ok(acc)
    }

    /// Product of two polynomials over the same cube; characters multiply by
    /// symmetric difference (xᵢ² = 1).
    pub fn mul(&self, other: &FourierPoly) -> FourierPoly {
        assert_eq!(self.dim, other.dim);
        let mut out = FourierPoly::zero(self.dim);
        for (&ma, ca) in &self.terms {
            for (&mb, cb) in &other.terms {
                out.add_term(ma ^ mb, ca * cb);
            }
        }
        out
    }

    pub fn add(&self, other: &FourierPoly) -> FourierPoly {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (&m, c) in &other.terms {
            out.add_term(m, c.clone());
        }
        out
    }

    pub fn scale(&self, c: &BigRational) -> FourierPoly {
        let mut out = FourierPoly::zero(self.dim);
        for (&m, coeff) in &self.terms {
            out.add_term(m, coeff * c);
        }
        out
    }

    pub fn to_json(&self) -> String {
        let file = PolyFile {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(&m, c)| TermFile {
                    vars: (0..self.dim).filter(|i| (m >> i) & 1 == 1).collect(),
                    coeff: c.to_string(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("poly serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<FourierPoly, FourierError> {
        let file: PolyFile =
            serde_json::from_str(s).map_err(|e| FourierError::Parse(format!("bad JSON: {e}")))?;
        if file.dim > 64 {
            return Err(FourierError::Parse("dim must be at most 64".into()));
        }
        let mut p = FourierPoly::zero(file.dim);
        for t in file.terms {
            let mut mask = 0u64;
            for v in t.vars {
                if v >= file.dim {
                    return Err(FourierError::Parse(format!("variable {v} out of range")));
                }
                mask |= 1 << v;
            }
            let coeff = BigRational::from_str(&t.coeff)
                .map_err(|e| FourierError::Parse(format!("bad coefficient {:?}: {e}", t.coeff)))?;
            p.add_term(mask, coeff);
        }
        Ok(p)
    }
}

#[derive(Serialize, Deserialize)]
struct TermFile {
    vars: Vec<usize>,
    coeff: String,
}

#[derive(Serialize, Deserialize)]
struct PolyFile {
    dim: usize,
    terms: Vec<TermFile>,
}

/// Symbolic substitution h(x) = f(g₁(x), …, g_d(x)).
pub fn compose(f: &FourierPoly, gs: &[FourierPoly]) -> Result<FourierPoly, FourierError> {
    if gs.len() != f.dim {
        return Err(FourierError::DimensionMismatch {
            expected: f.dim,
            got: gs.len(),
        });
    }
    let inner_dim = gs.first().map_or(0, FourierPoly::dim);
    if gs.iter().any(|g| g.dim() != inner_dim) {
        return Err(FourierError::MixedInnerDims(format!(
            "{:?}",
            gs.iter().map(FourierPoly::dim).collect::<Vec<_>>()
        )));
    }
    let mut h = FourierPoly::zero(inner_dim);
    for (&mask, coeff) in &f.terms {
        let mut prod = FourierPoly::constant(inner_dim, BigRational::one());
        for (i, g) in gs.iter().enumerate() {
            if (mask >> i) & 1 == 1 {
                prod = prod.mul(g);
            }
        }
        h = h.add(&prod.scale(coeff));
    }
    Ok(h)
}

/// The two theorem bounds on a composition, evaluated exactly.
#[derive(Clone, Debug)]
pub struct BoundsReport {
    pub deg_h: usize,
    /// k·k′.
    pub deg_bound: usize,
    pub sparsity_h: usize,
    /// s·(s′)^k.
    pub bound_product: BigUint,
    /// Σ_{j=0}^{min(d′, k·k′)} C(d′, j).
    pub bound_binomial: BigUint,
    pub deg_ok: bool,
    pub sparsity_ok: bool,
}

impl BoundsReport {
    pub fn pass(&self) -> bool {
        self.deg_ok && self.sparsity_ok
    }
}

fn binomial(n: usize, k: usize) -> BigUint {
    let mut acc = BigUint::one();
    for j in 0..k.min(n) {
        acc = acc * BigUint::from(n - j) / BigUint::from(j + 1);
    }
    if k > n {
        BigUint::zero()
    } else {
        acc
    }
}

/// Check deg(h) ≤ k·k′ and s(h) ≤ min{s·(s′)^k, Σ C(d′,j)} for h = f ∘ g.
pub fn check_bounds(f: &FourierPoly, gs: &[FourierPoly], h: &FourierPoly) -> BoundsReport {
    let k = f.degree();
    let k_prime = gs.iter().map(FourierPoly::degree).max().unwrap_or(0);
    let s = f.sparsity();
    let s_prime = gs.iter().map(FourierPoly::sparsity).max().unwrap_or(0);
    let d_prime = gs.first().map_or(0, FourierPoly::dim);

    let deg_bound = k * k_prime;
    let bound_product = BigUint::from(s) * BigUint::from(s_prime).pow(k as u32);
    let mut bound_binomial = BigUint::zero();
    for j in 0..=deg_bound.min(d_prime) {
        bound_binomial += binomial(d_prime, j);
    }
    let sparsity = BigUint::from(h.sparsity());
    BoundsReport {
        deg_h: h.degree(),
        deg_bound,
        sparsity_h: h.sparsity(),
        deg_ok: h.degree() <= deg_bound,
        sparsity_ok: sparsity <= bound_product.clone().min(bound_binomial.clone()),
        bound_product,
        bound_binomial,
    }
}

/// A random polynomial with at most `max_terms` nonzero coefficients of
/// degree at most `max_degree`; coefficients are small nonzero rationals.
pub fn random_poly(
    dim: usize,
    max_terms: usize,
    max_degree: usize,
    rng: &mut impl rand::Rng,
) -> FourierPoly {
    let mut p = FourierPoly::zero(dim);
    let want = rng.gen_range(1..=max_terms);
    for _ in 0..want {
        let size = rng.gen_range(0..=max_degree.min(dim));
        let mut mask = 0u64;
        while (mask.count_ones() as usize) < size {
            mask |= 1 << rng.gen_range(0..dim);
        }
        let num = loop {
            let v = rng.gen_range(-6i64..=6);
            if v != 0 {
                break v;
            }
        };
        let den = rng.gen_range(1i64..=4);
        p.add_term(mask, BigRational::new(num.into(), den.into()));
    }
    p
}

/// One instance of the randomized composition sweep.
#[derive(Clone, Debug)]
pub struct SweepInstance {
    pub pointwise_ok: bool,
    pub bounds: BoundsReport,
    /// s(h) relative to the smaller sparsity bound.
    pub tightness: f64,
}

/// Randomized sweep: compose random sparse polynomials, check the pointwise
/// oracle exhaustively and both theorem bounds, and report the worst-case
/// tightness ratio observed.
pub fn composition_sweep(instances: usize, seed: u64) -> Vec<SweepInstance> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(instances);
    for _ in 0..instances {
        let d = rng.gen_range(1..=8usize);
        let d_prime = rng.gen_range(1..=8usize);
        let f = random_poly(d, 3, d.min(3), &mut rng);
        let gs: Vec<FourierPoly> = (0..d)
            .map(|_| random_poly(d_prime, 3, d_prime.min(3), &mut rng))
            .collect();
        let h = compose(&f, &gs).expect("dimensions match by construction");

        let mut pointwise_ok = true;
        for idx in 0..(1u64 << d_prime) {
            let x: Vec<i8> = (0..d_prime)
                .map(|i| if (idx >> i) & 1 == 1 { 1 } else { -1 })
                .collect();
            let inner: Result<Vec<BigRational>, _> = gs.iter().map(|g| g.evaluate(&x)).collect();
            let nested = f.evaluate_at(&inner.expect("±1 points are valid"));
            if h.evaluate(&x).expect("±1 points are valid") != nested.expect("dims match") {
                pointwise_ok = false;
                break;
            }
        }
        let bounds = check_bounds(&f, &gs, &h);
        let min_bound = bounds
            .bound_product
            .clone()
            .min(bounds.bound_binomial.clone())
            .to_f64()
            .unwrap_or(f64::INFINITY);
        let tightness = if min_bound > 0.0 {
            bounds.sparsity_h as f64 / min_bound
        } else {
            0.0
        };
        out.push(SweepInstance {
            pointwise_ok,
            bounds,
            tightness,
        });
    }
    out
}
