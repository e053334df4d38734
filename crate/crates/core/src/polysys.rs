//! Homogeneous polynomial systems in the dense list-of-monomials form.
//!
//! Equation `i` of a system in `H_(d)` is `f_i = sum_a f_{i,a} z^a` over exponent
//! vectors `a` of total degree `d_i`. Monomials are kept in canonical order
//! (graded lexicographic, largest first) with duplicate exponents merged, so the
//! Bombieri-Weyl inner product is a merge-join over two sorted lists.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub exponents: Vec<u32>,
    pub coeff: C64,
}

impl Monomial {
    pub fn new(exponents: Vec<u32>, coeff: C64) -> Self {
        Self { exponents, coeff }
    }

    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }
}

fn grlex_desc(a: &[u32], b: &[u32]) -> Ordering {
    let (da, db): (u32, u32) = (a.iter().sum(), b.iter().sum());
    db.cmp(&da).then_with(|| b.cmp(a))
}

pub(crate) fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// Bombieri-Weyl weight `a_0! ... a_n! / d!` of one monomial.
pub fn bw_weight(exponents: &[u32]) -> f64 {
    let d: u32 = exponents.iter().sum();
    exponents.iter().map(|&a| factorial(a)).product::<f64>() / factorial(d)
}

/// All exponent vectors of total degree `d` in `nvars` variables, in canonical order.
pub fn exponents_of_degree(nvars: usize, d: u32) -> Vec<Vec<u32>> {
    fn rec(nvars: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == nvars {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for a in (0..=left).rev() {
            prefix.push(a);
            rec(nvars, left - a, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if nvars > 0 {
        rec(nvars, d, &mut Vec::with_capacity(nvars), &mut out);
    }
    out
}

/// A system `f = (f_1, ..., f_n)` of homogeneous polynomials in `n + 1` variables.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousSystem {
    degrees: Vec<u32>,
    equations: Vec<Vec<Monomial>>,
}

impl HomogeneousSystem {
    /// Validates degrees and exponents, then sorts and merges each equation.
    pub fn new(degrees: Vec<u32>, equations: Vec<Vec<Monomial>>) -> Result<Self> {
        let n = degrees.len();
        if n == 0 {
            return Err(Error::InvalidSystem(
                "a system needs at least one equation".into(),
            ));
        }
        if equations.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: equations.len(),
            });
        }
        if let Some(i) = degrees.iter().position(|&d| d == 0) {
            return Err(Error::InvalidSystem(format!("equation {i} has degree 0")));
        }
        let mut canonical = Vec::with_capacity(n);
        for (i, (eq, &d)) in equations.into_iter().zip(&degrees).enumerate() {
            let mut merged: BTreeMap<Vec<u32>, C64> = BTreeMap::new();
            for m in eq {
                if m.exponents.len() != n + 1 {
                    return Err(Error::DimensionMismatch {
                        expected: n + 1,
                        found: m.exponents.len(),
                    });
                }
                if m.degree() != d {
                    return Err(Error::InvalidSystem(format!(
                        "monomial {:?} in equation {i} has degree {}, expected {d}",
                        m.exponents,
                        m.degree()
                    )));
                }
                *merged.entry(m.exponents).or_default() += m.coeff;
            }
            let mut terms: Vec<Monomial> = merged
                .into_iter()
                .map(|(exponents, coeff)| Monomial { exponents, coeff })
                .collect();
            terms.sort_by(|a, b| grlex_desc(&a.exponents, &b.exponents));
            canonical.push(terms);
        }
        Ok(Self {
            degrees,
            equations: canonical,
        })
    }

    /// Convenience constructor from `(exponents, coefficient)` pairs.
    pub fn from_terms(degrees: &[u32], terms: Vec<Vec<(Vec<u32>, C64)>>) -> Result<Self> {
        let equations = terms
            .into_iter()
            .map(|eq| eq.into_iter().map(|(e, c)| Monomial::new(e, c)).collect())
            .collect();
        Self::new(degrees.to_vec(), equations)
    }

    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    pub fn nvars(&self) -> usize {
        self.degrees.len() + 1
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    /// `D = max d_i`.
    pub fn max_degree(&self) -> u32 {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    pub fn equations(&self) -> &[Vec<Monomial>] {
        &self.equations
    }

    pub fn num_terms(&self) -> usize {
        self.equations.iter().map(Vec::len).sum()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.degrees == other.degrees
    }

    fn check_point(&self, x: &[C64]) -> Result<()> {
        if x.len() != self.nvars() {
            return Err(Error::DimensionMismatch {
                expected: self.nvars(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Table `pow[j * (D + 1) + e] = x_j^e`.
    fn powers(&self, x: &[C64]) -> Vec<C64> {
        let stride = self.max_degree() as usize + 1;
        let mut table = Vec::with_capacity(x.len() * stride);
        for &xj in x {
            let mut p = C64::new(1.0, 0.0);
            for _ in 0..stride {
                table.push(p);
                p *= xj;
            }
        }
        table
    }

    /// `f(x)` by direct monomial summation.
    pub fn evaluate(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.check_point(x)?;
        Ok(self.evaluate_unchecked(x))
    }

    pub(crate) fn evaluate_unchecked(&self, x: &[C64]) -> Vec<C64> {
        let stride = self.max_degree() as usize + 1;
        let pow = self.powers(x);
        self.equations
            .iter()
            .map(|eq| {
                eq.iter()
                    .map(|m| {
                        m.exponents
                            .iter()
                            .enumerate()
                            .fold(m.coeff, |acc, (j, &a)| acc * pow[j * stride + a as usize])
                    })
                    .sum()
            })
            .collect()
    }

    /// The `n x (n+1)` matrix of partial derivatives, by exact differentiation of each monomial.
    pub fn jacobian(&self, x: &[C64]) -> Result<CMat> {
        self.check_point(x)?;
        Ok(self.jacobian_unchecked(x))
    }

    pub(crate) fn jacobian_unchecked(&self, x: &[C64]) -> CMat {
        let stride = self.max_degree() as usize + 1;
        let pow = self.powers(x);
        let nv = self.nvars();
        let mut jac = CMat::zeros(self.n(), nv);
        for (i, eq) in self.equations.iter().enumerate() {
            for m in eq {
                for j in 0..nv {
                    let aj = m.exponents[j];
                    if aj == 0 {
                        continue;
                    }
                    let mut term = m.coeff * f64::from(aj);
                    for (l, &al) in m.exponents.iter().enumerate() {
                        let e = if l == j { al - 1 } else { al };
                        term *= pow[l * stride + e as usize];
                    }
                    jac[(i, j)] += term;
                }
            }
        }
        jac
    }

    /// `(D^k f(x) / k!)(v, ..., v)` for `2 <= k <= D`.
    pub fn higher_derivative_apply(&self, x: &[C64], k: usize, v: &[C64]) -> Result<Vec<C64>> {
        self.check_point(x)?;
        self.check_point(v)?;
        let max = self.max_degree() as usize;
        if k < 2 || k > max {
            return Err(Error::OrderOutOfRange { k, min: 2, max });
        }
        Ok(self.taylor_term(x, k, v))
    }

    /// Degree-`k` Taylor term of `s -> f(x + s v)`, i.e. `(D^k f(x)/k!)(v^k)` for any `k`.
    ///
    /// For a monomial `z^a` this is `sum_{b <= a, |b| = k} prod_j C(a_j, b_j) x_j^(a_j-b_j) v_j^b_j`,
    /// which is the `b`-th partial derivative divided by `b!`.
    pub(crate) fn taylor_term(&self, x: &[C64], k: usize, v: &[C64]) -> Vec<C64> {
        let stride = self.max_degree() as usize + 1;
        let px = self.powers(x);
        let pv = self.powers(v);
        let nv = self.nvars();
        let mut out = vec![C64::new(0.0, 0.0); self.n()];
        let mut beta = vec![0u32; nv];
        for (i, eq) in self.equations.iter().enumerate() {
            if k as u32 > self.degrees[i] {
                continue;
            }
            for m in eq {
                let mut acc = C64::new(0.0, 0.0);
                enumerate_sub_exponents(&m.exponents, k as u32, 0, &mut beta, &mut |b| {
                    let mut term = C64::new(1.0, 0.0);
                    for j in 0..nv {
                        let (a, bj) = (m.exponents[j], b[j]);
                        term *= binomial(a, bj)
                            * px[j * stride + (a - bj) as usize]
                            * pv[j * stride + bj as usize];
                    }
                    acc += term;
                });
                out[i] += m.coeff * acc;
            }
        }
        out
    }

    /// Bombieri-Weyl Hermitian inner product, linear in `self`.
    pub fn bw_inner(&self, other: &Self) -> Result<C64> {
        if !self.same_shape(other) {
            return Err(Error::DegreeMismatch);
        }
        let mut total = C64::new(0.0, 0.0);
        for (ef, eg) in self.equations.iter().zip(&other.equations) {
            let (mut a, mut b) = (0, 0);
            while a < ef.len() && b < eg.len() {
                match grlex_desc(&ef[a].exponents, &eg[b].exponents) {
                    Ordering::Less => a += 1,
                    Ordering::Greater => b += 1,
                    Ordering::Equal => {
                        total += bw_weight(&ef[a].exponents) * ef[a].coeff * eg[b].coeff.conj();
                        a += 1;
                        b += 1;
                    }
                }
            }
        }
        Ok(total)
    }

    pub fn bw_norm(&self) -> f64 {
        self.equations
            .iter()
            .flatten()
            .map(|m| bw_weight(&m.exponents) * m.coeff.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scaled(&self, s: C64) -> Self {
        let equations = self
            .equations
            .iter()
            .map(|eq| {
                eq.iter()
                    .map(|m| Monomial::new(m.exponents.clone(), m.coeff * s))
                    .collect()
            })
            .collect();
        Self {
            degrees: self.degrees.clone(),
            equations,
        }
    }

    /// `f / ||f||` (the zero system is returned unchanged).
    pub fn normalized(&self) -> Self {
        let nrm = self.bw_norm();
        if nrm == 0.0 {
            self.clone()
        } else {
            self.scaled(C64::new(1.0 / nrm, 0.0))
        }
    }

    /// `a f + b g` over the union of the two supports.
    pub fn combine(a: C64, f: &Self, b: C64, g: &Self) -> Result<Self> {
        if !f.same_shape(g) {
            return Err(Error::DegreeMismatch);
        }
        let mut equations = Vec::with_capacity(f.n());
        for (ef, eg) in f.equations.iter().zip(&g.equations) {
            let mut out = Vec::with_capacity(ef.len().max(eg.len()));
            let (mut p, mut q) = (0, 0);
            while p < ef.len() || q < eg.len() {
                let ord = match (ef.get(p), eg.get(q)) {
                    (Some(x), Some(y)) => grlex_desc(&x.exponents, &y.exponents),
                    (Some(_), None) => Ordering::Less,
                    _ => Ordering::Greater,
                };
                match ord {
                    Ordering::Less => {
                        out.push(Monomial::new(ef[p].exponents.clone(), a * ef[p].coeff));
                        p += 1;
                    }
                    Ordering::Greater => {
                        out.push(Monomial::new(eg[q].exponents.clone(), b * eg[q].coeff));
                        q += 1;
                    }
                    Ordering::Equal => {
                        out.push(Monomial::new(
                            ef[p].exponents.clone(),
                            a * ef[p].coeff + b * eg[q].coeff,
                        ));
                        p += 1;
                        q += 1;
                    }
                }
            }
            equations.push(out);
        }
        Ok(Self {
            degrees: f.degrees.clone(),
            equations,
        })
    }

    /// `f o U`, re-expanded into canonical monomial form.
    pub fn compose_unitary(&self, u: &CMat) -> Result<Self> {
        let nv = self.nvars();
        if u.nrows() != nv || u.ncols() != nv {
            return Err(Error::DimensionMismatch {
                expected: nv,
                found: if u.nrows() != nv {
                    u.nrows()
                } else {
                    u.ncols()
                },
            });
        }
        let deviation = linalg::unitarity_defect(u);
        if deviation > 1e-12 {
            return Err(Error::NotUnitary { deviation });
        }
        self.compose_linear(u)
    }

    /// `f o A` for an arbitrary square matrix `A`.
    pub(crate) fn compose_linear(&self, u: &CMat) -> Result<Self> {
        let nv = self.nvars();
        let dmax = self.max_degree() as usize;
        // powers[j][e] = (sum_l u[j][l] z_l)^e as a sparse polynomial
        let mut powers: Vec<Vec<SparsePoly>> = Vec::with_capacity(nv);
        for j in 0..nv {
            let mut linear = SparsePoly::new();
            for l in 0..nv {
                if u[(j, l)] != C64::new(0.0, 0.0) {
                    let mut e = vec![0u32; nv];
                    e[l] = 1;
                    linear.insert(e, u[(j, l)]);
                }
            }
            let mut row = vec![SparsePoly::from([(vec![0u32; nv], C64::new(1.0, 0.0))])];
            for e in 1..=dmax {
                let next = poly_mul(&row[e - 1], &linear);
                row.push(next);
            }
            powers.push(row);
        }
        let mut equations = Vec::with_capacity(self.n());
        for eq in &self.equations {
            let mut acc = SparsePoly::new();
            for m in eq {
                let mut prod = SparsePoly::from([(vec![0u32; nv], m.coeff)]);
                for (j, &a) in m.exponents.iter().enumerate() {
                    if a > 0 {
                        prod = poly_mul(&prod, &powers[j][a as usize]);
                    }
                }
                for (e, c) in prod {
                    *acc.entry(e).or_default() += c;
                }
            }
            equations.push(acc.into_iter().map(|(e, c)| Monomial::new(e, c)).collect());
        }
        Self::new(self.degrees.clone(), equations)
    }
}

type SparsePoly = BTreeMap<Vec<u32>, C64>;

fn poly_mul(p: &SparsePoly, q: &SparsePoly) -> SparsePoly {
    let mut out = SparsePoly::new();
    for (ep, cp) in p {
        for (eq, cq) in q {
            let e: Vec<u32> = ep.iter().zip(eq).map(|(a, b)| a + b).collect();
            *out.entry(e).or_default() += cp * cq;
        }
    }
    out
}

fn enumerate_sub_exponents(
    alpha: &[u32],
    left: u32,
    j: usize,
    beta: &mut [u32],
    visit: &mut dyn FnMut(&[u32]),
) {
    if j + 1 == alpha.len() {
        if left <= alpha[j] {
            beta[j] = left;
            visit(beta);
        }
        return;
    }
    let rest: u32 = alpha[j + 1..].iter().sum();
    let lo = left.saturating_sub(rest);
    for b in lo..=alpha[j].min(left) {
        beta[j] = b;
        enumerate_sub_exponents(alpha, left - b, j + 1, beta, visit);
    }
}

/// A nonzero vector of `C^{n+1}` standing for a point of projective space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<C64>", into = "Vec<C64>")]
pub struct ProjectivePoint(Vec<C64>);

impl ProjectivePoint {
    pub fn new(coords: Vec<C64>) -> Result<Self> {
        if coords.iter().all(|z| *z == C64::new(0.0, 0.0)) {
            return Err(Error::ZeroVector);
        }
        Ok(Self(coords))
    }

    pub fn from_real(coords: &[f64]) -> Result<Self> {
        Self::new(coords.iter().map(|&r| C64::new(r, 0.0)).collect())
    }

    /// The `j`-th coordinate vector of `C^{nvars}`.
    pub fn unit(nvars: usize, j: usize) -> Self {
        let mut v = vec![C64::new(0.0, 0.0); nvars];
        v[j] = C64::new(1.0, 0.0);
        Self(v)
    }

    pub fn coords(&self) -> &[C64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<C64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.0)
    }

    pub fn normalized(&self) -> Self {
        let s = 1.0 / self.norm();
        Self(self.0.iter().map(|z| z * s).collect())
    }
}

impl Deref for ProjectivePoint {
    type Target = [C64];

    fn deref(&self) -> &[C64] {
        &self.0
    }
}

impl TryFrom<Vec<C64>> for ProjectivePoint {
    type Error = Error;

    fn try_from(v: Vec<C64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ProjectivePoint> for Vec<C64> {
    fn from(p: ProjectivePoint) -> Vec<C64> {
        p.0
    }
}
