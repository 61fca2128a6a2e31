//! Differential polynomials in the jet variables u_m^(k).
//!
//! Fields u_0 .. u_{r-2} carry formal x-derivatives of every order k >= 0.
//! Terms live in a BTreeMap keyed by monomial, so every polynomial has one
//! canonical representation and rendering is deterministic.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::{BigRational, One, Signed};

use super::scalar::Scalar;
use crate::error::{Error, Result};

/// The k-th x-derivative of the field u_m.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct JetVariable {
    pub m: u32,
    pub k: u32,
}

impl JetVariable {
    pub fn new(m: u32, k: u32) -> Self {
        JetVariable { m, k }
    }

    /// The variable one x-derivative up.
    pub fn bump(self) -> Self {
        JetVariable {
            m: self.m,
            k: self.k + 1,
        }
    }
}

impl fmt::Display for JetVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.k == 0 {
            write!(f, "u{}", self.m)
        } else {
            write!(f, "u{}_{}", self.m, self.k)
        }
    }
}

/// Product of jet variables with positive integer exponents.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Monomial {
    factors: BTreeMap<JetVariable, u32>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn var(v: JetVariable) -> Self {
        let mut factors = BTreeMap::new();
        factors.insert(v, 1);
        Monomial { factors }
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.factors.values().sum()
    }

    pub fn exponent(&self, v: JetVariable) -> u32 {
        self.factors.get(&v).copied().unwrap_or(0)
    }

    pub fn factors(&self) -> impl Iterator<Item = (JetVariable, u32)> + '_ {
        self.factors.iter().map(|(v, e)| (*v, *e))
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut factors = self.factors.clone();
        for (v, e) in &other.factors {
            *factors.entry(*v).or_insert(0) += e;
        }
        Monomial { factors }
    }

    /// Replaces one factor `from` by `to`; exponent of `from` must be positive.
    fn substitute_one(&self, from: JetVariable, to: JetVariable) -> Monomial {
        let mut factors = self.factors.clone();
        match factors.get_mut(&from) {
            Some(e) if *e > 1 => *e -= 1,
            Some(_) => {
                factors.remove(&from);
            }
            None => unreachable!("factor not present"),
        }
        *factors.entry(to).or_insert(0) += 1;
        Monomial { factors }
    }
}

impl Ord for Monomial {
    /// Degree first, then lexicographic on the (m, k)-sorted factor list.
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.factors.iter().cmp(other.factors.iter()))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        let mut first = true;
        for (v, e) in &self.factors {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if *e == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{v}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Polynomial in jet variables with `Scalar` coefficients, tied to a root
/// index r: only fields u_0 .. u_{r-2} are admissible.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DiffPolynomial {
    r: u32,
    terms: BTreeMap<Monomial, Scalar>,
}

impl DiffPolynomial {
    pub fn zero(r: u32) -> Self {
        DiffPolynomial {
            r,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(r: u32) -> Self {
        DiffPolynomial::constant(Scalar::one(r))
    }

    pub fn constant(c: Scalar) -> Self {
        let mut p = DiffPolynomial::zero(c.r());
        if !c.is_zero() {
            p.terms.insert(Monomial::one(), c);
        }
        p
    }

    pub fn from_rational(r: u32, q: BigRational) -> Self {
        DiffPolynomial::constant(Scalar::from_rational(r, q))
    }

    pub fn from_integer(r: u32, n: i64) -> Self {
        DiffPolynomial::constant(Scalar::from_integer(r, n))
    }

    /// The jet variable u_m^(k) as a polynomial.
    pub fn var(r: u32, m: u32, k: u32) -> Result<Self> {
        check_field_index(r, m)?;
        let mut p = DiffPolynomial::zero(r);
        p.terms.insert(Monomial::var(JetVariable::new(m, k)), Scalar::one(r));
        Ok(p)
    }

    /// Canonicalizing constructor: merges duplicate monomials, drops zeros,
    /// and validates field indices against r.
    pub fn from_terms<T>(r: u32, terms: T) -> Result<Self>
    where
        T: IntoIterator<Item = (Monomial, Scalar)>,
    {
        let mut p = DiffPolynomial::zero(r);
        for (mono, c) in terms {
            if c.r() != r {
                return Err(Error::MixedRootIndex { left: r, right: c.r() });
            }
            for (v, _) in mono.factors() {
                check_field_index(r, v.m)?;
            }
            p.add_term(mono, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, mono: Monomial, c: Scalar) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(mono) {
            Entry::Vacant(slot) => {
                slot.insert(c);
            }
            Entry::Occupied(mut slot) => {
                let sum = slot.get().try_add(&c).expect("same ring");
                if sum.is_zero() {
                    slot.remove();
                } else {
                    slot.insert(sum);
                }
            }
        }
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Monomial::is_one)
    }

    /// Coefficient of the empty monomial.
    pub fn constant_term(&self) -> Scalar {
        self.terms
            .get(&Monomial::one())
            .cloned()
            .unwrap_or_else(|| Scalar::zero(self.r))
    }

    pub fn coefficient(&self, mono: &Monomial) -> Scalar {
        self.terms
            .get(mono)
            .cloned()
            .unwrap_or_else(|| Scalar::zero(self.r))
    }

    /// True when every coefficient has vanishing I and S components.
    pub fn has_rational_coefficients(&self) -> bool {
        self.terms.values().all(Scalar::is_rational)
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    fn check_same_r(&self, other: &Self) -> Result<()> {
        if self.r == other.r {
            Ok(())
        } else {
            Err(Error::MixedRootIndex {
                left: self.r,
                right: other.r,
            })
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_r(other)?;
        let mut out = self.clone();
        for (mono, c) in &other.terms {
            out.add_term(mono.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.clone().neg())
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_same_r(other)?;
        let mut out = DiffPolynomial::zero(self.r);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca.try_mul(cb)?);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        if c.is_zero() {
            return DiffPolynomial::zero(self.r);
        }
        let mut out = DiffPolynomial::zero(self.r);
        for (mono, q) in &self.terms {
            out.add_term(mono.clone(), q.try_mul(c).expect("same ring"));
        }
        out
    }

    pub fn scale_rational(&self, q: &BigRational) -> Self {
        self.scale(&Scalar::from_rational(self.r, q.clone()))
    }

    /// Total x-derivative: the Leibniz extension of u_m^(k) -> u_m^(k+1),
    /// with scalars treated as constants.
    pub fn total_derivative(&self) -> Self {
        let mut out = DiffPolynomial::zero(self.r);
        for (mono, c) in &self.terms {
            for (v, e) in mono.factors() {
                let coeff = c.scale(&BigRational::from_integer(e.into()));
                out.add_term(mono.substitute_one(v, v.bump()), coeff);
            }
        }
        out
    }

    pub fn nth_derivative(&self, n: u32) -> Self {
        let mut out = self.clone();
        for _ in 0..n {
            out = out.total_derivative();
        }
        out
    }

    /// Formal partial derivative with respect to one jet variable.
    pub fn partial(&self, v: JetVariable) -> Self {
        let mut out = DiffPolynomial::zero(self.r);
        for (mono, c) in &self.terms {
            let e = mono.exponent(v);
            if e == 0 {
                continue;
            }
            let mut factors: BTreeMap<JetVariable, u32> = BTreeMap::new();
            for (w, exp) in mono.factors() {
                let exp = if w == v { exp - 1 } else { exp };
                if exp > 0 {
                    factors.insert(w, exp);
                }
            }
            out.add_term(
                Monomial { factors },
                c.scale(&BigRational::from_integer(e.into())),
            );
        }
        out
    }

    /// Substitutes exact rationals for the jet variables. Every variable that
    /// occurs must be assigned.
    pub fn evaluate(&self, assignment: &BTreeMap<JetVariable, BigRational>) -> Result<Scalar> {
        let mut acc = Scalar::zero(self.r);
        for (mono, c) in &self.terms {
            let mut value = BigRational::one();
            for (v, e) in mono.factors() {
                let x = assignment
                    .get(&v)
                    .ok_or_else(|| Error::MissingAssignment(v.to_string()))?;
                for _ in 0..e {
                    value *= x;
                }
            }
            acc = acc.try_add(&c.scale(&value))?;
        }
        Ok(acc)
    }

    /// Finds g with g' = self when self lies in the image of the total
    /// derivative, by eliminating the highest-ranked monomial at each step.
    pub fn x_antiderivative(&self) -> Option<Self> {
        let mut rest = self.clone();
        let mut out = DiffPolynomial::zero(self.r);
        while !rest.is_zero() {
            let (mu, c) = rest
                .terms
                .iter()
                .max_by(|a, b| deriv_rank(a.0, b.0))
                .map(|(m, c)| (m.clone(), c.clone()))
                .expect("nonzero polynomial has a maximal term");
            // Every term of a total derivative contains a variable of
            // positive k, and its top variable appears to the first power
            // with everything else at or below (k-1, m).
            let top = mu.factors().max_by_key(|(v, _)| (v.k, v.m))?;
            let (top_var, top_exp) = top;
            if top_var.k == 0 || top_exp > 1 {
                return None;
            }
            let pred = JetVariable::new(top_var.m, top_var.k - 1);
            for (v, _) in mu.factors() {
                if v != top_var && (v.k, v.m) > (pred.k, pred.m) {
                    return None;
                }
            }
            let nu = mu.substitute_one(top_var, pred);
            let weight = BigRational::from_integer(nu.exponent(pred).into());
            let piece = DiffPolynomial::from_terms(
                self.r,
                [(nu, c.scale(&weight.recip()))],
            )
            .expect("valid indices");
            rest = rest.try_sub(&piece.total_derivative()).expect("same ring");
            out = out.try_add(&piece).expect("same ring");
        }
        Some(out)
    }
}

fn check_field_index(r: u32, m: u32) -> Result<()> {
    if r < 2 {
        return Err(Error::RootIndexTooSmall(r));
    }
    if m > r - 2 {
        return Err(Error::FieldIndexOutOfRange { m, r, top: r - 2 });
    }
    Ok(())
}

/// Ranking used by `x_antiderivative`: compares the descending
/// ((k, m), exponent) factor lists, so bumping a monomial's top variable
/// strictly raises its rank.
fn deriv_rank(a: &Monomial, b: &Monomial) -> Ordering {
    let key = |m: &Monomial| {
        let mut v: Vec<((u32, u32), u32)> =
            m.factors().map(|(v, e)| ((v.k, v.m), e)).collect();
        v.sort_unstable_by(|x, y| y.cmp(x));
        v
    };
    key(a).cmp(&key(b))
}

impl Add for DiffPolynomial {
    type Output = DiffPolynomial;
    fn add(self, rhs: DiffPolynomial) -> DiffPolynomial {
        self.try_add(&rhs).expect("polynomial addition across root indices")
    }
}

impl Sub for DiffPolynomial {
    type Output = DiffPolynomial;
    fn sub(self, rhs: DiffPolynomial) -> DiffPolynomial {
        self.try_sub(&rhs).expect("polynomial subtraction across root indices")
    }
}

impl Mul for DiffPolynomial {
    type Output = DiffPolynomial;
    fn mul(self, rhs: DiffPolynomial) -> DiffPolynomial {
        self.try_mul(&rhs).expect("polynomial multiplication across root indices")
    }
}

impl Neg for DiffPolynomial {
    type Output = DiffPolynomial;
    fn neg(self) -> DiffPolynomial {
        let r = self.r;
        let terms = self
            .terms
            .into_iter()
            .map(|(m, c)| (m, c.neg()))
            .collect();
        DiffPolynomial { r, terms }
    }
}

impl fmt::Display for DiffPolynomial {
    /// Terms in ascending canonical order. Rational coefficients render bare
    /// with the sign pulled into the joiner; coefficients with I or S parts
    /// keep the parenthesized scalar form.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut body = String::new();
        for (mono, c) in &self.terms {
            if c.is_rational() {
                let q = c.rational_part();
                if body.is_empty() {
                    if q.is_negative() {
                        body.push('-');
                    }
                } else if q.is_negative() {
                    body.push_str(" - ");
                } else {
                    body.push_str(" + ");
                }
                let mag = q.abs();
                if mono.is_one() {
                    body.push_str(&mag.to_string());
                } else if mag.is_one() {
                    body.push_str(&mono.to_string());
                } else {
                    body.push_str(&format!("{mag}*{mono}"));
                }
            } else {
                if !body.is_empty() {
                    body.push_str(" + ");
                }
                if mono.is_one() {
                    body.push_str(&c.to_string());
                } else {
                    body.push_str(&format!("{c}*{mono}"));
                }
            }
        }
        write!(f, "{body}")
    }
}
