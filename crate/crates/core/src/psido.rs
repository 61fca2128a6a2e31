//! Truncated pseudodifferential operators in the symbol D.
//!
//! An operator is a finite sum of coefficients times powers of D together
//! with a watermark: the lowest order whose coefficient is certified.
//! Everything below the watermark has been dropped and may be anything;
//! exact operators carry no watermark at all. D acts on coefficients by
//! D∘f = f∘D + kappa*f' with kappa = I*S/r, and negative powers expand
//! through the generalized Leibniz rule, so composing two exact operators
//! is only possible when the expansion terminates; otherwise an operand
//! must be truncated first.

use std::collections::BTreeMap;
use std::fmt;

use num::{BigRational, One};

use crate::diffalg::{DiffPolynomial, Scalar};
use crate::error::{Error, Result};

/// Lowest certified order of a truncated operator; `Exact` plays -infinity.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Watermark {
    Exact,
    At(i64),
}

impl Watermark {
    pub fn is_exact(self) -> bool {
        matches!(self, Watermark::Exact)
    }

    pub fn floor(self) -> Option<i64> {
        match self {
            Watermark::Exact => None,
            Watermark::At(l) => Some(l),
        }
    }

    /// The higher (more restrictive) of two watermarks.
    pub fn join(self, other: Watermark) -> Watermark {
        match (self, other) {
            (Watermark::Exact, w) | (w, Watermark::Exact) => w,
            (Watermark::At(a), Watermark::At(b)) => Watermark::At(a.max(b)),
        }
    }

    fn certifies(self, order: i64) -> bool {
        match self {
            Watermark::Exact => true,
            Watermark::At(l) => order >= l,
        }
    }
}

impl fmt::Display for Watermark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Watermark::Exact => write!(f, "exact"),
            Watermark::At(l) => write!(f, "{l}"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PseudoDiffOp {
    r: u32,
    coeffs: BTreeMap<i64, DiffPolynomial>,
    watermark: Watermark,
}

impl PseudoDiffOp {
    pub fn zero(r: u32) -> Self {
        PseudoDiffOp {
            r,
            coeffs: BTreeMap::new(),
            watermark: Watermark::Exact,
        }
    }

    /// The symbol D itself.
    pub fn d(r: u32) -> Self {
        PseudoDiffOp::d_pow(r, 1)
    }

    /// D^k with constant coefficient one; exact for any integer k.
    pub fn d_pow(r: u32, k: i64) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(k, DiffPolynomial::one(r));
        PseudoDiffOp {
            r,
            coeffs,
            watermark: Watermark::Exact,
        }
    }

    /// A differential polynomial viewed as a multiplication operator.
    pub fn from_poly(p: DiffPolynomial) -> Self {
        PseudoDiffOp::term(p, 0)
    }

    /// p * D^k.
    pub fn term(p: DiffPolynomial, k: i64) -> Self {
        let r = p.r();
        let mut coeffs = BTreeMap::new();
        if !p.is_zero() {
            coeffs.insert(k, p);
        }
        PseudoDiffOp {
            r,
            coeffs,
            watermark: Watermark::Exact,
        }
    }

    pub fn from_coeffs<T>(r: u32, coeffs: T, watermark: Watermark) -> Result<Self>
    where
        T: IntoIterator<Item = (i64, DiffPolynomial)>,
    {
        let mut map = BTreeMap::new();
        for (k, p) in coeffs {
            if p.r() != r {
                return Err(Error::MixedRootIndex { left: r, right: p.r() });
            }
            if !watermark.certifies(k) {
                return Err(Error::BelowWatermark {
                    order: k,
                    watermark: watermark.floor().unwrap(),
                });
            }
            if !p.is_zero() {
                map.insert(k, p);
            }
        }
        Ok(PseudoDiffOp {
            r,
            coeffs: map,
            watermark,
        })
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn watermark(&self) -> Watermark {
        self.watermark
    }

    /// Highest order with a nonzero stored coefficient.
    pub fn top(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (i64, &DiffPolynomial)> {
        self.coeffs.iter().map(|(k, p)| (*k, p))
    }

    /// True only for the exact zero operator.
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty() && self.watermark.is_exact()
    }

    /// Coefficient of D^k; an error below the watermark.
    pub fn coeff(&self, k: i64) -> Result<DiffPolynomial> {
        if !self.watermark.certifies(k) {
            return Err(Error::BelowWatermark {
                order: k,
                watermark: self.watermark.floor().unwrap(),
            });
        }
        Ok(self
            .coeffs
            .get(&k)
            .cloned()
            .unwrap_or_else(|| DiffPolynomial::zero(self.r)))
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

    fn prune(&mut self) {
        self.coeffs.retain(|_, p| !p.is_zero());
        if let Watermark::At(l) = self.watermark {
            self.coeffs.retain(|k, _| *k >= l);
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_r(other)?;
        let mut out = PseudoDiffOp {
            r: self.r,
            coeffs: self.coeffs.clone(),
            watermark: self.watermark.join(other.watermark),
        };
        for (k, p) in &other.coeffs {
            let entry = out
                .coeffs
                .entry(*k)
                .or_insert_with(|| DiffPolynomial::zero(self.r));
            *entry = entry.try_add(p)?;
        }
        out.prune();
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.clone().negate())
    }

    pub fn negate(mut self) -> Self {
        let coeffs = std::mem::take(&mut self.coeffs);
        self.coeffs = coeffs.into_iter().map(|(k, p)| (k, -p)).collect();
        self
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        let mut out = PseudoDiffOp {
            r: self.r,
            coeffs: self
                .coeffs
                .iter()
                .map(|(k, p)| (*k, p.scale(c)))
                .collect(),
            watermark: self.watermark,
        };
        out.prune();
        out
    }

    pub fn scale_rational(&self, q: &BigRational) -> Self {
        self.scale(&Scalar::from_rational(self.r, q.clone()))
    }

    /// Weakens the watermark to `floor` and drops everything below it.
    /// Raising past an existing watermark is fine; lowering is not possible.
    pub fn truncated(&self, floor: i64) -> Self {
        let mut out = self.clone();
        out.watermark = out.watermark.join(Watermark::At(floor));
        out.prune();
        out
    }

    /// Watermark of a composition: uncertainty enters through each factor's
    /// dropped tail against the other factor's certified part.
    fn composed_watermark(&self, rhs: &Self) -> Watermark {
        let mut bound: Option<i64> = None;
        let mut push = |v: Option<i64>| {
            if let Some(v) = v {
                bound = Some(bound.map_or(v, |b| b.max(v)));
            }
        };
        let la = self.watermark.floor();
        let lb = rhs.watermark.floor();
        push(match (self.top(), lb) {
            (Some(t), Some(l)) => Some(t + l - 1),
            _ => None,
        });
        push(match (la, rhs.top()) {
            (Some(l), Some(t)) => Some(l - 1 + t),
            _ => None,
        });
        push(match (la, lb) {
            (Some(a), Some(b)) => Some(a + b - 2),
            _ => None,
        });
        match bound {
            None => Watermark::Exact,
            Some(b) => Watermark::At(b + 1),
        }
    }

    /// Operator composition via D^k ∘ f = sum_j C(k,j) kappa^j f^(j) D^(k-j).
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        self.check_same_r(rhs)?;
        let watermark = self.composed_watermark(rhs);
        if watermark.is_exact() {
            for (k, _) in self.coeffs.iter().filter(|(k, _)| **k < 0) {
                for (l, q) in &rhs.coeffs {
                    if !q.is_constant() {
                        return Err(Error::NonTerminating { order: k + l });
                    }
                }
            }
        }
        let coeffs = self.compose_coeffs(rhs, watermark.floor());
        let mut out = PseudoDiffOp {
            r: self.r,
            coeffs,
            watermark,
        };
        out.prune();
        Ok(out)
    }

    fn compose_coeffs(
        &self,
        rhs: &Self,
        floor: Option<i64>,
    ) -> BTreeMap<i64, DiffPolynomial> {
        let kappa = Scalar::kappa(self.r);
        let mut acc: BTreeMap<i64, DiffPolynomial> = BTreeMap::new();
        for (&k, p) in &self.coeffs {
            for (&l, q) in &rhs.coeffs {
                let mut j_cap = if k >= 0 { Some(k) } else { None };
                if let Some(f) = floor {
                    let by_floor = k + l - f;
                    if by_floor < 0 {
                        continue;
                    }
                    j_cap = Some(j_cap.map_or(by_floor, |c| c.min(by_floor)));
                }
                let mut deriv = q.clone();
                let mut binom = BigRational::one();
                let mut kappa_pow = Scalar::one(self.r);
                let mut j: i64 = 0;
                loop {
                    if let Some(cap) = j_cap {
                        if j > cap {
                            break;
                        }
                    }
                    if deriv.is_zero() {
                        break;
                    }
                    let weight = kappa_pow.scale(&binom);
                    let term = p
                        .try_mul(&deriv.scale(&weight))
                        .expect("same ring");
                    if !term.is_zero() {
                        let slot = acc
                            .entry(k + l - j)
                            .or_insert_with(|| DiffPolynomial::zero(self.r));
                        *slot = slot.try_add(&term).expect("same ring");
                    }
                    binom *= BigRational::new((k - j).into(), (j + 1).into());
                    kappa_pow = kappa_pow.try_mul(&kappa).expect("same ring");
                    deriv = deriv.total_derivative();
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn commutator(&self, rhs: &Self) -> Result<Self> {
        self.compose(rhs)?.try_sub(&rhs.compose(self)?)
    }

    /// n-fold composition; n = 0 gives the identity D^0.
    pub fn pow(&self, n: u32) -> Result<Self> {
        let mut out = PseudoDiffOp::d_pow(self.r, 0);
        for _ in 0..n {
            out = out.compose(self)?;
        }
        Ok(out)
    }

    /// Splits into the purely differential part (orders >= 0) and the rest.
    pub fn split_parts(&self) -> (Self, Self) {
        let plus_coeffs: BTreeMap<i64, DiffPolynomial> = self
            .coeffs
            .iter()
            .filter(|(k, _)| **k >= 0)
            .map(|(k, p)| (*k, p.clone()))
            .collect();
        let minus_coeffs: BTreeMap<i64, DiffPolynomial> = self
            .coeffs
            .iter()
            .filter(|(k, _)| **k < 0)
            .map(|(k, p)| (*k, p.clone()))
            .collect();
        let plus_watermark = match self.watermark {
            Watermark::Exact => Watermark::Exact,
            Watermark::At(l) if l <= 0 => Watermark::Exact,
            w => w,
        };
        (
            PseudoDiffOp {
                r: self.r,
                coeffs: plus_coeffs,
                watermark: plus_watermark,
            },
            PseudoDiffOp {
                r: self.r,
                coeffs: minus_coeffs,
                watermark: self.watermark,
            },
        )
    }

    /// Coefficient of D^{-1}; requires that order to be certified.
    pub fn residue(&self) -> Result<DiffPolynomial> {
        match self.watermark {
            Watermark::At(l) if l > -1 => Err(Error::ResidueNotCertified(l)),
            _ => self.coeff(-1),
        }
    }

    /// Equality on every order both sides certify.
    pub fn eq_up_to_watermark(&self, other: &Self) -> Result<bool> {
        self.check_same_r(other)?;
        match self.watermark.join(other.watermark) {
            Watermark::Exact => Ok(self.coeffs == other.coeffs),
            Watermark::At(l) => {
                let keys: std::collections::BTreeSet<i64> = self
                    .coeffs
                    .keys()
                    .chain(other.coeffs.keys())
                    .copied()
                    .filter(|k| *k >= l)
                    .collect();
                for k in keys {
                    if self.coeff(k)? != other.coeff(k)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    /// Monic r-th root of a Lax-form operator: the unique
    /// R = D + a_{-1} D^{-1} + ... with R^r = self, solved order by order.
    /// `depth` counts the solved orders 0, -1, ..., 1-depth, so the result
    /// carries watermark 1-depth.
    pub fn rth_root(&self, depth: u32) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidDepth(0));
        }
        let r = self.r;
        let rr = i64::from(r);
        if !self.watermark.is_exact() {
            return Err(Error::NotLaxForm(format!(
                "operator is truncated at {}",
                self.watermark
            )));
        }
        if self.top() != Some(rr) {
            return Err(Error::NotLaxForm(format!(
                "top order {:?} does not match the root index {r}",
                self.top()
            )));
        }
        if !self.coeff(rr)?.is_constant()
            || !self.coeff(rr)?.constant_term().is_one()
        {
            return Err(Error::NotLaxForm("not monic in D^r".into()));
        }
        if !self.coeff(rr - 1)?.is_zero() {
            return Err(Error::NotLaxForm(format!(
                "nonzero coefficient at D^{}",
                rr - 1
            )));
        }
        if self.coeffs.keys().any(|k| *k < 0) {
            return Err(Error::NotLaxForm("negative orders present".into()));
        }
        let inv_r = BigRational::new(1.into(), rr.into());
        let mut coeffs: BTreeMap<i64, DiffPolynomial> = BTreeMap::new();
        coeffs.insert(1, DiffPolynomial::one(r));
        for step in 0..i64::from(depth) {
            let e = -step;
            // With the candidate cut at e, the power's coefficient one order
            // below its own watermark is exactly the known contribution; the
            // unknown a_e enters that order linearly with factor r.
            let candidate = PseudoDiffOp {
                r,
                coeffs: coeffs.clone(),
                watermark: Watermark::At(e),
            };
            let power = candidate.pow(r)?;
            let known = power.coeff(e + rr - 1)?;
            let target = self.coeff(e + rr - 1)?;
            let a_e = target.try_sub(&known)?.scale_rational(&inv_r);
            if !a_e.is_zero() {
                coeffs.insert(e, a_e);
            }
        }
        Ok(PseudoDiffOp {
            r,
            coeffs,
            watermark: Watermark::At(1 - i64::from(depth)),
        })
    }

    /// self^(a + (m+1)/r) computed as self^a ∘ (self^{1/r})^{m+1} for a
    /// Lax-form operator; m = r-1 collapses to the exact power self^(a+1).
    pub fn fractional_power(&self, a: u32, m: u32, depth: u32) -> Result<Self> {
        let r = self.r;
        if m > r - 1 {
            return Err(Error::FieldIndexOutOfRange { m, r, top: r - 1 });
        }
        if m == r - 1 {
            return self.pow(a + 1);
        }
        let root = self.rth_root(depth)?;
        let fractional = root.pow(m + 1)?;
        if a == 0 {
            Ok(fractional)
        } else {
            self.pow(a)?.compose(&fractional)
        }
    }
}

impl fmt::Display for PseudoDiffOp {
    /// `(<coefficient>)*D^<k>` in descending order, with an `O(D^<l-1>)`
    /// tail when truncated at l.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut pieces: Vec<String> = self
            .coeffs
            .iter()
            .rev()
            .map(|(k, p)| format!("({p})*D^{k}"))
            .collect();
        if let Watermark::At(l) = self.watermark {
            pieces.push(format!("O(D^{})", l - 1));
        }
        if pieces.is_empty() {
            return write!(f, "0");
        }
        write!(f, "{}", pieces.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn u0(r: u32) -> DiffPolynomial {
        DiffPolynomial::var(r, 0, 0).unwrap()
    }

    fn u0_k(r: u32, k: u32) -> DiffPolynomial {
        DiffPolynomial::var(r, 0, k).unwrap()
    }

    /// D^2 - u0, the Lax operator for r = 2.
    fn q2() -> PseudoDiffOp {
        PseudoDiffOp::d_pow(2, 2)
            .try_sub(&PseudoDiffOp::from_poly(u0(2)))
            .unwrap()
    }

    #[test]
    fn d_against_a_coefficient_produces_kappa() {
        // D ∘ u0 = u0*D + kappa*u0_1.
        let lhs = PseudoDiffOp::d(2).compose(&PseudoDiffOp::from_poly(u0(2))).unwrap();
        let expected = PseudoDiffOp::term(u0(2), 1)
            .try_add(&PseudoDiffOp::from_poly(
                u0_k(2, 1).scale(&Scalar::kappa(2)),
            ))
            .unwrap();
        assert_eq!(lhs, expected);
        assert!(lhs.watermark().is_exact());
    }

    #[test]
    fn negative_power_expands_with_alternating_signs() {
        // D^{-1} ∘ u0 to three retained orders.
        let d_inv = PseudoDiffOp::d_pow(2, -1).truncated(-3);
        let got = d_inv.compose(&PseudoDiffOp::from_poly(u0(2))).unwrap();
        let kappa = Scalar::kappa(2);
        let expected = PseudoDiffOp::from_coeffs(
            2,
            [
                (-1, u0(2)),
                (-2, -u0_k(2, 1).scale(&kappa)),
                (-3, u0_k(2, 2).scale(&kappa.pow(2))),
            ],
            Watermark::At(-3),
        )
        .unwrap();
        assert_eq!(got, expected);
        assert_eq!(
            got.to_string(),
            "(u0)*D^-1 + ((-1/2*I*S)*u0_1)*D^-2 + (-1/2*u0_2)*D^-3 + O(D^-4)"
        );
    }

    #[test]
    fn telescoping_recovers_the_coefficient() {
        // D ∘ (D^{-1} ∘ u0) telescopes back to u0 on certified orders.
        let d_inv = PseudoDiffOp::d_pow(2, -1).truncated(-3);
        let series = d_inv.compose(&PseudoDiffOp::from_poly(u0(2))).unwrap();
        let back = PseudoDiffOp::d(2).compose(&series).unwrap();
        assert!(back
            .eq_up_to_watermark(&PseudoDiffOp::from_poly(u0(2)))
            .unwrap());
    }

    #[test]
    fn exact_composition_with_infinite_tail_is_refused() {
        let d_inv = PseudoDiffOp::d_pow(2, -1);
        let err = d_inv
            .compose(&PseudoDiffOp::from_poly(u0(2)))
            .unwrap_err();
        assert_eq!(err, Error::NonTerminating { order: -1 });
        // Constant coefficients terminate fine.
        let ok = d_inv.compose(&PseudoDiffOp::d_pow(2, 2)).unwrap();
        assert_eq!(ok, PseudoDiffOp::d(2));
    }

    #[test]
    fn composition_watermark_follows_the_worst_tail() {
        let a = PseudoDiffOp::d_pow(2, 2).truncated(-1);
        let b = PseudoDiffOp::d_pow(2, 1).truncated(-2);
        let ab = a.compose(&b).unwrap();
        // top(a) + wm(b) = 0, wm(a) + top(b) = 0.
        assert_eq!(ab.watermark(), Watermark::At(0));
    }

    #[test]
    fn split_keeps_the_plus_part_exact() {
        let d_inv = PseudoDiffOp::d_pow(2, -1).truncated(-3);
        let series = d_inv.compose(&PseudoDiffOp::from_poly(u0(2))).unwrap();
        let with_top = series.try_add(&PseudoDiffOp::d_pow(2, 2)).unwrap();
        let (plus, minus) = with_top.split_parts();
        assert_eq!(plus, PseudoDiffOp::d_pow(2, 2));
        assert!(plus.watermark().is_exact());
        assert_eq!(minus.watermark(), Watermark::At(-3));
        assert_eq!(minus.top(), Some(-1));
    }

    #[test]
    fn residue_needs_certification() {
        let op = PseudoDiffOp::d_pow(2, 1).truncated(0);
        assert_eq!(op.residue(), Err(Error::ResidueNotCertified(0)));
        let ok = PseudoDiffOp::d_pow(2, 1).truncated(-1);
        assert_eq!(ok.residue().unwrap(), DiffPolynomial::zero(2));
    }

    #[test]
    fn square_root_of_the_kdv_operator() {
        // Q = D^2 - u0: root is D - (u0/2)D^{-1} + (kappa u0_1/4)D^{-2} + ...
        let root = q2().rth_root(3).unwrap();
        let kappa = Scalar::kappa(2);
        let expected = PseudoDiffOp::from_coeffs(
            2,
            [
                (1, DiffPolynomial::one(2)),
                (-1, u0(2).scale_rational(&rat(-1, 2))),
                (-2, u0_k(2, 1).scale(&kappa).scale_rational(&rat(1, 4))),
            ],
            Watermark::At(-2),
        )
        .unwrap();
        assert_eq!(root, expected);
        assert_eq!(
            root.to_string(),
            "(1)*D^1 + (-1/2*u0)*D^-1 + ((1/8*I*S)*u0_1)*D^-2 + O(D^-3)"
        );
    }

    #[test]
    fn root_squares_back_to_the_operator() {
        for depth in [1u32, 4, 8] {
            let root = q2().rth_root(depth).unwrap();
            let squared = root.pow(2).unwrap();
            assert!(squared.eq_up_to_watermark(&q2()).unwrap());
        }
    }

    #[test]
    fn leading_correction_of_the_general_root() {
        // Q^{1/r} = D - (u_{r-2}/r) D^{-1} + O(D^{-2}).
        for r in 2u32..=5 {
            let top = i64::from(r);
            let q = PseudoDiffOp::d_pow(r, top)
                .try_sub(&PseudoDiffOp::term(
                    DiffPolynomial::var(r, r - 2, 0).unwrap(),
                    top - 2,
                ))
                .unwrap();
            let root = q.rth_root(2).unwrap();
            assert_eq!(root.coeff(0).unwrap(), DiffPolynomial::zero(r));
            assert_eq!(
                root.coeff(-1).unwrap(),
                DiffPolynomial::var(r, r - 2, 0)
                    .unwrap()
                    .scale_rational(&rat(-1, i64::from(r)))
            );
        }
    }

    #[test]
    fn root_rejects_non_lax_operators() {
        // Wrong top order.
        let err = PseudoDiffOp::d_pow(2, 3).rth_root(2).unwrap_err();
        assert!(matches!(err, Error::NotLaxForm(_)));
        // Not monic.
        let bad = PseudoDiffOp::term(u0(2), 2);
        assert!(matches!(bad.rth_root(2), Err(Error::NotLaxForm(_))));
        // Nonzero subleading coefficient.
        let bad = PseudoDiffOp::d_pow(2, 2)
            .try_add(&PseudoDiffOp::term(u0(2), 1))
            .unwrap();
        assert!(matches!(bad.rth_root(2), Err(Error::NotLaxForm(_))));
        // Truncated input.
        assert!(matches!(
            q2().truncated(0).rth_root(2),
            Err(Error::NotLaxForm(_))
        ));
        assert_eq!(q2().rth_root(0), Err(Error::InvalidDepth(0)));
    }

    #[test]
    fn three_halves_power_of_the_kdv_operator() {
        // (Q^{3/2})_+ = D^3 - (3/2) u0 D - (3/4) kappa u0_1.
        let power = q2().fractional_power(1, 0, 6).unwrap();
        let (plus, _) = power.split_parts();
        let kappa = Scalar::kappa(2);
        let expected = PseudoDiffOp::from_coeffs(
            2,
            [
                (3, DiffPolynomial::one(2)),
                (1, u0(2).scale_rational(&rat(-3, 2))),
                (
                    0,
                    u0_k(2, 1).scale(&kappa).scale_rational(&rat(-3, 4)),
                ),
            ],
            Watermark::Exact,
        )
        .unwrap();
        assert_eq!(plus, expected);
    }

    #[test]
    fn commutator_of_the_plus_part_with_the_operator() {
        // [(Q^{3/2})_+, Q] = kappa*((1/8) u0_3 + (3/2) u0 u0_1), exactly.
        let power = q2().fractional_power(1, 0, 6).unwrap();
        let (plus, _) = power.split_parts();
        let c = plus.commutator(&q2()).unwrap();
        let kappa = Scalar::kappa(2);
        let expected_poly = u0_k(2, 3)
            .scale_rational(&rat(1, 8))
            .try_add(&(u0(2) * u0_k(2, 1)).scale_rational(&rat(3, 2)))
            .unwrap()
            .scale(&kappa);
        assert_eq!(c, PseudoDiffOp::from_poly(expected_poly));
        assert!(c.watermark().is_exact());
    }

    #[test]
    fn whole_power_collapses_exactly() {
        for a in 0u32..=2 {
            let direct = q2().pow(a + 1).unwrap();
            let via_fractional = q2().fractional_power(a, 1, 4).unwrap();
            assert_eq!(via_fractional, direct);
            assert!(via_fractional.watermark().is_exact());
        }
    }

    #[test]
    fn fractional_power_agrees_with_the_root_route() {
        // Q^(a + r/r) computed through the root matches Q^(a+1) on every
        // certified order.
        for a in 0u32..=2 {
            let root = q2().rth_root(6).unwrap();
            let via_root = q2()
                .pow(a)
                .unwrap()
                .compose(&root.pow(2).unwrap())
                .unwrap();
            let exact = q2().pow(a + 1).unwrap();
            assert!(via_root.eq_up_to_watermark(&exact).unwrap());
        }
    }

    #[test]
    fn root_coefficients_are_stable_under_deeper_solves() {
        let shallow = q2().rth_root(4).unwrap();
        let deep = q2().rth_root(9).unwrap();
        for k in -3..=1 {
            assert_eq!(shallow.coeff(k).unwrap(), deep.coeff(k).unwrap());
        }
    }

    #[test]
    fn mixed_root_indices_are_rejected() {
        let a = PseudoDiffOp::d(2);
        let b = PseudoDiffOp::d(3);
        assert_eq!(
            a.compose(&b),
            Err(Error::MixedRootIndex { left: 2, right: 3 })
        );
    }

    fn arb_op(r: u32) -> impl Strategy<Value = PseudoDiffOp> {
        let poly = proptest::collection::vec(
            ((0u32..r - 1, 0u32..=1u32), -3i64..=3, 1i64..=3),
            0..2,
        )
        .prop_map(move |terms| {
            let mut p = DiffPolynomial::zero(r);
            for ((m, k), num, den) in terms {
                let v = DiffPolynomial::var(r, m, k).unwrap();
                p = p + v.scale_rational(&rat(num, den));
            }
            p + DiffPolynomial::one(r)
        });
        proptest::collection::btree_map(-2i64..=2, poly, 1..3).prop_map(move |coeffs| {
            PseudoDiffOp::from_coeffs(r, coeffs, Watermark::At(-2)).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn composition_associates_up_to_watermark(
            a in arb_op(2),
            b in arb_op(2),
            c in arb_op(2),
        ) {
            let left = a.compose(&b).unwrap().compose(&c).unwrap();
            let right = a.compose(&b.compose(&c).unwrap()).unwrap();
            prop_assert!(left.eq_up_to_watermark(&right).unwrap());
        }

        #[test]
        fn composition_distributes_over_addition(
            a in arb_op(3),
            b in arb_op(3),
            c in arb_op(3),
        ) {
            let left = a.compose(&b.try_add(&c).unwrap()).unwrap();
            let right = a.compose(&b).unwrap().try_add(&a.compose(&c).unwrap()).unwrap();
            prop_assert!(left.eq_up_to_watermark(&right).unwrap());
        }

        #[test]
        fn residue_of_a_commutator_is_a_total_derivative(
            a in arb_op(2),
            b in arb_op(2),
        ) {
            // Both operands sit at watermark -2 with top <= 2, so the
            // commutator certifies its residue whenever tops stay <= 1.
            prop_assume!(a.top().unwrap_or(0) <= 1 && b.top().unwrap_or(0) <= 1);
            let c = a.commutator(&b).unwrap();
            let res = c.residue().unwrap();
            prop_assert!(res.x_antiderivative().is_some());
        }
    }
}
