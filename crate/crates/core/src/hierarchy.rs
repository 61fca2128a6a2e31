//! Lax operator and flows of the r-th Gelfand-Dickey hierarchy.
//!
//! Q = D^r - sum_m u_m D^m evolves by dQ/dt = prefactor * [Q_+^{a+(m+1)/r}, Q],
//! in two time normalizations that differ by a rational constant per flow.
//! The commutator is certified purely differential of order at most r-2, so
//! each flow is a finite list of evolution equations du_m/dt, read off with
//! the sign convention fixed by the minus in Q.

use std::collections::BTreeMap;
use std::fmt;

use num::BigRational;

use crate::descent::r_factorial;
use crate::diffalg::{DiffPolynomial, Scalar};
use crate::error::{Error, Result};
use crate::psido::{PseudoDiffOp, Watermark};

/// Retained expansion orders that cover every flow with a*r + m < r + 6.
pub fn default_depth(r: u32) -> u32 {
    r + 6
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LaxOperator {
    r: u32,
    op: PseudoDiffOp,
}

/// D^r - u_{r-2} D^{r-2} - ... - u_1 D - u_0 with symbolic fields.
pub fn build_lax(r: u32) -> Result<LaxOperator> {
    if r < 2 {
        return Err(Error::RootIndexTooSmall(r));
    }
    let mut op = PseudoDiffOp::d_pow(r, i64::from(r));
    for m in 0..=r - 2 {
        let field = DiffPolynomial::var(r, m, 0)?;
        op = op.try_sub(&PseudoDiffOp::term(field, i64::from(m)))?;
    }
    Ok(LaxOperator { r, op })
}

impl LaxOperator {
    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn op(&self) -> &PseudoDiffOp {
        &self.op
    }
}

/// A flow slot in either time normalization; they label the same equation
/// through mtilde = a*r + m.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FlowIndex {
    Tilde(u32),
    Standard { a: u32, m: u32 },
}

impl FlowIndex {
    pub fn pair(self, r: u32) -> (u32, u32) {
        match self {
            FlowIndex::Tilde(mtilde) => (mtilde / r, mtilde % r),
            FlowIndex::Standard { a, m } => (a, m),
        }
    }

    pub fn tilde_value(self, r: u32) -> u32 {
        match self {
            FlowIndex::Tilde(mtilde) => mtilde,
            FlowIndex::Standard { a, m } => a * r + m,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FlowResult {
    pub index: FlowIndex,
    /// dQ/dt = prefactor * commutator.
    pub prefactor: Scalar,
    pub commutator: PseudoDiffOp,
    /// du_m/dt for every field m = 0..r-2, zeros included.
    pub evolution: BTreeMap<u32, DiffPolynomial>,
}

impl FlowResult {
    pub fn is_trivial(&self) -> bool {
        self.commutator.is_zero() && self.evolution.values().all(|p| p.is_zero())
    }
}

/// [Q_+^{a+(m+1)/r}, Q], checked to be purely differential of order <= r-2.
/// The fractional power must be certified down to order 0 for the plus part
/// to be complete, which needs depth >= a*r + m + 1.
pub fn flow_commutator(q: &LaxOperator, a: u32, m: u32, depth: u32) -> Result<PseudoDiffOp> {
    let r = q.r;
    if m > r - 1 {
        return Err(Error::FieldIndexOutOfRange { m, r, top: r - 1 });
    }
    let power = q.op.fractional_power(a, m, depth)?;
    if let Watermark::At(l) = power.watermark() {
        if l > 0 {
            return Err(Error::DepthTooShallow {
                a,
                m,
                depth,
                needed: a * r + m + 1,
            });
        }
    }
    let (plus, _) = power.split_parts();
    let c = plus.commutator(&q.op)?;
    let bound = i64::from(r) - 2;
    if let Some(top) = c.top() {
        if top > bound {
            return Err(Error::CommutatorOrderBound { order: top, bound });
        }
    }
    if let Some((bottom, _)) = c.coeffs().next() {
        if bottom < 0 {
            return Err(Error::CommutatorOrderBound { order: bottom, bound });
        }
    }
    Ok(c)
}

fn read_evolution(
    r: u32,
    prefactor: &Scalar,
    commutator: &PseudoDiffOp,
) -> Result<BTreeMap<u32, DiffPolynomial>> {
    let scaled = commutator.scale(prefactor);
    let mut evolution = BTreeMap::new();
    for m in 0..=r - 2 {
        // dQ/dt = -sum du_m/dt * D^m.
        evolution.insert(m, -scaled.coeff(i64::from(m))?);
    }
    Ok(evolution)
}

/// The flow of the tilde time with index mtilde = a*r + m:
/// I*S*(a + (m+1)/r) * dQ/dt = [Q_+^{a+(m+1)/r}, Q].
pub fn flow_tilde(q: &LaxOperator, mtilde: u32, depth: u32) -> Result<FlowResult> {
    let r = q.r;
    let (a, m) = (mtilde / r, mtilde % r);
    let commutator = flow_commutator(q, a, m, depth)?;
    let lambda = Scalar::i(r)
        .try_mul(&Scalar::s(r))?
        .scale(&BigRational::new(
            i64::from(a * r + m + 1).into(),
            i64::from(r).into(),
        ));
    let prefactor = lambda.try_inv()?;
    let evolution = read_evolution(r, &prefactor, &commutator)?;
    Ok(FlowResult {
        index: FlowIndex::Tilde(mtilde),
        prefactor,
        commutator,
        evolution,
    })
}

/// The same flow in the standard time normalization:
/// I*[a*r+m+1]_r * dQ/dt = (-1)^a r^a S * [Q_+^{a+(m+1)/r}, Q],
/// where [a*r+m+1]_r is the r-shifted factorial with a+1 factors.
pub fn flow_standard(q: &LaxOperator, a: u32, m: u32, depth: u32) -> Result<FlowResult> {
    let r = q.r;
    if m > r - 1 {
        return Err(Error::FieldIndexOutOfRange { m, r, top: r - 1 });
    }
    let commutator = flow_commutator(q, a, m, depth)?;
    let sign = BigRational::from_integer(if a % 2 == 0 { 1.into() } else { (-1).into() });
    let r_pow = BigRational::from_integer(i64::from(r).into()).pow(a as i32);
    let numerator = Scalar::s(r).scale(&(sign * r_pow));
    let denominator = Scalar::i(r).scale(&r_factorial(r, a + 1, i64::from(m)));
    let prefactor = numerator.try_div(&denominator)?;
    let evolution = read_evolution(r, &prefactor, &commutator)?;
    Ok(FlowResult {
        index: FlowIndex::Standard { a, m },
        prefactor,
        commutator,
        evolution,
    })
}

/// `du<m>/dt = <polynomial>`, one line per field in ascending m.
pub fn evolution_equations(flow: &FlowResult) -> Vec<String> {
    flow.evolution
        .iter()
        .map(|(m, p)| format!("du{m}/dt = {p}"))
        .collect()
}

/// Outcome of comparing the two normalizations of one flow slot.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ConsistencyLine {
    pub r: u32,
    pub a: u32,
    pub m: u32,
    pub pass: bool,
    pub standard: Vec<String>,
    pub tilde_scaled: Vec<String>,
}

impl fmt::Display for ConsistencyLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "r={} a={} m={} : {}", self.r, self.a, self.m, verdict)?;
        if !self.pass {
            for line in &self.standard {
                write!(f, "\n  standard: {line}")?;
            }
            for line in &self.tilde_scaled {
                write!(f, "\n  tilde*c : {line}")?;
            }
        }
        Ok(())
    }
}

/// Checks flow_standard(a, m) = c * flow_tilde(a*r + m) with
/// c = (-1)^a r^a / [r(a-1)+m+1]_r, exactly on every field.
pub fn check_presentation_consistency(
    r: u32,
    a: u32,
    m: u32,
    depth: u32,
) -> Result<ConsistencyLine> {
    let q = build_lax(r)?;
    let standard = flow_standard(&q, a, m, depth)?;
    let tilde = flow_tilde(&q, a * r + m, depth)?;
    let sign = BigRational::from_integer(if a % 2 == 0 { 1.into() } else { (-1).into() });
    let r_pow = BigRational::from_integer(i64::from(r).into()).pow(a as i32);
    let c = sign * r_pow / r_factorial(r, a, i64::from(m));
    let mut pass = true;
    let mut tilde_scaled = Vec::new();
    for (field, p) in &tilde.evolution {
        let scaled = p.scale_rational(&c);
        if standard.evolution.get(field) != Some(&scaled) {
            pass = false;
        }
        tilde_scaled.push(format!("du{field}/dt = {scaled}"));
    }
    Ok(ConsistencyLine {
        r,
        a,
        m,
        pass,
        standard: evolution_equations(&standard),
        tilde_scaled,
    })
}

/// The consistency check over a <= a_max and every m in [0, r-1].
pub fn consistency_grid(r: u32, a_max: u32) -> Result<Vec<ConsistencyLine>> {
    let mut lines = Vec::new();
    for a in 0..=a_max {
        for m in 0..=r - 1 {
            let depth = default_depth(r).max(a * r + m + 1);
            lines.push(check_presentation_consistency(r, a, m, depth)?);
        }
    }
    Ok(lines)
}
