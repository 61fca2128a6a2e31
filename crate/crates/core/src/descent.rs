//! Index bookkeeping for gravitational descendants.
//!
//! A descendant index decomposes as mtilde = a*r + m; raising an index by r
//! costs one power of the psi class and a rational factor, and iterating
//! that step down to the base index collapses into a single closed-form
//! scalar. Indices congruent to r-1 mod r decompose through the base -1
//! instead, where the j = 0 factor of the product kills the whole term:
//! that is the vanishing half of the calculus, and it is what makes the
//! closed form total.

use num::{BigRational, One};

use crate::error::{Error, Result};

fn check_r(r: u32) -> Result<()> {
    if r < 2 {
        return Err(Error::RootIndexTooSmall(r));
    }
    Ok(())
}

/// mtilde = a*r + m with m in [0, r-1].
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct IndexPair {
    pub a: u32,
    pub m: u32,
    /// True when m = r-1; every correlator carrying such an index is zero.
    pub vanishing: bool,
}

pub fn decompose_index(r: u32, mtilde: u32) -> Result<IndexPair> {
    check_r(r)?;
    let a = mtilde / r;
    let m = mtilde % r;
    Ok(IndexPair {
        a,
        m,
        vanishing: m == r - 1,
    })
}

/// The r-shifted factorial: the product of r*j + m + 1 over j = 0..a.
/// Empty at a = 0; contains a zero factor exactly when m = -1.
pub fn r_factorial(r: u32, a: u32, m: i64) -> BigRational {
    let r = i64::from(r);
    let mut acc = BigRational::one();
    for j in 0..i64::from(a) {
        acc *= BigRational::from_integer((r * j + m + 1).into());
    }
    acc
}

/// Coefficient relating the two time normalizations for the flow (a, m):
/// (-1)^a r^a divided by the r-shifted factorial. Its product with the
/// closed-form descent scalar for the same pair is one.
pub fn variable_map_coefficient(r: u32, a: u32, m: u32) -> Result<BigRational> {
    check_r(r)?;
    if m > r - 2 {
        return Err(Error::FieldIndexOutOfRange { m, r, top: r - 2 });
    }
    let signed_r_pow = BigRational::from_integer(i64::from(r).into()).pow(a as i32)
        * BigRational::from_integer(if a % 2 == 0 { 1.into() } else { (-1).into() });
    Ok(signed_r_pow / r_factorial(r, a, i64::from(m)))
}

/// One power of psi attached to `position`, weighted by `scalar`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DescentFactor {
    pub position: usize,
    pub scalar: BigRational,
}

/// The collapsed tower over one position: psi^a with the accumulated scalar
/// and the base index the tower stands on (-1 only for vanishing towers).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ClosedFormFactor {
    pub psi_power: u32,
    pub base: i64,
    pub scalar: BigRational,
}

/// An insertion tuple on a genus-g curve. Entries are descendant indices,
/// at least -1 each, with at most one -1 in the tuple.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TypeTuple {
    r: u32,
    genus: u32,
    entries: Vec<i64>,
}

impl TypeTuple {
    pub fn new(r: u32, genus: u32, entries: Vec<i64>) -> Result<Self> {
        check_r(r)?;
        if let Some(bad) = entries.iter().find(|e| **e < -1) {
            return Err(Error::BadTypeTuple(format!(
                "entry {bad} below the floor of -1"
            )));
        }
        if entries.iter().filter(|e| **e == -1).count() > 1 {
            return Err(Error::BadTypeTuple(
                "more than one entry at -1".into(),
            ));
        }
        Ok(TypeTuple { r, genus, entries })
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn genus(&self) -> u32 {
        self.genus
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, position: usize) -> Result<i64> {
        self.entries
            .get(position)
            .copied()
            .ok_or(Error::PositionOutOfRange {
                index: position,
                len: self.entries.len(),
            })
    }

    /// ((r-2)(g-1) + sum of entries) / r; integrality is the degree half
    /// of the selection rule.
    pub fn virtual_degree(&self) -> BigRational {
        let sum: i64 = self.entries.iter().sum();
        let num = i64::from(self.r - 2) * (i64::from(self.genus) - 1) + sum;
        BigRational::new(num.into(), i64::from(self.r).into())
    }
}

/// One descent step at `position`: the tuple raised by r there, together
/// with the factor tying its correlator to the original one (carrying an
/// extra psi at that position).
pub fn descent_step(tuple: &TypeTuple, position: usize) -> Result<(DescentFactor, TypeTuple)> {
    let m = tuple.entry(position)?;
    let r = i64::from(tuple.r);
    let scalar = BigRational::new((-(m + 1)).into(), r.into());
    let mut entries = tuple.entries.clone();
    entries[position] += r;
    let raised = TypeTuple::new(tuple.r, tuple.genus, entries)?;
    Ok((DescentFactor { position, scalar }, raised))
}

/// Collapses every position of the tuple down to its base index in one
/// shot. The factor at a position with entry a*r + m is
/// (-1)^a r^{-a} times the r-shifted factorial, with psi^a; entries
/// congruent to r-1 mod r route through base -1 and come out zero.
pub fn descent_closed_form(tuple: &TypeTuple) -> Result<(Vec<ClosedFormFactor>, TypeTuple)> {
    let r = tuple.r;
    let ri = i64::from(r);
    let mut factors = Vec::with_capacity(tuple.len());
    let mut base_entries = Vec::with_capacity(tuple.len());
    for &e in &tuple.entries {
        let (a, base) = if e.rem_euclid(ri) == ri - 1 {
            (((e + 1) / ri) as u32, -1)
        } else {
            ((e.div_euclid(ri)) as u32, e.rem_euclid(ri))
        };
        let sign = BigRational::from_integer(if a % 2 == 0 { 1.into() } else { (-1).into() });
        let r_pow = BigRational::from_integer(ri.into()).pow(a as i32);
        let scalar = r_factorial(r, a, base) * sign / r_pow;
        factors.push(ClosedFormFactor {
            psi_power: a,
            base,
            scalar,
        });
        base_entries.push(base);
    }
    let base = TypeTuple::new(r, tuple.genus, base_entries)?;
    Ok((factors, base))
}
