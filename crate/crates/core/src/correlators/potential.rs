//! Truncated generating series over the correlator table and the
//! change-of-variables verifier tying the two correlator notions together.
//!
//! Each series is graded by genus (the lambda^{2g-2} tag) and truncated at
//! a total degree; coefficients are exponential, value / prod(multiplicity!).
//! Numeric tables populate only the genus-0 stratum: that is a data
//! limitation, not a truncation, and the series records it in `genus_cap`.

use std::collections::BTreeMap;
use std::fmt;

use num::{BigRational, One};

use crate::descent::variable_map_coefficient;
use crate::error::Result;

use super::{tilde_correlator, CorrelatorKey, CorrelatorTable, CorrelatorValue, TableMode};

/// Formal mode enumerates atoms for every admissible key, which grows fast
/// with genus; strata stop here.
pub const FORMAL_GENUS_CAP: u32 = 2;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum PotentialVariable {
    /// t_a^m of the large phase space.
    Standard { a: u32, m: u32 },
    /// x^m = t_0^m of the small phase space.
    Small { m: u32 },
    /// The tilde time with index mtilde.
    Tilde { mtilde: u32 },
}

impl fmt::Display for PotentialVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialVariable::Standard { a, m } => write!(f, "t[{a},{m}]"),
            PotentialVariable::Small { m } => write!(f, "x[{m}]"),
            PotentialVariable::Tilde { mtilde } => write!(f, "tt[{mtilde}]"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct PotentialMonomial {
    powers: BTreeMap<PotentialVariable, u32>,
}

impl PotentialMonomial {
    pub fn from_vars<T: IntoIterator<Item = PotentialVariable>>(vars: T) -> Self {
        let mut powers = BTreeMap::new();
        for v in vars {
            *powers.entry(v).or_insert(0) += 1;
        }
        PotentialMonomial { powers }
    }

    pub fn powers(&self) -> impl Iterator<Item = (PotentialVariable, u32)> + '_ {
        self.powers.iter().map(|(v, e)| (*v, *e))
    }

    pub fn degree(&self) -> u32 {
        self.powers.values().sum()
    }

    /// 1 / prod(e!) over the exponents: the coefficient an exponential
    /// generating series attaches to one correlator value.
    pub fn symmetry_factor(&self) -> BigRational {
        let mut denom = BigRational::one();
        for e in self.powers.values() {
            for j in 2..=u64::from(*e) {
                denom *= BigRational::from_integer(j.into());
            }
        }
        BigRational::one() / denom
    }
}

impl fmt::Display for PotentialMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.powers.is_empty() {
            return write!(f, "1");
        }
        let rendered: Vec<String> = self
            .powers
            .iter()
            .map(|(v, e)| {
                if *e == 1 {
                    v.to_string()
                } else {
                    format!("{v}^{e}")
                }
            })
            .collect();
        write!(f, "{}", rendered.join("*"))
    }
}

/// A genus-graded truncated series: stratum g carries the lambda^{2g-2} tag.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PotentialSeries {
    r: u32,
    truncation_order: u32,
    genus_cap: u32,
    strata: BTreeMap<u32, BTreeMap<PotentialMonomial, CorrelatorValue>>,
}

impl PotentialSeries {
    fn empty(r: u32, truncation_order: u32, genus_cap: u32) -> Self {
        PotentialSeries {
            r,
            truncation_order,
            genus_cap,
            strata: BTreeMap::new(),
        }
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn truncation_order(&self) -> u32 {
        self.truncation_order
    }

    /// Highest genus this series was populated to; numeric data exists only
    /// for genus 0.
    pub fn genus_cap(&self) -> u32 {
        self.genus_cap
    }

    pub fn lambda_exponent(genus: u32) -> i64 {
        2 * i64::from(genus) - 2
    }

    pub fn is_zero(&self) -> bool {
        self.strata.values().all(|s| s.is_empty())
    }

    pub fn stratum(
        &self,
        genus: u32,
    ) -> Option<&BTreeMap<PotentialMonomial, CorrelatorValue>> {
        self.strata.get(&genus)
    }

    pub fn strata(
        &self,
    ) -> impl Iterator<Item = (u32, &BTreeMap<PotentialMonomial, CorrelatorValue>)> {
        self.strata.iter().map(|(g, s)| (*g, s))
    }

    pub fn coefficient(&self, genus: u32, monomial: &PotentialMonomial) -> CorrelatorValue {
        self.strata
            .get(&genus)
            .and_then(|s| s.get(monomial))
            .cloned()
            .unwrap_or_else(CorrelatorValue::zero)
    }

    pub fn term_count(&self) -> usize {
        self.strata.values().map(|s| s.len()).sum()
    }

    fn insert(&mut self, genus: u32, monomial: PotentialMonomial, value: CorrelatorValue) {
        if value.is_zero() {
            return;
        }
        self.strata.entry(genus).or_default().insert(monomial, value);
    }
}

/// Nondecreasing tuples of `n` nonnegative integers with the given sum.
pub(super) fn nondecreasing_multisets(n: u32, sum: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(n as usize);
    fill(&mut out, &mut prefix, n, 0, sum);
    return out;

    fn fill(out: &mut Vec<Vec<u32>>, prefix: &mut Vec<u32>, slots: u32, lo: u32, sum: u32) {
        if slots == 0 {
            if sum == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        if slots == 1 {
            if sum >= lo {
                prefix.push(sum);
                out.push(prefix.clone());
                prefix.pop();
            }
            return;
        }
        // Later slots are at least v, so v cannot exceed sum / slots.
        for v in lo..=sum / slots {
            prefix.push(v);
            fill(out, prefix, slots - 1, v, sum - v);
            prefix.pop();
        }
    }
}

/// Sum of tilde indices forced by the selection rule at (g, n):
/// r(3g-3+n) - (r-2)(g-1); tuples off this sum contribute zero.
fn forced_index_sum(r: u32, genus: u32, n: u32) -> i64 {
    i64::from(r) * (3 * i64::from(genus) - 3 + i64::from(n))
        - i64::from(r - 2) * (i64::from(genus) - 1)
}

/// The three truncated potentials over one table: the large phase space
/// series Phi in t_a^m, its small phase space restriction chi in x^m, and
/// the tilde-time series chi~ built independently through the descent route.
pub fn build_potentials(
    table: &CorrelatorTable,
    truncation_order: u32,
) -> Result<(PotentialSeries, PotentialSeries, PotentialSeries)> {
    let r = table.r();
    let genus_cap = match table.mode() {
        TableMode::Numeric => 0,
        TableMode::Formal => FORMAL_GENUS_CAP,
    };
    let mut phi = PotentialSeries::empty(r, truncation_order, genus_cap);
    let mut chi = PotentialSeries::empty(r, truncation_order, genus_cap);
    let mut chi_tilde = PotentialSeries::empty(r, truncation_order, genus_cap);
    for genus in 0..=genus_cap {
        for n in 1..=truncation_order {
            let sum = forced_index_sum(r, genus, n);
            let Ok(sum) = u32::try_from(sum) else { continue };
            for mtilde in nondecreasing_multisets(n, sum) {
                if mtilde.iter().any(|e| e % r == r - 1) {
                    continue;
                }
                let tilde_monomial = PotentialMonomial::from_vars(
                    mtilde.iter().map(|e| PotentialVariable::Tilde { mtilde: *e }),
                );
                let sym = tilde_monomial.symmetry_factor();

                let insertions: Vec<(u32, u32)> =
                    mtilde.iter().map(|e| (e / r, e % r)).collect();
                let key = CorrelatorKey::new(r, genus, insertions.clone())?;
                let direct = table.lookup_or_zero(&key).scale(&sym);
                if !direct.is_zero() {
                    let monomial = PotentialMonomial::from_vars(
                        insertions
                            .iter()
                            .map(|(a, m)| PotentialVariable::Standard { a: *a, m: *m }),
                    );
                    phi.insert(genus, monomial, direct.clone());
                    if insertions.iter().all(|(a, _)| *a == 0) {
                        let monomial = PotentialMonomial::from_vars(
                            insertions
                                .iter()
                                .map(|(_, m)| PotentialVariable::Small { m: *m }),
                        );
                        chi.insert(genus, monomial, direct);
                    }
                }

                let through_descent =
                    tilde_correlator(table, genus, &mtilde)?.scale(&sym);
                chi_tilde.insert(genus, tilde_monomial, through_descent);
            }
        }
    }
    Ok((phi, chi, chi_tilde))
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Mismatch {
    pub genus: u32,
    pub monomial: String,
    pub direct: String,
    pub substituted: String,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ChangeOfVariablesReport {
    pub r: u32,
    pub truncation_order: u32,
    pub genus_cap: u32,
    pub pass: bool,
    pub mismatches: Vec<Mismatch>,
}

impl fmt::Display for ChangeOfVariablesReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        write!(
            f,
            "{} (r={}, order {}, genus <= {})",
            verdict, self.r, self.truncation_order, self.genus_cap
        )?;
        for m in &self.mismatches {
            write!(
                f,
                "\n  [g={}] {}: direct = {}, substituted = {}",
                m.genus, m.monomial, m.direct, m.substituted
            )?;
        }
        Ok(())
    }
}

/// Substitutes tt[a*r+m] = variable_map_coefficient(a, m) * t[a, m] into the
/// tilde series and compares it with the direct series coefficient by
/// coefficient, exactly.
pub fn verify_change_of_variables(
    table: &CorrelatorTable,
    truncation_order: u32,
) -> Result<ChangeOfVariablesReport> {
    let r = table.r();
    let (phi, _, chi_tilde) = build_potentials(table, truncation_order)?;
    let mut substituted = PotentialSeries::empty(r, truncation_order, chi_tilde.genus_cap);
    for (genus, stratum) in chi_tilde.strata() {
        for (monomial, value) in stratum {
            let mut scale = BigRational::one();
            let mut vars = Vec::new();
            for (v, e) in monomial.powers() {
                let PotentialVariable::Tilde { mtilde } = v else {
                    unreachable!("tilde series holds tilde variables only");
                };
                let (a, m) = (mtilde / r, mtilde % r);
                let c = variable_map_coefficient(r, a, m)?;
                for _ in 0..e {
                    scale *= c.clone();
                    vars.push(PotentialVariable::Standard { a, m });
                }
            }
            substituted.insert(
                genus,
                PotentialMonomial::from_vars(vars),
                value.scale(&scale),
            );
        }
    }
    let mut mismatches = Vec::new();
    for genus in 0..=phi.genus_cap {
        let empty = BTreeMap::new();
        let left = phi.stratum(genus).unwrap_or(&empty);
        let right = substituted.stratum(genus).unwrap_or(&empty);
        let monomials: std::collections::BTreeSet<&PotentialMonomial> =
            left.keys().chain(right.keys()).collect();
        for monomial in monomials {
            let a = phi.coefficient(genus, monomial);
            let b = substituted.coefficient(genus, monomial);
            if a != b {
                mismatches.push(Mismatch {
                    genus,
                    monomial: monomial.to_string(),
                    direct: a.to_string(),
                    substituted: b.to_string(),
                });
            }
        }
    }
    Ok(ChangeOfVariablesReport {
        r,
        truncation_order,
        genus_cap: phi.genus_cap,
        pass: mismatches.is_empty(),
        mismatches,
    })
}
