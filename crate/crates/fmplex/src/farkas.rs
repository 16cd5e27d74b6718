//! Farkas certificates: nonnegative row combinations witnessing
//! unsatisfiability.

use crate::rational::{DeltaRational, Rational};
use crate::system::{LinearSystem, RowCombination};
use num_traits::Zero;
use std::collections::BTreeSet;

/// Multipliers `f ≥ 0` over the rows of an original system. The certificate
/// is valid for `Âx ≤ b̂` when `f·Â = 0` and `f·b̂ < 0`: the combination is
/// the contradiction `0 ≤ negative`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FarkasCertificate {
    pub multipliers: RowCombination,
}

impl FarkasCertificate {
    pub fn new(multipliers: RowCombination) -> Self {
        FarkasCertificate { multipliers }
    }

    /// The rows the certificate touches: an unsatisfiable subset of the
    /// original system when the certificate is valid.
    pub fn core(&self) -> BTreeSet<usize> {
        self.multipliers.support().collect()
    }
}

/// Check a certificate against the system it refers to. All three conditions
/// are verified exactly; the bound comparison happens in the delta order.
pub fn check_farkas(cert: &FarkasCertificate, original: &LinearSystem) -> bool {
    if !cert.multipliers.is_nonnegative() {
        return false;
    }
    if cert.multipliers.support().any(|i| i >= original.len()) {
        return false;
    }
    let mut coeffs = vec![Rational::zero(); original.nvars()];
    let mut bound = DeltaRational::zero();
    for (i, f) in cert.multipliers.iter() {
        let row = original.row(i);
        for (k, c) in row.coeffs.iter().enumerate() {
            coeffs[k] = &coeffs[k] + &(c * f);
        }
        bound.add_scaled(&row.bound, f);
    }
    coeffs.iter().all(Rational::is_zero) && bound.is_negative()
}
