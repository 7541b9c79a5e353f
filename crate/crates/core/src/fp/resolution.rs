//! Quantization step of each message domain, expressed in LLR units.
//!
//! A domain that stores `v = g(lambda)` can only distinguish LLRs that
//! differ by about `|dlambda/dv| * ulp(v)`. In the plain LLR domain that
//! step grows proportionally to lambda itself; the likelihood-ratio
//! domain holds it constant; the likelihood-difference domain loses
//! resolution catastrophically as `tanh(lambda/2)` crowds against 1.

use super::{llr_limit, validate_grid, FpError, SaturationTechnique, BINARY64};

/// Unit in the last place: the gap between `|x|` and the next
/// representable value away from zero. `ulp(0)` is the smallest
/// subnormal; at the very top of the finite range the next value up is
/// infinite and so is the reported gap.
///
/// # Panics
/// If x is NaN or infinite.
pub fn ulp(x: f64) -> f64 {
    let a = x.abs();
    assert!(a.is_finite(), "ulp of a non-finite value");
    f64::from_bits(a.to_bits() + 1) - a
}

/// Message domain whose local resolution is being profiled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LlrDomain {
    /// Plain log-likelihood ratios; the stored value is lambda itself.
    Llr,
    /// Likelihood ratios `e^lambda`.
    Lr,
    /// Likelihood differences `tanh(lambda/2)`.
    Ld,
    /// Offset likelihood differences `2e^-lambda / (1 + e^-lambda)`, the
    /// domain shared by the wide-range involution and offset recursions.
    Git2Old,
}

impl LlrDomain {
    pub const ALL: [LlrDomain; 4] =
        [LlrDomain::Llr, LlrDomain::Lr, LlrDomain::Ld, LlrDomain::Git2Old];

    pub fn tag(self) -> &'static str {
        match self {
            LlrDomain::Llr => "llr",
            LlrDomain::Lr => "lr",
            LlrDomain::Ld => "ld",
            LlrDomain::Git2Old => "git2old",
        }
    }

    /// Largest LLR the domain can represent on the execution format.
    pub fn llr_limit(self) -> f64 {
        let technique = match self {
            LlrDomain::Llr => SaturationTechnique::Msa,
            LlrDomain::Lr => SaturationTechnique::Lr,
            LlrDomain::Ld => SaturationTechnique::Ld,
            LlrDomain::Git2Old => SaturationTechnique::Old,
        };
        llr_limit(technique, BINARY64).value
    }
}

/// Local quantization step at one LLR value in one domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolutionPoint {
    pub lambda: f64,
    /// Smallest LLR increment the domain can resolve near lambda.
    pub step_llr: f64,
    pub domain: LlrDomain,
}

/// Profiles a domain's quantization step over a positive, strictly
/// increasing LLR grid.
///
/// The transformed-domain steps use the analytic Jacobian
/// `|dlambda/dv|` evaluated from `e^-lambda` directly; forming it from
/// the rounded domain value would destroy the quantity being measured.
pub fn resolution_profile(
    domain: LlrDomain,
    grid: &[f64],
) -> Result<Vec<ResolutionPoint>, FpError> {
    validate_grid(grid)?;
    let limit = domain.llr_limit();
    grid.iter()
        .map(|&lambda| {
            if lambda > limit {
                return Err(FpError::DomainRange { domain: domain.tag(), lambda, limit });
            }
            let step_llr = match domain {
                LlrDomain::Llr => ulp(lambda),
                LlrDomain::Lr => {
                    let v = lambda.exp();
                    ulp(v) / v
                }
                LlrDomain::Ld => {
                    let v = (lambda * 0.5).tanh();
                    ulp(v) * jacobian_llr_per_delta(lambda)
                }
                LlrDomain::Git2Old => {
                    let u = (-lambda).exp();
                    let v = 2.0 * u / (1.0 + u);
                    ulp(v) * jacobian_llr_per_delta(lambda)
                }
            };
            Ok(ResolutionPoint { lambda, step_llr, domain })
        })
        .collect()
}

/// `|dlambda/dv|` for `v = tanh(lambda/2)` and equally for its offset
/// complement: `(1 + e^-lambda)^2 / (2 e^-lambda)`.
fn jacobian_llr_per_delta(lambda: f64) -> f64 {
    let u = (-lambda).exp();
    (1.0 + u) * (1.0 + u) / (2.0 * u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ulp_matches_known_binades() {
        assert_eq!(ulp(1.0), f64::EPSILON);
        assert_eq!(ulp(0.75), f64::EPSILON / 2.0);
        assert_eq!(ulp(37.0), 2f64.powi(-47));
        assert_eq!(ulp(-37.0), 2f64.powi(-47));
        assert_eq!(ulp(0.0), 5e-324);
        assert_eq!(ulp(5e-324), 5e-324);
    }

    #[test]
    fn llr_domain_step_is_the_ulp() {
        let pts = resolution_profile(LlrDomain::Llr, &[1.0, 37.0]).unwrap();
        assert_eq!(pts[0].step_llr, 2f64.powi(-52));
        assert_eq!(pts[1].step_llr, 2f64.powi(-47));
    }

    #[test]
    fn lr_domain_step_is_roughly_constant_in_llr_units() {
        let pts = resolution_profile(LlrDomain::Lr, &[1.0, 10.0, 100.0, 300.0]).unwrap();
        for p in &pts {
            assert!(
                p.step_llr > 1.1e-16 && p.step_llr < 2.3e-16,
                "step {} at lambda {}",
                p.step_llr,
                p.lambda
            );
        }
    }

    #[test]
    fn ld_domain_resolution_collapses_near_its_range_limit() {
        let ld = resolution_profile(LlrDomain::Ld, &[37.0]).unwrap()[0].step_llr;
        assert!(ld > 0.5 && ld < 0.8, "got {ld}");
        assert!(ld / ulp(37.0) > 1e10);
    }

    #[test]
    fn offset_domain_keeps_llr_like_resolution_at_large_lambda() {
        let pts = resolution_profile(LlrDomain::Git2Old, &[10.0, 37.0, 300.0]).unwrap();
        for p in &pts {
            assert!(p.step_llr < 1e-15, "step {} at lambda {}", p.step_llr, p.lambda);
        }
    }

    #[test]
    fn out_of_range_lambda_is_a_domain_error() {
        let err = resolution_profile(LlrDomain::Ld, &[38.0]).unwrap_err();
        assert!(matches!(err, FpError::DomainRange { domain: "ld", .. }));
        let err = resolution_profile(LlrDomain::Lr, &[1.0, 356.0]).unwrap_err();
        assert!(matches!(err, FpError::DomainRange { domain: "lr", .. }));
        // The offset domain reaches much further.
        assert!(resolution_profile(LlrDomain::Git2Old, &[745.0]).is_ok());
    }
}
