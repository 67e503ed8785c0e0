//! Closed-form bounds on the asymptotic excess rate of symbol-wise
//! quantization over the rate-distortion function.
//!
//! Everything here reduces to log-Gamma and elementary functions; values are
//! in nats unless a name says otherwise. The quadratic-distortion
//! per-dimension forms used for the d-sweep figures are provided alongside
//! the general (d, r) forms.

use statrs::function::gamma::ln_gamma;

/// ln 2 — nats per bit.
pub const NATS_PER_BIT: f64 = std::f64::consts::LN_2;

pub fn nats_to_bits(nats: f64) -> f64 {
    nats / NATS_PER_BIT
}

/// One evaluated bound, tagged with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BoundPoint {
    pub d: u32,
    pub r: f64,
    /// Distortion the bound was evaluated at, when it depends on one.
    pub distortion: Option<f64>,
    pub value_nats: f64,
    /// True when the value is normalized per source dimension.
    pub per_dimension: bool,
}

/// Volume of the d-dimensional Euclidean unit ball, π^{d/2}/Γ(1 + d/2).
pub fn unit_ball_volume(d: u32) -> f64 {
    let d = f64::from(d);
    (0.5 * d * std::f64::consts::PI.ln() - ln_gamma(1.0 + 0.5 * d)).exp()
}

/// Lower bound on the excess rate: (d/r)·log(Γ(1 + d/r)^{r/d}·e/(1 + d/r)).
pub fn excess_rate_lb(d: u32, r: f64) -> f64 {
    let d = f64::from(d);
    ln_gamma(1.0 + d / r) + (d / r) * (1.0 - (1.0 + d / r).ln())
}

/// log((r/d)·(V_d Γ(1 + d/r))^{r/d}·e), the constant in the Shannon lower
/// bound and in the tessellating excess rate.
fn slb_constant_log(d: u32, r: f64) -> f64 {
    let df = f64::from(d);
    (r / df).ln() + (r / df) * (unit_ball_volume(d).ln() + ln_gamma(1.0 + df / r)) + 1.0
}

/// Shannon lower bound on R(D) for a source with differential entropy `h`
/// nats: h + (d/r)·log(1/D) − (d/r)·log((r/d)(V_d Γ(1+d/r))^{r/d} e).
///
/// For the sources treated here the bound is asymptotically tight as D → 0,
/// and for the Gaussian-quadratic case it equals R(D) at every D.
pub fn shannon_lower_bound(h: f64, d: u32, r: f64, distortion: f64) -> f64 {
    let df = f64::from(d);
    h - (df / r) * distortion.ln() - (df / r) * slb_constant_log(d, r)
}

/// Excess rate of a tessellating quantizer whose cell has normalized r-th
/// moment `ell`: (d/r)·log((r/d)(V_d Γ(1+d/r))^{r/d} e) + (d/r)·log ℓ.
pub fn tessellating_excess(ell: f64, d: u32, r: f64) -> f64 {
    let df = f64::from(d);
    (df / r) * (slb_constant_log(d, r) + ell.ln())
}

/// Normalized r-th moment of the interval: 1/(2^r (1+r)).
pub fn interval_moment(r: f64) -> f64 {
    1.0 / (2f64.powf(r) * (1.0 + r))
}

/// Zador's random-coding upper bound on the quadratic excess rate per
/// dimension: ½·log(2πe·Γ(1 + 2/d)·Γ(1 + d/2)^{2/d}/(π d)).
pub fn zador_rc_ub_per_dim(d: u32) -> f64 {
    let d = f64::from(d);
    0.5 * ((2.0 * std::f64::consts::E).ln() - d.ln()
        + ln_gamma(1.0 + 2.0 / d)
        + (2.0 / d) * ln_gamma(1.0 + 0.5 * d))
}

/// The converse lower bound per dimension for quadratic distortion:
/// ½·log(2πe·Γ(1 + d/2)^{2/d}/(π(2 + d))). Identical to
/// `excess_rate_lb(d, 2)/d`.
pub fn excess_rate_lb_per_dim_quadratic(d: u32) -> f64 {
    let d = f64::from(d);
    0.5 * ((2.0 * std::f64::consts::E).ln() - (2.0 + d).ln() + (2.0 / d) * ln_gamma(1.0 + 0.5 * d))
}
