//! The experimental layer: excess-rate convergence curves, cell-window
//! concentration statistics for asymptotic optimality, and the
//! piecewise-constant-density property checks that back the high-resolution
//! analysis.
//!
//! Everything here is scalar (d = 1) and computed exactly from cell
//! probabilities and per-cell quadrature — no Monte Carlo — because the
//! acceptance tolerances (hundredths of a bit) sit below MC noise at
//! reasonable sample sizes.

use crate::bounds;
use crate::quad;
use crate::quantizer::{pow_abs, QuantizerFamily, ScalarQuantizer};
use crate::sources::SourceModel;
use crate::{Error, Result};
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

/// Enumeration tolerance for exact entropies inside the curve driver.
const CURVE_MASS_TOL: f64 = 1e-12;

/// One point of an excess-rate curve.
#[derive(Debug, Clone, Copy)]
pub struct ExcessRatePoint {
    /// Target distortion the quantizer was calibrated to.
    pub target_d: f64,
    /// Distortion actually achieved (within the calibration window).
    pub achieved_d: f64,
    /// Exact output entropy H(q(X)) in nats.
    pub entropy_nats: f64,
    /// Reference rate at the achieved distortion (exact R(D) for the
    /// Gaussian-quadratic case, Shannon-lower-bound asymptote otherwise).
    pub reference_nats: f64,
    /// entropy − reference, nats.
    pub excess_nats: f64,
}

/// An excess-rate curve plus any calibration failures (partial results).
#[derive(Debug, Clone)]
pub struct ExcessCurve {
    pub points: Vec<ExcessRatePoint>,
    /// (target distortion, error) for every point that failed to calibrate.
    pub failures: Vec<(f64, String)>,
}

impl ExcessCurve {
    pub fn is_partial(&self) -> bool {
        !self.failures.is_empty()
    }
}

/// Reference rate for the excess computation: the Shannon-lower-bound
/// asymptote h + (1/r)·log(1/D) − (1/r)·log((r)(2Γ(1+1/r))^r e).
///
/// For a Gaussian source with quadratic distortion this expression *is*
/// R(D) = ½ log(σ²/D), so that case is exactly referenced.
pub fn reference_rate(source: &SourceModel, r: f64, distortion: f64) -> Result<f64> {
    if !source.is_scalar() {
        return Err(Error::Unsupported("reference rate is defined for scalar sources".into()));
    }
    if !(distortion > 0.0) {
        return Err(Error::InvalidParameter("distortion must be positive".into()));
    }
    Ok(bounds::shannon_lower_bound(source.differential_entropy(), 1, r, distortion))
}

/// Calibrates the family at every distortion in `d_list` (positive,
/// decreasing) and reports the excess of the exact output entropy over the
/// reference rate. Points are evaluated in parallel; output order follows
/// the input order.
pub fn excess_rate_curve(
    source: &SourceModel,
    r: f64,
    d_list: &[f64],
    family: &QuantizerFamily,
) -> Result<ExcessCurve> {
    if d_list.is_empty() {
        return Err(Error::InvalidParameter("empty distortion list".into()));
    }
    if d_list.iter().any(|&d| !(d.is_finite() && d > 0.0)) {
        return Err(Error::InvalidParameter("distortions must be positive".into()));
    }
    if d_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("distortion list must be strictly decreasing".into()));
    }
    let results: Vec<std::result::Result<ExcessRatePoint, (f64, String)>> = d_list
        .par_iter()
        .map(|&target| {
            let cal = family
                .calibrate(source, r, target)
                .map_err(|e| (target, e.to_string()))?;
            let entropy = cal
                .quantizer
                .output_entropy_exact(source, CURVE_MASS_TOL)
                .map_err(|e| (target, e.to_string()))?;
            let reference =
                reference_rate(source, r, cal.achieved).map_err(|e| (target, e.to_string()))?;
            Ok(ExcessRatePoint {
                target_d: target,
                achieved_d: cal.achieved,
                entropy_nats: entropy.nats,
                reference_nats: reference,
                excess_nats: entropy.nats - reference,
            })
        })
        .collect();
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for res in results {
        match res {
            Ok(p) => points.push(p),
            Err(f) => failures.push(f),
        }
    }
    Ok(ExcessCurve { points, failures })
}

/// Which cell statistic the concentration mass is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConcentrationVariant {
    /// Λᵢ^r/D with Λᵢ the measure of Sᵢ ∩ [x̂ᵢ − ε, x̂ᵢ + ε], ε = ρD^{1/r};
    /// all cells participate (Λ is always finite).
    Theorem2Lambda,
    /// Δᵢ^r/D on bounded cells; the two unbounded cells are skipped and
    /// their mass reported separately.
    CorollaryDelta,
}

impl fmt::Display for ConcentrationVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConcentrationVariant::Theorem2Lambda => "theorem2_lambda",
            ConcentrationVariant::CorollaryDelta => "corollary_delta",
        })
    }
}

impl FromStr for ConcentrationVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theorem2_lambda" | "lambda" => Ok(ConcentrationVariant::Theorem2Lambda),
            "corollary_delta" | "delta" => Ok(ConcentrationVariant::CorollaryDelta),
            _ => Err(Error::Parse(format!("unknown concentration variant '{s}'"))),
        }
    }
}

/// Probability mass on cells whose window statistic lies within ϑ of
/// 2^r(1 + r).
#[derive(Debug, Clone, Copy)]
pub struct ConcentrationResult {
    pub distortion: f64,
    pub rho: f64,
    pub theta: f64,
    pub variant: ConcentrationVariant,
    /// Σᵢ pᵢ · 1{|statᵢ − 2^r(1+r)| ≤ ϑ}.
    pub mass: f64,
    /// Mass skipped by the Δ-variant on the unbounded cells (0 for Λ).
    pub tail_mass: f64,
}

/// Per-cell window measure Λᵢ = |Sᵢ ∩ [x̂ᵢ − ε, x̂ᵢ + ε]|.
#[derive(Debug, Clone, Copy)]
pub struct CellWindowMeasure {
    pub cell: usize,
    pub lambda: f64,
    pub eps: f64,
    /// Cell length Δᵢ; infinite on the tail cells.
    pub width: f64,
}

/// Window measures for every cell at window radius `eps`.
///
/// Λ is computed in the frame centered at the reconstruction and clamped to
/// [0, min(Δᵢ, 2ε)], which the exact quantity satisfies; the clamp only
/// guards sub-ulp rounding so the sandwich 0 ≤ Λᵢ ≤ min(Δᵢ, 2ε) holds
/// exactly in floating point.
pub fn window_measures(q: &ScalarQuantizer, eps: f64) -> Vec<CellWindowMeasure> {
    (0..q.cell_count())
        .map(|i| {
            let (a, b) = q.cell_interval(i);
            let recon = q.reconstructions()[i];
            let lo = (a - recon).max(-eps);
            let hi = (b - recon).min(eps);
            let width = b - a;
            let lambda = (hi - lo).max(0.0).min(2.0 * eps).min(width);
            CellWindowMeasure { cell: i, lambda, eps, width }
        })
        .collect()
}

/// The concentration statistic at parameters (D, ρ, ϑ).
///
/// Precondition: `distortion` is the quantizer's exact r-th power distortion
/// (verified to 1e-6 relative).
pub fn concentration_statistic(
    q: &ScalarQuantizer,
    source: &SourceModel,
    r: f64,
    distortion: f64,
    rho: f64,
    theta: f64,
    variant: ConcentrationVariant,
) -> Result<ConcentrationResult> {
    if !(rho > 0.0 && theta > 0.0) {
        return Err(Error::InvalidParameter("rho and theta must be positive".into()));
    }
    let actual = q.distortion_exact(source, r)?.value;
    if (actual - distortion).abs() > 1e-6 * distortion {
        return Err(Error::InvalidParameter(format!(
            "declared distortion {distortion} is not the quantizer's exact distortion {actual}"
        )));
    }
    let target = 2f64.powf(r) * (1.0 + r);
    let eps = rho * distortion.powf(1.0 / r);
    let masses = q.masses(source);
    let windows = window_measures(q, eps);
    let mut mass = 0.0;
    let mut tail_mass = 0.0;
    for (w, &p) in windows.iter().zip(&masses) {
        let stat = match variant {
            ConcentrationVariant::Theorem2Lambda => pow_abs(w.lambda, r) / distortion,
            ConcentrationVariant::CorollaryDelta => {
                if !w.width.is_finite() {
                    tail_mass += p;
                    continue;
                }
                pow_abs(w.width, r) / distortion
            }
        };
        if (stat - target).abs() <= theta {
            mass += p;
        }
    }
    Ok(ConcentrationResult { distortion, rho, theta, variant, mass, tail_mass })
}

/// Both distortion-constraint inequalities on the out-of-window sets
/// B̄ᵢ,ε = {x ∈ Sᵢ : |x − x̂ᵢ| > ε} at ε^r = D/κ.
#[derive(Debug, Clone, Copy)]
pub struct Lemma3Check {
    /// Σᵢ P(X ∈ B̄ᵢ,ε)
    pub lhs_a: f64,
    /// κ = D/ε^r
    pub bound_a: f64,
    /// Σᵢ E[|X−x̂ᵢ|^r 1{X ∈ B̄ᵢ,ε}]
    pub lhs_b: f64,
    /// D
    pub bound_b: f64,
    pub pass: bool,
}

/// Evaluates both inequalities exactly (CDF differences for the mass,
/// quadrature for the distortion part).
pub fn lemma3_check(
    q: &ScalarQuantizer,
    source: &SourceModel,
    r: f64,
    distortion: f64,
    kappa: f64,
) -> Result<Lemma3Check> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter("kappa must be positive".into()));
    }
    if !(distortion > 0.0) {
        return Err(Error::InvalidParameter("distortion must be positive".into()));
    }
    let eps = (distortion / kappa).powf(1.0 / r);
    let fam = source.family().clone();
    let masses = q.masses(source);
    let mut lhs_a = 0.0;
    let mut lhs_b = 0.0;
    for (i, &p) in masses.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        let (a, b) = q.cell_interval(i);
        let recon = q.reconstructions()[i];
        let wlo = (recon - eps).max(a);
        let whi = (recon + eps).min(b);
        let window_mass = if whi > wlo { fam.cdf(whi) - fam.cdf(wlo) } else { 0.0 };
        lhs_a += (p - window_mass).max(0.0);
        // Distortion outside the window, split into the two remnants.
        let (ia, ib) = q.integration_interval_for(i, source);
        let integrand = |x: f64| pow_abs(x - recon, r) * fam.pdf(x);
        if wlo > ia {
            lhs_b += quad::integrate_with_knots(&integrand, ia, wlo.min(ib), 1e-12, &[recon]);
        }
        if whi < ib {
            lhs_b += quad::integrate_with_knots(&integrand, whi.max(ia), ib, 1e-12, &[recon]);
        }
    }
    let pass = lhs_a <= kappa && lhs_b <= distortion;
    Ok(Lemma3Check { lhs_a, bound_a: kappa, lhs_b, bound_b: distortion, pass })
}

/// Total variation between the source density and the piecewise-constant
/// density f^(Δ) = Σᵢ (pᵢ/Δᵢ)·1{x ∈ Sᵢ}.
#[derive(Debug, Clone, Copy)]
pub struct TvPiecewise {
    /// ∫ |f^(Δ) − f| over the bounded cells.
    pub bounded: f64,
    /// Mass of the unbounded cells, where f^(Δ) degenerates to 0; this is
    /// exactly their total-variation contribution.
    pub tail_mass: f64,
}

impl TvPiecewise {
    pub fn total(&self) -> f64 {
        self.bounded + self.tail_mass
    }
}

pub fn tv_piecewise(q: &ScalarQuantizer, source: &SourceModel) -> Result<TvPiecewise> {
    let fam = source.family().clone();
    let masses = q.masses(source);
    let mut bounded = 0.0;
    let mut tail_mass = 0.0;
    for (i, &p) in masses.iter().enumerate() {
        let (a, b) = q.cell_interval(i);
        if !a.is_finite() || !b.is_finite() {
            tail_mass += p;
            continue;
        }
        if p <= 0.0 {
            // f^(Δ) is 0 on this cell; contribution is the cell's true mass.
            continue;
        }
        let level = p / (b - a);
        bounded += quad::integrate(&|x| (level - fam.pdf(x)).abs(), a, b, 1e-11 * p.max(1e-4));
    }
    Ok(TvPiecewise { bounded, tail_mass })
}

/// The weighted cell-moment statistic (1/D)·Σᵢ pᵢ Δᵢ^r over bounded cells.
#[derive(Debug, Clone, Copy)]
pub struct WeightedCellMoment {
    pub value: f64,
    /// Mass of the excluded unbounded cells.
    pub tail_mass: f64,
}

pub fn weighted_cell_moment(
    q: &ScalarQuantizer,
    source: &SourceModel,
    r: f64,
    distortion: f64,
) -> Result<WeightedCellMoment> {
    if !(distortion > 0.0) {
        return Err(Error::InvalidParameter("distortion must be positive".into()));
    }
    let masses = q.masses(source);
    let mut acc = 0.0;
    let mut tail_mass = 0.0;
    for (i, &p) in masses.iter().enumerate() {
        let width = q.cell_width(i);
        if width.is_finite() {
            acc += p * pow_abs(width, r);
        } else {
            tail_mass += p;
        }
    }
    Ok(WeightedCellMoment { value: acc / distortion, tail_mass })
}

/// The windowed version (1/D)·Σᵢ pᵢ Λᵢ^r at ε = ρD^{1/r}; includes every
/// cell since Λ is always finite.
pub fn weighted_cell_moment_windowed(
    q: &ScalarQuantizer,
    source: &SourceModel,
    r: f64,
    distortion: f64,
    rho: f64,
) -> Result<f64> {
    if !(distortion > 0.0 && rho > 0.0) {
        return Err(Error::InvalidParameter("distortion and rho must be positive".into()));
    }
    let eps = rho * distortion.powf(1.0 / r);
    let masses = q.masses(source);
    let windows = window_measures(q, eps);
    let acc: f64 =
        windows.iter().zip(&masses).map(|(w, &p)| p * pow_abs(w.lambda, r)).sum();
    Ok(acc / distortion)
}

impl ScalarQuantizer {
    /// Finite integration interval for cell `i` (public shim used by the
    /// property checks; tails are cut at the working interval).
    pub(crate) fn integration_interval_for(
        &self,
        i: usize,
        source: &SourceModel,
    ) -> (f64, f64) {
        let (a, b) = self.cell_interval(i);
        let fam = source.family();
        let (wlo, whi) = fam.working_interval();
        let margin = 5.0 * fam.scale();
        let a = if a.is_finite() { a } else { (wlo - margin).min(b - margin) };
        let b = if b.is_finite() { b } else { (whi + margin).max(a + margin) };
        (a, b)
    }
}
