//! Symbol-wise quantizers: scalar interval partitions with exact (CDF-based)
//! evaluation, and lattice vector quantizers with Monte Carlo evaluation.
//!
//! Scalar cells are left-closed, right-open; the two outermost cells are
//! unbounded. Exact output entropy enumerates cell masses through the source
//! CDF and carries an explicit interval bound for the un-enumerated tail
//! mass; exact distortion integrates |x − x̂ᵢ|^r per cell by adaptive
//! quadrature with a declared absolute tolerance.

use crate::lattice::Lattice;
use crate::mc::{self, RunningMoments};
use crate::quad;
use crate::sources::SourceModel;
use crate::{Error, Result};
use statrs::function::gamma::gamma;
use std::collections::BTreeMap;
use std::str::FromStr;

/// Absolute quadrature tolerance for exact distortion.
const DISTORTION_TOL: f64 = 1e-10;
/// Cells with less mass than this are bounded instead of integrated.
const MASS_FLOOR: f64 = 1e-16;
/// Default enumeration tolerance for exact entropy.
const ENTROPY_MASS_TOL: f64 = 1e-12;
/// Hard cap on the number of cells a constructor will build.
const MAX_CELLS: usize = 50_000_000;

/// |x|^r with fast paths for the common exponents.
pub(crate) fn pow_abs(x: f64, r: f64) -> f64 {
    if r == 2.0 {
        x * x
    } else if r == 1.0 {
        x.abs()
    } else {
        x.abs().powf(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReconMode {
    Midpoint,
    Centroid,
}

#[derive(Debug, Clone, PartialEq)]
pub enum QuantizerKind {
    Uniform { step: f64, offset: f64 },
    AlmostRegular { pattern: Vec<f64>, base: f64 },
    Custom,
}

/// An interval partition of ℝ with one reconstruction point per cell.
///
/// With `m − 1` finite boundaries b₁ < … < b_{m−1} the cells are
/// (−∞, b₁), [b₁, b₂), …, [b_{m−1}, ∞).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarQuantizer {
    boundaries: Vec<f64>,
    reconstructions: Vec<f64>,
    kind: QuantizerKind,
}

/// How an estimate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ExactScalar,
    Mc,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ExactScalar => "exact_scalar",
            Method::Mc => "mc",
        }
    }
}

/// Output entropy estimate in nats with a one-sided error bound:
/// the true entropy lies in [nats, nats + error_bound] for the exact method.
#[derive(Debug, Clone, Copy)]
pub struct EntropyEstimate {
    pub nats: f64,
    pub error_bound: f64,
    pub method: Method,
    pub n: Option<u64>,
    pub seed: Option<u64>,
    /// MC mode only: fewer than 100 samples per observed cell.
    pub unreliable: bool,
}

/// Distortion estimate E‖X − q(X)‖^r with its error bound (quadrature
/// tolerance plus tail bounds for the exact method, standard error for MC).
#[derive(Debug, Clone, Copy)]
pub struct DistortionEstimate {
    pub value: f64,
    pub error_bound: f64,
    pub method: Method,
    pub n: Option<u64>,
    pub seed: Option<u64>,
}

/// One (quantizer, source, r) evaluation, serializable for the CLI.
#[derive(Debug, Clone, serde::Serialize)]
pub struct QuantizerReport {
    pub distortion: f64,
    pub distortion_err: f64,
    pub entropy_nats: f64,
    pub entropy_err: f64,
    pub r: f64,
    pub method: String,
    pub n: Option<u64>,
    pub seed: Option<u64>,
}

/// Enumerated cell masses plus the mass left out of the enumeration.
#[derive(Debug, Clone)]
pub struct CellMasses {
    /// (cell index, pᵢ) for every cell intersecting the enumerated band.
    pub cells: Vec<(usize, f64)>,
    pub residual: f64,
}

impl ScalarQuantizer {
    pub fn from_parts(
        boundaries: Vec<f64>,
        reconstructions: Vec<f64>,
        kind: QuantizerKind,
    ) -> Result<Self> {
        if boundaries.is_empty() {
            return Err(Error::InvalidParameter("need at least one boundary".into()));
        }
        if reconstructions.len() != boundaries.len() + 1 {
            return Err(Error::InvalidParameter(format!(
                "{} boundaries require {} reconstructions, got {}",
                boundaries.len(),
                boundaries.len() + 1,
                reconstructions.len()
            )));
        }
        if !boundaries.windows(2).all(|w| w[0] < w[1]) || !boundaries[0].is_finite() {
            return Err(Error::InvalidParameter(
                "boundaries must be finite and strictly increasing".into(),
            ));
        }
        let q = Self { boundaries, reconstructions, kind };
        // Regular kinds keep the reconstruction inside the closed cell.
        if !matches!(q.kind, QuantizerKind::Custom) {
            for i in 0..q.cell_count() {
                let (a, b) = q.cell_interval(i);
                let x = q.reconstructions[i];
                if !(x >= a && x <= b) || !x.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "reconstruction {x} outside cell {i} = [{a}, {b})"
                    )));
                }
            }
        }
        if let QuantizerKind::Uniform { step, .. } = q.kind {
            for w in q.boundaries.windows(2) {
                // Adjacent differences of offset + kΔ wobble by the ulp of
                // the boundary magnitude, not of the step.
                let tol = f64::EPSILON * (8.0 * w[1].abs().max(w[0].abs()) + 2.0 * step);
                if ((w[1] - w[0]) - step).abs() > tol {
                    return Err(Error::InvalidParameter(format!(
                        "uniform kind declares step {step} but a cell has length {}",
                        w[1] - w[0]
                    )));
                }
            }
        }
        Ok(q)
    }

    /// Uniform quantizer with cell length `step` and boundaries on
    /// `offset + kΔ`, covering the source's working interval, midpoint
    /// reconstructions.
    pub fn uniform_covering(source: &SourceModel, step: f64, offset: f64) -> Result<Self> {
        require_scalar(source)?;
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidParameter("step must be positive".into()));
        }
        let (lo, hi) = source.family().working_interval();
        let k_lo = ((lo - offset) / step).floor() as i64;
        let k_hi = ((hi - offset) / step).ceil() as i64;
        let count = (k_hi - k_lo + 1) as usize;
        if count > MAX_CELLS {
            return Err(Error::InvalidParameter(format!(
                "step {step} would create {count} cells"
            )));
        }
        let boundaries: Vec<f64> = (k_lo..=k_hi).map(|k| offset + k as f64 * step).collect();
        let mut recons = Vec::with_capacity(boundaries.len() + 1);
        recons.push(boundaries[0] - 0.5 * step);
        for w in boundaries.windows(2) {
            recons.push(0.5 * (w[0] + w[1]));
        }
        recons.push(boundaries[boundaries.len() - 1] + 0.5 * step);
        Self::from_parts(boundaries, recons, QuantizerKind::Uniform { step, offset })
    }

    /// Almost-regular quantizer: cell lengths cycle through `base·pattern`,
    /// anchored at 0 and tiled across the source's working interval.
    pub fn almost_regular(
        source: &SourceModel,
        pattern: &[f64],
        base: f64,
        recon: ReconMode,
    ) -> Result<Self> {
        require_scalar(source)?;
        if pattern.is_empty() || pattern.iter().any(|&p| !(p.is_finite() && p > 0.0)) {
            return Err(Error::InvalidParameter(
                "pattern must be nonempty with positive entries".into(),
            ));
        }
        if !(base.is_finite() && base > 0.0) {
            return Err(Error::InvalidParameter("base step must be positive".into()));
        }
        let (lo, hi) = source.family().working_interval();
        let period: f64 = pattern.iter().sum::<f64>() * base;
        let cells_per_period = pattern.len() as f64;
        let est = ((hi - lo) / period + 2.0) * cells_per_period;
        if !(est.is_finite() && est < MAX_CELLS as f64) {
            return Err(Error::InvalidParameter(format!(
                "base {base} would create ~{est} cells"
            )));
        }
        let mut boundaries = vec![0.0];
        // Rightward: pattern order; leftward: reversed, keeping the tiling
        // periodic across the anchor.
        let mut x = 0.0;
        let mut i = 0usize;
        while x <= hi {
            x += base * pattern[i % pattern.len()];
            boundaries.push(x);
            i += 1;
        }
        let mut x = 0.0;
        let mut i = 0usize;
        while x >= lo {
            x -= base * pattern[pattern.len() - 1 - (i % pattern.len())];
            boundaries.push(x);
            i += 1;
        }
        boundaries.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let first_w = boundaries[1] - boundaries[0];
        let last_w = boundaries[boundaries.len() - 1] - boundaries[boundaries.len() - 2];
        let mut recons = Vec::with_capacity(boundaries.len() + 1);
        recons.push(boundaries[0] - 0.5 * first_w);
        for w in boundaries.windows(2) {
            recons.push(0.5 * (w[0] + w[1]));
        }
        recons.push(boundaries[boundaries.len() - 1] + 0.5 * last_w);
        let mut q = Self::from_parts(
            boundaries,
            recons,
            QuantizerKind::AlmostRegular { pattern: pattern.to_vec(), base },
        )?;
        if recon == ReconMode::Centroid {
            q.move_reconstructions_to_centroids(source)?;
        }
        Ok(q)
    }

    fn move_reconstructions_to_centroids(&mut self, source: &SourceModel) -> Result<()> {
        let masses = self.masses(source);
        let fam = source.family().clone();
        for (i, &p) in masses.iter().enumerate() {
            if p <= MASS_FLOOR {
                continue;
            }
            let (a, b) = self.integration_interval(i, source);
            let m = quad::integrate(&|x| x * fam.pdf(x), a, b, 1e-12 * p.max(1e-6));
            let c = (m / p).clamp(a, b);
            if c.is_finite() {
                self.reconstructions[i] = c;
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> &QuantizerKind {
        &self.kind
    }

    pub fn cell_count(&self) -> usize {
        self.boundaries.len() + 1
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn reconstructions(&self) -> &[f64] {
        &self.reconstructions
    }

    /// [a, b) endpoints of cell `i`; ±∞ on the outermost cells.
    pub fn cell_interval(&self, i: usize) -> (f64, f64) {
        let a = if i == 0 { f64::NEG_INFINITY } else { self.boundaries[i - 1] };
        let b = if i == self.boundaries.len() { f64::INFINITY } else { self.boundaries[i] };
        (a, b)
    }

    /// Cell length Δᵢ (infinite on the tails).
    pub fn cell_width(&self, i: usize) -> f64 {
        let (a, b) = self.cell_interval(i);
        b - a
    }

    /// Maps `x` to its (cell index, reconstruction). Boundary points belong
    /// to the cell on their right.
    pub fn quantize(&self, x: f64) -> (usize, f64) {
        let i = self.boundaries.partition_point(|&b| b <= x);
        (i, self.reconstructions[i])
    }

    /// pᵢ for every cell, from CDF differences (survival function on the
    /// right tail).
    pub fn masses(&self, source: &SourceModel) -> Vec<f64> {
        let fam = source.family();
        let cdfs: Vec<f64> = self.boundaries.iter().map(|&b| fam.cdf(b)).collect();
        let mut out = Vec::with_capacity(self.cell_count());
        out.push(cdfs[0]);
        for w in cdfs.windows(2) {
            out.push((w[1] - w[0]).max(0.0));
        }
        out.push(fam.sf(self.boundaries[self.boundaries.len() - 1]));
        out
    }

    /// Cells intersecting the quantile band [tol, 1 − tol]; the residual is
    /// the mass of everything left out.
    pub fn cell_probabilities(
        &self,
        source: &SourceModel,
        mass_tolerance: f64,
    ) -> Result<CellMasses> {
        require_scalar(source)?;
        if !(mass_tolerance > 0.0 && mass_tolerance < 0.5) {
            return Err(Error::InvalidParameter("mass_tolerance must be in (0, 0.5)".into()));
        }
        let masses = self.masses(source);
        let (first, last) = enumeration_range(&masses, mass_tolerance);
        let mut cells = Vec::with_capacity(last + 1 - first);
        let mut included = 0.0;
        for (i, &p) in masses.iter().enumerate().take(last + 1).skip(first) {
            cells.push((i, p));
            included += p;
        }
        Ok(CellMasses { cells, residual: (1.0 - included).max(0.0) })
    }

    /// Exact output entropy with a one-sided tail bound; see
    /// [`EntropyEstimate`].
    pub fn output_entropy_exact(
        &self,
        source: &SourceModel,
        mass_tolerance: f64,
    ) -> Result<EntropyEstimate> {
        require_scalar(source)?;
        let masses = self.masses(source);
        let (first, last) = enumeration_range(&masses, mass_tolerance);
        let mut nats = 0.0;
        for &p in &masses[first..=last] {
            if p > 0.0 {
                nats -= p * p.ln();
            }
        }
        let eps_left: f64 = masses[..first].iter().sum();
        let eps_right: f64 = masses[last + 1..].iter().sum();
        // Smallest bounded cell width: most conservative geometric ratio.
        let min_width = (1..self.cell_count() - 1)
            .map(|i| self.cell_width(i))
            .fold(f64::INFINITY, f64::min);
        let fam = source.family();
        let mut bound = 0.0;
        for (eps, right) in [(eps_left, false), (eps_right, true)] {
            if eps > 0.0 {
                let edge = if right {
                    self.cell_interval(last).1.min(self.boundaries[self.boundaries.len() - 1])
                } else {
                    self.cell_interval(first).0.max(self.boundaries[0])
                };
                let q = fam.tail_ratio_bound(edge, min_width.max(1e-12), right);
                bound += -eps * eps.ln() + eps * geometric_entropy(q);
            }
        }
        Ok(EntropyEstimate {
            nats,
            error_bound: bound,
            method: Method::ExactScalar,
            n: None,
            seed: None,
            unreliable: false,
        })
    }

    /// Plug-in entropy from `n` samples with the Miller–Madow bias
    /// correction; the correction magnitude is reported as the error bound.
    pub fn output_entropy_mc(
        &self,
        source: &SourceModel,
        n: usize,
        seed: u64,
    ) -> Result<EntropyEstimate> {
        require_scalar(source)?;
        if n == 0 {
            return Err(Error::InvalidParameter("need at least one sample".into()));
        }
        let q = self.clone();
        let fam = source.family().clone();
        let counts = mc::map_reduce_blocks(
            seed,
            n,
            move |rng, count| {
                let mut map: BTreeMap<usize, u64> = BTreeMap::new();
                for _ in 0..count {
                    let x = fam.quantile(mc::next_open01(rng));
                    *map.entry(q.quantize(x).0).or_insert(0) += 1;
                }
                map
            },
            |mut acc: BTreeMap<usize, u64>, part| {
                for (k, v) in part {
                    *acc.entry(k).or_insert(0) += v;
                }
                acc
            },
        );
        let nf = n as f64;
        let mut plugin = 0.0;
        for &c in counts.values() {
            let p = c as f64 / nf;
            plugin -= p * p.ln();
        }
        let k = counts.len() as f64;
        let correction = (k - 1.0) / (2.0 * nf);
        Ok(EntropyEstimate {
            nats: plugin + correction,
            error_bound: correction,
            method: Method::Mc,
            n: Some(n as u64),
            seed: Some(seed),
            unreliable: (n as f64) < 100.0 * k,
        })
    }

    /// Integration bounds for cell `i`: finite cells as-is, tail cells cut
    /// at the working interval (beyond-edge mass is handled by a closed-form
    /// bound).
    fn integration_interval(&self, i: usize, source: &SourceModel) -> (f64, f64) {
        let (a, b) = self.cell_interval(i);
        let fam = source.family();
        let (wlo, whi) = fam.working_interval();
        let margin = 5.0 * fam.scale();
        let a = if a.is_finite() { a } else { (wlo - margin).min(b - margin) };
        let b = if b.is_finite() { b } else { (whi + margin).max(a + margin) };
        (a, b)
    }

    /// Exact r-th power distortion by per-cell adaptive quadrature.
    pub fn distortion_exact(&self, source: &SourceModel, r: f64) -> Result<DistortionEstimate> {
        require_scalar(source)?;
        if !(r > 0.0) {
            return Err(Error::InvalidParameter("distortion exponent must be positive".into()));
        }
        let fam = source.family().clone();
        let masses = self.masses(source);
        let mut value = 0.0;
        let mut err = DISTORTION_TOL;
        for (i, &p) in masses.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            let recon = self.reconstructions[i];
            if p <= MASS_FLOOR {
                // Too little mass to be worth integrating; bound it instead.
                let width = self.cell_width(i);
                if width.is_finite() {
                    err += p * pow_abs(width, r);
                } else {
                    let (a, b) = self.integration_interval(i, source);
                    err += p * pow_abs(b - a, r) + tail_beyond_bound(&fam, i == 0, recon, r, a, b);
                }
                continue;
            }
            let (a, b) = self.integration_interval(i, source);
            let integrand = |x: f64| pow_abs(x - recon, r) * fam.pdf(x);
            value += quad::integrate_with_knots(&integrand, a, b, DISTORTION_TOL * p, &[recon]);
            let (ca, cb) = self.cell_interval(i);
            if !ca.is_finite() || !cb.is_finite() {
                err += tail_beyond_bound(&fam, i == 0, recon, r, a, b);
            }
        }
        Ok(DistortionEstimate {
            value,
            error_bound: err,
            method: Method::ExactScalar,
            n: None,
            seed: None,
        })
    }

    /// Monte Carlo distortion with standard error.
    pub fn distortion_mc(
        &self,
        source: &SourceModel,
        r: f64,
        n: usize,
        seed: u64,
    ) -> Result<DistortionEstimate> {
        require_scalar(source)?;
        if n < 2 {
            return Err(Error::InvalidParameter("need at least two samples".into()));
        }
        let q = self.clone();
        let fam = source.family().clone();
        let m = mc::map_reduce_blocks(
            seed,
            n,
            move |rng, count| {
                let mut acc = RunningMoments::default();
                for _ in 0..count {
                    let x = fam.quantile(mc::next_open01(rng));
                    let (_, recon) = q.quantize(x);
                    acc.push(pow_abs(x - recon, r));
                }
                acc
            },
            RunningMoments::merge,
        );
        Ok(DistortionEstimate {
            value: m.mean(),
            error_bound: m.std_error(),
            method: Method::Mc,
            n: Some(n as u64),
            seed: Some(seed),
        })
    }

    /// Splits the cell containing `at` by inserting a boundary there.
    /// Reconstructions of the two halves are midpoints (test utility for
    /// refinement properties); the kind degrades to `Custom`.
    pub fn split_cell(&self, at: f64) -> Result<Self> {
        if self.boundaries.contains(&at) || !at.is_finite() {
            return Err(Error::InvalidParameter("split point must be strictly inside a cell".into()));
        }
        let (i, _) = self.quantize(at);
        let (a, b) = self.cell_interval(i);
        let mut boundaries = self.boundaries.clone();
        boundaries.insert(i, at);
        let mut recons = self.reconstructions.clone();
        let left = if a.is_finite() { 0.5 * (a + at) } else { at - 0.5 };
        let right = if b.is_finite() { 0.5 * (at + b) } else { at + 0.5 };
        recons[i] = right;
        recons.insert(i, left);
        Self::from_parts(boundaries, recons, QuantizerKind::Custom)
    }

    /// Full report (exact scalar evaluation).
    pub fn report_exact(&self, source: &SourceModel, r: f64) -> Result<QuantizerReport> {
        let ent = self.output_entropy_exact(source, ENTROPY_MASS_TOL)?;
        let dist = self.distortion_exact(source, r)?;
        Ok(QuantizerReport {
            distortion: dist.value,
            distortion_err: dist.error_bound,
            entropy_nats: ent.nats,
            entropy_err: ent.error_bound,
            r,
            method: Method::ExactScalar.as_str().into(),
            n: None,
            seed: None,
        })
    }

    /// Full report (Monte Carlo evaluation).
    pub fn report_mc(
        &self,
        source: &SourceModel,
        r: f64,
        n: usize,
        seed: u64,
    ) -> Result<QuantizerReport> {
        let ent = self.output_entropy_mc(source, n, seed)?;
        let dist = self.distortion_mc(source, r, n, seed)?;
        Ok(QuantizerReport {
            distortion: dist.value,
            distortion_err: dist.error_bound,
            entropy_nats: ent.nats,
            entropy_err: ent.error_bound,
            r,
            method: Method::Mc.as_str().into(),
            n: Some(n as u64),
            seed: Some(seed),
        })
    }
}

fn require_scalar(source: &SourceModel) -> Result<()> {
    if source.is_scalar() {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "scalar quantizer evaluation requires a 1-dimensional source, got {}",
            source.dimension()
        )))
    }
}

/// Index range (first..=last) of cells intersecting the quantile band
/// [tol, 1 − tol].
fn enumeration_range(masses: &[f64], tol: f64) -> (usize, usize) {
    let m = masses.len();
    let mut cum = 0.0;
    let mut first = 0;
    for (i, &p) in masses.iter().enumerate() {
        if cum + p > tol {
            first = i;
            break;
        }
        cum += p;
    }
    let mut cum = 0.0;
    let mut last = m - 1;
    for (i, &p) in masses.iter().enumerate().rev() {
        if cum + p > tol {
            last = i;
            break;
        }
        cum += p;
    }
    (first, last.max(first))
}

/// Entropy of the geometric distribution with ratio `q`, in nats.
fn geometric_entropy(q: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    let q = q.min(0.999_999);
    -(1.0 - q).ln() - q * q.ln() / (1.0 - q)
}

/// Upper bound on ∫ |x − recon|^r f(x) dx beyond the integrated range of an
/// unbounded tail cell, using the log-concave tail envelope
/// f(x) ≤ f(edge)·e^{−λ|x−edge|}.
fn tail_beyond_bound(
    fam: &crate::sources::ScalarFamily,
    left: bool,
    recon: f64,
    r: f64,
    a: f64,
    b: f64,
) -> f64 {
    let (slo, shi) = fam.support();
    let edge = if left { a } else { b };
    if (left && slo.is_finite()) || (!left && shi.is_finite()) {
        return 0.0;
    }
    let f_edge = fam.pdf(edge);
    if f_edge <= 0.0 {
        return 0.0;
    }
    let probe = 0.5 * fam.scale();
    let f_in = fam.pdf(if left { edge + probe } else { edge - probe });
    if f_in <= f_edge {
        // Not in the decaying tail; give up on a tight bound.
        return f64::INFINITY;
    }
    let lambda = ((f_in / f_edge).ln() / probe).max(1e-3);
    let c = (edge - recon).abs();
    let split = 2f64.powf((r - 1.0).max(0.0));
    f_edge * split * (pow_abs(c, r) / lambda + gamma(r + 1.0) / lambda.powf(r + 1.0))
}

/// A parametric family of scalar quantizers for distortion calibration.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantizerFamily {
    UniformMidpoint { offset: f64 },
    Pattern { pattern: Vec<f64>, recon: ReconMode },
}

/// Result of calibrating a family to a target distortion.
#[derive(Debug, Clone)]
pub struct Calibrated {
    pub quantizer: ScalarQuantizer,
    pub achieved: f64,
}

impl QuantizerFamily {
    pub fn build(&self, source: &SourceModel, step: f64) -> Result<ScalarQuantizer> {
        match self {
            QuantizerFamily::UniformMidpoint { offset } => {
                ScalarQuantizer::uniform_covering(source, step, *offset)
            }
            QuantizerFamily::Pattern { pattern, recon } => {
                ScalarQuantizer::almost_regular(source, pattern, step, *recon)
            }
        }
    }

    /// Bisection on the step size until the exact distortion lies in
    /// [target·(1 − 1e-6), target].
    pub fn calibrate(&self, source: &SourceModel, r: f64, target: f64) -> Result<Calibrated> {
        require_scalar(source)?;
        if !(target.is_finite() && target > 0.0) {
            return Err(Error::InvalidParameter("target distortion must be positive".into()));
        }
        let window = (target * (1.0 - 1e-6), target);
        let eval = |step: f64| -> Result<f64> {
            Ok(self.build(source, step)?.distortion_exact(source, r)?.value)
        };
        // High-resolution guess: a uniform quantizer with cells of length
        // 2(1+r)^{1/r} D^{1/r} has distortion ≈ D.
        let max_pattern = match self {
            QuantizerFamily::Pattern { pattern, .. } =>
                pattern.iter().cloned().fold(1.0, f64::max),
            _ => 1.0,
        };
        let guess = 2.0 * (1.0 + r).powf(1.0 / r) * target.powf(1.0 / r) / max_pattern;
        let mut lo = guess * 0.5;
        let mut hi = guess * 2.0;
        let mut d_lo = eval(lo)?;
        for _ in 0..60 {
            if d_lo < window.1 {
                break;
            }
            lo *= 0.5;
            d_lo = eval(lo)?;
        }
        if d_lo >= window.1 {
            return Err(Error::Nonconvergent(format!(
                "calibration bracket failure: distortion {d_lo} at smallest step {lo}"
            )));
        }
        let mut d_hi = eval(hi)?;
        for _ in 0..60 {
            if d_hi >= window.0 {
                break;
            }
            hi *= 2.0;
            d_hi = eval(hi)?;
        }
        if d_hi < window.0 {
            return Err(Error::Nonconvergent(format!(
                "calibration bracket failure: distortion {d_hi} at largest step {hi}"
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let d_mid = eval(mid)?;
            if d_mid >= window.0 && d_mid <= window.1 {
                return Ok(Calibrated { quantizer: self.build(source, mid)?, achieved: d_mid });
            }
            if d_mid > window.1 {
                hi = mid;
                d_hi = d_mid;
            } else {
                lo = mid;
                d_lo = d_mid;
            }
        }
        Err(Error::Nonconvergent(format!(
            "calibration did not reach [{}, {}]; achieved interval [{d_lo}, {d_hi}]",
            window.0, window.1
        )))
    }
}

impl FromStr for QuantizerFamily {
    type Err = Error;

    /// `uniform`, `uniform_midpoint`, or `pattern:1,2` (midpoint
    /// reconstructions).
    fn from_str(s: &str) -> Result<Self> {
        if s == "uniform" || s == "uniform_midpoint" {
            return Ok(QuantizerFamily::UniformMidpoint { offset: 0.0 });
        }
        if let Some(rest) = s.strip_prefix("pattern:") {
            let pattern = parse_pattern(rest)?;
            return Ok(QuantizerFamily::Pattern { pattern, recon: ReconMode::Midpoint });
        }
        Err(Error::Parse(format!("unknown quantizer family '{s}'")))
    }
}

fn parse_pattern(s: &str) -> Result<Vec<f64>> {
    let pattern: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Parse(format!("bad pattern '{s}'")))?;
    if pattern.is_empty() || pattern.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::Parse(format!("bad pattern '{s}'")));
    }
    Ok(pattern)
}

/// Convenience wrapper: calibrates the uniform midpoint family.
pub fn calibrate_uniform_step(
    source: &SourceModel,
    r: f64,
    target: f64,
    offset: f64,
) -> Result<Calibrated> {
    QuantizerFamily::UniformMidpoint { offset }.calibrate(source, r, target)
}

/// A lattice quantizer q(x) = α·nearest(x/α); reconstruction values are the
/// lattice points themselves (cell centroids by symmetry).
#[derive(Debug, Clone)]
pub struct LatticeQuantizer {
    lattice: Lattice,
    alpha: f64,
}

impl LatticeQuantizer {
    pub fn new(lattice: Lattice, alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter("lattice quantizer scale must be positive".into()));
        }
        Ok(Self { lattice, alpha })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// (label in generator basis, reconstruction point).
    pub fn quantize(&self, x: &[f64]) -> Result<(Vec<i64>, Vec<f64>)> {
        let scaled: Vec<f64> = x.iter().map(|&v| v / self.alpha).collect();
        let nearest = self.lattice.nearest_point(&scaled)?;
        let label = self.lattice.label(&nearest)?;
        let recon: Vec<f64> = nearest.iter().map(|&v| v * self.alpha).collect();
        Ok((label, recon))
    }

    /// Monte Carlo distortion and output entropy on a product source whose
    /// dimension matches the lattice's ambient dimension.
    pub fn report_mc(
        &self,
        source: &SourceModel,
        r: f64,
        n: usize,
        seed: u64,
    ) -> Result<QuantizerReport> {
        let ambient = self.lattice.ambient_dim();
        if source.dimension() != ambient {
            return Err(Error::DimensionMismatch { expected: ambient, got: source.dimension() });
        }
        if n < 2 {
            return Err(Error::InvalidParameter("need at least two samples".into()));
        }
        let q = self.clone();
        let fam = source.family().clone();
        let (moments, counts) = mc::map_reduce_blocks(
            seed,
            n,
            move |rng, count| {
                let mut acc = RunningMoments::default();
                let mut map: BTreeMap<Vec<i64>, u64> = BTreeMap::new();
                let mut x = vec![0.0; ambient];
                for _ in 0..count {
                    for xi in x.iter_mut() {
                        *xi = fam.quantile(mc::next_open01(rng));
                    }
                    let (label, recon) = q.quantize(&x).expect("dimension is consistent");
                    let d2: f64 = x.iter().zip(&recon).map(|(a, b)| (a - b) * (a - b)).sum();
                    acc.push(if r == 2.0 { d2 } else { d2.powf(0.5 * r) });
                    *map.entry(label).or_insert(0) += 1;
                }
                (acc, map)
            },
            |(am, amap): (RunningMoments, BTreeMap<Vec<i64>, u64>), (bm, bmap)| {
                let mut map = amap;
                for (k, v) in bmap {
                    *map.entry(k).or_insert(0) += v;
                }
                (am.merge(bm), map)
            },
        );
        let nf = n as f64;
        let mut plugin = 0.0;
        for &c in counts.values() {
            let p = c as f64 / nf;
            plugin -= p * p.ln();
        }
        let k = counts.len() as f64;
        let correction = (k - 1.0) / (2.0 * nf);
        Ok(QuantizerReport {
            distortion: moments.mean(),
            distortion_err: moments.std_error(),
            entropy_nats: plugin + correction,
            entropy_err: correction,
            r,
            method: Method::Mc.as_str().into(),
            n: Some(n as u64),
            seed: Some(seed),
        })
    }
}

/// A quantizer named on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantizerSpec {
    /// `uniform:Δ` or `uniform:Δ,offset`
    Uniform { step: f64, offset: f64 },
    /// `pattern:1,2@Δ`
    Pattern { pattern: Vec<f64>, base: f64 },
    /// `lattice:E8@α` or `lattice:Z:2@α`
    Lattice { name: String, alpha: f64 },
}

impl QuantizerSpec {
    pub fn build_scalar(&self, source: &SourceModel) -> Result<ScalarQuantizer> {
        match self {
            QuantizerSpec::Uniform { step, offset } => {
                ScalarQuantizer::uniform_covering(source, *step, *offset)
            }
            QuantizerSpec::Pattern { pattern, base } => {
                ScalarQuantizer::almost_regular(source, pattern, *base, ReconMode::Midpoint)
            }
            QuantizerSpec::Lattice { .. } => Err(Error::Unsupported(
                "lattice quantizers have no scalar build; use Monte Carlo evaluation".into(),
            )),
        }
    }

    pub fn build_lattice(&self) -> Result<LatticeQuantizer> {
        match self {
            QuantizerSpec::Lattice { name, alpha } => {
                LatticeQuantizer::new(name.parse()?, *alpha)
            }
            _ => Err(Error::Unsupported("not a lattice quantizer spec".into())),
        }
    }

    pub fn is_lattice(&self) -> bool {
        matches!(self, QuantizerSpec::Lattice { .. })
    }
}

impl FromStr for QuantizerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let err = |m: &str| Error::Parse(format!("quantizer '{s}': {m}"));
        if let Some(rest) = s.strip_prefix("uniform:") {
            let mut parts = rest.split(',');
            let step: f64 = parts
                .next()
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| err("bad step"))?;
            let offset: f64 = match parts.next() {
                Some(v) => v.trim().parse().map_err(|_| err("bad offset"))?,
                None => 0.0,
            };
            if parts.next().is_some() {
                return Err(err("too many parameters"));
            }
            if !(step > 0.0) {
                return Err(err("step must be positive"));
            }
            return Ok(QuantizerSpec::Uniform { step, offset });
        }
        if let Some(rest) = s.strip_prefix("pattern:") {
            let (pat, base) = rest.split_once('@').ok_or_else(|| err("missing '@step'"))?;
            let pattern = parse_pattern(pat)?;
            let base: f64 = base.trim().parse().map_err(|_| err("bad step"))?;
            if !(base > 0.0) {
                return Err(err("step must be positive"));
            }
            return Ok(QuantizerSpec::Pattern { pattern, base });
        }
        if let Some(rest) = s.strip_prefix("lattice:") {
            let (name, alpha) = rest.rsplit_once('@').ok_or_else(|| err("missing '@scale'"))?;
            let alpha: f64 = alpha.trim().parse().map_err(|_| err("bad scale"))?;
            if !(alpha > 0.0) {
                return Err(err("scale must be positive"));
            }
            return Ok(QuantizerSpec::Lattice { name: name.to_string(), alpha });
        }
        Err(err("expected uniform:, pattern:, or lattice:"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::block_rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn gauss() -> SourceModel {
        SourceModel::gaussian(0.0, 1.0).unwrap()
    }

    fn u01() -> SourceModel {
        SourceModel::uniform(0.0, 1.0).unwrap()
    }

    #[test]
    fn quantize_examples() {
        let u = u01();
        let q = ScalarQuantizer::uniform_covering(&u, 1.0, 0.0).unwrap();
        let (i, recon) = q.quantize(0.3);
        assert_eq!(q.cell_interval(i), (0.0, 1.0));
        assert_eq!(recon, 0.5);
        // Boundary points go right.
        let (j, _) = q.quantize(0.0);
        assert_eq!(q.cell_interval(j).0, 0.0);
        let (k, _) = q.quantize(1.0);
        assert_eq!(q.cell_interval(k).0, 1.0);
    }

    #[test]
    fn lattice_quantizer_example() {
        let lq = LatticeQuantizer::new("Z:2".parse().unwrap(), 0.5).unwrap();
        let (_, recon) = lq.quantize(&[0.3, 0.8]).unwrap();
        assert_eq!(recon, vec![0.5, 1.0]);
    }

    #[test]
    fn quantize_membership_property() {
        let g = gauss();
        let q = ScalarQuantizer::uniform_covering(&g, 0.37, 0.11).unwrap();
        let mut rng = block_rng(3, 0);
        for _ in 0..100_000 {
            let x: f64 = rng.random_range(-5.0..5.0);
            let (i, recon) = q.quantize(x);
            let (a, b) = q.cell_interval(i);
            assert!(a <= x && x < b);
            assert!(recon >= a && recon <= b);
        }
    }

    #[test]
    fn cell_probabilities_examples() {
        let u = u01();
        let q = ScalarQuantizer::uniform_covering(&u, 0.125, 0.0).unwrap();
        let cm = q.cell_probabilities(&u, 1e-9).unwrap();
        let positive: Vec<f64> =
            cm.cells.iter().map(|&(_, p)| p).filter(|&p| p > 0.0).collect();
        assert_eq!(positive.len(), 8);
        for p in positive {
            assert_eq!(p, 0.125);
        }

        let g = gauss();
        let q = ScalarQuantizer::uniform_covering(&g, 1.0, 0.0).unwrap();
        let masses = q.masses(&g);
        let (i, _) = q.quantize(0.5);
        assert!((masses[i] - 0.34134).abs() < 1e-5);
        // Telescoping: total mass is 1.
        let total: f64 = masses.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let cm = q.cell_probabilities(&g, 1e-6).unwrap();
        let s: f64 = cm.cells.iter().map(|&(_, p)| p).sum();
        assert!((s + cm.residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_entropy_uniform_aligned() {
        let u = u01();
        let q = ScalarQuantizer::uniform_covering(&u, 0.125, 0.0).unwrap();
        let e = q.output_entropy_exact(&u, 1e-12).unwrap();
        assert!((e.nats - 8f64.ln()).abs() < 1e-14);
        assert!((crate::bounds::nats_to_bits(e.nats) - 3.0).abs() < 1e-12);
        assert!(e.error_bound <= 1e-12);
    }

    #[test]
    fn exact_entropy_high_resolution_sanity() {
        // H ≈ h(X) − log Δ for small Δ.
        let g = gauss();
        let q = ScalarQuantizer::uniform_covering(&g, 0.1, 0.0).unwrap();
        let e = q.output_entropy_exact(&g, 1e-12).unwrap();
        let expect = g.differential_entropy() + 10f64.ln();
        assert!((e.nats - expect).abs() < 1e-3, "{} vs {expect}", e.nats);
    }

    #[test]
    fn mc_entropy_agrees_with_exact() {
        let g = gauss();
        let q = ScalarQuantizer::uniform_covering(&g, 0.1, 0.0).unwrap();
        let exact = q.output_entropy_exact(&g, 1e-12).unwrap();
        let mc = q.output_entropy_mc(&g, 10_000_000, 11).unwrap();
        assert!(!mc.unreliable);
        assert!((mc.nats - exact.nats).abs() < 3e-3, "{} vs {}", mc.nats, exact.nats);
    }

    #[test]
    fn mc_entropy_unreliable_flag() {
        let g = gauss();
        let q = ScalarQuantizer::uniform_covering(&g, 0.01, 0.0).unwrap();
        // ~800 occupied cells but only 2^13 samples.
        let e = q.output_entropy_mc(&g, 8192, 1).unwrap();
        assert!(e.unreliable);
    }

    #[test]
    fn exact_distortion_uniform_aligned() {
        let u = u01();
        let q = ScalarQuantizer::uniform_covering(&u, 0.1, 0.0).unwrap();
        let d = q.distortion_exact(&u, 2.0).unwrap();
        let expect = 0.1 * 0.1 / 12.0;
        assert!((d.value - expect).abs() < 1e-14, "{} vs {expect}", d.value);
    }

    #[test]
    fn exact_distortion_gaussian_high_resolution() {
        let g = gauss();
        let q = ScalarQuantizer::uniform_covering(&g, 0.1, 0.0).unwrap();
        let d = q.distortion_exact(&g, 2.0).unwrap();
        let hr = 0.1 * 0.1 / 12.0;
        assert!((d.value - hr).abs() / hr < 0.01, "{} vs {hr}", d.value);
    }

    #[test]
    fn mc_distortion_agrees_with_exact() {
        let g = gauss();
        let q = ScalarQuantizer::uniform_covering(&g, 0.25, 0.0).unwrap();
        let exact = q.distortion_exact(&g, 2.0).unwrap();
        let mc = q.distortion_mc(&g, 2.0, 2_000_000, 9).unwrap();
        assert!(
            (mc.value - exact.value).abs() < 3.0 * mc.error_bound,
            "{} vs {} ± {}",
            mc.value,
            exact.value,
            mc.error_bound
        );
    }

    #[test]
    fn calibrate_closed_form_uniform_source() {
        let u = u01();
        let cal = calibrate_uniform_step(&u, 2.0, 1.0 / 1200.0, 0.0).unwrap();
        match cal.quantizer.kind() {
            QuantizerKind::Uniform { step, .. } => {
                assert!((step - 0.1).abs() < 1e-4, "step {step}");
            }
            k => panic!("unexpected kind {k:?}"),
        }
        assert!(cal.achieved <= 1.0 / 1200.0);
        assert!(cal.achieved >= (1.0 / 1200.0) * (1.0 - 1e-6));
    }

    #[test]
    fn calibrate_gaussian_matches_high_resolution_step() {
        let g = gauss();
        let cal = calibrate_uniform_step(&g, 2.0, 1e-4, 0.0).unwrap();
        let hr = (12f64 * 1e-4).sqrt();
        match cal.quantizer.kind() {
            QuantizerKind::Uniform { step, .. } => {
                assert!((step - hr).abs() / hr < 0.01, "step {step} vs {hr}");
            }
            k => panic!("unexpected kind {k:?}"),
        }
        // Postcondition replay.
        let d = cal.quantizer.distortion_exact(&g, 2.0).unwrap();
        assert!((d.value - cal.achieved).abs() <= 1e-12);
    }

    #[test]
    fn pattern_one_equals_uniform() {
        let g = gauss();
        let a = ScalarQuantizer::almost_regular(&g, &[1.0], 0.1, ReconMode::Midpoint).unwrap();
        let b = ScalarQuantizer::uniform_covering(&g, 0.1, 0.0).unwrap();
        let da = a.distortion_exact(&g, 2.0).unwrap().value;
        let db = b.distortion_exact(&g, 2.0).unwrap().value;
        assert!((da - db).abs() < 1e-12);
        let ea = a.output_entropy_exact(&g, 1e-12).unwrap().nats;
        let eb = b.output_entropy_exact(&g, 1e-12).unwrap().nats;
        assert!((ea - eb).abs() < 1e-12);
    }

    #[test]
    fn pattern_distortion_closed_form() {
        // Pattern [1,2] at Δ = 0.1 anchored at 0 tiles [0,1] exactly; on the
        // uniform source the distortion is Σ pᵢ Δᵢ²/12 with pᵢ = Δᵢ.
        let u = u01();
        let q = ScalarQuantizer::almost_regular(&u, &[1.0, 2.0], 0.1, ReconMode::Midpoint).unwrap();
        let mut expect = 0.0;
        for i in 0..q.cell_count() {
            let (a, b) = q.cell_interval(i);
            let (a, b) = (a.max(0.0), b.min(1.0));
            if b > a {
                let w = q.cell_width(i);
                expect += (b - a) * w * w / 12.0;
            }
        }
        let d = q.distortion_exact(&u, 2.0).unwrap();
        assert!((d.value - expect).abs() < 1e-14, "{} vs {expect}", d.value);
        // Short cells carry mass 0.4, long cells 0.6 in [0,1].
        let by_hand = (0.4 * 0.01 + 0.6 * 0.04) / 12.0;
        assert!((d.value - by_hand).abs() < 1e-14);
    }

    #[test]
    fn centroid_beats_midpoint() {
        let g = gauss();
        let mid =
            ScalarQuantizer::almost_regular(&g, &[1.0, 2.0], 0.4, ReconMode::Midpoint).unwrap();
        let cen =
            ScalarQuantizer::almost_regular(&g, &[1.0, 2.0], 0.4, ReconMode::Centroid).unwrap();
        let dm = mid.distortion_exact(&g, 2.0).unwrap().value;
        let dc = cen.distortion_exact(&g, 2.0).unwrap().value;
        assert!(dc <= dm, "centroid {dc} vs midpoint {dm}");
    }

    #[test]
    fn entropy_never_decreases_under_refinement() {
        let g = gauss();
        let q = ScalarQuantizer::uniform_covering(&g, 0.5, 0.0).unwrap();
        let base = q.output_entropy_exact(&g, 1e-12).unwrap().nats;
        let mut rng = block_rng(8, 0);
        for _ in 0..20 {
            let at: f64 = rng.random_range(-3.0..3.0);
            let Ok(split) = q.split_cell(at) else { continue };
            let refined = split.output_entropy_exact(&g, 1e-12).unwrap().nats;
            assert!(refined >= base - 1e-12, "split at {at}: {refined} < {base}");
        }
    }

    #[test]
    fn distortion_increases_with_step() {
        let g = gauss();
        let mut last = 0.0;
        for step in [0.05, 0.1, 0.2, 0.4, 0.8] {
            let q = ScalarQuantizer::uniform_covering(&g, step, 0.0).unwrap();
            let d = q.distortion_exact(&g, 2.0).unwrap().value;
            assert!(d > last, "step {step}: {d} <= {last}");
            last = d;
        }
    }

    #[test]
    fn report_serialization_schema() {
        let g = gauss();
        let q = ScalarQuantizer::uniform_covering(&g, 0.5, 0.0).unwrap();
        let rep = q.report_exact(&g, 2.0).unwrap();
        let json = serde_json::to_value(&rep).unwrap();
        for key in
            ["distortion", "distortion_err", "entropy_nats", "entropy_err", "r", "method", "n", "seed"]
        {
            assert!(json.get(key).is_some(), "missing key {key}");
        }
        assert_eq!(json["method"], "exact_scalar");
        assert!(json["n"].is_null());
    }

    #[test]
    fn quantizer_spec_parsing() {
        assert_eq!(
            "uniform:0.1".parse::<QuantizerSpec>().unwrap(),
            QuantizerSpec::Uniform { step: 0.1, offset: 0.0 }
        );
        assert_eq!(
            "uniform:0.1,0.05".parse::<QuantizerSpec>().unwrap(),
            QuantizerSpec::Uniform { step: 0.1, offset: 0.05 }
        );
        assert_eq!(
            "pattern:1,2@0.1".parse::<QuantizerSpec>().unwrap(),
            QuantizerSpec::Pattern { pattern: vec![1.0, 2.0], base: 0.1 }
        );
        assert_eq!(
            "lattice:E8@0.25".parse::<QuantizerSpec>().unwrap(),
            QuantizerSpec::Lattice { name: "E8".into(), alpha: 0.25 }
        );
        assert_eq!(
            "lattice:Z:2@0.5".parse::<QuantizerSpec>().unwrap(),
            QuantizerSpec::Lattice { name: "Z:2".into(), alpha: 0.5 }
        );
        assert!("uniform:-1".parse::<QuantizerSpec>().is_err());
        assert!("pattern:1,2".parse::<QuantizerSpec>().is_err());
        assert!("foo:1".parse::<QuantizerSpec>().is_err());
    }

    #[test]
    fn lattice_report_runs() {
        let src = gauss().powered(2).unwrap();
        let lq = LatticeQuantizer::new("Z:2".parse().unwrap(), 0.25).unwrap();
        let rep = lq.report_mc(&src, 2.0, 100_000, 5).unwrap();
        // Per-dimension distortion of a fine cubic cell is Δ²/12 each.
        let expect = 2.0 * 0.25 * 0.25 / 12.0;
        assert!((rep.distortion - expect).abs() < 10.0 * rep.distortion_err + 1e-4);
        assert!(rep.entropy_nats > 0.0);
    }

    proptest! {
        #[test]
        fn masses_sum_to_one(step in 0.05f64..2.0, offset in -1.0f64..1.0) {
            let g = gauss();
            let q = ScalarQuantizer::uniform_covering(&g, step, offset).unwrap();
            let total: f64 = q.masses(&g).iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-10);
        }

        #[test]
        fn quantize_is_a_function_and_cells_cover(x in -50.0f64..50.0) {
            let g = gauss();
            let q = ScalarQuantizer::uniform_covering(&g, 0.3, 0.1).unwrap();
            let (i1, r1) = q.quantize(x);
            let (i2, r2) = q.quantize(x);
            prop_assert_eq!(i1, i2);
            prop_assert_eq!(r1, r2);
            let (a, b) = q.cell_interval(i1);
            prop_assert!(a <= x && x < b);
        }
    }
}
