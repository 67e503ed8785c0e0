//! Source models: scalar families and i.i.d. products of them.
//!
//! Every family exposes the pdf, CDF, and quantile; sampling is by inverse
//! CDF on block-seeded uniform draws, so `sample_batch(n, seed)` is
//! bit-reproducible and shardable (see [`crate::mc`]). On top of pointwise
//! evaluation the module computes the two regularity quantities the
//! high-resolution theory conditions on: the differential entropy h(X) and
//! the integer-part entropy H(⌊X⌋).

use crate::mc::{self, RunningMoments};
use crate::{quad, Error, Result, Samples};
use statrs::distribution::{Continuous, ContinuousCDF, Laplace, Normal};
use std::fmt;
use std::str::FromStr;

/// How many scale parameters past the mean an unbounded tail is integrated.
const TAIL_SPAN: f64 = 40.0;
/// Cell cap for the integer-part entropy enumeration.
const INT_ENTROPY_MAX_CELLS: usize = 1_000_000;

/// A scalar distribution family with closed-form pdf/CDF/quantile.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarFamily {
    Gaussian { mean: f64, sigma: f64 },
    Uniform { a: f64, b: f64 },
    Laplace { mean: f64, scale: f64 },
}

impl ScalarFamily {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ScalarFamily::Gaussian { mean, sigma } => mean.is_finite() && sigma > 0.0,
            ScalarFamily::Uniform { a, b } => a.is_finite() && b.is_finite() && a < b,
            ScalarFamily::Laplace { mean, scale } => mean.is_finite() && scale > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("{self}")))
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            ScalarFamily::Gaussian { mean, sigma } => {
                Normal::new(mean, sigma).unwrap().pdf(x)
            }
            ScalarFamily::Uniform { a, b } => {
                if x >= a && x <= b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            ScalarFamily::Laplace { mean, scale } => {
                Laplace::new(mean, scale).unwrap().pdf(x)
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            ScalarFamily::Gaussian { mean, sigma } => Normal::new(mean, sigma).unwrap().cdf(x),
            ScalarFamily::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            ScalarFamily::Laplace { mean, scale } => Laplace::new(mean, scale).unwrap().cdf(x),
        }
    }

    /// Upper-tail probability 1 − CDF(x), accurate far in the tail.
    pub fn sf(&self, x: f64) -> f64 {
        match *self {
            ScalarFamily::Gaussian { mean, sigma } => Normal::new(mean, sigma).unwrap().sf(x),
            ScalarFamily::Uniform { a, b } => ((b - x) / (b - a)).clamp(0.0, 1.0),
            ScalarFamily::Laplace { mean, scale } => Laplace::new(mean, scale).unwrap().sf(x),
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        debug_assert!(p > 0.0 && p < 1.0);
        match *self {
            ScalarFamily::Gaussian { mean, sigma } => {
                Normal::new(mean, sigma).unwrap().inverse_cdf(p)
            }
            ScalarFamily::Uniform { a, b } => a + (b - a) * p,
            ScalarFamily::Laplace { mean, scale } => {
                Laplace::new(mean, scale).unwrap().inverse_cdf(p)
            }
        }
    }

    /// Closed-form differential entropy in nats.
    pub fn differential_entropy(&self) -> f64 {
        use std::f64::consts::{E, PI};
        match *self {
            ScalarFamily::Gaussian { sigma, .. } => 0.5 * (2.0 * PI * E * sigma * sigma).ln(),
            ScalarFamily::Uniform { a, b } => (b - a).ln(),
            ScalarFamily::Laplace { scale, .. } => 1.0 + (2.0 * scale).ln(),
        }
    }

    /// Location parameter (mean for the built-in families).
    pub fn mean(&self) -> f64 {
        match *self {
            ScalarFamily::Gaussian { mean, .. } => mean,
            ScalarFamily::Uniform { a, b } => 0.5 * (a + b),
            ScalarFamily::Laplace { mean, .. } => mean,
        }
    }

    /// Scale parameter (σ, (b−a)/2, or b).
    pub fn scale(&self) -> f64 {
        match *self {
            ScalarFamily::Gaussian { sigma, .. } => sigma,
            ScalarFamily::Uniform { a, b } => 0.5 * (b - a),
            ScalarFamily::Laplace { scale, .. } => scale,
        }
    }

    /// True support; infinite endpoints for the unbounded families.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            ScalarFamily::Uniform { a, b } => (a, b),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Finite interval outside which the remaining mass is negligible;
    /// unbounded tails are cut at ±40 scale parameters.
    pub fn working_interval(&self) -> (f64, f64) {
        match *self {
            ScalarFamily::Uniform { a, b } => (a, b),
            _ => (
                self.mean() - TAIL_SPAN * self.scale(),
                self.mean() + TAIL_SPAN * self.scale(),
            ),
        }
    }

    /// Upper bound on the mass ratio of consecutive width-`step` cells in the
    /// tail beyond `x` (right tail if `right`, else left). Valid because all
    /// built-in families have log-concave densities.
    pub fn tail_ratio_bound(&self, x: f64, step: f64, right: bool) -> f64 {
        let (near, far) = if right { (x, x + step) } else { (x, x - step) };
        let fn_near = self.pdf(near);
        let fn_far = self.pdf(far);
        if fn_near <= 0.0 {
            return 0.0;
        }
        (fn_far / fn_near).clamp(0.0, 0.999_999)
    }
}

impl fmt::Display for ScalarFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ScalarFamily::Gaussian { mean, sigma } => write!(f, "gaussian:{mean},{sigma}"),
            ScalarFamily::Uniform { a, b } => write!(f, "uniform:{a},{b}"),
            ScalarFamily::Laplace { mean, scale } => write!(f, "laplace:{mean},{scale}"),
        }
    }
}

/// A d-dimensional source: a scalar family raised to an i.i.d. product.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceModel {
    family: ScalarFamily,
    dim: usize,
}

/// Result of the truncated integer-part entropy summation.
#[derive(Debug, Clone, Copy)]
pub struct IntegerPartEntropy {
    /// Truncated Σ pᵢ log(1/pᵢ) in nats.
    pub nats: f64,
    /// Probability mass outside the enumerated cells.
    pub residual_mass: f64,
    /// Number of integer cells enumerated (per coordinate).
    pub cells: usize,
}

impl SourceModel {
    pub fn new(family: ScalarFamily, dim: usize) -> Result<Self> {
        family.validate()?;
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        Ok(Self { family, dim })
    }

    pub fn gaussian(mean: f64, sigma: f64) -> Result<Self> {
        Self::new(ScalarFamily::Gaussian { mean, sigma }, 1)
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        Self::new(ScalarFamily::Uniform { a, b }, 1)
    }

    pub fn laplace(mean: f64, scale: f64) -> Result<Self> {
        Self::new(ScalarFamily::Laplace { mean, scale }, 1)
    }

    /// The same scalar family as a d-fold i.i.d. product.
    pub fn powered(&self, dim: usize) -> Result<Self> {
        Self::new(self.family.clone(), dim)
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> &ScalarFamily {
        &self.family
    }

    pub fn is_scalar(&self) -> bool {
        self.dim == 1
    }

    pub fn name(&self) -> String {
        if self.dim == 1 {
            format!("{}", self.family)
        } else {
            format!("{}^{}", self.family, self.dim)
        }
    }

    /// Joint density at `x`; exactly 0 outside the support.
    pub fn pdf_eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(x.iter().map(|&xi| self.family.pdf(xi)).product())
    }

    /// Scalar CDF; errors on multi-dimensional sources.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.require_scalar("cdf")?;
        Ok(self.family.cdf(x))
    }

    /// i.i.d. samples as an n×d matrix. Identical `(n, seed)` give
    /// bit-identical output; distinct seeds give independent streams.
    pub fn sample_batch(&self, n: usize, seed: u64) -> Samples {
        let dim = self.dim;
        let family = self.family.clone();
        let data = mc::map_reduce_blocks(
            seed,
            n,
            move |rng, count| {
                let mut out = Vec::with_capacity(count * dim);
                for _ in 0..count {
                    for _ in 0..dim {
                        out.push(family.quantile(mc::next_open01(rng)));
                    }
                }
                out
            },
            |mut acc: Vec<f64>, part| {
                acc.extend_from_slice(&part);
                acc
            },
        );
        Samples::new(dim, data)
    }

    /// Differential entropy h(X) in nats (closed form, summed over
    /// components).
    pub fn differential_entropy(&self) -> f64 {
        self.dim as f64 * self.family.differential_entropy()
    }

    /// Quadrature estimate of −∫ f log f, one component, for validating the
    /// closed forms. Absolute tolerance 1e-8.
    pub fn differential_entropy_numeric(&self) -> Result<f64> {
        let fam = self.family.clone();
        let integrand = move |x: f64| {
            let f = fam.pdf(x);
            if f > 0.0 {
                -f * f.ln()
            } else {
                0.0
            }
        };
        let (lo, hi) = self.family.working_interval();
        let h1 = quad::integrate_with_knots(&integrand, lo, hi, 1e-8, &[self.family.mean()]);
        Ok(self.dim as f64 * h1)
    }

    /// Entropy of the integer part H(⌊X⌋), by summing CDF differences over
    /// integer cells until the residual mass drops below `mass_tolerance`.
    pub fn integer_part_entropy(&self, mass_tolerance: f64) -> Result<IntegerPartEntropy> {
        if !(mass_tolerance > 0.0 && mass_tolerance <= 1e-6) {
            return Err(Error::InvalidParameter(
                "mass_tolerance must be in (0, 1e-6]".into(),
            ));
        }
        let fam = &self.family;
        let mut lo = fam.mean().floor() as i64;
        let mut hi = lo; // cells lo..=hi, cell k = [k, k+1)
        let residual = |lo: i64, hi: i64| fam.cdf(lo as f64) + fam.sf((hi + 1) as f64);
        let mut cells = 1usize;
        while residual(lo, hi) >= mass_tolerance {
            if cells >= INT_ENTROPY_MAX_CELLS {
                return Err(Error::Nonconvergent(format!(
                    "integer-part entropy: residual {:.3e} above tolerance {:.3e} after {} cells",
                    residual(lo, hi),
                    mass_tolerance,
                    cells
                )));
            }
            if fam.cdf(lo as f64) >= fam.sf((hi + 1) as f64) {
                lo -= 1;
            } else {
                hi += 1;
            }
            cells += 1;
        }
        let mut nats = 0.0;
        for k in lo..=hi {
            let p = fam.cdf((k + 1) as f64) - fam.cdf(k as f64);
            if p > 0.0 {
                nats -= p * p.ln();
            }
        }
        let res = residual(lo, hi);
        Ok(IntegerPartEntropy {
            nats: self.dim as f64 * nats,
            residual_mass: 1.0 - (1.0 - res).powi(self.dim as i32),
            cells,
        })
    }

    fn require_scalar(&self, what: &str) -> Result<()> {
        if self.dim == 1 {
            Ok(())
        } else {
            Err(Error::Unsupported(format!(
                "{what} requires a scalar source, got dimension {}",
                self.dim
            )))
        }
    }

    /// Sample mean/variance summary of ‖X‖-independent scalar draws; test
    /// and CLI helper.
    pub fn sample_moments(&self, n: usize, seed: u64) -> RunningMoments {
        let family = self.family.clone();
        mc::map_reduce_blocks(
            seed,
            n,
            move |rng, count| {
                let mut m = RunningMoments::default();
                for _ in 0..count {
                    m.push(family.quantile(mc::next_open01(rng)));
                }
                m
            },
            RunningMoments::merge,
        )
    }
}

impl FromStr for SourceModel {
    type Err = Error;

    /// Parses `family:param1,param2` with an optional `^d` product suffix,
    /// e.g. `gaussian:0,1`, `uniform:0,1`, `laplace:0,1`, `gaussian:0,1^4`.
    fn from_str(s: &str) -> Result<Self> {
        let err = |m: &str| Error::Parse(format!("source '{s}': {m}"));
        let (body, dim) = match s.rsplit_once('^') {
            Some((body, d)) => {
                let dim: usize = d.parse().map_err(|_| err("bad dimension"))?;
                (body, dim)
            }
            None => (s, 1),
        };
        let (name, params) = body.split_once(':').ok_or_else(|| err("missing ':'"))?;
        let vals: Vec<f64> = params
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err("bad numeric parameter"))?;
        if vals.len() != 2 {
            return Err(err("expected two parameters"));
        }
        let family = match name.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => ScalarFamily::Gaussian { mean: vals[0], sigma: vals[1] },
            "uniform" => ScalarFamily::Uniform { a: vals[0], b: vals[1] },
            "laplace" => ScalarFamily::Laplace { mean: vals[0], scale: vals[1] },
            other => return Err(err(&format!("unknown family '{other}'"))),
        };
        SourceModel::new(family, dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::block_rng;
    use rand::Rng;

    fn gauss() -> SourceModel {
        SourceModel::gaussian(0.0, 1.0).unwrap()
    }

    #[test]
    fn pdf_closed_forms() {
        let g = gauss();
        let expect = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((g.pdf_eval(&[0.0]).unwrap() - expect).abs() < 1e-15);

        let u = SourceModel::uniform(0.0, 1.0).unwrap();
        assert_eq!(u.pdf_eval(&[0.5]).unwrap(), 1.0);
        assert_eq!(u.pdf_eval(&[1.5]).unwrap(), 0.0);

        let g2 = g.powered(2).unwrap();
        let expect2 = 1.0 / (2.0 * std::f64::consts::PI);
        assert!((g2.pdf_eval(&[0.0, 0.0]).unwrap() - expect2).abs() < 1e-15);
    }

    #[test]
    fn pdf_rejects_dimension_mismatch() {
        let g2 = gauss().powered(2).unwrap();
        assert!(matches!(
            g2.pdf_eval(&[0.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn pdf_integrates_to_one() {
        for src in [
            gauss(),
            SourceModel::uniform(-0.3, 2.1).unwrap(),
            SourceModel::laplace(0.5, 1.3).unwrap(),
        ] {
            let fam = src.family().clone();
            let (lo, hi) = fam.working_interval();
            let mass = quad::integrate(&|x| fam.pdf(x), lo, hi, 1e-10);
            assert!((mass - 1.0).abs() < 1e-6, "{}: mass {mass}", src.name());
        }
    }

    #[test]
    fn differential_entropy_values() {
        let g = gauss();
        let expect = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
        assert!((g.differential_entropy() - expect).abs() < 1e-14);
        assert!((expect - 1.41894).abs() < 1e-5);

        assert_eq!(SourceModel::uniform(0.0, 1.0).unwrap().differential_entropy(), 0.0);

        let l = SourceModel::laplace(0.0, 1.0).unwrap();
        assert!((l.differential_entropy() - (1.0 + 2f64.ln())).abs() < 1e-14);
        assert!((l.differential_entropy() - 1.69315).abs() < 1e-5);
    }

    #[test]
    fn quadrature_matches_analytic_entropy() {
        for src in [
            gauss(),
            SourceModel::gaussian(1.5, 0.4).unwrap(),
            SourceModel::uniform(0.0, 2.0).unwrap(),
            SourceModel::laplace(-1.0, 2.0).unwrap(),
        ] {
            let h = src.differential_entropy();
            let hq = src.differential_entropy_numeric().unwrap();
            assert!((h - hq).abs() < 1e-4, "{}: {h} vs {hq}", src.name());
        }
    }

    #[test]
    fn integer_part_entropy_examples() {
        let u01 = SourceModel::uniform(0.0, 1.0).unwrap();
        let e = u01.integer_part_entropy(1e-9).unwrap();
        assert_eq!(e.nats, 0.0);
        assert!(e.residual_mass < 1e-9);

        let u02 = SourceModel::uniform(0.0, 2.0).unwrap();
        let e = u02.integer_part_entropy(1e-9).unwrap();
        assert!((e.nats - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn integer_part_entropy_gaussian_oracle() {
        // Independent oracle: direct summation of Φ(k+1) − Φ(k) over
        // k ∈ [−12, 12]; residual mass beyond ±12 is < 1e-12.
        let n = Normal::new(0.0, 1.0).unwrap();
        let mut oracle = 0.0;
        for k in -12i32..=12 {
            let p = n.cdf((k + 1) as f64) - n.cdf(k as f64);
            if p > 0.0 {
                oracle -= p * p.ln();
            }
        }
        let e = gauss().integer_part_entropy(1e-12).unwrap();
        assert!((e.nats - oracle).abs() < 1e-9, "{} vs {oracle}", e.nats);
        // Frozen from the oracle above.
        assert!((oracle - 1.4589588284).abs() < 1e-9, "oracle moved: {oracle}");
        // Product source: d independent coordinates.
        let e3 = gauss().powered(3).unwrap().integer_part_entropy(1e-12).unwrap();
        assert!((e3.nats - 3.0 * oracle).abs() < 1e-8);
    }

    #[test]
    fn cdf_endpoint_behaviour() {
        for src in [
            gauss(),
            SourceModel::uniform(0.0, 1.0).unwrap(),
            SourceModel::laplace(0.0, 1.0).unwrap(),
        ] {
            let fam = src.family().clone();
            assert_eq!(fam.cdf(-1e300), 0.0, "{}", src.name());
            assert_eq!(fam.cdf(1e300), 1.0, "{}", src.name());
            let mut last = -1.0;
            for i in -400..=400 {
                let c = fam.cdf(i as f64 * 0.05);
                assert!(c >= last, "{}: CDF decreasing", src.name());
                last = c;
            }
        }
    }

    #[test]
    fn integer_part_entropy_nonconvergence_is_reported() {
        // A uniform source spread over 2·10^6 integer cells cannot reach the
        // tolerance within the enumeration cap.
        let wide = SourceModel::uniform(0.0, 2_000_000.0).unwrap();
        assert!(matches!(wide.integer_part_entropy(1e-9), Err(Error::Nonconvergent(_))));
    }

    #[test]
    fn integer_part_entropy_finite_for_all_families() {
        for src in [
            gauss(),
            SourceModel::uniform(-3.7, 11.2).unwrap(),
            SourceModel::laplace(2.0, 3.0).unwrap(),
        ] {
            let e = src.integer_part_entropy(1e-8).unwrap();
            assert!(e.nats.is_finite() && e.nats >= 0.0);
            assert!(e.residual_mass < 1e-8);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let g = gauss();
        let a = g.sample_batch(5000, 99);
        let b = g.sample_batch(5000, 99);
        assert_eq!(a, b);
        let c = g.sample_batch(5000, 100);
        assert_ne!(a, c);
    }

    #[test]
    fn sample_law_of_large_numbers() {
        let u = SourceModel::uniform(0.0, 1.0).unwrap();
        let m = u.sample_moments(1_000_000, 7);
        assert!((m.mean() - 0.5).abs() < 0.002, "mean {}", m.mean());

        let g = gauss();
        let m = g.sample_moments(1_000_000, 8);
        assert!((m.sample_variance() - 1.0).abs() < 0.01, "var {}", m.sample_variance());
    }

    #[test]
    fn empirical_cdf_close_to_analytic() {
        // Kolmogorov–Smirnov distance below 0.002 at 10^6 samples.
        for (src, seed) in [
            (gauss(), 21u64),
            (SourceModel::uniform(0.0, 1.0).unwrap(), 22),
            (SourceModel::laplace(0.0, 1.0).unwrap(), 23),
        ] {
            let samples = src.sample_batch(1_000_000, seed);
            let mut xs: Vec<f64> = samples.as_slice().to_vec();
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = xs.len() as f64;
            let mut ks: f64 = 0.0;
            for (i, &x) in xs.iter().enumerate() {
                let f = src.cdf(x).unwrap();
                ks = ks.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
            }
            assert!(ks < 0.002, "{}: KS {ks}", src.name());
        }
    }

    #[test]
    fn cdf_derivative_matches_pdf() {
        // First-order finite-difference check at random points.
        let mut rng = block_rng(5, 0);
        for src in [
            gauss(),
            SourceModel::uniform(0.0, 1.0).unwrap(),
            SourceModel::laplace(0.0, 1.0).unwrap(),
        ] {
            let fam = src.family().clone();
            let (lo, hi) = fam.working_interval();
            let mut checked = 0;
            while checked < 10_000 {
                let x = lo + (hi - lo) * rng.random::<f64>();
                let f = fam.pdf(x);
                if f <= 1e-3 {
                    continue;
                }
                let h = 1e-6;
                let deriv = (fam.cdf(x + h) - fam.cdf(x)) / h;
                assert!(
                    (deriv - f).abs() / f < 1e-3,
                    "{}: x={x} deriv={deriv} pdf={f}",
                    src.name()
                );
                checked += 1;
            }
        }
    }

    #[test]
    fn parse_round_trip() {
        for s in ["gaussian:0,1", "uniform:0,1", "laplace:0,1", "gaussian:0,1^4"] {
            let m: SourceModel = s.parse().unwrap();
            assert_eq!(m.name(), s);
        }
        assert!("gaussian:0".parse::<SourceModel>().is_err());
        assert!("cauchy:0,1".parse::<SourceModel>().is_err());
        assert!("uniform:1,0".parse::<SourceModel>().is_err());
        assert!("gaussian:0,1^0".parse::<SourceModel>().is_err());
    }
}
