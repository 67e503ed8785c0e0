//! Classic lattice families with exact nearest-point decoders.
//!
//! Supported: Zⁿ (cubic), Dₙ (checkerboard), Dₙ* (its dual), Aₙ (in the
//! sum-zero embedding in ℝ^{n+1}), and the Gosset lattice E₈. Each family has
//! a closed-form decoder, a brute-force enumeration oracle for testing, a
//! dithered uniform sampler of the Voronoi cell of the origin, and a Monte
//! Carlo estimator of the normalized r-th cell moment
//! ℓ(𝒫) = ∫_𝒫 ‖x‖^r dx / V^{1+r/d}.
//!
//! Decoding conventions (ties have Lebesgue measure zero; the choices below
//! make decoding deterministic so the oracle comparison can be exact):
//! - rounding is half-away-from-zero (`f64::round`);
//! - the Dₙ odd-sum correction flips the lowest-indexed coordinate among
//!   those with maximal rounding error, toward the second-nearest integer
//!   (upward when the rounding error is exactly zero);
//! - two-coset decoders (Dₙ*, E₈) prefer the integer coset on exact ties;
//! - the brute-force oracle breaks exact distance ties toward the candidate
//!   with lexicographically larger coordinate magnitudes, which matches
//!   half-away-from-zero rounding.

use crate::mc::{self, RunningMoments};
use crate::{Error, Result, Samples};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LatticeFamily {
    /// Zⁿ, the integer lattice.
    Z,
    /// Dₙ = {x ∈ Zⁿ : Σxᵢ even}, n ≥ 2.
    D,
    /// Dₙ* = Zⁿ ∪ (Zⁿ + ½·1), the dual of Dₙ, n ≥ 2.
    DStar,
    /// Aₙ = {x ∈ Z^{n+1} : Σxᵢ = 0}, rank n in ambient dimension n+1.
    A,
    /// E₈ = D₈ ∪ (D₈ + ½·1).
    E8,
}

impl fmt::Display for LatticeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LatticeFamily::Z => "Z",
            LatticeFamily::D => "D",
            LatticeFamily::DStar => "Dstar",
            LatticeFamily::A => "A",
            LatticeFamily::E8 => "E8",
        };
        f.write_str(s)
    }
}

/// A scaled instance of a lattice family.
#[derive(Debug, Clone)]
pub struct Lattice {
    family: LatticeFamily,
    rank: usize,
    scale: f64,
    /// Basis rows (unscaled), rank × ambient.
    basis: Vec<Vec<f64>>,
    /// Inverse of the square basis (absent for Aₙ, which uses prefix sums).
    basis_inv: Option<Vec<Vec<f64>>>,
}

/// Monte Carlo estimate of the normalized r-th moment of the Voronoi cell.
#[derive(Debug, Clone, Copy)]
pub struct VoronoiMomentEstimate {
    /// ℓ̂(𝒫) = V^{−r/d} · mean ‖y‖^r over uniform draws y from the cell.
    pub ell: f64,
    /// ℓ̂/d; for r = 2 this is the conventional per-dimension second moment G.
    pub per_dim_g: f64,
    /// Standard error of `ell`.
    pub std_error: f64,
    pub n_samples: usize,
    pub r: f64,
    pub seed: u64,
}

impl Lattice {
    pub fn new(family: LatticeFamily, dim: usize, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParameter("lattice scale must be positive".into()));
        }
        let bad = |m: &str| Err(Error::InvalidParameter(format!("{family}: {m}")));
        match family {
            LatticeFamily::Z | LatticeFamily::A if dim < 1 => return bad("dimension must be >= 1"),
            LatticeFamily::D | LatticeFamily::DStar if dim < 2 => {
                return bad("dimension must be >= 2")
            }
            LatticeFamily::E8 if dim != 8 => return bad("dimension must be 8"),
            _ => {}
        }
        let basis = basis_rows(family, dim);
        let basis_inv = match family {
            LatticeFamily::A => None,
            _ => Some(invert(&basis)?),
        };
        Ok(Self { family, rank: dim, scale, basis, basis_inv })
    }

    pub fn family(&self) -> LatticeFamily {
        self.family
    }

    /// Intrinsic dimension d of the lattice.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Dimension of the coordinate vectors (`rank + 1` for Aₙ).
    pub fn ambient_dim(&self) -> usize {
        match self.family {
            LatticeFamily::A => self.rank + 1,
            _ => self.rank,
        }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Unscaled basis rows (rank × ambient).
    pub fn basis_rows(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// Covolume of the scaled lattice = Voronoi cell volume.
    pub fn fundamental_volume(&self) -> f64 {
        let base = match self.family {
            LatticeFamily::Z | LatticeFamily::E8 => 1.0,
            LatticeFamily::D => 2.0,
            LatticeFamily::DStar => 0.5,
            LatticeFamily::A => ((self.rank + 1) as f64).sqrt(),
        };
        base * self.scale.powi(self.rank as i32)
    }

    /// The lattice point α·Σ kᵢ gᵢ for integer coefficients k.
    pub fn point_from_label(&self, label: &[i64]) -> Result<Vec<f64>> {
        if label.len() != self.rank {
            return Err(Error::DimensionMismatch { expected: self.rank, got: label.len() });
        }
        let mut out = vec![0.0; self.ambient_dim()];
        for (k, row) in label.iter().zip(&self.basis) {
            for (o, g) in out.iter_mut().zip(row) {
                *o += *k as f64 * g;
            }
        }
        for o in out.iter_mut() {
            *o *= self.scale;
        }
        Ok(out)
    }

    /// Integer coordinates of a lattice point in the generator basis.
    pub fn label(&self, point: &[f64]) -> Result<Vec<i64>> {
        self.check_dim(point)?;
        let z: Vec<f64> = point.iter().map(|&v| v / self.scale).collect();
        let coeffs: Vec<f64> = match self.family {
            LatticeFamily::A => {
                // gᵢ = eᵢ − eᵢ₊₁, so the coefficients are prefix sums.
                let mut acc = 0.0;
                z[..self.rank]
                    .iter()
                    .map(|&v| {
                        acc += v;
                        acc
                    })
                    .collect()
            }
            _ => {
                let inv = self.basis_inv.as_ref().unwrap();
                // k = z · B⁻¹ (z as a row vector).
                (0..self.rank)
                    .map(|j| (0..self.rank).map(|i| z[i] * inv[i][j]).sum())
                    .collect()
            }
        };
        Ok(coeffs.iter().map(|&c| c.round() as i64).collect())
    }

    /// The closest lattice point to `x` in Euclidean norm.
    ///
    /// Aₙ inputs off the sum-zero hyperplane are orthogonally projected onto
    /// it first; use [`Lattice::nearest_point_detail`] to observe that.
    pub fn nearest_point(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.nearest_point_detail(x)?.0)
    }

    /// As [`Lattice::nearest_point`]; the flag reports whether the input had
    /// to be projected onto the Aₙ hyperplane.
    pub fn nearest_point_detail(&self, x: &[f64]) -> Result<(Vec<f64>, bool)> {
        self.check_dim(x)?;
        let z: Vec<f64> = x.iter().map(|&v| v / self.scale).collect();
        let (mut point, projected) = match self.family {
            LatticeFamily::Z => (decode_zn(&z), false),
            LatticeFamily::D => (decode_dn(&z), false),
            LatticeFamily::DStar => (decode_two_cosets(&z, decode_zn), false),
            LatticeFamily::E8 => (decode_two_cosets(&z, decode_dn), false),
            LatticeFamily::A => {
                let (zp, projected) = project_sum_zero(&z);
                (decode_an(&zp), projected)
            }
        };
        for p in point.iter_mut() {
            *p *= self.scale;
        }
        Ok((point, projected))
    }

    /// Conservative enumeration radius that always contains the nearest
    /// point (covering radius plus margin), at the lattice's scale.
    pub fn default_search_radius(&self) -> f64 {
        let n = self.rank as f64;
        let unscaled = match self.family {
            LatticeFamily::Z | LatticeFamily::DStar => 0.5 * n.sqrt(),
            LatticeFamily::D => (0.5 * n.sqrt()).max(1.0),
            LatticeFamily::A => 0.5 * (n + 1.0).sqrt(),
            LatticeFamily::E8 => 1.0,
        };
        (unscaled + 0.01) * self.scale
    }

    /// Exhaustive nearest-point search over all lattice points whose
    /// coordinates lie in the box `x ± radius`. Testing oracle: independent
    /// of the closed-form decoders. Retries once with a doubled radius if the
    /// box contains no lattice point.
    pub fn brute_force_nearest(&self, x: &[f64], radius: f64) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter("radius must be positive".into()));
        }
        let mut z: Vec<f64> = x.iter().map(|&v| v / self.scale).collect();
        if self.family == LatticeFamily::A {
            z = project_sum_zero(&z).0;
        }
        for attempt in 0..2 {
            let r = radius / self.scale * (1 << attempt) as f64;
            if let Some(mut best) = self.enumerate_box(&z, r) {
                for b in best.iter_mut() {
                    *b *= self.scale;
                }
                return Ok(best);
            }
        }
        Err(Error::Nonconvergent(format!(
            "no {} lattice point within radius {radius} (and {}) of the query",
            self.family,
            2.0 * radius
        )))
    }

    fn enumerate_box(&self, z: &[f64], radius: f64) -> Option<Vec<f64>> {
        let cosets: Vec<(f64, LeafRule)> = match self.family {
            LatticeFamily::Z => vec![(0.0, LeafRule::Any)],
            LatticeFamily::D => vec![(0.0, LeafRule::EvenSum)],
            LatticeFamily::DStar => vec![(0.0, LeafRule::Any), (0.5, LeafRule::Any)],
            LatticeFamily::E8 => vec![(0.0, LeafRule::EvenSum), (0.5, LeafRule::EvenSum)],
            LatticeFamily::A => vec![(0.0, LeafRule::ZeroSum)],
        };
        let mut best: Option<(f64, Vec<f64>)> = None;
        for (shift, rule) in cosets {
            enumerate_coset(z, radius, shift, rule, &mut best);
        }
        best.map(|(_, p)| p)
    }

    /// `n` i.i.d. points uniform on the Voronoi cell of the origin, obtained
    /// by dithering: u uniform on the fundamental parallelepiped, output
    /// u − nearest(u).
    pub fn sample_voronoi_uniform(&self, n: usize, seed: u64) -> Samples {
        let ambient = self.ambient_dim();
        let lat = self.clone();
        let data = mc::map_reduce_blocks(
            seed,
            n,
            move |rng, count| {
                let mut out = Vec::with_capacity(count * ambient);
                let mut u = vec![0.0; ambient];
                for _ in 0..count {
                    u.iter_mut().for_each(|v| *v = 0.0);
                    for row in &lat.basis {
                        let t = mc::next_open01(rng) * lat.scale;
                        for (ui, g) in u.iter_mut().zip(row) {
                            *ui += t * g;
                        }
                    }
                    let nearest = lat.nearest_point(&u).expect("dimension is consistent");
                    for (ui, pi) in u.iter().zip(&nearest) {
                        out.push(ui - pi);
                    }
                }
                out
            },
            |mut acc: Vec<f64>, part| {
                acc.extend_from_slice(&part);
                acc
            },
        );
        Samples::new(ambient, data)
    }

    /// Monte Carlo estimate of the normalized r-th moment of the Voronoi
    /// cell. Scale-invariant by construction.
    pub fn normalized_moment_mc(&self, r: f64, n: usize, seed: u64) -> Result<VoronoiMomentEstimate> {
        if !(r > 0.0) {
            return Err(Error::InvalidParameter("moment exponent r must be positive".into()));
        }
        if n < 10_000 {
            return Err(Error::InvalidParameter(format!(
                "need at least 10^4 samples for a moment estimate, got {n}"
            )));
        }
        let lat = self.clone();
        let moments = mc::map_reduce_blocks(
            seed,
            n,
            move |rng, count| {
                let mut m = RunningMoments::default();
                let mut u = vec![0.0; lat.ambient_dim()];
                for _ in 0..count {
                    u.iter_mut().for_each(|v| *v = 0.0);
                    for row in &lat.basis {
                        let t = mc::next_open01(rng) * lat.scale;
                        for (ui, g) in u.iter_mut().zip(row) {
                            *ui += t * g;
                        }
                    }
                    let nearest = lat.nearest_point(&u).expect("dimension is consistent");
                    let norm2: f64 =
                        u.iter().zip(&nearest).map(|(a, b)| (a - b) * (a - b)).sum();
                    m.push(if r == 2.0 { norm2 } else { norm2.powf(0.5 * r) });
                }
                m
            },
            RunningMoments::merge,
        );
        let d = self.rank as f64;
        let norm = self.fundamental_volume().powf(-r / d);
        Ok(VoronoiMomentEstimate {
            ell: norm * moments.mean(),
            per_dim_g: norm * moments.mean() / d,
            std_error: norm * moments.std_error(),
            n_samples: n,
            r,
            seed,
        })
    }

    /// Closed-form ℓ(𝒫) for r = 2 where one exists (Zⁿ and A₁/A₂); used by
    /// the CLI to label exact rows and by tests as an oracle.
    pub fn analytic_ell_r2(&self) -> Option<f64> {
        match (self.family, self.rank) {
            (LatticeFamily::Z, d) => Some(d as f64 / 12.0),
            // The A₁ cell is an interval: ℓ = 1/12.
            (LatticeFamily::A, 1) => Some(1.0 / 12.0),
            // The A₂ cell is a regular hexagon: ℓ = 2 · 5/(36√3).
            (LatticeFamily::A, 2) => Some(5.0 / (18.0 * 3f64.sqrt())),
            _ => None,
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.ambient_dim() {
            Err(Error::DimensionMismatch { expected: self.ambient_dim(), got: x.len() })
        } else {
            Ok(())
        }
    }
}

/// Parses `Z:d`, `D:d`, `Dstar:d`, `A:d`, `E8` (optionally `E8:8`).
impl FromStr for Lattice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let err = |m: &str| Error::Parse(format!("lattice '{s}': {m}"));
        let (name, dim) = match s.split_once(':') {
            Some((name, d)) => {
                let dim: usize = d.parse().map_err(|_| err("bad dimension"))?;
                (name, Some(dim))
            }
            None => (s, None),
        };
        let family = match name {
            "Z" | "z" => LatticeFamily::Z,
            "D" | "d" => LatticeFamily::D,
            "Dstar" | "dstar" | "D*" => LatticeFamily::DStar,
            "A" | "a" => LatticeFamily::A,
            "E8" | "e8" => LatticeFamily::E8,
            other => return Err(err(&format!("unknown family '{other}'"))),
        };
        let dim = match (family, dim) {
            (LatticeFamily::E8, None) => 8,
            (LatticeFamily::E8, Some(8)) => 8,
            (LatticeFamily::E8, Some(_)) => return Err(err("E8 is 8-dimensional")),
            (_, Some(d)) => d,
            (_, None) => return Err(err("missing dimension")),
        };
        Lattice::new(family, dim, 1.0)
    }
}

fn basis_rows(family: LatticeFamily, dim: usize) -> Vec<Vec<f64>> {
    let e = |i: usize, n: usize| {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    };
    match family {
        LatticeFamily::Z => (0..dim).map(|i| e(i, dim)).collect(),
        LatticeFamily::D => {
            let mut rows = Vec::with_capacity(dim);
            let mut r0 = vec![0.0; dim];
            r0[0] = 1.0;
            r0[1] = 1.0;
            rows.push(r0);
            let mut r1 = vec![0.0; dim];
            r1[0] = 1.0;
            r1[1] = -1.0;
            rows.push(r1);
            for i in 2..dim {
                let mut r = vec![0.0; dim];
                r[i - 1] = 1.0;
                r[i] = -1.0;
                rows.push(r);
            }
            rows
        }
        LatticeFamily::DStar => {
            let mut rows: Vec<Vec<f64>> = (0..dim - 1).map(|i| e(i, dim)).collect();
            rows.push(vec![0.5; dim]);
            rows
        }
        LatticeFamily::A => (0..dim)
            .map(|i| {
                let mut r = vec![0.0; dim + 1];
                r[i] = 1.0;
                r[i + 1] = -1.0;
                r
            })
            .collect(),
        LatticeFamily::E8 => {
            let mut rows = Vec::with_capacity(8);
            let mut r0 = vec![0.0; 8];
            r0[0] = 2.0;
            rows.push(r0);
            for i in 0..6 {
                let mut r = vec![0.0; 8];
                r[i] = -1.0;
                r[i + 1] = 1.0;
                rows.push(r);
            }
            rows.push(vec![0.5; 8]);
            rows
        }
    }
}

/// Gauss-Jordan inverse with partial pivoting; the bases here are tiny,
/// integer-valued, and well-conditioned.
fn invert(rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = rows.len();
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() < 1e-12 {
            return Err(Error::InvalidParameter("singular generator matrix".into()));
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col];
        for j in 0..n {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for i in 0..n {
            if i != col {
                let f = a[i][col];
                if f != 0.0 {
                    for j in 0..n {
                        a[i][j] -= f * a[col][j];
                        inv[i][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    Ok(inv)
}

fn decode_zn(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.round()).collect()
}

/// Round all coordinates; if the sum is odd, re-round the worst coordinate
/// the other way.
fn decode_dn(x: &[f64]) -> Vec<f64> {
    let mut f = decode_zn(x);
    let sum: f64 = f.iter().sum();
    if (sum as i64).rem_euclid(2) != 0 {
        let mut worst = 0;
        let mut worst_err = -1.0;
        for (i, (&xi, &fi)) in x.iter().zip(f.iter()).enumerate() {
            let err = (xi - fi).abs();
            if err > worst_err {
                worst_err = err;
                worst = i;
            }
        }
        f[worst] += if x[worst] - f[worst] >= 0.0 { 1.0 } else { -1.0 };
    }
    f
}

/// Decode in the base coset and the coset shifted by ½·1; keep the closer
/// (the integer coset on exact ties).
fn decode_two_cosets(x: &[f64], base: fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
    let a = base(x);
    let shifted: Vec<f64> = x.iter().map(|v| v - 0.5).collect();
    let mut b = base(&shifted);
    for bi in b.iter_mut() {
        *bi += 0.5;
    }
    let da = dist2(x, &a);
    let db = dist2(x, &b);
    if db < da {
        b
    } else {
        a
    }
}

/// Orthogonal projection onto Σxᵢ = 0; the flag reports whether the input
/// was meaningfully off the hyperplane.
fn project_sum_zero(x: &[f64]) -> (Vec<f64>, bool) {
    let s: f64 = x.iter().sum();
    let mean = s / x.len() as f64;
    let norm: f64 = x.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
    if s.abs() <= 1e-9 * norm {
        (x.to_vec(), false)
    } else {
        (x.iter().map(|v| v - mean).collect(), true)
    }
}

/// Sum-zero decoding: round, then fix the deficiency on the coordinates
/// where the correction is cheapest.
fn decode_an(x: &[f64]) -> Vec<f64> {
    let mut f = decode_zn(x);
    let deficiency = f.iter().sum::<f64>() as i64;
    if deficiency == 0 {
        return f;
    }
    // Sort indices by rounding error ascending, index ascending on ties.
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| {
        let di = x[i] - f[i];
        let dj = x[j] - f[j];
        di.partial_cmp(&dj).unwrap().then(i.cmp(&j))
    });
    if deficiency > 0 {
        // Decrement where the error is most negative (rounded up the most).
        for &i in order.iter().take(deficiency as usize) {
            f[i] -= 1.0;
        }
    } else {
        for &i in order.iter().rev().take((-deficiency) as usize) {
            f[i] += 1.0;
        }
    }
    f
}

fn dist2(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

#[derive(Clone, Copy, PartialEq)]
enum LeafRule {
    Any,
    /// Integer parts must sum to an even number (Dₙ-type cosets).
    EvenSum,
    /// Coordinates must sum to zero (Aₙ).
    ZeroSum,
}

/// Depth-first enumeration of the coset {k + shift·1 : k ∈ Zⁿ} restricted to
/// the box z ± radius, with partial-distance pruning and, for the sum-zero
/// rule, feasibility pruning on the running coordinate sum. Candidates tied
/// in distance are compared with [`tie_prefer`].
fn enumerate_coset(
    z: &[f64],
    radius: f64,
    shift: f64,
    rule: LeafRule,
    best: &mut Option<(f64, Vec<f64>)>,
) {
    let n = z.len();
    let ranges: Vec<(i64, i64)> = z
        .iter()
        .map(|&zi| {
            let lo = (zi - shift - radius).ceil() as i64;
            let hi = (zi - shift + radius).floor() as i64;
            (lo, hi)
        })
        .collect();
    if ranges.iter().any(|&(lo, hi)| lo > hi) {
        return;
    }
    // Suffix bounds on the achievable remaining integer sum (for ZeroSum).
    let mut suffix_min = vec![0i64; n + 1];
    let mut suffix_max = vec![0i64; n + 1];
    for i in (0..n).rev() {
        suffix_min[i] = suffix_min[i + 1] + ranges[i].0;
        suffix_max[i] = suffix_max[i + 1] + ranges[i].1;
    }
    let mut current = vec![0.0; n];
    let mut ksum = vec![0i64; n + 1];
    let mut partial = vec![0.0; n + 1];

    #[allow(clippy::too_many_arguments)]
    fn walk(
        depth: usize,
        z: &[f64],
        ranges: &[(i64, i64)],
        shift: f64,
        rule: LeafRule,
        suffix_min: &[i64],
        suffix_max: &[i64],
        current: &mut Vec<f64>,
        ksum: &mut Vec<i64>,
        partial: &mut Vec<f64>,
        best: &mut Option<(f64, Vec<f64>)>,
    ) {
        let n = z.len();
        if depth == n {
            match rule {
                LeafRule::EvenSum if ksum[n].rem_euclid(2) != 0 => return,
                LeafRule::ZeroSum if ksum[n] != 0 => return,
                _ => {}
            }
            let d2 = partial[n];
            match best {
                Some((bd, bp)) => {
                    if d2 < *bd || (d2 == *bd && tie_prefer(current, bp)) {
                        *bd = d2;
                        bp.clone_from(current);
                    }
                }
                None => *best = Some((d2, current.clone())),
            }
            return;
        }
        let (lo, hi) = ranges[depth];
        for k in lo..=hi {
            let c = k as f64 + shift;
            let dd = (z[depth] - c) * (z[depth] - c);
            let d2 = partial[depth] + dd;
            if let Some((bd, _)) = best {
                if d2 > *bd {
                    continue;
                }
            }
            if rule == LeafRule::ZeroSum {
                let s = ksum[depth] + k;
                if s + suffix_min[depth + 1] > 0 || s + suffix_max[depth + 1] < 0 {
                    continue;
                }
            }
            current[depth] = c;
            ksum[depth + 1] = ksum[depth] + k;
            partial[depth + 1] = d2;
            walk(
                depth + 1,
                z,
                ranges,
                shift,
                rule,
                suffix_min,
                suffix_max,
                current,
                ksum,
                partial,
                best,
            );
        }
    }

    walk(
        0,
        z,
        &ranges,
        shift,
        rule,
        &suffix_min,
        &suffix_max,
        &mut current,
        &mut ksum,
        &mut partial,
        best,
    );
}

/// True if `a` is preferred over `b` on an exact distance tie: larger
/// coordinate magnitudes first (matches half-away-from-zero rounding), then
/// plain lexicographic order.
fn tie_prefer(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x.abs() != y.abs() {
            return x.abs() > y.abs();
        }
    }
    for (x, y) in a.iter().zip(b) {
        if x != y {
            return x > y;
        }
    }
    false
}
