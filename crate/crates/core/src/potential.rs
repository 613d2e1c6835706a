//! Translation-invariant pair potentials on a periodic 1-D lattice.
//!
//! # Mode convention
//!
//! An even potential on `L` sites is expanded as a plain cosine series
//!
//! ```text
//! V(d) = Σ_{m=0}^{⌊L/2⌋} v_m cos(k_m · d · a),   k_m = 2πm / (L a)
//! ```
//!
//! with unit weights. In terms of the discrete Fourier transform
//! `V̂_m = Σ_d V(d) e^{-2πi m d / L}` this means `v_m = w_m V̂_m / L`, where
//! the multiplicity `w_m` is 1 for `m = 0` and for `m = L/2` (even `L`) and 2
//! for every other mode (which pairs `m` with `L − m`). The local operators
//! `A_{m,s} = √|v_m| cos/sin(k_m x̂)` then multiply out to `V` with no extra
//! factors, and the decoherence kernel is the same series with `|v_m|`.

use std::f64::consts::PI;
use std::path::Path;

use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::operator::{tensor, BipartiteSpace, Operator, C64};

/// Evenness tolerance for sampled potentials.
pub const PARITY_TOL: f64 = 1e-12;
/// Modes with `|v_m|` below this are treated as absent.
pub const MODE_CUTOFF: f64 = 1e-14;

/// Periodic lattice of `sites` points with spacing `spacing`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice {
    sites: usize,
    spacing: f64,
}

impl Lattice {
    pub fn new(sites: usize, spacing: f64) -> Result<Self> {
        if sites < 2 {
            return Err(Error::InvalidLattice(format!("need at least 2 sites, got {sites}")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidLattice(format!("spacing must be positive, got {spacing}")));
        }
        Ok(Self { sites, spacing })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn period(&self) -> f64 {
        self.sites as f64 * self.spacing
    }

    pub fn position(&self, site: usize) -> f64 {
        site as f64 * self.spacing
    }

    /// Number of independent cosine modes, `⌊L/2⌋ + 1`.
    pub fn mode_count(&self) -> usize {
        self.sites / 2 + 1
    }

    pub fn wavenumber(&self, m: usize) -> f64 {
        2.0 * PI * m as f64 / self.period()
    }

    /// DFT multiplicity `w_m` of mode `m` (see the module docs).
    pub fn multiplicity(&self, m: usize) -> f64 {
        if m == 0 || 2 * m == self.sites {
            1.0
        } else {
            2.0
        }
    }

    /// Periodic displacement `(x_a − x_b) mod L` in sites.
    pub fn displacement(&self, site_a: usize, site_b: usize) -> usize {
        (site_a + self.sites - site_b % self.sites) % self.sites
    }

    /// Shortest periodic distance in length units.
    pub fn periodic_distance(&self, d: usize) -> f64 {
        let d = d % self.sites;
        d.min(self.sites - d) as f64 * self.spacing
    }
}

/// `V(d)` for displacements `d = 0..L`, required to be even under `d → L − d`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairPotential {
    values: Vec<f64>,
}

impl PairPotential {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidLattice(format!(
                "potential needs at least 2 displacements, got {}",
                values.len()
            )));
        }
        let n = values.len();
        for d in 1..n {
            let deviation = (values[d] - values[n - d]).abs();
            if deviation > PARITY_TOL || !values[d].is_finite() {
                return Err(Error::ParityViolation { displacement: d, deviation });
            }
        }
        Ok(Self { values })
    }

    pub fn zero(sites: usize) -> Result<Self> {
        Self::new(vec![0.0; sites])
    }

    /// `amplitude · cos(2π m d / L)`.
    pub fn cosine(lattice: &Lattice, amplitude: f64, harmonic: usize) -> Result<Self> {
        let l = lattice.sites();
        Self::new((0..l).map(|d| amplitude * (2.0 * PI * (harmonic * d) as f64 / l as f64).cos()).collect())
    }

    /// `amplitude · δ_{d,0}`.
    pub fn delta(lattice: &Lattice, amplitude: f64) -> Result<Self> {
        Self::new((0..lattice.sites()).map(|d| if d == 0 { amplitude } else { 0.0 }).collect())
    }

    /// Periodicized power law `amplitude / max(r, a)^exponent`, with `r` the
    /// shortest periodic distance; the lattice spacing `a` regularizes `d = 0`.
    pub fn power_law(lattice: &Lattice, amplitude: f64, exponent: f64) -> Result<Self> {
        Self::sampled(lattice, |r, a| amplitude / r.max(a).powf(exponent))
    }

    /// Samples `f(r, a)` at the periodic distance `r` of each displacement.
    pub fn sampled(lattice: &Lattice, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        Self::new(
            (0..lattice.sites())
                .map(|d| f(lattice.periodic_distance(d), lattice.spacing()))
                .collect(),
        )
    }

    /// Parses a two-column table: `displacement value` per line. Blank lines
    /// and lines starting with `#` are ignored; every displacement in
    /// `0..L` must appear exactly once.
    pub fn parse_table(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|ch: char| ch.is_whitespace() || ch == ',')
                .filter(|f| !f.is_empty())
                .collect();
            let bad = || Error::InvalidArgument(format!("potential table line {}: expected `index value`", lineno + 1));
            if fields.len() != 2 {
                return Err(bad());
            }
            let d: usize = fields[0].parse().map_err(|_| bad())?;
            let v: f64 = fields[1].parse().map_err(|_| bad())?;
            entries.push((d, v));
        }
        let n = entries.len();
        let mut values = vec![None; n];
        for (d, v) in entries {
            match values.get_mut(d) {
                Some(slot @ None) => *slot = Some(v),
                Some(Some(_)) => {
                    return Err(Error::InvalidArgument(format!("potential table: displacement {d} repeated")))
                }
                None => {
                    return Err(Error::InvalidArgument(format!(
                        "potential table: displacement {d} out of range for {n} entries"
                    )))
                }
            }
        }
        Self::new(values.into_iter().map(|v| v.expect("every slot filled")).collect())
    }

    pub fn load_table(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_table(&text)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sites(&self) -> usize {
        self.values.len()
    }
}

/// Cosine-series coefficients `v_m`, `m = 0..=⌊L/2⌋`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierModes {
    lattice: Lattice,
    values: Vec<f64>,
}

impl FourierModes {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// `(k_m, v_m)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().enumerate().map(|(m, v)| (self.lattice.wavenumber(m), *v))
    }

    /// Evaluates the cosine series at every displacement.
    pub fn reconstruct_values(&self) -> Vec<f64> {
        series_values(&self.lattice, &self.values)
    }
}

fn series_values(lattice: &Lattice, coeffs: &[f64]) -> Vec<f64> {
    (0..lattice.sites())
        .map(|d| {
            let x = lattice.position(d);
            coeffs
                .iter()
                .enumerate()
                .map(|(m, v)| v * (lattice.wavenumber(m) * x).cos())
                .sum()
        })
        .collect()
}

/// Decomposes an even potential into cosine modes.
pub fn fourier_modes(pot: &PairPotential, lattice: &Lattice) -> Result<FourierModes> {
    let l = lattice.sites();
    if pot.sites() != l {
        return Err(Error::DimensionMismatch { expected: l, found: pot.sites() });
    }
    let mut buffer: Vec<C64> = pot.values().iter().map(|v| C64::new(*v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(l).process(&mut buffer);
    let values = (0..lattice.mode_count())
        .map(|m| lattice.multiplicity(m) * buffer[m].re / l as f64)
        .collect();
    Ok(FourierModes { lattice: *lattice, values })
}

/// One term `A_{k,s} ⊗ B_{k,s}` of the potential, as diagonal local operators.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalOperatorPair {
    pub mode: usize,
    pub k: f64,
    /// 1 for the cosine term, 2 for the sine term.
    pub s: u8,
    /// `|v_k|`
    pub weight: f64,
    pub a: Operator,
    pub b: Operator,
}

/// Builds `A_{k,s} = √|v_k| cos/sin(k x̂)` and `B_{k,s} = sgn(v_k) A_{k,s}`
/// (on Bob's copy of the lattice) for every retained mode. Modes with
/// `|v_k| < MODE_CUTOFF` and operators that vanish identically (the sine at
/// `k = 0` and at the zone edge) are dropped.
pub fn build_local_operators(modes: &FourierModes) -> Vec<LocalOperatorPair> {
    let lattice = modes.lattice();
    let mut pairs = Vec::new();
    for (m, &v) in modes.values().iter().enumerate() {
        if v.abs() < MODE_CUTOFF {
            continue;
        }
        let k = lattice.wavenumber(m);
        let amp = v.abs().sqrt();
        for s in [1u8, 2] {
            let diag: Vec<f64> = (0..lattice.sites())
                .map(|site| {
                    let phase = k * lattice.position(site);
                    let f = if s == 1 { phase.cos() } else { phase.sin() };
                    amp * f
                })
                .collect();
            if diag.iter().all(|x| x.abs() < 1e-12 * amp.max(1.0)) {
                continue;
            }
            let a = Operator::from_real_diagonal(&diag);
            let b = a.scale(v.signum());
            pairs.push(LocalOperatorPair { mode: m, k, s, weight: v.abs(), a, b });
        }
    }
    pairs
}

/// `Σ_{k,s} A_{k,s} ⊗ B_{k,s}` on the bipartite lattice space.
pub fn reconstruct_potential(pairs: &[LocalOperatorPair], space: BipartiteSpace) -> Result<Operator> {
    let mut total = Operator::zeros(space.dim());
    for p in pairs {
        if p.a.dim() != space.dim_a() {
            return Err(Error::DimensionMismatch { expected: space.dim_a(), found: p.a.dim() });
        }
        if p.b.dim() != space.dim_b() {
            return Err(Error::DimensionMismatch { expected: space.dim_b(), found: p.b.dim() });
        }
        total = &total + &tensor(&p.a, &p.b);
    }
    Ok(total)
}

/// Diagonal operator `V((x_A − x_B) mod L)` tabulated directly.
pub fn tabulate_potential(pot: &PairPotential, lattice: &Lattice) -> Operator {
    let l = lattice.sites();
    let space = BipartiteSpace::new(l, l).expect("nonzero sites");
    let mut diag = vec![0.0; l * l];
    for xa in 0..l {
        for xb in 0..l {
            diag[space.index(xa, xb)] = pot.values()[lattice.displacement(xa, xb)];
        }
    }
    Operator::from_real_diagonal(&diag)
}

/// Spatial correlation of the least local decoherence: the series with
/// `|v_k|` in place of `v_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoherenceKernel {
    values: Vec<f64>,
    modes: FourierModes,
}

impl DecoherenceKernel {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `𝕍(0) = Σ_k |v_k|`.
    pub fn diag(&self) -> f64 {
        self.values[0]
    }

    pub fn modes(&self) -> &FourierModes {
        &self.modes
    }

    pub fn as_potential(&self) -> PairPotential {
        PairPotential { values: self.values.clone() }
    }

    /// The kernel multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> DecoherenceKernel {
        DecoherenceKernel {
            values: self.values.iter().map(|v| v * factor).collect(),
            modes: FourierModes {
                lattice: self.modes.lattice,
                values: self.modes.values.iter().map(|v| v * factor).collect(),
            },
        }
    }
}

pub fn decoherence_kernel(modes: &FourierModes) -> DecoherenceKernel {
    let abs: Vec<f64> = modes.values().iter().map(|v| v.abs()).collect();
    let lattice = *modes.lattice();
    let mut values = series_values(&lattice, &abs);
    // Σ|v| exactly, rather than Σ|v|·cos 0 through the series
    values[0] = abs.iter().sum();
    DecoherenceKernel { values, modes: FourierModes { lattice, values: abs } }
}

/// Per-mode decoherence coefficient `γ/8 + 1/(2γ)` of the symmetric
/// feedback equation with equal precisions on both sides.
pub fn decoherence_cost(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::NonPositiveRate(gamma));
    }
    Ok(gamma / 8.0 + 1.0 / (2.0 * gamma))
}

/// `d cost / dγ = 1/8 − 1/(2γ²)`.
pub fn decoherence_cost_slope(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::NonPositiveRate(gamma));
    }
    Ok(0.125 - 0.5 / (gamma * gamma))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeastDecoherence {
    /// Analytic minimizer, `γ* = 2`.
    pub gamma: f64,
    /// `cost(γ*) = 1/2`.
    pub cost: f64,
    /// Golden-section minimizer on a bracket around the optimum.
    pub numerical_gamma: f64,
    pub numerical_cost: f64,
}

/// The least-decoherence precision, with a numerical cross-check.
pub fn least_decoherence_rate() -> LeastDecoherence {
    // d/dγ (γ/8 + 1/(2γ)) = 1/8 − 1/(2γ²) = 0
    let gamma = 2.0;
    let cost = decoherence_cost(gamma).expect("positive rate");
    // The cost is quadratic at its minimum, so comparing cost values cannot
    // resolve γ beyond ~sqrt(ε). The slope magnitude has a sharp V-shaped
    // minimum at the same point and resolves it to rounding.
    let numerical_gamma =
        golden_section_min(|g| decoherence_cost_slope(g).expect("bracket is positive").abs(), 1e-3, 1e3, 1e-12);
    let numerical_cost = decoherence_cost(numerical_gamma).expect("positive rate");
    LeastDecoherence { gamma, cost, numerical_gamma, numerical_cost }
}

/// Minimizes a unimodal function on `[lo, hi]` to absolute tolerance `tol`.
pub fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DivergenceRow {
    pub sites: usize,
    pub spacing: f64,
    /// `𝕍(0)` at this resolution.
    pub kernel_diag: f64,
}

/// `𝕍(0)` of `f(r, a)` sampled on lattices of increasing resolution over a
/// fixed period; `r` is the periodic distance and `a` the spacing.
pub fn divergence_scan(
    f: impl Fn(f64, f64) -> f64,
    period: f64,
    resolutions: &[usize],
) -> Result<Vec<DivergenceRow>> {
    resolutions
        .iter()
        .map(|&sites| {
            let lattice = Lattice::new(sites, period / sites as f64)?;
            let pot = PairPotential::sampled(&lattice, &f)?;
            let kernel = decoherence_kernel(&fourier_modes(&pot, &lattice)?);
            Ok(DivergenceRow { sites, spacing: lattice.spacing(), kernel_diag: kernel.diag() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat(l: usize) -> Lattice {
        Lattice::new(l, 1.0).unwrap()
    }

    #[test]
    fn lattice_validation() {
        assert!(Lattice::new(1, 1.0).is_err());
        assert!(Lattice::new(4, 0.0).is_err());
        assert!(Lattice::new(4, f64::NAN).is_err());
        let l = lat(5);
        assert_eq!(l.displacement(1, 3), 3);
        assert_eq!(l.periodic_distance(4), 1.0);
        assert_eq!(l.mode_count(), 3);
    }

    #[test]
    fn odd_potential_is_rejected() {
        let err = PairPotential::new(vec![0.0, 1.0, 0.0, -1.0]).unwrap_err();
        assert!(matches!(err, Error::ParityViolation { displacement: 1, .. }));
    }

    #[test]
    fn constant_potential_has_only_the_zero_mode() {
        let pot = PairPotential::new(vec![2.5; 6]).unwrap();
        let modes = fourier_modes(&pot, &lat(6)).unwrap();
        assert!((modes.values()[0] - 2.5).abs() < 1e-14);
        assert!(modes.values()[1..].iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn k_zero_operators() {
        let pot = PairPotential::new(vec![4.0; 4]).unwrap();
        let pairs = build_local_operators(&fourier_modes(&pot, &lat(4)).unwrap());
        assert_eq!(pairs.len(), 1, "sine at k = 0 is dropped");
        assert_eq!(pairs[0].s, 1);
        assert!((&pairs[0].a - &Operator::identity(4).scale(2.0)).max_abs() < 1e-14);
    }

    #[test]
    fn negative_mode_sign_bookkeeping() {
        let l = lat(6);
        let pot = PairPotential::cosine(&l, -0.7, 1).unwrap();
        let pairs = build_local_operators(&fourier_modes(&pot, &l).unwrap());
        let p = pairs.iter().find(|p| p.mode == 1 && p.s == 1).unwrap();
        let prod = tensor(&p.a, &p.b);
        let space = BipartiteSpace::new(6, 6).unwrap();
        for xa in 0..6 {
            for xb in 0..6 {
                let i = space.index(xa, xb);
                let expected = -0.7 * (p.k * xa as f64).cos() * (p.k * xb as f64).cos();
                assert!((prod.get(i, i).re - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_potential_reconstructs_to_zero() {
        let pot = PairPotential::zero(5).unwrap();
        let pairs = build_local_operators(&fourier_modes(&pot, &lat(5)).unwrap());
        assert!(pairs.is_empty());
        let op = reconstruct_potential(&pairs, BipartiteSpace::new(5, 5).unwrap()).unwrap();
        assert!(op.is_zero(0.0));
    }

    #[test]
    fn reconstruct_rejects_wrong_space() {
        let l = lat(4);
        let pairs = build_local_operators(&fourier_modes(&PairPotential::cosine(&l, 1.0, 1).unwrap(), &l).unwrap());
        assert!(reconstruct_potential(&pairs, BipartiteSpace::new(3, 4).unwrap()).is_err());
    }

    #[test]
    fn flipped_cosine_kernel() {
        let l = lat(8);
        let pot = PairPotential::cosine(&l, -1.0, 1).unwrap();
        let kernel = decoherence_kernel(&fourier_modes(&pot, &l).unwrap());
        for (kv, v) in kernel.values().iter().zip(pot.values()) {
            assert!((kv + v).abs() < 1e-12);
        }
    }

    #[test]
    fn cost_values() {
        assert_eq!(decoherence_cost(2.0).unwrap(), 0.5);
        assert_eq!(decoherence_cost(1.0).unwrap(), 0.625);
        assert!(matches!(decoherence_cost(0.0), Err(Error::NonPositiveRate(_))));
        assert!(decoherence_cost(-1.0).is_err());
    }

    #[test]
    fn least_decoherence_cross_check() {
        let best = least_decoherence_rate();
        assert_eq!(best.gamma, 2.0);
        assert_eq!(best.cost, 0.5);
        assert!((best.numerical_gamma - 2.0).abs() < 1e-9);
        assert!((best.numerical_cost - 0.5).abs() < 1e-12);
    }

    #[test]
    fn parse_table_round_trip_and_errors() {
        let pot = PairPotential::parse_table("# d v\n0 1.0\n1 0.5\n\n3 0.5\n2 0.25\n").unwrap();
        assert_eq!(pot.values(), &[1.0, 0.5, 0.25, 0.5]);
        assert!(PairPotential::parse_table("0 1\n0 2\n").is_err());
        assert!(PairPotential::parse_table("0 1\n5 2\n").is_err());
        assert!(PairPotential::parse_table("0 1 2\n").is_err());
        assert!(matches!(
            PairPotential::parse_table("0 0\n1 1\n2 0\n3 -1\n"),
            Err(Error::ParityViolation { .. })
        ));
    }

    #[test]
    fn divergence_scan_of_bounded_and_zero_potentials() {
        let rows = divergence_scan(|r, _| (2.0 * PI * r).cos(), 1.0, &[8, 16, 32]).unwrap();
        for row in &rows {
            assert!((row.kernel_diag - 1.0).abs() < 1e-12);
        }
        let rows = divergence_scan(|_, _| 0.0, 1.0, &[4, 8]).unwrap();
        assert!(rows.iter().all(|r| r.kernel_diag == 0.0));
    }
}
