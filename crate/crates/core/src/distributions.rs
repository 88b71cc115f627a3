//! Scalar zero-mean laws: four closed-form symmetric families plus densities
//! tabulated on a uniform grid.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
// float math for no_std builds; unused when std is linked elsewhere in the graph
#[allow(unused_imports)]
use num_traits::Float;

use crate::spectral::fft;
use crate::{Error, Result, DEFAULT_STEP};

/// Highest moment order trusted on a tabulated grid.
pub const MAX_TABULATED_MOMENT: usize = 12;

/// Grids must hold at least this much mass before normalization.
pub const MIN_COVERAGE: f64 = 1.0 - 1e-6;

/// Tail mass left outside [`Distribution::effective_half_width`].
const TAIL_MASS: f64 = 1e-9;

/// Density sampled on `x_min + i * step`, `i = 0..len`, normalized so that
/// `sum(values) * step == 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    x_min: f64,
    step: f64,
    values: Vec<f64>,
}

impl DensityGrid {
    pub const MIN_LEN: usize = 16;
    /// Relative size of negative entries that are clipped rather than rejected.
    pub const NEG_TOLERANCE: f64 = 1e-9;

    /// Builds a normalized grid. Entries below `-1e-9 * max` are rejected,
    /// smaller negative entries (transform ringing) are clipped to zero.
    pub fn new(x_min: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        Self::with_clip_tolerance(x_min, step, values, Self::NEG_TOLERANCE)
    }

    pub(crate) fn with_clip_tolerance(
        x_min: f64,
        step: f64,
        mut values: Vec<f64>,
        rel_tol: f64,
    ) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) || !x_min.is_finite() {
            return Err(Error::invalid("grid step must be positive and finite"));
        }
        if values.len() < Self::MIN_LEN {
            return Err(Error::invalid("density grid needs at least 16 points"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("density grid contains non-finite values"));
        }
        let max = values.iter().copied().fold(0.0, f64::max);
        if max <= 0.0 {
            return Err(Error::invalid("density grid has no positive mass"));
        }
        let floor = -rel_tol * max;
        for (i, v) in values.iter_mut().enumerate() {
            if *v < floor {
                return Err(Error::NegativeDensity {
                    value: *v,
                    x: x_min + i as f64 * step,
                });
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let mass: f64 = values.iter().sum::<f64>() * step;
        for v in values.iter_mut() {
            *v /= mass;
        }
        Ok(DensityGrid {
            x_min,
            step,
            values,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.values.len() - 1)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.step
    }

    /// Iterator over `(x, f(x))` pairs.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.x(i), v))
    }

    /// Riemann sum of the values.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.step
    }

    /// Linear interpolation between grid points, zero outside.
    pub fn density(&self, x: f64) -> f64 {
        let t = (x - self.x_min) / self.step;
        let last = (self.values.len() - 1) as f64;
        if !(t >= -1e-9 && t <= last + 1e-9) {
            return 0.0;
        }
        let t = t.clamp(0.0, last);
        let i = t.floor() as usize;
        if i + 1 >= self.values.len() {
            return self.values[self.values.len() - 1];
        }
        let w = t - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    /// Raw moment by Riemann sum, no order limit.
    pub fn raw_moment(&self, k: u32) -> f64 {
        self.points()
            .map(|(x, f)| x.powi(k as i32) * f)
            .sum::<f64>()
            * self.step
    }

    pub fn mean(&self) -> f64 {
        self.raw_moment(1)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.points()
            .map(|(x, f)| (x - m) * (x - m) * f)
            .sum::<f64>()
            * self.step
    }

    /// Mass of the grid points lying in `[lo, hi]`.
    pub fn mass_within(&self, lo: f64, hi: f64) -> f64 {
        let eps = 1e-9 * self.step;
        self.points()
            .filter(|(x, _)| *x >= lo - eps && *x <= hi + eps)
            .map(|(_, f)| f)
            .sum::<f64>()
            * self.step
    }

    /// `sum |f_i - g(x_i)| * step`.
    pub fn l1_distance_to(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.points().map(|(x, f)| (f - g(x)).abs()).sum::<f64>() * self.step
    }

    /// L1 distance between two grids, evaluated on the union of their
    /// supports at the finer of the two steps.
    pub fn l1_distance(&self, other: &DensityGrid) -> f64 {
        let step = self.step.min(other.step);
        let lo = self.x_min.min(other.x_min);
        let hi = self.x_max().max(other.x_max());
        let n = ((hi - lo) / step).round() as usize + 1;
        (0..n)
            .map(|i| {
                let x = lo + i as f64 * step;
                (self.density(x) - other.density(x)).abs()
            })
            .sum::<f64>()
            * step
    }

    /// Drops leading and trailing entries not exceeding `rel * max`.
    pub fn trimmed(&self, rel: f64) -> DensityGrid {
        let max = self.values.iter().copied().fold(0.0, f64::max);
        let cut = rel * max;
        let first = self.values.iter().position(|&v| v > cut).unwrap_or(0);
        let last = self
            .values
            .iter()
            .rposition(|&v| v > cut)
            .unwrap_or(self.values.len() - 1);
        let (mut lo, mut hi) = (first, last + 1);
        while hi - lo < Self::MIN_LEN {
            lo = lo.saturating_sub(1);
            hi = (hi + 1).min(self.values.len());
        }
        DensityGrid {
            x_min: self.x(lo),
            step: self.step,
            values: self.values[lo..hi].to_vec(),
        }
    }
}

/// A scalar law. All closed-form families are symmetric about zero.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Gaussian {
        variance: f64,
    },
    /// Uniform on `[-half_width, half_width]`.
    Uniform {
        half_width: f64,
    },
    Laplace {
        variance: f64,
    },
    /// Sum of two independent `Uniform { half_width }` variables; support is
    /// `[-2 * half_width, 2 * half_width]`.
    Triangular {
        half_width: f64,
    },
    Tabulated(DensityGrid),
}

fn check_positive(v: f64, what: &str) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(alloc::format!(
            "{what} must be positive and finite, got {v}"
        )))
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

fn double_factorial(k: u32) -> f64 {
    let mut acc = 1.0;
    let mut i = k;
    while i > 1 {
        acc *= f64::from(i);
        i -= 2;
    }
    acc
}

pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    // exact in integers for the orders used here
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc as f64
}

fn uniform_moment(a: f64, k: u32) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        a.powi(k as i32) / f64::from(k + 1)
    }
}

impl Distribution {
    pub fn gaussian(variance: f64) -> Result<Self> {
        Ok(Distribution::Gaussian {
            variance: check_positive(variance, "variance")?,
        })
    }

    pub fn uniform(half_width: f64) -> Result<Self> {
        Ok(Distribution::Uniform {
            half_width: check_positive(half_width, "half width")?,
        })
    }

    pub fn laplace(variance: f64) -> Result<Self> {
        Ok(Distribution::Laplace {
            variance: check_positive(variance, "variance")?,
        })
    }

    pub fn triangular(half_width: f64) -> Result<Self> {
        Ok(Distribution::Triangular {
            half_width: check_positive(half_width, "half width")?,
        })
    }

    pub fn tabulated(grid: DensityGrid) -> Self {
        Distribution::Tabulated(grid)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Distribution::Gaussian { .. } => "gaussian",
            Distribution::Uniform { .. } => "uniform",
            Distribution::Laplace { .. } => "laplace",
            Distribution::Triangular { .. } => "triangular",
            Distribution::Tabulated(_) => "tabulated",
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, Distribution::Gaussian { .. })
    }

    /// Density at `x`. At the jump of the uniform density the midpoint value
    /// `1/(4a)` is returned, which makes lattice sums of uniform laws exact.
    pub fn density(&self, x: f64) -> f64 {
        match *self {
            Distribution::Gaussian { variance } => {
                (-x * x / (2.0 * variance)).exp() / (2.0 * PI * variance).sqrt()
            }
            Distribution::Uniform { half_width: a } => {
                let ax = x.abs();
                let tol = 1e-12 * a;
                if ax < a - tol {
                    0.5 / a
                } else if ax <= a + tol {
                    0.25 / a
                } else {
                    0.0
                }
            }
            Distribution::Laplace { variance } => {
                let b = (variance / 2.0).sqrt();
                (-x.abs() / b).exp() / (2.0 * b)
            }
            Distribution::Triangular { half_width: a } => {
                ((2.0 * a - x.abs()) / (4.0 * a * a)).max(0.0)
            }
            Distribution::Tabulated(ref g) => g.density(x),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Distribution::Gaussian { variance } | Distribution::Laplace { variance } => variance,
            Distribution::Uniform { half_width: a } => a * a / 3.0,
            Distribution::Triangular { half_width: a } => 2.0 * a * a / 3.0,
            Distribution::Tabulated(ref g) => g.variance(),
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// `E[X^k]`. Odd moments of the closed-form families are exactly zero.
    pub fn moment(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Ok(1.0);
        }
        let kk = u32::try_from(k).map_err(|_| Error::invalid("moment order too large"))?;
        if let Distribution::Tabulated(g) = self {
            if k > MAX_TABULATED_MOMENT {
                return Err(Error::MomentOrder {
                    order: k,
                    max: MAX_TABULATED_MOMENT,
                });
            }
            return Ok(g.raw_moment(kk));
        }
        if k % 2 == 1 {
            return Ok(0.0);
        }
        Ok(match *self {
            Distribution::Gaussian { variance } => {
                variance.powi(kk as i32 / 2) * double_factorial(kk - 1)
            }
            Distribution::Uniform { half_width: a } => uniform_moment(a, kk),
            Distribution::Laplace { variance } => {
                let b = (variance / 2.0).sqrt();
                factorial(kk) * b.powi(kk as i32)
            }
            Distribution::Triangular { half_width: a } => (0..=kk)
                .map(|j| binomial(kk, j) * uniform_moment(a, j) * uniform_moment(a, kk - j))
                .sum(),
            Distribution::Tabulated(_) => unreachable!(),
        })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Distribution::Gaussian { variance } => {
                0.5 * (1.0 + libm::erf(x / (2.0 * variance).sqrt()))
            }
            Distribution::Uniform { half_width: a } => ((x + a) / (2.0 * a)).clamp(0.0, 1.0),
            Distribution::Laplace { variance } => {
                let b = (variance / 2.0).sqrt();
                if x < 0.0 {
                    0.5 * (x / b).exp()
                } else {
                    1.0 - 0.5 * (-x / b).exp()
                }
            }
            Distribution::Triangular { half_width: a } => {
                let x = x.clamp(-2.0 * a, 2.0 * a);
                let s = 8.0 * a * a;
                if x <= 0.0 {
                    (x + 2.0 * a).powi(2) / s
                } else {
                    1.0 - (2.0 * a - x).powi(2) / s
                }
            }
            Distribution::Tabulated(ref g) => g.mass_within(f64::NEG_INFINITY, x),
        }
    }

    /// Probability mass in `[lo, hi]`.
    pub fn coverage(&self, lo: f64, hi: f64) -> f64 {
        match self {
            Distribution::Tabulated(g) => g.mass_within(lo, hi),
            _ => self.cdf(hi) - self.cdf(lo),
        }
    }

    /// Half width of the support when it is compact.
    pub fn support_half_width(&self) -> Option<f64> {
        match *self {
            Distribution::Uniform { half_width } => Some(half_width),
            Distribution::Triangular { half_width } => Some(2.0 * half_width),
            Distribution::Tabulated(ref g) => Some(g.x_min().abs().max(g.x_max().abs())),
            _ => None,
        }
    }

    /// Radius outside of which at most ~1e-9 of the mass lies (at least
    /// six standard deviations).
    pub fn effective_half_width(&self) -> f64 {
        match *self {
            Distribution::Gaussian { variance } => 6.0 * variance.sqrt(),
            Distribution::Laplace { variance } => {
                let b = (variance / 2.0).sqrt();
                (b * (1.0 / TAIL_MASS).ln()).max(6.0 * variance.sqrt())
            }
            _ => self.support_half_width().unwrap_or(0.0),
        }
    }

    /// Law of `c * X`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c != 0.0) {
            return Err(Error::invalid("scale factor must be finite and nonzero"));
        }
        let s = c.abs();
        Ok(match self {
            Distribution::Gaussian { variance } => Distribution::Gaussian {
                variance: variance * s * s,
            },
            Distribution::Laplace { variance } => Distribution::Laplace {
                variance: variance * s * s,
            },
            Distribution::Uniform { half_width } => Distribution::Uniform {
                half_width: half_width * s,
            },
            Distribution::Triangular { half_width } => Distribution::Triangular {
                half_width: half_width * s,
            },
            Distribution::Tabulated(g) => {
                let mut values: Vec<f64> = g.values().iter().map(|v| v / s).collect();
                let x_min = if c > 0.0 {
                    g.x_min() * s
                } else {
                    values.reverse();
                    -g.x_max() * s
                };
                Distribution::Tabulated(DensityGrid::new(x_min, g.step() * s, values)?)
            }
        })
    }

    /// Same shape rescaled to the requested variance.
    pub fn with_variance(&self, variance: f64) -> Result<Self> {
        check_positive(variance, "variance")?;
        self.scaled((variance / self.variance()).sqrt())
    }

    /// Closed-form characteristic function `E[e^{i w X}]`, when known.
    pub fn closed_form_char_fn(&self, w: f64) -> Option<Complex64> {
        let sinc = |t: f64| {
            if t.abs() < 1e-8 {
                1.0 - t * t / 6.0
            } else {
                t.sin() / t
            }
        };
        let re = match *self {
            Distribution::Gaussian { variance } => (-variance * w * w / 2.0).exp(),
            Distribution::Uniform { half_width: a } => sinc(a * w),
            Distribution::Laplace { variance } => 1.0 / (1.0 + variance * w * w / 2.0),
            Distribution::Triangular { half_width: a } => sinc(a * w).powi(2),
            Distribution::Tabulated(_) => return None,
        };
        Some(Complex64::new(re, 0.0))
    }

    /// Default lattice `(x_min, n)` at `step`: symmetric about zero with zero
    /// on the grid, covering the effective support padded by 10%.
    pub fn default_grid(&self, step: f64) -> (f64, usize) {
        let half = 1.1 * self.effective_half_width().max(6.0 * self.std_dev());
        let m = ((half / step).ceil() as usize).max(8);
        (-(m as f64) * step, 2 * m + 1)
    }

    /// [`tabulate`] on [`Self::default_grid`].
    pub fn lattice(&self, step: f64) -> Result<DensityGrid> {
        let (x_min, n) = self.default_grid(step);
        tabulate(self, x_min, step, n)
    }
}

/// Samples `d` on `x_min + i * step`, `i = 0..n`, and normalizes. Fails if
/// the grid holds less than `1 - 1e-6` of the mass.
pub fn tabulate(d: &Distribution, x_min: f64, step: f64, n: usize) -> Result<DensityGrid> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid("step must be positive"));
    }
    if n < DensityGrid::MIN_LEN {
        return Err(Error::invalid("tabulation needs at least 16 points"));
    }
    let x_max = x_min + (n - 1) as f64 * step;
    let coverage = d.coverage(x_min, x_max);
    if coverage < MIN_COVERAGE {
        return Err(Error::Truncation { coverage });
    }
    let values = (0..n).map(|i| d.density(x_min + i as f64 * step)).collect();
    DensityGrid::new(x_min, step, values)
}

/// Law of the sum of `n` independent copies of `d`, as a tabulated grid
/// obtained by FFT convolution of the lattice density.
pub fn self_convolve(d: &Distribution, n: u32) -> Result<Distribution> {
    if n == 0 {
        return Err(Error::invalid("self_convolve needs n >= 1"));
    }
    if n == 1 {
        return Ok(d.clone());
    }
    let grid = match d {
        Distribution::Tabulated(g) => g.clone(),
        _ => d.lattice(DEFAULT_STEP)?,
    };
    let step = grid.step();
    let scale = step.powi(n as i32 - 1);
    let values = fft::convolve_power(grid.values(), n)
        .into_iter()
        .map(|v| v * scale)
        .collect();
    let out = DensityGrid::new(f64::from(n) * grid.x_min(), step, values)?;
    Ok(Distribution::Tabulated(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::vec;

    fn families() -> [Distribution; 4] {
        [
            Distribution::gaussian(1.3).unwrap(),
            Distribution::uniform(0.8).unwrap(),
            Distribution::laplace(0.7).unwrap(),
            Distribution::triangular(1.1).unwrap(),
        ]
    }

    #[test]
    fn density_examples() {
        let g = Distribution::gaussian(1.0).unwrap();
        assert!((g.density(0.0) - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
        let u = Distribution::uniform(1.0).unwrap();
        assert_eq!(u.density(0.5), 0.5);
        assert_eq!(u.density(1.5), 0.0);
        let t = Distribution::triangular(1.0).unwrap();
        assert_eq!(t.density(0.0), 0.5);
    }

    #[test]
    fn triangular_peak_matches_uniform_self_convolution_quadrature() {
        // midpoint quadrature of int u(s) u(-s) ds over [-1, 1]
        let u = Distribution::uniform(1.0).unwrap();
        let n = 200_000;
        let h = 2.0 / n as f64;
        let peak: f64 = (0..n)
            .map(|i| {
                let s = -1.0 + (i as f64 + 0.5) * h;
                u.density(s) * u.density(-s)
            })
            .sum::<f64>()
            * h;
        let t = Distribution::triangular(1.0).unwrap();
        assert!((t.density(0.0) - peak).abs() < 1e-9);
        for x in [0.3, 1.2, 1.9] {
            let conv: f64 = (0..n)
                .map(|i| {
                    let s = -1.0 + (i as f64 + 0.5) * h;
                    u.density(s) * u.density(x - s)
                })
                .sum::<f64>()
                * h;
            assert!((t.density(x) - conv).abs() < 1e-4, "x = {x}");
        }
    }

    #[test]
    fn moment_examples() {
        assert_eq!(Distribution::gaussian(1.0).unwrap().moment(4).unwrap(), 3.0);
        assert!((Distribution::uniform(1.0).unwrap().moment(2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((Distribution::laplace(2.0).unwrap().moment(4).unwrap() - 24.0).abs() < 1e-12);
    }

    #[test]
    fn laplace_fourth_moment_by_quadrature() {
        // b = 1: int x^4 e^{-|x|}/2 dx on a fine midpoint rule
        let d = Distribution::laplace(2.0).unwrap();
        let h = 1e-3;
        let q: f64 = (0..80_000)
            .map(|i| {
                let x = (i as f64 + 0.5) * h;
                2.0 * x.powi(4) * d.density(x)
            })
            .sum::<f64>()
            * h;
        assert!((q - 24.0).abs() < 1e-5, "{q}");
        assert!((d.moment(4).unwrap() - q).abs() < 1e-5);
    }

    #[test]
    fn odd_moments_are_exactly_zero() {
        for d in families() {
            for k in [1, 3, 5, 7] {
                assert_eq!(d.moment(k).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn closed_moments_agree_with_quadrature() {
        for d in families() {
            let g = d.lattice(0.002).unwrap();
            for k in [2, 4, 6] {
                let exact = d.moment(k).unwrap();
                let quad = g.raw_moment(k as u32);
                assert!(
                    ((exact - quad) / exact).abs() < 1e-4,
                    "{} k={k}: {exact} vs {quad}",
                    d.name()
                );
            }
        }
    }

    #[test]
    fn tabulated_moment_order_limit() {
        let d =
            Distribution::tabulated(Distribution::gaussian(1.0).unwrap().lattice(0.01).unwrap());
        assert!(d.moment(12).is_ok());
        assert!(matches!(
            d.moment(13),
            Err(Error::MomentOrder { order: 13, .. })
        ));
    }

    #[test]
    fn tabulate_examples() {
        let g = Distribution::gaussian(1.0).unwrap();
        assert!(1.0 - g.coverage(-6.0, 6.0) < 1e-8);
        let grid = tabulate(&g, -6.0, 0.01, 1201).unwrap();
        assert!((grid.mass() - 1.0).abs() < 1e-12);

        let u = Distribution::uniform(1.0).unwrap();
        assert_eq!(u.coverage(-2.0, 2.0), 1.0);
        let grid = tabulate(&u, -2.0, 0.01, 401).unwrap();
        // midpoint convention at the jumps makes the raw Riemann sum exact
        let raw: f64 = (0..401)
            .map(|i| u.density(-2.0 + i as f64 * 0.01))
            .sum::<f64>()
            * 0.01;
        assert!((raw - 1.0).abs() < 1e-12);
        assert!((grid.mass() - 1.0).abs() < 1e-12);

        let l = Distribution::laplace(1.0).unwrap();
        assert!(1.0 - l.coverage(-12.0, 12.0) < 1e-6);
        assert!(tabulate(&l, -12.0, 0.01, 2401).is_ok());
    }

    #[test]
    fn tabulate_rejects_truncating_grid() {
        let g = Distribution::gaussian(1.0).unwrap();
        assert!(matches!(
            tabulate(&g, -3.0, 0.01, 601),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn default_grids_hold_the_mass() {
        for d in families() {
            let g = d.lattice(DEFAULT_STEP).unwrap();
            assert!((g.mass() - 1.0).abs() < 1e-4);
            let (x_min, n) = d.default_grid(DEFAULT_STEP);
            assert!(1.0 - d.coverage(x_min, x_min + (n - 1) as f64 * DEFAULT_STEP) < 1e-6);
        }
    }

    #[test]
    fn density_is_even() {
        for d in families() {
            let g = d.lattice(DEFAULT_STEP).unwrap();
            for (x, _) in g.points() {
                assert_eq!(d.density(x), d.density(-x));
            }
        }
    }

    #[test]
    fn self_convolve_examples() {
        let u = Distribution::uniform(1.0).unwrap();
        let t = Distribution::triangular(1.0).unwrap();
        let Distribution::Tabulated(s) = self_convolve(&u, 2).unwrap() else {
            panic!("expected tabulated")
        };
        assert!(s.l1_distance_to(|x| t.density(x)) < 1e-3);

        let g1 = Distribution::gaussian(1.0).unwrap();
        let g3 = Distribution::gaussian(3.0).unwrap();
        let Distribution::Tabulated(s) = self_convolve(&g1, 3).unwrap() else {
            panic!("expected tabulated")
        };
        assert!(s.l1_distance_to(|x| g3.density(x)) < 1e-3);

        for d in families() {
            assert_eq!(self_convolve(&d, 1).unwrap(), d);
        }
    }

    #[test]
    fn self_convolve_scales_variance() {
        for d in families() {
            for n in [2u32, 3, 4] {
                let s = self_convolve(&d, n).unwrap();
                let rel =
                    (s.variance() - f64::from(n) * d.variance()) / (f64::from(n) * d.variance());
                assert!(rel.abs() < 1e-4, "{} n={n}: rel {rel}", d.name());
            }
        }
    }

    #[test]
    fn negative_grid_is_rejected_and_ringing_clipped() {
        let mut v = vec![1.0; 32];
        v[3] = -1e-12;
        let g = DensityGrid::new(0.0, 0.1, v.clone()).unwrap();
        assert_eq!(g.values()[3], 0.0);
        v[3] = -1e-3;
        assert!(matches!(
            DensityGrid::new(0.0, 0.1, v),
            Err(Error::NegativeDensity { .. })
        ));
    }

    #[test]
    fn scaling_and_variance_targets() {
        for d in families() {
            let s = d.with_variance(2.5).unwrap();
            assert!((s.variance() - 2.5).abs() < 1e-12);
        }
        let grid = Distribution::laplace(1.0).unwrap().lattice(0.01).unwrap();
        let t = Distribution::tabulated(grid);
        let s = t.scaled(-2.0).unwrap();
        assert!((s.variance() - 4.0 * t.variance()).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Distribution::gaussian(0.0).is_err());
        assert!(Distribution::uniform(-1.0).is_err());
        assert!(Distribution::laplace(f64::NAN).is_err());
        assert!(DensityGrid::new(0.0, 0.1, vec![1.0; 8]).is_err());
    }
}
