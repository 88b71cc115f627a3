//! Characteristic functions `F(w) = E[e^{i w X}]` on uniform frequency grids,
//! their inversion, and branch-tracked fractional powers `F^g`.
//!
//! Frequency grids are `w_i = w_min + i * dw`; every grid must contain `w = 0`.
//! A density grid with step `dx` and an `n`-point frequency grid are *paired*
//! when `dw = 2 pi / (n dx)` and `w_min = -(n/2) dw`; paired transforms run
//! through the FFT, everything else through direct sums.

pub(crate) mod fft;

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
// float math for no_std builds; unused when std is linked elsewhere in the graph
#[allow(unused_imports)]
use num_traits::Float;

use crate::distributions::{DensityGrid, Distribution};
use crate::{Error, Result};

/// `|F|` below this counts as a zero of the characteristic function.
pub const ZERO_THRESHOLD: f64 = 1e-12;
/// Largest imaginary part (relative to the largest real part) tolerated
/// after inversion.
pub const IMAG_RESIDUE_LIMIT: f64 = 1e-6;

const F0_TOLERANCE: f64 = 1e-10;
const CONJ_TOLERANCE: f64 = 1e-8;

const C0: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ClosedForm,
    TransformOfGrid,
    FractionalPower,
}

/// Frequency step paired with a density step `dx` at transform length `n`.
pub fn paired_step(dx: f64, n: usize) -> f64 {
    2.0 * PI / (n as f64 * dx)
}

fn zero_index(omega_min: f64, step: f64, len: usize) -> Result<usize> {
    let t = -omega_min / step;
    let i = t.round();
    if (t - i).abs() > 1e-9 || i < 0.0 || i >= len as f64 {
        return Err(Error::invalid("frequency grid must contain omega = 0"));
    }
    Ok(i as usize)
}

/// Characteristic function sampled on `omega_min + i * step`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharFn {
    omega_min: f64,
    step: f64,
    values: Vec<Complex64>,
    provenance: Provenance,
    zero: usize,
}

impl CharFn {
    /// Validates `F(0) = 1` (within 1e-10) and `F(-w) = conj F(w)` (within
    /// 1e-8) on every mirrored pair of grid points.
    pub fn new(
        omega_min: f64,
        step: f64,
        values: Vec<Complex64>,
        provenance: Provenance,
    ) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) || !omega_min.is_finite() {
            return Err(Error::invalid("frequency step must be positive and finite"));
        }
        if values.len() < 2 {
            return Err(Error::invalid(
                "characteristic function needs at least 2 samples",
            ));
        }
        if values
            .iter()
            .any(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(Error::invalid(
                "characteristic function has non-finite samples",
            ));
        }
        let zero = zero_index(omega_min, step, values.len())?;
        if (values[zero] - Complex64::new(1.0, 0.0)).norm() > F0_TOLERANCE {
            return Err(Error::invalid(
                "characteristic function must equal 1 at omega = 0",
            ));
        }
        let reach = zero.min(values.len() - 1 - zero);
        for j in 1..=reach {
            if (values[zero - j] - values[zero + j].conj()).norm() > CONJ_TOLERANCE {
                return Err(Error::invalid(
                    "characteristic function is not conjugate symmetric",
                ));
            }
        }
        Ok(CharFn {
            omega_min,
            step,
            values,
            provenance,
            zero,
        })
    }

    pub fn omega_min(&self) -> f64 {
        self.omega_min
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Index of `w = 0`.
    pub fn zero_index(&self) -> usize {
        self.zero
    }

    pub fn omega(&self, i: usize) -> f64 {
        (i as f64 - self.zero as f64) * self.step
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.omega(i), v))
    }

    /// True if both functions live on the same frequency grid.
    pub fn same_grid(&self, other: &CharFn) -> bool {
        self.values.len() == other.values.len()
            && self.zero == other.zero
            && (self.step - other.step).abs() <= 1e-12 * self.step
    }

    /// `sup |F - G|` over grid points with `|w| <= window`.
    pub fn sup_distance(&self, other: &CharFn, window: f64) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::invalid(
                "characteristic functions live on different grids",
            ));
        }
        Ok(self
            .points()
            .zip(other.values())
            .filter(|((w, _), _)| w.abs() <= window)
            .map(|((_, a), b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Smallest `|w|` on the grid where `|F| < 1e-12`.
    pub fn first_zero(&self) -> Option<f64> {
        self.points()
            .filter(|(_, v)| v.norm() < ZERO_THRESHOLD)
            .map(|(w, _)| w.abs())
            .reduce(f64::min)
    }

    /// Smallest `|w|` beyond which `|F| < level` everywhere on the grid, i.e.
    /// where the numerical tail starts. `None` if a sample at either end of
    /// the grid reaches `level`.
    pub fn tail_start(&self, level: f64) -> Option<f64> {
        let n = self.values.len();
        let mut hi = n;
        while hi > self.zero + 1 && self.values[hi - 1].norm() < level {
            hi -= 1;
        }
        let mut lo = 0;
        while lo + 1 < self.zero && self.values[lo].norm() < level {
            lo += 1;
        }
        if hi == n || lo == 0 {
            return None;
        }
        Some(self.omega(hi).min(-self.omega(lo - 1)))
    }
}

/// Unwrapped logarithm of a characteristic function.
#[derive(Debug, Clone, PartialEq)]
pub struct LogCharFn {
    omega_min: f64,
    step: f64,
    values: Vec<Complex64>,
}

impl LogCharFn {
    pub fn omega_min(&self) -> f64 {
        self.omega_min
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn omega(&self, i: usize) -> f64 {
        self.omega_min + i as f64 * self.step
    }
}

/// Density values that may be negative, as returned by inversion.
#[derive(Debug, Clone, PartialEq)]
pub struct RawGrid {
    pub x_min: f64,
    pub step: f64,
    pub values: Vec<f64>,
    /// Largest `|Im f|` relative to the largest `|Re f|`.
    pub imag_residue: f64,
}

impl RawGrid {
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.step
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.x(i), v))
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.step
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest value and its location.
    pub fn min_with_location(&self) -> (f64, f64) {
        self.points().fold(
            (f64::INFINITY, 0.0),
            |acc, (x, v)| if v < acc.0 { (v, x) } else { acc },
        )
    }
}

/// Samples the characteristic function of `d` at `w_i = (i - n/2) * dw`,
/// `dw = 2 w_max / n`, `i = 0..n`. Closed forms are used for the named
/// families, a direct Riemann sum for tabulated grids.
pub fn char_fn(d: &Distribution, omega_max: f64, n: usize) -> Result<CharFn> {
    if n < 64 || n % 2 != 0 {
        return Err(Error::invalid(
            "char_fn needs an even number of points, at least 64",
        ));
    }
    if !(omega_max > 0.0 && omega_max.is_finite()) {
        return Err(Error::invalid("omega_max must be positive and finite"));
    }
    let step = 2.0 * omega_max / n as f64;
    let half = n / 2;
    let omega = |i: usize| (i as f64 - half as f64) * step;
    match d {
        Distribution::Tabulated(g) => {
            let mut values = vec![C0; n];
            for (i, v) in values.iter_mut().enumerate().skip(half) {
                *v = grid_transform_at(g, omega(i));
            }
            for j in 1..half {
                values[half - j] = values[half + j].conj();
            }
            values[0] = grid_transform_at(g, omega(0));
            CharFn::new(omega(0), step, values, Provenance::TransformOfGrid)
        }
        _ => {
            let values = (0..n)
                .map(|i| d.closed_form_char_fn(omega(i)).unwrap_or(C0))
                .collect();
            CharFn::new(omega(0), step, values, Provenance::ClosedForm)
        }
    }
}

/// `sum_j f_j e^{i w x_j} dx`, with the phase advanced by rotation.
fn grid_transform_at(g: &DensityGrid, w: f64) -> Complex64 {
    let rot = Complex64::from_polar(1.0, w * g.step());
    let mut phase = Complex64::from_polar(1.0, w * g.x_min());
    let mut acc = C0;
    for (j, &f) in g.values().iter().enumerate() {
        if j % 256 == 0 {
            // refresh to keep the recurrence from drifting
            phase = Complex64::from_polar(1.0, w * g.x(j));
        }
        acc += phase * f;
        phase *= rot;
    }
    acc * g.step()
}

/// Transform of a density grid onto the paired `n`-point frequency grid
/// (`n` a power of two), computed by FFT.
pub fn transform_grid(g: &DensityGrid, n: usize) -> Result<CharFn> {
    if !n.is_power_of_two() || n < 64 {
        return Err(Error::invalid(
            "transform length must be a power of two, at least 64",
        ));
    }
    if g.len() > n {
        return Err(Error::invalid(
            "transform length shorter than the density grid",
        ));
    }
    let dx = g.step();
    let dw = paired_step(dx, n);
    let half = n / 2;
    let mut buf = vec![C0; n];
    for (j, (b, &f)) in buf.iter_mut().zip(g.values()).enumerate() {
        *b = Complex64::new(if j % 2 == 0 { f } else { -f }, 0.0);
    }
    fft::fft(&mut buf, fft::Direction::Inverse);
    for (k, b) in buf.iter_mut().enumerate() {
        let w = (k as f64 - half as f64) * dw;
        *b *= Complex64::from_polar(dx, w * g.x_min());
    }
    // exact symmetry for the mirrored bins; removes roundoff asymmetry
    for j in 1..half {
        let avg = (buf[half + j] + buf[half - j].conj()) * 0.5;
        buf[half + j] = avg;
        buf[half - j] = avg.conj();
    }
    buf[half] = Complex64::new(buf[half].re, 0.0);
    CharFn::new(-(half as f64) * dw, dw, buf, Provenance::TransformOfGrid)
}

/// `f(x) = (1 / 2 pi) sum_k F(w_k) e^{-i w_k x} dw` on `x_min + j dx`,
/// `j = 0..n`. Uses the FFT when the grids are paired. The unmatched
/// lowest bin of an even-length grid is replaced by its real part (the
/// average with its conjugate mirror).
pub fn inverse_char_fn(f: &CharFn, x_min: f64, dx: f64, n: usize) -> Result<RawGrid> {
    if !(dx > 0.0 && dx.is_finite()) || n == 0 {
        return Err(Error::invalid(
            "inverse needs a positive step and at least one point",
        ));
    }
    let len = f.len();
    let dw = f.step();
    let mut spec: Vec<Complex64> = f.values().to_vec();
    let mirror_limit = f.zero_index().min(len - 1 - f.zero_index());
    for (i, v) in spec.iter_mut().enumerate() {
        if i + mirror_limit < f.zero_index() || i > f.zero_index() + mirror_limit {
            *v = Complex64::new(v.re, 0.0);
        }
    }
    let scale = dw / (2.0 * PI);
    let paired = len.is_power_of_two()
        && f.zero_index() == len / 2
        && ((dw * dx * len as f64) / (2.0 * PI) - 1.0).abs() < 1e-9;
    let out: Vec<Complex64> = if paired {
        let mut buf: Vec<Complex64> = spec
            .iter()
            .enumerate()
            .map(|(k, &v)| v * Complex64::from_polar(1.0, -f.omega(k) * x_min))
            .collect();
        fft::fft(&mut buf, fft::Direction::Forward);
        (0..n)
            .map(|j| {
                let v = buf[j % len] * scale;
                if j % 2 == 0 {
                    v
                } else {
                    -v
                }
            })
            .collect()
    } else {
        (0..n)
            .map(|j| {
                let x = x_min + j as f64 * dx;
                let rot = Complex64::from_polar(1.0, -dw * x);
                let mut phase = Complex64::from_polar(1.0, -f.omega(0) * x);
                let mut acc = C0;
                for (k, &v) in spec.iter().enumerate() {
                    if k % 256 == 0 {
                        phase = Complex64::from_polar(1.0, -f.omega(k) * x);
                    }
                    acc += v * phase;
                    phase *= rot;
                }
                acc * scale
            })
            .collect()
    };
    let max_re = out.iter().map(|v| v.re.abs()).fold(0.0, f64::max);
    let max_im = out.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    let imag_residue = if max_re > 0.0 {
        max_im / max_re
    } else {
        max_im
    };
    if imag_residue > IMAG_RESIDUE_LIMIT {
        return Err(Error::ImaginaryResidue {
            residue: imag_residue,
        });
    }
    Ok(RawGrid {
        x_min,
        step: dx,
        values: out.into_iter().map(|v| v.re).collect(),
        imag_residue,
    })
}

/// Phase increment in `(-pi, pi]`; an exact sign flip counts as `+pi`.
fn phase_step(prev: Complex64, next: Complex64) -> f64 {
    let d = (next / prev).arg();
    if d <= -PI {
        PI
    } else {
        d
    }
}

/// Unwrapped log on the indices `zero..end` (positive side) and the mirrored
/// negative side, for `|w| < limit`. Returns `None` in the value slot for
/// indices outside the limit.
fn unwrap_within(f: &CharFn, limit: f64) -> Result<Vec<Option<Complex64>>> {
    let n = f.len();
    let z = f.zero_index();
    let vals = f.values();
    let mut out = vec![None; n];
    let inside = |i: usize| f.omega(i).abs() < limit;
    let v0 = vals[z];
    out[z] = Some(Complex64::new(v0.norm().ln(), v0.arg()));
    let mut theta = v0.arg();
    for i in z + 1..n {
        if !inside(i) {
            break;
        }
        if vals[i].norm() < ZERO_THRESHOLD {
            return Err(Error::ZeroCrossing { omega: f.omega(i) });
        }
        theta += phase_step(vals[i - 1], vals[i]);
        out[i] = Some(Complex64::new(vals[i].norm().ln(), theta));
    }
    let reach = z.min(n - 1 - z);
    for j in 1..=reach {
        out[z - j] = out[z + j].map(|v| v.conj());
    }
    // unmatched low end: keep marching from the neighbour
    for i in (0..z - reach.min(z)).rev() {
        if !inside(i) {
            break;
        }
        if vals[i].norm() < ZERO_THRESHOLD {
            return Err(Error::ZeroCrossing { omega: f.omega(i) });
        }
        let prev = out[i + 1].expect("neighbour inside limit");
        let th = prev.im + phase_step(vals[i + 1], vals[i]);
        out[i] = Some(Complex64::new(vals[i].norm().ln(), th));
    }
    Ok(out)
}

/// Continuous logarithm of `F`, starting from the principal value at
/// `w = 0` and marching outward so consecutive imaginary parts differ by at
/// most `pi`. Fails with [`Error::ZeroCrossing`] at the first grid point
/// (closest to zero on the positive side) where `|F| < 1e-12`.
pub fn log_unwrap(f: &CharFn) -> Result<LogCharFn> {
    let vals = unwrap_within(f, f64::INFINITY)?;
    Ok(LogCharFn {
        omega_min: f.omega_min(),
        step: f.step(),
        values: vals.into_iter().map(|v| v.expect("full domain")).collect(),
    })
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("exponent must be positive and finite"))
    }
}

fn integer_exponent(gamma: f64) -> Option<i32> {
    let r = gamma.round();
    ((gamma - r).abs() <= 1e-12 && r <= f64::from(i32::MAX)).then_some(r as i32)
}

/// `F^gamma` along the continuous branch. Integer exponents use plain
/// powers and never fail.
pub fn fractional_power(f: &CharFn, gamma: f64) -> Result<CharFn> {
    fractional_power_within(f, gamma, f64::INFINITY)
}

/// [`fractional_power`] restricted to `|w| < omega_limit`; samples outside
/// the limit are set to zero.
pub fn fractional_power_within(f: &CharFn, gamma: f64, omega_limit: f64) -> Result<CharFn> {
    check_gamma(gamma)?;
    let values = if let Some(k) = integer_exponent(gamma) {
        f.points()
            .map(|(w, v)| if w.abs() < omega_limit { v.powi(k) } else { C0 })
            .collect()
    } else {
        unwrap_within(f, omega_limit)?
            .into_iter()
            .map(|l| l.map_or(C0, |l| (l * gamma).exp()))
            .collect()
    };
    CharFn::new(f.omega_min(), f.step(), values, Provenance::FractionalPower)
}
