//! Scalar estimation of `X` from `Y = X + Z` by lattice quadrature.
//!
//! Source and noise are sampled on a common lattice `x = i * step` and
//! normalized to probability masses, so the discretized problem is itself an
//! exact estimation problem: the computed conditional mean is the optimal
//! estimator of the discrete model and its risk never exceeds that of any
//! linear rule on the same lattice.

use alloc::vec::Vec;
// float math for no_std builds; unused when std is linked elsewhere in the graph
#[allow(unused_imports)]
use num_traits::Float;

use crate::distributions::{binomial, DensityGrid, Distribution};
use crate::{Error, Result, DEFAULT_STEP};

/// Denominators below this are treated as unobservable `y`.
pub const UNDERFLOW: f64 = 1e-300;

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("SNR must be positive and finite"))
    }
}

/// Estimate `X` from `Y = X + Z` with independent `X` and `Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    source: Distribution,
    noise: Distribution,
    gamma: f64,
    step: f64,
}

impl Problem {
    pub fn new(source: Distribution, noise: Distribution) -> Result<Self> {
        let gamma = source.variance() / noise.variance();
        check_gamma(gamma)?;
        Ok(Problem {
            source,
            noise,
            gamma,
            step: DEFAULT_STEP,
        })
    }

    /// Rescales `noise` so that `variance(source) / variance(noise) = gamma`.
    pub fn at_snr(source: Distribution, noise: &Distribution, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        let noise = noise.with_variance(source.variance() / gamma)?;
        Self::new(source, noise)
    }

    /// Overrides the quadrature step.
    pub fn with_step(mut self, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::invalid("step must be positive and finite"));
        }
        self.step = step;
        Ok(self)
    }

    pub fn source(&self) -> &Distribution {
        &self.source
    }

    pub fn noise(&self) -> &Distribution {
        &self.noise
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    fn lattice(&self) -> Result<Lattice> {
        Ok(Lattice {
            step: self.step,
            x: on_lattice(&self.source, self.step)?,
            z: on_lattice(&self.noise, self.step)?,
        })
    }

    /// Every lattice point where `Y` has mass.
    pub fn default_obs_grid(&self) -> Result<ObsGrid> {
        let l = self.lattice()?;
        let lo = l.x.first + l.z.first;
        let len = l.x.mass.len() + l.z.mass.len() - 1;
        Ok(ObsGrid {
            y_min: lo as f64 * self.step,
            step: self.step,
            len,
        })
    }
}

/// Probability masses at `(first + i) * step`.
#[derive(Debug, Clone)]
struct LatticeLaw {
    first: i64,
    mass: Vec<f64>,
}

impl LatticeLaw {
    fn x(&self, i: usize, step: f64) -> f64 {
        (self.first + i as i64) as f64 * step
    }
}

fn on_lattice(d: &Distribution, step: f64) -> Result<LatticeLaw> {
    let grid: DensityGrid = match d {
        Distribution::Tabulated(g)
            if (g.step() - step).abs() <= 1e-12 * step
                && ((g.x_min() / step) - (g.x_min() / step).round()).abs() < 1e-9 =>
        {
            g.clone()
        }
        Distribution::Tabulated(g) => {
            let first = (g.x_min() / step).floor() as i64;
            let last = (g.x_max() / step).ceil() as i64;
            let n = usize::try_from(last - first + 1)
                .unwrap_or(0)
                .max(DensityGrid::MIN_LEN);
            crate::distributions::tabulate(d, first as f64 * step, step, n)?
        }
        _ => d.lattice(step)?,
    };
    let v = grid.values();
    let lo = v.iter().position(|&m| m > 0.0).unwrap_or(0);
    let hi = v.iter().rposition(|&m| m > 0.0).map_or(v.len(), |i| i + 1);
    let first = (grid.x_min() / step).round() as i64 + lo as i64;
    let mass = v[lo..hi].iter().map(|m| m * grid.step()).collect();
    Ok(LatticeLaw { first, mass })
}

struct Lattice {
    step: f64,
    x: LatticeLaw,
    z: LatticeLaw,
}

/// Uniform observation grid `y_min + k * step`, `k = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObsGrid {
    pub y_min: f64,
    pub step: f64,
    pub len: usize,
}

impl ObsGrid {
    /// Symmetric grid on the multiples of `step` covering `[-half, half]`.
    pub fn symmetric(half: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && half >= 0.0 && half.is_finite()) {
            return Err(Error::invalid(
                "observation grid needs positive step and extent",
            ));
        }
        let m = (half / step).ceil() as usize;
        Ok(ObsGrid {
            y_min: -(m as f64) * step,
            step,
            len: 2 * m + 1,
        })
    }

    pub fn y(&self, k: usize) -> f64 {
        self.y_min + k as f64 * self.step
    }
}

/// Tabulated estimator `y -> h(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimator {
    grid: ObsGrid,
    h: Vec<f64>,
    flagged: Vec<usize>,
    fitted_slope: f64,
}

impl Estimator {
    /// `h(y) = k y` on `grid`.
    pub fn linear(k: f64, grid: ObsGrid) -> Self {
        let h = (0..grid.len).map(|i| k * grid.y(i)).collect();
        Estimator {
            grid,
            h,
            flagged: Vec::new(),
            fitted_slope: k,
        }
    }

    pub fn grid(&self) -> ObsGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.h
    }

    /// Grid indices where `h` was extrapolated because `y` is unobservable.
    pub fn flagged(&self) -> &[usize] {
        &self.flagged
    }

    /// Least-squares slope through the origin over `|y| <= 2 sigma_y`.
    pub fn fitted_slope(&self) -> f64 {
        self.fitted_slope
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.h
            .iter()
            .enumerate()
            .map(move |(i, &h)| (self.grid.y(i), h))
    }

    /// Linear interpolation; linear extrapolation from the end segments.
    pub fn eval(&self, y: f64) -> f64 {
        let n = self.h.len();
        if n == 1 {
            return self.h[0];
        }
        let t = (y - self.grid.y_min) / self.grid.step;
        let r = t.round();
        if (t - r).abs() < 1e-9 && r >= 0.0 && (r as usize) < n {
            return self.h[r as usize];
        }
        let i = (t.floor().max(0.0) as usize).min(n - 2);
        let w = t - i as f64;
        self.h[i] + (self.h[i + 1] - self.h[i]) * w
    }

    /// `sup |h(y) - k y|` over grid points with `|y| <= half`.
    pub fn sup_deviation_from_line(&self, k: f64, half: f64) -> f64 {
        self.points()
            .filter(|(y, _)| y.abs() <= half)
            .map(|(y, h)| (h - k * y).abs())
            .fold(0.0, f64::max)
    }
}

fn fit_slope(grid: &ObsGrid, h: &[f64], half: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, &v) in h.iter().enumerate() {
        let y = grid.y(i);
        if y.abs() <= half {
            num += y * v;
            den += y * y;
        }
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Conditional mean `E[X | Y = y]` on `grid` by Riemann sums over the
/// source lattice. Points whose likelihood underflows are filled by linear
/// extrapolation from the nearest computed points and flagged.
pub fn optimal_estimator(p: &Problem, grid: &ObsGrid) -> Result<Estimator> {
    if grid.len == 0 || !(grid.step > 0.0) {
        return Err(Error::invalid("observation grid is empty"));
    }
    let l = p.lattice()?;
    let step = l.step;
    let aligned = (grid.step - step).abs() <= 1e-12 * step
        && ((grid.y_min / step) - (grid.y_min / step).round()).abs() < 1e-9;
    let mut h = Vec::with_capacity(grid.len);
    let mut ok = Vec::with_capacity(grid.len);
    let xs: Vec<f64> = (0..l.x.mass.len()).map(|i| l.x.x(i, step)).collect();
    for k in 0..grid.len {
        let (mut num, mut den) = (0.0, 0.0);
        if aligned {
            let yk = (grid.y_min / step).round() as i64 + k as i64;
            for (i, &pi) in l.x.mass.iter().enumerate() {
                let j = yk - (l.x.first + i as i64) - l.z.first;
                if j >= 0 && (j as usize) < l.z.mass.len() {
                    let w = pi * l.z.mass[j as usize];
                    num += w * xs[i];
                    den += w;
                }
            }
        } else {
            let y = grid.y(k);
            for (i, &pi) in l.x.mass.iter().enumerate() {
                let w = pi * p.noise.density(y - xs[i]);
                num += w * xs[i];
                den += w;
            }
        }
        if den > UNDERFLOW && den.is_finite() {
            h.push(num / den);
            ok.push(true);
        } else {
            h.push(0.0);
            ok.push(false);
        }
    }
    let flagged = fill_unobservable(grid, &mut h, &ok);
    let sigma_y = (p.source.variance() + p.noise.variance()).sqrt();
    let fitted_slope = fit_slope(grid, &h, 2.0 * sigma_y);
    Ok(Estimator {
        grid: *grid,
        h,
        flagged,
        fitted_slope,
    })
}

fn fill_unobservable(grid: &ObsGrid, h: &mut [f64], ok: &[bool]) -> Vec<usize> {
    let flagged: Vec<usize> = (0..h.len()).filter(|&i| !ok[i]).collect();
    if flagged.is_empty() {
        return flagged;
    }
    let valid: Vec<usize> = (0..h.len()).filter(|&i| ok[i]).collect();
    if valid.is_empty() {
        return flagged;
    }
    for &i in &flagged {
        // two nearest valid points on the same side when possible
        let pos = valid.partition_point(|&v| v < i);
        let (a, b) = if pos == 0 {
            (valid[0], *valid.get(1).unwrap_or(&valid[0]))
        } else if pos == valid.len() {
            (valid[pos - 1], valid[pos.saturating_sub(2)])
        } else {
            (valid[pos - 1], valid[pos])
        };
        h[i] = if a == b {
            h[a]
        } else {
            let (ya, yb) = (grid.y(a), grid.y(b));
            h[a] + (h[b] - h[a]) * (grid.y(i) - ya) / (yb - ya)
        };
    }
    flagged
}

/// Optimal linear MSE coefficient `gamma / (gamma + 1)`.
pub fn linear_coefficient_mse(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(gamma / (gamma + 1.0))
}

/// `g(k) = E[(X - kY)^{p-1} Y]` from the moments of `X` and `Z`.
pub fn lp_stationarity(p: &Problem, k: f64, order: u32) -> Result<f64> {
    if order == 0 {
        return Err(Error::invalid("order must be positive"));
    }
    let q = order - 1;
    let (a, b) = (1.0 - k, -k);
    let mx = |j: u32| p.source.moment(j as usize);
    let mz = |j: u32| p.noise.moment(j as usize);
    let mut g = 0.0;
    for j in 0..=q {
        let c = binomial(q, j) * a.powi(j as i32) * b.powi((q - j) as i32);
        g += c * (mx(j + 1)? * mz(q - j)? + mx(j)? * mz(q - j + 1)?);
    }
    Ok(g)
}

/// Root in `(0, 1)` of `E[(X - kY)^{p-1} Y] = 0` by bisection; the function
/// is decreasing in `k`, so the root is unique.
pub fn linear_coefficient_lp(p: &Problem, order: u32) -> Result<f64> {
    if order != 2 && order != 4 {
        return Err(Error::invalid("only p = 2 and p = 4 are supported"));
    }
    let (mut lo, mut hi) = (1e-9, 1.0 - 1e-9);
    let g_lo = lp_stationarity(p, lo, order)?;
    let g_hi = lp_stationarity(p, hi, order)?;
    if !(g_lo > 0.0 && g_hi < 0.0) {
        return Err(Error::invalid(
            "stationarity condition has no sign change in (0, 1)",
        ));
    }
    for _ in 0..200 {
        if hi - lo <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if lp_stationarity(p, mid, order)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `E |X - h(Y)|^order` as a double Riemann sum over the lattice.
pub fn risk(p: &Problem, h: &Estimator, order: u32) -> Result<f64> {
    if order == 0 {
        return Err(Error::invalid("risk order must be positive"));
    }
    let l = p.lattice()?;
    let step = l.step;
    let mut total = 0.0;
    for (i, &pi) in l.x.mass.iter().enumerate() {
        let x = l.x.x(i, step);
        let mut inner = 0.0;
        for (j, &qj) in l.z.mass.iter().enumerate() {
            let y = x + l.z.x(j, step);
            inner += qj * (x - h.eval(y)).abs().powi(order as i32);
        }
        total += pi * inner;
    }
    Ok(total)
}

/// `E[(X - h(Y)) Y^power]` together with `sigma_x * E|Y^power|`, the scale
/// it should be small against.
pub fn orthogonality_residual(p: &Problem, h: &Estimator, power: u32) -> Result<(f64, f64)> {
    let l = p.lattice()?;
    let step = l.step;
    let (mut r, mut s) = (0.0, 0.0);
    for (i, &pi) in l.x.mass.iter().enumerate() {
        let x = l.x.x(i, step);
        for (j, &qj) in l.z.mass.iter().enumerate() {
            let y = x + l.z.x(j, step);
            let eta = y.powi(power as i32);
            r += pi * qj * (x - h.eval(y)) * eta;
            s += pi * qj * eta.abs();
        }
    }
    Ok((r, s * p.source.std_dev()))
}

/// Optimal and best-linear MSE on the lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    pub gap: f64,
    pub risk_opt: f64,
    pub risk_lin: f64,
    pub k_mse: f64,
    pub fitted_slope: f64,
}

/// `(risk_lin - risk_opt) / risk_opt` for the MSE, with the linear rule at
/// `k = gamma / (gamma + 1)`.
pub fn gap_report(p: &Problem) -> Result<GapReport> {
    let grid = p.default_obs_grid()?;
    let opt = optimal_estimator(p, &grid)?;
    let k_mse = linear_coefficient_mse(p.gamma)?;
    let lin = Estimator::linear(k_mse, grid);
    let risk_opt = risk(p, &opt, 2)?;
    let risk_lin = risk(p, &lin, 2)?;
    Ok(GapReport {
        gap: (risk_lin - risk_opt) / risk_opt,
        risk_opt,
        risk_lin,
        k_mse,
        fitted_slope: opt.fitted_slope(),
    })
}

pub fn nonlinearity_gap(p: &Problem) -> Result<f64> {
    Ok(gap_report(p)?.gap)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub gamma: f64,
    pub gap: f64,
    pub fitted_slope: f64,
    pub k_mse: f64,
    pub risk_opt: f64,
    pub risk_lin: f64,
}

/// One sweep row: the noise shape rescaled to SNR `gamma`, source fixed.
pub fn sweep_point(source: &Distribution, noise: &Distribution, gamma: f64) -> Result<SweepRow> {
    let p = Problem::at_snr(source.clone(), noise, gamma)?;
    let r = gap_report(&p)?;
    Ok(SweepRow {
        gamma,
        gap: r.gap,
        fitted_slope: r.fitted_slope,
        k_mse: r.k_mse,
        risk_opt: r.risk_opt,
        risk_lin: r.risk_lin,
    })
}

pub fn snr_sweep(
    source: &Distribution,
    noise: &Distribution,
    gammas: &[f64],
) -> Result<Vec<SweepRow>> {
    if gammas.is_empty() {
        return Err(Error::invalid("SNR list is empty"));
    }
    gammas
        .iter()
        .map(|&g| sweep_point(source, noise, g))
        .collect()
}

/// Gaps at two SNRs, each reached by rescaling the noise.
pub fn two_snr_probe(
    source: &Distribution,
    noise: &Distribution,
    gamma1: f64,
    gamma2: f64,
) -> Result<(f64, f64)> {
    if gamma1 == gamma2 {
        return Err(Error::invalid("the two SNR values must differ"));
    }
    let g1 = nonlinearity_gap(&Problem::at_snr(source.clone(), noise, gamma1)?)?;
    let g2 = nonlinearity_gap(&Problem::at_snr(source.clone(), noise, gamma2)?)?;
    Ok((g1, g2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(v: f64) -> Distribution {
        Distribution::gaussian(v).unwrap()
    }

    #[test]
    fn gaussian_pair_is_linear() {
        for gamma in [0.1, 1.0, 10.0] {
            let p = Problem::new(gauss(gamma), gauss(1.0)).unwrap();
            let grid = p.default_obs_grid().unwrap();
            let h = optimal_estimator(&p, &grid).unwrap();
            let sy = (gamma + 1.0f64).sqrt();
            let dev = h.sup_deviation_from_line(gamma / (gamma + 1.0), 3.0 * sy);
            assert!(dev < 1e-3 * sy, "gamma {gamma}: {dev}");
            let r = gap_report(&p).unwrap();
            assert!(r.gap.abs() < 1e-6, "gamma {gamma}: {}", r.gap);
            assert!((r.risk_opt - gamma / (gamma + 1.0)).abs() < 1e-3 * r.risk_opt);
            assert!((h.fitted_slope() - gamma / (gamma + 1.0)).abs() < 1e-6);
        }
    }

    #[test]
    fn identical_laws_give_half() {
        let u = Distribution::uniform(1.0).unwrap();
        let p = Problem::new(u.clone(), u).unwrap();
        let grid = p.default_obs_grid().unwrap();
        let h = optimal_estimator(&p, &grid).unwrap();
        assert!(h.flagged().is_empty());
        for (y, v) in h.points() {
            assert!((v - y / 2.0).abs() < 1e-12);
        }
        assert!(nonlinearity_gap(&p).unwrap().abs() < 1e-9);
    }

    #[test]
    fn off_lattice_grid_agrees_on_gaussians() {
        let p = Problem::new(gauss(2.0), gauss(1.0)).unwrap();
        let grid = ObsGrid {
            y_min: -3.0051,
            step: 0.013,
            len: 400,
        };
        let h = optimal_estimator(&p, &grid).unwrap();
        assert!(h.sup_deviation_from_line(2.0 / 3.0, 5.0) < 1e-6);
    }

    #[test]
    fn uniform_noise_at_low_snr_is_visibly_nonlinear() {
        let u = Distribution::uniform(1.0).unwrap();
        let p = Problem::at_snr(gauss(1.0), &u, 0.1).unwrap();
        let grid = p.default_obs_grid().unwrap();
        let h = optimal_estimator(&p, &grid).unwrap();
        let sy = 11.0f64.sqrt();
        let dev = h.sup_deviation_from_line(h.fitted_slope(), 2.0 * sy);
        assert!(dev > 0.05 * sy, "{dev}");
    }

    #[test]
    fn coefficient_examples() {
        assert_eq!(linear_coefficient_mse(1.0).unwrap(), 0.5);
        assert!((linear_coefficient_mse(1e6).unwrap() - 1.0).abs() < 1e-5);
        assert_eq!(linear_coefficient_mse(10.0).unwrap(), 10.0 / 11.0);
        assert!(linear_coefficient_mse(0.0).is_err());
    }

    #[test]
    fn lp_coefficients() {
        let u = Distribution::uniform(1.0).unwrap();
        let l = Distribution::laplace(1.0).unwrap();
        for (s, z) in [
            (gauss(2.0), u.clone()),
            (l.clone(), u.clone()),
            (u.clone(), l),
        ] {
            let p = Problem::new(s, z).unwrap();
            let k = linear_coefficient_lp(&p, 2).unwrap();
            assert!((k - p.gamma() / (p.gamma() + 1.0)).abs() < 1e-6);
        }
        for gamma in [0.5, 1.0, 3.0] {
            let p = Problem::new(gauss(gamma), gauss(1.0)).unwrap();
            let k = linear_coefficient_lp(&p, 4).unwrap();
            assert!((k - gamma / (gamma + 1.0)).abs() < 1e-3);
        }
        let p = Problem::new(u.clone(), u).unwrap();
        assert!((linear_coefficient_lp(&p, 4).unwrap() - 0.5).abs() < 1e-3);
        assert!(linear_coefficient_lp(&p, 3).is_err());
    }

    #[test]
    fn zero_estimator_risk_is_source_power() {
        let u = Distribution::uniform(1.0).unwrap();
        let p = Problem::at_snr(gauss(1.0), &u, 1.0).unwrap();
        let grid = p.default_obs_grid().unwrap();
        let zero = Estimator::linear(0.0, grid);
        assert!((risk(&p, &zero, 2).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn flagged_points_are_extrapolated() {
        let u = Distribution::uniform(1.0).unwrap();
        let p = Problem::new(u.clone(), u).unwrap();
        let grid = ObsGrid::symmetric(3.0, 0.01).unwrap();
        let h = optimal_estimator(&p, &grid).unwrap();
        assert!(!h.flagged().is_empty());
        for &i in h.flagged() {
            let y = grid.y(i);
            assert!(y.abs() > 2.0);
            assert!((h.values()[i] - y / 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn orthogonality_holds() {
        let u = Distribution::uniform(1.0).unwrap();
        let p = Problem::at_snr(gauss(1.0), &u, 1.0).unwrap();
        let grid = p.default_obs_grid().unwrap();
        let h = optimal_estimator(&p, &grid).unwrap();
        for k in 0..4 {
            let (r, s) = orthogonality_residual(&p, &h, k).unwrap();
            assert!(r.abs() < 1e-4 * s, "k={k}: {r} vs {s}");
        }
    }

    #[test]
    fn sweep_rejects_empty_list() {
        assert!(snr_sweep(&gauss(1.0), &gauss(1.0), &[]).is_err());
    }
}
