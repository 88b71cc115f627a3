//! Matching source/noise construction through `F_X = F_Z^gamma`, the moment
//! recursion that expresses the same condition on moments, and the residual
//! of the L_p linearity differential equation.

use alloc::vec::Vec;
// float math for no_std builds; unused when std is linked elsewhere in the graph
#[allow(unused_imports)]
use num_traits::Float;

use crate::distributions::{binomial, DensityGrid, Distribution};
use crate::spectral::{self, fft::next_pow2, CharFn, RawGrid};
use crate::{Error, Result, DEFAULT_STEP};

/// Candidates dipping below `-VALID_TOLERANCE * max` are genuinely negative.
pub const VALID_TOLERANCE: f64 = 1e-4;
/// Largest tolerated mass defect of a valid candidate.
pub const MASS_TOLERANCE: f64 = 1e-3;
/// Below this level a characteristic-function tail counts as numerically
/// zero, so vanishing samples there do not restrict the domain.
pub const TAIL_LEVEL: f64 = 1e-9;
/// Largest recursion depth for [`matching_moments`].
pub const MAX_RECURSION: usize = 10;

const MIN_TRANSFORM_LEN: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    Valid,
    /// The inverse transform has genuinely negative mass.
    Invalid {
        min_density: f64,
        location: f64,
    },
    /// The base characteristic function vanishes at `omega_cut`; the power
    /// was only formed inside `|w| < omega_cut`.
    DomainRestricted {
        omega_cut: f64,
    },
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Valid => "valid",
            Verdict::Invalid { .. } => "invalid",
            Verdict::DomainRestricted { .. } => "domain_restricted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// Inverse transform of the powered characteristic function.
    pub candidate: RawGrid,
    pub min_density: f64,
    pub mass: f64,
    pub verdict: Verdict,
    /// Exponent applied to the given characteristic function.
    pub exponent: f64,
}

impl MatchResult {
    pub fn is_valid(&self) -> bool {
        self.verdict == Verdict::Valid
    }

    /// Converts a valid candidate into a tabulated law (ringing clipped,
    /// negligible tails trimmed).
    pub fn to_distribution(&self) -> Result<Distribution> {
        if !self.is_valid() {
            return Err(Error::invalid("only valid match candidates are densities"));
        }
        let grid = DensityGrid::with_clip_tolerance(
            self.candidate.x_min,
            self.candidate.step,
            self.candidate.values.clone(),
            VALID_TOLERANCE,
        )?;
        Ok(Distribution::Tabulated(grid.trimmed(1e-12)))
    }
}

/// Source whose characteristic function is `F_noise^gamma`: the law for
/// which the MMSE estimator from `Y = X + Z` is linear at SNR `gamma`.
pub fn match_source(noise: &Distribution, gamma: f64) -> Result<MatchResult> {
    power_match(noise, gamma)
}

/// Noise whose characteristic function is `F_source^(1/gamma)`.
pub fn match_noise(source: &Distribution, gamma: f64) -> Result<MatchResult> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid("SNR must be positive and finite"));
    }
    power_match(source, 1.0 / gamma)
}

fn power_match(base: &Distribution, exponent: f64) -> Result<MatchResult> {
    if !(exponent > 0.0 && exponent.is_finite()) {
        return Err(Error::invalid("SNR must be positive and finite"));
    }
    let grid = match base {
        Distribution::Tabulated(g) => g.clone(),
        _ => base.lattice(DEFAULT_STEP)?,
    };
    let dx = grid.step();
    let reach = grid.x_min().abs().max(grid.x_max().abs());
    let m = (1.1 * exponent.max(1.0) * reach / dx).ceil() as usize;
    let out_len = 2 * m + 1;
    let n = MIN_TRANSFORM_LEN
        .max(next_pow2(2 * out_len))
        .max(next_pow2(grid.len()));
    let f = spectral::transform_grid(&grid, n)?;

    let (powered, restricted) = match spectral::fractional_power(&f, exponent) {
        Ok(p) => (p, None),
        Err(Error::ZeroCrossing { omega }) => match f.tail_start(TAIL_LEVEL) {
            Some(t) if t <= omega => (spectral::fractional_power_within(&f, exponent, t)?, None),
            _ => (
                spectral::fractional_power_within(&f, exponent, omega)?,
                Some(omega),
            ),
        },
        Err(e) => return Err(e),
    };
    let candidate = spectral::inverse_char_fn(&powered, -(m as f64) * dx, dx, out_len)?;
    let (min_density, location) = candidate.min_with_location();
    let mass = candidate.mass();
    let verdict = if let Some(omega_cut) = restricted {
        Verdict::DomainRestricted { omega_cut }
    } else if min_density < -VALID_TOLERANCE * candidate.max() {
        Verdict::Invalid {
            min_density,
            location,
        }
    } else if (mass - 1.0).abs() >= MASS_TOLERANCE {
        return Err(Error::Truncation { coverage: mass });
    } else {
        Verdict::Valid
    };
    Ok(MatchResult {
        candidate,
        min_density,
        mass,
        verdict,
        exponent,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentSource {
    Given,
    Recursed,
}

/// Raw moments `E[X^k]` for `k = 1..=order`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence {
    values: Vec<f64>,
    source: MomentSource,
}

impl MomentSequence {
    /// `values[k - 1] = E[X^k]`. Even moments must be non-negative.
    pub fn given(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("moment sequence is empty"));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() || ((i + 1) % 2 == 0 && *v < 0.0) {
                return Err(Error::invalid(
                    "even moments must be finite and non-negative",
                ));
            }
        }
        Ok(MomentSequence {
            values,
            source: MomentSource::Given,
        })
    }

    /// Moments of `d` up to `order`.
    pub fn of(d: &Distribution, order: usize) -> Result<Self> {
        let values = (1..=order)
            .map(|k| d.moment(k))
            .collect::<Result<Vec<_>>>()?;
        Self::given(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn order(&self) -> usize {
        self.values.len()
    }

    pub fn source(&self) -> MomentSource {
        self.source
    }

    /// `E[X^k]`, with `E[X^0] = 1`.
    pub fn moment(&self, k: usize) -> Option<f64> {
        if k == 0 {
            Some(1.0)
        } else {
            self.values.get(k - 1).copied()
        }
    }
}

/// Moments of the matching source up to order `depth + 1`, from
///
/// `E X^{m+1} = g E Z^{m+1} + sum_{i=0}^{m-1} A(g,m,i) E Z^{i+1} E X^{m-i}`,
/// `A(g,m,i) = g C(m,i) - C(m,i+1)`,
///
/// seeded with `E X = g E Z`.
pub fn matching_moments(
    noise: &MomentSequence,
    gamma: f64,
    depth: usize,
) -> Result<MomentSequence> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid("SNR must be positive and finite"));
    }
    if depth == 0 || depth > MAX_RECURSION {
        return Err(Error::invalid("recursion depth must be in 1..=10"));
    }
    if noise.order() < depth + 1 {
        return Err(Error::invalid(
            "noise moments must be given up to order depth + 1",
        ));
    }
    let ez = |k: usize| noise.moment(k).expect("checked order");
    let mut ex = Vec::with_capacity(depth + 1);
    ex.push(gamma * ez(1));
    for m in 1..=depth {
        let mu = m as u32;
        let mut next = gamma * ez(m + 1);
        for i in 0..m {
            let iu = i as u32;
            let a = gamma * binomial(mu, iu) - binomial(mu, iu + 1);
            next += a * ez(i + 1) * ex[m - i - 1];
        }
        ex.push(next);
    }
    Ok(MomentSequence {
        values: ex,
        source: MomentSource::Recursed,
    })
}

/// Points required on each side of zero inside the derivative window.
pub const MIN_WINDOW_POINTS: usize = 16;

fn derivative(f: &CharFn, i: usize, order: usize) -> num_complex::Complex64 {
    let v = f.values();
    let h = f.step();
    let at = |o: isize| v[(i as isize + o) as usize];
    match order {
        0 => at(0),
        1 => (at(-2) - at(-1) * 8.0 + at(1) * 8.0 - at(2)) / (12.0 * h),
        2 => (-at(-2) + at(-1) * 16.0 - at(0) * 30.0 + at(1) * 16.0 - at(2)) / (12.0 * h * h),
        3 => {
            (at(-3) - at(-2) * 8.0 + at(-1) * 13.0 - at(1) * 13.0 + at(2) * 8.0 - at(3))
                / (8.0 * h * h * h)
        }
        _ => unreachable!("derivative order above 3"),
    }
}

/// Normalized residual of
/// `sum_{m=0}^{p-1} C(p-1,m) F_X^{(m)} F_Z^{(p-1-m)} ((k-1)/k)^m = 0`
/// over `|w| <= 2 / sqrt(min variance)`: the sup of the sum divided by the
/// sup of the largest single term. Derivatives are fourth-order central
/// differences.
pub fn lp_linearity_residual(fx: &CharFn, fz: &CharFn, k: f64, p: u32) -> Result<f64> {
    if p != 2 && p != 4 {
        return Err(Error::invalid("only p = 2 and p = 4 are supported"));
    }
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::invalid("k must lie in (0, 1)"));
    }
    if !fx.same_grid(fz) {
        return Err(Error::invalid(
            "characteristic functions live on different grids",
        ));
    }
    let z = fx.zero_index();
    let reach = z.min(fx.len() - 1 - z);
    if reach < 3 {
        return Err(Error::GridTooCoarse {
            points_in_window: 0,
            required: MIN_WINDOW_POINTS,
        });
    }
    let var_x = -derivative(fx, z, 2).re;
    let var_z = -derivative(fz, z, 2).re;
    let v = var_x.min(var_z);
    if !(v > 0.0) {
        return Err(Error::invalid(
            "characteristic function has no positive curvature at 0",
        ));
    }
    let window = 2.0 / v.sqrt();
    let points = ((window / fx.step()).floor() as usize).min(reach - 3);
    if points < MIN_WINDOW_POINTS {
        return Err(Error::GridTooCoarse {
            points_in_window: points,
            required: MIN_WINDOW_POINTS,
        });
    }
    let r = (k - 1.0) / k;
    let q = (p - 1) as usize;
    let mut sup_sum = 0.0f64;
    let mut sup_term = 0.0f64;
    for i in z - points..=z + points {
        let dx: Vec<_> = (0..=q).map(|o| derivative(fx, i, o)).collect();
        let dz: Vec<_> = (0..=q).map(|o| derivative(fz, i, o)).collect();
        let mut sum = num_complex::Complex64::new(0.0, 0.0);
        for m in 0..=q {
            let term = dx[m] * dz[q - m] * (binomial(q as u32, m as u32) * r.powi(m as i32));
            sup_term = sup_term.max(term.norm());
            sum += term;
        }
        sup_sum = sup_sum.max(sum.norm());
    }
    Ok(if sup_term > 0.0 {
        sup_sum / sup_term
    } else {
        0.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::self_convolve;
    use crate::spectral::char_fn;

    #[test]
    fn uniform_squared_is_triangle() {
        let u = Distribution::uniform(1.0).unwrap();
        let t = Distribution::triangular(1.0).unwrap();
        let r = match_source(&u, 2.0).unwrap();
        assert!(r.is_valid());
        let l1: f64 = r
            .candidate
            .points()
            .map(|(x, f)| (f - t.density(x)).abs())
            .sum::<f64>()
            * r.candidate.step;
        assert!(l1 < 1e-3, "{l1}");
    }

    #[test]
    fn uniform_half_power_is_not_a_density() {
        let u = Distribution::uniform(1.0).unwrap();
        let r = match_source(&u, 0.5).unwrap();
        assert!(!r.is_valid(), "{:?}", r.verdict);
    }

    #[test]
    fn laplace_is_divisible() {
        let l = Distribution::laplace(1.0).unwrap();
        let r = match_source(&l, 0.5).unwrap();
        assert!(r.is_valid(), "{:?}", r.verdict);
        let d = r.to_distribution().unwrap();
        assert!((d.variance() - 0.5).abs() < 5e-4);
    }

    #[test]
    fn match_noise_examples() {
        let g = Distribution::gaussian(2.0 * 0.7).unwrap();
        let r = match_noise(&g, 2.0).unwrap();
        assert!(r.is_valid(), "{:?}", r.verdict);
        let d = r.to_distribution().unwrap();
        assert!((d.variance() - 0.7).abs() < 0.7e-3, "{}", d.variance());

        let u = Distribution::uniform(1.0).unwrap();
        let r = match_noise(&u, 2.0).unwrap();
        assert!(!r.is_valid());
    }

    #[test]
    fn triangle_square_root_follows_the_real_axis_branch() {
        // sinc^2 only touches zero, so the branch continued along the real
        // axis is |sinc|, whose inverse is not a density
        let t = Distribution::triangular(1.0).unwrap();
        let r = match_noise(&t, 2.0).unwrap();
        assert!(!r.is_valid(), "{:?}", r.verdict);
    }

    #[test]
    fn integer_powers_match_self_convolution() {
        for d in [
            Distribution::gaussian(1.0).unwrap(),
            Distribution::uniform(1.0).unwrap(),
            Distribution::laplace(1.0).unwrap(),
            Distribution::triangular(1.0).unwrap(),
        ] {
            for n in 1..=3u32 {
                let r = match_source(&d, f64::from(n)).unwrap();
                assert!(r.is_valid());
                let Distribution::Tabulated(s) = self_convolve(&d, n).unwrap() else {
                    // n = 1 returns the closed form
                    let l1: f64 = r
                        .candidate
                        .points()
                        .map(|(x, f)| (f - d.density(x)).abs())
                        .sum::<f64>()
                        * r.candidate.step;
                    assert!(l1 < 1e-3);
                    continue;
                };
                let l1: f64 = r
                    .candidate
                    .points()
                    .map(|(x, f)| (f - s.density(x)).abs())
                    .sum::<f64>()
                    * r.candidate.step;
                assert!(l1 < 1e-3, "{} n={n}: {l1}", d.name());
            }
        }
    }

    #[test]
    fn gaussian_recursion() {
        let z = MomentSequence::of(&Distribution::gaussian(1.0).unwrap(), 4).unwrap();
        let x = matching_moments(&z, 3.0, 3).unwrap();
        assert_eq!(x.source(), MomentSource::Recursed);
        assert_eq!(x.values(), &[0.0, 3.0, 0.0, 27.0]);
    }

    #[test]
    fn unit_snr_recursion_reproduces_noise() {
        let z = MomentSequence::of(&Distribution::laplace(0.8).unwrap(), 9).unwrap();
        let x = matching_moments(&z, 1.0, 8).unwrap();
        for (a, b) in x.values().iter().zip(z.values()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn recursion_limits() {
        let z = MomentSequence::of(&Distribution::gaussian(1.0).unwrap(), 12).unwrap();
        assert!(matching_moments(&z, 2.0, 11).is_err());
        assert!(matching_moments(&z, 2.0, 10).is_ok());
        let short = MomentSequence::of(&Distribution::gaussian(1.0).unwrap(), 3).unwrap();
        assert!(matching_moments(&short, 2.0, 3).is_err());
    }

    fn gaussian_pair(gamma: f64) -> (CharFn, CharFn) {
        let fx = char_fn(&Distribution::gaussian(gamma).unwrap(), 12.0, 2400).unwrap();
        let fz = char_fn(&Distribution::gaussian(1.0).unwrap(), 12.0, 2400).unwrap();
        (fx, fz)
    }

    #[test]
    fn gaussian_residuals() {
        for gamma in [0.5, 1.0, 2.0] {
            let (fx, fz) = gaussian_pair(gamma);
            let k = gamma / (gamma + 1.0);
            assert!(lp_linearity_residual(&fx, &fz, k, 2).unwrap() < 1e-4);
            assert!(lp_linearity_residual(&fx, &fz, k, 4).unwrap() < 1e-3);
            assert!(lp_linearity_residual(&fx, &fz, 1.2 * k, 2).unwrap() > 0.1);
        }
    }

    #[test]
    fn identical_uniforms_residual() {
        let f = char_fn(&Distribution::uniform(1.0).unwrap(), 12.0, 2400).unwrap();
        assert!(lp_linearity_residual(&f, &f, 0.5, 4).unwrap() < 1e-3);
    }

    #[test]
    fn residual_rejects_coarse_grids() {
        let fx = char_fn(&Distribution::gaussian(1.0).unwrap(), 100.0, 64).unwrap();
        assert!(matches!(
            lp_linearity_residual(&fx, &fx, 0.5, 2),
            Err(Error::GridTooCoarse { .. })
        ));
        assert!(lp_linearity_residual(&fx, &fx, 0.5, 3).is_err());
    }
}
