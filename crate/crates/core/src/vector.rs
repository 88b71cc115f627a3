//! The two-dimensional case: Wiener matrix, the transform that jointly
//! diagonalizes source and noise covariances, coordinatewise matching and
//! independence checks, the 2-D conditional-mean estimator, and the Givens
//! rotation experiment.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};
use num_complex::Complex64;
// float math for no_std builds; unused when std is linked elsewhere in the graph
#[allow(unused_imports)]
use num_traits::Float;

use crate::distributions::{DensityGrid, Distribution};
use crate::spectral::{self, char_fn, fft, CharFn, Provenance};
use crate::{Error, Result, DEFAULT_STEP, DEFAULT_STEP_2D};

/// Row-major 2x2 real matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn diag(a: f64, d: f64) -> Self {
        Mat2([[a, 0.0], [0.0, d]])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn row(&self, i: usize) -> [f64; 2] {
        self.0[i]
    }

    pub fn transpose(&self) -> Mat2 {
        let m = self.0;
        Mat2::new(m[0][0], m[1][0], m[0][1], m[1][1])
    }

    pub fn det(&self) -> f64 {
        let m = self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn inverse(&self) -> Result<Mat2> {
        let d = self.det();
        let scale = self.norm().powi(2);
        if !(d.abs() > 1e-300 && d.abs() > 1e-14 * scale) {
            return Err(Error::invalid("matrix is singular"));
        }
        let m = self.0;
        Ok(Mat2::new(
            m[1][1] / d,
            -m[0][1] / d,
            -m[1][0] / d,
            m[0][0] / d,
        ))
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        let m = self.0;
        Mat2::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_offdiag(&self) -> f64 {
        self.0[0][1].abs().max(self.0[1][0].abs())
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        let m = self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    fn is_symmetric(&self, tol: f64) -> bool {
        (self.0[0][1] - self.0[1][0]).abs() <= tol * self.norm().max(1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.0, o.0);
        let mut r = [[0.0; 2]; 2];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(r)
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.0, o.0);
        Mat2::new(
            a[0][0] + b[0][0],
            a[0][1] + b[0][1],
            a[1][0] + b[1][0],
            a[1][1] + b[1][1],
        )
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + o.scale(-1.0)
    }
}

/// `G(theta) = [[cos, -sin], [sin, cos]]`.
pub fn givens(theta: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    Mat2::new(c, -s, s, c)
}

/// Source and noise covariance matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovPair {
    rx: Mat2,
    rz: Mat2,
}

fn check_spd(m: &Mat2, what: &str) -> Result<()> {
    let finite = m.0.iter().flatten().all(|v| v.is_finite());
    if !finite || !m.is_symmetric(1e-12) {
        return Err(Error::InvalidParameter(alloc::format!(
            "{what} must be finite and symmetric"
        )));
    }
    if !(m.0[0][0] > 0.0 && m.det() > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "{what} must be positive definite"
        )));
    }
    Ok(())
}

impl CovPair {
    pub fn new(rx: Mat2, rz: Mat2) -> Result<Self> {
        check_spd(&rx, "source covariance")?;
        check_spd(&rz, "noise covariance")?;
        Ok(CovPair { rx, rz })
    }

    pub fn rx(&self) -> Mat2 {
        self.rx
    }

    pub fn rz(&self) -> Mat2 {
        self.rz
    }
}

/// `K = R_X (R_X + R_Z)^{-1}`.
pub fn wiener_matrix(c: &CovPair) -> Mat2 {
    c.rx * (c.rx + c.rz)
        .inverse()
        .expect("sum of SPD matrices is invertible")
}

/// `U` and `Lambda` with `R_X R_Z^{-1} = U^{-1} Lambda U`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearityTransform {
    /// Rows are unit-norm generalized eigenvectors of `(R_X, R_Z)`, each with
    /// its largest-magnitude entry positive.
    pub u: Mat2,
    /// Eigenvalues in descending order.
    pub lambda: [f64; 2],
    /// Set when `|l1 - l2| < 1e-8 (l1 + l2)`; any `U` then satisfies the
    /// coordinatewise equal-eigenvalue condition.
    pub degenerate: bool,
}

impl LinearityTransform {
    pub fn lambda_matrix(&self) -> Mat2 {
        Mat2::diag(self.lambda[0], self.lambda[1])
    }
}

fn canonical_row(v: [f64; 2]) -> [f64; 2] {
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    let s = if v[0].abs() >= v[1].abs() {
        v[0].signum()
    } else {
        v[1].signum()
    };
    [s * v[0] / n, s * v[1] / n]
}

/// Generalized eigendecomposition through the Cholesky factor of `R_Z`:
/// `C = L^{-1} R_X L^{-T}` is rotated to diagonal form by a single Jacobi
/// angle and the eigenvectors are mapped back by `L^{-T}`.
pub fn linearity_transform(c: &CovPair) -> LinearityTransform {
    let z = c.rz.0;
    let l00 = z[0][0].sqrt();
    let l10 = z[1][0] / l00;
    let l11 = (z[1][1] - l10 * l10).sqrt();
    let l = Mat2::new(l00, 0.0, l10, l11);
    let li = l.inverse().expect("Cholesky factor of an SPD matrix");
    let cm = li * c.rx * li.transpose();
    let (a, b, d) = (cm.0[0][0], 0.5 * (cm.0[0][1] + cm.0[1][0]), cm.0[1][1]);
    let phi = 0.5 * (2.0 * b).atan2(a - d);
    let (s, co) = phi.sin_cos();
    let l1 = a * co * co + 2.0 * b * co * s + d * s * s;
    let l2 = a * s * s - 2.0 * b * co * s + d * co * co;
    let lit = li.transpose();
    let v1 = lit.apply([co, s]);
    let v2 = lit.apply([-s, co]);
    let (mut pairs, degenerate) = ([(l1, v1), (l2, v2)], (l1 - l2).abs() < 1e-8 * (l1 + l2));
    if pairs[1].0 > pairs[0].0 {
        pairs.swap(0, 1);
    }
    let r0 = canonical_row(pairs[0].1);
    let r1 = canonical_row(pairs[1].1);
    LinearityTransform {
        u: Mat2([r0, r1]),
        lambda: [pairs[0].0, pairs[1].0],
        degenerate,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecorrelationReport {
    pub offdiag_x: f64,
    pub offdiag_z: f64,
    pub trace_x: f64,
    pub trace_z: f64,
    pub pass: bool,
}

/// Off-diagonal size of `U R_X U^T` and `U R_Z U^T` against their traces.
pub fn check_decorrelation(t: &LinearityTransform, c: &CovPair) -> DecorrelationReport {
    let bx = t.u * c.rx * t.u.transpose();
    let bz = t.u * c.rz * t.u.transpose();
    let (offdiag_x, offdiag_z) = (bx.max_abs_offdiag(), bz.max_abs_offdiag());
    let (trace_x, trace_z) = (bx.trace(), bz.trace());
    DecorrelationReport {
        offdiag_x,
        offdiag_z,
        trace_x,
        trace_z,
        pass: offdiag_x < 1e-8 * trace_x && offdiag_z < 1e-8 * trace_z,
    }
}

/// `X = Q X'` with independent coordinates `X'_1`, `X'_2`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatedProduct2D {
    base: [Distribution; 2],
    q: Mat2,
}

impl RotatedProduct2D {
    pub fn new(base: [Distribution; 2], q: Mat2) -> Result<Self> {
        let e = q * q.transpose() - Mat2::IDENTITY;
        if e.0.iter().flatten().any(|v| !(v.abs() <= 1e-12)) {
            return Err(Error::invalid("rotation must be orthogonal"));
        }
        Ok(RotatedProduct2D { base, q })
    }

    pub fn base(&self) -> &[Distribution; 2] {
        &self.base
    }

    pub fn rotation(&self) -> Mat2 {
        self.q
    }

    /// `f_1((Q^T x)_1) f_2((Q^T x)_2)`.
    pub fn density(&self, x: [f64; 2]) -> f64 {
        let b = self.q.transpose().apply(x);
        self.base[0].density(b[0]) * self.base[1].density(b[1])
    }

    /// `Q diag(var_1, var_2) Q^T`.
    pub fn covariance(&self) -> Mat2 {
        let d = Mat2::diag(self.base[0].variance(), self.base[1].variance());
        self.q * d * self.q.transpose()
    }

    /// Radius containing all (or, for unbounded laws, all but ~1e-9) of the
    /// mass; invariant under the rotation.
    pub fn mass_radius(&self) -> f64 {
        let r0 = self.base[0].effective_half_width();
        let r1 = self.base[1].effective_half_width();
        (r0 * r0 + r1 * r1).sqrt()
    }

    fn default_half_width(&self) -> f64 {
        let sigma = self.base[0].std_dev().max(self.base[1].std_dev());
        let compact = self.base.iter().all(|b| b.support_half_width().is_some());
        if compact {
            (4.0 * sigma).max(self.mass_radius())
        } else {
            6.0 * sigma
        }
    }

    /// Coefficients `m` with `row . X = m_1 X'_1 + m_2 X'_2`.
    pub fn projection(&self, row: [f64; 2]) -> [f64; 2] {
        self.q.transpose().apply(row)
    }

    /// Variance of `row . X`.
    pub fn marginal_variance(&self, row: [f64; 2]) -> f64 {
        let m = self.projection(row);
        m[0] * m[0] * self.base[0].variance() + m[1] * m[1] * self.base[1].variance()
    }

    /// Characteristic function of `row . X` as the product
    /// `F_1(m_1 w) F_2(m_2 w)`, closed form for the named families.
    pub fn marginal_char_fn(&self, row: [f64; 2], omega_max: f64, n: usize) -> Result<CharFn> {
        let m = self.projection(row);
        let tiny = 1e-12 * (m[0].abs() + m[1].abs());
        let mut acc: Option<CharFn> = None;
        for (b, &mj) in self.base.iter().zip(&m) {
            if mj.abs() <= tiny {
                continue;
            }
            let f = char_fn(&b.scaled(mj)?, omega_max, n)?;
            acc = Some(match acc {
                None => f,
                Some(a) => {
                    let values = a
                        .values()
                        .iter()
                        .zip(f.values())
                        .map(|(x, y)| x * y)
                        .collect();
                    let prov = if a.provenance() == f.provenance() {
                        f.provenance()
                    } else {
                        Provenance::TransformOfGrid
                    };
                    CharFn::new(a.omega_min(), a.step(), values, prov)?
                }
            });
        }
        acc.ok_or_else(|| Error::invalid("projection row must be nonzero"))
    }

    /// Law of `row . X`, by 1-D projection quadrature of the rotated product
    /// density.
    pub fn marginal(&self, row: [f64; 2]) -> Result<Distribution> {
        let m = self.projection(row);
        let tiny = 1e-12 * (m[0].abs() + m[1].abs());
        if m[1].abs() <= tiny {
            return self.base[0].scaled(m[0]);
        }
        if m[0].abs() <= tiny {
            return self.base[1].scaled(m[1]);
        }
        // scaled supports rarely end on the lattice; the edge error is O(h)
        let h = DEFAULT_STEP / 10.0;
        let parts = [self.base[0].scaled(m[0])?, self.base[1].scaled(m[1])?];
        let grids = parts
            .iter()
            .map(|d| d.lattice(h))
            .collect::<Result<Vec<DensityGrid>>>()?;
        let conv: Vec<f64> = fft::convolve(grids[0].values(), grids[1].values())
            .into_iter()
            .map(|v| v * h)
            .collect();
        let g = DensityGrid::new(grids[0].x_min() + grids[1].x_min(), h, conv)?;
        Ok(Distribution::Tabulated(g))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateMatch {
    pub lambda: f64,
    /// `sup |F_{[UX]_i} - F_{[UZ]_i}^lambda_i|` over the window.
    pub sup_diff: f64,
    pub window: f64,
    pub pass: bool,
}

/// Tolerance on the characteristic-function mismatch per coordinate.
pub const MARGINAL_TOLERANCE: f64 = 1e-3;

/// Compares `F_{[UX]_i}` with `F_{[UZ]_i}^{lambda_i}` on
/// `|w| <= 2 / sqrt(min variance)` for each coordinate.
pub fn marginal_matching_check(
    t: &LinearityTransform,
    source: &RotatedProduct2D,
    noise: &RotatedProduct2D,
) -> Result<[CoordinateMatch; 2]> {
    let mut out = [CoordinateMatch {
        lambda: 0.0,
        sup_diff: 0.0,
        window: 0.0,
        pass: false,
    }; 2];
    for (i, slot) in out.iter_mut().enumerate() {
        let row = t.u.row(i);
        let vmin = source
            .marginal_variance(row)
            .min(noise.marginal_variance(row));
        let window = 2.0 / vmin.sqrt();
        let n = 512;
        let fx = source.marginal_char_fn(row, window, n)?;
        let fz = noise.marginal_char_fn(row, window, n)?;
        let p = spectral::fractional_power(&fz, t.lambda[i])?;
        let sup_diff = fx.sup_distance(&p, window)?;
        *slot = CoordinateMatch {
            lambda: t.lambda[i],
            sup_diff,
            window,
            pass: sup_diff < MARGINAL_TOLERANCE,
        };
    }
    Ok(out)
}

/// Whether the coordinates of `U X` are independent: `U Q` is a signed
/// permutation (after row normalization) within 1e-10, or both base laws
/// are Gaussian and `U Q diag(var) (U Q)^T` is diagonal.
pub fn independence_check(source: &RotatedProduct2D, u: &Mat2) -> bool {
    let m = *u * source.q;
    let rows = [canonical_row(m.row(0)), canonical_row(m.row(1))];
    let tol = 1e-10;
    let unit = |r: [f64; 2], j: usize| (r[j].abs() - 1.0).abs() <= tol && r[1 - j].abs() <= tol;
    let perm = (unit(rows[0], 0) && unit(rows[1], 1)) || (unit(rows[0], 1) && unit(rows[1], 0));
    if perm {
        return true;
    }
    if source.base.iter().all(Distribution::is_gaussian) {
        let d = Mat2::diag(source.base[0].variance(), source.base[1].variance());
        let c = m * d * m.transpose();
        return c.max_abs_offdiag() <= tol * c.trace();
    }
    false
}

/// Square lattice extents for the 2-D quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2d {
    pub step: f64,
    pub source_half: f64,
    pub noise_half: f64,
}

impl Grid2d {
    /// Step 0.02; each half width is the larger of four standard deviations
    /// and the support radius for compact laws, six standard deviations
    /// otherwise.
    pub fn for_pair(source: &RotatedProduct2D, noise: &RotatedProduct2D) -> Self {
        Grid2d {
            step: DEFAULT_STEP_2D,
            source_half: source.default_half_width(),
            noise_half: noise.default_half_width(),
        }
    }

    pub fn with_step(self, step: f64) -> Self {
        Grid2d { step, ..self }
    }

    fn check(&self) -> Result<()> {
        let ok = self.step > 0.0 && self.source_half > 0.0 && self.noise_half > 0.0;
        if !ok
            || !(self.step.is_finite()
                && self.source_half.is_finite()
                && self.noise_half.is_finite())
        {
            return Err(Error::invalid(
                "2-D grid needs positive finite step and extents",
            ));
        }
        Ok(())
    }
}

/// Probability masses on the square lattice `(i - m) * step`, row-major
/// with the first coordinate along rows.
struct Lattice2 {
    m: usize,
    mass: Vec<f64>,
}

impl Lattice2 {
    fn side(&self) -> usize {
        2 * self.m + 1
    }
}

fn lattice2(d: &RotatedProduct2D, half: f64, step: f64) -> Result<Lattice2> {
    let m = (half / step).ceil() as usize;
    let side = 2 * m + 1;
    let mut mass = vec![0.0; side * side];
    for a in 0..side {
        let x0 = (a as f64 - m as f64) * step;
        for b in 0..side {
            let x1 = (b as f64 - m as f64) * step;
            mass[a * side + b] = d.density([x0, x1]);
        }
    }
    let total: f64 = mass.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid("2-D lattice holds no mass"));
    }
    // compare against the continuous mass to catch truncating extents
    let coverage = total * step * step;
    if (coverage - 1.0).abs() > 1e-2 {
        return Err(Error::Truncation { coverage });
    }
    for v in mass.iter_mut() {
        *v /= total;
    }
    Ok(Lattice2 { m, mass })
}

/// Likelihood-weighted sums on the observation lattice.
struct Posterior2 {
    step: f64,
    m: usize,
    d: Vec<f64>,
    n0: Vec<f64>,
    n1: Vec<f64>,
    second_moment_x: f64,
    cov_x: Mat2,
    cov_z: Mat2,
}

fn lattice_cov(l: &Lattice2, step: f64) -> (Mat2, f64) {
    let side = l.side();
    let (mut c00, mut c01, mut c11) = (0.0, 0.0, 0.0);
    for a in 0..side {
        let x0 = (a as f64 - l.m as f64) * step;
        for b in 0..side {
            let x1 = (b as f64 - l.m as f64) * step;
            let p = l.mass[a * side + b];
            c00 += p * x0 * x0;
            c01 += p * x0 * x1;
            c11 += p * x1 * x1;
        }
    }
    (Mat2::new(c00, c01, c01, c11), c00 + c11)
}

fn posterior2(
    source: &RotatedProduct2D,
    noise: &RotatedProduct2D,
    grid: &Grid2d,
) -> Result<Posterior2> {
    grid.check()?;
    let step = grid.step;
    let lx = lattice2(source, grid.source_half, step)?;
    let lz = lattice2(noise, grid.noise_half, step)?;
    let (sx, sz) = (lx.side(), lz.side());
    let m = lx.m + lz.m;
    let sy = 2 * m + 1;
    let n = fft::next_pow2(sy);
    let zero = Complex64::new(0.0, 0.0);
    let mut bp = vec![zero; n * n];
    let mut ba = vec![zero; n * n];
    let mut bq = vec![zero; n * n];
    for a in 0..sx {
        let x0 = (a as f64 - lx.m as f64) * step;
        for b in 0..sx {
            let x1 = (b as f64 - lx.m as f64) * step;
            let p = lx.mass[a * sx + b];
            bp[a * n + b] = Complex64::new(p, 0.0);
            ba[a * n + b] = Complex64::new(x0 * p, x1 * p);
        }
    }
    for a in 0..sz {
        for b in 0..sz {
            bq[a * n + b] = Complex64::new(lz.mass[a * sz + b], 0.0);
        }
    }
    fft::fft2(&mut bp, n, fft::Direction::Forward);
    fft::fft2(&mut ba, n, fft::Direction::Forward);
    fft::fft2(&mut bq, n, fft::Direction::Forward);
    for ((p, a), q) in bp.iter_mut().zip(ba.iter_mut()).zip(&bq) {
        *p *= q;
        *a *= q;
    }
    drop(bq);
    fft::fft2(&mut bp, n, fft::Direction::Inverse);
    fft::fft2(&mut ba, n, fft::Direction::Inverse);
    let scale = 1.0 / (n * n) as f64;
    let mut d = vec![0.0; sy * sy];
    let mut n0 = vec![0.0; sy * sy];
    let mut n1 = vec![0.0; sy * sy];
    for a in 0..sy {
        for b in 0..sy {
            let k = a * sy + b;
            d[k] = bp[a * n + b].re * scale;
            n0[k] = ba[a * n + b].re * scale;
            n1[k] = ba[a * n + b].im * scale;
        }
    }
    let (cov_x, second_moment_x) = lattice_cov(&lx, step);
    let (cov_z, _) = lattice_cov(&lz, step);
    Ok(Posterior2 {
        step,
        m,
        d,
        n0,
        n1,
        second_moment_x,
        cov_x,
        cov_z,
    })
}

/// Conditional-mean estimator tabulated on a square observation lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimator2D {
    pub step: f64,
    /// Observation lattice is `(i - m) * step` on both axes.
    pub m: usize,
    /// Row-major `[h_1, h_2]` per lattice point.
    pub h: Vec<[f64; 2]>,
    /// Lattice indices whose likelihood underflowed; `h` there is `K y`.
    pub flagged: Vec<usize>,
}

impl Estimator2D {
    pub fn side(&self) -> usize {
        2 * self.m + 1
    }

    pub fn y(&self, a: usize) -> f64 {
        (a as f64 - self.m as f64) * self.step
    }

    /// `sup |h(y) - K y|` over lattice points with `max(|y_1|, |y_2|) <= half`.
    pub fn sup_deviation_from(&self, k: &Mat2, half: f64) -> f64 {
        let side = self.side();
        let mut sup = 0.0f64;
        for a in 0..side {
            for b in 0..side {
                let y = [self.y(a), self.y(b)];
                if y[0].abs() > half || y[1].abs() > half {
                    continue;
                }
                let ky = k.apply(y);
                let h = self.h[a * side + b];
                sup = sup.max((h[0] - ky[0]).abs()).max((h[1] - ky[1]).abs());
            }
        }
        sup
    }
}

/// Conditional mean `E[X | Y = y]` by 2-D Riemann sums (FFT convolution of
/// the lattice masses). Unobservable points fall back to the Wiener rule
/// and are flagged.
pub fn optimal_estimator_2d(
    source: &RotatedProduct2D,
    noise: &RotatedProduct2D,
    grid: &Grid2d,
) -> Result<Estimator2D> {
    let post = posterior2(source, noise, grid)?;
    let k = wiener_matrix(&CovPair::new(source.covariance(), noise.covariance())?);
    let side = 2 * post.m + 1;
    let mut h = Vec::with_capacity(side * side);
    let mut flagged = Vec::new();
    let max_d = post.d.iter().copied().fold(0.0, f64::max);
    for a in 0..side {
        for b in 0..side {
            let i = a * side + b;
            // FFT roundoff sits near 1e-16 of the peak
            if post.d[i] > 1e-13 * max_d {
                h.push([post.n0[i] / post.d[i], post.n1[i] / post.d[i]]);
            } else {
                let y = [
                    (a as f64 - post.m as f64) * post.step,
                    (b as f64 - post.m as f64) * post.step,
                ];
                h.push(k.apply(y));
                flagged.push(i);
            }
        }
    }
    Ok(Estimator2D {
        step: post.step,
        m: post.m,
        h,
        flagged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap2D {
    /// `(mse_lin - mse_opt) / mse_opt`.
    pub gap: f64,
    pub mse_opt: f64,
    pub mse_lin: f64,
}

/// Normalized gap between the Wiener rule and the conditional mean.
///
/// Both risks entering the ratio are computed within the lattice model:
/// the optimal one as `E|X|^2 - sum |N(y)|^2 / D(y)`, the linear one from the
/// lattice covariances. `mse_lin` is reported from the exact covariances
/// and `mse_opt = mse_lin / (1 + gap)`.
pub fn gap_2d(source: &RotatedProduct2D, noise: &RotatedProduct2D, grid: &Grid2d) -> Result<Gap2D> {
    let post = posterior2(source, noise, grid)?;
    let max_d = post.d.iter().copied().fold(0.0, f64::max);
    let mut explained = 0.0;
    for i in 0..post.d.len() {
        if post.d[i] > 1e-13 * max_d {
            explained += (post.n0[i] * post.n0[i] + post.n1[i] * post.n1[i]) / post.d[i];
        }
    }
    let opt_lattice = post.second_moment_x - explained;
    let lin_of = |c: &CovPair| {
        let k = wiener_matrix(c);
        (c.rx() - k * c.rx()).trace()
    };
    let lin_lattice = lin_of(&CovPair::new(post.cov_x, post.cov_z)?);
    let gap = (lin_lattice - opt_lattice) / opt_lattice;
    let mse_lin = lin_of(&CovPair::new(source.covariance(), noise.covariance())?);
    Ok(Gap2D {
        gap,
        mse_opt: mse_lin / (1.0 + gap),
        mse_lin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GivensRow {
    pub theta: f64,
    pub gap_normalized: f64,
    pub mse_opt: f64,
    pub mse_lin: f64,
}

/// Gap with the source rotated by `G(theta)` and the noise unrotated.
pub fn givens_point(
    base_source: &[Distribution; 2],
    base_noise: &[Distribution; 2],
    theta: f64,
    grid: Option<Grid2d>,
) -> Result<GivensRow> {
    let source = RotatedProduct2D::new(base_source.clone(), givens(theta))?;
    let noise = RotatedProduct2D::new(base_noise.clone(), Mat2::IDENTITY)?;
    let grid = grid.unwrap_or_else(|| Grid2d::for_pair(&source, &noise));
    let g = gap_2d(&source, &noise, &grid)?;
    Ok(GivensRow {
        theta,
        gap_normalized: g.gap,
        mse_opt: g.mse_opt,
        mse_lin: g.mse_lin,
    })
}

pub fn givens_sweep(
    base_source: &[Distribution; 2],
    base_noise: &[Distribution; 2],
    thetas: &[f64],
    grid: Option<Grid2d>,
) -> Result<Vec<GivensRow>> {
    thetas
        .iter()
        .map(|&t| givens_point(base_source, base_noise, t, grid))
        .collect()
}

/// Even sampling of `[0, 2 pi)` with `count` points.
pub fn theta_grid(count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| 2.0 * core::f64::consts::PI * i as f64 / count as f64)
        .collect()
}
