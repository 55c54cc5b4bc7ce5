//! Laurent coefficients of a function restricted to a circle, complex
//! moments, the center-pole extendibility test and truncated extensions.
//!
//! Coefficients are kept in the normalized variable `w = (z - c)/r`, so
//! `f(c + r e^{iθ}) ≈ Σ a_k e^{ikθ}` and the coefficient of `(z - c)^k` is
//! `a_k / r^k`.

use std::cell::RefCell;
use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::chain::Circle;
use crate::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// `(1/N) Σ_j x_j e^{-ikθ_j}` for every `k mod N`.
pub fn spectrum(mut samples: Vec<Complex64>) -> Vec<Complex64> {
    let n = samples.len();
    plan(n, false).process(&mut samples);
    let scale = 1.0 / n as f64;
    samples.iter_mut().for_each(|x| *x *= scale);
    samples
}

/// `Σ_{|k| ≤ K} a_k e^{ikθ_j}` on `n` equispaced angles, for `a` indexed
/// `k + K`.
pub fn synthesize(band: &[Complex64], n: usize) -> Vec<Complex64> {
    let k = (band.len() - 1) / 2;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (i, &a) in band.iter().enumerate() {
        let idx = (i as i64 - k as i64).rem_euclid(n as i64) as usize;
        buf[idx] += a;
    }
    plan(n, true).process(&mut buf);
    buf
}

/// Laurent data of `f` on one circle.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LaurentData {
    pub center: Complex64,
    pub radius: f64,
    /// Sample count.
    pub n: usize,
    /// Retained band `K`: coefficients for `-K ≤ k ≤ K`.
    pub band: usize,
    coeffs: Vec<Complex64>,
    /// Max over samples of `|f - Σ a_k e^{ikθ}|`.
    pub residual: f64,
}

impl LaurentData {
    /// Builds data from explicit coefficients indexed `k + K`.
    pub fn from_coeffs(center: Complex64, radius: f64, coeffs: Vec<Complex64>) -> Self {
        assert!(coeffs.len() % 2 == 1, "band must be symmetric");
        let band = coeffs.len() / 2;
        LaurentData { center, radius, n: 2 * band + 2, band, coeffs, residual: 0.0 }
    }

    /// `a_k`, zero outside the band.
    pub fn coeff(&self, k: i64) -> Complex64 {
        let idx = k + self.band as i64;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[idx as usize]
        }
    }

    /// All coefficients, indexed `k + K`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(Complex64::norm_sqr).sum()
    }

    pub fn circle(&self) -> Circle {
        Circle::new(self.center, self.radius, f64::NAN)
    }
}

/// Samples `f` at `N` equispaced points of `circle` and keeps the band
/// `|k| ≤ K`.
pub fn analyze_circle<F>(f: &F, circle: &Circle, n: usize, band: usize) -> Result<LaurentData>
where
    F: Fn(Complex64) -> Complex64 + ?Sized,
{
    if n < 2 * band + 2 {
        return Err(Error::Config(format!("sample count {n} below 2K + 2 for band K = {band}")));
    }
    let mut values = Vec::with_capacity(n);
    for j in 0..n {
        let theta = TAU * j as f64 / n as f64;
        let v = f(circle.point(Complex64::from_polar(1.0, theta)));
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::Evaluation { theta });
        }
        values.push(v);
    }
    Ok(analyze_samples(circle, values, band))
}

/// Laurent data from precomputed samples at `θ_j = 2πj/N`.
pub fn analyze_samples(circle: &Circle, values: Vec<Complex64>, band: usize) -> LaurentData {
    let n = values.len();
    let spec = spectrum(values.clone());
    let coeffs: Vec<Complex64> = (-(band as i64)..=band as i64)
        .map(|k| spec[k.rem_euclid(n as i64) as usize])
        .collect();
    let rebuilt = synthesize(&coeffs, n);
    let residual = values.iter().zip(&rebuilt).map(|(v, b)| (v - b).norm()).fold(0.0, f64::max);
    LaurentData { center: circle.center, radius: circle.radius, n, band, coeffs, residual }
}

/// `∫_{C} f(z)(z - c)^m dz = 2πi r^{m+1} a_{-(m+1)}`.
pub fn moment(data: &LaurentData, m: usize) -> Result<Complex64> {
    if m + 1 > data.band {
        return Err(Error::BandLimit { needed: m + 1, band: data.band });
    }
    let k = -(m as i64 + 1);
    Ok(Complex64::new(0.0, TAU) * data.radius.powi(m as i32 + 1) * data.coeff(k))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeromReport {
    pub pass: bool,
    /// `sqrt(Σ_{k<-ν} |a_k|² / Σ |a_k|²)`.
    pub defect: f64,
    pub zero_function: bool,
}

/// Extendibility with a pole of order at most `ν` at the center: passes when
/// the relative tail energy below `-ν` is at most `tol²`.
pub fn merom_test(data: &LaurentData, nu: usize, tol: f64) -> Result<MeromReport> {
    if nu > data.band {
        return Err(Error::BandLimit { needed: nu, band: data.band });
    }
    let total = data.energy();
    if total == 0.0 {
        return Ok(MeromReport { pass: true, defect: 0.0, zero_function: true });
    }
    let tail: f64 = data.coeffs[..data.band - nu].iter().map(Complex64::norm_sqr).sum();
    let defect = (tail / total).sqrt();
    Ok(MeromReport { pass: defect <= tol, defect, zero_function: false })
}

/// Truncated Laurent series `G(w) = Σ_{-ν ≤ k ≤ K} a_k w^k` on one circle.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeromorphicExtension {
    pub center: Complex64,
    pub radius: f64,
    pub pole_order: usize,
    /// Coefficients in `w`, indexed `k + ν`.
    pub series: Vec<Complex64>,
    /// `sqrt` of the discarded energy below `-ν`.
    pub tail_norm: f64,
}

impl MeromorphicExtension {
    pub fn new(center: Complex64, radius: f64, pole_order: usize, series: Vec<Complex64>) -> Self {
        MeromorphicExtension { center, radius, pole_order, series, tail_norm: 0.0 }
    }

    /// `a_k` in the normalized variable.
    pub fn coeff(&self, k: i64) -> Complex64 {
        let idx = k + self.pole_order as i64;
        if idx < 0 || idx as usize >= self.series.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.series[idx as usize]
        }
    }

    /// Coefficient of `(z - c)^k`.
    pub fn coeff_z(&self, k: i64) -> Complex64 {
        self.coeff(k) / self.radius.powi(k as i32)
    }

    pub fn max_degree(&self) -> i64 {
        self.series.len() as i64 - 1 - self.pole_order as i64
    }

    /// `G` at normalized `w` by Horner on `w^ν G(w)`.
    pub fn eval_w(&self, w: Complex64) -> Complex64 {
        let p = self.series.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * w + a);
        p / w.powi(self.pole_order as i32)
    }

    /// `dG/dw` at normalized `w`.
    pub fn deriv_w(&self, w: Complex64) -> Complex64 {
        let nu = self.pole_order as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, &a) in self.series.iter().enumerate().rev() {
            let k = i as i64 - nu;
            acc = acc * w + a * k as f64;
        }
        // acc = Σ k a_k w^{k+ν}; divide by w^{ν+1}.
        acc / w.powi(self.pole_order as i32 + 1)
    }
}

/// Keeps the coefficients with `k ≥ -ν`.
pub fn build_extension(data: &LaurentData, nu: usize) -> MeromorphicExtension {
    let nu = nu.min(data.band);
    let cut = data.band - nu;
    let tail_norm = data.coeffs[..cut].iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
    MeromorphicExtension {
        center: data.center,
        radius: data.radius,
        pole_order: nu,
        series: data.coeffs[cut..].to_vec(),
        tail_norm,
    }
}

/// `G(z)`; warns when `z` lies outside the closed disc.
pub fn evaluate_extension(ext: &MeromorphicExtension, z: Complex64) -> Result<Complex64> {
    let w = (z - ext.center) / ext.radius;
    if w == Complex64::new(0.0, 0.0) && ext.pole_order > 0 {
        return Err(Error::PoleEvaluation { order: ext.pole_order });
    }
    if w.norm() > 1.0 + 1e-12 {
        log::warn!("evaluating extension outside its disc at |w| = {}", w.norm());
    }
    Ok(ext.eval_w(w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn conj_coefficients() {
        let circle = Circle::new(c(0.7, -0.2), 0.4, 0.0);
        let data = analyze_circle(&|z: Complex64| z.conj(), &circle, 64, 16).unwrap();
        assert!((data.coeff(0) - c(0.7, 0.2)).norm() < 1e-15);
        assert!((data.coeff(-1) - c(0.4, 0.0)).norm() < 1e-15);
        for k in (-16..=16).filter(|k| *k != 0 && *k != -1) {
            assert!(data.coeff(k).norm() < 1e-15, "k = {k}");
        }
        assert!(data.residual < 1e-14);
    }

    #[test]
    fn power_and_one_minus_abs2() {
        let (cc, r) = (c(0.2, 0.3), 0.5);
        let circle = Circle::new(cc, r, 0.0);
        let data = analyze_circle(&|z: Complex64| (z - cc).powi(3), &circle, 32, 8).unwrap();
        assert!((data.coeff(3) - r.powi(3)).norm() < 1e-15);
        assert!(data.coeffs().iter().map(|a| a.norm()).sum::<f64>() - r.powi(3) < 1e-14);

        let data = analyze_circle(&|z: Complex64| Complex64::from(1.0 - z.norm_sqr()), &circle, 32, 8).unwrap();
        assert!((data.coeff(0) - (1.0 - cc.norm_sqr() - r * r)).norm() < 1e-15);
        assert!((data.coeff(1) + cc.conj() * r).norm() < 1e-15);
        assert!((data.coeff(-1) + cc * r).norm() < 1e-15);
    }

    #[test]
    fn evaluation_errors() {
        let circle = Circle::new(c(0.0, 0.0), 1.0, 0.0);
        let err = analyze_circle(&|z: Complex64| if z.re < -0.99 { c(f64::NAN, 0.0) } else { z }, &circle, 16, 4);
        match err {
            Err(Error::Evaluation { theta }) => assert!((theta - std::f64::consts::PI).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        assert!(analyze_circle(&|z: Complex64| z, &circle, 8, 4).is_err());
    }

    #[test]
    fn moments_of_conj() {
        let circle = Circle::new(c(0.5, 0.1), 0.3, 0.0);
        let f = |z: Complex64| z.conj();
        let data = analyze_circle(&f, &circle, 64, 16).unwrap();
        // Trapezoid contour oracle.
        let oracle = |m: i32| {
            let n = 4096;
            (0..n)
                .map(|j| {
                    let e = Complex64::from_polar(1.0, TAU * j as f64 / n as f64);
                    let z = circle.point(e);
                    f(z) * (z - circle.center).powi(m) * c(0.0, 1.0) * e * circle.radius
                })
                .sum::<Complex64>()
                * (TAU / n as f64)
        };
        let m0 = moment(&data, 0).unwrap();
        assert!((m0 - c(0.0, TAU * 0.09)).norm() < 1e-14);
        assert!((m0 - oracle(0)).norm() < 1e-12);
        assert!(moment(&data, 1).unwrap().norm() < 1e-15);
        assert!((moment(&data, 1).unwrap() - oracle(1)).norm() < 1e-12);
        assert!(matches!(moment(&data, 16), Err(Error::BandLimit { .. })));

        let poly = analyze_circle(&|z: Complex64| 1.0 + z * z * 3.0, &circle, 64, 16).unwrap();
        for m in 0..10 {
            assert!(moment(&poly, m).unwrap().norm() < 1e-14);
        }
    }

    #[test]
    fn merom_test_examples() {
        let (cc, r) = (c(0.6, 0.2), 0.5);
        let circle = Circle::new(cc, r, 0.0);
        let data = analyze_circle(&|z: Complex64| z.conj(), &circle, 256, 64).unwrap();
        let pass = merom_test(&data, 1, 1e-8).unwrap();
        assert!(pass.pass && pass.defect < 1e-12);
        let fail = merom_test(&data, 0, 1e-8).unwrap();
        assert!(!fail.pass);
        assert!((fail.defect - r / (cc.norm_sqr() + r * r).sqrt()).abs() < 1e-12);

        let exp = analyze_circle(&|z: Complex64| z.conj().exp(), &circle, 256, 64).unwrap();
        for nu in 0..6 {
            assert!(!merom_test(&exp, nu, 1e-12).unwrap().pass);
        }
        // a_{-k} = e^{c̄} r^k / k!
        let mut fact = 1.0;
        for k in 1..=8 {
            fact *= k as f64;
            let expected = cc.conj().exp() * r.powi(k) / fact;
            assert!((exp.coeff(-(k as i64)) - expected).norm() < 1e-14, "k = {k}");
            assert!(expected.norm() > 1e-8);
        }

        let zero = analyze_circle(&|_| c(0.0, 0.0), &circle, 16, 4).unwrap();
        let report = merom_test(&zero, 0, 1e-8).unwrap();
        assert!(report.pass && report.zero_function && report.defect == 0.0);
    }

    #[test]
    fn conj_extension_and_zero() {
        let (cc, r) = (c(0.9, 0.4), 0.3);
        let circle = Circle::new(cc, r, 0.0);
        let data = analyze_circle(&|z: Complex64| z.conj(), &circle, 128, 32).unwrap();
        let ext = build_extension(&data, 1);
        assert!(ext.tail_norm < 1e-14);
        for z in [c(1.0, 0.5), c(0.8, 0.35)] {
            let exact = cc.conj() + r * r / (z - cc);
            assert!((evaluate_extension(&ext, z).unwrap() - exact).norm() < 1e-13);
        }
        let zt = cc * (1.0 - r * r / cc.norm_sqr());
        assert!(evaluate_extension(&ext, zt).unwrap().norm() < 1e-14);
        assert!(matches!(evaluate_extension(&ext, cc), Err(Error::PoleEvaluation { order: 1 })));
        assert!((ext.coeff_z(-1) - r * r).norm() < 1e-14);
        // Boundary values reproduce f.
        let z = circle.point(Complex64::from_polar(1.0, 0.7));
        assert!((evaluate_extension(&ext, z).unwrap() - z.conj()).norm() < 1e-13);
    }

    #[test]
    fn one_minus_abs2_hyperbolic_zero() {
        let a = c(0.3, -0.2);
        let rho = 0.6;
        let circle = crate::chain::hyperbolic_circle_params(a, rho).unwrap();
        let data = analyze_circle(&|z: Complex64| Complex64::from(1.0 - z.norm_sqr()), &circle, 128, 32).unwrap();
        let ext = build_extension(&data, 1);
        for z in [c(0.1, 0.1), a + 0.05] {
            let exact = 1.0 - z * (circle.center.conj() + circle.radius.powi(2) / (z - circle.center));
            assert!((evaluate_extension(&ext, z).unwrap() - exact).norm() < 1e-13);
        }
        // The hyperbolic center is the simple zero.
        assert!(evaluate_extension(&ext, a).unwrap().norm() < 1e-13);
    }

    #[test]
    fn derivative_matches_difference() {
        let ext = MeromorphicExtension::new(c(0.0, 0.0), 1.0, 2, vec![c(1.0, 0.5), c(0.0, -1.0), c(2.0, 0.0), c(0.3, 0.1)]);
        let w = c(0.4, 0.3);
        let h = 1e-6;
        let fd = (ext.eval_w(w + h) - ext.eval_w(w - h)) / (2.0 * h);
        assert!((fd - ext.deriv_w(w)).norm() < 1e-8);
    }

    fn trig_poly() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 9)
    }

    proptest! {
        #[test]
        fn moment_identity(coeffs in trig_poly(), cre in -1.0f64..1.0, r in 0.1f64..2.0) {
            let cc = c(cre, 0.5);
            let a: Vec<Complex64> = coeffs.iter().map(|&(x, y)| c(x, y)).collect();
            let f = |z: Complex64| {
                let w = (z - cc) / r;
                a.iter().enumerate().map(|(i, &ak)| ak * w.powi(i as i32 - 4)).sum::<Complex64>()
            };
            let circle = Circle::new(cc, r, 0.0);
            let data = analyze_circle(&f, &circle, 64, 16).unwrap();
            for m in 0..6 {
                let n = 4096;
                let direct = (0..n).map(|j| {
                    let e = Complex64::from_polar(1.0, TAU * j as f64 / n as f64);
                    let z = circle.point(e);
                    f(z) * (z - cc).powi(m as i32) * c(0.0, r) * e
                }).sum::<Complex64>() * (TAU / n as f64);
                let mm = moment(&data, m).unwrap();
                prop_assert!((mm - direct).norm() <= 1e-10 * direct.norm().max(r.powi(m as i32 + 1)));
            }
        }

        #[test]
        fn parseval_and_monotone_defect(coeffs in trig_poly()) {
            let a: Vec<Complex64> = coeffs.iter().map(|&(x, y)| c(x, y)).collect();
            let f = |z: Complex64| a.iter().enumerate().map(|(i, &ak)| ak * z.powi(i as i32 - 4)).sum::<Complex64>();
            let circle = Circle::new(c(0.0, 0.0), 1.0, 0.0);
            let n = 32;
            let data = analyze_circle(&f, &circle, n, n / 2 - 1).unwrap();
            let mean: f64 = circle.sample(n).iter().map(|&z| f(z).norm_sqr()).sum::<f64>() / n as f64;
            prop_assert!((data.energy() - mean).abs() <= 1e-12 * mean.max(1e-300));
            let mut prev = f64::INFINITY;
            for nu in 0..8 {
                let d = merom_test(&data, nu, 1e-8).unwrap().defect;
                prop_assert!(d <= prev + 1e-15);
                prev = d;
            }
        }
    }
}
