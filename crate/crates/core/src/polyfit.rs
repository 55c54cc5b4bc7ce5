//! Least-squares polyanalytic decompositions `f = Σ z̄^j h_j(z)` and
//! `F = Σ h_j(z) / (1 - |z|²)^j` with polynomial `h_j`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::defaults::FIT_CONDITION_MAX;
use crate::{Error, Result};

/// Hyperbolic fits need `|z| ≤ 1 - HYPERBOLIC_MARGIN`.
pub const HYPERBOLIC_MARGIN: f64 = 1e-3;
/// Every `VALIDATION_STRIDE`-th sample is held out.
const VALIDATION_STRIDE: usize = 5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    /// Basis `z̄^j z^k`.
    #[default]
    Euclidean,
    /// Basis `(1 - |z|²)^{-j} z^k`.
    Hyperbolic,
}

impl Form {
    fn weight(self, z: Complex64, j: usize) -> Complex64 {
        match self {
            Form::Euclidean => z.conj().powi(j as i32),
            Form::Hyperbolic => Complex64::from((1.0 - z.norm_sqr()).powi(-(j as i32))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FitRegion {
    Annulus { inner: f64, outer: f64 },
    Disc { radius: f64 },
}

impl FitRegion {
    /// Smallest annulus (or disc) around 0 containing the points.
    pub fn enclosing(points: impl Iterator<Item = Complex64>) -> Self {
        let (lo, hi) = points.fold((f64::INFINITY, 0.0f64), |(lo, hi), z| (lo.min(z.norm()), hi.max(z.norm())));
        if lo <= 1e-12 {
            FitRegion::Disc { radius: hi }
        } else {
            FitRegion::Annulus { inner: lo, outer: hi }
        }
    }
}

/// Polynomial components `h_0, …, h_ν`, each with ascending Taylor
/// coefficients up to `degree`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyDecomposition {
    pub form: Form,
    pub order: usize,
    pub degree: usize,
    pub components: Vec<Vec<Complex64>>,
    pub region: Option<FitRegion>,
    /// Relative RMS error on the held-out samples.
    pub residual: f64,
}

impl PolyDecomposition {
    pub fn evaluate(&self, z: Complex64) -> Complex64 {
        self.components
            .iter()
            .enumerate()
            .map(|(j, h)| self.form.weight(z, j) * h.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a))
            .sum()
    }
}

fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let (mut f, mut x) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        x += f * (i % base) as f64;
        i /= base;
    }
    x
}

/// `n` Halton points (bases 2, 3) spread uniformly by area over the annulus
/// `inner ≤ |z| ≤ outer`.
pub fn annulus_points(n: usize, inner: f64, outer: f64) -> Vec<Complex64> {
    (1..=n)
        .map(|i| {
            let (u, v) = (radical_inverse(i, 2), radical_inverse(i, 3));
            let r = (inner * inner + u * (outer * outer - inner * inner)).sqrt();
            Complex64::from_polar(r, std::f64::consts::TAU * v)
        })
        .collect()
}

/// `(z, f(z))` on [`annulus_points`].
pub fn sample_annulus<F>(f: &F, n: usize, inner: f64, outer: f64) -> Vec<(Complex64, Complex64)>
where
    F: Fn(Complex64) -> Complex64 + ?Sized,
{
    annulus_points(n, inner, outer).into_iter().map(|z| (z, f(z))).collect()
}

fn design_row(form: Form, z: Complex64, nu: usize, degree: usize) -> Vec<Complex64> {
    let mut row = Vec::with_capacity((nu + 1) * (degree + 1));
    for j in 0..=nu {
        let wgt = form.weight(z, j);
        let mut zk = Complex64::new(1.0, 0.0);
        for _ in 0..=degree {
            row.push(wgt * zk);
            zk *= z;
        }
    }
    row
}

fn rel_rms(pred: &[Complex64], truth: &[Complex64]) -> f64 {
    let err: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).norm_sqr()).sum();
    let norm: f64 = truth.iter().map(Complex64::norm_sqr).sum();
    if norm > 0.0 {
        (err / norm).sqrt()
    } else {
        (err / truth.len().max(1) as f64).sqrt()
    }
}

/// Least-squares fit in the basis of `form` with `j ≤ ν`, `k ≤ D`, on 80%
/// of the samples; the residual is measured on the held-out 20%.
pub fn fit(samples: &[(Complex64, Complex64)], nu: usize, degree: usize, form: Form) -> Result<PolyDecomposition> {
    let cols = (nu + 1) * (degree + 1);
    if samples.len() < 2 * cols {
        return Err(Error::TooFewSamples { have: samples.len(), need: 2 * cols });
    }
    if form == Form::Hyperbolic {
        if let Some((z, _)) = samples.iter().find(|(z, _)| z.norm() > 1.0 - HYPERBOLIC_MARGIN) {
            return Err(Error::Domain(format!("hyperbolic fit needs |z| ≤ {}, got {}", 1.0 - HYPERBOLIC_MARGIN, z.norm())));
        }
    }
    let (train, valid): (Vec<_>, Vec<_>) =
        samples.iter().enumerate().partition(|(i, _)| i % VALIDATION_STRIDE != VALIDATION_STRIDE - 1);
    let rows: Vec<Vec<Complex64>> = train.par_iter().map(|(_, (z, _))| design_row(form, *z, nu, degree)).collect();
    let mut a = DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]);
    let b = DVector::from_iterator(train.len(), train.iter().map(|(_, (_, f))| *f));
    let scales: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    for (j, &s) in scales.iter().enumerate() {
        if s > 0.0 {
            a.column_mut(j).unscale_mut(s);
        }
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > FIT_CONDITION_MAX {
        return Err(Error::IllConditioned { condition });
    }
    let x = svd.solve(&b, 0.0).map_err(|e| Error::Inconsistent(e.to_string()))?;
    let coeffs: Vec<Complex64> = x.iter().zip(&scales).map(|(&v, &s)| if s > 0.0 { v / s } else { v }).collect();
    let components: Vec<Vec<Complex64>> = coeffs.chunks(degree + 1).map(<[Complex64]>::to_vec).collect();
    let mut dec = PolyDecomposition {
        form,
        order: nu,
        degree,
        components,
        region: Some(FitRegion::enclosing(samples.iter().map(|s| s.0))),
        residual: 0.0,
    };
    let pred: Vec<Complex64> = valid.iter().map(|(_, (z, _))| dec.evaluate(*z)).collect();
    let truth: Vec<Complex64> = valid.iter().map(|(_, (_, f))| *f).collect();
    dec.residual = rel_rms(&pred, &truth);
    Ok(dec)
}

/// Validation residual for each order `0..=nu_max`.
pub fn residual_curve(samples: &[(Complex64, Complex64)], nu_max: usize, degree: usize, form: Form) -> Result<Vec<f64>> {
    (0..=nu_max).map(|nu| fit(samples, nu, degree, form).map(|d| d.residual)).collect()
}

/// Smallest `ν ≤ ν_max` whose fit has validation residual below `tol`.
pub fn order_detect(samples: &[(Complex64, Complex64)], nu_max: usize, degree: usize, tol: f64, form: Form) -> Result<Option<usize>> {
    for nu in 0..=nu_max {
        if fit(samples, nu, degree, form)?.residual < tol {
            return Ok(Some(nu));
        }
    }
    Ok(None)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Converts a Euclidean decomposition of `G = F·(1 - |z|²)^ν` into the
/// hyperbolic components of `F`, using `z̄ = (1 - s)/z` with `s = 1 - |z|²`.
/// Each numerator must be divisible by `z^ν`; otherwise the input is not of
/// the hyperbolic form and an inconsistency error is returned.
pub fn euclidean_to_hyperbolic(dec: &PolyDecomposition, tol: f64) -> Result<PolyDecomposition> {
    if dec.form != Form::Euclidean {
        return Err(Error::Inconsistent("expected a Euclidean decomposition".into()));
    }
    let nu = dec.order;
    let d = dec.degree;
    let scale = dec.components.iter().flatten().map(|a| a.norm()).fold(0.0, f64::max).max(1.0);
    // z^ν u_i = (-1)^i Σ_{j≥i} C(j,i) h̃_j z^{ν-j}, a polynomial of degree ≤ D + ν.
    let mut hyper = vec![vec![Complex64::new(0.0, 0.0); d + 1]; nu + 1];
    for i in 0..=nu {
        let mut num = vec![Complex64::new(0.0, 0.0); d + nu + 1];
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        for j in i..=nu {
            for (k, &a) in dec.components[j].iter().enumerate() {
                num[k + nu - j] += a * (sign * binomial(j, i));
            }
        }
        if let Some((k, a)) = num[..nu].iter().enumerate().find(|(_, a)| a.norm() > tol * scale) {
            return Err(Error::Inconsistent(format!(
                "numerator {i} has a z^{k} coefficient {a} below z^{nu}; not divisible"
            )));
        }
        // h_{ν-i} = u_i
        for (k, &a) in num[nu..].iter().enumerate().take(d + 1) {
            hyper[nu - i][k] = a;
        }
    }
    Ok(PolyDecomposition {
        form: Form::Hyperbolic,
        order: nu,
        degree: d,
        components: hyper,
        region: dec.region,
        residual: dec.residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn annulus<F: Fn(Complex64) -> Complex64>(f: F) -> Vec<(Complex64, Complex64)> {
        sample_annulus(&f, 2000, 0.3, 0.9)
    }

    #[test]
    fn halton_points_fill_annulus() {
        let pts = annulus_points(2000, 0.3, 0.9);
        assert!(pts.iter().all(|z| z.norm() >= 0.3 - 1e-12 && z.norm() <= 0.9 + 1e-12));
        let inner_half = pts.iter().filter(|z| z.norm_sqr() < 0.5 * (0.09 + 0.81)).count();
        assert!((inner_half as f64 / 2000.0 - 0.5).abs() < 0.02);
    }

    #[test]
    fn exact_member_recovered() {
        let s = annulus(|z| 1.0 + z.conj() * z * z);
        let dec = fit(&s, 1, 3, Form::Euclidean).unwrap();
        assert!(dec.residual < 1e-10);
        assert!((dec.components[0][0] - 1.0).norm() < 1e-9);
        assert!((dec.components[1][2] - 1.0).norm() < 1e-9);
        assert!(dec.components[1][0].norm() < 1e-9 && dec.components[0][2].norm() < 1e-9);
    }

    #[test]
    fn conj_sq_is_not_order_one() {
        let s = annulus(|z| z.conj() * z.conj());
        assert!(fit(&s, 1, 8, Form::Euclidean).unwrap().residual > 1e-2);
        assert!(fit(&s, 2, 8, Form::Euclidean).unwrap().residual < 1e-10);
    }

    #[test]
    fn hyperbolic_member() {
        let s = sample_annulus(&|z: Complex64| Complex64::from(1.0 / (1.0 - z.norm_sqr())), 2000, 0.0, 0.8);
        let dec = fit(&s, 1, 4, Form::Hyperbolic).unwrap();
        assert!(dec.residual < 1e-10);
        assert!(dec.components[0].iter().all(|a| a.norm() < 1e-8));
        assert!((dec.components[1][0] - 1.0).norm() < 1e-8);
        let outside = vec![(c(0.9995, 0.0), c(1.0, 0.0)); 100];
        assert!(matches!(fit(&outside, 1, 2, Form::Hyperbolic), Err(Error::Domain(_))));
    }

    #[test]
    fn order_detection() {
        assert_eq!(order_detect(&annulus(|z| z.conj()), 6, 8, 1e-6, Form::Euclidean).unwrap(), Some(1));
        assert_eq!(order_detect(&annulus(|z| 1.0 + z * 2.0), 6, 8, 1e-6, Form::Euclidean).unwrap(), Some(0));
        assert_eq!(order_detect(&annulus(|z| z.conj().exp()), 6, 8, 1e-6, Form::Euclidean).unwrap(), None);
    }

    #[test]
    fn residual_decreases_with_order() {
        let s = annulus(|z| z.conj().exp());
        let curve = residual_curve(&s, 6, 8, Form::Euclidean).unwrap();
        for w in curve.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-12, "{curve:?}");
        }
    }

    #[test]
    fn too_few_samples_and_conditioning() {
        let s = annulus(|z| z)[..10].to_vec();
        assert!(matches!(fit(&s, 1, 8, Form::Euclidean), Err(Error::TooFewSamples { .. })));
        // Samples on one circle make z̄ and 1/z indistinguishable.
        let ring: Vec<_> = (0..400).map(|j| Complex64::from_polar(0.5, 0.0157 * j as f64)).map(|z| (z, z.conj())).collect();
        assert!(matches!(fit(&ring, 1, 8, Form::Euclidean), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn hyperbolic_conversion() {
        let s = annulus(|z| 1.0 + z.conj() * z * z);
        let dec = fit(&s, 1, 3, Form::Euclidean).unwrap();
        let hyp = euclidean_to_hyperbolic(&dec, 1e-8).unwrap();
        assert!((hyp.components[0][1] + 1.0).norm() < 1e-8);
        assert!((hyp.components[1][0] - 1.0).norm() < 1e-8 && (hyp.components[1][1] - 1.0).norm() < 1e-8);
        for z in annulus_points(100, 0.3, 0.9) {
            let target = (1.0 + z.conj() * z * z) / (1.0 - z.norm_sqr());
            assert!((hyp.evaluate(z) - target).norm() < 1e-9);
        }

        let conj = PolyDecomposition {
            form: Form::Euclidean,
            order: 1,
            degree: 2,
            components: vec![vec![c(0.0, 0.0); 3], vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]],
            region: None,
            residual: 0.0,
        };
        assert!(matches!(euclidean_to_hyperbolic(&conj, 1e-8), Err(Error::Inconsistent(_))));

        let zero = PolyDecomposition { components: vec![vec![c(0.0, 0.0); 3]; 2], ..conj };
        let out = euclidean_to_hyperbolic(&zero, 1e-8).unwrap();
        assert!(out.components.iter().flatten().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn json_round_trip() {
        let dec = fit(&annulus(|z| z.conj() + z), 1, 2, Form::Euclidean).unwrap();
        let back: PolyDecomposition = serde_json::from_str(&serde_json::to_string(&dec).unwrap()).unwrap();
        assert_eq!((back.form, back.order, back.degree, back.region), (dec.form, dec.order, dec.degree, dec.region));
        for z in annulus_points(20, 0.3, 0.9) {
            assert!((back.evaluate(z) - dec.evaluate(z)).norm() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn extra_basis_never_hurts(coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 5)) {
            let a: Vec<Complex64> = coeffs.iter().map(|&(x, y)| c(x, y)).collect();
            let f = |z: Complex64| a[0] + a[1] * z + a[2] * z.conj() + a[3] * z.conj() * z * z + a[4] * (z * 2.0).exp();
            let s = annulus(f);
            let r1 = fit(&s, 1, 4, Form::Euclidean).unwrap().residual;
            let r2 = fit(&s, 1, 5, Form::Euclidean).unwrap().residual;
            prop_assert!(r2 <= r1 * (1.0 + 1e-9) + 1e-12, "{} -> {}", r1, r2);
        }
    }
}
