//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! All integral-defined quantities in the crate (curvature integrands, chart
//! maps, line integrals of closed forms) go through [`GaussKronrod`]. Besides
//! plain finite intervals it handles two improper cases that appear in the
//! chart maps: an integrable power singularity at one endpoint, and a
//! semi-infinite interval with a decaying integrand.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

/// Adaptive integrator with absolute/relative stopping tolerances.
#[derive(Debug, Clone, Copy)]
pub struct GaussKronrod {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_segments: usize,
}

impl Default for GaussKronrod {
    fn default() -> Self {
        GaussKronrod {
            abs_tol: 1e-13,
            rel_tol: 1e-13,
            max_segments: 4000,
        }
    }
}

fn kronrod_segment<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<Segment> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    if !res_k.is_finite() {
        return Err(Error::QuadratureFailure(f64::INFINITY));
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let scale = half.abs();
    res_asc *= scale;
    res_abs *= scale;
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    let roundoff = 50.0 * f64::EPSILON * res_abs;
    if roundoff > error {
        error = roundoff;
    }
    Ok(Segment {
        a,
        b,
        value: res_k * half,
        error,
    })
}

impl GaussKronrod {
    pub fn with_tolerance(abs_tol: f64, rel_tol: f64) -> Self {
        GaussKronrod {
            abs_tol,
            rel_tol,
            ..Default::default()
        }
    }

    /// Signed integral of `f` over `[a, b]` (`b < a` allowed).
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> Result<Integral> {
        if a == b {
            return Ok(Integral {
                value: 0.0,
                error: 0.0,
                evaluations: 0,
            });
        }
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
        let mut segments = vec![kronrod_segment(&mut f, lo, hi)?];
        let mut evaluations = 15;
        loop {
            let value: f64 = segments.iter().map(|s| s.value).sum();
            let error: f64 = segments.iter().map(|s| s.error).sum();
            let target = self.abs_tol.max(self.rel_tol * value.abs());
            if error <= target {
                return Ok(Integral {
                    value: sign * value,
                    error,
                    evaluations,
                });
            }
            if segments.len() >= self.max_segments {
                return Err(Error::QuadratureFailure(error));
            }
            let worst = segments
                .iter()
                .enumerate()
                .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
                .map(|(i, _)| i)
                .unwrap_or(0);
            let seg = segments.swap_remove(worst);
            let mid = 0.5 * (seg.a + seg.b);
            if mid <= seg.a || mid >= seg.b {
                // interval collapsed to adjacent floats
                return Err(Error::QuadratureFailure(error));
            }
            segments.push(kronrod_segment(&mut f, seg.a, mid)?);
            segments.push(kronrod_segment(&mut f, mid, seg.b)?);
            evaluations += 30;
        }
    }

    /// Integral from the singular point `c` to `d` of an integrand behaving
    /// like `|t - c|^p` near `c`, with `p > -1`.
    ///
    /// `f` receives the offset `s = t - c` rather than `t`, so callers can
    /// evaluate accurately when `t` is within rounding distance of `c`.
    /// The substitution `s = ±w^k`, `k = 1/(1+p)`, makes the integrand bounded.
    pub fn integrate_power_singular<F: FnMut(f64) -> f64>(
        &self,
        mut f: F,
        c: f64,
        d: f64,
        p: f64,
    ) -> Result<Integral> {
        if p <= -1.0 {
            return Err(Error::QuadratureFailure(f64::INFINITY));
        }
        if p >= 0.0 {
            return self.integrate(|t| f(t - c), c, d);
        }
        let k = 1.0 / (1.0 + p);
        let dir = if d >= c { 1.0 } else { -1.0 };
        let w_end = (d - c).abs().powf(1.0 / k);
        // with s = w^k the integrand is k f(s) s^{-p}, the bounded regular
        // part; for p near -1 the power underflows, and flooring s at the
        // smallest normal float changes nothing at working precision
        let g = |w: f64| {
            if w <= 0.0 {
                return 0.0;
            }
            let s = w.powf(k).max(f64::MIN_POSITIVE);
            dir * (f(dir * s) * s.powf(-p)) * k
        };
        self.integrate(g, 0.0, w_end)
    }

    /// `∫_a^∞ f` for an integrand decaying fast enough at infinity.
    pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64) -> Result<Integral> {
        let g = |s: f64| {
            let one_minus = 1.0 - s;
            let t = a + s / one_minus;
            let v = f(t) / (one_minus * one_minus);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        };
        self.integrate(g, 0.0, 1.0)
    }
}

/// Signed integral with the default tolerances.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    GaussKronrod::default().integrate(f, a, b).map(|r| r.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomials_are_exact() {
        let v = integrate(|x| 3.0 * x * x, 0.0, 2.0).unwrap();
        assert!((v - 8.0).abs() < 1e-14);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let a = integrate(f64::sin, 0.0, PI).unwrap();
        let b = integrate(f64::sin, PI, 0.0).unwrap();
        assert!((a - 2.0).abs() < 1e-13);
        assert!((a + b).abs() < 1e-15);
    }

    #[test]
    fn peaked_integrand_converges() {
        // ∫_{1e-3}^{π/2} sin^{-2} = cot(1e-3)
        let v = integrate(|t| t.sin().powi(-2), 1e-3, PI / 2.0).unwrap();
        let exact = 1.0 / (1e-3f64).tan();
        assert!((v - exact).abs() < 1e-12 * exact, "{v} vs {exact}");
    }

    #[test]
    fn endpoint_power_singularity() {
        // ∫_0^1 x^{-1/2} = 2
        let gk = GaussKronrod::default();
        let v = gk.integrate_power_singular(|s| s.powf(-0.5), 0.0, 1.0, -0.5).unwrap();
        assert!((v.value - 2.0).abs() < 1e-12);
        // reversed orientation: ∫_1^0 (1 - x)^{-0.75}, singular end at 1
        let w = gk
            .integrate_power_singular(|s| (-s).powf(-0.75), 1.0, 0.0, -0.75)
            .unwrap();
        assert!((w.value + 4.0).abs() < 1e-11, "{}", w.value);
    }

    #[test]
    fn semi_infinite_decay() {
        let gk = GaussKronrod::default();
        let v = gk.integrate_to_infinity(|x| (-x).exp(), 1.0).unwrap();
        assert!((v.value - (-1.0f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        assert!(integrate(|x| 1.0 / x, -1.0, 1.0).is_err() || integrate(|x| 1.0 / x, 0.0, 1.0).is_err());
    }
}
