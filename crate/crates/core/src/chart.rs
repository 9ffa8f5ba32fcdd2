//! Coordinate changes `u = χ(l)` under which the energies become convex.
//!
//! Each chart is a strictly increasing map from lengths (or radii) onto an
//! open interval. Euclidean charts are power laws; the others are defined by
//! `χ(t) = ∫_1^t χ'(x) dx` and evaluated by quadrature.
//!
//! | kind | geometry | χ'(x) |
//! |------|----------|-------|
//! | ξ | E | `x^{-h-1}` |
//! | ξ | H | `tanh^{-h-1}(x/2)` |
//! | ξ | S | `sin^{-h-1} x` |
//! | γ | H | `sinh^{-h-1} x` |
//! | g | E | `x^{h-1}` |
//! | g | H | `sinh^{h-1} x` |

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::quadrature::GaussKronrod;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartKind {
    Xi,
    Gamma,
    G,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chart {
    pub kind: ChartKind,
    pub h: f64,
    pub geometry: Geometry,
    image: (f64, f64),
}

const MAX_INVERSE_STEPS: usize = 400;

impl Chart {
    pub fn new(kind: ChartKind, h: f64, geometry: Geometry) -> Result<Self> {
        if !h.is_finite() {
            return Err(Error::OutOfDomain(h));
        }
        match (kind, geometry) {
            (ChartKind::Gamma, g) if g != Geometry::Hyperbolic => return Err(Error::UnsupportedGeometry(g)),
            (ChartKind::G, Geometry::Spherical) => return Err(Error::UnsupportedGeometry(geometry)),
            _ => {}
        }
        let mut chart = Chart {
            kind,
            h,
            geometry,
            image: (f64::NEG_INFINITY, f64::INFINITY),
        };
        chart.image = chart.compute_image()?;
        Ok(chart)
    }

    pub fn xi(h: f64, geometry: Geometry) -> Result<Self> {
        Self::new(ChartKind::Xi, h, geometry)
    }

    pub fn gamma(h: f64) -> Result<Self> {
        Self::new(ChartKind::Gamma, h, Geometry::Hyperbolic)
    }

    pub fn g(h: f64, geometry: Geometry) -> Result<Self> {
        Self::new(ChartKind::G, h, geometry)
    }

    /// Open domain interval of lengths (radii for `g`).
    pub fn domain(&self) -> (f64, f64) {
        match self.kind {
            ChartKind::G => (0.0, f64::INFINITY),
            _ => (0.0, self.geometry.length_bound()),
        }
    }

    /// Open image interval; endpoints may be infinite.
    pub fn image(&self) -> (f64, f64) {
        self.image
    }

    fn in_domain(&self, t: f64) -> bool {
        let (lo, hi) = self.domain();
        t.is_finite() && t > lo && t < hi
    }

    pub fn in_image(&self, u: f64) -> bool {
        u.is_finite() && u > self.image.0 && u < self.image.1
    }

    fn is_power_law(&self) -> bool {
        self.geometry == Geometry::Euclidean
    }

    fn derivative_unchecked(&self, t: f64) -> f64 {
        let h = self.h;
        match (self.kind, self.geometry) {
            (ChartKind::Xi, Geometry::Euclidean) => t.powf(-h - 1.0),
            (ChartKind::Xi, Geometry::Hyperbolic) => (0.5 * t).tanh().powf(-h - 1.0),
            (ChartKind::Xi, Geometry::Spherical) => t.sin().abs().powf(-h - 1.0),
            (ChartKind::Gamma, _) => t.sinh().powf(-h - 1.0),
            (ChartKind::G, Geometry::Euclidean) => t.powf(h - 1.0),
            (ChartKind::G, _) => t.sinh().powf(h - 1.0),
        }
    }

    /// `χ'(t) > 0`.
    pub fn derivative(&self, t: f64) -> Result<f64> {
        if !self.in_domain(t) {
            return Err(Error::OutOfDomain(t));
        }
        Ok(self.derivative_unchecked(t))
    }

    /// Power of the derivative's local behaviour `x^p` at the lower end of
    /// the domain.
    fn lower_power(&self) -> f64 {
        match self.kind {
            ChartKind::G => self.h - 1.0,
            _ => -self.h - 1.0,
        }
    }

    fn compute_image(&self) -> Result<(f64, f64)> {
        let h = self.h;
        if self.is_power_law() {
            let sign = match self.kind {
                ChartKind::G => h,
                _ => -h,
            };
            // χ is ±x^{sign}/|h| or ln x
            return Ok(if sign == 0.0 {
                (f64::NEG_INFINITY, f64::INFINITY)
            } else if self.kind == ChartKind::G && h > 0.0 || self.kind != ChartKind::G && h < 0.0 {
                (0.0, f64::INFINITY)
            } else {
                (f64::NEG_INFINITY, 0.0)
            });
        }
        let gk = GaussKronrod::default();
        // offsets from 0 or π; the derivative depends on |offset| there
        let f = |s: f64| self.derivative_unchecked(s.abs());
        let p = self.lower_power();
        let lower = if p > -1.0 {
            -gk.integrate_power_singular(f, 0.0, 1.0, p)?.value
        } else {
            f64::NEG_INFINITY
        };
        let upper = match (self.kind, self.geometry) {
            (ChartKind::Xi, Geometry::Spherical) if p > -1.0 => -gk.integrate_power_singular(f, PI, 1.0, p)?.value,
            (ChartKind::Gamma, _) if h > -1.0 => gk.integrate_to_infinity(f, 1.0)?.value,
            (ChartKind::G, Geometry::Hyperbolic) if h < 1.0 => gk.integrate_to_infinity(f, 1.0)?.value,
            _ => f64::INFINITY,
        };
        Ok((lower, upper))
    }

    fn integral(&self, a: f64, b: f64) -> Result<f64> {
        GaussKronrod::default()
            .integrate(|x| self.derivative_unchecked(x), a, b)
            .map(|r| r.value)
    }

    /// `u = χ(t)`.
    pub fn forward(&self, t: f64) -> Result<f64> {
        if !self.in_domain(t) {
            return Err(Error::OutOfDomain(t));
        }
        if self.is_power_law() {
            let h = self.h;
            return Ok(match self.kind {
                _ if h == 0.0 => t.ln(),
                ChartKind::G => t.powf(h) / h,
                _ => -t.powf(-h) / h,
            });
        }
        self.integral(1.0, t)
    }

    /// `t = χ^{-1}(u)`.
    pub fn inverse(&self, u: f64) -> Result<f64> {
        self.inverse_from(u, 1.0, 0.0)
    }

    /// Inverse starting from a known pair `χ(t0) = u0`; evaluations are
    /// accumulated incrementally from there, so a nearby seed is cheap.
    pub fn inverse_from(&self, u: f64, t0: f64, u0: f64) -> Result<f64> {
        if !self.in_image(u) {
            return Err(Error::OutOfImage(u));
        }
        if self.is_power_law() {
            let h = self.h;
            return Ok(match self.kind {
                _ if h == 0.0 => u.exp(),
                ChartKind::G => (h * u).powf(1.0 / h),
                _ => (-h * u).powf(-1.0 / h),
            });
        }
        if !self.in_domain(t0) {
            return Err(Error::OutOfDomain(t0));
        }
        let (dlo, dhi) = self.domain();
        let bounded = dhi.is_finite();
        let tol = 1e-14 * u.abs().max(1.0);

        // Bracket [a, b] with χ(a) < u < χ(b); endpoints may be the domain
        // ends, whose values are never evaluated.
        let (mut a, mut b) = (dlo, dhi);
        let (mut t, mut ut) = (t0, u0);
        // bisection fallback, geometric where the bracket spans scales
        let midpoint = |lo: f64, hi: f64| -> f64 {
            if hi.is_infinite() {
                2.0 * lo.max(1.0)
            } else if lo <= 0.0 {
                0.5 * hi
            } else if !bounded && hi > 4.0 * lo {
                (lo * hi).sqrt()
            } else {
                0.5 * (lo + hi)
            }
        };
        for _ in 0..MAX_INVERSE_STEPS {
            let r = ut - u;
            if r.abs() <= tol {
                return Ok(t);
            }
            if r < 0.0 {
                a = t;
            } else {
                b = t;
            }
            let d = self.derivative_unchecked(t);
            let newton = t - r / d;
            let mut next = if newton.is_finite() && newton > a && newton < b {
                newton
            } else {
                midpoint(a, b)
            };
            if !bounded {
                // exponential derivatives make long Newton jumps overshoot
                // by orders of magnitude; at most double per step
                next = next.min(t + t.max(1.0));
            } else {
                // the derivative blows up at the upper end; covering at most
                // half the remaining gap keeps each integral well resolved
                next = next.min(t + 0.5 * (dhi - t));
            }
            // same at the lower end
            next = next.max(t - 0.5 * (t - dlo));
            if next == t || (b - a) <= 4.0 * f64::EPSILON * t.abs() {
                return Ok(t);
            }
            ut += self.integral(t, next)?;
            t = next;
        }
        Err(Error::OutOfImage(u))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn all_charts() -> Vec<Chart> {
        let mut out = Vec::new();
        for h in [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0] {
            for g in Geometry::ALL {
                out.push(Chart::xi(h, g).unwrap());
            }
            out.push(Chart::gamma(h).unwrap());
            out.push(Chart::g(h, Geometry::Euclidean).unwrap());
            out.push(Chart::g(h, Geometry::Hyperbolic).unwrap());
        }
        out
    }

    #[test]
    fn simple_values() {
        let xi0 = Chart::xi(0.0, Geometry::Euclidean).unwrap();
        assert_eq!(xi0.forward(1.0).unwrap(), 0.0);
        assert_eq!(xi0.inverse(0.0).unwrap(), 1.0);
        assert!(close(Chart::xi(1.0, Geometry::Euclidean).unwrap().forward(2.0).unwrap(), -0.5, 1e-15));
        assert!(close(Chart::g(2.0, Geometry::Euclidean).unwrap().forward(3.0).unwrap(), 4.5, 1e-14));
        for h in [-2.0, 0.3, 1.0] {
            assert_eq!(Chart::gamma(h).unwrap().forward(1.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn incompatible_geometry() {
        assert!(Chart::gamma(0.0).is_ok());
        assert!(Chart::new(ChartKind::Gamma, 0.0, Geometry::Euclidean).is_err());
        assert!(Chart::g(0.0, Geometry::Spherical).is_err());
    }

    #[test]
    fn image_bounds() {
        let xi_e = Chart::xi(1.0, Geometry::Euclidean).unwrap();
        assert_eq!(xi_e.image(), (f64::NEG_INFINITY, 0.0));
        assert_eq!(Chart::xi(-1.0, Geometry::Euclidean).unwrap().image(), (0.0, f64::INFINITY));
        // γ_0 = ∫_1^t csch = ln tanh(t/2) - ln tanh(1/2): image (-∞, -ln tanh ½)
        let g0 = Chart::gamma(0.0).unwrap();
        let top = -(0.5f64).tanh().ln();
        assert!(g0.image().0.is_infinite());
        assert!(close(g0.image().1, top, 1e-11), "{:?}", g0.image());
        // ξ^S_{-2} = ∫_1^t sin: image (cos 1 - 1, cos 1 + 1)
        let xs = Chart::xi(-2.0, Geometry::Spherical).unwrap();
        assert!(close(xs.image().0, 1f64.cos() - 1.0, 1e-12));
        assert!(close(xs.image().1, 1f64.cos() + 1.0, 1e-12));
        // g^H_{1/2}: both ends finite
        let gh = Chart::g(0.5, Geometry::Hyperbolic).unwrap();
        assert!(gh.image().0.is_finite() && gh.image().1.is_finite());
        assert!(Chart::g(1.0, Geometry::Hyperbolic).unwrap().image().1.is_infinite());
    }

    #[test]
    fn closed_form_cross_checks() {
        // ξ^H_0 = ∫ coth(x/2) = 2 ln sinh(t/2) - 2 ln sinh(1/2)
        let c = Chart::xi(0.0, Geometry::Hyperbolic).unwrap();
        let t: f64 = 2.7;
        let exact = 2.0 * (0.5 * t).sinh().ln() - 2.0 * (0.5f64).sinh().ln();
        assert!(close(c.forward(t).unwrap(), exact, 1e-12));
        // g^H_0 = ln tanh(t/2) - ln tanh(1/2)
        let g = Chart::g(0.0, Geometry::Hyperbolic).unwrap();
        let exact = (0.5 * t).tanh().ln() - (0.5f64).tanh().ln();
        assert!(close(g.forward(t).unwrap(), exact, 1e-12));
    }

    #[test]
    fn inverse_round_trip() {
        for chart in all_charts() {
            let (lo, hi) = chart.domain();
            let samples: Vec<f64> = if hi.is_finite() {
                vec![0.05, 0.4, 1.0, 1.7, 2.9, 3.1]
            } else {
                vec![0.02, 0.3, 1.0, 2.5, 7.0, 15.0]
            };
            for t in samples.into_iter().filter(|&t| t > lo && t < hi) {
                let u = chart.forward(t).unwrap();
                let back = chart.inverse(u).unwrap();
                // u itself carries rounding error eps·|u|, amplified by 1/χ'
                let conditioning = 64.0 * f64::EPSILON * u.abs().max(1.0) / chart.derivative(t).unwrap();
                let tol = 1e-10 * t.max(1.0) + conditioning;
                assert!(close(back, t, tol), "{chart:?} t={t} back={back}");
                assert!(chart.derivative(t).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn monotone_and_out_of_range() {
        for chart in all_charts() {
            let a = chart.forward(0.6).unwrap();
            let b = chart.forward(0.9).unwrap();
            assert!(a < b, "{chart:?}");
            let (lo, hi) = chart.image();
            assert!(lo < a && b < hi);
            if hi.is_finite() {
                assert!(matches!(chart.inverse(hi), Err(Error::OutOfImage(_))));
            }
            if lo.is_finite() {
                assert!(matches!(chart.inverse(lo - 1.0), Err(Error::OutOfImage(_))));
            }
            assert!(matches!(chart.forward(0.0), Err(Error::OutOfDomain(_))));
        }
        let s = Chart::xi(0.0, Geometry::Spherical).unwrap();
        assert!(s.forward(PI).is_err());
    }

    #[test]
    fn seeded_inverse() {
        let c = Chart::xi(0.5, Geometry::Spherical).unwrap();
        let u1 = c.forward(1.2).unwrap();
        let u2 = c.forward(1.25).unwrap();
        assert!(close(c.inverse_from(u2, 1.2, u1).unwrap(), 1.25, 1e-12));
    }
}
