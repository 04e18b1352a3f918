//! Real orthonormal spherical harmonics on the unit sphere and their
//! partial derivatives in (θ, φ) up to second order.
//!
//! `Y_{l,m}` for `m > 0` is `√2 N P_l^m(cos θ) cos(mφ)`, for `m < 0` it is
//! `√2 N P_l^{|m|}(cos θ) sin(|m|φ)`, and `N P_l(cos θ)` for `m = 0`.

use std::f64::consts::PI;

/// Value and partial derivatives of a function of (θ, φ).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub t: f64,
    pub p: f64,
    pub tt: f64,
    pub tp: f64,
    pub pp: f64,
}

impl Jet2 {
    pub fn scale(self, a: f64) -> Self {
        Self {
            v: a * self.v,
            t: a * self.t,
            p: a * self.p,
            tt: a * self.tt,
            tp: a * self.tp,
            pp: a * self.pp,
        }
    }

    /// Laplace–Beltrami operator of the round unit sphere.
    pub fn round_laplacian(&self, theta: f64) -> f64 {
        let s = theta.sin();
        self.tt + theta.cos() / s * self.t + self.pp / (s * s)
    }
}

impl std::ops::Add for Jet2 {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            v: self.v + o.v,
            t: self.t + o.t,
            p: self.p + o.p,
            tt: self.tt + o.tt,
            tp: self.tp + o.tp,
            pp: self.pp + o.pp,
        }
    }
}

fn ln_factorial(k: usize) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

/// Orthonormalization constant `sqrt((2l+1)/(4π) (l-m)!/(l+m)!)`.
fn norm(l: usize, m: usize) -> f64 {
    let ln = 0.5 * (((2 * l + 1) as f64 / (4.0 * PI)).ln() + ln_factorial(l - m) - ln_factorial(l + m));
    ln.exp()
}

/// Unnormalized associated Legendre `P_l^m(x)` and `P_{l-1}^m(x)`.
fn legendre_pair(l: usize, m: usize, x: f64) -> (f64, f64) {
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = 1.0;
    let mut fact = 1.0;
    for _ in 0..m {
        pmm *= -fact * s;
        fact += 2.0;
    }
    if l == m {
        return (pmm, 0.0);
    }
    let mut prev = pmm;
    let mut cur = x * (2 * m + 1) as f64 * pmm;
    for ll in (m + 2)..=l {
        let next = ((2 * ll - 1) as f64 * x * cur - (ll + m - 1) as f64 * prev) / (ll - m) as f64;
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// θ-jet of the normalized associated Legendre function `N P_l^m(cos θ)`.
/// Requires `0 < θ < π`.
fn legendre_theta_jet(l: usize, m: usize, theta: f64) -> (f64, f64, f64) {
    let x = theta.cos();
    let s = theta.sin();
    let (p, pm1) = legendre_pair(l, m, x);
    let dp = (l as f64 * x * p - (l + m) as f64 * pm1) / s;
    let lf = l as f64;
    let mf = m as f64;
    let ddp = -x / s * dp - (lf * (lf + 1.0) - mf * mf / (s * s)) * p;
    let nrm = norm(l, m);
    (nrm * p, nrm * dp, nrm * ddp)
}

/// Real spherical harmonic `Y_{l,m}` with first and second partials.
pub fn ylm(l: usize, m: i64, theta: f64, phi: f64) -> Jet2 {
    let am = m.unsigned_abs() as usize;
    assert!(am <= l, "|m| must not exceed l");
    let (p, dp, ddp) = legendre_theta_jet(l, am, theta);
    if m == 0 {
        return Jet2 {
            v: p,
            t: dp,
            p: 0.0,
            tt: ddp,
            tp: 0.0,
            pp: 0.0,
        };
    }
    let k = am as f64;
    let (c, dc, ddc) = if m > 0 {
        let (sn, cs) = (k * phi).sin_cos();
        (cs, -k * sn, -k * k * cs)
    } else {
        let (sn, cs) = (k * phi).sin_cos();
        (sn, k * cs, -k * k * sn)
    };
    let r2 = std::f64::consts::SQRT_2;
    Jet2 {
        v: r2 * p * c,
        t: r2 * dp * c,
        p: r2 * p * dc,
        tt: r2 * ddp * c,
        tp: r2 * dp * dc,
        pp: r2 * p * ddc,
    }
}

/// Enumerates `(l, m)` for `l_min <= l <= l_max`, `m = -l..=l`.
pub fn degree_orders(l_min: usize, l_max: usize) -> Vec<(usize, i64)> {
    let mut out = Vec::new();
    for l in l_min..=l_max {
        for m in -(l as i64)..=(l as i64) {
            out.push((l, m));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(l: usize, m: i64, theta: f64, phi: f64) {
        let h = 1e-5;
        let j = ylm(l, m, theta, phi);
        let f = |t: f64, p: f64| ylm(l, m, t, p);
        let dt = (f(theta + h, phi).v - f(theta - h, phi).v) / (2.0 * h);
        let dp = (f(theta, phi + h).v - f(theta, phi - h).v) / (2.0 * h);
        let dtt = (f(theta + h, phi).t - f(theta - h, phi).t) / (2.0 * h);
        let dtp = (f(theta, phi + h).t - f(theta, phi - h).t) / (2.0 * h);
        let dpp = (f(theta, phi + h).p - f(theta, phi - h).p) / (2.0 * h);
        for (a, b) in [(j.t, dt), (j.p, dp), (j.tt, dtt), (j.tp, dtp), (j.pp, dpp)] {
            assert!((a - b).abs() < 1e-7 * (1.0 + b.abs()), "l={l} m={m}: {a} vs {b}");
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for (l, m) in degree_orders(0, 6) {
            fd_check(l, m, 0.7, 1.3);
            fd_check(l, m, 2.9, 5.1);
        }
    }

    #[test]
    fn eigenfunctions_of_round_laplacian() {
        for (l, m) in degree_orders(0, 8) {
            let theta = 1.1;
            let j = ylm(l, m, theta, 0.4);
            let lap = j.round_laplacian(theta);
            assert!((lap + (l * (l + 1)) as f64 * j.v).abs() < 1e-10);
        }
    }

    #[test]
    fn low_degree_closed_forms() {
        let theta = 0.9;
        let phi = 2.2;
        let y10 = ylm(1, 0, theta, phi).v;
        assert!((y10.abs() - (3.0 / (4.0 * PI)).sqrt() * theta.cos().abs()).abs() < 1e-14);
        let y00 = ylm(0, 0, theta, phi).v;
        assert!((y00 - 0.5 / PI.sqrt()).abs() < 1e-14);
    }
}
