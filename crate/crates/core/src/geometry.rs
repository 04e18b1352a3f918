//! Supported manifolds and their quadrature grids.
//!
//! Two families are modelled:
//!
//! - flat tori `R^n / (L_1 Z × ... × L_n Z)` with `2 <= n <= 4`, in Cartesian
//!   coordinates and the constant orthonormal frame;
//! - the 2-sphere with metric `e^{2f} g_round`, where `f` is a finite real
//!   spherical-harmonic expansion, in (θ, φ) coordinates.
//!
//! Every tensor downstream is expressed in an orthonormal frame of the
//! actual metric. On the sphere that frame is `e^{-f}(∂_θ, ∂_φ / sin θ)`.
//! `Connection` holds `Γ(k, i, j) = g(∇_{e_k} e_i, e_j)`, which is
//! antisymmetric in `(i, j)` for any metric connection.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonics::{ylm, Jet2};
use crate::quadrature::gauss_legendre;

/// Largest spherical-harmonic degree allowed in a conformal factor.
pub const MAX_CONFORMAL_DEGREE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConformalCoeff {
    pub l: usize,
    pub m: i64,
    pub amp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifoldKind {
    FlatTorus,
    ConformalSphere,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifoldSpec {
    FlatTorus {
        dims: usize,
        periods: Vec<f64>,
    },
    ConformalSphere {
        #[serde(default)]
        conformal_coeffs: Vec<ConformalCoeff>,
    },
}

impl ManifoldSpec {
    pub fn torus(periods: &[f64]) -> Self {
        ManifoldSpec::FlatTorus {
            dims: periods.len(),
            periods: periods.to_vec(),
        }
    }

    /// The square torus with all periods equal to 2π.
    pub fn standard_torus(n: usize) -> Self {
        Self::torus(&vec![2.0 * PI; n])
    }

    pub fn round_sphere() -> Self {
        ManifoldSpec::ConformalSphere {
            conformal_coeffs: Vec::new(),
        }
    }

    pub fn conformal_sphere(coeffs: &[(usize, i64, f64)]) -> Self {
        ManifoldSpec::ConformalSphere {
            conformal_coeffs: coeffs
                .iter()
                .map(|&(l, m, amp)| ConformalCoeff { l, m, amp })
                .collect(),
        }
    }

    pub fn kind(&self) -> ManifoldKind {
        match self {
            ManifoldSpec::FlatTorus { .. } => ManifoldKind::FlatTorus,
            ManifoldSpec::ConformalSphere { .. } => ManifoldKind::ConformalSphere,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ManifoldSpec::FlatTorus { dims, .. } => *dims,
            ManifoldSpec::ConformalSphere { .. } => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ManifoldSpec::FlatTorus { dims, periods } => {
                if !(2..=4).contains(dims) {
                    return Err(Error::InvalidManifold(format!(
                        "flat torus dimension {dims} outside 2..=4"
                    )));
                }
                if periods.len() != *dims {
                    return Err(Error::InvalidManifold(format!(
                        "expected {dims} periods, got {}",
                        periods.len()
                    )));
                }
                if let Some(p) = periods.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
                    return Err(Error::InvalidManifold(format!("period {p} is not positive")));
                }
            }
            ManifoldSpec::ConformalSphere { conformal_coeffs } => {
                for c in conformal_coeffs {
                    if c.l > MAX_CONFORMAL_DEGREE {
                        return Err(Error::InvalidManifold(format!(
                            "conformal degree {} exceeds cap {MAX_CONFORMAL_DEGREE}",
                            c.l
                        )));
                    }
                    if c.m.unsigned_abs() as usize > c.l {
                        return Err(Error::InvalidManifold(format!(
                            "order {} exceeds degree {}",
                            c.m, c.l
                        )));
                    }
                    if !c.amp.is_finite() {
                        return Err(Error::InvalidManifold("non-finite amplitude".into()));
                    }
                }
            }
        }
        Ok(())
    }

    /// Highest degree with nonzero amplitude in the conformal factor.
    pub fn conformal_degree(&self) -> usize {
        match self {
            ManifoldSpec::FlatTorus { .. } => 0,
            ManifoldSpec::ConformalSphere { conformal_coeffs } => conformal_coeffs
                .iter()
                .filter(|c| c.amp != 0.0)
                .map(|c| c.l)
                .max()
                .unwrap_or(0),
        }
    }

    /// True when the conformal exponent is non-constant.
    pub fn is_deformed(&self) -> bool {
        match self {
            ManifoldSpec::FlatTorus { .. } => false,
            ManifoldSpec::ConformalSphere { conformal_coeffs } => {
                conformal_coeffs.iter().any(|c| c.l > 0 && c.amp != 0.0)
            }
        }
    }

    /// Sectional curvature when it is constant: 0 for tori, `e^{-2c}` for a
    /// sphere whose conformal exponent is the constant `c`.
    pub fn constant_curvature(&self) -> Option<f64> {
        match self {
            ManifoldSpec::FlatTorus { .. } => Some(0.0),
            ManifoldSpec::ConformalSphere { .. } if self.is_deformed() => None,
            ManifoldSpec::ConformalSphere { .. } => {
                let f = self.conformal_jet(PI / 2.0, 0.0).v;
                Some((-2.0 * f).exp())
            }
        }
    }

    /// Riemannian volume in closed form, where one is available.
    pub fn closed_form_volume(&self) -> Option<f64> {
        match self {
            ManifoldSpec::FlatTorus { periods, .. } => Some(periods.iter().product()),
            ManifoldSpec::ConformalSphere { .. } if self.is_deformed() => None,
            ManifoldSpec::ConformalSphere { .. } => {
                let f = self.conformal_jet(PI / 2.0, 0.0).v;
                Some(4.0 * PI * (2.0 * f).exp())
            }
        }
    }

    /// Jet of the conformal exponent `f` at (θ, φ); zero on tori.
    pub fn conformal_jet(&self, theta: f64, phi: f64) -> Jet2 {
        match self {
            ManifoldSpec::FlatTorus { .. } => Jet2::default(),
            ManifoldSpec::ConformalSphere { conformal_coeffs } => conformal_coeffs
                .iter()
                .fold(Jet2::default(), |acc, c| acc + ylm(c.l, c.m, theta, phi).scale(c.amp)),
        }
    }

    /// Round-sphere Laplacian of the conformal exponent, evaluated spectrally.
    pub fn conformal_laplacian(&self, theta: f64, phi: f64) -> f64 {
        match self {
            ManifoldSpec::FlatTorus { .. } => 0.0,
            ManifoldSpec::ConformalSphere { conformal_coeffs } => conformal_coeffs
                .iter()
                .map(|c| -((c.l * (c.l + 1)) as f64) * c.amp * ylm(c.l, c.m, theta, phi).v)
                .sum(),
        }
    }
}

/// Frame connection coefficients at a point, `get(k, i, j) = g(∇_{e_k} e_i, e_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    n: usize,
    coeffs: Vec<f64>,
}

impl Connection {
    pub fn flat(n: usize) -> Self {
        Self {
            n,
            coeffs: vec![0.0; n * n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.coeffs[(k * self.n + i) * self.n + j]
    }

    fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        self.coeffs[(k * self.n + i) * self.n + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }
}

fn check_sphere_node(node: &[f64]) -> Result<(f64, f64)> {
    if node.len() != 2 {
        return Err(Error::Singular(format!("sphere node needs 2 coordinates, got {}", node.len())));
    }
    let (theta, phi) = (node[0], node[1]);
    if !(theta > 0.0 && theta < PI) || !phi.is_finite() {
        return Err(Error::Singular(format!("θ = {theta} is not in (0, π)")));
    }
    Ok((theta, phi))
}

fn check_torus_node(n: usize, node: &[f64]) -> Result<()> {
    if node.len() != n || node.iter().any(|x| !x.is_finite()) {
        return Err(Error::Singular(format!("invalid torus node {node:?}")));
    }
    Ok(())
}

/// Connection coefficients in the orthonormal frame at `node`.
pub fn connection_at(spec: &ManifoldSpec, node: &[f64]) -> Result<Connection> {
    match spec {
        ManifoldSpec::FlatTorus { dims, .. } => {
            check_torus_node(*dims, node)?;
            Ok(Connection::flat(*dims))
        }
        ManifoldSpec::ConformalSphere { .. } => {
            let (theta, phi) = check_sphere_node(node)?;
            let f = spec.conformal_jet(theta, phi);
            let df = [f.t, f.p / theta.sin()];
            let cot = theta.cos() / theta.sin();
            let scale = (-f.v).exp();
            let mut c = Connection::flat(2);
            for k in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        let mut round = 0.0;
                        if k == 1 && i == 0 && j == 1 {
                            round = cot;
                        } else if k == 1 && i == 1 && j == 0 {
                            round = -cot;
                        }
                        let dki = if k == i { 1.0 } else { 0.0 };
                        let dkj = if k == j { 1.0 } else { 0.0 };
                        c.set(k, i, j, scale * (round + dkj * df[i] - dki * df[j]));
                    }
                }
            }
            Ok(c)
        }
    }
}

/// Gaussian curvature at `node`: `e^{-2f}(1 - Δ_round f)` on the sphere.
pub fn curvature_at(spec: &ManifoldSpec, node: &[f64]) -> Result<f64> {
    match spec {
        ManifoldSpec::FlatTorus { dims, .. } => {
            check_torus_node(*dims, node)?;
            Ok(0.0)
        }
        ManifoldSpec::ConformalSphere { .. } => {
            let (theta, phi) = check_sphere_node(node)?;
            let f = spec.conformal_jet(theta, phi).v;
            Ok((-2.0 * f).exp() * (1.0 - spec.conformal_laplacian(theta, phi)))
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    spec: ManifoldSpec,
    resolution: usize,
    n: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
    connections: Vec<Connection>,
    curvature: Vec<f64>,
    conformal: Vec<Jet2>,
}

impl QuadratureGrid {
    pub fn spec(&self) -> &ManifoldSpec {
        &self.spec
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.coords[i * self.n..(i + 1) * self.n]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn connection(&self, i: usize) -> &Connection {
        &self.connections[i]
    }

    pub fn curvature(&self, i: usize) -> f64 {
        self.curvature[i]
    }

    /// Jet of the conformal exponent at node `i` (zero on tori).
    pub fn conformal(&self, i: usize) -> Jet2 {
        self.conformal[i]
    }

    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }
}

pub fn build_grid(spec: &ManifoldSpec, resolution: usize) -> Result<QuadratureGrid> {
    spec.validate()?;
    if resolution < 2 {
        return Err(Error::Resolution {
            given: resolution,
            minimum: 2,
            reason: "grids need at least two points per axis".into(),
        });
    }
    let n = spec.dim();
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    match spec {
        ManifoldSpec::FlatTorus { periods, .. } => {
            let total = resolution.pow(n as u32);
            let cell: f64 = periods.iter().map(|p| p / resolution as f64).product();
            for flat in 0..total {
                let mut rem = flat;
                let mut point = vec![0.0; n];
                for axis in (0..n).rev() {
                    point[axis] = periods[axis] * (rem % resolution) as f64 / resolution as f64;
                    rem /= resolution;
                }
                coords.extend(point);
                weights.push(cell);
            }
        }
        ManifoldSpec::ConformalSphere { .. } => {
            let (x, w) = gauss_legendre(resolution);
            let nphi = 2 * resolution;
            let dphi = 2.0 * PI / nphi as f64;
            // θ descending in x, so iterate x from the top to get θ ascending.
            for (xi, wi) in x.iter().zip(&w).rev() {
                let theta = xi.acos();
                for j in 0..nphi {
                    let phi = j as f64 * dphi;
                    let f = spec.conformal_jet(theta, phi).v;
                    coords.push(theta);
                    coords.push(phi);
                    weights.push(wi * dphi * (2.0 * f).exp());
                }
            }
        }
    }
    let count = weights.len();
    let mut connections = Vec::with_capacity(count);
    let mut curvature = Vec::with_capacity(count);
    let mut conformal = Vec::with_capacity(count);
    for i in 0..count {
        let node = &coords[i * n..(i + 1) * n];
        connections.push(connection_at(spec, node)?);
        curvature.push(curvature_at(spec, node)?);
        conformal.push(match spec {
            ManifoldSpec::ConformalSphere { .. } => spec.conformal_jet(node[0], node[1]),
            ManifoldSpec::FlatTorus { .. } => Jet2::default(),
        });
    }
    Ok(QuadratureGrid {
        spec: spec.clone(),
        resolution,
        n,
        coords,
        weights,
        connections,
        curvature,
        conformal,
    })
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;

    fn y10_sphere() -> ManifoldSpec {
        ManifoldSpec::conformal_sphere(&[(1, 0, 0.2)])
    }

    #[test]
    fn torus_volume_and_count() {
        let g = build_grid(&ManifoldSpec::standard_torus(2), 8).unwrap();
        assert_eq!(g.len(), 64);
        let v = (2.0 * PI).powi(2);
        assert!((g.volume() - v).abs() < 1e-10 * v);
    }

    #[test]
    fn rectangular_torus_volume() {
        let g = build_grid(&ManifoldSpec::torus(&[1.0, 2.5, 4.0]), 5).unwrap();
        assert!((g.volume() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn round_sphere_area() {
        let g = build_grid(&ManifoldSpec::round_sphere(), 12).unwrap();
        assert!((g.volume() - 4.0 * PI).abs() < 1e-10 * 4.0 * PI);
        for i in 0..g.len() {
            let t = g.node(i)[0];
            assert!(t > 0.0 && t < PI);
            assert!(g.weights()[i] > 0.0);
            assert!((g.curvature(i) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn conformal_area_matches_one_dimensional_oracle() {
        let spec = y10_sphere();
        let g = build_grid(&spec, 16).unwrap();
        // composite Simpson in θ of 2π e^{2f(θ)} sin θ
        let m = 4000;
        let h = PI / m as f64;
        let integrand = |t: f64| 2.0 * PI * (2.0 * spec.conformal_jet(t, 0.0).v).exp() * t.sin();
        let mut s = integrand(0.0) + integrand(PI);
        for k in 1..m {
            let c = if k % 2 == 1 { 4.0 } else { 2.0 };
            s += c * integrand(k as f64 * h);
        }
        let oracle = s * h / 3.0;
        assert!((g.volume() - oracle).abs() < 1e-10 * oracle);
    }

    #[test]
    fn flat_connection_vanishes() {
        let spec = ManifoldSpec::standard_torus(3);
        let c = connection_at(&spec, &[0.1, 0.2, 0.3]).unwrap();
        assert!(c.as_slice().iter().all(|&x| x == 0.0));
        assert_eq!(curvature_at(&spec, &[0.1, 0.2, 0.3]).unwrap(), 0.0);
    }

    #[test]
    fn singular_nodes_are_rejected() {
        let spec = ManifoldSpec::round_sphere();
        assert!(matches!(connection_at(&spec, &[0.0, 1.0]), Err(Error::Singular(_))));
        assert!(matches!(curvature_at(&spec, &[PI, 1.0]), Err(Error::Singular(_))));
    }

    // Coordinate metric g = e^{2f}(dθ² + sin²θ dφ²) and its Christoffel
    // symbols by centered differences, converted to the orthonormal frame.
    fn fd_frame_connection(spec: &ManifoldSpec, theta: f64, phi: f64) -> [[[f64; 2]; 2]; 2] {
        let metric = |t: f64, p: f64| {
            let e = (2.0 * spec.conformal_jet(t, p).v).exp();
            [e, e * t.sin().powi(2)]
        };
        let h = 1e-5;
        let g = metric(theta, phi);
        let dg_t: Vec<f64> = (0..2)
            .map(|a| (metric(theta + h, phi)[a] - metric(theta - h, phi)[a]) / (2.0 * h))
            .collect();
        let dg_p: Vec<f64> = (0..2)
            .map(|a| (metric(theta, phi + h)[a] - metric(theta, phi - h)[a]) / (2.0 * h))
            .collect();
        let dg = |c: usize, a: usize, b: usize| -> f64 {
            if a != b {
                return 0.0;
            }
            if c == 0 {
                dg_t[a]
            } else {
                dg_p[a]
            }
        };
        // Christoffel Γ^b_{ac} for diagonal metric
        let chris = |b: usize, a: usize, c: usize| -> f64 {
            0.5 / g[b] * (dg(a, b, c) + dg(c, b, a) - dg(b, a, c))
        };
        // frame e_i = E_i ∂_i, E = (1/√g_00, 1/√g_11) and its partials
        let frame = |t: f64, p: f64| {
            let m = metric(t, p);
            [1.0 / m[0].sqrt(), 1.0 / m[1].sqrt()]
        };
        let e = frame(theta, phi);
        let de = |a: usize, j: usize| -> f64 {
            if a == 0 {
                (frame(theta + h, phi)[j] - frame(theta - h, phi)[j]) / (2.0 * h)
            } else {
                (frame(theta, phi + h)[j] - frame(theta, phi - h)[j]) / (2.0 * h)
            }
        };
        let mut out = [[[0.0; 2]; 2]; 2];
        for k in 0..2 {
            for i in 0..2 {
                // ∇_{e_k} e_i = E_k (∂_k(E_i) ∂_i + E_i Γ^b_{k i} ∂_b)
                let mut v = [0.0; 2];
                v[i] += e[k] * de(k, i);
                for b in 0..2 {
                    v[b] += e[k] * e[i] * chris(b, k, i);
                }
                for j in 0..2 {
                    out[k][i][j] = v[j] / e[j];
                }
            }
        }
        out
    }

    #[test]
    fn sphere_connection_matches_finite_differences() {
        for spec in [ManifoldSpec::round_sphere(), y10_sphere(), ManifoldSpec::conformal_sphere(&[(2, 1, 0.15), (1, -1, 0.1)])] {
            for &(t, p) in &[(0.4, 0.3), (1.3, 2.0), (2.7, 5.5)] {
                let c = connection_at(&spec, &[t, p]).unwrap();
                let fd = fd_frame_connection(&spec, t, p);
                for k in 0..2 {
                    for i in 0..2 {
                        for j in 0..2 {
                            assert!(
                                (c.get(k, i, j) - fd[k][i][j]).abs() < 1e-6,
                                "{spec:?} {t} {p} {k}{i}{j}: {} vs {}",
                                c.get(k, i, j),
                                fd[k][i][j]
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn connection_is_metric_compatible() {
        let spec = ManifoldSpec::conformal_sphere(&[(2, 1, 0.15), (1, 0, 0.2)]);
        let g = build_grid(&spec, 10).unwrap();
        for node in 0..g.len() {
            let c = g.connection(node);
            for k in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((c.get(k, i, j) + c.get(k, j, i)).abs() < 1e-12);
                    }
                }
            }
        }
    }

    // K = -1/(2√(EG)) [∂θ(G_θ/√(EG)) + ∂φ(E_φ/√(EG))] for E dθ² + G dφ².
    fn fd_curvature(spec: &ManifoldSpec, theta: f64, phi: f64) -> f64 {
        let eg = |t: f64, p: f64| {
            let e = (2.0 * spec.conformal_jet(t, p).v).exp();
            (e, e * t.sin().powi(2))
        };
        let h = 1e-4;
        let a = |t: f64, p: f64| {
            let (e, g) = eg(t, p);
            let gt = (eg(t + h, p).1 - eg(t - h, p).1) / (2.0 * h);
            gt / (e * g).sqrt()
        };
        let b = |t: f64, p: f64| {
            let (e, g) = eg(t, p);
            let ep = (eg(t, p + h).0 - eg(t, p - h).0) / (2.0 * h);
            ep / (e * g).sqrt()
        };
        let (e, g) = eg(theta, phi);
        let da = (a(theta + h, phi) - a(theta - h, phi)) / (2.0 * h);
        let db = (b(theta, phi + h) - b(theta, phi - h)) / (2.0 * h);
        -(da + db) / (2.0 * (e * g).sqrt())
    }

    #[test]
    fn curvature_matches_finite_differences() {
        let spec = y10_sphere();
        for &(t, p) in &[(0.5, 0.0), (1.4, 1.0), (2.5, 4.0)] {
            let k = curvature_at(&spec, &[t, p]).unwrap();
            let fd = fd_curvature(&spec, t, p);
            assert!((k - fd).abs() < 1e-5, "{k} vs {fd}");
        }
        let round = ManifoldSpec::round_sphere();
        assert!((fd_curvature(&round, 1.0, 0.5) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn spec_validation() {
        assert!(ManifoldSpec::standard_torus(5).validate().is_err());
        assert!(ManifoldSpec::torus(&[1.0, -1.0]).validate().is_err());
        assert!(ManifoldSpec::conformal_sphere(&[(1, 2, 0.1)]).validate().is_err());
        assert!(ManifoldSpec::conformal_sphere(&[(9, 0, 0.1)]).validate().is_err());
        assert!(build_grid(&ManifoldSpec::round_sphere(), 1).is_err());
    }

    #[test]
    fn json_field_names() {
        let t: ManifoldSpec =
            serde_json::from_str(r#"{"kind":"flat_torus","dims":2,"periods":[5.5,5.5]}"#).unwrap();
        assert_eq!(t, ManifoldSpec::torus(&[5.5, 5.5]));
        let s: ManifoldSpec =
            serde_json::from_str(r#"{"kind":"conformal_sphere","conformal_coeffs":[{"l":1,"m":0,"amp":0.2}]}"#)
                .unwrap();
        assert_eq!(s, y10_sphere());
        let back = serde_json::to_string(&s).unwrap();
        assert_eq!(back, r#"{"kind":"conformal_sphere","conformal_coeffs":[{"l":1,"m":0,"amp":0.2}]}"#);
    }

    #[test]
    fn constant_curvature_classification() {
        assert_eq!(ManifoldSpec::standard_torus(3).constant_curvature(), Some(0.0));
        assert_eq!(ManifoldSpec::round_sphere().constant_curvature(), Some(1.0));
        assert_eq!(y10_sphere().constant_curvature(), None);
    }
}
