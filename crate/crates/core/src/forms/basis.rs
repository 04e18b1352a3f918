//! Finite spectral bases of r-forms, tabulated on a quadrature grid.
//!
//! Torus: real Fourier modes `cos(k·ξ)`, `sin(k·ξ)` with `|k|_∞ <= cutoff`
//! (one representative per ±k pair) times each constant frame r-form.
//! Enumeration is lexicographic over (frequency vector, phase, component).
//!
//! Sphere: scalars `Y_{l,m}` for `0 <= l <= L`; 1-forms `dY_{l,m}` (exact)
//! then `⋆dY_{l,m}` (coexact) for `1 <= l <= L`, ordered by
//! (family, l, m).

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::multi_index::binomial;
use super::pointwise::PointAlgebra;
use crate::error::{Error, Result};
use crate::geometry::{ManifoldSpec, QuadratureGrid};
use crate::harmonics::{degree_orders, ylm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Cos,
    Sin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Scalar,
    Exact,
    Coexact,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisLabel {
    Fourier {
        freq: Vec<i64>,
        phase: Phase,
        component: usize,
    },
    Harmonic {
        family: Family,
        l: usize,
        m: i64,
    },
}

#[derive(Debug)]
pub struct FormBasis {
    spec: ManifoldSpec,
    n: usize,
    degree: usize,
    cutoff: usize,
    resolution: usize,
    labels: Vec<BasisLabel>,
    weights: Vec<f64>,
    algebra: PointAlgebra,
    values: DMatrix<f64>,
    nabla: DMatrix<f64>,
    mass: OnceLock<DMatrix<f64>>,
}

/// Smallest grid resolution that integrates products of basis elements
/// and their first derivatives exactly (sphere: to spectral accuracy when
/// the metric is deformed).
pub fn minimum_resolution(spec: &ManifoldSpec, cutoff: usize) -> usize {
    match spec {
        ManifoldSpec::FlatTorus { .. } => 2 * cutoff + 1,
        ManifoldSpec::ConformalSphere { .. } => cutoff + 3 + 10 * spec.conformal_degree(),
    }
}

/// Basis at degree `r` with `1 <= r <= n - 1`.
pub fn build_basis(spec: &ManifoldSpec, grid: &QuadratureGrid, r: usize, cutoff: usize) -> Result<FormBasis> {
    let n = spec.dim();
    if r < 1 || r >= n {
        return Err(Error::Degree {
            degree: r,
            n,
            reason: "form degree must satisfy 1 <= r <= n - 1".into(),
        });
    }
    build_basis_any_degree(spec, grid, r, cutoff)
}

/// Like [`build_basis`] but also admits degree 0 and n (torus) / 0 (sphere),
/// used as targets for codifferentials and Hodge duals.
pub fn build_basis_any_degree(
    spec: &ManifoldSpec,
    grid: &QuadratureGrid,
    r: usize,
    cutoff: usize,
) -> Result<FormBasis> {
    let n = spec.dim();
    if grid.spec() != spec {
        return Err(Error::BasisMismatch("grid was built for a different manifold".into()));
    }
    if r > n {
        return Err(Error::Degree {
            degree: r,
            n,
            reason: "degree exceeds dimension".into(),
        });
    }
    if cutoff < 1 {
        return Err(Error::Cutoff(cutoff));
    }
    let min = minimum_resolution(spec, cutoff);
    if grid.resolution() < min {
        return Err(Error::Resolution {
            given: grid.resolution(),
            minimum: min,
            reason: format!("cutoff {cutoff} needs exact quadrature of basis products"),
        });
    }
    let algebra = PointAlgebra::new(n, r);
    let (labels, jets) = match spec {
        ManifoldSpec::FlatTorus { periods, .. } => torus_jets(grid, periods, r, cutoff),
        ManifoldSpec::ConformalSphere { .. } => {
            if r > 1 {
                return Err(Error::Degree {
                    degree: r,
                    n,
                    reason: "sphere bases exist for degrees 0 and 1 only".into(),
                });
            }
            sphere_jets(grid, r, cutoff)
        }
    };
    let nc = algebra.ncomp();
    let nodes = grid.len();
    let size = labels.len();
    let mut values = DMatrix::zeros(size, nodes * nc);
    let mut nabla = DMatrix::zeros(size, nodes * n * nc);
    let mut buf = vec![0.0; n * nc];
    for (e, jet) in jets.iter().enumerate() {
        for node in 0..nodes {
            let u = &jet.u[node * nc..(node + 1) * nc];
            let du = &jet.du[node * n * nc..(node + 1) * n * nc];
            algebra.covariant(grid.connection(node), u, du, &mut buf);
            for c in 0..nc {
                values[(e, node * nc + c)] = u[c];
            }
            for (c, v) in buf.iter().enumerate() {
                nabla[(e, node * n * nc + c)] = *v;
            }
        }
    }
    Ok(FormBasis {
        spec: spec.clone(),
        n,
        degree: r,
        cutoff,
        resolution: grid.resolution(),
        labels,
        weights: grid.weights().to_vec(),
        algebra,
        values,
        nabla,
        mass: OnceLock::new(),
    })
}

/// Frame components and their frame directional derivatives at every node.
struct Jet {
    u: Vec<f64>,
    du: Vec<f64>,
}

fn torus_frequencies(n: usize, cutoff: usize) -> Vec<Vec<i64>> {
    let c = cutoff as i64;
    let side = 2 * cutoff + 1;
    let mut out = Vec::new();
    for flat in 0..side.pow(n as u32) {
        let mut k = vec![0i64; n];
        let mut rem = flat;
        for a in (0..n).rev() {
            k[a] = (rem % side) as i64 - c;
            rem /= side;
        }
        match k.iter().find(|&&x| x != 0) {
            None => out.push(k),
            Some(&first) if first > 0 => out.push(k),
            _ => {}
        }
    }
    out
}

fn torus_jets(grid: &QuadratureGrid, periods: &[f64], r: usize, cutoff: usize) -> (Vec<BasisLabel>, Vec<Jet>) {
    let n = periods.len();
    let nc = binomial(n, r);
    let nodes = grid.len();
    let mut labels = Vec::new();
    let mut jets = Vec::new();
    for k in torus_frequencies(n, cutoff) {
        let xi: Vec<f64> = k.iter().zip(periods).map(|(&ka, &la)| 2.0 * PI * ka as f64 / la).collect();
        let phases: &[Phase] = if k.iter().all(|&x| x == 0) {
            &[Phase::Cos]
        } else {
            &[Phase::Cos, Phase::Sin]
        };
        for &phase in phases {
            for component in 0..nc {
                let mut u = vec![0.0; nodes * nc];
                let mut du = vec![0.0; nodes * n * nc];
                for node in 0..nodes {
                    let x = grid.node(node);
                    let arg: f64 = xi.iter().zip(x).map(|(a, b)| a * b).sum();
                    let (s, c) = arg.sin_cos();
                    let (v, dv) = match phase {
                        Phase::Cos => (c, -s),
                        Phase::Sin => (s, c),
                    };
                    u[node * nc + component] = v;
                    for a in 0..n {
                        du[node * n * nc + a * nc + component] = dv * xi[a];
                    }
                }
                labels.push(BasisLabel::Fourier {
                    freq: k.clone(),
                    phase,
                    component,
                });
                jets.push(Jet { u, du });
            }
        }
    }
    (labels, jets)
}

fn sphere_jets(grid: &QuadratureGrid, r: usize, cutoff: usize) -> (Vec<BasisLabel>, Vec<Jet>) {
    let nodes = grid.len();
    let mut labels = Vec::new();
    let mut jets = Vec::new();
    if r == 0 {
        for (l, m) in degree_orders(0, cutoff) {
            let mut u = vec![0.0; nodes];
            let mut du = vec![0.0; 2 * nodes];
            for node in 0..nodes {
                let (t, p) = (grid.node(node)[0], grid.node(node)[1]);
                let y = ylm(l, m, t, p);
                let ef = (-grid.conformal(node).v).exp();
                u[node] = y.v;
                du[2 * node] = ef * y.t;
                du[2 * node + 1] = ef * y.p / t.sin();
            }
            labels.push(BasisLabel::Harmonic {
                family: Family::Scalar,
                l,
                m,
            });
            jets.push(Jet { u, du });
        }
        return (labels, jets);
    }
    for family in [Family::Exact, Family::Coexact] {
        for (l, m) in degree_orders(1, cutoff) {
            let mut u = vec![0.0; 2 * nodes];
            let mut du = vec![0.0; 4 * nodes];
            for node in 0..nodes {
                let (t, p) = (grid.node(node)[0], grid.node(node)[1]);
                let y = ylm(l, m, t, p);
                let f = grid.conformal(node);
                let (s, c) = t.sin_cos();
                // round-frame components of dY and their round-frame derivatives
                let w = [y.t, y.p / s];
                let dw = [
                    [y.tt, y.tp / s - c * y.p / (s * s)], // e_1(w_i)
                    [y.tp / s, y.pp / (s * s)],           // e_2(w_i)
                ];
                let (w, dw) = match family {
                    Family::Coexact => ([-w[1], w[0]], [[-dw[0][1], dw[0][0]], [-dw[1][1], dw[1][0]]]),
                    _ => (w, dw),
                };
                let fk = [f.t, f.p / s];
                let e1 = (-f.v).exp();
                let e2 = e1 * e1;
                for i in 0..2 {
                    u[2 * node + i] = e1 * w[i];
                    for k in 0..2 {
                        du[4 * node + 2 * k + i] = e2 * (dw[k][i] - fk[k] * w[i]);
                    }
                }
            }
            labels.push(BasisLabel::Harmonic { family, l, m });
            jets.push(Jet { u, du });
        }
    }
    (labels, jets)
}

impl FormBasis {
    pub fn spec(&self) -> &ManifoldSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[BasisLabel] {
        &self.labels
    }

    pub fn node_count(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn algebra(&self) -> &PointAlgebra {
        &self.algebra
    }

    /// Number of stored components per node.
    pub fn ncomp(&self) -> usize {
        self.algebra.ncomp()
    }

    /// Row `e` holds the frame components of element `e`, node-major.
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Row `e` holds `∇` of element `e`, node-major, direction then component.
    pub fn nabla(&self) -> &DMatrix<f64> {
        &self.nabla
    }

    /// Same manifold, grid and truncation as `other`.
    pub fn compatible(&self, other: &FormBasis) -> bool {
        self.spec == other.spec && self.resolution == other.resolution && self.cutoff == other.cutoff
    }

    pub fn same_space(&self, other: &FormBasis) -> bool {
        self.compatible(other) && self.degree == other.degree
    }

    /// L2 Gram matrix of the basis.
    pub fn mass(&self) -> &DMatrix<f64> {
        self.mass.get_or_init(|| {
            let scaled = weighted(&self.values, &self.weights, self.ncomp());
            let m = &scaled * scaled.transpose();
            (&m + m.transpose()) * 0.5
        })
    }
}

/// Rows of `data` with each node block scaled by `sqrt(weight)`.
pub(crate) fn weighted(data: &DMatrix<f64>, weights: &[f64], block: usize) -> DMatrix<f64> {
    let mut out = data.clone();
    for (node, w) in weights.iter().enumerate() {
        let s = w.sqrt();
        for c in node * block..(node + 1) * block {
            out.column_mut(c).scale_mut(s);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid;

    #[test]
    fn basis_sizes() {
        let t2 = ManifoldSpec::standard_torus(2);
        let g = build_grid(&t2, 8).unwrap();
        assert_eq!(build_basis(&t2, &g, 1, 1).unwrap().len(), 18);

        let s2 = ManifoldSpec::round_sphere();
        let g = build_grid(&s2, 8).unwrap();
        assert_eq!(build_basis(&s2, &g, 1, 2).unwrap().len(), 16);

        let t4 = ManifoldSpec::standard_torus(4);
        let g = build_grid(&t4, 3).unwrap();
        assert_eq!(build_basis(&t4, &g, 2, 1).unwrap().len(), 486);
    }

    #[test]
    fn rejects_bad_requests() {
        let s2 = ManifoldSpec::round_sphere();
        let g = build_grid(&s2, 8).unwrap();
        assert!(matches!(build_basis(&s2, &g, 2, 2), Err(Error::Degree { .. })));
        assert!(matches!(build_basis(&s2, &g, 0, 2), Err(Error::Degree { .. })));
        assert!(matches!(build_basis(&s2, &g, 1, 0), Err(Error::Cutoff(0))));
        match build_basis(&s2, &g, 1, 6) {
            Err(Error::Resolution { minimum, .. }) => assert_eq!(minimum, 9),
            other => panic!("expected resolution error, got {other:?}"),
        }
        let t2 = ManifoldSpec::standard_torus(2);
        let g = build_grid(&t2, 4).unwrap();
        assert!(matches!(build_basis(&t2, &g, 1, 2), Err(Error::Resolution { minimum: 5, .. })));
    }

    #[test]
    fn mass_matrix_positive_definite() {
        for (spec, res, r, cut) in [
            (ManifoldSpec::standard_torus(3), 5, 2, 2),
            (ManifoldSpec::round_sphere(), 10, 1, 5),
            (ManifoldSpec::conformal_sphere(&[(1, 0, 0.2)]), 20, 1, 5),
        ] {
            let g = build_grid(&spec, res).unwrap();
            let b = build_basis(&spec, &g, r, cut).unwrap();
            let eig = nalgebra::SymmetricEigen::new(b.mass().clone());
            assert!(eig.eigenvalues.min() > 0.0);
        }
    }

    #[test]
    fn level_one_frequencies() {
        let f = torus_frequencies(2, 1);
        assert_eq!(f.len(), 5);
        assert_eq!(f[0], vec![0, 0]);
        assert!(f.iter().all(|k| k[0] > 0 || (k[0] == 0 && k[1] >= 0)));
    }
}
