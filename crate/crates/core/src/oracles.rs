//! Closed-form solutions of the conformal Killing, Killing and closed
//! conformal Killing equations, with pointwise residual checkers that do not
//! go through any Gram matrix.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::multi_index::{binomial, subsets, FormIndex};
use crate::forms::pointwise::{self, PointAlgebra};
use crate::forms::{project, FormBasis, FormField, NodalForm, NodalTensor};
use crate::geometry::{build_grid, ManifoldKind, QuadratureGrid};
use crate::harmonics::Jet2;
use crate::operators::{kernel_dim, QuadForm, QuadraticForms, TolerancePolicy};

/// Projection defect above which an analytic form is not in the basis span.
pub const PROJECTION_TOL: f64 = 1e-8;
/// Normalized Rayleigh quotient below which a projected form is in the kernel.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    TorusParallel,
    FlatKilling,
    SphereRotation,
    SphereGradient,
    WedgeConstruct,
}

impl Provenance {
    /// The quadratic form whose kernel the family should lie in.
    pub fn natural_form(self) -> QuadForm {
        match self {
            Provenance::TorusParallel => QuadForm::Bochner,
            Provenance::FlatKilling | Provenance::SphereRotation => QuadForm::KillingSum,
            Provenance::SphereGradient => QuadForm::PlanaritySum,
            Provenance::WedgeConstruct => QuadForm::Tachibana,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Expression {
    /// Constant frame components.
    Constant { components: Vec<f64> },
    /// `ω = Σ_a (-1)^a x^{j_a} dx^{J∖j_a}` for the (r+1)-set `J`.
    Linear { set: Vec<usize> },
    /// `e^{2f} ⋆dℓ` for the ambient coordinate `ℓ = x, y, z` (axis 0, 1, 2).
    Rotation { axis: usize },
    /// `e^{2f} dℓ`.
    Gradient { axis: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticForm {
    pub n: usize,
    pub degree: usize,
    pub provenance: Provenance,
    pub expression: Expression,
    pub description: String,
}

const AXES: [&str; 3] = ["x", "y", "z"];

fn frame_name(n: usize, set: &[usize]) -> String {
    let coords = ["x", "y", "z", "w"];
    let name = |i: usize| if n <= 4 { coords[i].to_string() } else { format!("x{}", i + 1) };
    set.iter().map(|&i| format!("d{}", name(i))).collect::<Vec<_>>().join("^")
}

fn check_degree(n: usize, r: usize) -> Result<()> {
    if r < 1 || r >= n {
        return Err(Error::Degree {
            degree: r,
            n,
            reason: "analytic families need 1 <= r <= n - 1".into(),
        });
    }
    Ok(())
}

fn unit(len: usize, at: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    v[at] = 1.0;
    v
}

/// The `C(n, r)` constant frame r-forms.
pub fn torus_parallel_basis(n: usize, r: usize) -> Result<Vec<AnalyticForm>> {
    check_degree(n, r)?;
    let nc = binomial(n, r);
    Ok(subsets(n, r)
        .iter()
        .enumerate()
        .map(|(c, set)| AnalyticForm {
            n,
            degree: r,
            provenance: Provenance::TorusParallel,
            expression: Expression::Constant { components: unit(nc, c) },
            description: frame_name(n, set),
        })
        .collect())
}

/// Flat-chart Killing r-forms: `C(n, r+1)` linear families plus `C(n, r)`
/// constants. Linear members are not periodic.
pub fn flat_killing_basis(n: usize, r: usize) -> Result<Vec<AnalyticForm>> {
    let mut out: Vec<AnalyticForm> = torus_parallel_basis(n, r)?
        .into_iter()
        .map(|f| AnalyticForm {
            provenance: Provenance::FlatKilling,
            ..f
        })
        .collect();
    for set in subsets(n, r + 1) {
        out.push(AnalyticForm {
            n,
            degree: r,
            provenance: Provenance::FlatKilling,
            description: format!("x ⌟ {}", frame_name(n, &set)),
            expression: Expression::Linear { set },
        });
    }
    Ok(out)
}

/// All `C(n, r)` wedges of the coordinate 1-forms, built by the pointwise
/// wedge product.
pub fn torus_wedge_basis(n: usize, r: usize) -> Result<Vec<AnalyticForm>> {
    check_degree(n, r)?;
    Ok(subsets(n, r)
        .into_iter()
        .map(|set| {
            let mut acc = unit(n, set[0]);
            for (p, &i) in set.iter().enumerate().skip(1) {
                acc = pointwise::wedge(n, p, &acc, 1, &unit(n, i));
            }
            AnalyticForm {
                n,
                degree: r,
                provenance: Provenance::WedgeConstruct,
                description: frame_name(n, &set),
                expression: Expression::Constant { components: acc },
            }
        })
        .collect())
}

/// The three rotation duals and three ambient gradients on the sphere,
/// each scaled by `e^{2f}` so that they solve the equations for `e^{2f} g`.
pub fn sphere_ck_basis() -> Vec<AnalyticForm> {
    let mut out = Vec::new();
    for (axis, name) in AXES.iter().enumerate() {
        out.push(AnalyticForm {
            n: 2,
            degree: 1,
            provenance: Provenance::SphereRotation,
            expression: Expression::Rotation { axis },
            description: format!("e^(2f) *d{name}"),
        });
    }
    for (axis, name) in AXES.iter().enumerate() {
        out.push(AnalyticForm {
            n: 2,
            degree: 1,
            provenance: Provenance::SphereGradient,
            expression: Expression::Gradient { axis },
            description: format!("e^(2f) d{name}"),
        });
    }
    out
}

/// Restriction of the ambient coordinate `axis` to the unit sphere.
fn ambient(axis: usize, theta: f64, phi: f64) -> Jet2 {
    let (s, c) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    match axis {
        0 => Jet2 {
            v: s * cp,
            t: c * cp,
            p: -s * sp,
            tt: -s * cp,
            tp: -c * sp,
            pp: -s * cp,
        },
        1 => Jet2 {
            v: s * sp,
            t: c * sp,
            p: s * cp,
            tt: -s * sp,
            tp: c * cp,
            pp: -s * sp,
        },
        _ => Jet2 {
            v: c,
            t: -s,
            p: 0.0,
            tt: -c,
            tp: 0.0,
            pp: 0.0,
        },
    }
}

impl AnalyticForm {
    fn kind(&self) -> ManifoldKind {
        match self.expression {
            Expression::Rotation { .. } | Expression::Gradient { .. } => ManifoldKind::ConformalSphere,
            _ => ManifoldKind::FlatTorus,
        }
    }

    /// Frame components and frame derivatives `(u, du[k][c])` at one node.
    fn jet(&self, grid: &QuadratureGrid, node: usize) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let nc = binomial(n, self.degree);
        let mut u = vec![0.0; nc];
        let mut du = vec![0.0; n * nc];
        let x = grid.node(node);
        match &self.expression {
            Expression::Constant { components } => u.copy_from_slice(components),
            Expression::Linear { set } => {
                let idx = FormIndex::new(n, self.degree);
                for (a, &ja) in set.iter().enumerate() {
                    let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
                    let mut rest = set.clone();
                    rest.remove(a);
                    let c = idx.position(&rest);
                    u[c] = sign * x[ja];
                    du[ja * nc + c] = sign;
                }
            }
            Expression::Rotation { axis } | Expression::Gradient { axis } => {
                let (t, p) = (x[0], x[1]);
                let (s, c) = t.sin_cos();
                let l = ambient(*axis, t, p);
                let mut w = [l.t, l.p / s];
                let mut dw = [[l.tt, l.tp / s - c * l.p / (s * s)], [l.tp / s, l.pp / (s * s)]];
                if matches!(self.expression, Expression::Rotation { .. }) {
                    w = [-w[1], w[0]];
                    dw = [[-dw[0][1], dw[0][0]], [-dw[1][1], dw[1][0]]];
                }
                let f = grid.conformal(node);
                let ef = f.v.exp();
                let fk = [f.t, f.p / s];
                for i in 0..2 {
                    u[i] = ef * w[i];
                    for k in 0..2 {
                        du[2 * k + i] = fk[k] * w[i] + dw[k][i];
                    }
                }
            }
        }
        (u, du)
    }
}

/// Anything with nodal values and covariant derivatives on a grid.
pub trait Evaluable {
    fn degree(&self) -> usize;
    fn nodal(&self, grid: &QuadratureGrid) -> Result<(NodalForm, NodalTensor)>;
}

impl Evaluable for AnalyticForm {
    fn degree(&self) -> usize {
        self.degree
    }

    fn nodal(&self, grid: &QuadratureGrid) -> Result<(NodalForm, NodalTensor)> {
        if grid.dim() != self.n || grid.spec().kind() != self.kind() {
            return Err(Error::BasisMismatch(format!(
                "{} does not live on a {:?} grid of dimension {}",
                self.description,
                grid.spec().kind(),
                grid.dim()
            )));
        }
        let alg = PointAlgebra::new(self.n, self.degree);
        let nc = alg.ncomp();
        let mut values = Vec::with_capacity(grid.len() * nc);
        let mut nabla = vec![0.0; grid.len() * self.n * nc];
        for node in 0..grid.len() {
            let (u, du) = self.jet(grid, node);
            alg.covariant(grid.connection(node), &u, &du, &mut nabla[node * self.n * nc..(node + 1) * self.n * nc]);
            values.extend(u);
        }
        Ok((
            NodalForm {
                n: self.n,
                degree: self.degree,
                values,
            },
            NodalTensor {
                n: self.n,
                degree: self.degree,
                values: nabla,
            },
        ))
    }
}

impl Evaluable for FormField<'_> {
    fn degree(&self) -> usize {
        FormField::degree(self)
    }

    fn nodal(&self, grid: &QuadratureGrid) -> Result<(NodalForm, NodalTensor)> {
        if self.basis().spec() != grid.spec() || self.basis().resolution() != grid.resolution() {
            return Err(Error::BasisMismatch("field was tabulated on a different grid".into()));
        }
        Ok((self.values(), self.covariant_derivative()))
    }
}

/// Sup-norm residuals of the three defining equations, relative to
/// `max |∇ω|` (or `max |ω|` when `ω` is parallel).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSet {
    pub ck: f64,
    pub killing: f64,
    pub closed_ck: f64,
}

pub fn residuals<E: Evaluable + ?Sized>(omega: &E, grid: &QuadratureGrid) -> Result<ResidualSet> {
    let (values, nabla) = omega.nodal(grid)?;
    let (n, r) = (grid.dim(), omega.degree());
    check_degree(n, r)?;
    let alg = PointAlgebra::new(n, r);
    let block = n * alg.ncomp();
    let mut up = vec![0.0; alg.upper_len()];
    let mut low = vec![0.0; alg.lower_len()];
    let mut skew = vec![0.0; block];
    let mut gw = vec![0.0; block];
    let (mut ck, mut kil, mut cck) = (0.0_f64, 0.0_f64, 0.0_f64);
    let norm = |it: &mut dyn Iterator<Item = f64>| it.map(|x| x * x).sum::<f64>().sqrt();
    for node in 0..grid.len() {
        let nab = nabla.at(node);
        alg.exterior(nab, &mut up);
        alg.skew_part(&up, &mut skew);
        alg.codifferential(nab, &mut low);
        let s = 1.0 / (n - r + 1) as f64;
        low.iter_mut().for_each(|x| *x *= s);
        alg.metric_wedge(&low, &mut gw);
        ck = ck.max(norm(&mut (0..block).map(|i| nab[i] - skew[i] - gw[i])));
        kil = kil.max(norm(&mut (0..block).map(|i| nab[i] - skew[i])));
        cck = cck.max(norm(&mut (0..block).map(|i| nab[i] - gw[i])));
    }
    let vmax = values.max_norm();
    if vmax == 0.0 {
        return Err(Error::ZeroField);
    }
    let nmax = nabla.max_norm();
    let scale = if nmax > 1e-14 * vmax { nmax } else { vmax };
    Ok(ResidualSet {
        ck: ck / scale,
        killing: kil / scale,
        closed_ck: cck / scale,
    })
}

pub fn residual_ck<E: Evaluable + ?Sized>(omega: &E, grid: &QuadratureGrid) -> Result<f64> {
    Ok(residuals(omega, grid)?.ck)
}

pub fn residual_killing<E: Evaluable + ?Sized>(omega: &E, grid: &QuadratureGrid) -> Result<f64> {
    Ok(residuals(omega, grid)?.killing)
}

pub fn residual_closed_ck<E: Evaluable + ?Sized>(omega: &E, grid: &QuadratureGrid) -> Result<f64> {
    Ok(residuals(omega, grid)?.closed_ck)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifiedForm {
    pub description: String,
    pub provenance: Provenance,
    pub projection_defect: f64,
    /// Normalized quotient of the target form; absent when the projection failed.
    pub rayleigh: Option<f64>,
    pub in_kernel: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCertification {
    pub which: QuadForm,
    pub forms: Vec<CertifiedForm>,
    /// Rank of the M-Gram matrix of the projected forms that are in the kernel.
    pub span_dimension: usize,
    pub kernel_dim: usize,
    pub kernel_clean: bool,
}

impl CrossCertification {
    pub fn span_matches(&self) -> bool {
        self.kernel_clean && self.span_dimension == self.kernel_dim
    }

    /// Forms kept out of the kernel, by projection defect or by quotient.
    /// On a grid with no oversampling the projection interpolates exactly,
    /// so non-periodic forms are caught by the quotient instead.
    pub fn rejected(&self) -> usize {
        self.forms.iter().filter(|f| !f.in_kernel).count()
    }
}

/// Numerical rank of a symmetric PSD Gram matrix after unit-diagonal scaling.
pub fn gram_rank(gram: &DMatrix<f64>, rel_tol: f64) -> usize {
    let k = gram.nrows();
    if k == 0 {
        return 0;
    }
    let d: Vec<f64> = (0..k).map(|i| gram[(i, i)].max(0.0).sqrt()).collect();
    let scaled = DMatrix::from_fn(k, k, |i, j| {
        if d[i] > 0.0 && d[j] > 0.0 {
            gram[(i, j)] / (d[i] * d[j])
        } else {
            0.0
        }
    });
    let eig = scaled.symmetric_eigenvalues();
    let top = eig.max();
    eig.iter().filter(|&&l| l > rel_tol * top.max(f64::MIN_POSITIVE)).count()
}

/// Projects each analytic form onto `basis`, tests it against the kernel of
/// `which`, and compares the span of the survivors with the kernel dimension.
pub fn cross_certify(
    analytic: &[AnalyticForm],
    qf: &QuadraticForms,
    basis: &FormBasis,
    which: QuadForm,
    policy: &TolerancePolicy,
) -> Result<CrossCertification> {
    if qf.size() != basis.len() || qf.meta.degree != basis.degree() || &qf.meta.manifold != basis.spec() {
        return Err(Error::BasisMismatch("quadratic forms do not match the basis".into()));
    }
    let grid = build_grid(basis.spec(), basis.resolution())?;
    let scale = qf.diagnostics.reference_scale.max(f64::MIN_POSITIVE);
    let mut forms = Vec::new();
    let mut members: Vec<DVector<f64>> = Vec::new();
    for a in analytic {
        if a.degree != basis.degree() {
            return Err(Error::BasisMismatch(format!("{} has degree {}", a.description, a.degree)));
        }
        let (values, _) = a.nodal(&grid)?;
        let (field, defect) = project(&values, basis)?;
        let (rayleigh, in_kernel) = if defect < PROJECTION_TOL {
            let q = qf.rayleigh(which, field.coeffs()) / scale;
            (Some(q), q < MEMBERSHIP_TOL)
        } else {
            (None, false)
        };
        if in_kernel {
            members.push(field.coeffs().clone());
        }
        forms.push(CertifiedForm {
            description: a.description.clone(),
            provenance: a.provenance,
            projection_defect: defect,
            rayleigh,
            in_kernel,
        });
    }
    let gram = DMatrix::from_fn(members.len(), members.len(), |i, j| {
        members[i].dot(&(&qf.mass * &members[j]))
    });
    let spectrum = kernel_dim(&qf.matrix(which), &qf.mass, policy)?;
    Ok(CrossCertification {
        which,
        forms,
        span_dimension: gram_rank(&gram, 1e-8),
        kernel_dim: spectrum.kernel_dim,
        kernel_clean: spectrum.is_clean(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ManifoldSpec;

    #[test]
    fn family_counts() {
        assert_eq!(torus_parallel_basis(4, 2).unwrap().len(), 6);
        assert_eq!(flat_killing_basis(3, 1).unwrap().len(), 6);
        assert_eq!(flat_killing_basis(2, 1).unwrap().len(), 3);
        assert_eq!(sphere_ck_basis().len(), 6);
        assert!(torus_parallel_basis(2, 2).is_err());
    }

    #[test]
    fn wedges_are_unit_frame_forms() {
        for (c, f) in torus_wedge_basis(4, 2).unwrap().iter().enumerate() {
            assert_eq!(
                f.expression,
                Expression::Constant {
                    components: unit(6, c)
                }
            );
        }
    }

    #[test]
    fn parallel_dx_has_zero_residuals() {
        let spec = ManifoldSpec::standard_torus(2);
        let grid = build_grid(&spec, 6).unwrap();
        let r = residuals(&torus_parallel_basis(2, 1).unwrap()[0], &grid).unwrap();
        assert_eq!((r.ck, r.killing, r.closed_ck), (0.0, 0.0, 0.0));
    }

    #[test]
    fn rotation_is_killing_not_closed() {
        let grid = build_grid(&ManifoldSpec::round_sphere(), 12).unwrap();
        let z = &sphere_ck_basis()[2];
        let r = residuals(z, &grid).unwrap();
        assert!(r.killing < 1e-12 && r.ck < 1e-12, "{r:?}");
        assert!(r.closed_ck > 0.1);
    }

    #[test]
    fn sphere_forms_rejected_on_torus() {
        let grid = build_grid(&ManifoldSpec::standard_torus(2), 6).unwrap();
        assert!(sphere_ck_basis()[0].nodal(&grid).is_err());
    }
}
