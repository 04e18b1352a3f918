use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::basis::{weighted, FormBasis};
use super::multi_index::binomial;
use super::pointwise::{self, PointAlgebra};
use crate::error::{Error, Result};

/// Degree-`degree` form values at every node, `C(n, degree)` components each.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalForm {
    pub n: usize,
    pub degree: usize,
    pub values: Vec<f64>,
}

/// `(0, r+1)` tensor values at every node in the covariant-derivative layout.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalTensor {
    pub n: usize,
    pub degree: usize,
    pub values: Vec<f64>,
}

impl NodalForm {
    pub fn ncomp(&self) -> usize {
        binomial(self.n, self.degree)
    }

    pub fn at(&self, node: usize) -> &[f64] {
        let nc = self.ncomp();
        &self.values[node * nc..(node + 1) * nc]
    }

    pub fn nodes(&self) -> usize {
        self.values.len() / self.ncomp().max(1)
    }

    /// Weighted pointwise inner product summed over nodes.
    pub fn inner(&self, other: &NodalForm, weights: &[f64]) -> f64 {
        let nc = self.ncomp();
        weights
            .iter()
            .enumerate()
            .map(|(i, w)| {
                w * self.values[i * nc..(i + 1) * nc]
                    .iter()
                    .zip(&other.values[i * nc..(i + 1) * nc])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            })
            .sum()
    }

    pub fn max_norm(&self) -> f64 {
        let nc = self.ncomp();
        (0..self.nodes())
            .map(|i| self.values[i * nc..(i + 1) * nc].iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

impl NodalTensor {
    pub fn block(&self) -> usize {
        self.n * binomial(self.n, self.degree)
    }

    pub fn at(&self, node: usize) -> &[f64] {
        let b = self.block();
        &self.values[node * b..(node + 1) * b]
    }

    pub fn max_norm(&self) -> f64 {
        let b = self.block();
        self.values
            .chunks(b)
            .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    pub fn inner(&self, other: &NodalTensor, weights: &[f64]) -> f64 {
        let b = self.block();
        weights
            .iter()
            .enumerate()
            .map(|(i, w)| {
                w * self.values[i * b..(i + 1) * b]
                    .iter()
                    .zip(&other.values[i * b..(i + 1) * b])
                    .map(|(x, y)| x * y)
                    .sum::<f64>()
            })
            .sum()
    }
}

/// A form represented by coefficients over a [`FormBasis`].
#[derive(Debug, Clone)]
pub struct FormField<'a> {
    basis: &'a FormBasis,
    coeffs: DVector<f64>,
}

/// Serialized form of a [`FormField`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormFieldRecord {
    pub degree: usize,
    pub cutoff: usize,
    pub coeffs: Vec<f64>,
}

impl<'a> FormField<'a> {
    pub fn new(basis: &'a FormBasis, coeffs: DVector<f64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::BasisMismatch(format!(
                "{} coefficients for a basis of size {}",
                coeffs.len(),
                basis.len()
            )));
        }
        Ok(Self { basis, coeffs })
    }

    pub fn zero(basis: &'a FormBasis) -> Self {
        Self {
            basis,
            coeffs: DVector::zeros(basis.len()),
        }
    }

    /// The `j`-th basis element as a field.
    pub fn element(basis: &'a FormBasis, j: usize) -> Self {
        let mut f = Self::zero(basis);
        f.coeffs[j] = 1.0;
        f
    }

    pub fn basis(&self) -> &'a FormBasis {
        self.basis
    }

    pub fn coeffs(&self) -> &DVector<f64> {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            basis: self.basis,
            coeffs: &self.coeffs * a,
        }
    }

    pub fn values(&self) -> NodalForm {
        NodalForm {
            n: self.basis.dim(),
            degree: self.degree(),
            values: (self.basis.values().transpose() * &self.coeffs).as_slice().to_vec(),
        }
    }

    pub fn covariant_derivative(&self) -> NodalTensor {
        NodalTensor {
            n: self.basis.dim(),
            degree: self.degree(),
            values: (self.basis.nabla().transpose() * &self.coeffs).as_slice().to_vec(),
        }
    }

    pub fn exterior_d(&self) -> NodalForm {
        exterior_of(&self.covariant_derivative(), self.basis.algebra())
    }

    pub fn codifferential(&self) -> NodalForm {
        codifferential_of(&self.covariant_derivative(), self.basis.algebra())
    }

    pub fn to_record(&self) -> FormFieldRecord {
        FormFieldRecord {
            degree: self.degree(),
            cutoff: self.basis.cutoff(),
            coeffs: self.coeffs.as_slice().to_vec(),
        }
    }

    pub fn from_record(basis: &'a FormBasis, rec: &FormFieldRecord) -> Result<Self> {
        if rec.degree != basis.degree() || rec.cutoff != basis.cutoff() {
            return Err(Error::BasisMismatch(format!(
                "record (degree {}, cutoff {}) does not match basis (degree {}, cutoff {})",
                rec.degree,
                rec.cutoff,
                basis.degree(),
                basis.cutoff()
            )));
        }
        Self::new(basis, DVector::from_vec(rec.coeffs.clone()))
    }
}

pub(crate) fn exterior_of(nabla: &NodalTensor, alg: &PointAlgebra) -> NodalForm {
    let block = nabla.block();
    let up = alg.upper_len();
    let nodes = nabla.values.len() / block;
    let mut values = vec![0.0; nodes * up];
    for i in 0..nodes {
        alg.exterior(nabla.at(i), &mut values[i * up..(i + 1) * up]);
    }
    NodalForm {
        n: nabla.n,
        degree: nabla.degree + 1,
        values,
    }
}

pub(crate) fn codifferential_of(nabla: &NodalTensor, alg: &PointAlgebra) -> NodalForm {
    let block = nabla.block();
    let low = alg.lower_len();
    let nodes = nabla.values.len() / block;
    let mut values = vec![0.0; nodes * low];
    for i in 0..nodes {
        alg.codifferential(nabla.at(i), &mut values[i * low..(i + 1) * low]);
    }
    NodalForm {
        n: nabla.n,
        degree: nabla.degree.saturating_sub(1),
        values,
    }
}

/// `d` of basis element `j`, pointwise.
pub fn exterior_d(basis: &FormBasis, j: usize) -> NodalForm {
    FormField::element(basis, j).exterior_d()
}

/// `d*` of basis element `j`, pointwise.
pub fn codifferential(basis: &FormBasis, j: usize) -> NodalForm {
    FormField::element(basis, j).codifferential()
}

/// `∇` of basis element `j`, pointwise.
pub fn covariant_derivative(basis: &FormBasis, j: usize) -> NodalTensor {
    FormField::element(basis, j).covariant_derivative()
}

/// Global L2 product of two fields over the same basis.
pub fn l2_inner(a: &FormField, b: &FormField) -> Result<f64> {
    if !a.basis.same_space(b.basis) {
        return Err(Error::BasisMismatch("fields live on different bases".into()));
    }
    Ok(a.values().inner(&b.values(), a.basis.weights()))
}

/// Pointwise wedge product.
pub fn wedge(a: &FormField, b: &FormField) -> Result<NodalForm> {
    let n = a.basis.dim();
    let (p, q) = (a.degree(), b.degree());
    if p + q > n {
        return Err(Error::DegreeOverflow { p, q, n });
    }
    if !a.basis.compatible(b.basis) {
        return Err(Error::BasisMismatch("fields live on different grids".into()));
    }
    wedge_nodal(&a.values(), &b.values())
}

pub fn wedge_nodal(a: &NodalForm, b: &NodalForm) -> Result<NodalForm> {
    let n = a.n;
    if a.degree + b.degree > n {
        return Err(Error::DegreeOverflow {
            p: a.degree,
            q: b.degree,
            n,
        });
    }
    let mut values = Vec::new();
    for i in 0..a.nodes() {
        values.extend(pointwise::wedge(n, a.degree, a.at(i), b.degree, b.at(i)));
    }
    Ok(NodalForm {
        n,
        degree: a.degree + b.degree,
        values,
    })
}

/// Metric wedge `g∧θ` of a degree-(r-1) nodal form, as a degree-r
/// covariant-derivative-shaped tensor.
pub fn metric_wedge(theta: &NodalForm) -> NodalTensor {
    let n = theta.n;
    let r = theta.degree + 1;
    let alg = PointAlgebra::new(n, r);
    let block = n * alg.ncomp();
    let mut values = vec![0.0; theta.nodes() * block];
    for i in 0..theta.nodes() {
        alg.metric_wedge(theta.at(i), &mut values[i * block..(i + 1) * block]);
    }
    NodalTensor { n, degree: r, values }
}

/// Right-hand side `⟨basis_j, values⟩` for an L2 projection.
fn load_vector(target: &FormBasis, values: &NodalForm) -> DVector<f64> {
    let nc = target.ncomp();
    let mut w = DVector::zeros(values.values.len());
    for (node, wt) in target.weights().iter().enumerate() {
        for c in 0..nc {
            w[node * nc + c] = wt * values.values[node * nc + c];
        }
    }
    target.values() * w
}

/// L2 projection of nodal values onto `target`; returns the field and the
/// relative L2 defect `||v - Pv|| / ||v||`.
pub fn project<'a>(values: &NodalForm, target: &'a FormBasis) -> Result<(FormField<'a>, f64)> {
    if values.degree != target.degree() || values.n != target.dim() || values.nodes() != target.node_count() {
        return Err(Error::BasisMismatch(format!(
            "cannot project degree-{} values onto a degree-{} basis",
            values.degree,
            target.degree()
        )));
    }
    let chol = target.mass().clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let coeffs = chol.solve(&load_vector(target, values));
    let field = FormField::new(target, coeffs)?;
    let proj = field.values();
    let norm2 = values.inner(values, target.weights());
    let diff = NodalForm {
        n: values.n,
        degree: values.degree,
        values: values.values.iter().zip(&proj.values).map(|(a, b)| a - b).collect(),
    };
    let defect = if norm2 > 0.0 {
        (diff.inner(&diff, target.weights()) / norm2).max(0.0).sqrt()
    } else {
        0.0
    };
    Ok((field, defect))
}

/// Hodge star followed by L2 projection onto the degree-(n-r) `target`.
pub fn hodge_star<'a>(a: &FormField, target: &'a FormBasis) -> Result<FormField<'a>> {
    let n = a.basis.dim();
    let r = a.degree();
    if target.degree() != n - r || !target.compatible(a.basis) {
        return Err(Error::BasisMismatch(format!(
            "Hodge star of a degree-{r} form needs a compatible degree-{} target",
            n - r
        )));
    }
    let vals = a.values();
    let mut out = Vec::with_capacity(vals.nodes() * binomial(n, n - r));
    for i in 0..vals.nodes() {
        out.extend(pointwise::hodge(n, r, vals.at(i)));
    }
    let nodal = NodalForm {
        n,
        degree: n - r,
        values: out,
    };
    Ok(project(&nodal, target)?.0)
}

/// Associated form `θ = d*ω / (n - r + 1)`, projected onto the degree-(r-1) `target`.
pub fn associated_form<'a>(omega: &FormField, target: &'a FormBasis) -> Result<FormField<'a>> {
    let n = omega.basis.dim();
    let r = omega.degree();
    if r < 1 || target.degree() + 1 != r || !target.compatible(omega.basis) {
        return Err(Error::BasisMismatch(format!(
            "associated form of a degree-{r} form needs a compatible degree-{} target",
            r.saturating_sub(1)
        )));
    }
    let (theta, _) = project(&omega.codifferential(), target)?;
    Ok(theta.scaled(1.0 / (n - r + 1) as f64))
}

/// Gram matrix `Σ_nodes w ⟨row_i, row_j⟩` of per-element nodal data, with
/// its relative symmetry defect before symmetrization.
pub(crate) fn gram_with_defect(rows: &DMatrix<f64>, weights: &[f64], block: usize) -> (DMatrix<f64>, f64) {
    let s = weighted(rows, weights, block);
    let g = &s * s.transpose();
    let scale = g.amax();
    let defect = if scale > 0.0 { (&g - g.transpose()).amax() / scale } else { 0.0 };
    ((&g + g.transpose()) * 0.5, defect)
}
