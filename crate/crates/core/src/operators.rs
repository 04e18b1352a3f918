//! Gram matrices of the elliptic quadratic forms and certified kernel
//! dimensions of the generalized problems `Q v = λ M v`.
//!
//! With `|∇ω|² = |dω|²/(r+1) + |d*ω|²/(n-r+1) + |D3 ω|²` holding pointwise,
//! the conformal Killing energy is `Q3 = QB - Qd/(r+1) - Qδ/(n-r+1)`.
//! Kernels of intersections are kernels of sums of these PSD forms.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::field::gram_with_defect;
use crate::forms::{FormBasis, FormField};
use crate::geometry::{ManifoldSpec, QuadratureGrid};

/// Symmetry defect above which quadrature is deemed under-resolved.
pub const SYMMETRY_LIMIT: f64 = 1e-8;
/// Allowed negative excursion of `Q3`, relative to `||QB||`.
pub const PSD_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TolerancePolicy {
    pub abs_tol: f64,
    pub gap_min: f64,
    pub classify_tol: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            gap_min: 1e3,
            classify_tol: 1e-7,
        }
    }
}

/// Selector for the quadratic forms (and their sums) used downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadForm {
    Mass,
    Exterior,
    Codifferential,
    /// `Qd + Qδ`
    Hodge,
    /// `Q3`
    Tachibana,
    /// `QB`
    Bochner,
    /// `Q3 + Qδ`
    KillingSum,
    /// `Q3 + Qd`
    PlanaritySum,
}

impl QuadForm {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "mass" => Self::Mass,
            "exterior" => Self::Exterior,
            "codifferential" => Self::Codifferential,
            "hodge" => Self::Hodge,
            "tachibana" => Self::Tachibana,
            "bochner" => Self::Bochner,
            "killing_sum" => Self::KillingSum,
            "planarity_sum" => Self::PlanaritySum,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormsMeta {
    pub manifold: ManifoldSpec,
    pub n: usize,
    pub degree: usize,
    pub cutoff: usize,
    pub resolution: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssemblyDiagnostics {
    pub symmetry_defect: f64,
    pub q3_min_eig: f64,
    pub qb_norm: f64,
    /// Mean generalized eigenvalue of `QB`; the scale for normalized Rayleigh quotients.
    pub reference_scale: f64,
}

#[derive(Debug, Clone)]
pub struct QuadraticForms {
    pub mass: DMatrix<f64>,
    pub qd: DMatrix<f64>,
    pub qdelta: DMatrix<f64>,
    pub qb: DMatrix<f64>,
    pub q3: DMatrix<f64>,
    pub meta: FormsMeta,
    pub diagnostics: AssemblyDiagnostics,
}

impl QuadraticForms {
    pub fn matrix(&self, which: QuadForm) -> DMatrix<f64> {
        match which {
            QuadForm::Mass => self.mass.clone(),
            QuadForm::Exterior => self.qd.clone(),
            QuadForm::Codifferential => self.qdelta.clone(),
            QuadForm::Hodge => &self.qd + &self.qdelta,
            QuadForm::Tachibana => self.q3.clone(),
            QuadForm::Bochner => self.qb.clone(),
            QuadForm::KillingSum => &self.q3 + &self.qdelta,
            QuadForm::PlanaritySum => &self.q3 + &self.qd,
        }
    }

    /// `v^T Q v / v^T M v`.
    pub fn rayleigh(&self, which: QuadForm, v: &DVector<f64>) -> f64 {
        let num = match which {
            QuadForm::Hodge => quad(&self.qd, v) + quad(&self.qdelta, v),
            QuadForm::KillingSum => quad(&self.q3, v) + quad(&self.qdelta, v),
            QuadForm::PlanaritySum => quad(&self.q3, v) + quad(&self.qd, v),
            QuadForm::Mass => quad(&self.mass, v),
            QuadForm::Exterior => quad(&self.qd, v),
            QuadForm::Codifferential => quad(&self.qdelta, v),
            QuadForm::Tachibana => quad(&self.q3, v),
            QuadForm::Bochner => quad(&self.qb, v),
        };
        num / quad(&self.mass, v)
    }

    pub fn size(&self) -> usize {
        self.mass.nrows()
    }
}

pub(crate) fn quad(q: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    v.dot(&(q * v))
}

/// Per-element nodal rows of `d`, `d*` and `D3` on `basis`.
pub(crate) struct DerivedRows {
    pub d: DMatrix<f64>,
    pub dstar: DMatrix<f64>,
}

pub(crate) fn derived_rows(basis: &FormBasis) -> DerivedRows {
    let alg = basis.algebra();
    let (n, nc) = (basis.dim(), basis.ncomp());
    let (up, low) = (alg.upper_len(), alg.lower_len());
    let nodes = basis.node_count();
    let size = basis.len();
    let mut d = DMatrix::zeros(size, nodes * up);
    let mut dstar = DMatrix::zeros(size, nodes * low);
    let mut nab = vec![0.0; n * nc];
    let mut bu = vec![0.0; up];
    let mut bl = vec![0.0; low];
    for e in 0..size {
        for node in 0..nodes {
            for (c, x) in nab.iter_mut().enumerate() {
                *x = basis.nabla()[(e, node * n * nc + c)];
            }
            alg.exterior(&nab, &mut bu);
            alg.codifferential(&nab, &mut bl);
            for (c, x) in bu.iter().enumerate() {
                d[(e, node * up + c)] = *x;
            }
            for (c, x) in bl.iter().enumerate() {
                dstar[(e, node * low + c)] = *x;
            }
        }
    }
    DerivedRows { d, dstar }
}

/// Gram matrix of `D3` computed directly from the pointwise operator.
pub fn direct_q3(basis: &FormBasis) -> DMatrix<f64> {
    let alg = basis.algebra();
    let block = basis.dim() * basis.ncomp();
    let nodes = basis.node_count();
    let mut rows = DMatrix::zeros(basis.len(), nodes * block);
    let mut nab = vec![0.0; block];
    let mut out = vec![0.0; block];
    for e in 0..basis.len() {
        for node in 0..nodes {
            for (c, x) in nab.iter_mut().enumerate() {
                *x = basis.nabla()[(e, node * block + c)];
            }
            alg.conformal_killing(&nab, &mut out);
            for (c, x) in out.iter().enumerate() {
                rows[(e, node * block + c)] = *x;
            }
        }
    }
    gram_with_defect(&rows, basis.weights(), block).0
}

pub fn assemble(spec: &ManifoldSpec, grid: &QuadratureGrid, basis: &FormBasis) -> Result<QuadraticForms> {
    if basis.spec() != spec || grid.spec() != spec || basis.resolution() != grid.resolution() {
        return Err(Error::BasisMismatch("basis was not built on this grid".into()));
    }
    let (n, r) = (basis.dim(), basis.degree());
    if r < 1 || r >= n {
        return Err(Error::Degree {
            degree: r,
            n,
            reason: "quadratic forms need 1 <= r <= n - 1".into(),
        });
    }
    let rows = derived_rows(basis);
    let alg = basis.algebra();
    let w = basis.weights();
    let (mass, e0) = gram_with_defect(basis.values(), w, basis.ncomp());
    let (qd, e1) = gram_with_defect(&rows.d, w, alg.upper_len());
    let (qdelta, e2) = gram_with_defect(&rows.dstar, w, alg.lower_len());
    let (qb, e3) = gram_with_defect(basis.nabla(), w, n * basis.ncomp());
    let symmetry_defect = e0.max(e1).max(e2).max(e3);
    if symmetry_defect > SYMMETRY_LIMIT {
        return Err(Error::UnderResolved {
            defect: symmetry_defect,
            limit: SYMMETRY_LIMIT,
        });
    }
    let q3 = &qb - &qd * (1.0 / (r + 1) as f64) - &qdelta * (1.0 / (n - r + 1) as f64);
    let q3 = (&q3 + q3.transpose()) * 0.5;

    let qb_norm = qb.symmetric_eigenvalues().max().max(0.0);
    let q3_min_eig = q3.symmetric_eigenvalues().min();
    if q3_min_eig < -PSD_SLACK * qb_norm {
        return Err(Error::Convention {
            min_eig: q3_min_eig,
            qb_norm,
        });
    }
    let chol = mass.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let reference_scale = chol.solve(&qb).trace() / mass.nrows() as f64;

    Ok(QuadraticForms {
        mass,
        qd,
        qdelta,
        qb,
        q3,
        meta: FormsMeta {
            manifold: spec.clone(),
            n,
            degree: r,
            cutoff: basis.cutoff(),
            resolution: basis.resolution(),
        },
        diagnostics: AssemblyDiagnostics {
            symmetry_defect,
            q3_min_eig,
            qb_norm,
            reference_scale,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumStatus {
    Clean,
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<f64>,
    pub kernel_dim: usize,
    pub abs_tol_used: f64,
    pub scale: f64,
    pub threshold: f64,
    pub gap_ratio: f64,
    pub status: SpectrumStatus,
}

impl SpectrumResult {
    pub fn is_clean(&self) -> bool {
        self.status == SpectrumStatus::Clean
    }
}

/// Ascending generalized eigenvalues and M-orthonormal eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct GeneralizedEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Solves `Q v = λ M v` through the Cholesky reduction `L^{-1} Q L^{-T}`.
pub fn generalized_eigen(q: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<GeneralizedEigen> {
    let size = m.nrows();
    if q.nrows() != size || q.ncols() != size || m.ncols() != size {
        return Err(Error::BasisMismatch("matrix shapes differ".into()));
    }
    let chol = m.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    let linv_q = l
        .solve_lower_triangular(q)
        .ok_or(Error::NotPositiveDefinite)?;
    let a = l
        .solve_lower_triangular(&linv_q.transpose())
        .ok_or(Error::NotPositiveDefinite)?;
    let a = (&a + a.transpose()) * 0.5;
    let off_diag = {
        let mut s = 0.0;
        for i in 0..size {
            for j in 0..size {
                if i != j {
                    s += a[(i, j)] * a[(i, j)];
                }
            }
        }
        s.sqrt()
    };
    let eig = SymmetricEigen::try_new(a, f64::EPSILON, 1000 * size.max(1)).ok_or(Error::NonConvergence {
        size,
        residual: off_diag,
    })?;
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut y = DMatrix::zeros(size, size);
    for (col, &i) in order.iter().enumerate() {
        y.set_column(col, &eig.eigenvectors.column(i));
    }
    let vectors = l
        .transpose()
        .solve_upper_triangular(&y)
        .ok_or(Error::NotPositiveDefinite)?;
    Ok(GeneralizedEigen { values, vectors })
}

/// Kernel count and gap diagnostics for an ascending spectrum.
pub fn classify_spectrum(eigenvalues: Vec<f64>, policy: &TolerancePolicy) -> SpectrumResult {
    let size = eigenvalues.len();
    let top = size.div_ceil(10).max(1).min(size.max(1));
    let scale = if size == 0 {
        0.0
    } else {
        eigenvalues[size - top..].iter().sum::<f64>() / top as f64
    };
    let (kernel_dim, threshold, gap_ratio) = if scale <= f64::MIN_POSITIVE {
        (size, 0.0, f64::INFINITY)
    } else {
        let threshold = policy.abs_tol * scale;
        let k = eigenvalues.iter().take_while(|&&l| l < threshold).count();
        let gap = if k == size {
            f64::INFINITY
        } else if k == 0 {
            eigenvalues[0] / threshold
        } else {
            eigenvalues[k] / eigenvalues[k - 1].max(1e-300)
        };
        (k, threshold, gap)
    };
    let status = if gap_ratio >= policy.gap_min {
        SpectrumStatus::Clean
    } else {
        SpectrumStatus::Ambiguous
    };
    SpectrumResult {
        eigenvalues,
        kernel_dim,
        abs_tol_used: policy.abs_tol,
        scale,
        threshold,
        gap_ratio,
        status,
    }
}

pub fn kernel_dim(q: &DMatrix<f64>, m: &DMatrix<f64>, policy: &TolerancePolicy) -> Result<SpectrumResult> {
    let eig = generalized_eigen(q, m)?;
    Ok(classify_spectrum(eig.values, policy))
}

/// M-orthonormal kernel vectors; refuses ambiguous spectra.
pub fn kernel_basis(q: &DMatrix<f64>, m: &DMatrix<f64>, policy: &TolerancePolicy) -> Result<Vec<DVector<f64>>> {
    let eig = generalized_eigen(q, m)?;
    let spec = classify_spectrum(eig.values.clone(), policy);
    if !spec.is_clean() {
        return Err(Error::Ambiguous {
            gap_ratio: spec.gap_ratio,
            gap_min: policy.gap_min,
        });
    }
    Ok((0..spec.kernel_dim).map(|i| eig.vectors.column(i).into_owned()).collect())
}

/// Kernel of a selected form as fields over `basis`.
pub fn kernel_fields<'a>(
    basis: &'a FormBasis,
    qf: &QuadraticForms,
    which: QuadForm,
    policy: &TolerancePolicy,
) -> Result<Vec<FormField<'a>>> {
    kernel_basis(&qf.matrix(which), &qf.mass, policy)?
        .into_iter()
        .map(|v| FormField::new(basis, v))
        .collect()
}
