//! The five numbers `b_r, t_r, k_r, p_r, c_r` and the checks relating them.
//!
//! Every number is the certified kernel dimension of one generalized
//! problem `Q v = λ M v`:
//!
//! | number | form        |
//! |--------|-------------|
//! | `b_r`  | `Qd + Qδ`   |
//! | `t_r`  | `Q3`        |
//! | `k_r`  | `Q3 + Qδ`   |
//! | `p_r`  | `Q3 + Qd`   |
//! | `c_r`  | `QB`        |

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::multi_index::{binomial, subsets};
use crate::forms::{build_basis, hodge_star, project, wedge_nodal, FormBasis, FormField};
use crate::geometry::{ManifoldSpec, QuadratureGrid};
use crate::operators::{
    assemble, classify_spectrum, generalized_eigen, quad, AssemblyDiagnostics, QuadForm, QuadraticForms,
    SpectrumResult, TolerancePolicy,
};

/// Relative residual allowed in the constant-curvature identities.
pub const IDENTITY_TOL: f64 = 1e-8;
/// Largest `|⟨κ, π⟩_M|` accepted between Killing and planarity kernels.
pub const ORTHOGONALITY_TOL: f64 = 1e-9;
/// Largest normalized `Q3` quotient accepted for Hodge duals of kernel forms.
pub const STAR_TOL: f64 = 1e-10;
/// Gram determinant below which wedge families count as dependent.
pub const GRAM_DET_MIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Number {
    pub value: usize,
    pub spectrum: SpectrumResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Numbers {
    pub b_r: Number,
    pub t_r: Number,
    pub k_r: Number,
    pub p_r: Number,
    pub c_r: Number,
}

impl Numbers {
    pub fn all_clean(&self) -> bool {
        [&self.b_r, &self.t_r, &self.k_r, &self.p_r, &self.c_r]
            .iter()
            .all(|x| x.spectrum.is_clean())
    }

    /// `(b, t, k, p, c)`
    pub fn values(&self) -> (usize, usize, usize, usize, usize) {
        (self.b_r.value, self.t_r.value, self.k_r.value, self.p_r.value, self.c_r.value)
    }
}

/// Certified kernel count plus the M-orthonormal kernel vectors (empty when
/// the spectrum is ambiguous).
fn solve(qf: &QuadraticForms, which: QuadForm, policy: &TolerancePolicy) -> Result<(Number, Vec<DVector<f64>>)> {
    let eig = generalized_eigen(&qf.matrix(which), &qf.mass)?;
    let spectrum = classify_spectrum(eig.values, policy);
    let vectors = if spectrum.is_clean() {
        (0..spectrum.kernel_dim).map(|i| eig.vectors.column(i).into_owned()).collect()
    } else {
        Vec::new()
    };
    Ok((
        Number {
            value: spectrum.kernel_dim,
            spectrum,
        },
        vectors,
    ))
}

pub fn betti(qf: &QuadraticForms, policy: &TolerancePolicy) -> Result<Number> {
    Ok(solve(qf, QuadForm::Hodge, policy)?.0)
}

pub fn tachibana(qf: &QuadraticForms, policy: &TolerancePolicy) -> Result<Number> {
    Ok(solve(qf, QuadForm::Tachibana, policy)?.0)
}

pub fn killing(qf: &QuadraticForms, policy: &TolerancePolicy) -> Result<Number> {
    Ok(solve(qf, QuadForm::KillingSum, policy)?.0)
}

pub fn planarity(qf: &QuadraticForms, policy: &TolerancePolicy) -> Result<Number> {
    Ok(solve(qf, QuadForm::PlanaritySum, policy)?.0)
}

pub fn parallel_number(qf: &QuadraticForms, policy: &TolerancePolicy) -> Result<Number> {
    Ok(solve(qf, QuadForm::Bochner, policy)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    pub t: usize,
    pub k: usize,
    pub p: usize,
    /// `C(n, r)`, only on flat manifolds.
    pub flat_t: Option<usize>,
}

pub fn closed_form_bounds(n: usize, r: usize, flat: bool) -> Bounds {
    Bounds {
        t: binomial(n + 2, r + 1),
        k: binomial(n + 1, r + 1),
        p: binomial(n + 1, r),
        flat_t: flat.then(|| binomial(n, r)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundsCheck {
    pub bounds: Bounds,
    pub t_ok: bool,
    pub k_ok: bool,
    pub p_ok: bool,
    pub flat_ok: Option<bool>,
    /// `c ≤ min(k, p) ≤ max(k, p) ≤ t` and `c ≤ b`.
    pub chain_ok: bool,
}

impl BoundsCheck {
    pub fn all_ok(&self) -> bool {
        self.t_ok && self.k_ok && self.p_ok && self.flat_ok.unwrap_or(true) && self.chain_ok
    }
}

fn bounds_for(manifold: &ManifoldSpec, r: usize, numbers: &Numbers) -> BoundsCheck {
    let flat = manifold.constant_curvature() == Some(0.0);
    let bounds = closed_form_bounds(manifold.dim(), r, flat);
    let (b, t, k, p, c) = numbers.values();
    BoundsCheck {
        bounds,
        t_ok: t <= bounds.t,
        k_ok: k <= bounds.k,
        p_ok: p <= bounds.p,
        flat_ok: bounds.flat_t.map(|ft| t <= ft),
        chain_ok: c <= k.min(p) && k.max(p) <= t && c <= b,
    }
}

pub fn check_bounds(report: &InvariantReport) -> BoundsCheck {
    bounds_for(&report.manifold, report.r, &report.numbers)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualityRecord {
    pub partner_degree: usize,
    /// `t_r = t_{n-r}`
    pub t_match: bool,
    /// `p_r = k_{n-r}`
    pub pk_match: bool,
    /// `k_r = p_{n-r}`
    pub kp_match: bool,
    /// Largest normalized degree-(n-r) `Q3` quotient over Hodge duals of the degree-r `Q3` kernel.
    pub star_residual: f64,
}

impl DualityRecord {
    pub fn holds(&self) -> bool {
        self.t_match && self.pk_match && self.kp_match && self.star_residual < STAR_TOL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRecord {
    /// `b_r = 0`
    pub applicable: bool,
    /// `t_r = p_r + k_r`, asserted only when applicable and every spectrum is clean.
    pub holds: Option<bool>,
    pub t_r: usize,
    pub p_plus_k: usize,
    pub orthogonality_defect: Option<f64>,
}

impl DecompositionRecord {
    pub fn passes(&self) -> bool {
        self.holds.unwrap_or(true) && self.orthogonality_defect.is_none_or(|d| d < ORTHOGONALITY_TOL)
    }
}

/// `t_r = p_r + k_r` when `b_r = 0`, plus the M-orthogonality of the two kernels.
pub fn check_decomposition(
    numbers: &Numbers,
    killing_kernel: &[DVector<f64>],
    planarity_kernel: &[DVector<f64>],
    mass: &DMatrix<f64>,
) -> DecompositionRecord {
    let applicable = numbers.b_r.value == 0 && numbers.b_r.spectrum.is_clean();
    let p_plus_k = numbers.p_r.value + numbers.k_r.value;
    let holds = (applicable && numbers.all_clean()).then_some(numbers.t_r.value == p_plus_k);
    let orthogonality_defect = applicable.then(|| {
        killing_kernel
            .iter()
            .flat_map(|kappa| planarity_kernel.iter().map(move |pi| quad_pair(mass, kappa, pi).abs()))
            .fold(0.0, f64::max)
    });
    DecompositionRecord {
        applicable,
        holds,
        t_r: numbers.t_r.value,
        p_plus_k,
        orthogonality_defect,
    }
}

fn quad_pair(m: &DMatrix<f64>, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.dot(&(m * b))
}

fn normalized(qf: &QuadraticForms, which: QuadForm, v: &DVector<f64>) -> f64 {
    qf.rayleigh(which, v) / qf.diagnostics.reference_scale.max(f64::MIN_POSITIVE)
}

fn field_vector(omega: &FormField, qf: &QuadraticForms) -> Result<DVector<f64>> {
    if omega.coeffs().len() != qf.size() || omega.degree() != qf.meta.degree || omega.basis().spec() != &qf.meta.manifold {
        return Err(Error::BasisMismatch("field and quadratic forms use different bases".into()));
    }
    let v = omega.coeffs().clone();
    if quad(&qf.mass, &v) <= 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(v)
}

fn require_curvature(c: f64, qf: &QuadraticForms) -> Result<()> {
    match qf.meta.manifold.constant_curvature() {
        Some(k) if (k - c).abs() <= 1e-12 * k.abs().max(1.0) => Ok(()),
        Some(k) => Err(Error::Config(format!("curvature {c} supplied, manifold has {k}"))),
        None => Err(Error::NotConstantCurvature),
    }
}

/// `|r/((n-r)(r+1)) Qd + 1/(n-r+1) Qδ - (n-r) C M| / M` on a conformal Killing form.
pub fn kashiwada_identity(omega: &FormField, c: f64, qf: &QuadraticForms, tol: f64) -> Result<f64> {
    require_curvature(c, qf)?;
    let v = field_vector(omega, qf)?;
    let q = normalized(qf, QuadForm::Tachibana, &v);
    if q >= tol {
        return Err(Error::NotInKernel {
            which: "conformal Killing",
            quotient: q,
        });
    }
    let (n, r) = (qf.meta.n as f64, qf.meta.degree as f64);
    let m = quad(&qf.mass, &v);
    let lhs = r / ((n - r) * (r + 1.0)) * quad(&qf.qd, &v) + quad(&qf.qdelta, &v) / (n - r + 1.0);
    Ok((lhs - (n - r) * c * m).abs() / m)
}

/// `|QB + (n-r) C M| / M` on a harmonic form.
pub fn harmonic_identity(omega: &FormField, c: f64, qf: &QuadraticForms, tol: f64) -> Result<f64> {
    require_curvature(c, qf)?;
    let v = field_vector(omega, qf)?;
    let q = normalized(qf, QuadForm::Hodge, &v);
    if q >= tol {
        return Err(Error::NotInKernel {
            which: "harmonic",
            quotient: q,
        });
    }
    let (n, r) = (qf.meta.n as f64, qf.meta.degree as f64);
    let m = quad(&qf.mass, &v);
    Ok((quad(&qf.qb, &v) + (n - r) * c * m).abs() / m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Membership {
    pub closed: bool,
    pub coclosed: bool,
    pub harmonic: bool,
    pub conformal_killing: bool,
    pub killing: bool,
    pub closed_conformal_killing: bool,
    pub parallel: bool,
}

impl Membership {
    /// Containments of the classification diagram.
    pub fn is_consistent(&self) -> bool {
        let implies = |a: bool, b: bool| !a || b;
        implies(self.parallel, self.killing && self.closed_conformal_killing)
            && implies(self.killing, self.conformal_killing && self.coclosed)
            && implies(self.closed_conformal_killing, self.conformal_killing && self.closed)
            && self.harmonic == (self.closed && self.coclosed)
    }
}

/// Rayleigh quotients divided by the mean `QB` eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quotients {
    pub exterior: f64,
    pub codifferential: f64,
    pub hodge: f64,
    pub tachibana: f64,
    pub killing_sum: f64,
    pub planarity_sum: f64,
    pub bochner: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub membership: Membership,
    pub quotients: Quotients,
}

pub fn classify(omega: &FormField, qf: &QuadraticForms, tol: f64) -> Result<Classification> {
    let v = field_vector(omega, qf)?;
    let q = |w| normalized(qf, w, &v);
    let quotients = Quotients {
        exterior: q(QuadForm::Exterior),
        codifferential: q(QuadForm::Codifferential),
        hodge: q(QuadForm::Hodge),
        tachibana: q(QuadForm::Tachibana),
        killing_sum: q(QuadForm::KillingSum),
        planarity_sum: q(QuadForm::PlanaritySum),
        bochner: q(QuadForm::Bochner),
    };
    let closed = quotients.exterior < tol;
    let coclosed = quotients.codifferential < tol;
    let conformal_killing = quotients.tachibana < tol;
    // Sums are kernels of intersections; derive them so the lattice holds exactly.
    let killing = conformal_killing && coclosed;
    let closed_conformal_killing = conformal_killing && closed;
    let membership = Membership {
        closed,
        coclosed,
        harmonic: closed && coclosed,
        conformal_killing,
        killing,
        closed_conformal_killing,
        parallel: quotients.bochner < tol && killing && closed_conformal_killing,
    };
    Ok(Classification { membership, quotients })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WedgeBound {
    pub h: usize,
    pub r: usize,
    /// Wedges that passed the `Q3` test.
    pub count: usize,
    pub max_rayleigh: f64,
    pub max_projection_defect: f64,
    /// Determinant of the unit-diagonal Gram matrix of the wedges.
    pub gram_determinant: f64,
    pub independent: bool,
}

impl WedgeBound {
    pub fn attains(&self) -> bool {
        self.independent && self.count == binomial(self.h, self.r)
    }
}

/// Builds every `r`-fold wedge of `h` parallel 1-forms and certifies the
/// family as independent conformal Killing forms on `target`.
pub fn wedge_lower_bound(
    parallel_one_forms: &[FormField],
    target: &FormBasis,
    qf: &QuadraticForms,
    tol: f64,
) -> Result<WedgeBound> {
    let h = parallel_one_forms.len();
    let r = target.degree();
    if r == 0 || r >= h {
        return Err(Error::Degree {
            degree: r,
            n: h,
            reason: "wedge bound needs 1 <= r < h".into(),
        });
    }
    if qf.size() != target.len() || qf.meta.degree != r {
        return Err(Error::BasisMismatch("quadratic forms do not match the target basis".into()));
    }
    let scale = qf.diagnostics.reference_scale.max(f64::MIN_POSITIVE);
    for omega in parallel_one_forms {
        if omega.degree() != 1 || !omega.basis().compatible(target) {
            return Err(Error::BasisMismatch("inputs must be 1-forms on the target grid".into()));
        }
        let w = omega.basis().weights();
        let vals = omega.values();
        let norm = vals.inner(&vals, w);
        if norm <= 0.0 {
            return Err(Error::ZeroField);
        }
        let nab = omega.covariant_derivative();
        let q = nab.inner(&nab, w) / norm / scale;
        if q >= tol {
            return Err(Error::NotParallel(q));
        }
    }
    let mut vectors = Vec::new();
    let mut max_rayleigh = 0.0_f64;
    let mut max_defect = 0.0_f64;
    let mut count = 0;
    for set in subsets(h, r) {
        let mut acc = parallel_one_forms[set[0]].values();
        for &i in &set[1..] {
            acc = wedge_nodal(&acc, &parallel_one_forms[i].values())?;
        }
        let (field, defect) = project(&acc, target)?;
        let v = field.coeffs().clone();
        let q = normalized(qf, QuadForm::Tachibana, &v);
        max_rayleigh = max_rayleigh.max(q);
        max_defect = max_defect.max(defect);
        if q < tol {
            count += 1;
        }
        vectors.push(v);
    }
    let k = vectors.len();
    let mut gram = DMatrix::from_fn(k, k, |i, j| quad_pair(&qf.mass, &vectors[i], &vectors[j]));
    let diag: Vec<f64> = (0..k).map(|i| gram[(i, i)].max(f64::MIN_POSITIVE).sqrt()).collect();
    for i in 0..k {
        for j in 0..k {
            gram[(i, j)] /= diag[i] * diag[j];
        }
    }
    let gram_determinant = gram.determinant();
    Ok(WedgeBound {
        h,
        r,
        count,
        max_rayleigh,
        max_projection_defect: max_defect,
        gram_determinant,
        independent: gram_determinant > GRAM_DET_MIN,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSource {
    Harmonic,
    Tachibana,
    Killing,
    Planarity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedForm {
    pub source: KernelSource,
    pub index: usize,
    pub classification: Classification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    /// Constant sectional curvature, when the manifold has one.
    pub curvature: Option<f64>,
    /// One entry per `Q3` kernel form.
    pub kashiwada: Vec<f64>,
    /// One entry per harmonic form.
    pub harmonic: Vec<f64>,
    pub refused: Option<String>,
}

impl IdentityResiduals {
    pub fn passes(&self) -> bool {
        self.kashiwada.iter().chain(&self.harmonic).all(|&x| x < IDENTITY_TOL)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub manifold: ManifoldSpec,
    pub n: usize,
    pub r: usize,
    pub cutoff: usize,
    pub resolution: usize,
    pub basis_size: usize,
    pub tolerances: TolerancePolicy,
    pub numbers: Numbers,
    pub bounds_ok: BoundsCheck,
    pub duality: Option<DualityRecord>,
    pub decomposition: DecompositionRecord,
    pub identity_residuals: IdentityResiduals,
    pub classification: Vec<ClassifiedForm>,
    pub diagnostics: AssemblyDiagnostics,
    /// False when any number came from an ambiguous spectrum.
    pub certifying: bool,
}

/// Versioned JSON envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub yano_report_v1: InvariantReport,
}

impl InvariantReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ReportDocument {
            yano_report_v1: self.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str::<ReportDocument>(text)?.yano_report_v1)
    }

    /// Human-readable names of every failed check; empty when all pass.
    pub fn failed_checks(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.certifying {
            out.push("ambiguous spectrum".to_string());
        }
        if !self.bounds_ok.all_ok() {
            out.push("bounds".to_string());
        }
        if !self.decomposition.passes() {
            out.push("decomposition".to_string());
        }
        if !self.identity_residuals.passes() {
            out.push("identity residuals".to_string());
        }
        if self.duality.is_some_and(|d| !d.holds()) {
            out.push("duality".to_string());
        }
        if self.classification.iter().any(|c| !c.classification.membership.is_consistent()) {
            out.push("classification lattice".to_string());
        }
        out
    }
}

/// Kernel vectors behind each certified number (empty if ambiguous).
#[derive(Debug, Clone, Default)]
pub struct Kernels {
    pub harmonic: Vec<DVector<f64>>,
    pub tachibana: Vec<DVector<f64>>,
    pub killing: Vec<DVector<f64>>,
    pub planarity: Vec<DVector<f64>>,
    pub parallel: Vec<DVector<f64>>,
}

/// Everything computed for one `(manifold, r)` job.
#[derive(Debug)]
pub struct DegreeAnalysis {
    pub basis: FormBasis,
    pub qf: QuadraticForms,
    pub kernels: Kernels,
    pub report: InvariantReport,
}

impl DegreeAnalysis {
    pub fn fields(&self, vectors: &[DVector<f64>]) -> Result<Vec<FormField<'_>>> {
        vectors.iter().map(|v| FormField::new(&self.basis, v.clone())).collect()
    }
}

pub fn analyze(grid: &QuadratureGrid, r: usize, cutoff: usize, policy: &TolerancePolicy) -> Result<DegreeAnalysis> {
    let spec = grid.spec();
    let basis = build_basis(spec, grid, r, cutoff)?;
    let qf = assemble(spec, grid, &basis)?;
    let (b_r, harmonic) = solve(&qf, QuadForm::Hodge, policy)?;
    let (t_r, tach) = solve(&qf, QuadForm::Tachibana, policy)?;
    let (k_r, kill) = solve(&qf, QuadForm::KillingSum, policy)?;
    let (p_r, plan) = solve(&qf, QuadForm::PlanaritySum, policy)?;
    let (c_r, par) = solve(&qf, QuadForm::Bochner, policy)?;
    let numbers = Numbers {
        b_r,
        t_r,
        k_r,
        p_r,
        c_r,
    };
    let kernels = Kernels {
        harmonic,
        tachibana: tach,
        killing: kill,
        planarity: plan,
        parallel: par,
    };
    let bounds_ok = bounds_for(spec, r, &numbers);
    let decomposition = check_decomposition(&numbers, &kernels.killing, &kernels.planarity, &qf.mass);

    let curvature = spec.constant_curvature();
    let identity_residuals = match curvature {
        Some(c) => {
            let mut kashiwada = Vec::new();
            for v in &kernels.tachibana {
                kashiwada.push(kashiwada_identity(&FormField::new(&basis, v.clone())?, c, &qf, policy.classify_tol)?);
            }
            let mut harm = Vec::new();
            for v in &kernels.harmonic {
                harm.push(harmonic_identity(&FormField::new(&basis, v.clone())?, c, &qf, policy.classify_tol)?);
            }
            IdentityResiduals {
                curvature,
                kashiwada,
                harmonic: harm,
                refused: None,
            }
        }
        None => IdentityResiduals {
            curvature: None,
            kashiwada: Vec::new(),
            harmonic: Vec::new(),
            refused: Some(Error::NotConstantCurvature.to_string()),
        },
    };

    let mut classification = Vec::new();
    for (source, vecs) in [
        (KernelSource::Harmonic, &kernels.harmonic),
        (KernelSource::Tachibana, &kernels.tachibana),
        (KernelSource::Killing, &kernels.killing),
        (KernelSource::Planarity, &kernels.planarity),
    ] {
        for (index, v) in vecs.iter().enumerate() {
            classification.push(ClassifiedForm {
                source,
                index,
                classification: classify(&FormField::new(&basis, v.clone())?, &qf, policy.classify_tol)?,
            });
        }
    }

    let report = InvariantReport {
        manifold: spec.clone(),
        n: spec.dim(),
        r,
        cutoff,
        resolution: grid.resolution(),
        basis_size: basis.len(),
        tolerances: *policy,
        certifying: numbers.all_clean(),
        numbers,
        bounds_ok,
        duality: None,
        decomposition,
        identity_residuals,
        classification,
        diagnostics: qf.diagnostics,
    };
    Ok(DegreeAnalysis {
        basis,
        qf,
        kernels,
        report,
    })
}

/// Compares degree `r` against degree `n - r` of the same job.
pub fn check_duality(a: &DegreeAnalysis, b: &DegreeAnalysis) -> Result<DualityRecord> {
    let (ra, rb) = (&a.report, &b.report);
    if ra.cutoff != rb.cutoff {
        return Err(Error::CutoffMismatch(ra.cutoff, rb.cutoff));
    }
    if ra.manifold != rb.manifold || ra.resolution != rb.resolution {
        return Err(Error::BasisMismatch("duality needs both degrees on one grid".into()));
    }
    if ra.r + rb.r != ra.n {
        return Err(Error::Degree {
            degree: rb.r,
            n: ra.n,
            reason: format!("partner of degree {} must be {}", ra.r, ra.n - ra.r),
        });
    }
    if !ra.numbers.t_r.spectrum.is_clean() {
        return Err(Error::Ambiguous {
            gap_ratio: ra.numbers.t_r.spectrum.gap_ratio,
            gap_min: ra.tolerances.gap_min,
        });
    }
    let mut star_residual = 0.0_f64;
    for v in &a.kernels.tachibana {
        let omega = FormField::new(&a.basis, v.clone())?;
        let dual = hodge_star(&omega, &b.basis)?;
        star_residual = star_residual.max(normalized(&b.qf, QuadForm::Tachibana, dual.coeffs()));
    }
    Ok(DualityRecord {
        partner_degree: rb.r,
        t_match: ra.numbers.t_r.value == rb.numbers.t_r.value,
        pk_match: ra.numbers.p_r.value == rb.numbers.k_r.value,
        kp_match: ra.numbers.k_r.value == rb.numbers.p_r.value,
        star_residual,
    })
}

/// Runs one job over several degrees sharing a grid and fills in duality
/// records wherever the partner degree is present.
pub fn analyze_degrees(
    grid: &QuadratureGrid,
    degrees: &[usize],
    cutoff: usize,
    policy: &TolerancePolicy,
) -> Result<Vec<DegreeAnalysis>> {
    let mut runs = degrees
        .iter()
        .map(|&r| analyze(grid, r, cutoff, policy))
        .collect::<Result<Vec<_>>>()?;
    let n = grid.dim();
    let records: Vec<Option<DualityRecord>> = (0..runs.len())
        .map(|i| {
            let partner = runs.iter().position(|x| x.report.r + runs[i].report.r == n)?;
            check_duality(&runs[i], &runs[partner]).ok()
        })
        .collect();
    for (run, rec) in runs.iter_mut().zip(records) {
        run.report.duality = rec;
    }
    Ok(runs)
}
