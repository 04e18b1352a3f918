//! Exterior algebra at a single point, in orthonormal-frame components.
//!
//! Layouts: an r-form is `C(n, r)` increasing-index components; a covariant
//! derivative of an r-form (a `(0, r+1)` tensor skew in its last r slots)
//! is `n * C(n, r)` values with the derivative direction `k` outermost.
//! With these layouts the pointwise inner product `(1/r!) Σ_{all tuples}`
//! is the plain sum of stored products.

use super::multi_index::{binomial, FormIndex};
use crate::geometry::Connection;

/// Precomputed index tables for forms of degree `r` in dimension `n`.
#[derive(Debug, Clone)]
pub struct PointAlgebra {
    pub n: usize,
    pub r: usize,
    idx: FormIndex,
    lower: FormIndex,
    upper: FormIndex,
    // (I, a, j) -> component of I with slot a replaced by j
    replace: Vec<Option<(usize, f64)>>,
    // J in degree r+1, slot a -> (component of J without slot a)
    face: Vec<usize>,
    // (k, K) for K in degree r-1 -> component of (k, K...)
    coface: Vec<Option<(usize, f64)>>,
    // (k, I) -> component of the (r+1)-form (k, I...)
    prepend: Vec<Option<(usize, f64)>>,
}

impl PointAlgebra {
    pub fn new(n: usize, r: usize) -> Self {
        assert!(r <= n);
        let idx = FormIndex::new(n, r);
        let lower = FormIndex::new(n, r.saturating_sub(1));
        let upper = FormIndex::new(n, (r + 1).min(n));
        let mut replace = Vec::with_capacity(idx.len() * r * n);
        for set in idx.sets() {
            for a in 0..r {
                for j in 0..n {
                    let mut t = set.clone();
                    t[a] = j;
                    replace.push(idx.lookup(&t));
                }
            }
        }
        let mut face = Vec::new();
        if r < n {
            for set in upper.sets() {
                for a in 0..=r {
                    let mut t = set.clone();
                    t.remove(a);
                    face.push(idx.position(&t));
                }
            }
        }
        let mut coface = Vec::new();
        if r >= 1 {
            for k in 0..n {
                for set in lower.sets() {
                    let mut t = vec![k];
                    t.extend_from_slice(set);
                    coface.push(idx.lookup(&t));
                }
            }
        }
        let mut prepend = Vec::new();
        if r < n {
            for k in 0..n {
                for set in idx.sets() {
                    let mut t = vec![k];
                    t.extend_from_slice(set);
                    prepend.push(upper.lookup(&t));
                }
            }
        }
        Self {
            n,
            r,
            idx,
            lower,
            upper,
            replace,
            face,
            coface,
            prepend,
        }
    }

    pub fn ncomp(&self) -> usize {
        self.idx.len()
    }

    pub fn index(&self) -> &FormIndex {
        &self.idx
    }

    pub fn upper_len(&self) -> usize {
        if self.r < self.n {
            self.upper.len()
        } else {
            0
        }
    }

    pub fn lower_len(&self) -> usize {
        if self.r >= 1 {
            self.lower.len()
        } else {
            0
        }
    }

    /// `(∇_k ω)_I = e_k(ω_I) - Σ_a Σ_j Γ(k, i_a, j) ω_{I[a→j]}`.
    pub fn covariant(&self, conn: &Connection, u: &[f64], du: &[f64], out: &mut [f64]) {
        let (n, r, nc) = (self.n, self.r, self.ncomp());
        for k in 0..n {
            for c in 0..nc {
                let mut v = du[k * nc + c];
                for a in 0..r {
                    let i_a = self.idx.set(c)[a];
                    for j in 0..n {
                        let g = conn.get(k, i_a, j);
                        if g == 0.0 {
                            continue;
                        }
                        if let Some((t, s)) = self.replace[(c * r + a) * n + j] {
                            v -= g * s * u[t];
                        }
                    }
                }
                out[k * nc + c] = v;
            }
        }
    }

    /// `(dω)_J = Σ_a (-1)^a (∇_{j_a} ω)_{J∖j_a}`.
    pub fn exterior(&self, nabla: &[f64], out: &mut [f64]) {
        let nc = self.ncomp();
        let r = self.r;
        for (jdx, set) in self.upper.sets().iter().enumerate().take(self.upper_len()) {
            let mut v = 0.0;
            for (a, &ja) in set.iter().enumerate() {
                let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
                v += sign * nabla[ja * nc + self.face[jdx * (r + 1) + a]];
            }
            out[jdx] = v;
        }
    }

    /// `(d*ω)_K = -Σ_k (∇_k ω)_{k K}`.
    pub fn codifferential(&self, nabla: &[f64], out: &mut [f64]) {
        let nc = self.ncomp();
        let nl = self.lower_len();
        for (kdx, o) in out.iter_mut().enumerate().take(nl) {
            let mut v = 0.0;
            for k in 0..self.n {
                if let Some((c, s)) = self.coface[k * nl + kdx] {
                    v += s * nabla[k * nc + c];
                }
            }
            *o = -v;
        }
    }

    /// `(g∧θ)_{k; I} = Σ_{a=1}^{r} (-1)^a δ_{k i_a} θ_{I∖i_a}` for a degree-(r-1) θ.
    pub fn metric_wedge(&self, theta: &[f64], out: &mut [f64]) {
        let nc = self.ncomp();
        out.iter_mut().for_each(|x| *x = 0.0);
        for c in 0..nc {
            let set = self.idx.set(c);
            for (p, &ip) in set.iter().enumerate() {
                // 1-based slot a = p + 1
                let sign = if p % 2 == 0 { -1.0 } else { 1.0 };
                let mut rest = set.to_vec();
                rest.remove(p);
                let t = self.lower.position(&rest);
                out[ip * nc + c] += sign * theta[t];
            }
        }
    }

    /// Skew part of `∇ω` as a tensor: `A_{k; I} = (dω)_{k I} / (r+1)`.
    pub fn skew_part(&self, domega: &[f64], out: &mut [f64]) {
        let nc = self.ncomp();
        let inv = 1.0 / (self.r + 1) as f64;
        for k in 0..self.n {
            for c in 0..nc {
                out[k * nc + c] = match self.prepend.get(k * nc + c).copied().flatten() {
                    Some((j, s)) => inv * s * domega[j],
                    None => 0.0,
                };
            }
        }
    }

    /// Full alternation of a tensor skew in its last r slots, as an (r+1)-form.
    pub fn alternation(&self, tensor: &[f64], out: &mut [f64]) {
        self.exterior(tensor, out);
        let inv = 1.0 / (self.r + 1) as f64;
        out.iter_mut().take(self.upper_len()).for_each(|x| *x *= inv);
    }

    /// `D3 ω = ∇ω - dω/(r+1) - g∧θ` with `θ = d*ω/(n-r+1)`.
    pub fn conformal_killing(&self, nabla: &[f64], out: &mut [f64]) {
        let nc = self.ncomp();
        let mut buf_up = vec![0.0; self.upper_len()];
        let mut buf_low = vec![0.0; self.lower_len()];
        let mut skew = vec![0.0; self.n * nc];
        let mut gw = vec![0.0; self.n * nc];
        self.exterior(nabla, &mut buf_up);
        self.skew_part(&buf_up, &mut skew);
        if self.r >= 1 {
            self.codifferential(nabla, &mut buf_low);
            let s = 1.0 / (self.n - self.r + 1) as f64;
            buf_low.iter_mut().for_each(|x| *x *= s);
            self.metric_wedge(&buf_low, &mut gw);
        }
        for i in 0..self.n * nc {
            out[i] = nabla[i] - skew[i] - gw[i];
        }
    }
}

/// Pointwise wedge product of a p-form and a q-form in dimension n.
pub fn wedge(n: usize, p: usize, a: &[f64], q: usize, b: &[f64]) -> Vec<f64> {
    let ia = FormIndex::new(n, p);
    let ib = FormIndex::new(n, q);
    let out_idx = FormIndex::new(n, p + q);
    let mut out = vec![0.0; out_idx.len()];
    for (x, sa) in ia.sets().iter().enumerate() {
        if a[x] == 0.0 {
            continue;
        }
        for (y, sb) in ib.sets().iter().enumerate() {
            let mut t = sa.clone();
            t.extend_from_slice(sb);
            if let Some((z, s)) = out_idx.lookup(&t) {
                out[z] += s * a[x] * b[y];
            }
        }
    }
    out
}

/// Pointwise Hodge star for the orientation `e^1 ∧ ... ∧ e^n`.
pub fn hodge(n: usize, r: usize, a: &[f64]) -> Vec<f64> {
    let idx = FormIndex::new(n, r);
    let co = FormIndex::new(n, n - r);
    let mut out = vec![0.0; binomial(n, n - r)];
    for (x, set) in idx.sets().iter().enumerate() {
        let comp: Vec<usize> = (0..n).filter(|i| !set.contains(i)).collect();
        let mut t = set.clone();
        t.extend_from_slice(&comp);
        let (_, s) = idx_sign(&t);
        out[co.position(&comp)] += s * a[x];
    }
    out
}

fn idx_sign(t: &[usize]) -> (Vec<usize>, f64) {
    super::multi_index::sort_sign(t).expect("distinct indices")
}
