//! Second-order cone algebra: Jordan product, Nesterov-Todd scaling and
//! step-to-boundary computation. A vector `v = (v₀, v₁)` lies in the cone
//! when `v₀ ≥ ‖v₁‖`; dimension one reduces to the nonnegative ray.

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `v₀² − ‖v₁‖²` evaluated as a product to limit cancellation.
pub fn jnorm_sqr(v: &[f64]) -> f64 {
    let t = dot(&v[1..], &v[1..]).sqrt();
    (v[0] - t) * (v[0] + t)
}

/// `u ∘ v = (uᵀv, u₀v₁ + v₀u₁)`.
pub fn jordan_prod(u: &[f64], v: &[f64], out: &mut [f64]) {
    out[0] = dot(u, v);
    for i in 1..u.len() {
        out[i] = u[0] * v[i] + v[0] * u[i];
    }
}

/// Solves `λ ∘ x = r` for `x`; `λ` must be interior.
pub fn jordan_div(lambda: &[f64], r: &[f64], out: &mut [f64]) {
    let det = jnorm_sqr(lambda);
    let l0 = lambda[0];
    let x0 = (l0 * r[0] - dot(&lambda[1..], &r[1..])) / det;
    out[0] = x0;
    for i in 1..lambda.len() {
        out[i] = (r[i] - x0 * lambda[i]) / l0;
    }
}

/// Largest `α ≥ 0` keeping `v + α dv` in the cone, for interior `v`.
pub fn max_step(v: &[f64], dv: &[f64]) -> f64 {
    if v.len() == 1 {
        return if dv[0] < 0.0 { -v[0] / dv[0] } else { f64::INFINITY };
    }
    let a = jnorm_sqr(dv);
    let b = 2.0 * (v[0] * dv[0] - dot(&v[1..], &dv[1..]));
    let c = jnorm_sqr(v).max(0.0);
    let mut best = f64::INFINITY;
    let mut consider = |r: f64| {
        if r > 0.0 && r < best {
            best = r;
        }
    };
    if a == 0.0 {
        if b < 0.0 {
            consider(-c / b);
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc >= 0.0 {
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            if q != 0.0 {
                consider(q / a);
                consider(c / q);
            } else {
                consider((-c / a).max(0.0).sqrt());
            }
        }
    }
    if dv[0] < 0.0 {
        best = best.min(-v[0] / dv[0]);
    }
    best
}

/// Nesterov-Todd scaling `W = β W̄` of one cone block, with `λ = W z = W⁻¹ s`.
#[derive(Debug, Clone)]
pub struct Scaling {
    pub beta: f64,
    pub wbar: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl Scaling {
    pub fn identity(dim: usize) -> Self {
        let mut wbar = vec![0.0; dim];
        wbar[0] = 1.0;
        Scaling { beta: 1.0, wbar, lambda: Vec::new() }
    }

    /// Scaling for strictly interior `s` and `z`; `None` if either has left
    /// the cone numerically.
    pub fn nt(s: &[f64], z: &[f64]) -> Option<Self> {
        let sjs = jnorm_sqr(s);
        let zjz = jnorm_sqr(z);
        if !(sjs > 0.0 && zjz > 0.0 && s[0] > 0.0 && z[0] > 0.0) {
            return None;
        }
        let (ss, zz) = (sjs.sqrt(), zjz.sqrt());
        let dim = s.len();
        let sbar: Vec<f64> = s.iter().map(|v| v / ss).collect();
        let zbar: Vec<f64> = z.iter().map(|v| v / zz).collect();
        let gamma = (0.5 * (1.0 + dot(&sbar, &zbar))).sqrt();
        let mut wbar = vec![0.0; dim];
        wbar[0] = (sbar[0] + zbar[0]) / (2.0 * gamma);
        for i in 1..dim {
            wbar[i] = (sbar[i] - zbar[i]) / (2.0 * gamma);
        }
        // keep w̄ on the unit hyperboloid despite rounding
        let t = dot(&wbar[1..], &wbar[1..]);
        wbar[0] = (1.0 + t).sqrt();
        let mut sc = Scaling { beta: (ss / zz).sqrt(), wbar, lambda: vec![0.0; dim] };
        let mut lambda = vec![0.0; dim];
        sc.apply_w(z, &mut lambda);
        sc.lambda = lambda;
        Some(sc)
    }

    fn wbar_apply(&self, v: &[f64], out: &mut [f64], inverse: bool) {
        let w = &self.wbar;
        let w1v1 = dot(&w[1..], &v[1..]);
        let sign = if inverse { -1.0 } else { 1.0 };
        out[0] = w[0] * v[0] + sign * w1v1;
        let coef = sign * v[0] + w1v1 / (1.0 + w[0]);
        for i in 1..v.len() {
            out[i] = v[i] + coef * w[i];
        }
    }

    pub fn apply_w(&self, v: &[f64], out: &mut [f64]) {
        self.wbar_apply(v, out, false);
        for o in out.iter_mut() {
            *o *= self.beta;
        }
    }

    pub fn apply_winv(&self, v: &[f64], out: &mut [f64]) {
        self.wbar_apply(v, out, true);
        for o in out.iter_mut() {
            *o /= self.beta;
        }
    }

    /// `W² v = β²(2 w̄ (w̄ᵀv) − J v)`.
    pub fn apply_w2(&self, v: &[f64], out: &mut [f64]) {
        let w = &self.wbar;
        let b2 = self.beta * self.beta;
        let t = 2.0 * dot(w, v);
        out[0] = b2 * (t * w[0] - v[0]);
        for i in 1..v.len() {
            out[i] = b2 * (t * w[i] + v[i]);
        }
    }

    /// `W⁻² v = β⁻²(2 u (uᵀv) − J v)` with `u = J w̄`.
    pub fn apply_winv2(&self, v: &[f64], out: &mut [f64]) {
        let w = &self.wbar;
        let ib2 = 1.0 / (self.beta * self.beta);
        let t = 2.0 * (w[0] * v[0] - dot(&w[1..], &v[1..]));
        out[0] = ib2 * (t * w[0] - v[0]);
        for i in 1..v.len() {
            out[i] = ib2 * (-t * w[i] + v[i]);
        }
    }
}
