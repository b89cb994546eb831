//! Column/row subspaces that carry every coupling and power term.
//!
//! Signal couplings depend on `W_m` only through `f_{m,k}ᴴ W_m h_{ℓ,m}`;
//! everything else (relay powers, forwarded relay noise) is a norm that can
//! only shrink under projection. Writing `W_m = U_m X_m V_mᴴ` with orthonormal
//! bases of span{f_{m,k}} and span{h_{ℓ,m}} therefore loses nothing.

use crate::model::ChannelSet;
use crate::physics::BeamformerSet;
use crate::{CMatrix, CVector, Complex64};

const RANK_TOL: f64 = 1e-10;

fn orthonormal_basis(vs: &[&CVector], n: usize) -> CMatrix {
    let scale = vs.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut cols: Vec<CVector> = Vec::new();
    for v in vs {
        let mut r = (*v).clone();
        // two passes of modified Gram-Schmidt keep the basis orthonormal to
        // working precision even for nearly parallel channels
        for _ in 0..2 {
            for q in &cols {
                let c = q.dotc(&r);
                r -= q * c;
            }
        }
        let nr = r.norm();
        if nr > RANK_TOL * scale.max(f64::MIN_POSITIVE) {
            cols.push(r / Complex64::new(nr, 0.0));
        }
    }
    if cols.is_empty() {
        return CMatrix::zeros(n, 0);
    }
    CMatrix::from_columns(&cols)
}

#[derive(Debug, Clone)]
pub struct Subspace {
    pub u: Vec<CMatrix>,
    pub v: Vec<CMatrix>,
    /// `f̂[m][k] = U_mᴴ f_{m,k}`.
    pub f: Vec<Vec<CVector>>,
    /// `ĥ[m][ℓ] = V_mᴴ h_{ℓ,m}`.
    pub h: Vec<Vec<CVector>>,
}

impl Subspace {
    pub fn new(ch: &ChannelSet) -> Self {
        let n = ch.antennas();
        let users = ch.users();
        let mut s = Subspace { u: Vec::new(), v: Vec::new(), f: Vec::new(), h: Vec::new() };
        for m in 0..ch.relays() {
            let fs: Vec<&CVector> = (0..users).map(|k| &ch.f[m][k]).collect();
            let hs: Vec<&CVector> = (0..users).map(|l| &ch.h[l][m]).collect();
            let u = orthonormal_basis(&fs, n);
            let v = orthonormal_basis(&hs, n);
            s.f.push(fs.iter().map(|f| u.adjoint() * *f).collect());
            s.h.push(hs.iter().map(|h| v.adjoint() * *h).collect());
            s.u.push(u);
            s.v.push(v);
        }
        s
    }

    pub fn relays(&self) -> usize {
        self.u.len()
    }

    pub fn shape(&self, m: usize) -> (usize, usize) {
        (self.u[m].ncols(), self.v[m].ncols())
    }

    pub fn reduce(&self, w: &BeamformerSet) -> Vec<CMatrix> {
        (0..self.relays()).map(|m| self.u[m].adjoint() * &w.w[m] * &self.v[m]).collect()
    }

    pub fn expand(&self, x: &[CMatrix]) -> BeamformerSet {
        BeamformerSet { w: (0..self.relays()).map(|m| &self.u[m] * &x[m] * self.v[m].adjoint()).collect() }
    }
}
