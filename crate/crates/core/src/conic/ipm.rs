//! Dense primal-dual interior-point method for second-order cone programs in
//! the standard form
//!
//! ```text
//! minimize    cᵀx
//! subject to  Ax = b,  Gx + s = h,  s ∈ K
//! ```
//!
//! where `K` is a product of second-order cones (a one-dimensional cone is a
//! nonnegative ray). The iteration works on the homogeneous self-dual
//! embedding with Nesterov-Todd scaling and a Mehrotra predictor-corrector,
//! following the structure of `conelp` in CVXOPT. Linear systems are reduced
//! to the normal matrix `GᵀW⁻²G`, factored by a dense Cholesky, and polished
//! by iterative refinement against the unreduced KKT operator.

use super::soc;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub infeas_tol: f64,
    pub max_iter: usize,
    pub step_fraction: f64,
    pub refine_steps: usize,
    /// Primal residual and gap level at which a stalled solve still returns
    /// its best iterate, flagged as reduced accuracy.
    pub reduced_tol: f64,
    /// Dual residual allowed for a reduced-accuracy exit.
    pub reduced_dual_tol: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            feas_tol: 1e-8,
            gap_tol: 1e-7,
            infeas_tol: 1e-8,
            max_iter: 100,
            step_fraction: 0.99,
            refine_steps: 10,
            reduced_tol: 1e-6,
            reduced_dual_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpmStatus {
    Optimal,
    ReducedAccuracy,
    PrimalInfeasible,
    DualInfeasible,
    NumericalFailure,
    IterationLimit,
}

#[derive(Debug, Clone, Default)]
pub struct SparseRow {
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
}

/// One cone block: `s_block = h − G_block x`, with `G_block` stored densely
/// over the block's column support.
#[derive(Debug, Clone)]
pub struct Block {
    pub dim: usize,
    pub cols: Vec<usize>,
    /// Row-major `dim × cols.len()`.
    pub g: Vec<f64>,
    pub h: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct StandardForm {
    pub n: usize,
    pub c: Vec<f64>,
    pub a: Vec<SparseRow>,
    pub b: Vec<f64>,
    pub blocks: Vec<Block>,
}

#[derive(Debug, Clone)]
pub struct IpmResult {
    pub status: IpmStatus,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub s: Vec<f64>,
    pub pcost: f64,
    pub dcost: f64,
    pub pres: f64,
    pub dres: f64,
    pub gap: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

struct Prepared<'a> {
    f: &'a StandardForm,
    offsets: Vec<usize>,
    m: usize,
    /// `G_cᵀ J G_c` per block, row-major over the block's columns.
    gjg: Vec<Vec<f64>>,
    h: Vec<f64>,
}

impl<'a> Prepared<'a> {
    fn new(f: &'a StandardForm) -> Self {
        let mut offsets = Vec::with_capacity(f.blocks.len());
        let mut m = 0;
        let mut h = Vec::new();
        let mut gjg = Vec::with_capacity(f.blocks.len());
        for blk in &f.blocks {
            offsets.push(m);
            m += blk.dim;
            h.extend_from_slice(&blk.h);
            let nc = blk.cols.len();
            let mut q = vec![0.0; nc * nc];
            for r in 0..blk.dim {
                let row = &blk.g[r * nc..(r + 1) * nc];
                let sign = if r == 0 { 1.0 } else { -1.0 };
                for i in 0..nc {
                    let gi = sign * row[i];
                    if gi == 0.0 {
                        continue;
                    }
                    for j in 0..=i {
                        q[i * nc + j] += gi * row[j];
                    }
                }
            }
            gjg.push(q);
        }
        Prepared { f, offsets, m, gjg, h }
    }

    /// `out = G x`.
    fn gx(&self, x: &[f64], out: &mut [f64]) {
        for (bi, blk) in self.f.blocks.iter().enumerate() {
            let nc = blk.cols.len();
            let o = self.offsets[bi];
            for r in 0..blk.dim {
                let row = &blk.g[r * nc..(r + 1) * nc];
                out[o + r] = row.iter().zip(&blk.cols).map(|(g, &c)| g * x[c]).sum();
            }
        }
    }

    /// `out += Gᵀ z`.
    fn gtz_add(&self, z: &[f64], out: &mut [f64]) {
        for (bi, blk) in self.f.blocks.iter().enumerate() {
            let nc = blk.cols.len();
            let o = self.offsets[bi];
            for r in 0..blk.dim {
                let zr = z[o + r];
                if zr == 0.0 {
                    continue;
                }
                let row = &blk.g[r * nc..(r + 1) * nc];
                for (g, &c) in row.iter().zip(&blk.cols) {
                    out[c] += g * zr;
                }
            }
        }
    }

    fn ax(&self, x: &[f64], out: &mut [f64]) {
        for (r, row) in self.f.a.iter().enumerate() {
            out[r] = row.idx.iter().zip(&row.val).map(|(&i, v)| v * x[i]).sum();
        }
    }

    fn aty_add(&self, y: &[f64], out: &mut [f64]) {
        for (r, row) in self.f.a.iter().enumerate() {
            for (&i, v) in row.idx.iter().zip(&row.val) {
                out[i] += v * y[r];
            }
        }
    }

    fn block_range(&self, bi: usize) -> std::ops::Range<usize> {
        self.offsets[bi]..self.offsets[bi] + self.f.blocks[bi].dim
    }
}

/// Cholesky factor of a symmetric positive definite matrix (lower triangle,
/// row-major). Tiny or negative pivots are replaced by `floor`.
fn cholesky_in_place(a: &mut [f64], n: usize, floor: f64) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !d.is_finite() {
            return false;
        }
        if d <= floor {
            d = floor;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        let inv = 1.0 / d;
        for i in j + 1..n {
            let (ri, rj) = (i * n, j * n);
            let mut v = a[ri + j];
            for k in 0..j {
                v -= a[ri + k] * a[rj + k];
            }
            a[ri + j] = v * inv;
        }
    }
    true
}

fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut v = b[i];
        let row = &l[i * n..i * n + i];
        for (k, lk) in row.iter().enumerate() {
            v -= lk * b[k];
        }
        b[i] = v / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut v = b[i];
        for k in i + 1..n {
            v -= l[k * n + i] * b[k];
        }
        b[i] = v / l[i * n + i];
    }
}

struct Kkt {
    n: usize,
    p: usize,
    l: Vec<f64>,
    hinv_at: Vec<Vec<f64>>,
    schur: Vec<f64>,
}

impl Kkt {
    fn factor(pr: &Prepared, sc: &[soc::Scaling]) -> Option<Kkt> {
        let f = pr.f;
        let n = f.n;
        let mut hm = vec![0.0; n * n];
        for (bi, blk) in f.blocks.iter().enumerate() {
            let nc = blk.cols.len();
            let s = &sc[bi];
            let inv_b2 = 1.0 / (s.beta * s.beta);
            // u = J w̄
            let mut gtu = vec![0.0; nc];
            for r in 0..blk.dim {
                let ur = if r == 0 { s.wbar[0] } else { -s.wbar[r] };
                if ur == 0.0 {
                    continue;
                }
                axpy(ur, &blk.g[r * nc..(r + 1) * nc], &mut gtu);
            }
            let q = &pr.gjg[bi];
            for i in 0..nc {
                let ci = blk.cols[i];
                let ui = 2.0 * gtu[i];
                for j in 0..=i {
                    let cj = blk.cols[j];
                    let v = inv_b2 * (ui * gtu[j] - q[i * nc + j]);
                    if ci >= cj {
                        hm[ci * n + cj] += v;
                    } else {
                        hm[cj * n + ci] += v;
                    }
                }
            }
        }
        let maxd = (0..n).map(|i| hm[i * n + i].abs()).fold(0.0, f64::max).max(1.0);
        let reg = 1e-13 * maxd;
        for i in 0..n {
            hm[i * n + i] += reg;
        }
        if !cholesky_in_place(&mut hm, n, 1e-14 * maxd) {
            return None;
        }
        let p = f.a.len();
        let mut hinv_at = Vec::with_capacity(p);
        for row in &f.a {
            let mut col = vec![0.0; n];
            for (&i, v) in row.idx.iter().zip(&row.val) {
                col[i] = *v;
            }
            cholesky_solve(&hm, n, &mut col);
            hinv_at.push(col);
        }
        let mut schur = vec![0.0; p * p];
        for i in 0..p {
            for j in 0..=i {
                let row = &f.a[i];
                schur[i * p + j] = row.idx.iter().zip(&row.val).map(|(&c, v)| v * hinv_at[j][c]).sum();
            }
        }
        if p > 0 {
            let maxs = (0..p).map(|i| schur[i * p + i].abs()).fold(0.0, f64::max).max(1e-300);
            if !cholesky_in_place(&mut schur, p, 1e-14 * maxs) {
                return None;
            }
        }
        Some(Kkt { n, p, l: hm, hinv_at, schur })
    }

    /// One unrefined solve of `[0 Aᵀ Gᵀ; A 0 0; G 0 −W²] (x, y, z) = (bx, by, bz)`.
    fn solve_once(&self, pr: &Prepared, sc: &[soc::Scaling], bx: &[f64], by: &[f64], bz: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut w2bz = vec![0.0; pr.m];
        for (bi, s) in sc.iter().enumerate() {
            let r = pr.block_range(bi);
            s.apply_winv2(&bz[r.clone()], &mut w2bz[r]);
        }
        let mut rhs = bx.to_vec();
        pr.gtz_add(&w2bz, &mut rhs);
        cholesky_solve(&self.l, self.n, &mut rhs);
        let mut y = vec![0.0; self.p];
        if self.p > 0 {
            let mut ay = vec![0.0; self.p];
            pr.ax(&rhs, &mut ay);
            for i in 0..self.p {
                y[i] = ay[i] - by[i];
            }
            cholesky_solve(&self.schur, self.p, &mut y);
            for (j, col) in self.hinv_at.iter().enumerate() {
                axpy(-y[j], col, &mut rhs);
            }
        }
        let x = rhs;
        let mut gx = vec![0.0; pr.m];
        pr.gx(&x, &mut gx);
        for i in 0..pr.m {
            gx[i] -= bz[i];
        }
        let mut z = vec![0.0; pr.m];
        for (bi, s) in sc.iter().enumerate() {
            let r = pr.block_range(bi);
            s.apply_winv2(&gx[r.clone()], &mut z[r]);
        }
        (x, y, z)
    }

    fn solve(
        &self,
        pr: &Prepared,
        sc: &[soc::Scaling],
        bx: &[f64],
        by: &[f64],
        bz: &[f64],
        refine: usize,
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (mut x, mut y, mut z) = self.solve_once(pr, sc, bx, by, bz);
        let scale = norm(bx).max(norm(by)).max(norm(bz)).max(1e-300);
        for _ in 0..refine {
            // residual of the unreduced system
            let mut ex = bx.to_vec();
            let mut t = vec![0.0; self.n];
            pr.aty_add(&y, &mut t);
            pr.gtz_add(&z, &mut t);
            for i in 0..self.n {
                ex[i] -= t[i];
            }
            let mut ey = vec![0.0; self.p];
            pr.ax(&x, &mut ey);
            for i in 0..self.p {
                ey[i] = by[i] - ey[i];
            }
            let mut gx = vec![0.0; pr.m];
            pr.gx(&x, &mut gx);
            let mut ez = vec![0.0; pr.m];
            for (bi, s) in sc.iter().enumerate() {
                let r = pr.block_range(bi);
                s.apply_w2(&z[r.clone()], &mut ez[r]);
            }
            for i in 0..pr.m {
                ez[i] = bz[i] - (gx[i] - ez[i]);
            }
            let err = norm(&ex).max(norm(&ey)).max(norm(&ez));
            if err <= 1e-14 * scale {
                break;
            }
            let (dx, dy, dz) = self.solve_once(pr, sc, &ex, &ey, &ez);
            axpy(1.0, &dx, &mut x);
            axpy(1.0, &dy, &mut y);
            axpy(1.0, &dz, &mut z);
        }
        (x, y, z)
    }
}

struct Iterate {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    s: Vec<f64>,
    tau: f64,
    kappa: f64,
}

fn max_step(pr: &Prepared, v: &[f64], dv: &[f64]) -> f64 {
    let mut a = f64::INFINITY;
    for bi in 0..pr.f.blocks.len() {
        let r = pr.block_range(bi);
        a = a.min(soc::max_step(&v[r.clone()], &dv[r]));
    }
    a
}

/// Shift `v` into the interior of `K` following CVXOPT's starting-point rule.
fn shift_interior(pr: &Prepared, v: &mut [f64]) {
    let mut t = f64::NEG_INFINITY;
    for bi in 0..pr.f.blocks.len() {
        let r = pr.block_range(bi);
        let b = &v[r];
        t = t.max(norm(&b[1..]) - b[0]);
    }
    if t >= -1e-8 * norm(v).max(1.0) {
        for bi in 0..pr.f.blocks.len() {
            v[pr.offsets[bi]] += 1.0 + t;
        }
    }
}

pub fn solve(f: &StandardForm, st: &Settings) -> IpmResult {
    let pr = Prepared::new(f);
    let (n, p, m) = (f.n, f.a.len(), pr.m);
    let nu = f.blocks.len() as f64;
    let fail = |status, iters| IpmResult {
        status,
        x: vec![f64::NAN; n],
        y: vec![f64::NAN; p],
        z: vec![f64::NAN; m],
        s: vec![f64::NAN; m],
        pcost: f64::NAN,
        dcost: f64::NAN,
        pres: f64::INFINITY,
        dres: f64::INFINITY,
        gap: f64::INFINITY,
        iterations: iters,
    };

    let identity: Vec<soc::Scaling> = f.blocks.iter().map(|b| soc::Scaling::identity(b.dim)).collect();
    let Some(kkt) = Kkt::factor(&pr, &identity) else {
        return fail(IpmStatus::NumericalFailure, 0);
    };
    let zeros_n = vec![0.0; n];
    let zeros_m = vec![0.0; m];
    let (x0, _, sz) = kkt.solve(&pr, &identity, &zeros_n, &f.b, &pr.h, st.refine_steps);
    let mut s0: Vec<f64> = sz.iter().map(|v| -v).collect();
    let neg_c: Vec<f64> = f.c.iter().map(|v| -v).collect();
    let (_, y0, mut z0) = kkt.solve(&pr, &identity, &neg_c, &vec![0.0; p], &zeros_m, st.refine_steps);
    shift_interior(&pr, &mut s0);
    shift_interior(&pr, &mut z0);
    let mut it = Iterate { x: x0, y: y0, z: z0, s: s0, tau: 1.0, kappa: 1.0 };

    let resx0 = norm(&f.c).max(1.0);
    let resy0 = norm(&f.b).max(1.0);
    let resz0 = norm(&pr.h).max(1.0);

    let mut sc: Vec<soc::Scaling> = Vec::with_capacity(f.blocks.len());
    let mut last = None;
    let mut best: Option<(f64, IpmResult)> = None;
    let fallback = |best: Option<(f64, IpmResult)>, last: Option<IpmResult>, iters: usize| match best {
        Some((merit, mut r)) if merit <= st.reduced_tol => {
            r.status = IpmStatus::ReducedAccuracy;
            r.iterations = iters;
            r
        }
        _ => last.unwrap_or_else(|| fail(IpmStatus::NumericalFailure, iters)),
    };
    for iter in 0..=st.max_iter {
        // residuals of the embedding
        let mut rx = vec![0.0; n];
        pr.aty_add(&it.y, &mut rx);
        pr.gtz_add(&it.z, &mut rx);
        let hrx = norm(&rx);
        axpy(it.tau, &f.c, &mut rx);
        let mut ax = vec![0.0; p];
        pr.ax(&it.x, &mut ax);
        let hry = norm(&ax);
        let ry: Vec<f64> = (0..p).map(|i| f.b[i] * it.tau - ax[i]).collect();
        let mut gx = vec![0.0; m];
        pr.gx(&it.x, &mut gx);
        let mut hrz_v = gx.clone();
        axpy(1.0, &it.s, &mut hrz_v);
        let hrz = norm(&hrz_v);
        let rz: Vec<f64> = (0..m).map(|i| it.s[i] + gx[i] - pr.h[i] * it.tau).collect();
        let cx = dot(&f.c, &it.x);
        let by = dot(&f.b, &it.y);
        let hz = dot(&pr.h, &it.z);
        let rt = it.kappa + cx + by + hz;
        let gap_raw = dot(&it.s, &it.z);
        let mu = (gap_raw + it.tau * it.kappa) / (nu + 1.0);

        let pcost = cx / it.tau;
        let dcost = -(by + hz) / it.tau;
        let pres = (norm(&ry) / resy0).max(norm(&rz) / resz0) / it.tau;
        let dres = norm(&rx) / resx0 / it.tau;
        let gap = gap_raw / (it.tau * it.tau);
        let rel_gap = gap / pcost.abs().min(dcost.abs()).max(1.0);
        let pinf = if by + hz < 0.0 { hrx / resx0 / -(by + hz) } else { f64::INFINITY };
        let dinf = if cx < 0.0 { (hry / resy0).max(hrz / resz0) / -cx } else { f64::INFINITY };

        let make = |status, it: &Iterate, iters| {
            let (scale_x, scale_z) = match status {
                IpmStatus::PrimalInfeasible => (0.0, 1.0 / -(by + hz)),
                IpmStatus::DualInfeasible => (1.0 / -cx, 0.0),
                _ => (1.0 / it.tau, 1.0 / it.tau),
            };
            IpmResult {
                status,
                x: it.x.iter().map(|v| v * scale_x).collect(),
                y: it.y.iter().map(|v| v * scale_z).collect(),
                z: it.z.iter().map(|v| v * scale_z).collect(),
                s: it.s.iter().map(|v| v * scale_x).collect(),
                pcost,
                dcost,
                pres,
                dres,
                gap: rel_gap,
                iterations: iters,
            }
        };

        if !(pres.is_finite() && dres.is_finite() && mu.is_finite()) {
            return fallback(best, last, iter);
        }
        if pres <= st.feas_tol && dres <= st.feas_tol && rel_gap <= st.gap_tol {
            return make(IpmStatus::Optimal, &it, iter);
        }
        if pinf <= st.infeas_tol {
            return make(IpmStatus::PrimalInfeasible, &it, iter);
        }
        if dinf <= st.infeas_tol {
            return make(IpmStatus::DualInfeasible, &it, iter);
        }
        let merit = pres.max(rel_gap).max(dres * st.reduced_tol / st.reduced_dual_tol);
        if best.as_ref().is_none_or(|(m, _)| merit < *m) {
            best = Some((merit, make(IpmStatus::ReducedAccuracy, &it, iter)));
        }
        if iter == st.max_iter {
            let limit = make(IpmStatus::IterationLimit, &it, iter);
            return fallback(best, Some(limit), iter);
        }
        last = Some(make(IpmStatus::NumericalFailure, &it, iter));

        sc.clear();
        for bi in 0..f.blocks.len() {
            let r = pr.block_range(bi);
            match soc::Scaling::nt(&it.s[r.clone()], &it.z[r]) {
                Some(s) => sc.push(s),
                None => return fallback(best, last, iter),
            }
        }
        let Some(kkt) = Kkt::factor(&pr, &sc) else {
            return fallback(best, last, iter);
        };
        let lambda: Vec<f64> = {
            let mut l = vec![0.0; m];
            for (bi, s) in sc.iter().enumerate() {
                l[pr.block_range(bi)].copy_from_slice(&s.lambda);
            }
            l
        };

        let neg_c: Vec<f64> = f.c.iter().map(|v| -v).collect();
        let (x1, y1, z1) = kkt.solve(&pr, &sc, &neg_c, &f.b, &pr.h, st.refine_steps);
        let mut wz1 = vec![0.0; m];
        for (bi, s) in sc.iter().enumerate() {
            let r = pr.block_range(bi);
            s.apply_w(&z1[r.clone()], &mut wz1[r]);
        }
        let denom_base = it.kappa / it.tau + dot(&wz1, &wz1);

        // direction for a given complementarity right-hand side
        let direction = |eta: f64, ds_rhs: &[f64], dk_rhs: f64| {
            let mut u = vec![0.0; m];
            for bi in 0..f.blocks.len() {
                let r = pr.block_range(bi);
                soc::jordan_div(&lambda[r.clone()], &ds_rhs[r.clone()], &mut u[r]);
            }
            let mut wu = vec![0.0; m];
            for (bi, s) in sc.iter().enumerate() {
                let r = pr.block_range(bi);
                s.apply_w(&u[r.clone()], &mut wu[r]);
            }
            let bx: Vec<f64> = rx.iter().map(|v| -eta * v).collect();
            let byv: Vec<f64> = ry.iter().map(|v| eta * v).collect();
            let bz: Vec<f64> = (0..m).map(|i| -eta * rz[i] - wu[i]).collect();
            let (x2, y2, z2) = kkt.solve(&pr, &sc, &bx, &byv, &bz, st.refine_steps);
            let dtau = (eta * rt + dk_rhs / it.tau + dot(&f.c, &x2) + dot(&f.b, &y2) + dot(&pr.h, &z2)) / denom_base;
            let mut dx = x2;
            axpy(dtau, &x1, &mut dx);
            let mut dy = y2;
            axpy(dtau, &y1, &mut dy);
            let mut dz = z2;
            axpy(dtau, &z1, &mut dz);
            // ds = W (u − W dz)
            let mut wdz = vec![0.0; m];
            for (bi, s) in sc.iter().enumerate() {
                let r = pr.block_range(bi);
                s.apply_w(&dz[r.clone()], &mut wdz[r]);
            }
            let tmp: Vec<f64> = (0..m).map(|i| u[i] - wdz[i]).collect();
            let mut ds = vec![0.0; m];
            for (bi, s) in sc.iter().enumerate() {
                let r = pr.block_range(bi);
                s.apply_w(&tmp[r.clone()], &mut ds[r]);
            }
            let dkappa = (dk_rhs - it.kappa * dtau) / it.tau;
            (dx, dy, dz, ds, dtau, dkappa)
        };

        let step_len = |dz: &[f64], ds: &[f64], dtau: f64, dkappa: f64| {
            let mut a = max_step(&pr, &it.s, ds).min(max_step(&pr, &it.z, dz));
            if dtau < 0.0 {
                a = a.min(-it.tau / dtau);
            }
            if dkappa < 0.0 {
                a = a.min(-it.kappa / dkappa);
            }
            a
        };

        // predictor
        let mut ds_rhs = vec![0.0; m];
        for bi in 0..f.blocks.len() {
            let r = pr.block_range(bi);
            soc::jordan_prod(&lambda[r.clone()], &lambda[r.clone()], &mut ds_rhs[r]);
        }
        for v in ds_rhs.iter_mut() {
            *v = -*v;
        }
        let (_, _, dza, dsa, dtaua, dkappaa) = direction(1.0, &ds_rhs, -it.tau * it.kappa);
        let alpha_aff = step_len(&dza, &dsa, dtaua, dkappaa).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

        // corrector: −λ∘λ − (W⁻¹Δs_a)∘(WΔz_a) + σμe
        let mut a1 = vec![0.0; m];
        let mut a2 = vec![0.0; m];
        for (bi, s) in sc.iter().enumerate() {
            let r = pr.block_range(bi);
            s.apply_winv(&dsa[r.clone()], &mut a1[r.clone()]);
            s.apply_w(&dza[r.clone()], &mut a2[r]);
        }
        let mut corr = vec![0.0; m];
        for bi in 0..f.blocks.len() {
            let r = pr.block_range(bi);
            soc::jordan_prod(&a1[r.clone()], &a2[r.clone()], &mut corr[r.clone()]);
            ds_rhs[r.start] += sigma * mu;
        }
        for i in 0..m {
            ds_rhs[i] -= corr[i];
        }
        let dk_rhs = -it.tau * it.kappa - dtaua * dkappaa + sigma * mu;
        let (dx, dy, dz, ds, dtau, dkappa) = direction(1.0 - sigma, &ds_rhs, dk_rhs);
        let amax = step_len(&dz, &ds, dtau, dkappa);
        let alpha = (st.step_fraction * amax).min(1.0);
        if !(alpha > 1e-10) || !alpha.is_finite() {
            return fallback(best, last, iter);
        }
        axpy(alpha, &dx, &mut it.x);
        axpy(alpha, &dy, &mut it.y);
        axpy(alpha, &dz, &mut it.z);
        axpy(alpha, &ds, &mut it.s);
        it.tau += alpha * dtau;
        it.kappa += alpha * dkappa;
    }
    fallback(best, last, st.max_iter)
}
