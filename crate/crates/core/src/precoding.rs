//! Linear precoders (SVD beamforming, zero forcing, MMSE, block
//! diagonalization) and per-user SINR under possibly stale CSI.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use crate::cmat::{complete_basis, dot, CMat, C64, ZERO};
use crate::error::{Error, Result};
use crate::rng::cn;

#[derive(Debug, Clone, PartialEq)]
pub struct SvdResult {
    pub u: CMat,
    /// `min(rows, cols)` singular values, descending.
    pub sigma: Vec<f64>,
    pub v: CMat,
}

impl SvdResult {
    /// Number of singular values above `rel_tol * sigma_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let top = self.sigma.first().copied().unwrap_or(0.0);
        if top == 0.0 {
            return 0;
        }
        self.sigma.iter().filter(|&&s| s > rel_tol * top).count()
    }

    /// `U diag(sigma) V*` at the original shape.
    pub fn reconstruct(&self) -> CMat {
        let (m, n) = (self.u.rows, self.v.rows);
        let mut s = CMat::zeros(m, n);
        for (i, &x) in self.sigma.iter().enumerate() {
            s[(i, i)] = C64::new(x, 0.0);
        }
        self.u.mul(&s).mul(&self.v.adjoint())
    }
}

const MAX_SWEEPS: usize = 60;
const ORTHO_EPS: f64 = 1e-15;

/// One-sided Jacobi on a tall (or square) matrix. Returns the rotated
/// columns (`A V`) and the accumulated `V`.
fn jacobi_tall(a: &CMat) -> (CMat, CMat) {
    let (m, n) = (a.rows, a.cols);
    let mut a = a.clone();
    let mut v = CMat::identity(n);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = ZERO;
                for r in 0..m {
                    let ap = a[(r, p)];
                    let aq = a[(r, q)];
                    alpha += ap.norm_sqr();
                    beta += aq.norm_sqr();
                    gamma += ap.conj() * aq;
                }
                let g = gamma.norm();
                if g == 0.0 || g <= ORTHO_EPS * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * g);
                let sign = if zeta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (libm::fabs(zeta) + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                let e = gamma / g;
                let se = e * s;
                let sec = e.conj() * s;
                for r in 0..m {
                    let ap = a[(r, p)];
                    let aq = a[(r, q)];
                    a[(r, p)] = ap * c - sec * aq;
                    a[(r, q)] = se * ap + aq * c;
                }
                for r in 0..n {
                    let vp = v[(r, p)];
                    let vq = v[(r, q)];
                    v[(r, p)] = vp * c - sec * vq;
                    v[(r, q)] = se * vp + vq * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (a, v)
}

fn svd_tall(h: &CMat) -> SvdResult {
    let (av, v) = jacobi_tall(h);
    let n = h.cols;
    let norms: Vec<f64> = (0..n).map(|c| libm::sqrt(av.col(c).iter().map(|z| z.norm_sqr()).sum())).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(core::cmp::Ordering::Equal));
    let sigma: Vec<f64> = order.iter().map(|&i| norms[i]).collect();
    let v = v.select_cols(&order);
    let top = sigma.first().copied().unwrap_or(0.0);
    let keep: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| norms[i] > 1e-13 * top && norms[i] > 0.0)
        .collect();
    let mut u_thin = CMat::zeros(h.rows, keep.len());
    for (k, &i) in keep.iter().enumerate() {
        let col: Vec<C64> = av.col(i).iter().map(|z| z / norms[i]).collect();
        u_thin.set_col(k, &col);
    }
    SvdResult {
        u: complete_basis(&u_thin),
        sigma,
        v,
    }
}

/// Full SVD `H = U diag(sigma) V*` with unitary `U` (rows x rows) and `V` (cols x cols).
pub fn svd(h: &CMat) -> Result<SvdResult> {
    if !h.is_finite() {
        return Err(Error::NonFinite);
    }
    if h.rows >= h.cols {
        let mut r = svd_tall(h);
        if r.u.cols < h.rows {
            r.u = complete_basis(&r.u);
        }
        Ok(r)
    } else {
        let t = svd_tall(&h.adjoint());
        let mut v = t.u;
        if v.cols < h.cols {
            v = complete_basis(&v);
        }
        Ok(SvdResult {
            u: t.v,
            sigma: t.sigma,
            v,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrecoderScheme {
    SvdSu,
    Zf,
    Mmse(f64),
    Bd,
    /// Per-user SVD beams sharing the power budget, ignoring each other.
    Independent,
}

impl PrecoderScheme {
    pub fn name(&self) -> &'static str {
        match self {
            PrecoderScheme::SvdSu => "svd_su",
            PrecoderScheme::Zf => "zf",
            PrecoderScheme::Mmse(_) => "mmse",
            PrecoderScheme::Bd => "bd",
            PrecoderScheme::Independent => "independent",
        }
    }
}

/// Per-user precoders for one subcarrier. `w[c]` is `n_T x n_ss_c` and
/// already carries the user's power share; `sum ||w_c||^2 = n_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    pub scheme: PrecoderScheme,
    pub w: Vec<CMat>,
    pub csi_time_us: u64,
}

impl PrecoderSet {
    pub fn n_tx(&self) -> usize {
        self.w.first().map_or(0, |w| w.rows)
    }

    pub fn total_power(&self) -> f64 {
        self.w.iter().map(|w| w.norm_sqr()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BdIntermediates {
    pub h_tilde: CMat,
    pub null_basis: CMat,
    pub rotation: CMat,
}

const RANK_TOL: f64 = 1e-10;

fn stack(h_users: &[CMat]) -> (CMat, Vec<usize>) {
    let refs: Vec<&CMat> = h_users.iter().collect();
    let rows = h_users.iter().map(|h| h.rows).collect();
    (CMat::vstack(&refs), rows)
}

fn split_cols(w: &CMat, rows: &[usize]) -> Vec<CMat> {
    let mut out = Vec::with_capacity(rows.len());
    let mut c0 = 0;
    for &r in rows {
        out.push(w.cols_range(c0, c0 + r));
        c0 += r;
    }
    out
}

fn normalize_common(w: CMat) -> CMat {
    let n_t = w.rows as f64;
    let p = w.norm_sqr();
    if p == 0.0 {
        return w;
    }
    w.scale_re(libm::sqrt(n_t / p))
}

/// SVD beamforming for one user with `n_ss` streams and the full power budget.
pub fn svd_su_precoder(h: &CMat, n_ss: usize, csi_time_us: u64) -> Result<PrecoderSet> {
    let s = svd(h)?;
    let k = n_ss.clamp(1, h.cols);
    let n_t = h.cols as f64;
    Ok(PrecoderSet {
        scheme: PrecoderScheme::SvdSu,
        w: alloc::vec![s.v.cols_range(0, k).scale_re(libm::sqrt(n_t / k as f64))],
        csi_time_us,
    })
}

/// Each user gets its own SVD beams and an equal power share.
pub fn independent_precoders(h_users: &[CMat], streams: &[usize], csi_time_us: u64) -> Result<PrecoderSet> {
    let k_users = h_users.len() as f64;
    let mut w = Vec::with_capacity(h_users.len());
    for (h, &ns) in h_users.iter().zip(streams) {
        let s = svd(h)?;
        let k = ns.clamp(1, h.cols);
        let n_t = h.cols as f64;
        w.push(s.v.cols_range(0, k).scale_re(libm::sqrt(n_t / (k_users * k as f64))));
    }
    Ok(PrecoderSet {
        scheme: PrecoderScheme::Independent,
        w,
        csi_time_us,
    })
}

/// Channel inversion with the pseudo-inverse of the stacked channel.
pub fn zf_precoders(h_users: &[CMat], csi_time_us: u64) -> Result<PrecoderSet> {
    let (h, rows) = stack(h_users);
    if !h.is_finite() {
        return Err(Error::NonFinite);
    }
    if h.rows > h.cols {
        return Err(Error::RankDeficient);
    }
    let s = svd(&h)?;
    let top = s.sigma[0];
    let bottom = *s.sigma.last().unwrap();
    if top == 0.0 || bottom < 1e-12 * top {
        return Err(Error::RankDeficient);
    }
    let hh = h.adjoint();
    let gram = h.mul(&hh).inverse().ok_or(Error::RankDeficient)?;
    let w = normalize_common(hh.mul(&gram));
    Ok(PrecoderSet {
        scheme: PrecoderScheme::Zf,
        w: split_cols(&w, &rows),
        csi_time_us,
    })
}

/// Regularized inversion `H* (H H* + rho I)^-1`; `rho = 0` is zero forcing.
pub fn mmse_precoders(h_users: &[CMat], rho: f64, csi_time_us: u64) -> Result<PrecoderSet> {
    if rho == 0.0 {
        let mut z = zf_precoders(h_users, csi_time_us)?;
        z.scheme = PrecoderScheme::Mmse(0.0);
        return Ok(z);
    }
    let (h, rows) = stack(h_users);
    if !h.is_finite() {
        return Err(Error::NonFinite);
    }
    let hh = h.adjoint();
    let reg = h.mul(&hh).add(&CMat::identity(h.rows).scale_re(rho));
    let inv = reg.inverse().ok_or(Error::RankDeficient)?;
    let w = normalize_common(hh.mul(&inv));
    Ok(PrecoderSet {
        scheme: PrecoderScheme::Mmse(rho),
        w: split_cols(&w, &rows),
        csi_time_us,
    })
}

/// Block diagonalization: each user's precoder lives in the null space of
/// every other user's channel, rotated onto its own dominant directions.
pub fn bd_precoders(
    h_users: &[CMat],
    streams: &[usize],
    csi_time_us: u64,
) -> Result<(PrecoderSet, Vec<BdIntermediates>)> {
    let k = h_users.len();
    let n_t = h_users.first().map_or(0, |h| h.cols);
    let mut w = Vec::with_capacity(k);
    let mut inter = Vec::with_capacity(k);
    for c in 0..k {
        let others: Vec<&CMat> = (0..k).filter(|&e| e != c).map(|e| &h_users[e]).collect();
        let (h_tilde, null_basis) = if others.is_empty() {
            (CMat::zeros(0, n_t), CMat::identity(n_t))
        } else {
            let ht = CMat::vstack(&others);
            let s = svd(&ht)?;
            let r = s.rank(RANK_TOL * (ht.rows.max(ht.cols) as f64));
            if r >= n_t {
                return Err(Error::NoNullSpace { user: c });
            }
            let nb = s.v.cols_range(r, n_t);
            (ht, nb)
        };
        let proj = h_users[c].mul(&null_basis);
        let sp = svd(&proj)?;
        let floor = RANK_TOL * (proj.rows.max(proj.cols) as f64) * h_users[c].frobenius();
        let r_bar = sp.sigma.iter().filter(|&&s| s > floor).count();
        if r_bar == 0 {
            return Err(Error::DegenerateProduct { user: c });
        }
        let ns = streams.get(c).copied().unwrap_or(1).clamp(1, r_bar);
        let rotation = sp.v.cols_range(0, ns);
        let wc = null_basis.mul(&rotation);
        let scale = libm::sqrt(n_t as f64 / (k as f64 * ns as f64));
        w.push(wc.scale_re(scale));
        inter.push(BdIntermediates {
            h_tilde,
            null_basis,
            rotation,
        });
    }
    Ok((
        PrecoderSet {
            scheme: PrecoderScheme::Bd,
            w,
            csi_time_us,
        },
        inter,
    ))
}

/// Whether crosstalk from co-scheduled users is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtiMode {
    WithCti,
    NoCti,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserSinr {
    /// Post-MMSE-combining SINR per stream, linear.
    pub streams: Vec<f64>,
    /// Power through the user's own precoder.
    pub useful: f64,
    /// Power leaked from other users' precoders.
    pub cti: f64,
}

impl UserSinr {
    pub fn min_db(&self) -> f64 {
        lin_to_db(self.streams.iter().copied().fold(f64::INFINITY, f64::min))
    }
}

pub fn lin_to_db(x: f64) -> f64 {
    10.0 * libm::log10(x)
}

pub fn db_to_lin(x: f64) -> f64 {
    libm::pow(10.0, x / 10.0)
}

/// SINR of every user when the current channels `h_users` meet precoders
/// computed from (possibly older) CSI. `noise_power` is per receive antenna
/// in the units where `sum ||w_c||^2 = n_T`.
pub fn evaluate_sinr(h_users: &[CMat], set: &PrecoderSet, noise_power: f64, mode: CtiMode) -> Vec<UserSinr> {
    let k = h_users.len();
    let mut out = Vec::with_capacity(k);
    for c in 0..k {
        let h = &h_users[c];
        let n_r = h.rows;
        let own = h.mul(&set.w[c]);
        let mut interference = CMat::identity(n_r).scale_re(noise_power);
        let mut cti = 0.0;
        for (e, w) in set.w.iter().enumerate() {
            if e == c {
                continue;
            }
            let g = h.mul(w);
            cti += g.norm_sqr();
            if mode == CtiMode::WithCti {
                interference = interference.add(&g.mul(&g.adjoint()));
            }
        }
        let total = interference.add(&own.mul(&own.adjoint()));
        let streams = match total.inverse() {
            Some(inv) => (0..own.cols)
                .map(|s| {
                    // g^H (R_total - g g^H)^-1 g = x / (1 - x), x = g^H R_total^-1 g
                    let g = own.col(s);
                    let rg: Vec<C64> = (0..n_r).map(|i| (0..n_r).map(|j| inv[(i, j)] * g[j]).sum()).collect();
                    let x = dot(&g, &rg).re.clamp(0.0, 1.0 - 1e-15);
                    x / (1.0 - x)
                })
                .collect(),
            None => alloc::vec![0.0; own.cols],
        };
        out.push(UserSinr {
            streams,
            useful: own.norm_sqr(),
            cti,
        });
    }
    out
}

/// Largest inter-user leakage `||H_e W_c||_F` over `e != c`.
pub fn max_leakage(h_users: &[CMat], set: &PrecoderSet) -> f64 {
    let mut worst: f64 = 0.0;
    for (c, w) in set.w.iter().enumerate() {
        for (e, h) in h_users.iter().enumerate() {
            if e != c {
                worst = worst.max(h.mul(w).frobenius());
            }
        }
    }
    worst
}

/// Per-entry error variance of a unit-norm beam reconstructed from Givens
/// angles quantized with the given bit widths (uniform rounding error).
pub fn quantization_variance(psi_bits: u32, phi_bits: u32) -> f64 {
    let d_psi = (PI / 2.0) / libm::pow(2.0, psi_bits as f64);
    let d_phi = 2.0 * PI / libm::pow(2.0, phi_bits as f64);
    (d_psi * d_psi + d_phi * d_phi) / 24.0
}

/// Add complex Gaussian error of relative variance `var` to every precoder
/// column, keeping each column's norm.
pub fn perturb<R: Rng + ?Sized>(set: &mut PrecoderSet, var: f64, rng: &mut R) {
    if var <= 0.0 {
        return;
    }
    for w in set.w.iter_mut() {
        for c in 0..w.cols {
            let col = w.col(c);
            let norm = libm::sqrt(col.iter().map(|z| z.norm_sqr()).sum());
            if norm == 0.0 {
                continue;
            }
            let noisy: Vec<C64> = col.iter().map(|z| z / norm + cn(rng, var)).collect();
            let n2 = libm::sqrt(noisy.iter().map(|z| z.norm_sqr()).sum());
            let scaled: Vec<C64> = noisy.iter().map(|z| z * (norm / n2)).collect();
            w.set_col(c, &scaled);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn random(rows: usize, cols: usize, seed: u64) -> CMat {
        let mut r = stream(seed, "test", 0);
        CMat::from_fn(rows, cols, |_, _| cn(&mut r, 1.0))
    }

    fn check_svd(h: &CMat) {
        let s = svd(h).unwrap();
        let k = s.sigma.len();
        let mut sig = CMat::zeros(h.rows, h.cols);
        for i in 0..k {
            sig[(i, i)] = C64::new(s.sigma[i], 0.0);
        }
        let rec = s.u.mul(&sig).mul(&s.v.adjoint());
        assert!(rec.sub(h).frobenius() <= 1e-10 * h.frobenius().max(1e-300));
        assert!(s.u.adjoint().mul(&s.u).sub(&CMat::identity(h.rows)).max_abs() < 1e-10);
        assert!(s.v.adjoint().mul(&s.v).sub(&CMat::identity(h.cols)).max_abs() < 1e-10);
        assert!(s.sigma.windows(2).all(|p| p[0] >= p[1]));
    }

    #[test]
    fn svd_identity_and_diag() {
        let s = svd(&CMat::identity(2)).unwrap();
        assert_eq!(s.sigma, [1.0, 1.0]);
        let d = CMat::from_real(2, 2, &[1.0, 0.0, 0.0, 3.0]);
        let s = svd(&d).unwrap();
        assert!((s.sigma[0] - 3.0).abs() < 1e-14 && (s.sigma[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn svd_shapes() {
        for (r, c) in [(3, 2), (2, 3), (1, 4), (4, 1), (8, 8), (5, 7)] {
            check_svd(&random(r, c, (r * 10 + c) as u64));
        }
    }

    #[test]
    fn svd_rank_deficient() {
        let a = random(4, 1, 3);
        let b = random(1, 3, 4);
        let h = a.mul(&b);
        check_svd(&h);
        assert_eq!(svd(&h).unwrap().rank(1e-10), 1);
        check_svd(&CMat::zeros(2, 3));
    }

    #[test]
    fn svd_rejects_nan() {
        let mut h = CMat::identity(2);
        h[(0, 1)] = C64::new(f64::NAN, 0.0);
        assert_eq!(svd(&h), Err(Error::NonFinite));
    }

    #[test]
    fn zf_identity_and_axes() {
        let users: Vec<CMat> = (0..3).map(|i| CMat::identity(3).rows_range(i, i + 1)).collect();
        let z = zf_precoders(&users, 0).unwrap();
        for (c, w) in z.w.iter().enumerate() {
            for r in 0..3 {
                let expect = if r == c { 1.0 } else { 0.0 };
                assert!((w[(r, 0)].norm() - expect).abs() < 1e-12);
            }
        }
        let two: Vec<CMat> = (0..2).map(|i| CMat::identity(3).rows_range(i, i + 1)).collect();
        let z = zf_precoders(&two, 0).unwrap();
        assert!(max_leakage(&two, &z) < 1e-12);
        assert!(z.w[0][(2, 0)].norm() < 1e-12);
    }

    #[test]
    fn zf_rank_deficient() {
        let h = random(1, 3, 9);
        assert_eq!(zf_precoders(&[h.clone(), h], 0), Err(Error::RankDeficient));
    }

    #[test]
    fn mmse_limits() {
        let users: Vec<CMat> = (0..2).map(|i| random(1, 3, 20 + i)).collect();
        let z = zf_precoders(&users, 0).unwrap();
        let m = mmse_precoders(&users, 0.0, 0).unwrap();
        assert!(m.w[0].sub(&z.w[0]).max_abs() < 1e-12);
        let big = mmse_precoders(&users, 1e6, 0).unwrap();
        let mf = users[0].adjoint();
        let cos = dot(&big.w[0].col(0), &mf.col(0)).norm() / (big.w[0].frobenius() * mf.frobenius());
        assert!(cos > 0.999);
        // nearly singular input: mmse stays finite where zf refuses
        let a = random(1, 3, 30);
        let mut b = a.clone();
        b[(0, 0)] += C64::new(1e-14, 0.0);
        assert!(zf_precoders(&[a.clone(), b.clone()], 0).is_err());
        let r = mmse_precoders(&[a, b], 0.1, 0).unwrap();
        assert!(r.w.iter().all(|w| w.is_finite()));
    }

    #[test]
    fn bd_axis_aligned() {
        let h1 = CMat::from_real(1, 3, &[1.0, 0.0, 0.0]);
        let h2 = CMat::from_real(1, 3, &[0.0, 1.0, 0.0]);
        let (set, inter) = bd_precoders(&[h1.clone(), h2.clone()], &[1, 1], 0).unwrap();
        assert!(set.w[0][(1, 0)].norm() < 1e-12 && set.w[0][(0, 0)].norm() > 0.5);
        assert!(set.w[1][(0, 0)].norm() < 1e-12 && set.w[1][(1, 0)].norm() > 0.5);
        assert!(inter[0].h_tilde.mul(&inter[0].null_basis).max_abs() < 1e-12);
        assert!((set.total_power() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn bd_single_user_is_svd() {
        let h = random(2, 4, 41);
        let (set, _) = bd_precoders(&[h.clone()], &[2], 0).unwrap();
        let su = svd_su_precoder(&h, 2, 0).unwrap();
        // same span: projector difference vanishes
        let p1 = set.w[0].mul(&set.w[0].adjoint());
        let p2 = su.w[0].mul(&su.w[0].adjoint());
        assert!(p1.sub(&p2).max_abs() < 1e-9);
    }

    #[test]
    fn bd_errors() {
        let h = random(3, 3, 50);
        let g = random(1, 3, 51);
        assert_eq!(bd_precoders(&[g.clone(), h], &[1, 1], 0).unwrap_err(), Error::NoNullSpace { user: 0 });
        // identical single-antenna users: each one's projection collapses
        let r = bd_precoders(&[g.clone(), g], &[1, 1], 0);
        assert_eq!(r.unwrap_err(), Error::DegenerateProduct { user: 0 });
    }

    #[test]
    fn su_snr_matches_sigma() {
        let h = random(2, 3, 60);
        let s = svd(&h).unwrap();
        let set = svd_su_precoder(&h, 1, 0).unwrap();
        let noise = 0.01;
        let r = evaluate_sinr(&[h], &set, noise, CtiMode::WithCti);
        let expect = s.sigma[0] * s.sigma[0] * 3.0 / noise;
        assert!((r[0].streams[0] - expect).abs() / expect < 1e-6);
    }

    #[test]
    fn fresh_bd_has_no_cti() {
        let users: Vec<CMat> = (0..2).map(|i| random(2, 4, 70 + i)).collect();
        let (set, _) = bd_precoders(&users, &[1, 1], 0).unwrap();
        let r = evaluate_sinr(&users, &set, 1.0, CtiMode::WithCti);
        let n = evaluate_sinr(&users, &set, 1.0, CtiMode::NoCti);
        for (a, b) in r.iter().zip(&n) {
            assert!(a.cti < 1e-18);
            assert!((a.streams[0] - b.streams[0]).abs() / b.streams[0] < 1e-9);
        }
    }

    #[test]
    fn no_cti_mode_ignores_leakage() {
        let users: Vec<CMat> = (0..2).map(|i| random(1, 2, 80 + i)).collect();
        let set = independent_precoders(&users, &[1, 1], 0).unwrap();
        let with = evaluate_sinr(&users, &set, 0.1, CtiMode::WithCti);
        let without = evaluate_sinr(&users, &set, 0.1, CtiMode::NoCti);
        assert!(with[0].cti > 0.0);
        assert!(without[0].streams[0] > with[0].streams[0]);
        assert_eq!(with[0].cti, without[0].cti);
    }

    #[test]
    fn quantization_steps() {
        assert!(quantization_variance(5, 7) < quantization_variance(2, 4));
        let v = quantization_variance(2, 4);
        let d_phi = 2.0 * PI / 16.0;
        let d_psi = PI / 8.0;
        assert!((v - (d_phi * d_phi + d_psi * d_psi) / 24.0).abs() < 1e-15);
    }

    #[test]
    fn perturbation_keeps_power() {
        let users: Vec<CMat> = (0..2).map(|i| random(1, 3, 90 + i)).collect();
        let mut z = zf_precoders(&users, 0).unwrap();
        let p = z.total_power();
        let mut r = stream(3, "q", 0);
        perturb(&mut z, quantization_variance(5, 7), &mut r);
        assert!((z.total_power() - p).abs() < 1e-9);
        assert!(max_leakage(&users, &z) > 0.0);
    }
}
