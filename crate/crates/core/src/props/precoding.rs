//! Precoder invariants on seeded random channels, checked against
//! nalgebra decompositions.

use nalgebra::{DMatrix, SVD};
use num_complex::Complex64;
use proptest::prelude::*;
use crate::cmat::CMat;
use crate::precoding::{bd_precoders, max_leakage, mmse_precoders, svd, zf_precoders};
use crate::rng::{cn, stream};

type NMat = DMatrix<Complex64>;

fn to_na(m: &CMat) -> NMat {
    NMat::from_fn(m.rows, m.cols, |r, c| m[(r, c)])
}

fn random(seed: u64, tag: u64, rows: usize, cols: usize) -> CMat {
    let mut rng = stream(seed, "prop", tag);
    CMat::from_fn(rows, cols, |_, _| cn(&mut rng, 1.0))
}

fn users(seed: u64, k: usize, rx: usize, tx: usize) -> Vec<CMat> {
    (0..k).map(|u| random(seed, u as u64, rx, tx)).collect()
}

fn stacked(ws: &[CMat]) -> CMat {
    let refs: Vec<&CMat> = ws.iter().collect();
    CMat::hstack(&refs)
}

fn singular_values(m: &NMat) -> Vec<f64> {
    let mut s: Vec<f64> = SVD::new(m.clone(), false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

fn condition(h: &CMat) -> f64 {
    let s = singular_values(&to_na(h));
    s[0] / *s.last().unwrap()
}

/// Orthonormal basis of the null space of `m`, from nalgebra's full SVD.
fn null_basis(m: &NMat) -> NMat {
    let n = m.ncols();
    let padded = NMat::from_fn(n.max(m.nrows()), n, |r, c| {
        if r < m.nrows() {
            m[(r, c)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let s = SVD::new(padded, false, true);
    let vt = s.v_t.unwrap();
    let top = s.singular_values.max();
    let idx: Vec<usize> = (0..n).filter(|&i| s.singular_values[i] <= 1e-10 * top.max(1.0)).collect();
    NMat::from_fn(n, idx.len(), |r, c| vt[(idx[c], r)].conj())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn svd_reconstructs_and_matches_oracle(seed in any::<u64>(), rows in 1usize..=8, cols in 1usize..=8) {
        let h = random(seed, 0, rows, cols);
        let s = svd(&h).unwrap();
        let err = s.reconstruct().sub(&h).frobenius() / h.frobenius();
        prop_assert!(err <= 1e-10, "relative error {err}");
        let oracle = singular_values(&to_na(&h));
        for (a, b) in s.sigma.iter().zip(&oracle) {
            prop_assert!((a - b).abs() <= 1e-9 * oracle[0], "{a} vs {b}");
        }
        let uu = s.u.adjoint().mul(&s.u).sub(&CMat::identity(s.u.cols)).max_abs();
        let vv = s.v.adjoint().mul(&s.v).sub(&CMat::identity(s.v.cols)).max_abs();
        prop_assert!(uu <= 1e-10 && vv <= 1e-10);
    }

    #[test]
    fn zf_diagonalizes_and_matches_pseudo_inverse(seed in any::<u64>(), tx in 2usize..=8, k in 1usize..=4) {
        let rx = 1;
        prop_assume!(k * rx <= tx);
        let hs = users(seed, k, rx, tx);
        let refs: Vec<&CMat> = hs.iter().collect();
        let h = CMat::vstack(&refs);
        prop_assume!(condition(&h) < 1e6);
        let set = zf_precoders(&hs, 0).unwrap();
        let w = stacked(&set.w);
        let hw = h.mul(&w);
        let alpha = hw[(0, 0)].re;
        let off = hw.sub(&CMat::identity(h.rows).scale_re(alpha)).frobenius();
        prop_assert!(off <= 1e-9, "leakage {off}");
        prop_assert!((set.total_power() - tx as f64).abs() <= 1e-9);

        let pinv = to_na(&h).pseudo_inverse(1e-14).unwrap();
        let scale = (tx as f64 / pinv.norm_squared()).sqrt();
        let diff = (to_na(&w) - pinv * Complex64::new(scale, 0.0)).norm();
        prop_assert!(diff <= 1e-8, "pinv mismatch {diff}");
    }

    #[test]
    fn bd_lives_in_oracle_null_space(seed in any::<u64>(), tx in 2usize..=8, rx in 1usize..=3, k in 2usize..=3) {
        prop_assume!(k * rx <= tx);
        let hs = users(seed, k, rx, tx);
        let (set, inter) = bd_precoders(&hs, &vec![rx; k], 0).unwrap();
        prop_assert!(max_leakage(&hs, &set) <= 1e-9);
        let mut rng = stream(seed, "rotation", 0);
        for (c, it) in inter.iter().enumerate() {
            prop_assert!(it.h_tilde.mul(&it.null_basis).frobenius() <= 1e-9);
            let others: Vec<&CMat> = (0..k).filter(|&e| e != c).map(|e| &hs[e]).collect();
            let q = null_basis(&to_na(&CMat::vstack(&others)));
            prop_assert_eq!(q.ncols(), it.null_basis.cols);
            // any orthonormal basis of the null space spans the same subspace
            let d = q.ncols();
            let g = NMat::from_fn(d, d, |_, _| cn(&mut rng, 1.0));
            let rot = g.qr().q();
            let qr = &q * rot;
            let proj = &qr * qr.adjoint();
            let wc = to_na(&set.w[c]);
            let resid = (&wc - &proj * &wc).norm();
            prop_assert!(resid <= 1e-9 * wc.norm().max(1.0), "outside null space {resid}");
            let ours = to_na(&it.null_basis);
            let span = (&ours * ours.adjoint() - proj).norm();
            prop_assert!(span <= 1e-8, "projector mismatch {span}");
        }
    }

    #[test]
    fn mmse_tends_to_zf(seed in any::<u64>(), tx in 2usize..=8, k in 1usize..=4) {
        prop_assume!(k <= tx);
        let hs = users(seed, k, 1, tx);
        let refs: Vec<&CMat> = hs.iter().collect();
        let h = CMat::vstack(&refs);
        prop_assume!(condition(&h) < 100.0);
        let zf = stacked(&zf_precoders(&hs, 0).unwrap().w);
        let at0 = stacked(&mmse_precoders(&hs, 0.0, 0).unwrap().w);
        prop_assert!(at0.sub(&zf).max_abs() <= 1e-8);
        let small = stacked(&mmse_precoders(&hs, 1e-10, 0).unwrap().w);
        prop_assert!(small.sub(&zf).max_abs() <= 1e-8);

        let rho = 0.3;
        let hn = to_na(&h);
        let gram = &hn * hn.adjoint() + NMat::identity(k, k) * Complex64::new(rho, 0.0);
        let raw = hn.adjoint() * gram.try_inverse().unwrap();
        let oracle = &raw * Complex64::new((tx as f64 / raw.norm_squared()).sqrt(), 0.0);
        let ours = stacked(&mmse_precoders(&hs, rho, 0).unwrap().w);
        prop_assert!((to_na(&ours) - oracle).norm() <= 1e-9);
    }
}
