use super::eval::{eval_h_with, eval_phi_with, PotentialArgs};
use super::{BoostVelocity, Frame, MomentFrame, MomentSet, MultiplierState, PotentialPair};
use crate::coeffs::{CoefficientSource, DerivativeOrders, GeneratingFamily};
use crate::error::Result;
use crate::symtensor::{dot, SymMatrix};

/// Lab multipliers seen from a frame moving with `v`. The rank-2 rule uses
/// the symmetric part of `lambda_ipp v_j`.
pub fn hat_multipliers(lab: &MultiplierState, v: &BoostVelocity) -> Result<MultiplierState> {
    lab.expect_frame(Frame::Lab)?;
    let v = v.v;
    let v2 = dot(&v, &v);
    let q = lab.lambda_iill;
    let a = &lab.lambda_ill;
    let av = dot(a, &v);
    let mv = lab.lambda_ij.mul_vec(&v);

    let lambda = lab.lambda + dot(&lab.lambda_i, &v) + dot(&v, &mv) + av * v2 + q * v2 * v2;
    let mut lambda_i = [0.0; 3];
    for i in 0..3 {
        lambda_i[i] =
            lab.lambda_i[i] + 2.0 * mv[i] + 2.0 * av * v[i] + a[i] * v2 + 4.0 * q * v2 * v[i];
    }
    let mut lambda_ij = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let iso = if i == j { av + 2.0 * q * v2 } else { 0.0 };
            lambda_ij[i][j] =
                lab.lambda_ij.get(i, j) + iso + a[i] * v[j] + a[j] * v[i] + 4.0 * q * v[i] * v[j];
        }
    }
    let lambda_ill = [
        a[0] + 4.0 * q * v[0],
        a[1] + 4.0 * q * v[1],
        a[2] + 4.0 * q * v[2],
    ];
    Ok(MultiplierState {
        frame: Frame::Hatted,
        lambda,
        lambda_i,
        lambda_ij: SymMatrix::symmetrized(&lambda_ij),
        lambda_ill,
        lambda_iill: q,
    })
}

/// `h' = h^'`, `phi' = phi^' + h^' v` at the boosted multipliers.
pub fn lab_potentials_with<C: CoefficientSource + ?Sized>(
    src: &C,
    lab: &MultiplierState,
    v: &BoostVelocity,
    n_trunc: usize,
    s_trunc: usize,
) -> Result<PotentialPair> {
    let hat = hat_multipliers(lab, v)?;
    let args = PotentialArgs::from_state(&hat)?;
    let h = eval_h_with(src, &args, n_trunc, s_trunc, DerivativeOrders::default())?;
    let phi_hat = eval_phi_with(src, &args, n_trunc, s_trunc, DerivativeOrders::default())?;
    let phi = [
        phi_hat[0] + h * v.v[0],
        phi_hat[1] + h * v.v[1],
        phi_hat[2] + h * v.v[2],
    ];
    Ok(PotentialPair {
        h,
        phi,
        n_trunc,
        s_trunc,
    })
}

pub fn lab_potentials(
    f: &GeneratingFamily,
    lab: &MultiplierState,
    v: &BoostVelocity,
    n_trunc: usize,
    s_trunc: usize,
) -> Result<PotentialPair> {
    lab_potentials_with(f, lab, v, n_trunc, s_trunc)
}

/// Lab densities and fluxes from rest-frame ones, term by term.
pub fn lab_moments_from_rest(rest: &MomentSet, v: &BoostVelocity) -> MomentSet {
    let v = v.v;
    let v2 = dot(&v, &v);
    let m = rest.m;
    let mi = rest.m_i;
    let mll = rest.m_ij.trace();
    let mv = rest.m_ij.mul_vec(&v);
    let mdotv = dot(&mi, &v);

    let f_i: [f64; 3] = std::array::from_fn(|i| mi[i] + m * v[i]);
    let f_ij = {
        let a: [[f64; 3]; 3] = std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                rest.m_ij.get(i, j) + mi[i] * v[j] + mi[j] * v[i] + m * v[i] * v[j]
            })
        });
        SymMatrix::symmetrized(&a)
    };
    let f_ill: [f64; 3] = std::array::from_fn(|i| {
        rest.m_ill[i] + mll * v[i] + 2.0 * mv[i] + mi[i] * v2 + 2.0 * mdotv * v[i] + m * v2 * v[i]
    });
    let f_iill = rest.m_iill
        + 4.0 * dot(&rest.m_ill, &v)
        + 2.0 * mll * v2
        + 4.0 * dot(&v, &mv)
        + 4.0 * mdotv * v2
        + m * v2 * v2;

    // fluxes
    let mk = rest.m_k;
    let mki = rest.m_ki;
    let mkll = rest.m_kll();
    let mki_v: [f64; 3] = std::array::from_fn(|k| dot(&mki[k], &v));
    let mkij_v: [[f64; 3]; 3] = std::array::from_fn(|k| rest.m_kij[k].mul_vec(&v));

    let f_k: [f64; 3] = std::array::from_fn(|k| m * v[k] + mk[k]);
    let f_ki: [[f64; 3]; 3] =
        std::array::from_fn(|k| std::array::from_fn(|i| f_i[i] * v[k] + mki[k][i] + mk[k] * v[i]));
    let f_kij: [SymMatrix; 3] = std::array::from_fn(|k| {
        let a: [[f64; 3]; 3] = std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                f_ij.get(i, j) * v[k]
                    + rest.m_kij[k].get(i, j)
                    + mki[k][i] * v[j]
                    + mki[k][j] * v[i]
                    + mk[k] * v[i] * v[j]
            })
        });
        SymMatrix::symmetrized(&a)
    });
    let f_kill: [[f64; 3]; 3] = std::array::from_fn(|k| {
        std::array::from_fn(|i| {
            f_ill[i] * v[k]
                + rest.m_kill[k][i]
                + mkll[k] * v[i]
                + 2.0 * mkij_v[k][i]
                + mki[k][i] * v2
                + 2.0 * mki_v[k] * v[i]
                + mk[k] * v2 * v[i]
        })
    });
    let f_kiill: [f64; 3] = std::array::from_fn(|k| {
        f_iill * v[k]
            + rest.m_kiill[k]
            + 4.0 * dot(&rest.m_kill[k], &v)
            + 2.0 * mkll[k] * v2
            + 4.0 * dot(&mkij_v[k], &v)
            + 4.0 * mki_v[k] * v2
            + mk[k] * v2 * v2
    });

    MomentSet {
        frame: MomentFrame::Lab,
        m,
        m_i: f_i,
        m_ij: f_ij,
        m_ill: f_ill,
        m_iill: f_iill,
        m_k: f_k,
        m_ki: f_ki,
        m_kij: f_kij,
        m_kill: f_kill,
        m_kiill: f_kiill,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::eval_h_hat;
    use crate::potentials::eval_phi_hat;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lab_state() -> MultiplierState {
        MultiplierState {
            frame: Frame::Lab,
            lambda: 0.3,
            lambda_i: [0.1, -0.2, 0.05],
            lambda_ij: SymMatrix::from_components([0.5, 0.4, 0.6, 0.02, -0.01, 0.03]),
            lambda_ill: [0.02, 0.01, -0.03],
            lambda_iill: 0.01,
        }
    }

    /// Exponent of the distribution, `chi(c) = lambda + lambda_i c_i + ...`.
    fn chi(s: &MultiplierState, c: [f64; 3]) -> f64 {
        let c2 = dot(&c, &c);
        s.lambda
            + dot(&s.lambda_i, &c)
            + dot(&c, &s.lambda_ij.mul_vec(&c))
            + dot(&s.lambda_ill, &c) * c2
            + s.lambda_iill * c2 * c2
    }

    #[test]
    fn zero_boost_is_identity() {
        let s = lab_state();
        let h = hat_multipliers(&s, &BoostVelocity::zero()).unwrap();
        assert_eq!(h.with_frame(Frame::Lab), s);
    }

    #[test]
    fn spec_examples() {
        let mut s = lab_state();
        s.lambda_iill = 0.3;
        let h = hat_multipliers(&s, &BoostVelocity::new([0.7, -1.0, 2.0]).unwrap()).unwrap();
        assert_eq!(h.lambda_iill, 0.3);

        let s = MultiplierState {
            frame: Frame::Lab,
            lambda: 2.0,
            lambda_i: [1.0, 0.0, 0.0],
            lambda_ij: SymMatrix::zero(),
            lambda_ill: [0.0; 3],
            lambda_iill: 0.0,
        };
        let h = hat_multipliers(&s, &BoostVelocity::new([1.0, 0.0, 0.0]).unwrap()).unwrap();
        assert_eq!(h.lambda, 3.0);
        assert_eq!(h.lambda_i, [1.0, 0.0, 0.0]);
    }

    #[test]
    fn boost_preserves_exponent_pointwise() {
        // chi_lab(C + v) = chi_hat(C) for every peculiar velocity C
        let s = lab_state();
        let v = [0.3, -0.4, 0.25];
        let hat = hat_multipliers(&s, &BoostVelocity::new(v).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let c: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
            let lab_c = [c[0] + v[0], c[1] + v[1], c[2] + v[2]];
            let (a, b) = (chi(&s, lab_c), chi(&hat, c));
            assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn boosts_compose() {
        let s = lab_state();
        let (v, w) = ([0.2, 0.1, -0.3], [-0.05, 0.4, 0.1]);
        let once = hat_multipliers(
            &s,
            &BoostVelocity::new([v[0] + w[0], v[1] + w[1], v[2] + w[2]]).unwrap(),
        )
        .unwrap();
        let first = hat_multipliers(&s, &BoostVelocity::new(v).unwrap()).unwrap();
        let twice = hat_multipliers(
            &first.with_frame(Frame::Lab),
            &BoostVelocity::new(w).unwrap(),
        )
        .unwrap();
        assert!((once.lambda - twice.lambda).abs() < 1e-13);
        assert!(once.lambda_ij.sub(&twice.lambda_ij).max_abs() < 1e-13);
        for i in 0..3 {
            assert!((once.lambda_i[i] - twice.lambda_i[i]).abs() < 1e-13);
            assert!((once.lambda_ill[i] - twice.lambda_ill[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_boost_potentials_unchanged() {
        let f = GeneratingFamily::exponential(1.0).unwrap();
        let mut hat = MultiplierState::equilibrium(0.1, 1.2);
        hat.lambda_i = [0.05, 0.02, -0.04];
        hat.lambda_ill = [0.01, 0.0, 0.02];
        let pair = lab_potentials(
            &f,
            &hat.with_frame(Frame::Lab),
            &BoostVelocity::zero(),
            4,
            3,
        )
        .unwrap();
        assert_eq!(pair.h, eval_h_hat(&f, &hat, 4, 3).unwrap());
        assert_eq!(pair.phi, eval_phi_hat(&f, &hat, 4, 3).unwrap());
        assert_eq!((pair.n_trunc, pair.s_trunc), (4, 3));
    }

    #[test]
    fn phi_mapping_identity_is_exact() {
        let f = GeneratingFamily::exponential(1.0).unwrap();
        let lab = MultiplierState::equilibrium(0.0, 1.5).with_frame(Frame::Lab);
        let v = BoostVelocity::new([0.1, -0.05, 0.02]).unwrap();
        let pair = lab_potentials(&f, &lab, &v, 4, 2).unwrap();
        let hat = hat_multipliers(&lab, &v).unwrap();
        let h = eval_h_hat(&f, &hat, 4, 2).unwrap();
        let phi = eval_phi_hat(&f, &hat, 4, 2).unwrap();
        assert_eq!(pair.h, h);
        for ((lab_k, hat_k), v_k) in pair.phi.iter().zip(phi).zip(v.v) {
            assert_eq!(lab_k - hat_k - h * v_k, 0.0);
        }
    }

    /// Weighted particle moments in the velocity variable `c`.
    fn ensemble(particles: &[([f64; 3], f64)], shift: [f64; 3], frame: MomentFrame) -> MomentSet {
        let mut out = MomentSet::zero(frame);
        let mut m_ij = [[0.0; 3]; 3];
        let mut m_kij = [[[0.0; 3]; 3]; 3];
        for (c0, w) in particles {
            let c: [f64; 3] = std::array::from_fn(|i| c0[i] + shift[i]);
            let c2 = dot(&c, &c);
            out.m += w;
            for i in 0..3 {
                out.m_i[i] += w * c[i];
                out.m_ill[i] += w * c[i] * c2;
                out.m_k[i] += w * c[i];
                out.m_kiill[i] += w * c[i] * c2 * c2;
                for j in 0..3 {
                    m_ij[i][j] += w * c[i] * c[j];
                    out.m_ki[i][j] += w * c[i] * c[j];
                    out.m_kill[i][j] += w * c[i] * c[j] * c2;
                    for l in 0..3 {
                        m_kij[i][j][l] += w * c[i] * c[j] * c[l];
                    }
                }
            }
            out.m_iill += w * c2 * c2;
        }
        out.m_ij = SymMatrix::symmetrized(&m_ij);
        out.m_kij = std::array::from_fn(|k| SymMatrix::symmetrized(&m_kij[k]));
        out
    }

    #[test]
    fn moment_transformation_matches_particles() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let particles: Vec<([f64; 3], f64)> = (0..40)
            .map(|_| {
                (
                    std::array::from_fn(|_| rng.gen_range(-1.5..1.5)),
                    rng.gen_range(0.1..1.0),
                )
            })
            .collect();
        let v = [0.7, -0.3, 1.1];
        let rest = ensemble(&particles, [0.0; 3], MomentFrame::Rest);
        let direct = ensemble(&particles, v, MomentFrame::Lab);
        let mapped = lab_moments_from_rest(&rest, &BoostVelocity::new(v).unwrap());
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-11 * b.abs().max(1.0);
        assert!(close(mapped.m, direct.m));
        assert!(close(mapped.m_iill, direct.m_iill));
        for i in 0..3 {
            for (a, b) in [
                (mapped.m_i[i], direct.m_i[i]),
                (mapped.m_ill[i], direct.m_ill[i]),
                (mapped.m_k[i], direct.m_k[i]),
                (mapped.m_kiill[i], direct.m_kiill[i]),
            ] {
                assert!(close(a, b), "{a} vs {b}");
            }
            for j in 0..3 {
                assert!(close(mapped.m_ij.get(i, j), direct.m_ij.get(i, j)));
                assert!(close(mapped.m_ki[i][j], direct.m_ki[i][j]));
                assert!(close(mapped.m_kill[i][j], direct.m_kill[i][j]));
                for l in 0..3 {
                    assert!(close(mapped.m_kij_at(i, j, l), direct.m_kij_at(i, j, l)));
                }
            }
        }
        // flux blocks that restate densities stay consistent after the boost
        assert!(mapped.rank2_asymmetry() < 1e-11);
        assert!(mapped.rank3_asymmetry() < 1e-11);
        for k in 0..3 {
            assert!(close(mapped.m_k[k], mapped.m_i[k]));
            assert!(close(mapped.m_kll()[k], mapped.m_ill[k]));
        }
    }

    #[test]
    fn spec_moment_examples() {
        let mut rest = MomentSet::zero(MomentFrame::Rest);
        rest.m = 2.0;
        rest.m_i = [1.0, 0.0, 0.0];
        let lab = lab_moments_from_rest(&rest, &BoostVelocity::new([3.0, 0.0, 0.0]).unwrap());
        assert_eq!(lab.m, 2.0);
        assert_eq!(lab.m_i[0], 7.0);
        assert_eq!(
            lab_moments_from_rest(&rest, &BoostVelocity::zero()).m_i,
            rest.m_i
        );
    }
}
