use serde::{Deserialize, Serialize};

use super::points::{state_coords, TestPointSet};
use super::report::{relative_max_above, Record, ReportMetadata, VerificationReport};
use crate::coeffs::{CoefficientSource, DerivativeOrders};
use crate::error::Result;
use crate::fd::rounding_floor;
use crate::potentials::{
    eval_h_with, eval_phi_with, moments_with_step, MomentSet, MultiplierState, PotentialArgs,
};

/// Roundoff allowance per potential evaluation, in units of machine epsilon.
pub const EVAL_ULPS: f64 = 16.0;

pub const READING_TRACE3: &str = "compat.trace3: the delta contracts the lower pair of the flux derivative, d h^/d lambda^_kll = sum_i d phi^k/d lambda^_ii";
pub const READING_SYM_KIJ: &str =
    "compat.sym_kij: the part of d phi^k/d lambda^_ij antisymmetric in (k, j) vanishes";
pub const READING_FLOOR: &str = "finite-difference values closer than the rounding floor 1.5 * 16 eps * max(|h^|, |phi^|) / h are treated as equal";
pub const READING_MATCHING: &str = "compat.trace3 and compat.scalar4 compare h^ at rank N with phi^ at rank N+2, and compat.scalar4 pairs series order S on the h^ side with S-1 on the phi^ side; vector and matrix relations need even N";

pub const ANCHOR_VECTOR: &str = "d h^/d lambda^_k = d phi^k/d lambda^";
pub const ANCHOR_MATRIX: &str = "d h^/d lambda^_ki = d phi^k/d lambda^_i";
pub const ANCHOR_TRACE3: &str = "d h^/d lambda^_kll = d phi^k/d lambda^_ij delta_ij";
pub const ANCHOR_SYM_KIJ: &str = "d phi^[k/d lambda^_i|j] = 0";
pub const ANCHOR_SCALAR4: &str = "d h^/d lambda^_kkll = d phi^k/d lambda^_kll";
pub const ANCHOR_SYM_KILL: &str = "d phi^[k/d lambda^_ll|i] = 0";

/// Finite-difference scheme for the moments. With `extrapolate`, moments at
/// `step_scale` and `step_scale / 2` are combined to cancel the `h^4` term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Differencing {
    pub step_scale: f64,
    pub extrapolate: bool,
}

impl Default for Differencing {
    fn default() -> Self {
        Self {
            step_scale: 1.0,
            extrapolate: false,
        }
    }
}

type Pair = (Vec<f64>, Vec<f64>);

/// Both sides of the six relations from moments at matched truncations.
/// `base` is `(N, S)`; `wide` is `(N+2, S)`; `wide_low` is `(N+2, S-1)`.
fn relation_sides(
    base: &MomentSet,
    wide: &MomentSet,
    wide_low: Option<&MomentSet>,
) -> [Option<Pair>; 6] {
    let vector = (base.m_i.to_vec(), base.m_k.to_vec());

    let (mut a, mut b) = (Vec::with_capacity(9), Vec::with_capacity(9));
    for k in 0..3 {
        for i in 0..3 {
            a.push(base.m_ij.get(k, i));
            b.push(base.m_ki[k][i]);
        }
    }
    let matrix = (a, b);

    let trace3 = (base.m_ill.to_vec(), wide.m_kll().to_vec());

    let (mut a, mut b) = (Vec::with_capacity(27), Vec::with_capacity(27));
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                a.push(base.m_kij_at(k, i, j));
                b.push(base.m_kij_at(j, i, k));
            }
        }
    }
    let sym_kij = (a, b);

    let scalar4 = wide_low.map(|w| {
        let tr = (0..3).map(|k| w.m_kill[k][k]).sum::<f64>();
        (vec![base.m_iill], vec![tr])
    });

    let (mut a, mut b) = (Vec::with_capacity(9), Vec::with_capacity(9));
    for k in 0..3 {
        for i in 0..3 {
            a.push(base.m_kill[k][i]);
            b.push(base.m_kill[i][k]);
        }
    }
    let sym_kill = (a, b);

    [
        Some(vector),
        Some(matrix),
        Some(trace3),
        Some(sym_kij),
        scalar4,
        Some(sym_kill),
    ]
}

const RELATIONS: [(&str, &str); 6] = [
    ("compat.vector", ANCHOR_VECTOR),
    ("compat.matrix", ANCHOR_MATRIX),
    ("compat.trace3", ANCHOR_TRACE3),
    ("compat.sym_kij", ANCHOR_SYM_KIJ),
    ("compat.scalar4", ANCHOR_SCALAR4),
    ("compat.sym_kill", ANCHOR_SYM_KILL),
];

struct Evaluated {
    sides: [Option<Pair>; 6],
    noise: f64,
    structural: bool,
}

fn sides_at<C: CoefficientSource + ?Sized>(
    src: &C,
    args: &PotentialArgs,
    n: usize,
    s: usize,
    step_scale: f64,
) -> Result<([Option<Pair>; 6], bool)> {
    let base = moments_with_step(src, args, n, s, step_scale)?;
    let wide = moments_with_step(src, args, n + 2, s, step_scale)?;
    let wide_low = match s {
        0 => None,
        _ => Some(moments_with_step(src, args, n + 2, s - 1, step_scale)?),
    };
    let structural = base.m_kij.iter().all(|m| m.is_finite());
    Ok((relation_sides(&base, &wide, wide_low.as_ref()), structural))
}

/// `(16 fine - coarse) / 15`, elementwise on both sides.
fn richardson(fine: [Option<Pair>; 6], coarse: [Option<Pair>; 6]) -> [Option<Pair>; 6] {
    let mix = |f: Vec<f64>, c: Vec<f64>| -> Vec<f64> {
        f.iter()
            .zip(&c)
            .map(|(f, c)| (16.0 * f - c) / 15.0)
            .collect()
    };
    let mut out: [Option<Pair>; 6] = Default::default();
    for (slot, (f, c)) in out.iter_mut().zip(fine.into_iter().zip(coarse)) {
        *slot = match (f, c) {
            (Some((fa, fb)), Some((ca, cb))) => Some((mix(fa, ca), mix(fb, cb))),
            _ => None,
        };
    }
    out
}

fn evaluate<C: CoefficientSource + ?Sized>(
    src: &C,
    state: &MultiplierState,
    n: usize,
    s: usize,
    scheme: Differencing,
) -> Result<Evaluated> {
    let args = PotentialArgs::from_state(state)?;
    let h = eval_h_with(src, &args, n + 2, s, DerivativeOrders::default())?;
    let phi = eval_phi_with(src, &args, n + 2, s, DerivativeOrders::default())?;
    let magnitude = phi.iter().fold(h.abs(), |m, x| m.max(x.abs()));
    // every differenced component is bounded by epsilon <= 0.1, so the step is the unit one
    let floor = rounding_floor(magnitude, 0.0, EVAL_ULPS) / scheme.step_scale;
    let (coarse, structural) = sides_at(src, &args, n, s, scheme.step_scale)?;
    if !scheme.extrapolate {
        return Ok(Evaluated {
            sides: coarse,
            noise: 2.0 * floor,
            structural,
        });
    }
    let (fine, _) = sides_at(src, &args, n, s, scheme.step_scale / 2.0)?;
    Ok(Evaluated {
        sides: richardson(fine, coarse),
        // (16 * 2 + 1) / 15 times the coarse floor on each side
        noise: 2.0 * floor * 33.0 / 15.0,
        structural,
    })
}

/// Compatibility relations at explicit states: six relation records and one
/// storage record per state.
pub fn check_compatibility_at<C: CoefficientSource + ?Sized>(
    src: &C,
    states: &[MultiplierState],
    n_trunc: usize,
    s_trunc: usize,
    scheme: Differencing,
    tolerance: f64,
    prefix: &str,
) -> Vec<Record> {
    let mut out = Vec::with_capacity(6 * states.len());
    for (idx, state) in states.iter().enumerate() {
        let coords = state_coords(state);
        let id = |c: &str| format!("{prefix}{c}");
        match evaluate(src, state, n_trunc, s_trunc, scheme) {
            Ok(ev) => {
                for ((cond, anchor), sides) in RELATIONS.into_iter().zip(ev.sides) {
                    out.push(match sides {
                        Some((a, b)) => Record::measured(
                            id(cond),
                            anchor,
                            idx,
                            coords.clone(),
                            relative_max_above(&a, &b, ev.noise),
                            tolerance,
                        ),
                        None => Record::skipped(
                            id(cond),
                            anchor,
                            idx,
                            coords.clone(),
                            "series truncation S = 0 has no lambda^_ppqq dependence",
                        ),
                    });
                }
                // storage-level symmetry, independent of the finite differences
                out.push(Record::measured(
                    id("compat.structure"),
                    "m_kij stored as symmetric matrices in (i, j)",
                    idx,
                    coords.clone(),
                    if ev.structural { 0.0 } else { f64::INFINITY },
                    0.0,
                ));
            }
            Err(e) => {
                for (cond, anchor) in RELATIONS {
                    out.push(Record::errored(
                        id(cond),
                        anchor,
                        idx,
                        coords.clone(),
                        tolerance,
                        &e,
                    ));
                }
            }
        }
    }
    out
}

/// All six compatibility relations at the hatted states of `points`,
/// by fourth-order central differences of the truncated potentials.
pub fn check_compatibility<C: CoefficientSource + ?Sized>(
    src: &C,
    points: &TestPointSet,
    tolerance: f64,
) -> VerificationReport {
    let records = check_compatibility_at(
        src,
        &points.hatted_states(),
        points.n_trunc,
        points.s_trunc,
        Differencing::default(),
        tolerance,
        "",
    );
    VerificationReport::from_records(
        ReportMetadata {
            family: None,
            n_trunc: points.n_trunc,
            s_trunc: points.s_trunc,
            seed: points.seed,
            point_count: points.count,
            notes: vec![
                READING_TRACE3.into(),
                READING_SYM_KIJ.into(),
                READING_MATCHING.into(),
                READING_FLOOR.into(),
            ],
        },
        records,
    )
}
