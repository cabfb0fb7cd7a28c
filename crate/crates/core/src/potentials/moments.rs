use super::eval::{eval_h_with, eval_phi_with, PotentialArgs};
use super::{MomentFrame, MomentSet, MultiplierState};
use crate::coeffs::{CoefficientSource, DerivativeOrders, GeneratingFamily};
use crate::error::Result;
use crate::fd::{central4, step_for};
use crate::symtensor::{SymMatrix, SYM_PAIRS};

/// `[h', phi'^0, phi'^1, phi'^2]`.
fn both<C: CoefficientSource + ?Sized>(
    src: &C,
    args: &PotentialArgs,
    n: usize,
    s: usize,
    orders: DerivativeOrders,
) -> Result<[f64; 4]> {
    let h = eval_h_with(src, args, n, s, orders)?;
    let p = eval_phi_with(src, args, n, s, orders)?;
    Ok([h, p[0], p[1], p[2]])
}

/// Gradient of `[h', phi']` along one component selected by `set`.
fn fd_component<C: CoefficientSource + ?Sized>(
    src: &C,
    args: &PotentialArgs,
    n: usize,
    s: usize,
    x0: f64,
    step_scale: f64,
    set: impl Fn(&mut PotentialArgs, f64),
) -> Result<[f64; 4]> {
    central4(
        |x| {
            let mut a = *args;
            set(&mut a, x);
            both(src, &a, n, s, DerivativeOrders::default())
        },
        x0,
        step_scale * step_for(x0),
    )
}

/// Densities and fluxes as multiplier gradients of `h^'` and `phi^'`.
/// Scalar directions are analytic; vector and deviator directions use
/// fourth-order central differences.
pub fn moments_with<C: CoefficientSource + ?Sized>(
    src: &C,
    args: &PotentialArgs,
    n: usize,
    s: usize,
) -> Result<MomentSet> {
    moments_with_step(src, args, n, s, 1.0)
}

/// [`moments_with`] with every difference step multiplied by `step_scale`.
pub fn moments_with_step<C: CoefficientSource + ?Sized>(
    src: &C,
    args: &PotentialArgs,
    n: usize,
    s: usize,
    step_scale: f64,
) -> Result<MomentSet> {
    let mut out = MomentSet::zero(MomentFrame::Rest);

    let d_lambda = both(
        src,
        args,
        n,
        s,
        DerivativeOrders {
            lambda: 1,
            series: 0,
        },
    )?;
    out.m = d_lambda[0];
    out.m_k = [d_lambda[1], d_lambda[2], d_lambda[3]];
    let d_q = both(
        src,
        args,
        n,
        s,
        DerivativeOrders {
            lambda: 0,
            series: 1,
        },
    )?;
    out.m_iill = d_q[0];
    out.m_kiill = [d_q[1], d_q[2], d_q[3]];

    for i in 0..3 {
        let g = fd_component(src, args, n, s, args.lambda_i[i], step_scale, |a, x| {
            a.lambda_i[i] = x
        })?;
        out.m_i[i] = g[0];
        for k in 0..3 {
            out.m_ki[k][i] = g[1 + k];
        }
        let g = fd_component(src, args, n, s, args.lambda_ill[i], step_scale, |a, x| {
            a.lambda_ill[i] = x
        })?;
        out.m_ill[i] = g[0];
        for k in 0..3 {
            out.m_kill[k][i] = g[1 + k];
        }
    }

    let mut m_ij = [0.0; 6];
    let mut m_kij = [[0.0; 6]; 3];
    for (c, &(i, j)) in SYM_PAIRS.iter().enumerate() {
        let x0 = args.deviator.get(i, j);
        let g = fd_component(src, args, n, s, x0, step_scale, |a, x| {
            *a.deviator.component_mut(c) = x
        })?;
        // an off-diagonal parameter moves both (i, j) and (j, i)
        let w = if i == j { 1.0 } else { 0.5 };
        m_ij[c] = w * g[0];
        for k in 0..3 {
            m_kij[k][c] = w * g[1 + k];
        }
    }
    out.m_ij = SymMatrix::from_components(m_ij);
    out.m_kij = m_kij.map(SymMatrix::from_components);
    Ok(out)
}

pub fn moments_from_potentials(
    f: &GeneratingFamily,
    state: &MultiplierState,
    n: usize,
    s: usize,
) -> Result<MomentSet> {
    moments_with(f, &PotentialArgs::from_state(state)?, n, s)
}
