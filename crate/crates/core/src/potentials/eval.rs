use super::{Frame, MultiplierState};
use crate::coeffs::{
    CoefficientKind, CoefficientRequest, CoefficientSource, DerivativeOrders, EquilibriumPoint,
    GeneratingFamily,
};
use crate::error::{Error, Result};
use crate::symtensor::{
    contract, contract_free, deviator, sym_delta_with_limit, Slot, SymMatrix, Vec3, HARD_MAX_RANK,
};

/// Hatted state split into the scalars the coefficients depend on and the
/// tensors they contract with. The deviator is an independent argument, which
/// is how `d / d lambda_<ij>` is realized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialArgs {
    pub point: EquilibriumPoint,
    pub lambda_i: Vec3,
    pub deviator: SymMatrix,
    pub lambda_ill: Vec3,
}

impl PotentialArgs {
    pub fn from_state(state: &MultiplierState) -> Result<Self> {
        state.expect_frame(Frame::Hatted)?;
        state.validate()?;
        let point =
            EquilibriumPoint::new(state.lambda, state.lambda_ij.trace(), state.lambda_iill)?;
        Ok(Self {
            point,
            lambda_i: state.lambda_i,
            deviator: deviator(&state.lambda_ij),
            lambda_ill: state.lambda_ill,
        })
    }

    pub fn to_state(&self) -> MultiplierState {
        MultiplierState {
            frame: Frame::Hatted,
            lambda: self.point.lambda,
            lambda_i: self.lambda_i,
            lambda_ij: SymMatrix::identity()
                .scale(self.point.lambda_ll / 3.0)
                .add(&self.deviator),
            lambda_ill: self.lambda_ill,
            lambda_iill: self.point.lambda_ppqq,
        }
    }

    fn slots(&self, p: usize, q: usize, r: usize) -> Vec<Slot> {
        let mut s = Vec::with_capacity(p + q + r);
        s.extend(std::iter::repeat_n(Slot::Vector(self.lambda_i), p));
        s.extend(std::iter::repeat_n(Slot::Vector(self.lambda_ill), q));
        s.extend(std::iter::repeat_n(Slot::Matrix(self.deviator), r));
        s
    }

    /// `true` when some slot factor is identically zero.
    fn vanishes(&self, p: usize, q: usize, r: usize) -> bool {
        let zero = |v: &Vec3| v.iter().all(|x| *x == 0.0);
        (p > 0 && zero(&self.lambda_i))
            || (q > 0 && zero(&self.lambda_ill))
            || (r > 0 && self.deviator.max_abs() == 0.0)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Terms `(p, q, r)` with `p + q` of the given parity and `p + q + 2r <= max_core`.
fn terms(max_core: usize, odd: bool) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..=max_core).flat_map(move |p| {
        (0..=max_core - p).flat_map(move |q| {
            let parity_ok = ((p + q) % 2 == 1) == odd;
            let r_max = if parity_ok { (max_core - p - q) / 2 } else { 0 };
            (0..=r_max)
                .filter(move |_| parity_ok)
                .map(move |r| (p, q, r))
        })
    })
}

fn check_rank(rank: usize) -> Result<()> {
    if rank > HARD_MAX_RANK {
        return Err(Error::RankTooLarge {
            rank,
            max: HARD_MAX_RANK,
        });
    }
    Ok(())
}

/// `h'` truncated at tensor rank `n_trunc`, with optional derivatives of the
/// scalar coefficients.
pub fn eval_h_with<C: CoefficientSource + ?Sized>(
    src: &C,
    args: &PotentialArgs,
    n_trunc: usize,
    s_trunc: usize,
    orders: DerivativeOrders,
) -> Result<f64> {
    check_rank(n_trunc)?;
    let mut sum = 0.0;
    for (p, q, r) in terms(n_trunc, false) {
        if args.vanishes(p, q, r) {
            continue;
        }
        let c = src.coefficient(
            CoefficientKind::H,
            CoefficientRequest::new(p, q, r),
            &args.point,
            s_trunc,
            orders,
        )?;
        if c == 0.0 {
            continue;
        }
        let delta = sym_delta_with_limit(p + q + 2 * r, HARD_MAX_RANK)?;
        let weight = factorial(p) * factorial(q) * factorial(r);
        sum += c / weight * contract(delta.tensor(), &args.slots(p, q, r))?;
    }
    Ok(sum)
}

/// `phi'^k` truncated at tensor rank `n_trunc + 1`.
pub fn eval_phi_with<C: CoefficientSource + ?Sized>(
    src: &C,
    args: &PotentialArgs,
    n_trunc: usize,
    s_trunc: usize,
    orders: DerivativeOrders,
) -> Result<Vec3> {
    check_rank(n_trunc + 1)?;
    let mut sum = [0.0; 3];
    for (p, q, r) in terms(n_trunc, true) {
        if args.vanishes(p, q, r) {
            continue;
        }
        let c = src.coefficient(
            CoefficientKind::Phi,
            CoefficientRequest::new(p, q, r),
            &args.point,
            s_trunc,
            orders,
        )?;
        if c == 0.0 {
            continue;
        }
        let delta = sym_delta_with_limit(p + q + 2 * r + 1, HARD_MAX_RANK)?;
        let weight = factorial(p) * factorial(q) * factorial(r);
        let v = contract_free(delta.tensor(), &args.slots(p, q, r))?;
        for k in 0..3 {
            sum[k] += c / weight * v[k];
        }
    }
    Ok(sum)
}

/// `h^'` at a hatted state.
pub fn eval_h_hat(
    f: &GeneratingFamily,
    state: &MultiplierState,
    n_trunc: usize,
    s_trunc: usize,
) -> Result<f64> {
    eval_h_with(
        f,
        &PotentialArgs::from_state(state)?,
        n_trunc,
        s_trunc,
        DerivativeOrders::default(),
    )
}

/// `phi^'^k` at a hatted state.
pub fn eval_phi_hat(
    f: &GeneratingFamily,
    state: &MultiplierState,
    n_trunc: usize,
    s_trunc: usize,
) -> Result<Vec3> {
    eval_phi_with(
        f,
        &PotentialArgs::from_state(state)?,
        n_trunc,
        s_trunc,
        DerivativeOrders::default(),
    )
}
