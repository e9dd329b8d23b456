use nalgebra::{DMatrix, DVector};

use super::layout::VariableLayout;
use crate::comm::{PowerAllocation, SinrCoefficients};
use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::sensing::SensingQuadratic;
use crate::socp::SocConstraint;

/// Per-AP budget `‖b_m‖ ≤ √P_m` over the layout variables of each AP that
/// has any. `extra` trailing variables are left out of the cones.
pub fn budget_cones(scenario: &Scenario, layout: &VariableLayout, extra: usize) -> Vec<SocConstraint> {
    let n = layout.len() + extra;
    (0..scenario.num_tx())
        .filter(|&t| !layout.ap(t).is_empty())
        .map(|t| {
            let vars = layout.ap(t);
            let mut a = DMatrix::zeros(vars.len(), n);
            for (r, &v) in vars.iter().enumerate() {
                a[(r, v)] = 1.0;
            }
            SocConstraint {
                a,
                b: DVector::zeros(vars.len()),
                c: DVector::zeros(n),
                d: scenario.power_budget(t).sqrt(),
            }
        })
        .collect()
}

/// Second-order-cone form of `γ_k(b) ≥ γ0`:
///
/// ```text
/// ‖ϱ_k(b)‖ ≤ √(1 + 1/γ0) Σ_m ζ_{k,m} √tr Φ_{k,m}
/// ```
///
/// where `‖ϱ_k‖²` is the SINR denominator plus its numerator. Rows are
/// divided by `σ_z` so that the noise row is the constant 1. Only layout
/// variables appear; amplitudes outside the layout are taken as zero.
pub fn build_soc_c3(
    coefficients: &SinrCoefficients,
    layout: &VariableLayout,
    k: usize,
    gamma0: f64,
    extra: usize,
) -> Result<SocConstraint> {
    if !(gamma0 > 0.0) || !gamma0.is_finite() {
        return Err(Error::Domain(format!("SINR floor must be positive, got {gamma0}")));
    }
    let n = layout.len() + extra;
    let sigma = coefficients.noise().sqrt();
    let mut rows: Vec<DVector<f64>> = Vec::new();
    let mut consts: Vec<f64> = Vec::new();

    for j in 0..coefficients.n_ues() {
        for &t in coefficients.serving(j) {
            let u = coefficients.uncertainty(k, j, t);
            if let Some(v) = layout.zeta(j, t) {
                if u > 0.0 {
                    let mut row = DVector::zeros(n);
                    row[v] = u.sqrt();
                    rows.push(row);
                    consts.push(0.0);
                }
            }
        }
    }
    for j in coefficients.interfering_copilots(k) {
        let mut re = DVector::zeros(n);
        let mut im = DVector::zeros(n);
        for &t in coefficients.serving(j) {
            if let Some(v) = layout.zeta(j, t) {
                let c = coefficients.coherent(k, j, t);
                re[v] = c.re;
                im[v] = c.im;
            }
        }
        for row in [re, im] {
            if row.amax() > 0.0 {
                rows.push(row);
                consts.push(0.0);
            }
        }
    }
    for t in 0..coefficients.n_tx() {
        for &i in coefficients.beams(t) {
            let l = coefficients.leakage(k, i, t);
            if let Some(v) = layout.nu(i, t) {
                if l > 0.0 {
                    let mut row = DVector::zeros(n);
                    row[v] = l.sqrt();
                    rows.push(row);
                    consts.push(0.0);
                }
            }
        }
    }
    rows.push(DVector::zeros(n));
    consts.push(sigma);
    let mut useful = DVector::zeros(n);
    for &t in coefficients.serving(k) {
        if let Some(v) = layout.zeta(k, t) {
            useful[v] = coefficients.useful(k, t);
        }
    }
    rows.push(useful.clone());
    consts.push(0.0);

    let mut a = DMatrix::zeros(rows.len(), n);
    for (r, row) in rows.iter().enumerate() {
        a.set_row(r, &row.transpose());
    }
    let b = DVector::from_vec(consts);
    let scale = (1.0 + 1.0 / gamma0).sqrt();
    Ok(SocConstraint {
        a: a / sigma,
        b: b / sigma,
        c: useful * (scale / sigma),
        d: 0.0,
    })
}

/// Affine function `g^T x + c` of the layout variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub g: DVector<f64>,
    pub c: f64,
}

impl Affine {
    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        self.g.dot(x) + self.c
    }
}

/// First-order expansion of the sensing energy `q_i(b) = Σ_m b_m^T F̄_{i,m} b_m`
/// around `b_prev`, restricted to the layout: `q(b_prev) + ∇q(b_prev)^T (b − b_prev)`.
/// A global under-estimator of `q_i`, exact at `b_prev`. Divide by
/// [`SensingQuadratic::normalization`] for effective-SNR units.
pub fn sca_linearize(
    quadratic: &SensingQuadratic,
    layout: &VariableLayout,
    i: usize,
    b_prev: &PowerAllocation,
) -> Affine {
    let b0 = layout.restrict(b_prev).stacked();
    let grad = quadratic.gradient(i, &b0);
    let q0 = quadratic.energy_stacked(i, &b0);
    let g = DVector::from_iterator(layout.len(), (0..layout.len()).map(|v| grad[layout.stacked_index(v)]));
    Affine {
        c: q0 - grad.dot(&b0),
        g,
    }
}
