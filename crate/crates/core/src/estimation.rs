//! Pilot assignment, MMSE channel estimation and precoders.

use crate::channels::SpatialCorrelation;
use crate::error::{Error, Result};
use crate::linalg::{hermitize, trace_re, CMatrix, CVector, C64};
use crate::scenario::{Position, UniformLinearArray};

/// How pilots are handed out to UEs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PilotPolicy {
    /// UE `k` gets pilot `k mod tau_p`.
    #[default]
    RoundRobin,
}

/// Orthogonal pilot codebook and its assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotAssignment {
    tau_p: usize,
    pilot_index: Vec<usize>,
}

pub fn assign_pilots(num_ues: usize, tau_p: usize, policy: PilotPolicy) -> Result<PilotAssignment> {
    if tau_p == 0 {
        return Err(Error::Config("tau_p must be at least 1".into()));
    }
    let pilot_index = match policy {
        PilotPolicy::RoundRobin => (0..num_ues).map(|k| k % tau_p).collect(),
    };
    Ok(PilotAssignment { tau_p, pilot_index })
}

impl PilotAssignment {
    pub fn tau_p(&self) -> usize {
        self.tau_p
    }

    pub fn pilot_of(&self, k: usize) -> usize {
        self.pilot_index[k]
    }

    pub fn num_ues(&self) -> usize {
        self.pilot_index.len()
    }

    /// `P_k`, including `k` itself.
    pub fn copilots(&self, k: usize) -> Vec<usize> {
        let p = self.pilot_index[k];
        (0..self.pilot_index.len())
            .filter(|&j| self.pilot_index[j] == p)
            .collect()
    }

    /// Non-empty pilot groups, ordered by pilot index.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        (0..self.tau_p)
            .map(|p| {
                (0..self.pilot_index.len())
                    .filter(|&j| self.pilot_index[j] == p)
                    .collect::<Vec<_>>()
            })
            .filter(|g| !g.is_empty())
            .collect()
    }

    /// Codebook of `tau_p` DFT sequences, each with squared norm `tau_p`.
    /// Column `p` is pilot `p`.
    pub fn pilot_matrix(&self) -> CMatrix {
        let n = self.tau_p;
        CMatrix::from_fn(n, n, |t, p| {
            C64::from_polar(1.0, -2.0 * std::f64::consts::PI * (t * p) as f64 / n as f64)
        })
    }

    /// `π_j^H π_k` of the codebook (`tau_p` for copilots, else 0).
    pub fn inner_product(&self, j: usize, k: usize) -> f64 {
        if self.pilot_index[j] == self.pilot_index[k] {
            self.tau_p as f64
        } else {
            0.0
        }
    }

    /// Correlation of the pilot sequences normalized to unit energy
    /// (1 for copilots, else 0). This is the factor that multiplies the
    /// coherent interference term of the SINR.
    pub fn overlap(&self, j: usize, k: usize) -> f64 {
        self.inner_product(j, k) / self.tau_p as f64
    }
}

/// MMSE filters `Λ_{k,m}` and estimate covariances `Φ_{k,m} = Λ_{k,m} C_{k,m}`.
#[derive(Debug, Clone)]
pub struct EstimationMatrices {
    n_tx: usize,
    lambda: Vec<CMatrix>,
    phi: Vec<CMatrix>,
    tr_phi: Vec<f64>,
    /// Variance of the effective noise after pilot despreading, `σ²/(p_u τ_p)`.
    pilot_noise: f64,
}

impl EstimationMatrices {
    /// Direct construction, mostly for tests and limiting cases.
    pub fn from_parts(n_tx: usize, lambda: Vec<CMatrix>, phi: Vec<CMatrix>, pilot_noise: f64) -> Self {
        let tr_phi = phi.iter().map(trace_re).collect();
        Self {
            n_tx,
            lambda,
            phi,
            tr_phi,
            pilot_noise,
        }
    }

    pub fn lambda(&self, k: usize, t: usize) -> &CMatrix {
        &self.lambda[k * self.n_tx + t]
    }

    pub fn phi(&self, k: usize, t: usize) -> &CMatrix {
        &self.phi[k * self.n_tx + t]
    }

    pub fn tr_phi(&self, k: usize, t: usize) -> f64 {
        self.tr_phi[k * self.n_tx + t]
    }

    pub fn pilot_noise_level(&self) -> f64 {
        self.pilot_noise
    }
}

/// `Λ = C (Σ_{j∈P_k} C_j + σ²/(p_u τ_p) I)^{-1}`, `Φ = Λ C`.
pub fn build_estimation(
    correlation: &SpatialCorrelation,
    pilots: &PilotAssignment,
    pilot_power: f64,
    noise_power: f64,
) -> Result<EstimationMatrices> {
    if !(pilot_power > 0.0 && noise_power > 0.0) {
        return Err(Error::Domain(
            "pilot power and noise power must be positive".into(),
        ));
    }
    let (n_ues, n_tx) = (correlation.n_ues(), correlation.n_tx());
    let pilot_noise = noise_power / (pilot_power * pilots.tau_p() as f64);
    let mut lambda = Vec::with_capacity(n_ues * n_tx);
    let mut phi = Vec::with_capacity(n_ues * n_tx);
    for k in 0..n_ues {
        let group = pilots.copilots(k);
        for t in 0..n_tx {
            let c = correlation.get(k, t);
            let n = c.nrows();
            let mut q = CMatrix::identity(n, n) * C64::new(pilot_noise, 0.0);
            for &j in &group {
                q += correlation.get(j, t);
            }
            let q = hermitize(&q);
            // Λ^H = Q^{-1} C because Q and C are Hermitian.
            let chol = q.clone().cholesky().ok_or_else(|| {
                Error::Numerical(format!("pilot covariance not invertible (UE {k}, AP {t})"))
            })?;
            let lambda_h = chol.solve(c);
            let residual = (&q * &lambda_h - c).norm();
            if residual > 1e-9 * c.norm().max(f64::MIN_POSITIVE) {
                return Err(Error::Numerical(format!(
                    "MMSE inversion residual {residual:e} too large (UE {k}, AP {t})"
                )));
            }
            let l = lambda_h.adjoint();
            let p = hermitize(&(&l * c));
            lambda.push(l);
            phi.push(p);
        }
    }
    Ok(EstimationMatrices::from_parts(n_tx, lambda, phi, pilot_noise))
}

/// Maximum-ratio precoder `ĥ / sqrt(tr Φ)`, unit power on average.
pub fn mrt_precoder(h_hat: &CVector, tr_phi: f64) -> Result<CVector> {
    if !(tr_phi > 0.0) {
        return Err(Error::Domain(format!(
            "MRT precoder undefined for tr(Phi) = {tr_phi}"
        )));
    }
    Ok(h_hat / C64::new(tr_phi.sqrt(), 0.0))
}

/// Unit-norm sensing beam `a(p) / sqrt(N)` from an AP at `ap` toward `cell`.
pub fn sensing_beamformer(array: &UniformLinearArray, ap: &Position, cell: &Position) -> CVector {
    array.steering_toward(ap, cell) / C64::new((array.elements as f64).sqrt(), 0.0)
}
