//! Channel statistics and per-block realizations.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::estimation::{EstimationMatrices, PilotAssignment};
use crate::linalg::{clip_psd, cn_correlated, cn_vector, psd_factor, CMatrix, CVector, C64};
use crate::scenario::{large_scale_gain, LinkKind, Position, Scenario};

const GAUSS_HERMITE_NODES: usize = 64;

/// Gauss–Hermite nodes and weights for `∫ exp(-x^2) f(x) dx`
/// (Golub–Welsch).
fn gauss_hermite() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GAUSS_HERMITE_NODES;
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            let b = (i as f64 / 2.0).sqrt();
            jacobi[(i, i - 1)] = b;
            jacobi[(i - 1, i)] = b;
        }
        let eig = jacobi.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                (eig.eigenvalues[i], PI.sqrt() * v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.into_iter().unzip()
    })
}

/// Normalized spatial correlation of the Gaussian local-scattering model:
/// `[R]_{l,n} = E_δ[exp(jπ(l-n) sin(az + δ) cos(el))]`, `δ ~ N(0, σ²)`.
/// Unit diagonal.
pub fn local_scattering(n: usize, azimuth: f64, elevation: f64, spread: f64) -> CMatrix {
    let lag_values: Vec<C64> = if spread == 0.0 {
        let phase = PI * azimuth.sin() * elevation.cos();
        (0..n).map(|d| C64::from_polar(1.0, phase * d as f64)).collect()
    } else {
        let (nodes, weights) = gauss_hermite();
        (0..n)
            .map(|d| {
                let mut acc = C64::new(0.0, 0.0);
                for (x, w) in nodes.iter().zip(weights) {
                    let delta = std::f64::consts::SQRT_2 * spread * x;
                    let phase = PI * d as f64 * (azimuth + delta).sin() * elevation.cos();
                    acc += C64::from_polar(*w, phase);
                }
                acc / PI.sqrt()
            })
            .collect()
    };
    CMatrix::from_fn(n, n, |l, m| {
        if l >= m {
            lag_values[l - m]
        } else {
            lag_values[m - l].conj()
        }
    })
}

/// `C_{k,m}` for every (UE, transmit AP) pair.
#[derive(Debug, Clone)]
pub struct SpatialCorrelation {
    n_ues: usize,
    n_tx: usize,
    matrices: Vec<CMatrix>,
    gains: Vec<f64>,
}

impl SpatialCorrelation {
    /// Builds from explicit per-pair matrices, `matrices[k * n_tx + t]`.
    pub fn from_matrices(n_ues: usize, n_tx: usize, matrices: Vec<CMatrix>) -> Result<Self> {
        if matrices.len() != n_ues * n_tx {
            return Err(Error::Dimension(format!(
                "expected {} correlation matrices, got {}",
                n_ues * n_tx,
                matrices.len()
            )));
        }
        let gains = matrices
            .iter()
            .map(|c| crate::linalg::trace_re(c) / c.nrows() as f64)
            .collect();
        Ok(Self {
            n_ues,
            n_tx,
            matrices,
            gains,
        })
    }

    pub fn get(&self, k: usize, t: usize) -> &CMatrix {
        &self.matrices[k * self.n_tx + t]
    }

    /// Large-scale gain, `tr(C_{k,m}) / N`.
    pub fn gain(&self, k: usize, t: usize) -> f64 {
        self.gains[k * self.n_tx + t]
    }

    pub fn n_ues(&self) -> usize {
        self.n_ues
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }
}

/// Spatial correlation of every UE–transmit-AP channel in the drop.
pub fn build_correlation(scenario: &Scenario) -> SpatialCorrelation {
    let spread = scenario.config.angular_spread_deg.to_radians();
    let n = scenario.antennas();
    let mut matrices = Vec::with_capacity(scenario.num_ues() * scenario.num_tx());
    for (k, ue) in scenario.ue_positions.iter().enumerate() {
        for t in 0..scenario.num_tx() {
            let (az, el) = scenario.tx_position(t).angles_to(ue);
            let r = local_scattering(n, az, el, spread);
            matrices.push(r * C64::new(scenario.ue_gains[k][t], 0.0));
        }
    }
    SpatialCorrelation::from_matrices(scenario.num_ues(), scenario.num_tx(), matrices)
        .expect("one matrix per pair")
}

/// Two-hop gains, steering responses and RCS covariance toward every radar cell.
#[derive(Debug, Clone)]
pub struct TargetGeometry {
    n_tx: usize,
    n_rx: usize,
    /// `beta[(i * n_rx + r) * n_tx + t]`.
    beta: Vec<f64>,
    /// Steering of tx AP `t` toward cell `i`, `[i * n_tx + t]`.
    tx_steering: Vec<CVector>,
    /// Steering of rx AP `r` toward cell `i`, `[i * n_rx + r]`.
    rx_steering: Vec<CVector>,
    /// RCS covariance per region (shared by all receive APs of the region).
    rcs: Vec<DMatrix<f64>>,
}

impl TargetGeometry {
    pub fn beta(&self, i: usize, r: usize, t: usize) -> f64 {
        self.beta[(i * self.n_rx + r) * self.n_tx + t]
    }

    pub fn tx_steering(&self, i: usize, t: usize) -> &CVector {
        &self.tx_steering[i * self.n_tx + t]
    }

    pub fn rx_steering(&self, i: usize, r: usize) -> &CVector {
        &self.rx_steering[i * self.n_rx + r]
    }

    /// `A_{i,r,t} = a_r a_t^H`.
    pub fn outer(&self, i: usize, r: usize, t: usize) -> CMatrix {
        self.rx_steering(i, r) * self.tx_steering(i, t).adjoint()
    }

    /// `R_{i,r}`, the covariance of the RCS vector seen by rx AP `r`.
    pub fn rcs_covariance(&self, i: usize, _r: usize) -> &DMatrix<f64> {
        &self.rcs[i]
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }
}

fn wrap_angle(a: f64) -> f64 {
    let mut x = (a + PI) % (2.0 * PI);
    if x < 0.0 {
        x += 2.0 * PI;
    }
    x - PI
}

/// Gaussian angle-of-view RCS covariance for the transmit APs seen from `cell`.
pub fn rcs_covariance(
    cell: &Position,
    tx_positions: &[Position],
    variance: f64,
    view_width: f64,
) -> Result<DMatrix<f64>> {
    let az: Vec<f64> = tx_positions.iter().map(|p| cell.angles_to(p).0).collect();
    let n = az.len();
    let kernel = DMatrix::from_fn(n, n, |a, b| {
        let d = wrap_angle(az[a] - az[b]);
        variance * (-d * d / (2.0 * view_width * view_width)).exp()
    });
    clip_psd(&kernel, 1e-9 * variance)
}

pub fn build_target_geometry(scenario: &Scenario) -> Result<TargetGeometry> {
    let cfg = &scenario.config;
    let (n_tx, n_rx) = (scenario.num_tx(), scenario.num_rx());
    let array = scenario.array();
    let tx_pos: Vec<Position> = (0..n_tx).map(|t| scenario.tx_position(t)).collect();
    let rx_pos: Vec<Position> = (0..n_rx).map(|r| scenario.rx_position(r)).collect();
    let mut beta = Vec::with_capacity(scenario.num_regions() * n_rx * n_tx);
    let mut tx_steering = Vec::new();
    let mut rx_steering = Vec::new();
    let mut rcs = Vec::new();
    for (i, cell) in scenario.radar_cells.iter().enumerate() {
        let tx_gain = tx_pos
            .iter()
            .map(|p| large_scale_gain(p, cell, LinkKind::LosTarget, cfg.carrier_frequency))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Domain(format!("radar cell {i}: {e}")))?;
        for p in &rx_pos {
            let g_rx = large_scale_gain(cell, p, LinkKind::LosTarget, cfg.carrier_frequency)
                .map_err(|e| Error::Domain(format!("radar cell {i}: {e}")))?;
            beta.extend(tx_gain.iter().map(|g| g * g_rx));
        }
        tx_steering.extend(tx_pos.iter().map(|p| array.steering_toward(p, cell)));
        rx_steering.extend(rx_pos.iter().map(|p| array.steering_toward(p, cell)));
        rcs.push(rcs_covariance(
            cell,
            &tx_pos,
            cfg.rcs_variance(),
            cfg.view_width_deg.to_radians(),
        )?);
    }
    Ok(TargetGeometry {
        n_tx,
        n_rx,
        beta,
        tx_steering,
        rx_steering,
        rcs,
    })
}

/// Channels, estimates and reflectivities of one coherence block.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    n_tx: usize,
    n_rx: usize,
    /// `h[k * n_tx + t]`.
    pub h: Vec<CVector>,
    pub h_hat: Vec<CVector>,
    /// RCS vector per (region, rx AP), length `n_tx`, `[i * n_rx + r]`.
    pub alpha: Vec<CVector>,
    pub target_present: Vec<bool>,
}

impl ChannelRealization {
    pub fn h(&self, k: usize, t: usize) -> &CVector {
        &self.h[k * self.n_tx + t]
    }

    pub fn h_hat(&self, k: usize, t: usize) -> &CVector {
        &self.h_hat[k * self.n_tx + t]
    }

    pub fn alpha(&self, i: usize, r: usize) -> &CVector {
        &self.alpha[i * self.n_rx + r]
    }
}

/// Pre-factored sampler of [`ChannelRealization`]s.
///
/// Estimates are produced by simulating the pilot phase: for every pilot
/// group the projected observation `Σ_{l∈P} h_l + n` is formed and each
/// member applies its MMSE filter, which reproduces the exact joint
/// statistics of channels, estimates and pilot contamination.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    n_ues: usize,
    n_tx: usize,
    n_rx: usize,
    n_regions: usize,
    antennas: usize,
    channel_factors: Vec<CMatrix>,
    lambda: Vec<CMatrix>,
    noise_std: f64,
    pilot_groups: Vec<Vec<usize>>,
    rcs_factors: Vec<CMatrix>,
}

impl ChannelSampler {
    pub fn new(
        correlation: &SpatialCorrelation,
        estimation: &EstimationMatrices,
        pilots: &PilotAssignment,
        geometry: &TargetGeometry,
        n_regions: usize,
    ) -> Result<Self> {
        let (n_ues, n_tx) = (correlation.n_ues(), correlation.n_tx());
        let mut channel_factors = Vec::with_capacity(n_ues * n_tx);
        for k in 0..n_ues {
            for t in 0..n_tx {
                let c = correlation.get(k, t);
                let err = c - estimation.phi(k, t);
                psd_factor(&err, 1e-8).map_err(|_| {
                    Error::Numerical(format!(
                        "C - Phi is not PSD for UE {k}, tx AP {t}: inconsistent estimation matrices"
                    ))
                })?;
                channel_factors.push(psd_factor(c, 1e-9)?);
            }
        }
        let lambda = (0..n_ues)
            .flat_map(|k| (0..n_tx).map(move |t| (k, t)))
            .map(|(k, t)| estimation.lambda(k, t).clone())
            .collect();
        let rcs_factors = (0..n_regions)
            .map(|i| {
                let r = geometry.rcs_covariance(i, 0).map(|x| C64::new(x, 0.0));
                psd_factor(&r, 1e-9)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_ues,
            n_tx,
            n_rx: geometry.n_rx(),
            n_regions,
            antennas: correlation.get(0, 0).nrows(),
            channel_factors,
            lambda,
            noise_std: estimation.pilot_noise_level().sqrt(),
            pilot_groups: pilots.groups(),
            rcs_factors,
        })
    }

    /// Channels and estimates only.
    pub fn sample_channels<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<CVector>, Vec<CVector>) {
        let n = self.antennas;
        let h: Vec<CVector> = self
            .channel_factors
            .iter()
            .map(|f| cn_correlated(rng, f))
            .collect();
        let mut h_hat = vec![CVector::zeros(n); self.n_ues * self.n_tx];
        for t in 0..self.n_tx {
            for group in &self.pilot_groups {
                let mut y = cn_vector(rng, n) * C64::new(self.noise_std, 0.0);
                for &l in group {
                    y += &h[l * self.n_tx + t];
                }
                for &k in group {
                    h_hat[k * self.n_tx + t] = &self.lambda[k * self.n_tx + t] * &y;
                }
            }
        }
        (h, h_hat)
    }

    /// RCS vectors, one per (region, rx AP).
    pub fn sample_rcs<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<CVector> {
        let mut alpha = Vec::with_capacity(self.n_regions * self.n_rx);
        for i in 0..self.n_regions {
            for _ in 0..self.n_rx {
                alpha.push(cn_correlated(rng, &self.rcs_factors[i]));
            }
        }
        alpha
    }

    pub fn sample<R: Rng + ?Sized>(&self, target_present: &[bool], rng: &mut R) -> ChannelRealization {
        let (h, h_hat) = self.sample_channels(rng);
        let alpha = self.sample_rcs(rng);
        ChannelRealization {
            n_tx: self.n_tx,
            n_rx: self.n_rx,
            h,
            h_hat,
            alpha,
            target_present: target_present.to_vec(),
        }
    }
}

/// Sample covariance `(1/n) Σ x x^H`.
pub fn sample_covariance<'a>(samples: impl Iterator<Item = &'a CVector>, dim: usize) -> CMatrix {
    let mut acc = CMatrix::zeros(dim, dim);
    let mut count = 0usize;
    for x in samples {
        acc += x * x.adjoint();
        count += 1;
    }
    acc / C64::new(count.max(1) as f64, 0.0)
}

/// Convenience: RCS covariance as a complex matrix.
pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| C64::new(x, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::min_eigenvalue;

    #[test]
    fn gauss_hermite_integrates_moments() {
        let (x, w) = gauss_hermite();
        let m0: f64 = w.iter().sum();
        let m2: f64 = x.iter().zip(w).map(|(x, w)| w * x * x).sum();
        assert!((m0 - PI.sqrt()).abs() < 1e-12);
        assert!((m2 - PI.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_spread_is_rank_one() {
        let r = local_scattering(4, 0.4, 0.1, 0.0);
        let a = crate::scenario::steering_vector(4, 0.4, 0.1);
        assert!((r - &a * a.adjoint()).norm() < 1e-12);
        let near = local_scattering(4, 0.4, 0.1, 1e-7);
        assert!((near - &a * a.adjoint()).norm() < 1e-9);
    }

    #[test]
    fn scattering_matrix_is_psd_with_unit_diagonal() {
        for &(az, spread) in &[(0.0, 0.26), (1.2, 0.1), (-2.5, 0.5)] {
            let r = local_scattering(6, az, 0.05, spread);
            for d in 0..6 {
                assert!((r[(d, d)] - C64::new(1.0, 0.0)).norm() < 1e-12);
            }
            assert!(min_eigenvalue(&r) >= -1e-12 * 6.0);
        }
    }

    #[test]
    fn rcs_covariance_diagonal_and_coincident() {
        let cell = Position::new(0.0, 0.0, 50.0);
        let tx = vec![
            Position::new(100.0, 0.0, 10.0),
            Position::new(200.0, 0.0, 10.0),
            Position::new(0.0, 100.0, 10.0),
        ];
        let r = rcs_covariance(&cell, &tx, 10.0, 20f64.to_radians()).unwrap();
        for d in 0..3 {
            assert!((r[(d, d)] - 10.0).abs() < 1e-12);
        }
        // same azimuth => fully correlated
        assert!((r[(0, 1)] - 10.0).abs() < 1e-12);
        assert!(r[(0, 2)] < 1e-3);
    }
}
