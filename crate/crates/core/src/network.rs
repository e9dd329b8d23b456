//! All long-term statistics of one drop, built once and shared by the
//! metrics, the optimizers and the simulators.

use crate::channels::{
    build_correlation, build_target_geometry, ChannelSampler, SpatialCorrelation, TargetGeometry,
};
use crate::comm::{achievable_rate, closed_form_sinr, PowerAllocation, SensingBeamCovariance, SinrCoefficients};
use crate::error::Result;
use crate::estimation::{assign_pilots, build_estimation, EstimationMatrices, PilotAssignment, PilotPolicy};
use crate::rng::{stream_rng, Stream};
use crate::scenario::{Scenario, ScenarioConfig};
use crate::sensing::{sensing_rate, SensingQuadratic};

#[derive(Debug, Clone)]
pub struct Network {
    pub scenario: Scenario,
    pub correlation: SpatialCorrelation,
    pub pilots: PilotAssignment,
    pub estimation: EstimationMatrices,
    pub geometry: TargetGeometry,
    pub beams: SensingBeamCovariance,
    pub sinr: SinrCoefficients,
    pub sensing: SensingQuadratic,
    pub sampler: ChannelSampler,
    pub noise_power: f64,
}

impl Network {
    /// Draws the scenario for `seed` and derives every statistic from it.
    pub fn build(config: &ScenarioConfig, seed: u64) -> Result<Self> {
        Self::from_scenario(Scenario::build(config, seed)?)
    }

    pub fn from_scenario(scenario: Scenario) -> Result<Self> {
        let cfg = &scenario.config;
        let noise_power = cfg.noise_power();
        let correlation = build_correlation(&scenario);
        let pilots = assign_pilots(scenario.num_ues(), cfg.tau_p, PilotPolicy::RoundRobin)?;
        let estimation = build_estimation(&correlation, &pilots, cfg.pilot_power, noise_power)?;
        let geometry = build_target_geometry(&scenario)?;
        let mut rng = stream_rng(scenario.seed, 0, Stream::BeamCovariance);
        let beams = SensingBeamCovariance::build(&scenario, cfg.beam_mc_samples, &mut rng);
        let sinr = SinrCoefficients::new(
            &scenario,
            &correlation,
            &estimation,
            &pilots,
            Some(&beams),
            noise_power,
        )?;
        let sensing = SensingQuadratic::build(&scenario, &geometry, &estimation, noise_power)?;
        let sampler = ChannelSampler::new(
            &correlation,
            &estimation,
            &pilots,
            &geometry,
            scenario.num_regions(),
        )?;
        Ok(Self {
            scenario,
            correlation,
            pilots,
            estimation,
            geometry,
            beams,
            sinr,
            sensing,
            sampler,
            noise_power,
        })
    }

    /// SINR coefficients for slots without sensing beams.
    pub fn sinr_without_sensing(&self) -> Result<SinrCoefficients> {
        SinrCoefficients::new(
            &self.scenario,
            &self.correlation,
            &self.estimation,
            &self.pilots,
            None,
            self.noise_power,
        )
    }

    pub fn empty_allocation(&self) -> PowerAllocation {
        PowerAllocation::for_scenario(&self.scenario)
    }

    /// Closed-form SINR of every UE.
    pub fn sinr(&self, alloc: &PowerAllocation) -> Vec<f64> {
        closed_form_sinr(alloc, &self.sinr)
    }

    /// Effective sensing SNR of every region.
    pub fn sensing_snr(&self, alloc: &PowerAllocation) -> Vec<f64> {
        self.sensing.snr_all(alloc)
    }

    pub fn rates(&self, alloc: &PowerAllocation) -> Vec<f64> {
        let cfg = &self.scenario.config;
        self.sinr(alloc)
            .into_iter()
            .map(|g| achievable_rate(g, cfg.tau_c, cfg.tau_p, cfg.bandwidth))
            .collect()
    }

    pub fn sensing_rates(&self, alloc: &PowerAllocation) -> Vec<f64> {
        let cfg = &self.scenario.config;
        self.sensing_snr(alloc)
            .into_iter()
            .map(|g| sensing_rate(g, cfg.tau_s, cfg.tau_c, cfg.bandwidth))
            .collect()
    }
}
