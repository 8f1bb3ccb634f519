//! Synthetic channel-sounder measurements.
//!
//! Each snapshot draws a block-fading realization around the geometric mean
//! channel, synthesizes the single-tone baseband samples every receive branch
//! would record, and recovers the complex gains with a matched filter.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::channel::{db_to_amplitude, db_to_power, rss_dbm, GainVector};
use crate::error::{Error, Result};
use crate::geometry::{los_gains, replica_gains, ArrayLayout, Scenario};
use crate::rng::{Domain, StreamKey, MAX_ELEMENTS, MAX_INTERVALS};

/// Per-element complex baseband samples, outer index = element.
pub type IqBlock = Vec<Vec<Complex64>>;

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotConfig {
    pub intervals: u32,
    pub snapshots_per_interval: u32,
    pub snapshot_dt_ms: f64,
    pub tx_power_dbm: f64,
    pub samples_per_snapshot: usize,
    pub sample_rate_hz: f64,
    pub tone_offset_hz: f64,
    pub seed: u64,
    /// Keep the IQ samples of every snapshot in the output records.
    pub retain_iq: bool,
}

impl Default for SnapshotConfig {
    fn default() -> Self {
        SnapshotConfig {
            intervals: 2,
            snapshots_per_interval: 100,
            snapshot_dt_ms: 4.0,
            tx_power_dbm: -8.0,
            samples_per_snapshot: 1024,
            sample_rate_hz: 1.0e6,
            tone_offset_hz: 1.0e5,
            seed: 1,
            retain_iq: false,
        }
    }
}

impl SnapshotConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if self.intervals == 0 || self.snapshots_per_interval == 0 || self.samples_per_snapshot == 0 {
            return bad("interval, snapshot and sample counts must be at least 1");
        }
        if self.intervals > MAX_INTERVALS {
            return bad("too many intervals");
        }
        if !(self.snapshot_dt_ms.is_finite() && self.snapshot_dt_ms > 0.0) {
            return bad("snapshot spacing must be positive");
        }
        if !self.tx_power_dbm.is_finite() {
            return bad("transmit power must be finite");
        }
        if !self.sample_rate_hz.is_finite()
            || !self.tone_offset_hz.is_finite()
            || self.sample_rate_hz <= 2.0 * self.tone_offset_hz.abs()
        {
            return bad("sample rate must exceed twice the tone offset");
        }
        Ok(())
    }

    pub fn total_snapshots(&self) -> usize {
        self.intervals as usize * self.snapshots_per_interval as usize
    }

    /// Transmitted tone amplitude in √mW.
    pub fn tone_amplitude(&self) -> f64 {
        db_to_power(self.tx_power_dbm).sqrt()
    }

    /// The known transmitted tone s[n].
    pub fn reference_tone(&self) -> Vec<Complex64> {
        let amplitude = self.tone_amplitude();
        let cycles_per_sample = self.tone_offset_hz / self.sample_rate_hz;
        (0..self.samples_per_snapshot)
            .map(|n| {
                let cycles = (cycles_per_sample * n as f64).fract();
                Complex64::from_polar(amplitude, 2.0 * PI * cycles)
            })
            .collect()
    }
}

/// Block-fading perturbation applied independently at every snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingModel {
    /// Log-normal amplitude jitter in dB; one entry per element, or a single
    /// entry applied to all elements.
    pub amplitude_sigma_db: Vec<f64>,
    /// Half-width of the uniform phase perturbation.
    pub phase_jitter_rad: f64,
    pub replica_enabled: bool,
}

impl FadingModel {
    pub fn disabled() -> Self {
        FadingModel {
            amplitude_sigma_db: vec![0.0],
            phase_jitter_rad: 0.0,
            replica_enabled: false,
        }
    }

    pub fn validate(&self, elements: usize) -> Result<()> {
        let n = self.amplitude_sigma_db.len();
        if n != 1 && n != elements {
            return Err(Error::InvalidInput(format!(
                "{n} amplitude sigmas given for {elements} elements"
            )));
        }
        if self
            .amplitude_sigma_db
            .iter()
            .chain(std::iter::once(&self.phase_jitter_rad))
            .any(|s| !(s.is_finite() && *s >= 0.0))
        {
            return Err(Error::InvalidInput("fading sigmas must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn sigma_db(&self, element: usize) -> f64 {
        match self.amplitude_sigma_db.as_slice() {
            [single] => *single,
            all => all[element],
        }
    }
}

/// Four-branch receiver: common gain, AM-to-PM conversion and branch noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverChain {
    pub chain_gain_db: f64,
    pub am_pm_deg_per_db: f64,
    /// Antenna-port level at which the AM-to-PM rotation is zero.
    pub reference_level_dbm: f64,
    pub noise_enabled: bool,
    /// Noise power is set this far below the mean per-element signal power.
    pub per_element_snr_db: f64,
}

impl Default for ReceiverChain {
    fn default() -> Self {
        ReceiverChain {
            chain_gain_db: 42.0,
            am_pm_deg_per_db: 0.2,
            reference_level_dbm: -62.5,
            noise_enabled: true,
            per_element_snr_db: 33.0,
        }
    }
}

impl ReceiverChain {
    pub fn ideal() -> Self {
        ReceiverChain {
            chain_gain_db: 0.0,
            am_pm_deg_per_db: 0.0,
            reference_level_dbm: 0.0,
            noise_enabled: false,
            per_element_snr_db: 33.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.chain_gain_db.is_finite()
            || !self.reference_level_dbm.is_finite()
            || !self.per_element_snr_db.is_finite()
        {
            return Err(Error::InvalidInput("receiver chain settings must be finite".into()));
        }
        if !(self.am_pm_deg_per_db.is_finite() && self.am_pm_deg_per_db >= 0.0) {
            return Err(Error::InvalidInput("AM-to-PM coefficient must be non-negative".into()));
        }
        Ok(())
    }

    pub fn gain_linear(&self) -> f64 {
        db_to_amplitude(self.chain_gain_db)
    }

    /// AM-to-PM rotation in radians for a branch whose antenna-port level is
    /// `input_dbm`.
    pub fn am_pm_rotation(&self, input_dbm: f64) -> f64 {
        (self.am_pm_deg_per_db * (input_dbm - self.reference_level_dbm)).to_radians()
    }
}

/// One measurement instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotRecord {
    /// 1-based.
    pub interval_id: u32,
    /// 0-based within the interval.
    pub snapshot_idx: u32,
    pub time_ms: f64,
    pub true_gains: GainVector,
    pub iq: Option<IqBlock>,
    pub estimated_gains: GainVector,
}

/// Multiplies each element's mean gain by `10^(a/20)·exp(jφ)` with
/// `a ~ N(0, σ_i)` dB and `φ ~ U(−jitter, jitter)`.
///
/// Each element reads two draws (amplitude, then phase) from its own keyed
/// stream, whether or not the corresponding spread is zero.
pub fn realize_block(mean_gains: &GainVector, fading: &FadingModel, key: StreamKey) -> Result<GainVector> {
    fading.validate(mean_gains.len())?;
    let gains = mean_gains
        .iter()
        .enumerate()
        .map(|(i, &h)| {
            let mut rng = key.stream(Domain::Fading, i);
            let z: f64 = StandardNormal.sample(&mut rng);
            let u: f64 = rng.random();
            let amplitude_db = z * fading.sigma_db(i);
            let phase = (2.0 * u - 1.0) * fading.phase_jitter_rad;
            if amplitude_db == 0.0 && phase == 0.0 {
                h
            } else {
                h * Complex64::from_polar(db_to_amplitude(amplitude_db), phase)
            }
        })
        .collect();
    GainVector::new(gains)
}

/// Baseband samples `y_i[n] = g·h_i·exp(jφ_i)·s[n] + w_i[n]` for every element.
pub fn synthesize_iq(
    gains: &GainVector,
    config: &SnapshotConfig,
    chain: &ReceiverChain,
    key: StreamKey,
) -> Result<IqBlock> {
    config.validate()?;
    chain.validate()?;
    let tone = config.reference_tone();
    let g = chain.gain_linear();
    let tone_power = config.tone_amplitude().powi(2);

    let branch_gains: Vec<Complex64> = gains
        .iter()
        .map(|&h| {
            let rotation = match rss_dbm(h, config.tx_power_dbm)?.dbm() {
                Some(level) => chain.am_pm_rotation(level),
                None => 0.0,
            };
            Ok(if rotation == 0.0 {
                h * g
            } else {
                h * g * Complex64::from_polar(1.0, rotation)
            })
        })
        .collect::<Result<_>>()?;

    let noise_power = if chain.noise_enabled {
        let mean_signal = branch_gains.iter().map(|b| b.norm_sqr()).sum::<f64>()
            * tone_power
            / branch_gains.len() as f64;
        mean_signal / db_to_power(chain.per_element_snr_db)
    } else {
        0.0
    };
    let noise_sigma = (noise_power / 2.0).sqrt();

    let block = branch_gains
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            let clean = tone.iter().map(|&s| b * s);
            if noise_sigma > 0.0 {
                let mut rng = key.stream(Domain::Noise, i);
                clean
                    .map(|y| {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        y + Complex64::new(re, im) * noise_sigma
                    })
                    .collect()
            } else {
                clean.collect()
            }
        })
        .collect();
    Ok(block)
}

/// Matched-filter gain estimate referenced to the antenna port:
/// `ĥ_i = Σ y_i[n]·conj(s[n]) / (g·Σ|s[n]|²)`.
pub fn estimate_gain(iq: &[Vec<Complex64>], config: &SnapshotConfig, chain: &ReceiverChain) -> Result<GainVector> {
    config.validate()?;
    chain.validate()?;
    if let Some(bad) = iq.iter().position(|y| y.len() != config.samples_per_snapshot) {
        return Err(Error::InvalidInput(format!(
            "element {} has {} samples, expected {}",
            bad + 1,
            iq[bad].len(),
            config.samples_per_snapshot
        )));
    }
    estimate_gain_with_reference(iq, &config.reference_tone(), chain.gain_linear())
}

/// Matched filter against an explicit reference sequence.
pub fn estimate_gain_with_reference(
    iq: &[Vec<Complex64>],
    reference: &[Complex64],
    chain_gain_linear: f64,
) -> Result<GainVector> {
    let energy: f64 = reference.iter().map(|s| s.norm_sqr()).sum();
    if energy == 0.0 || chain_gain_linear == 0.0 {
        return Err(Error::DegenerateReference);
    }
    let scale = chain_gain_linear * energy;
    let gains = iq
        .iter()
        .map(|y| {
            if y.len() != reference.len() {
                return Err(Error::InvalidInput("sample and reference lengths differ".into()));
            }
            let corr: Complex64 = y.iter().zip(reference).map(|(y, s)| y * s.conj()).sum();
            Ok(corr / scale)
        })
        .collect::<Result<Vec<_>>>()?;
    GainVector::new(gains).map_err(|_| Error::NonFinite("estimated gain".into()))
}

/// Deterministic mean channel: LoS plus, when enabled, the wall replica.
pub fn mean_gains(scenario: &Scenario, layout: &ArrayLayout, fading: &FadingModel) -> Result<GainVector> {
    let los = los_gains(scenario, layout)?;
    if !fading.replica_enabled {
        return Ok(los);
    }
    let ray = scenario.replica_ray(layout)?;
    los.try_add(&replica_gains(scenario, layout, &ray)?)
}

/// Runs every snapshot of every interval and returns the records in
/// (interval, snapshot) order. Snapshots are generated in parallel; the result
/// does not depend on the thread count.
pub fn simulate(
    scenario: &Scenario,
    layout: &ArrayLayout,
    fading: &FadingModel,
    chain: &ReceiverChain,
    config: &SnapshotConfig,
) -> Result<Vec<SnapshotRecord>> {
    scenario.validate()?;
    config.validate()?;
    chain.validate()?;
    fading.validate(layout.len())?;
    if layout.len() > MAX_ELEMENTS {
        return Err(Error::InvalidInput("too many receive elements".into()));
    }
    let mean = mean_gains(scenario, layout, fading)?;
    let per_interval = config.snapshots_per_interval as usize;

    (0..config.total_snapshots())
        .into_par_iter()
        .map(|k| {
            let interval_id = (k / per_interval) as u32 + 1;
            let snapshot_idx = (k % per_interval) as u32;
            let key = StreamKey::new(config.seed, interval_id, snapshot_idx);
            let true_gains = realize_block(&mean, fading, key)?;
            let iq = synthesize_iq(&true_gains, config, chain, key)?;
            let estimated_gains = estimate_gain(&iq, config, chain)?;
            Ok(SnapshotRecord {
                interval_id,
                snapshot_idx,
                time_ms: f64::from(snapshot_idx) * config.snapshot_dt_ms,
                true_gains,
                iq: config.retain_iq.then_some(iq),
                estimated_gains,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn gv(v: &[Complex64]) -> GainVector {
        GainVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn no_fading_is_identity() {
        let h = gv(&[c(1e-3, -2e-3), c(0.0, 0.0), c(-4.0, 0.5)]);
        let out = realize_block(&h, &FadingModel::disabled(), StreamKey::new(3, 1, 0)).unwrap();
        assert_eq!(out, h);
    }

    #[test]
    fn realization_is_deterministic() {
        let h = gv(&[c(1.0, 0.0), c(0.5, 0.5)]);
        let fading = FadingModel {
            amplitude_sigma_db: vec![1.0],
            phase_jitter_rad: 0.3,
            replica_enabled: false,
        };
        let key = StreamKey::new(11, 2, 17);
        assert_eq!(
            realize_block(&h, &fading, key).unwrap(),
            realize_block(&h, &fading, key).unwrap()
        );
        assert_ne!(
            realize_block(&h, &fading, key).unwrap(),
            realize_block(&h, &fading, StreamKey::new(11, 2, 18)).unwrap()
        );
    }

    #[test]
    fn sigma_length_must_match() {
        let h = gv(&[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        let fading = FadingModel {
            amplitude_sigma_db: vec![1.0, 2.0],
            phase_jitter_rad: 0.0,
            replica_enabled: false,
        };
        assert!(realize_block(&h, &fading, StreamKey::new(0, 1, 0)).is_err());
    }

    #[test]
    fn ideal_chain_passes_the_tone_through() {
        let config = SnapshotConfig::default();
        let iq = synthesize_iq(
            &gv(&[c(1.0, 0.0)]),
            &config,
            &ReceiverChain::ideal(),
            StreamKey::new(0, 1, 0),
        )
        .unwrap();
        assert_eq!(iq[0], config.reference_tone());
    }

    #[test]
    fn am_pm_rotation_at_and_above_reference() {
        let chain = ReceiverChain::default();
        assert_eq!(chain.am_pm_rotation(-62.5), 0.0);
        let r = chain.am_pm_rotation(-52.5);
        assert!((r.to_degrees() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn am_pm_rotates_the_estimate() {
        let config = SnapshotConfig::default();
        let chain = ReceiverChain {
            noise_enabled: false,
            ..ReceiverChain::default()
        };
        // |h|² puts the branch 10 dB above the reference level.
        let level = chain.reference_level_dbm + 10.0;
        let magnitude = db_to_amplitude(level - config.tx_power_dbm);
        let h = gv(&[c(magnitude, 0.0)]);
        let iq = synthesize_iq(&h, &config, &chain, StreamKey::new(0, 1, 0)).unwrap();
        let est = estimate_gain(&iq, &config, &chain).unwrap();
        assert!((est[0].norm() - magnitude).abs() < 1e-12 * magnitude);
        assert!((est[0].arg().to_degrees() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn noiseless_loopback_is_exact() {
        let config = SnapshotConfig::default();
        let chain = ReceiverChain::ideal();
        let h = gv(&[c(1.0, 0.0), c(0.3, -0.4), c(0.0, 0.0), c(0.0, 2.0)]);
        let iq = synthesize_iq(&h, &config, &chain, StreamKey::new(0, 1, 0)).unwrap();
        let est = estimate_gain(&iq, &config, &chain).unwrap();
        for (a, b) in est.iter().zip(h.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_reference_is_degenerate() {
        let iq = vec![vec![c(1.0, 0.0); 8]];
        let reference = vec![c(0.0, 0.0); 8];
        assert!(matches!(
            estimate_gain_with_reference(&iq, &reference, 1.0),
            Err(Error::DegenerateReference)
        ));
    }

    #[test]
    fn wrong_sample_count_is_rejected() {
        let config = SnapshotConfig::default();
        let iq = vec![vec![c(1.0, 0.0); 10]];
        assert!(estimate_gain(&iq, &config, &ReceiverChain::ideal()).is_err());
    }

    #[test]
    fn config_validation() {
        let ok = SnapshotConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            SnapshotConfig { intervals: 0, ..ok.clone() },
            SnapshotConfig { snapshot_dt_ms: 0.0, ..ok.clone() },
            SnapshotConfig { tone_offset_hz: 5e5, ..ok.clone() },
            SnapshotConfig { samples_per_snapshot: 0, ..ok.clone() },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
