//! Flat `key = value` run configuration.
//!
//! Every parameter of a simulation run has a key. Defaults depend on the
//! array geometry: the ULA and Π defaults are the calibrated scenarios that
//! the acceptance suite runs against. Unknown or repeated keys are errors.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{
    build_pi, build_ula, ArrayLayout, ReplicaSpec, Room, Scenario, Vec3, Wall, WallChoice,
};
use crate::io::kv;
use crate::sounder::{FadingModel, ReceiverChain, SnapshotConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Geometry {
    Ula,
    Pi,
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Geometry::Ula => "ula",
            Geometry::Pi => "pi",
        })
    }
}

impl FromStr for Geometry {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "ula" => Ok(Geometry::Ula),
            "pi" => Ok(Geometry::Pi),
            other => Err(format!("unknown geometry `{other}` (expected ula or pi)")),
        }
    }
}

/// Fitted element gains of the default ULA scenario, dB.
pub const ULA_ELEMENT_GAIN_DB: [f64; 4] = [5.0, -17.5, -14.5, 1.0];
pub const ULA_SIGMA_DB: f64 = 0.35;
pub const PI_SIGMA_DB: [f64; 4] = [1.5, 0.5, 0.5, 1.5];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub geometry: Geometry,
    pub frequency_hz: f64,
    pub room_width_m: f64,
    pub room_length_m: f64,
    pub tx_rx_distance_m: f64,
    pub antenna_height_m: f64,
    pub link_x_m: f64,
    pub link_center_y_m: f64,
    pub tx_polarization: Vec3,
    pub polarization_leakage: f64,
    pub ula_spacing_wavelengths: f64,
    pub pi_leg_wavelengths: f64,
    pub pi_top_wavelengths: f64,
    pub element_gain_db: Vec<f64>,
    pub replica_enabled: bool,
    pub replica_wall: WallChoice,
    pub replica_reflection_coefficient: f64,
    pub replica_blocked: BTreeSet<usize>,
    pub amplitude_sigma_db: Vec<f64>,
    pub phase_jitter_rad: f64,
    pub chain: ReceiverChain,
    pub snapshots: SnapshotConfig,
}

/// Canonical key order; the formatter writes exactly these keys.
pub const KEYS: &[&str] = &[
    "geometry",
    "frequency_hz",
    "room_width_m",
    "room_length_m",
    "tx_rx_distance_m",
    "antenna_height_m",
    "link_x_m",
    "link_center_y_m",
    "tx_polarization",
    "polarization_leakage",
    "ula_spacing_wavelengths",
    "pi_leg_wavelengths",
    "pi_top_wavelengths",
    "element_gain_db",
    "replica_enabled",
    "replica_wall",
    "replica_reflection_coefficient",
    "replica_blocked",
    "amplitude_sigma_db",
    "phase_jitter_rad",
    "chain_gain_db",
    "am_pm_deg_per_db",
    "reference_level_dbm",
    "noise_enabled",
    "per_element_snr_db",
    "intervals",
    "snapshots_per_interval",
    "snapshot_dt_ms",
    "tx_power_dbm",
    "samples_per_snapshot",
    "sample_rate_hz",
    "tone_offset_hz",
    "seed",
];

/// Everything `simulate` needs, built from a validated config.
#[derive(Debug, Clone)]
pub struct RunSetup {
    pub scenario: Scenario,
    pub layout: ArrayLayout,
    pub fading: FadingModel,
    pub chain: ReceiverChain,
    pub snapshots: SnapshotConfig,
}

impl RunConfig {
    pub fn defaults(geometry: Geometry) -> Self {
        let (gains, sigma, blocked) = match geometry {
            Geometry::Ula => (ULA_ELEMENT_GAIN_DB.to_vec(), vec![ULA_SIGMA_DB], BTreeSet::new()),
            Geometry::Pi => (vec![0.0; 4], PI_SIGMA_DB.to_vec(), BTreeSet::from([4])),
        };
        RunConfig {
            geometry,
            frequency_hz: 2.4e9,
            room_width_m: 9.0,
            room_length_m: 12.0,
            tx_rx_distance_m: 4.5,
            antenna_height_m: 1.5,
            link_x_m: 4.5,
            link_center_y_m: 6.0,
            tx_polarization: Vec3::X,
            polarization_leakage: 0.1,
            ula_spacing_wavelengths: 0.5,
            pi_leg_wavelengths: 1.0,
            pi_top_wavelengths: 1.0,
            element_gain_db: gains,
            replica_enabled: true,
            replica_wall: WallChoice::NearestElement1,
            replica_reflection_coefficient: 0.5,
            replica_blocked: blocked,
            amplitude_sigma_db: sigma,
            phase_jitter_rad: 0.1,
            chain: ReceiverChain::default(),
            snapshots: SnapshotConfig::default(),
        }
    }

    /// Parses config text. The `geometry` key, if present, selects the
    /// defaults that unspecified keys fall back to; otherwise `fallback` does.
    pub fn parse(text: &str, fallback: Geometry) -> Result<Self> {
        let entries = kv::parse(text, false)?;
        let mut seen = BTreeSet::new();
        for e in &entries {
            if !KEYS.contains(&e.key.as_str()) {
                return Err(Error::Config {
                    line: e.line,
                    message: format!("unknown key `{}`", e.key),
                });
            }
            if !seen.insert(e.key.as_str()) {
                return Err(Error::Config {
                    line: e.line,
                    message: format!("duplicate key `{}`", e.key),
                });
            }
        }
        let geometry = match entries.iter().find(|e| e.key == "geometry") {
            Some(e) => e.value.parse().map_err(|m| Error::Config {
                line: e.line,
                message: m,
            })?,
            None => fallback,
        };
        let mut cfg = RunConfig::defaults(geometry);
        for e in &entries {
            cfg.set(&e.key, &e.value).map_err(|m| Error::Config {
                line: e.line,
                message: format!("key `{}`: {m}", e.key),
            })?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        match key {
            "geometry" => self.geometry = v.parse()?,
            "frequency_hz" => self.frequency_hz = num(v)?,
            "room_width_m" => self.room_width_m = num(v)?,
            "room_length_m" => self.room_length_m = num(v)?,
            "tx_rx_distance_m" => self.tx_rx_distance_m = num(v)?,
            "antenna_height_m" => self.antenna_height_m = num(v)?,
            "link_x_m" => self.link_x_m = num(v)?,
            "link_center_y_m" => self.link_center_y_m = num(v)?,
            "tx_polarization" => {
                let xs = num_list(v)?;
                let [x, y, z] = xs[..] else {
                    return Err("expected three components".into());
                };
                self.tx_polarization = Vec3::new(x, y, z);
            }
            "polarization_leakage" => self.polarization_leakage = num(v)?,
            "ula_spacing_wavelengths" => self.ula_spacing_wavelengths = num(v)?,
            "pi_leg_wavelengths" => self.pi_leg_wavelengths = num(v)?,
            "pi_top_wavelengths" => self.pi_top_wavelengths = num(v)?,
            "element_gain_db" => self.element_gain_db = num_list(v)?,
            "replica_enabled" => self.replica_enabled = boolean(v)?,
            "replica_wall" => {
                self.replica_wall = match v {
                    "auto" => WallChoice::NearestElement1,
                    other => WallChoice::Fixed(Wall::from_name(other).ok_or_else(|| {
                        format!("expected auto, x_min, x_max, y_min or y_max, got `{other}`")
                    })?),
                }
            }
            "replica_reflection_coefficient" => self.replica_reflection_coefficient = num(v)?,
            "replica_blocked" => {
                self.replica_blocked = if v == "none" {
                    BTreeSet::new()
                } else {
                    v.split(',')
                        .map(|t| integer::<usize>(t.trim()))
                        .collect::<std::result::Result<_, _>>()?
                }
            }
            "amplitude_sigma_db" => self.amplitude_sigma_db = num_list(v)?,
            "phase_jitter_rad" => self.phase_jitter_rad = num(v)?,
            "chain_gain_db" => self.chain.chain_gain_db = num(v)?,
            "am_pm_deg_per_db" => self.chain.am_pm_deg_per_db = num(v)?,
            "reference_level_dbm" => self.chain.reference_level_dbm = num(v)?,
            "noise_enabled" => self.chain.noise_enabled = boolean(v)?,
            "per_element_snr_db" => self.chain.per_element_snr_db = num(v)?,
            "intervals" => self.snapshots.intervals = integer(v)?,
            "snapshots_per_interval" => self.snapshots.snapshots_per_interval = integer(v)?,
            "snapshot_dt_ms" => self.snapshots.snapshot_dt_ms = num(v)?,
            "tx_power_dbm" => self.snapshots.tx_power_dbm = num(v)?,
            "samples_per_snapshot" => self.snapshots.samples_per_snapshot = integer(v)?,
            "sample_rate_hz" => self.snapshots.sample_rate_hz = num(v)?,
            "tone_offset_hz" => self.snapshots.tone_offset_hz = num(v)?,
            "seed" => self.snapshots.seed = integer(v)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// `(key, value)` pairs in canonical order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let p = self.tx_polarization;
        let wall = match self.replica_wall {
            WallChoice::NearestElement1 => "auto".to_string(),
            WallChoice::Fixed(w) => w.name().to_string(),
        };
        let blocked = if self.replica_blocked.is_empty() {
            "none".to_string()
        } else {
            join(self.replica_blocked.iter())
        };
        let c = &self.chain;
        let s = &self.snapshots;
        vec![
            ("geometry", self.geometry.to_string()),
            ("frequency_hz", self.frequency_hz.to_string()),
            ("room_width_m", self.room_width_m.to_string()),
            ("room_length_m", self.room_length_m.to_string()),
            ("tx_rx_distance_m", self.tx_rx_distance_m.to_string()),
            ("antenna_height_m", self.antenna_height_m.to_string()),
            ("link_x_m", self.link_x_m.to_string()),
            ("link_center_y_m", self.link_center_y_m.to_string()),
            ("tx_polarization", join([p.x, p.y, p.z].iter())),
            ("polarization_leakage", self.polarization_leakage.to_string()),
            ("ula_spacing_wavelengths", self.ula_spacing_wavelengths.to_string()),
            ("pi_leg_wavelengths", self.pi_leg_wavelengths.to_string()),
            ("pi_top_wavelengths", self.pi_top_wavelengths.to_string()),
            ("element_gain_db", join(self.element_gain_db.iter())),
            ("replica_enabled", self.replica_enabled.to_string()),
            ("replica_wall", wall),
            ("replica_reflection_coefficient", self.replica_reflection_coefficient.to_string()),
            ("replica_blocked", blocked),
            ("amplitude_sigma_db", join(self.amplitude_sigma_db.iter())),
            ("phase_jitter_rad", self.phase_jitter_rad.to_string()),
            ("chain_gain_db", c.chain_gain_db.to_string()),
            ("am_pm_deg_per_db", c.am_pm_deg_per_db.to_string()),
            ("reference_level_dbm", c.reference_level_dbm.to_string()),
            ("noise_enabled", c.noise_enabled.to_string()),
            ("per_element_snr_db", c.per_element_snr_db.to_string()),
            ("intervals", s.intervals.to_string()),
            ("snapshots_per_interval", s.snapshots_per_interval.to_string()),
            ("snapshot_dt_ms", s.snapshot_dt_ms.to_string()),
            ("tx_power_dbm", s.tx_power_dbm.to_string()),
            ("samples_per_snapshot", s.samples_per_snapshot.to_string()),
            ("sample_rate_hz", s.sample_rate_hz.to_string()),
            ("tone_offset_hz", s.tone_offset_hz.to_string()),
            ("seed", s.seed.to_string()),
        ]
    }

    pub fn format(&self) -> String {
        let mut w = kv::Writer::new();
        w.comment("simo-sounder run configuration");
        for (k, v) in self.entries() {
            w.kv(k, v);
        }
        w.finish()
    }

    pub fn wavelength_m(&self) -> f64 {
        crate::geometry::SPEED_OF_LIGHT / self.frequency_hz
    }

    pub fn build(&self) -> Result<RunSetup> {
        let replica = ReplicaSpec {
            wall: self.replica_wall,
            reflection_coefficient: self.replica_reflection_coefficient,
            blocked_elements: self.replica_blocked.clone(),
        };
        let scenario = Scenario::along_room_axis(
            Room {
                width_m: self.room_width_m,
                length_m: self.room_length_m,
            },
            self.tx_rx_distance_m,
            self.antenna_height_m,
            self.link_x_m,
            self.link_center_y_m,
            self.tx_polarization,
            self.frequency_hz,
            self.polarization_leakage,
            replica,
        )?;
        let lambda = scenario.wavelength_m();
        let layout = match self.geometry {
            Geometry::Ula => build_ula(
                self.ula_spacing_wavelengths * lambda,
                scenario.rx_centroid,
                scenario.tx_polarization,
            )?,
            Geometry::Pi => build_pi(
                self.pi_leg_wavelengths * lambda,
                self.pi_top_wavelengths * lambda,
                scenario.rx_centroid,
            )?,
        }
        .with_element_gains_db(&self.element_gain_db)?;
        if let Some(&bad) = self
            .replica_blocked
            .iter()
            .find(|&&i| i == 0 || i > layout.len())
        {
            return Err(Error::InvalidInput(format!(
                "blocked element {bad} is outside 1..={}",
                layout.len()
            )));
        }
        let fading = FadingModel {
            amplitude_sigma_db: self.amplitude_sigma_db.clone(),
            phase_jitter_rad: self.phase_jitter_rad,
            replica_enabled: self.replica_enabled,
        };
        fading.validate(layout.len())?;
        self.chain.validate()?;
        self.snapshots.validate()?;
        Ok(RunSetup {
            scenario,
            layout,
            fading,
            chain: self.chain.clone(),
            snapshots: self.snapshots.clone(),
        })
    }

    /// Elements whose level is dominated by the replica: element 1 (the wall
    /// is chosen next to it) and every element shadowed from it.
    pub fn replica_affected_elements(&self) -> BTreeSet<usize> {
        if !self.replica_enabled {
            return BTreeSet::new();
        }
        let mut set = self.replica_blocked.clone();
        set.insert(1);
        set
    }

    /// Geometry parameters echoed in report headers.
    pub fn geometry_detail(&self) -> Vec<(String, String)> {
        let lambda = self.wavelength_m();
        let mut d = vec![
            ("kind".to_string(), self.geometry.to_string()),
            ("wavelength_m".to_string(), lambda.to_string()),
        ];
        match self.geometry {
            Geometry::Ula => {
                d.push(("ula_spacing_wavelengths".into(), self.ula_spacing_wavelengths.to_string()));
                d.push(("ula_spacing_m".into(), (self.ula_spacing_wavelengths * lambda).to_string()));
            }
            Geometry::Pi => {
                d.push(("pi_leg_m".into(), (self.pi_leg_wavelengths * lambda).to_string()));
                d.push(("pi_top_m".into(), (self.pi_top_wavelengths * lambda).to_string()));
            }
        }
        d.push(("element_gain_db".into(), join(self.element_gain_db.iter())));
        d.push(("polarization_leakage".into(), self.polarization_leakage.to_string()));
        d.push(("replica_enabled".into(), self.replica_enabled.to_string()));
        d.push((
            "replica_reflection_coefficient".into(),
            self.replica_reflection_coefficient.to_string(),
        ));
        d
    }

    pub fn echo(&self) -> Vec<(String, String)> {
        self.entries()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    }
}

fn join<T: fmt::Display>(items: impl Iterator<Item = T>) -> String {
    items.map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

fn num(v: &str) -> std::result::Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("`{v}` is not a number"))?;
    if !x.is_finite() {
        return Err(format!("`{v}` is not finite"));
    }
    Ok(x)
}

fn num_list(v: &str) -> std::result::Result<Vec<f64>, String> {
    v.split(',').map(|t| num(t.trim())).collect()
}

fn integer<T: FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("`{v}` is not a valid integer"))
}

fn boolean(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got `{v}`")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatter_covers_every_key_in_order() {
        let keys: Vec<&str> = RunConfig::defaults(Geometry::Ula)
            .entries()
            .into_iter()
            .map(|(k, _)| k)
            .collect();
        assert_eq!(keys, KEYS);
    }

    #[test]
    fn defaults_round_trip() {
        for g in [Geometry::Ula, Geometry::Pi] {
            let cfg = RunConfig::defaults(g);
            let text = cfg.format();
            let back = RunConfig::parse(&text, Geometry::Ula).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(back.format(), text);
        }
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::parse("# tweak\nsnr = 33\n", Geometry::Ula).unwrap_err();
        match err {
            Error::Config { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("`snr`"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_and_bad_values() {
        assert!(RunConfig::parse("seed = 1\nseed = 2\n", Geometry::Ula).is_err());
        assert!(RunConfig::parse("seed = -1\n", Geometry::Ula).is_err());
        assert!(RunConfig::parse("noise_enabled = yes\n", Geometry::Ula).is_err());
        assert!(RunConfig::parse("tx_polarization = 1, 0\n", Geometry::Ula).is_err());
        assert!(RunConfig::parse("frequency_hz = inf\n", Geometry::Ula).is_err());
        assert!(RunConfig::parse("replica_wall = ceiling\n", Geometry::Ula).is_err());
    }

    #[test]
    fn geometry_key_selects_defaults() {
        let cfg = RunConfig::parse("geometry = pi\n", Geometry::Ula).unwrap();
        assert_eq!(cfg, RunConfig::defaults(Geometry::Pi));
        let cfg = RunConfig::parse("seed = 9\n", Geometry::Pi).unwrap();
        assert_eq!(cfg.geometry, Geometry::Pi);
        assert_eq!(cfg.snapshots.seed, 9);
    }

    #[test]
    fn default_setups_build() {
        for g in [Geometry::Ula, Geometry::Pi] {
            let setup = RunConfig::defaults(g).build().unwrap();
            assert_eq!(setup.layout.len(), 4);
            assert!((setup.scenario.tx_rx_distance_m() - 4.5).abs() < 1e-6);
        }
    }

    #[test]
    fn invalid_combinations_fail_to_build() {
        let mut cfg = RunConfig::defaults(Geometry::Pi);
        cfg.replica_blocked = BTreeSet::from([5]);
        assert!(cfg.build().is_err());
        let mut cfg = RunConfig::defaults(Geometry::Ula);
        cfg.element_gain_db = vec![0.0; 3];
        assert!(cfg.build().is_err());
        let mut cfg = RunConfig::defaults(Geometry::Ula);
        cfg.ula_spacing_wavelengths = 0.0;
        assert!(cfg.build().is_err());
    }

    #[test]
    fn shipped_configs_are_the_defaults() {
        let ula = include_str!("../../../../configs/ula.conf");
        let pi = include_str!("../../../../configs/pi.conf");
        assert_eq!(RunConfig::defaults(Geometry::Ula).format(), ula);
        assert_eq!(RunConfig::defaults(Geometry::Pi).format(), pi);
    }

    #[test]
    fn replica_affected_set() {
        let pi = RunConfig::defaults(Geometry::Pi);
        assert_eq!(pi.replica_affected_elements(), BTreeSet::from([1, 4]));
    }
}
