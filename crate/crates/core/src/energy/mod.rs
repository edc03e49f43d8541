//! Energy accounting for sensor nodes. Every billed amount is stored in
//! integer picojoules so ledger totals add up exactly.

mod ledger;
pub mod report;

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ledger::{Category, EnergyEvent, EnergyLedger, Process};

/// Radio frame size used by the fractional airtime estimate.
pub const FRAME_BYTES: f64 = 127.0;
pub const FRAME_PAYLOAD_BYTES: f64 = 106.0;

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("negative input: {0}")]
    Negative(&'static str),
    #[error("constant `{0}` must be finite and non-negative")]
    BadConstant(&'static str),
    #[error("cannot read constants file: {0}")]
    Io(#[from] std::io::Error),
    #[error("constants file: {0}")]
    Parse(#[from] toml::de::Error),
}

/// Energy in picojoules.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Energy(pub u64);

impl Energy {
    pub const ZERO: Energy = Energy(0);

    pub fn from_joules(j: f64) -> Energy {
        Energy((j * 1e12).round() as u64)
    }

    pub fn picojoules(self) -> u64 {
        self.0
    }

    pub fn joules(self) -> f64 {
        self.0 as f64 * 1e-12
    }

    pub fn millijoules(self) -> f64 {
        self.0 as f64 * 1e-9
    }

    pub fn times(self, units: u64) -> Energy {
        Energy(self.0 * units)
    }
}

impl Add for Energy {
    type Output = Energy;

    fn add(self, rhs: Energy) -> Energy {
        Energy(self.0 + rhs.0)
    }
}

impl AddAssign for Energy {
    fn add_assign(&mut self, rhs: Energy) {
        self.0 += rhs.0;
    }
}

impl Sum for Energy {
    fn sum<I: Iterator<Item = Energy>>(iter: I) -> Energy {
        iter.fold(Energy::ZERO, Add::add)
    }
}

impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} mJ", self.millijoules())
    }
}

/// Processor and radio constants. Delays are in seconds, per-unit energies
/// in microjoules.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyConstants {
    pub voltage_v: f64,
    pub current_a: f64,
    pub boot_delay_s: f64,
    pub encrypt_delay_s: f64,
    pub sha2_delay_s: f64,
    pub switch_delay_s: f64,
    pub pairing_delay_s: f64,
    pub encrypt_uj_per_bit: f64,
    pub tx_uj_per_byte: f64,
    pub rx_uj_per_byte: f64,
    pub battery_j: f64,
}

impl Default for EnergyConstants {
    fn default() -> Self {
        EnergyConstants {
            voltage_v: 3.6,
            current_a: 0.020,
            boot_delay_s: 0.059,
            encrypt_delay_s: 0.05,
            sha2_delay_s: 0.05,
            switch_delay_s: 0.23,
            pairing_delay_s: 4.05,
            encrypt_uj_per_bit: 22.5,
            tx_uj_per_byte: 1.83,
            rx_uj_per_byte: 1.98,
            battery_j: 1000.0,
        }
    }
}

impl EnergyConstants {
    pub fn from_toml(text: &str) -> Result<Self, EnergyError> {
        let c: EnergyConstants = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, EnergyError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), EnergyError> {
        let fields = [
            ("voltage_v", self.voltage_v),
            ("current_a", self.current_a),
            ("boot_delay_s", self.boot_delay_s),
            ("encrypt_delay_s", self.encrypt_delay_s),
            ("sha2_delay_s", self.sha2_delay_s),
            ("switch_delay_s", self.switch_delay_s),
            ("pairing_delay_s", self.pairing_delay_s),
            ("encrypt_uj_per_bit", self.encrypt_uj_per_bit),
            ("tx_uj_per_byte", self.tx_uj_per_byte),
            ("rx_uj_per_byte", self.rx_uj_per_byte),
            ("battery_j", self.battery_j),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(EnergyError::BadConstant(name));
            }
        }
        Ok(())
    }

    /// Processor power in watts.
    pub fn power(&self) -> f64 {
        self.voltage_v * self.current_a
    }

    fn timed(&self, delay: f64) -> f64 {
        joules(self.power(), delay).expect("constants validated")
    }

    pub fn e_boot(&self) -> f64 {
        self.timed(self.boot_delay_s)
    }

    pub fn e_switch(&self) -> f64 {
        self.timed(self.switch_delay_s)
    }

    pub fn e_sha2(&self) -> f64 {
        self.timed(self.sha2_delay_s)
    }

    pub fn e_pairing(&self) -> f64 {
        self.timed(self.pairing_delay_s)
    }

    /// Energy of the timed encryption row (one 0.05 s encryption).
    pub fn e_encrypt_timed(&self) -> f64 {
        self.timed(self.encrypt_delay_s)
    }

    /// Energy billed for one unit of `category`.
    pub fn unit_energy(&self, category: Category) -> Energy {
        Energy::from_joules(match category {
            Category::Boot => self.e_boot(),
            Category::Switch => self.e_switch(),
            Category::Encrypt => self.encrypt_uj_per_bit * 1e-6,
            Category::Pairing => self.e_pairing(),
            Category::Sha2 => self.e_sha2(),
            Category::Tx => self.tx_uj_per_byte * 1e-6,
            Category::Rx => self.rx_uj_per_byte * 1e-6,
        })
    }
}

/// E = P * t.
pub fn joules(power_w: f64, time_s: f64) -> Result<f64, EnergyError> {
    if power_w < 0.0 {
        return Err(EnergyError::Negative("power"));
    }
    if time_s < 0.0 {
        return Err(EnergyError::Negative("time"));
    }
    Ok(power_w * time_s)
}

/// Radio energy for a number of transmitted and received bytes.
pub fn e_comm(c: &EnergyConstants, tx_bytes: u64, rx_bytes: u64) -> f64 {
    (c.tx_uj_per_byte * tx_bytes as f64 + c.rx_uj_per_byte * rx_bytes as f64) * 1e-6
}

/// Total energy of a process made of boots, world switches, encrypted bits
/// and radio traffic.
pub fn e_total(c: &EnergyConstants, boots: u64, switches: u64, enc_bits: u64, tx_bytes: u64, rx_bytes: u64) -> f64 {
    boots as f64 * c.e_boot()
        + switches as f64 * c.e_switch()
        + enc_bits as f64 * c.encrypt_uj_per_bit * 1e-6
        + e_comm(c, tx_bytes, rx_bytes)
}

/// Fractional on-air estimate: payload / 106 * 127.
pub fn estimated_airtime(payload_bytes: f64) -> f64 {
    payload_bytes / FRAME_PAYLOAD_BYTES * FRAME_BYTES
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn timed_costs() {
        let c = EnergyConstants::default();
        assert!(close(c.power(), 0.072));
        assert!(close(c.e_boot(), 0.004248));
        assert!(close(c.e_switch(), 0.01656));
        assert!(close(c.e_pairing(), 0.2916));
        assert!(close(c.e_encrypt_timed(), 0.0036));
        // per-bit and timed encryption agree at 160 bits
        assert!(close(160.0 * c.encrypt_uj_per_bit * 1e-6, c.e_encrypt_timed()));
    }

    #[test]
    fn negative_inputs_rejected() {
        assert!(joules(-1.0, 1.0).is_err());
        assert!(joules(1.0, -0.1).is_err());
        assert_eq!(joules(0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn comm_and_total() {
        let c = EnergyConstants::default();
        assert!((e_comm(&c, 319, 0) - 583.77e-6).abs() < 1e-12);
        assert!((e_comm(&c, 0, 480) - 950.4e-6).abs() < 1e-12);
        assert_eq!(e_total(&c, 0, 0, 0, 0, 0), 0.0);
        let t = e_total(&c, 1, 1, 160, 319, 480);
        assert!((t - 0.02594217).abs() < 1e-9);
    }

    #[test]
    fn airtime() {
        // 479.245..., quoted to two decimals as 479.25
        assert_eq!(format!("{:.2}", estimated_airtime(400.0)), "479.25");
        assert!((estimated_airtime(106.0) - 127.0).abs() < 1e-12);
        assert_eq!(estimated_airtime(0.0), 0.0);
    }

    #[test]
    fn constants_file() {
        let text = include_str!("../../config/energy.toml");
        assert_eq!(EnergyConstants::from_toml(text).unwrap(), EnergyConstants::default());
        assert!(EnergyConstants::from_toml("voltage_v = 1.0\nbogus = 2").is_err());
        let neg = text.replace("battery_j = 1000.0", "battery_j = -1.0");
        assert!(matches!(EnergyConstants::from_toml(&neg), Err(EnergyError::BadConstant("battery_j"))));
    }

    #[test]
    fn unit_energy_is_exact() {
        let c = EnergyConstants::default();
        assert_eq!(c.unit_energy(Category::Switch), Energy(16_560_000_000));
        assert_eq!(c.unit_energy(Category::Tx), Energy(1_830_000));
        assert_eq!(c.unit_energy(Category::Encrypt).times(160), Energy(3_600_000_000));
    }
}
