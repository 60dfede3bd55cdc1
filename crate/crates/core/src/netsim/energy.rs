//! First-order radio model: a fixed electronics cost per bit on both ends,
//! plus a free-space amplifier term on the transmitter that grows with the
//! square of the distance.

use super::SimConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioModel {
    pub e_elec: f64,
    pub eps_amp: f64,
}

impl RadioModel {
    pub fn from_config(config: &SimConfig) -> RadioModel {
        RadioModel { e_elec: config.e_elec, eps_amp: config.eps_amp }
    }

    pub fn tx(&self, bits: u32, distance: f64) -> f64 {
        let bits = f64::from(bits);
        self.e_elec * bits + self.eps_amp * bits * distance * distance
    }

    pub fn rx(&self, bits: u32) -> f64 {
        self.e_elec * f64::from(bits)
    }
}

pub fn tx_energy(config: &SimConfig, bits: u32, distance: f64) -> f64 {
    RadioModel::from_config(config).tx(bits, distance)
}

pub fn rx_energy(config: &SimConfig, bits: u32) -> f64 {
    RadioModel::from_config(config).rx(bits)
}
