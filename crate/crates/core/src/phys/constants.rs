use crate::error::{Error, Result};

/// Physical constants in Gaussian CGS units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    /// Speed of light, cm/s.
    pub c: f64,
    /// Reduced Planck constant, erg s.
    pub hbar: f64,
    /// Boltzmann constant, erg/K.
    pub k_b: f64,
    /// Elementary charge, statC.
    pub e_charge: f64,
    /// Electron mass, g.
    pub m_electron: f64,
}

impl Constants {
    /// CODATA 2018 values converted to Gaussian units.
    pub const GAUSSIAN: Constants = Constants {
        c: 2.997_924_58e10,
        hbar: 1.054_571_817e-27,
        k_b: 1.380_649e-16,
        e_charge: 4.803_204_712_570_263e-10,
        m_electron: 9.109_383_701_5e-28,
    };

    /// Builds an override set; every value must be finite and strictly positive.
    pub fn new(c: f64, hbar: f64, k_b: f64, e_charge: f64, m_electron: f64) -> Result<Self> {
        let consts = Constants {
            c,
            hbar,
            k_b,
            e_charge,
            m_electron,
        };
        consts.validate()?;
        Ok(consts)
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("c", self.c),
            ("hbar", self.hbar),
            ("k_b", self.k_b),
            ("e_charge", self.e_charge),
            ("m_electron", self.m_electron),
        ];
        for (name, value) in named {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Domain(format!(
                    "constant {name} must be finite and positive, got {value}"
                )));
            }
        }
        Ok(())
    }

    /// Heat-bath correlation time hbar / (2 pi k T), in seconds.
    pub fn bath_correlation_time(&self, temperature_k: f64) -> Result<f64> {
        if !(temperature_k > 0.0) {
            return Err(Error::Domain(format!(
                "bath correlation time needs T > 0, got {temperature_k}"
            )));
        }
        Ok(self.hbar / (2.0 * std::f64::consts::PI * self.k_b * temperature_k))
    }
}

impl Default for Constants {
    fn default() -> Self {
        Self::GAUSSIAN
    }
}
