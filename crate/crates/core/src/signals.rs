//! Fixed-width signal types shared by every block of the controller.
//!
//! Voltage and current enter the controller as 8-bit ADC codes; their
//! product is the 16-bit instantaneous power the tracker works with. The
//! control loop never converts back to physical units.

use std::fmt;

use crate::error::{Error, Result};

/// Largest value of any 8-bit code.
pub const CODE_MAX: u8 = u8::MAX;

/// An 8-bit quantized voltage or current sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct AdcCode(pub u8);

impl AdcCode {
    pub fn get(self) -> u8 {
        self.0
    }
}

impl fmt::Display for AdcCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Product of two [`AdcCode`]s, in squared-code units. Always fits in 16 bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PowerValue(pub u16);

impl PowerValue {
    pub const MAX: PowerValue = PowerValue(255 * 255);

    pub fn get(self) -> u16 {
        self.0
    }
}

impl fmt::Display for PowerValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// 8-bit threshold compared against the free-running PWM counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct CompareValue(pub u8);

impl CompareValue {
    /// Reset value: half of the counter range, i.e. 50 % duty.
    pub const MIDSCALE: CompareValue = CompareValue(128);

    pub fn get(self) -> u8 {
        self.0
    }
}

impl fmt::Display for CompareValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Uniform 8-bit ADC: round-to-nearest, saturating at both rails.
pub fn quantize_adc(x: f64, full_scale: f64) -> Result<AdcCode> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("ADC input must be finite, got {x}")));
    }
    if !full_scale.is_finite() || full_scale <= 0.0 {
        return Err(Error::Domain(format!(
            "ADC full scale must be finite and positive, got {full_scale}"
        )));
    }
    let ratio = x.clamp(0.0, full_scale) / full_scale;
    // `f64::round` rounds half away from zero; the argument is never negative.
    Ok(AdcCode((ratio * f64::from(CODE_MAX)).round() as u8))
}

pub fn instant_power(v: AdcCode, i: AdcCode) -> PowerValue {
    PowerValue(u16::from(v.0) * u16::from(i.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize_adc(0.0, 1.0).unwrap(), AdcCode(0));
        assert_eq!(quantize_adc(1.0, 1.0).unwrap(), AdcCode(255));
        // 0.5 * 255 = 127.5 rounds up.
        assert_eq!(quantize_adc(0.5, 1.0).unwrap(), AdcCode(128));
    }

    #[test]
    fn quantize_saturates() {
        assert_eq!(quantize_adc(-3.0, 1.0).unwrap(), AdcCode(0));
        assert_eq!(quantize_adc(7.0, 2.0).unwrap(), AdcCode(255));
    }

    #[test]
    fn quantize_rejects_bad_domain() {
        assert!(matches!(quantize_adc(f64::NAN, 1.0), Err(Error::Domain(_))));
        assert!(matches!(
            quantize_adc(f64::INFINITY, 1.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(quantize_adc(0.1, 0.0), Err(Error::Domain(_))));
        assert!(matches!(quantize_adc(0.1, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn power_examples() {
        assert_eq!(instant_power(AdcCode(128), AdcCode(128)), PowerValue(16384));
        assert_eq!(instant_power(AdcCode(0), AdcCode(255)), PowerValue(0));
        assert_eq!(instant_power(AdcCode(255), AdcCode(255)), PowerValue::MAX);
    }

    #[test]
    fn power_is_commutative_everywhere() {
        for a in 0..=255u8 {
            for b in 0..=255u8 {
                let p = instant_power(AdcCode(a), AdcCode(b));
                assert_eq!(p, instant_power(AdcCode(b), AdcCode(a)));
                assert_eq!(u32::from(p.0), u32::from(a) * u32::from(b));
            }
        }
    }

    proptest! {
        #[test]
        fn quantize_is_monotone(a in -1.0f64..3.0, b in -1.0f64..3.0, fs in 0.01f64..5.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(quantize_adc(lo, fs).unwrap() <= quantize_adc(hi, fs).unwrap());
        }

        #[test]
        fn power_is_monotone(v in 0u8..=254, i in 0u8..=254) {
            let p = instant_power(AdcCode(v), AdcCode(i));
            prop_assert!(instant_power(AdcCode(v + 1), AdcCode(i)) >= p);
            prop_assert!(instant_power(AdcCode(v), AdcCode(i + 1)) >= p);
        }
    }
}
