//! Display-unit conversions. Everything inside the crate is SI; these helpers
//! only exist at the I/O boundary.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Micrometer,
    Femtofarad,
    Picofarad,
    Kilohertz,
    Megahertz,
    Kiloohm,
    Nanoampere,
    Gigapascal,
}

impl Unit {
    pub const ALL: [Unit; 8] = [
        Unit::Micrometer,
        Unit::Femtofarad,
        Unit::Picofarad,
        Unit::Kilohertz,
        Unit::Megahertz,
        Unit::Kiloohm,
        Unit::Nanoampere,
        Unit::Gigapascal,
    ];

    /// SI value of one display unit.
    pub fn scale(self) -> f64 {
        match self {
            Unit::Micrometer => 1e-6,
            Unit::Femtofarad => 1e-15,
            Unit::Picofarad => 1e-12,
            Unit::Kilohertz => 1e3,
            Unit::Megahertz => 1e6,
            Unit::Kiloohm => 1e3,
            Unit::Nanoampere => 1e-9,
            Unit::Gigapascal => 1e9,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Unit::Micrometer => "um",
            Unit::Femtofarad => "fF",
            Unit::Picofarad => "pF",
            Unit::Kilohertz => "kHz",
            Unit::Megahertz => "MHz",
            Unit::Kiloohm => "kOhm",
            Unit::Nanoampere => "nA",
            Unit::Gigapascal => "GPa",
        }
    }

    pub fn to_si(self, display: f64) -> f64 {
        display * self.scale()
    }

    pub fn from_si(self, si: f64) -> f64 {
        si / self.scale()
    }
}

/// A value paired with the unit it should be printed in.
#[derive(Debug, Clone, Copy)]
pub struct Display {
    pub si: f64,
    pub unit: Unit,
}

impl fmt::Display for Display {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", sig6(self.unit.from_si(self.si)), self.unit.symbol())
    }
}

pub fn show(si: f64, unit: Unit) -> Display {
    Display { si, unit }
}

/// Six significant digits, without trailing noise.
pub fn sig6(x: f64) -> String {
    sig(x, 6)
}

pub fn sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{:.*e}", digits.saturating_sub(1), x);
    // Re-parse so the printed form is the plain shortest representation.
    let v: f64 = s.parse().expect("formatted float parses");
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn same_at_12_digits(a: f64, b: f64) -> bool {
        format!("{a:.11e}") == format!("{b:.11e}")
    }

    #[test]
    fn sig6_rounds() {
        assert_eq!(sig6(455094.4713229305), "455094");
        assert_eq!(sig6(7.670796216965926e-5), "0.000076708");
        assert_eq!(sig6(0.0), "0");
    }

    #[test]
    fn display_uses_unit_symbol() {
        assert_eq!(show(76.7e-6, Unit::Micrometer).to_string(), "76.7 um");
        assert_eq!(show(387.3e-15, Unit::Femtofarad).to_string(), "387.3 fF");
    }

    proptest! {
        #[test]
        fn conversion_round_trips_at_12_digits(mantissa in 1.0f64..10.0, exp in -20i32..12, idx in 0usize..8) {
            let unit = Unit::ALL[idx];
            let si = mantissa * 10f64.powi(exp);
            prop_assert!(same_at_12_digits(unit.to_si(unit.from_si(si)), si));
            let shown = mantissa * 10f64.powi(exp.rem_euclid(6));
            prop_assert!(same_at_12_digits(unit.from_si(unit.to_si(shown)), shown));
        }
    }
}
