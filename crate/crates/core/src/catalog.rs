//! The fixed 73-channel variable catalog.
//!
//! Eight single-layer variables come first, followed by five upper-air
//! variables (geopotential height, temperature, zonal wind, meridional wind,
//! relative humidity), each on 13 pressure levels in ascending order. The
//! channel index of a variable is identical in memory and in every file.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

/// Pressure levels in hPa, ascending.
pub const PRESSURE_LEVELS_HPA: [u16; 13] = [50, 100, 150, 200, 250, 300, 400, 500, 600, 700, 850, 925, 1000];

/// Number of channels in every state.
pub const CHANNEL_COUNT: usize = 73;

/// Name of the mean-sea-level pressure channel used for storm tracking.
pub const MSL: &str = "msl";

/// Prefix shared by the relative humidity channels.
pub const RH_PREFIX: &str = "rh";

const SINGLE_LAYER: [(&str, &str, &str); 8] = [
    ("u10m", "Zonal wind 10 m above the surface", "m/s"),
    ("u100m", "Zonal wind 100 m above the surface", "m/s"),
    ("v10m", "Meridional wind 10 m above the surface", "m/s"),
    ("v100m", "Meridional wind 100 m above the surface", "m/s"),
    ("t2m", "Temperature 2 m above the surface", "K"),
    ("sp", "Surface pressure", "Pa"),
    ("msl", "Mean sea level pressure", "Pa"),
    ("tcwv", "Total column water vapor", "kg/m^2"),
];

const PRESSURE_LEVEL: [(&str, &str, &str); 5] = [
    ("z", "Geopotential height", "m"),
    ("t", "Temperature", "K"),
    ("u", "Zonal wind", "m/s"),
    ("v", "Meridional wind", "m/s"),
    (RH_PREFIX, "Relative humidity", "%"),
];

/// Vertical placement of a variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    Single,
    Pressure(u16),
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Single => f.write_str("single"),
            Level::Pressure(hpa) => write!(f, "{hpa} hPa"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableDef {
    pub name: String,
    pub description: String,
    pub units: String,
    pub level: Level,
}

/// Ordered list of variables; channel index `c` is `entries()[c]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableCatalog {
    entries: Vec<VariableDef>,
    by_name: HashMap<String, usize>,
}

impl VariableCatalog {
    /// The shared standard catalog.
    pub fn standard() -> &'static VariableCatalog {
        static CATALOG: OnceLock<VariableCatalog> = OnceLock::new();
        CATALOG.get_or_init(build_catalog)
    }

    pub fn entries(&self) -> &[VariableDef] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, channel: usize) -> &str {
        &self.entries[channel].name
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.name.as_str())
    }

    /// Channel indices of the relative humidity variables.
    pub fn rh_channels(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().enumerate().filter(|(_, e)| e.name.starts_with(RH_PREFIX)).map(|(c, _)| c)
    }
}

/// Builds the 73-entry catalog in its frozen order.
pub fn build_catalog() -> VariableCatalog {
    let mut entries = Vec::with_capacity(CHANNEL_COUNT);
    for (name, description, units) in SINGLE_LAYER {
        entries.push(VariableDef {
            name: name.to_string(),
            description: description.to_string(),
            units: units.to_string(),
            level: Level::Single,
        });
    }
    for (prefix, description, units) in PRESSURE_LEVEL {
        for hpa in PRESSURE_LEVELS_HPA {
            entries.push(VariableDef {
                name: format!("{prefix}{hpa}"),
                description: format!("{description} at {hpa} hPa"),
                units: units.to_string(),
                level: Level::Pressure(hpa),
            });
        }
    }
    let by_name = entries.iter().enumerate().map(|(c, e)| (e.name.clone(), c)).collect();
    VariableCatalog { entries, by_name }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn has_73_entries() {
        assert_eq!(build_catalog().len(), 73);
        assert_eq!(CHANNEL_COUNT, 73);
    }

    #[test]
    fn msl_units_are_pascal() {
        let cat = build_catalog();
        let msl = &cat.entries()[cat.index_of(MSL).unwrap()];
        assert_eq!(msl.units, "Pa");
        assert_eq!(msl.level, Level::Single);
    }

    #[test]
    fn thirteen_rh_levels() {
        let cat = build_catalog();
        assert_eq!(cat.names().filter(|n| n.starts_with("rh")).count(), 13);
        assert_eq!(cat.rh_channels().count(), 13);
    }

    #[test]
    fn frozen_order() {
        let cat = build_catalog();
        let names: Vec<_> = cat.names().collect();
        assert_eq!(&names[..8], &["u10m", "u100m", "v10m", "v100m", "t2m", "sp", "msl", "tcwv"]);
        assert_eq!(names[8], "z50");
        assert_eq!(names[20], "z1000");
        assert_eq!(names[21], "t50");
        assert_eq!(names[60], "rh50");
        assert_eq!(names[72], "rh1000");
    }

    #[test]
    fn name_lookup_is_a_bijection() {
        let cat = VariableCatalog::standard();
        for c in 0..cat.len() {
            assert_eq!(cat.index_of(cat.name(c)), Some(c));
        }
        assert_eq!(cat.index_of("cape"), None);
    }
}
