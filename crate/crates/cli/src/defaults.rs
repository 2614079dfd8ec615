//! Built-in tables: the activation bounds rows, starter chromaticity samples,
//! and emission-strength intervals.
//!
//! The bounds rows are the published per-(group, category) intervals. The
//! illuminant samples and strength intervals are artifact defaults chosen to
//! look plausible; replace them with measured data via `--bounds`,
//! `--illuminants`, or the config file for serious use.

use solo_core::color::Chromaticity;
use solo_core::lights::{BoundsRow, BoundsTable, IlluminantDb, StrengthTable};

/// Activation-probability intervals per (light source group, light source).
pub fn default_bounds() -> BoundsTable {
    let rows = [
        ("N/A", "inferred", 1.0, 1.0),
        ("N/A", "traffic_light_G", 1.0, 1.0),
        ("N/A", "traffic_light_R", 1.0, 1.0),
        ("N/A", "traffic_light_O", 1.0, 1.0),
        ("N/A", "street_light_HT", 1.0, 1.0),
        ("N/A", "street_light_LT", 1.0, 1.0),
        ("N/A", "advertisement", 0.6, 0.8),
        ("N/A", "clock", 0.8, 1.0),
        ("N/A", "window_building", 0.3, 0.6),
        ("building_floor", "window_building", 0.3, 0.6),
        ("car", "window_parked", 0.1, 0.4),
        ("car", "moving_front", 0.95, 1.0),
        ("car", "moving_rear", 0.95, 1.0),
        ("car", "parked_front", 0.1, 0.3),
        ("car", "parked_rear", 0.1, 0.3),
        ("bus", "window_parked", 0.1, 0.4),
        ("bus", "moving_front", 0.95, 1.0),
        ("bus", "moving_rear", 0.95, 1.0),
        ("bus", "parked_front", 0.1, 0.3),
        ("bus", "parked_rear", 0.1, 0.3),
        ("bus", "window_transport", 0.9, 1.0),
        ("bus", "inferred", 1.0, 1.0),
        ("tram", "moving_front", 0.95, 1.0),
        ("tram", "moving_rear", 0.95, 1.0),
        ("tram", "parked_front", 0.1, 0.3),
        ("tram", "parked_rear", 0.1, 0.3),
        ("tram", "window_transport", 0.9, 1.0),
        ("tram", "inferred", 1.0, 1.0),
        ("truck", "window_parked", 0.1, 0.4),
        ("truck", "moving_front", 0.95, 1.0),
        ("truck", "moving_rear", 0.95, 1.0),
        ("truck", "parked_front", 0.1, 0.3),
        ("truck", "parked_rear", 0.1, 0.3),
        ("motorcycle", "moving_front", 0.95, 1.0),
        ("motorcycle", "moving_rear", 0.95, 1.0),
        ("motorcycle", "parked_front", 0.1, 0.3),
        ("motorcycle", "parked_rear", 0.1, 0.3),
        ("bicycle", "moving_front", 0.95, 1.0),
        ("bicycle", "moving_rear", 0.95, 1.0),
        ("bicycle", "parked_front", 0.1, 0.2),
        ("bicycle", "parked_rear", 0.1, 0.2),
    ];
    BoundsTable {
        rows: rows
            .iter()
            .map(|(group, category, lo, hi)| BoundsRow {
                group: group.to_string(),
                category: category.to_string(),
                lo: *lo,
                hi: *hi,
            })
            .collect(),
    }
}

/// Starter chromaticity samples per prediction category (artifact defaults).
pub fn default_illuminants() -> IlluminantDb {
    let mut db = IlluminantDb::default();
    let mut put = |label: &str, samples: &[(f64, f64)]| {
        db.samples.insert(
            label.to_string(),
            samples.iter().map(|(x, y)| Chromaticity::new(*x, *y)).collect(),
        );
    };
    put("window_building", &[(0.44, 0.40), (0.46, 0.41), (0.41, 0.39), (0.38, 0.37), (0.48, 0.42)]);
    put("window_parked", &[(0.33, 0.34), (0.31, 0.32), (0.35, 0.36)]);
    put("window_transport", &[(0.31, 0.33), (0.33, 0.35), (0.29, 0.30)]);
    put("traffic_light_G", &[(0.18, 0.62), (0.20, 0.60), (0.22, 0.64)]);
    put("traffic_light_R", &[(0.67, 0.31), (0.66, 0.33), (0.68, 0.30)]);
    put("traffic_light_O", &[(0.58, 0.40), (0.57, 0.41), (0.59, 0.39)]);
    put("street_light_HT", &[(0.305, 0.315), (0.31, 0.33), (0.32, 0.34), (0.29, 0.30)]);
    put("street_light_LT", &[(0.52, 0.42), (0.53, 0.41), (0.50, 0.42), (0.54, 0.40)]);
    put("front_light", &[(0.42, 0.39), (0.44, 0.40), (0.33, 0.34), (0.36, 0.37)]);
    put("rear_light", &[(0.66, 0.32), (0.65, 0.33), (0.64, 0.34)]);
    put("advertisement", &[(0.31, 0.33), (0.27, 0.28), (0.45, 0.41), (0.22, 0.25)]);
    put("inferred", &[(0.38, 0.38), (0.33, 0.34), (0.42, 0.40)]);
    db
}

/// Emission-strength intervals per category (artifact defaults; the source
/// material names the intervals empirical without publishing values).
pub fn default_strengths() -> StrengthTable {
    let mut t = StrengthTable::default();
    let mut put = |label: &str, lo: f64, hi: f64| {
        t.intervals.insert(label.to_string(), (lo, hi));
    };
    put("window_building", 0.3, 1.5);
    put("window_parked", 0.2, 0.8);
    put("window_transport", 0.5, 1.5);
    put("traffic_light", 1.0, 3.0);
    put("street_light_HT", 2.0, 6.0);
    put("street_light_LT", 2.0, 6.0);
    put("front_light", 3.0, 8.0);
    put("rear_light", 0.5, 2.0);
    put("advertisement", 1.0, 4.0);
    put("inferred", 0.5, 2.0);
    t
}
