//! File formats: trajectory CSV and the capital plot.

pub mod plot;
pub mod trajectory_csv;

pub use plot::render_capital_svg;
pub use trajectory_csv::{parse_trajectory_csv, serialize_trajectory_csv};

/// Formats `x` rounded to 12 significant digits, in the shortest form that
/// parses back to the rounded value.
pub(crate) fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("float round trip");
    let mag = rounded.abs();
    if (1e-6..1e15).contains(&mag) {
        rounded.to_string()
    } else {
        format!("{rounded:e}")
    }
}
