//! Half-up decimal rounding. Values are rounded half away from zero so that
//! negating an input negates the rounded output.

/// Round `value` to `decimals` places, ties away from zero.
///
/// A small relative nudge absorbs binary representation error, so decimal
/// ties such as `14.555` round up even though the nearest double is just
/// below the tie.
pub fn round_half_up(value: f64, decimals: u32) -> f64 {
    if !value.is_finite() {
        return value;
    }
    let scale = 10f64.powi(decimals as i32);
    let scaled = value.abs() * scale;
    let nudge = scaled.max(1.0) * 1e-12;
    let rounded = (scaled + 0.5 + nudge).floor() / scale;
    if value < 0.0 && rounded != 0.0 {
        -rounded
    } else {
        rounded
    }
}

/// Render a fraction in `[0, 1]` as a percentage with one decimal, e.g. `72.8%`.
pub fn percent_label(fraction: f64) -> String {
    format!("{:.1}%", round_half_up(fraction * 100.0, 1))
}

/// Render an already-scaled percentage with one decimal, without the sign.
pub fn points_label(value: f64) -> String {
    format!("{:.1}", round_half_up(value, 1))
}
