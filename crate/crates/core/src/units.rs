//! Conversions between SI floats and the integer units carried by the
//! service-model messages.
//!
//! Service-model payloads store lengths in centimeters, speeds in cm/s and
//! angles in hundredths of a radian. Everything else in the crate works in
//! meters, m/s and radians. These helpers are the only place where the two
//! meet; they round half away from zero, so the quantization error is at most
//! half a unit (0.5 cm, 0.005 rad).

/// Meters to centimeters, rounded half away from zero.
///
/// ```
/// use visionran::units::meters_to_cm;
/// assert_eq!(meters_to_cm(1.10), 110);
/// assert_eq!(meters_to_cm(0.005), 1);
/// assert_eq!(meters_to_cm(-0.005), -1);
/// ```
pub fn meters_to_cm(m: f64) -> i32 {
    (m * 100.0).round() as i32
}

pub fn cm_to_meters(cm: i32) -> f64 {
    f64::from(cm) / 100.0
}

/// Radians to hundredths of a radian, rounded half away from zero.
pub fn rad_to_centirad(rad: f64) -> i32 {
    (rad * 100.0).round() as i32
}

pub fn centirad_to_rad(c: i32) -> f64 {
    f64::from(c) / 100.0
}

/// Virtual frame tick to a microsecond timestamp.
///
/// Integer arithmetic keeps timestamps exact for any frame rate.
pub fn tick_to_micros(tick: u64, fps: u32) -> i64 {
    (u128::from(tick) * 1_000_000 / u128::from(fps)) as i64
}

pub fn micros_to_seconds(us: i64) -> f64 {
    us as f64 / 1e6
}
