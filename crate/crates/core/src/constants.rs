//! Physical constants (SI).

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant (J/K), exact SI value.
pub const K_B: f64 = 1.380_649e-23;

/// Gyromagnetic ratio of the uniform magnon mode, gamma/2pi = 28 GHz/T.
pub const GAMMA_GYRO: f64 = 2.0 * std::f64::consts::PI * 28.0e9;

/// Spin density of YIG (m^-3).
pub const YIG_SPIN_DENSITY: f64 = 4.22e27;

/// Convert an ordinary frequency in Hz to an angular frequency in rad/s.
#[inline]
pub fn hz_to_rad(f: f64) -> f64 {
    2.0 * std::f64::consts::PI * f
}

/// Convert an angular frequency in rad/s to an ordinary frequency in Hz.
#[inline]
pub fn rad_to_hz(w: f64) -> f64 {
    w / (2.0 * std::f64::consts::PI)
}
