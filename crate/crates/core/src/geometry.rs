//! Planar array geometry, steering phases, and angle conventions.
//!
//! Global azimuths are degrees counterclockwise from the +x axis in
//! [0, 360). A mic pair (a, b) has an axis angle, the direction from a to
//! b, and a pair-local broadside angle theta in [-90, 90] measured from
//! the counterclockwise normal of that axis: a source at local angle
//! theta sits at azimuth `axis + 90 + theta`, reaches mic a first for
//! theta > 0, and is indistinguishable from its reflection across the
//! axis line (the front-back mirror).

use std::f64::consts::PI;

use thiserror::Error;

use crate::C64;

/// Speed of sound in air at room temperature, m/s.
pub const SPEED_OF_SOUND: f64 = 343.0;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("pair spacing must be positive, got {0}")]
    BadSpacing(f64),
    #[error("circular arrays need an even mic count of at least 4, got {0}")]
    BadMicCount(usize),
    #[error("circle diameter must be positive, got {0}")]
    BadDiameter(f64),
}

/// Wrap to [0, 360).
pub fn wrap_deg_360(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    if r == 360.0 {
        0.0
    } else {
        r
    }
}

/// Wrap to (-180, 180].
pub fn wrap_deg_180(deg: f64) -> f64 {
    let r = wrap_deg_360(deg);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}

/// Wrap radians to (-pi, pi].
pub fn wrap_rad(rad: f64) -> f64 {
    let r = rad.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Inter-channel phase shift in radians of a far-field source at pair-local
/// angle `theta_deg` for a pair spaced `spacing_m` apart:
/// `2 pi f d sin(theta) / c`. The second mic of the pair lags by this phase
/// when the value is positive.
pub fn phase_difference(f_hz: f64, spacing_m: f64, theta_deg: f64, c: f64) -> f64 {
    2.0 * PI * f_hz * spacing_m * theta_deg.to_radians().sin() / c
}

/// Highest frequency whose phase shift stays unambiguous at every angle:
/// `c / (2 d)`.
pub fn aliasing_limit_hz(spacing_m: f64, c: f64) -> f64 {
    c / (2.0 * spacing_m)
}

/// Two-channel steering vector `[1, e^{-j phase_difference}]` for a source
/// at the given pair-local angle.
pub fn steering_vector(f_hz: f64, spacing_m: f64, theta_deg: f64, c: f64) -> [C64; 2] {
    let phi = phase_difference(f_hz, spacing_m, theta_deg, c);
    [C64::new(1.0, 0.0), C64::from_polar(1.0, -phi)]
}

/// Steering vector referenced to the pair midpoint, each entry of modulus
/// one half: `0.5 [e^{+j phi/2}, e^{-j phi/2}]` with `phi` the pair phase
/// shift. Conjugate-multiplying each channel by its entry brings a source
/// at `theta_deg` to a common phase at the array center, so the aligned
/// channels sum coherently no matter which pair produced them.
pub fn alignment_vector(f_hz: f64, spacing_m: f64, theta_deg: f64, c: f64) -> [C64; 2] {
    let half = 0.5 * phase_difference(f_hz, spacing_m, theta_deg, c);
    [C64::from_polar(0.5, half), C64::from_polar(0.5, -half)]
}

/// Direction from `p0` to `p1` in degrees, wrapped to [0, 360).
pub fn pair_axis_angle(p0: [f64; 2], p1: [f64; 2]) -> f64 {
    wrap_deg_360((p1[1] - p0[1]).atan2(p1[0] - p0[0]).to_degrees())
}

/// Azimuth of a source at pair-local angle `theta_deg` on the front side of
/// a pair with the given axis angle.
pub fn local_to_azimuth(axis_deg: f64, theta_deg: f64) -> f64 {
    wrap_deg_360(axis_deg + 90.0 + theta_deg)
}

/// Reflection of an azimuth across the pair axis line: the front-back
/// mirror that a single pair cannot resolve.
pub fn mirror_azimuth(axis_deg: f64, az_deg: f64) -> f64 {
    wrap_deg_360(2.0 * axis_deg - az_deg)
}

/// Fold an azimuth into the pair-local angle that produces it, plus a flag
/// set when the azimuth lies on the back side of the pair. Round trip:
/// `local_to_azimuth` recovers the azimuth directly when the flag is
/// clear, and via `mirror_azimuth` when set.
pub fn azimuth_to_local(axis_deg: f64, az_deg: f64) -> (f64, bool) {
    let beta = wrap_deg_180(az_deg - axis_deg - 90.0);
    if beta.abs() <= 90.0 {
        (beta, false)
    } else {
        (wrap_deg_180(180.0 - beta), true)
    }
}

/// Mic positions in meters plus the diametric pair list. Every listed pair
/// has the same spacing.
#[derive(Debug, Clone)]
pub struct ArrayGeometry {
    positions: Vec<[f64; 2]>,
    pairs: Vec<(usize, usize)>,
    spacing: f64,
}

impl ArrayGeometry {
    /// Two mics on the x axis at +-spacing/2, one pair with axis angle 0.
    pub fn make_dual(spacing: f64) -> Result<Self, GeometryError> {
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(GeometryError::BadSpacing(spacing));
        }
        Ok(Self {
            positions: vec![[-spacing / 2.0, 0.0], [spacing / 2.0, 0.0]],
            pairs: vec![(0, 1)],
            spacing,
        })
    }

    /// `n` mics uniformly on a circle centered at the origin, mic `i` at
    /// angle `360 i / n` with mic 0 on the +x axis. Pairs are the
    /// diametrically opposite mics `(i, i + n/2)`, so each pair is spaced
    /// by the diameter and successive pair axes differ by `360 / n`.
    pub fn make_circular(n: usize, diameter: f64) -> Result<Self, GeometryError> {
        if n < 4 || n % 2 != 0 {
            return Err(GeometryError::BadMicCount(n));
        }
        if !(diameter > 0.0) || !diameter.is_finite() {
            return Err(GeometryError::BadDiameter(diameter));
        }
        let r = diameter / 2.0;
        let positions = (0..n)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / n as f64;
                [r * a.cos(), r * a.sin()]
            })
            .collect();
        let pairs = (0..n / 2).map(|i| (i, i + n / 2)).collect();
        Ok(Self {
            positions,
            pairs,
            spacing: diameter,
        })
    }

    pub fn n_mics(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    pub fn position(&self, i: usize) -> [f64; 2] {
        self.positions[i]
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Axis angle of pair `idx`, from its first mic to its second.
    pub fn pair_axis(&self, idx: usize) -> f64 {
        let (a, b) = self.pairs[idx];
        pair_axis_angle(self.positions[a], self.positions[b])
    }

    /// Same mics rotated counterclockwise about the origin.
    pub fn rotated(&self, deg: f64) -> Self {
        let (sin, cos) = deg.to_radians().sin_cos();
        let positions = self
            .positions
            .iter()
            .map(|p| [p[0] * cos - p[1] * sin, p[0] * sin + p[1] * cos])
            .collect();
        Self {
            positions,
            pairs: self.pairs.clone(),
            spacing: self.spacing,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const D: f64 = 0.085;
    const C: f64 = SPEED_OF_SOUND;

    // ---- 1. phase shift and steering ----

    #[test]
    fn phase_difference_endfire_1khz() {
        let got = phase_difference(1000.0, D, 90.0, C);
        let want = 2.0 * PI * 1000.0 * D / C;
        assert!((got - want).abs() < 1e-12);
        assert!((got - 1.55706).abs() < 1e-4, "got {got}");
    }

    #[test]
    fn phase_difference_is_sine_scaled() {
        let endfire = phase_difference(1000.0, D, 90.0, C);
        let half = phase_difference(1000.0, D, 30.0, C);
        assert!((half - endfire / 2.0).abs() < 1e-12);
        assert!((phase_difference(1000.0, D, 0.0, C)).abs() < 1e-12);
        assert!(
            (phase_difference(1000.0, D, -90.0, C) + endfire).abs() < 1e-12,
            "odd in theta"
        );
    }

    #[test]
    fn steering_vector_unit_modulus_and_reference_entry() {
        let s = steering_vector(2000.0, D, 30.0, C);
        assert_eq!(s[0], C64::new(1.0, 0.0));
        assert!((s[1].norm() - 1.0).abs() < 1e-12);
        // f sin(theta) here matches 1 kHz endfire, so the lag is the same.
        let want = -phase_difference(1000.0, D, 90.0, C);
        assert!((wrap_rad(s[1].arg() - want)).abs() < 1e-12);
    }

    #[test]
    fn alignment_vector_center_referenced() {
        let a = alignment_vector(1000.0, D, 90.0, C);
        assert!((a[0].norm() - 0.5).abs() < 1e-12);
        assert!((a[1].norm() - 0.5).abs() < 1e-12);
        // Entry phases are split symmetrically about the midpoint.
        assert!((a[0].arg() - 0.77853).abs() < 1e-4, "got {}", a[0].arg());
        let phi = phase_difference(1000.0, D, 90.0, C);
        assert!((wrap_rad(a[0].arg() - a[1].arg()) - wrap_rad(phi)).abs() < 1e-10);
        // The entry product cancels both phases: 1/4, purely real.
        let prod = a[0] * a[1];
        assert!((prod.re - 0.25).abs() < 1e-12 && prod.im.abs() < 1e-14);
    }

    #[test]
    fn alignment_agrees_with_steering_phase_shift() {
        for &(f, th) in &[(250.0, -70.0), (1000.0, 10.0), (1900.0, 45.0)] {
            let s = steering_vector(f, D, th, C);
            let a = alignment_vector(f, D, th, C);
            let steer_shift = wrap_rad(s[0].arg() - s[1].arg());
            let align_shift = wrap_rad(a[0].arg() - a[1].arg());
            assert!((steer_shift - align_shift).abs() < 1e-10, "f {f} th {th}");
        }
    }

    // ---- 2. axes and conversions ----

    #[test]
    fn pair_axis_angle_quadrants() {
        assert!((pair_axis_angle([0.0, 0.0], [1.0, 0.0]) - 0.0).abs() < 1e-12);
        assert!((pair_axis_angle([0.0, 0.0], [0.0, 1.0]) - 90.0).abs() < 1e-12);
        assert!((pair_axis_angle([0.0, 0.0], [-1.0, -1.0]) - 225.0).abs() < 1e-12);
    }

    #[test]
    fn conversion_round_trip_over_dense_grid() {
        for axis_i in 0..12 {
            let axis = axis_i as f64 * 30.0 + 7.0;
            for az_i in 0..72 {
                let az = az_i as f64 * 5.0 + 0.5;
                let (theta, mirrored) = azimuth_to_local(axis, az);
                assert!((-90.0..=90.0).contains(&theta), "theta {theta}");
                let front = local_to_azimuth(axis, theta);
                let back = if mirrored {
                    mirror_azimuth(axis, front)
                } else {
                    front
                };
                assert!(
                    (wrap_deg_180(back - az)).abs() < 1e-9,
                    "axis {axis} az {az} -> theta {theta} mirrored {mirrored} -> {back}"
                );
            }
        }
    }

    #[test]
    fn mirror_is_an_involution() {
        let axis = 33.0;
        for az in [0.0, 10.0, 123.4, 280.0] {
            let m = mirror_azimuth(axis, az);
            assert!((wrap_deg_180(mirror_azimuth(axis, m) - az)).abs() < 1e-9);
        }
    }

    // ---- 3. constructions ----

    #[test]
    fn dual_pair_sits_symmetric_on_x_axis() {
        let g = ArrayGeometry::make_dual(D).unwrap();
        assert_eq!(g.n_mics(), 2);
        assert!((g.position(0)[0] + D / 2.0).abs() < 1e-12);
        assert!((g.position(1)[0] - D / 2.0).abs() < 1e-12);
        assert!((g.pair_axis(0) - 0.0).abs() < 1e-12);
    }

    #[test]
    fn dual_rejects_nonpositive_spacing() {
        assert!(ArrayGeometry::make_dual(0.0).is_err());
        assert!(ArrayGeometry::make_dual(-0.1).is_err());
    }

    #[test]
    fn circular_four_mic_layout() {
        let g = ArrayGeometry::make_circular(4, 0.1).unwrap();
        assert!((g.position(0)[0] - 0.05).abs() < 1e-12);
        assert!(g.position(0)[1].abs() < 1e-12);
        let (cx, cy) = g
            .positions()
            .iter()
            .fold((0.0, 0.0), |(x, y), p| (x + p[0], y + p[1]));
        assert!(cx.abs() < 1e-12 && cy.abs() < 1e-12, "centered at origin");
    }

    #[test]
    fn circular_six_mic_pairs_and_axes() {
        let g = ArrayGeometry::make_circular(6, D).unwrap();
        assert_eq!(g.pairs(), &[(0, 3), (1, 4), (2, 5)]);
        for (i, &(a, b)) in g.pairs().iter().enumerate() {
            let pa = g.position(a);
            let pb = g.position(b);
            let d = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt();
            assert!((d - D).abs() < 1e-12, "pair {i} spacing {d}");
        }
        let step = wrap_deg_180(g.pair_axis(1) - g.pair_axis(0));
        assert!((step - 60.0).abs() < 1e-9);
        let step2 = wrap_deg_180(g.pair_axis(2) - g.pair_axis(1));
        assert!((step2 - 60.0).abs() < 1e-9);
    }

    #[test]
    fn circular_rejects_odd_or_tiny_counts() {
        assert!(matches!(
            ArrayGeometry::make_circular(5, 0.1),
            Err(GeometryError::BadMicCount(5))
        ));
        assert!(ArrayGeometry::make_circular(2, 0.1).is_err());
        assert!(ArrayGeometry::make_circular(6, 0.0).is_err());
    }

    #[test]
    fn rotation_moves_positions_but_keeps_pairing() {
        let g = ArrayGeometry::make_circular(6, D).unwrap().rotated(90.0);
        assert!(g.position(0)[0].abs() < 1e-12);
        assert!((g.position(0)[1] - D / 2.0).abs() < 1e-12);
        assert_eq!(g.pairs().len(), 3);
        assert!((g.pair_axis(0) - 270.0).abs() < 1e-9);
    }
}
