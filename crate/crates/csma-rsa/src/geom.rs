//! Observation windows and distances.

use serde::{Deserialize, Serialize};

/// Planar point in meters.
pub type Point = [f64; 2];

/// Observation window for point patterns.
///
/// The torus wraps both coordinates, so distance queries use the minimum
/// image and no edge correction is ever needed. The disk matches the
/// finite circular service region used for medium-access validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Window {
    /// Square torus `[0, side) x [0, side)` in meters.
    Torus { side_m: f64 },
    /// Disk of the given radius centered at the origin.
    Disk { radius_m: f64 },
}

impl Window {
    pub fn area(&self) -> f64 {
        match *self {
            Window::Torus { side_m } => side_m * side_m,
            Window::Disk { radius_m } => std::f64::consts::PI * radius_m * radius_m,
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        match *self {
            Window::Torus { side_m } => {
                p[0] >= 0.0 && p[0] < side_m && p[1] >= 0.0 && p[1] < side_m
            }
            Window::Disk { radius_m } => p[0] * p[0] + p[1] * p[1] <= radius_m * radius_m,
        }
    }

    /// Minimum-image distance on the torus; plain Euclidean distance on
    /// any other window.
    pub fn distance(&self, a: Point, b: Point) -> f64 {
        self.distance_sq(a, b).sqrt()
    }

    pub fn distance_sq(&self, a: Point, b: Point) -> f64 {
        match *self {
            Window::Torus { side_m } => {
                let mut dx = (a[0] - b[0]).abs();
                if dx > side_m - dx {
                    dx = side_m - dx;
                }
                let mut dy = (a[1] - b[1]).abs();
                if dy > side_m - dy {
                    dy = side_m - dy;
                }
                dx * dx + dy * dy
            }
            Window::Disk { .. } => {
                let dx = a[0] - b[0];
                let dy = a[1] - b[1];
                dx * dx + dy * dy
            }
        }
    }
}

/// Minimum-image distance between two points of a toroidal window; falls
/// back to the Euclidean distance for non-toroidal windows.
pub fn toroidal_distance(a: Point, b: Point, window: &Window) -> f64 {
    window.distance(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn wraparound() {
        let w = Window::Torus { side_m: 100.0 };
        assert_relative_eq!(toroidal_distance([0.0, 0.0], [99.0, 0.0], &w), 1.0);
    }

    #[test]
    fn coincident_points() {
        let w = Window::Torus { side_m: 100.0 };
        assert_relative_eq!(toroidal_distance([5.0, 7.0], [5.0, 7.0], &w), 0.0);
    }

    #[test]
    fn maximal_separation() {
        let w = Window::Torus { side_m: 100.0 };
        let d = toroidal_distance([0.0, 0.0], [50.0, 50.0], &w);
        assert_relative_eq!(d, 100.0 / std::f64::consts::SQRT_2, max_relative = 1e-12);
    }

    #[test]
    fn disk_falls_back_to_euclidean() {
        let w = Window::Disk { radius_m: 100.0 };
        assert_relative_eq!(toroidal_distance([-3.0, 0.0], [0.0, 4.0], &w), 5.0);
    }
}
