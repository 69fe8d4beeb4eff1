//! Benchmark geometries: a square with an embedded circle, a unit square
//! with an embedded four-lobe polar curve, and an annulus.
//!
//! Every geometry is an outer boundary Gamma_e plus an embedded inner
//! boundary Gamma_i; the sampling region Omega_e is the part of the outer
//! domain strictly outside the inner region. Boundary normals have unit
//! length and point into Omega_e.

/// Which boundary curve of a geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryId {
    External,
    Internal,
}

/// A boundary sample: position and the unit normal pointing into the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub z: [f64; 2],
    pub normal: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    /// [-w, w]^2 with an embedded circle of the given radius at the origin.
    SquareWithCircle { half_width: f64, radius: f64 },
    /// [0, 1]^2 with the polar curve |rho(omega)| = |r_m + r_d cos(4 omega)|
    /// centred at (1/2, 1/2). With the printed constants r_m < r_d the raw
    /// radius changes sign; the curve is traced with its absolute value and
    /// membership is radial, which for this star-shaped curve agrees with
    /// the winding-number test.
    UnitSquareWithFourLobe { r_m: f64, r_d: f64 },
    /// Annulus between the two radii, centred at the origin.
    Annulus { r_i: f64, r_o: f64 },
}

impl Geometry {
    pub fn square_with_circle() -> Self {
        Geometry::SquareWithCircle { half_width: 1.0, radius: 0.5 }
    }

    pub fn four_lobe(r_m: f64, r_d: f64) -> Self {
        Geometry::UnitSquareWithFourLobe { r_m, r_d }
    }

    pub fn annulus() -> Self {
        Geometry::Annulus { r_i: 0.25, r_o: 0.75 }
    }

    /// Axis-aligned bounding box of the outer domain.
    pub fn bounding_box(&self) -> [(f64, f64); 2] {
        match *self {
            Geometry::SquareWithCircle { half_width, .. } => {
                [(-half_width, half_width), (-half_width, half_width)]
            }
            Geometry::UnitSquareWithFourLobe { .. } => [(0.0, 1.0), (0.0, 1.0)],
            Geometry::Annulus { r_o, .. } => [(-r_o, r_o), (-r_o, r_o)],
        }
    }

    /// Four-lobe radius at polar angle omega (absolute value of the printed
    /// expression).
    fn lobe_radius(r_m: f64, r_d: f64, omega: f64) -> f64 {
        (r_m + r_d * (4.0 * omega).cos()).abs()
    }

    /// Strict membership in the sampling region Omega_e.
    pub fn is_interior(&self, z: &[f64]) -> bool {
        let (x, y) = (z[0], z[1]);
        match *self {
            Geometry::SquareWithCircle { half_width, radius } => {
                x.abs() < half_width
                    && y.abs() < half_width
                    && x * x + y * y > radius * radius
            }
            Geometry::UnitSquareWithFourLobe { r_m, r_d } => {
                if !(0.0 < x && x < 1.0 && 0.0 < y && y < 1.0) {
                    return false;
                }
                let (dx, dy) = (x - 0.5, y - 0.5);
                let rho = (dx * dx + dy * dy).sqrt();
                let omega = dy.atan2(dx);
                rho > Self::lobe_radius(r_m, r_d, omega)
            }
            Geometry::Annulus { r_i, r_o } => {
                let rho = (x * x + y * y).sqrt();
                r_i < rho && rho < r_o
            }
        }
    }

    /// Point and inward unit normal at curve parameter `t` in [0, 1).
    pub fn boundary_point(&self, which: BoundaryId, t: f64) -> BoundaryPoint {
        let t = t.rem_euclid(1.0);
        match (*self, which) {
            (Geometry::SquareWithCircle { half_width: w, .. }, BoundaryId::External) => {
                square_perimeter(t, -w, w)
            }
            (Geometry::SquareWithCircle { radius, .. }, BoundaryId::Internal) => {
                let theta = 2.0 * std::f64::consts::PI * t;
                let (s, c) = theta.sin_cos();
                // Omega_e lies outside the circle: the inward normal points
                // away from the circle centre.
                BoundaryPoint { z: [radius * c, radius * s], normal: [c, s] }
            }
            (Geometry::UnitSquareWithFourLobe { .. }, BoundaryId::External) => {
                square_perimeter(t, 0.0, 1.0)
            }
            (Geometry::UnitSquareWithFourLobe { r_m, r_d }, BoundaryId::Internal) => {
                let omega = 2.0 * std::f64::consts::PI * t;
                let (s, c) = omega.sin_cos();
                let raw = r_m + r_d * (4.0 * omega).cos();
                let q = raw.abs();
                let z = [0.5 + q * c, 0.5 + q * s];
                // Tangent of (q(w) cos w, q(w) sin w); the normal is its
                // perpendicular oriented away from the curve's centre.
                let qp = raw.signum() * (-4.0) * r_d * (4.0 * omega).sin();
                let tx = qp * c - q * s;
                let ty = qp * s + q * c;
                let norm = (tx * tx + ty * ty).sqrt();
                let normal = if norm > 1e-12 {
                    let (mut nx, mut ny) = (ty / norm, -tx / norm);
                    if nx * c + ny * s < 0.0 {
                        nx = -nx;
                        ny = -ny;
                    }
                    [nx, ny]
                } else {
                    [c, s]
                };
                BoundaryPoint { z, normal }
            }
            (Geometry::Annulus { r_o, .. }, BoundaryId::External) => {
                let theta = 2.0 * std::f64::consts::PI * t;
                let (s, c) = theta.sin_cos();
                // Inward for the outer circle means toward the centre.
                BoundaryPoint { z: [r_o * c, r_o * s], normal: [-c, -s] }
            }
            (Geometry::Annulus { r_i, .. }, BoundaryId::Internal) => {
                let theta = 2.0 * std::f64::consts::PI * t;
                let (s, c) = theta.sin_cos();
                BoundaryPoint { z: [r_i * c, r_i * s], normal: [c, s] }
            }
        }
    }
}

/// Arclength-uniform parameterization of the axis-aligned square [lo, hi]^2,
/// starting at (lo, lo) and walking counterclockwise. The inward normal
/// points into the square.
fn square_perimeter(t: f64, lo: f64, hi: f64) -> BoundaryPoint {
    let side = hi - lo;
    let s = 4.0 * t; // in [0, 4): one unit per side
    let (z, normal) = if s < 1.0 {
        ([lo + s * side, lo], [0.0, 1.0])
    } else if s < 2.0 {
        ([hi, lo + (s - 1.0) * side], [-1.0, 0.0])
    } else if s < 3.0 {
        ([hi - (s - 2.0) * side, hi], [0.0, -1.0])
    } else {
        ([lo, hi - (s - 3.0) * side], [1.0, 0.0])
    };
    BoundaryPoint { z, normal }
}
