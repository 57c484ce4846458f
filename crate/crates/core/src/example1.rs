//! Ten-user worked example with 14 edges and a four-beam optimum.
//!
//! Only the adjacency matrix is known for this instance, so the user
//! coordinates below were synthesised: a planar layout of view-angle
//! offsets (degrees) around a reference ground point is cast onto the
//! sphere along the satellite's lines of sight, and the result was checked
//! to reproduce [`EXAMPLE1_ADJACENCY`] with a comfortable margin either side
//! of the 1.6 degree threshold.

use crate::coverage_graph::{build_graph, CoverageGraph};
use crate::error::{Error, Result};
use crate::geometry::{ecef_to_geo, GeoPoint, SatellitePose, EARTH_RADIUS_KM};

/// Adjacency matrix of the worked example, users 1..=10 in row order.
///
/// Row 9 carries the 4-9 edge that row 4 lists, keeping the matrix symmetric;
/// (4, 9) is one of the beams of the four-beam optimum.
pub const EXAMPLE1_ADJACENCY: [[u8; 10]; 10] = [
    [1, 0, 1, 1, 1, 0, 1, 0, 0, 0],
    [0, 1, 1, 0, 0, 0, 0, 1, 0, 1],
    [1, 1, 1, 1, 0, 1, 0, 0, 0, 0],
    [1, 0, 1, 1, 1, 0, 0, 0, 1, 0],
    [1, 0, 0, 1, 1, 0, 1, 0, 0, 0],
    [0, 0, 1, 0, 0, 1, 0, 1, 0, 0],
    [1, 0, 0, 0, 1, 0, 1, 0, 0, 0],
    [0, 1, 0, 0, 0, 1, 0, 1, 0, 1],
    [0, 0, 0, 1, 0, 0, 0, 0, 1, 0],
    [0, 1, 0, 0, 0, 0, 0, 1, 0, 1],
];

pub const HALF_BEAMWIDTH_DEG: f64 = 1.6;

/// Reference ground point the layout is centred on.
pub const REFERENCE: (f64, f64) = (35.0, -115.0);

/// View-angle offsets (degrees) of users 1..=10 around [`REFERENCE`].
pub const LAYOUT: [(f64, f64); 10] = [
    (0.0, 0.0),
    (-0.3, 1.9),
    (0.6, 1.0),
    (1.2, 0.0),
    (0.6, -1.0),
    (1.5, 1.9),
    (-0.5, -1.0),
    (0.6, 2.8),
    (2.4, -0.3),
    (-0.5, 3.0),
];

/// Pinned output of [`synthesize`] on [`LAYOUT`], rounded to 1e-6 degrees.
pub const USERS: [(f64, f64); 10] = [
    (35.000000, -115.000000),
    (29.798196, -113.083396),
    (31.588804, -111.783129),
    (34.012612, -111.458465),
    (37.889303, -115.111748),
    (28.827060, -108.742083),
    (39.323167, -119.423338),
    (27.176793, -110.062603),
    (34.068224, -108.677336),
    (27.254038, -112.458530),
];

/// Satellite used throughout the numerical scenario.
pub fn satellite() -> SatellitePose {
    SatellitePose::new(GeoPoint::new(0.0, -88.7).expect("valid"), 8063.0).expect("valid")
}

pub fn users() -> Vec<GeoPoint> {
    USERS
        .iter()
        .map(|&(lat, lon)| GeoPoint::new(lat, lon).expect("pinned fixture is valid"))
        .collect()
}

pub fn graph() -> Result<CoverageGraph> {
    build_graph(&users(), &satellite(), HALF_BEAMWIDTH_DEG)
}

/// Cast view-angle offsets `(a, b)` in degrees around the line of sight to
/// `reference` onto the Earth's surface.
///
/// The offsets are measured along two orthonormal axes perpendicular to the
/// boresight: `east` perpendicular to the boresight and the polar axis,
/// `up` completing the frame on the side facing the sub-satellite point.
pub fn synthesize(
    sat: &SatellitePose,
    reference: GeoPoint,
    layout: &[(f64, f64)],
) -> Result<Vec<GeoPoint>> {
    let s = sat.ecef();
    let boresight = (reference.to_ecef(EARTH_RADIUS_KM) - s)
        .normalized()
        .ok_or_else(|| Error::domain("reference point coincides with the satellite"))?;
    let north = crate::geometry::EcefVector::new(0.0, 0.0, 1.0);
    let east = boresight
        .cross(&north)
        .normalized()
        .ok_or_else(|| Error::domain("boresight parallel to the polar axis"))?;
    // Points away from the limb, towards the sub-satellite point.
    let up = boresight.cross(&east);
    layout
        .iter()
        .map(|&(a, b)| {
            let dir = (boresight + east * a.to_radians().tan() + up * b.to_radians().tan())
                .normalized()
                .expect("non-zero direction");
            // |s + t d|^2 = R^2, nearer root.
            let bq = s.dot(&dir);
            let c = s.norm_squared() - EARTH_RADIUS_KM * EARTH_RADIUS_KM;
            let disc = bq * bq - c;
            if disc < 0.0 {
                return Err(Error::domain(format!("offset ({a}, {b}) misses the Earth")));
            }
            let t = -bq - disc.sqrt();
            ecef_to_geo(s + dir * t)
        })
        .collect()
}
