//! Spherical-Earth coordinates and the satellite-view angles used by the
//! gain model and the coverage graph.
//!
//! Angles are degrees at every public boundary. Each function converts to
//! radians once on entry.

use std::ops::{Add, Div, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius in km.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Clamp a cosine into `[-1, 1]` before `acos`.
#[inline]
pub(crate) fn clamped_acos(c: f64) -> f64 {
    c.clamp(-1.0, 1.0).acos()
}

/// Fold a longitude into `(-180, 180]`.
fn normalize_lon(lon: f64) -> f64 {
    let mut l = lon % 360.0;
    if l <= -180.0 {
        l += 360.0;
    } else if l > 180.0 {
        l -= 360.0;
    }
    l
}

/// A point on the spherical Earth, zero elevation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    /// Validates latitude and folds longitude into `(-180, 180]`.
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite() || !lon.is_finite() {
            return Err(Error::domain(format!(
                "non-finite coordinate ({lat}, {lon})"
            )));
        }
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::domain(format!("latitude {lat} outside [-90, 90]")));
        }
        let lon = if lat.abs() == 90.0 {
            0.0
        } else {
            normalize_lon(lon)
        };
        Ok(GeoPoint { lat, lon })
    }

    pub fn to_ecef(&self, radius: f64) -> EcefVector {
        geo_to_ecef(*self, radius)
    }
}

/// Earth-centred Cartesian position in km.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EcefVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl EcefVector {
    pub const ZERO: EcefVector = EcefVector {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        EcefVector { x, y, z }
    }

    pub fn dot(&self, other: &EcefVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: &EcefVector) -> EcefVector {
        EcefVector {
            x: self.y * other.z - self.z * other.y,
            y: self.z * other.x - self.x * other.z,
            z: self.x * other.y - self.y * other.x,
        }
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn distance_squared(&self, other: &EcefVector) -> f64 {
        (*self - *other).norm_squared()
    }

    /// Unit vector in the same direction; `None` for the zero vector.
    pub fn normalized(&self) -> Option<EcefVector> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| *self / n)
    }

    /// Arithmetic mean of a non-empty set of vectors.
    pub fn mean<'a>(points: impl IntoIterator<Item = &'a EcefVector>) -> Option<EcefVector> {
        let (sum, n) = points
            .into_iter()
            .fold((EcefVector::ZERO, 0usize), |(s, n), p| (s + *p, n + 1));
        (n > 0).then(|| sum / n as f64)
    }
}

impl Add for EcefVector {
    type Output = EcefVector;
    fn add(self, rhs: EcefVector) -> EcefVector {
        EcefVector::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for EcefVector {
    type Output = EcefVector;
    fn sub(self, rhs: EcefVector) -> EcefVector {
        EcefVector::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for EcefVector {
    type Output = EcefVector;
    fn mul(self, k: f64) -> EcefVector {
        EcefVector::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Div<f64> for EcefVector {
    type Output = EcefVector;
    fn div(self, k: f64) -> EcefVector {
        EcefVector::new(self.x / k, self.y / k, self.z / k)
    }
}

/// Sub-satellite point plus altitude above the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SatellitePose {
    pub position: GeoPoint,
    /// km above the surface.
    pub altitude: f64,
}

impl SatellitePose {
    pub fn new(position: GeoPoint, altitude: f64) -> Result<Self> {
        if !(altitude.is_finite() && altitude > 0.0) {
            return Err(Error::domain(format!(
                "satellite altitude {altitude} must be > 0"
            )));
        }
        Ok(SatellitePose { position, altitude })
    }

    pub fn ecef(&self) -> EcefVector {
        geo_to_ecef(self.position, EARTH_RADIUS_KM + self.altitude)
    }
}

pub fn geo_to_ecef(p: GeoPoint, radius: f64) -> EcefVector {
    let (sin_lat, cos_lat) = p.lat.to_radians().sin_cos();
    let (sin_lon, cos_lon) = p.lon.to_radians().sin_cos();
    EcefVector::new(
        radius * cos_lat * cos_lon,
        radius * cos_lat * sin_lon,
        radius * sin_lat,
    )
}

/// Inverse of [`geo_to_ecef`] for any non-zero vector; the radius is
/// discarded. Longitude is taken with the quadrant-aware `atan2` and is
/// pinned to 0 on the polar axis.
pub fn ecef_to_geo(v: EcefVector) -> Result<GeoPoint> {
    let r = v.norm();
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::domain(
            "cannot project the zero vector to a geographic point",
        ));
    }
    let lat = (v.z / r).clamp(-1.0, 1.0).asin().to_degrees();
    let lon = if v.x == 0.0 && v.y == 0.0 {
        0.0
    } else {
        v.y.atan2(v.x).to_degrees()
    };
    GeoPoint::new(lat, lon)
}

/// Spherical law of cosines.
pub fn great_circle_distance(a: GeoPoint, b: GeoPoint, radius: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (sa, ca) = a.lat.to_radians().sin_cos();
    let (sb, cb) = b.lat.to_radians().sin_cos();
    let dlon = (a.lon - b.lon).to_radians();
    radius * clamped_acos(sa * sb + ca * cb * dlon.cos())
}

/// Angle in degrees between the lines of sight from the satellite to `a` and `b`.
pub fn view_angle(sat: &SatellitePose, a: GeoPoint, b: GeoPoint) -> f64 {
    view_angle_ecef(
        sat.ecef(),
        geo_to_ecef(a, EARTH_RADIUS_KM),
        geo_to_ecef(b, EARTH_RADIUS_KM),
    )
}

/// [`view_angle`] on precomputed Cartesian positions.
pub(crate) fn view_angle_ecef(sat: EcefVector, a: EcefVector, b: EcefVector) -> f64 {
    let u = a - sat;
    let v = b - sat;
    let denom = u.norm() * v.norm();
    if denom == 0.0 {
        return 0.0;
    }
    // atan2 of |u x v| and u.v keeps precision for nearly parallel rays,
    // where acos of the normalised dot product loses half the digits.
    u.cross(&v).norm().atan2(u.dot(&v)).to_degrees()
}

pub fn slant_range(sat: &SatellitePose, u: GeoPoint) -> f64 {
    (sat.ecef() - geo_to_ecef(u, EARTH_RADIUS_KM)).norm()
}

/// Mean of the points' Cartesian images pushed back onto the sphere.
///
/// Falls back to the first point when the mean lands on the Earth's centre
/// (e.g. antipodal pairs), which only happens for degenerate inputs.
pub fn spherical_centroid(points: &[GeoPoint]) -> Result<GeoPoint> {
    let first = *points
        .first()
        .ok_or_else(|| Error::domain("centroid of an empty point set"))?;
    if points.len() == 1 {
        return Ok(first);
    }
    let mean = EcefVector::mean(
        points
            .iter()
            .map(|p| geo_to_ecef(*p, EARTH_RADIUS_KM))
            .collect::<Vec<_>>()
            .iter(),
    )
    .expect("non-empty");
    if mean.norm() < 1e-9 * EARTH_RADIUS_KM {
        return Ok(first);
    }
    ecef_to_geo(mean)
}
