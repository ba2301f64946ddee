//! Geodetic-to-local coordinate conversion and planar geometry primitives.
//!
//! All positions are handled internally in a local East-North-Up (ENU) tangent
//! frame anchored at a scenario origin. The conversion uses an equirectangular
//! flat-earth approximation with a fixed scale of 111,320 m per degree of
//! latitude and 111,320·cos(origin latitude) m per degree of longitude.
//!
//! Validity: within 5 km of the origin and below ~60° latitude the horizontal
//! distance error against a spherical model stays below 0.1% of separation,
//! which is sufficient for mission areas a few kilometers across. Do not use
//! this frame for geometries wider than ~20 km.
//!
//! Altitudes are meters above ground level (AGL) throughout.

use thiserror::Error;

/// Meters per degree of latitude in the flat-earth frame.
pub const METERS_PER_DEGREE: f64 = 111_320.0;

#[derive(Debug, Error, PartialEq)]
pub enum GeoError {
    #[error("non-finite coordinate component")]
    NonFinite,
    #[error("origin latitude {0} outside (-89, 89) degrees")]
    DegenerateOrigin(f64),
    #[error("zero-length segment")]
    DegenerateSegment,
}

/// A geographic position: degrees latitude/longitude plus meters AGL.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeoPoint {
    pub lat_deg: f64,
    pub lon_deg: f64,
    #[serde(default)]
    pub alt_m: f64,
}

impl GeoPoint {
    pub fn new(lat_deg: f64, lon_deg: f64, alt_m: f64) -> Self {
        Self { lat_deg, lon_deg, alt_m }
    }

    pub fn is_finite(&self) -> bool {
        self.lat_deg.is_finite() && self.lon_deg.is_finite() && self.alt_m.is_finite()
    }
}

/// A position in the local tangent frame, meters east/north/up of the origin.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EnuPoint {
    pub east_m: f64,
    pub north_m: f64,
    pub up_m: f64,
}

impl EnuPoint {
    pub fn new(east_m: f64, north_m: f64, up_m: f64) -> Self {
        Self { east_m, north_m, up_m }
    }

    pub fn is_finite(&self) -> bool {
        self.east_m.is_finite() && self.north_m.is_finite() && self.up_m.is_finite()
    }
}

/// A named airspace volume: a simple horizontal polygon extruded over an
/// altitude band. Used for no-fly zones, landing areas, and GPS dead spots.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub id: String,
    /// Horizontal outline, ≥3 vertices, no self-intersection.
    pub polygon: Vec<EnuPoint>,
    pub alt_floor_m: f64,
    pub alt_ceiling_m: f64,
}

/// Converts a geographic point to the local frame anchored at `origin`.
pub fn to_enu(origin: GeoPoint, p: GeoPoint) -> Result<EnuPoint, GeoError> {
    if !origin.is_finite() || !p.is_finite() {
        return Err(GeoError::NonFinite);
    }
    if origin.lat_deg <= -89.0 || origin.lat_deg >= 89.0 {
        return Err(GeoError::DegenerateOrigin(origin.lat_deg));
    }
    let east = (p.lon_deg - origin.lon_deg) * METERS_PER_DEGREE * origin.lat_deg.to_radians().cos();
    let north = (p.lat_deg - origin.lat_deg) * METERS_PER_DEGREE;
    let up = p.alt_m - origin.alt_m;
    Ok(EnuPoint::new(east, north, up))
}

/// Exact algebraic inverse of [`to_enu`] at the same origin.
pub fn to_lla(origin: GeoPoint, e: EnuPoint) -> Result<GeoPoint, GeoError> {
    if !origin.is_finite() || !e.is_finite() {
        return Err(GeoError::NonFinite);
    }
    if origin.lat_deg <= -89.0 || origin.lat_deg >= 89.0 {
        return Err(GeoError::DegenerateOrigin(origin.lat_deg));
    }
    let lat = origin.lat_deg + e.north_m / METERS_PER_DEGREE;
    let lon = origin.lon_deg + e.east_m / (METERS_PER_DEGREE * origin.lat_deg.to_radians().cos());
    let alt = origin.alt_m + e.up_m;
    Ok(GeoPoint::new(lat, lon, alt))
}

/// Horizontal (lateral) distance in meters; the up components are ignored.
pub fn horizontal_distance(a: EnuPoint, b: EnuPoint) -> f64 {
    let de = a.east_m - b.east_m;
    let dn = a.north_m - b.north_m;
    (de * de + dn * dn).sqrt()
}

/// True iff `p` lies inside `r`: the horizontal projection is inside or on
/// the boundary of the polygon and the altitude is within the band.
/// Boundary points count as inside.
pub fn contains(r: &Region, p: EnuPoint) -> bool {
    if p.up_m < r.alt_floor_m || p.up_m > r.alt_ceiling_m {
        return false;
    }
    point_in_polygon(&r.polygon, p.east_m, p.north_m)
}

/// Boundary-inclusive point-in-polygon test (even-odd rule).
pub fn point_in_polygon(polygon: &[EnuPoint], x: f64, y: f64) -> bool {
    let n = polygon.len();
    if n < 3 {
        return false;
    }
    // Boundary check first so edge points are classified deterministically.
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        if point_on_segment(x, y, a.east_m, a.north_m, b.east_m, b.north_m) {
            return true;
        }
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = (polygon[i].east_m, polygon[i].north_m);
        let (xj, yj) = (polygon[j].east_m, polygon[j].north_m);
        if (yi > y) != (yj > y) {
            let x_cross = xi + (y - yi) * (xj - xi) / (yj - yi);
            if x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn point_on_segment(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> bool {
    let cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax);
    let scale = (bx - ax).abs().max((by - ay).abs()).max(1.0);
    if cross.abs() > 1e-9 * scale {
        return false;
    }
    px >= ax.min(bx) - 1e-12
        && px <= ax.max(bx) + 1e-12
        && py >= ay.min(by) - 1e-12
        && py <= ay.max(by) + 1e-12
}

/// Horizontal distance from `p` to the closest point of the closed segment
/// `seg_start`..`seg_end` (perpendicular distance when the projection falls
/// inside the segment, endpoint distance otherwise).
pub fn cross_track(p: EnuPoint, seg_start: EnuPoint, seg_end: EnuPoint) -> Result<f64, GeoError> {
    let dx = seg_end.east_m - seg_start.east_m;
    let dy = seg_end.north_m - seg_start.north_m;
    let len_sq = dx * dx + dy * dy;
    if len_sq == 0.0 {
        return Err(GeoError::DegenerateSegment);
    }
    let t = ((p.east_m - seg_start.east_m) * dx + (p.north_m - seg_start.north_m) * dy) / len_sq;
    let t = t.clamp(0.0, 1.0);
    let cx = seg_start.east_m + t * dx;
    let cy = seg_start.north_m + t * dy;
    let de = p.east_m - cx;
    let dn = p.north_m - cy;
    Ok((de * de + dn * dn).sqrt())
}

/// Signed horizontal distance from `(x, y)` to the nearest polygon edge.
/// Positive means the point is inside the polygon.
pub fn penetration_depth(polygon: &[EnuPoint], x: f64, y: f64) -> f64 {
    let p = EnuPoint::new(x, y, 0.0);
    let mut min_d = f64::INFINITY;
    let n = polygon.len();
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        if let Ok(d) = cross_track(p, a, b) {
            min_d = min_d.min(d);
        }
    }
    if point_in_polygon(polygon, x, y) {
        min_d
    } else {
        -min_d
    }
}

/// True iff the polygon outline has no self-intersection (non-adjacent edges
/// never cross). O(n²) pairwise check, fine at the vertex counts in scenarios.
pub fn polygon_is_simple(polygon: &[EnuPoint]) -> bool {
    let n = polygon.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let a1 = polygon[i];
        let a2 = polygon[(i + 1) % n];
        for j in (i + 1)..n {
            // Skip adjacent edges (they share a vertex by construction).
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let b1 = polygon[j];
            let b2 = polygon[(j + 1) % n];
            if segments_intersect(a1, a2, b1, b2) {
                return false;
            }
        }
    }
    true
}

fn segments_intersect(a1: EnuPoint, a2: EnuPoint, b1: EnuPoint, b2: EnuPoint) -> bool {
    let d1 = orient(b1, b2, a1);
    let d2 = orient(b1, b2, a2);
    let d3 = orient(a1, a2, b1);
    let d4 = orient(a1, a2, b2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_box(b1, b2, a1))
        || (d2 == 0.0 && on_box(b1, b2, a2))
        || (d3 == 0.0 && on_box(a1, a2, b1))
        || (d4 == 0.0 && on_box(a1, a2, b2))
}

fn orient(a: EnuPoint, b: EnuPoint, c: EnuPoint) -> f64 {
    (b.east_m - a.east_m) * (c.north_m - a.north_m)
        - (b.north_m - a.north_m) * (c.east_m - a.east_m)
}

fn on_box(a: EnuPoint, b: EnuPoint, p: EnuPoint) -> bool {
    p.east_m >= a.east_m.min(b.east_m)
        && p.east_m <= a.east_m.max(b.east_m)
        && p.north_m >= a.north_m.min(b.north_m)
        && p.north_m <= a.north_m.max(b.north_m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beach_origin() -> GeoPoint {
        GeoPoint::new(42.207762, -86.393095, 0.0)
    }

    #[test]
    fn to_enu_identity_at_origin() {
        let o = beach_origin();
        let e = to_enu(o, o).unwrap();
        assert_eq!(e, EnuPoint::new(0.0, 0.0, 0.0));
    }

    #[test]
    fn to_enu_north_offset() {
        let o = beach_origin();
        let p = GeoPoint::new(42.208762, -86.393095, 0.0);
        let e = to_enu(o, p).unwrap();
        assert!((e.north_m - 111.32).abs() < 1e-6);
        assert_eq!(e.east_m, 0.0);
    }

    #[test]
    fn to_enu_east_offset() {
        let o = beach_origin();
        let p = GeoPoint::new(42.207762, -86.392095, 0.0);
        let e = to_enu(o, p).unwrap();
        let expected = 111_320.0 * (42.207762f64).to_radians().cos() * 0.001;
        assert!((e.east_m - expected).abs() < 1e-9);
        assert!((e.east_m - 82.5).abs() < 0.1);
        assert_eq!(e.north_m, 0.0);
    }

    #[test]
    fn to_lla_inverts_to_enu() {
        let o = beach_origin();
        let p = GeoPoint::new(42.21, -86.40, 55.0);
        let back = to_lla(o, to_enu(o, p).unwrap()).unwrap();
        assert!((back.lat_deg - p.lat_deg).abs() < 1e-9);
        assert!((back.lon_deg - p.lon_deg).abs() < 1e-9);
        assert!((back.alt_m - p.alt_m).abs() < 1e-9);
    }

    #[test]
    fn to_lla_one_degree_east() {
        let o = beach_origin();
        let e = EnuPoint::new(METERS_PER_DEGREE * o.lat_deg.to_radians().cos(), 0.0, 0.0);
        let p = to_lla(o, e).unwrap();
        assert!((p.lon_deg - (o.lon_deg + 1.0)).abs() < 1e-9);
    }

    #[test]
    fn to_enu_rejects_degenerate_origin() {
        let o = GeoPoint::new(89.5, 0.0, 0.0);
        assert_eq!(to_enu(o, o), Err(GeoError::DegenerateOrigin(89.5)));
    }

    #[test]
    fn to_enu_rejects_non_finite() {
        let o = beach_origin();
        let p = GeoPoint::new(f64::NAN, 0.0, 0.0);
        assert_eq!(to_enu(o, p), Err(GeoError::NonFinite));
    }

    #[test]
    fn horizontal_distance_ignores_altitude() {
        let a = EnuPoint::new(0.0, 0.0, 30.0);
        let b = EnuPoint::new(3.0, 4.0, 80.0);
        assert_eq!(horizontal_distance(a, b), 5.0);
    }

    #[test]
    fn horizontal_distance_same_point() {
        let a = EnuPoint::new(7.0, -2.0, 10.0);
        assert_eq!(horizontal_distance(a, a), 0.0);
    }

    #[test]
    fn horizontal_distance_axis() {
        let a = EnuPoint::new(0.0, 0.0, 0.0);
        let b = EnuPoint::new(9.0, 0.0, 0.0);
        assert_eq!(horizontal_distance(a, b), 9.0);
    }

    fn unit_square() -> Region {
        Region {
            id: "SQ".into(),
            polygon: vec![
                EnuPoint::new(0.0, 0.0, 0.0),
                EnuPoint::new(10.0, 0.0, 0.0),
                EnuPoint::new(10.0, 10.0, 0.0),
                EnuPoint::new(0.0, 10.0, 0.0),
            ],
            alt_floor_m: 0.0,
            alt_ceiling_m: 120.0,
        }
    }

    #[test]
    fn contains_centroid() {
        assert!(contains(&unit_square(), EnuPoint::new(5.0, 5.0, 30.0)));
    }

    #[test]
    fn contains_outside() {
        assert!(!contains(&unit_square(), EnuPoint::new(15.0, 5.0, 30.0)));
    }

    #[test]
    fn contains_boundary_counts_inside() {
        assert!(contains(&unit_square(), EnuPoint::new(10.0, 5.0, 30.0)));
    }

    #[test]
    fn contains_respects_altitude_band() {
        assert!(!contains(&unit_square(), EnuPoint::new(5.0, 5.0, 121.0)));
        assert!(!contains(&unit_square(), EnuPoint::new(5.0, 5.0, -1.0)));
    }

    #[test]
    fn cross_track_perpendicular() {
        let d = cross_track(
            EnuPoint::new(5.0, 5.0, 0.0),
            EnuPoint::new(0.0, 0.0, 0.0),
            EnuPoint::new(10.0, 0.0, 0.0),
        )
        .unwrap();
        assert_eq!(d, 5.0);
    }

    #[test]
    fn cross_track_on_segment_is_zero() {
        let d = cross_track(
            EnuPoint::new(4.0, 0.0, 0.0),
            EnuPoint::new(0.0, 0.0, 0.0),
            EnuPoint::new(10.0, 0.0, 0.0),
        )
        .unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn cross_track_endpoint_distance() {
        let d = cross_track(
            EnuPoint::new(-3.0, 4.0, 0.0),
            EnuPoint::new(0.0, 0.0, 0.0),
            EnuPoint::new(10.0, 0.0, 0.0),
        )
        .unwrap();
        assert_eq!(d, 5.0);
    }

    #[test]
    fn cross_track_rejects_degenerate_segment() {
        let p = EnuPoint::new(1.0, 1.0, 0.0);
        let s = EnuPoint::new(0.0, 0.0, 0.0);
        assert_eq!(cross_track(p, s, s), Err(GeoError::DegenerateSegment));
    }

    #[test]
    fn penetration_depth_sign() {
        let sq = unit_square();
        assert!(penetration_depth(&sq.polygon, 5.0, 5.0) > 0.0);
        assert!(penetration_depth(&sq.polygon, 15.0, 5.0) < 0.0);
        assert!((penetration_depth(&sq.polygon, 5.0, 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn simple_polygon_check() {
        assert!(polygon_is_simple(&unit_square().polygon));
        let bowtie = vec![
            EnuPoint::new(0.0, 0.0, 0.0),
            EnuPoint::new(10.0, 10.0, 0.0),
            EnuPoint::new(10.0, 0.0, 0.0),
            EnuPoint::new(0.0, 10.0, 0.0),
        ];
        assert!(!polygon_is_simple(&bowtie));
    }
}
