use crate::geometry::{convex_hull, Aabb, Point2, Polygon, Vec3};
use crate::voxkb::{active_habitat, Axis, Footprint, FootprintShape, Habitat, Surface, Voxeme};

use super::SceneObject;

const DISK_SEGMENTS: usize = 24;

/// Derived geometry of one object in its current pose.
#[derive(Debug, Clone)]
pub struct Body<'s> {
    pub obj: &'s SceneObject,
    pub habitat: Habitat,
    pub aabb: Aabb,
    /// Flat bottom contact patch in the horizontal plane, if any.
    pub footprint: Option<Polygon>,
    /// Flat top surface in the horizontal plane, if any.
    pub top: Option<Polygon>,
}

impl<'s> Body<'s> {
    pub fn new(obj: &'s SceneObject, voxeme: &Voxeme) -> Self {
        let habitat = active_habitat(voxeme, &obj.pose.rotation);
        let aabb = obj.aabb();
        let vertical = habitat.up.vertical_axis();
        let face = |surface: &Surface, sign: f64| match (surface, vertical) {
            (Surface::Flat(fp), Some(axis)) => Some(face_polygon(obj, fp, axis, sign, &habitat)),
            _ => None,
        };
        let footprint = face(&habitat.support_surface, -1.0);
        let top = face(&habitat.top_surface, 1.0);
        Body {
            obj,
            habitat,
            aabb,
            footprint,
            top,
        }
    }

    pub fn bottom(&self) -> f64 {
        self.aabb.min.y
    }

    pub fn top_height(&self) -> f64 {
        self.aabb.max.y
    }

    /// Horizontal projection of the center of mass.
    pub fn com(&self) -> Point2 {
        let p = &self.obj.pose.position;
        Point2::new(p.x, p.z)
    }
}

/// Face polygon on the bottom (`sign = -1`) or top (`sign = +1`) of the
/// object along its current vertical axis, projected to the floor plane.
fn face_polygon(obj: &SceneObject, fp: &Footprint, vertical: Axis, sign: f64, habitat: &Habitat) -> Polygon {
    let (ha, hb) = fp.half_extents(&obj.dimensions, vertical);
    let (a, b) = vertical.others();
    // which end of the vertical axis faces up
    let up_sign = match habitat.up {
        crate::voxkb::UpConstraint::Along(sa) if !sa.positive => -1.0,
        _ => 1.0,
    };
    let offset = vertical.unit() * (obj.dimensions[vertical.index()] * 0.5 * sign * up_sign);
    let local: Vec<Vec3> = match fp.shape {
        FootprintShape::Rect => [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]
            .iter()
            .map(|&(sa, sb)| offset + a.unit() * (sa * ha) + b.unit() * (sb * hb))
            .collect(),
        FootprintShape::Disk => (0..DISK_SEGMENTS)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / DISK_SEGMENTS as f64;
                offset + a.unit() * (ha * t.cos()) + b.unit() * (hb * t.sin())
            })
            .collect(),
    };
    let pts: Vec<Point2> = local
        .iter()
        .map(|l| {
            let w = obj.pose.position + obj.pose.rotation * l;
            Point2::new(w.x, w.z)
        })
        .collect();
    convex_hull(&pts)
}
