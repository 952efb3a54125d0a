use serde::{Deserialize, Serialize};

use crate::geometry::{convex_hull, Point2};
use crate::voxkb::Surface;

use super::Body;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnsupportedReason {
    /// Nothing underneath.
    FreeFall,
    /// Resting on flat surfaces but the center of mass hangs outside them.
    Overhang,
    /// Only touching round or pointed tops.
    PointContact,
    /// A round object on a raised surface rolls off.
    RollsOff,
    /// Balanced on an edge or corner.
    Tipped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportStatus {
    Supported,
    Unsupported(UnsupportedReason),
}

impl SupportStatus {
    pub fn is_supported(&self) -> bool {
        matches!(self, SupportStatus::Supported)
    }
}

/// Stability of `bodies[idx]` against everything else in the scene.
///
/// An object is supported iff its center of mass projects inside the convex
/// hull of its flat-on-flat contact patches. The floor supports flat and
/// round objects alike; raised round contacts contribute no support region.
pub(super) fn check(bodies: &[Body<'_>], idx: usize, tol: f64) -> SupportStatus {
    let body = &bodies[idx];
    if !body.obj.movable {
        return SupportStatus::Supported;
    }
    if matches!(body.habitat.support_surface, Surface::Point) {
        return SupportStatus::Unsupported(UnsupportedReason::Tipped);
    }
    let bottom = body.bottom();
    if bottom.abs() <= tol {
        return SupportStatus::Supported;
    }
    let contacts: Vec<&Body<'_>> = bodies
        .iter()
        .enumerate()
        .filter(|(j, other)| {
            *j != idx && (other.top_height() - bottom).abs() <= tol && other.aabb.overlaps_horizontally(&body.aabb, tol)
        })
        .map(|(_, b)| b)
        .collect();
    if contacts.is_empty() {
        return SupportStatus::Unsupported(UnsupportedReason::FreeFall);
    }
    let footprint = match (&body.habitat.support_surface, &body.footprint) {
        (Surface::Flat(_), Some(fp)) => fp,
        _ => return SupportStatus::Unsupported(UnsupportedReason::RollsOff),
    };
    let mut region: Vec<Point2> = Vec::new();
    for c in contacts {
        if let Some(top) = &c.top {
            let patch = footprint.clip(top);
            if !patch.is_empty() {
                region.extend(patch.vertices);
            }
        }
    }
    if region.is_empty() {
        return SupportStatus::Unsupported(UnsupportedReason::PointContact);
    }
    let hull = convex_hull(&region);
    if hull.contains(&body.com(), 1e-9) {
        SupportStatus::Supported
    } else {
        SupportStatus::Unsupported(UnsupportedReason::Overhang)
    }
}
