use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::geometry::Aabb;

use super::{Agent, ObjectId, Scene, SimError, Simulator};

/// Largest horizontal gap the agent can step across between two surfaces.
pub const STEP_REACH: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandingSurface {
    /// `None` for the floor.
    pub id: Option<ObjectId>,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reachability {
    pub reachable: bool,
    /// Surfaces visited from the floor to the goal, empty when unreachable.
    pub path: Vec<StandingSurface>,
}

struct Node {
    id: Option<ObjectId>,
    height: f64,
    extent: Option<Aabb>,
}

fn surfaces(sim: &Simulator, scene: &Scene) -> Result<Vec<Node>, SimError> {
    let tol = sim.params.contact_tolerance;
    let bodies = sim.bodies(scene)?;
    let mut nodes = vec![Node {
        id: None,
        height: 0.0,
        extent: None,
    }];
    for b in &bodies {
        let Some(top) = &b.top else { continue };
        let top_box = top.vertices.iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(x0, z0, x1, z1), p| (x0.min(p.x), z0.min(p.y), x1.max(p.x), z1.max(p.y)),
        );
        let h = b.top_height();
        // fully covered tops cannot be stood on
        let covered = bodies.iter().any(|o| {
            o.obj.id != b.obj.id
                && (o.bottom() - h).abs() <= tol
                && o.aabb.min.x <= top_box.0 + tol
                && o.aabb.min.z <= top_box.1 + tol
                && o.aabb.max.x >= top_box.2 - tol
                && o.aabb.max.z >= top_box.3 - tol
        });
        if covered {
            continue;
        }
        nodes.push(Node {
            id: Some(b.obj.id.clone()),
            height: h,
            extent: Some(b.aabb),
        });
    }
    Ok(nodes)
}

fn adjacent(a: &Node, b: &Node) -> bool {
    match (&a.extent, &b.extent) {
        (Some(x), Some(y)) => x.horizontal_gap(y) <= STEP_REACH,
        _ => true,
    }
}

fn search(
    sim: &Simulator,
    scene: &Scene,
    agent: &Agent,
    goal: impl Fn(&Node) -> bool,
) -> Result<Reachability, SimError> {
    let tol = sim.params.contact_tolerance;
    let nodes = surfaces(sim, scene)?;
    let mut parent: Vec<Option<usize>> = vec![None; nodes.len()];
    let mut seen = vec![false; nodes.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(cur) = queue.pop_front() {
        if goal(&nodes[cur]) {
            let mut path = Vec::new();
            let mut at = Some(cur);
            while let Some(i) = at {
                path.push(StandingSurface {
                    id: nodes[i].id.clone(),
                    height: nodes[i].height,
                });
                at = parent[i];
            }
            path.reverse();
            return Ok(Reachability { reachable: true, path });
        }
        for next in 0..nodes.len() {
            if seen[next] {
                continue;
            }
            let climb = nodes[next].height - nodes[cur].height;
            if climb <= agent.jump_height + tol && adjacent(&nodes[cur], &nodes[next]) {
                seen[next] = true;
                parent[next] = Some(cur);
                queue.push_back(next);
            }
        }
    }
    Ok(Reachability {
        reachable: false,
        path: Vec::new(),
    })
}

pub(super) fn reachable(
    sim: &Simulator,
    scene: &Scene,
    agent: &Agent,
    target_height: f64,
) -> Result<Reachability, SimError> {
    let tol = sim.params.contact_tolerance;
    search(sim, scene, agent, |n| n.height >= target_height - tol)
}

pub(super) fn reach_surface(sim: &Simulator, scene: &Scene, agent: &Agent, id: &str) -> Result<Reachability, SimError> {
    scene.get(id)?;
    search(sim, scene, agent, |n| n.id.as_deref() == Some(id))
}
