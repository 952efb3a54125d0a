use std::f64::consts::FRAC_PI_2;

use proptest::prelude::*;

use super::random::{lone_object, random_scene};
use super::*;
use crate::geometry::Vec3;

fn sim() -> Simulator {
    Simulator::with_builtin_kb()
}

fn obj(id: &str, shape: &str, pose: Pose) -> SceneObject {
    SceneObject {
        id: id.into(),
        shape: shape.into(),
        dimensions: Vec3::new(1.0, 1.0, 1.0),
        pose,
        movable: true,
        color: None,
    }
}

fn platform(id: &str, x: f64, z: f64) -> SceneObject {
    SceneObject {
        id: id.into(),
        shape: "platform".into(),
        dimensions: Vec3::new(2.0, 2.0, 2.0),
        pose: Pose::at(x, 1.0, z),
        movable: false,
        color: None,
    }
}

fn scene_of(objs: Vec<SceneObject>) -> Scene {
    let mut s = Scene::empty(Agent::default());
    for o in objs {
        s.objects.insert(o.id.clone(), o);
    }
    s
}

fn lying() -> Rotation {
    Rotation::from_axis_angle(&Vec3::x_axis(), FRAC_PI_2)
}

#[test]
fn spawn_canonical_scene() {
    let reg = ScenarioRegistry::builtin();
    let scenario = reg.get("f6").unwrap();
    let scene = sim().spawn(&scenario.scene).unwrap();
    assert_eq!(scene.movables().count(), 5);
    let platforms: Vec<_> = scene.objects.values().filter(|o| !o.movable).collect();
    assert_eq!(platforms.len(), 5);
    for p in platforms {
        assert!((p.aabb().max.y - 2.0).abs() < 1e-12);
    }
}

#[test]
fn spawn_empty_spec() {
    let scene = sim().spawn(&SceneSpec::default()).unwrap();
    assert!(scene.objects.is_empty());
    assert_eq!(scene.agent.jump_height, 1.0);
}

#[test]
fn spawn_rejects_overlap_and_bad_dims() {
    let mut spec = SceneSpec::default();
    let o = ObjectSpec {
        id: "a".into(),
        shape: "cube".into(),
        dimensions: Vec3::new(1.0, 1.0, 1.0),
        position: Vec3::new(0.0, 0.5, 0.0),
        rotation: [0.0; 3],
        color: None,
        movable: true,
    };
    spec.objects.push(o.clone());
    spec.objects.push(ObjectSpec {
        id: "b".into(),
        ..o.clone()
    });
    assert!(matches!(sim().spawn(&spec), Err(SimError::InvalidSpec(_))));

    let mut spec = SceneSpec::default();
    spec.objects.push(ObjectSpec {
        dimensions: Vec3::new(1.0, -1.0, 1.0),
        ..o.clone()
    });
    assert!(matches!(sim().spawn(&spec), Err(SimError::InvalidSpec(_))));

    let mut spec = SceneSpec::default();
    spec.objects.push(ObjectSpec {
        shape: "dodecahedron".into(),
        ..o
    });
    assert!(matches!(sim().spawn(&spec), Err(SimError::InvalidSpec(_))));
}

#[test]
fn place_exact_stack_rests() {
    let s = sim();
    let scene = scene_of(vec![
        obj("a", "cube", Pose::at(0.0, 0.5, 0.0)),
        obj("b", "cube", Pose::at(3.0, 0.5, 0.0)),
    ]);
    let placed = s.place(&scene, "b", Pose::at(0.0, 1.5, 0.0)).unwrap();
    assert_eq!(s.support_check(&placed, "b").unwrap(), SupportStatus::Supported);
    let settled = s.settle(&placed).unwrap();
    assert!(settled.displaced.is_empty());
    assert_eq!(settled.scene, placed);
    // input untouched
    assert_eq!(scene.pose("b").unwrap(), Pose::at(3.0, 0.5, 0.0));
}

#[test]
fn place_errors() {
    let s = sim();
    let scene = scene_of(vec![obj("a", "cube", Pose::at(0.0, 0.5, 0.0)), platform("p", 5.0, 0.0)]);
    assert!(matches!(
        s.place(&scene, "a", Pose::at(5.0, 0.5, 0.0)),
        Err(SimError::CollisionAtTarget { .. })
    ));
    assert!(matches!(
        s.place(&scene, "p", Pose::at(9.0, 1.0, 0.0)),
        Err(SimError::Immovable(_))
    ));
    assert!(matches!(
        s.place(&scene, "ghost", Pose::at(9.0, 1.0, 0.0)),
        Err(SimError::UnknownObject(_))
    ));
    assert!(matches!(
        s.place(&scene, "a", Pose::at(0.0, 0.2, 0.0)),
        Err(SimError::CollisionAtTarget { .. })
    ));
}

#[test]
fn cube_on_sphere_falls_to_ground() {
    let s = sim();
    let scene = scene_of(vec![
        obj("sphere", "sphere", Pose::at(0.0, 0.5, 0.0)),
        obj("cube", "cube", Pose::at(4.0, 0.5, 0.0)),
    ]);
    // point contact: accepted by place, resolved by settle
    let placed = s.place(&scene, "cube", Pose::at(0.0, 1.5, 0.0)).unwrap();
    assert_eq!(
        s.support_check(&placed, "cube").unwrap(),
        SupportStatus::Unsupported(UnsupportedReason::PointContact)
    );
    let r = s.settle(&placed).unwrap();
    assert_eq!(
        r.displaced.iter().cloned().collect::<Vec<_>>(),
        vec!["cube".to_string()]
    );
    let cube = r.scene.get("cube").unwrap();
    assert!((cube.aabb().min.y).abs() < 1e-9);
    // first free spot in +X: right next to the sphere
    assert!((cube.pose.position.x - 1.0).abs() < 1e-9);
    assert_eq!(r.scene.pose("sphere"), placed.pose("sphere"));
    let t = r.trace("cube").unwrap();
    assert_eq!(t.samples.len(), 3);
    assert_eq!(t.contact, crate::voxkb::SurfaceClass::Flat);
}

#[test]
fn cube_alone_on_ground_is_stable() {
    let s = sim();
    let scene = scene_of(vec![obj("cube", "cube", Pose::at(1.0, 0.5, 1.0))]);
    let r = s.settle(&scene).unwrap();
    assert!(r.displaced.is_empty());
    assert!(r.traces.is_empty());
    assert_eq!(r.scene, scene);
}

#[test]
fn cube_on_upright_cylinder_is_stable() {
    let s = sim();
    let scene = scene_of(vec![
        obj("cyl", "cylinder", Pose::at(0.0, 0.5, 0.0)),
        obj("cube", "cube", Pose::at(0.0, 1.5, 0.0)),
    ]);
    let r = s.settle(&scene).unwrap();
    assert!(r.displaced.is_empty());
}

#[test]
fn support_reasons() {
    let s = sim();
    let sphere_on_ground = scene_of(vec![obj("s", "sphere", Pose::at(0.0, 0.5, 0.0))]);
    assert!(s.support_check(&sphere_on_ground, "s").unwrap().is_supported());

    let floating = scene_of(vec![obj("c", "cube", Pose::at(0.0, 3.0, 0.0))]);
    assert_eq!(
        s.support_check(&floating, "c").unwrap(),
        SupportStatus::Unsupported(UnsupportedReason::FreeFall)
    );

    let on_lying = scene_of(vec![
        obj("cyl", "cylinder", Pose::new(Vec3::new(0.0, 0.5, 0.0), lying())),
        obj("c", "cube", Pose::at(0.0, 1.5, 0.0)),
    ]);
    assert_eq!(
        s.support_check(&on_lying, "c").unwrap(),
        SupportStatus::Unsupported(UnsupportedReason::PointContact)
    );
    assert!(s.support_check(&on_lying, "cyl").unwrap().is_supported());

    let ball_on_box = scene_of(vec![
        obj("c", "cube", Pose::at(0.0, 0.5, 0.0)),
        obj("s", "sphere", Pose::at(0.0, 1.5, 0.0)),
    ]);
    assert_eq!(
        s.support_check(&ball_on_box, "s").unwrap(),
        SupportStatus::Unsupported(UnsupportedReason::RollsOff)
    );

    let tipped = scene_of(vec![obj(
        "c",
        "cube",
        Pose::new(
            Vec3::new(0.0, 0.5f64.hypot(0.5), 0.0),
            Rotation::from_axis_angle(&Vec3::z_axis(), std::f64::consts::FRAC_PI_4),
        ),
    )]);
    assert_eq!(
        s.support_check(&tipped, "c").unwrap(),
        SupportStatus::Unsupported(UnsupportedReason::Tipped)
    );
    let r = s.settle(&tipped).unwrap();
    let c = r.scene.get("c").unwrap();
    assert!((c.pose.position.y - 0.5).abs() < 1e-9);
    assert!(s.support_check(&r.scene, "c").unwrap().is_supported());
}

/// Analytic oracle for a unit cube offset by `d` from the axis of an upright
/// cylinder of radius `r`: the cube's center lies over the contact patch iff
/// `d <= r` (the patch is the disk clipped by the cube's square, and the
/// cube's center is always inside its own square).
#[test]
fn overhang_matches_disk_oracle() {
    let s = sim();
    let r = 0.5;
    // inner radius of the 24-gon used for disks
    let inner = r * (std::f64::consts::PI / 24.0).cos();
    for i in 0..40 {
        let angle = i as f64 * 0.37;
        for d in [0.0, 0.2, 0.45, 0.55, 0.8, 0.95] {
            if d > inner && d <= r {
                continue;
            }
            let (x, z) = (d * angle.cos(), d * angle.sin());
            let scene = scene_of(vec![
                obj("cyl", "cylinder", Pose::at(0.0, 0.5, 0.0)),
                obj("cube", "cube", Pose::at(x, 1.5, z)),
            ]);
            let status = s.support_check(&scene, "cube").unwrap();
            let expected = d <= r;
            assert_eq!(status.is_supported(), expected, "d={d} angle={angle}");
            if !expected {
                assert_eq!(status, SupportStatus::Unsupported(UnsupportedReason::Overhang));
            }
        }
    }
}

#[test]
fn bridging_two_supports_is_stable() {
    let s = sim();
    let mut wide = obj("plank", "cuboid", Pose::at(0.0, 1.25, 0.0));
    wide.dimensions = Vec3::new(3.0, 0.5, 1.0);
    let scene = scene_of(vec![
        obj("a", "cube", Pose::at(-1.0, 0.5, 0.0)),
        obj("b", "cube", Pose::at(1.0, 0.5, 0.0)),
        wide,
    ]);
    assert!(s.support_check(&scene, "plank").unwrap().is_supported());
}

#[test]
fn reachability() {
    let s = sim();
    let agent = Agent::default();
    let bare = scene_of(vec![platform("p", 5.0, 0.0)]);
    assert!(!s.reachable(&bare, &agent, 2.0).unwrap().reachable);
    assert!(s.reachable(&bare, &agent, 0.0).unwrap().reachable);

    // two-step staircase against the platform face at x = 4
    let stairs = scene_of(vec![
        platform("p", 5.0, 0.0),
        obj("cyl", "cylinder", Pose::at(3.5, 0.5, 0.0)),
        obj("top", "cube", Pose::at(3.5, 1.5, 0.0)),
        obj("step", "cube", Pose::at(2.5, 0.5, 0.0)),
    ]);
    let r = s.reachable(&stairs, &agent, 2.0).unwrap();
    assert!(r.reachable);
    let heights: Vec<f64> = r.path.iter().map(|p| p.height).collect();
    assert_eq!(heights[0], 0.0);
    assert!(heights.windows(2).all(|w| w[1] - w[0] <= 1.0 + 1e-9));
    assert!(s.can_stand_on(&stairs, &agent, "p").unwrap().reachable);
    // the covered cylinder top cannot be stood on
    assert!(!s.can_stand_on(&stairs, &agent, "cyl").unwrap().reachable);

    // a lone cube far from the platform does not help
    let far = scene_of(vec![
        platform("p", 5.0, 0.0),
        obj("c", "cube", Pose::at(-3.0, 0.5, 0.0)),
    ]);
    assert!(!s.reachable(&far, &agent, 2.0).unwrap().reachable);

    // round tops are not standable
    let ball = scene_of(vec![obj("s", "sphere", Pose::at(0.0, 0.5, 0.0))]);
    assert!(!s.reachable(&ball, &agent, 1.0).unwrap().reachable);
}

#[test]
fn settle_is_deterministic_on_canonical_failure() {
    let s = sim();
    let scene = scene_of(vec![
        obj("sphere", "sphere", Pose::at(0.0, 0.5, 0.0)),
        obj("cube", "cube", Pose::at(0.0, 1.5, 0.0)),
        obj("cyl", "cylinder", Pose::at(0.0, 2.5, 0.0)),
    ]);
    let a = s.settle(&scene).unwrap();
    let b = s.settle(&scene).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.displaced.len(), 2);
}

fn check_settle_properties(s: &Simulator, scene: &Scene) -> Result<(), TestCaseError> {
    let once = s.settle(scene).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let twice = s.settle(&once.scene).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(&twice.scene, &once.scene);
    prop_assert!(twice.displaced.is_empty());
    let again = s.settle(scene).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(&again, &once);
    prop_assert_eq!(
        once.scene.objects.keys().collect::<Vec<_>>(),
        scene.objects.keys().collect::<Vec<_>>()
    );
    let tol = s.params.contact_tolerance;
    let boxes: Vec<_> = once.scene.objects.values().map(|o| o.aabb()).collect();
    for (i, a) in boxes.iter().enumerate() {
        prop_assert!(a.min.y >= -tol);
        for b in &boxes[i + 1..] {
            prop_assert!(!a.penetrates(b, tol));
        }
    }
    for id in scene.objects.keys() {
        match once.trace(id) {
            Some(t) => {
                prop_assert!(once.displaced.contains(id));
                prop_assert!(t.samples.len() >= 2);
                prop_assert!(t.samples.windows(2).all(|w| w[0].tick < w[1].tick));
                let first = t.samples.first().unwrap().position;
                prop_assert!(t.samples.iter().any(|smp| smp.position != first));
            }
            None => {
                prop_assert!(!once.displaced.contains(id));
                prop_assert_eq!(once.scene.pose(id), scene.pose(id));
            }
        }
    }
    for id in once.scene.objects.keys() {
        prop_assert!(s.support_check(&once.scene, id).unwrap().is_supported());
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn settle_properties_on_random_scenes(seed in any::<u64>()) {
        let s = sim();
        let scene = random_scene(&s, seed, 8);
        check_settle_properties(&s, &scene)?;
    }

    #[test]
    fn lone_resting_object_never_moves(seed in any::<u64>()) {
        let s = sim();
        let scene = lone_object(&s, seed);
        let r = s.settle(&scene).unwrap();
        prop_assert!(r.displaced.is_empty());
        prop_assert_eq!(r.scene, scene);
    }
}
