use hapgrip_core::sim::rng::{stream, Stream};
use hapgrip_core::sim::{
    default_objects, pose_to_force, step_world, ForceTable, GraspState, ObjectSpec, RenderConfig,
    Renderer, WorldConfig, WorldEvent,
};
use hapgrip_core::tactile::{capture_baseline, extract_metrics, ContactMetrics, MetricsConfig};
use hapgrip_core::FingerId;
use proptest::prelude::*;

fn object(i: usize) -> ObjectSpec {
    default_objects()[i].clone()
}

fn metrics_at(
    renderer: &Renderer,
    obj: &ObjectSpec,
    finger: FingerId,
    force: f64,
    seed: u64,
) -> ContactMetrics {
    let mut r = stream(seed, Stream::Render);
    let base: Vec<_> = (0..10)
        .map(|_| renderer.render(finger, 0.0, obj, 0.0, &mut r))
        .collect();
    let baseline = capture_baseline(&base).unwrap();
    let frame = renderer.render(finger, force, obj, 0.1, &mut r);
    extract_metrics(&frame, &baseline, &MetricsConfig::default()).unwrap()
}

#[test]
fn contact_area_grows_across_pose_forces() {
    let renderer = Renderer::new(RenderConfig::default());
    let table = ForceTable::default();
    for i in 0..3 {
        let obj = object(i);
        for finger in FingerId::ALL {
            for seed in 0..4 {
                let sweep: Vec<u32> = (2..=5)
                    .map(|p| {
                        metrics_at(
                            &renderer,
                            &obj,
                            finger,
                            pose_to_force(&table, p).unwrap(),
                            seed,
                        )
                        .eda
                    })
                    .collect();
                assert!(
                    sweep.windows(2).all(|w| w[0] <= w[1]),
                    "{} {finger}: {sweep:?}",
                    obj.name
                );
                let at = |f: f64| metrics_at(&renderer, &obj, finger, f, seed).eda;
                assert!(
                    at(10.0) > at(2.0),
                    "{} {finger}: {} vs {}",
                    obj.name,
                    at(10.0),
                    at(2.0)
                );
            }
        }
    }
}

#[test]
fn stiffer_object_concentrates_contact() {
    let renderer = Renderer::new(RenderConfig::default());
    for force in [2.0, 5.0, 10.0, 18.0] {
        for finger in FingerId::ALL {
            let cci: Vec<f64> = (0..3)
                .map(|i| metrics_at(&renderer, &object(i), finger, force, 7).cci)
                .collect();
            assert!(
                cci[0] > cci[1] && cci[1] > cci[2],
                "{force} N {finger}: {cci:?}"
            );
        }
    }
}

#[test]
fn no_force_means_no_contact() {
    let renderer = Renderer::new(RenderConfig::default());
    for i in 0..3 {
        for finger in FingerId::ALL {
            for seed in 0..5 {
                assert!(!metrics_at(&renderer, &object(i), finger, 0.0, seed).contact);
            }
        }
    }
}

#[test]
fn render_is_deterministic_per_seed() {
    let renderer = Renderer::new(RenderConfig::default());
    let obj = object(1);
    let a = renderer.render(
        FingerId::Ring,
        7.0,
        &obj,
        0.5,
        &mut stream(42, Stream::Render),
    );
    let b = renderer.render(
        FingerId::Ring,
        7.0,
        &obj,
        0.5,
        &mut stream(42, Stream::Render),
    );
    let c = renderer.render(
        FingerId::Ring,
        7.0,
        &obj,
        0.5,
        &mut stream(43, Stream::Render),
    );
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn force_table_must_increase() {
    assert!(ForceTable::new([0.0, 2.0, 2.0, 3.0, 4.0]).is_err());
    assert!(ForceTable::new([0.0, 1.0, 2.0, 3.0, 4.0]).is_ok());
    let t = ForceTable::default();
    assert_eq!(pose_to_force(&t, 1).unwrap(), 0.0);
    assert!(pose_to_force(&t, 0).is_err());
    assert!(pose_to_force(&t, 6).is_err());
}

#[test]
fn sustained_overload_deforms_then_crushes() {
    let obj = object(2);
    let world = WorldConfig::default();
    let mut s = GraspState::default();
    let mut events = Vec::new();
    for _ in 0..150 {
        events.extend(step_world(&mut s, [10.0; 4], &obj, &world, 0.01).unwrap());
    }
    assert_eq!(s.deformation_events, 1);
    assert!(s.crushed);
    let d = events
        .iter()
        .position(|e| *e == WorldEvent::Deformation)
        .unwrap();
    let c = events
        .iter()
        .position(|e| *e == WorldEvent::Crushed)
        .unwrap();
    assert!(d < c);
}

#[test]
fn releasing_an_airborne_object_is_one_slip() {
    let obj = object(0);
    let world = WorldConfig::default();
    let mut s = GraspState::default();
    for _ in 0..50 {
        step_world(&mut s, [10.0; 4], &obj, &world, 0.01).unwrap();
    }
    assert!(s.held && s.height > 0.0);
    let ev = step_world(&mut s, [0.5; 4], &obj, &world, 0.01).unwrap();
    assert_eq!(ev, vec![WorldEvent::Slip]);
    assert_eq!((s.slip_events, s.height), (1, 0.0));
    step_world(&mut s, [0.5; 4], &obj, &world, 0.01).unwrap();
    assert_eq!(s.slip_events, 1);
}

proptest! {
    #[test]
    fn world_stays_physical(forces in prop::collection::vec(prop::array::uniform4(0.0f64..20.0), 1..300), which in 0usize..3) {
        let obj = object(which);
        let world = WorldConfig::default();
        let mut s = GraspState::default();
        let (mut slips, mut deforms) = (0, 0);
        for f in forces {
            let was_airborne_and_held = s.held && s.height > 0.0;
            let ev = step_world(&mut s, f, &obj, &world, 0.01).unwrap();
            prop_assert!(s.height >= 0.0 && s.height <= world.lift_target + 1e-12);
            prop_assert_eq!(s.held, world.holds(&obj, f.iter().sum()));
            prop_assert!(s.slip_events >= slips && s.deformation_events >= deforms);
            if ev.contains(&WorldEvent::Slip) {
                prop_assert!(was_airborne_and_held && !s.held);
            }
            if !s.held {
                prop_assert_eq!(s.height, 0.0);
            }
            slips = s.slip_events;
            deforms = s.deformation_events;
        }
        if obj.crush_force.is_none() {
            prop_assert_eq!(s.deformation_events, 0);
        }
    }

    #[test]
    fn heavier_grip_never_lowers_peak_intensity(f1 in 0.5f64..20.0, df in 0.5f64..10.0, seed in 0u64..1000) {
        let renderer = Renderer::new(RenderConfig { noise_sd: 0.0, ..RenderConfig::default() });
        let obj = object(1);
        let peak = |f: f64| {
            let frame = renderer.render(FingerId::Index, f, &obj, 0.0, &mut stream(seed, Stream::Render));
            frame.pixels().iter().map(|p| p[0]).max().unwrap()
        };
        prop_assert!(peak(f1) <= peak(f1 + df));
    }
}
