use std::f64::consts::PI;

use proptest::prelude::*;
use tpslayout::layout::{
    direction, extract_corners, maps_to_layout, pixel, pixel_to_spherical, project, render_maps, RenderStyle,
};
use tpslayout::synth::{sample_layout, CorpusSpec, RoomKind};
use tpslayout::RoomLayout;

fn cuboid() -> impl Strategy<Value = RoomLayout> {
    (2.5f64..8.0, 2.5f64..8.0, 2.4f64..3.5, -0.5f64..0.5, -0.5f64..0.5)
        .prop_map(|(w, d, c, x, z)| RoomLayout::cuboid(w, d, c, 1.6, [x, z]).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Pixel position, then the viewing ray intersected with the floor or
    /// ceiling plane, lands back on the corner.
    #[test]
    fn projection_round_trip_onto_planes(room in cuboid()) {
        for i in 0..room.corner_count() {
            for p in [room.floor_corner(i), room.ceiling_corner(i)] {
                let [u, v] = pixel(&project(&p).unwrap(), 1024, 512);
                let ray = direction(&pixel_to_spherical(u, v, 1024, 512));
                let back = ray * (p.y / ray.y);
                prop_assert!((back - p).norm() < 1e-6, "{back} vs {p}");
            }
        }
    }

    /// Turning the camera by a whole number of pixel columns rolls the maps.
    #[test]
    fn yaw_rotation_is_a_horizontal_roll(room in cuboid(), shift in -300isize..300) {
        let style = RenderStyle::for_width(1024);
        let turned = room.rotated(2.0 * PI * shift as f64 / 1024.0).unwrap();
        let a = render_maps(&room, 1024, 512, style).unwrap().roll_x(shift);
        let b = render_maps(&turned, 1024, 512, style).unwrap();
        let ca = extract_corners(&a.corner, 0.5, 10.0).unwrap();
        let cb = extract_corners(&b.corner, 0.5, 10.0).unwrap();
        prop_assert_eq!(ca.len(), cb.len());
        for (x, y) in ca.corners.iter().zip(&cb.corners) {
            let du = (x.u - y.u).abs();
            prop_assert!(du.min(1024.0 - du) < 1.0);
            prop_assert!((x.v_ceiling - y.v_ceiling).abs() < 1.0 && (x.v_floor - y.v_floor).abs() < 1.0);
        }
    }
}

fn assert_round_trip(room: &RoomLayout) {
    let maps = render_maps(room, 1024, 512, RenderStyle::for_width(1024)).unwrap();
    let rec = maps_to_layout(&maps, room.camera_height()).unwrap();
    assert_eq!(rec.corner_count(), room.corner_count());
    assert!((rec.ceiling_height() - room.ceiling_height()).abs() < 0.02);
    for p in room.floor_polygon() {
        let nearest = rec
            .floor_polygon()
            .iter()
            .map(|q| (q - p).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(nearest < 0.02, "vertex {p} off by {nearest}");
    }
}

#[test]
fn render_recover_round_trip_cuboid_and_manhattan() {
    for (kind, seed) in [
        (RoomKind::Cuboid, 5),
        (
            RoomKind::Manhattan {
                min_corners: 4,
                max_corners: 10,
            },
            6,
        ),
    ] {
        let spec = CorpusSpec {
            kind,
            seed,
            ..CorpusSpec::default()
        };
        for i in 0..12 {
            assert_round_trip(&sample_layout(&spec, i).unwrap());
        }
    }
}
