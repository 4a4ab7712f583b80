use elweno_demo::model::Model;

#[test]
fn steps_conserve_mass() {
    let mut m = Model::new("sdf", 32, 4.0).unwrap();
    let g = m.grid().clone();
    let m0 = m.field().mass(&g);
    let scale = m.field().abs_mass(&g);
    let mut last = 0.0;
    for _ in 0..5 {
        let t = m.step().unwrap();
        assert!(t > last);
        last = t;
    }
    assert_eq!(m.steps(), 5);
    assert!((m.field().mass(&g) - m0).abs() <= 1e-12 * scale);
}

#[test]
fn clip_pieces_cover_the_upstream_cell() {
    let m = Model::new("kh", 24, 1.0).unwrap();
    let mesh = m.upstream(3.0).unwrap();
    let flat = m.clip_pieces(3.0, 7, 11).unwrap();
    let mut k = 0;
    let mut area = 0.0;
    while k < flat.len() {
        let nv = flat[k + 2] as usize;
        let v: Vec<[f64; 2]> = (0..nv).map(|q| [flat[k + 3 + 2 * q], flat[k + 4 + 2 * q]]).collect();
        area += elweno::geometry::polygon_area(&v);
        k += 3 + 2 * nv;
    }
    let quad = mesh.quad(7, 11);
    assert!((area - quad.area()).abs() <= 1e-13 * quad.area());
    assert!(m.clip_pieces(3.0, 24, 0).is_err());
}

#[test]
fn bad_parameters_are_rejected() {
    assert!(Model::new("sdf", 2, 1.0).is_err());
    assert!(Model::new("sdf", 16, 0.0).is_err());
    assert!(Model::new("burgers", 16, 1.0).is_err());
}
