use num_complex::Complex64 as C64;
use std::sync::Arc;
use taylor_core::analytic_reference::{example_state, shell_inner_level};
use taylor_core::field_eval::verify_field;
use taylor_core::geometry::{CurveGrid, GeneratingCurve};

#[test]
fn example_state_solves_grad_shafranov() {
    let st = example_state().unwrap();
    assert!((st.lambda - 2.281569789676).abs() < 1e-9);
    assert!((st.c[5] - 1.2654062925).abs() < 1e-8);
    let l2 = st.lambda * st.lambda;
    for (r, z) in [(0.6, 0.1), (1.2, 0.25), (1.5, -1.0), (0.9, 0.8)] {
        let p = st.psi(r, z).unwrap();
        let gs = p.rr - p.r / r + p.zz + l2 * p.psi;
        assert!(gs.abs() < 1e-10 * (1.0 + p.rr.abs() + p.zz.abs()), "({r}, {z}): {gs:.2e}");
    }
}

#[test]
fn example_field_is_beltrami() {
    let st = example_state().unwrap();
    let pts = [(1.2, 0.25), (0.5, -1.5), (0.8, 0.4), (1.4, -0.6)];
    let f = |r: f64, z: f64| st.field(r, z).map(|b| b.map(|c| C64::new(c, 0.0)));
    let rep = verify_field(f, st.lambda, 0, &pts, 1e-3).unwrap();
    assert!(rep.curl_residual < 1e-9 && rep.div_residual < 1e-9, "{rep:?}");
    let b = st.field(1.2, 0.25).unwrap();
    assert!((b[0] - 0.4420179913).abs() < 1e-9 && (b[1] - 3.0985042428).abs() < 1e-9);
}

#[test]
fn traced_boundaries_are_level_sets() {
    let st = example_state().unwrap();
    for level in [0.0, shell_inner_level()] {
        let c = st.trace_level_set(level, 1024).unwrap();
        for k in 0..50 {
            let p = c.eval(2.0 * std::f64::consts::PI * k as f64 / 50.0);
            assert!((st.psi(p.r, p.z).unwrap().psi - level).abs() < 1e-11);
        }
    }
    let outer = CurveGrid::new(Arc::new(st.trace_level_set(0.0, 1024).unwrap()), 200).unwrap();
    let inner = CurveGrid::new(Arc::new(st.trace_level_set(shell_inner_level(), 1024).unwrap()), 200).unwrap();
    assert!(inner.r.iter().zip(&inner.z).all(|(&r, &z)| outer.contains(r, z)));
    assert!(st.toroidal_flux(&outer).unwrap().abs() > st.toroidal_flux(&inner).unwrap().abs());
}
