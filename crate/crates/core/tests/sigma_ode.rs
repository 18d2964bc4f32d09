use critfield::{
    allen_cahn_sigma_closed, mkv_field, mollify, sample_white_noise, solve_sigma_eps, solve_sigma_limit,
    QuadratureRule, Reaction, TorusGrid, VarianceMode,
};

fn rule() -> QuadratureRule {
    QuadratureRule::gauss_hermite(64).unwrap()
}

#[test]
fn rk4_error_shrinks_at_fourth_order() {
    // odd quintic term: no closed form, so compare against a fine reference
    let r = Reaction::odd_poly(&[0.0, 1.0, 0.5]).unwrap();
    let reference = solve_sigma_limit(&r, 2.0, 1e-4, &rule()).unwrap().at_q(2.0).unwrap();
    let coarse = solve_sigma_limit(&r, 2.0, 0.05, &rule()).unwrap().at_q(2.0).unwrap();
    let fine = solve_sigma_limit(&r, 2.0, 0.025, &rule()).unwrap().at_q(2.0).unwrap();
    let order = ((coarse - reference).abs() / (fine - reference).abs()).log2();
    // still slightly pre-asymptotic at these steps (≈4.5)
    assert!(order > 3.5 && order < 5.0, "observed order {order}");
}

#[test]
fn interpolation_between_nodes_is_accurate() {
    let r = Reaction::allen_cahn(1.0).unwrap();
    let path = solve_sigma_limit(&r, 3.0, 1e-2, &rule()).unwrap();
    for q in [0.0137, 0.5, 1.234, 2.9999] {
        assert!((path.at_q(q).unwrap() - allen_cahn_sigma_closed(1.0, q)).abs() < 1e-7);
    }
    assert!(path.at_q(3.5).is_err());
}

#[test]
fn massive_gap_shrinks_with_eps() {
    let r = Reaction::allen_cahn(1.0).unwrap();
    let mut last = f64::INFINITY;
    for eps in [1e-1, 1e-2, 1e-4] {
        let path = solve_sigma_eps(&r, eps, 1.0, 1.0, 1e-3, VarianceMode::Continuum, &rule()).unwrap();
        let limit = solve_sigma_limit(&r, path.q_max(), 1e-3, &rule()).unwrap();
        let gap = path.sup_gap(&limit, path.q_max()).unwrap();
        assert!(gap < last, "gap {gap} at eps {eps} did not drop below {last}");
        last = gap;
    }
}

#[test]
fn non_self_similar_reaction_has_no_limit() {
    let r = Reaction::allen_cahn(1.0).unwrap().time_dependent();
    assert!(solve_sigma_limit(&r, 1.0, 1e-3, &rule()).is_err());
}

#[test]
fn mkv_field_is_linear_in_the_noise() {
    let grid = TorusGrid::new(4.0, 32).unwrap();
    let r = Reaction::allen_cahn(1.0).unwrap();
    let path = solve_sigma_eps(&r, 0.2, 0.0, 0.5, 1e-3, VarianceMode::Grid(grid), &rule()).unwrap();
    let a = mollify(&sample_white_noise(&grid, 0, 0), 0.2).unwrap();
    let b = mollify(&sample_white_noise(&grid, 0, 1), 0.2).unwrap();
    let sum = a.combine(2.0, &b, -0.5).unwrap();
    let lhs = mkv_field(&path, 0.3, &sum, 0.0).unwrap();
    let rhs =
        mkv_field(&path, 0.3, &a, 0.0).unwrap().combine(2.0, &mkv_field(&path, 0.3, &b, 0.0).unwrap(), -0.5).unwrap();
    assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12 * lhs.max_abs());
    assert!(mkv_field(&path, 0.3, &a, 1.0).is_err());
    let other = TorusGrid::new(4.0, 16).unwrap();
    let c = mollify(&sample_white_noise(&other, 0, 0), 0.2).unwrap();
    assert!(mkv_field(&path, 0.3, &c, 0.0).is_err());
}
