use std::f64::consts::PI;
use std::io::Cursor;

use critfield::noise::{read_raster, write_raster};
use critfield::{covariance_estimate, mollify, sample_white_noise, TorusGrid};

#[test]
fn mollified_variance_matches_the_grid_value() {
    let grid = TorusGrid::new(4.0, 64).unwrap();
    let eps: f64 = 0.2;
    let est = covariance_estimate(&grid, eps, 11, 200, 2).unwrap();
    let exact = grid.point_variance(eps * eps).unwrap();
    assert!((est.variance - exact).abs() < 4.0 * est.variance_se, "{est:?} vs {exact}");
    // the grid value approaches the whole-plane one when h << ε
    assert!((exact - 1.0 / (4.0 * PI * eps * eps)).abs() / exact < 0.05);
}

#[test]
fn covariance_decays_with_lag() {
    let grid = TorusGrid::new(4.0, 64).unwrap();
    let near = covariance_estimate(&grid, 0.2, 2, 40, 1).unwrap();
    let far = covariance_estimate(&grid, 0.2, 2, 40, 16).unwrap();
    assert!(near.covariance > far.covariance + 5.0 * far.covariance_se);
    assert!(far.covariance.abs() < 5.0 * far.covariance_se);
}

#[test]
fn covariance_estimate_rejects_bad_input() {
    let grid = TorusGrid::new(4.0, 16).unwrap();
    assert!(covariance_estimate(&grid, 0.2, 0, 1, 1).is_err());
    assert!(covariance_estimate(&grid, 0.2, 0, 4, 16).is_err());
}

#[test]
fn mollified_field_is_stationary_across_positions() {
    let grid = TorusGrid::new(4.0, 32).unwrap();
    let replicas = 300;
    let mut first = 0.0;
    let mut middle = 0.0;
    for r in 0..replicas {
        let f = mollify(&sample_white_noise(&grid, 4, r), 0.3).unwrap();
        first += f.values()[0].powi(2);
        middle += f.values()[grid.index(16, 16)].powi(2);
    }
    let (a, b) = (first / replicas as f64, middle / replicas as f64);
    // ≈ 8% standard error per estimate at 300 replicas
    assert!((a - b).abs() / a < 0.35, "{a} vs {b}");
}

#[test]
fn raster_file_roundtrip() {
    let grid = TorusGrid::new(2.5, 16).unwrap();
    let field = mollify(&sample_white_noise(&grid, 1, 3), 0.2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("eta.raster");
    write_raster(std::fs::File::create(&path).unwrap(), &field, 0.75).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(bytes.len(), 32 + 8 * 16 * 16);
    let (back, t) = read_raster(Cursor::new(bytes)).unwrap();
    assert_eq!(t, 0.75);
    assert_eq!(back, field);
}
