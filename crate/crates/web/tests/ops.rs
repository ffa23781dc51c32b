use hypoflow_web::{diagonal_holonomy, f_curve, invariant_metric};

#[test]
fn f_curve_starts_at_one_and_reports_its_branch() {
    let v = f_curve(1.0, 1.0, 41).unwrap();
    assert_eq!(v["branch"], "Tan");
    let pts = v["points"].as_array().unwrap();
    assert_eq!(pts.len(), 41);
    // The Tan branch with lambda = mu = 1 is tan(pi/4 - y), so f = 1 at the midpoint y = 0 of its symmetric domain.
    let mid = &pts[20];
    assert!(mid[0].as_f64().unwrap().abs() < 1e-12);
    assert!((mid[1].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(f_curve(f64::NAN, 1.0, 10).is_err());
}

#[test]
fn invariant_metric_has_finite_domain_and_positive_rows() {
    let v = invariant_metric(-2.0, -4.0, 11).unwrap();
    let hi = v["domain"][1].as_f64().unwrap();
    assert!((hi - (2f64.powf(0.25) - 1.0) / 2.0).abs() < 1e-12);
    for row in v["rows"].as_array().unwrap() {
        let (a, n) = (
            row["alpha"].as_f64().unwrap(),
            row["lapse"].as_f64().unwrap(),
        );
        assert!(a > 0.0 && (a * n - 1.0).abs() < 1e-12);
    }
    assert!(invariant_metric(1.0, -1.0, 5).is_err());
}

#[test]
fn diagonal_holonomy_reports_su4() {
    let v = diagonal_holonomy([0.0; 3], [3.0, 2.0, 1.0], 0.16, 4).unwrap();
    assert_eq!(v["verdict"], "su4");
    assert_eq!(v["dimension"], 15);
}
