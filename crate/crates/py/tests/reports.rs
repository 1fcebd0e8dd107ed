use algebroid_hj::scenario::catalog_entry;
use algebroid_hj_py::{hj_report, td_report};

#[test]
fn hj_reports_match_expectations() {
    let s = catalog_entry("canonical_r1").unwrap();
    assert!(
        hj_report(&s, "type1", "hj_solution", None, 30, None, false)
            .unwrap()
            .pass
    );
    assert!(
        !hj_report(&s, "type1", "non_solution", None, 30, None, false)
            .unwrap()
            .pass
    );
    assert!(
        hj_report(&s, "type2", "hj_solution", Some("translate_cubic"), 30, None, false)
            .unwrap()
            .pass
    );
    assert!(hj_report(&s, "type2", "hj_solution", None, 30, None, false).is_err());
    assert!(hj_report(&s, "seven", "hj_solution", None, 30, None, false).is_err());
}

#[test]
fn td_reports_match_expectations() {
    let s = catalog_entry("td_free_particle").unwrap();
    assert!(
        td_report(&s, "lifted", "spreading", None, 20, None, false)
            .unwrap()
            .pass
    );
    assert!(
        !td_report(&s, "type1", "non_solution", None, 20, None, false)
            .unwrap()
            .pass
    );
    assert!(hj_report(&s, "type1", "uniform", None, 20, None, false).is_err());
}
