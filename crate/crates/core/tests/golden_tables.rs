mod common {
    pub mod golden;
}

#[test]
fn requirement_levels_match_reference_table() {
    assert_eq!(common::golden::check_requirement_levels().unwrap(), 19);
}

#[test]
fn rate_table_matches_reference() {
    assert_eq!(common::golden::check_reference_rates().unwrap(), 5);
}
