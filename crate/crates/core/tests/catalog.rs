use std::collections::BTreeSet;

use socialdao_core::ledger::{catalog, catalog_lookup, Component};

#[test]
fn seventy_seven_kinds_split_across_four_components() {
    let kinds = catalog();
    assert_eq!(kinds.len(), 77);
    for (c, n) in [(Component::Preventer, 38), (Component::RolesManager, 8), (Component::AidProvider, 19), (Component::HelpActivator, 12)] {
        let ids: Vec<u32> = kinds.iter().filter(|k| k.component == c).map(|k| k.local_id).collect();
        assert_eq!(ids, (1..=n).collect::<Vec<_>>(), "{c:?}");
    }
    let unique: BTreeSet<String> = kinds.iter().map(|k| k.kind_ref().to_string()).collect();
    assert_eq!(unique.len(), 77);
    assert!(kinds.iter().all(|k| !k.description.is_empty() && !k.stakeholders.is_empty() && !k.info_exchanged.is_empty()));
}

#[test]
fn spot_rows_match_the_source_tables() {
    let row = |c, id| catalog_lookup(c, id).unwrap();
    assert_eq!(row(Component::Preventer, 1).description, "Transfer of educational content");
    assert_eq!(row(Component::Preventer, 1).info_exchanged, "Educational content, progress data");
    assert_eq!(row(Component::RolesManager, 4).description, "Security Report");
    assert_eq!(row(Component::RolesManager, 4).stakeholders, ["Whitehat Hacker"]);
    assert_eq!(row(Component::RolesManager, 4).info_exchanged, "Security vulnerabilities, threats");
    assert_eq!(row(Component::AidProvider, 19).description, "Victim chat support");
    assert_eq!(row(Component::HelpActivator, 1).description, "Mental health self-assessment");
    assert_eq!(row(Component::HelpActivator, 1).info_exchanged, "Mental health assessment results, guidance");
}

#[test]
fn lookups_outside_the_table_fail() {
    for (c, id) in [(Component::Preventer, 0), (Component::Preventer, 39), (Component::RolesManager, 9), (Component::HelpActivator, 13)] {
        assert_eq!(catalog_lookup(c, id).unwrap_err().code(), "UnknownKind");
    }
}
