//! The static catalog of on-chain transaction kinds.
//!
//! Four component tables: preventer (1-38), roles manager (1-8), aid
//! provider (1-19) and help-seeking activator (1-12). The data ships as
//! `data/catalog.json` and is parsed once on first use.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::LedgerError;

/// The first-level component that owns a transaction kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Component {
    Preventer,
    RolesManager,
    AidProvider,
    HelpActivator,
}

impl Component {
    pub const ALL: [Component; 4] = [
        Component::Preventer,
        Component::RolesManager,
        Component::AidProvider,
        Component::HelpActivator,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Component::Preventer => "Preventer",
            Component::RolesManager => "RolesManager",
            Component::AidProvider => "AidProvider",
            Component::HelpActivator => "HelpActivator",
        }
    }

    /// Number of catalogued kinds for this component.
    pub fn kind_count(self) -> u32 {
        match self {
            Component::Preventer => 38,
            Component::RolesManager => 8,
            Component::AidProvider => 19,
            Component::HelpActivator => 12,
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Component {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Component::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown component {s:?}"))
    }
}

/// `(component, local_id)` reference to a catalog entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct KindRef {
    pub component: Component,
    pub local_id: u32,
}

impl KindRef {
    pub const fn new(component: Component, local_id: u32) -> Self {
        KindRef { component, local_id }
    }
}

impl fmt::Display for KindRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.component, self.local_id)
    }
}

/// Parses `RolesManager-1` or `RolesManager:1`.
impl FromStr for KindRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (c, id) = s
            .rsplit_once(['-', ':'])
            .ok_or_else(|| format!("kind must look like Component-N, got {s:?}"))?;
        let local_id = id.parse().map_err(|_| format!("bad local id in {s:?}"))?;
        Ok(KindRef::new(c.parse()?, local_id))
    }
}

/// One catalogued transaction kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionKind {
    pub component: Component,
    pub local_id: u32,
    pub description: String,
    pub stakeholders: Vec<String>,
    pub info_exchanged: String,
}

impl TransactionKind {
    pub fn kind_ref(&self) -> KindRef {
        KindRef::new(self.component, self.local_id)
    }
}

const CATALOG_JSON: &str = include_str!("../../data/catalog.json");

/// The full catalog, in table order.
pub fn catalog() -> &'static [TransactionKind] {
    static CATALOG: OnceLock<Vec<TransactionKind>> = OnceLock::new();
    CATALOG.get_or_init(|| {
        let kinds: Vec<TransactionKind> =
            serde_json::from_str(CATALOG_JSON).expect("bundled catalog.json is valid");
        kinds
    })
}

/// Look up a catalog entry.
pub fn catalog_lookup(component: Component, local_id: u32) -> Result<&'static TransactionKind, LedgerError> {
    catalog()
        .iter()
        .find(|k| k.component == component && k.local_id == local_id)
        .ok_or(LedgerError::UnknownKind(KindRef::new(component, local_id)))
}

pub fn lookup(kind: KindRef) -> Result<&'static TransactionKind, LedgerError> {
    catalog_lookup(kind.component, kind.local_id)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;

    #[test]
    fn catalog_has_77_unique_dense_kinds() {
        let kinds = catalog();
        assert_eq!(kinds.len(), 77);
        let refs: BTreeSet<KindRef> = kinds.iter().map(|k| k.kind_ref()).collect();
        assert_eq!(refs.len(), 77);
        for c in Component::ALL {
            let ids: Vec<u32> = kinds.iter().filter(|k| k.component == c).map(|k| k.local_id).collect();
            assert_eq!(ids, (1..=c.kind_count()).collect::<Vec<_>>(), "{c}");
        }
    }

    #[test]
    fn spot_rows() {
        let p1 = catalog_lookup(Component::Preventer, 1).unwrap();
        assert_eq!(p1.description, "Transfer of educational content");
        assert_eq!(p1.info_exchanged, "Educational content, progress data");
        let ap19 = catalog_lookup(Component::AidProvider, 19).unwrap();
        assert_eq!(ap19.description, "Victim chat support");
        assert_eq!(ap19.info_exchanged, "Sextortion details, assistance");
        let rm1 = catalog_lookup(Component::RolesManager, 1).unwrap();
        assert_eq!(rm1.description, "Role Creation");
        assert_eq!(rm1.info_exchanged, "Role details, responsibilities, actor assignment");
        assert_eq!(catalog_lookup(Component::RolesManager, 4).unwrap().description, "Security Report");
        assert_eq!(
            catalog_lookup(Component::HelpActivator, 1).unwrap().description,
            "Mental health self-assessment"
        );
    }

    #[test]
    fn duplicated_descriptions_stay_distinct_kinds() {
        let a = catalog_lookup(Component::Preventer, 25).unwrap();
        let b = catalog_lookup(Component::Preventer, 27).unwrap();
        assert_eq!(a.description, "Resource sharing and integration");
        assert_eq!(a.description, b.description);
        assert_ne!(a.kind_ref(), b.kind_ref());
    }

    #[test]
    fn one_past_the_end_is_unknown() {
        assert_eq!(
            catalog_lookup(Component::HelpActivator, 13),
            Err(LedgerError::UnknownKind(KindRef::new(Component::HelpActivator, 13)))
        );
        assert!(catalog_lookup(Component::Preventer, 0).is_err());
    }

    #[test]
    fn kind_ref_parses_both_separators() {
        assert_eq!("RolesManager-2".parse::<KindRef>().unwrap(), KindRef::new(Component::RolesManager, 2));
        assert_eq!("aidprovider:19".parse::<KindRef>().unwrap(), KindRef::new(Component::AidProvider, 19));
        assert!("Nope-1".parse::<KindRef>().is_err());
    }
}
