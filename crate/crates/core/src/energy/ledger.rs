use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Energy, EnergyConstants};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Boot,
    Switch,
    Encrypt,
    Pairing,
    Sha2,
    Tx,
    Rx,
}

impl Category {
    pub const ALL: [Category; 7] = [
        Category::Boot,
        Category::Switch,
        Category::Encrypt,
        Category::Pairing,
        Category::Sha2,
        Category::Tx,
        Category::Rx,
    ];

    /// Terms of the one-time authentication total. Pairings can be
    /// precomputed offline and hashing is folded into the timed rows, so
    /// neither is counted.
    pub fn in_ta_total(self) -> bool {
        matches!(
            self,
            Category::Boot | Category::Switch | Category::Encrypt | Category::Tx | Category::Rx
        )
    }

    pub fn unit(self) -> &'static str {
        match self {
            Category::Boot => "boots",
            Category::Switch => "switches",
            Category::Encrypt => "bits",
            Category::Pairing => "pairings",
            Category::Sha2 => "hashes",
            Category::Tx | Category::Rx => "bytes",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Boot => "boot",
            Category::Switch => "switch",
            Category::Encrypt => "encrypt",
            Category::Pairing => "pairing",
            Category::Sha2 => "sha2",
            Category::Tx => "tx",
            Category::Rx => "rx",
        })
    }
}

/// Protocol activity an energy event belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Process {
    Boot,
    TrustedAuth,
    KeyExchange,
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Process::Boot => "boot",
            Process::TrustedAuth => "trusted_auth",
            Process::KeyExchange => "key_exchange",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyEvent {
    pub t: u64,
    pub category: Category,
    pub process: Process,
    pub units: u64,
    pub energy: Energy,
}

/// Per-node record of billed energy.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EnergyLedger {
    events: Vec<EnergyEvent>,
    totals: BTreeMap<Category, Energy>,
    units: BTreeMap<Category, u64>,
    first_trusted: Option<usize>,
}

impl EnergyLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Bills `units` of `category` at the constant unit price.
    pub fn bill(
        &mut self,
        constants: &EnergyConstants,
        t: u64,
        category: Category,
        process: Process,
        units: u64,
    ) -> Option<&EnergyEvent> {
        if units == 0 {
            return None;
        }
        let energy = constants.unit_energy(category).times(units);
        self.record(EnergyEvent {
            t,
            category,
            process,
            units,
            energy,
        });
        self.events.last()
    }

    pub fn record(&mut self, event: EnergyEvent) {
        *self.totals.entry(event.category).or_default() += event.energy;
        *self.units.entry(event.category).or_default() += event.units;
        self.events.push(event);
    }

    /// Marks the point at which the node first became trusted. Later calls
    /// are ignored.
    pub fn mark_trusted(&mut self) {
        if self.first_trusted.is_none() {
            self.first_trusted = Some(self.events.len());
        }
    }

    pub fn is_trusted_marked(&self) -> bool {
        self.first_trusted.is_some()
    }

    pub fn events(&self) -> &[EnergyEvent] {
        &self.events
    }

    pub fn category_total(&self, c: Category) -> Energy {
        self.totals.get(&c).copied().unwrap_or_default()
    }

    pub fn category_units(&self, c: Category) -> u64 {
        self.units.get(&c).copied().unwrap_or_default()
    }

    pub fn total(&self) -> Energy {
        self.totals.values().copied().sum()
    }

    pub fn process_total(&self, p: Process) -> Energy {
        self.events.iter().filter(|e| e.process == p).map(|e| e.energy).sum()
    }

    fn before_trusted(&self) -> &[EnergyEvent] {
        match self.first_trusted {
            Some(n) => &self.events[..n],
            None => &[],
        }
    }

    /// Energy spent from power-on to the first trusted state, restricted to
    /// boot, switch, encryption and radio terms. Zero if never trusted.
    pub fn one_time_ta_total(&self) -> Energy {
        self.before_trusted()
            .iter()
            .filter(|e| e.category.in_ta_total() && matches!(e.process, Process::Boot | Process::TrustedAuth))
            .map(|e| e.energy)
            .sum()
    }

    /// Units of `c` billed to `p` before the node first became trusted.
    pub fn units_before_trusted(&self, c: Category, p: Process) -> u64 {
        self.before_trusted()
            .iter()
            .filter(|e| e.category == c && e.process == p)
            .map(|e| e.units)
            .sum()
    }

    pub fn process_units(&self, c: Category, p: Process) -> u64 {
        self.events
            .iter()
            .filter(|e| e.category == c && e.process == p)
            .map(|e| e.units)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conservation_and_ta_window() {
        let c = EnergyConstants::default();
        let mut l = EnergyLedger::new();
        l.bill(&c, 0, Category::Boot, Process::Boot, 1);
        l.bill(&c, 1, Category::Encrypt, Process::TrustedAuth, 160);
        l.bill(&c, 1, Category::Pairing, Process::TrustedAuth, 2);
        l.bill(&c, 2, Category::Tx, Process::TrustedAuth, 319);
        l.bill(&c, 3, Category::Rx, Process::TrustedAuth, 480);
        l.bill(&c, 3, Category::Switch, Process::TrustedAuth, 1);
        assert!(l.bill(&c, 3, Category::Sha2, Process::TrustedAuth, 0).is_none());
        l.mark_trusted();
        l.bill(&c, 9, Category::Tx, Process::KeyExchange, 93);
        l.mark_trusted();

        let by_event: Energy = l.events().iter().map(|e| e.energy).sum();
        let by_cat: Energy = Category::ALL.iter().map(|c| l.category_total(*c)).sum();
        assert_eq!(by_event, l.total());
        assert_eq!(by_cat, l.total());
        let ta = l.one_time_ta_total();
        assert_eq!(ta, Energy::from_joules(crate::energy::e_total(&c, 1, 1, 160, 319, 480)));
        assert_eq!(l.units_before_trusted(Category::Tx, Process::TrustedAuth), 319);
        assert_eq!(l.process_units(Category::Tx, Process::KeyExchange), 93);
    }

    #[test]
    fn never_trusted_has_no_ta_total() {
        let c = EnergyConstants::default();
        let mut l = EnergyLedger::new();
        l.bill(&c, 0, Category::Boot, Process::Boot, 1);
        assert_eq!(l.one_time_ta_total(), Energy::ZERO);
    }
}
