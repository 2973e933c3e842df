//! Published rows of the phase table, used as comparison targets.

use crate::rms::StateIndex;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedRow {
    pub state: usize,
    pub omega_mhz: f64,
    pub gamma_over_r2: f64,
}

impl PublishedRow {
    pub fn index(&self) -> StateIndex {
        StateIndex::new(self.state).expect("published rows use valid indices")
    }
}

const fn row(state: usize, omega_mhz: f64, gamma_over_r2: f64) -> PublishedRow {
    PublishedRow {
        state,
        omega_mhz,
        gamma_over_r2,
    }
}

/// The ten published rows in table order.
pub const PUBLISHED_TABLE: [PublishedRow; 10] = [
    row(1, 240.4, 1.057),
    row(2, 89.6, 6.429),
    row(5, 240.4, 2.470),
    row(6, 240.4, 2.095),
    row(8, 334.02, 2.840),
    row(9, 240.4, 7.905),
    row(10, 89.6, 6.429),
    row(13, 240.4, 2.470),
    row(14, 240.4, 2.095),
    row(16, 334.02, 2.840),
];

/// Pairs of states that share a published phase.
pub const PUBLISHED_PAIRS: [(usize, usize); 4] = [(2, 10), (5, 13), (6, 14), (8, 16)];

/// Frequencies appearing in the table, in MHz.
pub const TABLE_FREQUENCIES_MHZ: [f64; 3] = [89.6, 240.4, 334.02];

pub fn published_row(state: usize) -> Option<&'static PublishedRow> {
    PUBLISHED_TABLE.iter().find(|r| r.state == state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_are_the_nonzero_states() {
        let listed: Vec<usize> = PUBLISHED_TABLE.iter().map(|r| r.state).collect();
        let nonzero: Vec<usize> = StateIndex::all()
            .filter(|j| j.record().is_nonzero())
            .map(|j| j.get())
            .collect();
        assert_eq!(listed, nonzero);
        assert!(published_row(3).is_none());
    }
}
