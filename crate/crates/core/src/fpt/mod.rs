//! Dynamic program for EFX orientations over tree layouts of bounded
//! edge-cut width.

pub mod layout;
pub mod records;

pub use layout::{build_layout, parse_layout, search_layout, TreeLayout};
pub use records::{all_record_sets, combine_records, decide_efx, leaf_records, FptOutcome, Record, RecordSet};

#[cfg(test)]
mod tests;
