//! Soft-error analysis for self-checking sequential circuits.
//!
//! A transient fault — a particle strike flipping one latch for one clock
//! cycle — may be masked, may corrupt a data output, or may only trip the
//! circuit's alarm.  This crate classifies each latch of an and-inverter
//! graph circuit accordingly:
//!
//! * **vulnerable** — some single flip corrupts a data output before the
//!   alarm reports it ([`analysis::find_vulnerable_stla`]);
//! * **spurious alarm** — some flip raises the alarm even though the
//!   outputs never deviate and the state heals
//!   ([`analysis::find_spurious`]);
//! * **protected** — within a bounded window, no flip can cause silent
//!   damage from any plausibly reachable state
//!   ([`analysis::find_protected`]).
//!
//! The analyses reduce to satisfiability queries over a two-copy unrolling
//! of the circuit's transition relation ([`cnf`]) solved by the embedded
//! CDCL solver ([`sat`]).  A cycle-accurate interpreter and exhaustive
//! enumeration oracles ([`sim`], [`oracle`]) provide an independent ground
//! truth, and [`corpus`] generates benchmark circuits.

pub mod aiger;
pub mod analysis;
pub mod cnf;
pub mod corpus;
pub mod oracle;
pub mod sat;
pub mod sim;
pub mod testcase;
