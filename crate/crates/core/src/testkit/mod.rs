//! Test-only generators, fixtures and brute-force oracles. Enabled by the
//! `testkit` feature; nothing in the library depends on it.

pub mod fixtures;
pub mod gen;
pub mod oracles;
