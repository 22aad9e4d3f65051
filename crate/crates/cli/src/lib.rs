//! Library half of the command-line front end: the bundled example cases
//! with their scripted flows and assertion harness, and the CSV and JSON
//! writers the `sideflow` binary shares with the test suites.

pub mod cases;
pub mod output;
