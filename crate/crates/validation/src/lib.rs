//! Independent reference computations and public-corpus locators used to
//! check stylesim against known values.

pub mod corpora;
pub mod oracle;

#[cfg(test)]
mod oracle_checks;
