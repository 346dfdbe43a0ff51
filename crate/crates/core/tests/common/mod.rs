#![allow(dead_code, clippy::needless_range_loop)]

pub mod gradcases;
pub mod gradcheck;
pub mod spell_oracle;
