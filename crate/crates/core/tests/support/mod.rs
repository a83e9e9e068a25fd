#![allow(dead_code)]

pub mod checks;
pub mod kkt;
pub mod partitions;
pub mod procrustes_grid;
pub mod quad;
pub mod random;
