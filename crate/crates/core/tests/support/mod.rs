//! Brute-force reference implementations shared by the integration tests
//! and the acceptance suite.
#![allow(dead_code)]

pub mod disks;
pub mod tiling;
pub mod voronoi;
