//! Periodic packings of hard particles grown by swelling and random migration.
//!
//! The crate is `no_std` (with `alloc`) so the packing kernel can be embedded
//! anywhere; file formats, the command-line driver and timing live in the
//! companion `srm` crate.
//!
//! The main pieces:
//!
//! * [`geometry`]: the periodic box, wrapping and minimum-image displacements.
//! * [`cell_grid`]: the linked-cell neighbor structure used for every overlap query.
//! * [`rsa`]: random sequential adsorption for the dilute starting state.
//! * [`engine`]: the swell / migrate / shake loop, generic over [`shape::Shape`].
//! * [`platelet`]: spherodisk geometry and the platelet microstructure recipes.
//! * [`descriptors`]: nearest-neighbor distances, local volume fractions, local order.
//! * [`percolation`]: hard-core/soft-shell connectivity and the critical tunneling distance.
#![cfg_attr(not(feature = "std"), no_std)]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod cell_grid;
pub mod descriptors;
pub mod engine;
pub mod error;
pub mod geometry;
pub(crate) mod math;
pub mod percolation;
pub mod platelet;
pub mod rng;
pub mod rsa;
pub mod shape;

pub use cell_grid::CellGrid;
pub use engine::{srm_generate, Snapshot, SrmParams};
pub use error::Error;
pub use geometry::PeriodicBox;
pub use platelet::Spherodisk;
pub use shape::{Shape, Sphere};
