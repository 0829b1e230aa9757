//! Finitely presented rayless graphs: presentations, ranks and kernels,
//! canonical codes, isomorphism and embedding witnesses, twin families.

pub mod canon;
pub mod check;
pub mod cli;
pub mod decompose;
pub mod error;
pub mod finite;
pub mod format;
pub mod isoembed;
pub mod normal;
pub mod oracle;
pub mod pack;
pub mod presentation;
pub mod rank;
pub mod twingen;
pub mod witness;

pub use error::{Error, Result};
pub use presentation::{ComponentClass, Edge, GraphTuple, Location, Multiplicity, Presentation};
