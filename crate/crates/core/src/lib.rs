//! Complex-object repository core: object model, FOXML, storage, the
//! relationship index, disseminations and the OAI provider.

pub mod error;
pub mod dissemination;
pub mod fixtures;
pub mod foxml;
pub mod index;
pub mod model;
pub mod oai;
pub mod rdf;
pub mod storage;
pub mod xml;

pub use error::{Error, Result};
