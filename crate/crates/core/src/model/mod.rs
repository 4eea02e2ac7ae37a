//! Digital object model: identifiers, components, versions, audit records.

mod object;
mod pid;
mod time;
mod validate;

pub use object::*;
pub use pid::{is_component_id, ObjectUri, Pid, RepPath, URI_PREFIX};
pub use time::{Clock, SystemClock, Timestamp};
pub use validate::{validate_object, ValidationReport, Violation};
