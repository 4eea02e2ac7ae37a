//! Virtual representations: behavior contracts, service bindings, request
//! resolution and dispatch.

mod contract;
mod resolve;

pub use contract::{
    placeholders, BDefContract, BMechBinding, MethodSignature, ParamSpec, ServiceBinding, METHODMAP, SERVICEBINDINGS,
};
pub use resolve::{DatastreamProfile, DispatchPlan, MethodInfo, ObjectProfile};
