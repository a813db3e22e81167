//! Contract-driven repair of programs in a small imperative language.

pub mod corpus;
pub mod encode;
pub mod interp;
pub mod lang;
pub mod localize;
pub mod mutate;
pub mod prune;
pub mod repair;
pub mod scope;
pub mod verify;

pub use scope::Scope;
