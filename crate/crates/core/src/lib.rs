//! Parsing, simulation, template generation and evaluation of X-language
//! simulation models.

pub mod config;
pub mod diag;
pub mod doc;
pub mod eval;
pub mod fixtures;
pub mod gen;
mod http;
pub mod kernel;
pub mod model;
pub mod names;
pub mod pipeline;
pub mod template;

pub use diag::{Diagnostic, Severity, Span};
pub use model::{
    link_model_set, parse_source, parse_unit, parse_units, print_unit, LinkError, LinkedModel, ModelUnit,
    ParseError, UnitKind,
};
