//! Finding, counting and certifying monochromatic patterns such as
//! `{x, y, xy, x+y}` in finite colorings of integer intervals, prime fields
//! and bounded rational grids.

pub mod cli;
pub mod error;
pub mod ground;
pub mod instance;
pub mod rational;
pub mod search;
pub mod structure;
pub mod template;
pub mod walker;

pub use error::{OutOfGround, ParseError};
pub use ground::{GroundIndex, GroundSet};
pub use instance::{eval_term, instantiate, Instance, Rejection};
pub use rational::Rational;
pub use template::{
    builtin_template, general_template, Builtin, PatternTemplate, TemplateError, TermExpr,
};
