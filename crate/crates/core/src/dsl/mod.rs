//! The `.flow` text format and DOT export.

pub mod dot;
pub mod lexer;
pub mod parser;
pub mod serialize;

pub use dot::{export_dot, DotOptions};
pub use lexer::SourceSpan;
pub use parser::{parse, parse_document, Document, ParseError};
pub use serialize::{serialize, SerializeError};
