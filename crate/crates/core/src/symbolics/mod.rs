//! Expression language and truncated Taylor (jet) arithmetic.

mod eval;
pub mod expr;
pub mod jet;
mod parser;

pub use expr::{coordinate_variables, curve_variables, BinOp, Expr, Func, Node};
pub use jet::{Jet, JetVector};
pub use parser::parse_expr;
