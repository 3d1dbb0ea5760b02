//! Text and JSON interchange formats.

mod expr;
pub mod json;
pub mod text;

pub use expr::parse_expr;
pub use json::{lift_from_json, lift_to_json, wdg_report_to_value};
pub use text::{
    parse_automorphism, parse_stabilizer, parse_system, render_automorphism, render_system, AutomorphismFile,
    StabilizerFile, SystemFile,
};
