//! Bundled example files.

use crate::error::Result;
use crate::formats::text::{parse_automorphism, parse_system, AutomorphismFile, SystemFile};

pub const EXAMPLE2: &str = include_str!("../fixtures/example2.sys");
pub const COUNTEREXAMPLE: &str = include_str!("../fixtures/counterexample.sys");
pub const COUNTEREXAMPLE_MAP: &str = include_str!("../fixtures/counterexample.map");
pub const NILPOTENT: &str = include_str!("../fixtures/nilpotent.sys");
pub const STABILIZED3: &str = include_str!("../fixtures/stabilized3.sys");
pub const SINH6: &str = include_str!("../fixtures/sinh6.sys");
pub const INTRO: &str = include_str!("../fixtures/intro.sys");
pub const INTRO_LIFT: &str = include_str!("../fixtures/intro-lift.json");

/// `(name, file name, contents)` for every bundled file.
pub const ALL: &[(&str, &str, &str)] = &[
    ("example2", "example2.sys", EXAMPLE2),
    ("counterexample", "counterexample.sys", COUNTEREXAMPLE),
    ("counterexample-map", "counterexample.map", COUNTEREXAMPLE_MAP),
    ("nilpotent", "nilpotent.sys", NILPOTENT),
    ("stabilized3", "stabilized3.sys", STABILIZED3),
    ("sinh6", "sinh6.sys", SINH6),
    ("intro", "intro.sys", INTRO),
    ("intro-lift", "intro-lift.json", INTRO_LIFT),
];

pub fn lookup(name: &str) -> Option<(&'static str, &'static str)> {
    ALL.iter()
        .find(|(n, _, _)| *n == name)
        .map(|(_, file, text)| (*file, *text))
}

pub fn example2() -> SystemFile {
    parse_system(EXAMPLE2).expect("bundled file parses")
}

pub fn counterexample() -> SystemFile {
    parse_system(COUNTEREXAMPLE).expect("bundled file parses")
}

pub fn counterexample_map() -> AutomorphismFile {
    parse_automorphism(COUNTEREXAMPLE_MAP).expect("bundled file parses")
}

pub fn nilpotent() -> SystemFile {
    parse_system(NILPOTENT).expect("bundled file parses")
}

pub fn stabilized3() -> SystemFile {
    parse_system(STABILIZED3).expect("bundled file parses")
}

pub fn sinh6() -> SystemFile {
    parse_system(SINH6).expect("bundled file parses")
}

pub fn intro() -> SystemFile {
    parse_system(INTRO).expect("bundled file parses")
}

pub fn parse_all() -> Result<()> {
    for (_, file, text) in ALL {
        if file.ends_with(".sys") {
            parse_system(text)?;
        } else if file.ends_with(".map") {
            parse_automorphism(text)?;
        } else {
            crate::formats::lift_from_json(text)?;
        }
    }
    Ok(())
}
