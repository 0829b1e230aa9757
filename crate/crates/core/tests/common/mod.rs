#![allow(dead_code)]

use rayless::format::parse;
use rayless::oracle::{random_presentation, Limits};
use rayless::GraphTuple;

pub fn fixture(name: &str) -> GraphTuple {
    let path = format!("{}/fixtures/{name}.rpg", env!("CARGO_MANIFEST_DIR"));
    parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub const FIXTURES: [&str; 7] = ["star", "stars", "triangle", "k2inf", "k2inf-minus-e", "spiderT", "spiderTprime"];

pub fn random(seed: u64) -> GraphTuple {
    random_presentation(seed, Limits::default())
}
