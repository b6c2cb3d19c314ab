#![allow(dead_code)]

pub mod simplex;
