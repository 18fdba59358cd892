//! Certificate-size laboratory.
//!
//! Boolean functions are stored as dense truth tables. Input coordinate
//! `x_i` (one-based) is bit `i - 1` of the integer encoding of a point, so
//! `x_1` is the least significant bit. All modules share this convention;
//! text formats and the command line use one-based names `x1..xn`.

pub mod ahat;
pub mod boolfn;
pub mod certify;
pub mod circuit;
pub mod deceiver;
pub mod enumerate;
pub mod gen;
pub mod survivors;
