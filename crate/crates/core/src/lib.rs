#![no_std]

extern crate alloc;

pub mod curves;
pub mod gauss;
pub mod linalg;
pub mod math;
pub mod mesh;
pub mod operators;
pub mod poly;
pub mod quadrature;
pub mod specfun;
pub mod spectra;
pub mod srd;
pub mod timeint;
pub mod wave;
