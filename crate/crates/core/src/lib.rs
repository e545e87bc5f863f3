pub mod isa;
pub mod sim;
pub mod rvv;
pub mod compiler;
pub mod bench;
