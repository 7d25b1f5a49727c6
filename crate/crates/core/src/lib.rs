pub mod cg;
pub mod netsim;
pub mod ops;
pub mod package;
pub(crate) mod seed;
pub mod semdesc;
pub(crate) mod wire;
