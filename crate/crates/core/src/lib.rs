pub mod signal;
pub mod testlang;
pub mod stepmachine;
pub mod fitness;
pub mod sim;
pub mod search;
pub mod stl;
pub mod cli;
