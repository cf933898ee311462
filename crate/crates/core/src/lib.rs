pub mod cli;
pub mod coverage;
pub mod fincat;
pub mod grothendieck;
pub mod logic;
pub mod overtopos;
pub mod sheaves;
