pub mod evaluate;
pub mod extract;
pub mod grid;
pub mod phantom;
pub mod remove;
pub mod synthesize;
