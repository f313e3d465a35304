pub mod algebra;
pub mod error;
pub mod field;
pub mod geometry;
pub mod gluing;
pub mod dynamics;
pub mod examples;
pub mod problem;
pub mod serial;
