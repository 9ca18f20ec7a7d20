pub mod export;
pub mod fields;
pub mod simulate;
pub mod verify;
