pub mod experiment;
pub mod formats;
pub mod verify;
