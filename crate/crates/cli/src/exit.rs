use std::fmt;

pub const OK: u8 = 0;
pub const USAGE: u8 = 2;
pub const DATA: u8 = 3;
pub const TRAINING: u8 = 4;
pub const EVALUATION: u8 = 5;

/// Error message plus the exit code of the stage that failed.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(USAGE, message)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub trait Stage<T> {
    fn at(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: fmt::Display> Stage<T> for Result<T, E> {
    fn at(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure::new(code, e.to_string()))
    }
}
