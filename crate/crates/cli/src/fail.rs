use std::fmt;

/// Command failure with its exit status.
#[derive(Debug)]
pub enum Fail {
    /// Malformed JSON input, exit 1.
    Malformed(String),
    /// Hypothesis or precondition failure, exit 2.
    Precondition(String),
    /// Budget exhaustion, exit 3.
    Budget(String),
    /// I/O failure on the report, exit 2.
    Io(String),
}

impl Fail {
    pub fn code(&self) -> u8 {
        match self {
            Fail::Malformed(_) => 1,
            Fail::Precondition(_) | Fail::Io(_) => 2,
            Fail::Budget(_) => 3,
        }
    }
}

impl fmt::Display for Fail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fail::Malformed(s) | Fail::Precondition(s) | Fail::Budget(s) | Fail::Io(s) => f.write_str(s),
        }
    }
}
