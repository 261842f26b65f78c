use alloc::string::String;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    UndefinedMcs {
        bandwidth_mhz: u16,
        index: i8,
        n_ss: u8,
    },
    OversizeMsdu {
        octets: usize,
        max: usize,
    },
    InvalidPartition {
        blocks: usize,
        channels: usize,
    },
    NonFinite,
    RankDeficient,
    NoNullSpace {
        user: usize,
    },
    DegenerateProduct {
        user: usize,
    },
    StreamOverflow {
        streams: usize,
    },
    Config {
        path: String,
        msg: String,
    },
}

impl Error {
    pub fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            msg: msg.into(),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UndefinedMcs {
                bandwidth_mhz,
                index,
                n_ss,
            } => write!(
                f,
                "undefined MCS: {bandwidth_mhz} MHz, index {index}, {n_ss} spatial streams"
            ),
            Error::OversizeMsdu { octets, max } => {
                write!(f, "MSDU of {octets} octets exceeds maximum {max}")
            }
            Error::InvalidPartition { blocks, channels } => {
                write!(f, "{blocks} blocks cannot tile {channels} channels")
            }
            Error::NonFinite => f.write_str("matrix has non-finite entries"),
            Error::RankDeficient => f.write_str("channel matrix is rank deficient"),
            Error::NoNullSpace { user } => {
                write!(f, "no null space left for user {user}")
            }
            Error::DegenerateProduct { user } => {
                write!(f, "projected channel of user {user} has rank 0")
            }
            Error::StreamOverflow { streams } => {
                write!(f, "{streams} spatial streams exceed the maximum of 8")
            }
            Error::Config { path, msg } => write!(f, "{path}: {msg}"),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
