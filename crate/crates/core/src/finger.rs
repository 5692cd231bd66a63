use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Fingertip carrying a tactile sensor. The order doubles as the vest column
/// index (thumb is the leftmost column).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FingerId {
    Thumb,
    Index,
    Middle,
    Ring,
}

impl FingerId {
    pub const ALL: [FingerId; 4] = [
        FingerId::Thumb,
        FingerId::Index,
        FingerId::Middle,
        FingerId::Ring,
    ];

    pub fn index(self) -> usize {
        match self {
            FingerId::Thumb => 0,
            FingerId::Index => 1,
            FingerId::Middle => 2,
            FingerId::Ring => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<FingerId> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FingerId::Thumb => "thumb",
            FingerId::Index => "index",
            FingerId::Middle => "middle",
            FingerId::Ring => "ring",
        }
    }
}

impl fmt::Display for FingerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FingerId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown finger '{s}'"))
    }
}
