//! JSON configuration for the algebra and order, shared by the library and
//! the command-line tool.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// On-disk description of an algebra and candidate maximal order.
///
/// Coordinates are strings like "1/2" or "3" (exact rationals) with respect
/// to the 1, i, j, ij basis.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlgebraConfig {
    pub a: i64,
    pub b: i64,
    pub order_basis: [[String; 4]; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height_check: Option<i64>,
}

impl AlgebraConfig {
    /// The built-in discriminant-6 instance: (-1, 3) with order basis
    /// {1, i, j, (1 + i + j + ij)/2}.
    pub fn default_disc6() -> Self {
        AlgebraConfig {
            a: -1,
            b: 3,
            order_basis: [
                ["1", "0", "0", "0"].map(String::from),
                ["0", "1", "0", "0"].map(String::from),
                ["0", "0", "1", "0"].map(String::from),
                ["1/2", "1/2", "1/2", "1/2"].map(String::from),
            ],
            height_check: Some(crate::quaternion::DEFAULT_HEIGHT_CHECK),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(format!("config parse error: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
