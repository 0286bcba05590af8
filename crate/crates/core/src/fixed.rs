//! Fixed-length numeric arrays in config files.
//!
//! The TOML deserializer fills `[f64; N]` from the first `N` elements of a
//! longer array, so lengths are checked here instead.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer};

pub(crate) fn exact<'de, D: Deserializer<'de>, const N: usize>(d: D) -> Result<[f64; N], D::Error> {
    let v = Vec::<f64>::deserialize(d)?;
    let n = v.len();
    v.try_into()
        .map_err(|_| D::Error::invalid_length(n, &format!("an array of {N} numbers").as_str()))
}
