//! Serde helpers for `f64` fields that may legitimately be `±∞` or NaN.
//!
//! JSON has no literal for those, so they are written as the strings
//! `"inf"`, `"-inf"` and `"nan"`; finite values stay numbers.

use serde::{de, Deserialize, Deserializer, Serializer};

pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Repr {
    Num(f64),
    Str(String),
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    match Repr::deserialize(d)? {
        Repr::Num(v) => Ok(v),
        Repr::Str(s) => match s.as_str() {
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            "nan" => Ok(f64::NAN),
            other => Err(de::Error::custom(format!("not a number: {other}"))),
        },
    }
}

#[cfg(test)]
mod tests {
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct T {
        #[serde(with = "super")]
        x: f64,
    }

    #[test]
    fn round_trip() {
        for x in [1.5, f64::INFINITY, f64::NEG_INFINITY, 0.1 + 0.2] {
            let s = serde_json::to_string(&T { x }).unwrap();
            assert_eq!(serde_json::from_str::<T>(&s).unwrap(), T { x });
        }
        let s = serde_json::to_string(&T { x: f64::NAN }).unwrap();
        assert!(serde_json::from_str::<T>(&s).unwrap().x.is_nan());
    }
}
