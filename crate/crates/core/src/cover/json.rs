//! JSON form of [`CoverSpec`].
//!
//! Integers within the 53-bit safe range are JSON numbers; larger ones are
//! decimal strings. Both forms are accepted on input.

use std::fmt;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{make_cover, make_quadratic_cover, make_quadratic_cover_with_factors, CoverSpec, Family};
use crate::error::{Error, Result};
use crate::poly::IntPoly;

const SAFE_INTEGER: i64 = (1 << 53) - 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JsonInt(pub BigInt);

impl Serialize for JsonInt {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0.to_i64() {
            Some(v) if v.abs() <= SAFE_INTEGER => serializer.serialize_i64(v),
            _ => serializer.serialize_str(&self.0.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for JsonInt {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct IntVisitor;

        impl Visitor<'_> for IntVisitor {
            type Value = JsonInt;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an integer or a decimal integer string")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<JsonInt, E> {
                Ok(JsonInt(v.into()))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<JsonInt, E> {
                Ok(JsonInt(v.into()))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<JsonInt, E> {
                v.trim()
                    .parse::<BigInt>()
                    .map(JsonInt)
                    .map_err(|_| E::custom(format!("not an integer: {v:?}")))
            }
        }

        deserializer.deserialize_any(IntVisitor)
    }
}

fn to_json_coeffs(p: &IntPoly) -> Vec<JsonInt> {
    p.coeffs().iter().cloned().map(JsonInt).collect()
}

fn from_json_coeffs(c: &[JsonInt]) -> IntPoly {
    IntPoly::new(c.iter().map(|j| j.0.clone()).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitJson {
    pub coeffs: Vec<JsonInt>,
    pub e: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadraticJson {
    pub f: Vec<JsonInt>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyJson {
    pub quadratic: QuadraticJson,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverSpecJson {
    #[serde(default)]
    pub orbits: Vec<OrbitJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disc_poly: Option<Vec<JsonInt>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_order: Option<u64>,
}

impl CoverSpecJson {
    pub fn build(&self) -> Result<CoverSpec> {
        let orbits: Vec<(IntPoly, u32)> = self
            .orbits
            .iter()
            .map(|o| (from_json_coeffs(&o.coeffs), o.e))
            .collect();
        let mut spec = match &self.family {
            Some(family) => {
                let f = from_json_coeffs(&family.quadratic.f);
                if orbits.is_empty() {
                    make_quadratic_cover(f)?
                } else {
                    if let Some((i, _)) = orbits.iter().enumerate().find(|(_, (_, e))| *e != 2) {
                        return Err(Error::InvalidOrbit {
                            index: i,
                            reason: "quadratic family requires e = 2".into(),
                        });
                    }
                    make_quadratic_cover_with_factors(f, orbits.into_iter().map(|(p, _)| p).collect())?
                }
            }
            None => make_cover(orbits)?,
        };
        if let Some(d) = &self.disc_poly {
            spec = spec.with_disc_poly(from_json_coeffs(d))?;
        }
        if let Some(g) = self.group_order {
            spec = spec.with_group_order(g)?;
        }
        Ok(spec)
    }
}

impl From<&CoverSpec> for CoverSpecJson {
    fn from(spec: &CoverSpec) -> Self {
        CoverSpecJson {
            orbits: spec
                .orbits()
                .iter()
                .map(|o| OrbitJson {
                    coeffs: to_json_coeffs(o.poly()),
                    e: o.ram_index(),
                })
                .collect(),
            family: match spec.family() {
                Family::Quadratic { f } => Some(FamilyJson {
                    quadratic: QuadraticJson { f: to_json_coeffs(f) },
                }),
                Family::Generic => None,
            },
            disc_poly: spec.disc_poly().map(to_json_coeffs),
            group_order: spec.group_order(),
        }
    }
}

impl CoverSpec {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&CoverSpecJson::from(self)).expect("cover JSON is serializable")
    }

    pub fn from_json(text: &str) -> Result<CoverSpec> {
        let parsed: CoverSpecJson =
            serde_json::from_str(text).map_err(|e| Error::Json(e.to_string()))?;
        parsed.build()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn large_integers_become_strings() {
        let spec = make_cover(vec![(
            IntPoly::new(vec![BigInt::from(1u64 << 60) + 1, BigInt::from(1)]),
            2,
        )])
        .unwrap();
        let text = spec.to_json();
        assert!(text.contains("\"1152921504606846977\""), "{text}");
        assert_eq!(CoverSpec::from_json(&text).unwrap(), spec);
    }

    #[test]
    fn parses_quadratic_family() {
        let spec = CoverSpec::from_json(r#"{"orbits":[],"family":{"quadratic":{"f":[0,1,0,1]}}}"#).unwrap();
        assert_eq!(spec.r(), 2);
        assert!(spec.is_quadratic());
        let again = CoverSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn parses_generic_with_disc() {
        let spec = CoverSpec::from_json(
            r#"{"orbits":[{"coeffs":["0","1"],"e":3}],"disc_poly":[0,0,-27],"group_order":6}"#,
        )
        .unwrap();
        assert_eq!(spec.orbits()[0].ram_index(), 3);
        assert_eq!(spec.group_order(), Some(6));
        assert_eq!(spec.disc_poly(), Some(&IntPoly::from_i64(&[0, 0, -27])));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(CoverSpec::from_json("{"), Err(Error::Json(_))));
        assert!(CoverSpec::from_json(r#"{"orbits":[{"coeffs":["x"],"e":2}]}"#).is_err());
        assert!(CoverSpec::from_json(
            r#"{"orbits":[{"coeffs":[0,1],"e":3}],"family":{"quadratic":{"f":[0,1]}}}"#
        )
        .is_err());
    }
}
