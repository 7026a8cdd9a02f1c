//! Serde adapters that expose 0-based internal indices as 1-based in JSON.

pub(crate) mod one_based_vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[usize], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|&i| i + 1).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<usize>, D::Error> {
        let raw = Vec::<usize>::deserialize(d)?;
        raw.into_iter()
            .map(|i| {
                i.checked_sub(1)
                    .ok_or_else(|| serde::de::Error::custom("indices are 1-based"))
            })
            .collect()
    }
}

pub(crate) mod one_based_opt {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<usize>, s: S) -> Result<S::Ok, S::Error> {
        v.map(|i| i + 1).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<usize>, D::Error> {
        match Option::<usize>::deserialize(d)? {
            None => Ok(None),
            Some(0) => Err(serde::de::Error::custom("indices are 1-based")),
            Some(i) => Ok(Some(i - 1)),
        }
    }
}

pub(crate) mod one_based {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &usize, s: S) -> Result<S::Ok, S::Error> {
        (v + 1).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<usize, D::Error> {
        usize::deserialize(d)?
            .checked_sub(1)
            .ok_or_else(|| serde::de::Error::custom("indices are 1-based"))
    }
}

pub(crate) mod one_based_counts {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &BTreeMap<usize, usize>, s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|(&k, &c)| ((k + 1).to_string(), c))
            .collect::<BTreeMap<String, usize>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<usize, usize>, D::Error> {
        let raw = BTreeMap::<String, usize>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, c)| {
                let idx: usize = k.parse().map_err(serde::de::Error::custom)?;
                let idx = idx
                    .checked_sub(1)
                    .ok_or_else(|| serde::de::Error::custom("indices are 1-based"))?;
                Ok((idx, c))
            })
            .collect()
    }
}
