//! Instance descriptors accepted on the command line:
//!
//! ```text
//! det:0,0.5,1                      point-mass losses
//! bern:0.2,0.5                     Bernoulli losses
//! lower-bound:K=8,delta=0.1,l=1    cyclic lower-bound family (l defaults to 1)
//! worst-np:K=8,delta=0.1           (0, Δ, …, Δ)
//! grid:K=64                        point masses at j/(K-1)
//! paper-example                    point mass 0.3 vs {0.4 w.p. 0.8, 0}
//! file:instance.json               JSON instance document
//! ```

use std::collections::BTreeMap;

use crate::domain::Instance;
use crate::error::{Error, Result};
use crate::instances::{
    bernoulli_instance, deterministic_instance, lower_bound_family, paper_example_two_actions,
    uniform_grid_means, worst_nonprivate_instance,
};

fn bad(text: &str, why: impl std::fmt::Display) -> Error {
    Error::InvalidArgument(format!("instance `{text}`: {why}"))
}

fn number_list(text: &str, body: &str) -> Result<Vec<f64>> {
    body.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| bad(text, format!("`{v}` is not a number")))
        })
        .collect()
}

fn key_values<'a>(
    text: &str,
    body: &'a str,
    allowed: &[&str],
) -> Result<BTreeMap<&'a str, &'a str>> {
    let mut map = BTreeMap::new();
    for item in body.split(',') {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| bad(text, format!("expected key=value, got `{item}`")))?;
        let key = key.trim();
        if !allowed.contains(&key) {
            return Err(bad(text, format!("unknown key `{key}`")));
        }
        if map.insert(key, value.trim()).is_some() {
            return Err(bad(text, format!("duplicate key `{key}`")));
        }
    }
    Ok(map)
}

fn get<T: std::str::FromStr>(
    text: &str,
    map: &BTreeMap<&str, &str>,
    key: &str,
    default: Option<T>,
) -> Result<T> {
    match map.get(key) {
        Some(v) => v
            .parse()
            .map_err(|_| bad(text, format!("bad value `{v}` for {key}"))),
        None => default.ok_or_else(|| bad(text, format!("missing {key}"))),
    }
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let (head, body) = match text.split_once(':') {
        Some((h, b)) => (h.trim(), b),
        None => (text.trim(), ""),
    };
    let built = match head {
        "det" => deterministic_instance(&number_list(text, body)?),
        "bern" => bernoulli_instance(&number_list(text, body)?),
        "lower-bound" => {
            let kv = key_values(text, body, &["K", "delta", "l"])?;
            lower_bound_family(
                get(text, &kv, "K", None)?,
                get(text, &kv, "delta", None)?,
                get(text, &kv, "l", Some(1))?,
            )
        }
        "worst-np" => {
            let kv = key_values(text, body, &["K", "delta"])?;
            worst_nonprivate_instance(get(text, &kv, "K", None)?, get(text, &kv, "delta", None)?)
        }
        "grid" => {
            let kv = key_values(text, body, &["K"])?;
            let k: usize = get(text, &kv, "K", None)?;
            if k == 0 {
                return Err(bad(text, "K must be positive"));
            }
            deterministic_instance(&uniform_grid_means(k))
        }
        "paper-example" if body.is_empty() => Ok(paper_example_two_actions()),
        "file" => {
            let doc = std::fs::read_to_string(body).map_err(|e| bad(text, e))?;
            return Instance::from_json(&doc).map_err(|e| bad(text, e));
        }
        _ => return Err(bad(text, "unknown form")),
    };
    built.map_err(|e| bad(text, e))
}
