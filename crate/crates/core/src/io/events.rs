//! JSON-Lines event files.
//!
//! One object per line:
//!
//! ```text
//! {"user":"u0","brand":"b3","y":1,"x":[0.12,-1.5,0.33]}
//! ```
//!
//! `user` and `brand` are arbitrary strings mapped to dense indices in order
//! of first appearance. `y` is `0`, `1`, `true` or `false`. An optional
//! `item` string names the item. The feature dimension is taken from the
//! first line.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{HBayesError, Result};
use crate::model::{Dataset, EventRecord};

#[derive(Debug, Deserialize)]
struct RawEvent {
    user: String,
    brand: String,
    y: Value,
    x: Vec<f64>,
    #[serde(default)]
    item: Option<String>,
}

#[derive(Debug, Serialize)]
struct OutEvent<'a> {
    user: &'a str,
    brand: &'a str,
    y: u8,
    x: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    item: Option<&'a str>,
}

/// Dense index assignment for string ids, in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl IdMap {
    pub fn from_names(names: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(HBayesError::Invariant(format!("duplicate id {n:?}")));
            }
        }
        Ok(IdMap { names, index })
    }

    pub fn intern(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        i
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, i: usize) -> Option<&str> {
        self.names.get(i).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// A loaded event file with its id dictionaries.
#[derive(Debug, Clone, PartialEq)]
pub struct EventFile {
    pub dataset: Dataset,
    pub users: IdMap,
    pub brands: IdMap,
    /// Optional item name of every event.
    pub items: Vec<Option<String>>,
}

fn parse_label(v: &Value) -> Option<bool> {
    match v {
        Value::Bool(b) => Some(*b),
        Value::Number(n) => match n.as_f64() {
            Some(0.0) => Some(false),
            Some(1.0) => Some(true),
            _ => None,
        },
        _ => None,
    }
}

/// Loads an event file into a [`Dataset`].
pub fn load_events(path: impl AsRef<Path>) -> Result<Dataset> {
    Ok(load_event_file(path)?.dataset)
}

/// Loads an event file keeping the id dictionaries.
pub fn load_event_file(path: impl AsRef<Path>) -> Result<EventFile> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut users = IdMap::default();
    let mut brands = IdMap::default();
    let mut items = Vec::new();
    let mut events = Vec::new();
    let mut dim: Option<usize> = None;
    let parse_err = |line: usize, message: String| HBayesError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawEvent =
            serde_json::from_str(&line).map_err(|e| parse_err(line_no, e.to_string()))?;
        let clicked = parse_label(&raw.y)
            .ok_or_else(|| parse_err(line_no, format!("label {} is not 0 or 1", raw.y)))?;
        match dim {
            None => {
                if raw.x.is_empty() {
                    return Err(parse_err(line_no, "feature vector is empty".into()));
                }
                dim = Some(raw.x.len());
            }
            Some(d) if d != raw.x.len() => {
                return Err(parse_err(
                    line_no,
                    format!("expected {d} features, found {}", raw.x.len()),
                ));
            }
            _ => {}
        }
        let user = users.intern(&raw.user);
        let brand = brands.intern(&raw.brand);
        events.push(EventRecord::new(raw.x, brand, user, clicked));
        items.push(raw.item);
    }

    let Some(d) = dim else {
        return Err(HBayesError::EmptyDataset);
    };
    let dataset = Dataset::new(events, users.len(), brands.len(), d)?;
    Ok(EventFile {
        dataset,
        users,
        brands,
        items,
    })
}

/// Writes events with the given id names; indices without a name are
/// written as `u<k>` / `b<i>`.
pub fn write_events(
    path: impl AsRef<Path>,
    data: &Dataset,
    users: &IdMap,
    brands: &IdMap,
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for e in &data.events {
        let user = users
            .name(e.user)
            .map(str::to_string)
            .unwrap_or_else(|| default_user_name(e.user));
        let brand = brands
            .name(e.brand)
            .map(str::to_string)
            .unwrap_or_else(|| default_brand_name(e.brand));
        let rec = OutEvent {
            user: &user,
            brand: &brand,
            y: e.clicked as u8,
            x: e.x.as_slice(),
            item: None,
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn default_user_name(k: usize) -> String {
    format!("u{k}")
}

pub fn default_brand_name(i: usize) -> String {
    format!("b{i}")
}
