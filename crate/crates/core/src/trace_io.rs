//! Line-oriented trace format.
//!
//! ```text
//! # comment
//! file a 1 1
//! file b 2 3/2
//! req a
//! tick
//! req b
//! ```
//!
//! Catalog lines come first; `req` and `tick` lines follow.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{Catalog, Event, Trace};
use crate::rational::{fmt_rat, parse_rat};

pub fn parse_trace(text: &str) -> Result<Trace> {
    let mut catalog = Catalog::new();
    let mut events = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |reason: String| Error::Parse { line, reason };
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        match fields[0] {
            "file" => {
                if !events.is_empty() {
                    return Err(err("catalog line after the first event".into()));
                }
                let [_, id, size, cost] = fields[..] else {
                    return Err(err("expected `file <id> <size> <cost>`".into()));
                };
                let size: u64 = size
                    .parse()
                    .map_err(|_| err(format!("bad size `{size}`")))?;
                let cost = parse_rat(cost).map_err(|e| err(e.to_string()))?;
                catalog.add(id, size, cost).map_err(|e| err(e.to_string()))?;
            }
            "req" => {
                let [_, id] = fields[..] else {
                    return Err(err("expected `req <id>`".into()));
                };
                let f = catalog
                    .lookup(id)
                    .ok_or_else(|| err(format!("unknown file `{id}`")))?;
                events.push(Event::Request(f));
            }
            "tick" => {
                if fields.len() != 1 {
                    return Err(err("`tick` takes no arguments".into()));
                }
                events.push(Event::Tick);
            }
            other => return Err(err(format!("unknown directive `{other}`"))),
        }
    }
    Ok(Trace { catalog, events })
}

pub fn emit_trace(trace: &Trace) -> String {
    let mut out = String::new();
    for spec in trace.catalog.files() {
        let _ = writeln!(out, "file {} {} {}", spec.name, spec.size, fmt_rat(&spec.cost));
    }
    for e in &trace.events {
        match e {
            Event::Request(f) => {
                let _ = writeln!(out, "req {}", trace.catalog.get(*f).name);
            }
            Event::Tick => out.push_str("tick\n"),
        }
    }
    out
}
