//! JSON forms of values, configurations and traces.
//!
//! Values: `null`, `true`/`false`, `{"addr": n}`, `{"nat": n}`,
//! `{"set": [n, ..]}`. A configuration lists its stack top frame first;
//! continuations are stored as source text.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ast::Ident;
use crate::interpreter::{Trace, TraceEnd};
use crate::runtime::{Address, Config, Continuation, Frame, Heap, Object, Value};
use crate::syntax::{parse_stmts, print_stmts, ParseError};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValueJson {
    Bool(bool),
    Addr { addr: u64 },
    Nat { nat: u64 },
    Set { set: Vec<u64> },
    Null,
}

impl From<&Value> for ValueJson {
    fn from(v: &Value) -> Self {
        match v {
            Value::Null => ValueJson::Null,
            Value::Bool(b) => ValueJson::Bool(*b),
            Value::Addr(a) => ValueJson::Addr { addr: a.0 },
            Value::Nat(n) => ValueJson::Nat { nat: *n },
            Value::Set(s) => ValueJson::Set { set: s.iter().map(|a| a.0).collect() },
        }
    }
}

impl From<&ValueJson> for Value {
    fn from(v: &ValueJson) -> Self {
        match v {
            ValueJson::Null => Value::Null,
            ValueJson::Bool(b) => Value::Bool(*b),
            ValueJson::Addr { addr } => Value::Addr(Address(*addr)),
            ValueJson::Nat { nat } => Value::Nat(*nat),
            ValueJson::Set { set } => Value::Set(set.iter().map(|a| Address(*a)).collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameJson {
    /// Variable awaiting the result of a call made by this frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pending: Option<String>,
    pub contn: String,
    pub vars: BTreeMap<String, ValueJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectJson {
    pub class: String,
    #[serde(default)]
    pub fields: BTreeMap<String, ValueJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigJson {
    /// Top frame first.
    pub stack: Vec<FrameJson>,
    pub heap: BTreeMap<u64, ObjectJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next_addr: Option<u64>,
}

#[derive(Debug, thiserror::Error)]
pub enum DumpError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("continuation of frame {frame}: {err}")]
    Contn { frame: usize, err: ParseError },
    #[error("a configuration needs at least one frame")]
    EmptyStack,
}

fn vars_to_json(vars: &BTreeMap<Ident, Value>) -> BTreeMap<String, ValueJson> {
    vars.iter().map(|(k, v)| (k.to_string(), v.into())).collect()
}

fn vars_from_json(vars: &BTreeMap<String, ValueJson>) -> BTreeMap<Ident, Value> {
    vars.iter().map(|(k, v)| (Ident::new(k), v.into())).collect()
}

pub fn config_to_json(cfg: &Config) -> ConfigJson {
    ConfigJson {
        stack: cfg
            .stack
            .iter()
            .rev()
            .map(|f| FrameJson {
                pending: f.contn.pending.as_ref().map(|x| x.to_string()),
                contn: print_stmts(f.contn.stmts()),
                vars: vars_to_json(&f.vars),
            })
            .collect(),
        heap: cfg
            .heap
            .iter()
            .map(|(a, o)| (a.0, ObjectJson { class: o.class.to_string(), fields: vars_to_json(&o.fields) }))
            .collect(),
        next_addr: Some(cfg.next_addr),
    }
}

pub fn config_from_json(j: &ConfigJson) -> Result<Config, DumpError> {
    if j.stack.is_empty() {
        return Err(DumpError::EmptyStack);
    }
    let mut stack = Vec::with_capacity(j.stack.len());
    for (i, f) in j.stack.iter().enumerate().rev() {
        let stmts = parse_stmts(&f.contn).map_err(|err| DumpError::Contn { frame: i, err })?;
        let mut contn = Continuation::from_stmts(stmts);
        contn.pending = f.pending.as_deref().map(Ident::new);
        stack.push(Frame::new(contn, vars_from_json(&f.vars)));
    }
    let heap: Heap = j
        .heap
        .iter()
        .map(|(a, o)| (Address(*a), Object { class: Ident::new(&o.class), fields: vars_from_json(&o.fields) }))
        .collect();
    let mut cfg = Config::new(stack, heap);
    if let Some(n) = j.next_addr {
        cfg.next_addr = cfg.next_addr.max(n);
    }
    Ok(cfg)
}

pub fn config_to_string(cfg: &Config) -> String {
    serde_json::to_string_pretty(&config_to_json(cfg)).expect("config JSON is always serializable")
}

pub fn config_from_str(s: &str) -> Result<Config, DumpError> {
    config_from_json(&serde_json::from_str(s)?)
}

#[derive(Serialize)]
struct TraceLine<'a> {
    position: usize,
    /// Internal configurations between this position and the next.
    burst: Option<usize>,
    config: &'a ConfigJson,
}

#[derive(Serialize)]
struct TraceTail {
    end: String,
    positions: usize,
    steps: usize,
}

pub fn trace_end_label(end: &TraceEnd) -> String {
    match end {
        TraceEnd::Terminated => "terminated".into(),
        TraceEnd::Truncated(r) => format!("truncated: {r}"),
    }
}

/// One JSON object per external configuration, then a summary line.
pub fn trace_to_json_lines(trace: &Trace) -> String {
    let mut out = String::new();
    for (i, c) in trace.externals.iter().enumerate() {
        let cj = config_to_json(c);
        let line = TraceLine { position: i, burst: trace.bursts.get(i).map(Vec::len), config: &cj };
        out.push_str(&serde_json::to_string(&line).expect("serializable"));
        out.push('\n');
    }
    let tail = TraceTail { end: trace_end_label(&trace.end), positions: trace.len(), steps: trace.steps };
    out.push_str(&serde_json::to_string(&tail).expect("serializable"));
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interpreter::initial;

    #[test]
    fn value_shapes() {
        let v = Value::Set([Address(3), Address(1)].into_iter().collect());
        assert_eq!(serde_json::to_string(&ValueJson::from(&v)).unwrap(), r#"{"set":[1,3]}"#);
        for s in ["null", "true", r#"{"addr":4}"#, r#"{"nat":7}"#] {
            let j: ValueJson = serde_json::from_str(s).unwrap();
            assert_eq!(serde_json::to_string(&j).unwrap(), s);
        }
    }

    #[test]
    fn config_round_trip() {
        let cfg = initial(parse_stmts("x := new Object(); y := x.f").unwrap());
        let back = config_from_str(&config_to_string(&cfg)).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn empty_stack_rejected() {
        assert!(matches!(config_from_str(r#"{"stack":[],"heap":{}}"#), Err(DumpError::EmptyStack)));
    }
}
