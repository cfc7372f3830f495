//! Command parameters: flag values layered over a config-file section, then
//! typed extraction that records every violation instead of stopping early.

use std::collections::BTreeMap;
use std::str::FromStr;

/// Raw parameter values keyed by their kebab-case name.
pub type ParamMap = BTreeMap<String, String>;

/// Declares a clap argument group whose flags are all optional strings.
/// Typing happens later so flag and config values go through one parser.
macro_rules! command_params {
    ($(#[$meta:meta])* $name:ident { $($(#[doc = $doc:literal])* $field:ident),* $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Default, Clone, clap::Args)]
        pub struct $name {
            $(
                $(#[doc = $doc])*
                #[arg(long, allow_hyphen_values = true, value_name = "VALUE")]
                pub $field: Option<String>,
            )*
        }

        impl $name {
            pub const KEYS: &'static [&'static str] = &[$(stringify!($field)),*];

            pub fn given(&self) -> Vec<(&'static str, String)> {
                let mut out = Vec::new();
                $(
                    if let Some(v) = &self.$field {
                        out.push((stringify!($field), v.clone()));
                    }
                )*
                out
            }
        }
    };
}
pub(crate) use command_params;

pub fn kebab(key: &str) -> String {
    key.replace('_', "-")
}

/// Scalar types a parameter can hold.
pub trait Value: FromStr + Default + Clone {
    const EXPECTED: &'static str;
}

impl Value for f64 {
    const EXPECTED: &'static str = "a number";
}
impl Value for u64 {
    const EXPECTED: &'static str = "a non-negative integer";
}
impl Value for usize {
    const EXPECTED: &'static str = "a non-negative integer";
}
impl Value for String {
    const EXPECTED: &'static str = "text";
}
impl Value for bool {
    const EXPECTED: &'static str = "true or false";
}

pub struct Fields<'a> {
    params: &'a ParamMap,
    errors: Vec<String>,
}

impl<'a> Fields<'a> {
    pub fn new(params: &'a ParamMap) -> Self {
        Fields {
            params,
            errors: Vec::new(),
        }
    }

    pub fn has(&self, key: &str) -> bool {
        self.params.contains_key(key)
    }

    pub fn error(&mut self, msg: impl Into<String>) {
        self.errors.push(msg.into());
    }

    pub fn into_errors(self) -> Vec<String> {
        self.errors
    }

    fn parse<T: Value>(&mut self, key: &str, raw: &str) -> Option<T> {
        match raw.trim().parse() {
            Ok(v) => Some(v),
            Err(_) => {
                self.errors
                    .push(format!("invalid value for `{key}`: {raw:?} (expected {})", T::EXPECTED));
                None
            }
        }
    }

    pub fn opt<T: Value>(&mut self, key: &str) -> Option<T> {
        let raw = self.params.get(key)?;
        self.parse(key, raw)
    }

    pub fn or<T: Value>(&mut self, key: &str, default: T) -> T {
        if self.has(key) {
            self.opt(key).unwrap_or_default()
        } else {
            default
        }
    }

    pub fn req<T: Value>(&mut self, key: &str) -> T {
        if !self.has(key) {
            self.errors.push(format!("missing required parameter `{key}`"));
        }
        self.opt(key).unwrap_or_default()
    }

    /// Comma-separated list.
    pub fn list<T: Value>(&mut self, key: &str) -> Option<Vec<T>> {
        let raw = self.params.get(key)?;
        let mut out = Vec::new();
        for item in raw.split(',') {
            if item.trim().is_empty() {
                self.errors.push(format!("invalid value for `{key}`: {raw:?} (empty list entry)"));
                return Some(Vec::new());
            }
            out.push(self.parse(key, item)?);
        }
        Some(out)
    }

    pub fn list_or<T: Value>(&mut self, key: &str, default: &[T]) -> Vec<T> {
        if self.has(key) {
            self.list(key).unwrap_or_default()
        } else {
            default.to_vec()
        }
    }

    pub fn req_list<T: Value>(&mut self, key: &str) -> Vec<T> {
        if !self.has(key) {
            self.errors.push(format!("missing required parameter `{key}`"));
        }
        self.list(key).unwrap_or_default()
    }

    /// One of a fixed set of names; `-` and `_` are interchangeable.
    pub fn choice<T: Copy>(&mut self, key: &str, options: &[(&str, T)], default: T) -> T {
        let Some(raw) = self.params.get(key) else {
            return default;
        };
        let norm = raw.trim().replace('-', "_");
        match options.iter().find(|(name, _)| name.replace('-', "_") == norm) {
            Some(&(_, v)) => v,
            None => {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                self.errors
                    .push(format!("invalid value for `{key}`: {raw:?} (expected one of {})", names.join(", ")));
                default
            }
        }
    }

    /// Flags keys that are set but meaningless in the current mode.
    pub fn forbid(&mut self, keys: &[&str], context: &str) {
        for key in keys {
            if self.has(key) {
                self.errors.push(format!("`{key}` does not apply to {context}"));
            }
        }
    }
}

/// Converts a config-file value to the flag string form. Arrays become
/// comma-separated lists.
pub fn toml_to_string(value: &toml::Value) -> Option<String> {
    match value {
        toml::Value::String(s) => Some(s.clone()),
        toml::Value::Integer(i) => Some(i.to_string()),
        toml::Value::Float(f) => Some(f.to_string()),
        toml::Value::Boolean(b) => Some(b.to_string()),
        toml::Value::Array(items) => items
            .iter()
            .map(|v| match v {
                toml::Value::Array(_) | toml::Value::Table(_) => None,
                v => toml_to_string(v),
            })
            .collect::<Option<Vec<_>>>()
            .map(|v| v.join(",")),
        _ => None,
    }
}
