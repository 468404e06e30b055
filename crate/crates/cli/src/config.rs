//! Run files: `{schema_id, version, command, args}`.
//!
//! A run file is expanded into ordinary flags placed ahead of the user's own, so clap does all
//! value parsing and command-line flags override file values. Manifests use the same shape.

use std::collections::{BTreeMap, HashSet};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::CommandFactory;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::args::Cli;
use crate::CliError;

pub const RUN_SCHEMA_ID: &str = "radial-sle.run.v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub schema_id: String,
    pub version: String,
    /// Subcommand words, e.g. `"verify nullvec"`.
    pub command: String,
    #[serde(default)]
    pub args: Map<String, Value>,
}

impl RunFile {
    pub fn manifest(words: &[&str], args: Value) -> Self {
        let args = match args {
            Value::Object(m) => m,
            _ => Map::new(),
        };
        Self { schema_id: RUN_SCHEMA_ID.into(), version: env!("CARGO_PKG_VERSION").into(), command: words.join(" "), args }
    }
}

/// Where each key of a loaded run file sits, for error messages.
#[derive(Debug, Default)]
pub struct Source {
    pub path: PathBuf,
    pub key_lines: BTreeMap<String, usize>,
}

impl Source {
    /// Append the run-file line of any config key the clap message mentions.
    pub fn annotate(&self, msg: &str) -> String {
        let hits: Vec<String> = self
            .key_lines
            .iter()
            .filter(|(k, _)| msg.contains(&format!("--{k}")))
            .map(|(k, l)| format!("{}:{l}: `{k}`", self.path.display()))
            .collect();
        if hits.is_empty() {
            msg.to_string()
        } else {
            format!("{}\n(from run file {})", msg.trim_end(), hits.join(", "))
        }
    }
}

fn line_of(text: &str, needle: &str, after: usize) -> usize {
    let pos = text[after.min(text.len())..].find(needle).map(|p| p + after).unwrap_or(0);
    text[..pos].lines().count().max(1) + usize::from(text[..pos].ends_with('\n'))
}

fn load(path: &Path) -> Result<(RunFile, String), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    let run: RunFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Invalid(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column())))?;
    Ok((run, text))
}

/// Long flag names accepted by the subcommand at `words`, or `None` if there is no such leaf.
fn leaf_flags(words: &[&str]) -> Option<HashSet<String>> {
    let mut cmd = Cli::command();
    for w in words {
        cmd = cmd.find_subcommand(w)?.clone();
    }
    if cmd.has_subcommands() {
        return None;
    }
    Some(cmd.get_arguments().filter_map(|a| a.get_long()).filter(|l| *l != "help").map(str::to_string).collect())
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

const GLOBAL_WITH_VALUE: [&str; 2] = ["--out", "--jobs"];

/// Rewrite `argv` if it names a run file; otherwise return it unchanged.
pub fn expand(raw: Vec<OsString>) -> Result<(Vec<OsString>, Option<Source>), CliError> {
    let Some(tokens) = raw.iter().map(|s| s.to_str().map(str::to_string)).collect::<Option<Vec<String>>>() else {
        return Ok((raw, None));
    };
    let mut path = None;
    let mut rest = Vec::new();
    let mut it = tokens.into_iter();
    let prog = it.next().unwrap_or_else(|| "radial-sle".into());
    while let Some(t) = it.next() {
        if t == "--config" {
            path = Some(it.next().ok_or_else(|| CliError::Invalid("--config needs a file".into()))?);
        } else if let Some(p) = t.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(t);
        }
    }
    let Some(path) = path.map(PathBuf::from) else {
        return Ok((raw, None));
    };
    let (run, text) = load(&path)?;
    let at = |needle: &str| line_of(&text, needle, 0);
    if run.schema_id != RUN_SCHEMA_ID {
        return Err(CliError::Invalid(format!(
            "{}:{}: schema_id `{}` is not `{RUN_SCHEMA_ID}`",
            path.display(),
            at("\"schema_id\""),
            run.schema_id
        )));
    }
    if run.version != env!("CARGO_PKG_VERSION") {
        eprintln!("warning: run file written by version {}, this is {}", run.version, env!("CARGO_PKG_VERSION"));
    }
    let words: Vec<&str> = run.command.split_whitespace().collect();
    let flags = leaf_flags(&words).ok_or_else(|| {
        CliError::Invalid(format!("{}:{}: unknown command `{}`", path.display(), at("\"command\""), run.command))
    })?;
    let args_at = text.find("\"args\"").unwrap_or(0);
    let mut source = Source { path: path.clone(), key_lines: BTreeMap::new() };
    for k in run.args.keys() {
        let line = line_of(&text, &format!("\"{k}\""), args_at);
        if !flags.contains(k) {
            return Err(CliError::Invalid(format!("{}:{line}: unknown key `{k}` for `{}`", path.display(), run.command)));
        }
        source.key_lines.insert(k.clone(), line);
    }

    // leading globals and subcommand words typed by the user
    let mut globals = Vec::new();
    let mut user = rest.into_iter().peekable();
    let mut consumed = 0;
    while let Some(t) = user.peek().cloned() {
        if GLOBAL_WITH_VALUE.contains(&t.as_str()) {
            globals.push(user.next().unwrap_or_default());
            globals.extend(user.next());
        } else if GLOBAL_WITH_VALUE.iter().any(|g| t.starts_with(&format!("{g}="))) {
            globals.extend(user.next());
        } else if !t.starts_with('-') && consumed < words.len() {
            if t != words[consumed] {
                return Err(CliError::Invalid(format!("command `{t}` conflicts with `{}` in {}", run.command, path.display())));
            }
            consumed += 1;
            user.next();
        } else {
            break;
        }
    }
    let user: Vec<String> = user.collect();
    let given: HashSet<&str> =
        user.iter().filter_map(|t| t.strip_prefix("--")).map(|t| t.split('=').next().unwrap_or(t)).collect();

    let mut from_file = Vec::new();
    for (k, v) in &run.args {
        if given.contains(k.as_str()) {
            continue;
        }
        let line = source.key_lines[k];
        let bad = || CliError::Invalid(format!("{}:{line}: unsupported value for `{k}`", path.display()));
        match v {
            Value::Null | Value::Bool(false) => {}
            Value::Bool(true) => from_file.push(format!("--{k}")),
            Value::Array(items) if items.is_empty() => {}
            Value::Array(items) => {
                let parts = items.iter().map(scalar).collect::<Option<Vec<_>>>().ok_or_else(bad)?;
                from_file.push(format!("--{k}={}", parts.join(",")));
            }
            Value::Object(_) => return Err(bad()),
            v => from_file.push(format!("--{k}={}", scalar(v).ok_or_else(bad)?)),
        }
    }

    let argv = std::iter::once(prog)
        .chain(globals)
        .chain(words.iter().map(|w| w.to_string()))
        .chain(from_file)
        .chain(user)
        .map(OsString::from)
        .collect();
    Ok((argv, Some(source)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    fn write(text: &str) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.json");
        std::fs::write(&p, text).unwrap();
        (dir, p)
    }

    #[test]
    fn untouched_without_config() {
        let argv = os(&["radial-sle", "params", "--kappa", "4"]);
        assert_eq!(expand(argv.clone()).unwrap().0, argv);
    }

    #[test]
    fn file_values_come_first_and_flags_win() {
        let (_d, p) = write(
            r#"{"schema_id": "radial-sle.run.v1", "version": "0.1.0", "command": "verify nullvec",
                "args": {"family": "ground", "n": 2, "m": 0, "kappa": 4, "seed": 3}}"#,
        );
        let argv = os(&["radial-sle", "--config", p.to_str().unwrap(), "--seed", "9"]);
        let (out, _) = expand(argv).unwrap();
        let out: Vec<String> = out.into_iter().map(|s| s.into_string().unwrap()).collect();
        assert_eq!(&out[..3], ["radial-sle", "verify", "nullvec"]);
        assert!(out.contains(&"--n=2".to_string()));
        assert!(!out.iter().any(|t| t == "--seed=3"));
        assert_eq!(out.last().unwrap(), "9");
    }

    #[test]
    fn unknown_key_reports_its_line() {
        let (_d, p) = write("{\"schema_id\": \"radial-sle.run.v1\",\n \"version\": \"0.1.0\",\n \"command\": \"params\",\n \"args\": {\n  \"kappa\": 4,\n  \"bogus\": 1\n }\n}\n");
        let err = expand(os(&["radial-sle", "--config", p.to_str().unwrap()])).unwrap_err();
        assert!(err.to_string().contains(":6: unknown key `bogus`"), "{err}");
    }

    #[test]
    fn unknown_top_level_field_is_rejected() {
        let (_d, p) = write("{\"schema_id\": \"radial-sle.run.v1\",\n \"version\": \"0.1.0\", \"command\": \"params\",\n \"extra\": 1}");
        let err = expand(os(&["radial-sle", "--config", p.to_str().unwrap()])).unwrap_err();
        assert!(err.to_string().contains(":3:"), "{err}");
    }

    #[test]
    fn conflicting_subcommand_is_rejected() {
        let (_d, p) = write(r#"{"schema_id": "radial-sle.run.v1", "version": "0.1.0", "command": "params", "args": {"kappa": 4}}"#);
        assert!(expand(os(&["radial-sle", "meander", "--config", p.to_str().unwrap()])).is_err());
        assert!(expand(os(&["radial-sle", "params", "--config", p.to_str().unwrap()])).is_ok());
    }
}
