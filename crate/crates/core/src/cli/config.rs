//! Config files: TOML whose keys mirror long flags. Values are spliced into
//! the argument list right after the subcommand name, so flags typed on the
//! command line (which come later) override them.

use std::path::Path;

use toml::Value;

use super::Failure;

/// Global flags that take a value; needed to find the subcommand token.
const VALUE_FLAGS: [&str; 7] = [
    "--config",
    "--seed",
    "--hedge-lexicon",
    "--verb-lexicon",
    "--stopwords",
    "--abbreviations",
    "--hedge-match",
];

fn config_error(message: String) -> Failure {
    Failure {
        kind: "config".into(),
        ..Failure::usage(message)
    }
}

fn push_value(out: &mut Vec<String>, key: &str, value: &Value) -> Result<(), Failure> {
    let flag = format!("--{}", key.replace('_', "-"));
    match value {
        Value::String(s) => out.extend([flag, s.clone()]),
        Value::Integer(i) => out.extend([flag, i.to_string()]),
        Value::Float(f) => out.extend([flag, f.to_string()]),
        Value::Boolean(true) => out.push(flag),
        Value::Boolean(false) => {}
        Value::Array(items) => {
            let parts: Result<Vec<String>, Failure> = items
                .iter()
                .map(|v| match v {
                    Value::String(s) => Ok(s.clone()),
                    Value::Integer(i) => Ok(i.to_string()),
                    Value::Float(f) => Ok(f.to_string()),
                    _ => Err(config_error(format!("config key `{key}`: arrays may hold only strings and numbers"))),
                })
                .collect();
            out.extend([flag, parts?.join(",")]);
        }
        _ => return Err(config_error(format!("config key `{key}` has an unsupported value"))),
    }
    Ok(())
}

/// Config-derived arguments for `command`: top-level keys first, then the
/// keys of the `[command]` table.
pub fn config_args(text: &str, command: &str) -> Result<Vec<String>, Failure> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| config_error(format!("config: {}", e.message())))?;
    let mut out = Vec::new();
    for (key, value) in &table {
        if key == "config" {
            return Err(config_error("config files cannot name another config".into()));
        }
        if !value.is_table() {
            push_value(&mut out, key, value)?;
        }
    }
    if let Some(section) = table.get(command) {
        for (key, value) in section.as_table().expect("checked table") {
            push_value(&mut out, key, value)?;
        }
    }
    Ok(out)
}

/// Position of the first token naming a subcommand, skipping the values of
/// global flags.
fn subcommand_index(argv: &[String], commands: &[String]) -> Option<usize> {
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].as_str();
        if VALUE_FLAGS.contains(&a) {
            i += 2;
            continue;
        }
        if commands.iter().any(|c| c == a) {
            return Some(i);
        }
        i += 1;
    }
    None
}

fn config_path(argv: &[String]) -> Option<String> {
    let mut found = None;
    let mut i = 1;
    while i < argv.len() {
        if argv[i] == "--config" {
            found = argv.get(i + 1).cloned();
            i += 1;
        } else if let Some(p) = argv[i].strip_prefix("--config=") {
            found = Some(p.to_string());
        }
        i += 1;
    }
    found
}

/// Splices config values into `argv` after the subcommand name. Without a
/// `--config` flag or a recognizable subcommand, `argv` is returned as is.
pub fn inject(argv: Vec<String>, commands: &[String]) -> Result<Vec<String>, Failure> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let Some(at) = subcommand_index(&argv, commands) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(Path::new(&path)).map_err(|e| config_error(format!("cannot read config {path}: {e}")))?;
    let extra = config_args(&text, &argv[at])?;
    let mut out = argv[..=at].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[at + 1..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn globals_then_section() {
        let text = "seed = 7\n[sample]\nn = 10\nproportions = [0.5, 0.25, 0.25]\n[train]\nmodel = \"bow\"\n";
        assert_eq!(config_args(text, "sample").unwrap(), ["--seed", "7", "--n", "10", "--proportions", "0.5,0.25,0.25"]);
        assert_eq!(config_args(text, "train").unwrap(), ["--seed", "7", "--model", "bow"]);
    }

    #[test]
    fn subcommand_after_global_values() {
        let argv: Vec<String> = ["certainty", "--seed", "sample", "sample", "--n", "3"].map(String::from).to_vec();
        assert_eq!(subcommand_index(&argv, &["sample".to_string()]), Some(3));
        let argv: Vec<String> = ["certainty", "sample", "--config=a.toml"].map(String::from).to_vec();
        assert_eq!(config_path(&argv).as_deref(), Some("a.toml"));
    }

    #[test]
    fn booleans() {
        assert_eq!(config_args("[analyze]\nrobust_se = true\n", "analyze").unwrap(), ["--robust-se"]);
        assert!(config_args("[analyze]\nrobust_se = false\n", "analyze").unwrap().is_empty());
    }
}
