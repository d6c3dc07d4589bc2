//! Flat key=value configuration files.

use std::ffi::OsString;
use std::path::Path;

use clap::CommandFactory;

use crate::args::Cli;
use crate::CliError;

/// Parses `key=value` lines. Blank lines and `#` comments are skipped; keys
/// may use `-` or `_`.
pub fn parse(text: &str, origin: &Path) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!(
                "{}:{}: expected key=value",
                origin.display(),
                i + 1
            )));
        };
        out.push((key.trim().replace('_', "-"), value.trim().to_string()));
    }
    Ok(out)
}

fn subcommand_of(argv: &[OsString]) -> Option<String> {
    let cmd = Cli::command();
    argv.iter()
        .skip(1)
        .filter_map(|a| a.to_str())
        .find(|a| cmd.find_subcommand(a).is_some())
        .map(str::to_string)
}

fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(rest.into());
        }
    }
    None
}

/// Splices the options of a `--config` file into `argv` right after the
/// subcommand, so that later command-line flags override them.
pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let entries = parse(&text, path)?;
    let Some(sub) = subcommand_of(&argv) else {
        return Ok(argv);
    };
    let cmd = Cli::command();
    let subcmd = cmd.find_subcommand(&sub).expect("subcommand exists");
    let mut injected = Vec::new();
    for (key, value) in entries {
        let arg = subcmd
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| CliError::Config(format!("unknown key `{key}` in {} for `{sub}`", path.display())))?;
        if key == "config" {
            continue;
        }
        let is_flag = !arg.get_action().takes_values();
        if is_flag {
            match value.as_str() {
                "true" => injected.push(OsString::from(format!("--{key}"))),
                "false" => {}
                other => {
                    return Err(CliError::Config(format!("`{key}` expects true or false, found `{other}`")));
                }
            }
        } else {
            injected.push(OsString::from(format!("--{key}={value}")));
        }
    }
    let pos = argv.iter().position(|a| a.to_str() == Some(sub.as_str())).expect("subcommand present");
    let mut out = argv[..=pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}

/// The resolved options of the subcommand as `key=value` lines, suitable
/// for `--config`.
pub fn resolved(matches: &clap::ArgMatches) -> Vec<(String, String)> {
    let Some((sub, sub_matches)) = matches.subcommand() else {
        return Vec::new();
    };
    let cmd = Cli::command();
    let subcmd = cmd.find_subcommand(sub).expect("subcommand exists");
    let mut out = Vec::new();
    for arg in subcmd.get_arguments() {
        let (Some(long), id) = (arg.get_long(), arg.get_id().as_str()) else {
            continue;
        };
        if long == "config" || long == "verbose" || long == "help" || long == "version" {
            continue;
        }
        let Ok(Some(values)) = sub_matches.try_get_raw(id) else {
            continue;
        };
        let joined: Vec<String> = values.map(|v| v.to_string_lossy().into_owned()).collect();
        if !arg.get_action().takes_values() {
            out.push((long.to_string(), sub_matches.get_flag(id).to_string()));
        } else {
            out.push((long.to_string(), joined.join(",")));
        }
    }
    out
}
