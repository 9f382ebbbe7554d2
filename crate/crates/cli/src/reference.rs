//! Generates the flag and configuration-key reference page.

use std::fmt::Write;

use clap::CommandFactory;

use crate::args::Cli;
use crate::config::RunConfig;

pub fn markdown() -> String {
    let mut cmd = Cli::command();
    cmd.build();
    let mut s = String::new();
    writeln!(s, "# `ppm` reference\n").unwrap();
    writeln!(s, "Generated by `ppm reference`. Do not edit by hand.\n").unwrap();
    writeln!(s, "Exit codes: 0 success, 2 configuration, 3 data, 4 training, 5 internal.\n").unwrap();
    for sub in cmd.get_subcommands().filter(|c| !c.is_hide_set() && c.get_name() != "help") {
        writeln!(s, "## `ppm {}`\n", sub.get_name()).unwrap();
        if let Some(about) = sub.get_about() {
            writeln!(s, "{about}\n").unwrap();
        }
        writeln!(s, "| flag | description |\n|---|---|").unwrap();
        for arg in sub.get_arguments().filter(|a| a.get_long().is_some()) {
            let long = arg.get_long().expect("filtered");
            if long == "help" {
                continue;
            }
            let help = arg.get_help().map(|h| h.to_string()).unwrap_or_default();
            let required = if arg.is_required_set() { " (required)" } else { "" };
            writeln!(s, "| `--{long}` | {help}{required} |").unwrap();
        }
        writeln!(s).unwrap();
    }
    writeln!(s, "## Configuration file\n").unwrap();
    writeln!(
        s,
        "A flat TOML document. Keys match the long flags with `_` for `-`, except `dataset` (`--data`) and `output_dir` (`--out`). Defaults:\n"
    )
    .unwrap();
    writeln!(s, "```toml\n{}```", RunConfig::default().to_toml().expect("serializable")).unwrap();
    s
}
