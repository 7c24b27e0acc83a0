//! Running the command-line scenarios from code: load a preset, override a
//! field, and run a command.

use alf::cli::{load_config, run_command, Command, RenderOptions, PRESETS};

fn main() -> alf::error::Result<()> {
    println!("presets: {}", PRESETS.join(", "));
    let cfg = load_config(Some("ex1"), Some(r#"{"analysis":{"divergence_range":[0,3]}}"#), None)?;
    for cmd in [Command::Singularities, Command::Divergence] {
        let out = run_command(cmd, &cfg, RenderOptions::default())?;
        println!("{cmd}: {}", out.summary);
    }
    Ok(())
}
