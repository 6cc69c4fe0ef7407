//! Writes `NNN.tokens` beside every `NNN.py` in a golden-corpus directory.
//!
//! `cargo run -p clcp-core --example golden_tokens -- testdata/golden`

use std::path::PathBuf;

use clcp_core::pylex::{format_token_line, tokenize};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).ok_or("usage: golden_tokens DIR")?);
    let mut n = 0;
    for entry in std::fs::read_dir(&dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("py") {
            continue;
        }
        let src = std::fs::read_to_string(&path)?;
        let tokens = tokenize(&src).map_err(|e| format!("{}: {e}", path.display()))?;
        let body: String = tokens.iter().map(|t| format_token_line(t) + "\n").collect();
        std::fs::write(path.with_extension("tokens"), body)?;
        n += 1;
    }
    println!("{n} token files written");
    Ok(())
}
