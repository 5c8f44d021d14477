use std::fs::File;
use std::io::{self, BufWriter, Write};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::args::OutputArgs;

pub fn open(out: &OutputArgs) -> Result<Box<dyn Write>> {
    Ok(match &out.output {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn json<T: Serialize>(out: &OutputArgs, value: &T) -> Result<()> {
    let mut w = open(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn csv(out: &OutputArgs, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = open(out)?;
    jetflow::table::write_csv(&mut w, header, rows)?;
    w.flush()?;
    Ok(())
}
