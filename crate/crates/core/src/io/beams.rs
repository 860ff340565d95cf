//! Plain-text beam model: first line is the beam count, then one
//! `height pitch` pair per line (meters, radians) at 17 significant
//! digits, which round-trips f64 exactly.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Beam, BeamModel};

pub fn write_beam_model(path: &Path, model: &BeamModel) -> Result<()> {
    let mut text = format!("{}\n", model.len());
    for beam in &model.beams {
        text.push_str(&format!("{:.16e} {:.16e}\n", beam.height, beam.pitch));
    }
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_beam_model(path: &Path) -> Result<BeamModel> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let parse_err = |line: usize, msg: &str| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.to_string(),
    };
    let mut lines = text.lines();
    let count: usize = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing beam count"))?
        .trim()
        .parse()
        .map_err(|_| parse_err(1, "beam count is not an integer"))?;
    let mut beams = Vec::with_capacity(count);
    for i in 0..count {
        let line_no = i + 2;
        let line = lines
            .next()
            .ok_or_else(|| parse_err(line_no, "missing beam line"))?;
        let mut fields = line.split_whitespace();
        let mut value = |name: &str| -> Result<f64> {
            fields
                .next()
                .ok_or_else(|| parse_err(line_no, &format!("missing {name}")))?
                .parse()
                .map_err(|_| parse_err(line_no, &format!("bad {name}")))
        };
        let height = value("height")?;
        let pitch = value("pitch")?;
        beams.push(Beam { height, pitch });
    }
    BeamModel::new(beams)
}
