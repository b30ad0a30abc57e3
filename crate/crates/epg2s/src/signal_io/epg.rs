//! EPG spreadsheet I/O and frame-rate alignment.
//!
//! On-disk layout: UTF-8 comma-delimited text. Line 1 is `rate_hz=<float>`,
//! line 2 the electrode header (`e001,...,e124`), every following line one
//! binary palatogram row.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::signal_io::{EpgSequence, NUM_ELECTRODES};

pub fn load_epg_file(path: impl AsRef<Path>) -> Result<EpgSequence> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();

    let rate_line = lines
        .next()
        .ok_or_else(|| Error::format(path, "empty file"))?;
    let rate_hz: f64 = rate_line
        .strip_prefix("rate_hz=")
        .ok_or_else(|| Error::format(path, format!("expected `rate_hz=<float>` header, got `{rate_line}`")))?
        .trim()
        .parse()
        .map_err(|_| Error::format(path, format!("unparseable rate in `{rate_line}`")))?;

    let header = lines
        .next()
        .ok_or_else(|| Error::format(path, "missing electrode header"))?;
    let n_cols = header.split(',').count();
    if n_cols != NUM_ELECTRODES {
        return Err(Error::format(
            path,
            format!("electrode header has {n_cols} columns, expected {NUM_ELECTRODES}"),
        ));
    }

    let mut values: Vec<u8> = Vec::new();
    let mut n_rows = 0usize;
    for (row, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != NUM_ELECTRODES {
            return Err(Error::format(
                path,
                format!("row {row} has {} columns, expected {NUM_ELECTRODES}", cells.len()),
            ));
        }
        for (col, cell) in cells.iter().enumerate() {
            match cell.trim() {
                "0" => values.push(0),
                "1" => values.push(1),
                other => {
                    return Err(Error::Value(format!(
                        "non-binary EPG cell `{other}` at row {row}, column {col} of {}",
                        path.display()
                    )))
                }
            }
        }
        n_rows += 1;
    }
    if n_rows == 0 {
        return Err(Error::format(path, "no EPG rows"));
    }
    let frames = Array2::from_shape_vec((n_rows, NUM_ELECTRODES), values)
        .expect("row-major dimensions checked above");
    EpgSequence::new(frames, rate_hz)
}

pub fn save_epg_file(epg: &EpgSequence, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str(&format!("rate_hz={}\n", epg.rate_hz()));
    let header: Vec<String> = (1..=NUM_ELECTRODES).map(|i| format!("e{i:03}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in epg.frames().rows() {
        let cells: Vec<&str> = row.iter().map(|&v| if v == 1 { "1" } else { "0" }).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Resamples an EPG sequence onto the spectral frame grid by nearest-neighbor
/// sample-and-hold. Output frame `t` takes the EPG row whose timestamp is
/// closest to `t / frame_rate_hz`; exact ties resolve to the later row, and
/// edges hold the first/last row.
pub fn align_epg_to_frames(
    epg: &EpgSequence,
    n_frames: usize,
    frame_rate_hz: f64,
) -> Result<Array2<u8>> {
    if n_frames == 0 {
        return Err(Error::Value("n_frames must be >= 1".into()));
    }
    if !(frame_rate_hz.is_finite() && frame_rate_hz > 0.0) {
        return Err(Error::Value(format!("frame rate must be positive, got {frame_rate_hz}")));
    }
    let t_epg = epg.len();
    let mut out = Array2::<u8>::zeros((n_frames, NUM_ELECTRODES));
    for t in 0..n_frames {
        // multiply before dividing so exact ties land on .5 and round later
        let idx = (t as f64 * epg.rate_hz() / frame_rate_hz).round() as usize;
        let idx = idx.min(t_epg - 1);
        out.row_mut(t).assign(&epg.frames().row(idx));
    }
    Ok(out)
}
