//! Plain-text channel files.
//!
//! Three blocks, one per matrix, in any order. Each block starts with a
//! header line `<name> <rows> <cols>` (`name` is `H`, `Hx` or `Gx`, case
//! insensitive) followed by `rows` lines of `cols` whitespace-separated
//! `re im` pairs. Blank lines and text after `#` are ignored.
//!
//! ```text
//! # secondary link, n x m
//! H 2 2
//! 1 0   0 0
//! 0 0   1 0
//! Hx 1 2
//! 0.5 0.5   0 -1
//! Gx 2 1
//! 1 0
//! 0 1
//! ```

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::model::ChannelSet;

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses the text of a channel file.
pub fn parse_channel_file(text: &str) -> Result<ChannelSet> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (mut h, mut hx, mut gx) = (None, None, None);
    while let Some((line_no, header)) = lines.next() {
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_error(line_no, "expected `<name> <rows> <cols>`"));
        }
        let dim = |s: &str| {
            s.parse::<usize>()
                .ok()
                .filter(|&v| v > 0)
                .ok_or_else(|| parse_error(line_no, format!("bad dimension `{s}`")))
        };
        let (rows, cols) = (dim(fields[1])?, dim(fields[2])?);
        let slot = match fields[0].to_ascii_lowercase().as_str() {
            "h" => &mut h,
            "hx" => &mut hx,
            "gx" => &mut gx,
            other => return Err(parse_error(line_no, format!("unknown matrix `{other}`"))),
        };
        if slot.is_some() {
            return Err(parse_error(line_no, format!("matrix `{}` given twice", fields[0])));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let (row_no, row) = lines
                .next()
                .ok_or_else(|| parse_error(line_no, format!("`{}` ends after {r} of {rows} rows", fields[0])))?;
            let values: Vec<f64> = row
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| parse_error(row_no, format!("bad number `{t}`")))
                })
                .collect::<Result<_>>()?;
            if values.len() != 2 * cols {
                return Err(parse_error(
                    row_no,
                    format!("expected {} numbers ({cols} re/im pairs), got {}", 2 * cols, values.len()),
                ));
            }
            data.extend(values.chunks(2).map(|p| Complex64::new(p[0], p[1])));
        }
        *slot = Some(CMatrix::from_row_iterator(rows, cols, data));
    }
    let missing = |name: &str| parse_error(0, format!("matrix `{name}` missing"));
    ChannelSet::new(
        h.ok_or_else(|| missing("H"))?,
        hx.ok_or_else(|| missing("Hx"))?,
        gx.ok_or_else(|| missing("Gx"))?,
    )
}

/// Reads a channel file from disk.
pub fn read_channel_file(path: &Path) -> Result<ChannelSet> {
    parse_channel_file(&std::fs::read_to_string(path)?)
}

/// Formats channels in the file layout; numbers round-trip exactly.
pub fn format_channel_file(channels: &ChannelSet) -> String {
    let mut out = String::new();
    for (name, m) in [("H", &channels.h), ("Hx", &channels.hx), ("Gx", &channels.gx)] {
        let _ = writeln!(out, "{name} {} {}", m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            let row: Vec<String> = (0..m.ncols())
                .map(|j| format!("{:?} {:?}", m[(i, j)].re, m[(i, j)].im))
                .collect();
            let _ = writeln!(out, "{}", row.join("  "));
        }
    }
    out
}

pub fn write_channel_file(channels: &ChannelSet, path: &Path) -> Result<()> {
    std::fs::write(path, format_channel_file(channels))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_channels, ScenarioConfig};

    const EXAMPLE: &str = "# secondary link, n x m
H 2 2
1 0   0 0
0 0   1 0
Hx 1 2
0.5 0.5   0 -1   # trailing comment
Gx 2 1
1 0
0 1
";

    #[test]
    fn parses_example() {
        let ch = parse_channel_file(EXAMPLE).unwrap();
        assert_eq!(ch.h, CMatrix::identity(2, 2));
        assert_eq!(ch.hx[(0, 0)], Complex64::new(0.5, 0.5));
        assert_eq!(ch.hx[(0, 1)], Complex64::new(0.0, -1.0));
        assert_eq!(ch.gx[(1, 0)], Complex64::new(0.0, 1.0));
    }

    #[test]
    fn round_trip() {
        let c = ScenarioConfig::new(4, 3, 2, 2, 1, 1.0, 0.1, vec![1.0], 11).unwrap();
        let ch = sample_channels(&c, 0).unwrap();
        let back = parse_channel_file(&format_channel_file(&ch)).unwrap();
        assert_eq!(back.h, ch.h);
        assert_eq!(back.hx, ch.hx);
        assert_eq!(back.gx, ch.gx);
    }

    #[test]
    fn reports_line_numbers() {
        let broken = EXAMPLE.replace("0.5 0.5", "0.5 x");
        match parse_channel_file(&broken) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("unexpected {other:?}"),
        }
        let short = EXAMPLE.replace("0 0   1 0\n", "");
        assert!(matches!(parse_channel_file(&short), Err(Error::Parse { .. })));
        let missing = EXAMPLE.split("Gx").next().unwrap();
        assert!(matches!(parse_channel_file(missing), Err(Error::Parse { .. })));
    }

    #[test]
    fn shape_mismatch_is_a_config_error() {
        let bad = EXAMPLE.replace("Hx 1 2\n0.5 0.5   0 -1", "Hx 1 1\n0.5 0.5");
        assert!(matches!(parse_channel_file(&bad), Err(Error::Config(_))));
    }
}
