//! CSV emission.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::experiment::RegretTrace;

pub const HEADER: &str = "t,inst_regret,cum_regret,variance,network_error";

/// `%.12g`: 12 significant digits, trailing zeros removed, exponent form
/// outside `[1e-4, 1e12)`.
pub fn fmt_g(x: f64) -> String {
    const PREC: i32 = 12;
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", (PREC - 1) as usize, x);
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= PREC {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (PREC - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn render_csv(trace: &RegretTrace) -> String {
    let mut out = String::new();
    for line in &trace.metadata {
        let _ = writeln!(out, "# {line}");
    }
    out.push_str(HEADER);
    out.push('\n');
    for r in &trace.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.t,
            fmt_g(r.inst_regret),
            fmt_g(r.cum_regret),
            fmt_g(r.variance),
            fmt_g(r.network_error)
        );
    }
    out
}

/// Writes to a temporary file next to `path`, then renames it into place.
pub fn write_csv(trace: &RegretTrace, path: &Path) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Parse(format!("output path {} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(render_csv(trace).as_bytes())
            .and_then(|_| f.sync_all())
            .map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

/// Parses the data rows of a CSV produced by [`render_csv`].
pub fn parse_rows(text: &str) -> Result<Vec<[f64; 5]>> {
    let mut lines = text.lines().skip_while(|l| l.starts_with('#'));
    match lines.next() {
        Some(h) if h == HEADER => {}
        _ => return Err(Error::Parse("missing CSV header".into())),
    }
    lines
        .map(|l| {
            let vals: Vec<f64> = l
                .split(',')
                .map(|v| v.parse::<f64>().map_err(|_| Error::Parse(format!("bad field {v:?}"))))
                .collect::<Result<_>>()?;
            <[f64; 5]>::try_from(vals).map_err(|_| Error::Parse(format!("expected 5 fields: {l:?}")))
        })
        .collect()
}
