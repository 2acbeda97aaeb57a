//! DVFLOW text format.
//!
//! ```text
//! DVFLOW 1
//! frames <K>
//! t <float>
//! <DVF body>
//! ...
//! ```
//!
//! The format carries no transport field; loaded frames have `v = 0`.

use std::fmt::Write as _;
use std::path::Path;

use crate::brakke::{FlowTrack, Frame};
use crate::varifold::io::{fmt_float, parse_body, parse_f64, write_body, Lines};
use crate::{Error, Result};

pub fn parse_dvflow(text: &str) -> Result<FlowTrack> {
    let mut lines = Lines::new(text);
    let (n, head) = lines.keyword("DVFLOW")?;
    if head != ["1"] {
        return Err(Error::parse(n, "unsupported DVFLOW version"));
    }
    let (n, k) = lines.keyword("frames")?;
    let count: usize = match k.as_slice() {
        [v] => v
            .parse()
            .map_err(|_| Error::parse(n, format!("invalid integer `{v}`")))?,
        _ => return Err(Error::parse(n, "`frames` takes exactly one value")),
    };
    let mut frames = Vec::with_capacity(count);
    for i in 0..count {
        let (tn, tv) = lines
            .keyword("t")
            .map_err(|e| match e {
                Error::Parse { line, message } => Error::parse(
                    line,
                    format!("{message} (frame count mismatch: header declares {count}, found {i})"),
                ),
                other => other,
            })?;
        let t = match tv.as_slice() {
            [v] => parse_f64(tn, v)?,
            _ => return Err(Error::parse(tn, "`t` takes exactly one value")),
        };
        frames.push(Frame::still(t, parse_body(&mut lines)?));
    }
    if let Some((n, _)) = lines.peek() {
        return Err(Error::parse(n, "trailing content after the declared frames"));
    }
    FlowTrack::new(frames, "loaded from DVFLOW")
}

pub fn to_dvflow_string(track: &FlowTrack) -> String {
    let mut out = String::from("DVFLOW 1\n");
    let _ = writeln!(out, "frames {}", track.len());
    for f in track.frames() {
        let _ = writeln!(out, "t {}", fmt_float(f.t));
        write_body(&mut out, &f.varifold);
    }
    out
}

pub fn load_flow(path: impl AsRef<Path>) -> Result<FlowTrack> {
    parse_dvflow(&std::fs::read_to_string(path)?)
}

pub fn save_flow(track: &FlowTrack, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_dvflow_string(track))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brakke::tracks::shrinking_sphere_track;
    use crate::geometry::GeometryContext;

    #[test]
    fn round_trip() {
        let ctx = GeometryContext::new(3, 2).unwrap();
        let tr = shrinking_sphere_track(ctx, true, (-1.0, -0.5), 4, 0.2).unwrap();
        let text = to_dvflow_string(&tr);
        let back = parse_dvflow(&text).unwrap();
        assert_eq!(back.len(), 4);
        assert_eq!(to_dvflow_string(&back), text);
        for (a, b) in tr.frames().iter().zip(back.frames()) {
            assert_eq!(a.t, b.t);
            assert_eq!(a.varifold, b.varifold);
        }
    }

    #[test]
    fn malformed() {
        assert!(matches!(parse_dvflow("DVF 1\n"), Err(Error::Parse { line: 1, .. })));
        let one = "DVFLOW 1\nframes 2\nt -1\ndim 2 1\nlambda 0\natoms 1\n0 0 1 1 0 0 1 0\n";
        match parse_dvflow(one) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 8);
                assert!(message.contains("mismatch"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let backwards = "DVFLOW 1\nframes 2\nt 0\ndim 2 1\nlambda 0\natoms 0\nt -1\ndim 2 1\nlambda 0\natoms 0\n";
        assert!(parse_dvflow(backwards).is_err());
    }
}
