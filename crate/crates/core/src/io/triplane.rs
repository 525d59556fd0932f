//! Triplane dumps.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "TPLF"
//!      4     4  version (u32, 1)
//!      8     4  plane resolution R (u32)
//!     12     4  channels per plane F′ (u32)
//!     16        XY, XZ, YZ planes, each R·R·F′ f32
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use super::{expect_eof, f32s_from_le, f32s_to_le, read_exact_at, read_payload};
use crate::error::{Error, Result};
use crate::grid::{Aggregation, TriplaneSet};

pub const TRIPLANE_MAGIC: [u8; 4] = *b"TPLF";
const VERSION: u32 = 1;
const HEADER_LEN: u64 = 16;

pub fn write_triplane(tp: &TriplaneSet, path: impl AsRef<Path>) -> Result<()> {
    let narrow = |v: usize| {
        u32::try_from(v).map_err(|_| Error::Dimension(format!("{v} does not fit the header")))
    };
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&TRIPLANE_MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&narrow(tp.resolution())?.to_le_bytes())?;
    w.write_all(&narrow(tp.plane_channels())?.to_le_bytes())?;
    let mut buf = Vec::new();
    for plane in tp.planes() {
        buf.clear();
        f32s_to_le(plane, &mut buf);
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_triplane(path: impl AsRef<Path>, aggregation: Aggregation) -> Result<TriplaneSet> {
    let mut r = BufReader::new(File::open(path)?);
    let mut h = [0u8; HEADER_LEN as usize];
    read_exact_at(&mut r, &mut h, 0, "triplane header")?;
    if h[0..4] != TRIPLANE_MAGIC {
        return Err(Error::format(0, "bad magic, expected \"TPLF\""));
    }
    let word = |i: usize| u32::from_le_bytes([h[i], h[i + 1], h[i + 2], h[i + 3]]);
    if word(4) != VERSION {
        return Err(Error::format(4, format!("unsupported version {}", word(4))));
    }
    let (res, ch) = (word(8) as u64, word(12) as u64);
    let plane_bytes = res
        .checked_mul(res)
        .and_then(|v| v.checked_mul(ch))
        .and_then(|v| v.checked_mul(4))
        .ok_or_else(|| Error::format(8, "declared plane size overflows"))?;
    let mut planes = Vec::with_capacity(3);
    for k in 0..3 {
        let offset = HEADER_LEN + k * plane_bytes;
        planes.push(f32s_from_le(&read_payload(
            &mut r,
            plane_bytes,
            offset,
            "plane",
        )?));
    }
    expect_eof(&mut r, HEADER_LEN + 3 * plane_bytes)?;
    let [xy, xz, yz]: [Vec<f32>; 3] = planes.try_into().expect("three planes");
    TriplaneSet::new(res as usize, ch as usize, xy, xz, yz, aggregation)
}
