//! File formats: VXG grids and masks, PLY meshes, embedding documents and
//! triplane dumps. All binary formats are little-endian.

mod embeddings;
mod ply;
mod triplane;
mod vxg;

pub use embeddings::{embeddings_from_json, embeddings_to_json, read_embeddings, write_embeddings};
pub use ply::{read_ply, read_ply_from, write_mesh_ply, write_mesh_ply_to, write_points_ply};
pub use triplane::{read_triplane, write_triplane, TRIPLANE_MAGIC};
pub use vxg::{
    read_grid, read_grid_from, read_mask, read_mask_from, write_grid, write_grid_to, write_mask,
    write_mask_to, Dtype, SlabReader, VxgHeader, HEADER_LEN, VXG_MAGIC, VXG_VERSION,
};

use std::io::Read;

use crate::error::{Error, Result};

/// Fills `buf`, or reports how far the stream got.
pub(crate) fn read_exact_at(
    r: &mut impl Read,
    buf: &mut [u8],
    offset: u64,
    what: &str,
) -> Result<()> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => {
                return Err(Error::format(
                    offset + filled as u64,
                    format!(
                        "truncated {what}: expected {} bytes, got {filled}",
                        buf.len()
                    ),
                ))
            }
            Ok(n) => filled += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

/// Reads exactly `len` bytes without trusting `len` for the allocation:
/// the buffer grows with the data actually delivered.
pub(crate) fn read_payload(
    r: &mut impl Read,
    len: u64,
    offset: u64,
    what: &str,
) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    r.by_ref().take(len).read_to_end(&mut buf)?;
    if (buf.len() as u64) < len {
        return Err(Error::format(
            offset + buf.len() as u64,
            format!("truncated {what}: expected {len} bytes, got {}", buf.len()),
        ));
    }
    Ok(buf)
}

/// Fails if the stream has anything left.
pub(crate) fn expect_eof(r: &mut impl Read, offset: u64) -> Result<()> {
    let mut probe = [0u8; 1];
    loop {
        match r.read(&mut probe) {
            Ok(0) => return Ok(()),
            Ok(_) => return Err(Error::format(offset, "unexpected trailing bytes")),
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
}

pub(crate) fn f32s_from_le(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect()
}

pub(crate) fn f32s_to_le(values: &[f32], out: &mut Vec<u8>) {
    out.reserve(values.len() * 4);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}
