//! The VXG container for feature volumes and masks.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "VXGF"
//!      4     4  version (u32, 1)
//!      8     4  resolution A (u32)
//!     12     4  channels F (u32)
//!     16     1  dtype (0 = f32, 1 = u8)
//!     17     3  reserved, zero
//!     20        A³·F values, channel-fastest, then x, y, z
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{expect_eof, f32s_from_le, f32s_to_le, read_exact_at, read_payload};
use crate::error::{Error, Result};
use crate::grid::{Mask3D, VoxelGrid};

pub const VXG_MAGIC: [u8; 4] = *b"VXGF";
pub const VXG_VERSION: u32 = 1;
pub const HEADER_LEN: u64 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32,
    U8,
}

impl Dtype {
    pub fn code(self) -> u8 {
        match self {
            Dtype::F32 => 0,
            Dtype::U8 => 1,
        }
    }

    pub fn size(self) -> u64 {
        match self {
            Dtype::F32 => 4,
            Dtype::U8 => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VxgHeader {
    pub resolution: u32,
    pub channels: u32,
    pub dtype: Dtype,
}

impl VxgHeader {
    pub fn encode(&self) -> [u8; HEADER_LEN as usize] {
        let mut b = [0u8; HEADER_LEN as usize];
        b[0..4].copy_from_slice(&VXG_MAGIC);
        b[4..8].copy_from_slice(&VXG_VERSION.to_le_bytes());
        b[8..12].copy_from_slice(&self.resolution.to_le_bytes());
        b[12..16].copy_from_slice(&self.channels.to_le_bytes());
        b[16] = self.dtype.code();
        b
    }

    pub fn decode(b: &[u8; HEADER_LEN as usize]) -> Result<Self> {
        if b[0..4] != VXG_MAGIC {
            return Err(Error::format(
                0,
                format!("bad magic {:?}, expected \"VXGF\"", &b[0..4]),
            ));
        }
        let word = |i: usize| u32::from_le_bytes([b[i], b[i + 1], b[i + 2], b[i + 3]]);
        let version = word(4);
        if version != VXG_VERSION {
            return Err(Error::format(4, format!("unsupported version {version}")));
        }
        let resolution = word(8);
        if resolution == 0 {
            return Err(Error::format(8, "resolution must be >= 1"));
        }
        let channels = word(12);
        if channels == 0 {
            return Err(Error::format(12, "channel count must be >= 1"));
        }
        let dtype = match b[16] {
            0 => Dtype::F32,
            1 => Dtype::U8,
            other => return Err(Error::format(16, format!("unknown dtype {other}"))),
        };
        if let Some(i) = (17..20).find(|i| b[*i] != 0) {
            return Err(Error::format(i as u64, "reserved bytes must be zero"));
        }
        let header = Self {
            resolution,
            channels,
            dtype,
        };
        header.payload_bytes()?;
        Ok(header)
    }

    pub fn values(&self) -> Result<u64> {
        (self.resolution as u64)
            .checked_pow(3)
            .and_then(|v| v.checked_mul(self.channels as u64))
            .filter(|v| usize::try_from(*v).is_ok())
            .ok_or_else(|| Error::format(8, "declared payload size overflows"))
    }

    pub fn payload_bytes(&self) -> Result<u64> {
        self.values()?
            .checked_mul(self.dtype.size())
            .ok_or_else(|| Error::format(8, "declared payload size overflows"))
    }

    fn slab_values(&self) -> usize {
        (self.resolution as usize).pow(2) * self.channels as usize
    }
}

fn header_for(resolution: usize, channels: usize, dtype: Dtype) -> Result<VxgHeader> {
    let narrow = |v: usize, what: &str| {
        u32::try_from(v)
            .map_err(|_| Error::Dimension(format!("{what} {v} does not fit the header")))
    };
    Ok(VxgHeader {
        resolution: narrow(resolution, "resolution")?,
        channels: narrow(channels, "channel count")?,
        dtype,
    })
}

fn read_header(r: &mut impl Read) -> Result<VxgHeader> {
    let mut b = [0u8; HEADER_LEN as usize];
    read_exact_at(r, &mut b, 0, "header")?;
    VxgHeader::decode(&b)
}

/// Compares the declared payload with the actual file size before any
/// payload allocation happens.
fn check_file_len(path: &Path, header: &VxgHeader) -> Result<()> {
    let actual = std::fs::metadata(path)?.len();
    let expected = HEADER_LEN + header.payload_bytes()?;
    if actual < expected {
        return Err(Error::format(
            actual,
            format!("truncated payload: expected {expected} bytes in total, file has {actual}"),
        ));
    }
    if actual > expected {
        return Err(Error::format(
            expected,
            format!(
                "unexpected trailing bytes: expected {expected} bytes in total, file has {actual}"
            ),
        ));
    }
    Ok(())
}

fn decode_values(header: &VxgHeader, bytes: &[u8]) -> Vec<f32> {
    match header.dtype {
        Dtype::F32 => f32s_from_le(bytes),
        Dtype::U8 => bytes.iter().map(|b| *b as f32).collect(),
    }
}

/// Reads a grid from any stream. `u8` payloads are widened to `f32`.
pub fn read_grid_from(r: &mut impl Read) -> Result<VoxelGrid> {
    let header = read_header(r)?;
    let bytes = read_payload(r, header.payload_bytes()?, HEADER_LEN, "payload")?;
    expect_eof(r, HEADER_LEN + bytes.len() as u64)?;
    VoxelGrid::from_data(
        header.resolution as usize,
        header.channels as usize,
        decode_values(&header, &bytes),
    )
}

pub fn read_grid(path: impl AsRef<Path>) -> Result<VoxelGrid> {
    let path = path.as_ref();
    let mut r = BufReader::new(File::open(path)?);
    let header = read_header(&mut r)?;
    check_file_len(path, &header)?;
    let mut bytes = vec![0u8; header.payload_bytes()? as usize];
    read_exact_at(&mut r, &mut bytes, HEADER_LEN, "payload")?;
    VoxelGrid::from_data(
        header.resolution as usize,
        header.channels as usize,
        decode_values(&header, &bytes),
    )
}

pub fn write_grid_to(grid: &VoxelGrid, w: &mut impl Write) -> Result<()> {
    let header = header_for(grid.resolution(), grid.channels(), Dtype::F32)?;
    w.write_all(&header.encode())?;
    let mut buf = Vec::new();
    for slab in grid.data().chunks(grid.slab_len()) {
        buf.clear();
        f32s_to_le(slab, &mut buf);
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn write_grid(grid: &VoxelGrid, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_grid_to(grid, &mut w)?;
    w.flush()?;
    Ok(())
}

fn mask_from(header: &VxgHeader, bytes: &[u8]) -> Result<Mask3D> {
    if header.channels != 1 {
        return Err(Error::format(
            12,
            format!("masks have 1 channel, header says {}", header.channels),
        ));
    }
    let bits = match header.dtype {
        Dtype::U8 => bytes.iter().map(|b| *b != 0).collect(),
        Dtype::F32 => f32s_from_le(bytes).into_iter().map(|v| v != 0.0).collect(),
    };
    Mask3D::from_bits(header.resolution as usize, bits)
}

/// Reads a mask; any nonzero value is set.
pub fn read_mask_from(r: &mut impl Read) -> Result<Mask3D> {
    let header = read_header(r)?;
    let bytes = read_payload(r, header.payload_bytes()?, HEADER_LEN, "payload")?;
    expect_eof(r, HEADER_LEN + bytes.len() as u64)?;
    mask_from(&header, &bytes)
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<Mask3D> {
    let path = path.as_ref();
    let mut r = BufReader::new(File::open(path)?);
    let header = read_header(&mut r)?;
    check_file_len(path, &header)?;
    let mut bytes = vec![0u8; header.payload_bytes()? as usize];
    read_exact_at(&mut r, &mut bytes, HEADER_LEN, "payload")?;
    mask_from(&header, &bytes)
}

pub fn write_mask_to(mask: &Mask3D, w: &mut impl Write) -> Result<()> {
    let header = header_for(mask.resolution(), 1, Dtype::U8)?;
    w.write_all(&header.encode())?;
    let bytes: Vec<u8> = mask.bits().iter().map(|b| *b as u8).collect();
    w.write_all(&bytes)?;
    Ok(())
}

pub fn write_mask(mask: &Mask3D, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_mask_to(mask, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Reads an `f32` grid file one z-slab at a time.
pub struct SlabReader {
    header: VxgHeader,
    reader: BufReader<File>,
    next_z: usize,
    bytes: Vec<u8>,
}

impl SlabReader {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = BufReader::new(File::open(path)?);
        let header = read_header(&mut reader)?;
        if header.dtype != Dtype::F32 {
            return Err(Error::format(16, "slab reading needs an f32 payload"));
        }
        check_file_len(path, &header)?;
        Ok(Self {
            header,
            reader,
            next_z: 0,
            bytes: Vec::new(),
        })
    }

    pub fn header(&self) -> &VxgHeader {
        &self.header
    }

    pub fn resolution(&self) -> usize {
        self.header.resolution as usize
    }

    pub fn channels(&self) -> usize {
        self.header.channels as usize
    }

    pub fn slab_len(&self) -> usize {
        self.header.slab_values()
    }

    /// Fills `out` with the next slab and returns its z index, or `None`
    /// after the last one.
    pub fn read_slab(&mut self, out: &mut [f32]) -> Result<Option<usize>> {
        if self.next_z == self.resolution() {
            return Ok(None);
        }
        if out.len() != self.slab_len() {
            return Err(Error::Dimension(format!(
                "slab buffer holds {} values, slab has {}",
                out.len(),
                self.slab_len()
            )));
        }
        self.bytes.resize(out.len() * 4, 0);
        let offset = HEADER_LEN + (self.next_z * self.bytes.len()) as u64;
        read_exact_at(&mut self.reader, &mut self.bytes, offset, "slab")?;
        for (o, c) in out.iter_mut().zip(self.bytes.chunks_exact(4)) {
            *o = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
        }
        if let Some(v) = out.iter().find(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite value {v} in slab {}",
                self.next_z
            )));
        }
        self.next_z += 1;
        Ok(Some(self.next_z - 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn sample_grid() -> VoxelGrid {
        VoxelGrid::from_fn(3, 2, |[x, y, z], o| {
            o[0] = (x + 3 * y + 9 * z) as f32 * 0.25;
            o[1] = -1.5;
        })
        .unwrap()
    }

    #[test]
    fn header_layout() {
        let h = VxgHeader {
            resolution: 8,
            channels: 4,
            dtype: Dtype::U8,
        };
        assert_eq!(
            h.encode(),
            [b'V', b'X', b'G', b'F', 1, 0, 0, 0, 8, 0, 0, 0, 4, 0, 0, 0, 1, 0, 0, 0]
        );
        assert_eq!(VxgHeader::decode(&h.encode()).unwrap(), h);
    }

    #[test]
    fn grid_roundtrip_in_memory() {
        let g = sample_grid();
        let mut bytes = Vec::new();
        write_grid_to(&g, &mut bytes).unwrap();
        assert_eq!(bytes.len() as u64, HEADER_LEN + 27 * 2 * 4);
        assert_eq!(read_grid_from(&mut Cursor::new(&bytes)).unwrap(), g);
    }

    #[test]
    fn header_errors_carry_offsets() {
        let mut bytes = Vec::new();
        write_grid_to(&sample_grid(), &mut bytes).unwrap();
        let cases: [(usize, u8, u64); 5] =
            [(0, b'X', 0), (4, 2, 4), (16, 7, 16), (18, 1, 18), (8, 0, 8)];
        for (at, value, offset) in cases {
            let mut bad = bytes.clone();
            bad[at] = value;
            match read_grid_from(&mut Cursor::new(&bad)) {
                Err(Error::Format { offset: o, .. }) => assert_eq!(o, offset, "byte {at}"),
                other => panic!("byte {at}: {other:?}"),
            }
        }
    }

    #[test]
    fn truncation_and_trailing_bytes() {
        let mut bytes = Vec::new();
        write_grid_to(&sample_grid(), &mut bytes).unwrap();
        let short = &bytes[..bytes.len() - 3];
        let err = read_grid_from(&mut Cursor::new(short)).unwrap_err();
        assert!(
            err.to_string().contains("expected 216 bytes, got 213"),
            "{err}"
        );
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(
            read_grid_from(&mut Cursor::new(&long)),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn u8_mask_payload() {
        let mask = Mask3D::from_fn(4, |[x, y, z]| (x + y + z) % 3 == 0);
        let mut bytes = Vec::new();
        write_mask_to(&mask, &mut bytes).unwrap();
        assert_eq!(bytes[12], 1);
        assert_eq!(bytes[16], 1);
        let back = read_mask_from(&mut Cursor::new(&bytes)).unwrap();
        assert_eq!(back, mask);
        // Nonzero values other than 1 also count as set.
        bytes[HEADER_LEN as usize] = 200;
        assert!(read_mask_from(&mut Cursor::new(&bytes))
            .unwrap()
            .get(0, 0, 0));
    }

    #[test]
    fn file_paths_and_slabs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.vxg");
        let g = sample_grid();
        write_grid(&g, &path).unwrap();
        assert_eq!(read_grid(&path).unwrap(), g);
        let mut slabs = SlabReader::open(&path).unwrap();
        let mut buf = vec![0.0; slabs.slab_len()];
        let mut z = 0;
        while let Some(i) = slabs.read_slab(&mut buf).unwrap() {
            assert_eq!(i, z);
            assert_eq!(
                &buf[..],
                &g.data()[z * g.slab_len()..(z + 1) * g.slab_len()]
            );
            z += 1;
        }
        assert_eq!(z, 3);
    }

    #[test]
    fn hostile_sizes_rejected_before_allocation() {
        let h = VxgHeader {
            resolution: u32::MAX,
            channels: u32::MAX,
            dtype: Dtype::F32,
        };
        assert!(matches!(
            VxgHeader::decode(&h.encode()),
            Err(Error::Format { offset: 8, .. })
        ));
        let big = VxgHeader {
            resolution: 2048,
            channels: 64,
            dtype: Dtype::F32,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("big.vxg");
        std::fs::write(&path, big.encode()).unwrap();
        assert!(matches!(
            read_grid(&path),
            Err(Error::Format { offset: 20, .. })
        ));
    }
}
