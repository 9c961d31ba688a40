//! THM1 raster files.
//!
//! ```text
//! offset  size  field
//! 0       4     b"THM1"
//! 4       4     width     u32 LE
//! 8       4     height    u32 LE
//! 12      4     channels  u32 LE
//! 16      4*N   f32 LE values, channel-major then row-major, N = W*H*C
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::{put_f32s, put_u32, Reader};
use crate::error::Result;
use crate::raster::Raster;

pub const THM1_MAGIC: &[u8; 4] = b"THM1";

pub fn encode_thm1(r: &Raster) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(16 + 4 * r.data().len());
    out.extend_from_slice(THM1_MAGIC);
    put_u32(&mut out, r.width())?;
    put_u32(&mut out, r.height())?;
    put_u32(&mut out, r.channels())?;
    put_f32s(&mut out, r.data());
    Ok(out)
}

pub fn decode_thm1(bytes: &[u8]) -> Result<Raster> {
    let mut rd = Reader::new(bytes, "THM1");
    rd.magic(THM1_MAGIC)?;
    let (w, h, c) = (rd.u32()? as usize, rd.u32()? as usize, rd.u32()? as usize);
    let n = w
        .checked_mul(h)
        .and_then(|v| v.checked_mul(c))
        .ok_or_else(|| rd.err("dimensions overflow"))?;
    let data = rd.f32s(n)?;
    rd.finish()?;
    Raster::from_vec(w, h, c, data)
}

pub fn write_thm1<W: Write>(r: &Raster, mut w: W) -> Result<()> {
    w.write_all(&encode_thm1(r)?)?;
    Ok(())
}

pub fn read_thm1<R: Read>(mut r: R) -> Result<Raster> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode_thm1(&bytes)
}

pub fn save_thm1(path: impl AsRef<Path>, r: &Raster) -> Result<()> {
    std::fs::write(path, encode_thm1(r)?)?;
    Ok(())
}

pub fn load_thm1(path: impl AsRef<Path>) -> Result<Raster> {
    decode_thm1(&std::fs::read(path)?)
}
