//! TWT1 weight files for [`MacConfig`].
//!
//! ```text
//! b"TWT1"
//! u32 LE   n, the number of channel groups
//! n x f64 LE   group angles in radians
//! 2n + 1 tensors, in order: n group projections, n group 3x3 convs, head
//!
//! tensor:
//!   u32 LE out_channels, in_channels, kernel_h, kernel_w
//!   f32 LE weights [out][in][kh][kw]
//!   f32 LE bias [out]
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::{put_f32s, put_u32, Reader};
use crate::error::Result;
use crate::refine::{ConvWeights, MacConfig};

pub const TWT1_MAGIC: &[u8; 4] = b"TWT1";

fn put_tensor(out: &mut Vec<u8>, t: &ConvWeights) -> Result<()> {
    put_u32(out, t.out_channels)?;
    put_u32(out, t.in_channels)?;
    put_u32(out, t.kernel_size)?;
    put_u32(out, t.kernel_size)?;
    put_f32s(out, &t.weights);
    put_f32s(out, &t.bias);
    Ok(())
}

fn get_tensor(rd: &mut Reader<'_>) -> Result<ConvWeights> {
    let (o, i, kh, kw) = (rd.u32()? as usize, rd.u32()? as usize, rd.u32()? as usize, rd.u32()? as usize);
    if kh != kw {
        return Err(rd.err(format!("non-square kernel {kh}x{kw}")));
    }
    let n = o
        .checked_mul(i)
        .and_then(|v| v.checked_mul(kh * kw))
        .ok_or_else(|| rd.err("tensor size overflows"))?;
    let weights = rd.f32s(n)?;
    let bias = rd.f32s(o)?;
    ConvWeights::new(o, i, kh, weights, bias)
}

pub fn encode_twt1(cfg: &MacConfig) -> Result<Vec<u8>> {
    cfg.validate(cfg.channels())?;
    let mut out = Vec::new();
    out.extend_from_slice(TWT1_MAGIC);
    put_u32(&mut out, cfg.groups())?;
    for a in &cfg.angles {
        out.extend_from_slice(&a.to_le_bytes());
    }
    for t in cfg.projections.iter().chain(&cfg.convs).chain(std::iter::once(&cfg.head)) {
        put_tensor(&mut out, t)?;
    }
    Ok(out)
}

pub fn decode_twt1(bytes: &[u8]) -> Result<MacConfig> {
    let mut rd = Reader::new(bytes, "TWT1");
    rd.magic(TWT1_MAGIC)?;
    let n = rd.u32()? as usize;
    if n == 0 || n > 1024 {
        return Err(rd.err(format!("implausible group count {n}")));
    }
    let angles = (0..n).map(|_| rd.f64()).collect::<Result<Vec<_>>>()?;
    let projections = (0..n).map(|_| get_tensor(&mut rd)).collect::<Result<Vec<_>>>()?;
    let convs = (0..n).map(|_| get_tensor(&mut rd)).collect::<Result<Vec<_>>>()?;
    let head = get_tensor(&mut rd)?;
    rd.finish()?;
    let cfg = MacConfig {
        angles,
        projections,
        convs,
        head,
    };
    cfg.validate(cfg.channels())?;
    Ok(cfg)
}

pub fn write_twt1<W: Write>(cfg: &MacConfig, mut w: W) -> Result<()> {
    w.write_all(&encode_twt1(cfg)?)?;
    Ok(())
}

pub fn read_twt1<R: Read>(mut r: R) -> Result<MacConfig> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode_twt1(&bytes)
}

pub fn save_twt1(path: impl AsRef<Path>, cfg: &MacConfig) -> Result<()> {
    std::fs::write(path, encode_twt1(cfg)?)?;
    Ok(())
}

pub fn load_twt1(path: impl AsRef<Path>) -> Result<MacConfig> {
    decode_twt1(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refine::DEFAULT_ANGLES;

    #[test]
    fn round_trip_is_byte_exact() {
        let cfg = MacConfig::random(8, 3, &DEFAULT_ANGLES, 42).unwrap();
        let bytes = encode_twt1(&cfg).unwrap();
        let back = decode_twt1(&bytes).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(encode_twt1(&back).unwrap(), bytes);
    }

    #[test]
    fn rejects_truncation_and_bad_shapes() {
        let cfg = MacConfig::random(4, 1, &[0.0, 0.5], 1).unwrap();
        let bytes = encode_twt1(&cfg).unwrap();
        assert!(decode_twt1(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = cfg.clone();
        bad.head.in_channels = 3;
        bad.head.weights.truncate(3);
        assert!(encode_twt1(&bad).is_err());
    }
}
