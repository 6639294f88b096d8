//! Checkpoint layout (little-endian):
//!
//! ```text
//! "DFNC" | version u16 | config_hash u64 | seed u64 | iter u64
//! 6 × (len u64 | f32*)   gen, disc, gen_m, gen_v, disc_m, disc_v
//! rng seed [u8; 32] | rng stream u64 | rng word_pos u128
//! ema flag u8 | ema f64 | epsilon flag u8 | epsilon f64 | lambda_p f64
//! crc32 u32 over everything before it
//! ```

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{GanError, TrainState};
use crate::tensorfile::write_atomic;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"DFNC";
pub const CHECKPOINT_VERSION: u16 = 1;

pub(crate) fn to_bytes(s: &TrainState) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&s.config_hash.to_le_bytes());
    out.extend_from_slice(&s.seed.to_le_bytes());
    out.extend_from_slice(&s.iter.to_le_bytes());
    for blob in [&s.gen_params, &s.disc_params, &s.gen_m, &s.gen_v, &s.disc_m, &s.disc_v] {
        out.extend_from_slice(&(blob.len() as u64).to_le_bytes());
        for v in blob.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.extend_from_slice(&s.rng.get_seed());
    out.extend_from_slice(&s.rng.get_stream().to_le_bytes());
    out.extend_from_slice(&s.rng.get_word_pos().to_le_bytes());
    for opt in [s.dfn_real_ema, s.epsilon] {
        out.push(opt.is_some() as u8);
        out.extend_from_slice(&opt.unwrap_or(0.0).to_le_bytes());
    }
    out.extend_from_slice(&s.lambda_p.to_le_bytes());
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], GanError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| GanError::Corrupt("unexpected end of data".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], GanError> {
        Ok(self.take(N)?.try_into().expect("slice length"))
    }

    fn u64(&mut self) -> Result<u64, GanError> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64, GanError> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    fn blob(&mut self) -> Result<Vec<f32>, GanError> {
        let len = usize::try_from(self.u64()?).map_err(|_| GanError::Corrupt("blob length".into()))?;
        let bytes = self.take(len.checked_mul(4).ok_or_else(|| GanError::Corrupt("blob length".into()))?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("chunk length")))
            .collect())
    }

    fn optional(&mut self) -> Result<Option<f64>, GanError> {
        let flag = self.take(1)?[0];
        let v = self.f64()?;
        match flag {
            0 => Ok(None),
            1 => Ok(Some(v)),
            f => Err(GanError::Corrupt(format!("option flag {f}"))),
        }
    }
}

pub(crate) fn from_bytes(bytes: &[u8]) -> Result<TrainState, GanError> {
    if bytes.len() < 4 || &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(GanError::BadMagic);
    }
    if bytes.len() < 6 {
        return Err(GanError::Checksum { stored: 0, computed: 0 });
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != CHECKPOINT_VERSION {
        return Err(GanError::VersionMismatch {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    if bytes.len() < 10 {
        return Err(GanError::Checksum { stored: 0, computed: 0 });
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(GanError::Checksum { stored, computed });
    }

    let mut c = Cursor { buf: body, pos: 6 };
    let config_hash = c.u64()?;
    let seed = c.u64()?;
    let iter = c.u64()?;
    let gen_params = c.blob()?;
    let disc_params = c.blob()?;
    let gen_m = c.blob()?;
    let gen_v = c.blob()?;
    let disc_m = c.blob()?;
    let disc_v = c.blob()?;
    if gen_m.len() != gen_params.len()
        || gen_v.len() != gen_params.len()
        || disc_m.len() != disc_params.len()
        || disc_v.len() != disc_params.len()
    {
        return Err(GanError::Corrupt("moment lengths differ from parameters".into()));
    }
    let mut rng = ChaCha8Rng::from_seed(c.array()?);
    rng.set_stream(c.u64()?);
    rng.set_word_pos(u128::from_le_bytes(c.array()?));
    let dfn_real_ema = c.optional()?;
    let epsilon = c.optional()?;
    let lambda_p = c.f64()?;
    if c.pos != body.len() {
        return Err(GanError::Corrupt("trailing bytes".into()));
    }
    Ok(TrainState {
        gen_params,
        disc_params,
        gen_m,
        gen_v,
        disc_m,
        disc_v,
        iter,
        rng,
        dfn_real_ema,
        epsilon,
        lambda_p,
        seed,
        config_hash,
    })
}

pub fn save_checkpoint(state: &TrainState, path: impl AsRef<Path>) -> Result<(), GanError> {
    write_atomic(path.as_ref(), &to_bytes(state))?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<TrainState, GanError> {
    from_bytes(&std::fs::read(path)?)
}
