//! Binary file layouts for parameters and keys.
//!
//! Every file starts with a 4-byte magic and a 1-byte version. Integers are
//! written as a big-endian u16 length followed by the minimal big-endian
//! magnitude; strings use the same u16 length prefix over UTF-8 bytes.
//!
//! ```text
//! params:  "IBTP" 01 | p | q | n | P.x | P.y | sP.x | sP.y | profile
//! key:     "IBTK" 01 | identity | d.x | d.y
//! master:  "IBTM" 01 | s
//! ```

use num_bigint::BigUint;

use super::curve::G1Point;
use super::params::{MasterKey, Profile, PublicParams};
use super::scheme::PrivateKey;
use super::IbeError;

pub const PARAMS_MAGIC: &[u8; 4] = b"IBTP";
pub const KEY_MAGIC: &[u8; 4] = b"IBTK";
pub const MASTER_MAGIC: &[u8; 4] = b"IBTM";
pub const FORMAT_VERSION: u8 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn new(magic: &[u8; 4]) -> Self {
        let mut out = magic.to_vec();
        out.push(FORMAT_VERSION);
        Writer(out)
    }

    fn bytes(&mut self, b: &[u8]) {
        self.0.extend_from_slice(&(b.len() as u16).to_be_bytes());
        self.0.extend_from_slice(b);
    }

    fn int(&mut self, v: &BigUint) {
        self.bytes(&v.to_bytes_be());
    }

    fn point(&mut self, pt: &G1Point) -> Result<(), IbeError> {
        let (x, y) = pt
            .coords()
            .ok_or_else(|| IbeError::Malformed("cannot store the point at infinity".into()))?;
        self.int(x);
        self.int(y);
        Ok(())
    }
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8], magic: &[u8; 4]) -> Result<Self, IbeError> {
        if buf.len() < 5 || &buf[..4] != magic {
            return Err(IbeError::Malformed(format!(
                "bad magic, expected {}",
                String::from_utf8_lossy(magic)
            )));
        }
        if buf[4] != FORMAT_VERSION {
            return Err(IbeError::Malformed(format!("unsupported format version {}", buf[4])));
        }
        Ok(Reader { buf: &buf[5..] })
    }

    fn bytes(&mut self) -> Result<&'a [u8], IbeError> {
        if self.buf.len() < 2 {
            return Err(IbeError::Malformed("truncated length prefix".into()));
        }
        let len = u16::from_be_bytes([self.buf[0], self.buf[1]]) as usize;
        if self.buf.len() < 2 + len {
            return Err(IbeError::Malformed("truncated field".into()));
        }
        let out = &self.buf[2..2 + len];
        self.buf = &self.buf[2 + len..];
        Ok(out)
    }

    fn int(&mut self) -> Result<BigUint, IbeError> {
        Ok(BigUint::from_bytes_be(self.bytes()?))
    }

    fn point(&mut self) -> Result<G1Point, IbeError> {
        Ok(G1Point::new(self.int()?, self.int()?))
    }

    fn finish(self) -> Result<(), IbeError> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(IbeError::Malformed("trailing bytes".into()))
        }
    }
}

pub fn encode_params(params: &PublicParams) -> Vec<u8> {
    let mut w = Writer::new(PARAMS_MAGIC);
    w.int(params.p());
    w.int(params.q());
    w.int(&BigUint::from(params.block_bits()));
    w.point(params.generator()).expect("generator is finite");
    w.point(params.public_key()).expect("sP is finite");
    w.bytes(params.profile().to_string().as_bytes());
    w.0
}

pub fn decode_params(bytes: &[u8]) -> Result<PublicParams, IbeError> {
    let mut r = Reader::new(bytes, PARAMS_MAGIC)?;
    let p = r.int()?;
    let q = r.int()?;
    let n: u32 = r
        .int()?
        .try_into()
        .map_err(|_| IbeError::Malformed("block size out of range".into()))?;
    let generator = r.point()?;
    let public_key = r.point()?;
    let profile = match r.bytes()? {
        b"toy" => Profile::Toy,
        b"demo" => Profile::Demo,
        _ => Profile::Custom,
    };
    r.finish()?;
    PublicParams::from_parts(profile, p, q, n, generator, public_key)
}

pub fn encode_private_key(key: &PrivateKey) -> Vec<u8> {
    let mut w = Writer::new(KEY_MAGIC);
    w.bytes(key.identity().as_bytes());
    w.point(key.point()).expect("private keys are finite points");
    w.0
}

pub fn decode_private_key(params: &PublicParams, bytes: &[u8]) -> Result<PrivateKey, IbeError> {
    let mut r = Reader::new(bytes, KEY_MAGIC)?;
    let identity = String::from_utf8(r.bytes()?.to_vec())
        .map_err(|_| IbeError::Malformed("identity is not UTF-8".into()))?;
    let point = r.point()?;
    r.finish()?;
    if !params.is_order_q(&point) {
        return Err(IbeError::NotOnCurve);
    }
    Ok(PrivateKey::from_parts(identity, point))
}

pub fn encode_master_key(master: &MasterKey) -> Vec<u8> {
    let mut w = Writer::new(MASTER_MAGIC);
    w.int(master.scalar());
    w.0
}

pub fn decode_master_key(params: &PublicParams, bytes: &[u8]) -> Result<MasterKey, IbeError> {
    let mut r = Reader::new(bytes, MASTER_MAGIC)?;
    let s = r.int()?;
    r.finish()?;
    let master = MasterKey::new(s, params.q())?;
    if &params.curve().mul(master.scalar(), params.generator()) != params.public_key() {
        return Err(IbeError::Malformed("master key does not match sP".into()));
    }
    Ok(master)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ibe::{extract, setup, SecurityConfig};

    #[test]
    fn params_file_roundtrip_is_bit_identical() {
        let (params, master) = setup(&SecurityConfig::demo(11)).unwrap();
        let bytes = encode_params(&params);
        assert_eq!(&bytes[..5], b"IBTP\x01");
        let back = decode_params(&bytes).unwrap();
        assert_eq!(back, params);
        assert_eq!(encode_params(&back), bytes);

        let m = decode_master_key(&params, &encode_master_key(&master)).unwrap();
        assert_eq!(m, master);

        let sk = extract(&params, &master, "node-007").unwrap();
        let back = decode_private_key(&params, &encode_private_key(&sk)).unwrap();
        assert_eq!(back, sk);
    }

    #[test]
    fn corrupt_files_rejected() {
        let (params, master) = setup(&SecurityConfig::toy(11)).unwrap();
        let mut bytes = encode_params(&params);
        bytes[0] = b'X';
        assert!(decode_params(&bytes).is_err());
        let mut bytes = encode_params(&params);
        bytes[4] = 9;
        assert!(decode_params(&bytes).is_err());
        let mut bytes = encode_params(&params);
        bytes.push(0);
        assert!(decode_params(&bytes).is_err());

        let other = MasterKey::new(
            (master.scalar() % (params.q() - 1u32)) + 1u32 + 0u32,
            params.q(),
        )
        .unwrap();
        if other != master {
            assert!(decode_master_key(&params, &encode_master_key(&other)).is_err());
        }
    }
}
