//! Canonical length-prefixed encoding.
//!
//! Every field is written as a 4-byte big-endian length followed by the
//! field bytes. Integers are 8-byte big-endian fields, tags are 1-byte
//! fields. The same encoding is used for hashing, signing and persistence.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("unexpected end of input at offset {0}")]
    Truncated(usize),
    #[error("field at offset {offset} has length {actual}, expected {expected}")]
    WrongLength {
        offset: usize,
        expected: usize,
        actual: usize,
    },
    #[error("{0} trailing bytes after last field")]
    TrailingBytes(usize),
    #[error("invalid value: {0}")]
    Invalid(&'static str),
}

#[derive(Debug, Default, Clone)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bytes(&mut self, field: &[u8]) -> &mut Self {
        let len = u32::try_from(field.len()).expect("field longer than 4 GiB");
        self.buf.extend_from_slice(&len.to_be_bytes());
        self.buf.extend_from_slice(field);
        self
    }

    pub fn u64(&mut self, value: u64) -> &mut Self {
        self.bytes(&value.to_be_bytes())
    }

    pub fn tag(&mut self, tag: u8) -> &mut Self {
        self.bytes(&[tag])
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub struct Decoder<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn is_empty(&self) -> bool {
        self.pos == self.data.len()
    }

    pub fn bytes(&mut self) -> Result<&'a [u8], DecodeError> {
        let header = self
            .data
            .get(self.pos..self.pos + 4)
            .ok_or(DecodeError::Truncated(self.pos))?;
        let len = u32::from_be_bytes(header.try_into().unwrap()) as usize;
        let start = self.pos + 4;
        let end = start
            .checked_add(len)
            .filter(|&end| end <= self.data.len())
            .ok_or(DecodeError::Truncated(start))?;
        self.pos = end;
        Ok(&self.data[start..end])
    }

    pub fn fixed<const N: usize>(&mut self) -> Result<[u8; N], DecodeError> {
        let offset = self.pos;
        let field = self.bytes()?;
        field.try_into().map_err(|_| DecodeError::WrongLength {
            offset,
            expected: N,
            actual: field.len(),
        })
    }

    pub fn u64(&mut self) -> Result<u64, DecodeError> {
        self.fixed::<8>().map(u64::from_be_bytes)
    }

    pub fn tag(&mut self) -> Result<u8, DecodeError> {
        self.fixed::<1>().map(|[t]| t)
    }

    /// Fails unless every input byte has been consumed.
    pub fn finish(self) -> Result<(), DecodeError> {
        match self.data.len() - self.pos {
            0 => Ok(()),
            n => Err(DecodeError::TrailingBytes(n)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout_is_length_prefixed_big_endian() {
        let mut enc = Encoder::new();
        enc.tag(3).u64(0x0102).bytes(b"hi");
        assert_eq!(
            enc.finish(),
            vec![
                0, 0, 0, 1, 3, //
                0, 0, 0, 8, 0, 0, 0, 0, 0, 0, 1, 2, //
                0, 0, 0, 2, b'h', b'i',
            ]
        );
    }

    #[test]
    fn rejects_truncation_and_trailing_bytes() {
        let mut dec = Decoder::new(&[0, 0, 0, 5, 1, 2]);
        assert_eq!(dec.bytes(), Err(DecodeError::Truncated(4)));

        let mut dec = Decoder::new(&[0, 0, 0, 1, 9, 7]);
        assert_eq!(dec.tag(), Ok(9));
        assert_eq!(dec.finish(), Err(DecodeError::TrailingBytes(1)));
    }

    #[test]
    fn fixed_width_mismatch() {
        let mut enc = Encoder::new();
        enc.bytes(&[1, 2, 3]);
        let data = enc.finish();
        assert!(matches!(
            Decoder::new(&data).u64(),
            Err(DecodeError::WrongLength { expected: 8, actual: 3, .. })
        ));
    }

    proptest! {
        #[test]
        fn fields_roundtrip(fields in proptest::collection::vec(proptest::collection::vec(any::<u8>(), 0..40), 0..8), n in any::<u64>()) {
            let mut enc = Encoder::new();
            enc.u64(n);
            for f in &fields {
                enc.bytes(f);
            }
            let data = enc.finish();
            let mut dec = Decoder::new(&data);
            prop_assert_eq!(dec.u64().unwrap(), n);
            for f in &fields {
                prop_assert_eq!(dec.bytes().unwrap(), f.as_slice());
            }
            prop_assert!(dec.finish().is_ok());
        }
    }
}
