//! Little-endian, length-prefixed primitives shared by the binary codecs.

use std::fmt;

/// Reason a read failed, paired with the byte offset where it happened.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireError {
    pub offset: usize,
    pub reason: String,
}

impl fmt::Display for WireError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at offset {}", self.reason, self.offset)
    }
}

#[derive(Debug, Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bytes(&mut self, raw: &[u8]) {
        self.buf.extend_from_slice(raw);
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    /// Writes a u32 length followed by the raw bytes.
    pub fn blob(&mut self, raw: &[u8]) {
        self.u32(len_u32(raw.len()));
        self.bytes(raw);
    }

    pub fn str(&mut self, s: &str) {
        self.blob(s.as_bytes());
    }

    /// Unsigned LEB128, shortest form.
    pub fn var(&mut self, v: impl Into<u64>) {
        let mut v: u64 = v.into();
        loop {
            let byte = (v & 0x7f) as u8;
            v >>= 7;
            if v == 0 {
                self.buf.push(byte);
                return;
            }
            self.buf.push(byte | 0x80);
        }
    }

    /// Varint length followed by the UTF-8 bytes.
    pub fn var_str(&mut self, s: &str) {
        self.var(s.len() as u64);
        self.bytes(s.as_bytes());
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

fn len_u32(len: usize) -> u32 {
    u32::try_from(len).expect("record longer than u32::MAX bytes")
}

/// Cursor over a byte slice. Offsets reported in errors are absolute with
/// respect to the slice the outermost reader was created from.
#[derive(Debug, Clone)]
pub struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
    base: usize,
}

impl<'a> Reader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self {
            data,
            pos: 0,
            base: 0,
        }
    }

    pub fn offset(&self) -> usize {
        self.base + self.pos
    }

    pub fn is_empty(&self) -> bool {
        self.pos >= self.data.len()
    }

    pub fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    pub fn error(&self, reason: impl Into<String>) -> WireError {
        WireError {
            offset: self.offset(),
            reason: reason.into(),
        }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.remaining() < n {
            return Err(self.error(format!(
                "truncated input: need {n} bytes, {} left",
                self.remaining()
            )));
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, WireError> {
        let raw = self.take(4)?;
        Ok(u32::from_le_bytes(raw.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64, WireError> {
        let raw = self.take(8)?;
        Ok(u64::from_le_bytes(raw.try_into().unwrap()))
    }

    pub fn blob(&mut self) -> Result<&'a [u8], WireError> {
        let len = self.u32()? as usize;
        self.take(len)
    }

    pub fn str(&mut self) -> Result<String, WireError> {
        let at = self.offset();
        let raw = self.blob()?;
        String::from_utf8(raw.to_vec()).map_err(|_| WireError {
            offset: at,
            reason: "string is not valid UTF-8".into(),
        })
    }

    /// Unsigned LEB128. Overlong forms are rejected so that every value has
    /// exactly one encoding.
    pub fn var(&mut self) -> Result<u64, WireError> {
        let at = self.offset();
        let mut v: u64 = 0;
        for i in 0..10 {
            let byte = self.u8()?;
            let bits = (byte & 0x7f) as u64;
            if i == 9 && bits > 1 {
                break;
            }
            v |= bits << (7 * i);
            if byte & 0x80 == 0 {
                if byte == 0 && i > 0 {
                    return Err(WireError {
                        offset: at,
                        reason: "overlong varint".into(),
                    });
                }
                return Ok(v);
            }
        }
        Err(WireError {
            offset: at,
            reason: "varint overflows u64".into(),
        })
    }

    pub fn var_u32(&mut self) -> Result<u32, WireError> {
        let at = self.offset();
        let v = self.var()?;
        u32::try_from(v).map_err(|_| WireError {
            offset: at,
            reason: format!("value {v} exceeds u32"),
        })
    }

    pub fn var_str(&mut self) -> Result<String, WireError> {
        let at = self.offset();
        let len = self.var_u32()? as usize;
        let raw = self.take(len)?;
        String::from_utf8(raw.to_vec()).map_err(|_| WireError {
            offset: at,
            reason: "string is not valid UTF-8".into(),
        })
    }

    pub fn expect_end(&self) -> Result<(), WireError> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(self.error(format!("{} trailing bytes", self.remaining())))
        }
    }
}
