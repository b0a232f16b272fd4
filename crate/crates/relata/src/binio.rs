//! Little-endian binary readers/writers shared by the model file formats.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub(crate) struct BinWriter<W: Write> {
    w: W,
    path: String,
}

impl<W: Write> BinWriter<W> {
    pub fn new(w: W, path: &Path) -> Self {
        BinWriter {
            w,
            path: path.display().to_string(),
        }
    }

    fn io(&self, e: io::Error) -> Error {
        Error::io(self.path.clone(), e)
    }

    pub fn bytes(&mut self, b: &[u8]) -> Result<()> {
        self.w.write_all(b).map_err(|e| self.io(e))
    }

    pub fn u8(&mut self, v: u8) -> Result<()> {
        self.bytes(&[v])
    }

    pub fn u32(&mut self, v: u32) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn u64(&mut self, v: u64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn f32(&mut self, v: f32) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn f64(&mut self, v: f64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn string(&mut self, s: &str) -> Result<()> {
        self.u32(s.len() as u32)?;
        self.bytes(s.as_bytes())
    }

    /// f64 values narrowed to 32-bit floats on disk.
    pub fn f32_values(&mut self, values: &[f64]) -> Result<()> {
        for &v in values {
            self.f32(v as f32)?;
        }
        Ok(())
    }

    pub fn tensor_f64(&mut self, t: &Tensor) -> Result<()> {
        self.u32(t.rank() as u32)?;
        for &d in t.shape() {
            self.u64(d as u64)?;
        }
        for &v in t.data() {
            self.f64(v)?;
        }
        Ok(())
    }
}

pub(crate) struct BinReader<R: Read> {
    r: R,
    path: String,
}

impl<R: Read> BinReader<R> {
    pub fn new(r: R, path: &Path) -> Self {
        BinReader {
            r,
            path: path.display().to_string(),
        }
    }

    pub fn fail(&self, msg: impl Into<String>) -> Error {
        Error::file(self.path.clone(), msg)
    }

    pub fn bytes(&mut self, n: usize) -> Result<Vec<u8>> {
        let mut buf = vec![0u8; n];
        self.r.read_exact(&mut buf).map_err(|e| {
            if e.kind() == io::ErrorKind::UnexpectedEof {
                self.fail("unexpected end of file")
            } else {
                Error::io(self.path.clone(), e)
            }
        })?;
        Ok(buf)
    }

    pub fn expect_magic(&mut self, magic: &[u8]) -> Result<()> {
        let got = self.bytes(magic.len())?;
        if got != magic {
            return Err(self.fail(format!(
                "bad magic: expected {:?}",
                String::from_utf8_lossy(magic)
            )));
        }
        Ok(())
    }

    pub fn expect_version(&mut self, version: u32) -> Result<()> {
        let got = self.u32()?;
        if got != version {
            return Err(self.fail(format!(
                "unsupported format version {got} (expected {version})"
            )));
        }
        Ok(())
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        let b = self.bytes(4)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    pub fn u64(&mut self) -> Result<u64> {
        let b = self.bytes(8)?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    pub fn f32(&mut self) -> Result<f32> {
        let b = self.bytes(4)?;
        Ok(f32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    pub fn f64(&mut self) -> Result<f64> {
        let b = self.bytes(8)?;
        Ok(f64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    pub fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        if len > (1 << 30) {
            return Err(self.fail("unreasonable string length"));
        }
        String::from_utf8(self.bytes(len)?).map_err(|_| self.fail("invalid UTF-8 string"))
    }

    pub fn f32_values(&mut self, n: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.f32()? as f64);
        }
        Ok(out)
    }

    pub fn tensor_f64(&mut self) -> Result<Tensor> {
        let rank = self.u32()? as usize;
        if rank > 4 {
            return Err(self.fail("unreasonable tensor rank"));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(self.u64()? as usize);
        }
        let numel: usize = shape.iter().product();
        if numel > (1 << 31) {
            return Err(self.fail("unreasonable tensor size"));
        }
        let mut data = Vec::with_capacity(numel);
        for _ in 0..numel {
            data.push(self.f64()?);
        }
        Tensor::new(shape, data).map_err(|e| self.fail(format!("invalid tensor: {e}")))
    }

    /// Reject trailing bytes so truncated or concatenated files surface
    /// as format errors instead of silently partial models.
    pub fn expect_eof(&mut self) -> Result<()> {
        let mut buf = [0u8; 1];
        match self.r.read(&mut buf) {
            Ok(0) => Ok(()),
            Ok(_) => Err(self.fail("trailing bytes after end of data")),
            Err(e) => Err(Error::io(self.path.clone(), e)),
        }
    }
}

pub(crate) fn open_writer(path: &Path) -> Result<BinWriter<io::BufWriter<fs::File>>> {
    let f = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(BinWriter::new(io::BufWriter::new(f), path))
}

pub(crate) fn open_reader(path: &Path) -> Result<BinReader<io::BufReader<fs::File>>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(BinReader::new(io::BufReader::new(f), path))
}
