//! Binary file formats. All integers are little-endian.
//!
//! ```text
//! corpus  BBCV  version u8, D u64, n u64
//!               rows: label i8, count u32, count x u32 index (sorted)
//! sketch  BBMH  version u8, scheme u8, b u8, reserved u8, k u32, D u64,
//!               seed u64, count u64
//!               records: label i8, flags u8, ceil(k*b/8) code bytes
//! minima  (.min64 sibling of a sketch file) k x u64 per record, no header
//! model   BBLM  dim u64, loss u8, averaged u8, dim x f64 w [, dim x f64 w_avg]
//! ```
//!
//! Writers that do not know the record count up front write a zero and patch
//! it in `finish`, so they need a seekable sink.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use bbmh_core::hashfamilies::FamilyHeader;
use bbmh_core::learners::{LinearModel, Loss};
use bbmh_core::sketch::{packed_len, PackedCodes, Sketch, SketchHeader, FLAG_EMPTY};
use bbmh_core::{FeatureSet, Scheme};

use crate::error::{Error, Result};

pub const CORPUS_MAGIC: &[u8; 4] = b"BBCV";
pub const SKETCH_MAGIC: &[u8; 4] = b"BBMH";
pub const MODEL_MAGIC: &[u8; 4] = b"BBLM";
pub const FORMAT_VERSION: u8 = 1;

/// Bytes before the first sketch record.
pub const SKETCH_HEADER_LEN: u64 = 36;
const SKETCH_COUNT_OFFSET: u64 = 28;
pub const CORPUS_HEADER_LEN: u64 = 21;
const CORPUS_COUNT_OFFSET: u64 = 13;

fn read_array<const N: usize, R: Read>(r: &mut R) -> io::Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_u8<R: Read>(r: &mut R) -> io::Result<u8> {
    Ok(read_array::<1, _>(r)?[0])
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    Ok(u32::from_le_bytes(read_array(r)?))
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    Ok(u64::from_le_bytes(read_array(r)?))
}

/// Reads exactly `buf.len()` bytes, or nothing at a clean end of input.
/// Returns false at end of input and an error on a partial read.
fn read_record<R: Read>(r: &mut R, buf: &mut [u8]) -> io::Result<bool> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) if filled == 0 => return Ok(false),
            Ok(0) => return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "truncated record")),
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(true)
}

fn check_magic<R: Read>(r: &mut R, magic: &[u8; 4], file: &'static str) -> Result<()> {
    let found: [u8; 4] = read_array(r)?;
    if &found != magic {
        return Err(Error::format(file, format!("bad magic {found:?}")));
    }
    Ok(())
}

/// Reads the first four bytes of `path`.
pub fn sniff_magic(path: &Path) -> Result<Option<[u8; 4]>> {
    let mut file = File::open(path)?;
    let mut buf = [0u8; 4];
    Ok(read_record(&mut file, &mut buf).ok().filter(|&ok| ok).map(|_| buf))
}

// ---- corpus ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusHeader {
    pub dim: u64,
    pub n: u64,
}

pub struct CorpusWriter<W: Write + Seek> {
    out: W,
    dim: u64,
    n: u64,
}

impl CorpusWriter<BufWriter<File>> {
    pub fn create(path: &Path, dim: u64) -> Result<Self> {
        CorpusWriter::new(BufWriter::new(File::create(path)?), dim)
    }
}

impl<W: Write + Seek> CorpusWriter<W> {
    pub fn new(mut out: W, dim: u64) -> Result<Self> {
        out.write_all(CORPUS_MAGIC)?;
        out.write_all(&[FORMAT_VERSION])?;
        out.write_all(&dim.to_le_bytes())?;
        out.write_all(&0u64.to_le_bytes())?;
        Ok(CorpusWriter { out, dim, n: 0 })
    }

    pub fn write(&mut self, indices: &[u32], label: i8) -> Result<()> {
        if let Some(&last) = indices.last() {
            if last as u64 >= self.dim {
                return Err(Error::from(bbmh_core::Error::DimensionExceeded { index: last as u64, dim: self.dim })
                    .at_record(self.n));
            }
        }
        let count = u32::try_from(indices.len()).map_err(|_| Error::format("corpus", "row too long"))?;
        self.out.write_all(&[label as u8])?;
        self.out.write_all(&count.to_le_bytes())?;
        let mut bytes = Vec::with_capacity(indices.len() * 4);
        for &i in indices {
            bytes.extend_from_slice(&i.to_le_bytes());
        }
        self.out.write_all(&bytes)?;
        self.n += 1;
        Ok(())
    }

    pub fn write_set(&mut self, set: &FeatureSet) -> Result<()> {
        self.write(set.indices(), set.label())
    }

    /// Patches the record count and flushes; returns the sink.
    pub fn finish(mut self) -> Result<W> {
        self.out.seek(SeekFrom::Start(CORPUS_COUNT_OFFSET))?;
        self.out.write_all(&self.n.to_le_bytes())?;
        self.out.seek(SeekFrom::End(0))?;
        self.out.flush()?;
        Ok(self.out)
    }
}

pub struct CorpusReader<R> {
    input: R,
    header: CorpusHeader,
    read: u64,
    bytes: Vec<u8>,
}

impl CorpusReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self> {
        CorpusReader::new(BufReader::with_capacity(1 << 20, File::open(path)?))
    }
}

impl<R: Read> CorpusReader<R> {
    pub fn new(mut input: R) -> Result<Self> {
        check_magic(&mut input, CORPUS_MAGIC, "corpus")?;
        let version = read_u8(&mut input)?;
        if version != FORMAT_VERSION {
            return Err(Error::format("corpus", format!("unsupported version {version}")));
        }
        let dim = read_u64(&mut input)?;
        let n = read_u64(&mut input)?;
        Ok(CorpusReader { input, header: CorpusHeader { dim, n }, read: 0, bytes: Vec::new() })
    }

    pub fn header(&self) -> CorpusHeader {
        self.header
    }

    /// Reads the next row into `indices`; returns its label, or `None` after
    /// the last row.
    pub fn next_into(&mut self, indices: &mut Vec<u32>) -> Result<Option<i8>> {
        if self.read == self.header.n {
            return Ok(None);
        }
        let record = self.read;
        let wrap = |e: Error| e.at_record(record);
        let head: [u8; 5] = read_array(&mut self.input).map_err(|e| wrap(e.into()))?;
        let label = head[0] as i8;
        let count = u32::from_le_bytes([head[1], head[2], head[3], head[4]]) as usize;
        self.bytes.resize(count * 4, 0);
        self.input.read_exact(&mut self.bytes).map_err(|e| wrap(e.into()))?;
        indices.clear();
        indices.extend(self.bytes.chunks_exact(4).map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]])));
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(wrap(Error::format("corpus", "indices not strictly increasing")));
        }
        if indices.last().is_some_and(|&i| i as u64 >= self.header.dim) {
            return Err(wrap(Error::format("corpus", "index not below D")));
        }
        self.read += 1;
        Ok(Some(label))
    }

    pub fn next_set(&mut self) -> Result<Option<FeatureSet>> {
        let mut indices = Vec::new();
        Ok(self.next_into(&mut indices)?.map(|label| FeatureSet::new_unchecked(indices, label)))
    }

    pub fn sets(self) -> CorpusSets<R> {
        CorpusSets { reader: self }
    }
}

pub struct CorpusSets<R> {
    reader: CorpusReader<R>,
}

impl<R: Read> Iterator for CorpusSets<R> {
    type Item = Result<FeatureSet>;

    fn next(&mut self) -> Option<Self::Item> {
        self.reader.next_set().transpose()
    }
}

/// Writes `sets` as a corpus file.
pub fn write_corpus(path: &Path, dim: u64, sets: &[FeatureSet]) -> Result<()> {
    let mut w = CorpusWriter::create(path, dim)?;
    for set in sets {
        w.write_set(set)?;
    }
    w.finish()?;
    Ok(())
}

pub fn read_corpus(path: &Path) -> Result<(CorpusHeader, Vec<FeatureSet>)> {
    let reader = CorpusReader::open(path)?;
    let header = reader.header();
    let sets = reader.sets().collect::<Result<Vec<_>>>()?;
    Ok((header, sets))
}

// ---- sketches ----

/// Path of the `.min64` file accompanying a sketch file.
pub fn minima_path(sketch: &Path) -> PathBuf {
    let mut os = sketch.as_os_str().to_owned();
    os.push(".min64");
    PathBuf::from(os)
}

fn write_sketch_header<W: Write>(out: &mut W, header: &SketchHeader, count: u64) -> io::Result<()> {
    let f = &header.family;
    out.write_all(SKETCH_MAGIC)?;
    out.write_all(&[FORMAT_VERSION, f.scheme.tag(), header.b, 0])?;
    out.write_all(&f.k.to_le_bytes())?;
    out.write_all(&f.dim.to_le_bytes())?;
    out.write_all(&f.seed.to_le_bytes())?;
    out.write_all(&count.to_le_bytes())
}

/// One sketch record as stored on disk.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RawRecord {
    pub label: i8,
    pub flags: u8,
    pub codes: Vec<u8>,
}

impl RawRecord {
    pub fn is_empty_set(&self) -> bool {
        self.flags & FLAG_EMPTY != 0
    }
}

pub struct SketchWriter<W: Write + Seek> {
    out: W,
    minima: Option<BufWriter<File>>,
    header: SketchHeader,
    count: u64,
}

impl SketchWriter<BufWriter<File>> {
    /// Creates `path`, and its `.min64` sibling when `with_minima` is set.
    pub fn create(path: &Path, header: SketchHeader, with_minima: bool) -> Result<Self> {
        let out = BufWriter::with_capacity(1 << 20, File::create(path)?);
        let mut w = SketchWriter::new(out, header)?;
        if with_minima {
            w.minima = Some(BufWriter::new(File::create(minima_path(path))?));
        }
        Ok(w)
    }
}

impl<W: Write + Seek> SketchWriter<W> {
    pub fn new(mut out: W, header: SketchHeader) -> Result<Self> {
        write_sketch_header(&mut out, &header, 0)?;
        Ok(SketchWriter { out, minima: None, header, count: 0 })
    }

    pub fn header(&self) -> &SketchHeader {
        &self.header
    }

    pub fn wants_minima(&self) -> bool {
        self.minima.is_some()
    }

    /// Appends a record given its packed codes and, if the writer keeps
    /// minima, its full minima.
    pub fn write_raw(&mut self, label: i8, flags: u8, codes: &[u8], minima: Option<&[u64]>) -> Result<()> {
        if codes.len() != self.header.code_bytes() {
            return Err(Error::format("sketch", "code length does not match the header").at_record(self.count));
        }
        self.out.write_all(&[label as u8, flags])?;
        self.out.write_all(codes)?;
        if let Some(w) = &mut self.minima {
            let minima = minima.ok_or_else(|| Error::from(bbmh_core::Error::MissingMinima).at_record(self.count))?;
            let mut bytes = Vec::with_capacity(minima.len() * 8);
            for m in minima {
                bytes.extend_from_slice(&m.to_le_bytes());
            }
            w.write_all(&bytes)?;
        }
        self.count += 1;
        Ok(())
    }

    pub fn write(&mut self, sketch: &Sketch) -> Result<()> {
        if sketch.header() != &self.header {
            return Err(Error::from(bbmh_core::Error::HeaderMismatch).at_record(self.count));
        }
        self.write_raw(sketch.label(), sketch.flags(), sketch.codes().as_bytes(), sketch.minima())
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.seek(SeekFrom::Start(SKETCH_COUNT_OFFSET))?;
        self.out.write_all(&self.count.to_le_bytes())?;
        self.out.seek(SeekFrom::End(0))?;
        self.out.flush()?;
        if let Some(mut m) = self.minima.take() {
            m.flush()?;
        }
        Ok(self.out)
    }
}

/// Parses a sketch file header.
pub fn read_sketch_header<R: Read>(input: &mut R) -> Result<(SketchHeader, u64)> {
    check_magic(input, SKETCH_MAGIC, "sketch")?;
    let [version, tag, b, _reserved] = read_array(input)?;
    if version != FORMAT_VERSION {
        return Err(Error::format("sketch", format!("unsupported version {version}")));
    }
    let scheme = Scheme::from_tag(tag).ok_or_else(|| Error::format("sketch", format!("unknown scheme tag {tag}")))?;
    let k = read_u32(input)?;
    let dim = read_u64(input)?;
    let seed = read_u64(input)?;
    let count = read_u64(input)?;
    let header = SketchHeader::new(FamilyHeader::new(scheme, dim, k, seed), b)?;
    Ok((header, count))
}

pub struct SketchReader<R> {
    input: R,
    minima: Option<BufReader<File>>,
    header: SketchHeader,
    count: u64,
    read: u64,
}

impl SketchReader<BufReader<File>> {
    /// Opens a sketch file; `with_minima` also opens its `.min64` sibling.
    pub fn open(path: &Path, with_minima: bool) -> Result<Self> {
        let mut r = SketchReader::new(BufReader::with_capacity(1 << 20, File::open(path)?))?;
        if with_minima {
            let min_path = minima_path(path);
            let file = File::open(&min_path).map_err(|_| Error::from(bbmh_core::Error::MissingMinima))?;
            let expected = r.count * r.header.k() as u64 * 8;
            if file.metadata()?.len() != expected {
                return Err(Error::format("minima", format!("{} has the wrong length", min_path.display())));
            }
            r.minima = Some(BufReader::new(file));
        }
        Ok(r)
    }
}

impl<R: Read> SketchReader<R> {
    pub fn new(mut input: R) -> Result<Self> {
        let (header, count) = read_sketch_header(&mut input)?;
        Ok(SketchReader { input, minima: None, header, count, read: 0 })
    }

    pub fn header(&self) -> &SketchHeader {
        &self.header
    }

    /// Number of records declared in the header.
    pub fn len(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Reads the next record into `rec`; false after the last one.
    pub fn next_raw(&mut self, rec: &mut RawRecord) -> Result<bool> {
        let record = self.read;
        let mut head = [0u8; 2];
        let more = read_record(&mut self.input, &mut head).map_err(|e| Error::from(e).at_record(record))?;
        if !more {
            if self.read != self.count {
                return Err(Error::format(
                    "sketch",
                    format!("header declares {} records, found {}", self.count, self.read),
                ));
            }
            return Ok(false);
        }
        if self.read == self.count {
            return Err(Error::format("sketch", "trailing bytes after the declared records"));
        }
        rec.label = head[0] as i8;
        rec.flags = head[1];
        rec.codes.resize(self.header.code_bytes(), 0);
        self.input.read_exact(&mut rec.codes).map_err(|e| Error::from(e).at_record(record))?;
        self.read += 1;
        Ok(true)
    }

    pub fn next_sketch(&mut self) -> Result<Option<Sketch>> {
        let mut rec = RawRecord::default();
        if !self.next_raw(&mut rec)? {
            return Ok(None);
        }
        let record = self.read - 1;
        let codes = PackedCodes::from_bytes(rec.codes, self.header.k(), self.header.b)?;
        let mut sketch = Sketch::from_codes(self.header, codes, rec.label, rec.flags & FLAG_EMPTY != 0)?;
        if let Some(m) = &mut self.minima {
            let mut bytes = vec![0u8; self.header.k() * 8];
            m.read_exact(&mut bytes).map_err(|e| Error::from(e).at_record(record))?;
            let minima = bytes.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect();
            sketch = sketch.with_minima(minima)?;
        }
        Ok(Some(sketch))
    }
}

impl<R: Read> Iterator for SketchReader<R> {
    type Item = Result<Sketch>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_sketch().transpose()
    }
}

/// Record payload size: label, flags and packed codes.
pub fn sketch_record_len(k: usize, b: u8) -> usize {
    2 + packed_len(k, b)
}

// ---- models ----

pub fn write_model<W: Write>(out: &mut W, model: &LinearModel) -> Result<()> {
    let avg = model.averaged_weights();
    out.write_all(MODEL_MAGIC)?;
    out.write_all(&(model.dim() as u64).to_le_bytes())?;
    out.write_all(&[model.loss().tag(), avg.is_some() as u8])?;
    let mut bytes = Vec::with_capacity(model.dim() * 8);
    for block in std::iter::once(model.weights()).chain(avg) {
        bytes.clear();
        for w in block {
            bytes.extend_from_slice(&w.to_le_bytes());
        }
        out.write_all(&bytes)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_model<R: Read>(input: &mut R) -> Result<LinearModel> {
    check_magic(input, MODEL_MAGIC, "model")?;
    let dim = read_u64(input)?;
    if dim == 0 || dim > bbmh_core::learners::MAX_DIM as u64 {
        return Err(Error::format("model", format!("dimension {dim} out of range")));
    }
    let [loss, avg] = read_array(input)?;
    let loss = Loss::from_tag(loss).ok_or_else(|| Error::format("model", format!("unknown loss tag {loss}")))?;
    let mut block = || -> Result<Vec<f64>> {
        let mut bytes = vec![0u8; dim as usize * 8];
        input.read_exact(&mut bytes)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    };
    let w = block()?;
    let w_avg = match avg {
        0 => None,
        1 => Some(block()?),
        other => return Err(Error::format("model", format!("bad averaging flag {other}"))),
    };
    Ok(LinearModel::from_weights(w, w_avg, loss)?)
}

pub fn save_model(path: &Path, model: &LinearModel) -> Result<()> {
    write_model(&mut BufWriter::new(File::create(path)?), model)
}

pub fn load_model(path: &Path) -> Result<LinearModel> {
    read_model(&mut BufReader::new(File::open(path)?))
}
