//! Opening inputs by content: corpus files start with `BBCV`, sketch files
//! with `BBMH`, anything else is read as LibSVM text.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use bbmh_core::expansion::{expand_codes_into, expanded_dim};
use bbmh_core::learners::OwnedRow;
use bbmh_core::sketch::unpack_code;
use bbmh_core::FeatureSet;

use crate::error::{Error, Result};
use crate::formats::{sniff_magic, CorpusReader, RawRecord, SketchReader, CORPUS_MAGIC, SKETCH_MAGIC};
use crate::libsvm::{LibsvmOptions, LibsvmReader};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    Libsvm,
    Corpus,
    Sketch,
}

pub fn detect(path: &Path) -> Result<InputKind> {
    Ok(match sniff_magic(path)? {
        Some(m) if &m == CORPUS_MAGIC => InputKind::Corpus,
        Some(m) if &m == SKETCH_MAGIC => InputKind::Sketch,
        _ => InputKind::Libsvm,
    })
}

fn open_text(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::with_capacity(1 << 20, File::open(path)?))
}

pub type SetIter = Box<dyn Iterator<Item = Result<FeatureSet>>>;

/// Feature sets from a corpus or LibSVM file, plus the corpus `D` if known.
pub fn open_sets(path: &Path, opts: LibsvmOptions) -> Result<(Option<u64>, SetIter)> {
    match detect(path)? {
        InputKind::Corpus => {
            let r = CorpusReader::open(path)?;
            Ok((Some(r.header().dim), Box::new(r.sets())))
        }
        InputKind::Libsvm => Ok((None, Box::new(LibsvmReader::new(open_text(path)?).sets(opts)))),
        InputKind::Sketch => {
            Err(Error::Usage(format!("{} is a sketch file, expected feature vectors", path.display())))
        }
    }
}

pub fn read_sets(path: &Path, opts: LibsvmOptions) -> Result<(Option<u64>, Vec<FeatureSet>)> {
    let (dim, sets) = open_sets(path, opts)?;
    Ok((dim, sets.collect::<Result<_>>()?))
}

/// Learner rows streamed from a file, re-openable once per epoch.
#[derive(Debug, Clone)]
pub struct RowSource {
    path: PathBuf,
    kind: InputKind,
    dim: usize,
    n: u64,
    zero_one_labels: bool,
}

enum RowStream {
    Libsvm(LibsvmReader<BufReader<File>>, bool),
    Corpus(CorpusReader<BufReader<File>>),
    Sketch(SketchReader<BufReader<File>>, RawRecord),
}

/// Sequential reader over a [`RowSource`].
pub struct RowReader {
    stream: RowStream,
    dim: usize,
}

impl RowSource {
    /// Inspects `path`. LibSVM text needs one scan to count rows and find the
    /// largest index unless `dim` is given; `dim` must cover every index.
    pub fn open(path: &Path, dim: Option<usize>, zero_one_labels: bool) -> Result<RowSource> {
        let kind = detect(path)?;
        let (found_dim, n) = match kind {
            InputKind::Sketch => {
                let r = SketchReader::open(path, false)?;
                let h = r.header();
                (expanded_dim(h.k(), h.b)? as usize, r.len())
            }
            InputKind::Corpus => {
                let h = CorpusReader::open(path)?.header();
                (h.dim as usize, h.n)
            }
            InputKind::Libsvm => {
                let mut reader = LibsvmReader::new(open_text(path)?);
                let (mut n, mut max) = (0u64, 0usize);
                while let Some(row) = reader.next_row(zero_one_labels)? {
                    n += 1;
                    if let Some(&last) = row.indices.last() {
                        max = max.max(last as usize + 1);
                    }
                }
                if let Some(d) = dim {
                    if max > d {
                        return Err(bbmh_core::Error::DimensionExceeded { index: max as u64 - 1, dim: d as u64 }.into());
                    }
                }
                (max.max(1), n)
            }
        };
        let dim = match (kind, dim) {
            (InputKind::Libsvm, Some(d)) => d,
            (_, Some(d)) if d != found_dim => {
                return Err(Error::Usage(format!("{} has dimension {found_dim}, not {d}", path.display())))
            }
            _ => found_dim,
        };
        Ok(RowSource { path: path.to_owned(), kind, dim, n, zero_one_labels })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn kind(&self) -> InputKind {
        self.kind
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn reader(&self) -> Result<RowReader> {
        let stream = match self.kind {
            InputKind::Libsvm => RowStream::Libsvm(LibsvmReader::new(open_text(&self.path)?), self.zero_one_labels),
            InputKind::Corpus => RowStream::Corpus(CorpusReader::open(&self.path)?),
            InputKind::Sketch => RowStream::Sketch(SketchReader::open(&self.path, false)?, RawRecord::default()),
        };
        Ok(RowReader { stream, dim: self.dim })
    }

    /// The first `n` rows.
    pub fn head(&self, n: usize) -> Result<Vec<OwnedRow>> {
        let mut reader = self.reader()?;
        let mut rows = Vec::with_capacity(n.min(1 << 16));
        let mut row = OwnedRow::default();
        while rows.len() < n && reader.next_into(&mut row)? {
            rows.push(row.clone());
        }
        Ok(rows)
    }

    pub fn read_all(&self) -> Result<Vec<OwnedRow>> {
        self.head(usize::MAX)
    }
}

impl RowReader {
    /// Decodes the next row into `row`; false at the end. Sketch records are
    /// expanded and empty-set records come back flagged.
    pub fn next_into(&mut self, row: &mut OwnedRow) -> Result<bool> {
        let more = match &mut self.stream {
            RowStream::Libsvm(r, zero_one) => match r.next_row(*zero_one)? {
                Some(next) => {
                    *row = next;
                    true
                }
                None => false,
            },
            RowStream::Corpus(r) => match r.next_into(&mut row.indices)? {
                Some(label) => {
                    row.label = label;
                    row.values = None;
                    row.flagged = false;
                    true
                }
                None => false,
            },
            RowStream::Sketch(r, rec) => {
                if r.next_raw(rec)? {
                    let h = *r.header();
                    row.indices.clear();
                    expand_codes_into((0..h.k()).map(|j| unpack_code(&rec.codes, j, h.b)), h.b, &mut row.indices);
                    row.label = rec.label;
                    row.values = None;
                    row.flagged = rec.is_empty_set();
                    true
                } else {
                    false
                }
            }
        };
        if more {
            if let Some(&last) = row.indices.last() {
                if last as usize >= self.dim {
                    return Err(bbmh_core::Error::DimensionExceeded { index: last as u64, dim: self.dim as u64 }.into());
                }
            }
        }
        Ok(more)
    }
}
