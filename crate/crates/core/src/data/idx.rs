//! IDX reader (the MNIST container format): a big-endian `u32` magic, one
//! big-endian `u32` per dimension, then unsigned bytes in row-major order.

use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    /// `count * rows * cols` raw pixels.
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn image(&self, i: usize) -> &[u8] {
        let size = self.rows * self.cols;
        &self.pixels[i * size..(i + 1) * size]
    }
}

fn format(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn u32(&mut self, what: &str) -> Result<u32> {
        let end = self.pos + 4;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| format(format!("truncated header: missing {what}")))?;
        self.pos = end;
        Ok(u32::from_be_bytes(chunk.try_into().unwrap()))
    }

    fn body(&self, len: usize) -> Result<&'a [u8]> {
        let rest = &self.bytes[self.pos..];
        match rest.len().cmp(&len) {
            std::cmp::Ordering::Less => Err(format(format!(
                "truncated body: expected {len} bytes, found {}",
                rest.len()
            ))),
            std::cmp::Ordering::Greater => Err(format(format!(
                "{} trailing bytes after {len}-byte body",
                rest.len() - len
            ))),
            std::cmp::Ordering::Equal => Ok(rest),
        }
    }
}

fn expect_magic(r: &mut Reader<'_>, expected: u32, kind: &str) -> Result<()> {
    let magic = r.u32("magic number")?;
    if magic != expected {
        return Err(format(format!(
            "bad magic number for {kind} file: expected {expected:#010x}, found {magic:#010x}"
        )));
    }
    Ok(())
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    let mut r = Reader { bytes, pos: 0 };
    expect_magic(&mut r, IMAGES_MAGIC, "image")?;
    let count = r.u32("image count")? as usize;
    let rows = r.u32("row count")? as usize;
    let cols = r.u32("column count")? as usize;
    let len = count
        .checked_mul(rows)
        .and_then(|x| x.checked_mul(cols))
        .ok_or_else(|| format("image dimensions overflow"))?;
    let pixels = r.body(len)?.to_vec();
    Ok(IdxImages { count, rows, cols, pixels })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let mut r = Reader { bytes, pos: 0 };
    expect_magic(&mut r, LABELS_MAGIC, "label")?;
    let count = r.u32("label count")? as usize;
    Ok(r.body(count)?.to_vec())
}

/// Builds a dataset from an image/label pair, keeping only `keep_classes`.
///
/// Kept labels are renumbered `0..keep_classes.len()` in the order given and
/// pixels are scaled to `[0, 1]`.
pub fn assemble_idx(images: &IdxImages, labels: &[u8], keep_classes: &[usize]) -> Result<Dataset> {
    if images.count != labels.len() {
        return Err(format(format!(
            "{} images but {} labels",
            images.count,
            labels.len()
        )));
    }
    if keep_classes.is_empty() {
        return Err(Error::Parameter("keep_classes must not be empty".into()));
    }
    for (i, c) in keep_classes.iter().enumerate() {
        if keep_classes[..i].contains(c) {
            return Err(Error::Parameter(format!("class {c} listed twice in keep_classes")));
        }
    }
    let dim = images.rows * images.cols;
    let mut features = Vec::new();
    let mut kept = Vec::new();
    for (i, &raw) in labels.iter().enumerate() {
        if let Some(new) = keep_classes.iter().position(|&c| c == raw as usize) {
            features.extend(images.image(i).iter().map(|&p| p as f64 / 255.0));
            kept.push(new);
        }
    }
    if kept.is_empty() {
        return Err(format("no samples with the requested classes"));
    }
    Dataset::new(features, kept, dim, keep_classes.len())
}

pub fn load_idx(images_path: &Path, labels_path: &Path, keep_classes: &[usize]) -> Result<Dataset> {
    let read = |p: &Path| std::fs::read(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())));
    let images = parse_idx_images(&read(images_path)?)?;
    let labels = parse_idx_labels(&read(labels_path)?)?;
    assemble_idx(&images, &labels, keep_classes)
}
