//! Fixed-length single-channel one-dimensional images of ID sequences.

use std::io::{Read, Write};
use std::path::Path;

use crate::pylex::tokenize;
use crate::vocab::{ExhaustPolicy, NamespaceScope, Vocabulary, PAD_ID};
use crate::{Error, Result};

pub const DEFAULT_IMG_LEN: usize = 512;

const MAGIC: &[u8; 8] = b"CLCPIMG\0";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct HeterogeneousImage {
    /// IDs, right-padded with 0 to the image length.
    pub ids: Vec<u32>,
    /// Number of IDs before padding.
    pub true_len: usize,
    /// The source sequence was longer than the image and lost its tail.
    pub truncated: bool,
    /// `ids[i] / max_id`, in `[0, 1]`.
    pub values: Vec<f32>,
}

impl HeterogeneousImage {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Truncates to a prefix of `img_len` or right-pads with 0, then scales by
/// `max_id`.
pub fn make_image(ids: &[u32], img_len: usize, max_id: u32) -> HeterogeneousImage {
    assert!(img_len > 0, "image length must be positive");
    let true_len = ids.len().min(img_len);
    let mut out = vec![PAD_ID; img_len];
    out[..true_len].copy_from_slice(&ids[..true_len]);
    let scale = 1.0 / max_id as f64;
    let values = out.iter().map(|&id| (id as f64 * scale) as f32).collect();
    HeterogeneousImage {
        ids: out,
        true_len,
        truncated: ids.len() > img_len,
        values,
    }
}

/// Source snippet → image, in a fresh namespace. Returns the scope too so
/// callers can decode.
pub fn encode_snippet(
    src: &str,
    vocab: &Vocabulary,
    img_len: usize,
    policy: ExhaustPolicy,
) -> Result<(HeterogeneousImage, NamespaceScope)> {
    let tokens = tokenize(src)?;
    let mut scope = NamespaceScope::with_policy(policy);
    let ids = vocab.assign_ids(&tokens, &mut scope)?;
    Ok((make_image(&ids, img_len, vocab.max_id()), scope))
}

/// Encoded corpus: a header (`img_len`, `max_id`, `count`) then one record
/// per image, each the untruncated length followed by `img_len` IDs, all
/// little-endian `u32`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageFile {
    pub img_len: usize,
    pub max_id: u32,
    pub images: Vec<HeterogeneousImage>,
    /// Original sequence lengths, kept to reconstruct truncation flags.
    pub source_lens: Vec<usize>,
}

impl ImageFile {
    pub fn new(img_len: usize, max_id: u32) -> Self {
        ImageFile {
            img_len,
            max_id,
            images: Vec::new(),
            source_lens: Vec::new(),
        }
    }

    pub fn push(&mut self, ids: &[u32]) {
        self.source_lens.push(ids.len());
        self.images.push(make_image(ids, self.img_len, self.max_id));
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.img_len as u32).to_le_bytes())?;
        w.write_all(&self.max_id.to_le_bytes())?;
        w.write_all(&(self.images.len() as u64).to_le_bytes())?;
        for (img, &n) in self.images.iter().zip(&self.source_lens) {
            w.write_all(&(n as u32).to_le_bytes())?;
            for id in &img.ids {
                w.write_all(&id.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let fmt = |m: &str| Error::ImageFormat(m.to_string());
        let mut buf = Vec::new();
        r.read_to_end(&mut buf).map_err(|e| Error::ImageFormat(e.to_string()))?;
        if buf.len() < 28 || &buf[..8] != MAGIC {
            return Err(fmt("bad magic"));
        }
        let u32_at = |off: usize| u32::from_le_bytes(buf[off..off + 4].try_into().unwrap());
        if u32_at(8) != FORMAT_VERSION {
            return Err(fmt("unsupported version"));
        }
        let img_len = u32_at(12) as usize;
        let max_id = u32_at(16);
        let count = u64::from_le_bytes(buf[20..28].try_into().unwrap()) as usize;
        if img_len == 0 || max_id == 0 {
            return Err(fmt("zero image length or max id"));
        }
        let rec = 4 * (img_len + 1);
        if buf.len() != 28 + count * rec {
            return Err(fmt("size does not match header"));
        }
        let mut file = ImageFile::new(img_len, max_id);
        for i in 0..count {
            let base = 28 + i * rec;
            let n = u32_at(base) as usize;
            let ids: Vec<u32> = (0..img_len).map(|j| u32_at(base + 4 + 4 * j)).collect();
            let true_len = n.min(img_len);
            if ids[true_len..].iter().any(|&id| id != PAD_ID) {
                return Err(Error::ImageFormat(format!("record {i}: nonzero padding")));
            }
            file.source_lens.push(n);
            let mut img = make_image(&ids[..true_len], img_len, max_id);
            img.truncated = n > img_len;
            file.images.push(img);
        }
        Ok(file)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(std::io::BufWriter::new(f)).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(std::io::BufReader::new(f))
    }

    /// Text dump: one line per image, `index<TAB>true_len<TAB>truncated<TAB>ids`.
    pub fn debug_dump(&self) -> String {
        let mut out = format!("# img_len={} max_id={} count={}\n", self.img_len, self.max_id, self.images.len());
        for (i, img) in self.images.iter().enumerate() {
            let ids: Vec<String> = img.ids[..img.true_len].iter().map(|id| id.to_string()).collect();
            out.push_str(&format!("{i}\t{}\t{}\t{}\n", img.true_len, img.truncated, ids.join(" ")));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::MAX_ID;

    #[test]
    fn single_id_padded() {
        let img = make_image(&[1], 4, MAX_ID);
        assert_eq!(img.ids, vec![1, 0, 0, 0]);
        assert_eq!(img.true_len, 1);
        assert!(!img.truncated);
        assert_eq!(img.values, vec![(1.0f64 / 13811.0) as f32, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn exact_length_is_unpadded() {
        let img = make_image(&[5, 6, 7], 3, MAX_ID);
        assert_eq!(img.true_len, 3);
        assert!(!img.truncated);
        assert!(img.ids.iter().all(|&i| i != 0));
    }

    #[test]
    fn long_sequences_keep_prefix() {
        let ids: Vec<u32> = (1..=9).collect();
        let img = make_image(&ids, 4, MAX_ID);
        assert_eq!(img.ids, vec![1, 2, 3, 4]);
        assert!(img.truncated);
    }

    #[test]
    fn values_are_bounded() {
        let img = make_image(&[1, MAX_ID, 7961], 8, MAX_ID);
        assert!(img.values.iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(img.values[1], 1.0);
    }

    #[test]
    fn file_round_trip() {
        let mut f = ImageFile::new(4, MAX_ID);
        f.push(&[1, 2]);
        f.push(&[3, 4, 5, 6, 7]);
        let mut buf = Vec::new();
        f.write_to(&mut buf).unwrap();
        let back = ImageFile::read_from(&buf[..]).unwrap();
        assert_eq!(back, f);
        assert!(back.images[1].truncated);
        assert!(ImageFile::read_from(&buf[..20]).is_err());
    }
}
