//! Grayscale images and binary PGM I/O.

use std::io::Write as _;
use std::path::Path;
use thiserror::Error;

pub const BACKGROUND: u8 = 255;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: u32,
    pub height: u32,
    /// Row-major, `width * height` bytes, 255 = background.
    pub pixels: Vec<u8>,
}

impl Image {
    pub fn filled(width: u32, height: u32, value: u8) -> Image {
        Image { width, height, pixels: vec![value; width as usize * height as usize] }
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: u8) {
        self.pixels[y as usize * self.width as usize + x as usize] = value;
    }

    /// Ink accumulates darkest-wins, which makes overdraw order-independent.
    pub fn ink(&mut self, x: u32, y: u32, value: u8) {
        let p = &mut self.pixels[y as usize * self.width as usize + x as usize];
        *p = (*p).min(value);
    }
}

#[derive(Debug, Error)]
pub enum PgmError {
    #[error("pgm io: {0}")]
    Io(#[from] std::io::Error),
    #[error("pgm format: {0}")]
    Format(String),
}

/// Binary PGM (magic `P5`), maxval 255.
pub fn pgm_bytes(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

pub fn write_pgm(img: &Image, path: &Path) -> Result<(), PgmError> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(&pgm_bytes(img))?;
    Ok(())
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    /// Next whitespace-delimited header token, skipping `#` comments.
    fn token(&mut self) -> Result<&'a [u8], PgmError> {
        loop {
            match self.bytes.get(self.pos) {
                None => return Err(PgmError::Format("truncated header".to_string())),
                Some(b'#') => {
                    while self.bytes.get(self.pos).is_some_and(|&b| b != b'\n') {
                        self.pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(_) => break,
            }
        }
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(|b| !b.is_ascii_whitespace()) {
            self.pos += 1;
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn number(&mut self) -> Result<u32, PgmError> {
        let tok = self.token()?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| PgmError::Format("invalid header number".to_string()))
    }
}

/// Strict parser for images produced by [`pgm_bytes`]: binary `P5`, maxval
/// 255, a single whitespace byte before the pixel block, no trailing bytes.
pub fn parse_pgm(bytes: &[u8]) -> Result<Image, PgmError> {
    let mut cur = HeaderCursor { bytes, pos: 0 };
    let magic = cur.token()?;
    if magic != b"P5" {
        return Err(PgmError::Format(format!(
            "unsupported magic `{}` (only binary P5 is supported)",
            String::from_utf8_lossy(magic)
        )));
    }
    let width = cur.number()?;
    let height = cur.number()?;
    let maxval = cur.number()?;
    if maxval != 255 {
        return Err(PgmError::Format(format!("unsupported maxval {maxval} (must be 255)")));
    }
    if width == 0 || height == 0 {
        return Err(PgmError::Format("zero image dimension".to_string()));
    }
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(PgmError::Format("missing separator after maxval".to_string())),
    }
    let expected = width as usize * height as usize;
    let data = &bytes[cur.pos..];
    if data.len() != expected {
        return Err(PgmError::Format(format!(
            "pixel block has {} bytes, expected {expected}",
            data.len()
        )));
    }
    Ok(Image { width, height, pixels: data.to_vec() })
}

pub fn read_pgm(path: &Path) -> Result<Image, PgmError> {
    parse_pgm(&std::fs::read(path)?)
}
