//! Binary token matrix files.
//!
//! Layout (all integers little-endian u32, values f32):
//!
//! ```text
//! magic "ATOK" | version u8 | kind u8
//! kind 0 (grid):        height width channels        data[h*w*c]
//! kind 1 (compressed):  coarse_h coarse_w channels grid_size orig_h orig_w   data[ch*cw*channels]
//! ```
//!
//! The library computes in f64; files store f32, so writing is lossy
//! while read-modify-read round trips are exact.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use aeronav_core::tokens::{CompressedTokens, TokenGrid};

const MAGIC: &[u8; 4] = b"ATOK";
const VERSION: u8 = 1;

/// Contents of a token file.
#[derive(Debug, Clone, PartialEq)]
pub enum TokenFile {
    Grid(TokenGrid),
    Compressed {
        tokens: CompressedTokens,
        original_height: usize,
        original_width: usize,
    },
}

#[derive(Debug)]
pub enum TokenFileError {
    Io { path: String, source: std::io::Error },
    Format { detail: String },
}

impl fmt::Display for TokenFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenFileError::Io { path, source } => write!(f, "{path}: {source}"),
            TokenFileError::Format { detail } => write!(f, "bad token file: {detail}"),
        }
    }
}

impl std::error::Error for TokenFileError {}

fn io_err(path: &Path, source: std::io::Error) -> TokenFileError {
    TokenFileError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn format_err(detail: impl Into<String>) -> TokenFileError {
    TokenFileError::Format {
        detail: detail.into(),
    }
}

pub fn write_token_file(file: &TokenFile, path: &Path) -> Result<(), TokenFileError> {
    let out = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(out);
    let mut emit = |bytes: &[u8]| w.write_all(bytes).map_err(|e| io_err(path, e));
    emit(MAGIC)?;
    emit(&[VERSION])?;
    match file {
        TokenFile::Grid(grid) => {
            emit(&[0u8])?;
            for dim in [grid.height, grid.width, grid.channels] {
                emit(&(dim as u32).to_le_bytes())?;
            }
            for &v in &grid.data {
                emit(&(v as f32).to_le_bytes())?;
            }
        }
        TokenFile::Compressed {
            tokens,
            original_height,
            original_width,
        } => {
            emit(&[1u8])?;
            for dim in [
                tokens.coarse_height,
                tokens.coarse_width,
                tokens.channels,
                tokens.grid_size,
                *original_height,
                *original_width,
            ] {
                emit(&(dim as u32).to_le_bytes())?;
            }
            for &v in &tokens.data {
                emit(&(v as f32).to_le_bytes())?;
            }
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_token_file(path: &Path) -> Result<TokenFile, TokenFileError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|e| io_err(path, e))?;
    if &magic != MAGIC {
        return Err(format_err("wrong magic bytes"));
    }
    let mut head = [0u8; 2];
    r.read_exact(&mut head).map_err(|e| io_err(path, e))?;
    if head[0] != VERSION {
        return Err(format_err(format!("unsupported version {}", head[0])));
    }

    let read_u32 = |r: &mut BufReader<File>| -> Result<usize, TokenFileError> {
        let mut buf = [0u8; 4];
        r.read_exact(&mut buf).map_err(|e| io_err(path, e))?;
        Ok(u32::from_le_bytes(buf) as usize)
    };

    match head[1] {
        0 => {
            let height = read_u32(&mut r)?;
            let width = read_u32(&mut r)?;
            let channels = read_u32(&mut r)?;
            let data = read_values(&mut r, height * width * channels, path)?;
            TokenGrid::new(height, width, channels, data)
                .map(TokenFile::Grid)
                .map_err(|e| format_err(e.to_string()))
        }
        1 => {
            let coarse_height = read_u32(&mut r)?;
            let coarse_width = read_u32(&mut r)?;
            let channels = read_u32(&mut r)?;
            let grid_size = read_u32(&mut r)?;
            let original_height = read_u32(&mut r)?;
            let original_width = read_u32(&mut r)?;
            if grid_size == 0 {
                return Err(format_err("grid size 0"));
            }
            let data = read_values(&mut r, coarse_height * coarse_width * channels, path)?;
            Ok(TokenFile::Compressed {
                tokens: CompressedTokens {
                    coarse_height,
                    coarse_width,
                    channels,
                    grid_size,
                    data,
                },
                original_height,
                original_width,
            })
        }
        other => Err(format_err(format!("unknown record kind {other}"))),
    }
}

fn read_values(
    r: &mut BufReader<File>,
    count: usize,
    path: &Path,
) -> Result<Vec<f64>, TokenFileError> {
    let mut data = Vec::with_capacity(count);
    let mut buf = [0u8; 4];
    for _ in 0..count {
        r.read_exact(&mut buf).map_err(|e| io_err(path, e))?;
        data.push(f64::from(f32::from_le_bytes(buf)));
    }
    let mut extra = [0u8; 1];
    match r.read(&mut extra) {
        Ok(0) => Ok(data),
        Ok(_) => Err(format_err("trailing bytes after token data")),
        Err(e) => Err(io_err(path, e)),
    }
}
