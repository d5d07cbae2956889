//! Numeric token transforms: patch-grid compression, a projection
//! placeholder, and multimodal sequence assembly.
//!
//! Spatial token compression partitions an `H x W` patch grid into
//! non-overlapping `g x g` cells (zero-padding the bottom/right edges when
//! the resolution is not divisible by `g`) and concatenates each cell's
//! tokens channel-wise in row-major within-cell order, turning an
//! `(H*W) x C` token matrix into a `(ceil(H/g)*ceil(W/g)) x (C*g^2)` one.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Dense row-major matrix of 64-bit reals.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TokenMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl TokenMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, TokensError> {
        if data.len() != rows * cols {
            return Err(TokensError::ShapeMismatch {
                detail: alloc::format!(
                    "{rows}x{cols} matrix needs {} values, got {}",
                    rows * cols,
                    data.len()
                ),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: alloc::vec![0.0; rows * cols],
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// Patch-level feature grid: `height * width` tokens of `channels` reals,
/// tokens stored in row-major spatial order.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TokenGrid {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl TokenGrid {
    pub fn new(
        height: usize,
        width: usize,
        channels: usize,
        data: Vec<f64>,
    ) -> Result<Self, TokensError> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(TokensError::ShapeMismatch {
                detail: String::from("grid dimensions must be at least 1"),
            });
        }
        if data.len() != height * width * channels {
            return Err(TokensError::ShapeMismatch {
                detail: alloc::format!(
                    "{height}x{width}x{channels} grid needs {} values, got {}",
                    height * width * channels,
                    data.len()
                ),
            });
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn token_count(&self) -> usize {
        self.height * self.width
    }

    /// Channel slice of the token at grid cell `(row, col)`.
    pub fn token(&self, row: usize, col: usize) -> &[f64] {
        let idx = (row * self.width + col) * self.channels;
        &self.data[idx..idx + self.channels]
    }

    /// View the grid as a `(H*W) x C` token matrix.
    pub fn to_matrix(&self) -> TokenMatrix {
        TokenMatrix {
            rows: self.token_count(),
            cols: self.channels,
            data: self.data.clone(),
        }
    }
}

/// Output of [`stc_compress`]: one token per coarse cell, channels
/// concatenated from the cell's members.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CompressedTokens {
    pub coarse_height: usize,
    pub coarse_width: usize,
    pub channels: usize,
    pub grid_size: usize,
    pub data: Vec<f64>,
}

impl CompressedTokens {
    pub fn token_count(&self) -> usize {
        self.coarse_height * self.coarse_width
    }

    pub fn to_matrix(&self) -> TokenMatrix {
        TokenMatrix {
            rows: self.token_count(),
            cols: self.channels,
            data: self.data.clone(),
        }
    }
}

/// Block tag in a multimodal sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BlockTag {
    Visual { frame: usize },
    Text,
}

/// One block of a multimodal sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceBlock {
    pub tag: BlockTag,
    pub tokens: TokenMatrix,
}

/// Visual blocks in frame order followed by the text block, all sharing
/// one embedding width.
#[derive(Debug, Clone, PartialEq)]
pub struct MultimodalSequence {
    pub blocks: Vec<SequenceBlock>,
    pub width: usize,
}

impl MultimodalSequence {
    pub fn total_len(&self) -> usize {
        self.blocks.iter().map(|b| b.tokens.rows).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokensError {
    ShapeMismatch { detail: String },
    FrameOrderError { detail: String },
}

impl fmt::Display for TokensError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokensError::ShapeMismatch { detail } => write!(f, "shape mismatch: {detail}"),
            TokensError::FrameOrderError { detail } => write!(f, "frame order: {detail}"),
        }
    }
}

impl core::error::Error for TokensError {}

/// Compress a token grid by a factor of `g` per spatial axis.
///
/// Coarse cells are emitted row-major; within a cell the member tokens
/// are concatenated channel-wise in row-major order (top-left, top-right,
/// bottom-left, bottom-right for `g = 2`). Padded positions contribute
/// zero channels.
pub fn stc_compress(grid: &TokenGrid, g: usize) -> CompressedTokens {
    assert!(g >= 1, "grid size must be at least 1");
    let coarse_h = grid.height.div_ceil(g);
    let coarse_w = grid.width.div_ceil(g);
    let out_channels = grid.channels * g * g;
    let mut data = alloc::vec![0.0; coarse_h * coarse_w * out_channels];
    for cr in 0..coarse_h {
        for cc in 0..coarse_w {
            let out_base = (cr * coarse_w + cc) * out_channels;
            for cell in 0..g * g {
                let r = cr * g + cell / g;
                let c = cc * g + cell % g;
                if r < grid.height && c < grid.width {
                    let dst = out_base + cell * grid.channels;
                    data[dst..dst + grid.channels].copy_from_slice(grid.token(r, c));
                }
            }
        }
    }
    CompressedTokens {
        coarse_height: coarse_h,
        coarse_width: coarse_w,
        channels: out_channels,
        grid_size: g,
        data,
    }
}

/// Invert [`stc_compress`], discarding any padding.
pub fn stc_decompress(
    comp: &CompressedTokens,
    original_h: usize,
    original_w: usize,
) -> Result<TokenGrid, TokensError> {
    let g = comp.grid_size;
    if g == 0 || !comp.channels.is_multiple_of(g * g) {
        return Err(TokensError::ShapeMismatch {
            detail: alloc::format!(
                "{} channels do not split into {g}x{g} cells",
                comp.channels
            ),
        });
    }
    if original_h.div_ceil(g) != comp.coarse_height || original_w.div_ceil(g) != comp.coarse_width
    {
        return Err(TokensError::ShapeMismatch {
            detail: alloc::format!(
                "original {original_h}x{original_w} is inconsistent with coarse {}x{} at g={g}",
                comp.coarse_height,
                comp.coarse_width
            ),
        });
    }
    if comp.data.len() != comp.token_count() * comp.channels {
        return Err(TokensError::ShapeMismatch {
            detail: String::from("compressed data length does not match its dimensions"),
        });
    }
    let channels = comp.channels / (g * g);
    let mut grid = TokenGrid {
        height: original_h,
        width: original_w,
        channels,
        data: alloc::vec![0.0; original_h * original_w * channels],
    };
    for r in 0..original_h {
        for c in 0..original_w {
            let cell = (r % g) * g + c % g;
            let src = ((r / g) * comp.coarse_width + c / g) * comp.channels + cell * channels;
            let dst = (r * original_w + c) * channels;
            grid.data[dst..dst + channels].copy_from_slice(&comp.data[src..src + channels]);
        }
    }
    Ok(grid)
}

/// Caller-supplied stand-in for the learned projector that maps visual
/// tokens into the language embedding space.
#[derive(Debug, Clone, PartialEq)]
pub enum Projection {
    Identity,
    /// `out = tokens * weight^T + bias`, with `weight` of shape `D x C`.
    Affine { weight: TokenMatrix, bias: Vec<f64> },
}

impl Projection {
    pub fn apply(&self, tokens: &TokenMatrix) -> Result<TokenMatrix, TokensError> {
        match self {
            Projection::Identity => Ok(tokens.clone()),
            Projection::Affine { weight, bias } => {
                if weight.cols != tokens.cols || bias.len() != weight.rows {
                    return Err(TokensError::ShapeMismatch {
                        detail: alloc::format!(
                            "affine {}x{} with bias {} cannot project width {}",
                            weight.rows,
                            weight.cols,
                            bias.len(),
                            tokens.cols
                        ),
                    });
                }
                let mut out = TokenMatrix::zeros(tokens.rows, weight.rows);
                for r in 0..tokens.rows {
                    let row = tokens.row(r);
                    for (d, b) in bias.iter().enumerate() {
                        let w_row = weight.row(d);
                        let mut acc = *b;
                        for (x, w) in row.iter().zip(w_row) {
                            acc += x * w;
                        }
                        out.data[r * weight.rows + d] = acc;
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Concatenate per-frame visual token blocks (ascending frame order) and
/// a text block into one sequence.
pub fn assemble_sequence(
    visual: &[(usize, TokenMatrix)],
    text: TokenMatrix,
) -> Result<MultimodalSequence, TokensError> {
    let width = text.cols;
    let mut blocks = Vec::with_capacity(visual.len() + 1);
    let mut last_frame: Option<usize> = None;
    for (frame, tokens) in visual {
        if let Some(prev) = last_frame {
            if *frame <= prev {
                return Err(TokensError::FrameOrderError {
                    detail: alloc::format!("frame {frame} after frame {prev}"),
                });
            }
        }
        if tokens.cols != width {
            return Err(TokensError::ShapeMismatch {
                detail: alloc::format!(
                    "visual block for frame {frame} has width {}, text has {width}",
                    tokens.cols
                ),
            });
        }
        last_frame = Some(*frame);
        blocks.push(SequenceBlock {
            tag: BlockTag::Visual { frame: *frame },
            tokens: tokens.clone(),
        });
    }
    blocks.push(SequenceBlock {
        tag: BlockTag::Text,
        tokens: text,
    });
    Ok(MultimodalSequence { blocks, width })
}
