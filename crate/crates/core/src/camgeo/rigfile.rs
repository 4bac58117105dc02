//! Text format for stereo rigs.
//!
//! ```text
//! # comments start with '#'
//! [left]
//! c = 0 0 0
//! a = 0 0 1
//! h = 1445.8434 0 512
//! v = 0 1445.8434 512
//! [right]
//! c = 0.24 0 0
//! a = 0 0 1
//! h = 1445.8434 0 512
//! v = 0 1445.8434 512
//! [image]
//! width = 1024
//! height = 1024
//! ```
//!
//! Each camera block needs all four of `c`, `a`, `h`, `v` as three decimal
//! numbers. The `[image]` block is optional and defaults to 1024x1024. The
//! baseline is derived from the camera centers and is never stored.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use super::{CahvCamera, CamGeoError, StereoRig, Vec3};

#[derive(Debug, Error)]
pub enum RigFileError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("block [{block}] is missing key '{key}'")]
    MissingKey { block: String, key: &'static str },
    #[error("missing block [{0}]")]
    MissingBlock(&'static str),
    #[error(transparent)]
    Geometry(#[from] CamGeoError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Default)]
struct CamBlock {
    c: Option<Vec3>,
    a: Option<Vec3>,
    h: Option<Vec3>,
    v: Option<Vec3>,
}

impl CamBlock {
    fn build(self, name: &str) -> Result<CahvCamera, RigFileError> {
        let miss = |key| RigFileError::MissingKey {
            block: name.to_string(),
            key,
        };
        Ok(CahvCamera::new(
            self.c.ok_or_else(|| miss("c"))?,
            self.a.ok_or_else(|| miss("a"))?,
            self.h.ok_or_else(|| miss("h"))?,
            self.v.ok_or_else(|| miss("v"))?,
        )?)
    }
}

fn parse_vec(s: &str, line: usize) -> Result<Vec3, RigFileError> {
    let vals: Vec<f64> = s
        .split_whitespace()
        .map(|t| t.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| RigFileError::Syntax {
            line,
            msg: format!("bad number: {e}"),
        })?;
    if vals.len() != 3 {
        return Err(RigFileError::Syntax {
            line,
            msg: format!("expected 3 numbers, found {}", vals.len()),
        });
    }
    Ok(Vec3::new(vals[0], vals[1], vals[2]))
}

pub fn parse_rig(text: &str) -> Result<StereoRig, RigFileError> {
    #[derive(PartialEq)]
    enum Block {
        None,
        Left,
        Right,
        Image,
    }
    let mut block = Block::None;
    let mut left: Option<CamBlock> = None;
    let mut right: Option<CamBlock> = None;
    let (mut width, mut height) = (1024usize, 1024usize);

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            block = match name.trim() {
                "left" => {
                    left.get_or_insert_with(CamBlock::default);
                    Block::Left
                }
                "right" => {
                    right.get_or_insert_with(CamBlock::default);
                    Block::Right
                }
                "image" => Block::Image,
                other => {
                    return Err(RigFileError::Syntax {
                        line,
                        msg: format!("unknown block [{other}]"),
                    })
                }
            };
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| RigFileError::Syntax {
            line,
            msg: "expected 'key = value'".into(),
        })?;
        let (key, value) = (key.trim(), value.trim());
        match block {
            Block::None => {
                return Err(RigFileError::Syntax {
                    line,
                    msg: "key outside of a block".into(),
                })
            }
            Block::Image => {
                let n: usize = value.parse().map_err(|_| RigFileError::Syntax {
                    line,
                    msg: format!("bad integer '{value}'"),
                })?;
                match key {
                    "width" => width = n,
                    "height" => height = n,
                    other => {
                        return Err(RigFileError::Syntax {
                            line,
                            msg: format!("unknown image key '{other}'"),
                        })
                    }
                }
            }
            Block::Left | Block::Right => {
                let cam = if block == Block::Left {
                    left.as_mut()
                } else {
                    right.as_mut()
                }
                .expect("block opened");
                let v = parse_vec(value, line)?;
                let slot = match key {
                    "c" => &mut cam.c,
                    "a" => &mut cam.a,
                    "h" => &mut cam.h,
                    "v" => &mut cam.v,
                    other => {
                        return Err(RigFileError::Syntax {
                            line,
                            msg: format!("unknown camera key '{other}'"),
                        })
                    }
                };
                *slot = Some(v);
            }
        }
    }
    let left = left.ok_or(RigFileError::MissingBlock("left"))?.build("left")?;
    let right = right.ok_or(RigFileError::MissingBlock("right"))?.build("right")?;
    Ok(StereoRig::new(left, right, width, height)?)
}

pub fn format_rig(rig: &StereoRig) -> String {
    let mut out = String::new();
    for (name, cam) in [("left", &rig.left), ("right", &rig.right)] {
        let _ = writeln!(out, "[{name}]");
        for (k, v) in [("c", cam.c), ("a", cam.a), ("h", cam.h), ("v", cam.v)] {
            // `{:?}` on f64 prints the shortest round-tripping representation
            let _ = writeln!(out, "{k} = {:?} {:?} {:?}", v.x, v.y, v.z);
        }
    }
    let _ = writeln!(out, "[image]");
    let _ = writeln!(out, "width = {}", rig.image_width);
    let _ = writeln!(out, "height = {}", rig.image_height);
    out
}

pub fn load_rig(path: impl AsRef<Path>) -> Result<StereoRig, RigFileError> {
    parse_rig(&std::fs::read_to_string(path)?)
}

pub fn save_rig(rig: &StereoRig, path: impl AsRef<Path>) -> Result<(), RigFileError> {
    std::fs::write(path, format_rig(rig))?;
    Ok(())
}
