//! Binary PGM (`P5`, maxval 255).

use std::io::{Read, Write};
use std::path::Path;

use super::{GrayImage, ImageError};

/// Parses the whitespace/comment separated header tokens of a netpbm file and
/// returns them with the offset of the first payload byte.
pub(crate) fn parse_header(buf: &[u8], tokens: usize) -> Result<(Vec<String>, usize), ImageError> {
    let mut out = Vec::with_capacity(tokens);
    let mut i = 0;
    while out.len() < tokens {
        while i < buf.len() && (buf[i].is_ascii_whitespace() || buf[i] == b'#') {
            if buf[i] == b'#' {
                while i < buf.len() && buf[i] != b'\n' {
                    i += 1;
                }
            } else {
                i += 1;
            }
        }
        let start = i;
        while i < buf.len() && !buf[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(ImageError::BadDimensions("incomplete header".into()));
        }
        out.push(String::from_utf8_lossy(&buf[start..i]).into_owned());
    }
    // exactly one whitespace byte separates the header from the payload
    if i >= buf.len() {
        return Ok((out, buf.len()));
    }
    Ok((out, i + 1))
}

pub(crate) fn parse_dims(tokens: &[String]) -> Result<(usize, usize, usize), ImageError> {
    let num = |s: &String| {
        s.parse::<usize>()
            .map_err(|_| ImageError::BadDimensions(format!("'{s}' is not a positive integer")))
    };
    let (w, h, maxval) = (num(&tokens[1])?, num(&tokens[2])?, num(&tokens[3])?);
    if w == 0 || h == 0 {
        return Err(ImageError::BadDimensions(format!("{w}x{h}")));
    }
    Ok((w, h, maxval))
}

pub fn read_pgm(mut r: impl Read) -> Result<GrayImage, ImageError> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    if buf.len() < 2 || &buf[..2] != b"P5" {
        return Err(ImageError::BadMagic);
    }
    let (tokens, offset) = parse_header(&buf, 4)?;
    if tokens[0] != "P5" {
        return Err(ImageError::BadMagic);
    }
    let (w, h, maxval) = parse_dims(&tokens)?;
    if maxval != 255 {
        return Err(ImageError::BadDimensions(format!("maxval {maxval}, expected 255")));
    }
    let expected = w * h;
    let payload = &buf[offset..];
    if payload.len() < expected {
        return Err(ImageError::Truncated {
            expected,
            found: payload.len(),
        });
    }
    GrayImage::from_vec(w, h, payload[..expected].to_vec())
}

pub fn write_pgm(img: &GrayImage, mut w: impl Write) -> std::io::Result<()> {
    write!(w, "P5\n{} {}\n255\n", img.width(), img.height())?;
    w.write_all(img.data())
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage, ImageError> {
    read_pgm(std::fs::File::open(path)?)
}

pub fn save_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<(), ImageError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_pgm(img, &mut f)?;
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let img = GrayImage::from_fn(7, 5, |x, y| (x * 31 + y * 17) as u8);
        let mut buf = Vec::new();
        write_pgm(&img, &mut buf).unwrap();
        assert_eq!(read_pgm(buf.as_slice()).unwrap(), img);

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.pgm");
        save_pgm(&img, &p).unwrap();
        assert_eq!(load_pgm(&p).unwrap(), img);
    }

    #[test]
    fn header_comments_are_skipped() {
        let mut buf = b"P5\n# made by hand\n2 1\n255\n".to_vec();
        buf.extend_from_slice(&[10, 20]);
        let img = read_pgm(buf.as_slice()).unwrap();
        assert_eq!(img.data(), &[10, 20]);
    }

    #[test]
    fn p6_is_bad_magic() {
        let buf = b"P6\n1 1\n255\n\x00\x00\x00";
        assert!(matches!(read_pgm(&buf[..]), Err(ImageError::BadMagic)));
    }

    #[test]
    fn short_payload_is_truncated() {
        let buf = b"P5\n4 4\n255\n\x00\x01\x02";
        assert!(matches!(
            read_pgm(&buf[..]),
            Err(ImageError::Truncated { expected: 16, found: 3 })
        ));
    }

    #[test]
    fn bad_dimensions() {
        assert!(matches!(read_pgm(&b"P5\n0 4\n255\n"[..]), Err(ImageError::BadDimensions(_))));
        assert!(matches!(read_pgm(&b"P5\n2 x\n255\n"[..]), Err(ImageError::BadDimensions(_))));
        assert!(matches!(read_pgm(&b"P5\n1 1\n65535\n\0\0"[..]), Err(ImageError::BadDimensions(_))));
    }
}
