//! PGM (portable graymap) reader and writer, P2 (ASCII) and P5 (binary),
//! maxval up to 65535. Parse errors carry the byte offset at which the
//! input stopped making sense.

use super::{GridError, OccupancyGrid};
use crate::geom::Point2;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn fail(&self, what: &'static str) -> GridError {
        GridError::Parse {
            offset: self.pos,
            what,
        }
    }

    /// Skip whitespace and `#`-to-end-of-line comments.
    fn skip_separators(&mut self) {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                return;
            }
        }
    }

    fn read_uint(&mut self, what: &'static str) -> Result<u32, GridError> {
        self.skip_separators();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.fail(what));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse::<u32>().ok())
            .ok_or_else(|| GridError::Parse { offset: start, what })
    }
}

/// Parse PGM bytes into an occupancy grid. A pixel is an obstacle iff its
/// value is below `maxval / 2`. Image row 0 is the top of the world: cell
/// row 0 of the grid is the bottom, so rows are flipped on load.
pub fn load_grid(bytes: &[u8], resolution: f64, origin: Point2) -> Result<OccupancyGrid, GridError> {
    if resolution <= 0.0 || !resolution.is_finite() {
        return Err(GridError::BadResolution(resolution));
    }
    let mut cur = Cursor { bytes, pos: 0 };
    let binary = match bytes.get(0..2) {
        Some(b"P2") => false,
        Some(b"P5") => true,
        _ => return Err(cur.fail("magic number P2 or P5")),
    };
    cur.pos = 2;
    let width = cur.read_uint("width")? as usize;
    let height = cur.read_uint("height")? as usize;
    let maxval = cur.read_uint("maxval")?;
    if width == 0 || height == 0 {
        return Err(cur.fail("non-zero image dimensions"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(cur.fail("maxval in 1..=65535"));
    }

    let count = width * height;
    let mut top_down = Vec::with_capacity(count);
    if binary {
        // exactly one whitespace byte after maxval, then raw samples
        if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
            return Err(cur.fail("single whitespace before raster"));
        }
        cur.pos += 1;
        let wide = maxval > 255;
        let sample_len = if wide { 2 } else { 1 };
        for _ in 0..count {
            if cur.pos + sample_len > bytes.len() {
                return Err(cur.fail("raster sample (payload truncated)"));
            }
            let value = if wide {
                u32::from(bytes[cur.pos]) << 8 | u32::from(bytes[cur.pos + 1])
            } else {
                u32::from(bytes[cur.pos])
            };
            cur.pos += sample_len;
            if value > maxval {
                return Err(GridError::Parse {
                    offset: cur.pos - sample_len,
                    what: "sample within maxval",
                });
            }
            top_down.push(2 * value < maxval);
        }
    } else {
        for _ in 0..count {
            let value = cur.read_uint("raster sample")?;
            if value > maxval {
                return Err(GridError::Parse {
                    offset: cur.pos,
                    what: "sample within maxval",
                });
            }
            top_down.push(2 * value < maxval);
        }
    }

    // flip rows so that cell (0, 0) is the bottom-left of the world
    let mut cells = vec![false; count];
    for row in 0..height {
        let src = &top_down[row * width..(row + 1) * width];
        let dst_row = height - 1 - row;
        cells[dst_row * width..(dst_row + 1) * width].copy_from_slice(src);
    }

    Ok(OccupancyGrid {
        width,
        height,
        resolution,
        origin,
        cells,
    })
}

/// Serialize a grid as ASCII P2 with 0 = obstacle, 255 = free, flipping
/// rows back to image order (row 0 on top).
pub fn save_grid_p2(grid: &OccupancyGrid) -> Vec<u8> {
    let mut out = String::new();
    out.push_str(&format!("P2\n{} {}\n255\n", grid.width, grid.height));
    for row in (0..grid.height).rev() {
        let mut line = String::with_capacity(grid.width * 4);
        for col in 0..grid.width {
            if col > 0 {
                line.push(' ');
            }
            line.push_str(if grid.cells[row * grid.width + col] {
                "0"
            } else {
                "255"
            });
        }
        out.push_str(&line);
        out.push('\n');
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_ascii_example() {
        // image: top row [0, 255], bottom row [255, 0]
        let grid = load_grid(b"P2\n2 2\n255\n0 255\n255 0\n", 1.0, Point2::new(0.0, 0.0)).unwrap();
        // occupancy: obstacle at (col 0, top) and (col 1, bottom)
        assert!(grid.occupied(0, 1), "top-left");
        assert!(!grid.occupied(1, 1));
        assert!(!grid.occupied(0, 0));
        assert!(grid.occupied(1, 0), "bottom-right");
    }

    #[test]
    fn all_white_has_no_obstacles() {
        let grid = load_grid(b"P2\n3 2\n255\n255 255 255\n255 255 255\n", 0.5, Point2::default())
            .unwrap();
        assert_eq!(grid.cells.iter().filter(|&&c| c).count(), 0);
    }

    #[test]
    fn binary_p5_roundtrip_with_comment() {
        let bytes: Vec<u8> = b"P5 # comment\n2 2\n255\n".iter().copied().chain([0u8, 255, 255, 0]).collect();
        let grid = load_grid(&bytes, 1.0, Point2::default()).unwrap();
        assert!(grid.occupied(0, 1));
        assert!(grid.occupied(1, 0));
        let reparsed = load_grid(&save_grid_p2(&grid), 1.0, Point2::default()).unwrap();
        assert_eq!(grid.cells, reparsed.cells);
    }

    #[test]
    fn sixteen_bit_threshold() {
        // maxval 1000: obstacle iff value < 500
        let mut bytes = b"P5\n2 1\n1000\n".to_vec();
        bytes.extend_from_slice(&[0x01, 0xF3, 0x01, 0xF4]); // 499, 500
        let grid = load_grid(&bytes, 1.0, Point2::default()).unwrap();
        assert!(grid.occupied(0, 0));
        assert!(!grid.occupied(1, 0));
    }

    #[test]
    fn truncated_payload_reports_offset() {
        let bytes = b"P5\n2 2\n255\nab"; // 2 of 4 samples
        match load_grid(bytes, 1.0, Point2::default()) {
            Err(GridError::Parse { offset, .. }) => assert_eq!(offset, 13),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_header_reports_offset() {
        assert!(matches!(
            load_grid(b"P3\n2 2\n255\n", 1.0, Point2::default()),
            Err(GridError::Parse { offset: 0, .. })
        ));
        assert!(matches!(
            load_grid(b"P2\n2 x\n255\n", 1.0, Point2::default()),
            Err(GridError::Parse { .. })
        ));
    }
}
