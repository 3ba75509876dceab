//! Palette-indexed site grids and binary PPM output.

use std::io::Write;
use std::path::Path;

use crate::competition::{CompetitionState, SiteState};
use crate::error::{Error, Result};

/// RGB colour of each site state, indexed by [`SiteState::index`].
pub const PALETTE: [[u8; 3]; 7] = [
    [255, 255, 255],
    [255, 220, 0],
    [0, 120, 255],
    [0, 200, 0],
    [200, 170, 0],
    [0, 80, 180],
    [0, 140, 0],
];

/// A rectangular grid of palette indices, stored row by row from the top.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PaletteGrid {
    width: usize,
    height: usize,
    cells: Vec<u8>,
}

impl PaletteGrid {
    pub fn new(width: usize, height: usize, cells: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || cells.len() != width * height {
            return Err(Error::arg(format!(
                "{} cells do not form a non-empty {width}x{height} grid",
                cells.len()
            )));
        }
        if let Some(bad) = cells.iter().find(|&&c| SiteState::from_index(c).is_none()) {
            return Err(Error::arg(format!("palette index {bad} is out of range")));
        }
        Ok(PaletteGrid { width, height, cells })
    }

    /// Builds a grid from rows of site states; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<SiteState>]) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::arg("grid rows have different lengths"));
        }
        let cells = rows.iter().flatten().map(|s| s.index()).collect();
        Self::new(width, rows.len(), cells)
    }

    /// A `width x height` window of a planar competition state centred on the
    /// origin. Axis 0 runs left to right and axis 1 bottom to top; sites
    /// outside the simulated box are empty.
    pub fn snapshot(state: &CompetitionState, width: usize, height: usize) -> Result<Self> {
        let domain = state.domain();
        if domain.dim() != 2 {
            return Err(Error::arg("snapshots need a two-dimensional state"));
        }
        let x0 = -(width as i64 / 2);
        let y_top = height as i64 - 1 - height as i64 / 2;
        let mut cells = Vec::with_capacity(width * height);
        for row in 0..height as i64 {
            for col in 0..width as i64 {
                let x = [x0 + col, y_top - row];
                let s = if domain.contains(&x) {
                    state.state(domain.index_unchecked(&x))
                } else {
                    SiteState::Empty
                };
                cells.push(s.index());
            }
        }
        Self::new(width, height, cells)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }
}

/// Encodes the grid as a binary (P6) PPM with maxval 255.
pub fn encode_ppm(grid: &PaletteGrid) -> Vec<u8> {
    let header = format!("P6\n{} {}\n255\n", grid.width, grid.height);
    let mut out = Vec::with_capacity(header.len() + 3 * grid.cells.len());
    out.extend_from_slice(header.as_bytes());
    for &c in &grid.cells {
        out.extend_from_slice(&PALETTE[c as usize]);
    }
    out
}

pub fn write_ppm(grid: &PaletteGrid, path: &Path) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(&encode_ppm(grid))?;
    file.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::competition::CompetitionParams;
    use crate::lattice::BoxDomain;

    fn payload(bytes: &[u8]) -> &[u8] {
        let mut newlines = 0;
        let start = bytes
            .iter()
            .position(|&b| {
                newlines += usize::from(b == b'\n');
                newlines == 3
            })
            .unwrap();
        &bytes[start + 1..]
    }

    #[test]
    fn single_empty_pixel() {
        let g = PaletteGrid::from_rows(&[vec![SiteState::Empty]]).unwrap();
        let bytes = encode_ppm(&g);
        assert!(bytes.starts_with(b"P6\n1 1\n255\n"));
        assert_eq!(payload(&bytes), &[255, 255, 255]);
    }

    #[test]
    fn two_pixels_in_palette_colours() {
        let g = PaletteGrid::from_rows(&[vec![SiteState::YActive, SiteState::BActive]]).unwrap();
        assert_eq!(payload(&encode_ppm(&g)), &[255, 220, 0, 0, 120, 255]);
    }

    #[test]
    fn palette_matches_states() {
        let expect = [
            (SiteState::Empty, [255, 255, 255]),
            (SiteState::YActive, [255, 220, 0]),
            (SiteState::YPassive, [200, 170, 0]),
            (SiteState::BActive, [0, 120, 255]),
            (SiteState::BPassive, [0, 80, 180]),
            (SiteState::GActive, [0, 200, 0]),
            (SiteState::GPassive, [0, 140, 0]),
        ];
        for (s, rgb) in expect {
            assert_eq!(PALETTE[s.index() as usize], rgb);
        }
    }

    #[test]
    fn ragged_or_invalid_grids_are_rejected() {
        let ragged = vec![vec![SiteState::Empty; 2], vec![SiteState::Empty]];
        assert!(PaletteGrid::from_rows(&ragged).is_err());
        assert!(PaletteGrid::from_rows(&[]).is_err());
        assert!(PaletteGrid::new(1, 1, vec![7]).is_err());
    }

    #[test]
    fn snapshot_places_sources() {
        let params = CompetitionParams::new(0.5, 0.5, vec![-1, 0], vec![2, 1]).unwrap();
        let state = CompetitionState::from_sources(BoxDomain::new(2, 3).unwrap(), &params).unwrap();
        let g = PaletteGrid::snapshot(&state, 9, 9).unwrap();
        // column = x + 4, row = 4 - y
        assert_eq!(g.cells()[4 * 9 + 3], SiteState::YActive.index());
        assert_eq!(g.cells()[3 * 9 + 6], SiteState::BActive.index());
        assert_eq!(g.cells().iter().filter(|&&c| c != 0).count(), 2);
    }

    #[test]
    fn unwritable_path_is_an_io_error() {
        let g = PaletteGrid::new(1, 1, vec![0]).unwrap();
        let err = write_ppm(&g, Path::new("/nonexistent-dir/x.ppm")).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }
}
