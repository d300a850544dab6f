//! Utilization images and agreement statistics across runs and tasks.

mod stats;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use stats::{adjusted_r2, pearson, r_squared};

use crate::error::{LabError, Result};
use crate::trainer::UtilizationGrid;

/// Three runs of one model, in run order.
#[derive(Debug, Clone, PartialEq)]
pub struct RunBundle {
    pub grids: [UtilizationGrid; 3],
}

impl RunBundle {
    pub fn new(grids: Vec<UtilizationGrid>) -> Result<Self> {
        let grids: [UtilizationGrid; 3] = grids.try_into().map_err(|g: Vec<UtilizationGrid>| {
            LabError::Analysis(format!("a run bundle needs 3 grids, got {}", g.len()))
        })?;
        same_shape(&grids)?;
        for g in &grids {
            g.validate()?;
        }
        Ok(RunBundle { grids })
    }

    pub fn layers(&self) -> usize {
        self.grids[0].layers
    }

    pub fn heads(&self) -> usize {
        self.grids[0].heads
    }

    /// Per-head mean over the three runs.
    pub fn mean(&self) -> Vec<f64> {
        (0..self.grids[0].values.len())
            .map(|j| self.grids.iter().map(|g| g.values[j]).sum::<f64>() / 3.0)
            .collect()
    }

    /// Third run regressed on the first two.
    pub fn adjusted_r2(&self) -> Result<f64> {
        let [a, b, c] = &self.grids;
        adjusted_r2(&a.values, &b.values, &c.values)
    }
}

fn same_shape(grids: &[UtilizationGrid]) -> Result<()> {
    let first = grids.first().ok_or_else(|| LabError::Analysis("no grids".into()))?;
    if let Some(g) = grids
        .iter()
        .find(|g| (g.layers, g.heads) != (first.layers, first.heads))
    {
        return Err(LabError::Analysis(format!(
            "grid {} is {}x{}, grid {} is {}x{}",
            g.run, g.layers, g.heads, first.run, first.layers, first.heads
        )));
    }
    Ok(())
}

/// Row-major RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

impl Image {
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }
}

/// `round_half_up(255·(1 − z))` clamped to a byte.
pub fn channel(z: f64) -> u8 {
    let x = 255.0 * (1.0 - z);
    (x + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// One pixel per head (layers down, heads across); run `r` drives channel `r`.
pub fn rgb_encode(bundle: &RunBundle) -> Image {
    let (l, h) = (bundle.layers(), bundle.heads());
    let pixels = (0..l * h)
        .map(|j| [0, 1, 2].map(|r| channel(bundle.grids[r].values[j])))
        .collect();
    Image {
        width: h,
        height: l,
        pixels,
    }
}

/// Per-head averaged utilization in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatGrid {
    pub layers: usize,
    pub heads: usize,
    pub values: Vec<f64>,
}

impl HeatGrid {
    pub fn to_image(&self) -> Image {
        Image {
            width: self.heads,
            height: self.layers,
            pixels: self.values.iter().map(|&v| [channel(v); 3]).collect(),
        }
    }
}

/// Mean of every grid per head. Expects `tasks × runs` grids; the usual
/// figure uses 5 tasks and 3 runs.
pub fn gray_overlay(grids: &[UtilizationGrid], tasks: usize, runs: usize) -> Result<HeatGrid> {
    if grids.len() != tasks * runs || grids.is_empty() {
        return Err(LabError::Analysis(format!(
            "overlay of {tasks} tasks x {runs} runs needs {} grids, got {}",
            tasks * runs,
            grids.len()
        )));
    }
    same_shape(grids)?;
    let n = grids[0].values.len();
    let values = (0..n)
        .map(|j| grids.iter().map(|g| g.values[j]).sum::<f64>() / grids.len() as f64)
        .collect();
    Ok(HeatGrid {
        layers: grids[0].layers,
        heads: grids[0].heads,
        values,
    })
}

/// Binary P6 bytes with each pixel drawn as a `scale × scale` block.
pub fn ppm_bytes(img: &Image, scale: usize) -> Result<Vec<u8>> {
    if scale == 0 {
        return Err(LabError::Analysis("ppm scale must be at least 1".into()));
    }
    let (w, h) = (img.width * scale, img.height * scale);
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    for y in 0..h {
        for x in 0..w {
            out.extend_from_slice(&img.pixel(x / scale, y / scale));
        }
    }
    Ok(out)
}

pub fn write_ppm(img: &Image, path: &Path, scale: usize) -> Result<()> {
    fs::write(path, ppm_bytes(img, scale)?)?;
    Ok(())
}

/// `model_a,model_b,pearson` for every unordered pair of named vectors.
pub fn pearson_table(models: &[(String, Vec<f64>)]) -> Result<String> {
    let mut s = String::from("model_a,model_b,pearson\n");
    for (i, (a, x)) in models.iter().enumerate() {
        for (b, y) in &models[i + 1..] {
            let _ = writeln!(s, "{a},{b},{}", pearson(x, y)?);
        }
    }
    Ok(s)
}

/// `model,adj_r2` per bundle.
pub fn r2_table(bundles: &[(String, RunBundle)]) -> Result<String> {
    let mut s = String::from("model,adj_r2\n");
    for (name, b) in bundles {
        let _ = writeln!(s, "{name},{}", b.adjusted_r2()?);
    }
    Ok(s)
}

#[cfg(test)]
mod tests;
