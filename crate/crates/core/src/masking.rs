//! Laser-level occlusion: tile the effective window into square patches of
//! grid cells and drop every return whose ray falls in a masked patch.

use rand::seq::index;

use crate::error::{Error, Result};
use crate::lidar::{raycast_cells, EffectiveWindow, HitCloud, LaserGrid};
use crate::scene::SceneMesh;
use crate::rng::Stream;

/// Patch tiling of a window and the set of masked patches.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskPlan {
    pub window: EffectiveWindow,
    pub patch_size: usize,
    pub patches_wide: usize,
    pub patches_high: usize,
    pub r_keep: f64,
    /// Masked patch ids (`row * patches_wide + col`), ascending.
    pub masked_patches: Vec<u32>,
    masked: Vec<bool>,
}

/// `max(1, floor(min(width, height) / 8))`, spans in grid cells.
pub fn patch_size(width: usize, height: usize) -> usize {
    (width.min(height) / 8).max(1)
}

/// Number of patches masked for `total` patches at `r_keep`.
pub fn masked_count(total: usize, r_keep: f64) -> usize {
    (((1.0 - r_keep) * total as f64).round() as usize).min(total)
}

impl MaskPlan {
    pub fn total_patches(&self) -> usize {
        self.patches_wide * self.patches_high
    }

    /// Patch id of window-local cell `(col, row)`.
    pub fn patch_of(&self, col: usize, row: usize) -> usize {
        (row / self.patch_size) * self.patches_wide + col / self.patch_size
    }

    /// Whether grid cell `(i, j)` lies in a masked patch. Cells outside the
    /// window are never masked.
    pub fn is_masked(&self, i: usize, j: usize) -> bool {
        self.window
            .local(i, j)
            .is_some_and(|(c, r)| self.masked[self.patch_of(c, r)])
    }

    /// Plan with an explicit masked set, for replaying or forcing a mask.
    pub fn with_masked(window: EffectiveWindow, r_keep: f64, masked_patches: Vec<u32>) -> Result<Self> {
        let mut plan = Self::tiling(window, r_keep)?;
        for &p in &masked_patches {
            let slot = plan
                .masked
                .get_mut(p as usize)
                .ok_or_else(|| Error::Input(format!("patch {p} outside the tiling")))?;
            *slot = true;
        }
        plan.masked_patches = masked_patches;
        plan.masked_patches.sort_unstable();
        plan.masked_patches.dedup();
        Ok(plan)
    }

    fn tiling(window: EffectiveWindow, r_keep: f64) -> Result<Self> {
        if window.is_empty() {
            return Err(Error::Input("cannot mask an empty window".into()));
        }
        if !(r_keep > 0.0 && r_keep <= 1.0) {
            return Err(Error::Input(format!("r_keep {r_keep} must lie in (0, 1]")));
        }
        let patch_size = patch_size(window.width(), window.height());
        let patches_wide = window.width().div_ceil(patch_size);
        let patches_high = window.height().div_ceil(patch_size);
        Ok(Self {
            window,
            patch_size,
            patches_wide,
            patches_high,
            r_keep,
            masked_patches: Vec::new(),
            masked: vec![false; patches_wide * patches_high],
        })
    }
}

/// Samples `round((1 - r_keep) * patches)` patches without replacement.
pub fn plan_mask(window: &EffectiveWindow, r_keep: f64, rng: &mut Stream) -> Result<MaskPlan> {
    let mut plan = MaskPlan::tiling(*window, r_keep)?;
    let total = plan.total_patches();
    let m = masked_count(total, r_keep);
    let mut chosen: Vec<u32> = index::sample(rng, total, m).into_iter().map(|p| p as u32).collect();
    chosen.sort_unstable();
    for &p in &chosen {
        plan.masked[p as usize] = true;
    }
    plan.masked_patches = chosen;
    Ok(plan)
}

/// Removes returns whose ray cell is masked; survivors keep their order.
pub fn apply_mask(cloud: &HitCloud, plan: &MaskPlan) -> HitCloud {
    if plan.masked_patches.is_empty() {
        return cloud.clone();
    }
    cloud.filter(|k| {
        let (i, j) = cloud.ray_cell[k];
        !plan.is_masked(i as usize, j as usize)
    })
}

/// Casts only the rays outside masked patches. Same returns as
/// `apply_mask(&raycast(..), plan)`, with fewer rays traced.
pub fn raycast_unmasked(grid: &LaserGrid, scene: &SceneMesh, plan: &MaskPlan) -> HitCloud {
    raycast_cells(grid, scene, &plan.window, |i, j| !plan.is_masked(i, j))
}
