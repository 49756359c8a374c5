"""Land-cover-weighted downscaling of block populations to the grid.

Each census block's population is spread over the cells its boundary
captures, proportionally to the relative weight of each cell's land
cover class, so a block's total is preserved exactly (the pycnophylactic
property) and uninhabitable classes receive nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UnknownClassError, ValidationError
from .geometry import Polygon, polygon_centroid, polygons_cell_indices
from .grid import AnalysisGrid, CategoryRaster, RealRaster

# Persons per cell; semantically distinct from other real rasters.
PopulationGrid = RealRaster

# NLCD legend code -> relative weight. Water and barren land hold nobody;
# developed classes dominate.
DEFAULT_NLCD_WEIGHTS: dict[int, float] = {
    11: 0,  # open water
    21: 26,  # developed, open space
    22: 10,  # developed, low intensity
    23: 15,  # developed, medium intensity
    24: 46,  # developed, high intensity
    31: 0,  # barren land
    41: 3,  # deciduous forest
    42: 3,  # evergreen forest
    43: 4,  # mixed forest
    52: 3,  # shrub/scrub
    71: 4,  # grassland/herbaceous
    81: 5,  # pasture/hay
    82: 10,  # cultivated crops
    90: 1,  # woody wetlands
    95: 1,  # emergent herbaceous wetlands
}

_UNINHABITABLE_CODES = (11, 31)


@dataclass(frozen=True)
class WeightTable:
    """Relative allocation weight per land cover class code."""

    weights: dict[int, float]

    def __post_init__(self) -> None:
        w = {int(k): float(v) for k, v in self.weights.items()}
        if not w:
            raise ValidationError("weight table is empty")
        if all(v <= 0 for v in w.values()):
            raise ValidationError("weight table needs at least one positive weight")
        for code, v in w.items():
            if v < 0:
                raise ValidationError(f"negative weight {v} for class {code}")
        for code in _UNINHABITABLE_CODES:
            if w.get(code, 0) != 0:
                raise ValidationError(
                    f"class {code} (water/barren) must carry weight 0, got {w[code]}"
                )
        object.__setattr__(self, "weights", w)

    @classmethod
    def default(cls) -> "WeightTable":
        return cls(dict(DEFAULT_NLCD_WEIGHTS))


@dataclass(frozen=True)
class CensusBlock:
    """One census block: boundary part(s), total population, parent tract."""

    block_id: str
    parts: list[Polygon]
    pop: float
    tract_id: str

    def __post_init__(self) -> None:
        if not self.parts:
            raise ValidationError(f"block {self.block_id} has no boundary parts")
        if not (self.pop >= 0):
            raise ValidationError(f"block {self.block_id} has negative pop {self.pop}")


@dataclass
class BlockAllocation:
    """How one block was placed on the grid."""

    block_id: str
    rows: np.ndarray
    cols: np.ndarray
    fallback: str | None = None  # None | "uniform" | "centroid"


@dataclass
class DownscaleReport:
    """Side record of a downscale run: placements, fallbacks, overlaps."""

    allocations: list[BlockAllocation] = field(default_factory=list)
    overlap_cells: int = 0

    def fallback_ids(self) -> set[str]:
        return {a.block_id for a in self.allocations if a.fallback}


def allocation_factor_raster(
    landcover: CategoryRaster, w: WeightTable
) -> RealRaster:
    """Per-cell relative weight from the class code; nodata cells get 0."""
    codes = np.unique(landcover.cells)
    lut_lo = int(codes.min())
    lut = np.zeros(int(codes.max()) - lut_lo + 1)
    for code in codes:
        code = int(code)
        if code == landcover.nodata:
            continue
        if code not in w.weights:
            raise UnknownClassError(f"land cover class {code} has no weight entry")
        lut[code - lut_lo] = w.weights[code]
    return RealRaster(landcover.grid, lut[landcover.cells - lut_lo])


def rasterize_blocks(
    blocks: list[CensusBlock], grid: AnalysisGrid
) -> DownscaleReport:
    """Assign grid cells to blocks by the cell-center rule, first wins.

    Blocks that capture no cell centers fall back to the single cell
    containing their centroid (clamped into the grid), so no population
    is lost at the grid resolution.
    """
    claimed = np.zeros(grid.shape, dtype=bool)
    report = DownscaleReport()
    for block in blocks:
        rows, cols = polygons_cell_indices(block.parts, grid)
        fallback = None
        if rows.size:
            free = ~claimed[rows, cols]
            report.overlap_cells += int(rows.size - free.sum())
            rows, cols = rows[free], cols[free]
        if rows.size == 0:
            fallback = "centroid"
            rows, cols = _centroid_cell(block, grid)
        claimed[rows, cols] = True
        report.allocations.append(BlockAllocation(block.block_id, rows, cols, fallback))
    return report


def _centroid_cell(
    block: CensusBlock, grid: AnalysisGrid
) -> tuple[np.ndarray, np.ndarray]:
    from .geometry import polygon_area

    num_x = num_y = den = 0.0
    for part in block.parts:
        area = polygon_area(part)
        c = polygon_centroid(part)
        weight = area if area > 0 else 1.0
        num_x += weight * c.x
        num_y += weight * c.y
        den += weight
    cx, cy = num_x / den, num_y / den
    col = int(np.clip((cx - grid.origin_x) // grid.cell_size, 0, grid.n_cols - 1))
    band = int(np.clip((cy - grid.origin_y) // grid.cell_size, 0, grid.n_rows - 1))
    row = grid.n_rows - 1 - band
    return np.array([row], dtype=np.int64), np.array([col], dtype=np.int64)


def tabulate_block_classes(
    landcover: CategoryRaster,
    blocks: list[CensusBlock],
    grid: AnalysisGrid,
    report: DownscaleReport | None = None,
) -> list[dict[int, int]]:
    """Class-code pixel counts per block over the cells each block owns."""
    if report is None:
        report = rasterize_blocks(blocks, grid)
    out: list[dict[int, int]] = []
    for alloc in report.allocations:
        if alloc.fallback == "centroid":
            out.append({})
            continue
        codes, counts = np.unique(
            landcover.cells[alloc.rows, alloc.cols], return_counts=True
        )
        out.append({int(k): int(v) for k, v in zip(codes, counts)})
    return out


def downscale(
    blocks: list[CensusBlock],
    landcover: CategoryRaster,
    w: WeightTable,
    grid: AnalysisGrid,
) -> tuple[PopulationGrid, DownscaleReport]:
    """Allocate block populations over cells by relative land-cover weight.

    Within a block, cell i receives pop * RA(i) / sum(RA over the block);
    blocks whose weights sum to zero fall back to a uniform spread so no
    population is dropped (flagged in the report).
    """
    if landcover.grid != grid:
        raise ValidationError("landcover raster is not on the analysis grid")
    ra = allocation_factor_raster(landcover, w)
    report = rasterize_blocks(blocks, grid)
    out = np.zeros(grid.shape)
    for block, alloc in zip(blocks, report.allocations):
        rows, cols = alloc.rows, alloc.cols
        if alloc.fallback == "centroid":
            out[rows, cols] += block.pop
            continue
        cell_ra = ra.cells[rows, cols]
        total = float(cell_ra.sum())
        if total > 0.0:
            out[rows, cols] += block.pop * (cell_ra / total)
        else:
            alloc.fallback = "uniform"
            out[rows, cols] += block.pop / rows.size
    return RealRaster(grid, out), report


@dataclass(frozen=True)
class MassEntry:
    block_id: str
    pop: float
    allocated: float
    rel_err: float
    fallback: str | None


@dataclass(frozen=True)
class MassReport:
    entries: list[MassEntry]

    def max_rel_err(self) -> float:
        """Largest relative error over non-fallback blocks."""
        errs = [e.rel_err for e in self.entries if e.fallback is None]
        return max(errs, default=0.0)

    def failures(self, tol: float = 1e-9) -> list[MassEntry]:
        return [e for e in self.entries if e.fallback is None and e.rel_err > tol]


def validate_mass(
    blocks: list[CensusBlock],
    popgrid: PopulationGrid,
    report: DownscaleReport | None = None,
    tol: float = 1e-9,
) -> MassReport:
    """Per-block |allocated - pop| / max(pop, 1) over the block's cells.

    Pass the report from :func:`downscale` so fallback blocks are
    exempted; without it, blocks are re-rasterized the same way and only
    centroid fallbacks can be recognized.
    """
    if report is None:
        report = rasterize_blocks(blocks, popgrid.grid)
    entries = []
    for block, alloc in zip(blocks, report.allocations):
        allocated = float(popgrid.cells[alloc.rows, alloc.cols].sum())
        rel_err = abs(allocated - block.pop) / max(block.pop, 1.0)
        entries.append(
            MassEntry(block.block_id, block.pop, allocated, rel_err, alloc.fallback)
        )
    return MassReport(entries)
