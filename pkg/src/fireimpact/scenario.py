"""Seeded synthetic two-district scenarios with exact known ground truth.

The generator scripts which cells burn on which day, drops one detection
at the center of each scripted cell, and sizes the KDE bandwidth (4 m,
well under the 20 m cell) so thresholding recovers exactly the scripted
cells. Because every block is uniform in land cover and 4x4 cells, each
cell's population is the block total divided by 16, a value that is
exact in binary floating point; the ground-truth file therefore matches
the pipeline's output bit for bit, not just approximately.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dasymetric import WeightTable
from .errors import FormatError, ValidationError
from .geometry import Point, unproject_to_lonlat
from .grid import AnalysisGrid, CategoryRaster
from .impact import CostModel, TractDemographics, cents_to_usd, to_cents
from .io_formats import (
    FileManifest,
    write_ascii_grid,
    write_costs,
    write_demographics,
    write_feature_collection,
    write_manifest,
    write_weights,
)
from .perimeters import KdeParams

RNG_NAME = "numpy-PCG64"

POI_CATEGORIES = (
    "Business and Professional Services",
    "Community and Government",
    "Dining and Drinking",
    "Health and Medicine",
    "Retail",
)

ROAD_CLASSES = ("residential", "primary", "service", "track", "pedestrian")

BLOCK_SIDE = 4  # cells per block edge; 16 cells keeps per-cell shares dyadic

GROUND_TRUTH_COLUMNS = (
    "date",
    "district",
    "new_burn_cells",
    "exposed_population",
    "land_loss_usd",
    "road_loss_usd",
    "building_loss_usd",
    "building_count",
    "poi_count",
)


@dataclass(frozen=True)
class DistrictSpec:
    """One district: cell-coordinate extent, scripted peak day, population."""

    name: str
    row0: int
    row1: int  # inclusive
    col0: int
    col1: int  # inclusive
    peak_day: int  # 1-based day on which the burn front is widest
    population: int

    def n_rows(self) -> int:
        return self.row1 - self.row0 + 1

    def n_cols(self) -> int:
        return self.col1 - self.col0 + 1


@dataclass(frozen=True)
class ScenarioSpec:
    seed: int
    n_days: int = 6
    start_date: dt.date = dt.date(2025, 1, 7)
    n_rows: int = 56
    n_cols: int = 120
    cell_size: float = 20.0
    origin_lon: float = -118.25
    origin_lat: float = 34.05
    districts: list[DistrictSpec] = field(default_factory=list)
    # Land-cover class proportions for block assignment.
    class_mix: dict[int, float] = field(
        default_factory=lambda: {24: 0.3, 23: 0.2, 22: 0.2, 21: 0.15, 42: 0.1, 11: 0.05}
    )

    def __post_init__(self) -> None:
        if not self.districts:
            object.__setattr__(
                self,
                "districts",
                [
                    DistrictSpec("district-a", 4, 51, 4, 51, 1, 24000),
                    DistrictSpec("district-b", 4, 51, 64, 111, 5, 18000),
                ],
            )
        total = sum(self.class_mix.values())
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"class mix proportions sum to {total}, not 1")
        for d in self.districts:
            if not (1 <= d.peak_day <= self.n_days):
                raise ValidationError(
                    f"district {d.name}: peak_day {d.peak_day} outside 1..{self.n_days}"
                )
            if d.n_rows() % BLOCK_SIDE or d.n_cols() % BLOCK_SIDE:
                raise ValidationError(
                    f"district {d.name}: extent must be a multiple of {BLOCK_SIDE} cells"
                )
            need_cols = sum(_band_widths(self.n_days, d.peak_day)) + 2
            if d.n_cols() < need_cols or d.n_rows() < 3:
                raise ValidationError(
                    f"district {d.name}: extent too small for {self.n_days} "
                    f"burn bands (needs >= {need_cols} cols and >= 3 rows)"
                )
            if not (0 <= d.row0 <= d.row1 < self.n_rows):
                raise ValidationError(f"district {d.name}: rows outside the grid")
            if not (0 <= d.col0 <= d.col1 < self.n_cols):
                raise ValidationError(f"district {d.name}: cols outside the grid")

    @property
    def kde(self) -> KdeParams:
        """Parameters under which thresholding recovers the scripted cells."""
        return KdeParams(bandwidth_m=4.0)


@dataclass(frozen=True)
class GroundTruth:
    meta: dict[str, str]
    rows: list[dict[str, str]]


def _band_widths(n_days: int, peak_day: int) -> list[int]:
    """Daily burn-front widths in columns: 2 everywhere, 6 on the peak day."""
    widths = [2] * n_days
    widths[peak_day - 1] = 6
    return widths


def generate(spec: ScenarioSpec, out_dir: str | Path) -> tuple[FileManifest, GroundTruth]:
    """Write a complete input tree plus ground_truth.csv; returns both.

    The same seed always produces a byte-identical tree.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise FormatError(f"cannot create output directory {out}: {exc}") from exc
    rng = np.random.default_rng(spec.seed)
    grid = AnalysisGrid(0.0, 0.0, spec.cell_size, spec.n_rows, spec.n_cols)
    lon0, lat0 = spec.origin_lon, spec.origin_lat

    def cell_center_lonlat(r: int, c: int) -> tuple[float, float]:
        return unproject_to_lonlat(Point(grid.center_x(c), grid.center_y(r)), lon0, lat0)

    def corner_lonlat(i: int, j: int) -> list[float]:
        return list(unproject_to_lonlat(Point(grid.corner_x(j), grid.corner_y(i)), lon0, lat0))

    def cell_rect_coords(r0: int, r1: int, c0: int, c1: int) -> list[list[float]]:
        # Closed lon/lat ring around cells rows r0..r1, cols c0..c1.
        return [
            corner_lonlat(r1 + 1, c0),
            corner_lonlat(r1 + 1, c1 + 1),
            corner_lonlat(r0, c1 + 1),
            corner_lonlat(r0, c0),
            corner_lonlat(r1 + 1, c0),
        ]

    landcover_cells = np.full((spec.n_rows, spec.n_cols), 42, dtype=np.int32)
    weights = WeightTable.default()
    costs = CostModel.demo()
    mix_codes = sorted(spec.class_mix)
    mix_probs = np.array([spec.class_mix[c] for c in mix_codes])
    mix_probs = mix_probs / mix_probs.sum()

    block_features: list[dict] = []
    road_features: list[dict] = []
    building_features: list[dict] = []
    poi_features: list[dict] = []
    district_features: list[dict] = []
    detection_rows: list[tuple] = []
    demos: dict[str, TractDemographics] = {}
    truth_rows: list[dict[str, str]] = []
    dates = [spec.start_date + dt.timedelta(days=i) for i in range(spec.n_days)]

    for dspec in spec.districts:
        district_features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "Polygon",
                    "coordinates": [
                        cell_rect_coords(dspec.row0, dspec.row1, dspec.col0, dspec.col1)
                    ],
                },
                "properties": {"name": dspec.name},
            }
        )

        # Blocks: BLOCK_SIDE x BLOCK_SIDE tiles, one land-cover class each,
        # two tracts split down the middle, integer pops summing exactly.
        tile_rows = range(dspec.row0, dspec.row1 + 1, BLOCK_SIDE)
        tile_cols = range(dspec.col0, dspec.col1 + 1, BLOCK_SIDE)
        tiles = [(r, c) for r in tile_rows for c in tile_cols]
        pops = rng.multinomial(dspec.population, [1 / len(tiles)] * len(tiles))
        classes = rng.choice(mix_codes, size=len(tiles), p=mix_probs)
        mid_col = dspec.col0 + dspec.n_cols() // 2
        pop_per_cell = np.zeros((spec.n_rows, spec.n_cols))
        for (r, c), pop, code in zip(tiles, pops, classes):
            landcover_cells[r : r + BLOCK_SIDE, c : c + BLOCK_SIDE] = code
            tract_id = f"{dspec.name}-t{0 if c < mid_col else 1}"
            block_features.append(
                {
                    "type": "Feature",
                    "geometry": {
                        "type": "Polygon",
                        "coordinates": [
                            cell_rect_coords(r, r + BLOCK_SIDE - 1, c, c + BLOCK_SIDE - 1)
                        ],
                    },
                    "properties": {
                        "block_id": f"{dspec.name}-blk-{r}-{c}",
                        "pop": int(pop),
                        "tract_id": tract_id,
                    },
                }
            )
            # pop / 16 is exact in floats; fallback-uniform (zero-weight
            # classes) lands on the same per-cell value.
            pop_per_cell[r : r + BLOCK_SIDE, c : c + BLOCK_SIDE] = pop / (
                BLOCK_SIDE * BLOCK_SIDE
            )

        for tract_id in (f"{dspec.name}-t0", f"{dspec.name}-t1"):
            female = round(float(rng.uniform(0.45, 0.58)), 3)
            age_raw = rng.uniform(1, 5, size=3)
            age = [float(v) for v in age_raw / age_raw.sum()]
            race_raw = rng.uniform(1, 5, size=5)
            race = [float(v) for v in race_raw / race_raw.sum()]
            demos[tract_id] = TractDemographics(
                tract_id,
                gender={"female": female, "male": 1.0 - female},
                age={"age_0_17": age[0], "age_18_64": age[1], "age_65_plus": age[2]},
                race={
                    "white": race[0],
                    "asian": race[1],
                    "black": race[2],
                    "multiracial": race[3],
                    "other": race[4],
                },
            )

        # Scripted burn: contiguous column bands, one per day, widest on
        # the peak day; every cell burns exactly once.
        widths = _band_widths(spec.n_days, dspec.peak_day)
        band_cols: list[range] = []
        col = dspec.col0 + 1
        for w in widths:
            band_cols.append(range(col, col + w))
            col += w
        burn_rows = range(dspec.row0 + 1, dspec.row1)
        burn_cells_by_day = [
            [(r, c) for r in burn_rows for c in cols] for cols in band_cols
        ]

        # Roads: one horizontal line per class with endpoints at cell
        # centers, crossing every band.
        road_span = (dspec.col0 + 1, col - 1)
        road_rows = {}
        for k, rclass in enumerate(ROAD_CLASSES):
            rr = dspec.row0 + 4 + 9 * k
            road_rows[rclass] = rr
            coords = [
                list(cell_center_lonlat(rr, road_span[0])),
                list(cell_center_lonlat(rr, road_span[1])),
            ]
            road_features.append(
                {
                    "type": "Feature",
                    "geometry": {"type": "LineString", "coordinates": coords},
                    "properties": {"class": rclass},
                }
            )

        # Buildings and POIs: subsets of burn cells, plus never-burned
        # controls east of the burn region.
        b_index = 0
        building_cells: list[tuple[int, int]] = []
        poi_cells: list[tuple[tuple[int, int], str]] = []
        for day_cells in burn_cells_by_day:
            for cell in day_cells:
                if rng.random() < 0.25:
                    building_cells.append(cell)
                if rng.random() < 0.2:
                    poi_cells.append(
                        (cell, POI_CATEGORIES[int(rng.integers(len(POI_CATEGORIES)))])
                    )
        control_cols = range(col + 2, min(col + 6, dspec.col1))
        for r in range(dspec.row0 + 2, dspec.row0 + 8):
            for c in control_cols:
                if rng.random() < 0.3:
                    building_cells.append((r, c))
                if rng.random() < 0.2:
                    poi_cells.append(
                        ((r, c), POI_CATEGORIES[int(rng.integers(len(POI_CATEGORIES)))])
                    )
        for r, c in building_cells:
            ring = _square_ring_lonlat(grid, r, c, 8.0, lon0, lat0)
            building_features.append(
                {
                    "type": "Feature",
                    "geometry": {"type": "Polygon", "coordinates": [ring]},
                    "properties": {"id": f"{dspec.name}-b{b_index:04d}"},
                }
            )
            b_index += 1
        for (r, c), cat in poi_cells:
            lon, lat = cell_center_lonlat(r, c)
            poi_features.append(
                {
                    "type": "Feature",
                    "geometry": {"type": "Point", "coordinates": [lon, lat]},
                    "properties": {"category": cat},
                }
            )

        # Detections: one per scripted cell per day, plus daily decoys
        # outside every district perimeter.
        for day_index, day_cells in enumerate(burn_cells_by_day):
            date = dates[day_index]
            for r, c in day_cells:
                lon, lat = cell_center_lonlat(r, c)
                frp = round(float(rng.uniform(5, 320)), 1)
                conf = ("l", "n", "h")[int(rng.integers(3))]
                detection_rows.append((lat, lon, date.isoformat(), frp, conf))

        # Ground truth by direct enumeration of the scripted cells. Every
        # cell burns exactly once, so a feature's burn day is its cell's
        # band day; control features never appear.
        land_cents_per_cell = {
            code: to_cents(costs.land_cost[code] * grid.cell_area)
            for code in mix_codes + [42]
        }
        cell_day = {
            cell: i for i, cells in enumerate(burn_cells_by_day) for cell in cells
        }
        building_cents = to_cents(64.0 * costs.building_cost)
        for day_index, day_cells in enumerate(burn_cells_by_day):
            date = dates[day_index]
            exposed = 0.0
            land_cents = 0
            for r, c in day_cells:
                exposed += pop_per_cell[r, c]
                land_cents += land_cents_per_cell[int(landcover_cells[r, c])]
            road_cents = 0
            for rclass, rr in road_rows.items():
                if rr not in burn_rows:
                    continue
                rate = costs.road_cost[rclass]
                for c in band_cols[day_index]:
                    length = 10.0 if c in (road_span[0], road_span[1]) else 20.0
                    road_cents += to_cents(length * rate)
            b_count = sum(1 for cell in building_cells if cell_day.get(cell) == day_index)
            poi_n = sum(1 for (cell, _) in poi_cells if cell_day.get(cell) == day_index)
            truth_rows.append(
                {
                    "date": date.isoformat(),
                    "district": dspec.name,
                    "new_burn_cells": str(len(day_cells)),
                    "exposed_population": repr(float(exposed)),
                    "land_loss_usd": cents_to_usd(land_cents),
                    "road_loss_usd": cents_to_usd(road_cents),
                    "building_loss_usd": cents_to_usd(b_count * building_cents),
                    "building_count": str(b_count),
                    "poi_count": str(poi_n),
                }
            )

    # Daily decoy detections well outside every district perimeter.
    decoy_cells = [(1, spec.n_cols - 2), (2, spec.n_cols - 3)]
    for day_index, date in enumerate(dates):
        for r, c in decoy_cells:
            lon, lat = cell_center_lonlat(r, c)
            detection_rows.append((lat, lon, date.isoformat(), 12.0, "l"))

    # Write everything.
    write_ascii_grid(CategoryRaster(grid, landcover_cells), out / "landcover.asc")
    with (out / "detections.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["latitude", "longitude", "acq_date", "frp", "confidence"])
        for lat, lon, date, frp, conf in detection_rows:
            writer.writerow([repr(lat), repr(lon), date, frp, conf])
    write_feature_collection(block_features, out / "blocks.geojson")
    write_feature_collection(road_features, out / "roads.geojson")
    write_feature_collection(building_features, out / "buildings.geojson")
    write_feature_collection(poi_features, out / "pois.geojson")
    write_feature_collection(district_features, out / "perimeter.geojson")
    write_weights(weights, out / "weights.json")
    write_costs(costs, out / "costs.json")
    write_demographics(demos, out / "demographics.csv")

    manifest = FileManifest(
        origin_lon=lon0,
        origin_lat=lat0,
        grid=grid,
        paths={
            "detections": out / "detections.csv",
            "landcover": out / "landcover.asc",
            "blocks": out / "blocks.geojson",
            "roads": out / "roads.geojson",
            "buildings": out / "buildings.geojson",
            "pois": out / "pois.geojson",
            "official_perimeter": out / "perimeter.geojson",
            "weights": out / "weights.json",
            "costs": out / "costs.json",
            "demographics": out / "demographics.csv",
        },
        start_date=dates[0],
        end_date=dates[-1],
    )
    write_manifest(manifest, out / "manifest.json")

    meta = {
        "generator": "fireimpact-synth",
        "seed": str(spec.seed),
        "rng": RNG_NAME,
        "bandwidth_m": repr(spec.kde.bandwidth_m),
        "cutoff_sigmas": repr(spec.kde.cutoff_sigmas),
        "threshold_mode": spec.kde.threshold_mode,
        "threshold_value": repr(spec.kde.threshold_value),
    }
    truth_rows.sort(key=lambda row: (row["date"], row["district"]))
    truth = GroundTruth(meta=meta, rows=truth_rows)
    write_ground_truth(truth, out / "ground_truth.csv")
    return manifest, truth


def _square_ring_lonlat(
    grid: AnalysisGrid, r: int, c: int, side: float, lon0: float, lat0: float
) -> list[list[float]]:
    cx, cy = grid.center_x(c), grid.center_y(r)
    h = side / 2.0
    corners = [
        Point(cx - h, cy - h),
        Point(cx + h, cy - h),
        Point(cx + h, cy + h),
        Point(cx - h, cy + h),
        Point(cx - h, cy - h),
    ]
    return [list(unproject_to_lonlat(p, lon0, lat0)) for p in corners]


def write_ground_truth(truth: GroundTruth, path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        for key, value in truth.meta.items():
            fh.write(f"# {key}={value}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(GROUND_TRUTH_COLUMNS)
        for row in truth.rows:
            writer.writerow([row[col] for col in GROUND_TRUTH_COLUMNS])


def read_ground_truth(path: str | Path) -> GroundTruth:
    meta: dict[str, str] = {}
    lines = Path(path).read_text().split("\n")
    body_start = 0
    for i, line in enumerate(lines):
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key.strip()] = value.strip()
            body_start = i + 1
        else:
            break
    reader = csv.DictReader(lines[body_start:])
    rows = [row for row in reader if row.get("date")]
    return GroundTruth(meta=meta, rows=rows)


def kde_params_from_meta(meta: dict[str, str]) -> KdeParams:
    return KdeParams(
        bandwidth_m=float(meta["bandwidth_m"]),
        cutoff_sigmas=float(meta["cutoff_sigmas"]),
        threshold_mode=meta["threshold_mode"],  # type: ignore[arg-type]
        threshold_value=float(meta["threshold_value"]),
    )
