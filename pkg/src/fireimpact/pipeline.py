"""End-to-end assembly: manifest -> layers -> per-district daily records.

Kept separate from the CLI so each stage is callable from tests and the
subcommands stay thin. Every function here is deterministic for fixed
inputs.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

from .dasymetric import (
    CensusBlock,
    DownscaleReport,
    MassReport,
    PopulationGrid,
    WeightTable,
    downscale,
    validate_mass,
)
from .errors import ValidationError
from .geometry import point_in_polygon
from .grid import CategoryRaster, Mask
from .impact import (
    BuildingFeature,
    CostModel,
    DailyImpactRecord,
    Demographics,
    District,
    PoiFeature,
    RoadFeature,
    TractDemographics,
    building_loss,
    demographic_breakdown,
    land_use_loss,
    poi_exposure,
    population_exposure,
    road_loss,
)
from .io_formats import (
    FileManifest,
    group_detections_by_date,
    read_ascii_grid,
    read_blocks,
    read_buildings,
    read_costs,
    read_demographics,
    read_detections,
    read_districts,
    read_pois,
    read_roads,
    read_weights,
)
from .perimeters import DailyPerimeter, Detection, KdeParams, extract_daily_perimeters


@dataclass
class Layers:
    """Everything a run needs, loaded from the manifest's declared files."""

    manifest: FileManifest
    detections: list[Detection] = field(default_factory=list)
    landcover: CategoryRaster | None = None
    blocks: list[CensusBlock] = field(default_factory=list)
    roads: list[RoadFeature] = field(default_factory=list)
    buildings: list[BuildingFeature] = field(default_factory=list)
    pois: list[PoiFeature] = field(default_factory=list)
    districts: list[District] = field(default_factory=list)
    weights: WeightTable = field(default_factory=WeightTable.default)
    costs: CostModel = field(default_factory=CostModel.demo)
    demographics: dict[str, TractDemographics] | None = None


def load_layers(manifest: FileManifest, roles: set[str]) -> Layers:
    """Load the requested roles; weights and costs fall back to defaults."""
    layers = Layers(manifest=manifest)
    paths = manifest.paths
    lon, lat = manifest.origin_lon, manifest.origin_lat

    def need(role: str) -> None:
        if role not in paths:
            raise ValidationError(f"manifest does not declare a {role!r} file")

    if "detections" in roles:
        need("detections")
        layers.detections = read_detections(
            paths["detections"], lon, lat, manifest.start_date, manifest.end_date
        )
    if "landcover" in roles:
        need("landcover")
        raster = read_ascii_grid(paths["landcover"], kind="category")
        layers.landcover = resample_landcover(raster, manifest)
    if "blocks" in roles:
        need("blocks")
        layers.blocks = read_blocks(paths["blocks"], lon, lat)
    if "roads" in roles:
        need("roads")
        layers.roads = read_roads(paths["roads"], lon, lat)
    if "buildings" in roles:
        need("buildings")
        layers.buildings = read_buildings(paths["buildings"], lon, lat)
    if "pois" in roles:
        need("pois")
        layers.pois = read_pois(paths["pois"], lon, lat)
    if "official_perimeter" in roles:
        need("official_perimeter")
        layers.districts = read_districts(paths["official_perimeter"], lon, lat)
    if "weights" in roles and "weights" in paths:
        layers.weights = read_weights(paths["weights"])
    if "costs" in roles and "costs" in paths:
        layers.costs = read_costs(paths["costs"])
    if "demographics" in roles and "demographics" in paths:
        layers.demographics = read_demographics(paths["demographics"])
    return layers


def resample_landcover(
    raster: CategoryRaster, manifest: FileManifest
) -> CategoryRaster:
    """Bring a land cover raster onto the analysis grid if it is not on it."""
    from .grid import resample_nearest

    if raster.grid == manifest.grid:
        return raster
    return resample_nearest(raster, manifest.grid)


def event_dates(detections: list[Detection]) -> list[dt.date]:
    """Contiguous calendar range spanning all detections."""
    if not detections:
        return []
    days = sorted({d.date for d in detections})
    span = (days[-1] - days[0]).days
    return [days[0] + dt.timedelta(days=i) for i in range(span + 1)]


def compute_perimeters(
    layers: Layers, params: KdeParams
) -> dict[str, list[DailyPerimeter]]:
    """Per-district daily perimeters from the district's own detections.

    A detection belongs to a district when it falls inside the district's
    official perimeter; all districts share one event date range so their
    daily sequences line up.
    """
    if not layers.districts:
        raise ValidationError("no districts in the official perimeter file")
    dates = event_dates(layers.detections)
    out: dict[str, list[DailyPerimeter]] = {}
    for district in layers.districts:
        mine = [
            det
            for det in layers.detections
            if any(point_in_polygon(det.location, part) for part in district.perimeter)
        ]
        out[district.name] = extract_daily_perimeters(
            group_detections_by_date(mine),
            district.perimeter,
            layers.manifest.grid,
            params,
            dates=dates,
        )
    return out


def compute_population(
    layers: Layers,
) -> tuple[PopulationGrid, DownscaleReport, MassReport]:
    if layers.landcover is None:
        raise ValidationError("population downscaling needs a landcover layer")
    popgrid, report = downscale(
        layers.blocks, layers.landcover, layers.weights, layers.manifest.grid
    )
    mass = validate_mass(layers.blocks, popgrid, report)
    if mass.failures():
        worst = max(mass.failures(), key=lambda e: e.rel_err)
        raise ValidationError(
            f"mass preservation failed: block {worst.block_id} off by {worst.rel_err:g}"
        )
    return popgrid, report, mass


def assess(
    layers: Layers,
    params: KdeParams,
    active_extent: bool = False,
) -> list[DailyImpactRecord]:
    """Full tri-environment accounting, one record per (date, district).

    Dollar losses always attribute to a cell's first burned day; with
    ``active_extent`` the exposure figures (population, POIs,
    demographics) use the day's whole active mask instead of the new burn.
    """
    perimeters = compute_perimeters(layers, params)
    popgrid, ds_report, _ = compute_population(layers)
    block_tracts = {b.block_id: b.tract_id for b in layers.blocks}

    records: list[DailyImpactRecord] = []
    for name in sorted(perimeters):
        days = perimeters[name]
        empty = Mask.empty(layers.manifest.grid)
        for i, day in enumerate(days):
            before = days[i - 1].cumulative if i > 0 else empty
            exposure_mask = day.active if active_extent else day.new_burn
            land = land_use_loss(day.new_burn, layers.landcover, layers.costs)
            road_cents, road_m = road_loss(day.new_burn, layers.roads, layers.costs)
            b_cents, b_count = building_loss(
                before, day.new_burn, layers.buildings, layers.costs
            )
            pois = poi_exposure(exposure_mask, layers.pois)
            exposed = population_exposure(exposure_mask, popgrid)
            if layers.demographics is not None:
                by_block = exposure_by_block(exposure_mask, popgrid, ds_report)
                demo = demographic_breakdown(
                    by_block, block_tracts, layers.demographics
                )
            else:
                demo = Demographics.zeros()
            records.append(
                DailyImpactRecord(
                    date=day.date,
                    district=name,
                    land_loss_cents=land,
                    road_loss_cents=road_cents,
                    road_length_m=road_m,
                    building_loss_cents=b_cents,
                    building_count=b_count,
                    poi_count=pois,
                    exposed_population=exposed,
                    demographics=demo,
                    new_burn_cells=day.new_burn.popcount(),
                )
            )
    records.sort(key=lambda r: (r.date, r.district))
    return records


def exposure_by_block(
    mask: Mask, popgrid: PopulationGrid, report: DownscaleReport
) -> dict[str, float]:
    """Exposed persons per block: the block's cells that fall in the mask."""
    out: dict[str, float] = {}
    for alloc in report.allocations:
        hit = mask.bits[alloc.rows, alloc.cols]
        if hit.any():
            exposed = float(popgrid.cells[alloc.rows[hit], alloc.cols[hit]].sum())
        else:
            exposed = 0.0
        out[alloc.block_id] = exposed
    return out
