import filecmp
from pathlib import Path

import pytest

from fireimpact.errors import ValidationError
from fireimpact.io_formats import read_manifest
from fireimpact.pipeline import assess, load_layers
from fireimpact.scenario import (
    DistrictSpec,
    ScenarioSpec,
    generate,
    kde_params_from_meta,
    read_ground_truth,
)

ALL_ROLES = {
    "detections", "landcover", "blocks", "roads", "buildings", "pois",
    "official_perimeter", "weights", "costs", "demographics",
}


def tree_files(root: Path) -> list[str]:
    return sorted(str(p.relative_to(root)) for p in root.rglob("*") if p.is_file())


class TestGenerate:
    def test_same_seed_byte_identical_trees(self, tmp_path):
        generate(ScenarioSpec(seed=11), tmp_path / "a")
        generate(ScenarioSpec(seed=11), tmp_path / "b")
        files_a = tree_files(tmp_path / "a")
        assert files_a == tree_files(tmp_path / "b")
        for rel in files_a:
            assert filecmp.cmp(tmp_path / "a" / rel, tmp_path / "b" / rel, shallow=False), rel

    def test_different_seed_differs(self, tmp_path):
        generate(ScenarioSpec(seed=1), tmp_path / "a")
        generate(ScenarioSpec(seed=2), tmp_path / "b")
        a = (tmp_path / "a" / "detections.csv").read_bytes()
        b = (tmp_path / "b" / "detections.csv").read_bytes()
        assert a != b

    def test_peak_days_reflected_in_ground_truth(self, tmp_path):
        spec = ScenarioSpec(seed=3)
        _, truth = generate(spec, tmp_path / "s")
        for dspec in spec.districts:
            rows = [r for r in truth.rows if r["district"] == dspec.name]
            counts = [int(r["new_burn_cells"]) for r in rows]
            assert counts.index(max(counts)) == dspec.peak_day - 1

    def test_zero_population_gives_zero_exposure_truth(self, tmp_path):
        spec = ScenarioSpec(
            seed=5,
            districts=[
                DistrictSpec("empty", 4, 51, 4, 51, 2, 0),
            ],
        )
        _, truth = generate(spec, tmp_path / "z")
        assert all(float(r["exposed_population"]) == 0.0 for r in truth.rows)

    def test_ground_truth_round_trip(self, tmp_path):
        _, truth = generate(ScenarioSpec(seed=9), tmp_path / "s")
        back = read_ground_truth(tmp_path / "s" / "ground_truth.csv")
        assert back.meta == truth.meta
        assert back.rows == truth.rows
        assert back.meta["rng"] == "numpy-PCG64"

    def test_bad_peak_day_rejected(self):
        with pytest.raises(ValidationError):
            ScenarioSpec(
                seed=1,
                districts=[DistrictSpec("x", 4, 51, 4, 51, 9, 10)],
            )


class TestPipelineMatchesTruth:
    def test_full_pipeline_reproduces_ground_truth_exactly(self, tmp_path):
        _, truth = generate(ScenarioSpec(seed=21), tmp_path / "s")
        manifest = read_manifest(tmp_path / "s" / "manifest.json")
        layers = load_layers(manifest, ALL_ROLES)
        records = assess(layers, kde_params_from_meta(truth.meta))
        by_key = {(r.date.isoformat(), r.district): r for r in records}
        assert len(records) == len(truth.rows)
        for row in truth.rows:
            rec = by_key[(row["date"], row["district"])]
            assert rec.new_burn_cells == int(row["new_burn_cells"])
            assert rec.exposed_population == float(row["exposed_population"])
            assert rec.land_total_cents == _cents(row["land_loss_usd"])
            assert rec.road_total_cents == _cents(row["road_loss_usd"])
            assert rec.building_loss_cents == _cents(row["building_loss_usd"])
            assert rec.building_count == int(row["building_count"])
            assert rec.poi_total == int(row["poi_count"])

    def test_demographic_groups_sum_to_exposure(self, tmp_path):
        _, truth = generate(ScenarioSpec(seed=22), tmp_path / "s")
        manifest = read_manifest(tmp_path / "s" / "manifest.json")
        layers = load_layers(manifest, ALL_ROLES)
        records = assess(layers, kde_params_from_meta(truth.meta))
        for rec in records:
            if rec.exposed_population == 0:
                continue
            for group in (rec.demographics.gender, rec.demographics.age,
                          rec.demographics.race):
                total = sum(group.values())
                assert abs(total - rec.exposed_population) <= (
                    1e-6 * rec.exposed_population
                )


def _cents(text: str) -> int:
    whole, _, frac = text.partition(".")
    return int(whole) * 100 + int(frac.ljust(2, "0")[:2] or "0")
