"""
Tests for lab settings, experiment config parsing and the fixture gallery.

Run:  PYTHONPATH=. python -m pytest tests/test_config_and_fixtures.py -v
"""

import json
from pathlib import Path

import pytest
import yaml

from src.agents.martingale_lab import MartingaleLab
from src.utils.config_parser import (
    LabSettings,
    load_experiment_config,
    load_settings,
    parse_experiment_config,
)
from src.utils.errors import ConfigError
from src.utils.fixtures import FixtureGallery

ROOT = Path(__file__).resolve().parents[1]
EXPERIMENTS = sorted((ROOT / "config" / "experiments").glob("*.json"))
GALLERY = FixtureGallery()


# -------------------------------------------------------
# Fixtures
# -------------------------------------------------------

@pytest.fixture
def minimal():
    return {
        "name": "minimal",
        "generated_filtration": {"kind": "dyadic", "depth": 2},
        "process": {"kind": "random_closed_martingale"},
        "diagnostics": ["verify_process"],
    }


@pytest.fixture
def fixtures_dir(tmp_path):
    entry = {
        "version": 1,
        "name": "tiny",
        "description": "Two-atom dyadic martingale",
        "experiment": {
            "name": "tiny",
            "generated_filtration": {"kind": "dyadic", "depth": 1},
            "process": {"kind": "closed_martingale", "x": [1, 3]},
            "diagnostics": ["verify_process"],
            "expectations": {"process.martingale": True},
        },
    }
    (tmp_path / "tiny.json").write_text(json.dumps(entry))
    (tmp_path / "stale.json").write_text(json.dumps({**entry, "version": 0, "name": "stale"}))
    return tmp_path


class TestLabSettings:
    """config/lab.yaml and its fallbacks."""

    def test_repository_settings(self):
        settings = load_settings()
        assert settings.profile_tolerance == 0.05
        assert settings.max_urn_depth == 12

    def test_missing_file_falls_back_to_defaults(self, tmp_path):
        assert load_settings(str(tmp_path / "absent.yaml")) == LabSettings()

    def test_partial_file(self, tmp_path):
        path = tmp_path / "lab.yaml"
        path.write_text(yaml.safe_dump({"tolerances": {"profile": 0.1}}))
        settings = load_settings(str(path))
        assert settings.profile_tolerance == 0.1
        assert settings.numeric_tolerance == LabSettings().numeric_tolerance


class TestExperimentConfig:
    """Schema validation; every failure names its field."""

    def test_minimal_config(self, minimal):
        config = parse_experiment_config(minimal)
        assert config.horizon == 50
        assert config.tolerances.profile == 0.05
        assert config.expectations == {}

    @pytest.mark.parametrize("patch, field_path", [
        ({"diagnostics": []}, "diagnostics"),
        ({"diagnostics": ["nope"]}, "diagnostics"),
        ({"horizon": 1}, "horizon"),
        ({"tolerances": {"profile": 0}}, "tolerances.profile"),
        ({"generated_filtration": {"kind": "block_averaging", "dim": 7}}, "generated_filtration"),
        ({"model": {"dim": 2, "norm": "l7"}}, "model.norm"),
        ({"filtration": {"stages": []}}, "filtration.stages"),
        ({"process": {"kind": "closed_martingale"}}, "process"),
        ({"positive_part_bound": 0}, "positive_part_bound"),
        ({"surprise": 1}, "surprise"),
    ])
    def test_field_paths(self, minimal, patch, field_path):
        minimal.update(patch)
        with pytest.raises(ConfigError) as info:
            parse_experiment_config(minimal)
        assert info.value.field_path == field_path
        assert str(info.value).startswith(f"{field_path}: ")

    def test_missing_diagnostics(self, minimal):
        del minimal["diagnostics"]
        with pytest.raises(ConfigError) as info:
            parse_experiment_config(minimal)
        assert info.value.field_path == "diagnostics"

    def test_two_filtration_sources(self, minimal):
        minimal["partition_chain"] = {"mu": [1], "partitions": [[[0]]]}
        with pytest.raises(ConfigError) as info:
            parse_experiment_config(minimal)
        assert info.value.field_path == "<root>"

    def test_bochner_needs_fiber(self, minimal):
        minimal["diagnostics"] = ["bochner"]
        with pytest.raises(ConfigError):
            parse_experiment_config(minimal)

    def test_yaml_file(self, tmp_path, minimal):
        path = tmp_path / "minimal.yaml"
        path.write_text(yaml.safe_dump(minimal))
        assert load_experiment_config(path).name == "minimal"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError) as info:
            load_experiment_config(tmp_path / "absent.json")
        assert info.value.field_path == "<file>"

    def test_non_mapping(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError):
            load_experiment_config(path)


class TestFixtureGallery:
    """Loading, version checks and fixture references."""

    def test_repository_gallery(self):
        assert GALLERY.names() == [
            "c0_block_martingale", "c0_partial_sums", "dyadic_closed_martingale", "polya_urn",
        ]
        assert all(entry["description"] for entry in GALLERY.describe())

    def test_unknown_fixture(self, fixtures_dir):
        with pytest.raises(ConfigError) as info:
            FixtureGallery(fixtures_dir).config("absent")
        assert info.value.field_path == "process.name"

    def test_version_mismatch(self, fixtures_dir):
        with pytest.raises(ConfigError) as info:
            FixtureGallery(fixtures_dir).config("stale")
        assert info.value.field_path == "version"

    def test_missing_directory(self, tmp_path):
        assert FixtureGallery(tmp_path / "absent").names() == []

    def test_resolve_keeps_explicit_fields(self, fixtures_dir):
        gallery = FixtureGallery(fixtures_dir)
        config = parse_experiment_config({
            "name": "renamed",
            "horizon": 12,
            "process": {"kind": "fixture", "name": "tiny"},
            "diagnostics": ["verify_process", "weaksub"],
        })
        resolved = gallery.resolve(config)
        assert resolved.name == "renamed"
        assert resolved.horizon == 12
        assert resolved.diagnostics == ["verify_process", "weaksub"]
        assert resolved.process.kind == "closed_martingale"
        assert resolved.expectations == {"process.martingale": True}

    def test_resolve_passes_plain_configs_through(self, minimal):
        config = parse_experiment_config(minimal)
        assert GALLERY.resolve(config) is config


class TestShippedExperiments:
    """Every fixture and example config meets its own expectations."""

    @pytest.mark.parametrize("name", GALLERY.names())
    def test_gallery_fixture(self, name):
        result = MartingaleLab(gallery=GALLERY).run(GALLERY.config(name))
        assert result.ok, result.mismatches

    @pytest.mark.parametrize("path", EXPERIMENTS, ids=lambda p: p.stem)
    def test_example_config(self, path):
        result = MartingaleLab(gallery=GALLERY).run(load_experiment_config(path))
        assert result.ok, result.mismatches
