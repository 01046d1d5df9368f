import json

import numpy as np
import pytest

from conftest import random_image
from rainforge import (
    PipelineConfig,
    RainParams,
    SlicParams,
    load_image,
    regenerate_pair,
    run_pipeline,
    sample_seed,
    save_image,
    write_manifest,
)
from rainforge.exceptions import ConfigError, EmptyInputDirError
from rainforge.pipeline import PairedSample
from rainforge.metrics import ScoreReport


def build_dirs(tmp_path, rng, n_sources=3, n_targets=3, size=36):
    source_dir = tmp_path / "sources"
    target_dir = tmp_path / "targets"
    source_dir.mkdir()
    target_dir.mkdir()
    for i in range(n_sources):
        save_image(random_image(rng, size, size), source_dir / f"src_{i}.png")
    for i in range(n_targets):
        save_image(random_image(rng, size + 4, size + 4), target_dir / f"tgt_{i}.png")
    return source_dir, target_dir


def small_config(tmp_path, rng, **overrides):
    source_dir, target_dir = build_dirs(tmp_path, rng)
    defaults = dict(
        source_dir=source_dir,
        target_dir=target_dir,
        out_dir=tmp_path / "out",
        seed=7,
        slic=SlicParams(n_segments=6),
        patches_per_target=2,
    )
    defaults.update(overrides)
    return PipelineConfig(**defaults)


def read_bytes_tree(out_dir):
    return {
        str(p.relative_to(out_dir)): p.read_bytes()
        for p in sorted(out_dir.rglob("*"))
        if p.is_file()
    }


class TestRunPipeline:
    def test_outputs_and_manifest(self, tmp_path, rng):
        config = small_config(tmp_path, rng)
        result = run_pipeline(config)
        assert len(result.samples) == 3
        assert not result.failures
        for sample in result.samples:
            rainy = load_image(sample.rainy_path)
            clean = load_image(sample.clean_path)
            assert rainy.shape == clean.shape
        lines = result.manifest_path.read_text().splitlines()
        assert len(lines) == 4  # header + 3 samples
        header = json.loads(lines[0])
        assert header["kind"] == "rainforge-manifest"
        assert header["config"]["seed"] == 7

    def test_manifest_roundtrip_recovers_drawn_params(self, tmp_path, rng):
        config = small_config(tmp_path, rng)
        result = run_pipeline(config)
        records = {
            json.loads(line)["id"]: json.loads(line)
            for line in result.manifest_path.read_text().splitlines()[1:]
        }
        for sample in result.samples:
            assert records[sample.id]["drawn_params"] == sample.drawn_params

    def test_two_runs_byte_identical(self, tmp_path, rng):
        source_dir, target_dir = build_dirs(tmp_path, rng)
        trees = []
        for name in ("out_a", "out_b"):
            config = PipelineConfig(
                source_dir=source_dir,
                target_dir=target_dir,
                out_dir=tmp_path / name,
                seed=7,
                slic=SlicParams(n_segments=6),
                patches_per_target=2,
            )
            run_pipeline(config)
            trees.append(read_bytes_tree(config.out_dir))
        assert trees[0] == trees[1]

    def test_worker_count_does_not_change_outputs(self, tmp_path, rng):
        source_dir, target_dir = build_dirs(tmp_path, rng, n_targets=4)
        runs = {}
        for workers in (1, 4):
            config = PipelineConfig(
                source_dir=source_dir,
                target_dir=target_dir,
                out_dir=tmp_path / f"out_w{workers}",
                seed=3,
                slic=SlicParams(n_segments=6),
                patches_per_target=2,
                workers=workers,
            )
            run_pipeline(config)
            runs[workers] = read_bytes_tree(config.out_dir)
        assert runs[1] == runs[4]

    def test_degenerate_config_is_identity(self, tmp_path, rng):
        config = small_config(
            tmp_path,
            rng,
            patches_per_target=0,
            rain=RainParams(salt_density=(1e-9, 1e-9), beta=(1.0, 1.0)),
        )
        result = run_pipeline(config)
        for sample in result.samples:
            target = load_image(sample.target_image)
            clean = load_image(sample.clean_path)
            rainy = load_image(sample.rainy_path)
            assert np.abs(clean - target).max() <= 2 / 255
            assert np.abs(rainy - clean).max() <= 2 / 255

    def test_corrupt_target_isolated(self, tmp_path, rng):
        source_dir, target_dir = build_dirs(tmp_path, rng)
        (target_dir / "broken.png").write_text("not an image")
        config = PipelineConfig(
            source_dir=source_dir,
            target_dir=target_dir,
            out_dir=tmp_path / "out",
            seed=1,
            slic=SlicParams(n_segments=6),
        )
        result = run_pipeline(config)
        assert len(result.failures) == 1
        assert "broken" in result.failures[0]["id"]
        assert len(result.samples) == 3
        failed = [
            json.loads(line)
            for line in result.manifest_path.read_text().splitlines()[1:]
            if json.loads(line)["status"] == "failed"
        ]
        assert len(failed) == 1 and "error" in failed[0]

    def test_empty_source_dir(self, tmp_path, rng):
        source_dir = tmp_path / "empty"
        source_dir.mkdir()
        _, target_dir = build_dirs(tmp_path, rng)
        config = PipelineConfig(source_dir=source_dir, target_dir=target_dir, out_dir=tmp_path / "out")
        with pytest.raises(EmptyInputDirError):
            run_pipeline(config)

    def test_missing_dir_is_config_error(self, tmp_path):
        config = PipelineConfig(
            source_dir=tmp_path / "nope", target_dir=tmp_path / "nope", out_dir=tmp_path / "out"
        )
        with pytest.raises(ConfigError):
            run_pipeline(config)

    def test_regenerate_pair_bit_identical(self, tmp_path, rng):
        config = small_config(tmp_path, rng)
        result = run_pipeline(config)
        record = json.loads(result.manifest_path.read_text().splitlines()[1])
        rainy, clean = regenerate_pair(record, config)
        saved_rainy = load_image(config.out_dir / record["rainy_path"])
        saved_clean = load_image(config.out_dir / record["clean_path"])
        assert np.array_equal(np.rint(rainy * 255), np.rint(saved_rainy * 255))
        assert np.array_equal(np.rint(clean * 255), np.rint(saved_clean * 255))

    def test_debug_outputs(self, tmp_path, rng):
        config = small_config(tmp_path, rng, emit_debug=True)
        result = run_pipeline(config)
        for sample in result.samples:
            assert (config.out_dir / "debug" / f"{sample.id}_labels.png").is_file()
            assert (config.out_dir / "debug" / f"{sample.id}_mask.png").is_file()


class TestSampleSeed:
    def test_stable_under_index(self):
        assert sample_seed(0, 0) == sample_seed(0, 0)
        assert sample_seed(0, 0) != sample_seed(0, 1)
        assert sample_seed(0, 0) != sample_seed(1, 0)

    def test_independent_of_sample_count(self):
        # adding more samples must not reshuffle earlier ones
        seeds_small = [sample_seed(5, i) for i in range(3)]
        seeds_large = [sample_seed(5, i) for i in range(10)]
        assert seeds_large[:3] == seeds_small


class TestWriteManifest:
    def test_empty_list_writes_header_only(self, tmp_path):
        path = tmp_path / "manifest.jsonl"
        write_manifest([], path)
        lines = path.read_text().splitlines()
        assert len(lines) == 1
        assert json.loads(lines[0])["n_samples"] == 0

    def test_two_samples_three_lines(self, tmp_path):
        report = ScoreReport(0.1, 0.2, 0.3, 0.6, 30.0, 0.9)
        samples = [
            PairedSample(
                id=f"{i:05d}_x",
                rainy_path=f"r{i}.png",
                clean_path=f"c{i}.png",
                source_image="s.png",
                target_image="t.png",
                drawn_params={"beta": 0.9},
                scores=report,
            )
            for i in range(2)
        ]
        path = tmp_path / "manifest.jsonl"
        write_manifest(samples, path)
        assert len(path.read_text().splitlines()) == 3

    def test_keys_sorted(self, tmp_path):
        path = tmp_path / "manifest.jsonl"
        write_manifest([], path)
        line = path.read_text().splitlines()[0]
        keys = list(json.loads(line))
        assert keys == sorted(keys)


class TestFlatConfig:
    def test_roundtrip(self, tmp_path, rng):
        config = small_config(tmp_path, rng)
        flat = config.to_flat_dict()
        rebuilt = PipelineConfig.from_flat_dict(flat)
        assert rebuilt.to_flat_dict() == flat

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            PipelineConfig.from_flat_dict(
                {"source_dir": "a", "target_dir": "b", "out_dir": "c", "bogus": 1}
            )

    def test_missing_required_rejected(self):
        with pytest.raises(ConfigError):
            PipelineConfig.from_flat_dict({"seed": 4})
