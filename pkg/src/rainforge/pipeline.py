"""Batch orchestration: segment sources, fuse patches into targets, add rain.

Every target image becomes one pseudo-pair: patches from a (round-robin,
seed-shuffled) source image are fused into the target to form the clean half,
and rain is synthesized on top of that to form the rainy half. All per-sample
randomness derives from hash(global seed, sample index), so outputs are
byte-identical regardless of worker count, and adding images never reshuffles
existing samples. A JSON-lines manifest records enough to regenerate any pair.
"""

from __future__ import annotations

import json
import logging
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from . import __version__
from .exceptions import ConfigError, EmptyInputDirError, FusionConditionFailed
from .fusion import FusionParams, fuse_fallback, fuse_forward
from .io import load_image, save_image
from .metrics import LossWeights, ScoreReport, total_loss
from .rain import RainParams, synthesize_rain
from .slic import SlicParams, extract_patches, slic_segment
from .validation import as_image

logger = logging.getLogger("rainforge")

_IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}


@dataclass
class PipelineConfig:
    source_dir: Path
    target_dir: Path
    out_dir: Path
    seed: int = 0
    slic: SlicParams = field(default_factory=SlicParams)
    fusion: FusionParams = field(default_factory=FusionParams)
    rain: RainParams = field(default_factory=RainParams)
    weights: LossWeights = field(default_factory=LossWeights)
    patches_per_target: int = 3
    workers: int = 1
    emit_debug: bool = False

    def validate(self) -> None:
        self.source_dir = Path(self.source_dir)
        self.target_dir = Path(self.target_dir)
        self.out_dir = Path(self.out_dir)
        for name in ("source_dir", "target_dir"):
            if not getattr(self, name).is_dir():
                raise ConfigError(f"{name} does not exist: {getattr(self, name)}")
        if self.patches_per_target < 0:
            raise ConfigError(f"patches_per_target must be >= 0, got {self.patches_per_target}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        try:
            self.slic.validate()
            self.fusion.validate()
            self.rain.validate()
            self.weights.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def to_flat_dict(self) -> dict:
        """Flat key -> value view, mirroring the config-file keys."""
        return {
            "source_dir": str(self.source_dir),
            "target_dir": str(self.target_dir),
            "out_dir": str(self.out_dir),
            "seed": self.seed,
            "patches_per_target": self.patches_per_target,
            "workers": self.workers,
            "emit_debug": self.emit_debug,
            "superpixels": self.slic.n_segments,
            "compactness": self.slic.compactness,
            "slic_max_iter": self.slic.max_iter,
            "min_region_frac": self.slic.min_region_frac,
            "slic_tol": self.slic.tol,
            "alpha": self.fusion.alpha,
            "mask_keep_frac": self.fusion.mask_keep_frac,
            "min_patch_frac": self.fusion.min_patch_frac,
            "stride": self.fusion.stride,
            "salt_density_min": self.rain.salt_density[0],
            "salt_density_max": self.rain.salt_density[1],
            "gauss_kernel": self.rain.gauss_kernel,
            "gauss_sigma": self.rain.gauss_sigma,
            "length_min": self.rain.length[0],
            "length_max": self.rain.length[1],
            "angle_min": self.rain.angle_deg[0],
            "angle_max": self.rain.angle_deg[1],
            "width_min": self.rain.width[0],
            "width_max": self.rain.width[1],
            "beta_min": self.rain.beta[0],
            "beta_max": self.rain.beta[1],
            "lambda1": self.weights.lambda1,
            "lambda2": self.weights.lambda2,
            "lambda3": self.weights.lambda3,
            "epsilon": self.weights.epsilon,
        }

    @classmethod
    def from_flat_dict(cls, flat: dict) -> "PipelineConfig":
        for key in ("source_dir", "target_dir", "out_dir"):
            if key not in flat:
                raise ConfigError(f"missing required config key: {key}")
        unknown = set(flat) - set(cls(".", ".", ".").to_flat_dict())
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        base = cls(".", ".", ".").to_flat_dict()
        base.update(flat)
        f = base
        return cls(
            source_dir=Path(f["source_dir"]),
            target_dir=Path(f["target_dir"]),
            out_dir=Path(f["out_dir"]),
            seed=int(f["seed"]),
            patches_per_target=int(f["patches_per_target"]),
            workers=int(f["workers"]),
            emit_debug=bool(f["emit_debug"]),
            slic=SlicParams(
                n_segments=int(f["superpixels"]),
                compactness=float(f["compactness"]),
                max_iter=int(f["slic_max_iter"]),
                min_region_frac=float(f["min_region_frac"]),
                tol=float(f["slic_tol"]),
            ),
            fusion=FusionParams(
                alpha=float(f["alpha"]),
                mask_keep_frac=float(f["mask_keep_frac"]),
                min_patch_frac=float(f["min_patch_frac"]),
                stride=int(f["stride"]),
            ),
            rain=RainParams(
                salt_density=(float(f["salt_density_min"]), float(f["salt_density_max"])),
                gauss_kernel=int(f["gauss_kernel"]),
                gauss_sigma=float(f["gauss_sigma"]),
                length=(int(f["length_min"]), int(f["length_max"])),
                angle_deg=(float(f["angle_min"]), float(f["angle_max"])),
                width=(int(f["width_min"]), int(f["width_max"])),
                beta=(float(f["beta_min"]), float(f["beta_max"])),
            ),
            weights=LossWeights(
                lambda1=float(f["lambda1"]),
                lambda2=float(f["lambda2"]),
                lambda3=float(f["lambda3"]),
                epsilon=float(f["epsilon"]),
            ),
        )


@dataclass
class PairedSample:
    """One emitted (rainy, clean) pair plus everything needed to regenerate it."""

    id: str
    rainy_path: str
    clean_path: str
    source_image: str
    target_image: str
    drawn_params: dict
    scores: ScoreReport

    def to_record(self, relative_to: Path | None = None) -> dict:
        rainy, clean = self.rainy_path, self.clean_path
        if relative_to is not None:
            rainy = str(Path(rainy).relative_to(relative_to))
            clean = str(Path(clean).relative_to(relative_to))
        return {
            "id": self.id,
            "status": "ok",
            "rainy_path": rainy,
            "clean_path": clean,
            "source_image": self.source_image,
            "target_image": self.target_image,
            "drawn_params": self.drawn_params,
            "scores": self.scores.to_dict(),
        }


@dataclass
class PipelineResult:
    samples: list[PairedSample]
    failures: list[dict]
    manifest_path: Path


def _list_images(directory: Path) -> list[Path]:
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in _IMAGE_SUFFIXES)


def sample_seed(global_seed: int, index: int) -> int:
    """Stable per-sample seed; independent of how many samples exist."""
    return int(np.random.SeedSequence((global_seed, index)).generate_state(1, np.uint64)[0])


def _save_debug(out_dir: Path, sample_id: str, labels: np.ndarray, mask_plane: np.ndarray) -> None:
    debug_dir = out_dir / "debug"
    debug_dir.mkdir(parents=True, exist_ok=True)
    palette = np.random.default_rng(12345).integers(0, 256, size=(256, 3), dtype=np.uint8)
    indexed = Image.fromarray((labels % 256).astype(np.uint8), mode="P")
    indexed.putpalette(palette.ravel().tolist())
    indexed.save(debug_dir / f"{sample_id}_labels.png", format="PNG")
    save_image(mask_plane, debug_dir / f"{sample_id}_mask.png")


def _process_sample(index, target_path, source_path, segmentation, config) -> PairedSample:
    sid = f"{index:05d}_{target_path.stem}"
    seed = sample_seed(config.seed, index)
    rng = np.random.default_rng(seed)

    source_img, labeling = segmentation
    target = load_image(target_path)

    patches = extract_patches(source_img, labeling)
    n_fuse = min(config.patches_per_target, len(patches))
    patch_indices = [int(i) for i in rng.choice(len(patches), size=n_fuse, replace=False)]
    fuse_seeds = [int(rng.integers(0, 2**63)) for _ in patch_indices]
    rain_seed = int(rng.integers(0, 2**63))

    clean = target
    fallbacks = []
    for patch_index, fuse_seed in zip(patch_indices, fuse_seeds):
        patch = patches[patch_index]
        try:
            clean = fuse_forward(clean, patch, config.fusion, seed=fuse_seed)
            fallbacks.append(False)
        except FusionConditionFailed:
            clean = fuse_fallback(clean, patch, config.fusion, seed=fuse_seed)
            fallbacks.append(True)

    rainy, streaks, draw = synthesize_rain(clean, config.rain, seed=rain_seed)

    clean_path = config.out_dir / "clean" / f"{sid}.png"
    rainy_path = config.out_dir / "rainy" / f"{sid}.png"
    save_image(clean, clean_path)
    save_image(rainy, rainy_path)
    if config.emit_debug:
        _save_debug(config.out_dir, sid, labeling.labels, streaks.plane)

    drawn = {
        "sample_seed": seed,
        "alpha": config.fusion.alpha,
        "patch_indices": patch_indices,
        "fuse_seeds": fuse_seeds,
        "used_fallback": fallbacks,
        "rain_seed": rain_seed,
        **draw.to_dict(),
    }
    return PairedSample(
        id=sid,
        rainy_path=str(rainy_path),
        clean_path=str(clean_path),
        source_image=str(source_path),
        target_image=str(target_path),
        drawn_params=drawn,
        scores=total_loss(rainy, clean, config.weights),
    )


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    """Run the full synthesis batch; per-sample failures are recorded, not fatal."""
    config.validate()
    sources = _list_images(config.source_dir)
    targets = _list_images(config.target_dir)
    if not sources:
        raise EmptyInputDirError(f"no images in source dir {config.source_dir}")
    if not targets:
        raise EmptyInputDirError(f"no images in target dir {config.target_dir}")

    (config.out_dir / "clean").mkdir(parents=True, exist_ok=True)
    (config.out_dir / "rainy").mkdir(parents=True, exist_ok=True)

    # Segment each source once; a bad source fails only the samples that use it.
    segmentations: dict[Path, object] = {}
    for path in sources:
        try:
            img = load_image(path)
            segmentations[path] = (img, slic_segment(img, config.slic))
        except Exception as exc:  # a bad source must only fail the samples that use it
            segmentations[path] = exc

    order = np.random.default_rng(config.seed).permutation(len(sources))

    def job(index: int):
        target_path = targets[index]
        source_path = sources[order[index % len(sources)]]
        seg = segmentations[source_path]
        if isinstance(seg, Exception):
            raise seg
        return _process_sample(index, target_path, source_path, seg, config)

    results: list = [None] * len(targets)
    if config.workers == 1:
        for i in range(len(targets)):
            try:
                results[i] = job(i)
            except Exception as exc:  # crash isolation: one bad sample never aborts the batch
                results[i] = exc
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            futures = {i: pool.submit(job, i) for i in range(len(targets))}
            for i, future in futures.items():
                try:
                    results[i] = future.result()
                except Exception as exc:
                    results[i] = exc

    samples: list[PairedSample] = []
    failures: list[dict] = []
    for i, result in enumerate(results):
        if isinstance(result, Exception):
            sid = f"{i:05d}_{targets[i].stem}"
            logger.error("sample %s failed: %s", sid, result)
            logger.debug("%s", "".join(traceback.format_exception(result)))
            failures.append(
                {
                    "id": sid,
                    "status": "failed",
                    "target_image": str(targets[i]),
                    "error": f"{type(result).__name__}: {result}",
                }
            )
        else:
            samples.append(result)

    manifest_path = config.out_dir / "manifest.jsonl"
    write_manifest(samples, manifest_path, config=config, failures=failures)
    return PipelineResult(samples=samples, failures=failures, manifest_path=manifest_path)


def write_manifest(samples, path, *, config: PipelineConfig | None = None, failures=()) -> None:
    """JSON-lines manifest: one header line, then one record per sample.

    Keys are sorted for a stable byte layout; records are ordered by sample id,
    with output paths relative to out_dir. out_dir and workers are execution
    knobs that never change content, so they are left out of the header: runs
    that differ only in those produce byte-identical manifests.
    """
    config_view = None
    out_dir = None
    if config is not None:
        out_dir = Path(config.out_dir)
        config_view = {
            k: v for k, v in config.to_flat_dict().items() if k not in ("out_dir", "workers")
        }
    header = {
        "kind": "rainforge-manifest",
        "version": __version__,
        "config": config_view,
        "n_samples": len(list(samples)),
        "n_failures": len(list(failures)),
    }
    records = [s.to_record(relative_to=out_dir) for s in samples] + list(failures)
    records.sort(key=lambda r: r["id"])
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def regenerate_pair(manifest_record: dict, config: PipelineConfig):
    """Rebuild (rainy, clean) for one manifest record; used to audit pairing integrity."""
    drawn = manifest_record["drawn_params"]
    source_img = load_image(manifest_record["source_image"])
    target = load_image(manifest_record["target_image"])
    labeling = slic_segment(source_img, config.slic)
    patches = extract_patches(source_img, labeling)

    clean = as_image(target, channels=3)
    for patch_index, fuse_seed, used_fallback in zip(
        drawn["patch_indices"], drawn["fuse_seeds"], drawn["used_fallback"]
    ):
        patch = patches[patch_index]
        if used_fallback:
            clean = fuse_fallback(clean, patch, config.fusion, seed=fuse_seed)
        else:
            clean = fuse_forward(clean, patch, config.fusion, seed=fuse_seed)
    rainy, _, _ = synthesize_rain(clean, config.rain, seed=drawn["rain_seed"])
    return rainy, clean
