"""Command-line interface: `rainforge synth` and `rainforge score`.

Exit codes: 0 on success, 1 on a fatal configuration error, 2 when the batch
completed but some samples failed.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from . import __version__
from .exceptions import ConfigError, EmptyInputDirError
from .io import load_image
from .metrics import total_loss
from .pipeline import PipelineConfig, run_pipeline

_TRUE_WORDS = {"1", "true", "yes", "on"}
_FALSE_WORDS = {"0", "false", "no", "off"}


def parse_config_file(path) -> dict:
    """Flat `key = value` lines; '#' starts a comment; blank lines ignored."""
    flat = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        flat[key] = value
    return _coerce_values(flat)


def _coerce_values(flat: dict) -> dict:
    out = {}
    for key, value in flat.items():
        if not isinstance(value, str):
            out[key] = value
            continue
        lowered = value.lower()
        if lowered in _TRUE_WORDS:
            out[key] = True
        elif lowered in _FALSE_WORDS:
            out[key] = False
        else:
            try:
                out[key] = int(value)
            except ValueError:
                try:
                    out[key] = float(value)
                except ValueError:
                    out[key] = value
    return out


@click.group()
@click.version_option(version=__version__)
def main():
    """Synthesize pseudo-paired rainy/clean image sets and score them."""
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--source-dir", type=click.Path(), default=None, help="Directory of structure-source images.")
@click.option("--target-dir", type=click.Path(), default=None, help="Directory of background images.")
@click.option("--out", "out_dir", type=click.Path(), default=None, help="Output directory.")
@click.option("--seed", type=int, default=None, help="Global random seed.")
@click.option("--alpha", type=float, default=None, help="Fusion blend weight in [0, 1].")
@click.option("--superpixels", type=int, default=None, help="Target superpixel count per source image.")
@click.option("--patches-per-target", type=int, default=None, help="Patches fused into each target.")
@click.option("--workers", type=int, default=None, help="Parallel samples in flight.")
@click.option("--config", "config_file", type=click.Path(), default=None, help="Flat key=value config file; CLI flags override it.")
@click.option("--emit-debug", is_flag=True, default=None, help="Also write label-map and streak-mask PNGs.")
def synth(source_dir, target_dir, out_dir, seed, alpha, superpixels, patches_per_target, workers, config_file, emit_debug):
    """Generate pseudo-paired (rainy, clean) samples plus a manifest."""
    flat: dict = {}
    try:
        if config_file is not None:
            if not Path(config_file).is_file():
                raise ConfigError(f"config file not found: {config_file}")
            flat.update(parse_config_file(config_file))
        overrides = {
            "source_dir": source_dir,
            "target_dir": target_dir,
            "out_dir": out_dir,
            "seed": seed,
            "alpha": alpha,
            "superpixels": superpixels,
            "patches_per_target": patches_per_target,
            "workers": workers,
            "emit_debug": emit_debug,
        }
        flat.update({k: v for k, v in overrides.items() if v is not None})
        config = PipelineConfig.from_flat_dict(flat)
        result = run_pipeline(config)
    except (ConfigError, EmptyInputDirError, FileNotFoundError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)

    click.echo(
        f"wrote {len(result.samples)} pairs ({len(result.failures)} failed) "
        f"-> {result.manifest_path}"
    )
    sys.exit(2 if result.failures else 0)


@main.command()
@click.option("--pred-dir", type=click.Path(), required=True, help="Directory of predicted/restored images.")
@click.option("--gt-dir", type=click.Path(), required=True, help="Directory of reference images.")
@click.option("--out", "out_file", type=click.Path(), required=True, help="JSON-lines score report path.")
def score(pred_dir, gt_dir, out_file):
    """Score matching filenames across two directories with the metric suite."""
    pred_dir, gt_dir = Path(pred_dir), Path(gt_dir)
    try:
        for d in (pred_dir, gt_dir):
            if not d.is_dir():
                raise ConfigError(f"directory does not exist: {d}")
        suffixes = {".png", ".jpg", ".jpeg"}
        pred_names = {p.name for p in pred_dir.iterdir() if p.suffix.lower() in suffixes}
        gt_names = {p.name for p in gt_dir.iterdir() if p.suffix.lower() in suffixes}
        common = sorted(pred_names & gt_names)
        if not common:
            raise ConfigError("no matching filenames between pred and gt directories")
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)

    records = []
    failures = 0
    for name in common:
        try:
            report = total_loss(load_image(pred_dir / name), load_image(gt_dir / name))
            records.append({"name": name, "status": "ok", **report.to_dict()})
        except Exception as exc:  # keep scoring the remaining pairs
            failures += 1
            records.append({"name": name, "status": "failed", "error": f"{type(exc).__name__}: {exc}"})

    header = {"kind": "rainforge-scores", "version": __version__, "n_pairs": len(records)}
    with Path(out_file).open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    click.echo(f"scored {len(records) - failures} pairs ({failures} failed) -> {out_file}")
    sys.exit(2 if failures else 0)


if __name__ == "__main__":
    main()
