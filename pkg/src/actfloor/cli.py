"""Batch command-line front-end: dataset simulation, generation,
evaluation, and Elo tabulation.

Exit codes: 0 ok, 2 input error, 3 pipeline error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np
from PIL import Image

from . import actsim, furnish, genlab, metrics, vectorize
from .actsim import BiRrtParams
from .core import load_floorplan
from .errors import ActfloorError

EXIT_INPUT = 2
EXIT_PIPELINE = 3


def _run_manifest(out_dir: Path, command: str, seed: int, extra: dict | None = None):
    doc = {"command": command, "seed": seed}
    doc.update(extra or {})
    (out_dir / "run_manifest.json").write_text(json.dumps(doc, sort_keys=True, indent=1))


@click.group()
def main():
    """Human-centric floorplan pipeline."""


@main.command()
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", default=0, type=int)
@click.option("--runs-per-edge", default=10, type=int)
def simulate(dataset_dir, out_dir, seed, runs_per_edge):
    """Synthesize an activity map + furniture list per dataset floorplan."""
    dataset_dir = Path(dataset_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    params = BiRrtParams(runs_per_edge=runs_per_edge)
    manifests = sorted(dataset_dir.glob("*/manifest.json"))
    if not manifests:
        click.echo("no floorplans found", err=True)
        sys.exit(EXIT_INPUT)
    failures = 0
    for i, manifest in enumerate(manifests):
        name = manifest.parent.name
        try:
            fp = load_floorplan(manifest)
            furniture = furnish.place_primary_furniture(fp, seed=seed + i)
            amap = actsim.synthesize_activity_map(fp, furniture, params, seed=seed + i)
        except ActfloorError as e:
            click.echo(f"{name}: skipped ({e})", err=True)
            failures += 1
            continue
        img = np.round(amap.density * 255).astype(np.uint8)
        Image.fromarray(img).save(out_dir / f"{name}_activity.png")
        actsim.save_activity_f32(amap, out_dir / f"{name}_activity.actf32")
        (out_dir / f"{name}_furniture.json").write_text(
            furnish.serialize_furniture(furniture))
    _run_manifest(out_dir, "simulate", seed,
                  {"total": len(manifests), "failed": failures})
    if failures > max(1, len(manifests) // 100):
        sys.exit(EXIT_PIPELINE)


@main.command()
@click.option("--boundary", "boundary_path", required=True, type=click.Path(exists=True))
@click.option("--activity", "activity_path", required=True, type=click.Path(exists=True))
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(exists=True),
              help="Floorplan directory backing the retrieval generator.")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", default=0, type=int)
@click.option("--generator", "generator_spec", default="retrieval",
              help="'retrieval' or 'plugin:CMD' for an external process.")
def generate(boundary_path, activity_path, dataset_dir, out_dir, seed, generator_spec):
    """Generate a category image, vector JSON and SVG from a boundary pair."""
    from .server import _decode_boundary_png, load_dataset_index

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        inside, ring, entrance = _decode_boundary_png(Path(boundary_path).read_bytes())
        if str(activity_path).endswith(".actf32"):
            amap = actsim.load_activity_f32(activity_path)
        else:
            with Image.open(activity_path) as im:
                amap = actsim.ActivityMap(
                    density=np.asarray(im.convert("L"), dtype=np.float64) / 255.0)
        if amap.density.shape != inside.shape:
            raise ValueError("boundary and activity sizes differ")
    except (ValueError, OSError, ActfloorError) as e:
        click.echo(f"bad input: {e}", err=True)
        sys.exit(EXIT_INPUT)

    from .core import BoundaryImage
    boundary = BoundaryImage(inside=inside, boundary=ring, entrance=entrance)
    inp = genlab.GeneratorInput(boundary=boundary, activity=amap)
    try:
        if generator_spec.startswith("plugin:"):
            gen = genlab.PluginGenerator(generator_spec[len("plugin:"):].split())
        else:
            gen = genlab.RetrievalGenerator(load_dataset_index(dataset_dir))
        category = gen.generate(inp, seed)
        vf = vectorize.vectorize_floorplan(category, amap, entrance=entrance)
        report = vectorize.check_success(vf, shape=category.shape)
    except (ActfloorError, Exception) as e:
        if isinstance(e, click.exceptions.Exit):
            raise
        click.echo(f"generation failed: {e}", err=True)
        sys.exit(EXIT_PIPELINE)

    Image.fromarray(category).save(out_dir / "category.png")
    (out_dir / "vector.json").write_text(vectorize.export_json(vf))
    (out_dir / "floorplan.svg").write_text(
        vectorize.export_svg(vf, size=category.shape[::-1]))
    _run_manifest(out_dir, "generate", seed, {"success": report.to_json()})


@main.command("eval")
@click.option("--pred", "pred_dir", required=True, type=click.Path(exists=True))
@click.option("--gt", "gt_dir", required=True, type=click.Path(exists=True))
@click.option("--report", "report_path", required=True, type=click.Path())
def evaluate(pred_dir, gt_dir, report_path):
    """Pairwise MSE/MAE, NMI of activity maps, and vectorization success."""
    pred_dir, gt_dir = Path(pred_dir), Path(gt_dir)
    gt_manifests = {m.parent.name: m for m in sorted(gt_dir.glob("*/manifest.json"))}
    items, unpaired = [], []
    for name, gt_manifest in gt_manifests.items():
        pred_png = pred_dir / f"{name}_category.png"
        if not pred_png.exists():
            unpaired.append(name)
            continue
        gt_fp = load_floorplan(gt_manifest)
        with Image.open(pred_png) as im:
            pred = np.asarray(im.convert("L"), dtype=np.uint8)
        entry = {"id": name}
        entry.update(metrics.pixel_error(pred, gt_fp.category, inside=gt_fp.inside))
        pred_act = pred_dir / f"{name}_activity.actf32"
        gt_act = gt_dir / name / "activity.actf32"
        if pred_act.exists() and gt_act.exists():
            a = actsim.load_activity_f32(pred_act)
            b = actsim.load_activity_f32(gt_act)
            entry["nmi"] = metrics.nmi(a, b)
        try:
            amap = actsim.ActivityMap(density=np.zeros(pred.shape))
            vf = vectorize.vectorize_floorplan(pred, amap)
            ok = not {vectorize.CLOSED_ROOMS, vectorize.BALANCED_TYPES} & \
                vectorize.check_success(vf, shape=pred.shape).failed_conditions
        except ActfloorError:
            ok = False
        entry["vectorized"] = bool(ok)
        items.append(entry)
    n_ok = sum(1 for it in items if it["vectorized"])
    report = {
        "items": items,
        "unpaired": unpaired,
        "aggregate": {
            "count": len(items),
            "mse": float(np.mean([it["mse"] for it in items])) if items else None,
            "mae": float(np.mean([it["mae"] for it in items])) if items else None,
            "vectorization_success": f"{n_ok}/{len(items)}",
        },
    }
    Path(report_path).write_text(json.dumps(report, sort_keys=True, indent=1))
    if unpaired:
        click.echo(f"{len(unpaired)} unpaired items", err=True)


@main.command()
@click.option("--matches", "matches_path", required=True, type=click.Path(exists=True))
@click.option("--report", "report_path", required=True, type=click.Path())
@click.option("--k-factor", default=metrics.DEFAULT_K, type=float)
def elo(matches_path, report_path, k_factor):
    """Tabulate Elo ratings from a line-delimited JSON match log."""
    try:
        matches = metrics.parse_match_log(Path(matches_path).read_text())
    except ActfloorError as e:
        click.echo(f"bad match log: {e}", err=True)
        sys.exit(EXIT_INPUT)
    ratings = metrics.tabulate_elo(matches, k_factor=k_factor)
    Path(report_path).write_text(json.dumps(
        {"k_factor": k_factor, "matches": len(matches), "ratings": ratings},
        sort_keys=True, indent=1))


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
@click.option("--dataset", "dataset_dir", default=None, type=click.Path(exists=True))
def serve(host, port, dataset_dir):
    """Run the interactive designer HTTP service."""
    import uvicorn

    from .server import create_app, load_dataset_index
    index = load_dataset_index(dataset_dir) if dataset_dir else None
    uvicorn.run(create_app(index=index), host=host, port=port)


if __name__ == "__main__":
    main()
