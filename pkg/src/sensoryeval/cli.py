"""Command-line interface.

Subcommands cover the full workflow: dataset generation and splitting,
annotation export, two-phase training, evaluation, detector evaluation,
single-image prediction, report rendering, classical preprocessing and
the HTTP service.  Heavy dependencies (torch) are imported lazily so
image-only commands stay fast.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import __version__


@click.group()
@click.version_option(version=__version__, prog_name="sensoryeval")
def main():
    """Fruit acceptability scoring toolkit."""


def _data_dir(value: str | None) -> Path:
    return Path(value or os.environ.get("SENSORYEVAL_DATA_DIR", "."))


def _weights_dir(value: str | None) -> Path:
    return Path(value or os.environ.get("SENSORYEVAL_WEIGHTS_DIR", "."))


@main.command("annotate-export")
@click.argument("out_csv", type=click.Path(dir_okay=False))
@click.option("--data-dir", default=None,
              help="Annotation store root (default: $SENSORYEVAL_DATA_DIR).")
def annotate_export(out_csv, data_dir):
    """Export the annotation store to a standalone CSV file."""
    from . import dataset as dataset_mod
    from .service import AnnotationStore

    store = AnnotationStore(_data_dir(data_dir) / "annotations.csv")
    records = store.records()
    dataset_mod.save_annotations(records, out_csv)
    click.echo(f"exported {len(records)} records to {out_csv}")


@main.command("split")
@click.argument("annotations_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--ratio", default=0.8, show_default=True, help="Train fraction.")
@click.option("--seed", default=0, show_default=True)
@click.option("--out-dir", default=".", show_default=True,
              help="Where train.csv and val.csv are written.")
def split_cmd(annotations_csv, ratio, seed, out_dir):
    """Deterministically split annotations into train/val CSVs."""
    from . import dataset as dataset_mod

    records = dataset_mod.load_annotations(annotations_csv, check_images=False)
    result = dataset_mod.split(records, ratio=ratio, seed=seed)
    out = Path(out_dir)
    dataset_mod.save_annotations(list(result.train), out / "train.csv")
    dataset_mod.save_annotations(list(result.val), out / "val.csv")
    click.echo(f"split {len(records)} records into "
               f"{len(result.train)} train / {len(result.val)} val")


@main.command("synth")
@click.argument("out_dir", type=click.Path(file_okay=False))
@click.option("--count", default=100, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--image-size", default=96, show_default=True)
@click.option("--category", default="guava", show_default=True)
def synth_cmd(out_dir, count, seed, image_size, category):
    """Generate an oracle-labeled synthetic fruit dataset."""
    from . import dataset as dataset_mod

    spec = dataset_mod.SynthSpec(count=count, seed=seed, image_size=image_size)
    samples = dataset_mod.write_synth_dataset(spec, out_dir, category=category)
    click.echo(f"wrote {len(samples)} images, annotations.csv and "
               f"detections.jsonl under {out_dir}")


@main.command("train")
@click.argument("annotations_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--phase", type=click.Choice(["head", "finetune"]), required=True)
@click.option("--backbone", default="vgg16", show_default=True,
              type=click.Choice(["vgg16", "resnet18", "resnet50"]))
@click.option("--backbone-weights", default=None,
              help="Backbone state_dict path (head phase; default "
                   "$SENSORYEVAL_WEIGHTS_DIR/<backbone>.pt).")
@click.option("--from-checkpoint", default=None,
              help="Checkpoint to continue from (finetune phase).")
@click.option("--checkpoint", required=True,
              help="Where the trained checkpoint is written.")
@click.option("--input-size", default=224, show_default=True)
@click.option("--epochs", default=None, type=int,
              help="Override the stock epoch budget.")
@click.option("--learning-rate", default=1e-4, show_default=True)
@click.option("--batch-size", default=32, show_default=True)
@click.option("--patience", default=10, show_default=True)
@click.option("--ratio", default=0.8, show_default=True, help="Train fraction.")
@click.option("--seed", default=0, show_default=True)
@click.option("--save-report", default=None, help="Write a report JSON here.")
def train_cmd(annotations_csv, phase, backbone, backbone_weights,
              from_checkpoint, checkpoint, input_size, epochs, learning_rate,
              batch_size, patience, ratio, seed, save_report):
    """Train the regressor head ("head") or fine-tune it ("finetune")."""
    from dataclasses import asdict

    from . import dataset as dataset_mod
    from . import model as model_mod
    from .pipeline import render_report

    records = dataset_mod.load_annotations(annotations_csv, check_images=False)
    data_split = dataset_mod.split(records, ratio=ratio, seed=seed)
    images_root = Path(annotations_csv).parent

    if phase == "head":
        weights_path = backbone_weights or str(
            _weights_dir(None) / f"{backbone}.pt")
        spec = model_mod.RegressorSpec(
            backbone_id=backbone, input_size=input_size,
            backbone_weights=weights_path, seed=seed)
        model = model_mod.build_regressor(spec)
        cfg = model_mod.TrainConfig.defaults_for(
            backbone, "feature_extractor", learning_rate=learning_rate,
            batch_size=batch_size, patience=patience, seed=seed,
            **({"max_epochs": epochs} if epochs else {}))
    else:
        source = from_checkpoint or checkpoint
        model, _ = model_mod.load_checkpoint(source)
        model_mod.set_trainable(model, "all")
        cfg = model_mod.TrainConfig.defaults_for(
            model.spec.backbone_id, "fine_tune", learning_rate=learning_rate,
            batch_size=batch_size, patience=patience, seed=seed,
            **({"max_epochs": epochs} if epochs else {}))

    history = model_mod.train_phase(model, data_split, cfg,
                                    images_root=images_root)
    model_mod.save_checkpoint(model, checkpoint, history=history)
    if save_report:
        Path(save_report).write_text(json.dumps(
            {"kind": "history", "label": f"{model.spec.backbone_id} ({phase})",
             "history": asdict(history)}), encoding="utf-8")
    click.echo(render_report(history,
                             label=f"{model.spec.backbone_id} ({phase})"))
    click.echo(f"checkpoint written to {checkpoint}")


@main.command("evaluate")
@click.argument("checkpoint", type=click.Path(exists=True, dir_okay=False))
@click.argument("annotations_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", default="text", show_default=True,
              type=click.Choice(["text", "csv"]))
@click.option("--save-report", default=None, help="Write a report JSON here.")
def evaluate_cmd(checkpoint, annotations_csv, fmt, save_report):
    """Evaluate a checkpoint against annotated images."""
    from . import dataset as dataset_mod
    from . import model as model_mod
    from .pipeline import render_report

    model, _ = model_mod.load_checkpoint(checkpoint)
    records = dataset_mod.load_annotations(annotations_csv, check_images=False)
    report = model_mod.evaluate(model, records,
                                images_root=Path(annotations_csv).parent)
    if save_report:
        Path(save_report).write_text(json.dumps({
            "kind": "eval", "mae": report.mae,
            "rows": [[r.image_path, r.truth, r.prediction, r.level]
                     for r in report.rows]}), encoding="utf-8")
    click.echo(render_report(report, fmt))


@main.command("detect-eval")
@click.option("--sidecar", default=None,
              help="Stub detections file (stub backend).")
@click.option("--weights", default=None,
              help="Darknet weights path (pretrained backend).")
@click.option("--ground-truth", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Ground-truth boxes in interchange format.")
@click.option("--images-root", default=None,
              help="Image files root (pretrained backend).")
@click.option("--iou", default=0.5, show_default=True)
@click.option("--categories", default="guava", show_default=True,
              help="Comma-separated category names.")
@click.option("--format", "fmt", default="text", show_default=True,
              type=click.Choice(["text", "csv"]))
@click.option("--save-report", default=None, help="Write a report JSON here.")
def detect_eval_cmd(sidecar, weights, ground_truth, images_root, iou,
                    categories, fmt, save_report):
    """Evaluate a detector against ground-truth boxes."""
    from . import dataset as dataset_mod
    from . import detector as detector_mod
    from .boxes import BoundingBox
    from .pipeline import render_report

    if (sidecar is None) == (weights is None):
        raise click.UsageError("give exactly one of --sidecar or --weights")
    if sidecar:
        cfg = detector_mod.DetectorConfig(
            backend="stub", sidecar_path=sidecar,
            category_names=tuple(categories.split(",")),
            confidence_threshold=0.0)
    else:
        cfg = detector_mod.DetectorConfig(
            backend="pretrained", weights_path=weights,
            category_names=tuple(categories.split(",")))

    by_image: dict[str, list] = {}
    for entry in detector_mod.load_interchange(ground_truth):
        bx, by, bw, bh = entry["bbox"]
        by_image.setdefault(entry["image"], []).append(
            (BoundingBox(bx, by, bw, bh), entry["category"]))
    samples = []
    for key in sorted(by_image):
        image = None
        if weights:
            image = dataset_mod.load_image(Path(images_root or ".") / key)
        samples.append(detector_mod.GroundTruthSample(
            key=key, ground_truths=tuple(by_image[key]), image=image))
    report = detector_mod.evaluate_detector(cfg, samples, iou_thresh=iou)
    if save_report:
        Path(save_report).write_text(json.dumps({
            "kind": "detector", "tp": report.tp, "fp": report.fp,
            "fn": report.fn, "average_iou": report.average_iou,
            "map": report.map_score, "iou_thresh": report.iou_thresh}),
            encoding="utf-8")
    click.echo(render_report(report, fmt))


@main.command("predict")
@click.argument("image", type=click.Path(exists=True, dir_okay=False))
@click.option("--checkpoint", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--sidecar", default=None,
              help="Stub detections file (stub backend).")
@click.option("--weights", default=None,
              help="Darknet weights path (pretrained backend).")
@click.option("--target", default="guava", show_default=True)
@click.option("--categories", default="guava", show_default=True)
@click.option("--format", "fmt", default="text", show_default=True,
              type=click.Choice(["text", "csv"]))
def predict_cmd(image, checkpoint, sidecar, weights, target, categories, fmt):
    """Run the full pipeline on one image."""
    from . import dataset as dataset_mod
    from . import detector as detector_mod
    from . import model as model_mod
    from .pipeline import render_report, run_pipeline

    if (sidecar is None) == (weights is None):
        raise click.UsageError("give exactly one of --sidecar or --weights")
    if sidecar:
        cfg = detector_mod.DetectorConfig(
            backend="stub", sidecar_path=sidecar,
            category_names=tuple(categories.split(",")))
    else:
        cfg = detector_mod.DetectorConfig(
            backend="pretrained", weights_path=weights,
            category_names=tuple(categories.split(",")))
    model, _ = model_mod.load_checkpoint(checkpoint)
    result = run_pipeline(dataset_mod.load_image(image),
                          detector_mod.Detector(cfg), model,
                          target_category=target, key=image)
    click.echo(render_report(result, fmt))


@main.command("report")
@click.argument("report_json", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", default="text", show_default=True,
              type=click.Choice(["text", "csv"]))
def report_cmd(report_json, fmt):
    """Render a saved report JSON as text or CSV."""
    from . import losses as losses_mod
    from . import model as model_mod
    from .detector import DetectorReport
    from .pipeline import render_report

    payload = json.loads(Path(report_json).read_text(encoding="utf-8"))
    kind = payload.get("kind")
    if kind == "residuals":
        obj = losses_mod.regression_errors(payload["y"], payload["y_hat"])
        label = None
    elif kind == "detector":
        obj = DetectorReport.from_counts(
            tp=payload["tp"], fp=payload["fp"], fn=payload["fn"],
            average_iou=payload.get("average_iou", 0.0),
            map_score=payload.get("map", 0.0),
            iou_thresh=payload.get("iou_thresh", 0.5))
        label = None
    elif kind == "history":
        raw = payload["history"]
        obj = model_mod.TrainHistory(
            phase=raw["phase"],
            epochs=tuple(model_mod.EpochStats(**e) for e in raw["epochs"]),
            best_val_loss=raw["best_val_loss"], best_epoch=raw["best_epoch"],
            stop_reason=raw["stop_reason"])
        label = payload.get("label")
    elif kind == "eval":
        from . import losses
        rows = tuple(model_mod.EvalRow(image_path=r[0], truth=r[1],
                                       prediction=r[2], level=r[3])
                     for r in payload["rows"])
        table = losses.regression_errors([r.truth for r in rows],
                                         [r.prediction for r in rows])
        obj = model_mod.EvalReport(mae=payload["mae"], rows=rows,
                                   residuals=table)
        label = None
    else:
        raise click.UsageError(f"unknown report kind {kind!r}")
    click.echo(render_report(obj, fmt, label=label))


@main.command("preprocess")
@click.argument("in_image", type=click.Path(exists=True, dir_okay=False))
@click.argument("out_image", type=click.Path(dir_okay=False))
@click.option("--ops", required=True,
              help='Op chain, e.g. "gamma:0.5|mean3|sigmoid:c=0.1,th=128".')
def preprocess_cmd(in_image, out_image, ops):
    """Apply a chain of classical preprocessing operations."""
    from . import dataset as dataset_mod
    from . import imageproc

    img = dataset_mod.load_image(in_image)
    out = imageproc.apply_op_chain(img, ops)
    dataset_mod.save_image(out, out_image)
    click.echo(f"wrote {out_image}")


@main.command("serve")
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", default=None,
              help="Annotation store root (default: $SENSORYEVAL_DATA_DIR).")
@click.option("--checkpoint", default=None,
              help="Regressor checkpoint (default "
                   "$SENSORYEVAL_WEIGHTS_DIR/regressor.pt if present).")
@click.option("--sidecar", default=None, help="Stub detector sidecar file.")
@click.option("--weights", default=None, help="Darknet detector weights.")
@click.option("--target", default="guava", show_default=True)
@click.option("--categories", default="guava", show_default=True)
@click.option("--ui-dir", default=None,
              help="Serve the built annotation workbench from this directory.")
def serve_cmd(port, host, data_dir, checkpoint, sidecar, weights, target,
              categories, ui_dir):
    """Serve the annotation/prediction HTTP API."""
    import uvicorn

    from . import detector as detector_mod
    from . import model as model_mod
    from .service import create_app

    regressor = None
    checkpoint = checkpoint or _default_checkpoint()
    if checkpoint:
        regressor, _ = model_mod.load_checkpoint(checkpoint)
    det = None
    if sidecar:
        det = detector_mod.Detector(detector_mod.DetectorConfig(
            backend="stub", sidecar_path=sidecar,
            category_names=tuple(categories.split(","))))
    elif weights:
        det = detector_mod.Detector(detector_mod.DetectorConfig(
            backend="pretrained", weights_path=weights,
            category_names=tuple(categories.split(","))))
    app = create_app(_data_dir(data_dir), detector=det, regressor=regressor,
                     target_category=target, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port)


def _default_checkpoint() -> str | None:
    path = _weights_dir(None) / "regressor.pt"
    return str(path) if path.exists() else None


if __name__ == "__main__":
    sys.exit(main())
