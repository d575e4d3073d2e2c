"""Acceptability-index regressor: pretrained backbone + custom FC head.

The regressor is assembled from a convolutional backbone (VGG-16,
ResNet-18 or ResNet-50) whose weights come from a local file, followed
by global average pooling and a small fully connected head ending in a
single linear unit.  Training runs in two phases: first the backbone is
frozen and only the head learns (feature-extractor transfer learning,
with backbone features cached once per image), then optionally the
whole network is unfrozen and fine-tuned at the same learning rate.

:class:`AcceptabilityRegressor` wraps the same machinery in the
scikit-learn estimator protocol (``fit``/``predict``/``get_params``).
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
import os
from collections import OrderedDict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from PIL import Image
from sklearn.base import BaseEstimator, RegressorMixin
from torch import nn

from . import dataset as dataset_mod
from . import losses as losses_mod
from .dataset import AnnotationRecord, DatasetSplit
from .hedonic import AcceptabilityResult
from .validation import ValidationError, check_image8

__all__ = [
    "DEFAULT_HEAD",
    "RegressorSpec",
    "TrainConfig",
    "EpochStats",
    "TrainHistory",
    "EvalRow",
    "EvalReport",
    "WeightsError",
    "TrainingError",
    "build_regressor",
    "set_trainable",
    "backbone_digest",
    "train_phase",
    "evaluate",
    "predict_index",
    "save_checkpoint",
    "load_checkpoint",
    "init_backbone_weights",
    "resolve_device",
    "AcceptabilityRegressor",
]

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

INDEX_MIN = 1.0
INDEX_MAX = 9.0

#: Head layout: global average pooling (implicit) -> these layers.
DEFAULT_HEAD = (("linear", 256), ("relu",), ("dropout", 0.5), ("linear", 1))

_BACKBONE_FEATURE_DIM = {"vgg16": 512, "resnet18": 512, "resnet50": 2048}


class WeightsError(RuntimeError):
    """Backbone weights file missing or malformed; raised at build time."""


class TrainingError(RuntimeError):
    """Training aborted (e.g. non-finite loss)."""


def resolve_device(device: str | None = None) -> torch.device:
    """Compute device: explicit arg, else TRAIN_DEVICE env var, else CPU."""
    return torch.device(device or os.environ.get("TRAIN_DEVICE", "cpu"))


@dataclass(frozen=True)
class RegressorSpec:
    """Architecture and initialization of the regressor."""

    backbone_id: str = "vgg16"
    head: tuple = DEFAULT_HEAD
    input_size: int = 224
    backbone_weights: str | None = None
    seed: int = 0

    def __post_init__(self):
        if self.backbone_id not in _BACKBONE_FEATURE_DIM:
            raise ValidationError(
                f"unknown backbone {self.backbone_id!r}; "
                f"choose from {sorted(_BACKBONE_FEATURE_DIM)}")
        head = tuple(tuple(layer) for layer in self.head)
        object.__setattr__(self, "head", head)
        if not head or head[-1] != ("linear", 1):
            raise ValidationError("head must end in a single linear output unit")
        if not any(layer[0] == "dropout" for layer in head):
            raise ValidationError("head must contain at least one dropout layer")
        if self.input_size < 32:
            raise ValidationError("input_size must be at least 32 pixels")


@dataclass(frozen=True)
class TrainConfig:
    """One training phase: hyperparameters and halting rules."""

    phase: str  # "feature_extractor" | "fine_tune"
    learning_rate: float = 1e-4
    batch_size: int = 32
    max_epochs: int = 25
    patience: int = 10
    loss: str = "mae"
    seed: int = 0
    target_mae: float | None = None
    min_improvement: float = 1e-4
    lr_decay: float = 1.0  # per-epoch multiplicative decay
    deterministic: bool = True

    def __post_init__(self):
        if self.phase not in ("feature_extractor", "fine_tune"):
            raise ValidationError(f"unknown phase {self.phase!r}")
        if self.loss != "mae":
            raise ValidationError("only the MAE loss is supported")
        if self.learning_rate <= 0 or self.batch_size <= 0 or self.max_epochs <= 0:
            raise ValidationError("learning_rate, batch_size, max_epochs must be > 0")
        if self.patience < 1:
            raise ValidationError("patience must be >= 1")
        if not 0.0 < self.lr_decay <= 1.0:
            raise ValidationError("lr_decay must lie in (0, 1]")

    @classmethod
    def defaults_for(cls, backbone_id: str, phase: str, **overrides) -> "TrainConfig":
        """Stock epoch budgets: 25 (vgg16) / 50 (resnet) for the
        feature-extractor phase, 15 for fine-tuning."""
        if phase == "fine_tune":
            max_epochs = 15
        elif backbone_id == "vgg16":
            max_epochs = 25
        else:
            max_epochs = 50
        overrides.setdefault("max_epochs", max_epochs)
        return cls(phase=phase, **overrides)


@dataclass(frozen=True)
class EpochStats:
    train_loss: float
    val_loss: float
    val_mae: float


@dataclass(frozen=True)
class TrainHistory:
    """Per-epoch losses plus the halting outcome of one phase."""

    phase: str
    epochs: tuple[EpochStats, ...]
    best_val_loss: float
    best_epoch: int  # 1-based
    stop_reason: str  # "max_epochs" | "patience" | "target_mae"

    def __post_init__(self):
        if not self.epochs:
            raise ValidationError("history must contain at least one epoch")
        best = min(e.val_loss for e in self.epochs)
        if not math.isclose(best, self.best_val_loss, rel_tol=0, abs_tol=1e-12):
            raise ValidationError("best_val_loss must equal the minimum val loss")


# ---------------------------------------------------------------------------
# Network assembly


class _RegressorNet(nn.Module):
    def __init__(self, backbone: nn.Module, head: nn.Module):
        super().__init__()
        self.backbone = backbone
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.head = head

    def features(self, x: torch.Tensor) -> torch.Tensor:
        return self.pool(self.backbone(x)).flatten(1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.head(self.features(x)).squeeze(-1)


class RegressorHandle:
    """A built regressor: network, spec, trainability bookkeeping."""

    def __init__(self, spec: RegressorSpec, net: _RegressorNet):
        self.spec = spec
        self.net = net
        self.scope = "head_only"
        self.frozen_digest: str | None = None

    def __repr__(self):
        return (f"RegressorHandle(backbone={self.spec.backbone_id!r}, "
                f"input_size={self.spec.input_size}, scope={self.scope!r})")


def _make_torchvision_model(backbone_id: str) -> nn.Module:
    import torchvision.models as tvm

    ctor = {"vgg16": tvm.vgg16, "resnet18": tvm.resnet18,
            "resnet50": tvm.resnet50}[backbone_id]
    return ctor(weights=None)


def _extract_backbone(backbone_id: str, full: nn.Module) -> nn.Module:
    if backbone_id == "vgg16":
        return full.features
    # ResNets: everything up to (not including) the classifier pooling.
    children = OrderedDict(
        (name, child) for name, child in full.named_children()
        if name not in ("avgpool", "fc"))
    return nn.Sequential(children)


def _load_backbone(spec: RegressorSpec) -> nn.Module:
    if not spec.backbone_weights:
        raise WeightsError(
            "no backbone weights file configured; the regressor never starts "
            "from a silent random backbone. Save a torchvision state_dict for "
            f"{spec.backbone_id!r} (or init_backbone_weights(...) for hermetic "
            "test setups) and pass its path as backbone_weights.")
    path = Path(spec.backbone_weights)
    if not path.exists():
        raise WeightsError(f"backbone weights file not found: {path}")
    try:
        state = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise WeightsError(f"cannot read backbone weights {path}: {exc}") from exc

    full = _make_torchvision_model(spec.backbone_id)
    backbone = _extract_backbone(spec.backbone_id, full)
    keys = set(state)
    if keys == set(full.state_dict()):
        full.load_state_dict(state)
    elif keys == set(backbone.state_dict()):
        backbone.load_state_dict(state)
    else:
        missing = sorted(set(backbone.state_dict()) - keys)[:3]
        raise WeightsError(
            f"weights file {path} does not match {spec.backbone_id!r} "
            f"(first missing keys: {missing})")
    return backbone


def _build_head(spec: RegressorSpec) -> nn.Module:
    layers: list[nn.Module] = []
    width = _BACKBONE_FEATURE_DIM[spec.backbone_id]
    for layer in spec.head:
        kind = layer[0]
        if kind == "linear":
            layers.append(nn.Linear(width, int(layer[1])))
            width = int(layer[1])
        elif kind == "relu":
            layers.append(nn.ReLU())
        elif kind == "dropout":
            layers.append(nn.Dropout(float(layer[1])))
        else:
            raise ValidationError(f"unknown head layer {layer!r}")
    return nn.Sequential(*layers)


def build_regressor(spec: RegressorSpec) -> RegressorHandle:
    """Assemble the network: file-backed backbone, seeded random head.

    The backbone starts frozen (feature-extractor scope); the head is
    initialized from ``spec.seed``, so two builds with the same spec
    have identical parameters.
    """
    backbone = _load_backbone(spec)
    torch.manual_seed(spec.seed)
    head = _build_head(spec)
    handle = RegressorHandle(spec, _RegressorNet(backbone, head))
    handle.net.eval()
    return set_trainable(handle, "head_only")


def backbone_digest(model: RegressorHandle) -> str:
    """SHA-256 over every backbone parameter and buffer, in state order.

    Buffers (batch-norm running statistics) are included: the freeze
    contract demands the backbone stays bit-identical under head-only
    training, which also forbids running-stat updates.
    """
    h = hashlib.sha256()
    for key, tensor in model.net.backbone.state_dict().items():
        h.update(key.encode())
        h.update(tensor.detach().cpu().contiguous().numpy().tobytes())
    return h.hexdigest()


def set_trainable(model: RegressorHandle, scope: str) -> RegressorHandle:
    """Flag parameter groups per scope and record the backbone digest."""
    if scope not in ("head_only", "all"):
        raise ValidationError(f"unknown trainability scope {scope!r}")
    for param in model.net.backbone.parameters():
        param.requires_grad = scope == "all"
    for param in model.net.head.parameters():
        param.requires_grad = True
    model.scope = scope
    model.frozen_digest = backbone_digest(model)
    return model


# ---------------------------------------------------------------------------
# Input preparation


def _crop_to_tensor(crop: np.ndarray, input_size: int) -> torch.Tensor:
    check_image8(crop, "crop")
    im = Image.fromarray(crop)
    if im.mode != "RGB":
        im = im.convert("RGB")
    im = im.resize((input_size, input_size), Image.BILINEAR)
    arr = np.asarray(im, dtype=np.float32) / 255.0
    arr = (arr - np.asarray(IMAGENET_MEAN, dtype=np.float32)) \
        / np.asarray(IMAGENET_STD, dtype=np.float32)
    return torch.from_numpy(arr.transpose(2, 0, 1))


def _inputs_to_tensor(inputs, input_size: int,
                      images_root: str | Path | None = None) -> torch.Tensor:
    """Stack images (arrays or file paths) into a normalized batch."""
    tensors = []
    for item in inputs:
        if isinstance(item, (str, Path)):
            path = Path(images_root) / item if images_root else Path(item)
            item = dataset_mod.load_image(path)
        tensors.append(_crop_to_tensor(item, input_size))
    return torch.stack(tensors)


def _records_to_tensors(records: Sequence[AnnotationRecord], input_size: int,
                        images_root: str | Path | None):
    paths = [r.image_path for r in records]
    x = _inputs_to_tensor(paths, input_size, images_root)
    y = torch.tensor([r.index for r in records], dtype=torch.float32)
    return x, y


def _clamp_index(values: np.ndarray) -> np.ndarray:
    return np.clip(values, INDEX_MIN, INDEX_MAX)


# ---------------------------------------------------------------------------
# Training


def _batched_forward(module, x: torch.Tensor, batch_size: int) -> torch.Tensor:
    outs = []
    with torch.no_grad():
        for start in range(0, len(x), batch_size):
            outs.append(module(x[start:start + batch_size]))
    return torch.cat(outs)


def _run_training(model: RegressorHandle, x_train, y_train, x_val, y_val,
                  cfg: TrainConfig, device: torch.device) -> TrainHistory:
    net = model.net.to(device)
    x_train, y_train = x_train.to(device), y_train.to(device)
    x_val, y_val = x_val.to(device), y_val.to(device)

    old_threads = torch.get_num_threads()
    if cfg.deterministic:
        torch.set_num_threads(1)
    torch.manual_seed(cfg.seed)
    shuffler = torch.Generator().manual_seed(cfg.seed)
    try:
        feature_mode = cfg.phase == "feature_extractor"
        if feature_mode:
            # The backbone is frozen and in eval mode, so its output for
            # a fixed image never changes: cache features once.
            net.backbone.eval()
            feats_train = _batched_forward(net.features, x_train, cfg.batch_size)
            feats_val = _batched_forward(net.features, x_val, cfg.batch_size)
            trainable = net.head
        else:
            trainable = net

        params = [p for p in net.parameters() if p.requires_grad]
        optimizer = torch.optim.Adam(params, lr=cfg.learning_rate)
        criterion = nn.L1Loss()

        stats: list[EpochStats] = []
        best_val = math.inf
        best_epoch = 0
        best_state = None
        stall = 0
        stop_reason = "max_epochs"
        n = len(x_train)

        for epoch in range(1, cfg.max_epochs + 1):
            trainable.train()
            if feature_mode:
                net.backbone.eval()
            perm = torch.randperm(n, generator=shuffler)
            total_loss = 0.0
            for start in range(0, n, cfg.batch_size):
                idx = perm[start:start + cfg.batch_size]
                optimizer.zero_grad()
                if feature_mode:
                    pred = net.head(feats_train[idx]).squeeze(-1)
                else:
                    pred = net(x_train[idx])
                loss = criterion(pred, y_train[idx])
                if not torch.isfinite(loss):
                    raise TrainingError(
                        f"non-finite training loss at epoch {epoch} "
                        f"(phase={cfg.phase}, lr={cfg.learning_rate}, "
                        f"batch_size={cfg.batch_size})")
                loss.backward()
                optimizer.step()
                total_loss += float(loss.detach()) * len(idx)
            train_loss = total_loss / n

            net.eval()
            with torch.no_grad():
                if feature_mode:
                    val_pred = net.head(feats_val).squeeze(-1)
                else:
                    val_pred = _batched_forward(net, x_val, cfg.batch_size)
                val_loss = float(criterion(val_pred, y_val))
                clamped = _clamp_index(val_pred.cpu().numpy())
                val_mae = float(np.mean(np.abs(clamped - y_val.cpu().numpy())))
            stats.append(EpochStats(train_loss=train_loss, val_loss=val_loss,
                                    val_mae=val_mae))

            if val_loss < best_val - cfg.min_improvement:
                stall = 0
            else:
                stall += 1
            if val_loss < best_val:
                best_val = val_loss
                best_epoch = epoch
                best_state = copy.deepcopy(net.state_dict())
            if cfg.target_mae is not None and val_mae <= cfg.target_mae:
                stop_reason = "target_mae"
                break
            if stall >= cfg.patience:
                stop_reason = "patience"
                break
            if cfg.lr_decay < 1.0:
                for group in optimizer.param_groups:
                    group["lr"] *= cfg.lr_decay

        if best_state is not None:
            net.load_state_dict(best_state)
        net.eval()
        return TrainHistory(phase=cfg.phase, epochs=tuple(stats),
                            best_val_loss=best_val, best_epoch=best_epoch,
                            stop_reason=stop_reason)
    finally:
        torch.set_num_threads(old_threads)


def train_phase(model: RegressorHandle, data_split: DatasetSplit,
                cfg: TrainConfig,
                images_root: str | Path | None = None) -> TrainHistory:
    """Run one training phase over an annotated split.

    The model's trainability must already match the phase (head_only
    for feature_extractor, all for fine_tune).  Minimizes MAE between
    predictions and annotation indices; stops at max_epochs, after
    ``patience`` epochs without a val-loss improvement of at least
    ``min_improvement``, or once ``target_mae`` is reached.  The
    best-epoch parameters are retained.
    """
    if not data_split.train or not data_split.val:
        raise ValidationError("both split sides must be non-empty")
    expected_scope = "head_only" if cfg.phase == "feature_extractor" else "all"
    if model.scope != expected_scope:
        raise ValidationError(
            f"model trainability is {model.scope!r} but phase {cfg.phase!r} "
            f"requires {expected_scope!r}; call set_trainable first")
    size = model.spec.input_size
    x_train, y_train = _records_to_tensors(data_split.train, size, images_root)
    x_val, y_val = _records_to_tensors(data_split.val, size, images_root)
    device = resolve_device()
    return _run_training(model, x_train, y_train, x_val, y_val, cfg, device)


# ---------------------------------------------------------------------------
# Inference and evaluation


def predict_index(model: RegressorHandle, crop: np.ndarray) -> AcceptabilityResult:
    """Score one crop: resize, normalize, forward, clamp to [1, 9]."""
    x = _crop_to_tensor(crop, model.spec.input_size).unsqueeze(0)
    model.net.eval()
    with torch.no_grad():
        raw = float(model.net(x)[0])
    return AcceptabilityResult.from_index(float(_clamp_index(np.array(raw))))


@dataclass(frozen=True)
class EvalRow:
    image_path: str
    truth: float
    prediction: float
    level: str


@dataclass(frozen=True)
class EvalReport:
    mae: float
    rows: tuple[EvalRow, ...]
    residuals: losses_mod.ResidualTable
    errors: tuple[tuple[str, str], ...] = field(default=())


def evaluate(model: RegressorHandle, records: Sequence[AnnotationRecord],
             images_root: str | Path | None = None) -> EvalReport:
    """MAE over clamped predictions plus per-image rows.

    Unreadable images are reported in ``errors`` and skipped;
    evaluation continues with the remaining rows.
    """
    if not records:
        raise ValidationError("evaluate needs at least one record")
    rows = []
    errors = []
    truths = []
    preds = []
    model.net.eval()
    for rec in records:
        path = Path(images_root) / rec.image_path if images_root \
            else Path(rec.image_path)
        try:
            img = dataset_mod.load_image(path)
        except (OSError, ValueError) as exc:
            errors.append((rec.image_path, str(exc)))
            continue
        result = predict_index(model, img)
        rows.append(EvalRow(image_path=rec.image_path, truth=rec.index,
                            prediction=result.index, level=result.level))
        truths.append(rec.index)
        preds.append(result.index)
    if not rows:
        raise ValidationError("no record could be evaluated")
    table = losses_mod.regression_errors(truths, preds)
    return EvalReport(mae=table.mae, rows=tuple(rows), residuals=table,
                      errors=tuple(errors))


# ---------------------------------------------------------------------------
# Checkpointing


def _history_digest(history: TrainHistory | None) -> str | None:
    if history is None:
        return None
    payload = json.dumps(asdict(history), sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()


def save_checkpoint(model: RegressorHandle, path: str | Path,
                    history: TrainHistory | None = None) -> None:
    """Persist architecture description, parameters and history digest."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save({
        "format_version": 1,
        "backbone_id": model.spec.backbone_id,
        "head": model.spec.head,
        "input_size": model.spec.input_size,
        "seed": model.spec.seed,
        "state_dict": model.net.state_dict(),
        "history": asdict(history) if history is not None else None,
        "history_digest": _history_digest(history),
    }, path)


def load_checkpoint(path: str | Path) -> tuple[RegressorHandle, TrainHistory | None]:
    """Rebuild a regressor from a checkpoint (no weights file needed)."""
    path = Path(path)
    if not path.exists():
        raise WeightsError(f"checkpoint not found: {path}")
    payload = torch.load(path, map_location="cpu", weights_only=True)
    spec = RegressorSpec(backbone_id=payload["backbone_id"],
                         head=tuple(tuple(l) for l in payload["head"]),
                         input_size=payload["input_size"],
                         backbone_weights=None, seed=payload["seed"])
    full = _make_torchvision_model(spec.backbone_id)
    net = _RegressorNet(_extract_backbone(spec.backbone_id, full),
                        _build_head(spec))
    net.load_state_dict(payload["state_dict"])
    handle = RegressorHandle(spec, net)
    set_trainable(handle, "head_only")
    handle.net.eval()
    history = None
    if payload.get("history") is not None:
        raw = payload["history"]
        history = TrainHistory(
            phase=raw["phase"],
            epochs=tuple(EpochStats(**e) for e in raw["epochs"]),
            best_val_loss=raw["best_val_loss"], best_epoch=raw["best_epoch"],
            stop_reason=raw["stop_reason"])
    return handle, history


def init_backbone_weights(backbone_id: str, path: str | Path, seed: int = 0) -> Path:
    """Write a freshly initialized backbone state_dict to ``path``.

    A stand-in for environments without the real pretrained file
    (hermetic tests, offline boxes): the file is still explicit
    configuration, never a silent fallback.  For production use, dump a
    torchvision pretrained ``state_dict`` to the same location instead.
    """
    if backbone_id not in _BACKBONE_FEATURE_DIM:
        raise ValidationError(f"unknown backbone {backbone_id!r}")
    torch.manual_seed(seed)
    full = _make_torchvision_model(backbone_id)
    backbone = _extract_backbone(backbone_id, full)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(backbone.state_dict(), path)
    return path


# ---------------------------------------------------------------------------
# scikit-learn facade


class AcceptabilityRegressor(BaseEstimator, RegressorMixin):
    """Transfer-learned image regressor with the sklearn estimator API.

    ``fit(X, y)`` accepts image file paths or uint8 arrays plus target
    indices; it trains the head on frozen backbone features and then,
    if ``fine_tune`` is set, unfreezes everything for a second phase.
    ``predict`` returns indices clamped to [1, 9].
    """

    def __init__(self, backbone: str = "vgg16", backbone_weights: str | None = None,
                 head: tuple = DEFAULT_HEAD, input_size: int = 224,
                 learning_rate: float = 1e-4, batch_size: int = 32,
                 feature_epochs: int | None = None,
                 fine_tune: bool = True, fine_tune_epochs: int = 15,
                 patience: int = 10, val_ratio: float = 0.2, seed: int = 0,
                 target_mae: float | None = None):
        self.backbone = backbone
        self.backbone_weights = backbone_weights
        self.head = head
        self.input_size = input_size
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.feature_epochs = feature_epochs
        self.fine_tune = fine_tune
        self.fine_tune_epochs = fine_tune_epochs
        self.patience = patience
        self.val_ratio = val_ratio
        self.seed = seed
        self.target_mae = target_mae

    def _phase_config(self, phase: str) -> TrainConfig:
        overrides = dict(learning_rate=self.learning_rate,
                         batch_size=self.batch_size, patience=self.patience,
                         seed=self.seed, target_mae=self.target_mae)
        if phase == "feature_extractor" and self.feature_epochs is not None:
            overrides["max_epochs"] = self.feature_epochs
        if phase == "fine_tune":
            overrides["max_epochs"] = self.fine_tune_epochs
        return TrainConfig.defaults_for(self.backbone, phase, **overrides)

    def fit(self, X, y):
        y = np.asarray(y, dtype=np.float32)
        if len(X) != len(y):
            raise ValidationError(f"X and y disagree: {len(X)} vs {len(y)}")
        if len(y) < 2:
            raise ValidationError("need at least 2 samples to fit")
        spec = RegressorSpec(backbone_id=self.backbone, head=self.head,
                             input_size=self.input_size,
                             backbone_weights=self.backbone_weights,
                             seed=self.seed)
        self.model_ = build_regressor(spec)

        rng = np.random.default_rng(self.seed)
        order = rng.permutation(len(y))
        n_val = min(max(int(round(self.val_ratio * len(y))), 1), len(y) - 1)
        val_idx, train_idx = order[:n_val], order[n_val:]
        x_all = _inputs_to_tensor(X, self.input_size)
        y_all = torch.from_numpy(y)
        device = resolve_device()

        self.history_ = []
        cfg = self._phase_config("feature_extractor")
        self.history_.append(_run_training(
            self.model_, x_all[train_idx], y_all[train_idx],
            x_all[val_idx], y_all[val_idx], cfg, device))
        if self.fine_tune:
            set_trainable(self.model_, "all")
            cfg = self._phase_config("fine_tune")
            self.history_.append(_run_training(
                self.model_, x_all[train_idx], y_all[train_idx],
                x_all[val_idx], y_all[val_idx], cfg, device))
        return self

    def predict(self, X) -> np.ndarray:
        if not hasattr(self, "model_"):
            raise ValidationError("estimator is not fitted yet; call fit first")
        x = _inputs_to_tensor(X, self.input_size)
        self.model_.net.eval()
        preds = _batched_forward(self.model_.net, x, self.batch_size)
        return _clamp_index(preds.cpu().numpy().astype(np.float64))
