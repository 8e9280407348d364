"""End-to-end pipeline stages behind the CLI.

Every stage is a pure function of the parsed configuration: all randomness
flows from the explicit seeds, outputs are rewritten identically on re-runs,
and reports embed a digest of the resolved configuration.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import codecs, depthnet, metrics, spoofclf, synth
from .errors import CheckpointMissing, ConfigInvalid, DatasetMissing
from .nn.checkpoint import load_checkpoint, save_checkpoint

REQUIRED_KEYS = ("n_subjects", "variants", "seed_master", "seed_split", "seed_train", "out_dir")


@dataclass(frozen=True)
class PipelineConfig:
    # light-field and image dimensions
    nu: int = 5
    nv: int = 5
    ns: int = 64
    nt: int = 64
    image_h: int = 64
    image_w: int = 64
    # dataset size
    n_subjects: int = 8
    variants: int = 2
    # seeds (explicit; no wall-clock defaults)
    seed_master: int = 0
    seed_split: int = 0
    seed_train: int = 0
    # depth network recipe; pretraining runs at a reduced resolution since
    # convolution weights are resolution-independent
    depth_width_scale: float = 0.25
    depth_pretrain_size: int = 80
    depth_pretrain_epochs: int = 220
    depth_pretrain_res: int = 32
    depth_finetune_epochs: int = 90
    depth_lr: float = 0.15
    depth_finetune_lr: float = 0.1
    depth_batch: int = 4
    # classifier recipe
    clf_mode: str = "two"
    clf_width_scale: float = 0.125
    clf_epochs: int = -1  # -1: mode default (50 two-class, 200 multi-class)
    clf_lr: float = spoofclf.DEFAULT_LEARNING_RATE
    clf_batch: int = 8
    clf_pretrain_size: int = 60
    clf_pretrain_epochs: int = 8
    clf_pretrain_lr: float = 0.01
    clf_augment: bool = False
    # output
    out_dir: str = "out"

    def __post_init__(self):
        if self.nu % 2 == 0 or self.nv % 2 == 0:
            raise ConfigInvalid("nu and nv must be odd")
        if self.image_h != self.ns or self.image_w != self.nt:
            raise ConfigInvalid("image dims must equal the spatial light-field dims")
        if self.image_h % 8 or self.image_w % 8:
            raise ConfigInvalid("image dims must be divisible by 8")
        if self.clf_mode not in spoofclf.MODES:
            raise ConfigInvalid(f"clf_mode must be one of {sorted(spoofclf.MODES)}")
        if self.depth_pretrain_res % 8:
            raise ConfigInvalid("depth_pretrain_res must be divisible by 8")
        if self.n_subjects < 2:
            raise ConfigInvalid("n_subjects must be >= 2")
        for name in ("seed_master", "seed_split", "seed_train"):
            if getattr(self, name) < 0:
                raise ConfigInvalid(f"{name} must be a nonnegative integer")

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return (self.nu, self.nv, self.ns, self.nt)

    @property
    def clf_epochs_resolved(self) -> int:
        if self.clf_epochs >= 0:
            return self.clf_epochs
        return spoofclf.DEFAULT_EPOCHS[self.clf_mode]

    def canonical(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool):
                v = "true" if v else "false"
            lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"

    @property
    def digest(self) -> str:
        return metrics.digest_text(self.canonical())

    @property
    def out_path(self) -> Path:
        return Path(self.out_dir)


_FIELD_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def parse_config(text: str, overrides: dict | None = None) -> PipelineConfig:
    """Parse the flat key=value format (# comments, one key per line)."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigInvalid(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _FIELD_TYPES:
            raise ConfigInvalid(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigInvalid(f"line {lineno}: duplicate key {key!r}")
        values[key] = value
    for key in REQUIRED_KEYS:
        if key not in values:
            raise ConfigInvalid(f"missing required key {key!r}")
    kwargs = {}
    for key, value in values.items():
        target = _FIELD_TYPES[key]
        try:
            if target == "bool":
                if value not in ("true", "false"):
                    raise ValueError(value)
                kwargs[key] = value == "true"
            elif target == "int":
                kwargs[key] = int(value)
            elif target == "float":
                kwargs[key] = float(value)
            else:
                kwargs[key] = value
        except ValueError:
            raise ConfigInvalid(f"key {key!r}: cannot parse {value!r} as {target}") from None
    if overrides:
        kwargs.update(overrides)
    return PipelineConfig(**kwargs)


def load_config(path: Path | str, overrides: dict | None = None) -> PipelineConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"), overrides)


# ---------------------------------------------------------------- dataset


def _sample_stem(subject: int, variant: int, attack: synth.AttackClass) -> str:
    return f"s{subject:03d}_v{variant:02d}_{attack.label_name}"


def stage_gen(cfg: PipelineConfig) -> Path:
    """Render the corpus to LF5D/DPTH files plus the split-tagged manifest."""
    items = synth.make_dataset(cfg.n_subjects, cfg.variants, cfg.dims, cfg.seed_master)
    labels = [int(item.sample.label) for item in items]
    train_idx, _ = metrics.stratified_split(labels, cfg.seed_split)
    train_set = set(int(i) for i in train_idx)

    data_dir = cfg.out_path / "data"
    data_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for i, item in enumerate(items):
        stem = _sample_stem(item.spec.subject_id, item.variant, item.sample.label)
        lf_rel = f"data/{stem}.lf5d"
        dp_rel = f"data/{stem}.dpth"
        codecs.write_lightfield(cfg.out_path / lf_rel, item.lightfield)
        codecs.write_depthmap(cfg.out_path / dp_rel, item.sample.depth_gt)
        records.append(
            codecs.ManifestRecord(
                lf_rel, dp_rel, item.spec.subject_id, item.sample.label.label_name,
                "train" if i in train_set else "test",
            )
        )
    manifest = cfg.out_path / "manifest.tsv"
    manifest.write_text(codecs.format_manifest(records), encoding="utf-8")
    return manifest


@dataclass(frozen=True)
class LoadedDataset:
    records: list[codecs.ManifestRecord]
    images: np.ndarray  # (n, h, w) center views
    depths: np.ndarray  # (n, h, w) ground-truth depth
    labels: np.ndarray  # (n,) AttackClass values
    is_train: np.ndarray  # (n,) bool

    def subset(self, train: bool):
        mask = self.is_train if train else ~self.is_train
        return self.images[mask], self.depths[mask], self.labels[mask]


def load_dataset(cfg: PipelineConfig) -> LoadedDataset:
    manifest = cfg.out_path / "manifest.tsv"
    if not manifest.exists():
        raise DatasetMissing(f"no manifest at {manifest}; run `gen` first")
    records = codecs.parse_manifest(manifest.read_text(encoding="utf-8"))
    images, depths, labels, is_train = [], [], [], []
    for rec in records:
        lf = codecs.read_lightfield(cfg.out_path / rec.lf_path)
        images.append(lf.center_view())
        depths.append(codecs.read_depthmap(cfg.out_path / rec.depth_path))
        labels.append(int(synth.NAME_TO_CLASS[rec.class_name]))
        is_train.append(rec.split == "train")
    return LoadedDataset(
        records, np.asarray(images), np.asarray(depths),
        np.asarray(labels, dtype=np.int64), np.asarray(is_train, dtype=bool),
    )


# ---------------------------------------------------------------- training


def _loss_csv(rows: list[tuple[str, int, float]]) -> str:
    lines = ["stage,epoch,mean_loss"]
    lines += [f"{stage},{epoch},{loss!r}" for stage, epoch, loss in rows]
    return "\n".join(lines) + "\n"


def depthnet_paths(cfg: PipelineConfig) -> tuple[Path, Path]:
    return cfg.out_path / "depthnet.nnck", cfg.out_path / "depth_loss.csv"


def stage_train_depth(cfg: PipelineConfig) -> Path:
    """Pretrain on generic surfaces, fine-tune on the train split."""
    data = load_dataset(cfg)
    train_images, train_depths, _ = data.subset(train=True)

    net = depthnet.build_depthnet(
        depthnet.DepthNetConfig((cfg.image_h, cfg.image_w), cfg.depth_width_scale),
        seed=cfg.seed_train,
    )
    corpus_seed = int(
        np.random.SeedSequence([cfg.seed_train, 100]).generate_state(1)[0]
    )
    res = min(cfg.depth_pretrain_res, cfg.image_h, cfg.image_w)
    gen_images, gen_depths = synth.make_generic_depth_corpus(
        cfg.depth_pretrain_size, res, res, corpus_seed
    )
    pre = depthnet.train_depthnet(
        net, gen_images, gen_depths,
        depthnet.TrainRecipe("pretrain", cfg.depth_pretrain_epochs, cfg.depth_lr, "generic"),
        seed=cfg.seed_train, batch_size=cfg.depth_batch,
    )
    fin = depthnet.train_depthnet(
        net, train_images, train_depths,
        depthnet.TrainRecipe("finetune", cfg.depth_finetune_epochs, cfg.depth_finetune_lr, "finger"),
        seed=cfg.seed_train, batch_size=cfg.depth_batch,
    )
    ckpt_path, loss_path = depthnet_paths(cfg)
    ckpt_path.write_bytes(save_checkpoint(net))
    rows = [("pretrain", i, v) for i, v in enumerate(pre)]
    rows += [("finetune", i, v) for i, v in enumerate(fin)]
    loss_path.write_text(_loss_csv(rows), encoding="utf-8")
    return ckpt_path


def load_depthnet(cfg: PipelineConfig):
    ckpt_path, _ = depthnet_paths(cfg)
    if not ckpt_path.exists():
        raise CheckpointMissing(f"no depth checkpoint at {ckpt_path}; run `train-depth` first")
    net = depthnet.build_depthnet(
        depthnet.DepthNetConfig((cfg.image_h, cfg.image_w), cfg.depth_width_scale),
        seed=cfg.seed_train,
    )
    load_checkpoint(net, ckpt_path.read_bytes())
    return net


def classifier_paths(cfg: PipelineConfig) -> tuple[Path, Path]:
    return (
        cfg.out_path / f"spoofclf_{cfg.clf_mode}.nnck",
        cfg.out_path / f"clf_{cfg.clf_mode}_loss.csv",
    )


def to_mode_labels(labels: np.ndarray, mode: str) -> np.ndarray:
    """Multi-class labels are the attack enum; two-class collapses spoofs to 1."""
    if mode == "multi":
        return labels.copy()
    return (labels != int(synth.AttackClass.REAL)).astype(np.int64)


def stage_train_clf(cfg: PipelineConfig) -> Path:
    """Backbone pretrain on generic shapes, then staged fine-tune on
    depth maps predicted for the train split."""
    data = load_dataset(cfg)
    dnet = load_depthnet(cfg)
    train_images, _, train_labels = data.subset(train=True)
    train_maps = depthnet.predict_depth_batch(dnet, train_images)

    clf_config = spoofclf.ClassifierConfig(
        cfg.clf_mode, (cfg.image_h, cfg.image_w), cfg.clf_width_scale
    )
    net = spoofclf.build_classifier(clf_config, seed=cfg.seed_train)
    corpus_seed = int(
        np.random.SeedSequence([cfg.seed_train, 101]).generate_state(1)[0]
    )
    gen_images, gen_labels = synth.make_generic_shape_corpus(
        cfg.clf_pretrain_size, cfg.image_h, cfg.image_w, corpus_seed
    )
    pre = spoofclf.pretrain_backbone(
        net, gen_images, gen_labels, epochs=cfg.clf_pretrain_epochs,
        learning_rate=cfg.clf_pretrain_lr, seed=cfg.seed_train, batch_size=cfg.clf_batch,
    )
    fin = spoofclf.finetune(
        net, train_maps, to_mode_labels(train_labels, cfg.clf_mode),
        epochs=cfg.clf_epochs_resolved, learning_rate=cfg.clf_lr,
        seed=cfg.seed_train, batch_size=cfg.clf_batch, augment=cfg.clf_augment,
    )
    ckpt_path, loss_path = classifier_paths(cfg)
    ckpt_path.write_bytes(save_checkpoint(net))
    rows = [("pretrain", i, v) for i, v in enumerate(pre)]
    rows += [("finetune", i, v) for i, v in enumerate(fin)]
    loss_path.write_text(_loss_csv(rows), encoding="utf-8")
    return ckpt_path


def load_classifier(cfg: PipelineConfig):
    ckpt_path, _ = classifier_paths(cfg)
    if not ckpt_path.exists():
        raise CheckpointMissing(f"no classifier checkpoint at {ckpt_path}; run `train-clf` first")
    net = spoofclf.build_classifier(
        spoofclf.ClassifierConfig(cfg.clf_mode, (cfg.image_h, cfg.image_w), cfg.clf_width_scale),
        seed=cfg.seed_train,
    )
    load_checkpoint(net, ckpt_path.read_bytes())
    return net


# ---------------------------------------------------------------- evaluation


def class_names(mode: str) -> list[str]:
    if mode == "two":
        return ["real", "spoof"]
    return list(synth.CLASS_NAMES)


def stage_eval(cfg: PipelineConfig) -> metrics.MetricsReport:
    """Evaluate on the test split; write JSON, CMC CSV, and prediction dump."""
    data = load_dataset(cfg)
    dnet = load_depthnet(cfg)
    cnet = load_classifier(cfg)

    test_images, _, test_labels = data.subset(train=False)
    test_records = [r for r in data.records if r.split == "test"]
    y_true = to_mode_labels(test_labels, cfg.clf_mode)
    maps = depthnet.predict_depth_batch(dnet, test_images)
    scores = spoofclf.predict_batch(cnet, maps)
    y_pred = np.array([spoofclf.rank_classes(s)[0] for s in scores], dtype=np.int64)

    names = class_names(cfg.clf_mode)
    cm = metrics.confusion_matrix(y_true, y_pred, len(names))
    report = metrics.build_report(
        cfg.clf_mode, cm, scores, y_true, names, cfg.seed_master, cfg.digest
    )
    (cfg.out_path / f"metrics_{cfg.clf_mode}.json").write_text(report.to_json(), encoding="utf-8")
    (cfg.out_path / f"cmc_{cfg.clf_mode}.csv").write_text(report.cmc_csv(), encoding="utf-8")

    dump = io.StringIO()
    dump.write("path,true_class," + ",".join(f"score_{n}" for n in names) + "\n")
    for rec, true, row in zip(test_records, y_true, scores):
        dump.write(f"{rec.lf_path},{names[true]}," + ",".join(repr(float(v)) for v in row) + "\n")
    (cfg.out_path / f"predictions_{cfg.clf_mode}.csv").write_text(dump.getvalue(), encoding="utf-8")
    return report


def render_summary(report: metrics.MetricsReport) -> str:
    """Text table in the two/five-row shape of the reference results."""
    cm = np.asarray(report.confusion)
    names = class_names(report.mode)
    recalls = metrics.per_class_crr(cm)
    lines = [
        f"mode: {report.mode}  (seed {report.seed}, config {report.config_digest})",
        "per-attack TER uses that attack's samples as the negative pool "
        "plus the overall FRR; real rows carry no TER.",
        f"{'class':>16} {'TER':>8} {'HTER':>8} {'CRR%':>8}",
    ]
    real_crr = recalls.get(metrics.REAL)
    real_txt = f"{100 * real_crr:.2f}" if real_crr is not None else "NA"
    lines.append(f"{'real':>16} {'NA':>8} {'NA':>8} {real_txt:>8}")
    if report.mode == "two":
        lines.append(
            f"{'spoof':>16} {report.ter:>8.4f} {report.hter:>8.4f} "
            f"{100 * recalls.get(1, 0.0):>8.2f}"
        )
    else:
        for c in range(1, len(names)):
            try:
                _, ter_a, hter_a = metrics.attack_ter(cm, c)
                ter_txt, hter_txt = f"{ter_a:.4f}", f"{hter_a:.4f}"
            except Exception:
                ter_txt = hter_txt = "NA"
            crr_txt = f"{100 * recalls[c]:.2f}" if c in recalls else "NA"
            lines.append(f"{names[c]:>16} {ter_txt:>8} {hter_txt:>8} {crr_txt:>8}")
    lines.append(f"{'overall CRR':>16} {'':>8} {'':>8} {100 * report.crr:>8.2f}")
    return "\n".join(lines) + "\n"


def load_report(cfg: PipelineConfig) -> metrics.MetricsReport:
    import json

    path = cfg.out_path / f"metrics_{cfg.clf_mode}.json"
    if not path.exists():
        raise CheckpointMissing(f"no metrics report at {path}; run `eval` first")
    raw = json.loads(path.read_text(encoding="utf-8"))
    return metrics.MetricsReport(**raw)
