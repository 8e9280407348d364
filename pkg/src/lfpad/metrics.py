"""Biometric evaluation: error rates, recognition rates, CMC, and splits.

The live (real) class is the positive class throughout:

    FAR  = FP / (FP + TN)   spoof samples accepted as real
    FRR  = FN / (TP + FN)   real samples rejected as spoof
    TER  = FAR + FRR
    HTER = TER / 2
    CRR  = correctly classified / total (matrix trace over total)

In multi-class mode FAR/FRR are computed on the binary collapse (real vs
any spoof). A per-attack TER uses only that attack's samples as the
negative pool, combined with the overall FRR; this convention is printed
in report headers because upstream definitions leave the denominators
open. Per-class CRR is the recall of that class; in two-class mode only
the spoof side is reported (the real side is already captured by FRR).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .errors import ClassTooSmall, EmptyInput, EmptyMatrix, NoNegatives, NoPositives

REAL = 0  # positive-class index in every labeling this package produces


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    """k x k count matrix: rows = true class, cols = predicted class."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"label shapes differ: {y_true.shape} vs {y_pred.shape}")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def collapse_binary(cm: np.ndarray, positive: int = REAL) -> tuple[int, int, int, int]:
    """(TP, FN, FP, TN) after collapsing all non-positive classes into one."""
    cm = np.asarray(cm)
    tp = int(cm[positive, positive])
    fn = int(cm[positive].sum() - tp)
    fp = int(cm[:, positive].sum() - tp)
    tn = int(cm.sum() - tp - fn - fp)
    return tp, fn, fp, tn


def far(cm: np.ndarray, positive: int = REAL) -> float:
    """Proportion of spoof samples classified as real: FP / (FP + TN)."""
    _, _, fp, tn = collapse_binary(cm, positive)
    if fp + tn == 0:
        raise NoNegatives("no spoof samples: FAR undefined")
    return fp / (fp + tn)


def frr(cm: np.ndarray, positive: int = REAL) -> float:
    """Proportion of real samples classified as spoof: FN / (TP + FN)."""
    tp, fn, _, _ = collapse_binary(cm, positive)
    if tp + fn == 0:
        raise NoPositives("no real samples: FRR undefined")
    return fn / (tp + fn)


def ter_hter(far_value: float, frr_value: float) -> tuple[float, float]:
    ter = far_value + frr_value
    return ter, ter / 2.0


def crr(cm: np.ndarray) -> float:
    """Fraction of correctly classified samples: trace over total."""
    cm = np.asarray(cm)
    total = int(cm.sum())
    if total == 0:
        raise EmptyMatrix("confusion matrix has no samples")
    return float(np.trace(cm)) / total


def per_class_crr(cm: np.ndarray) -> dict[int, float]:
    """Recall per true class, for classes with at least one sample."""
    cm = np.asarray(cm)
    out = {}
    for c in range(cm.shape[0]):
        row = int(cm[c].sum())
        if row:
            out[c] = int(cm[c, c]) / row
    return out


def attack_ter(cm: np.ndarray, attack: int, positive: int = REAL) -> tuple[float, float, float]:
    """(FAR, TER, HTER) with one attack class as the whole negative pool."""
    cm = np.asarray(cm)
    pool = int(cm[attack].sum())
    if pool == 0:
        raise NoNegatives(f"no samples of attack class {attack}")
    far_a = int(cm[attack, positive]) / pool
    frr_all = frr(cm, positive)
    ter, hter = ter_hter(far_a, frr_all)
    return far_a, ter, hter


def cmc_curve(scores: np.ndarray, y_true) -> list[tuple[int, float]]:
    """Cumulative match characteristic from score vectors.

    accuracy at rank r = fraction of samples whose true class appears among
    the r highest-scoring classes (score ties break toward the lower index).
    """
    scores = np.asarray(scores, dtype=np.float64)
    y_true = np.asarray(y_true, dtype=np.int64)
    if scores.ndim != 2 or len(scores) == 0:
        raise EmptyInput("need a nonempty (n, k) score array")
    if y_true.shape != (len(scores),):
        raise ValueError("one true label per score vector required")
    n, k = scores.shape
    ranking = np.argsort(-scores, axis=1, kind="stable")
    position = np.argmax(ranking == y_true[:, None], axis=1)  # rank-1 position is 0
    return [(r, float(np.mean(position < r))) for r in range(1, k + 1)]


def stratified_split(labels, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seed-deterministic 50/50 split per class; odd counts favor train."""
    labels = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 20]))
    train: list[int] = []
    test: list[int] = []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if len(idx) < 2:
            raise ClassTooSmall(f"class {c} has {len(idx)} sample(s); need >= 2")
        idx = idx[rng.permutation(len(idx))]
        half = (len(idx) + 1) // 2
        train.extend(idx[:half])
        test.extend(idx[half:])
    return np.sort(np.array(train)), np.sort(np.array(test))


def split_dataset(samples, seed: int, key=lambda s: int(s.label)):
    """Stratified 50/50 partition of a sample list; no sample in both halves."""
    labels = [key(s) for s in samples]
    train_idx, test_idx = stratified_split(labels, seed)
    return [samples[i] for i in train_idx], [samples[i] for i in test_idx]


@dataclass(frozen=True)
class MetricsReport:
    """The serializable evaluation summary with the fixed JSON key set."""

    mode: str
    confusion: list[list[int]]
    far: float
    frr: float
    ter: float
    hter: float
    crr: float
    per_class_crr: dict[str, float]
    cmc: list[list[float]]
    seed: int
    config_digest: str

    def to_json(self) -> str:
        payload = {
            "mode": self.mode,
            "confusion": self.confusion,
            "far": self.far,
            "frr": self.frr,
            "ter": self.ter,
            "hter": self.hter,
            "crr": self.crr,
            "per_class_crr": self.per_class_crr,
            "cmc": self.cmc,
            "seed": self.seed,
            "config_digest": self.config_digest,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    def cmc_csv(self) -> str:
        lines = ["rank,accuracy"]
        lines += [f"{int(rank)},{acc!r}" for rank, acc in self.cmc]
        return "\n".join(lines) + "\n"


def build_report(
    mode: str,
    cm: np.ndarray,
    scores: np.ndarray,
    y_true,
    class_names: list[str],
    seed: int,
    config_digest: str,
) -> MetricsReport:
    """Assemble the report; FAR/FRR always use the binary collapse."""
    far_v = far(cm)
    frr_v = frr(cm)
    ter_v, hter_v = ter_hter(far_v, frr_v)
    recalls = per_class_crr(cm)
    if mode == "two":
        named = {class_names[c]: v for c, v in recalls.items() if c != REAL}
    else:
        named = {class_names[c]: v for c, v in recalls.items()}
    return MetricsReport(
        mode=mode,
        confusion=[[int(v) for v in row] for row in np.asarray(cm)],
        far=float(far_v),
        frr=float(frr_v),
        ter=float(ter_v),
        hter=float(hter_v),
        crr=float(crr(cm)),
        per_class_crr=named,
        cmc=[[int(r), float(a)] for r, a in cmc_curve(scores, y_true)],
        seed=int(seed),
        config_digest=config_digest,
    )


def digest_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]
