"""Enrollment, tremor classification, AND-fusion with the visual stub,
and cost-weighted error accounting.

The tremor classifier is a one-vs-one max-margin (SVM) multiclass model:
one binary classifier per subject pair, majority vote, deterministic
tie-breaking by subject enumeration order.  Authentication is framed as
identification: a claim is accepted iff the predicted identity equals the
claimed one.
"""

from __future__ import annotations

import time
import zlib
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from sklearn.svm import SVC

from .errors import VirtimuError
from .features import SCHEMA_V1, FeatureSchema, FeatureVector, extract_features
from .sigcore import MotionTrace

__all__ = [
    "Template",
    "AuthDecision",
    "ErrorReport",
    "TremorClassifier",
    "train_classifier",
    "verify_tremor",
    "visual_stub",
    "and_fuse",
    "error_report",
]

KERNELS = ("linear", "quadratic")
SVM_C = 1.0
SVM_TOL = 1e-3
POLY_GAMMA = 1.0
POLY_COEF0 = 1.0


@dataclass
class AuthDecision:
    accept: bool
    score: float
    modality: str  # "visual" | "tremor" | "fused"
    video_id: str | None = None
    flags: list[str] = field(default_factory=list)


@dataclass
class ErrorReport:
    tpr: float
    tnr: float
    fpr: float
    fnr: float
    c1: float
    c2: float

    @property
    def total_error(self) -> float:
        return self.c1 * self.fpr + self.c2 * self.fnr


def _pair_key(a: str, b: str) -> str:
    return f"{a}|{b}"


class TremorClassifier:
    """One-vs-one kernel SVM over normalized feature vectors."""

    def __init__(self, kernel: str, schema_id: str):
        if kernel not in KERNELS:
            raise VirtimuError(f"kernel must be one of {KERNELS}, got {kernel!r}")
        self.kernel = kernel
        self.schema_id = schema_id
        self.subjects: list[str] = []
        self.mean: np.ndarray | None = None
        self.std: np.ndarray | None = None
        self.kept: np.ndarray | None = None  # indices of non-degenerate features
        # pair key -> (support_vectors, dual_coef, intercept)
        self.pairs: dict[str, tuple[np.ndarray, np.ndarray, float]] = {}
        self.cv_accuracy: float | None = None

    # -- kernel evaluation on normalized inputs --------------------------
    def _gram(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        dot = a @ b.T
        if self.kernel == "linear":
            return dot
        return (POLY_GAMMA * dot + POLY_COEF0) ** 2

    def _normalize(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return (x[:, self.kept] - self.mean) / self.std

    def fit(self, features_by_subject: dict[str, np.ndarray]) -> None:
        subjects = sorted(features_by_subject)
        if len(subjects) < 2:
            raise VirtimuError("one-vs-one training needs at least 2 subjects")
        all_x = np.vstack([features_by_subject[s] for s in subjects])
        std = all_x.std(axis=0)
        kept = np.flatnonzero(std > 0)
        if kept.size == 0:
            raise VirtimuError("all features degenerate across enrollment data")
        self.subjects = subjects
        self.kept = kept
        self.mean = all_x[:, kept].mean(axis=0)
        self.std = all_x[:, kept].std(axis=0)
        self.pairs = {}
        for a, b in combinations(subjects, 2):
            xa = self._normalize(features_by_subject[a])
            xb = self._normalize(features_by_subject[b])
            x = np.vstack([xa, xb])
            y = np.concatenate([np.ones(len(xa)), -np.ones(len(xb))])
            if np.allclose(xa.mean(axis=0), xb.mean(axis=0)) and np.allclose(
                xa.std(axis=0), xb.std(axis=0)
            ) and np.array_equal(np.sort(xa, axis=0), np.sort(xb, axis=0)):
                raise VirtimuError(f"degenerate classes: {a} and {b} have identical features")
            svc = self._make_svc()
            svc.fit(x, y)
            sv = x[svc.support_]
            coef = svc.dual_coef_[0].copy()
            self.pairs[_pair_key(a, b)] = (sv, coef, float(svc.intercept_[0]))

    def _make_svc(self) -> SVC:
        if self.kernel == "linear":
            return SVC(kernel="linear", C=SVM_C, tol=SVM_TOL)
        return SVC(
            kernel="poly", degree=2, gamma=POLY_GAMMA, coef0=POLY_COEF0,
            C=SVM_C, tol=SVM_TOL,
        )

    def _pair_decision(self, a: str, b: str, xn: np.ndarray) -> np.ndarray:
        sv, coef, b0 = self.pairs[_pair_key(a, b)]
        return self._gram(xn, sv) @ coef + b0

    def predict(self, x: np.ndarray) -> list[str]:
        """Majority vote over all subject pairs; ties go to the earliest
        subject in enumeration order."""
        xn = self._normalize(x)
        votes = np.zeros((xn.shape[0], len(self.subjects)), dtype=int)
        margins = np.zeros((xn.shape[0], len(self.subjects)))
        idx = {s: i for i, s in enumerate(self.subjects)}
        for a, b in combinations(self.subjects, 2):
            d = self._pair_decision(a, b, xn)
            votes[d > 0, idx[a]] += 1
            votes[d <= 0, idx[b]] += 1
            margins[:, idx[a]] += d
            margins[:, idx[b]] -= d
        return [self.subjects[i] for i in np.argmax(votes, axis=1)]

    def decision_score(self, claimed: str, x: np.ndarray) -> np.ndarray:
        """Mean signed margin of the claimed subject against all others."""
        xn = self._normalize(x)
        total = np.zeros(xn.shape[0])
        for other in self.subjects:
            if other == claimed:
                continue
            a, b = sorted([claimed, other])
            d = self._pair_decision(a, b, xn)
            total += d if a == claimed else -d
        return total / (len(self.subjects) - 1)

    # -- persistence ------------------------------------------------------
    def save(self, path) -> None:
        with open(path, "w") as f:
            f.write("format=virtimu-template-v1\n")
            f.write(f"schema_id={self.schema_id}\n")
            f.write(f"kernel={self.kernel}\n")
            f.write(f"subjects={','.join(self.subjects)}\n")
            f.write(f"kept={','.join(map(str, self.kept))}\n")
            f.write(f"mean={_fmt(self.mean)}\n")
            f.write(f"std={_fmt(self.std)}\n")
            for key, (sv, coef, b0) in self.pairs.items():
                f.write(f"pair={key}\n")
                f.write(f"intercept={b0!r}\n")
                f.write(f"dual_coef={_fmt(coef)}\n")
                f.write(f"n_sv={sv.shape[0]}\n")
                for row in sv:
                    f.write(f"sv={_fmt(row)}\n")

    @classmethod
    def load(cls, path) -> "TremorClassifier":
        kv = []
        with open(path) as f:
            for line in f:
                line = line.rstrip("\n")
                if line:
                    k, v = line.split("=", 1)
                    kv.append((k, v))
        d = dict(kv)
        if d.get("format") != "virtimu-template-v1":
            raise VirtimuError(f"unrecognized template format in {path}")
        clf = cls(kernel=d["kernel"], schema_id=d["schema_id"])
        clf.subjects = d["subjects"].split(",")
        clf.kept = np.array([int(v) for v in d["kept"].split(",")])
        clf.mean = _parse(d["mean"])
        clf.std = _parse(d["std"])
        clf.pairs = {}
        key, b0, coef, svs = None, None, None, []
        for k, v in kv:
            if k == "pair":
                if key is not None:
                    clf.pairs[key] = (np.vstack(svs), coef, b0)
                key, b0, coef, svs = v, None, None, []
            elif k == "intercept":
                b0 = float(v)
            elif k == "dual_coef":
                coef = _parse(v)
            elif k == "sv":
                svs.append(_parse(v))
        if key is not None:
            clf.pairs[key] = (np.vstack(svs), coef, b0)
        return clf


def _fmt(arr) -> str:
    return ",".join(repr(float(v)) for v in np.asarray(arr).ravel())


def _parse(s) -> np.ndarray:
    return np.array([float(v) for v in s.split(",")])


@dataclass
class Template:
    """Enrolled state for one claimed identity (classifier is shared)."""

    subject_id: str
    classifier: TremorClassifier
    schema_id: str
    created_at: float = field(default_factory=time.time)


def train_classifier(
    features_by_subject: dict[str, np.ndarray],
    kernel: str = "quadratic",
    folds: int = 5,
    schema: FeatureSchema = SCHEMA_V1,
) -> dict[str, Template]:
    """Train the one-vs-one classifier and wrap it per subject.

    Also runs deterministic k-fold cross validation (contiguous folds in
    data order) and records the accuracy on the shared classifier.
    """
    subjects = sorted(features_by_subject)
    if len(subjects) < 2:
        raise VirtimuError("one-vs-one training needs at least 2 subjects")
    arrs = {s: np.atleast_2d(np.asarray(v, dtype=np.float64)) for s, v in features_by_subject.items()}
    for s, arr in arrs.items():
        if arr.shape[0] < folds:
            raise VirtimuError(f"subject {s} has {arr.shape[0]} samples < {folds} folds")

    clf = TremorClassifier(kernel=kernel, schema_id=schema.schema_id)
    clf.fit(arrs)

    if folds > 1:
        correct = total = 0
        for k in range(folds):
            train_k, test_k = {}, {}
            for s, arr in arrs.items():
                bounds = np.linspace(0, arr.shape[0], folds + 1).astype(int)
                mask = np.zeros(arr.shape[0], dtype=bool)
                mask[bounds[k] : bounds[k + 1]] = True
                train_k[s] = arr[~mask]
                test_k[s] = arr[mask]
            fold_clf = TremorClassifier(kernel=kernel, schema_id=schema.schema_id)
            fold_clf.fit(train_k)
            for s, arr in test_k.items():
                if arr.shape[0] == 0:
                    continue
                pred = fold_clf.predict(arr)
                correct += sum(p == s for p in pred)
                total += arr.shape[0]
        clf.cv_accuracy = correct / total if total else float("nan")

    return {s: Template(subject_id=s, classifier=clf, schema_id=clf.schema_id) for s in subjects}


def verify_tremor(
    source, template: Template, method: str = "rse", video_id: str | None = None
) -> AuthDecision:
    """Authenticate a trace (or video) against a claimed identity.

    ``source`` is a MotionTrace or a VideoClip; videos are first run
    through the requested virtual sensor.  Accept iff the identification
    classifier predicts the claimed subject.
    """
    from .sidechan import virtual_sensor  # local import avoids a cycle
    from .simulate import VideoClip

    if isinstance(source, VideoClip):
        trace = virtual_sensor(method, source)
        source_kind = method
    elif isinstance(source, MotionTrace):
        trace = source
        source_kind = method if method in ("ite", "rse") else "physical"
    else:
        raise VirtimuError(f"cannot verify a {type(source).__name__}")

    clf = template.classifier
    if clf.schema_id != template.schema_id:
        raise VirtimuError("template/classifier schema mismatch")
    flags = []
    if np.allclose(trace.data.std(axis=1), 0.0):
        return AuthDecision(
            accept=False, score=float("-inf"), modality="tremor",
            video_id=video_id, flags=["degenerate-trace"],
        )
    feats = extract_features(trace, SCHEMA_V1, source=source_kind)
    if feats.schema_id != template.schema_id:
        raise VirtimuError(
            f"schema mismatch: features {feats.schema_id} vs template {template.schema_id}"
        )
    x = feats.values[None, :]
    predicted = clf.predict(x)[0]
    score = float(clf.decision_score(template.subject_id, x)[0])
    return AuthDecision(
        accept=predicted == template.subject_id,
        score=score,
        modality="tremor",
        video_id=video_id,
        flags=flags,
    )


@dataclass
class VisualStubConfig:
    """Oracle modeling the unimodal facial system.

    Defaults model the perfect-mask finding: every legitimate and every
    attack video authenticates (TPR=1, TNR=0).
    """

    tpr: float = 1.0
    tnr: float = 0.0
    seed: int = 0


def visual_stub(
    video=None, attack: str = "none", config: VisualStubConfig | None = None,
    video_id: str | None = None,
) -> AuthDecision:
    cfg = config or VisualStubConfig()
    if attack not in ("none", "perfect_mask"):
        raise VirtimuError(f"unknown attack {attack!r}")
    salt = zlib.crc32(video_id.encode()) if video_id else 0
    rng = np.random.default_rng((cfg.seed, salt))
    if attack == "none":
        accept = cfg.tpr >= 1.0 or rng.random() < cfg.tpr
    else:
        accept = not (cfg.tnr >= 1.0 or rng.random() < cfg.tnr)
    return AuthDecision(
        accept=accept, score=1.0 if accept else 0.0, modality="visual", video_id=video_id
    )


def _normalized_score(d: AuthDecision) -> float:
    if d.modality == "visual":
        return float(np.clip(d.score, 0.0, 1.0))
    return float(1.0 / (1.0 + np.exp(-d.score)))


def and_fuse(visual: AuthDecision, tremor: AuthDecision) -> AuthDecision:
    if visual.modality != "visual" or tremor.modality != "tremor":
        raise VirtimuError(
            f"and_fuse needs (visual, tremor), got ({visual.modality}, {tremor.modality})"
        )
    if visual.video_id is not None and tremor.video_id is not None and visual.video_id != tremor.video_id:
        raise VirtimuError(f"video id mismatch: {visual.video_id} vs {tremor.video_id}")
    return AuthDecision(
        accept=visual.accept and tremor.accept,
        score=min(_normalized_score(visual), _normalized_score(tremor)),
        modality="fused",
        video_id=visual.video_id or tremor.video_id,
        flags=visual.flags + tremor.flags,
    )


def error_report(decisions, truths, c1: float = 1.0, c2: float = 1.0) -> ErrorReport:
    """Empirical rates from (decision, is-legitimate) pairs.

    ``decisions`` are AuthDecision or plain booleans; ``truths`` holds the
    H1 indicator (True = legitimate claim).
    """
    accepts = np.array([d.accept if isinstance(d, AuthDecision) else bool(d) for d in decisions])
    legit = np.asarray(truths, dtype=bool)
    if accepts.shape != legit.shape or accepts.size == 0:
        raise VirtimuError("decisions/truths must be equal-length and non-empty")
    if legit.all() or not legit.any():
        raise VirtimuError("test set must contain both H0 and H1 cases")
    tpr = float(accepts[legit].mean())
    tnr = float((~accepts[~legit]).mean())
    return ErrorReport(tpr=tpr, tnr=tnr, fpr=1.0 - tnr, fnr=1.0 - tpr, c1=c1, c2=c2)


def error_delta(multimodal: ErrorReport, unimodal: ErrorReport) -> float:
    """E_m - E_u at shared costs.

    Computed as c1*(dFPR) + c2*(dFNR), i.e. rate differences first, so the
    result is bit-identical to the factored closed form.
    """
    if (multimodal.c1, multimodal.c2) != (unimodal.c1, unimodal.c2):
        raise VirtimuError("reports carry different cost coefficients")
    return multimodal.c1 * (multimodal.fpr - unimodal.fpr) + multimodal.c2 * (
        multimodal.fnr - unimodal.fnr
    )
