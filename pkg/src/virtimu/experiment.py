"""Experiment orchestration: synthetic dataset generation, virtual-sensor
extraction, and the tremor/fusion evaluation grid.

Dataset layout (one directory per stabilization setting):

    <out>/config.txt
    <out>/stab_off/index.csv              video_id,claimed,holder,kind,tremor_seed
    <out>/stab_off/videos/<video_id>/     PGM frames + manifest
    <out>/stab_off/truth/<video_id>.motion.csv
    <out>/stab_off/truth/<video_id>.imu.csv
    <out>/stab_off/traces/<method>/<video_id>.csv
    <out>/stab_on/...

The same tremor seeds are used for both stabilization settings, so the
ground truth (and hence the physical-IMU arm) is shared between sets.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

import numpy as np

from .auth import (
    VisualStubConfig,
    and_fuse,
    error_report,
    train_classifier,
    verify_tremor,
    visual_stub,
)
from .errors import ConfigError
from .features import extract_features
from .sidechan import virtual_sensor
from .sigcore import MotionTrace
from .simulate import (
    CameraConfig,
    SubjectModel,
    VideoClip,
    gen_tremor,
    make_scene,
    render_video,
    simulate_physical_imu,
)

__all__ = ["ExperimentConfig", "default_config", "generate_dataset", "extract_dataset", "evaluate"]

METHODS = ("physical", "ite", "rse")
SETS = ("off", "on")


@dataclass
class ExperimentConfig:
    subjects: list[SubjectModel] = field(default_factory=lambda: default_subjects())
    camera: CameraConfig = field(default_factory=lambda: CameraConfig(
        frame_w=160, frame_h=120, fps=30.0, shutter="rolling",
        stabilization_strength=0.9,
    ))
    legit_videos: int = 30
    imposter_videos_per_imposter: int = 6
    clip_duration_s: float = 2.5
    train_fraction: float = 0.8
    scene_seed: int = 7
    seed: int = 0
    imu_rate: float = 408.0
    imu_noise_std: float = 0.5
    c1: float = 1.0
    c2: float = 1.0
    folds: int = 5

    def __post_init__(self):
        if not self.subjects:
            raise ConfigError("experiment needs at least one subject")
        ids = [s.subject_id for s in self.subjects]
        if len(set(ids)) != len(ids):
            raise ConfigError("subject ids must be unique")
        if self.legit_videos <= 0 or self.imposter_videos_per_imposter <= 0:
            raise ConfigError("video counts must be positive")


def _tone_weights(*tones_hz: tuple[float, float]) -> list[float]:
    """Weight vector over 2 Hz harmonics placing tones at even frequencies."""
    top = int(max(f for f, _ in tones_hz)) // 2
    w = [0.0] * top
    for f, a in tones_hz:
        w[int(f) // 2 - 1] = a
    return w


def default_subjects() -> list[SubjectModel]:
    """Four synthetic subjects arranged in aliasing-collision pairs.

    Every subject carries a strong low tone (6 or 8 Hz) that any motion
    channel can track, plus an identity tone above 10 Hz.  At 30 fps the
    frame-rate channel folds 18 Hz onto 12 Hz and 16 Hz onto 14 Hz, so
    (s1, s2) and (s3, s4) collide through ITE while the row-rate channel
    sees four distinct signatures.  Amplitudes are equal on purpose:
    energy must not be the biometric."""
    band = (2.0, 26.0)
    return [
        SubjectModel("s1", dominant_freq=2.0, band=band, amplitude_px=3.0,
                     harmonic_weights=_tone_weights((6.0, 1.0), (12.0, 0.8)),
                     noise_seed=101, noise_frac=0.35),
        SubjectModel("s2", dominant_freq=2.0, band=band, amplitude_px=3.0,
                     harmonic_weights=_tone_weights((6.0, 1.0), (18.0, 0.8)),
                     noise_seed=102, noise_frac=0.35),
        SubjectModel("s3", dominant_freq=2.0, band=band, amplitude_px=3.0,
                     harmonic_weights=_tone_weights((8.0, 1.0), (14.0, 0.8)),
                     noise_seed=103, noise_frac=0.35),
        SubjectModel("s4", dominant_freq=2.0, band=band, amplitude_px=3.0,
                     harmonic_weights=_tone_weights((8.0, 1.0), (16.0, 0.8)),
                     noise_seed=104, noise_frac=0.35),
    ]


def default_config() -> ExperimentConfig:
    return ExperimentConfig()


# ---------------------------------------------------------------------------
# config file round trip (flat key=value with [section] headers)

def format_config(cfg: ExperimentConfig) -> str:
    lines = ["[experiment]"]
    for key in ("legit_videos", "imposter_videos_per_imposter", "clip_duration_s",
                "train_fraction", "scene_seed", "seed", "imu_rate", "imu_noise_std",
                "c1", "c2", "folds"):
        lines.append(f"{key}={getattr(cfg, key)}")
    lines.append("[camera]")
    cam = cfg.camera
    for key in ("frame_w", "frame_h", "fps", "shutter", "row_scan_period",
                "exposure_time", "stabilization_strength", "exposure_samples"):
        lines.append(f"{key}={getattr(cam, key)}")
    for s in cfg.subjects:
        lines.append("[subject]")
        lines.append(f"subject_id={s.subject_id}")
        lines.append(f"dominant_freq={s.dominant_freq}")
        lines.append(f"band={s.band[0]},{s.band[1]}")
        lines.append(f"amplitude_px={s.amplitude_px}")
        lines.append(f"harmonic_weights={','.join(str(w) for w in s.harmonic_weights)}")
        lines.append(f"noise_seed={s.noise_seed}")
        lines.append(f"noise_frac={s.noise_frac}")
    return "\n".join(lines) + "\n"


def parse_config(text: str) -> ExperimentConfig:
    section = None
    exp: dict = {}
    cam: dict = {}
    subjects: list[dict] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1]
            if section == "subject":
                subjects.append({})
            elif section not in ("experiment", "camera"):
                raise ConfigError(f"unknown config section [{section}]")
            continue
        if "=" not in line or section is None:
            raise ConfigError(f"bad config line: {raw!r}")
        k, v = (t.strip() for t in line.split("=", 1))
        if section == "experiment":
            exp[k] = v
        elif section == "camera":
            cam[k] = v
        else:
            subjects[-1][k] = v

    def num(d, key, cast, default):
        return cast(d[key]) if key in d else default

    camera = CameraConfig(
        frame_w=num(cam, "frame_w", int, 160),
        frame_h=num(cam, "frame_h", int, 120),
        fps=num(cam, "fps", float, 30.0),
        shutter=cam.get("shutter", "rolling"),
        row_scan_period=num(cam, "row_scan_period", float, 0.0),
        exposure_time=num(cam, "exposure_time", float, 0.0),
        stabilization_strength=num(cam, "stabilization_strength", float, 0.9),
        exposure_samples=num(cam, "exposure_samples", int, 8),
    )
    subj_models = []
    for d in subjects:
        band = tuple(float(v) for v in d.get("band", "2.0,26.0").split(","))
        weights = [float(v) for v in d.get("harmonic_weights", "1.0").split(",")]
        subj_models.append(SubjectModel(
            subject_id=d["subject_id"],
            dominant_freq=float(d.get("dominant_freq", 9.0)),
            band=band,
            amplitude_px=float(d.get("amplitude_px", 3.0)),
            harmonic_weights=weights,
            noise_seed=int(d.get("noise_seed", 0)),
            noise_frac=float(d.get("noise_frac", 0.15)),
        ))
    kwargs = dict(camera=camera)
    if subj_models:
        kwargs["subjects"] = subj_models
    for key, cast in (("legit_videos", int), ("imposter_videos_per_imposter", int),
                      ("clip_duration_s", float), ("train_fraction", float),
                      ("scene_seed", int), ("seed", int), ("imu_rate", float),
                      ("imu_noise_std", float), ("c1", float), ("c2", float),
                      ("folds", int)):
        if key in exp:
            kwargs[key] = cast(exp[key])
    return ExperimentConfig(**kwargs)


# ---------------------------------------------------------------------------
# dataset enumeration

@dataclass
class VideoSpec:
    video_id: str
    claimed: str
    holder: str
    kind: str  # "legit" | "imposter"
    tremor_seed: int


def enumerate_videos(cfg: ExperimentConfig) -> list[VideoSpec]:
    """Deterministic per-set video list; seeds are per holder so the same
    person's tremor differs across every clip they hold."""
    subjects = sorted(cfg.subjects, key=lambda s: s.subject_id)
    counters = {s.subject_id: 0 for s in subjects}
    specs = []
    for claimed in subjects:
        cid = claimed.subject_id
        for k in range(cfg.legit_videos):
            seed = cfg.seed * 100000 + counters[cid]
            counters[cid] += 1
            specs.append(VideoSpec(f"{cid}_legit_{k:02d}", cid, cid, "legit", seed))
        for imposter in subjects:
            if imposter.subject_id == cid:
                continue
            for j in range(cfg.imposter_videos_per_imposter):
                hid = imposter.subject_id
                seed = cfg.seed * 100000 + counters[hid]
                counters[hid] += 1
                specs.append(VideoSpec(
                    f"{cid}_imp_{hid}_{j:02d}", cid, hid, "imposter", seed))
    return specs


def _subject_map(cfg):
    return {s.subject_id: s for s in cfg.subjects}


def make_video(cfg: ExperimentConfig, spec: VideoSpec, stabilization: str):
    """Render one clip and return (video, ground-truth motion trace)."""
    cam = replace(cfg.camera, stabilization=stabilization)
    subj = _subject_map(cfg)[spec.holder]
    motion = gen_tremor(subj, cfg.clip_duration_s, cam.row_rate, seed=spec.tremor_seed)
    scene = make_scene(cam.frame_h, cam.frame_w, seed=cfg.scene_seed)
    return render_video(scene, motion, cam), motion


def extract_trace(cfg: ExperimentConfig, method: str, video: VideoClip | None,
                  motion: MotionTrace) -> MotionTrace:
    if method == "physical":
        return simulate_physical_imu(motion, cfg.imu_rate, cfg.imu_noise_std, seed=cfg.seed)
    return virtual_sensor(method, video)


# ---------------------------------------------------------------------------
# disk stages (CLI surface)

def generate_dataset(cfg: ExperimentConfig, out_dir: str, force: bool = False,
                     progress=None) -> None:
    if os.path.isdir(out_dir) and os.listdir(out_dir) and not force:
        raise ConfigError(f"output dir {out_dir} is not empty (use --force)")
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "config.txt"), "w") as f:
        f.write(format_config(cfg))
    specs = enumerate_videos(cfg)
    for stab in SETS:
        set_dir = os.path.join(out_dir, f"stab_{stab}")
        os.makedirs(os.path.join(set_dir, "videos"), exist_ok=True)
        os.makedirs(os.path.join(set_dir, "truth"), exist_ok=True)
        with open(os.path.join(set_dir, "index.csv"), "w") as f:
            f.write("video_id,claimed,holder,kind,tremor_seed\n")
            for sp in specs:
                f.write(f"{sp.video_id},{sp.claimed},{sp.holder},{sp.kind},{sp.tremor_seed}\n")
        for i, sp in enumerate(specs):
            video, motion = make_video(cfg, sp, stab)
            video.save(os.path.join(set_dir, "videos", sp.video_id))
            motion.save_csv(os.path.join(set_dir, "truth", f"{sp.video_id}.motion.csv"))
            imu = simulate_physical_imu(motion, cfg.imu_rate, cfg.imu_noise_std, seed=cfg.seed)
            imu.save_csv(os.path.join(set_dir, "truth", f"{sp.video_id}.imu.csv"))
            if progress:
                progress(f"stab_{stab} {i + 1}/{len(specs)} {sp.video_id}")


def load_index(set_dir: str) -> list[VideoSpec]:
    path = os.path.join(set_dir, "index.csv")
    if not os.path.isfile(path):
        raise ConfigError(f"no index.csv in {set_dir}")
    specs = []
    with open(path) as f:
        next(f)
        for line in f:
            vid, claimed, holder, kind, seed = line.strip().split(",")
            specs.append(VideoSpec(vid, claimed, holder, kind, int(seed)))
    return specs


def extract_dataset(set_dir: str, method: str, progress=None) -> None:
    """Write traces/<method>/<video_id>.csv for every indexed video."""
    if method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}, got {method!r}")
    specs = load_index(set_dir)
    trace_dir = os.path.join(set_dir, "traces", method)
    os.makedirs(trace_dir, exist_ok=True)
    for i, sp in enumerate(specs):
        if method == "physical":
            src = os.path.join(set_dir, "truth", f"{sp.video_id}.imu.csv")
            trace = MotionTrace.load_csv(src)
        else:
            video = VideoClip.load(os.path.join(set_dir, "videos", sp.video_id))
            trace = virtual_sensor(method, video)
        trace.save_csv(os.path.join(trace_dir, f"{sp.video_id}.csv"))
        if progress:
            progress(f"{method} {i + 1}/{len(specs)} {sp.video_id}")


# ---------------------------------------------------------------------------
# evaluation

@dataclass
class MethodResult:
    method: str
    stabilization: str
    tpr: float
    tnr: float
    cv_accuracy: float
    fused_tpr: float
    fused_tnr: float
    e_m: float
    e_u: float

    @property
    def e_delta(self) -> float:
        return self.e_m - self.e_u


def _split_train_test(cfg, specs):
    n_train = int(round(cfg.train_fraction * cfg.legit_videos))
    train, test = [], []
    for sp in specs:
        if sp.kind == "legit" and int(sp.video_id.rsplit("_", 1)[1]) < n_train:
            train.append(sp)
        else:
            test.append(sp)
    return train, test


def evaluate_method(cfg: ExperimentConfig, method: str, stabilization: str,
                    traces: dict[str, MotionTrace]) -> MethodResult:
    """Train on the enrollment split, test on held-out legit + imposter
    videos, and fuse with the perfect-mask visual stub."""
    specs = enumerate_videos(cfg)
    train, test = _split_train_test(cfg, specs)
    feats: dict[str, np.ndarray] = {}
    for sp in train:
        v = extract_features(traces[sp.video_id], source=method).values
        feats.setdefault(sp.claimed, []).append(v)
    templates = train_classifier(
        {s: np.vstack(v) for s, v in feats.items()}, kernel="quadratic", folds=cfg.folds)

    tremor_decisions, visual_decisions, truths = [], [], []
    for sp in test:
        d = verify_tremor(traces[sp.video_id], templates[sp.claimed],
                          method=method, video_id=sp.video_id)
        tremor_decisions.append(d)
        attack = "none" if sp.kind == "legit" else "perfect_mask"
        visual_decisions.append(visual_stub(attack=attack, video_id=sp.video_id,
                                            config=VisualStubConfig()))
        truths.append(sp.kind == "legit")
    fused = [and_fuse(v, t) for v, t in zip(visual_decisions, tremor_decisions)]

    rep_t = error_report(tremor_decisions, truths, cfg.c1, cfg.c2)
    rep_v = error_report(visual_decisions, truths, cfg.c1, cfg.c2)
    rep_f = error_report(fused, truths, cfg.c1, cfg.c2)
    any_template = next(iter(templates.values()))
    return MethodResult(
        method=method,
        stabilization=stabilization,
        tpr=rep_t.tpr,
        tnr=rep_t.tnr,
        cv_accuracy=any_template.classifier.cv_accuracy,
        fused_tpr=rep_f.tpr,
        fused_tnr=rep_f.tnr,
        e_m=rep_f.total_error,
        e_u=rep_v.total_error,
    )


def compute_traces(cfg: ExperimentConfig, method: str, stabilization: str,
                   progress=None) -> dict[str, MotionTrace]:
    """In-memory pipeline: render (or reuse ground truth) and extract."""
    specs = enumerate_videos(cfg)
    traces = {}
    for i, sp in enumerate(specs):
        if method == "physical":
            subj = _subject_map(cfg)[sp.holder]
            motion = gen_tremor(subj, cfg.clip_duration_s, cfg.camera.row_rate,
                                seed=sp.tremor_seed)
            traces[sp.video_id] = extract_trace(cfg, method, None, motion)
        else:
            video, motion = make_video(cfg, sp, stabilization)
            traces[sp.video_id] = extract_trace(cfg, method, video, motion)
        if progress:
            progress(f"{method}/stab_{stabilization} {i + 1}/{len(specs)} {sp.video_id}")
    return traces


def load_traces(set_dir: str, method: str) -> dict[str, MotionTrace]:
    trace_dir = os.path.join(set_dir, "traces", method)
    if not os.path.isdir(trace_dir):
        raise ConfigError(f"no extracted traces for {method} in {set_dir}; run extract first")
    return {
        sp.video_id: MotionTrace.load_csv(os.path.join(trace_dir, f"{sp.video_id}.csv"))
        for sp in load_index(set_dir)
    }


def evaluate(cfg: ExperimentConfig, dataset_dir: str | None = None,
             methods=METHODS, sets=SETS, progress=None) -> list[MethodResult]:
    """Full method x stabilization grid.  Reads extracted traces from
    ``dataset_dir`` when given, otherwise runs the in-memory pipeline."""
    results = []
    for stab in sets:
        for method in methods:
            if dataset_dir is not None:
                traces = load_traces(os.path.join(dataset_dir, f"stab_{stab}"), method)
            else:
                traces = compute_traces(cfg, method, stab, progress=progress)
            results.append(evaluate_method(cfg, method, stab, traces))
            if progress:
                r = results[-1]
                progress(f"{method}/stab_{stab}: TPR={r.tpr:.3f} TNR={r.tnr:.3f}")
    return results


def results_csv(results: list[MethodResult]) -> str:
    lines = ["method,stabilization,tpr,tnr,cv_accuracy,fused_tpr,fused_tnr,e_m,e_u,e_delta"]
    for r in results:
        lines.append(
            f"{r.method},{r.stabilization},{r.tpr!r},{r.tnr!r},{r.cv_accuracy!r},"
            f"{r.fused_tpr!r},{r.fused_tnr!r},{r.e_m!r},{r.e_u!r},{r.e_delta!r}"
        )
    return "\n".join(lines) + "\n"


def results_summary(results: list[MethodResult]) -> str:
    lines = ["tremor recognition accuracy (TPR/TNR per method and stabilization)"]
    for r in results:
        lines.append(
            f"  {r.method:9s} stab_{r.stabilization:3s}  TPR={r.tpr:.3f}  TNR={r.tnr:.3f}  "
            f"fused E_m-E_u={r.e_delta:+.3f}"
        )
    return "\n".join(lines) + "\n"
