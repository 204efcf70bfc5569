"""Acceptance gate: one test and one printed PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines live;
without -s they appear in the captured output of any failing criterion.
Criteria 4 and 5 run the full stabilization-contrast and recognition
grids and take tens of minutes on a desktop-class single core.
"""

import time
from dataclasses import replace

import numpy as np
from scipy import stats

from virtimu import experiment as exp
from virtimu.auth import (
    ErrorReport,
    and_fuse,
    error_delta,
    error_report,
    visual_stub,
)
from virtimu.register import ite_extract, phase_corr_shift
from virtimu.rse import rse_extract
from virtimu.sidechan import Thresholds, synthetic_suite
from virtimu.sigcore import MotionTrace, max_lag_corr, resample
from virtimu.simulate import CameraConfig, SubjectModel, gen_tremor, make_scene, render_video


def _gate(num, ok, detail):
    print(f"[criterion {num}] {'PASS' if ok else 'FAIL'}: {detail}", flush=True)
    assert ok, f"criterion {num}: {detail}"


def _tone(freq, amp, duration, rate):
    n = int(round(duration * rate)) + 1
    t = np.arange(n) / rate
    data = np.zeros((2, n))
    data[0] = amp * np.sin(2 * np.pi * freq * t)
    return MotionTrace(rate, ["tx", "ty"], data)


def _step_pair(scene, shift_px, size):
    """Two globally rendered frames displaced by shift_px along x."""
    cam = CameraConfig(frame_w=size, frame_h=size, fps=30.0, shutter="global")
    n = 80
    tx = np.array([0.0] * (n // 2) + [shift_px] * (n - n // 2))
    motion = MotionTrace(1000.0, ["tx", "ty"], np.vstack([tx, np.zeros(n)]))
    video = render_video(scene, motion, cam)
    return video.frames[0], video.frames[-1]


def test_criterion_1_registration_oracle():
    rng = np.random.default_rng(0)
    frame = make_scene(256, 256, seed=1, factor=1).intensities
    scene = make_scene(256, 256, seed=2)

    int_shifts = [(int(rng.integers(-8, 9)), int(rng.integers(-8, 9))) for _ in range(60)]
    sub_shifts = list(np.linspace(0.25, 2.0, 40))
    sub_pairs = [_step_pair(scene, s, 256) for s in sub_shifts]

    t0 = time.perf_counter()
    int_ok = True
    for sx, sy in int_shifts:
        mov = np.roll(frame, (sy, sx), axis=(0, 1))
        dx, dy, _ = phase_corr_shift(frame, mov)
        int_ok = int_ok and round(dx) == sx and round(dy) == sy
    sub_err = 0.0
    for s, (ref, mov) in zip(sub_shifts, sub_pairs):
        dx, dy, _ = phase_corr_shift(ref, mov)
        # positive scene motion shifts content the other way
        sub_err = max(sub_err, abs(-dx - s), abs(dy))
    elapsed = time.perf_counter() - t0

    ok = int_ok and sub_err <= 0.25 and elapsed < 10.0
    _gate(1, ok, f"integer shifts exact={int_ok}, subpixel max err "
                 f"{sub_err:.3f} px <= 0.25, 100 pairs @256x256 in {elapsed:.2f} s < 10 s")


def test_criterion_2_ite_band_recovery():
    cam = CameraConfig(frame_w=64, frame_h=64, fps=30.0, shutter="rolling")
    scene = make_scene(64, 64, seed=3)

    def ite_corr(freq):
        motion = _tone(freq, 3.0, 6.0, cam.row_rate)
        video = render_video(scene, motion, cam)
        up = resample(ite_extract(video).motion_trace(), cam.row_rate)
        n = min(up.n_samples, motion.n_samples)
        lag = max(1, int(cam.row_rate / (4.0 * freq)))
        _, r = max_lag_corr(motion.data[0][:n], up.data[0][:n], lag)
        return abs(r)

    low = ite_corr(2.0)
    high = ite_corr(20.0)
    ok = low >= 0.95 and high < 0.5
    _gate(2, ok, f"2 Hz corr {low:.3f} >= 0.95, 20 Hz corr {high:.3f} < 0.5")


def test_criterion_3_rse_high_frequency():
    cam = CameraConfig(frame_w=320, frame_h=240, fps=30.0, shutter="rolling")
    scene = make_scene(240, 320, seed=4)
    motion = _tone(40.0, 2.5, 6.0, cam.row_rate)
    video = render_video(scene, motion, cam)
    lag = max(1, int(cam.row_rate / (4.0 * 40.0)))

    t0 = time.perf_counter()
    rse = rse_extract(video)
    elapsed = time.perf_counter() - t0
    T = int(round(cam.row_rate / cam.fps))
    inc = motion.data[0][T:] - motion.data[0][:-T]
    n = min(rse.n_samples, inc.size)
    _, r_rse = max_lag_corr(inc[:n], rse.data[0][:n], lag)

    up = resample(ite_extract(video).motion_trace(), cam.row_rate)
    n = min(up.n_samples, motion.n_samples)
    _, r_ite = max_lag_corr(motion.data[0][:n], up.data[0][:n], lag)

    ok = abs(r_rse) >= 0.8 and abs(r_ite) < 0.5 and elapsed < 300.0
    _gate(3, ok, f"40 Hz/240-row: RSE corr {abs(r_rse):.3f} >= 0.8, ITE corr "
                 f"{abs(r_ite):.3f} < 0.5, extraction {elapsed:.1f} s < 300 s")


def test_criterion_4_stabilization_contrast():
    cfg = exp.default_config()
    scene = make_scene(cfg.camera.frame_h, cfg.camera.frame_w, seed=cfg.scene_seed)
    trials = 20
    wins = {(s.subject_id, m): 0 for s in cfg.subjects for m in ("ite", "rse")}
    T = int(round(cfg.camera.row_rate / cfg.camera.fps))

    for subj in cfg.subjects:
        for trial in range(trials):
            motion = gen_tremor(subj, 2.0, cfg.camera.row_rate, seed=trial)
            corr = {}
            for stab in ("off", "on"):
                cam = replace(cfg.camera, stabilization=stab, stabilization_strength=0.9)
                video = render_video(scene, motion, cam)
                ite = resample(ite_extract(video).motion_trace(), cfg.camera.row_rate)
                n = min(ite.n_samples, motion.n_samples)
                _, r = max_lag_corr(motion.data[0][:n], ite.data[0][:n], 4)
                corr[("ite", stab)] = r
                rse = rse_extract(video)
                inc = motion.data[0][T:] - motion.data[0][:-T]
                n = min(rse.n_samples, inc.size)
                _, r = max_lag_corr(inc[:n], rse.data[0][:n], 4)
                corr[("rse", stab)] = r
            for m in ("ite", "rse"):
                if corr[(m, "off")] > corr[(m, "on")]:
                    wins[(subj.subject_id, m)] += 1

    worst_p, worst_key = 0.0, None
    for key, w in wins.items():
        p = stats.binomtest(w, trials, 0.5, alternative="greater").pvalue
        if p > worst_p:
            worst_p, worst_key = p, key
    ok = worst_p < 0.05
    detail = ", ".join(f"{s}/{m}={w}/{trials}" for (s, m), w in sorted(wins.items()))
    _gate(4, ok, f"off>on wins [{detail}], worst sign-test p={worst_p:.2e} "
                 f"({worst_key}) < 0.05")


def test_criterion_5_recognition_grid():
    cfg = exp.default_config()
    assert cfg.legit_videos == 30
    assert cfg.imposter_videos_per_imposter * (len(cfg.subjects) - 1) == 18
    t0 = time.perf_counter()
    results = {(r.method, r.stabilization): r for r in exp.evaluate(cfg)}
    elapsed = time.perf_counter() - t0

    ite_off, rse_off = results[("ite", "off")], results[("rse", "off")]
    gap_ok = (rse_off.tpr >= ite_off.tpr + 0.10) and (rse_off.tnr >= ite_off.tnr + 0.10)
    mono_ok = all(
        results[(m, "off")].tpr >= results[(m, "on")].tpr
        and results[(m, "off")].tnr >= results[(m, "on")].tnr
        for m in ("physical", "ite", "rse")
    )
    tnr_ok = rse_off.tnr >= 0.75
    time_ok = elapsed < 7200.0
    grid = "; ".join(
        f"{m}/{s}: TPR={results[(m, s)].tpr:.3f} TNR={results[(m, s)].tnr:.3f}"
        for s in ("off", "on") for m in ("physical", "ite", "rse")
    )
    ok = gap_ok and mono_ok and tnr_ok and time_ok
    _gate(5, ok, f"RSE-ITE off gaps TPR {rse_off.tpr - ite_off.tpr:+.3f} / TNR "
                 f"{rse_off.tnr - ite_off.tnr:+.3f} >= +0.10, off>=on={mono_ok}, "
                 f"RSE TNR {rse_off.tnr:.3f} >= 0.75, {elapsed:.0f} s < 7200 s [{grid}]")


def test_criterion_6_error_model():
    # tremor module exactly at the allowed worst case: FPR 0.2, FNR 0.15
    truths, visual, tremor = [], [], []
    for i in range(40):
        truths.append(True)
        visual.append(visual_stub(attack="none", video_id=f"l{i}"))
        tremor.append(i >= 6)  # 6/40 false rejects -> FNR 0.15
    for i in range(40):
        truths.append(False)
        visual.append(visual_stub(attack="perfect_mask", video_id=f"i{i}"))
        tremor.append(i < 8)  # 8/40 false accepts -> FPR 0.2
    rep_u = error_report(visual, truths, c1=1.0, c2=1.0)
    fused = [v.accept and t for v, t in zip(visual, tremor)]
    rep_m = error_report(fused, truths, c1=1.0, c2=1.0)
    delta = error_delta(rep_m, rep_u)
    stub_ok = rep_u.tpr == 1.0 and rep_u.tnr == 0.0

    identity_ok = True
    for c1, c2 in ((1.0, 1.0), (0.5, 2.0), (3.0, 0.25)):
        m = ErrorReport(tpr=1 - 0.083, tnr=1 - 0.125, fpr=0.125, fnr=0.083, c1=c1, c2=c2)
        u = ErrorReport(tpr=1.0, tnr=0.0, fpr=1.0, fnr=0.0, c1=c1, c2=c2)
        identity_ok = identity_ok and error_delta(m, u) == -0.875 * c1 + 0.083 * c2

    ok = stub_ok and delta < 0.0 and identity_ok
    _gate(6, ok, f"stub TPR=1/TNR=0, E_m-E_u={delta:+.3f} < 0 at c1=c2=1, "
                 f"operating-point identity exact={identity_ok}")


def test_criterion_7_framework_lattice():
    suite = synthetic_suite(seed=0)
    expected = {
        "uncoupled": "no-channel",
        "band_disjoint": "separable",
        "controllable": "controllable",
        "same_band": "inseparable",
    }
    truth_ok = all(suite[k].classification == v for k, v in expected.items())

    th = Thresholds()
    chain_ok = True
    for seed in range(10):
        for v in synthetic_suite(seed=seed, duration=4.0, rate=100.0).values():
            if v.classification == "controllable":
                chain_ok = chain_ok and v.scores["unmitigated"] - v.scores["mitigated"] > th.delta
            if v.classification in ("separable", "controllable"):
                chain_ok = chain_ok and v.scores["detect"] > th.alpha
            if v.classification != "no-channel":
                chain_ok = chain_ok and v.scores["detect"] > th.alpha
    ok = truth_ok and chain_ok
    _gate(7, ok, f"ground truth match={truth_ok}, controllable=>separable=>"
                 f"detected chain holds over 10 seeds={chain_ok}")


def test_criterion_8_property_suites_and_determinism():
    import pathlib

    tests_dir = pathlib.Path(__file__).parent
    prop_files = ["test_sigcore.py", "test_simulate.py", "test_register.py",
                  "test_rse.py", "test_features.py", "test_auth.py",
                  "test_sidechan.py", "test_kernels.py"]
    props_ok = all(
        "max_examples=100" in (tests_dir / f).read_text()
        and "derandomize=True" in (tests_dir / f).read_text()
        for f in prop_files
    )
    named_ok = (
        "parseval" in (tests_dir / "test_sigcore.py").read_text().lower()
        and "containment" in (tests_dir / "test_auth.py").read_text()
        and "zero_field" in (tests_dir / "test_rse.py").read_text()
    )

    cfg = exp.ExperimentConfig(
        subjects=[
            SubjectModel("a", dominant_freq=6.0, band=(2.0, 12.0), amplitude_px=2.5,
                         harmonic_weights=[1.0], noise_seed=1, noise_frac=0.05),
            SubjectModel("b", dominant_freq=10.0, band=(2.0, 12.0), amplitude_px=2.5,
                         harmonic_weights=[1.0], noise_seed=2, noise_frac=0.05),
        ],
        camera=CameraConfig(frame_w=48, frame_h=48, fps=30.0, shutter="rolling"),
        legit_videos=4, imposter_videos_per_imposter=1,
        clip_duration_s=2.1, folds=2, train_fraction=0.75,
    )
    csv1 = exp.results_csv(exp.evaluate(cfg, methods=("physical", "ite"), sets=("off",)))
    csv2 = exp.results_csv(exp.evaluate(cfg, methods=("physical", "ite"), sets=("off",)))
    det_ok = csv1 == csv2

    ok = props_ok and named_ok and det_ok
    _gate(8, ok, f"property suites >=100 cases fixed seeds in all modules={props_ok}, "
                 f"named invariants covered={named_ok}, end-to-end CSV determinism={det_ok}")
