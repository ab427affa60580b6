"""End-to-end checks of the package's headline behaviours.

Each test prints a single PASS/FAIL line (visible even without -s) so a
full run reads as a checklist. Every check is deterministic.
"""

import json
import time
from contextlib import contextmanager

import numpy as np
import pytest

from rboxlib import (
    FP,
    TP,
    CodingConfig,
    RotatedBoxLongSide,
    WeightConfig,
    adarsw_weight,
    angle_distance_weight,
    average_precision,
    build_code_table,
    dcl_loss,
    dcl_loss_grad,
    decode_logits_batch,
    encode_angles,
    fit_many,
    loss_surface_sweep,
    match_detections,
    prediction_thickness,
    quantization_error_stats,
    rotated_iou,
)
from rboxlib.cli import main as cli_main
from rboxlib.evaluation import DetectionRecord, GroundTruthRecord
from oracle_utils import monte_carlo_iou, random_longside_box


@contextmanager
def checklist(capsys, label):
    try:
        yield
    except BaseException:
        with capsys.disabled():
            print(f"[FAIL] {label}")
        raise
    with capsys.disabled():
        print(f"[PASS] {label}")


def run_cli_json(capsys, *argv):
    assert cli_main(list(argv)) == 0
    return json.loads(capsys.readouterr().out)


def test_01_code_table_cli(capsys):
    with checklist(capsys, "1. code-table CLI emits the 8-bin tables verbatim"):
        start = time.perf_counter()
        bcl = run_cli_json(capsys, "codes", "--scheme", "bcl", "--omega", "22.5")
        gcl = run_cli_json(capsys, "codes", "--scheme", "gcl", "--omega", "22.5")
        assert [r["codeword"] for r in bcl["rows"]] == [
            "000", "001", "010", "011", "100", "101", "110", "111"]
        assert [r["codeword"] for r in gcl["rows"]] == [
            "000", "001", "011", "010", "110", "111", "101", "100"]
        # byte-for-byte stable across runs
        assert cli_main(["codes", "--scheme", "gcl", "--omega", "22.5"]) == 0
        out1 = capsys.readouterr().out
        assert cli_main(["codes", "--scheme", "gcl", "--omega", "22.5"]) == 0
        assert capsys.readouterr().out == out1
        assert time.perf_counter() - start < 1.0


def test_02_prediction_thickness(capsys):
    with checklist(capsys, "2. prediction-layer thickness 1620 / 72 / 9"):
        assert prediction_thickness("csl", 9, omega=1.0) == 1620
        assert prediction_thickness("onehot", 9, omega=1.0) == 1620
        assert prediction_thickness("bcl", 9, omega=1.0) == 72
        assert prediction_thickness("gcl", 9, omega=1.0) == 72
        assert prediction_thickness("reg", 9) == 9


def test_03_quantization_error_bounds(capsys):
    with checklist(capsys, "3. quantization error bounds at omega = 180/256"):
        start = time.perf_counter()
        omega = 180.0 / 256.0
        stats = quantization_error_stats(omega, 100000, seed=0)
        assert stats.max_error <= 0.3515625
        assert stats.mean_error == pytest.approx(0.17578125, rel=0.05)
        assert time.perf_counter() - start < 10.0


def test_04_high_iou_large_loss_scenario(capsys):
    with checklist(capsys, "4. near-square 90-degree pair: high IoU, small smooth weight"):
        gt = RotatedBoxLongSide(0.0, 0.0, 1.05, 1.0, 70.6)
        pred = RotatedBoxLongSide(0.0, 0.0, 1.05, 1.0, -19.7)
        assert rotated_iou(gt, pred) > 0.9
        assert adarsw_weight(70.6, -19.7, 1.05, 1.0) < 0.02
        assert angle_distance_weight(70.6, -19.7) > 4.5


def test_05_gray_code_adjacency(capsys):
    with checklist(capsys, "5. gray adjacency for all power-of-two bin counts"):
        start = time.perf_counter()
        c = 4
        while c <= 512:
            table = build_code_table(CodingConfig(scheme="gcl", omega=180.0 / c))
            words = table.codewords.astype(np.int64)
            for i in range(c):
                assert int(np.sum(words[i] != words[(i + 1) % c])) == 1, (c, i)
            c *= 2
        assert time.perf_counter() - start < 1.0


def test_06_roundtrip_bound(capsys):
    with checklist(capsys, "6. encode-decode error at most half a bin, all schemes"):
        rng = np.random.default_rng(0)
        thetas = 90.0 - rng.random(10000) * 180.0
        for scheme in ("onehot", "csl", "bcl", "gcl"):
            for omega in (180.0 / 32, 180.0 / 180, 180.0 / 256):
                table = build_code_table(CodingConfig(scheme=scheme, omega=omega))
                logits = 8.0 * encode_angles(thetas, table) - 4.0
                decoded = decode_logits_batch(logits, table)
                d = np.abs(thetas - decoded) % 180.0
                err = np.minimum(d, 180.0 - d)
                assert err.max() <= omega / 2.0 + 1e-9, (scheme, omega)


def test_07_gradient_oracle(capsys):
    with checklist(capsys, "7. analytic angle-loss gradient matches finite differences"):
        table = build_code_table(CodingConfig(scheme="gcl", omega=1.0))
        cfg = WeightConfig(mode="adarsw")
        rng = np.random.default_rng(1)
        eps = 1e-5
        worst = 0.0
        for _ in range(1000):
            theta = float(90.0 - rng.random() * 180.0)
            # keep every logit away from the decode threshold so the
            # stop-gradient weight is locally constant under the FD step
            logits = rng.uniform(-3.0, 3.0, size=table.code_length)
            while np.any(np.abs(logits) < 1e-3):
                logits = rng.uniform(-3.0, 3.0, size=table.code_length)
            an = dcl_loss_grad(theta, logits, table, cfg, h_gt=4.0, w_gt=1.0)
            for j in range(table.code_length):
                up = logits.copy()
                up[j] += eps
                down = logits.copy()
                down[j] -= eps
                f_up = dcl_loss(theta, up, table, cfg, h_gt=4.0, w_gt=1.0)
                f_dn = dcl_loss(theta, down, table, cfg, h_gt=4.0, w_gt=1.0)
                fd = (f_up - f_dn) / (2.0 * eps)
                rel = abs(fd - an[j]) / max(abs(fd), abs(an[j]), 1e-8)
                worst = max(worst, rel)
        assert worst < 1e-4


def test_08_iou_oracle(capsys):
    with checklist(capsys, "8. clipping IoU matches Monte-Carlo within 5e-3"):
        start = time.perf_counter()
        rng = np.random.default_rng(2)
        worst = 0.0
        for _ in range(100):
            a = random_longside_box(rng)
            b = random_longside_box(rng)
            exact = rotated_iou(a, b)
            approx = monte_carlo_iou(a, b, 1_000_000, rng)
            worst = max(worst, abs(exact - approx))
        assert worst <= 5e-3
        assert time.perf_counter() - start < 60.0


def test_09_boundary_free_sweep(capsys):
    with checklist(capsys, "9. regression loss explodes across the angle boundary; coded loss does not"):
        reg = loss_surface_sweep(89.0, 6.0, "reg_smoothl1")
        assert reg.loss_at(-89.0) > 10.0 * reg.loss_at(87.0)
        table = build_code_table(CodingConfig(scheme="bcl", omega=22.5))
        dcl = loss_surface_sweep(89.0, 6.0, "dcl_adarsw", table=table)
        lo, hi = sorted([dcl.loss_at(-89.0), dcl.loss_at(87.0)])
        assert hi - lo <= 0.1 * max(hi, 1e-12)


def test_10_fit_convergence(capsys):
    with checklist(capsys, "10. 99%+ of random targets trainable at 256 bins"):
        start = time.perf_counter()
        rng = np.random.default_rng(0)
        thetas = 90.0 - rng.random(1000) * 180.0
        for scheme in ("bcl", "gcl"):
            table = build_code_table(CodingConfig(scheme=scheme, omega=180.0 / 256))
            result = fit_many(thetas, table, steps=2000, learning_rate=1.0, seed=0)
            assert result.success_rate >= 0.99, scheme
        assert time.perf_counter() - start < 300.0


def test_11_evaluator_correctness(capsys):
    with checklist(capsys, "11. average-precision reference cases"):
        for metric in ("voc07", "voc12"):
            assert average_precision([TP, TP], [0.9, 0.8], 2, metric).ap == 1.0
            assert average_precision([FP, TP], [0.9, 0.8], 1,
                                     metric).ap == pytest.approx(0.5)
            assert average_precision([FP, FP], [0.9, 0.8], 2, metric).ap == 0.0
        box = RotatedBoxLongSide(0.0, 0.0, 4.0, 2.0, 30.0)
        dets = [DetectionRecord("im", "car", 0.9, box),
                DetectionRecord("im", "car", 0.8, box)]
        gts = [GroundTruthRecord("im", "car", box)]
        assert match_detections(dets, gts).tolist() == [TP, FP]
