"""Regenerate metrics_golden.json with an independent numpy implementation.

    python3 tests/data/make_metrics_golden.py > tests/data/metrics_golden.json
"""
import json

import numpy as np


def metrics(pred, gt, mask, lo_um, hi_um, lam, floor_nm=1.0):
    p = np.clip(pred, lo_um * 1000.0, hi_um * 1000.0)[mask]
    g = gt[mask]
    e = p - g
    pos = g > 0
    pl = np.maximum(p[pos], floor_nm)
    d = np.log(pl) - np.log(g[pos])
    mse = float(np.mean(e * e))
    return {
        "silog": float(np.mean(d * d) - lam * np.mean(d) ** 2),
        "abs_rel": float(np.mean(np.abs(e[pos]) / g[pos])),
        "log10": float(np.mean(np.abs(np.log10(pl) - np.log10(g[pos])))),
        "rms": float(np.sqrt(mse)),
        "sq_rel": float(np.mean(e[pos] ** 2 / g[pos])),
        "log_rms": float(np.sqrt(np.mean(d * d))),
        "mae": float(np.mean(np.abs(e))),
        "mse": mse,
        "rmse": float(np.sqrt(mse)),
        "n_valid": int(mask.sum()),
        "n_relative": int(pos.sum()),
    }


def main():
    rng = np.random.default_rng(20240611)
    cases = []
    for k, (w, h) in enumerate([(16, 16), (24, 16), (17, 19), (32, 32)]):
        gt = rng.uniform(0.0, 4000.0, size=h * w)
        gt[rng.random(h * w) < 0.05] = 0.0
        pred = gt + rng.normal(0.0, 300.0, size=h * w)
        pred[rng.random(h * w) < 0.03] = 7000.0   # above the clamp
        pred[rng.random(h * w) < 0.03] = -50.0    # below the clamp
        mask = rng.random(h * w) >= (0.0 if k % 2 == 0 else 0.2)
        lo, hi, lam = [(0.0, 5.0, 0.85), (0.0, 4.0, 0.5), (0.1, 5.0, 1.0), (0.0, 5.0, 0.0)][k]
        cases.append({
            "width": w, "height": h,
            "pred": pred.tolist(), "gt": gt.tolist(),
            "mask": mask.astype(int).tolist(),
            "clamp_lo_um": lo, "clamp_hi_um": hi, "silog_lambda": lam,
            "expected": metrics(pred, gt, mask, lo, hi, lam),
        })
    print(json.dumps({"cases": cases}))


if __name__ == "__main__":
    main()
