"""Stand-in for the learned-model trainer, honouring its subprocess contract.

    fake_trainer.py --dataset <dir> --config <json> --out <dir>

Writes <out>/predictions/<id>_pred.png for every ground truth in the test
dataset named by the config ("test_dataset"). With "mode": "oracle" the
prediction is the ground truth itself (sidecar included); "fail" exits 3.
"""
import argparse
import json
import pathlib
import shutil
import sys


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--dataset", required=True)
    ap.add_argument("--config", required=True)
    ap.add_argument("--out", required=True)
    a = ap.parse_args()
    cfg = json.loads(pathlib.Path(a.config).read_text())
    if cfg.get("mode") == "fail":
        return 3
    assert (pathlib.Path(a.dataset) / "manifest.json").exists()
    items = pathlib.Path(cfg["test_dataset"]) / "items"
    out = pathlib.Path(a.out) / "predictions"
    out.mkdir(parents=True, exist_ok=True)
    for gt in sorted(items.glob("*_gt.png")):
        item = gt.name[: -len("_gt.png")]
        shutil.copyfile(gt, out / f"{item}_pred.png")
        shutil.copyfile(items / f"{item}_meta.json", out / f"{item}_pred.json")
    return 0


if __name__ == "__main__":
    sys.exit(main())
