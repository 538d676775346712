#!/usr/bin/env python3
"""Smoke test for the bips_py bindings.

Build the module first, then run this script:

    cargo build -p bips-py --release
    python3 python/smoke_test.py
"""

import json
import os
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

DSL = """chart grid=1x1 title="demo"
panel id=p0 at=0,0 xrange=0..3 yrange=0..4
series id=s0 kind=line visible=true points=(0,1)(1,2)(2,1)(3,3)
series id=s1 kind=line visible=true points=(0,3)(1,1)(2,3)(3,1)
end
"""


def import_bindings():
    for profile in ("release", "debug"):
        so = os.path.join(ROOT, "target", profile, "libbips_py.so")
        if os.path.exists(so):
            shim_dir = tempfile.mkdtemp(prefix="bips_py_")
            os.symlink(so, os.path.join(shim_dir, "bips_py.so"))
            sys.path.insert(0, shim_dir)
            import bips_py

            return bips_py
    sys.exit("libbips_py.so not found; run `cargo build -p bips-py` first")


def main():
    bips = import_bindings()

    canon = bips.normalize_chart(DSL)
    assert bips.normalize_chart(canon) == canon, "canonical form must be a fixed point"
    print("ok normalize_chart: canonical form is stable")

    pgm = bips.rasterize_chart(DSL, width=64, height=64, margin=6)
    assert pgm.startswith(b"P5\n64 64\n255\n"), pgm[:16]
    masked = bips.mask_image(pgm, fraction=0.6, patch=8, seed=7)
    header = len(b"P5\n64 64\n255\n")
    blank = lambda b: sum(1 for p in b[header:] if p == 255)
    assert len(masked) == len(pgm) and blank(masked) > blank(pgm)
    print("ok rasterize_chart + mask_image: 64x64 PGM, masking blanks pixels")

    with tempfile.TemporaryDirectory() as tmp:
        data = os.path.join(tmp, "data")
        run = os.path.join(tmp, "run")

        gen = json.loads(bips.generate("train_items=6\neval_items=3\n", seed=5, out_dir=data))
        assert gen["train"]["items"] == 6 and gen["eval"]["items"] == 3
        assert os.path.exists(os.path.join(data, "train.jsonl"))
        print("ok generate: 6 train / 3 eval items on disk")

        cfg = "batch=3\nlr=0.02\nstage1_epochs=1\nstage2_epochs=1\nhidden=8\npooled=8\n"
        report = json.loads(bips.train(cfg, "bips", data, seed=5, out_dir=run))
        assert [p["tag"] for p in report["phases"]] == ["stage1", "stage2"]
        print(f"ok train: 2 phases, final accuracy {report['final_eval']['accuracy']:.3f}")

        ckpt_path = os.path.join(run, "ckpt_phase1_stage2.bpck")
        manifest = os.path.join(data, "eval.jsonl")
        by_fn = json.loads(bips.evaluate_checkpoint(ckpt_path, manifest))
        assert by_fn["accuracy"] == report["final_eval"]["accuracy"]

        ck = bips.Checkpoint.load(ckpt_path)
        assert ck.mode == "bips" and ck.stage == "stage2"
        assert ck.n_params == len(ck.params())
        by_method = json.loads(ck.evaluate(manifest))
        assert by_method == by_fn
        print(f"ok evaluate_checkpoint + Checkpoint: {ck!r}")

    desk = bips.TrainConfig.desk()
    assert bips.TrainConfig(desk.to_kv()).to_kv() == desk.to_kv()
    assert desk.alpha > 0 and desk.beta > 0 and desk.group_size >= 2
    print("ok TrainConfig: kv round-trip is stable")

    print("all smoke checks passed")


if __name__ == "__main__":
    main()
