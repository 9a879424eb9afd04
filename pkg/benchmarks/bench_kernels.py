"""Time the compiled kernels against the numpy reference on training-sized shapes.

Usage: python3 benchmarks/bench_kernels.py [--repeats N] [--json out.json]

Also times one training epoch of the desk LSTM and xLSTM under each backend,
since the kernels are only part of the per-batch cost.
"""

import argparse
import json
import sys
import timeit

import numpy as np

from heatbench import kernels
from heatbench.data import corpus_holidays, preprocess_corpus, synthesize_corpus
from heatbench.models import build_model, desk_spec
from heatbench.training import TrainConfig, train
from heatbench.windowing import WindowSpec, build_datasets


def kernel_cases(rng):
    B, T = 64, 24
    H = 32
    gx = rng.standard_normal((B, T, 4 * H))
    U = rng.standard_normal((H, 4 * H)) * 0.1
    NH, DH = 4, 8
    R = rng.standard_normal((NH, DH, 4 * DH)) * 0.1
    x = rng.standard_normal((B, T, 2 * H))
    w = rng.standard_normal((2 * H, 4))
    dh = rng.standard_normal((B, T, H))

    def lstm(k):
        out, cache = k.lstm_forward(gx, U)
        k.lstm_backward(dh, U, cache)

    def slstm(k):
        out, cache = k.slstm_forward(gx, R)
        k.slstm_backward(dh, R, cache)

    def conv(k):
        out = k.conv_forward(x, w)
        k.conv_backward(out, x, w)

    return {"lstm fwd+bwd (64x24x32)": lstm, "slstm fwd+bwd (64x24, 4 heads x 8)": slstm,
            "causal conv fwd+bwd (64x24x64, k=4)": conv}


def epoch_seconds(kind: str, split) -> float:
    spec = desk_spec(kind, 24, 3, split.train.n_c, split.train.n_s)
    trained = train(build_model(spec, 0), split.train, split.val, TrainConfig(epochs=1, seed=0))
    return trained.history.epoch_seconds[0]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=20)
    ap.add_argument("--json", help="write results here")
    ap.add_argument("--skip-epochs", action="store_true")
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled backend not built; run `pip install -e . --no-build-isolation` first", file=sys.stderr)
    results = {"kernels": {}, "epochs": {}}
    rng = np.random.default_rng(0)
    cases = kernel_cases(rng)
    print(f"{'case':40s}" + "".join(f"{b:>14s}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for name, fn in cases.items():
        row = {}
        for b in backends:
            k = kernels.get_backend(b)
            row[b] = min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeats))
        results["kernels"][name] = row
        speed = f"{row['python'] / row['compiled']:11.1f}x" if "compiled" in row else ""
        print(f"{name:40s}" + "".join(f"{row[b] * 1e3:12.2f}ms" for b in backends) + speed)

    if not args.skip_epochs:
        corpus = synthesize_corpus(2, 60, seed=0)
        split = build_datasets(preprocess_corpus(corpus, corpus_holidays(corpus)).frames, WindowSpec(24, 3))
        active = kernels.backend_name()
        for kind in ("lstm", "xlstm"):
            row = {}
            for b in backends:
                kernels.use_backend(b)
                row[b] = epoch_seconds(kind, split)
            results["epochs"][kind] = row
            speed = f"{row['python'] / row['compiled']:11.1f}x" if "compiled" in row else ""
            print(f"{kind + ' epoch (' + str(len(split.train)) + ' windows)':40s}"
                  + "".join(f"{row[b]:13.2f}s" for b in backends) + speed)
        kernels.use_backend(active)

    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
