"""Time the compiled kernels against the pure-Python fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5]

Fails early when the compiled extension is not built.
"""

import argparse
import timeit

import numpy as np

from bilapnet import _kernels_py as py
from bilapnet.graphs import preset_graph

try:
    from bilapnet import _kernels as cy
except ImportError as exc:  # pragma: no cover
    raise SystemExit(f"compiled kernels unavailable ({exc}); run `pip install -e . --no-build-isolation`")


def cases():
    rng = np.random.default_rng(42)
    adj = np.ascontiguousarray(preset_graph("complete", 40).adjacency(), dtype=np.int64)
    n_elems = np.full(6, 64, dtype=np.int64)
    lengths = rng.uniform(0.5, 2.0, 6)
    phi = np.ascontiguousarray(rng.standard_normal((200, 200)))
    w = np.exp(-np.linspace(0, 5, 200))
    return [
        ("closed_form_bilaplacian K40", lambda k: k.closed_form_bilaplacian(adj)),
        ("connected_edge_masks n=5", lambda k: k.connected_edge_masks(5)),
        ("assemble_hermite 6x64", lambda k: k.assemble_hermite(n_elems, lengths)),
        ("kernel_sup 200x200", lambda k: k.kernel_sup(phi, w)),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    print(f"{'kernel':32s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for name, fn in cases():
        a, b = fn(py), fn(cy)
        for x, y in zip(a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)):
            assert np.allclose(x, y), name
        t_py = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat)) * 1e3
        t_cy = min(timeit.repeat(lambda: fn(cy), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:32s} {t_py:12.3f} {t_cy:12.3f} {t_py / t_cy:8.1f}x")


if __name__ == "__main__":
    main()
