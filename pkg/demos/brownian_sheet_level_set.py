"""Zero set of a Brownian sheet: box-counting slope against the exponent.

Run with ``python demos/brownian_sheet_level_set.py [n_paths]``.
"""
import sys

from mfbs import hurst, levelset


def main(n_paths=10):
    h = hurst.constant([0.5, 0.5])
    rep = levelset.dimension_experiment(h, [[1, 2], [1, 2]], d=1, n_paths=n_paths,
                                        resolution=512, seed=2024)
    print(f"median slope {rep.slope:.3f} +- {rep.ci_halfwidth:.3f}, exponent {rep.theoretical}")
    for s, c in zip(rep.scales, rep.counts):
        print(f"  side {s:4d} cells: {c:9.1f} occupied boxes (median)")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 10)
