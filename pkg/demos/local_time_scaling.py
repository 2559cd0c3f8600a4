"""Local time of Brownian motion on shrinking balls and its second moment."""
import numpy as np

from mfbs import hurst, localtime, simulate


def main(n_paths=200):
    h = hurst.constant([0.5])
    grid = simulate.Grid([[1 / 2048, 1.0]], 2048)
    X = simulate.cholesky_ensemble(h, grid, n_paths, seed=2024)
    ball = localtime.ball_scaling_fit(X, h, [0.5], [0.2, 0.1, 0.05, 0.025], grid)
    mom = localtime.moment_scaling_fit(X, h, 0.0, np.geomspace(0.4, 0.025, 5), grid, a=[0.5])
    print(f"ball slope {ball.slope:.3f} (exponent {ball.theoretical_exponent})")
    print(f"second-moment slope {mom.slope:.3f} (exponent {mom.theoretical_exponent})")


if __name__ == "__main__":
    main()
