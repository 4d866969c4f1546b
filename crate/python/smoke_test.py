#!/usr/bin/env python3
"""Smoke test for the imci Python extension.

Builds nothing itself: run `cargo build --release -p imci-py` first. The
script copies the cdylib next to a temp directory under the import name
`imci` and exercises the main entry points against known values.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        REPO / "target" / "release" / "libimci.so",
        REPO / "target" / "debug" / "libimci.so",
        REPO / "target" / "release" / "libimci.dylib",
        REPO / "target" / "debug" / "libimci.dylib",
    ]
    src = next((p for p in candidates if p.exists()), None)
    if src is None:
        sys.exit("libimci not found; run: cargo build --release -p imci-py")
    stage = Path(tempfile.mkdtemp(prefix="imci-py-"))
    shutil.copy2(src, stage / "imci.so")
    sys.path.insert(0, str(stage))
    import imci  # noqa: E402

    return imci


def approx(got, want, tol, label):
    if abs(got - want) > tol:
        sys.exit(f"FAIL {label}: got {got}, want {want} +- {tol}")
    print(f"  ok  {label}: {got:.6f}")


def main():
    imci = load_module()
    print(f"imci {imci.__version__}")

    # Normal mean: Bayes matches the reference cell, IM closed form.
    iv = imci.normal_bayes_ci(0.45, 0.01, 5, 0.10)
    approx(iv.lower, 0.3599, 5e-4, "normal bayes lower")
    approx(iv.upper, 0.5401, 5e-4, "normal bayes upper")
    iv = imci.normal_im_ci(0.45, 0.01, 5, 0.10)
    approx(iv.width(), 2 * 0.1 * 0.9011570281446030, 1e-6, "normal IM width")
    approx(imci.normal_im_plausibility(0.45, 0.01, 5, 0.45), 1.0, 1e-12, "pl peak at x")

    # Poisson Bayes: x = 0 closed form, independent of (w, m).
    iv = imci.poisson_bayes_ci(0, 10, 20.0, 0.10)
    approx(iv.upper, -math.log(0.10), 2e-3, "poisson bayes x=0 upper")
    if not (iv.truncated_lower and iv.lower == 0.0):
        sys.exit("FAIL: x=0 interval should be truncated at 0")
    approx(
        imci.poisson_posterior_cdf(0, 10, 20.0, -math.log(0.10)),
        0.9,
        1e-9,
        "posterior cdf at the 90% point",
    )

    # Monte Carlo methods: deterministic under a fixed seed, exact tail
    # identity for the x = 0 IM upper endpoint.
    a = imci.poisson_im_ci(0, 10, 20.0, 0.10, n=20000, seed=42)
    b = imci.poisson_im_ci(0, 10, 20.0, 0.10, n=20000, seed=42)
    if (a.lower, a.upper) != (b.lower, b.upper):
        sys.exit("FAIL: IM interval not reproducible under a fixed seed")
    exact = -math.log(0.05) - 10 * math.log(1 + 1 / 20)
    approx(a.upper, exact, 0.06, "poisson IM x=0 upper vs tail identity")

    nim = imci.poisson_nim_ci(0, 10, 20.0, 0.10, n=20000, seed=42)
    if not nim.upper < a.upper:
        sys.exit(f"FAIL: NIM upper {nim.upper} not below IM upper {a.upper}")
    print(f"  ok  NIM shorter than IM: {nim.upper:.3f} < {a.upper:.3f}")

    # Plausibility duality: pl at the 90% NIM upper endpoint is near 0.10.
    pl = imci.poisson_nim_plausibility(0, 10, 20.0, nim.upper, n=20000, seed=42)
    approx(pl, 0.10, 0.02, "NIM plausibility at its own endpoint")

    # Raw draws are ordered pairs.
    lo, hi = imci.poisson_im_endpoint_draws(3, 60, 20.0, n=2000, seed=7)
    if not all(l <= u for l, u in zip(lo, hi)):
        sys.exit("FAIL: endpoint draws not ordered")
    print("  ok  endpoint draws ordered")
    draws = imci.poisson_nim_draws(1, 40, 20.0, n=2000, seed=7)
    if len(draws) != 2000 or min(draws) < 0:
        sys.exit("FAIL: NIM draws malformed")
    print("  ok  NIM draws nonnegative")

    ks = imci.uniformity_ks(0.0, 3.0, 20.0, samples=300, n=300, seed=1)
    if not 0.0 <= ks <= 0.2:
        sys.exit(f"FAIL: implausible KS distance {ks}")
    print(f"  ok  uniformity KS distance: {ks:.4f}")

    # Validation errors surface as ValueError.
    try:
        imci.poisson_bayes_ci(0, 10, 0.0, 0.10)
    except ValueError:
        print("  ok  invalid m raises ValueError")
    else:
        sys.exit("FAIL: invalid m accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
