"""Smoke test for the `nehari` extension module.

Build and install first:  pip install --no-build-isolation -e crates/py
"""

import math

import nehari


def main():
    fam = nehari.Family.example(1.0)
    rows = fam.certify(4.0)
    assert all(verdict.startswith("pass") for _, verdict, _ in rows), rows

    pr = nehari.Problem(15, p=4.0, beta=-2.0, family1=fam, family2=fam)
    nx, ny = pr.shape
    mu, phi = pr.eigen()
    h = 1.0 / (nx + 1)
    exact = 8.0 / h**2 * math.sin(math.pi * h / 2) ** 2
    assert abs(mu - exact) < 1e-9 * exact
    assert min(phi) > 0

    sol = pr.solve(seed=1, restarts=1)
    assert sol["fully_nontrivial"] and sol["euler_residual"] < 1e-8
    e = pr.total_energy(sol["u1"], sol["u2"])
    assert abs(e - sol["energy"]) <= 1e-12 * e

    proj = pr.project(sol["u1"], sol["u2"])
    assert proj["projectable"]
    assert all(abs(t - 1.0) < 1e-8 for t in proj["t"])

    try:
        nehari.Problem(15, p=4.0, beta=-2.0, lambda1=1e3).solve()
    except ValueError as err:
        assert "lambda_1" in str(err)
    else:
        raise AssertionError("inadmissible lambda accepted")

    print(f"mu1 = {mu:.6f}, energy = {sol['energy']:.6f}, regime = {sol['regime']}")


if __name__ == "__main__":
    main()
