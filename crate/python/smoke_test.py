"""Smoke test for the anisocs extension module.

Build and install first, e.g.

    pip install maturin
    maturin develop -m crates/python/Cargo.toml --features extension-module
    python python/smoke_test.py
"""

import json
import math

import anisocs


def main():
    n = 64
    u = anisocs.Frame.dft(n)
    d = anisocs.Frame.identity(n)
    a, b = u.bounds
    assert abs(a - 1.0) < 1e-10 and abs(b - 1.0) < 1e-10, u.bounds

    mu, per_row = anisocs.mutual_coherence(u, d)
    assert abs(mu - 1.0 / math.sqrt(n)) < 1e-12, mu
    assert len(per_row) == n

    haar = anisocs.Frame.wavelet("haar", n, 6)
    w = anisocs.coherence_weights(u, haar, n)
    assert w[0] > w[-1]

    g0 = [0j] * n
    for i, v in [(3, 1.0), (17, -2.0), (40, 0.5 + 0.5j)]:
        g0[i] = complex(v)
    rows = anisocs.uniform_subset(n, 24, 5)
    full = u.apply(g0)
    zeta = [full[i] for i in rows]
    rec = anisocs.solve(u, d, rows, zeta)
    err = math.sqrt(sum(abs(x - y) ** 2 for x, y in zip(rec.signal, g0)))
    assert rec.converged and err < 1e-6, (rec, err)

    report = json.loads(
        anisocs.run_experiment(json.dumps({"study": "replacement_check"}))
    )
    assert report["extras"]["all_at_least_half"] == 1.0

    try:
        anisocs.Frame([[1.0], [1.0, 2.0]])
    except ValueError:
        pass
    else:
        raise AssertionError("ragged rows accepted")

    print("smoke test passed:", rec)


if __name__ == "__main__":
    main()
