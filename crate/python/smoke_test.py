"""Smoke test of the sbsse Python module. Run after installing crates/python."""

import json
import math
import random

import sbsse


def main():
    trace = sbsse.simulate(json.dumps({"num_ttis": 2000}), seed=7)
    assert len(trace) == 2000 and len(trace.ipv) == 2000
    assert all(v > 0 for v in trace.ipv)

    rng = random.Random(1)
    data = [rng.gauss(0.0, 1.0) for _ in range(10_000)]
    h, fallback = sbsse.isj_bandwidth(data)
    ref = (4 / (3 * 10_000)) ** 0.2
    # a single draw of the ISJ estimate can sit ~20% off the asymptotic value
    assert not fallback and abs(h - ref) / ref < 0.3, h

    grid, dens, _ = sbsse.kde(data)
    step = grid[1] - grid[0]
    assert abs(sum(dens) * step - 1.0) < 1e-2

    ipv = [math.exp(rng.gauss(math.log(1e-10), 1.0)) for _ in range(3000)]
    p = sbsse.MqPredictor(ipv[:2000], method="mq-sbsse")
    info = p.info()
    assert info["method"] == "mq-sbsse" and sum(info["subset_sizes"]) > 0
    q1 = p.predict([ipv[1999]], 0.1)
    q2 = p.predict([ipv[1999]], 0.01)
    assert q2 >= q1 > 0
    theta = sbsse.reliability_theta([q1] * 1000, ipv[2000:])
    assert abs(theta - 0.1) < 0.05, theta

    assert sbsse.lognormal_predict(ipv, 0.5) > 0
    olla = sbsse.olla_lpp(ipv, 1e-8, 1e-13, 0.1)
    assert len(olla) == len(ipv) - 1
    assert sbsse.spectral_efficiency(100.0, True, 0.01) == 0.0

    records = sbsse.run_sweep(
        trace,
        ["lognormal", "olla-lpp"],
        json.dumps({"epsilons": [0.1, 0.01], "training_lens": [500], "test_len": 1000}),
        seed=7,
    )
    assert len(records) == 4 and all(0 <= r["theta"] <= 1 for r in records)

    bw, kde, s1, s2 = sbsse.amise_curves(json.dumps({"grid_points": 4096, "curve_points": 50}))
    assert len(bw) == len(kde) == len(s1) == len(s2) == 50

    try:
        sbsse.simulate(json.dumps({"num_cels": 3}))
    except ValueError as e:
        assert "num_cels" in str(e)
    else:
        raise AssertionError("unknown key accepted")

    print("sbsse smoke test passed")


if __name__ == "__main__":
    main()
