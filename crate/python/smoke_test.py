"""Smoke test for the pysilverkite extension module.

Build and install first:
    pip install --no-build-isolation -e crates/python
"""

import math

import pysilverkite as sk


def main():
    pm = sk.peyton_manning()
    assert len(pm) > 2800

    config = sk.ForecastConfig({"horizon": "14"}, freq="day")
    model = sk.fit(pm, config)
    fc = model.predict(14)
    assert len(fc.forecast) == 14
    for lo, f, hi in zip(fc.lower, fc.forecast, fc.upper):
        assert lo < f < hi
    total = [sum(v[i] for v in fc.components.values()) for i in range(14)]
    assert all(abs(a - b) < 1e-8 for a, b in zip(total, fc.forecast))
    assert "n/a" in model.summary()

    values = [10.0 + 0.1 * t + math.sin(2 * math.pi * t / 7) for t in range(120)]
    ts = sk.TimeSeries("2021-01-04", "day", values)
    ols = sk.fit(ts, sk.ForecastConfig({"template": "daily_long", "fit": "ols", "holidays.enabled": "false",
                                        "growth.auto_changepoints": "false", "seasonality.yearly.order": "0"}))
    coefs = ols.coefficients()
    assert abs(coefs["growth_linear"] - 0.1) < 1e-8, coefs

    cps = sk.detect_changepoints(ts, ["weekly"])
    assert cps["trend"] == []

    assert abs(sk.mase([1.0, 2.0, 2.0, 3.0], [4.0], [3.0], 1) - 1.5) < 1e-12
    try:
        sk.mape([0.0], [1.0])
    except ValueError as e:
        assert str(e).startswith("metric")
    else:
        raise AssertionError("expected ValueError")

    try:
        sk.ForecastConfig({"horizn": "3"})
    except ValueError as e:
        assert "horizn" in str(e)
    else:
        raise AssertionError("expected ValueError")

    overlay = sk.seasonality_overlay(ts, "weekly")
    assert {row[0] for row in overlay} == {float(d) for d in range(7)}

    print("pysilverkite smoke test passed")


if __name__ == "__main__":
    main()
