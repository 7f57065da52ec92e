import math

from curvkit import report
from curvkit.report import VerificationReport


def test_pass_flag_follows_residual():
    r = VerificationReport("a", "x", 1e-9, 1e-8)
    assert r.passed
    assert not VerificationReport("a", "x", 1e-7, 1e-8).passed


def test_round_trip_with_nan():
    r = VerificationReport.compare("c", "anchor", [1.0, 2.0], [1.0, 2.0 + 1e-12], 1e-10, seed=3)
    r2 = VerificationReport("d", "y", 0.5, 1.0, residual_abs=float("nan"), residual_rel=float("inf"))
    text = report.dumps([r, r2], meta={"k": 1})
    meta, back = report.loads(text)
    assert meta == {"k": 1}
    assert back[0] == r
    assert math.isnan(back[1].residual_abs) and math.isinf(back[1].residual_rel)


def test_payload_excludes_timing():
    r = VerificationReport("a", "x", 0.0, 1.0, duration_ms=1.0)
    s = VerificationReport("a", "x", 0.0, 1.0, duration_ms=2.0)
    assert report.payload(report.dumps([r])) == report.payload(report.dumps([s]))


def test_relative_residual_zero_sides():
    assert report.relative_residual(0.0, 0.0) == (0.0, 0.0)
