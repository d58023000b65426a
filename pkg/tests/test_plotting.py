import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as hst
from numpy.testing import assert_array_equal

from vinegof import plotting

SCRIPT = Path(__file__).resolve().parents[1] / "scripts" / "plot_power.py"

RESULT = {"alpha": 0.05, "results": {
    "ir": {"true": {"estimate": 0.25, "p_values": [0.01, 0.2, 0.5, 0.9]},
           "alt": {"estimate": 0.75, "p_values": [0.01, 0.02, 0.04, 0.5]}},
    "berg-ad": {"true": {"estimate": 0.0, "p_values": [0.3, 0.6, 0.7, 1.0]},
                "alt": {"estimate": 0.25, "p_values": [0.05, 0.4, 0.8, 1.0]}}}}


def test_rejection_curve_counts_ties():
    assert_array_equal(plotting.rejection_curve([0.1, 0.2, 0.2, 0.9], [0.0, 0.2, 0.5, 1.0]),
                       [0.0, 0.75, 0.75, 1.0])


@settings(max_examples=40, deadline=None)
@given(hst.lists(hst.floats(0, 1), min_size=1, max_size=30), hst.floats(0, 1))
def test_rejection_curve_matches_definition(p, a):
    assert plotting.rejection_curve(p, [a])[0] == np.mean(np.asarray(p) <= a)


def test_rejection_curve_empty():
    assert np.isnan(plotting.rejection_curve([], [0.5])).all()


def test_bars_use_stored_or_recomputed_rates():
    ax = plotting.plot_power_bars(RESULT)
    heights = [p.get_height() for p in ax.patches]
    # bars are drawn model by model
    assert heights == [0.25, 0.0, 0.75, 0.25]
    ax = plotting.plot_power_bars(RESULT, alpha=0.5)
    assert [p.get_height() for p in ax.patches] == [0.75, 0.25, 1.0, 0.5]


def test_rejection_curves_one_line_per_test():
    ax = plotting.plot_rejection_curves(RESULT, "alt", tests=["ir"])
    assert [ln.get_label() for ln in ax.get_lines()][0] == "ir"
    assert len(ax.get_lines()) == 2


def test_script_writes_png(tmp_path):
    import json

    src, out = tmp_path / "r.json", tmp_path / "r.png"
    src.write_text(json.dumps(RESULT))
    subprocess.run([sys.executable, str(SCRIPT), str(src), str(out), "--alpha", "0.1"],
                   check=True)
    assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


@pytest.mark.parametrize("alpha", [None, 0.05])
def test_study_figure_panels(alpha):
    fig = plotting.study_figure(RESULT, alpha)
    assert len(fig.axes) == 3
