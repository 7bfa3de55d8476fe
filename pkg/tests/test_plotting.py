from __future__ import annotations

import csv
import io
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robustimp.core import SqrtUtility, UtilityFn
from robustimp.errors import DomainError
from robustimp.plotting import GRID_POINTS, indifference_belief, line_data
from robustimp.problemfile import ProblemFile, bundled_path

A, B = np.array([1.0, 0.0]), np.array([0.0, 1.0])


class TestLineData:
    def test_grid_and_columns(self):
        d = line_data(A, B, [0.7, 0.3])
        assert d.mu.shape == (GRID_POINTS,) and d.mu[0] == 0 and d.mu[-1] == 1
        assert set(d.columns) == {"l_a", "l_ahat", "l_b"}
        d = line_data(A, B, [0.7, 0.3], SqrtUtility())
        assert {"u_a", "u_ahat", "u_b"} <= set(d.columns)

    def test_lines_are_expected_values(self):
        d = line_data([3, -1], B, [0.7, 0.3])
        np.testing.assert_allclose(d.columns["l_a"], 3 * (1 - d.mu) - d.mu)

    def test_needs_two_states(self):
        with pytest.raises(DomainError):
            line_data([1, 0, 0], [0, 1, 0], [0.5, 0.5, 0])

    def test_csv(self):
        text = line_data(A, B, [0.7, 0.3], SqrtUtility()).to_csv()
        rows = list(csv.reader(io.StringIO(text)))
        assert rows[0][0] == "mu" and len(rows) == GRID_POINTS + 1
        assert all(len(r) == 7 for r in rows)

    def test_svg_is_standalone_xml(self):
        svg = line_data(A, B, [0.7, 0.3], SqrtUtility()).to_svg()
        root = ET.fromstring(svg)
        assert root.tag.endswith("svg")
        assert len([e for e in root.iter() if e.tag.endswith("polyline")]) == 6
        assert "href" not in svg


class TestMarkers:
    @given(st.floats(0.1, 5), st.floats(0.1, 5), st.floats(-5, 5), st.floats(-5, 5))
    def test_risk_neutral_formula(self, da, db, a1, b0):
        a = np.array([b0 + da, a1])
        b = np.array([b0, a1 + db])
        mu = indifference_belief(a, b)
        assert mu == pytest.approx(da / (da + db), rel=1e-9, abs=1e-12)

    def test_no_crossing(self):
        assert indifference_belief(np.array([2.0, 2.0]), np.array([1.0, 1.0])) is None

    def test_indifference_markers(self):
        pf = ProblemFile.load(bundled_path("sqrt-lines.json"))
        a, b = pf.problem["a"], pf.problem["b"]
        d = line_data(a, b, pf.candidate_payoffs(), pf.utility)
        m = d.markers["utility"]
        assert m["mu_bar"] == pytest.approx(0.5, abs=1e-12)
        assert m["mu_hat"] >= m["mu_bar"]

    def test_kinked_markers(self):
        pf = ProblemFile.load(bundled_path("candidate-extreme.json"))
        d = line_data(pf.problem["a"], pf.problem["b"], pf.candidate_payoffs(), pf.utility)
        assert d.markers["utility"]["mu_bar"] == pytest.approx(0.5)
        assert d.markers["utility"]["mu_hat"] == pytest.approx(0.2)

    @given(st.floats(0.05, 0.95))
    def test_mixture_shifts_marker_under_concave_utility(self, lam):
        u = UtilityFn.kinked(0.5, 1.0, 0.3)
        ahat = lam * A + (1 - lam) * B
        mb = indifference_belief(A, B, u)
        mh = indifference_belief(ahat, B, u)
        assert mh is not None and mh >= mb - 1e-12
