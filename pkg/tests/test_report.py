import pytest

from apsp.errors import UserInputError
from apsp.report import render_rmse_svg, render_tdr_fdr_svg, write_report
from apsp.simulate import MetricsRow


def rows_for(scenario="IdenticalSignals", n=2):
    return [
        MetricsRow(scenario, "APSP", 20, i, 80.0, 0.1 * (i + 1), 0.5 + 0.1 * i,
                   0.3 + 0.05 * i)
        for i in range(n)
    ]


class TestScatter:
    def test_marker_per_row(self):
        svg = render_tdr_fdr_svg(rows_for(n=2), "IdenticalSignals")
        assert svg.count('class="pt"') == 2

    def test_axes_fixed_to_unit_square(self):
        svg = render_tdr_fdr_svg(rows_for(), "IdenticalSignals")
        assert ">1</text>" in svg and ">0</text>" in svg
        assert "FDR" in svg and "TDR" in svg

    def test_methods_get_distinct_styles(self):
        rows = rows_for() + [MetricsRow("IdenticalSignals", "PP", 20, 0,
                                        90.0, 0.05, 0.9, 0.2)]
        svg = render_tdr_fdr_svg(rows, "IdenticalSignals")
        assert svg.count('class="pt"') == 3
        assert "APSP" in svg and "PP" in svg  # legend labels


class TestRmseChart:
    def test_marker_per_row(self):
        svg = render_rmse_svg(rows_for(n=3), "IdenticalSignals")
        assert svg.count('class="pt"') == 3

    def test_y_axis_starts_at_zero(self):
        svg = render_rmse_svg(rows_for(), "IdenticalSignals")
        assert ">0.00</text>" in svg

    def test_is_wellformed_xml(self):
        import xml.etree.ElementTree as ET

        svg = render_rmse_svg(rows_for(), "IdenticalSignals")
        ET.fromstring(svg)
        svg2 = render_tdr_fdr_svg(rows_for(), "IdenticalSignals")
        ET.fromstring(svg2)


class TestWriteReport:
    def test_two_files_per_scenario(self, tmp_path):
        rows = rows_for("IdenticalSignals") + rows_for("NoOverlap")
        written = write_report(rows, tmp_path)
        names = sorted(p.name for p in written)
        assert names == [
            "rmse_IdenticalSignals.svg",
            "rmse_NoOverlap.svg",
            "tdr_fdr_IdenticalSignals.svg",
            "tdr_fdr_NoOverlap.svg",
        ]

    def test_failed_rows_excluded(self, tmp_path):
        rows = rows_for(n=2) + [
            MetricsRow("IdenticalSignals", "SSP", 20, 0, float("nan"),
                       float("nan"), float("nan"), float("nan"), "failed: X")
        ]
        written = write_report(rows, tmp_path)
        svg = (tmp_path / "tdr_fdr_IdenticalSignals.svg").read_text()
        assert svg.count('class="pt"') == 2

    def test_empty_input_rejected(self, tmp_path):
        with pytest.raises(UserInputError):
            write_report([], tmp_path)
