"""Tests for the lead-time panel rendering."""

import hashlib

import pytest

from lsplots.figures import FigureSpec, SchemaError, render_leadtime_figure


PANEL = "tau,CBS,CPIL,COP\n1,200.5,195.2,260.0\n5,215.0,205.8,258.0\n10,228.1,212.0,259.1\n"


def write_panel(tmp_path, name="leadtime_cv0.5_p4.csv", text=PANEL):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestRendering:
    def test_panel_grid(self, tmp_path):
        paths = []
        for cv in ("0.5", "1.5"):
            for p in ("4", "9", "19"):
                paths.append(write_panel(tmp_path, f"leadtime_cv{cv}_p{p}.csv"))
        spec = FigureSpec.from_directory(tmp_path, tmp_path / "img")
        written = render_leadtime_figure(spec)
        assert len(written) == 6
        assert all(p.exists() and p.suffix == ".svg" for p in written)

    def test_axis_labels_and_series(self, tmp_path):
        write_panel(tmp_path)
        spec = FigureSpec.from_directory(tmp_path, tmp_path / "img")
        (svg,) = render_leadtime_figure(spec)
        text = svg.read_text()
        assert "Lead time" in text
        assert "Optimized cost rate" in text
        assert "Base-stock policy" in text
        assert "Projected inventory level policy" in text
        assert "Constant order policy" in text

    def test_single_row_renders_markers(self, tmp_path):
        write_panel(tmp_path, text="tau,CBS,CPIL,COP\n3,200.0,195.0,250.0\n")
        spec = FigureSpec.from_directory(tmp_path, tmp_path / "img")
        (svg,) = render_leadtime_figure(spec)
        assert svg.exists() and svg.stat().st_size > 0

    def test_png_output(self, tmp_path):
        write_panel(tmp_path)
        spec = FigureSpec.from_directory(tmp_path, tmp_path / "img", fmt="png")
        (png,) = render_leadtime_figure(spec)
        assert png.suffix == ".png" and png.stat().st_size > 0

    def test_idempotent_bytes(self, tmp_path):
        write_panel(tmp_path)
        for fmt in ("svg", "png"):
            spec = FigureSpec.from_directory(tmp_path, tmp_path / f"img_{fmt}", fmt=fmt)
            (first,) = render_leadtime_figure(spec)
            digest1 = hashlib.sha256(first.read_bytes()).hexdigest()
            (second,) = render_leadtime_figure(spec)
            digest2 = hashlib.sha256(second.read_bytes()).hexdigest()
            assert digest1 == digest2, fmt


class TestSchemaErrors:
    def test_missing_column_named(self, tmp_path):
        write_panel(tmp_path, text="tau,CBS,COP\n1,2,3\n")
        spec = FigureSpec.from_directory(tmp_path, tmp_path / "img")
        with pytest.raises(SchemaError, match="CPIL"):
            render_leadtime_figure(spec)

    def test_empty_csv_is_an_error(self, tmp_path):
        write_panel(tmp_path, text="tau,CBS,CPIL,COP\n")
        spec = FigureSpec.from_directory(tmp_path, tmp_path / "img")
        with pytest.raises(SchemaError, match="no data rows"):
            render_leadtime_figure(spec)
        assert not (tmp_path / "img" / "leadtime_cv0.5_p4.svg").exists()

    def test_missing_file(self, tmp_path):
        with pytest.raises(SchemaError, match="not found"):
            FigureSpec((tmp_path / "nope.csv",), tmp_path)

    def test_no_inputs(self, tmp_path):
        with pytest.raises(SchemaError):
            FigureSpec.from_directory(tmp_path, tmp_path)

    def test_bad_format(self, tmp_path):
        path = write_panel(tmp_path)
        with pytest.raises(SchemaError, match="format"):
            FigureSpec((path,), tmp_path, fmt="pdf")
