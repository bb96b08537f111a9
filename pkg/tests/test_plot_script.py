import plot_script
from plot_script import build_plot_script, emit_plot_script, series_groups

HEADER = ["t", "W", "P", "Q", "n_photon", "exc_1", "exc_2", "exc_total", "g2_0", "mandel_q", "g2_tau", "bunching"]


def test_series_groups_follow_fixed_order():
    groups = series_groups(list(reversed(HEADER)))
    assert list(groups) == ["qd", "excitation", "g2", "mandel", "bunching"]
    assert groups["qd"] == ["Q", "P", "W"]
    assert groups["excitation"] == ["exc_total", "exc_2", "exc_1", "n_photon"]
    assert groups["g2"] == ["g2_tau", "g2_0"]
    assert "t" not in sum(groups.values(), [])


def test_one_stanza_per_group_and_heatmap():
    script = build_plot_script("fig7", {"timeseries.csv": HEADER}, {"P": "heatmap_P.csv"})
    assert script.count("set output") == 6
    assert "set output 'fig7_qd.png'" in script
    assert "set output 'fig7_heatmap_P.png'" in script
    assert "'heatmap_P.csv' nonuniform matrix" in script


def test_correlation_file_gets_its_own_outputs():
    script = build_plot_script("fig7", {"correlation.csv": ["t", "g2_0", "g2_tau"]})
    assert "set output 'fig7_correlation_g2.png'" in script


def test_script_is_deterministic():
    first = build_plot_script("run", {"timeseries.csv": HEADER})
    assert build_plot_script("run", {"timeseries.csv": HEADER}) == first


def test_emitted_script_references_only_existing_files(tmp_path):
    (tmp_path / "timeseries.csv").write_text("t,W\n0,0.1\n", encoding="utf-8")
    path = emit_plot_script(
        tmp_path,
        "fig1a",
        {"timeseries.csv": ["t", "W"], "correlation.csv": ["t", "g2_tau"]},
        {"P": "heatmap_P.csv"},
    )
    text = path.read_text(encoding="utf-8")
    assert path.name == "plot.gp"
    assert "timeseries.csv" in text
    assert "correlation.csv" not in text
    assert "heatmap_P.csv" not in text


def test_emission_goes_through_the_atomic_writer(tmp_path, monkeypatch):
    written = []

    def fake_write(path, text):
        written.append(path)
        return path

    monkeypatch.setattr(plot_script, "write_text_atomic", fake_write)
    (tmp_path / "timeseries.csv").write_text("t,W\n0,0.1\n", encoding="utf-8")
    path = emit_plot_script(tmp_path, "run", {"timeseries.csv": ["t", "W"]}, filename="custom.gp")
    assert written == [tmp_path / "custom.gp"] == [path]
    assert not path.exists()
