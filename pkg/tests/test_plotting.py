from ptshock.plotting import plot_scenario, read_table
from ptshock.scenarios import run_scenario


def test_plots_written(tmp_path):
    run_scenario("gauss_eps2", {"out_dir": str(tmp_path), "classify": False})
    pngs = plot_scenario(tmp_path / "gauss_eps2")
    assert pngs
    for p in pngs:
        assert p.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_read_table(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("a,b\n1,x\n2.5,y\n")
    t = read_table(p)
    assert list(t["a"]) == [1.0, 2.5] and list(t["b"]) == ["x", "y"]
