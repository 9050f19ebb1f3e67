import csv
import io

import pytest

from orisvlc.montecarlo import ALGORITHMS, CSV_COLUMNS
from orisvlc.plots import PlotError, emit_plot, render


def make_csv(experiment, points, p_out=lambda alg, u, th: 0.1):
    buf = io.StringIO()
    w = csv.DictWriter(buf, CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for alg in ALGORITHMS:
        for grid, area, users, th in points:
            row = dict.fromkeys(CSV_COLUMNS, "0")
            row.update(experiment=experiment, algorithm=alg, users=users, gamma_th_db=th,
                       oris_grid=grid, element_area_m2=area, trials=10, user_events=10 * (int(users) if str(users).isdigit() else 15),
                       p_out=p_out(alg, int(users) if str(users).isdigit() else 15, th), ci_low=0, ci_high=1,
                       median_snr_db=10, q1_snr_db=5, q3_snr_db=15, whisker_low_db=0,
                       whisker_high_db=20, mean_snr_db=10)
            w.writerow(row)
    return buf.getvalue()


FIG3 = make_csv("fig3", [("30x5", 0.0267, u, th) for u in (1, 5, 9) for th in (0, 25, 50)],
                p_out=lambda alg, u, th: 0.01 + th / 100 * (u / 9))


def test_fig3_has_three_series_per_algorithm():
    svg = render(FIG3)
    assert svg.count("<polyline") == 9
    for alg in ALGORITHMS:
        for u in (1, 5, 9):
            assert f"{alg}, U={u}" in svg


def test_rendering_is_byte_identical():
    assert render(FIG3) == render(FIG3)


def test_log_axis_when_values_span_two_decades():
    wide = make_csv("fig2", [("30x5", 0.0267, u, 35) for u in (1, 2, 3)],
                    p_out=lambda alg, u, th: 10.0 ** -u)
    narrow = make_csv("fig2", [("30x5", 0.0267, u, 35) for u in (1, 2, 3)],
                      p_out=lambda alg, u, th: 0.1 * u)
    assert "(log scale)" in render(wide)
    assert "(log scale)" not in render(narrow)


def test_fig1_draws_boxes():
    svg = render(make_csv("fig1", [("30x5", 0.0267, u, "") for u in (1, 2)]))
    assert svg.count("<rect") >= 1 + 3 * 2


def test_fig4_plots_against_area():
    svg = render(make_csv("fig4", [("15x2", 0.1333, "1-15", "0-50"), ("30x5", 0.0267, "1-15", "0-50")]))
    assert "element area" in svg and svg.count("<polyline") == 3


def test_empty_sweep_is_an_error_and_writes_nothing(tmp_path):
    src = tmp_path / "fig3.csv"
    src.write_text(",".join(CSV_COLUMNS) + "\n")
    out = tmp_path / "fig3.svg"
    with pytest.raises(PlotError):
        emit_plot(src, out)
    assert not out.exists()


@pytest.mark.parametrize("text", ["", "a,b\n1,2\n", FIG3.replace("single-shot", "magic", 1)])
def test_malformed_csv_rejected(text):
    with pytest.raises(PlotError):
        render(text)


def test_mixed_experiments_rejected():
    lines = FIG3.splitlines()
    lines[1] = lines[1].replace("fig3", "fig2", 1)
    with pytest.raises(PlotError):
        render("\n".join(lines) + "\n")
